//! Dense feedforward networks with forward-mode second-order jets,
//! hand-written reverse-mode parameter gradients, a scalar loss tape,
//! and the Adam optimizer.
//!
//! The split of labor: `jet` differentiates a network with respect to
//! its *inputs* (values, first and pure second derivatives, as needed
//! by differential-equation residuals), while `tape` differentiates a
//! scalar loss built from jet components with respect to the network
//! *parameters*. No external autodiff is involved; the agreement of
//! every gradient with central finite differences is the contract the
//! tests enforce.

pub mod adam;
pub mod jet;
pub mod mlp;
pub mod tape;

pub use adam::{AdamConfig, AdamState};
pub use jet::{
    forward_jet, forward_jet_into, forward_value_into, jet_backprop, value_backprop, Jet2,
    JetSeed, JetWorkspace,
};
pub use mlp::{load_mlp, save_mlp, GradientSet, InitScheme, MlpParams, NetGrads};
pub use tape::{loss_param_grad, LossTape, NodeId, TapeJet};
