//! Physics-informed training: collocation sampling, residual losses,
//! and a small Adam loop that can also recover unknown coefficients.
//!
//! The pieces compose in one direction: [`sample`] draws collocation
//! points, [`problem`] turns network jets into residual and data
//! losses, and [`train`] differentiates those losses with the reverse
//! pass from [`crate::neural`] and walks the parameters.

pub mod problem;
pub mod sample;
pub mod train;

pub use problem::{
    balance_weights, burgers_residual, burgers_sine_problem, draw_samples, heat_residual,
    loss_components, mean_square, poisson_residual, poisson_sine_problem, residual_burgers,
    residual_heat_kappa, residual_poisson, source_residual, synthetic_heat_observations,
    synthetic_poisson_observations, total_loss, LossComponents, LossWeights, ModelRef,
    PinnProblem, SampleConfig, SampleSet, WeightStrategy,
};
pub use sample::{sample_lhs, sample_uniform, Rect, SampleMethod};
pub use train::{
    train, write_history, HistoryRow, NetSpec, NonFiniteAbort, TrainConfig, TrainError,
    TrainedModel, RAW_KAPPA_INIT,
};
