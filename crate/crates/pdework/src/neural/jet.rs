//! Forward-mode second-order jets through a tanh network, and the
//! matching reverse pass that turns jet-level seeds into parameter
//! gradients.
//!
//! A jet carries, per network input `x_k`, the value `u`, the first
//! derivative `du/dx_k`, and the pure second derivative `d2u/dx_k^2`.
//! Mixed second derivatives are not tracked; the residuals this crate
//! cares about never need them. Inputs are limited to one or two
//! coordinates.
//!
//! The elementwise tanh rules, with `a = tanh(z)` and `s = 1 - a^2`:
//!
//! forward   Ja = s Jz
//!           Ha = s Hz - 2 a s Jz^2
//!
//! reverse   zb  = s ab + sum_k [ -2 a s Jz Jab
//!                               + (-2 a s Hz - 2 s (s - 2 a^2) Jz^2) Hab ]
//!           Jzb = s Jab - 4 a s Jz Hab
//!           Hzb = s Hab
//!
//! where the `b` suffix marks the adjoint of a quantity. The reverse
//! rules are the exact transposes of the forward linearization; the
//! tests pin them against central finite differences.

use crate::error::{Error, Result};
use crate::neural::mlp::{MlpParams, NetGrads};

/// Value, gradient, and pure second derivatives of a scalar network
/// output at one point. Entries beyond the input dimension stay zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub d1: [f64; 2],
    pub d2: [f64; 2],
}

/// Adjoint seed on a jet: the partial derivatives of some scalar loss
/// with respect to the jet's value, gradient, and second-derivative
/// components.
#[derive(Debug, Clone, Copy, Default)]
pub struct JetSeed {
    pub value: f64,
    pub d1: [f64; 2],
    pub d2: [f64; 2],
}

/// The three derivative channels of every neuron in one layer.
#[derive(Debug, Clone)]
struct Channels {
    val: Vec<f64>,
    jac: Vec<Vec<f64>>,
    hess: Vec<Vec<f64>>,
}

impl Channels {
    fn zeros(width: usize, d: usize) -> Self {
        Channels {
            val: vec![0.0; width],
            jac: vec![vec![0.0; width]; d],
            hess: vec![vec![0.0; width]; d],
        }
    }
}

/// Preallocated storage for one forward-and-reverse jet sweep. The
/// forward pass fills the per-layer channels; the reverse pass reads
/// them and uses the bar buffers as scratch. Reuse across points
/// avoids re-allocating in training loops.
pub struct JetWorkspace {
    d: usize,
    layer_dims: Vec<usize>,
    /// Jets entering affine layer l (the input point for l = 0,
    /// otherwise the previous tanh output).
    inputs: Vec<Channels>,
    /// Jets leaving affine layer l, before its activation.
    pre: Vec<Channels>,
    bar_cur: Channels,
    bar_nxt: Channels,
    forward_done: bool,
}

impl JetWorkspace {
    pub fn new(params: &MlpParams) -> Result<Self> {
        params.validate()?;
        let d = params.input_dim();
        if d == 0 || d > 2 {
            return Err(Error::InvalidArgument(format!(
                "jets support 1 or 2 inputs, network takes {d}"
            )));
        }
        if params.output_dim() != 1 {
            return Err(Error::InvalidArgument(format!(
                "jets need a scalar output, network has {}",
                params.output_dim()
            )));
        }
        let dims = &params.layer_dims;
        let max_width = *dims.iter().max().unwrap();
        Ok(JetWorkspace {
            d,
            layer_dims: dims.clone(),
            inputs: (0..dims.len() - 1).map(|l| Channels::zeros(dims[l], d)).collect(),
            pre: (1..dims.len()).map(|l| Channels::zeros(dims[l], d)).collect(),
            bar_cur: Channels::zeros(max_width, d),
            bar_nxt: Channels::zeros(max_width, d),
            forward_done: false,
        })
    }

    fn check_params(&self, params: &MlpParams) -> Result<()> {
        if params.layer_dims != self.layer_dims {
            return Err(Error::Structural(
                "workspace was built for a different architecture".into(),
            ));
        }
        Ok(())
    }
}

/// Runs the jet forward pass, filling the workspace caches, and
/// returns the output jet.
pub fn forward_jet_into(
    params: &MlpParams,
    x: &[f64],
    ws: &mut JetWorkspace,
) -> Result<Jet2> {
    ws.check_params(params)?;
    if x.len() != ws.d {
        return Err(Error::InvalidArgument(format!(
            "point has {} coordinates, network takes {}",
            x.len(),
            ws.d
        )));
    }
    let d = ws.d;
    let layers = params.num_layers();

    let first = &mut ws.inputs[0];
    first.val.copy_from_slice(x);
    for k in 0..d {
        for j in 0..d {
            first.jac[k][j] = if j == k { 1.0 } else { 0.0 };
            first.hess[k][j] = 0.0;
        }
    }

    for l in 0..layers {
        let nin = params.layer_dims[l];
        let nout = params.layer_dims[l + 1];
        let w = &params.weights[l];

        // Affine map applied to all channels alike, straight into the
        // cached pre-activation jets.
        {
            let inp = &ws.inputs[l];
            let pre = &mut ws.pre[l];
            for i in 0..nout {
                let row = &w[i * nin..(i + 1) * nin];
                let mut acc = params.biases[l][i];
                for j in 0..nin {
                    acc += row[j] * inp.val[j];
                }
                pre.val[i] = acc;
                for k in 0..d {
                    let mut aj = 0.0;
                    let mut ah = 0.0;
                    for j in 0..nin {
                        aj += row[j] * inp.jac[k][j];
                        ah += row[j] * inp.hess[k][j];
                    }
                    pre.jac[k][i] = aj;
                    pre.hess[k][i] = ah;
                }
            }
        }

        if l + 1 < layers {
            let pre_l = &ws.pre[l];
            let next = &mut ws.inputs[l + 1];
            for i in 0..nout {
                let a = pre_l.val[i].tanh();
                let s = 1.0 - a * a;
                next.val[i] = a;
                for k in 0..d {
                    let jzk = pre_l.jac[k][i];
                    next.jac[k][i] = s * jzk;
                    next.hess[k][i] = s * pre_l.hess[k][i] - 2.0 * a * s * jzk * jzk;
                }
            }
        }
    }

    ws.forward_done = true;
    let out = &ws.pre[layers - 1];
    let mut jet = Jet2 {
        value: out.val[0],
        d1: [0.0; 2],
        d2: [0.0; 2],
    };
    for k in 0..d {
        jet.d1[k] = out.jac[k][0];
        jet.d2[k] = out.hess[k][0];
    }
    Ok(jet)
}

/// Allocates a fresh workspace, runs the forward pass, and returns the
/// jet together with the filled workspace.
pub fn forward_jet(params: &MlpParams, x: &[f64]) -> Result<(Jet2, JetWorkspace)> {
    let mut ws = JetWorkspace::new(params)?;
    let jet = forward_jet_into(params, x, &mut ws)?;
    Ok((jet, ws))
}

/// Value-only forward pass through the same workspace, caching just
/// enough for `value_backprop`. Roughly five times cheaper than the
/// full jet when only `u` itself feeds the loss (boundary, initial,
/// and data terms).
pub fn forward_value_into(params: &MlpParams, x: &[f64], ws: &mut JetWorkspace) -> Result<f64> {
    ws.check_params(params)?;
    if x.len() != ws.d {
        return Err(Error::InvalidArgument(format!(
            "point has {} coordinates, network takes {}",
            x.len(),
            ws.d
        )));
    }
    let layers = params.num_layers();
    ws.inputs[0].val.copy_from_slice(x);
    for l in 0..layers {
        let nin = params.layer_dims[l];
        let nout = params.layer_dims[l + 1];
        let w = &params.weights[l];
        {
            let inp = &ws.inputs[l];
            let pre = &mut ws.pre[l];
            for i in 0..nout {
                let row = &w[i * nin..(i + 1) * nin];
                let mut acc = params.biases[l][i];
                for j in 0..nin {
                    acc += row[j] * inp.val[j];
                }
                pre.val[i] = acc;
            }
        }
        if l + 1 < layers {
            let pre_l = &ws.pre[l];
            let next = &mut ws.inputs[l + 1];
            for i in 0..nout {
                next.val[i] = pre_l.val[i].tanh();
            }
        }
    }
    // A value-only pass leaves stale derivative channels behind; a
    // later jet backprop must not trust them.
    ws.forward_done = false;
    Ok(ws.pre[layers - 1].val[0])
}

/// Accumulates `bar * du/d(theta)` into `grads` after a
/// `forward_value_into` pass.
pub fn value_backprop(
    params: &MlpParams,
    ws: &mut JetWorkspace,
    bar: f64,
    grads: &mut NetGrads,
) -> Result<()> {
    ws.check_params(params)?;
    let layers = params.num_layers();
    ws.bar_cur.val[0] = bar;
    for l in (0..layers).rev() {
        let nin = params.layer_dims[l];
        let nout = params.layer_dims[l + 1];
        let w = &params.weights[l];
        let inp = &ws.inputs[l];
        for i in 0..nout {
            let zb = ws.bar_cur.val[i];
            let wrow = &mut grads.weights[l][i * nin..(i + 1) * nin];
            for j in 0..nin {
                wrow[j] += zb * inp.val[j];
            }
            grads.biases[l][i] += zb;
        }
        if l == 0 {
            break;
        }
        for j in 0..nin {
            let mut ab = 0.0;
            for i in 0..nout {
                ab += w[i * nin + j] * ws.bar_cur.val[i];
            }
            // The tanh output feeding this layer is cached in
            // inputs[l]; its local derivative is 1 - a^2.
            let a = inp.val[j];
            ws.bar_nxt.val[j] = (1.0 - a * a) * ab;
        }
        std::mem::swap(&mut ws.bar_cur, &mut ws.bar_nxt);
    }
    Ok(())
}

/// Accumulates `d(seed . jet)/d(theta)` into `grads`, reading the
/// forward caches left in the workspace by `forward_jet_into`.
pub fn jet_backprop(
    params: &MlpParams,
    ws: &mut JetWorkspace,
    seed: &JetSeed,
    grads: &mut NetGrads,
) -> Result<()> {
    ws.check_params(params)?;
    if !ws.forward_done {
        return Err(Error::Contract(
            "jet_backprop called before a forward pass".into(),
        ));
    }
    let d = ws.d;
    let layers = params.num_layers();

    // Seed the bars on the final affine output (scalar wide).
    ws.bar_cur.val[0] = seed.value;
    for k in 0..d {
        ws.bar_cur.jac[k][0] = seed.d1[k];
        ws.bar_cur.hess[k][0] = seed.d2[k];
    }

    for l in (0..layers).rev() {
        let nin = params.layer_dims[l];
        let nout = params.layer_dims[l + 1];
        let w = &params.weights[l];
        let inp = &ws.inputs[l];

        // Parameter gradients of the affine map; every channel of the
        // incoming jet pairs with the matching bar channel.
        for i in 0..nout {
            let zb = ws.bar_cur.val[i];
            let wrow = &mut grads.weights[l][i * nin..(i + 1) * nin];
            for j in 0..nin {
                let mut acc = zb * inp.val[j];
                for k in 0..d {
                    acc += ws.bar_cur.jac[k][i] * inp.jac[k][j]
                        + ws.bar_cur.hess[k][i] * inp.hess[k][j];
                }
                wrow[j] += acc;
            }
            grads.biases[l][i] += zb;
        }

        if l == 0 {
            break;
        }

        // Transpose the affine map back onto the previous activation.
        for j in 0..nin {
            let mut ab = 0.0;
            for i in 0..nout {
                ab += w[i * nin + j] * ws.bar_cur.val[i];
            }
            ws.bar_nxt.val[j] = ab;
            for k in 0..d {
                let mut jb = 0.0;
                let mut hb = 0.0;
                for i in 0..nout {
                    jb += w[i * nin + j] * ws.bar_cur.jac[k][i];
                    hb += w[i * nin + j] * ws.bar_cur.hess[k][i];
                }
                ws.bar_nxt.jac[k][j] = jb;
                ws.bar_nxt.hess[k][j] = hb;
            }
        }

        // Reverse the tanh of layer l-1 in place on the bar buffers.
        // The value bar is rewritten first; it reads the jac and hess
        // bars before they are overwritten.
        let a_out = &ws.inputs[l];
        let pre_prev = &ws.pre[l - 1];
        for j in 0..nin {
            let a = a_out.val[j];
            let s = 1.0 - a * a;
            let mut zb = s * ws.bar_nxt.val[j];
            for k in 0..d {
                let jz = pre_prev.jac[k][j];
                let hz = pre_prev.hess[k][j];
                let jab = ws.bar_nxt.jac[k][j];
                let hab = ws.bar_nxt.hess[k][j];
                zb += -2.0 * a * s * jz * jab
                    + (-2.0 * a * s * hz - 2.0 * s * (s - 2.0 * a * a) * jz * jz) * hab;
            }
            ws.bar_nxt.val[j] = zb;
            for k in 0..d {
                let jz = pre_prev.jac[k][j];
                let hab = ws.bar_nxt.hess[k][j];
                ws.bar_nxt.jac[k][j] = s * ws.bar_nxt.jac[k][j] - 4.0 * a * s * jz * hab;
                ws.bar_nxt.hess[k][j] = s * hab;
            }
        }

        std::mem::swap(&mut ws.bar_cur, &mut ws.bar_nxt);
    }
    Ok(())
}
