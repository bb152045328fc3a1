//! The training loop: streaming reverse-mode gradients of the
//! composite loss, Adam updates, and per-step history.
//!
//! Gradients are accumulated point by point (jet backprop for
//! residual terms, plain value backprop for boundary, initial, and
//! data fits) so no whole-batch tape is ever materialized. The
//! recovered diffusivity is kept positive by training its softplus
//! preimage.

use crate::error::{Error, Result};
use crate::neural::adam::{AdamConfig, AdamState};
use crate::neural::jet::{
    forward_jet_into, forward_value_into, jet_backprop, value_backprop, JetSeed, JetWorkspace,
};
use crate::neural::mlp::{GradientSet, InitScheme, MlpParams, NetGrads};
use crate::neural::tape::{sigmoid, softplus};
use crate::pinn::problem::{
    balance_weights, burgers_residual, derive_seed, draw_samples, heat_residual, loss_components,
    poisson_residual, source_residual, total_loss, LossComponents, LossWeights, ModelRef,
    PinnProblem, SampleConfig, SampleSet, WeightStrategy, SEED_TAG_SOURCE_NET,
};
use std::io::Write;

/// Softplus preimage of 1, so the trained diffusivity starts at 1.
pub const RAW_KAPPA_INIT: f64 = 0.5413248546129181;

/// Layer widths of the solution network and, for source recovery, of
/// the source network (`None` mirrors the solution architecture).
#[derive(Debug, Clone, PartialEq)]
pub struct NetSpec {
    pub dims: Vec<usize>,
    pub source_dims: Option<Vec<usize>>,
}

impl NetSpec {
    pub fn new(dims: &[usize]) -> Self {
        NetSpec {
            dims: dims.to_vec(),
            source_dims: None,
        }
    }
}

/// Optimizer schedule. `resample_every = 0` keeps one fixed
/// collocation set; a positive value redraws every that many steps,
/// which is also when balanced weights are refreshed.
#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub steps: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    pub resample_every: usize,
    pub weights: WeightStrategy,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 1000,
            adam: AdamConfig::default(),
            seed: 0,
            resample_every: 0,
            weights: WeightStrategy::Fixed(LossWeights::ones()),
        }
    }
}

/// Loss breakdown recorded before the update of each step, with the
/// diffusivity in force at that step when one is trained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRow {
    pub step: usize,
    pub lf: f64,
    pub lb: f64,
    pub li: f64,
    pub ld: f64,
    pub total: f64,
    pub kappa: Option<f64>,
}

/// Everything a run produces: final parameters, the recovered
/// quantities, and one history row per step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub params: MlpParams,
    pub source_params: Option<MlpParams>,
    pub kappa_hat: Option<f64>,
    pub history: Vec<HistoryRow>,
}

/// Where a run died and the last parameters that still produced a
/// finite loss. The history includes the offending row.
#[derive(Debug)]
pub struct NonFiniteAbort {
    pub step: usize,
    pub last: TrainedModel,
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Invalid(#[from] Error),
    #[error("loss became non-finite at step {}", .0.step)]
    NonFinite(Box<NonFiniteAbort>),
}

struct Workspaces {
    main: JetWorkspace,
    source: Option<JetWorkspace>,
}

/// Mean-square fit of network values against targets, accumulating
/// the weighted gradient unless the weight is zero.
fn fit_pass(
    net: &MlpParams,
    points: &[([f64; 2], f64)],
    lambda: f64,
    ws: &mut JetWorkspace,
    grads: &mut NetGrads,
) -> Result<f64> {
    if points.is_empty() {
        return Ok(0.0);
    }
    let n = points.len() as f64;
    let mut acc = 0.0;
    for (p, target) in points {
        let u = forward_value_into(net, p, ws)?;
        let diff = u - target;
        acc += diff * diff;
        if lambda > 0.0 {
            value_backprop(net, ws, 2.0 * lambda * diff / n, grads)?;
        }
    }
    Ok(acc / n)
}

/// One full pass: loss components plus the gradient of the weighted
/// total with respect to every trained parameter.
fn gradient_pass(
    problem: &PinnProblem,
    nets: &[MlpParams],
    scalars: &[f64],
    samples: &SampleSet,
    w: &LossWeights,
    ws: &mut Workspaces,
    grads: &mut GradientSet,
) -> Result<LossComponents> {
    let n_f = samples.interior.len() as f64;
    let scale = 2.0 * w.lambda_f / n_f;
    let mut lf = 0.0;
    for p in &samples.interior {
        let jet = forward_jet_into(&nets[0], p, &mut ws.main)?;
        let mut seed = JetSeed::default();
        match problem {
            PinnProblem::PoissonForward2D { forcing, .. } => {
                let r = poisson_residual(&jet, forcing(p[0], p[1]));
                lf += r * r;
                let c = scale * r;
                seed.d2 = [-c, -c];
            }
            PinnProblem::Burgers1D { nu, .. } => {
                let r = burgers_residual(&jet, *nu);
                lf += r * r;
                let c = scale * r;
                seed.value = c * jet.d1[0];
                seed.d1 = [c * jet.value, c];
                seed.d2[0] = -c * nu;
            }
            PinnProblem::HeatInverseKappa { .. } => {
                let raw = scalars[0];
                let kappa = softplus(raw);
                let r = heat_residual(&jet, kappa);
                lf += r * r;
                let c = scale * r;
                seed.d1[1] = c;
                seed.d2[0] = -c * kappa;
                grads.scalars[0] += -c * jet.d2[0] * sigmoid(raw);
            }
            PinnProblem::SourceInverse2D { .. } => {
                let src_ws = ws.source.as_mut().ok_or_else(|| {
                    Error::Contract("source problem without a source workspace".into())
                })?;
                let f_hat = forward_value_into(&nets[1], p, src_ws)?;
                let r = source_residual(&jet, f_hat);
                lf += r * r;
                let c = scale * r;
                seed.d2 = [-c, -c];
                value_backprop(&nets[1], src_ws, -c, &mut grads.nets[1])?;
            }
        }
        jet_backprop(&nets[0], &mut ws.main, &seed, &mut grads.nets[0])?;
    }
    lf /= n_f;

    let lb = fit_pass(
        &nets[0],
        &samples.boundary,
        w.lambda_b,
        &mut ws.main,
        &mut grads.nets[0],
    )?;
    let li = fit_pass(
        &nets[0],
        &samples.initial,
        w.lambda_i,
        &mut ws.main,
        &mut grads.nets[0],
    )?;
    let ld = fit_pass(
        &nets[0],
        &samples.data,
        w.lambda_d,
        &mut ws.main,
        &mut grads.nets[0],
    )?;

    Ok(LossComponents { lf, lb, li, ld })
}

fn assemble(
    nets: &[MlpParams],
    scalars: &[f64],
    trains_kappa: bool,
    history: Vec<HistoryRow>,
) -> TrainedModel {
    TrainedModel {
        params: nets[0].clone(),
        source_params: nets.get(1).cloned(),
        kappa_hat: if trains_kappa {
            Some(softplus(scalars[0]))
        } else {
            None
        },
        history,
    }
}

/// Trains a network (and, where the problem asks for them, a source
/// network and a diffusivity) against the weighted composite loss.
///
/// The run is reproducible: the seed pins the initialization, every
/// collocation draw, and the synthetic noise, so two calls with the
/// same arguments agree bit for bit.
pub fn train(
    problem: &PinnProblem,
    net: &NetSpec,
    sample_cfg: &SampleConfig,
    cfg: &TrainConfig,
) -> std::result::Result<TrainedModel, TrainError> {
    if cfg.steps == 0 {
        return Err(Error::InvalidArgument("a run needs at least one step".into()).into());
    }
    if net.dims.first() != Some(&2) || net.dims.last() != Some(&1) {
        return Err(Error::InvalidArgument(format!(
            "the solution network must map 2 inputs to 1 output, got {:?}",
            net.dims
        ))
        .into());
    }
    if let WeightStrategy::Fixed(w) = cfg.weights {
        w.validate()?;
    }
    if net.source_dims.is_some() && !problem.trains_source_net() {
        return Err(Error::Config(
            "a source architecture was given but this problem has no source to recover".into(),
        )
        .into());
    }

    let mut nets = vec![MlpParams::new(&net.dims, InitScheme::Xavier, cfg.seed)?];
    if problem.trains_source_net() {
        let sdims = net.source_dims.clone().unwrap_or_else(|| net.dims.clone());
        if sdims.first() != Some(&2) || sdims.last() != Some(&1) {
            return Err(Error::InvalidArgument(format!(
                "the source network must map 2 inputs to 1 output, got {sdims:?}"
            ))
            .into());
        }
        nets.push(MlpParams::new(
            &sdims,
            InitScheme::Xavier,
            derive_seed(cfg.seed, SEED_TAG_SOURCE_NET),
        )?);
    }
    let trains_kappa = problem.trains_kappa();
    let mut scalars = if trains_kappa {
        vec![RAW_KAPPA_INIT]
    } else {
        Vec::new()
    };

    let mut ws = Workspaces {
        main: JetWorkspace::new(&nets[0])?,
        source: match nets.get(1) {
            Some(s) => Some(JetWorkspace::new(s)?),
            None => None,
        },
    };
    let (mut grads, mut adam) = {
        let refs: Vec<&MlpParams> = nets.iter().collect();
        (
            GradientSet::zeros(&refs, scalars.len()),
            AdamState::new(cfg.adam, &refs, scalars.len()),
        )
    };

    let mut epoch = 0u64;
    let mut samples = draw_samples(problem, sample_cfg, cfg.seed, epoch)?;
    let mut weights = match cfg.weights {
        WeightStrategy::Fixed(w) => w,
        WeightStrategy::Balance => LossWeights::ones(),
    };

    let mut last_good_nets = nets.clone();
    let mut last_good_scalars = scalars.clone();
    let mut history = Vec::with_capacity(cfg.steps);

    for step in 0..cfg.steps {
        let boundary = cfg.resample_every > 0 && step > 0 && step % cfg.resample_every == 0;
        if boundary {
            epoch += 1;
            samples = draw_samples(problem, sample_cfg, cfg.seed, epoch)?;
        }
        if matches!(cfg.weights, WeightStrategy::Balance) && (step == 0 || boundary) {
            let comps = loss_components(
                problem,
                ModelRef {
                    net: &nets[0],
                    source: nets.get(1),
                    kappa: trains_kappa.then(|| softplus(scalars[0])),
                },
                &samples,
            )?;
            weights = balance_weights(&comps);
        }

        grads.fill(0.0);
        let comps = gradient_pass(problem, &nets, &scalars, &samples, &weights, &mut ws, &mut grads)?;
        let total = total_loss(&comps, &weights);
        history.push(HistoryRow {
            step,
            lf: comps.lf,
            lb: comps.lb,
            li: comps.li,
            ld: comps.ld,
            total,
            kappa: trains_kappa.then(|| softplus(scalars[0])),
        });
        if !total.is_finite() {
            let last = assemble(&last_good_nets, &last_good_scalars, trains_kappa, history);
            return Err(TrainError::NonFinite(Box::new(NonFiniteAbort {
                step,
                last,
            })));
        }
        for (snap, live) in last_good_nets.iter_mut().zip(&nets) {
            snap.clone_from(live);
        }
        last_good_scalars.clone_from(&scalars);
        adam.step(&mut nets, &mut scalars, &grads)?;
    }

    Ok(assemble(&nets, &scalars, trains_kappa, history))
}

/// Writes the history as CSV, one row per step. The kappa column is
/// empty for problems that do not train one.
pub fn write_history<W: Write>(rows: &[HistoryRow], out: &mut W) -> Result<()> {
    writeln!(out, "step,Lf,Lb,Li,Ld,total,kappa")?;
    for r in rows {
        write!(out, "{},{},{},{},{},{},", r.step, r.lf, r.lb, r.li, r.ld, r.total)?;
        match r.kappa {
            Some(k) => writeln!(out, "{k}")?,
            None => writeln!(out)?,
        }
    }
    Ok(())
}
