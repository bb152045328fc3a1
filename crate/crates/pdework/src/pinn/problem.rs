//! Problem definitions for physics-informed training: governing
//! residuals, sample sets, and the weighted composite loss.
//!
//! Coordinate convention for evolution problems: network input 0 is
//! space, input 1 is time, so `d1[1]` is the time derivative and
//! `d2[0]` the spatial second derivative.

use crate::error::{Error, Result};
use crate::neural::jet::{forward_jet_into, Jet2, JetWorkspace};
use crate::neural::mlp::MlpParams;
use crate::pinn::sample::{
    sample_lhs, sample_segment, sample_uniform, split_counts, Rect, SampleMethod,
};
use crate::verify::{heat_reference, Scalar1D, Scalar2D};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;

/// A training task: the governing equation, its domain, and the data
/// that pins down the solution.
#[derive(Clone)]
pub enum PinnProblem {
    /// `-(u_xx + u_yy) = f` on the unit square with Dirichlet data g.
    PoissonForward2D { forcing: Scalar2D, boundary: Scalar2D },
    /// `u_t + u u_x = nu u_xx` on `[-1, 1] x [0, T]` with Dirichlet
    /// walls and initial profile `u0`.
    Burgers1D {
        nu: f64,
        initial: Scalar1D,
        bc_left: f64,
        bc_right: f64,
        t_end: f64,
    },
    /// `u_t = kappa u_xx` on `[0, 1] x [0, T]`; kappa is recovered
    /// from point observations of u.
    HeatInverseKappa {
        initial: Scalar1D,
        bc_left: Scalar1D,
        bc_right: Scalar1D,
        observations: Vec<([f64; 2], f64)>,
        t_end: f64,
    },
    /// `-(u_xx + u_yy) = f` with unknown f, recovered as a second
    /// network from interior observations of u.
    SourceInverse2D {
        boundary: Scalar2D,
        observations: Vec<([f64; 2], f64)>,
    },
}

impl PinnProblem {
    pub fn burgers(nu: f64, initial: Scalar1D, bc_left: f64, bc_right: f64, t_end: f64) -> Result<Self> {
        if nu <= 0.0 || t_end <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "Burgers needs nu > 0 and T > 0, got nu = {nu}, T = {t_end}"
            )));
        }
        Ok(PinnProblem::Burgers1D {
            nu,
            initial,
            bc_left,
            bc_right,
            t_end,
        })
    }

    pub fn heat_inverse(
        initial: Scalar1D,
        bc_left: Scalar1D,
        bc_right: Scalar1D,
        observations: Vec<([f64; 2], f64)>,
        t_end: f64,
    ) -> Result<Self> {
        if t_end <= 0.0 {
            return Err(Error::InvalidArgument(format!("T must be positive, got {t_end}")));
        }
        if observations.is_empty() {
            return Err(Error::InvalidArgument(
                "an inverse problem needs at least one observation".into(),
            ));
        }
        Ok(PinnProblem::HeatInverseKappa {
            initial,
            bc_left,
            bc_right,
            observations,
            t_end,
        })
    }

    pub fn source_inverse(boundary: Scalar2D, observations: Vec<([f64; 2], f64)>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::InvalidArgument(
                "an inverse problem needs at least one observation".into(),
            ));
        }
        Ok(PinnProblem::SourceInverse2D {
            boundary,
            observations,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            PinnProblem::PoissonForward2D { .. } => "poisson",
            PinnProblem::Burgers1D { .. } => "burgers",
            PinnProblem::HeatInverseKappa { .. } => "heat-kappa",
            PinnProblem::SourceInverse2D { .. } => "source",
        }
    }

    /// Space(-time) box the interior points are drawn from.
    pub fn domain(&self) -> Rect {
        match self {
            PinnProblem::PoissonForward2D { .. } | PinnProblem::SourceInverse2D { .. } => {
                Rect::unit_square()
            }
            PinnProblem::Burgers1D { t_end, .. } => Rect {
                x0: -1.0,
                x1: 1.0,
                y0: 0.0,
                y1: *t_end,
            },
            PinnProblem::HeatInverseKappa { t_end, .. } => Rect {
                x0: 0.0,
                x1: 1.0,
                y0: 0.0,
                y1: *t_end,
            },
        }
    }

    pub fn has_initial(&self) -> bool {
        matches!(
            self,
            PinnProblem::Burgers1D { .. } | PinnProblem::HeatInverseKappa { .. }
        )
    }

    pub fn has_data(&self) -> bool {
        matches!(
            self,
            PinnProblem::HeatInverseKappa { .. } | PinnProblem::SourceInverse2D { .. }
        )
    }

    pub fn trains_kappa(&self) -> bool {
        matches!(self, PinnProblem::HeatInverseKappa { .. })
    }

    pub fn trains_source_net(&self) -> bool {
        matches!(self, PinnProblem::SourceInverse2D { .. })
    }
}

/// Interior residual of the Poisson operator at one jet.
pub fn poisson_residual(jet: &Jet2, f_val: f64) -> f64 {
    -(jet.d2[0] + jet.d2[1]) - f_val
}

/// Interior residual of viscous Burgers at one jet.
pub fn burgers_residual(jet: &Jet2, nu: f64) -> f64 {
    jet.d1[1] + jet.value * jet.d1[0] - nu * jet.d2[0]
}

/// Interior residual of the heat equation at one jet.
pub fn heat_residual(jet: &Jet2, kappa: f64) -> f64 {
    jet.d1[1] - kappa * jet.d2[0]
}

/// Interior residual when the source is itself an estimate.
pub fn source_residual(u_jet: &Jet2, f_hat: f64) -> f64 {
    -(u_jet.d2[0] + u_jet.d2[1]) - f_hat
}

/// Poisson residuals of a network over many points.
pub fn residual_poisson(
    net: &MlpParams,
    points: &[[f64; 2]],
    f: impl Fn(f64, f64) -> f64,
) -> Result<Vec<f64>> {
    let mut ws = JetWorkspace::new(net)?;
    points
        .iter()
        .map(|p| {
            let jet = forward_jet_into(net, p, &mut ws)?;
            Ok(poisson_residual(&jet, f(p[0], p[1])))
        })
        .collect()
}

/// Burgers residuals of a network over many space-time points.
pub fn residual_burgers(net: &MlpParams, points: &[[f64; 2]], nu: f64) -> Result<Vec<f64>> {
    let mut ws = JetWorkspace::new(net)?;
    points
        .iter()
        .map(|p| {
            let jet = forward_jet_into(net, p, &mut ws)?;
            Ok(burgers_residual(&jet, nu))
        })
        .collect()
}

/// Heat residuals of a network at a given diffusivity.
pub fn residual_heat_kappa(net: &MlpParams, kappa: f64, points: &[[f64; 2]]) -> Result<Vec<f64>> {
    let mut ws = JetWorkspace::new(net)?;
    points
        .iter()
        .map(|p| {
            let jet = forward_jet_into(net, p, &mut ws)?;
            Ok(heat_residual(&jet, kappa))
        })
        .collect()
}

pub fn mean_square(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64
}

/// Collocation points and targets for one training run. Boundary,
/// initial, and data entries carry the value the network should match
/// there.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub interior: Vec<[f64; 2]>,
    pub boundary: Vec<([f64; 2], f64)>,
    pub initial: Vec<([f64; 2], f64)>,
    pub data: Vec<([f64; 2], f64)>,
}

/// How many points of each kind to draw; data points always come from
/// the problem's observations. `n_initial` is ignored by problems
/// without an initial line.
#[derive(Debug, Clone, Copy)]
pub struct SampleConfig {
    pub n_interior: usize,
    pub n_boundary: usize,
    pub n_initial: usize,
    pub method: SampleMethod,
}

/// Splitmix step used to derive independent named generator seeds
/// from one user seed.
pub(crate) fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) const SEED_TAG_SOURCE_NET: u64 = 2;
pub(crate) const SEED_TAG_OBSERVATIONS: u64 = 3;
pub(crate) const SEED_TAG_SAMPLES: u64 = 1000;

/// Draws a full sample set for the problem. `epoch` advances the
/// generator stream so resampling produces fresh, still reproducible
/// points; the problem's observations are copied verbatim.
pub fn draw_samples(
    problem: &PinnProblem,
    cfg: &SampleConfig,
    seed: u64,
    epoch: u64,
) -> Result<SampleSet> {
    if cfg.n_interior == 0 || cfg.n_boundary == 0 {
        return Err(Error::Config(
            "interior and boundary point counts must be positive".into(),
        ));
    }
    if problem.has_initial() && cfg.n_initial == 0 {
        return Err(Error::Config(
            "this problem needs initial points".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, SEED_TAG_SAMPLES + epoch));
    let domain = problem.domain();
    let interior = match cfg.method {
        SampleMethod::Uniform => sample_uniform(&domain, cfg.n_interior, &mut rng)?,
        SampleMethod::Lhs => sample_lhs(&domain, cfg.n_interior, &mut rng)?,
    };

    let mut boundary = Vec::with_capacity(cfg.n_boundary);
    let mut initial = Vec::new();
    let mut data = Vec::new();

    match problem {
        PinnProblem::PoissonForward2D { boundary: g, .. }
        | PinnProblem::SourceInverse2D { boundary: g, .. } => {
            let corners = [
                ([0.0, 0.0], [1.0, 0.0]),
                ([1.0, 0.0], [1.0, 1.0]),
                ([1.0, 1.0], [0.0, 1.0]),
                ([0.0, 1.0], [0.0, 0.0]),
            ];
            for (count, (a, b)) in split_counts(cfg.n_boundary, 4).into_iter().zip(corners) {
                for p in sample_segment(a, b, count, &mut rng) {
                    boundary.push((p, g(p[0], p[1])));
                }
            }
        }
        PinnProblem::Burgers1D {
            initial: u0,
            bc_left,
            bc_right,
            t_end,
            ..
        } => {
            let halves = split_counts(cfg.n_boundary, 2);
            for p in sample_segment([-1.0, 0.0], [-1.0, *t_end], halves[0], &mut rng) {
                boundary.push((p, *bc_left));
            }
            for p in sample_segment([1.0, 0.0], [1.0, *t_end], halves[1], &mut rng) {
                boundary.push((p, *bc_right));
            }
            for p in sample_segment([-1.0, 0.0], [1.0, 0.0], cfg.n_initial, &mut rng) {
                initial.push((p, u0(p[0])));
            }
        }
        PinnProblem::HeatInverseKappa {
            initial: h0,
            bc_left,
            bc_right,
            observations,
            t_end,
        } => {
            let halves = split_counts(cfg.n_boundary, 2);
            for p in sample_segment([0.0, 0.0], [0.0, *t_end], halves[0], &mut rng) {
                boundary.push((p, bc_left(p[1])));
            }
            for p in sample_segment([1.0, 0.0], [1.0, *t_end], halves[1], &mut rng) {
                boundary.push((p, bc_right(p[1])));
            }
            for p in sample_segment([0.0, 0.0], [1.0, 0.0], cfg.n_initial, &mut rng) {
                initial.push((p, h0(p[0])));
            }
            data = observations.clone();
        }
    }
    if let PinnProblem::SourceInverse2D { observations, .. } = problem {
        data = observations.clone();
    }

    let set = SampleSet {
        interior,
        boundary,
        initial,
        data,
    };
    validate_samples(problem, &set)?;
    Ok(set)
}

fn validate_samples(problem: &PinnProblem, set: &SampleSet) -> Result<()> {
    let domain = problem.domain();
    let inside = set
        .interior
        .iter()
        .chain(set.boundary.iter().map(|(p, _)| p))
        .chain(set.initial.iter().map(|(p, _)| p))
        .chain(set.data.iter().map(|(p, _)| p))
        .all(|&p| domain.contains(p));
    if !inside {
        return Err(Error::Config("sample point outside the problem domain".into()));
    }
    Ok(())
}

/// The four loss terms. Absent terms (no initial line, no data) are
/// zero with zero count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossComponents {
    pub lf: f64,
    pub lb: f64,
    pub li: f64,
    pub ld: f64,
}

/// Multipliers for the composite loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda_f: f64,
    pub lambda_b: f64,
    pub lambda_i: f64,
    pub lambda_d: f64,
}

impl LossWeights {
    pub fn ones() -> Self {
        LossWeights {
            lambda_f: 1.0,
            lambda_b: 1.0,
            lambda_i: 1.0,
            lambda_d: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.lambda_f, self.lambda_b, self.lambda_i, self.lambda_d];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(
                "loss weights must be finite and nonnegative".into(),
            ));
        }
        if self.lambda_f <= 0.0 {
            return Err(Error::InvalidArgument(
                "the residual weight must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Fixed weights, or reciprocal-magnitude balancing refreshed at
/// resampling boundaries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightStrategy {
    Fixed(LossWeights),
    Balance,
}

pub const BALANCE_FLOOR: f64 = 1e-12;

/// Weights inversely proportional to the current component sizes,
/// normalized so the residual weight is 1. All-zero components give
/// all-ones weights.
pub fn balance_weights(c: &LossComponents) -> LossWeights {
    if c.lf == 0.0 && c.lb == 0.0 && c.li == 0.0 && c.ld == 0.0 {
        return LossWeights::ones();
    }
    let anchor = c.lf.max(BALANCE_FLOOR);
    LossWeights {
        lambda_f: 1.0,
        lambda_b: anchor / c.lb.max(BALANCE_FLOOR),
        lambda_i: anchor / c.li.max(BALANCE_FLOOR),
        lambda_d: anchor / c.ld.max(BALANCE_FLOOR),
    }
}

/// Weighted sum of the four components.
pub fn total_loss(c: &LossComponents, w: &LossWeights) -> f64 {
    w.lambda_f * c.lf + w.lambda_b * c.lb + w.lambda_i * c.li + w.lambda_d * c.ld
}

/// Everything the loss needs besides the samples: the solution
/// network, the optional source network, and the optional effective
/// diffusivity.
#[derive(Clone, Copy)]
pub struct ModelRef<'a> {
    pub net: &'a MlpParams,
    pub source: Option<&'a MlpParams>,
    pub kappa: Option<f64>,
}

/// Evaluates the four loss components of a model on a sample set.
pub fn loss_components(
    problem: &PinnProblem,
    model: ModelRef<'_>,
    samples: &SampleSet,
) -> Result<LossComponents> {
    if samples.interior.is_empty() || samples.boundary.is_empty() {
        return Err(Error::Config(
            "interior and boundary sets must be non-empty".into(),
        ));
    }
    if problem.has_initial() && samples.initial.is_empty() {
        return Err(Error::Config("this problem needs initial points".into()));
    }
    if problem.has_data() && samples.data.is_empty() {
        return Err(Error::Config("an inverse problem needs data points".into()));
    }
    if problem.trains_kappa() && model.kappa.is_none() {
        return Err(Error::Config("heat inversion needs a diffusivity value".into()));
    }
    if problem.trains_source_net() && model.source.is_none() {
        return Err(Error::Config("source inversion needs a source network".into()));
    }

    let mut ws = JetWorkspace::new(model.net)?;
    let mut ws_src = match model.source {
        Some(s) => Some(JetWorkspace::new(s)?),
        None => None,
    };

    let mut lf = 0.0;
    for p in &samples.interior {
        let jet = forward_jet_into(model.net, p, &mut ws)?;
        let r = match problem {
            PinnProblem::PoissonForward2D { forcing, .. } => {
                poisson_residual(&jet, forcing(p[0], p[1]))
            }
            PinnProblem::Burgers1D { nu, .. } => burgers_residual(&jet, *nu),
            PinnProblem::HeatInverseKappa { .. } => heat_residual(&jet, model.kappa.unwrap()),
            PinnProblem::SourceInverse2D { .. } => {
                let src = model.source.unwrap();
                let f_hat =
                    forward_jet_into(src, p, ws_src.as_mut().unwrap())?.value;
                source_residual(&jet, f_hat)
            }
        };
        lf += r * r;
    }
    lf /= samples.interior.len() as f64;

    let fit = |points: &[([f64; 2], f64)], ws: &mut JetWorkspace| -> Result<f64> {
        if points.is_empty() {
            return Ok(0.0);
        }
        let mut acc = 0.0;
        for (p, target) in points {
            let u = forward_jet_into(model.net, p, ws)?.value;
            acc += (u - target) * (u - target);
        }
        Ok(acc / points.len() as f64)
    };
    let lb = fit(&samples.boundary, &mut ws)?;
    let li = fit(&samples.initial, &mut ws)?;
    let ld = fit(&samples.data, &mut ws)?;

    Ok(LossComponents { lf, lb, li, ld })
}

/// Point observations of the separated-variables heat solution with
/// diffusivity `kappa_star`, optionally corrupted by Gaussian noise
/// scaled to the largest clean magnitude.
pub fn synthetic_heat_observations(
    n_d: usize,
    t_end: f64,
    kappa_star: f64,
    noise_level: f64,
    seed: u64,
) -> Result<Vec<([f64; 2], f64)>> {
    if n_d == 0 {
        return Err(Error::InvalidArgument("need at least one observation".into()));
    }
    if t_end <= 0.0 || kappa_star <= 0.0 || noise_level < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "bad observation parameters: T = {t_end}, kappa = {kappa_star}, noise = {noise_level}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, SEED_TAG_OBSERVATIONS));
    // Keep observations away from the walls and from t = 0, where they
    // carry no information beyond the boundary and initial terms.
    let region = Rect::new(0.05, 0.95, 0.1 * t_end, t_end)?;
    let points = sample_lhs(&region, n_d, &mut rng)?;
    let clean: Vec<f64> = points
        .iter()
        .map(|p| heat_reference(p[0], p[1], kappa_star))
        .collect();
    let scale = clean.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut out = Vec::with_capacity(n_d);
    if noise_level > 0.0 && scale > 0.0 {
        let dist = Normal::new(0.0, noise_level * scale)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        for (p, c) in points.into_iter().zip(clean) {
            out.push((p, c + dist.sample(&mut rng)));
        }
    } else {
        for (p, c) in points.into_iter().zip(clean) {
            out.push((p, c));
        }
    }
    Ok(out)
}

/// Point observations of the product-sine Poisson solution, for
/// source recovery. Noise handling matches the heat observations:
/// Gaussian, scaled to the largest clean magnitude.
pub fn synthetic_poisson_observations(
    n_d: usize,
    noise_level: f64,
    seed: u64,
) -> Result<Vec<([f64; 2], f64)>> {
    if n_d == 0 {
        return Err(Error::InvalidArgument("need at least one observation".into()));
    }
    if noise_level < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "noise level must be nonnegative, got {noise_level}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, SEED_TAG_OBSERVATIONS));
    let region = Rect::new(0.05, 0.95, 0.05, 0.95)?;
    let points = sample_lhs(&region, n_d, &mut rng)?;
    let clean: Vec<f64> = points
        .iter()
        .map(|p| (PI * p[0]).sin() * (PI * p[1]).sin())
        .collect();
    let scale = clean.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut out = Vec::with_capacity(n_d);
    if noise_level > 0.0 && scale > 0.0 {
        let dist = Normal::new(0.0, noise_level * scale)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        for (p, c) in points.into_iter().zip(clean) {
            out.push((p, c + dist.sample(&mut rng)));
        }
    } else {
        for (p, c) in points.into_iter().zip(clean) {
            out.push((p, c));
        }
    }
    Ok(out)
}

/// Standard forward benchmark: forcing and boundary data of the
/// product-sine Poisson solution.
pub fn poisson_sine_problem() -> PinnProblem {
    let case = crate::verify::sine_case();
    PinnProblem::PoissonForward2D {
        forcing: case.forcing,
        boundary: case.boundary,
    }
}

/// Standard Burgers benchmark: `u0 = -sin(pi x)`, zero walls.
pub fn burgers_sine_problem(nu: f64, t_end: f64) -> Result<PinnProblem> {
    PinnProblem::burgers(
        nu,
        std::sync::Arc::new(|x: f64| -(PI * x).sin()),
        0.0,
        0.0,
        t_end,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::mlp::InitScheme;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn constant_net(c: f64) -> MlpParams {
        MlpParams {
            layer_dims: vec![2, 2, 1],
            weights: vec![vec![0.0; 4], vec![0.0; 2]],
            biases: vec![vec![0.0; 2], vec![c]],
        }
    }

    #[test]
    fn poisson_residual_vanishes_for_constants_without_forcing() {
        let net = constant_net(3.7);
        let pts = [[0.25, 0.5], [0.75, 0.1]];
        let rs = residual_poisson(&net, &pts, |_, _| 0.0).unwrap();
        assert!(rs.iter().all(|r| r.abs() == 0.0));
    }

    #[test]
    fn poisson_residual_is_linear_in_forcing() {
        let net = MlpParams::new(&[2, 6, 1], InitScheme::Xavier, 3).unwrap();
        let pts = [[0.2, 0.3], [0.6, 0.9], [0.4, 0.05]];
        let base = residual_poisson(&net, &pts, |x, y| x + y).unwrap();
        let shifted = residual_poisson(&net, &pts, |x, y| x + y + 1.0).unwrap();
        for (b, s) in base.iter().zip(&shifted) {
            assert!((s - (b - 1.0)).abs() < 1e-15);
        }
    }

    /// Exact jets of u = sin(pi x) sin(pi y).
    fn sine_jet(x: f64, y: f64) -> Jet2 {
        let (sx, cx) = ((PI * x).sin(), (PI * x).cos());
        let (sy, cy) = ((PI * y).sin(), (PI * y).cos());
        Jet2 {
            value: sx * sy,
            d1: [PI * cx * sy, PI * sx * cy],
            d2: [-PI * PI * sx * sy, -PI * PI * sx * sy],
        }
    }

    #[test]
    fn poisson_residual_on_the_exact_solution_is_tiny() {
        let mut rs = Vec::new();
        for i in 1..10 {
            for j in 1..10 {
                let (x, y) = (i as f64 / 10.0, j as f64 / 10.0);
                let jet = sine_jet(x, y);
                let f = 2.0 * PI * PI * (PI * x).sin() * (PI * y).sin();
                rs.push(poisson_residual(&jet, f));
            }
        }
        assert!(rs.iter().all(|r| r.abs() < 1e-8));
        assert!(mean_square(&rs) < 1e-16);
    }

    #[test]
    fn burgers_residual_vanishes_for_flat_nets_and_the_inviscid_ramp() {
        let zero = constant_net(0.0);
        let c = constant_net(-1.4);
        let pts = [[0.1, 0.2], [-0.5, 0.8]];
        assert!(residual_burgers(&zero, &pts, 0.3)
            .unwrap()
            .iter()
            .all(|r| *r == 0.0));
        assert!(residual_burgers(&c, &pts, 0.3)
            .unwrap()
            .iter()
            .all(|r| *r == 0.0));
        // u = x / (1 + t) solves the inviscid equation and has no
        // curvature, so the residual is zero for every viscosity.
        for &(x, t) in &[(0.4, 0.5), (-0.9, 0.1), (0.7, 2.0)] {
            let jet = Jet2 {
                value: x / (1.0 + t),
                d1: [1.0 / (1.0 + t), -x / ((1.0 + t) * (1.0 + t))],
                d2: [0.0, 2.0 * x / (1.0 + t).powi(3)],
            };
            for nu in [0.01, 1.0] {
                assert!(burgers_residual(&jet, nu).abs() < 1e-15);
            }
        }
    }

    /// Exact jets of u = e^{-kappa pi^2 t} sin(pi x).
    fn heat_jet(x: f64, t: f64, kappa: f64) -> Jet2 {
        let decay = (-kappa * PI * PI * t).exp();
        let (s, c) = ((PI * x).sin(), (PI * x).cos());
        Jet2 {
            value: decay * s,
            d1: [decay * PI * c, -kappa * PI * PI * decay * s],
            d2: [-PI * PI * decay * s, kappa * kappa * PI.powi(4) * decay * s],
        }
    }

    #[test]
    fn heat_residual_probes() {
        let c = constant_net(2.0);
        assert!(residual_heat_kappa(&c, 0.7, &[[0.3, 0.1]])
            .unwrap()
            .iter()
            .all(|r| *r == 0.0));
        let kappa = 1.3;
        for &(x, t) in &[(0.2, 0.05), (0.7, 0.3)] {
            // Matching diffusivity: exact solution, zero residual.
            let jet = heat_jet(x, t, kappa);
            assert!(heat_residual(&jet, kappa).abs() < 1e-8);
            // Probe decaying at kappa/2 against the full-kappa
            // residual leaves +kappa/2 pi^2 u.
            let half = heat_jet(x, t, kappa / 2.0);
            let r = heat_residual(&half, kappa);
            let want = kappa / 2.0 * PI * PI * half.value;
            assert!((r - want).abs() < 1e-10, "{r} vs {want}");
        }
    }

    #[test]
    fn sample_sets_cover_each_region_with_targets() {
        let problem = burgers_sine_problem(0.1, 0.8).unwrap();
        let cfg = SampleConfig {
            n_interior: 40,
            n_boundary: 11,
            n_initial: 7,
            method: SampleMethod::Lhs,
        };
        let set = draw_samples(&problem, &cfg, 3, 0).unwrap();
        assert_eq!(set.interior.len(), 40);
        assert_eq!(set.boundary.len(), 11);
        assert_eq!(set.initial.len(), 7);
        assert!(set.data.is_empty());
        assert!(set.boundary.iter().all(|(p, v)| p[0].abs() == 1.0 && *v == 0.0));
        for (p, v) in &set.initial {
            assert_eq!(p[1], 0.0);
            assert!((v + (PI * p[0]).sin()).abs() < 1e-15);
        }
        // Resampling with another epoch moves the interior points.
        let set2 = draw_samples(&problem, &cfg, 3, 1).unwrap();
        assert_ne!(set.interior, set2.interior);
        // Same epoch reproduces.
        let set3 = draw_samples(&problem, &cfg, 3, 0).unwrap();
        assert_eq!(set, set3);
    }

    #[test]
    fn poisson_boundary_sampling_covers_all_four_edges() {
        let problem = poisson_sine_problem();
        let cfg = SampleConfig {
            n_interior: 10,
            n_boundary: 10,
            n_initial: 0,
            method: SampleMethod::Uniform,
        };
        let set = draw_samples(&problem, &cfg, 0, 0).unwrap();
        let on_edge = |p: &[f64; 2]| {
            p[0] == 0.0 || p[0] == 1.0 || p[1] == 0.0 || p[1] == 1.0
        };
        assert!(set.boundary.iter().all(|(p, _)| on_edge(p)));
        assert!(set.boundary.iter().any(|(p, _)| p[1] == 0.0));
        assert!(set.boundary.iter().any(|(p, _)| p[0] == 1.0));
        assert!(set.boundary.iter().any(|(p, _)| p[1] == 1.0));
        assert!(set.boundary.iter().any(|(p, _)| p[0] == 0.0));
    }

    #[test]
    fn loss_components_match_hand_values() {
        // Zero network, zero boundary data: only the residual and the
        // single data point contribute.
        let obs = vec![([0.5, 0.2], 0.5)];
        let problem = PinnProblem::heat_inverse(
            Arc::new(|x: f64| (PI * x).sin()),
            Arc::new(|_| 0.0),
            Arc::new(|_| 0.0),
            obs,
            0.5,
        )
        .unwrap();
        let net = constant_net(0.0);
        let samples = draw_samples(
            &problem,
            &SampleConfig {
                n_interior: 8,
                n_boundary: 4,
                n_initial: 4,
                method: SampleMethod::Uniform,
            },
            1,
            0,
        )
        .unwrap();
        let comps = loss_components(
            &problem,
            ModelRef {
                net: &net,
                source: None,
                kappa: Some(1.0),
            },
            &samples,
        )
        .unwrap();
        // Flat zero network: zero residual, zero boundary error; the
        // initial term fights sin(pi x) and the one data point misses
        // by 0.5.
        assert_eq!(comps.lf, 0.0);
        assert_eq!(comps.lb, 0.0);
        assert!(comps.li > 0.0);
        assert!((comps.ld - 0.25).abs() < 1e-15);
    }

    #[test]
    fn loss_components_validate_their_inputs() {
        let problem = poisson_sine_problem();
        let net = constant_net(0.0);
        let empty = SampleSet {
            interior: vec![],
            boundary: vec![([0.0, 0.0], 0.0)],
            initial: vec![],
            data: vec![],
        };
        let model = ModelRef {
            net: &net,
            source: None,
            kappa: None,
        };
        assert!(loss_components(&problem, model, &empty).is_err());
    }

    #[test]
    fn total_loss_arithmetic() {
        let c = LossComponents {
            lf: 0.5,
            lb: 0.25,
            li: 0.25,
            ld: 7.0,
        };
        let w = LossWeights {
            lambda_f: 1.0,
            lambda_b: 1.0,
            lambda_i: 1.0,
            lambda_d: 0.0,
        };
        assert_eq!(total_loss(&c, &w), 1.0);
        let zero = LossComponents {
            lf: 0.0,
            lb: 0.0,
            li: 0.0,
            ld: 0.0,
        };
        assert_eq!(total_loss(&zero, &LossWeights::ones()), 0.0);
        let doubled = LossWeights {
            lambda_f: 2.0,
            lambda_b: 2.0,
            lambda_i: 2.0,
            lambda_d: 0.0,
        };
        assert_eq!(total_loss(&c, &doubled), 2.0);
    }

    #[test]
    fn balance_weights_follow_the_reciprocal_rule() {
        let equal = LossComponents {
            lf: 0.3,
            lb: 0.3,
            li: 0.3,
            ld: 0.3,
        };
        let w = balance_weights(&equal);
        assert_eq!(w, LossWeights::ones());

        let skewed = LossComponents {
            lf: 1e-4,
            lb: 1.0,
            li: 0.0,
            ld: 0.0,
        };
        let w = balance_weights(&skewed);
        assert_eq!(w.lambda_f, 1.0);
        assert!((w.lambda_f / w.lambda_b - 1e4).abs() < 1e-6);
        // Zero components hit the floor instead of dividing by zero.
        assert!(w.lambda_i.is_finite() && w.lambda_i > 0.0);

        let silent = LossComponents {
            lf: 0.0,
            lb: 0.0,
            li: 0.0,
            ld: 0.0,
        };
        assert_eq!(balance_weights(&silent), LossWeights::ones());
    }

    #[test]
    fn weights_validation() {
        assert!(LossWeights::ones().validate().is_ok());
        let bad = LossWeights {
            lambda_f: 0.0,
            ..LossWeights::ones()
        };
        assert!(bad.validate().is_err());
        let neg = LossWeights {
            lambda_b: -1.0,
            ..LossWeights::ones()
        };
        assert!(neg.validate().is_err());
    }

    #[test]
    fn kappa_is_identifiable_at_the_oracle_point() {
        // Residual energy of the exact solution is zero at the true
        // diffusivity and strictly positive at twice it.
        let kappa = 1.0;
        let mut at_true = Vec::new();
        let mut at_double = Vec::new();
        for i in 1..8 {
            for j in 1..8 {
                let (x, t) = (i as f64 / 8.0, 0.4 * j as f64 / 8.0);
                let jet = heat_jet(x, t, kappa);
                at_true.push(heat_residual(&jet, kappa));
                at_double.push(heat_residual(&jet, 2.0 * kappa));
            }
        }
        assert!(mean_square(&at_true) < 1e-20);
        assert!(mean_square(&at_double) > 1e-3);
    }

    #[test]
    fn synthetic_observations_are_clean_or_scaled_noisy() {
        let obs = synthetic_heat_observations(20, 0.25, 1.0, 0.0, 0).unwrap();
        assert_eq!(obs.len(), 20);
        for (p, v) in &obs {
            assert!((v - heat_reference(p[0], p[1], 1.0)).abs() < 1e-15);
        }
        let noisy = synthetic_heat_observations(20, 0.25, 1.0, 0.01, 0).unwrap();
        let scale = obs
            .iter()
            .map(|(_, v)| v.abs())
            .fold(0.0f64, f64::max);
        let mut max_dev = 0.0f64;
        for ((p, clean), (q, dirty)) in obs.iter().zip(&noisy) {
            assert_eq!(p, q);
            max_dev = max_dev.max((clean - dirty).abs());
        }
        assert!(max_dev > 0.0);
        // Five sigma would be remarkable for 20 draws.
        assert!(max_dev < 5.0 * 0.01 * scale, "deviation {max_dev}");
        // Determinism.
        let again = synthetic_heat_observations(20, 0.25, 1.0, 0.01, 0).unwrap();
        assert_eq!(noisy, again);
    }

    proptest! {
        #[test]
        fn loss_components_are_nonnegative_and_finite(seed in 0u64..500) {
            let problem = poisson_sine_problem();
            let net = MlpParams::new(&[2, 5, 1], InitScheme::Xavier, seed).unwrap();
            let samples = draw_samples(
                &problem,
                &SampleConfig {
                    n_interior: 6,
                    n_boundary: 4,
                    n_initial: 0,
                    method: SampleMethod::Lhs,
                },
                seed,
                0,
            ).unwrap();
            let comps = loss_components(
                &problem,
                ModelRef { net: &net, source: None, kappa: None },
                &samples,
            ).unwrap();
            prop_assert!(comps.lf >= 0.0 && comps.lf.is_finite());
            prop_assert!(comps.lb >= 0.0 && comps.lb.is_finite());
            prop_assert!(comps.li == 0.0);
            prop_assert!(comps.ld == 0.0);
        }
    }
}
