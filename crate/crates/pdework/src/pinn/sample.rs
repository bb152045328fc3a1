//! Collocation point sampling over axis-aligned boxes and segments.

use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::Rng;

/// Axis-aligned box; the second axis doubles as time for evolution
/// problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(x0 < x1 && y0 < y1) || [x0, x1, y0, y1].iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "degenerate region [{x0}, {x1}] x [{y0}, {y1}]"
            )));
        }
        Ok(Rect { x0, x1, y0, y1 })
    }

    pub fn unit_square() -> Self {
        Rect {
            x0: 0.0,
            x1: 1.0,
            y0: 0.0,
            y1: 1.0,
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        (self.x0..=self.x1).contains(&p[0]) && (self.y0..=self.y1).contains(&p[1])
    }
}

/// How interior collocation points are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMethod {
    Uniform,
    Lhs,
}

impl SampleMethod {
    pub fn name(&self) -> &'static str {
        match self {
            SampleMethod::Uniform => "uniform",
            SampleMethod::Lhs => "lhs",
        }
    }
}

/// Independent uniform draws in the box; per point, x then y.
pub fn sample_uniform<R: Rng>(region: &Rect, n: usize, rng: &mut R) -> Result<Vec<[f64; 2]>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    Ok((0..n)
        .map(|_| {
            [
                region.x0 + rng.gen::<f64>() * (region.x1 - region.x0),
                region.y0 + rng.gen::<f64>() * (region.y1 - region.y0),
            ]
        })
        .collect())
}

/// Latin hypercube draw: along each axis the n points occupy the n
/// equal-width strata exactly once, jittered inside their stratum.
pub fn sample_lhs<R: Rng>(region: &Rect, n: usize, rng: &mut R) -> Result<Vec<[f64; 2]>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let mut coords = [vec![0.0; n], vec![0.0; n]];
    let bounds = [(region.x0, region.x1), (region.y0, region.y1)];
    for dim in 0..2 {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        let (lo, hi) = bounds[dim];
        for i in 0..n {
            let u = rng.gen::<f64>();
            coords[dim][i] = lo + (perm[i] as f64 + u) * (hi - lo) / n as f64;
        }
    }
    Ok((0..n).map(|i| [coords[0][i], coords[1][i]]).collect())
}

/// Uniform draws along the segment from `a` to `b`.
pub fn sample_segment<R: Rng>(a: [f64; 2], b: [f64; 2], n: usize, rng: &mut R) -> Vec<[f64; 2]> {
    (0..n)
        .map(|_| {
            let u = rng.gen::<f64>();
            [a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1])]
        })
        .collect()
}

/// Splits `n` as evenly as possible over `parts` buckets, front-loaded.
pub fn split_counts(n: usize, parts: usize) -> Vec<usize> {
    let base = n / parts;
    let extra = n % parts;
    (0..parts).map(|i| base + usize::from(i < extra)).collect()
}
