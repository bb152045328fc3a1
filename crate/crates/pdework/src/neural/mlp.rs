//! Multilayer perceptron parameters: shapes, initialization, plain
//! forward evaluation, and a textual checkpoint format.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::{BufRead, Write};

/// Weight initialization family. Both draw uniformly in `[-b, b]`;
/// they differ in how the bound is tied to the layer fan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitScheme {
    /// `b = sqrt(6 / (fan_in + fan_out))`, suited to tanh layers.
    Xavier,
    /// `b = sqrt(6 / fan_in)`.
    He,
}

/// Parameters of a fully connected tanh network. The last layer is
/// affine (no activation). `weights[l]` is `dims[l+1] x dims[l]` in
/// row-major order; biases start at zero.
///
/// Fields are public so optimizers can update them in place; everyone
/// who constructs one by hand is expected to keep the shapes
/// consistent with `layer_dims` (`validate` checks this).
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layer_dims: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpParams {
    /// Freshly initialized network. Weights are drawn layer by layer,
    /// row by row, from a counter-based generator, so a seed pins the
    /// parameters exactly.
    pub fn new(layer_dims: &[usize], scheme: InitScheme, seed: u64) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(Error::InvalidArgument(
                "a network needs at least an input and an output layer".into(),
            ));
        }
        if layer_dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArgument("zero-width layer".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(layer_dims.len() - 1);
        let mut biases = Vec::with_capacity(layer_dims.len() - 1);
        for l in 0..layer_dims.len() - 1 {
            let fan_in = layer_dims[l];
            let fan_out = layer_dims[l + 1];
            let bound = match scheme {
                InitScheme::Xavier => (6.0 / (fan_in + fan_out) as f64).sqrt(),
                InitScheme::He => (6.0 / fan_in as f64).sqrt(),
            };
            let mut w = Vec::with_capacity(fan_in * fan_out);
            for _ in 0..fan_in * fan_out {
                w.push(rng.gen_range(-bound..=bound));
            }
            weights.push(w);
            biases.push(vec![0.0; fan_out]);
        }
        Ok(MlpParams {
            layer_dims: layer_dims.to_vec(),
            weights,
            biases,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Checks that weight and bias shapes agree with `layer_dims` and
    /// that every entry is finite.
    pub fn validate(&self) -> Result<()> {
        if self.layer_dims.len() < 2 {
            return Err(Error::Structural("fewer than two layers".into()));
        }
        let l = self.layer_dims.len() - 1;
        if self.weights.len() != l || self.biases.len() != l {
            return Err(Error::Structural(format!(
                "{} weight and {} bias blocks for {} layers",
                self.weights.len(),
                self.biases.len(),
                l
            )));
        }
        for k in 0..l {
            let (nin, nout) = (self.layer_dims[k], self.layer_dims[k + 1]);
            if self.weights[k].len() != nin * nout {
                return Err(Error::Structural(format!(
                    "weight block {k} has {} entries, expected {}",
                    self.weights[k].len(),
                    nin * nout
                )));
            }
            if self.biases[k].len() != nout {
                return Err(Error::Structural(format!(
                    "bias block {k} has {} entries, expected {nout}",
                    self.biases[k].len()
                )));
            }
        }
        let finite = self
            .weights
            .iter()
            .chain(&self.biases)
            .flat_map(|b| b.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Numerical("non-finite network parameter".into()));
        }
        Ok(())
    }

    /// Plain forward pass: affine, tanh on every hidden layer, affine
    /// output.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::InvalidArgument(format!(
                "input has {} components, network takes {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut a = x.to_vec();
        for l in 0..self.num_layers() {
            let nin = self.layer_dims[l];
            let nout = self.layer_dims[l + 1];
            let w = &self.weights[l];
            let mut z = self.biases[l].clone();
            for i in 0..nout {
                let row = &w[i * nin..(i + 1) * nin];
                let mut acc = 0.0;
                for (rw, av) in row.iter().zip(&a) {
                    acc += rw * av;
                }
                z[i] += acc;
            }
            if l + 1 < self.num_layers() {
                for v in &mut z {
                    *v = v.tanh();
                }
            }
            a = z;
        }
        Ok(a)
    }

    /// Convenience for the scalar-output networks used everywhere in
    /// this crate.
    pub fn forward_scalar(&self, x: &[f64]) -> Result<f64> {
        if self.output_dim() != 1 {
            return Err(Error::InvalidArgument(format!(
                "network has {} outputs, expected 1",
                self.output_dim()
            )));
        }
        Ok(self.forward(x)?[0])
    }
}

/// Parameter-shaped gradient block for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetGrads {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl NetGrads {
    pub fn zeros_like(params: &MlpParams) -> Self {
        NetGrads {
            weights: params.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: params.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn fill(&mut self, v: f64) {
        for block in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            for g in block {
                *g = v;
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(&self.biases).flat_map(|b| b.iter())
    }
}

/// Gradient of a scalar loss with respect to every registered network
/// and scalar parameter, in registration order.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub nets: Vec<NetGrads>,
    pub scalars: Vec<f64>,
}

impl GradientSet {
    pub fn zeros(nets: &[&MlpParams], n_scalars: usize) -> Self {
        GradientSet {
            nets: nets.iter().map(|p| NetGrads::zeros_like(p)).collect(),
            scalars: vec![0.0; n_scalars],
        }
    }

    pub fn fill(&mut self, v: f64) {
        for n in &mut self.nets {
            n.fill(v);
        }
        for s in &mut self.scalars {
            *s = v;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.nets
            .iter()
            .flat_map(|n| n.iter())
            .chain(self.scalars.iter())
            .all(|v| v.is_finite())
    }
}

const CHECKPOINT_MAGIC: &str = "pdework-mlp v1";

/// Writes parameters as plain text: a magic line, the layer sizes,
/// then one line per weight or bias block. Values round-trip exactly
/// through the shortest-representation float formatting.
pub fn save_mlp<W: Write>(params: &MlpParams, out: &mut W) -> Result<()> {
    params.validate()?;
    writeln!(out, "{CHECKPOINT_MAGIC}")?;
    write!(out, "dims")?;
    for d in &params.layer_dims {
        write!(out, " {d}")?;
    }
    writeln!(out)?;
    for l in 0..params.num_layers() {
        write!(out, "W{l}")?;
        for v in &params.weights[l] {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
        write!(out, "b{l}")?;
        for v in &params.biases[l] {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads parameters written by `save_mlp`, validating shape and
/// finiteness.
pub fn load_mlp<R: BufRead>(input: &mut R) -> Result<MlpParams> {
    let mut lines = input.lines();
    let magic = lines
        .next()
        .ok_or_else(|| Error::Config("empty checkpoint".into()))??;
    if magic.trim() != CHECKPOINT_MAGIC {
        return Err(Error::Config(format!(
            "bad checkpoint header {magic:?}"
        )));
    }
    let dims_line = lines
        .next()
        .ok_or_else(|| Error::Config("checkpoint missing dims line".into()))??;
    let mut parts = dims_line.split_whitespace();
    if parts.next() != Some("dims") {
        return Err(Error::Config("checkpoint missing dims line".into()));
    }
    let layer_dims: Vec<usize> = parts
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::Config(format!("bad layer size {t:?}")))
        })
        .collect::<Result<_>>()?;
    if layer_dims.len() < 2 {
        return Err(Error::Config("checkpoint has fewer than two layers".into()));
    }

    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for l in 0..layer_dims.len() - 1 {
        weights.push(read_block(&mut lines, &format!("W{l}"))?);
        biases.push(read_block(&mut lines, &format!("b{l}"))?);
    }
    let params = MlpParams {
        layer_dims,
        weights,
        biases,
    };
    params.validate()?;
    Ok(params)
}

fn read_block(
    lines: &mut impl Iterator<Item = std::io::Result<String>>,
    tag: &str,
) -> Result<Vec<f64>> {
    let line = lines
        .next()
        .ok_or_else(|| Error::Config(format!("checkpoint truncated before {tag}")))??;
    let mut parts = line.split_whitespace();
    if parts.next() != Some(tag) {
        return Err(Error::Config(format!("expected block {tag}")));
    }
    parts
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Config(format!("bad value {t:?} in block {tag}")))
        })
        .collect()
}
