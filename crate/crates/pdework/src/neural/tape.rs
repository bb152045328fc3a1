//! A scalar loss tape: records the arithmetic that combines network
//! jet components and scalar parameters into one loss value, then
//! replays it backwards to produce exact parameter gradients.
//!
//! The tape is a Wengert list. Ops are evaluated eagerly as they are
//! recorded, so building the expression also computes the loss; the
//! reverse sweep pushes one adjoint per node and hands the jet-level
//! seeds to the network reverse pass at the end.

use crate::error::{Error, Result};
use crate::neural::jet::{forward_jet_into, jet_backprop, Jet2, JetSeed, JetWorkspace};
use crate::neural::mlp::{GradientSet, MlpParams};

pub type NodeId = usize;

/// Tape handles for the five components of one network evaluation.
/// Components beyond the network's input dimension are constant zero,
/// so 1D and 2D problems share the same shape.
#[derive(Debug, Clone, Copy)]
pub struct TapeJet {
    pub value: NodeId,
    pub dx: NodeId,
    pub dy: NodeId,
    pub dxx: NodeId,
    pub dyy: NodeId,
}

#[derive(Debug, Clone, Copy)]
enum Comp {
    Value,
    Dx,
    Dy,
    Dxx,
    Dyy,
}

#[derive(Debug, Clone, Copy)]
enum Node {
    ScalarParam(usize),
    Const,
    JetComp { eval: usize, comp: Comp },
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Square(NodeId),
    Scale(NodeId, f64),
    AddConst(NodeId),
    Softplus(NodeId),
    /// `scale * sum(term_list[start .. start + len])`.
    SumScaled { start: usize, len: usize, scale: f64 },
}

struct EvalRecord {
    net: usize,
    ws: JetWorkspace,
    seed: JetSeed,
}

/// Loss expression under construction. Node ids are only valid on the
/// tape that produced them; ops panic on foreign ids since that is a
/// caller bug, not an input condition.
pub struct LossTape<'p> {
    nets: Vec<&'p MlpParams>,
    scalars: Vec<f64>,
    nodes: Vec<Node>,
    values: Vec<f64>,
    evals: Vec<EvalRecord>,
    term_lists: Vec<NodeId>,
}

impl<'p> LossTape<'p> {
    fn new(nets: &[&'p MlpParams], scalars: &[f64]) -> Self {
        LossTape {
            nets: nets.to_vec(),
            scalars: scalars.to_vec(),
            nodes: Vec::new(),
            values: Vec::new(),
            evals: Vec::new(),
            term_lists: Vec::new(),
        }
    }

    fn push(&mut self, node: Node, value: f64) -> NodeId {
        self.nodes.push(node);
        self.values.push(value);
        self.nodes.len() - 1
    }

    fn check(&self, id: NodeId) -> NodeId {
        assert!(id < self.nodes.len(), "node id {id} from another tape");
        id
    }

    /// Current value of a node.
    pub fn value(&self, id: NodeId) -> f64 {
        self.values[self.check(id)]
    }

    /// One of the scalar parameters passed to `loss_param_grad`.
    pub fn scalar(&mut self, index: usize) -> Result<NodeId> {
        if index >= self.scalars.len() {
            return Err(Error::InvalidArgument(format!(
                "scalar parameter {index} of {} registered",
                self.scalars.len()
            )));
        }
        let v = self.scalars[index];
        Ok(self.push(Node::ScalarParam(index), v))
    }

    pub fn constant(&mut self, v: f64) -> NodeId {
        self.push(Node::Const, v)
    }

    /// Evaluates network `net` at `x` and exposes its jet components
    /// as tape nodes.
    pub fn jet(&mut self, net: usize, x: &[f64]) -> Result<TapeJet> {
        if net >= self.nets.len() {
            return Err(Error::InvalidArgument(format!(
                "network {net} of {} registered",
                self.nets.len()
            )));
        }
        let params = self.nets[net];
        let mut ws = JetWorkspace::new(params)?;
        let jet: Jet2 = forward_jet_into(params, x, &mut ws)?;
        let eval = self.evals.len();
        self.evals.push(EvalRecord {
            net,
            ws,
            seed: JetSeed::default(),
        });
        Ok(TapeJet {
            value: self.push(Node::JetComp { eval, comp: Comp::Value }, jet.value),
            dx: self.push(Node::JetComp { eval, comp: Comp::Dx }, jet.d1[0]),
            dy: self.push(Node::JetComp { eval, comp: Comp::Dy }, jet.d1[1]),
            dxx: self.push(Node::JetComp { eval, comp: Comp::Dxx }, jet.d2[0]),
            dyy: self.push(Node::JetComp { eval, comp: Comp::Dyy }, jet.d2[1]),
        })
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.values[self.check(a)] + self.values[self.check(b)];
        self.push(Node::Add(a, b), v)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.values[self.check(a)] - self.values[self.check(b)];
        self.push(Node::Sub(a, b), v)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.values[self.check(a)] * self.values[self.check(b)];
        self.push(Node::Mul(a, b), v)
    }

    pub fn square(&mut self, a: NodeId) -> NodeId {
        let v = self.values[self.check(a)];
        self.push(Node::Square(a), v * v)
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        let v = c * self.values[self.check(a)];
        self.push(Node::Scale(a, c), v)
    }

    pub fn add_const(&mut self, a: NodeId, c: f64) -> NodeId {
        let v = self.values[self.check(a)] + c;
        self.push(Node::AddConst(a), v)
    }

    pub fn softplus(&mut self, a: NodeId) -> NodeId {
        let v = softplus(self.values[self.check(a)]);
        self.push(Node::Softplus(a), v)
    }

    pub fn sum(&mut self, terms: &[NodeId]) -> Result<NodeId> {
        self.sum_scaled(terms, 1.0)
    }

    /// Arithmetic mean of the terms.
    pub fn mean(&mut self, terms: &[NodeId]) -> Result<NodeId> {
        self.sum_scaled(terms, 1.0 / terms.len().max(1) as f64)
    }

    fn sum_scaled(&mut self, terms: &[NodeId], scale: f64) -> Result<NodeId> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument("sum over no terms".into()));
        }
        let mut acc = 0.0;
        for &t in terms {
            acc += self.values[self.check(t)];
        }
        let start = self.term_lists.len();
        self.term_lists.extend_from_slice(terms);
        Ok(self.push(
            Node::SumScaled {
                start,
                len: terms.len(),
                scale,
            },
            scale * acc,
        ))
    }
}

/// Numerically stable `ln(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Numerically stable logistic function, the softplus derivative.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Builds a loss with `build`, evaluates it, and returns the value
/// together with its gradient with respect to every parameter of the
/// registered networks and every scalar.
pub fn loss_param_grad<'p, F>(
    nets: &[&'p MlpParams],
    scalars: &[f64],
    build: F,
) -> Result<(f64, GradientSet)>
where
    F: FnOnce(&mut LossTape<'p>) -> Result<NodeId>,
{
    let mut tape = LossTape::new(nets, scalars);
    let root = build(&mut tape)?;
    if root >= tape.nodes.len() {
        return Err(Error::Contract("loss root is not a tape node".into()));
    }
    let loss = tape.values[root];

    let mut bars = vec![0.0; tape.nodes.len()];
    bars[root] = 1.0;
    let mut grads = GradientSet::zeros(nets, scalars.len());

    for id in (0..=root).rev() {
        let bar = bars[id];
        if bar == 0.0 {
            continue;
        }
        match tape.nodes[id] {
            Node::ScalarParam(i) => grads.scalars[i] += bar,
            Node::Const => {}
            Node::JetComp { eval, comp } => {
                let seed = &mut tape.evals[eval].seed;
                match comp {
                    Comp::Value => seed.value += bar,
                    Comp::Dx => seed.d1[0] += bar,
                    Comp::Dy => seed.d1[1] += bar,
                    Comp::Dxx => seed.d2[0] += bar,
                    Comp::Dyy => seed.d2[1] += bar,
                }
            }
            Node::Add(a, b) => {
                bars[a] += bar;
                bars[b] += bar;
            }
            Node::Sub(a, b) => {
                bars[a] += bar;
                bars[b] -= bar;
            }
            Node::Mul(a, b) => {
                bars[a] += bar * tape.values[b];
                bars[b] += bar * tape.values[a];
            }
            Node::Square(a) => bars[a] += 2.0 * tape.values[a] * bar,
            Node::Scale(a, c) => bars[a] += c * bar,
            Node::AddConst(a) => bars[a] += bar,
            Node::Softplus(a) => bars[a] += sigmoid(tape.values[a]) * bar,
            Node::SumScaled { start, len, scale } => {
                for &t in &tape.term_lists[start..start + len] {
                    bars[t] += scale * bar;
                }
            }
        }
    }

    for rec in &mut tape.evals {
        let s = &rec.seed;
        if s.value == 0.0
            && s.d1 == [0.0; 2]
            && s.d2 == [0.0; 2]
        {
            continue;
        }
        jet_backprop(tape.nets[rec.net], &mut rec.ws, s, &mut grads.nets[rec.net])?;
    }

    Ok((loss, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::mlp::InitScheme;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scalar_quadratic_has_exact_gradient() {
        let (loss, grads) = loss_param_grad(&[], &[1.0], |t| {
            let s = t.scalar(0)?;
            let shifted = t.add_const(s, -3.0);
            Ok(t.square(shifted))
        })
        .unwrap();
        assert_eq!(loss, 4.0);
        assert_eq!(grads.scalars[0], -4.0);
    }

    #[test]
    fn softplus_is_stable_and_correct() {
        assert!((softplus(0.0) - 2.0f64.ln()).abs() < 1e-15);
        assert!((softplus(1.5) - (1.0 + 1.5f64.exp()).ln()).abs() < 1e-12);
        assert_eq!(softplus(800.0), 800.0);
        assert_eq!(softplus(-800.0), 0.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
        assert_eq!(sigmoid(800.0), 1.0);
        assert_eq!(sigmoid(-800.0), 0.0);

        let (loss, grads) = loss_param_grad(&[], &[2.0], |t| {
            let s = t.scalar(0)?;
            Ok(t.softplus(s))
        })
        .unwrap();
        assert!((loss - softplus(2.0)).abs() < 1e-15);
        assert!((grads.scalars[0] - sigmoid(2.0)).abs() < 1e-15);
    }

    #[test]
    fn arithmetic_adjoints_match_hand_results() {
        // f(a, b) = (a b - 2)^2 + 3 a
        let (a0, b0) = (1.5, -0.5);
        let (loss, grads) = loss_param_grad(&[], &[a0, b0], |t| {
            let a = t.scalar(0)?;
            let b = t.scalar(1)?;
            let ab = t.mul(a, b);
            let shifted = t.add_const(ab, -2.0);
            let sq = t.square(shifted);
            let lin = t.scale(a, 3.0);
            Ok(t.add(sq, lin))
        })
        .unwrap();
        let inner = a0 * b0 - 2.0;
        assert!((loss - (inner * inner + 3.0 * a0)).abs() < 1e-15);
        assert!((grads.scalars[0] - (2.0 * inner * b0 + 3.0)).abs() < 1e-14);
        assert!((grads.scalars[1] - 2.0 * inner * a0).abs() < 1e-14);
    }

    #[test]
    fn mean_and_sum_spread_adjoints() {
        let (loss, grads) = loss_param_grad(&[], &[2.0, 4.0, 6.0], |t| {
            let xs: Vec<NodeId> = (0..3).map(|i| t.scalar(i).unwrap()).collect();
            t.mean(&xs)
        })
        .unwrap();
        assert!((loss - 4.0).abs() < 1e-15);
        for g in &grads.scalars {
            assert!((g - 1.0 / 3.0).abs() < 1e-15);
        }
        let (loss, _) = loss_param_grad(&[], &[2.0, 4.0, 6.0], |t| {
            let xs: Vec<NodeId> = (0..3).map(|i| t.scalar(i).unwrap()).collect();
            t.sum(&xs)
        })
        .unwrap();
        assert_eq!(loss, 12.0);
    }

    /// Builds a physics-shaped loss over one 2D network and one scalar:
    /// mean squared residual of u_xx + u_yy + softplus(kappa) * u over
    /// interior points, plus a boundary mean square.
    fn physics_loss(
        nets: &[&MlpParams],
        scalars: &[f64],
        interior: &[[f64; 2]],
        boundary: &[[f64; 2]],
    ) -> (f64, GradientSet) {
        loss_param_grad(nets, scalars, |t| {
            let kappa = t.scalar(0)?;
            let coef = t.softplus(kappa);
            let mut res_terms = Vec::new();
            for p in interior {
                let jet = t.jet(0, p)?;
                let lap = t.add(jet.dxx, jet.dyy);
                let scaled = t.mul(coef, jet.value);
                let r = t.add(lap, scaled);
                let forced = t.add_const(r, -1.0);
                res_terms.push(t.square(forced));
            }
            let lf = t.mean(&res_terms)?;
            let mut b_terms = Vec::new();
            for p in boundary {
                let jet = t.jet(0, p)?;
                b_terms.push(t.square(jet.value));
            }
            let lb = t.mean(&b_terms)?;
            let lb_scaled = t.scale(lb, 5.0);
            Ok(t.add(lf, lb_scaled))
        })
        .unwrap()
    }

    fn close(got: f64, want: f64, rtol: f64, atol: f64) -> bool {
        (got - want).abs() <= atol + rtol * want.abs()
    }

    #[test]
    fn physics_loss_gradients_match_finite_differences() {
        for seed in 0..6u64 {
            let p = MlpParams::new(&[2, 5, 4, 1], InitScheme::Xavier, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(40 + seed);
            let interior: Vec<[f64; 2]> = (0..4)
                .map(|_| [rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9)])
                .collect();
            let boundary: Vec<[f64; 2]> =
                vec![[0.0, rng.gen_range(0.0..1.0)], [rng.gen_range(0.0..1.0), 1.0]];
            let kappa = rng.gen_range(-0.5..0.5);

            let (_, grads) = physics_loss(&[&p], &[kappa], &interior, &boundary);

            let h = 1e-4;
            // Scalar parameter.
            let up = physics_loss(&[&p], &[kappa + h], &interior, &boundary).0;
            let dn = physics_loss(&[&p], &[kappa - h], &interior, &boundary).0;
            let fd = (up - dn) / (2.0 * h);
            assert!(
                close(grads.scalars[0], fd, 1e-4, 1e-6),
                "kappa grad {} vs {}",
                grads.scalars[0],
                fd
            );
            // Every network parameter.
            for l in 0..p.num_layers() {
                for idx in 0..p.weights[l].len() {
                    let mut pp = p.clone();
                    pp.weights[l][idx] += h;
                    let up = physics_loss(&[&pp], &[kappa], &interior, &boundary).0;
                    pp.weights[l][idx] -= 2.0 * h;
                    let dn = physics_loss(&[&pp], &[kappa], &interior, &boundary).0;
                    let fd = (up - dn) / (2.0 * h);
                    let got = grads.nets[0].weights[l][idx];
                    assert!(close(got, fd, 1e-4, 1e-6), "W{l}[{idx}]: {got} vs {fd}");
                }
                for idx in 0..p.biases[l].len() {
                    let mut pp = p.clone();
                    pp.biases[l][idx] += h;
                    let up = physics_loss(&[&pp], &[kappa], &interior, &boundary).0;
                    pp.biases[l][idx] -= 2.0 * h;
                    let dn = physics_loss(&[&pp], &[kappa], &interior, &boundary).0;
                    let fd = (up - dn) / (2.0 * h);
                    let got = grads.nets[0].biases[l][idx];
                    assert!(close(got, fd, 1e-4, 1e-6), "b{l}[{idx}]: {got} vs {fd}");
                }
            }
        }
    }

    #[test]
    fn coupled_nets_and_unused_nets_get_correct_gradients() {
        let u = MlpParams::new(&[1, 4, 1], InitScheme::Xavier, 1).unwrap();
        let v = MlpParams::new(&[1, 4, 1], InitScheme::Xavier, 2).unwrap();
        let w = MlpParams::new(&[1, 3, 1], InitScheme::Xavier, 3).unwrap();
        let points = [[0.2], [0.5], [0.8]];
        let run = |u: &MlpParams, v: &MlpParams| {
            loss_param_grad(&[u, v, &w], &[], |t| {
                let mut terms = Vec::new();
                for p in &points {
                    let ju = t.jet(0, p)?;
                    let jv = t.jet(1, p)?;
                    let diff = t.sub(ju.value, jv.value);
                    terms.push(t.square(diff));
                }
                t.mean(&terms)
            })
            .unwrap()
        };
        let (_, grads) = run(&u, &v);
        // The third net never enters the loss.
        assert!(grads.nets[2].iter().all(|&g| g == 0.0));
        // Spot-check both active nets against finite differences.
        let h = 1e-4;
        for (ni, params) in [(0usize, &u), (1usize, &v)] {
            let mut pp = (*params).clone();
            pp.weights[0][1] += h;
            let up = if ni == 0 { run(&pp, &v).0 } else { run(&u, &pp).0 };
            pp.weights[0][1] -= 2.0 * h;
            let dn = if ni == 0 { run(&pp, &v).0 } else { run(&u, &pp).0 };
            let fd = (up - dn) / (2.0 * h);
            let got = grads.nets[ni].weights[0][1];
            assert!(close(got, fd, 1e-4, 1e-8), "net {ni}: {got} vs {fd}");
        }
    }

    #[test]
    fn gradients_are_bitwise_deterministic() {
        let p = MlpParams::new(&[2, 6, 1], InitScheme::Xavier, 5).unwrap();
        let pts = [[0.3, 0.4], [0.6, 0.2], [0.1, 0.9]];
        let run = || physics_loss(&[&p], &[0.25], &pts, &pts[..1]);
        let (l1, g1) = run();
        let (l2, g2) = run();
        assert_eq!(l1.to_bits(), l2.to_bits());
        assert_eq!(g1, g2);
    }

    #[test]
    fn out_of_range_references_are_rejected() {
        let p = MlpParams::new(&[2, 4, 1], InitScheme::Xavier, 0).unwrap();
        let res = loss_param_grad(&[&p], &[1.0], |t| t.scalar(1));
        assert!(res.is_err());
        let res = loss_param_grad(&[&p], &[], |t| Ok(t.jet(1, &[0.0, 0.0])?.value));
        assert!(res.is_err());
    }
}
