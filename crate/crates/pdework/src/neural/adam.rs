//! Adam optimizer over network and scalar parameters.

use crate::error::{Error, Result};
use crate::neural::mlp::{GradientSet, MlpParams};

/// Step size and moment decay rates. The defaults are the customary
/// ones; only `alpha` tends to need tuning.
#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            alpha: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates, shaped like the gradients they
/// smooth. `t` counts completed steps and drives bias correction.
#[derive(Debug, Clone)]
pub struct AdamState {
    cfg: AdamConfig,
    t: u64,
    m: GradientSet,
    v: GradientSet,
}

impl AdamState {
    pub fn new(cfg: AdamConfig, nets: &[&MlpParams], n_scalars: usize) -> Self {
        AdamState {
            cfg,
            t: 0,
            m: GradientSet::zeros(nets, n_scalars),
            v: GradientSet::zeros(nets, n_scalars),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    pub fn config(&self) -> AdamConfig {
        self.cfg
    }

    /// One update: refresh the moment estimates with `grads`, correct
    /// their startup bias, and move every parameter against its
    /// rescaled gradient.
    pub fn step(
        &mut self,
        nets: &mut [MlpParams],
        scalars: &mut [f64],
        grads: &GradientSet,
    ) -> Result<()> {
        self.check_shapes(nets, scalars, grads)?;
        self.t += 1;
        let c1 = 1.0 - self.cfg.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.cfg.beta2.powi(self.t as i32);
        let cfg = self.cfg;

        let update = |theta: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *theta -= cfg.alpha * m_hat / (v_hat.sqrt() + cfg.eps);
        };

        for (ni, net) in nets.iter_mut().enumerate() {
            for l in 0..net.weights.len() {
                for idx in 0..net.weights[l].len() {
                    update(
                        &mut net.weights[l][idx],
                        &mut self.m.nets[ni].weights[l][idx],
                        &mut self.v.nets[ni].weights[l][idx],
                        grads.nets[ni].weights[l][idx],
                    );
                }
                for idx in 0..net.biases[l].len() {
                    update(
                        &mut net.biases[l][idx],
                        &mut self.m.nets[ni].biases[l][idx],
                        &mut self.v.nets[ni].biases[l][idx],
                        grads.nets[ni].biases[l][idx],
                    );
                }
            }
        }
        for (i, s) in scalars.iter_mut().enumerate() {
            update(s, &mut self.m.scalars[i], &mut self.v.scalars[i], grads.scalars[i]);
        }
        Ok(())
    }

    fn check_shapes(
        &self,
        nets: &[MlpParams],
        scalars: &[f64],
        grads: &GradientSet,
    ) -> Result<()> {
        if nets.len() != self.m.nets.len()
            || grads.nets.len() != self.m.nets.len()
            || scalars.len() != self.m.scalars.len()
            || grads.scalars.len() != self.m.scalars.len()
        {
            return Err(Error::Structural(
                "optimizer state does not match the parameter set".into(),
            ));
        }
        for (ni, net) in nets.iter().enumerate() {
            let st = &self.m.nets[ni];
            let gr = &grads.nets[ni];
            if net.weights.len() != st.weights.len() || net.weights.len() != gr.weights.len() {
                return Err(Error::Structural(format!(
                    "network {ni} layer count changed under the optimizer"
                )));
            }
            for l in 0..net.weights.len() {
                if net.weights[l].len() != st.weights[l].len()
                    || net.weights[l].len() != gr.weights[l].len()
                    || net.biases[l].len() != st.biases[l].len()
                    || net.biases[l].len() != gr.biases[l].len()
                {
                    return Err(Error::Structural(format!(
                        "network {ni} layer {l} shape changed under the optimizer"
                    )));
                }
            }
        }
        Ok(())
    }
}
