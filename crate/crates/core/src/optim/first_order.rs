//! Fixed-step first-order update rules: SGD, NAG, Adam, RMSProp, AdaGrad, SAGA.
//!
//! SAGA needs a finite sum. Objectives expose one through
//! [`Objective::eval_component`] as a split of the squared loss,
//! `f(x)^2 = Σ_k c_k(x)`; for tensor losses `c_k` is the squared residual
//! of frontal slice `k`. SAGA keeps a table of the last gradient seen for
//! each `c_k`, samples one term per step, forms the variance-reduced
//! estimate of `∇Σ c_k`, and divides by `2 f(x)` to recover `∇f`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::numdiff::{fd_gradient_fn, Objective};

use super::{Method, OptimizerConfig, OptimizerFamily};

/// Per-run optimizer memory; all vectors start at zero.
#[derive(Debug, Clone)]
pub struct BaselineState {
    /// Step count, used by Adam's bias correction.
    pub t: u64,
    /// Momentum (NAG velocity, Adam first moment).
    pub m: Vec<f64>,
    /// Squared-gradient statistic (Adam second moment, RMSProp average, AdaGrad sum).
    pub v: Vec<f64>,
    saga: Option<SagaTable>,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone)]
struct SagaTable {
    grads: Vec<Vec<f64>>,
    sum: Vec<f64>,
}

impl BaselineState {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self {
            t: 0,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            saga: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

/// Applies one gradient-driven update in place.
///
/// Covers the families whose update is a function of the gradient at `x`
/// alone (SGD, Adam, RMSProp, AdaGrad). NAG and SAGA choose where to
/// evaluate gradients and go through [`baseline_step`].
pub fn apply_gradient(cfg: &OptimizerConfig, state: &mut BaselineState, x: &mut [f64], g: &[f64]) {
    state.t += 1;
    let lr = cfg.lr;
    match cfg.family {
        OptimizerFamily::Adam => {
            let (b1, b2) = (cfg.beta1, cfg.beta2);
            let c1 = 1.0 - b1.powi(state.t as i32);
            let c2 = 1.0 - b2.powi(state.t as i32);
            for i in 0..x.len() {
                state.m[i] = b1 * state.m[i] + (1.0 - b1) * g[i];
                state.v[i] = b2 * state.v[i] + (1.0 - b2) * g[i] * g[i];
                let m_hat = state.m[i] / c1;
                let v_hat = state.v[i] / c2;
                x[i] -= lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
            }
        }
        OptimizerFamily::RmsProp => {
            let rho = cfg.momentum;
            for i in 0..x.len() {
                state.v[i] = rho * state.v[i] + (1.0 - rho) * g[i] * g[i];
                x[i] -= lr * g[i] / (state.v[i].sqrt() + cfg.epsilon);
            }
        }
        OptimizerFamily::AdaGrad => {
            for i in 0..x.len() {
                state.v[i] += g[i] * g[i];
                x[i] -= lr * g[i] / (state.v[i].sqrt() + cfg.epsilon);
            }
        }
        _ => {
            for (xi, gi) in x.iter_mut().zip(g) {
                *xi -= lr * gi;
            }
        }
    }
}

/// One update of any first-order family; `loss` is `f(x)`.
pub fn baseline_step<O: Objective + ?Sized>(
    cfg: &OptimizerConfig,
    state: &mut BaselineState,
    x: &mut [f64],
    loss: f64,
    f: &O,
) -> Result<()> {
    match cfg.family {
        OptimizerFamily::Nag => {
            // v <- γ v + η ∇f(x − γ v);  x <- x − v
            let gamma = cfg.momentum;
            let ahead: Vec<f64> = x.iter().zip(&state.m).map(|(a, v)| a - gamma * v).collect();
            let g = cfg.fd.gradient(f, &ahead)?;
            state.t += 1;
            for i in 0..x.len() {
                state.m[i] = gamma * state.m[i] + cfg.lr * g[i];
                x[i] -= state.m[i];
            }
        }
        OptimizerFamily::Saga => saga_step(cfg, state, x, loss, f)?,
        _ => {
            let g = cfg.fd.gradient(f, x)?;
            apply_gradient(cfg, state, x, &g);
        }
    }
    Ok(())
}

fn component_gradient<O: Objective + ?Sized>(
    cfg: &OptimizerConfig,
    f: &O,
    x: &[f64],
    k: usize,
) -> Result<Vec<f64>> {
    fd_gradient_fn(|y| f.eval_component(y, k), x, cfg.fd.gradient_eta(x))
}

fn saga_step<O: Objective + ?Sized>(
    cfg: &OptimizerConfig,
    state: &mut BaselineState,
    x: &mut [f64],
    loss: f64,
    f: &O,
) -> Result<()> {
    let n = f.components();
    if state.saga.is_none() {
        let grads = (0..n)
            .map(|k| component_gradient(cfg, f, x, k))
            .collect::<Result<Vec<_>>>()?;
        let mut sum = vec![0.0; x.len()];
        for g in &grads {
            for (s, v) in sum.iter_mut().zip(g) {
                *s += v;
            }
        }
        state.saga = Some(SagaTable { grads, sum });
    }
    let j = state.rng.random_range(0..n);
    let fresh = component_gradient(cfg, f, x, j)?;
    let table = state.saga.as_mut().expect("initialized above");
    state.t += 1;
    if loss > 0.0 {
        let scale = cfg.lr / (2.0 * loss);
        for i in 0..x.len() {
            let estimate = n as f64 * (fresh[i] - table.grads[j][i]) + table.sum[i];
            x[i] -= scale * estimate;
        }
    }
    for i in 0..fresh.len() {
        table.sum[i] += fresh[i] - table.grads[j][i];
    }
    table.grads[j] = fresh;
    Ok(())
}

pub(crate) struct FirstOrder<'a, O: ?Sized> {
    f: &'a O,
    cfg: &'a OptimizerConfig,
    state: BaselineState,
}

impl<'a, O: Objective + ?Sized> FirstOrder<'a, O> {
    pub(crate) fn new(f: &'a O, cfg: &'a OptimizerConfig, dim: usize) -> Self {
        Self {
            f,
            cfg,
            state: BaselineState::new(dim, cfg.seed),
        }
    }
}

impl<O: Objective + ?Sized> Method for FirstOrder<'_, O> {
    fn step(&mut self, x: &mut [f64], loss: f64) -> Result<f64> {
        baseline_step(self.cfg, &mut self.state, x, loss, self.f)?;
        Ok(self.f.eval(x))
    }
}
