//! Nonlinear conjugate gradient (Hestenes-Stiefel) and limited-memory BFGS.
//!
//! Both search along their direction with the strong Wolfe line search and
//! then take one secant step on `φ'(α)`. The secant step is exact on
//! quadratics, which gives both methods finite termination there; elsewhere
//! it is kept only when it lowers the loss further.

use std::collections::VecDeque;

use crate::error::Result;
use crate::linesearch::{strong_wolfe_from, WolfeParams};
use crate::numdiff::{dot, norm, Objective};

use super::{Method, OptimizerConfig};

struct Accepted {
    alpha: f64,
    f: f64,
    grad: Vec<f64>,
}

/// Line search plus secant refinement along `p` from `x`.
fn search<O: Objective + ?Sized>(
    f: &O,
    cfg: &OptimizerConfig,
    params: &WolfeParams,
    x: &[f64],
    loss: f64,
    g: &[f64],
    p: &[f64],
) -> Result<Accepted> {
    let fd = cfg.fd;
    let ls = strong_wolfe_from(|y| f.eval(y), |y| fd.gradient(f, y), x, loss, g, p, params)?;
    let at = |alpha: f64| -> Vec<f64> { x.iter().zip(p).map(|(a, b)| a + alpha * b).collect() };
    let grad = match ls.grad_new {
        Some(gn) => gn,
        None => fd.gradient(f, &at(ls.alpha))?,
    };
    let mut best = Accepted { alpha: ls.alpha, f: ls.f_new, grad };

    let d0 = dot(g, p);
    let d1 = dot(&best.grad, p);
    let denom = d0 - d1;
    if d1.abs() > 1e-12 * d0.abs() && denom < 0.0 {
        let alpha = best.alpha * d0 / denom;
        if alpha.is_finite() && alpha > 0.0 {
            let y = at(alpha);
            let fy = f.eval(&y);
            if fy.is_finite() && fy < best.f {
                if let Ok(gy) = fd.gradient(f, &y) {
                    best = Accepted { alpha, f: fy, grad: gy };
                }
            }
        }
    }
    Ok(best)
}

fn first_step(params: &WolfeParams, p: &[f64], guess: Option<f64>) -> WolfeParams {
    let pn = norm(p);
    let fallback = if pn > 0.0 { (1.0 / pn).min(1.0) } else { 1.0 };
    let alpha = guess.filter(|a| a.is_finite() && *a > 0.0).unwrap_or(fallback);
    WolfeParams {
        alpha_init: alpha.min(params.alpha_max),
        ..*params
    }
}

pub(crate) struct Ncg<'a, O: ?Sized> {
    f: &'a O,
    cfg: &'a OptimizerConfig,
    grad: Option<Vec<f64>>,
    /// Previous gradient, direction and step.
    prev: Option<(Vec<f64>, Vec<f64>, f64)>,
}

impl<'a, O: Objective + ?Sized> Ncg<'a, O> {
    pub(crate) fn new(f: &'a O, cfg: &'a OptimizerConfig) -> Self {
        Self { f, cfg, grad: None, prev: None }
    }
}

impl<O: Objective + ?Sized> Method for Ncg<'_, O> {
    fn grad_norm(&mut self, x: &[f64]) -> Result<Option<f64>> {
        if self.grad.is_none() {
            self.grad = Some(self.cfg.fd.gradient(self.f, x)?);
        }
        Ok(self.grad.as_deref().map(norm))
    }

    fn step(&mut self, x: &mut [f64], loss: f64) -> Result<f64> {
        let g = match self.grad.take() {
            Some(g) => g,
            None => self.cfg.fd.gradient(self.f, x)?,
        };
        let steepest: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut guess = None;
        let mut p = steepest.clone();
        if let Some((g_prev, d_prev, a_prev)) = &self.prev {
            let y: Vec<f64> = g.iter().zip(g_prev).map(|(a, b)| a - b).collect();
            let dy = dot(d_prev, &y);
            let beta = if dy != 0.0 { dot(&g, &y) / dy } else { 0.0 };
            if beta.is_finite() && beta > 0.0 {
                p = steepest.iter().zip(d_prev).map(|(s, d)| s + beta * d).collect();
            }
            if dot(&p, &g) >= 0.0 {
                p = steepest.clone();
            }
            guess = Some(a_prev * dot(g_prev, d_prev) / dot(&g, &p));
        }
        let params = first_step(&self.cfg.wolfe, &p, guess);
        let acc = search(self.f, self.cfg, &params, x, loss, &g, &p)?;
        for (xi, pi) in x.iter_mut().zip(&p) {
            *xi += acc.alpha * pi;
        }
        self.prev = Some((g, p, acc.alpha));
        self.grad = Some(acc.grad);
        Ok(acc.f)
    }
}

pub(crate) struct Lbfgs<'a, O: ?Sized> {
    f: &'a O,
    cfg: &'a OptimizerConfig,
    grad: Option<Vec<f64>>,
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
}

impl<'a, O: Objective + ?Sized> Lbfgs<'a, O> {
    pub(crate) fn new(f: &'a O, cfg: &'a OptimizerConfig) -> Self {
        Self { f, cfg, grad: None, pairs: VecDeque::new() }
    }

    /// Two-loop recursion: returns `−H g`.
    fn direction(&self, g: &[f64]) -> Vec<f64> {
        let mut q = g.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        q.iter().map(|v| -v).collect()
    }
}

impl<O: Objective + ?Sized> Method for Lbfgs<'_, O> {
    fn grad_norm(&mut self, x: &[f64]) -> Result<Option<f64>> {
        if self.grad.is_none() {
            self.grad = Some(self.cfg.fd.gradient(self.f, x)?);
        }
        Ok(self.grad.as_deref().map(norm))
    }

    fn step(&mut self, x: &mut [f64], loss: f64) -> Result<f64> {
        let g = match self.grad.take() {
            Some(g) => g,
            None => self.cfg.fd.gradient(self.f, x)?,
        };
        let mut p = self.direction(&g);
        let mut params = self.cfg.wolfe;
        if self.pairs.is_empty() || !(dot(&p, &g) < 0.0) {
            self.pairs.clear();
            p = g.iter().map(|v| -v).collect();
            params = first_step(&self.cfg.wolfe, &p, None);
        }
        let acc = search(self.f, self.cfg, &params, x, loss, &g, &p)?;
        let s: Vec<f64> = p.iter().map(|v| acc.alpha * v).collect();
        let y: Vec<f64> = acc.grad.iter().zip(&g).map(|(a, b)| a - b).collect();
        for (xi, si) in x.iter_mut().zip(&s) {
            *xi += si;
        }
        let sy = dot(&s, &y);
        if sy > 1e-10 * norm(&s) * norm(&y) {
            if self.pairs.len() == self.cfg.history {
                self.pairs.pop_front();
            }
            self.pairs.push_back((s, y, 1.0 / sy));
        }
        self.grad = Some(acc.grad);
        Ok(acc.f)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{run_until_convergence, FakeClock, OptimizerFamily, StopReason};
    use super::*;
    use crate::numdiff::FnObjective;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn quadratic(n: usize, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let a = &m * m.transpose() + DMatrix::identity(n, n);
        let b = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        (a, b)
    }

    fn exact_cfg(family: OptimizerFamily) -> OptimizerConfig {
        OptimizerConfig {
            eps1: f64::NEG_INFINITY,
            eps2: 1e-8,
            decrease_tol: -1.0,
            max_iter: 50,
            ..OptimizerConfig::new(family)
        }
    }

    fn finite_termination(family: OptimizerFamily) {
        for seed in 0..5 {
            let (a, b) = quadratic(5, seed);
            let f = FnObjective::new(5, |x: &[f64]| {
                let x = DVector::from_column_slice(x);
                0.5 * x.dot(&(&a * &x)) - b.dot(&x)
            });
            let cfg = exact_cfg(family);
            let (x, r) = run_until_convergence(&f, &[0.0; 5], &cfg, &FakeClock::new(0.0)).unwrap();
            assert_eq!(r.stop_reason, StopReason::GradBelowEps2, "{family} seed {seed}: {r:?}");
            assert!(r.iterations <= 7, "{family} seed {seed} took {}", r.iterations);
            let sol = a.clone().lu().solve(&b).unwrap();
            assert!((DVector::from_vec(x) - sol).norm() < 1e-6);
        }
    }

    #[test]
    fn ncg_terminates_on_quadratic() {
        finite_termination(OptimizerFamily::Ncg);
    }

    #[test]
    fn lbfgs_terminates_on_quadratic() {
        finite_termination(OptimizerFamily::Lbfgs);
    }

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn rosenbrock_is_solved() {
        let f = FnObjective::new(2, rosenbrock);
        for family in [OptimizerFamily::Ncg, OptimizerFamily::Lbfgs] {
            let cfg = OptimizerConfig { eps2: 1e-6, max_iter: 500, ..exact_cfg(family) };
            let (x, r) = run_until_convergence(&f, &[-1.2, 1.0], &cfg, &FakeClock::new(0.0)).unwrap();
            assert!((x[0] - 1.0).abs() < 1e-4 && (x[1] - 1.0).abs() < 1e-4, "{family}: {x:?} {r:?}");
            let monotone = r.loss_history.windows(2).all(|w| w[1] <= w[0]);
            assert!(monotone, "{family}");
        }
    }

    #[test]
    fn two_loop_with_one_pair_matches_bfgs_update() {
        let f = FnObjective::new(2, |x: &[f64]| x[0] * x[0] + x[1] * x[1]);
        let cfg = OptimizerConfig::new(OptimizerFamily::Lbfgs);
        let mut m = Lbfgs::new(&f, &cfg);
        // s = (1, 0), y = (2, 0): γ = 1/2 and H = diag(1/2, 1/2)
        m.pairs.push_back((vec![1.0, 0.0], vec![2.0, 0.0], 0.5));
        let p = m.direction(&[4.0, 2.0]);
        assert!((p[0] + 2.0).abs() < 1e-15 && (p[1] + 1.0).abs() < 1e-15, "{p:?}");
    }
}
