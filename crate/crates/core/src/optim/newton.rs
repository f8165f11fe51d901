//! Truncated Newton with finite-difference Hessian-vector products.
//!
//! Each outer iteration approximately solves `∇²f p = −∇f` with linear
//! conjugate gradient, where every Hessian product comes from
//! differencing gradients, then line-searches along `p` under the strong
//! Wolfe conditions.

use crate::error::Result;
use crate::linesearch::{backtracking, strong_wolfe_from};
use crate::numdiff::{dot, hessian_vector_at, norm, Objective};

use super::{Method, OptimizerConfig};

/// Conjugate gradient on `H p = −g`, starting from `p0 = −g`.
///
/// Stops when `‖H p + g‖ ≤ sigma ‖g‖` or after `max_iter` CG iterations.
/// If a search direction has non-positive curvature the current iterate is
/// returned as is; a failed or non-finite Hessian product yields `−g`.
pub fn cg_inner<H>(grad: &[f64], mut hvp: H, max_iter: usize, sigma: f64) -> Vec<f64>
where
    H: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let gnorm = norm(grad);
    let steepest: Vec<f64> = grad.iter().map(|g| -g).collect();
    if gnorm == 0.0 {
        return steepest;
    }
    let tol = sigma * gnorm;
    let mut hv = |v: &[f64]| hvp(v).ok().filter(|h| h.iter().all(|x| x.is_finite()));

    let mut p = steepest.clone();
    let Some(hp) = hv(&p) else {
        return steepest;
    };
    let mut r: Vec<f64> = hp.iter().zip(grad).map(|(a, b)| a + b).collect();
    let mut rr = dot(&r, &r);
    if rr.sqrt() <= tol {
        return p;
    }
    let mut d: Vec<f64> = r.iter().map(|v| -v).collect();
    for _ in 0..max_iter {
        let Some(hd) = hv(&d) else {
            return steepest;
        };
        let curvature = dot(&d, &hd);
        if !(curvature > 0.0) {
            return p;
        }
        let step = rr / curvature;
        for (pi, di) in p.iter_mut().zip(&d) {
            *pi += step * di;
        }
        for (ri, hi) in r.iter_mut().zip(&hd) {
            *ri += step * hi;
        }
        let rr_next = dot(&r, &r);
        if rr_next.sqrt() <= tol {
            break;
        }
        let beta = rr_next / rr;
        rr = rr_next;
        for (di, ri) in d.iter_mut().zip(&r) {
            *di = -ri + beta * *di;
        }
    }
    p
}

pub(crate) struct TruncatedNewton<'a, O: ?Sized> {
    f: &'a O,
    cfg: &'a OptimizerConfig,
    /// Gradient at the current iterate, when already known.
    grad: Option<Vec<f64>>,
}

impl<'a, O: Objective + ?Sized> TruncatedNewton<'a, O> {
    pub(crate) fn new(f: &'a O, cfg: &'a OptimizerConfig) -> Self {
        Self { f, cfg, grad: None }
    }
}

impl<O: Objective + ?Sized> Method for TruncatedNewton<'_, O> {
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
        let (f, fd) = (self.f, self.cfg.fd);
        let grad_eta = fd.gradient_eta(x);
        let here: &[f64] = x;
        let mut p = cg_inner(
            &g,
            |v| hessian_vector_at(f, here, &g, v, fd.hv_eta(v), grad_eta),
            self.cfg.cg_max_iter,
            self.cfg.cg_sigma,
        );
        if !(dot(&p, &g) < 0.0) {
            p = g.iter().map(|v| -v).collect();
        }
        let outcome = strong_wolfe_from(
            |y| f.eval(y),
            |y| fd.gradient(f, y),
            x,
            loss,
            &g,
            &p,
            &self.cfg.wolfe,
        );
        match outcome {
            Ok(ls) => {
                for (xi, pi) in x.iter_mut().zip(&p) {
                    *xi += ls.alpha * pi;
                }
                self.grad = ls.grad_new;
                Ok(ls.f_new)
            }
            Err(_) => {
                // steepest-descent fallback
                let sd: Vec<f64> = g.iter().map(|v| -v).collect();
                let (alpha, f_new) = backtracking(
                    |y| f.eval(y),
                    x,
                    loss,
                    -dot(&g, &g),
                    &sd,
                    1.0,
                    self.cfg.wolfe.c1,
                    self.cfg.wolfe.max_evals,
                )?;
                for (xi, di) in x.iter_mut().zip(&sd) {
                    *xi += alpha * di;
                }
                Ok(f_new)
            }
        }
    }
}
