//! Finite-difference derivatives of black-box objectives.
//!
//! Gradients use the fourth-order central stencil
//!
//! ```text
//! ∂f/∂x_i ≈ (2[f(x − 2η e_i) − f(x + 2η e_i)] + 16[f(x + η e_i) − f(x − η e_i)]) / (4! η)
//! ```
//!
//! and Hessian-vector products difference two such gradients along the
//! direction, `H p ≈ (∇f(x + η p) − ∇f(x)) / η`, so the Hessian itself is
//! never formed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real-valued function of a flat parameter vector.
///
/// Implementations must be deterministic and safe to evaluate from several
/// threads at once; gradient components are evaluated in parallel.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> f64;

    /// Number of terms in the finite-sum split `f(x)^2 = Σ_k component_k(x)`.
    fn components(&self) -> usize {
        1
    }

    /// Term `k` of the split. The default single term is `f(x)^2`.
    fn eval_component(&self, x: &[f64], k: usize) -> f64 {
        debug_assert_eq!(k, 0);
        let v = self.eval(x);
        v * v
    }
}

impl<O: Objective + ?Sized> Objective for &O {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        (**self).eval(x)
    }

    fn components(&self) -> usize {
        (**self).components()
    }

    fn eval_component(&self, x: &[f64], k: usize) -> f64 {
        (**self).eval_component(x, k)
    }
}

/// Wraps a plain closure as an [`Objective`].
pub struct FnObjective<F> {
    dim: usize,
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// Step-size policy for the finite-difference oracles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FdSettings {
    /// Gradient step is `grad_scale * max(1, ‖x‖_∞)`.
    pub grad_scale: f64,
    /// Hessian-vector step is `hv_scale / max(1, ‖p‖_2)`.
    pub hv_scale: f64,
}

impl Default for FdSettings {
    fn default() -> Self {
        Self {
            grad_scale: 1e-5,
            hv_scale: 1e-5,
        }
    }
}

impl FdSettings {
    pub fn gradient_eta(&self, x: &[f64]) -> f64 {
        let inf = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.grad_scale * inf.max(1.0)
    }

    pub fn hv_eta(&self, p: &[f64]) -> f64 {
        self.hv_scale / norm(p).max(1.0)
    }

    pub fn gradient<O: Objective + ?Sized>(&self, f: &O, x: &[f64]) -> Result<Vec<f64>> {
        fd_gradient(f, x, self.gradient_eta(x))
    }
}

/// Fourth-order finite-difference gradient; costs `4 d` evaluations of `f`.
pub fn fd_gradient<O: Objective + ?Sized>(f: &O, x: &[f64], eta: f64) -> Result<Vec<f64>> {
    fd_gradient_fn(|y| f.eval(y), x, eta)
}

/// [`fd_gradient`] over a bare closure.
pub fn fd_gradient_fn<F>(f: F, x: &[f64], eta: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    assert!(eta > 0.0, "finite-difference step must be positive");
    let grad: Vec<f64> = (0..x.len())
        .into_par_iter()
        .with_min_len(4)
        .map_init(
            || x.to_vec(),
            |y, i| {
                let xi = x[i];
                let mut at = |delta: f64| {
                    y[i] = xi + delta;
                    let v = f(y);
                    y[i] = xi;
                    v
                };
                let (m2, p2) = (at(-2.0 * eta), at(2.0 * eta));
                let (p1, m1) = (at(eta), at(-eta));
                (2.0 * (m2 - p2) + 16.0 * (p1 - m1)) / (24.0 * eta)
            },
        )
        .collect();
    if grad.iter().all(|g| g.is_finite()) {
        Ok(grad)
    } else {
        Err(Error::NonFinite("finite-difference gradient"))
    }
}

/// Hessian-vector product by forward-differencing two gradients along `p`.
///
/// Both gradients use the same step `grad_eta`, taken from the policy at `x`.
pub fn hessian_vector<O: Objective + ?Sized>(
    f: &O,
    x: &[f64],
    p: &[f64],
    eta: f64,
) -> Result<Vec<f64>> {
    let settings = FdSettings::default();
    let grad_eta = settings.gradient_eta(x);
    let g = fd_gradient(f, x, grad_eta)?;
    hessian_vector_at(f, x, &g, p, eta, grad_eta)
}

/// [`hessian_vector`] reusing an already computed gradient `grad_x` at `x`.
pub fn hessian_vector_at<O: Objective + ?Sized>(
    f: &O,
    x: &[f64],
    grad_x: &[f64],
    p: &[f64],
    eta: f64,
    grad_eta: f64,
) -> Result<Vec<f64>> {
    assert!(eta > 0.0, "Hessian-vector step must be positive");
    if p.iter().all(|&v| v == 0.0) {
        return Ok(vec![0.0; x.len()]);
    }
    let shifted: Vec<f64> = x.iter().zip(p).map(|(a, b)| a + eta * b).collect();
    let g = fd_gradient(f, &shifted, grad_eta)?;
    let hv: Vec<f64> = g.iter().zip(grad_x).map(|(a, b)| (a - b) / eta).collect();
    if hv.iter().all(|v| v.is_finite()) {
        Ok(hv)
    } else {
        Err(Error::NonFinite("Hessian-vector product"))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
