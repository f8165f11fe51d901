//! Strong Wolfe line search (bracketing followed by a cubic-interpolation zoom).
//!
//! Along `φ(α) = f(x + α p)` an accepted step satisfies
//!
//! * sufficient decrease: `φ(α) ≤ φ(0) + c1 α φ'(0)`
//! * strong curvature: `|φ'(α)| ≤ c2 |φ'(0)|`
//!
//! Directional derivatives are full-gradient dot products `pᵀ∇f`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numdiff::dot;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WolfeParams {
    pub c1: f64,
    pub c2: f64,
    pub alpha_init: f64,
    pub alpha_max: f64,
    pub max_evals: usize,
}

impl Default for WolfeParams {
    fn default() -> Self {
        Self::newton()
    }
}

impl WolfeParams {
    /// Loose curvature bound for Newton and quasi-Newton directions.
    pub fn newton() -> Self {
        Self {
            c1: 1e-4,
            c2: 0.9,
            alpha_init: 1.0,
            alpha_max: 1e3,
            max_evals: 60,
        }
    }

    /// Tight curvature bound for nonlinear conjugate gradient directions.
    pub fn ncg() -> Self {
        Self {
            c2: 0.1,
            ..Self::newton()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = 0.0 < self.c1
            && self.c1 < self.c2
            && self.c2 < 1.0
            && self.alpha_init > 0.0
            && self.alpha_max >= self.alpha_init
            && self.max_evals > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid Wolfe parameters {self:?}")))
        }
    }
}

#[derive(Debug, Clone)]
pub struct LineSearchOutcome {
    pub alpha: f64,
    pub f_new: f64,
    /// Gradient at `x + alpha p` when the search evaluated it.
    pub grad_new: Option<Vec<f64>>,
    /// Objective plus gradient evaluations spent.
    pub evals: usize,
    /// Set when only a decrease (not the strong curvature condition) was certified.
    pub weak: bool,
}

#[derive(Clone)]
struct Point {
    alpha: f64,
    phi: f64,
    dphi: Option<f64>,
    grad: Option<Vec<f64>>,
}

struct Search<'a, F, G> {
    f: F,
    grad: G,
    x: &'a [f64],
    p: &'a [f64],
    phi0: f64,
    dphi0: f64,
    params: WolfeParams,
    evals: usize,
    best: Option<Point>,
    trial: Vec<f64>,
}

impl<F, G> Search<'_, F, G>
where
    F: FnMut(&[f64]) -> f64,
    G: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    fn move_to(&mut self, alpha: f64) {
        for ((t, x), p) in self.trial.iter_mut().zip(self.x).zip(self.p) {
            *t = x + alpha * p;
        }
    }

    fn value(&mut self, alpha: f64) -> f64 {
        self.move_to(alpha);
        self.evals += 1;
        let v = (self.f)(&self.trial);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    }

    fn slope(&mut self, pt: &mut Point) -> Result<f64> {
        self.move_to(pt.alpha);
        self.evals += 1;
        let g = (self.grad)(&self.trial)?;
        let d = dot(&g, self.p);
        pt.dphi = Some(d);
        pt.grad = Some(g);
        Ok(d)
    }

    fn armijo(&self, alpha: f64, phi: f64) -> bool {
        phi <= self.phi0 + self.params.c1 * alpha * self.dphi0
    }

    fn curvature(&self, dphi: f64) -> bool {
        dphi.abs() <= self.params.c2 * self.dphi0.abs()
    }

    fn note(&mut self, pt: &Point) {
        if pt.phi < self.phi0 && self.best.as_ref().is_none_or(|b| pt.phi < b.phi) {
            self.best = Some(pt.clone());
        }
    }

    fn accept(&self, pt: Point) -> Result<LineSearchOutcome> {
        let dphi = pt.dphi.expect("accepted point has a slope");
        if !(self.armijo(pt.alpha, pt.phi) && self.curvature(dphi)) {
            return Err(Error::Internal(format!(
                "step {} failed strong Wolfe re-verification",
                pt.alpha
            )));
        }
        Ok(LineSearchOutcome {
            alpha: pt.alpha,
            f_new: pt.phi,
            grad_new: pt.grad,
            evals: self.evals,
            weak: false,
        })
    }

    fn give_up(self) -> Result<LineSearchOutcome> {
        match self.best {
            Some(b) => Ok(LineSearchOutcome {
                alpha: b.alpha,
                f_new: b.phi,
                grad_new: b.grad,
                evals: self.evals,
                weak: true,
            }),
            None => Err(Error::LineSearchFailed { evals: self.evals }),
        }
    }

    fn run(mut self) -> Result<LineSearchOutcome> {
        let mut prev = Point {
            alpha: 0.0,
            phi: self.phi0,
            dphi: Some(self.dphi0),
            grad: None,
        };
        let mut alpha = self.params.alpha_init.min(self.params.alpha_max);
        let mut first = true;
        loop {
            let phi = self.value(alpha);
            let mut cur = Point {
                alpha,
                phi,
                dphi: None,
                grad: None,
            };
            if !self.armijo(alpha, phi) || (!first && phi >= prev.phi) {
                self.note(&cur);
                return self.zoom(prev, cur);
            }
            let dphi = self.slope(&mut cur)?;
            self.note(&cur);
            if self.curvature(dphi) {
                return self.accept(cur);
            }
            if dphi >= 0.0 {
                return self.zoom(cur, prev);
            }
            if alpha >= self.params.alpha_max || self.evals >= self.params.max_evals {
                return self.give_up();
            }
            let lo = alpha + 0.01 * (alpha - prev.alpha);
            let next = cubic_min(&prev, &cur)
                .unwrap_or(2.0 * alpha)
                .clamp(lo, 10.0 * alpha)
                .min(self.params.alpha_max);
            prev = cur;
            alpha = next;
            first = false;
        }
    }

    /// `lo` satisfies sufficient decrease with the lowest value seen; the
    /// minimizer sought lies between `lo` and `hi`.
    fn zoom(mut self, mut lo: Point, mut hi: Point) -> Result<LineSearchOutcome> {
        while self.evals < self.params.max_evals {
            let (a, b) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
            let width = b - a;
            if width <= 1e-14 * b.max(1.0) {
                break;
            }
            let margin = 0.1 * width;
            let alpha = interpolate(&lo, &hi)
                .filter(|t| *t >= a + margin && *t <= b - margin)
                .unwrap_or(0.5 * (a + b));
            let phi = self.value(alpha);
            let mut cur = Point {
                alpha,
                phi,
                dphi: None,
                grad: None,
            };
            if !self.armijo(alpha, phi) || phi >= lo.phi {
                self.note(&cur);
                hi = cur;
                continue;
            }
            let dphi = self.slope(&mut cur)?;
            self.note(&cur);
            if self.curvature(dphi) {
                return self.accept(cur);
            }
            if dphi * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
        self.give_up()
    }
}

fn interpolate(lo: &Point, hi: &Point) -> Option<f64> {
    if !hi.phi.is_finite() {
        return None;
    }
    match (lo.dphi, hi.dphi) {
        (Some(_), Some(_)) => cubic_min(lo, hi),
        (Some(d), None) => quadratic_min(lo.alpha, lo.phi, d, hi.alpha, hi.phi),
        (None, Some(d)) => quadratic_min(hi.alpha, hi.phi, d, lo.alpha, lo.phi),
        (None, None) => None,
    }
}

/// Minimizer of the cubic through two points with known slopes.
fn cubic_min(a: &Point, b: &Point) -> Option<f64> {
    let (ga, gb) = (a.dphi?, b.dphi?);
    let (x1, x2) = (a.alpha, b.alpha);
    if x1 == x2 {
        return None;
    }
    let d1 = ga + gb - 3.0 * (a.phi - b.phi) / (x1 - x2);
    let disc = d1 * d1 - ga * gb;
    if disc < 0.0 {
        return None;
    }
    let d2 = (x2 - x1).signum() * disc.sqrt();
    let denom = gb - ga + 2.0 * d2;
    if denom == 0.0 {
        return None;
    }
    let t = x2 - (x2 - x1) * (gb + d2 - d1) / denom;
    t.is_finite().then_some(t)
}

/// Minimizer of the quadratic matching value and slope at `a` and value at `b`.
fn quadratic_min(a: f64, fa: f64, ga: f64, b: f64, fb: f64) -> Option<f64> {
    let h = b - a;
    let curv = (fb - fa - ga * h) / (h * h);
    if curv <= 0.0 || !curv.is_finite() {
        return None;
    }
    Some(a - ga / (2.0 * curv))
}

/// Strong Wolfe search from `x` along `p`, evaluating `f` and `∇f` at `x` first.
pub fn strong_wolfe<F, G>(
    mut f: F,
    mut grad: G,
    x: &[f64],
    p: &[f64],
    params: &WolfeParams,
) -> Result<LineSearchOutcome>
where
    F: FnMut(&[f64]) -> f64,
    G: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let f0 = f(x);
    let g0 = grad(x)?;
    strong_wolfe_from(f, grad, x, f0, &g0, p, params)
}

/// Strong Wolfe search when `f(x)` and `∇f(x)` are already known.
///
/// Fails with [`Error::NotDescent`] unless `pᵀ∇f(x) < 0`.
pub fn strong_wolfe_from<F, G>(
    f: F,
    grad: G,
    x: &[f64],
    f0: f64,
    g0: &[f64],
    p: &[f64],
    params: &WolfeParams,
) -> Result<LineSearchOutcome>
where
    F: FnMut(&[f64]) -> f64,
    G: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    params.validate()?;
    if !f0.is_finite() {
        return Err(Error::NonFinite("line search start value"));
    }
    let dphi0 = dot(g0, p);
    if !(dphi0 < 0.0) {
        return Err(Error::NotDescent(dphi0));
    }
    Search {
        f,
        grad,
        x,
        p,
        phi0: f0,
        dphi0,
        params: *params,
        evals: 0,
        best: None,
        trial: x.to_vec(),
    }
    .run()
}

/// Armijo backtracking: halves the step until sufficient decrease holds.
pub fn backtracking<F>(
    mut f: F,
    x: &[f64],
    f0: f64,
    dphi0: f64,
    p: &[f64],
    alpha0: f64,
    c1: f64,
    max_evals: usize,
) -> Result<(f64, f64)>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(dphi0 < 0.0) {
        return Err(Error::NotDescent(dphi0));
    }
    let mut alpha = alpha0;
    let mut trial = x.to_vec();
    for _ in 0..max_evals {
        for ((t, xi), pi) in trial.iter_mut().zip(x).zip(p) {
            *t = xi + alpha * pi;
        }
        let v = f(&trial);
        if v.is_finite() && v <= f0 + c1 * alpha * dphi0 && v < f0 {
            return Ok((alpha, v));
        }
        alpha *= 0.5;
    }
    Err(Error::LineSearchFailed { evals: max_evals })
}
