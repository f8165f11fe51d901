//! Alternating least squares for CP, DEDICOM and PARATUCK2.
//!
//! One sweep updates every factor block once, in model order. Blocks that
//! enter the model linearly get the exact least-squares solution with the
//! other blocks fixed. Normal matrices are inverted with a symmetric
//! pseudoinverse, so rank-deficient subproblems return the minimum-norm
//! solution instead of failing.
//!
//! DEDICOM is the exception on two counts. Its `A` update follows the
//! ASALSAN linearization (the previous `A` stands in on the right-hand
//! side, using both `X_k` and `X_kᵀ`), so it can raise the loss. Each
//! `D_k` appears twice in its slice, so the diagonal update is a nonlinear
//! least-squares problem, solved by damped Gauss-Newton iterations that
//! never increase the slice residual.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{pack, unpack, Factors, ModelSpec, ParamVector};
use crate::numdiff::Objective;
use crate::optim::Method;
use crate::tensor::{khatri_rao_chain, unfold, DenseTensor};

/// Relative eigenvalue cutoff of the pseudoinverse.
pub const PINV_CUTOFF: f64 = 1e-12;

/// Pseudoinverse of a symmetric positive semidefinite matrix.
pub fn pinv_sym(g: &DMatrix<f64>) -> DMatrix<f64> {
    let n = g.nrows();
    let sym = (g + g.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut out = DMatrix::zeros(n, n);
    if top == 0.0 {
        return out;
    }
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() > PINV_CUTOFF * top {
            let v = eig.eigenvectors.column(i);
            out += (v * v.transpose()) / lambda;
        }
    }
    out
}

fn check(target: &DenseTensor, i: usize, j: usize, k: usize) -> Result<()> {
    if target.dims() != [i, j, k] {
        return Err(Error::shape(format!(
            "factors describe a {:?} tensor, target is {:?}",
            [i, j, k],
            target.dims()
        )));
    }
    Ok(())
}

fn diag_row(d: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    DMatrix::from_diagonal(&d.row(k).transpose())
}

fn finite(blocks: &[&DMatrix<f64>]) -> Result<()> {
    if blocks.iter().all(|m| m.iter().all(|v| v.is_finite())) {
        Ok(())
    } else {
        Err(Error::NonFinite("ALS update"))
    }
}

// ---- CP ----

/// Least-squares update of CP factor `mode` with the other two fixed.
pub fn cp_update_factor(factors: &[DMatrix<f64>; 3], target: &DenseTensor, mode: usize) -> Result<DMatrix<f64>> {
    if mode > 2 {
        return Err(Error::InvalidMode { mode, order: 3 });
    }
    let others: Vec<&DMatrix<f64>> = (0..3).filter(|&m| m != mode).map(|m| &factors[m]).collect();
    let kr = khatri_rao_chain(&others)?;
    let gram = (others[0].transpose() * others[0]).component_mul(&(others[1].transpose() * others[1]));
    Ok(unfold(target, mode)? * kr * pinv_sym(&gram))
}

/// One CP sweep: factors 0, 1, 2 in turn.
pub fn als_cp_step(factors: &[DMatrix<f64>; 3], target: &DenseTensor) -> Result<[DMatrix<f64>; 3]> {
    check(target, factors[0].nrows(), factors[1].nrows(), factors[2].nrows())?;
    let mut f = factors.clone();
    for mode in 0..3 {
        f[mode] = cp_update_factor(&f, target, mode)?;
    }
    finite(&[&f[0], &f[1], &f[2]])?;
    Ok(f)
}

// ---- DEDICOM ----

/// ASALSAN update of `A` with `H`, `D` and the right-hand `A` held at their current values.
pub fn dedicom_update_a(a: &DMatrix<f64>, h: &DMatrix<f64>, d: &DMatrix<f64>, slices: &[DMatrix<f64>]) -> DMatrix<f64> {
    let r = a.ncols();
    let mut lhs = DMatrix::zeros(a.nrows(), r);
    let mut gram = DMatrix::zeros(r, r);
    for (k, x) in slices.iter().enumerate() {
        let dk = diag_row(d, k);
        let f = &dk * h * &dk * a.transpose();
        let g = &dk * h.transpose() * &dk * a.transpose();
        lhs += x * f.transpose() + x.transpose() * g.transpose();
        gram += &f * f.transpose() + &g * g.transpose();
    }
    lhs * pinv_sym(&gram)
}

/// Exact least-squares `H` given `A` and the diagonals.
pub fn dedicom_update_h(a: &DMatrix<f64>, d: &DMatrix<f64>, slices: &[DMatrix<f64>]) -> DMatrix<f64> {
    let r = a.ncols();
    let ata = a.transpose() * a;
    let mut normal = DMatrix::zeros(r * r, r * r);
    let mut rhs = DVector::zeros(r * r);
    for (k, x) in slices.iter().enumerate() {
        let dk = diag_row(d, k);
        let s = &dk * &ata * &dk;
        normal += s.kronecker(&s);
        let m = &dk * a.transpose() * x * a * &dk;
        rhs += DVector::from_column_slice(m.as_slice());
    }
    let v = pinv_sym(&normal) * rhs;
    DMatrix::from_column_slice(r, r, v.as_slice())
}

fn dedicom_slice_sq(a: &DMatrix<f64>, h: &DMatrix<f64>, d: &DVector<f64>, x: &DMatrix<f64>) -> f64 {
    let m = a * DMatrix::from_diagonal(d);
    (x - &m * h * m.transpose()).norm_squared()
}

/// Gauss-Newton on the `R` diagonal entries of one DEDICOM slice.
///
/// Every accepted iterate lowers the slice residual, so the result is never
/// worse than `d0`. Stops at a stationary point of the slice residual.
pub fn dedicom_update_diagonal(a: &DMatrix<f64>, h: &DMatrix<f64>, d0: &DVector<f64>, x: &DMatrix<f64>) -> DVector<f64> {
    let (n, r) = (a.nrows(), a.ncols());
    let mut d = d0.clone();
    let mut cur = dedicom_slice_sq(a, h, &d, x);
    for _ in 0..100 {
        let m = a * DMatrix::from_diagonal(&d);
        let res = x - &m * h * m.transpose();
        let hm = h * m.transpose();
        let mh = &m * h;
        let mut jac = DMatrix::zeros(n * n, r);
        for c in 0..r {
            let col = a.column(c) * hm.row(c) + mh.column(c) * a.column(c).transpose();
            jac.column_mut(c).copy_from_slice(col.as_slice());
        }
        let jtr = jac.transpose() * DVector::from_column_slice(res.as_slice());
        let gn = jac.transpose() * &jac;
        // exact Hessian when it is positive definite, Gauss-Newton otherwise
        let curv = h.component_mul(&(a.transpose() * &res * a));
        let step = match (&gn - &curv - curv.transpose()).cholesky() {
            Some(ch) => ch.solve(&jtr),
            None => pinv_sym(&gn) * &jtr,
        };
        if step.norm() <= 1e-14 * (1.0 + d.norm()) {
            break;
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = &d + &step * t;
            let v = dedicom_slice_sq(a, h, &trial, x);
            if v <= cur {
                d = trial;
                cur = v;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    d
}

/// One DEDICOM sweep: `A`, then `H`, then every `D_k`.
pub fn als_dedicom_step(
    a: &DMatrix<f64>,
    h: &DMatrix<f64>,
    d: &DMatrix<f64>,
    target: &DenseTensor,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    check(target, a.nrows(), a.nrows(), d.nrows())?;
    let slices = target.frontal_slices();
    let a = dedicom_update_a(a, h, d, &slices);
    let h = dedicom_update_h(&a, d, &slices);
    let rows: Vec<DVector<f64>> = slices
        .par_iter()
        .enumerate()
        .map(|(k, x)| dedicom_update_diagonal(&a, &h, &d.row(k).transpose(), x))
        .collect();
    let mut d_new = d.clone();
    for (k, row) in rows.iter().enumerate() {
        d_new.row_mut(k).copy_from(&row.transpose());
    }
    finite(&[&a, &h, &d_new])?;
    Ok((a, h, d_new))
}

// ---- PARATUCK2 ----

/// Current PARATUCK2 blocks, borrowed.
#[derive(Debug, Clone, Copy)]
pub struct Paratuck2Blocks<'a> {
    pub a: &'a DMatrix<f64>,
    pub da: &'a DMatrix<f64>,
    pub h: &'a DMatrix<f64>,
    pub db: &'a DMatrix<f64>,
    pub b: &'a DMatrix<f64>,
}

pub fn paratuck2_update_a(m: Paratuck2Blocks<'_>, slices: &[DMatrix<f64>]) -> DMatrix<f64> {
    let p = m.a.ncols();
    let mut lhs = DMatrix::zeros(m.a.nrows(), p);
    let mut gram = DMatrix::zeros(p, p);
    for (k, x) in slices.iter().enumerate() {
        let f = diag_row(m.da, k) * m.h * diag_row(m.db, k) * m.b.transpose();
        lhs += x * f.transpose();
        gram += &f * f.transpose();
    }
    lhs * pinv_sym(&gram)
}

pub fn paratuck2_update_da(m: Paratuck2Blocks<'_>, slices: &[DMatrix<f64>]) -> DMatrix<f64> {
    let ata = m.a.transpose() * m.a;
    let mut out = m.da.clone();
    for (k, x) in slices.iter().enumerate() {
        let mm = m.h * diag_row(m.db, k) * m.b.transpose();
        let gram = ata.component_mul(&(&mm * mm.transpose()));
        let rhs = (m.a.transpose() * x * mm.transpose()).diagonal();
        out.row_mut(k).copy_from(&(pinv_sym(&gram) * rhs).transpose());
    }
    out
}

pub fn paratuck2_update_h(m: Paratuck2Blocks<'_>, slices: &[DMatrix<f64>]) -> DMatrix<f64> {
    let (p, q) = (m.a.ncols(), m.b.ncols());
    let ata = m.a.transpose() * m.a;
    let btb = m.b.transpose() * m.b;
    let mut normal = DMatrix::zeros(p * q, p * q);
    let mut rhs = DVector::zeros(p * q);
    for (k, x) in slices.iter().enumerate() {
        let (dak, dbk) = (diag_row(m.da, k), diag_row(m.db, k));
        normal += (&dbk * &btb * &dbk).kronecker(&(&dak * &ata * &dak));
        let r = &dak * m.a.transpose() * x * m.b * &dbk;
        rhs += DVector::from_column_slice(r.as_slice());
    }
    let v = pinv_sym(&normal) * rhs;
    DMatrix::from_column_slice(p, q, v.as_slice())
}

pub fn paratuck2_update_db(m: Paratuck2Blocks<'_>, slices: &[DMatrix<f64>]) -> DMatrix<f64> {
    let btb = m.b.transpose() * m.b;
    let mut out = m.db.clone();
    for (k, x) in slices.iter().enumerate() {
        let n = m.a * diag_row(m.da, k) * m.h;
        let gram = (n.transpose() * &n).component_mul(&btb);
        let rhs = (n.transpose() * x * m.b).diagonal();
        out.row_mut(k).copy_from(&(pinv_sym(&gram) * rhs).transpose());
    }
    out
}

pub fn paratuck2_update_b(m: Paratuck2Blocks<'_>, slices: &[DMatrix<f64>]) -> DMatrix<f64> {
    let q = m.b.ncols();
    let mut lhs = DMatrix::zeros(m.b.nrows(), q);
    let mut gram = DMatrix::zeros(q, q);
    for (k, x) in slices.iter().enumerate() {
        let g = diag_row(m.db, k) * m.h.transpose() * diag_row(m.da, k) * m.a.transpose();
        lhs += x.transpose() * g.transpose();
        gram += &g * g.transpose();
    }
    lhs * pinv_sym(&gram)
}

/// One PARATUCK2 sweep over `A`, `DA`, `H`, `DB`, `B`.
#[allow(clippy::type_complexity)]
pub fn als_paratuck2_step(
    a: &DMatrix<f64>,
    da: &DMatrix<f64>,
    h: &DMatrix<f64>,
    db: &DMatrix<f64>,
    b: &DMatrix<f64>,
    target: &DenseTensor,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    check(target, a.nrows(), b.nrows(), da.nrows())?;
    let slices = target.frontal_slices();
    let (mut a, mut da, mut h, mut db, mut b) = (a.clone(), da.clone(), h.clone(), db.clone(), b.clone());
    macro_rules! blocks {
        () => {
            Paratuck2Blocks { a: &a, da: &da, h: &h, db: &db, b: &b }
        };
    }
    a = paratuck2_update_a(blocks!(), &slices);
    da = paratuck2_update_da(blocks!(), &slices);
    h = paratuck2_update_h(blocks!(), &slices);
    db = paratuck2_update_db(blocks!(), &slices);
    b = paratuck2_update_b(blocks!(), &slices);
    finite(&[&a, &da, &h, &db, &b])?;
    Ok((a, da, h, db, b))
}

/// One sweep of whichever family `x` belongs to.
pub fn als_step(x: &ParamVector, target: &DenseTensor) -> Result<ParamVector> {
    let factors = match unpack(x) {
        Factors::Cp(f) => Factors::Cp(als_cp_step(&f, target)?),
        Factors::Dedicom { a, h, d } => {
            let (a, h, d) = als_dedicom_step(&a, &h, &d, target)?;
            Factors::Dedicom { a, h, d }
        }
        Factors::Paratuck2 { a, da, h, db, b } => {
            let (a, da, h, db, b) = als_paratuck2_step(&a, &da, &h, &db, &b, target)?;
            Factors::Paratuck2 { a, da, h, db, b }
        }
    };
    pack(x.spec(), &factors)
}

/// ALS as a driver method; one iteration is one full sweep.
pub(crate) struct AlsMethod<'a> {
    spec: ModelSpec,
    target: &'a DenseTensor,
}

impl<'a> AlsMethod<'a> {
    pub(crate) fn new(spec: ModelSpec, target: &'a DenseTensor) -> Self {
        Self { spec, target }
    }
}

impl Method for AlsMethod<'_> {
    fn step(&mut self, x: &mut [f64], _loss: f64) -> Result<f64> {
        let current = ParamVector::new(self.spec, x.to_vec())?;
        let next = als_step(&current, self.target)?;
        x.copy_from_slice(next.values());
        Ok(crate::models::TensorObjective::new(self.spec, self.target)?.eval(x))
    }
}
