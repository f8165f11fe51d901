//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tdopt::models::{pack, unpack, Factors, ModelSpec, ParamVector};
use tdopt::tensor::DenseTensor;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(dims: [usize; 3], rng: &mut ChaCha8Rng) -> DenseTensor {
    DenseTensor::from_fn(&dims, |_| rng.random_range(-1.0..1.0)).unwrap()
}

pub fn random_params(spec: &ModelSpec, rng: &mut ChaCha8Rng) -> ParamVector {
    let v = (0..spec.param_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
    ParamVector::new(*spec, v).unwrap()
}

/// Gradient of `‖X − [[A, B, C]]‖` written out entry by entry.
pub fn cp_gradient(x: &ParamVector, target: &DenseTensor) -> Vec<f64> {
    let [i, j, k] = x.spec().dims();
    let r = x.spec().rank();
    let v = x.values();
    let a = |ii: usize, rr: usize| v[rr * i + ii];
    let b = |jj: usize, rr: usize| v[i * r + rr * j + jj];
    let c = |kk: usize, rr: usize| v[(i + j) * r + rr * k + kk];
    let mut res = vec![0.0; i * j * k];
    for ii in 0..i {
        for jj in 0..j {
            for kk in 0..k {
                let model: f64 = (0..r).map(|rr| a(ii, rr) * b(jj, rr) * c(kk, rr)).sum();
                res[(ii * j + jj) * k + kk] = target.get(&[ii, jj, kk]) - model;
            }
        }
    }
    let f = res.iter().map(|e| e * e).sum::<f64>().sqrt();
    let mut g = vec![0.0; v.len()];
    for ii in 0..i {
        for jj in 0..j {
            for kk in 0..k {
                let e = res[(ii * j + jj) * k + kk];
                for rr in 0..r {
                    g[rr * i + ii] -= e * b(jj, rr) * c(kk, rr) / f;
                    g[i * r + rr * j + jj] -= e * a(ii, rr) * c(kk, rr) / f;
                    g[(i + j) * r + rr * k + kk] -= e * a(ii, rr) * b(jj, rr) / f;
                }
            }
        }
    }
    g
}

/// Dense Hessian from second-order central differences of `f`.
pub fn fd_hessian(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> DMatrix<f64> {
    let n = x.len();
    let mut out = DMatrix::zeros(n, n);
    let mut y = x.to_vec();
    let mut at = |di: f64, i: usize, dj: f64, j: usize| {
        y.copy_from_slice(x);
        y[i] += di;
        y[j] += dj;
        f(&y)
    };
    for i in 0..n {
        for j in 0..n {
            let v = (at(h, i, h, j) - at(h, i, -h, j) - at(-h, i, h, j) + at(-h, i, -h, j)) / (4.0 * h * h);
            out[(i, j)] = v;
        }
    }
    (&out + out.transpose()) * 0.5
}

/// Least-squares solution of `min_θ ‖map(θ) − y‖` for a linear `map`,
/// materialized column by column and solved through the normal equations.
pub fn linear_lstsq(n: usize, map: impl Fn(&[f64]) -> Vec<f64>, y: &[f64]) -> Vec<f64> {
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            map(&e)
        })
        .collect();
    let m = cols[0].len();
    let j = DMatrix::from_fn(m, n, |r, c| cols[c][r]);
    let jtj = j.transpose() * &j;
    let jty = j.transpose() * DVector::from_column_slice(y);
    jtj.lu().solve(&jty).expect("normal equations are singular").as_slice().to_vec()
}

/// Replaces one factor block of `x`, given in its natural matrix form.
pub fn with_block(x: &ParamVector, block: usize, values: &[f64]) -> ParamVector {
    let mut f = unpack(x);
    let set = |m: &mut DMatrix<f64>, diagonal: bool| {
        let (r, c) = m.shape();
        *m = if diagonal {
            DMatrix::from_row_slice(r, c, values)
        } else {
            DMatrix::from_column_slice(r, c, values)
        };
    };
    match &mut f {
        Factors::Cp(ms) => set(&mut ms[block], false),
        Factors::Dedicom { a, h, d } => match block {
            0 => set(a, false),
            1 => set(h, false),
            _ => set(d, true),
        },
        Factors::Paratuck2 { a, da, h, db, b } => match block {
            0 => set(a, false),
            1 => set(da, true),
            2 => set(h, false),
            3 => set(db, true),
            _ => set(b, false),
        },
    }
    pack(x.spec(), &f).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
