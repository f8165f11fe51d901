//! CP, DEDICOM and PARATUCK2 models of third-order tensors.
//!
//! A model's parameters live in one flat vector. The layout is grouped by
//! factor block, each matrix stored column by column:
//!
//! * CP: `A1 (I x R)`, `A2 (J x R)`, `A3 (K x R)`.
//! * DEDICOM: `A (I x R)`, `H (R x R)`, then the diagonals of `D_1 .. D_K`.
//! * PARATUCK2: `A (I x P)`, diagonals of `DA_1 .. DA_K`, `H (P x Q)`,
//!   diagonals of `DB_1 .. DB_K`, `B (J x Q)`.
//!
//! The diagonal slices are kept as `K x R` matrices whose row `k` is the
//! diagonal of slice `k`; in the flat vector they appear slice after slice.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numdiff::Objective;
use crate::tensor::DenseTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "CP", alias = "cp")]
    Cp,
    #[serde(rename = "DEDICOM", alias = "dedicom")]
    Dedicom,
    #[serde(rename = "PARATUCK2", alias = "paratuck2")]
    Paratuck2,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Cp, Family::Dedicom, Family::Paratuck2];

    pub fn name(self) -> &'static str {
        match self {
            Family::Cp => "CP",
            Family::Dedicom => "DEDICOM",
            Family::Paratuck2 => "PARATUCK2",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CP" | "PARAFAC" => Ok(Family::Cp),
            "DEDICOM" => Ok(Family::Dedicom),
            "PARATUCK2" => Ok(Family::Paratuck2),
            _ => Err(Error::Config(format!("unknown decomposition '{s}'"))),
        }
    }
}

/// Decomposition family plus target shape and rank(s).
///
/// For CP and DEDICOM only `p` is meaningful and `q == p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelSpec {
    family: Family,
    dims: [usize; 3],
    p: usize,
    q: usize,
}

impl ModelSpec {
    pub fn cp(dims: [usize; 3], rank: usize) -> Result<Self> {
        Self::build(Family::Cp, dims, rank, rank)
    }

    pub fn dedicom(dims: [usize; 3], rank: usize) -> Result<Self> {
        if dims[0] != dims[1] {
            return Err(Error::shape(format!(
                "DEDICOM needs a square-front tensor, got {dims:?}"
            )));
        }
        Self::build(Family::Dedicom, dims, rank, rank)
    }

    pub fn paratuck2(dims: [usize; 3], p: usize, q: usize) -> Result<Self> {
        Self::build(Family::Paratuck2, dims, p, q)
    }

    /// Builds a spec from a family and ranks; `q` is ignored except for PARATUCK2.
    pub fn new(family: Family, dims: [usize; 3], p: usize, q: usize) -> Result<Self> {
        match family {
            Family::Cp => Self::cp(dims, p),
            Family::Dedicom => Self::dedicom(dims, p),
            Family::Paratuck2 => Self::paratuck2(dims, p, q),
        }
    }

    fn build(family: Family, dims: [usize; 3], p: usize, q: usize) -> Result<Self> {
        if dims.contains(&0) || p == 0 || q == 0 {
            return Err(Error::shape(format!(
                "extents and ranks must be positive: dims {dims:?}, ranks ({p}, {q})"
            )));
        }
        Ok(Self { family, dims, p, q })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    /// R for CP and DEDICOM, P for PARATUCK2.
    pub fn rank(&self) -> usize {
        self.p
    }

    pub fn ranks(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    pub fn param_count(&self) -> usize {
        let [i, j, k] = self.dims;
        let (p, q) = (self.p, self.q);
        match self.family {
            Family::Cp => p * (i + j + k),
            Family::Dedicom => i * p + p * p + p * k,
            Family::Paratuck2 => i * p + p * k + p * q + q * k + j * q,
        }
    }

    /// Layout blocks in order: (offset, rows, cols, is a diagonal stack).
    fn blocks(&self) -> Vec<Block> {
        let [i, j, k] = self.dims;
        let (p, q) = (self.p, self.q);
        let shapes: Vec<(usize, usize, bool)> = match self.family {
            Family::Cp => vec![(i, p, false), (j, p, false), (k, p, false)],
            Family::Dedicom => vec![(i, p, false), (p, p, false), (k, p, true)],
            Family::Paratuck2 => vec![
                (i, p, false),
                (k, p, true),
                (p, q, false),
                (k, q, true),
                (j, q, false),
            ],
        };
        let mut offset = 0;
        shapes
            .into_iter()
            .map(|(rows, cols, diagonal)| {
                let b = Block {
                    offset,
                    rows,
                    cols,
                    diagonal,
                };
                offset += rows * cols;
                b
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Block {
    offset: usize,
    rows: usize,
    cols: usize,
    diagonal: bool,
}

/// Factor blocks of a model, in natural matrix form.
#[derive(Debug, Clone, PartialEq)]
pub enum Factors {
    Cp([DMatrix<f64>; 3]),
    Dedicom {
        a: DMatrix<f64>,
        h: DMatrix<f64>,
        /// `K x R`, row k is the diagonal of `D_k`.
        d: DMatrix<f64>,
    },
    Paratuck2 {
        a: DMatrix<f64>,
        /// `K x P`, row k is the diagonal of `DA_k`.
        da: DMatrix<f64>,
        h: DMatrix<f64>,
        /// `K x Q`, row k is the diagonal of `DB_k`.
        db: DMatrix<f64>,
        b: DMatrix<f64>,
    },
}

impl Factors {
    pub fn family(&self) -> Family {
        match self {
            Factors::Cp(_) => Family::Cp,
            Factors::Dedicom { .. } => Family::Dedicom,
            Factors::Paratuck2 { .. } => Family::Paratuck2,
        }
    }

    fn blocks(&self) -> Vec<&DMatrix<f64>> {
        match self {
            Factors::Cp(f) => f.iter().collect(),
            Factors::Dedicom { a, h, d } => vec![a, h, d],
            Factors::Paratuck2 { a, da, h, db, b } => vec![a, da, h, db, b],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().iter().all(|m| m.iter().all(|x| x.is_finite()))
    }
}

/// Flat parameter vector together with the `ModelSpec` that defines its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    spec: ModelSpec,
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(spec: ModelSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.param_count() {
            return Err(Error::shape(format!(
                "{} model needs {} parameters, got {}",
                spec.family,
                spec.param_count(),
                values.len()
            )));
        }
        Ok(Self { spec, values })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.spec, values)
    }
}

pub fn pack(spec: &ModelSpec, factors: &Factors) -> Result<ParamVector> {
    if factors.family() != spec.family {
        return Err(Error::shape(format!(
            "{} factors do not fit a {} spec",
            factors.family(),
            spec.family
        )));
    }
    let mut values = Vec::with_capacity(spec.param_count());
    for (blk, m) in spec.blocks().into_iter().zip(factors.blocks()) {
        if m.shape() != (blk.rows, blk.cols) {
            return Err(Error::shape(format!(
                "factor block is {:?}, layout expects {:?}",
                m.shape(),
                (blk.rows, blk.cols)
            )));
        }
        if blk.diagonal {
            // diagonal stacks are stored slice by slice
            for k in 0..blk.rows {
                values.extend(m.row(k).iter());
            }
        } else {
            values.extend_from_slice(m.as_slice());
        }
    }
    ParamVector::new(*spec, values)
}

pub fn unpack(x: &ParamVector) -> Factors {
    let spec = &x.spec;
    let mut mats: Vec<DMatrix<f64>> = spec
        .blocks()
        .into_iter()
        .map(|blk| {
            let raw = &x.values[blk.offset..blk.offset + blk.rows * blk.cols];
            if blk.diagonal {
                DMatrix::from_row_slice(blk.rows, blk.cols, raw)
            } else {
                DMatrix::from_column_slice(blk.rows, blk.cols, raw)
            }
        })
        .collect();
    match spec.family {
        Family::Cp => {
            let c = mats.pop().unwrap();
            let b = mats.pop().unwrap();
            let a = mats.pop().unwrap();
            Factors::Cp([a, b, c])
        }
        Family::Dedicom => {
            let d = mats.pop().unwrap();
            let h = mats.pop().unwrap();
            let a = mats.pop().unwrap();
            Factors::Dedicom { a, h, d }
        }
        Family::Paratuck2 => {
            let b = mats.pop().unwrap();
            let db = mats.pop().unwrap();
            let h = mats.pop().unwrap();
            let da = mats.pop().unwrap();
            let a = mats.pop().unwrap();
            Factors::Paratuck2 { a, da, h, db, b }
        }
    }
}

/// Uniform `[0, 1)` parameters drawn from a seeded ChaCha8 stream.
pub fn init_random(spec: &ModelSpec, seed: u64) -> ParamVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..spec.param_count()).map(|_| rng.random::<f64>()).collect();
    ParamVector {
        spec: *spec,
        values,
    }
}

pub fn reconstruct(x: &ParamVector) -> DenseTensor {
    let mut out = vec![0.0; x.spec.dims.iter().product()];
    let mut scratch = Scratch::default();
    for k in 0..x.spec.dims[2] {
        slice_into(&x.spec, &x.values, k, &mut scratch);
        scatter_slice(&x.spec.dims, k, &scratch.slice, &mut out);
    }
    DenseTensor::new(x.spec.dims.to_vec(), out).expect("reconstruction matches spec dims")
}

/// Reconstruction of frontal slice `k` only.
pub fn reconstruct_slice(x: &ParamVector, k: usize) -> DMatrix<f64> {
    let [i, j, _] = x.spec.dims;
    let mut scratch = Scratch::default();
    slice_into(&x.spec, &x.values, k, &mut scratch);
    DMatrix::from_row_slice(i, j, &scratch.slice)
}

/// `‖X − X̂‖`, the unsquared Frobenius norm of the residual.
pub fn loss(x: &ParamVector, target: &DenseTensor) -> Result<f64> {
    check_target(&x.spec, target)?;
    Ok(residual_sq(&x.spec, &x.values, target).sqrt())
}

fn check_target(spec: &ModelSpec, target: &DenseTensor) -> Result<()> {
    if target.dims() != spec.dims {
        return Err(Error::shape(format!(
            "target dims {:?} differ from model dims {:?}",
            target.dims(),
            spec.dims
        )));
    }
    Ok(())
}

#[derive(Default)]
struct Scratch {
    left: Vec<f64>,
    right: Vec<f64>,
    tmp: Vec<f64>,
    /// Row-major `I x J` slice.
    slice: Vec<f64>,
}

fn scatter_slice(dims: &[usize; 3], k: usize, slice: &[f64], out: &mut [f64]) {
    let kk = dims[2];
    for (ij, v) in slice.iter().enumerate() {
        out[ij * kk + k] = *v;
    }
}

/// Writes the row-major reconstruction of frontal slice `k` into `s.slice`.
fn slice_into(spec: &ModelSpec, v: &[f64], k: usize, s: &mut Scratch) {
    let [i, j, kk] = spec.dims;
    let (p, q) = (spec.p, spec.q);
    s.slice.clear();
    s.slice.resize(i * j, 0.0);
    match spec.family {
        Family::Cp => {
            let (a, rest) = v.split_at(i * p);
            let (b, c) = rest.split_at(j * p);
            let ck: Vec<f64> = (0..p).map(|r| c[r * kk + k]).collect();
            scaled_columns(a, i, &ck, &mut s.left);
            for r in 0..p {
                let lcol = &s.left[r * i..(r + 1) * i];
                let bcol = &b[r * j..(r + 1) * j];
                for (ii, &l) in lcol.iter().enumerate() {
                    let row = &mut s.slice[ii * j..(ii + 1) * j];
                    for (dst, &bv) in row.iter_mut().zip(bcol) {
                        *dst += l * bv;
                    }
                }
            }
        }
        Family::Dedicom => {
            let (a, rest) = v.split_at(i * p);
            let (h, d) = rest.split_at(p * p);
            let dk = &d[k * p..(k + 1) * p];
            scaled_columns(a, i, dk, &mut s.left);
            sandwich(&s.left, i, h, p, p, &s.left.clone(), i, &mut s.tmp, &mut s.slice);
        }
        Family::Paratuck2 => {
            let (a, rest) = v.split_at(i * p);
            let (da, rest) = rest.split_at(kk * p);
            let (h, rest) = rest.split_at(p * q);
            let (db, b) = rest.split_at(kk * q);
            scaled_columns(a, i, &da[k * p..(k + 1) * p], &mut s.left);
            scaled_columns(b, j, &db[k * q..(k + 1) * q], &mut s.right);
            sandwich(&s.left, i, h, p, q, &s.right, j, &mut s.tmp, &mut s.slice);
        }
    }
}

/// `out = m * diag(scale)` for a column-major `rows x scale.len()` matrix.
fn scaled_columns(m: &[f64], rows: usize, scale: &[f64], out: &mut Vec<f64>) {
    out.clear();
    for (c, &sc) in scale.iter().enumerate() {
        out.extend(m[c * rows..(c + 1) * rows].iter().map(|x| x * sc));
    }
}

/// Row-major `slice = L * H * R^T` with column-major `L (li x p)`, `H (p x q)`, `R (rj x q)`.
#[allow(clippy::too_many_arguments)]
fn sandwich(
    l: &[f64],
    li: usize,
    h: &[f64],
    p: usize,
    q: usize,
    r: &[f64],
    rj: usize,
    tmp: &mut Vec<f64>,
    slice: &mut [f64],
) {
    // tmp = L * H, column-major li x q
    tmp.clear();
    tmp.resize(li * q, 0.0);
    for c in 0..q {
        let out = &mut tmp[c * li..(c + 1) * li];
        for pp in 0..p {
            let hv = h[c * p + pp];
            if hv == 0.0 {
                continue;
            }
            for (o, &lv) in out.iter_mut().zip(&l[pp * li..(pp + 1) * li]) {
                *o += lv * hv;
            }
        }
    }
    for ii in 0..li {
        let row = &mut slice[ii * rj..(ii + 1) * rj];
        for c in 0..q {
            let t = tmp[c * li + ii];
            for (dst, &rv) in row.iter_mut().zip(&r[c * rj..(c + 1) * rj]) {
                *dst += t * rv;
            }
        }
    }
}

fn residual_sq(spec: &ModelSpec, values: &[f64], target: &DenseTensor) -> f64 {
    let mut scratch = Scratch::default();
    (0..spec.dims[2])
        .map(|k| slice_residual_sq_with(spec, values, target, k, &mut scratch))
        .sum()
}

fn slice_residual_sq_with(
    spec: &ModelSpec,
    values: &[f64],
    target: &DenseTensor,
    k: usize,
    scratch: &mut Scratch,
) -> f64 {
    slice_into(spec, values, k, scratch);
    let kk = spec.dims[2];
    let data = target.data();
    scratch
        .slice
        .iter()
        .enumerate()
        .map(|(ij, xh)| {
            let r = data[ij * kk + k] - xh;
            r * r
        })
        .sum()
}

/// The decomposition loss as an [`Objective`] over flat parameter vectors.
///
/// Its finite-sum components are the squared residuals of the frontal
/// slices, so `Σ_k component_k(x) = f(x)^2`.
#[derive(Debug, Clone, Copy)]
pub struct TensorObjective<'a> {
    spec: ModelSpec,
    target: &'a DenseTensor,
}

impl<'a> TensorObjective<'a> {
    pub fn new(spec: ModelSpec, target: &'a DenseTensor) -> Result<Self> {
        check_target(&spec, target)?;
        Ok(Self { spec, target })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn target(&self) -> &DenseTensor {
        self.target
    }
}

impl Objective for TensorObjective<'_> {
    fn dim(&self) -> usize {
        self.spec.param_count()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        residual_sq(&self.spec, x, self.target).sqrt()
    }

    fn components(&self) -> usize {
        self.spec.dims[2]
    }

    fn eval_component(&self, x: &[f64], k: usize) -> f64 {
        slice_residual_sq_with(&self.spec, x, self.target, k, &mut Scratch::default())
    }
}
