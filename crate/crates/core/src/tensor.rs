//! Dense N-order tensors and the multilinear primitives built on them.
//!
//! Every tensor in the crate is stored row-major: the last index varies
//! fastest, so a third-order tensor is laid out as `x111, x112, ..., xIJK`.
//! All modes are 0-based in the API.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Dense tensor with explicit extents and row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(Error::shape(format!("extents must be positive, got {dims:?}")));
        }
        let expected: usize = dims.iter().product();
        if expected != data.len() {
            return Err(Error::shape(format!(
                "dims {dims:?} need {expected} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        Self::new(dims.to_vec(), vec![0.0; dims.iter().product()])
    }

    /// Builds a tensor by evaluating `f` at every multi-index, in storage order.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len: usize = dims.iter().product();
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; dims.len()];
        for _ in 0..len {
            data.push(f(&idx));
            increment(&mut idx, dims);
        }
        Self::new(dims.to_vec(), data)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        idx.iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, &d)| {
                debug_assert!(i < d);
                acc * d + i
            })
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.linear_index(idx)]
    }

    /// Flattens the tensor in the library-wide row-major order.
    pub fn vectorize(&self) -> Vec<f64> {
        self.data.clone()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Entrywise difference `self - other`.
    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        if self.dims != other.dims {
            return Err(Error::shape(format!(
                "cannot subtract {:?} from {:?}",
                other.dims, self.dims
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(DenseTensor {
            dims: self.dims.clone(),
            data,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Frontal slice `X[:, :, k]` of a third-order tensor.
    pub fn frontal_slice(&self, k: usize) -> DMatrix<f64> {
        assert_eq!(self.order(), 3, "frontal slices need a third-order tensor");
        let (i, j, kk) = (self.dims[0], self.dims[1], self.dims[2]);
        assert!(k < kk);
        DMatrix::from_fn(i, j, |r, c| self.data[(r * j + c) * kk + k])
    }

    pub fn frontal_slices(&self) -> Vec<DMatrix<f64>> {
        (0..self.dims[2]).map(|k| self.frontal_slice(k)).collect()
    }

    /// Assembles an `I x J x K` tensor from its K frontal slices.
    pub fn from_frontal_slices(slices: &[DMatrix<f64>]) -> Result<DenseTensor> {
        let first = slices
            .first()
            .ok_or_else(|| Error::shape("no frontal slices given"))?;
        let (i, j, kk) = (first.nrows(), first.ncols(), slices.len());
        if slices.iter().any(|s| s.shape() != (i, j)) {
            return Err(Error::shape("frontal slices differ in shape"));
        }
        let mut data = vec![0.0; i * j * kk];
        for (k, s) in slices.iter().enumerate() {
            for c in 0..j {
                for r in 0..i {
                    data[(r * j + c) * kk + k] = s[(r, c)];
                }
            }
        }
        DenseTensor::new(vec![i, j, kk], data)
    }

    /// Reorders modes: output mode `n` is input mode `perm[n]`.
    pub fn permute(&self, perm: &[usize]) -> Result<DenseTensor> {
        let n = self.order();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::shape(format!("{perm:?} is not a permutation of {n} modes")));
        }
        let dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let mut src = vec![0usize; n];
        DenseTensor::from_fn(&dims, |idx| {
            for (o, &p) in perm.iter().enumerate() {
                src[p] = idx[o];
            }
            self.get(&src)
        })
    }

    /// Sub-tensor of the index range `start..end` along the first mode.
    pub fn slice_first_mode(&self, start: usize, end: usize) -> Result<DenseTensor> {
        if start >= end || end > self.dims[0] {
            return Err(Error::shape(format!(
                "range {start}..{end} outside first mode of extent {}",
                self.dims[0]
            )));
        }
        let stride: usize = self.dims[1..].iter().product();
        let mut dims = self.dims.clone();
        dims[0] = end - start;
        DenseTensor::new(dims, self.data[start * stride..end * stride].to_vec())
    }

    /// Concatenates tensors along the first mode.
    pub fn concat_first_mode(parts: &[DenseTensor]) -> Result<DenseTensor> {
        let first = parts.first().ok_or_else(|| Error::shape("nothing to concatenate"))?;
        let tail = &first.dims[1..];
        if parts.iter().any(|p| &p.dims[1..] != tail) {
            return Err(Error::shape("trailing extents differ"));
        }
        let mut dims = first.dims.clone();
        dims[0] = parts.iter().map(|p| p.dims[0]).sum();
        let data = parts.iter().flat_map(|p| p.data.iter().copied()).collect();
        DenseTensor::new(dims, data)
    }
}

fn increment(idx: &mut [usize], dims: &[usize]) {
    for n in (0..idx.len()).rev() {
        idx[n] += 1;
        if idx[n] < dims[n] {
            return;
        }
        idx[n] = 0;
    }
}

pub fn vectorize(t: &DenseTensor) -> Vec<f64> {
    t.vectorize()
}

pub fn frobenius_norm(t: &DenseTensor) -> f64 {
    t.frobenius_norm()
}

/// Outer product `v1 ∘ v2 ∘ ... ∘ vN`.
pub fn rank_one(vectors: &[&[f64]]) -> Result<DenseTensor> {
    if vectors.is_empty() || vectors.iter().any(|v| v.is_empty()) {
        return Err(Error::shape("rank_one needs at least one non-empty vector"));
    }
    let dims: Vec<usize> = vectors.iter().map(|v| v.len()).collect();
    DenseTensor::from_fn(&dims, |idx| {
        idx.iter().zip(vectors).map(|(&i, v)| v[i]).product()
    })
}

/// Mode-`mode` matricization.
///
/// Row `i` holds every entry whose index along `mode` is `i`. Columns run
/// over the remaining indices in increasing mode order, last one fastest,
/// which makes `unfold(X, n) = A_n * khatri_rao(A_m1, A_m2, ...)^T` with
/// the other factors taken in increasing mode order.
pub fn unfold(t: &DenseTensor, mode: usize) -> Result<DMatrix<f64>> {
    let (left, extent, right) = mode_split(t.dims(), mode)?;
    let data = t.data();
    Ok(DMatrix::from_fn(extent, left * right, |i, col| {
        let (a, b) = (col / right, col % right);
        data[(a * extent + i) * right + b]
    }))
}

/// Inverse of [`unfold`].
pub fn refold(m: &DMatrix<f64>, mode: usize, dims: &[usize]) -> Result<DenseTensor> {
    let (left, extent, right) = mode_split(dims, mode)?;
    if m.shape() != (extent, left * right) {
        return Err(Error::shape(format!(
            "matrix {:?} cannot refold into {dims:?} along mode {mode}",
            m.shape()
        )));
    }
    let mut data = vec![0.0; left * extent * right];
    for col in 0..left * right {
        let (a, b) = (col / right, col % right);
        for i in 0..extent {
            data[(a * extent + i) * right + b] = m[(i, col)];
        }
    }
    DenseTensor::new(dims.to_vec(), data)
}

fn mode_split(dims: &[usize], mode: usize) -> Result<(usize, usize, usize)> {
    if mode >= dims.len() {
        return Err(Error::InvalidMode {
            mode,
            order: dims.len(),
        });
    }
    let left = dims[..mode].iter().product();
    let right = dims[mode + 1..].iter().product();
    Ok((left, dims[mode], right))
}

/// Column-wise Kronecker product: column r is `a_r ⊗ b_r`.
pub fn khatri_rao(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.ncols() != b.ncols() {
        return Err(Error::shape(format!(
            "khatri_rao column mismatch: {} vs {}",
            a.ncols(),
            b.ncols()
        )));
    }
    let j = b.nrows();
    Ok(DMatrix::from_fn(a.nrows() * j, a.ncols(), |row, r| {
        a[(row / j, r)] * b[(row % j, r)]
    }))
}

/// Khatri-Rao product of a chain of matrices, left to right.
pub fn khatri_rao_chain(mats: &[&DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let (first, rest) = mats
        .split_first()
        .ok_or_else(|| Error::shape("empty khatri_rao chain"))?;
    rest.iter().try_fold((*first).clone(), |acc, m| khatri_rao(&acc, m))
}
