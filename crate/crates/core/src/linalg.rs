//! Dense complex linear algebra helpers and the digit kernel shared by the
//! simulator, the operator algebra and the QCA tables.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `p^k`, failing on overflow.
pub fn ipow(p: usize, k: usize) -> Result<usize> {
    let mut acc: usize = 1;
    for _ in 0..k {
        acc = acc
            .checked_mul(p)
            .ok_or_else(|| Error::DimensionGuard(format!("{p}^{k} overflows")))?;
    }
    Ok(acc)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

/// Tensor product in little-endian order: `factors[0]` acts on the least
/// significant digit.
pub fn tensor_le(factors: &[CMatrix]) -> CMatrix {
    let mut acc = CMatrix::from_element(1, 1, ONE);
    for f in factors {
        acc = f.kronecker(&acc);
    }
    acc
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn unitarity_deviation(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let prod = m * m.adjoint();
    max_abs_diff(&prod, &identity(m.nrows()))
}

pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(m, &m.adjoint())
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Largest singular value.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let (vals, _) = hermitian_eigen(&(m.adjoint() * m));
    vals.last().cloned().unwrap_or(0.0).max(0.0).sqrt()
}

/// Closest unitary in any unitarily invariant norm, `M (M†M)^{-1/2}`.
/// Directions with vanishing singular value are dropped.
pub fn polar_unitary(m: &CMatrix) -> CMatrix {
    let (vals, v) = hermitian_eigen(&(m.adjoint() * m));
    let inv_sqrt: Vec<f64> = vals.iter().map(|&x| if x > 1e-24 { 1.0 / x.sqrt() } else { 0.0 }).collect();
    let scaled = CMatrix::from_fn(v.nrows(), v.ncols(), |r, c| v[(r, c)] * inv_sqrt[c]);
    m * scaled * v.adjoint()
}

/// Eigen-decomposition of a hermitian matrix, eigenvalues ascending; the
/// columns of the returned matrix are the matching eigenvectors.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let h = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(h);
    let d = m.nrows();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMatrix::zeros(d, d);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

pub fn matrix_power(m: &CMatrix, k: usize) -> CMatrix {
    let mut acc = identity(m.nrows());
    for _ in 0..k {
        acc = &acc * m;
    }
    acc
}

pub fn row_major(m: &CMatrix) -> Vec<C64> {
    let (r, c) = m.shape();
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Index offsets of the `p^k` local configurations of `positions`.
pub(crate) fn digit_offsets(p: usize, positions: &[usize]) -> Vec<usize> {
    let mut offsets = vec![0usize];
    for &pos in positions {
        let stride = p.pow(pos as u32);
        let prev = std::mem::take(&mut offsets);
        for d in 0..p {
            offsets.extend(prev.iter().map(|&o| o + d * stride));
        }
    }
    offsets
}

/// Base indices with all digits at `positions` equal to zero.
pub(crate) fn digit_bases(p: usize, total: usize, positions: &[usize]) -> Vec<usize> {
    let free: Vec<usize> = (0..total).filter(|d| !positions.contains(d)).collect();
    digit_offsets(p, &free)
}

/// Applies `mat` to the digits `positions` of a flat amplitude array over
/// `total` base-`p` digits.
pub(crate) fn apply_on_digits(
    data: &mut [C64],
    p: usize,
    total: usize,
    positions: &[usize],
    mat: &CMatrix,
) {
    let offsets = digit_offsets(p, positions);
    let bases = digit_bases(p, total, positions);
    let l = offsets.len();
    debug_assert_eq!(mat.nrows(), l);
    let rm = row_major(mat);
    let mut buf = vec![ZERO; l];
    for &b in &bases {
        for (k, &o) in offsets.iter().enumerate() {
            buf[k] = data[b + o];
        }
        for (r, &o) in offsets.iter().enumerate() {
            let row = &rm[r * l..(r + 1) * l];
            let mut acc = ZERO;
            for (a, v) in row.iter().zip(buf.iter()) {
                acc += a * v;
            }
            data[b + o] = acc;
        }
    }
}

/// Orthonormal basis of the column span by pivoted Gram-Schmidt, ignoring
/// residual columns of norm at most `cutoff`.
pub(crate) fn orthonormal_range(mut cols: CMatrix, cutoff: f64) -> CMatrix {
    let d = cols.nrows();
    let mut basis = Vec::new();
    while basis.len() < d {
        let (best, norm) = (0..cols.ncols())
            .map(|c| (c, cols.column(c).norm()))
            .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        if norm <= cutoff || norm < 1e-300 {
            break;
        }
        let q = cols.column(best) / c64(norm, 0.0);
        for c in 0..cols.ncols() {
            let overlap = q.dotc(&cols.column(c));
            cols.column_mut(c).axpy(-overlap, &q, ONE);
        }
        basis.push(q);
    }
    if basis.is_empty() {
        CMatrix::zeros(d, 0)
    } else {
        CMatrix::from_columns(&basis)
    }
}
