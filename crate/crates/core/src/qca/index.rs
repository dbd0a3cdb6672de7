//! The GNVW index from support-algebra dimensions at a cut.
//!
//! With cells of `c >= r` sites, the image of two neighbouring cells
//! factorizes as `M_a ⊗ M_b` across the middle of its support, acting on
//! `(C^a ⊗ C^a') ⊗ (C^b ⊗ C^b')`. The image of a minimal projection has
//! range `ψ ⊗ C^a' ⊗ C^b'` with `ψ` of some Schmidt rank `s`, so the two
//! reduced ranks are `s a'` and `s b'` with `a' b' = p^{2c}`. The index is
//! `p^c / a`.

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::haar::haar_vector;
use crate::linalg::{apply_on_digits, c64, ipow, orthonormal_range, CMatrix};
use crate::seed::rng_from_seed;

use super::map::QCAMap;

const INDEX_SEED: u64 = 0x1dde_c0de_0000_0001;
const INDEX_GUARD: usize = 1 << 22;
const RANK_TOL: f64 = 1e-8;

/// Extends the orthonormal columns `q` to also span `cols`.
fn extend(q: &mut CMatrix, cols: &CMatrix) {
    let scale = cols.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    let span = orthonormal_range(cols.clone(), RANK_TOL * scale);
    let mut r = &span - &*q * (q.adjoint() * &span);
    r -= &*q * (q.adjoint() * &r);
    let fresh = orthonormal_range(r, RANK_TOL);
    if fresh.ncols() > 0 {
        let mut all: Vec<_> = q.column_iter().map(|c| c.into_owned()).collect();
        all.extend(fresh.column_iter().map(|c| c.into_owned()));
        *q = CMatrix::from_columns(&all);
    }
}

/// Rational index of a QCA on a ring: `p^e` for a shift by `e`, `1` for a
/// circuit.
pub fn gnvw_index(f: &QCAMap) -> Result<Ratio<u64>> {
    let (n, p) = (f.n(), f.p());
    let c = f.measured_spread().max(1);
    if n < 4 * c {
        return Err(Error::Precondition(format!("ring of {n} sites too short for cells of {c}")));
    }
    let dim = ipow(p, 4 * c)?;
    if dim > INDEX_GUARD {
        return Err(Error::DimensionGuard(format!("index patch of dimension {dim}")));
    }
    let half = ipow(p, 2 * c)?;
    // projectors onto the fixed space of the Z images of the two middle cells
    let mut projs = Vec::with_capacity(2 * c);
    for s in c..3 * c {
        let z = f.image_z(s);
        if z.support().iter().any(|&t| t >= 4 * c) {
            return Err(Error::InternalConsistency(format!("image of site {s} leaves its neighbourhood")));
        }
        let mut acc = CMatrix::zeros(z.dim(), z.dim());
        let mut zb = CMatrix::identity(z.dim(), z.dim());
        for _ in 0..p {
            acc += &zb;
            zb = &zb * z.matrix();
        }
        projs.push((z.support().to_vec(), acc / c64(p as f64, 0.0)));
    }
    let mut rng = rng_from_seed(INDEX_SEED);
    let mut left = CMatrix::zeros(half, 0);
    let mut right = CMatrix::zeros(half, 0);
    let (mut ml, mut mr) = (0, 0);
    for _ in 0..=half {
        let mut psi: Vec<_> = haar_vector(dim, &mut rng).iter().cloned().collect();
        for (sup, m) in &projs {
            apply_on_digits(&mut psi, p, 4 * c, sup, m);
        }
        // rows: left half (low digits), columns: right half
        let a = CMatrix::from_fn(half, half, |l, r| psi[l + half * r]);
        extend(&mut left, &a);
        extend(&mut right, &a.transpose());
        let (nl, nr) = (left.ncols(), right.ncols());
        if nl == ml && nr == mr {
            break;
        }
        (ml, mr) = (nl, nr);
    }
    // the range is psi ⊗ C^{a'} ⊗ C^{b'}, psi of Schmidt rank s on C^a ⊗ C^b
    let s2 = ml * mr / half;
    let s = (s2 as f64).sqrt().round() as usize;
    if ml * mr % half != 0 || s * s != s2 || s == 0 || ml % s != 0 || mr % s != 0 {
        return Err(Error::InternalConsistency(format!(
            "reduced ranks {ml} and {mr} do not fit a product of support algebras on {half} levels"
        )));
    }
    Ok(Ratio::new((ipow(p, c)? * (ml / s)) as u64, half as u64))
}
