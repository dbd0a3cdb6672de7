//! Operators acting on a finite set of sites of a qudit register.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    apply_on_digits, c64, digit_bases, digit_offsets, ipow, max_abs, CMatrix, C64, ONE, ZERO,
};

/// Operator on an ordered, duplicate-free set of sites. The support is kept
/// sorted; `support[0]` is the least significant local digit.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalOperator {
    p: usize,
    support: Vec<usize>,
    matrix: CMatrix,
}

/// Serialized form: row-major `[re, im]` pairs.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GateRecord {
    pub support: Vec<usize>,
    pub matrix: Vec<[f64; 2]>,
}

impl LocalOperator {
    /// Builds an operator; `support` may be in any order and the matrix is
    /// permuted into sorted order.
    pub fn new(p: usize, support: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidDimension(format!("local dimension {p} < 2")));
        }
        let d = ipow(p, support.len())?;
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::InvalidDimension(format!(
                "matrix is {}x{}, support of {} sites needs {d}",
                matrix.nrows(),
                matrix.ncols(),
                support.len()
            )));
        }
        let mut sorted = support.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != support.len() {
            return Err(Error::InvalidDimension("repeated site in support".into()));
        }
        let op = LocalOperator { p, support, matrix };
        if op.support == sorted {
            Ok(op)
        } else {
            let m = op.expand(&sorted)?;
            Ok(LocalOperator { p, support: sorted, matrix: m })
        }
    }

    pub fn scalar(p: usize, z: C64) -> Self {
        LocalOperator { p, support: Vec::new(), matrix: CMatrix::from_element(1, 1, z) }
    }

    pub fn identity(p: usize) -> Self {
        Self::scalar(p, ONE)
    }

    pub fn single(p: usize, site: usize, m: CMatrix) -> Result<Self> {
        Self::new(p, vec![site], m)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn check_range(&self, n: usize) -> Result<()> {
        match self.support.last() {
            Some(&s) if s >= n => Err(Error::SupportOutOfRange(format!(
                "site {s} outside register of {n}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn overlaps(&self, sites: &[usize]) -> bool {
        self.support.iter().any(|s| sites.contains(s))
    }

    /// Matrix of `self ⊗ I` on `target`, which must contain the support.
    pub fn expand(&self, target: &[usize]) -> Result<CMatrix> {
        let pos = self.positions_in(target)?;
        let p = self.p;
        let dt = ipow(p, target.len())?;
        if pos.len() == target.len() && pos.iter().enumerate().all(|(i, &j)| i == j) {
            return Ok(self.matrix.clone());
        }
        let off = digit_offsets(p, &pos);
        let bases = digit_bases(p, target.len(), &pos);
        let mut out = CMatrix::zeros(dt, dt);
        let ds = self.dim();
        for &e in &bases {
            for b in 0..ds {
                for a in 0..ds {
                    let z = self.matrix[(a, b)];
                    if z != ZERO {
                        out[(off[a] + e, off[b] + e)] = z;
                    }
                }
            }
        }
        Ok(out)
    }

    fn positions_in(&self, target: &[usize]) -> Result<Vec<usize>> {
        self.support
            .iter()
            .map(|s| {
                target.iter().position(|t| t == s).ok_or_else(|| {
                    Error::SupportOutOfRange(format!("site {s} not in target support"))
                })
            })
            .collect()
    }

    pub fn union_support(&self, other: &LocalOperator) -> Vec<usize> {
        let mut u = self.support.clone();
        u.extend_from_slice(&other.support);
        u.sort_unstable();
        u.dedup();
        u
    }

    /// Re-expresses the operator on a sorted superset of its support.
    pub fn widened(&self, target: &[usize]) -> Result<LocalOperator> {
        let mut t = target.to_vec();
        t.sort_unstable();
        t.dedup();
        Ok(LocalOperator { p: self.p, matrix: self.expand(&t)?, support: t })
    }

    /// Operator product `self · other`.
    pub fn mul(&self, other: &LocalOperator) -> LocalOperator {
        let t = self.union_support(other);
        let k = t.len();
        if self.dim() <= other.dim() {
            let mut m = other.expand(&t).expect("union contains support");
            let pos = self.positions_in(&t).expect("union");
            apply_on_digits(m.as_mut_slice(), self.p, 2 * k, &pos, &self.matrix);
            LocalOperator { p: self.p, support: t, matrix: m }
        } else {
            let mut m = self.expand(&t).expect("union contains support");
            let pos: Vec<usize> = other
                .positions_in(&t)
                .expect("union")
                .into_iter()
                .map(|x| x + k)
                .collect();
            apply_on_digits(m.as_mut_slice(), self.p, 2 * k, &pos, &other.matrix.transpose());
            LocalOperator { p: self.p, support: t, matrix: m }
        }
    }

    pub fn add(&self, other: &LocalOperator) -> LocalOperator {
        let t = self.union_support(other);
        let m = self.expand(&t).expect("union") + other.expand(&t).expect("union");
        LocalOperator { p: self.p, support: t, matrix: m }
    }

    pub fn scale(&self, z: C64) -> LocalOperator {
        LocalOperator { p: self.p, support: self.support.clone(), matrix: &self.matrix * z }
    }

    pub fn adjoint(&self) -> LocalOperator {
        LocalOperator { p: self.p, support: self.support.clone(), matrix: self.matrix.adjoint() }
    }

    pub fn pow(&self, k: usize) -> LocalOperator {
        let mut acc = LocalOperator {
            p: self.p,
            support: self.support.clone(),
            matrix: CMatrix::identity(self.dim(), self.dim()),
        };
        for _ in 0..k {
            acc = LocalOperator {
                p: self.p,
                support: self.support.clone(),
                matrix: &acc.matrix * &self.matrix,
            };
        }
        acc
    }

    /// `g · self · g†`.
    pub fn conjugate_by(&self, g: &LocalOperator) -> LocalOperator {
        let t = self.union_support(g);
        let k = t.len();
        let mut m = self.expand(&t).expect("union");
        let rows = g.positions_in(&t).expect("union");
        let cols: Vec<usize> = rows.iter().map(|x| x + k).collect();
        apply_on_digits(m.as_mut_slice(), self.p, 2 * k, &rows, &g.matrix);
        let gc = g.matrix.map(|z| z.conj());
        apply_on_digits(m.as_mut_slice(), self.p, 2 * k, &cols, &gc);
        LocalOperator { p: self.p, support: t, matrix: m }
    }

    /// Partial trace over `sites` (sites outside the support are ignored).
    pub fn partial_trace(&self, sites: &[usize]) -> LocalOperator {
        let traced: Vec<usize> = (0..self.support.len())
            .filter(|&i| sites.contains(&self.support[i]))
            .collect();
        let kept: Vec<usize> = (0..self.support.len()).filter(|i| !traced.contains(i)).collect();
        let p = self.p;
        let ko = digit_offsets(p, &kept);
        let to = digit_offsets(p, &traced);
        let dk = ko.len();
        let mut out = CMatrix::zeros(dk, dk);
        for b in 0..dk {
            for a in 0..dk {
                let mut acc = ZERO;
                for &e in &to {
                    acc += self.matrix[(ko[a] + e, ko[b] + e)];
                }
                out[(a, b)] = acc;
            }
        }
        LocalOperator {
            p,
            support: kept.iter().map(|&i| self.support[i]).collect(),
            matrix: out,
        }
    }

    /// Removes sites on which the operator acts as the identity (within `tol`).
    pub fn truncate_support(&self, tol: f64) -> LocalOperator {
        let mut cur = self.clone();
        for &s in self.support.iter() {
            let reduced = cur.partial_trace(&[s]).scale(c64(1.0 / self.p as f64, 0.0));
            let back = reduced.expand(&cur.support).expect("subset");
            let resid = crate::linalg::max_abs_diff(&back, &cur.matrix);
            if resid <= tol {
                cur = reduced;
            }
        }
        cur
    }

    /// Largest entry-wise difference after embedding both on the union support.
    pub fn distance(&self, other: &LocalOperator) -> f64 {
        let t = self.union_support(other);
        let a = self.expand(&t).expect("union");
        let b = other.expand(&t).expect("union");
        max_abs(&(a - b))
    }

    pub fn unitarity_deviation(&self) -> f64 {
        crate::linalg::unitarity_deviation(&self.matrix)
    }

    /// Whether the operator commutes with `other` within `tol`.
    pub fn commutator_norm(&self, other: &LocalOperator) -> f64 {
        let ab = self.mul(other);
        let ba = other.mul(self);
        ab.distance(&ba)
    }

    pub fn to_record(&self) -> GateRecord {
        GateRecord {
            support: self.support.clone(),
            matrix: crate::linalg::row_major(&self.matrix)
                .into_iter()
                .map(|z| [z.re, z.im])
                .collect(),
        }
    }

    pub fn from_record(p: usize, rec: &GateRecord) -> Result<Self> {
        let d = ipow(p, rec.support.len())?;
        if rec.matrix.len() != d * d {
            return Err(Error::InvalidDimension(format!(
                "gate record has {} entries, expected {}",
                rec.matrix.len(),
                d * d
            )));
        }
        let m = CMatrix::from_row_iterator(d, d, rec.matrix.iter().map(|e| c64(e[0], e[1])));
        Self::new(p, rec.support.clone(), m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, tensor_le};
    use crate::pauli::{clock, shift};

    fn dense(op: &LocalOperator, n: usize) -> CMatrix {
        op.expand(&(0..n).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn unsorted_support_is_canonicalized() {
        let a = shift(3);
        let b = clock(3);
        // support [2, 0] means local digit 0 on site 2
        let op = LocalOperator::new(3, vec![2, 0], tensor_le(&[a.clone(), b.clone()])).unwrap();
        assert_eq!(op.support(), &[0, 2]);
        let expect = tensor_le(&[b, a]);
        assert!(max_abs_diff(op.matrix(), &expect) < 1e-15);
    }

    #[test]
    fn mul_matches_dense_product() {
        let x = LocalOperator::single(2, 0, shift(2)).unwrap();
        let z = LocalOperator::new(2, vec![1, 2], tensor_le(&[clock(2), shift(2)])).unwrap();
        let prod = x.mul(&z);
        let d = dense(&x, 3) * dense(&z, 3);
        assert!(max_abs_diff(&dense(&prod, 3), &d) < 1e-14);
        let prod2 = z.mul(&x);
        let d2 = dense(&z, 3) * dense(&x, 3);
        assert!(max_abs_diff(&dense(&prod2, 3), &d2) < 1e-14);
    }

    #[test]
    fn conjugation_by_swap_moves_operator() {
        let s = LocalOperator::new(3, vec![1, 2], crate::pauli::swap_operator(3).unwrap()).unwrap();
        let x = LocalOperator::single(3, 1, shift(3)).unwrap();
        let moved = x.conjugate_by(&s).truncate_support(1e-12);
        assert_eq!(moved.support(), &[2]);
        assert!(max_abs_diff(moved.matrix(), &shift(3)) < 1e-14);
    }

    #[test]
    fn partial_trace_of_product() {
        let a = shift(2) + clock(2);
        let op = LocalOperator::new(2, vec![0, 1], tensor_le(&[a.clone(), clock(2)])).unwrap();
        let r = op.partial_trace(&[1]);
        // tr(Z) = 0
        assert!(max_abs(r.matrix()) < 1e-15);
        let r0 = op.partial_trace(&[0]);
        assert!(max_abs_diff(r0.matrix(), &(clock(2) * crate::linalg::trace(&a))) < 1e-15);
    }

    #[test]
    fn record_roundtrip() {
        let op = LocalOperator::new(2, vec![3, 4], crate::pauli::swap_operator(2).unwrap()).unwrap();
        let back = LocalOperator::from_record(2, &op.to_record()).unwrap();
        assert_eq!(op, back);
    }
}
