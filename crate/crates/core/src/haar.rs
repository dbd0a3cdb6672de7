//! Haar-random unitaries.
//!
//! A sample is stored as the Householder factorization that QR of a complex
//! Ginibre matrix would produce, with the diagonal of `R` folded in as phases.
//! Because every trailing column of a Ginibre matrix stays Gaussian after the
//! earlier reflections, each reflector is drawn from a fresh Gaussian vector.
//! Applying the sample to a vector costs `O(d^2)` and never forms the matrix.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c64, CMatrix, C64, ONE, ZERO};

#[derive(Clone, Debug)]
pub struct HaarUnitary {
    d: usize,
    // reflector k acts on coordinates k..d as I - 2 v v†
    reflectors: Vec<Vec<C64>>,
    phases: Vec<C64>,
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re * s, im * s)
}

impl HaarUnitary {
    pub fn sample<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        let mut reflectors = Vec::with_capacity(d.saturating_sub(1));
        let mut phases = Vec::with_capacity(d);
        for k in 0..d {
            let m = d - k;
            let x: Vec<C64> = (0..m).map(|_| complex_gaussian(rng)).collect();
            if m == 1 {
                let z = x[0];
                phases.push(if z.norm() > 0.0 { z / z.norm() } else { ONE });
                continue;
            }
            let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let e = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { ONE };
            let alpha = -e * norm;
            let mut u = x;
            u[0] -= alpha;
            let un = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if un > 0.0 {
                u.iter_mut().for_each(|z| *z /= un);
            }
            reflectors.push(u);
            phases.push(-e);
        }
        HaarUnitary { d, reflectors, phases }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    fn reflect(&self, k: usize, v: &mut [C64]) {
        let r = &self.reflectors[k];
        let tail = &mut v[k..];
        let mut dot = ZERO;
        for (a, b) in r.iter().zip(tail.iter()) {
            dot += a.conj() * b;
        }
        let f = dot * 2.0;
        for (a, b) in r.iter().zip(tail.iter_mut()) {
            *b -= a * f;
        }
    }

    /// `v <- U v`.
    pub fn apply(&self, v: &mut [C64]) {
        assert_eq!(v.len(), self.d);
        for (z, ph) in v.iter_mut().zip(self.phases.iter()) {
            *z *= ph;
        }
        for k in (0..self.reflectors.len()).rev() {
            self.reflect(k, v);
        }
    }

    /// `v <- U† v`.
    pub fn apply_adjoint(&self, v: &mut [C64]) {
        assert_eq!(v.len(), self.d);
        for k in 0..self.reflectors.len() {
            self.reflect(k, v);
        }
        for (z, ph) in v.iter_mut().zip(self.phases.iter()) {
            *z *= ph.conj();
        }
    }

    pub fn to_matrix(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.d, self.d);
        for j in 0..self.d {
            let mut col = vec![ZERO; self.d];
            col[j] = ONE;
            self.apply(&mut col);
            m.set_column(j, &DVector::from_vec(col));
        }
        m
    }
}

/// Dense Haar-random unitary of dimension `d`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    HaarUnitary::sample(d, rng).to_matrix()
}

/// Haar-random unit vector of dimension `d`.
pub fn haar_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<C64> {
    let v = DVector::from_iterator(d, (0..d).map(|_| complex_gaussian(rng)));
    let n = v.norm();
    v / c64(n, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, unitarity_deviation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in [1, 2, 3, 8, 17] {
            let u = haar_unitary(d, &mut rng);
            assert!(unitarity_deviation(&u) < 1e-12, "d = {d}");
        }
    }

    #[test]
    fn adjoint_application_inverts() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = HaarUnitary::sample(9, &mut rng);
        let m = h.to_matrix();
        let mut v: Vec<C64> = (0..9).map(|k| c64(k as f64, 1.0)).collect();
        let orig = v.clone();
        h.apply_adjoint(&mut v);
        let back = &m * DVector::from_vec(v);
        let orig = DVector::from_vec(orig);
        assert!(max_abs_diff(&CMatrix::from_column_slice(9, 1, back.as_slice()), &CMatrix::from_column_slice(9, 1, orig.as_slice())) < 1e-12);
    }

    #[test]
    fn same_seed_same_sample() {
        let a = haar_unitary(4, &mut ChaCha8Rng::seed_from_u64(11));
        let b = haar_unitary(4, &mut ChaCha8Rng::seed_from_u64(11));
        assert_eq!(a, b);
    }
}
