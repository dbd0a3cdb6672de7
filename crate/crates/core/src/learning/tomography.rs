//! Product mutually-unbiased-basis tomography with linear inversion.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::linalg::{apply_on_digits, c64, hermitian_eigen, tensor_le, CMatrix, ZERO};
use crate::pauli::mub_bases;

/// Whether `p` is prime (complete MUB sets are only constructed for primes).
pub fn is_prime(p: usize) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

/// Multinomial sample of `shots` draws from `probs`.
pub fn multinomial<R: Rng + ?Sized>(shots: u64, probs: &[f64], rng: &mut R) -> Vec<u64> {
    let mut left = shots;
    let mut mass = 1.0;
    let mut out = Vec::with_capacity(probs.len());
    for (i, &w) in probs.iter().enumerate() {
        if i + 1 == probs.len() {
            out.push(left);
            break;
        }
        let w = w.max(0.0);
        let c = if left == 0 || mass <= 0.0 {
            0
        } else {
            let pr = (w / mass).clamp(0.0, 1.0);
            Binomial::new(left, pr).map(|b| b.sample(rng)).unwrap_or(0)
        };
        out.push(c);
        left -= c;
        mass -= w;
    }
    out
}

/// Hermitian, positive and unit-trace matrix nearest in spectrum to `m`.
pub fn project_to_density(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    let clipped: Vec<f64> = vals.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    let d = m.nrows();
    if total <= 0.0 {
        return CMatrix::identity(d, d) / c64(d as f64, 0.0);
    }
    let mut out = CMatrix::zeros(d, d);
    for (k, v) in clipped.iter().enumerate() {
        if *v > 0.0 {
            let col = vecs.column(k);
            out += (col * col.adjoint()) * c64(v / total, 0.0);
        }
    }
    out
}

/// Simulated tomography of an `m`-site state with `shots` shots per product
/// basis setting.
#[derive(Clone, Debug)]
pub struct MubTomography {
    p: usize,
    m: usize,
    bases: Vec<CMatrix>,
}

impl MubTomography {
    pub fn new(p: usize, m: usize) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::Config(format!(
                "sampled tomography needs a prime local dimension, got {p}"
            )));
        }
        Ok(MubTomography { p, m, bases: mub_bases(p)? })
    }

    pub fn settings(&self) -> usize {
        (self.p + 1).pow(self.m as u32)
    }

    pub fn outcomes(&self) -> usize {
        self.p.pow(self.m as u32)
    }

    fn setting_digits(&self, k: usize) -> Vec<usize> {
        let mut rest = k;
        (0..self.m)
            .map(|_| {
                let d = rest % (self.p + 1);
                rest /= self.p + 1;
                d
            })
            .collect()
    }

    /// Outcome distribution of setting `k` on `sigma`.
    pub fn distribution(&self, sigma: &CMatrix, k: usize) -> Vec<f64> {
        let b = tensor_le(&self.setting_digits(k).iter().map(|&d| self.bases[d].clone()).collect::<Vec<_>>());
        let rotated = b.adjoint() * sigma * &b;
        rotated.diagonal().iter().map(|z| z.re.max(0.0)).collect()
    }

    /// Contribution of one setting's frequencies to the linear-inversion
    /// estimate.
    fn invert_setting(&self, k: usize, freqs: &[f64]) -> CMatrix {
        let p = self.p;
        let m = self.m;
        let d = self.outcomes();
        let c = 1.0 / (p as f64 + 1.0);
        let mut y = CMatrix::zeros(d, d);
        for (e, &f) in freqs.iter().enumerate() {
            y[(e, e)] = c64(f, 0.0);
        }
        for (s, &basis_idx) in self.setting_digits(k).iter().enumerate() {
            let b = &self.bases[basis_idx];
            // rows, then columns
            apply_on_digits(y.as_mut_slice(), p, 2 * m, &[s], b);
            apply_on_digits(y.as_mut_slice(), p, 2 * m, &[s + m], &b.map(|z| z.conj()));
            // subtract c * tr_s(Y) ⊗ I_s
            let mut traced = y.clone();
            let off = crate::linalg::digit_offsets(p, &[s]);
            let bases = crate::linalg::digit_bases(p, m, &[s]);
            for &rb in &bases {
                for &cb in &bases {
                    let mut t = ZERO;
                    for &o in &off {
                        t += y[(rb + o, cb + o)];
                    }
                    for (i, &oi) in off.iter().enumerate() {
                        for (j, &oj) in off.iter().enumerate() {
                            traced[(rb + oi, cb + oj)] = if i == j { t } else { ZERO };
                        }
                    }
                }
            }
            y -= traced * c64(c, 0.0);
        }
        y
    }

    /// Linear-inversion estimate from exact outcome distributions (no noise).
    pub fn reconstruct_exact(&self, sigma: &CMatrix) -> CMatrix {
        let d = self.outcomes();
        (0..self.settings()).fold(CMatrix::zeros(d, d), |acc, k| {
            acc + self.invert_setting(k, &self.distribution(sigma, k))
        })
    }

    /// Shot-noise estimate projected back onto density matrices.
    pub fn estimate<R: Rng + ?Sized>(&self, sigma: &CMatrix, shots: u64, rng: &mut R) -> CMatrix {
        let d = self.outcomes();
        let mut acc = CMatrix::zeros(d, d);
        for k in 0..self.settings() {
            let probs = self.distribution(sigma, k);
            let counts = multinomial(shots, &probs, rng);
            let freqs: Vec<f64> = counts.iter().map(|&c| c as f64 / shots as f64).collect();
            acc += self.invert_setting(k, &freqs);
        }
        let herm = (&acc + acc.adjoint()) * c64(0.5, 0.0);
        project_to_density(&herm)
    }

    /// Shots per setting so that every one of `estimates` states is within
    /// trace-norm distance `tol` with probability at least `1 - delta`
    /// (union bound over settings and states, L1 concentration of the
    /// empirical distribution).
    pub fn required_shots(&self, tol: f64, estimates: usize, delta: f64) -> Result<u64> {
        if tol.is_nan() || tol <= 0.0 || delta.is_nan() || delta <= 0.0 || delta >= 1.0 {
            return Err(Error::Config("tomography tolerance and delta must be positive".into()));
        }
        let p = self.p as f64;
        let per_site = (2.0 * p - 1.0) / (p + 1.0);
        let t = tol / (self.settings() as f64 * per_site.powi(self.m as i32));
        let k = self.outcomes() as f64;
        let log_term = k * std::f64::consts::LN_2
            + ((self.settings() * estimates.max(1)) as f64 / delta).ln();
        let s = (2.0 / (t * t)) * log_term;
        if !s.is_finite() || s > 1e18 {
            return Err(Error::DimensionGuard(format!("{s:.3e} shots per setting")));
        }
        Ok(s.ceil() as u64)
    }
}
