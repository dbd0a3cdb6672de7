//! Dense pure and mixed states.

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{apply_on_digits, digit_bases, digit_offsets, ipow, CMatrix, C64, ONE, ZERO};
use crate::operator::LocalOperator;

/// Largest amplitude count a dense state may hold.
pub const MAX_STATE_DIM: usize = 1 << 24;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    p: usize,
    amps: Vec<C64>,
}

fn guarded_dim(n: usize, p: usize) -> Result<usize> {
    if p < 2 {
        return Err(Error::InvalidDimension(format!("local dimension {p} < 2")));
    }
    let d = ipow(p, n)?;
    if d > MAX_STATE_DIM {
        return Err(Error::DimensionGuard(format!(
            "state of {n} qudits with p = {p} has {d} amplitudes"
        )));
    }
    Ok(d)
}

impl StateVector {
    pub fn zero(n: usize, p: usize) -> Result<Self> {
        Self::basis(n, p, 0)
    }

    pub fn basis(n: usize, p: usize, index: usize) -> Result<Self> {
        let d = guarded_dim(n, p)?;
        if index >= d {
            return Err(Error::Range(format!("basis index {index} >= {d}")));
        }
        let mut amps = vec![ZERO; d];
        amps[index] = ONE;
        Ok(StateVector { n, p, amps })
    }

    /// Product state from one normalized vector per site (site 0 first).
    pub fn product(p: usize, factors: &[DVector<C64>]) -> Result<Self> {
        let n = factors.len();
        let d = guarded_dim(n, p)?;
        for f in factors {
            if f.len() != p {
                return Err(Error::InvalidDimension(format!(
                    "site vector of length {} for p = {p}",
                    f.len()
                )));
            }
        }
        let mut amps = vec![ONE; d];
        for (idx, a) in amps.iter_mut().enumerate() {
            let mut rest = idx;
            for f in factors {
                *a *= f[rest % p];
                rest /= p;
            }
        }
        Ok(StateVector { n, p, amps })
    }

    pub fn from_amplitudes(n: usize, p: usize, amps: Vec<C64>) -> Result<Self> {
        let d = guarded_dim(n, p)?;
        if amps.len() != d {
            return Err(Error::InvalidDimension(format!(
                "{} amplitudes for dimension {d}",
                amps.len()
            )));
        }
        let s = StateVector { n, p, amps };
        let nrm = s.norm_sqr();
        if (nrm - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidDimension(format!("state norm^2 = {nrm}")));
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.iter().zip(other.amps.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn apply(&mut self, op: &LocalOperator) -> Result<()> {
        if op.p() != self.p {
            return Err(Error::InvalidDimension("operator and state differ in p".into()));
        }
        op.check_range(self.n)?;
        if op.support().is_empty() {
            let z = op.matrix()[(0, 0)];
            self.amps.iter_mut().for_each(|a| *a *= z);
            return Ok(());
        }
        apply_on_digits(&mut self.amps, self.p, self.n, op.support(), op.matrix());
        Ok(())
    }

    pub fn expectation(&self, op: &LocalOperator) -> Result<C64> {
        let mut tmp = self.clone();
        tmp.apply(op)?;
        Ok(self.inner(&tmp))
    }

    /// Reduced density matrix on `sites` (sorted internally).
    pub fn reduced_density(&self, sites: &[usize]) -> Result<DensityMatrix> {
        let mut s = sites.to_vec();
        s.sort_unstable();
        s.dedup();
        match s.last() {
            None => return Err(Error::EmptyRegion("reduced density of no sites".into())),
            Some(&last) if last >= self.n => {
                return Err(Error::SupportOutOfRange(format!("site {last} >= {}", self.n)));
            }
            _ => {}
        }
        let off = digit_offsets(self.p, &s);
        let bases = digit_bases(self.p, self.n, &s);
        let d = off.len();
        let mut m = CMatrix::zeros(d, d);
        let mut buf = vec![ZERO; d];
        for &e in &bases {
            for (k, &o) in off.iter().enumerate() {
                buf[k] = self.amps[o + e];
            }
            for b in 0..d {
                let cb = buf[b].conj();
                if cb == ZERO {
                    continue;
                }
                for a in 0..d {
                    m[(a, b)] += buf[a] * cb;
                }
            }
        }
        Ok(DensityMatrix { p: self.p, support: s, matrix: m })
    }

    /// Marginal distribution of the computational-basis digits on `sites`.
    pub fn marginal(&self, sites: &[usize]) -> Result<Vec<f64>> {
        for &s in sites {
            if s >= self.n {
                return Err(Error::SupportOutOfRange(format!("site {s} >= {}", self.n)));
            }
        }
        let d = ipow(self.p, sites.len())?;
        let mut probs = vec![0.0; d];
        for (idx, a) in self.amps.iter().enumerate() {
            let mut local = 0;
            let mut mult = 1;
            for &s in sites {
                local += ((idx / self.p.pow(s as u32)) % self.p) * mult;
                mult *= self.p;
            }
            probs[local] += a.norm_sqr();
        }
        Ok(probs)
    }

    /// Samples the digits on `sites` in the computational basis.
    pub fn sample_digits<R: Rng + ?Sized>(&self, sites: &[usize], rng: &mut R) -> Result<Vec<usize>> {
        let probs = self.marginal(sites)?;
        let local = sample_index(&probs, rng);
        let mut rest = local;
        Ok(sites
            .iter()
            .map(|_| {
                let d = rest % self.p;
                rest /= self.p;
                d
            })
            .collect())
    }
}

pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in probs.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    probs.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub p: usize,
    pub support: Vec<usize>,
    pub matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(p: usize, support: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        let op = LocalOperator::new(p, support, matrix)?;
        let dm = DensityMatrix { p, support: op.support().to_vec(), matrix: op.matrix().clone() };
        dm.validate(1e-8)?;
        Ok(dm)
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let herm = crate::linalg::hermiticity_deviation(&self.matrix);
        let tr = crate::linalg::trace(&self.matrix);
        if herm > tol || (tr - ONE).norm() > tol {
            return Err(Error::InvalidObservable(format!(
                "not a density matrix (hermiticity {herm:.2e}, trace {tr})"
            )));
        }
        let (vals, _) = crate::linalg::hermitian_eigen(&self.matrix);
        if vals.first().copied().unwrap_or(0.0) < -tol {
            return Err(Error::InvalidObservable("negative eigenvalue".into()));
        }
        Ok(())
    }

    pub fn as_operator(&self) -> LocalOperator {
        LocalOperator::new(self.p, self.support.clone(), self.matrix.clone()).expect("valid")
    }

    pub fn partial_trace(&self, sites: &[usize]) -> DensityMatrix {
        let op = self.as_operator().partial_trace(sites);
        DensityMatrix { p: self.p, support: op.support().to_vec(), matrix: op.matrix().clone() }
    }

    /// Half the trace norm of the difference; supports must match.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.support != other.support {
            return Err(Error::SupportOutOfRange("density supports differ".into()));
        }
        Ok(trace_distance(&self.matrix, &other.matrix))
    }
}

/// Half the trace norm of `a - b` for hermitian arguments.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let (vals, _) = crate::linalg::hermitian_eigen(&(a - b));
    0.5 * vals.iter().map(|v| v.abs()).sum::<f64>()
}
