use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hermiticity_deviation, CMatrix};

/// Single-site conserved charge. Levels are shifted so the smallest is zero;
/// `offset` is the shift that was removed.
#[derive(Clone, Debug)]
pub struct ChargeOperator {
    p: usize,
    raw: CMatrix,
    levels: Vec<f64>,
    basis: CMatrix,
    offset: f64,
    diagonal: bool,
}

impl ChargeOperator {
    /// `diag(0, 1, ..., p-1)`.
    pub fn number(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidDimension(format!("local dimension {p} < 2")));
        }
        let raw = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(p, |j, _| {
            crate::linalg::c64(j as f64, 0.0)
        }));
        Self::from_hermitian(&raw)
    }

    pub fn from_hermitian(m: &CMatrix) -> Result<Self> {
        if !m.is_square() || m.nrows() < 2 {
            return Err(Error::InvalidObservable("charge must be a square matrix".into()));
        }
        if hermiticity_deviation(m) > 1e-10 {
            return Err(Error::InvalidObservable("charge is not hermitian".into()));
        }
        let p = m.nrows();
        let off_diag = (0..p)
            .flat_map(|i| (0..p).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .fold(0.0f64, |acc, (i, j)| acc.max(m[(i, j)].norm()));
        let (levels, basis, diagonal) = if off_diag == 0.0 {
            ((0..p).map(|j| m[(j, j)].re).collect::<Vec<_>>(), CMatrix::identity(p, p), true)
        } else {
            let (v, b) = hermitian_eigen(m);
            (v, b, false)
        };
        let offset = levels.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(ChargeOperator {
            p,
            raw: m.clone(),
            levels: levels.iter().map(|l| l - offset).collect(),
            basis,
            offset,
            diagonal,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// The charge as supplied, before shifting.
    pub fn raw(&self) -> &CMatrix {
        &self.raw
    }

    /// Shifted eigenvalues, matched to the columns of `basis`.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    pub fn max_level(&self) -> f64 {
        self.levels.iter().cloned().fold(0.0, f64::max)
    }

    /// The shifted single-site operator.
    pub fn shifted(&self) -> CMatrix {
        &self.raw - CMatrix::identity(self.p, self.p) * crate::linalg::c64(self.offset, 0.0)
    }
}

/// Integer key identifying a charge value up to rounding.
pub fn level_key(x: f64) -> i64 {
    (x * 1e6).round() as i64
}
