//! Splitting operators into weighted density matrices.

use crate::error::{Error, Result};
use crate::linalg::{c64, hermitian_eigen, hermiticity_deviation, CMatrix, C64};

/// `H = alpha rho_plus - beta rho_minus` with orthogonal densities.
#[derive(Clone, Debug)]
pub struct HermitianSplit {
    pub alpha: f64,
    pub rho_plus: Option<CMatrix>,
    pub beta: f64,
    pub rho_minus: Option<CMatrix>,
}

#[derive(Clone, Debug)]
pub struct WeightedDensity {
    pub weight: C64,
    pub density: CMatrix,
}

fn check_square(m: &CMatrix) -> Result<()> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::InvalidObservable(format!("operator shape {:?}", m.shape())));
    }
    Ok(())
}

pub fn hermitian_split(h: &CMatrix) -> Result<HermitianSplit> {
    check_square(h)?;
    let scale = crate::linalg::max_abs(h).max(1.0);
    let herm = hermiticity_deviation(h);
    if herm > 1e-10 * scale {
        return Err(Error::InvalidObservable(format!(
            "operator is not hermitian (deviation {herm:.2e})"
        )));
    }
    let (vals, vecs) = hermitian_eigen(h);
    let cut = 1e-13 * scale;
    let d = h.nrows();
    let mut plus = CMatrix::zeros(d, d);
    let mut minus = CMatrix::zeros(d, d);
    let (mut alpha, mut beta) = (0.0, 0.0);
    for (k, &lam) in vals.iter().enumerate() {
        let v = vecs.column(k);
        let proj = v * v.adjoint();
        if lam > cut {
            plus += proj * c64(lam, 0.0);
            alpha += lam;
        } else if lam < -cut {
            minus += proj * c64(-lam, 0.0);
            beta -= lam;
        }
    }
    Ok(HermitianSplit {
        alpha,
        rho_plus: (alpha > 0.0).then(|| plus / c64(alpha, 0.0)),
        beta,
        rho_minus: (beta > 0.0).then(|| minus / c64(beta, 0.0)),
    })
}

/// Writes `O` as a combination of at most four density matrices.
pub fn operator_to_densities(o: &CMatrix) -> Result<Vec<WeightedDensity>> {
    check_square(o)?;
    let h1 = (o + o.adjoint()).scale(0.5);
    let h2 = (o - o.adjoint()) * c64(0.0, -0.5);
    let mut out = Vec::with_capacity(4);
    for (part, phase) in [(h1, c64(1.0, 0.0)), (h2, c64(0.0, 1.0))] {
        let s = hermitian_split(&part)?;
        if let Some(r) = s.rho_plus {
            out.push(WeightedDensity { weight: phase * s.alpha, density: r });
        }
        if let Some(r) = s.rho_minus {
            out.push(WeightedDensity { weight: -phase * s.beta, density: r });
        }
    }
    Ok(out)
}

pub fn recombine(parts: &[WeightedDensity], d: usize) -> CMatrix {
    parts
        .iter()
        .fold(CMatrix::zeros(d, d), |acc, w| acc + &w.density * w.weight)
}
