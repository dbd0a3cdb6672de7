//! Generalized Pauli (Weyl) operators on a single qudit and the two-qudit swap.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{c64, CMatrix, C64, ONE};

pub fn omega(p: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI / p as f64)
}

pub fn omega_pow(p: usize, k: i64) -> C64 {
    let r = k.rem_euclid(p as i64);
    C64::from_polar(1.0, 2.0 * PI * r as f64 / p as f64)
}

fn check_p(p: usize) -> Result<()> {
    if p < 2 {
        return Err(Error::InvalidDimension(format!("local dimension {p} < 2")));
    }
    Ok(())
}

/// `X = sum_j |j+1><j|`.
pub fn shift(p: usize) -> CMatrix {
    let mut m = CMatrix::zeros(p, p);
    for j in 0..p {
        m[((j + 1) % p, j)] = ONE;
    }
    m
}

/// `Z = diag(omega^j)`.
pub fn clock(p: usize) -> CMatrix {
    let mut m = CMatrix::zeros(p, p);
    for j in 0..p {
        m[(j, j)] = omega_pow(p, j as i64);
    }
    m
}

/// `X^a Z^b`; exponents are reduced mod `p`.
pub fn generalized_pauli(p: usize, a: i64, b: i64) -> Result<CMatrix> {
    check_p(p)?;
    let a = a.rem_euclid(p as i64) as usize;
    let b = b.rem_euclid(p as i64);
    let mut m = CMatrix::zeros(p, p);
    for j in 0..p {
        m[((j + a) % p, j)] = omega_pow(p, b * j as i64);
    }
    Ok(m)
}

/// Two-site swap in the little-endian basis `|j_0 + p j_1>`.
pub fn swap_operator(p: usize) -> Result<CMatrix> {
    check_p(p)?;
    let d = p * p;
    let mut m = CMatrix::zeros(d, d);
    for j0 in 0..p {
        for j1 in 0..p {
            m[(j1 + p * j0, j0 + p * j1)] = ONE;
        }
    }
    Ok(m)
}

/// Matrix unit `|j><k|`.
pub fn matrix_unit(p: usize, j: usize, k: usize) -> CMatrix {
    let mut m = CMatrix::zeros(p, p);
    m[(j, k)] = ONE;
    m
}

/// Discrete Fourier transform, columns are the eigenvectors of `X`.
pub fn fourier(p: usize) -> CMatrix {
    let s = 1.0 / (p as f64).sqrt();
    CMatrix::from_fn(p, p, |j, k| omega_pow(p, -((j * k) as i64)) * s)
}

/// Pauli string index for `sites` qudits: digit pairs `(a_j, b_j)` packed as
/// `a_j + p b_j` in little-endian order.
pub fn pauli_string(p: usize, sites: usize, index: usize) -> Result<CMatrix> {
    let mut factors = Vec::with_capacity(sites);
    let mut rest = index;
    for _ in 0..sites {
        let pair = rest % (p * p);
        rest /= p * p;
        factors.push(generalized_pauli(p, (pair % p) as i64, (pair / p) as i64)?);
    }
    Ok(crate::linalg::tensor_le(&factors))
}

/// Eigenbases of `X Z^c` for `c = 0..p` followed by the computational basis.
/// For prime `p` these are `p + 1` mutually unbiased bases.
pub fn mub_bases(p: usize) -> Result<Vec<CMatrix>> {
    check_p(p)?;
    let mut out = Vec::with_capacity(p + 1);
    for c in 0..p {
        let g = generalized_pauli(p, 1, c as i64)?;
        out.push(unitary_eigenbasis(&g, p)?);
    }
    out.push(CMatrix::identity(p, p));
    Ok(out)
}

/// Eigenbasis of a Weyl operator `g` whose `p`-th power is a phase times the
/// identity and whose spectrum is non-degenerate.
fn unitary_eigenbasis(g: &CMatrix, p: usize) -> Result<CMatrix> {
    let gp = crate::linalg::matrix_power(g, p);
    let phase = gp[(0, 0)];
    let gamma = C64::from_polar(1.0, -phase.arg() / p as f64);
    let h = g * gamma;
    let mut basis = CMatrix::zeros(p, p);
    for k in 0..p {
        let lam = omega_pow(p, k as i64);
        let mut proj = CMatrix::zeros(p, p);
        let mut pow = CMatrix::identity(p, p);
        for _ in 0..p {
            proj += &pow;
            pow = &pow * &h * lam.conj();
        }
        proj /= c64(p as f64, 0.0);
        let (best, norm) = (0..p)
            .map(|j| (j, proj.column(j).norm()))
            .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if norm < 1e-9 {
            return Err(Error::InternalConsistency(
                "degenerate Weyl spectrum".into(),
            ));
        }
        let col = proj.column(best) / c64(norm, 0.0);
        basis.set_column(k, &col);
    }
    Ok(basis)
}
