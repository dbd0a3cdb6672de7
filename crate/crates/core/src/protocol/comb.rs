//! Comb geometry: a spine chain with one charged tip per spine site. The
//! shallow gates conserve `sum_i (X_i + X_i†)` over the tips, while the
//! global ensemble only conserves `prod_i X_i`.

use std::sync::Arc;

use rand::Rng;

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::haar::haar_unitary;
use crate::linalg::{trace, CMatrix};
use crate::operator::LocalOperator;
use crate::pauli::{fourier, shift};
use crate::state::StateVector;

use super::charge::ChargeOperator;
use super::run::SymmetricInstance;
use super::sectors::{LazySymmetricHaar, SectorLayout, SymmetricUnitary};

/// `2 * spine` sites: spine site `i` is `i`, its tip is `spine + i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CombRegister {
    pub spine: usize,
    pub p: usize,
}

impl CombRegister {
    pub fn new(spine: usize, p: usize) -> Result<Self> {
        if spine < 2 || p < 2 {
            return Err(Error::InvalidDimension(format!("comb with spine {spine}, p = {p}")));
        }
        Ok(CombRegister { spine, p })
    }

    pub fn n(&self) -> usize {
        2 * self.spine
    }

    pub fn tip(&self, i: usize) -> usize {
        self.spine + i
    }

    pub fn is_tip(&self, site: usize) -> bool {
        site >= self.spine
    }

    /// Spine sites `range` together with their tips, sorted.
    pub fn column_sites(&self, range: std::ops::Range<usize>) -> Vec<usize> {
        let mut v: Vec<usize> = range.clone().collect();
        v.extend(range.map(|i| self.tip(i)));
        v
    }
}

/// Tip charge `X + X†`.
pub fn comb_conserved_charge(p: usize) -> CMatrix {
    let x = shift(p);
    &x + x.adjoint()
}

/// Haar gate on a comb edge: unconstrained between spine sites, block
/// diagonal in the tip's `X` eigenbasis between a spine site and its tip.
pub fn comb_symmetric_gate<R: Rng + ?Sized>(reg: &CombRegister, a: usize, b: usize, rng: &mut R) -> Result<LocalOperator> {
    let (lo, hi) = (a.min(b), a.max(b));
    if hi >= reg.n() {
        return Err(Error::SupportOutOfRange(format!("edge ({a}, {b})")));
    }
    let p = reg.p;
    if !reg.is_tip(hi) {
        if hi != lo + 1 {
            return Err(Error::Config(format!("({lo}, {hi}) is not a spine edge")));
        }
        return LocalOperator::new(p, vec![lo, hi], haar_unitary(p * p, rng));
    }
    if reg.is_tip(lo) || reg.tip(lo) != hi {
        return Err(Error::Config(format!("({lo}, {hi}) is not a comb edge")));
    }
    let layout = SectorLayout::multiplicative(p, &[lo, hi], &[false, true], fourier(p))?;
    SymmetricUnitary::sample(Arc::new(layout), rng).to_operator()
}

/// Layers cycle through even spine bonds, odd spine bonds and all tip bonds;
/// `depth` counts layers.
pub fn comb_shallow_circuit<R: Rng + ?Sized>(reg: &CombRegister, depth: usize, rng: &mut R) -> Result<Circuit> {
    let mut c = Circuit::empty(reg.n(), reg.p);
    for t in 0..depth {
        let mut layer = Vec::new();
        match t % 3 {
            2 => {
                for i in 0..reg.spine {
                    layer.push(comb_symmetric_gate(reg, i, reg.tip(i), rng)?);
                }
            }
            parity => {
                let mut i = parity;
                while i + 1 < reg.spine {
                    layer.push(comb_symmetric_gate(reg, i, i + 1, rng)?);
                    i += 2;
                }
            }
        }
        c.push_layer(layer)?;
    }
    Ok(c)
}

/// Haar-random unitary of the whole comb conserving only `prod_i X_i`.
pub fn comb_global_instance(reg: &CombRegister, seed: u64) -> Result<SymmetricInstance> {
    let sites: Vec<usize> = (0..reg.n()).collect();
    let charged: Vec<bool> = sites.iter().map(|&s| reg.is_tip(s)).collect();
    let layout = SectorLayout::multiplicative(reg.p, &sites, &charged, fourier(reg.p))?;
    Ok(SymmetricInstance::Global(LazySymmetricHaar::new(Arc::new(layout), seed)))
}

/// Protocol on the comb with spine intervals `A = [0, a)`, `B = [a, a + b)`.
#[derive(Clone, Debug)]
pub struct CombSetup {
    pub reg: CombRegister,
    pub a_len: usize,
    pub b_len: usize,
    pub initial: StateVector,
    layout_ab: Arc<SectorLayout>,
    tip_charge: CMatrix,
}

impl CombSetup {
    pub fn new(reg: CombRegister, a_len: usize, b_len: usize) -> Result<Self> {
        if a_len == 0 || b_len == 0 || a_len + b_len >= reg.spine {
            return Err(Error::EmptyRegion("comb regions must be non-empty".into()));
        }
        let p = reg.p;
        let tip_charge = comb_conserved_charge(p);
        let charge = ChargeOperator::from_hermitian(&tip_charge)?;
        let ab = reg.column_sites(0..a_len + b_len);
        let charged: Vec<bool> = ab.iter().map(|&s| reg.is_tip(s)).collect();
        let layout_ab = Arc::new(SectorLayout::additive(&ab, &charged, &charge)?);
        let f = fourier(p);
        let zero = nalgebra::DVector::from_fn(p, |j, _| if j == 0 { crate::linalg::ONE } else { crate::linalg::ZERO });
        let factors: Vec<_> = (0..reg.n())
            .map(|s| {
                if reg.is_tip(s) && s - reg.spine < a_len {
                    f.column(0).into_owned()
                } else {
                    zero.clone()
                }
            })
            .collect();
        let initial = StateVector::product(p, &factors)?;
        Ok(CombSetup { reg, a_len, b_len, initial, layout_ab, tip_charge })
    }

    /// Charge initially in region A.
    pub fn q(&self) -> f64 {
        2.0 * self.a_len as f64
    }

    /// Shallow gates conserve every tip's `X`, so only the twirl on `AB` moves charge.
    pub fn expected_shallow(&self) -> f64 {
        self.q() * self.a_len as f64 / (self.a_len + self.b_len) as f64
    }

    pub fn expected_global(&self) -> f64 {
        0.0
    }

    pub fn run_once<R: Rng + ?Sized>(&self, w: &SymmetricInstance, rng: &mut R) -> Result<f64> {
        let mut state = self.initial.clone();
        SymmetricUnitary::sample(self.layout_ab.clone(), rng).apply(&mut state)?;
        w.apply(&mut state)?;
        let mut total = 0.0;
        for i in 0..self.a_len {
            let rho = state.reduced_density(&[self.reg.tip(i)])?;
            total += trace(&(&rho.matrix * &self.tip_charge)).re;
        }
        Ok(total)
    }
}
