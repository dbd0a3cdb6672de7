//! Sequential gate lists: swap staircases for shifts and tensor-factor
//! pumping.

use serde::{Deserialize, Serialize};

use crate::circuit::{conjugate_through, Circuit};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, ONE};
use crate::operator::{GateRecord, LocalOperator};
use crate::pauli::swap_operator;

use super::map::{factor_shift_qca, qca_from_gates, Part, QCAMap, TensorFactorization, TRUNC_TOL};

const UNITARY_TOL: f64 = 1e-10;

/// Gates applied one after another, first gate first.
#[derive(Clone, Debug)]
pub struct StaircaseCircuit {
    n: usize,
    p: usize,
    gates: Vec<LocalOperator>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StaircaseRecord {
    pub n: usize,
    pub p: usize,
    pub gates: Vec<GateRecord>,
}

impl StaircaseCircuit {
    pub fn new(n: usize, p: usize, gates: Vec<LocalOperator>) -> Result<Self> {
        for g in &gates {
            if g.p() != p {
                return Err(Error::InvalidDimension("gate with wrong local dimension".into()));
            }
            g.check_range(n)?;
            let dev = g.unitarity_deviation();
            if dev > UNITARY_TOL {
                return Err(Error::NonUnitary(dev));
            }
        }
        Ok(StaircaseCircuit { n, p, gates })
    }

    pub fn empty(n: usize, p: usize) -> Self {
        StaircaseCircuit { n, p, gates: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn gates(&self) -> &[LocalOperator] {
        &self.gates
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    pub fn supports(&self) -> Vec<Vec<usize>> {
        self.gates.iter().map(|g| g.support().to_vec()).collect()
    }

    /// This circuit followed by `other`.
    pub fn then(&self, other: &StaircaseCircuit) -> Result<StaircaseCircuit> {
        if other.n != self.n || other.p != self.p {
            return Err(Error::InvalidDimension("registers differ".into()));
        }
        let mut gates = self.gates.clone();
        gates.extend(other.gates.iter().cloned());
        Ok(StaircaseCircuit { n: self.n, p: self.p, gates })
    }

    pub fn inverse(&self) -> StaircaseCircuit {
        StaircaseCircuit { n: self.n, p: self.p, gates: self.gates.iter().rev().map(|g| g.adjoint()).collect() }
    }

    /// `U op U†`.
    pub fn conjugate(&self, op: &LocalOperator) -> LocalOperator {
        conjugate_through(&self.gates, op, TRUNC_TOL)
    }

    pub fn to_qca(&self) -> Result<QCAMap> {
        qca_from_gates(self.n, self.p, &self.gates)
    }

    /// One gate per layer.
    pub fn to_circuit(&self) -> Result<Circuit> {
        Circuit::sequential(self.n, self.p, self.gates.clone())
    }

    pub fn to_record(&self) -> StaircaseRecord {
        StaircaseRecord { n: self.n, p: self.p, gates: self.gates.iter().map(|g| g.to_record()).collect() }
    }

    pub fn from_record(rec: &StaircaseRecord) -> Result<Self> {
        let gates = rec
            .gates
            .iter()
            .map(|g| LocalOperator::from_record(rec.p, g))
            .collect::<Result<Vec<_>>>()?;
        StaircaseCircuit::new(rec.n, rec.p, gates)
    }
}

/// Exchanges one tensor factor between two sites, leaving the other.
pub fn partial_swap(factor: &TensorFactorization, part: Part) -> CMatrix {
    let p = factor.p();
    let mut m = CMatrix::zeros(p * p, p * p);
    for x in 0..p {
        for y in 0..p {
            let ((xa, xb), (ya, yb)) = (factor.split(x), factor.split(y));
            let (u, v) = match part {
                Part::B => (factor.join(xa, yb), factor.join(ya, xb)),
                Part::A => (factor.join(ya, xb), factor.join(xa, yb)),
            };
            m[(u + p * v, x + p * y)] = ONE;
        }
    }
    m
}

/// Swap staircase moving every site (or one factor of it) by `e`:
/// `(n-1)|e|` gates, the wrap-around bond never used.
pub fn compile_shift(
    n: usize,
    p: usize,
    e: i64,
    factor: Option<(TensorFactorization, Part)>,
) -> Result<StaircaseCircuit> {
    let gate = match factor {
        None => swap_operator(p)?,
        Some((f, part)) => {
            if f.p() != p {
                return Err(Error::InvalidDimension(format!("{}x{} does not factor {p}", f.pa, f.pb)));
            }
            partial_swap(&f, part)
        }
    };
    let mut gates = Vec::new();
    if n >= 2 {
        for _ in 0..e.unsigned_abs() {
            let bonds: Box<dyn Iterator<Item = usize>> =
                if e > 0 { Box::new((0..n - 1).rev()) } else { Box::new(0..n - 1) };
            for i in bonds {
                gates.push(LocalOperator::new(p, vec![i, i + 1], gate.clone())?);
            }
        }
    }
    StaircaseCircuit::new(n, p, gates)
}

/// Staircase of `n - 1` gates swapping the second factors of neighbours,
/// which moves that factor one site along the ring and fixes the first.
pub fn pump_subalgebra(n: usize, factor: TensorFactorization) -> Result<StaircaseCircuit> {
    compile_shift(n, factor.p(), 1, Some((factor, Part::B)))
}

/// The pumping map built directly by relabelling factor indices.
pub fn beta_direct(n: usize, factor: TensorFactorization) -> Result<QCAMap> {
    factor_shift_qca(n, factor, Part::B, 1)
}
