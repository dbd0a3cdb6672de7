//! Compiling a QCA given in decomposed form (shifts, a tensor-factor pump
//! and a translation-invariant circuit) into one sequential gate list.

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, CircuitRecord};
use crate::error::{Error, Result};

use super::blend::{two_layer_decompose, Spacing};
use super::map::{compose_qca, factor_shift_qca, qca_from_circuit, shift_qca, Part, QCAMap, TensorFactorization};
use super::staircase::{compile_shift, pump_subalgebra, StaircaseCircuit};

const MATCH_TOL: f64 = 1e-8;

fn default_part() -> Part {
    Part::B
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ShiftSpec {
    pub e: i64,
    /// Shift only one factor of each site.
    #[serde(default)]
    pub factor: Option<TensorFactorization>,
    #[serde(default = "default_part")]
    pub part: Part,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompileSpec {
    pub n: usize,
    pub p: usize,
    #[serde(default)]
    pub shifts: Vec<ShiftSpec>,
    #[serde(default)]
    pub pump: Option<TensorFactorization>,
    /// Use the inverse pump, as in `α = ζ ∘ η⁻¹ ∘ β⁻¹`.
    #[serde(default = "yes")]
    pub pump_inverse: bool,
    #[serde(default)]
    pub circuit: Option<CircuitRecord>,
    #[serde(default)]
    pub spacing: Spacing,
}

impl CompileSpec {
    pub fn identity(n: usize, p: usize) -> Self {
        CompileSpec { n, p, shifts: Vec::new(), pump: None, pump_inverse: true, circuit: None, spacing: Spacing::Tight }
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct GateCounts {
    pub shift: usize,
    pub pump: usize,
    pub mu2: usize,
    pub mu1: usize,
}

impl GateCounts {
    pub fn total(&self) -> usize {
        self.shift + self.pump + self.mu2 + self.mu1
    }
}

#[derive(Clone, Debug)]
pub struct Compiled {
    pub circuit: StaircaseCircuit,
    /// The specified QCA, composed from image tables.
    pub target: QCAMap,
    pub counts: GateCounts,
    /// Largest image difference between the gate list and the target.
    pub distance: f64,
}

/// Time order: shifts, pump, then the `μ₂` and `μ₁` blocks of the circuit.
pub fn compile_qca(spec: &CompileSpec) -> Result<Compiled> {
    let (n, p) = (spec.n, spec.p);
    let mut out = StaircaseCircuit::empty(n, p);
    let mut target = QCAMap::identity(n, p)?;
    let mut counts = GateCounts::default();
    for s in &spec.shifts {
        let (stair, table) = match s.factor {
            None => (compile_shift(n, p, s.e, None)?, shift_qca(n, p, s.e)?),
            Some(f) => (compile_shift(n, p, s.e, Some((f, s.part)))?, factor_shift_qca(n, f, s.part, s.e)?),
        };
        counts.shift += stair.gate_count();
        out = out.then(&stair)?;
        target = compose_qca(&table, &target)?;
    }
    if let Some(f) = spec.pump {
        if f.p() != p {
            return Err(Error::InvalidDimension(format!("{}x{} does not factor {p}", f.pa, f.pb)));
        }
        let forward = pump_subalgebra(n, f)?;
        let (stair, e) = if spec.pump_inverse { (forward.inverse(), -1) } else { (forward, 1) };
        counts.pump = stair.gate_count();
        out = out.then(&stair)?;
        target = compose_qca(&factor_shift_qca(n, f, Part::B, e)?, &target)?;
    }
    if let Some(rec) = &spec.circuit {
        let ti = Circuit::from_record(rec)?;
        if ti.n() != n || ti.p() != p {
            return Err(Error::InvalidDimension("circuit register differs from the specification".into()));
        }
        if ti.gate_count() > 0 {
            let split = two_layer_decompose(&ti, spec.spacing)?;
            let (m2, m1) = (split.mu2_circuit()?, split.mu1_circuit()?);
            counts.mu2 = m2.gate_count();
            counts.mu1 = m1.gate_count();
            out = out.then(&m2)?.then(&m1)?;
            target = compose_qca(&qca_from_circuit(&ti)?, &target)?;
        }
    }
    let distance = out.to_qca()?.distance(&target);
    if distance > MATCH_TOL {
        return Err(Error::InternalConsistency(format!("compiled circuit misses the target by {distance:.2e}")));
    }
    Ok(Compiled { circuit: out, target, counts, distance })
}
