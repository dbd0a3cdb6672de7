//! The doubled circuit `U ⊗ U†` on `2n` sites built from learned images.
//!
//! Site `i` of the primed copy is `n + i`. With `S` the swap of `i` and
//! `n + i`, `prod_i (U S_i U†) · prod_i S_i = U ⊗ U†`, and each `U S_i U†`
//! is a combination of images of generalized Pauli operators.

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, CircuitRecord};
use crate::error::{Error, Result};
use crate::haar::haar_vector;
use crate::linalg::{c64, op_norm, polar_unitary, CMatrix, C64, ONE, ZERO};
use crate::operator::LocalOperator;
use crate::pauli::{generalized_pauli, swap_operator};
use crate::seed::rng_from_seed;
use crate::state::StateVector;

use super::learn::HeisenbergImage;

const VERIFY_SEED: u64 = 0x5eed_d0b1_e5ee_d5ed;
const VERIFY_STATES: usize = 20;

/// `(U ⊗ 1) S_{i,i'} (U† ⊗ 1)` from the images at `i`, on `B_i ∪ {n + i}`.
pub fn conjugated_swap(image: &HeisenbergImage, n: usize, tol: f64) -> Result<LocalOperator> {
    let p = image.image_x.p();
    let primed = n + image.site;
    if image.image_x.support().iter().chain(image.image_z.support()).any(|&s| s >= n) {
        return Err(Error::SupportOutOfRange("image leaves the unprimed register".into()));
    }
    let mut total = LocalOperator::scalar(p, ZERO);
    let mut xa = LocalOperator::identity(p);
    for a in 0..p {
        let mut zb = LocalOperator::identity(p);
        for b in 0..p {
            let pauli = generalized_pauli(p, a as i64, b as i64)?.adjoint();
            let term = xa.mul(&zb).mul(&LocalOperator::single(p, primed, pauli)?);
            total = total.add(&term);
            zb = zb.mul(&image.image_z);
        }
        xa = xa.mul(&image.image_x);
    }
    let out = total.scale(c64(1.0 / p as f64, 0.0));
    let dev = out.unitarity_deviation();
    if dev > tol {
        return Err(Error::ReconstructionQuality(format!(
            "conjugated swap at site {} is {dev:.2e} from unitary",
            image.site
        )));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct LearnedDoubleCircuit {
    n: usize,
    circuit: Circuit,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DoubleCircuitRecord {
    pub n: usize,
    pub circuit: CircuitRecord,
}

impl LearnedDoubleCircuit {
    /// Number of sites of one copy.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Time-ordered circuit on `2n` sites: the plain swap layer, then the
    /// conjugated swaps packed into layers of disjoint gates.
    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn to_record(&self) -> DoubleCircuitRecord {
        DoubleCircuitRecord { n: self.n, circuit: self.circuit.to_record() }
    }

    pub fn from_record(rec: &DoubleCircuitRecord) -> Result<Self> {
        let circuit = Circuit::from_record(&rec.circuit)?;
        if circuit.n() != 2 * rec.n {
            return Err(Error::InvalidDimension("double circuit must span 2n sites".into()));
        }
        Ok(LearnedDoubleCircuit { n: rec.n, circuit })
    }
}

/// Packs gates into layers greedily; the gates must pairwise commute.
fn pack_layers(gates: Vec<LocalOperator>) -> Vec<Vec<LocalOperator>> {
    let mut layers: Vec<Vec<LocalOperator>> = Vec::new();
    for g in gates {
        match layers.iter_mut().find(|l| l.iter().all(|h| !h.overlaps(g.support()))) {
            Some(l) => l.push(g),
            None => layers.push(vec![g]),
        }
    }
    layers
}

/// Assembles the doubled circuit from one image per site. Gates within
/// `tol` of unitary are projected onto the nearest unitary.
pub fn assemble_double_circuit(images: &[HeisenbergImage], p: usize, tol: f64) -> Result<LearnedDoubleCircuit> {
    let n = images.len();
    if n == 0 {
        return Err(Error::EmptyRegion("no images".into()));
    }
    let mut sorted: Vec<&HeisenbergImage> = images.iter().collect();
    sorted.sort_by_key(|im| im.site);
    if sorted.iter().enumerate().any(|(i, im)| im.site != i) {
        return Err(Error::Config("need exactly one image per site".into()));
    }
    let swap = swap_operator(p)?;
    let plain = (0..n)
        .map(|i| LocalOperator::new(p, vec![i, n + i], swap.clone()))
        .collect::<Result<Vec<_>>>()?;
    let conj = sorted
        .iter()
        .map(|im| {
            let g = conjugated_swap(im, n, tol)?;
            LocalOperator::new(p, g.support().to_vec(), polar_unitary(g.matrix()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut layers = vec![plain];
    layers.extend(pack_layers(conj));
    Ok(LearnedDoubleCircuit { n, circuit: Circuit::new(2 * n, p, layers)? })
}

/// `V` on the first copy and `V†` on the second.
pub fn reference_double(truth: &Circuit) -> Result<Circuit> {
    let n = truth.n();
    truth.relocated(0, 2 * n)?.then(&truth.inverse().relocated(n, 2 * n)?)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    /// Largest trace distance between outputs over fixed random product inputs.
    pub trace_distance: f64,
    /// Phase-aligned operator-norm distance, when the register is small enough.
    pub operator_distance: Option<f64>,
}

impl VerifyReport {
    pub fn distance(&self) -> f64 {
        self.trace_distance.max(self.operator_distance.unwrap_or(0.0))
    }
}

fn run(c: &Circuit, v: &StateVector) -> Result<StateVector> {
    let mut s = v.clone();
    c.apply(&mut s)?;
    Ok(s)
}

fn axpy(a: &StateVector, z: C64, b: &StateVector) -> Result<StateVector> {
    let mut out = a.clone();
    for (x, y) in out.amplitudes_mut().iter_mut().zip(b.amplitudes()) {
        *x -= z * y;
    }
    Ok(out)
}

fn dense(c: &Circuit) -> Result<CMatrix> {
    let d = c.p().pow(c.n() as u32);
    let mut m = CMatrix::zeros(d, d);
    for j in 0..d {
        let out = run(c, &StateVector::basis(c.n(), c.p(), j)?)?;
        for (i, a) in out.amplitudes().iter().enumerate() {
            m[(i, j)] = *a;
        }
    }
    Ok(m)
}

/// `|| A - e^{i phi} B ||` with the phase taken from `tr(B† A)` for dense
/// registers and from a random overlap otherwise; the larger case runs
/// power iteration.
fn operator_distance(a: &Circuit, b: &Circuit) -> Result<Option<f64>> {
    let d = match crate::linalg::ipow(a.p(), a.n()) {
        Ok(d) => d,
        Err(_) => return Ok(None),
    };
    if d <= 256 {
        let (ma, mb) = (dense(a)?, dense(b)?);
        let ov: C64 = (mb.adjoint() * &ma).diagonal().iter().sum();
        let phase = if ov.norm() > 0.0 { ov / ov.norm() } else { ONE };
        return Ok(Some(op_norm(&(ma - mb * phase))));
    }
    if d > 1 << 12 {
        return Ok(None);
    }
    let mut rng = rng_from_seed(VERIFY_SEED ^ 1);
    let v0 = StateVector::from_amplitudes(a.n(), a.p(), haar_vector(d, &mut rng).iter().cloned().collect())?;
    let ov = run(b, &v0)?.inner(&run(a, &v0)?);
    let phase = if ov.norm() > 0.0 { ov / ov.norm() } else { ONE };
    let (ai, bi) = (a.inverse(), b.inverse());
    let mut v = v0;
    let mut sigma = 0.0;
    for _ in 0..60 {
        let w = axpy(&run(a, &v)?, phase, &run(b, &v)?)?;
        let u = axpy(&run(&ai, &w)?, phase.conj(), &run(&bi, &w)?)?;
        let nu = u.norm_sqr().sqrt();
        let next = nu.sqrt();
        if nu == 0.0 {
            return Ok(Some(0.0));
        }
        let amps = u.amplitudes().iter().map(|z| z / nu).collect();
        v = StateVector::from_amplitudes(a.n(), a.p(), amps)?;
        let done = (next - sigma).abs() <= 1e-6 * next.max(1e-300);
        sigma = next;
        if done {
            break;
        }
    }
    Ok(Some(sigma))
}

/// Compares the learned doubled circuit with `V ⊗ V†` for the true `V`.
pub fn verify_double(learned: &LearnedDoubleCircuit, truth: &Circuit) -> Result<VerifyReport> {
    if truth.n() != learned.n() || truth.p() != learned.circuit.p() {
        return Err(Error::InvalidDimension("learned and true registers differ".into()));
    }
    let reference = reference_double(truth)?;
    let (n2, p) = (2 * truth.n(), truth.p());
    let mut rng = rng_from_seed(VERIFY_SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..VERIFY_STATES {
        let factors: Vec<_> = (0..n2).map(|_| haar_vector(p, &mut rng)).collect();
        let input = StateVector::product(p, &factors)?;
        let (b, a) = (run(&reference, &input)?, run(&learned.circuit, &input)?);
        let ov = b.inner(&a);
        let phase = if ov.norm() > 0.0 { ov / ov.norm() } else { ONE };
        // 1 - |<b|a>|^2 from the residual, which keeps small distances accurate
        let resid = axpy(&a, phase, &b)?.norm_sqr();
        worst = worst.max((0.5 * resid * (1.0 + ov.norm())).sqrt());
    }
    Ok(VerifyReport { trace_distance: worst, operator_distance: operator_distance(&learned.circuit, &reference)? })
}
