//! Preparation, single runs, analytic averages and the repeated decision rule.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{brickwork, Circuit};
use crate::error::{Error, Result};
use crate::linalg::{apply_on_digits, CMatrix};
use crate::operator::LocalOperator;
use crate::par::{try_map_indexed, Execution};
use crate::seed::child_rng;
use crate::state::{sample_index, StateVector};

use super::charge::ChargeOperator;
use super::partition::Partition;
use super::sectors::{LazySymmetricHaar, SectorLayout, SymmetricUnitary};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutMode {
    /// Exact expectation value of the region charge.
    Exact,
    /// One projective measurement of the region charge per repetition.
    Shots,
    /// Closed average over the unitary ensembles.
    Analytic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Ensemble {
    /// Brickwork of two-site symmetric Haar gates on the open chain.
    ShallowBrickwork { depth: usize },
    /// Haar measure over all symmetric unitaries of the chain.
    GlobalSymmetric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Shallow,
    Global,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ProtocolConfig {
    pub partition: Partition,
    pub p: usize,
    /// Total charge placed in region A.
    pub q: u64,
    pub delta: f64,
    /// Overrides the repetition count derived from the concentration bound.
    pub repetitions: Option<usize>,
    pub mode: ReadoutMode,
    pub seed: u64,
    #[serde(default)]
    pub execution: Execution,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ProtocolResult {
    pub samples: Vec<f64>,
    pub mean: f64,
    pub std_error: f64,
    pub repetitions: usize,
    pub required_repetitions: usize,
    pub threshold: f64,
    pub decision: Decision,
    pub expected_shallow: f64,
    pub expected_global: f64,
}

/// A symmetric unitary acting on the whole register.
#[derive(Clone, Debug)]
pub enum SymmetricInstance {
    Circuit(Circuit),
    Global(LazySymmetricHaar),
    Operator(LocalOperator),
}

impl SymmetricInstance {
    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        match self {
            SymmetricInstance::Circuit(c) => c.apply(state),
            SymmetricInstance::Global(g) => g.apply(state),
            SymmetricInstance::Operator(o) => state.apply(o),
        }
    }
}

/// Everything about a protocol run that does not change between repetitions.
#[derive(Clone, Debug)]
pub struct ProtocolSetup {
    pub config: ProtocolConfig,
    pub charge: ChargeOperator,
    pub initial: StateVector,
    layout_ab: Arc<SectorLayout>,
    layout_all: Arc<SectorLayout>,
}

impl ProtocolSetup {
    pub fn new(config: ProtocolConfig, charge: ChargeOperator) -> Result<Self> {
        validate_config(&config, &charge)?;
        let part = &config.partition;
        let ab: Vec<usize> = part.ab().collect();
        let all: Vec<usize> = (0..part.n).collect();
        let layout_ab = Arc::new(SectorLayout::additive(&ab, &vec![true; ab.len()], &charge)?);
        let layout_all = Arc::new(SectorLayout::additive(&all, &vec![true; part.n], &charge)?);
        let initial = prepare_charged_state(part, config.q, &charge)?;
        Ok(ProtocolSetup { config, charge, initial, layout_ab, layout_all })
    }

    pub fn number(config: ProtocolConfig) -> Result<Self> {
        let charge = ChargeOperator::number(config.p)?;
        Self::new(config, charge)
    }

    /// Largest value a readout of the region-A charge can take.
    pub fn readout_range(&self) -> f64 {
        self.config.partition.a_len as f64 * self.charge.max_level()
    }

    pub fn threshold(&self) -> f64 {
        3.0 * self.config.q as f64 / 8.0
    }

    pub fn required_repetitions(&self) -> usize {
        required_repetitions(self.readout_range(), self.config.q as f64, self.config.delta)
    }

    /// Samples an instance of `ensemble` from `rng`.
    pub fn sample_instance<R: Rng + ?Sized>(&self, ensemble: &Ensemble, rng: &mut R) -> Result<SymmetricInstance> {
        match *ensemble {
            Ensemble::ShallowBrickwork { depth } => {
                let part = &self.config.partition;
                if 2 * depth > part.b_len {
                    return Err(Error::Config(format!(
                        "depth {depth} exceeds half of |B| = {}",
                        part.b_len
                    )));
                }
                Ok(SymmetricInstance::Circuit(symmetric_brickwork(
                    part.n,
                    &self.charge,
                    depth,
                    rng,
                )?))
            }
            Ensemble::GlobalSymmetric => Ok(SymmetricInstance::Global(LazySymmetricHaar::new(
                self.layout_all.clone(),
                rng.random(),
            ))),
        }
    }

    /// One repetition: symmetric Haar on `AB`, then `w`, then readout.
    pub fn run_once<R: Rng + ?Sized>(&self, w: &SymmetricInstance, rng: &mut R) -> Result<f64> {
        if let SymmetricInstance::Operator(op) = w {
            check_operator_symmetric(op, &self.charge)?;
        }
        if let SymmetricInstance::Circuit(c) = w {
            for g in c.gates() {
                check_operator_symmetric(g, &self.charge)?;
            }
        }
        let mut state = self.initial.clone();
        SymmetricUnitary::sample(self.layout_ab.clone(), rng).apply(&mut state)?;
        w.apply(&mut state)?;
        let a: Vec<usize> = self.config.partition.a().collect();
        match self.config.mode {
            ReadoutMode::Shots => sample_region_charge(&state, &a, &self.charge, rng),
            _ => region_charge_expectation(&state, &a, &self.charge),
        }
    }
}

fn validate_config(config: &ProtocolConfig, charge: &ChargeOperator) -> Result<()> {
    if charge.p() != config.p {
        return Err(Error::InvalidDimension("charge local dimension differs from p".into()));
    }
    if !(config.delta > 0.0 && config.delta < 1.0) {
        return Err(Error::Config(format!("delta = {} outside (0, 1)", config.delta)));
    }
    if config.q == 0 {
        return Err(Error::Config("q must be positive".into()));
    }
    if config.repetitions == Some(0) {
        return Err(Error::Config("repetitions must be positive".into()));
    }
    Ok(())
}

/// `ceil(32 (q0/q)^2 ln(2/delta))`.
pub fn required_repetitions(q0: f64, q: f64, delta: f64) -> usize {
    (32.0 * (q0 / q).powi(2) * (2.0 / delta).ln()).ceil() as usize
}

/// Product eigenstate with total charge `q` in region A (filled greedily
/// from the left with the largest levels) and zero charge elsewhere.
pub fn prepare_charged_state(part: &Partition, q: u64, charge: &ChargeOperator) -> Result<StateVector> {
    let p = charge.p();
    let levels = charge.levels();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| levels[b].total_cmp(&levels[a]));
    let zero = order[p - 1];
    let mut remaining = q as f64;
    let mut choice = vec![zero; part.n];
    for c in choice.iter_mut().take(part.a_len) {
        if let Some(&k) = order.iter().find(|&&k| levels[k] <= remaining + 1e-9) {
            *c = k;
            remaining -= levels[k];
        }
    }
    if remaining.abs() > 1e-9 {
        return Err(Error::Config(format!(
            "charge {q} cannot be placed on {} sites",
            part.a_len
        )));
    }
    let factors: Vec<_> = choice
        .iter()
        .map(|&k| charge.basis().column(k).into_owned())
        .collect();
    StateVector::product(p, &factors)
}

/// Brickwork of two-site symmetric Haar gates on the open chain.
pub fn symmetric_brickwork<R: Rng + ?Sized>(
    n: usize,
    charge: &ChargeOperator,
    depth: usize,
    rng: &mut R,
) -> Result<Circuit> {
    let layout = Arc::new(SectorLayout::additive(&[0, 1], &[true, true], charge)?);
    brickwork(n, charge.p(), depth, false, |_, i, j| {
        let u = SymmetricUnitary::sample(layout.clone(), rng).to_operator()?;
        LocalOperator::new(charge.p(), vec![i, j], u.matrix().clone())
    })
}

/// Fails unless `op` commutes with the total charge on its support.
pub fn check_operator_symmetric(op: &LocalOperator, charge: &ChargeOperator) -> Result<()> {
    let q = charge.shifted();
    let mut total = LocalOperator::scalar(op.p(), crate::linalg::ZERO);
    for &s in op.support() {
        total = total.add(&LocalOperator::single(op.p(), s, q.clone())?);
    }
    let c = op.commutator_norm(&total);
    if c > 1e-8 {
        return Err(Error::SymmetryViolation(format!(
            "operator on {:?} fails to commute with the charge ({c:.2e})",
            op.support()
        )));
    }
    Ok(())
}

fn rotated_to_eigenbasis(state: &StateVector, sites: &[usize], charge: &ChargeOperator) -> StateVector {
    let mut s = state.clone();
    if !charge.is_diagonal() {
        let vd: CMatrix = charge.basis().adjoint();
        let (p, n) = (s.p(), s.n());
        for &site in sites {
            apply_on_digits(s.amplitudes_mut(), p, n, &[site], &vd);
        }
    }
    s
}

/// Exact expectation of the shifted charge summed over `sites`.
pub fn region_charge_expectation(state: &StateVector, sites: &[usize], charge: &ChargeOperator) -> Result<f64> {
    let s = rotated_to_eigenbasis(state, sites, charge);
    let probs = s.marginal(sites)?;
    Ok(probs
        .iter()
        .enumerate()
        .map(|(idx, w)| w * local_charge(idx, sites.len(), charge))
        .sum())
}

/// One projective measurement of the shifted charge summed over `sites`.
pub fn sample_region_charge<R: Rng + ?Sized>(
    state: &StateVector,
    sites: &[usize],
    charge: &ChargeOperator,
    rng: &mut R,
) -> Result<f64> {
    let s = rotated_to_eigenbasis(state, sites, charge);
    let probs = s.marginal(sites)?;
    let idx = sample_index(&probs, rng);
    Ok(local_charge(idx, sites.len(), charge))
}

fn local_charge(mut idx: usize, k: usize, charge: &ChargeOperator) -> f64 {
    let p = charge.p();
    let mut total = 0.0;
    for _ in 0..k {
        total += charge.levels()[idx % p];
        idx /= p;
    }
    total
}

/// Number of ways `m` sites can carry total (integer) charge `s`, for every `s`.
fn charge_counts(levels: &[i64], m: usize) -> Vec<f64> {
    let top = levels.iter().copied().max().unwrap_or(0).max(0) as usize;
    let mut counts = vec![1.0];
    for _ in 0..m {
        let mut next = vec![0.0; counts.len() + top];
        for (s, &c) in counts.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for &l in levels {
                next[s + l as usize] += c;
            }
        }
        counts = next;
    }
    counts
}

/// Exact ensemble average of the region-A charge for a number-type charge
/// with integer levels.
pub fn analytic_average(part: &Partition, q: u64, charge: &ChargeOperator, ensemble: &Ensemble) -> Result<f64> {
    if !charge.is_diagonal() {
        return Err(Error::Unsupported("analytic averages need a diagonal charge".into()));
    }
    let levels: Vec<i64> = charge.levels().iter().map(|l| l.round() as i64).collect();
    if charge.levels().iter().zip(&levels).any(|(a, &b)| (a - b as f64).abs() > 1e-9) {
        return Err(Error::Unsupported("analytic averages need integer levels".into()));
    }
    let twirled = match ensemble {
        Ensemble::ShallowBrickwork { .. } => part.a_len + part.b_len,
        Ensemble::GlobalSymmetric => part.n,
    };
    let ca = charge_counts(&levels, part.a_len);
    let cr = charge_counts(&levels, twirled - part.a_len);
    let q = q as usize;
    let mut num = 0.0;
    let mut den = 0.0;
    for a in 0..=q {
        let w = ca.get(a).copied().unwrap_or(0.0) * cr.get(q - a).copied().unwrap_or(0.0);
        num += a as f64 * w;
        den += w;
    }
    if den == 0.0 {
        return Err(Error::Config(format!("no configuration carries charge {q}")));
    }
    Ok(num / den)
}

/// Repeats the protocol against `ensemble` and applies the threshold rule.
pub fn distinguish(setup: &ProtocolSetup, ensemble: &Ensemble) -> Result<ProtocolResult> {
    let cfg = &setup.config;
    let required = setup.required_repetitions();
    let reps = cfg.repetitions.unwrap_or(required);
    let expected_shallow = cfg.q as f64 * cfg.partition.a_len as f64
        / (cfg.partition.a_len + cfg.partition.b_len) as f64;
    let expected_global = cfg.q as f64 * cfg.partition.a_len as f64 / cfg.partition.n as f64;
    let samples = if cfg.mode == ReadoutMode::Analytic {
        let v = analytic_average(&cfg.partition, cfg.q, &setup.charge, ensemble)?;
        vec![v; reps]
    } else {
        try_map_indexed(cfg.execution, reps, |i| {
            let mut rng = child_rng(cfg.seed, i as u64);
            let w = setup.sample_instance(ensemble, &mut rng)?;
            setup.run_once(&w, &mut rng)
        })?
    };
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = if samples.len() > 1 {
        samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let threshold = setup.threshold();
    let radius = setup.readout_range() * ((2.0 / cfg.delta).ln() / (2.0 * n)).sqrt();
    let decision = if reps < required && (mean - threshold).abs() < radius {
        Decision::Inconclusive
    } else if mean > threshold {
        Decision::Shallow
    } else {
        Decision::Global
    };
    Ok(ProtocolResult {
        samples,
        mean,
        std_error: (var / n).sqrt(),
        repetitions: reps,
        required_repetitions: required,
        threshold,
        decision,
        expected_shallow,
        expected_global,
    })
}

/// Splits a brickwork on the open chain into the gates that can be moved
/// before everything else and stay inside `A ∪ B`, and the remaining gates,
/// which stay inside `B ∪ C`. Returns `(W_AB, W_BC)` in time order.
pub fn split_brickwork(circuit: &Circuit, part: &Partition) -> Result<(Vec<LocalOperator>, Vec<LocalOperator>)> {
    if circuit.depth() > part.b_len {
        return Err(Error::Precondition(format!(
            "depth {} exceeds |B| = {}",
            circuit.depth(),
            part.b_len
        )));
    }
    let c_start = part.c().start;
    let mut ab = Vec::new();
    let mut bc = Vec::new();
    for (t, layer) in circuit.layers().iter().enumerate() {
        let cut = c_start - t;
        for g in layer {
            let lo = g.support()[0];
            let hi = *g.support().last().expect("non-empty gate");
            if hi - lo > 1 {
                return Err(Error::Precondition("gate is not nearest-neighbour".into()));
            }
            if hi < cut {
                ab.push(g.clone());
            } else {
                bc.push(g.clone());
            }
        }
    }
    Ok((ab, bc))
}
