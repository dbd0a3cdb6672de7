//! Layered quantum circuits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{GateRecord, LocalOperator};
use crate::state::StateVector;

pub const UNITARY_TOL: f64 = 1e-10;

/// Layers of pairwise-disjoint unitary gates; `layers[0]` acts first.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n: usize,
    p: usize,
    layers: Vec<Vec<LocalOperator>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CircuitRecord {
    pub n: usize,
    pub p: usize,
    pub layers: Vec<Vec<GateRecord>>,
}

impl Circuit {
    pub fn empty(n: usize, p: usize) -> Self {
        Circuit { n, p, layers: Vec::new() }
    }

    pub fn new(n: usize, p: usize, layers: Vec<Vec<LocalOperator>>) -> Result<Self> {
        let mut c = Circuit::empty(n, p);
        for layer in layers {
            c.push_layer(layer)?;
        }
        Ok(c)
    }

    /// Circuit with one gate per layer, in the given time order.
    pub fn sequential(n: usize, p: usize, gates: Vec<LocalOperator>) -> Result<Self> {
        Self::new(n, p, gates.into_iter().map(|g| vec![g]).collect())
    }

    pub fn push_layer(&mut self, layer: Vec<LocalOperator>) -> Result<()> {
        let mut used = vec![false; self.n];
        for g in &layer {
            if g.p() != self.p {
                return Err(Error::InvalidDimension("gate local dimension differs".into()));
            }
            g.check_range(self.n)?;
            let dev = g.unitarity_deviation();
            if dev > UNITARY_TOL {
                return Err(Error::NonUnitary(dev));
            }
            for &s in g.support() {
                if used[s] {
                    return Err(Error::SupportOutOfRange(format!(
                        "site {s} touched twice in one layer"
                    )));
                }
                used[s] = true;
            }
        }
        self.layers.push(layer);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Vec<LocalOperator>] {
        &self.layers
    }

    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(|l| l.len()).sum()
    }

    /// Gates in time order.
    pub fn gates(&self) -> impl Iterator<Item = &LocalOperator> {
        self.layers.iter().flatten()
    }

    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        if state.n() != self.n || state.p() != self.p {
            return Err(Error::InvalidDimension("circuit and state registers differ".into()));
        }
        for g in self.gates() {
            state.apply(g)?;
        }
        Ok(())
    }

    pub fn inverse(&self) -> Circuit {
        Circuit {
            n: self.n,
            p: self.p,
            layers: self
                .layers
                .iter()
                .rev()
                .map(|l| l.iter().map(|g| g.adjoint()).collect())
                .collect(),
        }
    }

    /// Circuit on `n_total` sites with every gate moved by `offset`.
    pub fn relocated(&self, offset: usize, n_total: usize) -> Result<Circuit> {
        let layers = self
            .layers
            .iter()
            .map(|l| {
                l.iter()
                    .map(|g| {
                        LocalOperator::new(
                            self.p,
                            g.support().iter().map(|s| s + offset).collect(),
                            g.matrix().clone(),
                        )
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Circuit::new(n_total, self.p, layers)
    }

    /// Appends all layers of `other` after this circuit.
    pub fn then(&self, other: &Circuit) -> Result<Circuit> {
        if other.n != self.n || other.p != self.p {
            return Err(Error::InvalidDimension("registers differ".into()));
        }
        let mut layers = self.layers.clone();
        layers.extend(other.layers.iter().cloned());
        Ok(Circuit { n: self.n, p: self.p, layers })
    }

    /// `U op U†` for the whole circuit, skipping gates outside the light cone.
    pub fn conjugate(&self, op: &LocalOperator, tol: f64) -> LocalOperator {
        conjugate_through(self.gates(), op, tol)
    }

    /// Sum over layers of the largest gate diameter.
    pub fn light_cone_radius(&self) -> usize {
        self.layers
            .iter()
            .map(|l| {
                l.iter()
                    .map(|g| match (g.support().first(), g.support().last()) {
                        (Some(a), Some(b)) => b - a,
                        _ => 0,
                    })
                    .max()
                    .unwrap_or(0)
            })
            .sum()
    }

    /// Light-cone radius on a ring: a gate's diameter is the register
    /// length minus the widest gap between its sites.
    pub fn ring_radius(&self) -> usize {
        let n = self.n;
        self.layers
            .iter()
            .map(|l| {
                l.iter()
                    .map(|g| {
                        let s = g.support();
                        match (s.first(), s.last()) {
                            (Some(&a), Some(&b)) => {
                                let inner = s.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);
                                n - inner.max(a + n - b)
                            }
                            _ => 0,
                        }
                    })
                    .max()
                    .unwrap_or(0)
            })
            .sum()
    }

    pub fn to_record(&self) -> CircuitRecord {
        CircuitRecord {
            n: self.n,
            p: self.p,
            layers: self
                .layers
                .iter()
                .map(|l| l.iter().map(|g| g.to_record()).collect())
                .collect(),
        }
    }

    pub fn from_record(rec: &CircuitRecord) -> Result<Self> {
        let layers = rec
            .layers
            .iter()
            .map(|l| {
                l.iter()
                    .map(|g| LocalOperator::from_record(rec.p, g))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Circuit::new(rec.n, rec.p, layers)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_record()).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rec: CircuitRecord =
            serde_json::from_str(s).map_err(|e| Error::Config(format!("circuit json: {e}")))?;
        Self::from_record(&rec)
    }
}

/// Conjugates `op` by the time-ordered product of `gates`.
pub fn conjugate_through<'a, I>(gates: I, op: &LocalOperator, tol: f64) -> LocalOperator
where
    I: IntoIterator<Item = &'a LocalOperator>,
{
    let mut cur = op.clone();
    for g in gates {
        if g.overlaps(cur.support()) {
            cur = cur.conjugate_by(g).truncate_support(tol);
        }
    }
    cur
}

/// Brickwork with independent Haar-random two-site gates.
pub fn random_brickwork<R: rand::Rng + ?Sized>(
    n: usize,
    p: usize,
    depth: usize,
    periodic: bool,
    rng: &mut R,
) -> Result<Circuit> {
    brickwork(n, p, depth, periodic, |_, i, j| {
        LocalOperator::new(p, vec![i, j], crate::haar::haar_unitary(p * p, rng))
    })
}

/// Brickwork of two-site gates: layer `t` acts on bonds `(i, i+1)` with
/// `i ≡ t (mod 2)`; on a periodic chain of even length the wrap bond is
/// included in odd layers.
pub fn brickwork<F>(n: usize, p: usize, depth: usize, periodic: bool, mut gate: F) -> Result<Circuit>
where
    F: FnMut(usize, usize, usize) -> Result<LocalOperator>,
{
    if periodic && n % 2 == 1 {
        return Err(Error::Config("periodic brickwork needs an even chain".into()));
    }
    let mut c = Circuit::empty(n, p);
    for t in 0..depth {
        let mut layer = Vec::new();
        let mut i = t % 2;
        while i + 1 < n || (periodic && i + 1 == n && n > 2) {
            let j = (i + 1) % n;
            layer.push(gate(t, i, j)?);
            i += 2;
        }
        c.push_layer(layer)?;
    }
    Ok(c)
}
