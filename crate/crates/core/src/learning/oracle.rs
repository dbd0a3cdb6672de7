use std::sync::atomic::{AtomicU64, Ordering};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::state::StateVector;

/// Black-box access to a hidden circuit. Every application is counted.
#[derive(Debug)]
pub struct OracleChannel {
    circuit: Circuit,
    spread: usize,
    periodic: bool,
    applications: AtomicU64,
}

impl OracleChannel {
    /// Light-cone radius taken from the circuit's layer structure.
    pub fn new(circuit: Circuit, periodic: bool) -> Self {
        let spread = if periodic { circuit.ring_radius() } else { circuit.light_cone_radius() };
        OracleChannel { circuit, spread, periodic, applications: AtomicU64::new(0) }
    }

    /// Oracle with a declared light-cone radius, which must bound the true one.
    pub fn with_spread(circuit: Circuit, spread: usize, periodic: bool) -> Result<Self> {
        let bound = if periodic { circuit.ring_radius() } else { circuit.light_cone_radius() };
        if spread < bound {
            return Err(Error::Precondition(format!(
                "declared spread {spread} below the circuit's light cone {bound}"
            )));
        }
        Ok(OracleChannel { circuit, spread, periodic, applications: AtomicU64::new(0) })
    }

    pub fn n(&self) -> usize {
        self.circuit.n()
    }

    pub fn p(&self) -> usize {
        self.circuit.p()
    }

    pub fn spread(&self) -> usize {
        self.spread
    }

    pub fn periodic(&self) -> bool {
        self.periodic
    }

    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        self.applications.fetch_add(1, Ordering::Relaxed);
        self.circuit.apply(state)
    }

    pub fn applications(&self) -> u64 {
        self.applications.load(Ordering::Relaxed)
    }

    pub fn reset_counter(&self) {
        self.applications.store(0, Ordering::Relaxed);
    }

    /// The hidden circuit, for verification only.
    pub fn reveal(&self) -> &Circuit {
        &self.circuit
    }

    pub fn distance(&self, a: usize, b: usize) -> usize {
        let d = a.abs_diff(b);
        if self.periodic {
            d.min(self.n() - d)
        } else {
            d
        }
    }

    /// Sites within `radius` of `i`, sorted.
    pub fn ball(&self, i: usize, radius: usize) -> Result<Vec<usize>> {
        if i >= self.n() {
            return Err(Error::Range(format!("site {i} outside register of {}", self.n())));
        }
        Ok((0..self.n()).filter(|&s| self.distance(s, i) <= radius).collect())
    }
}
