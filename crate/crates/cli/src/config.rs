//! JSON configuration records. Without `--config` each command runs its
//! default configuration; missing fields fall back to the same defaults.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use shallow_core::circuit::CircuitRecord;
use shallow_core::par::Execution;
use shallow_core::protocol::{Ensemble, ReadoutMode};
use shallow_core::qca::{CompileSpec, Part, QcaRecord, ShiftSpec, Spacing, TensorFactorization};

use crate::error::CliError;

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    // serde_json reports the offending line and column
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistinguishConfig {
    pub n: usize,
    /// Length of regions A and B; `floor(n/4)` when absent.
    pub a_len: Option<usize>,
    pub p: usize,
    pub q: u64,
    pub delta: f64,
    pub ensemble: Ensemble,
    pub repetitions: Option<usize>,
    pub mode: ReadoutMode,
    pub seed: Option<u64>,
    pub execution: Execution,
}

impl Default for DistinguishConfig {
    fn default() -> Self {
        DistinguishConfig {
            n: 12,
            a_len: None,
            p: 2,
            q: 3,
            delta: 0.01,
            ensemble: Ensemble::ShallowBrickwork { depth: 1 },
            repetitions: None,
            mode: ReadoutMode::Exact,
            seed: None,
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnMode {
    #[default]
    Exact,
    Sampled,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnConfig {
    pub n: usize,
    pub p: usize,
    /// Depth of the random hidden brickwork; ignored when `hidden` is given.
    pub depth: usize,
    pub periodic: bool,
    pub hidden: Option<CircuitRecord>,
    pub mode: LearnMode,
    pub epsilon: f64,
    pub delta: f64,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    /// Also run the one-site-at-a-time learner to report its query count.
    pub compare_sequential: bool,
    pub execution: Execution,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig {
            n: 6,
            p: 2,
            depth: 2,
            periodic: false,
            hidden: None,
            mode: LearnMode::Exact,
            epsilon: 0.1,
            delta: 0.1,
            shots: None,
            seed: None,
            compare_sequential: true,
            execution: Execution::default(),
        }
    }
}

/// A QCA given by one of the built-in constructions or an explicit table.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QcaSource {
    Shift { n: usize, p: usize, e: i64 },
    FactorShift { n: usize, factor: TensorFactorization, part: Part, e: i64 },
    Pump { n: usize, factor: TensorFactorization },
    Circuit { circuit: CircuitRecord },
    /// Random periodic brickwork; uses the global seed when `seed` is absent.
    RandomBrickwork { n: usize, p: usize, depth: usize, seed: Option<u64> },
    Table { table: QcaRecord },
    /// Applied left to right: the first map acts first.
    Compose { maps: Vec<QcaSource> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapConfig {
    pub map: QcaSource,
    pub seed: Option<u64>,
}

impl Default for MapConfig {
    fn default() -> Self {
        MapConfig { map: QcaSource::Shift { n: 8, p: 2, e: 1 }, seed: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CompileConfig(pub CompileSpec);

impl Default for CompileConfig {
    fn default() -> Self {
        let mut spec = CompileSpec::identity(5, 2);
        spec.shifts.push(ShiftSpec { e: 1, factor: None, part: Part::B });
        CompileConfig(spec)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PumpConfig {
    pub n: usize,
    pub factor: TensorFactorization,
    pub inverse: bool,
}

impl Default for PumpConfig {
    fn default() -> Self {
        PumpConfig { n: 6, factor: TensorFactorization { pa: 2, pb: 3 }, inverse: false }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeConfig {
    /// Translation-invariant circuit to split; a random one is drawn when absent.
    pub circuit: Option<CircuitRecord>,
    pub n: usize,
    pub p: usize,
    pub depth: usize,
    pub spacing: Spacing,
    pub seed: Option<u64>,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        DecomposeConfig { circuit: None, n: 12, p: 2, depth: 1, spacing: Spacing::Tight, seed: None }
    }
}
