use serde::Serialize;
use serde_json::{json, Value};
use shallow_core::circuit::{brickwork, random_brickwork, Circuit, CircuitRecord};
use shallow_core::haar::haar_unitary;
use shallow_core::learning::{
    assemble_double_circuit, batch_learn, sequential_learn, OracleChannel, TomographySettings,
};
use shallow_core::operator::LocalOperator;
use shallow_core::protocol::{self, Decision, Partition, ProtocolConfig, ProtocolSetup, ReadoutMode};
use shallow_core::qca::{
    beta_direct, compose_qca, compile_qca, factor_shift_qca, gnvw_index, pump_subalgebra, qca_from_circuit,
    shift_qca, two_layer_decompose, verify_qca, Block, Part, QCAMap, TensorFactorization,
};
use shallow_core::seed::{derive_seed, rng_from_seed};

use crate::cli::{Common, Mode};
use crate::config::{self, DecomposeConfig, DistinguishConfig, LearnConfig, LearnMode, MapConfig, PumpConfig, QcaSource};
use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

#[derive(Serialize)]
pub struct SampleRow {
    pub repetition: usize,
    pub seed: u64,
    #[serde(rename = "qA")]
    pub q_a: f64,
}

/// Everything a command produces; written out by `output::emit`.
pub struct Output {
    pub command: String,
    pub config: Value,
    pub result: Value,
    pub samples: Option<Vec<SampleRow>>,
    pub circuit: Option<CircuitRecord>,
    pub summary: String,
}

fn reject(common: &Common, command: &str, mode: bool, reps: bool, shots: bool) -> Result<()> {
    let unused = [
        ("--mode", !mode && common.mode.is_some()),
        ("--reps", !reps && common.reps.is_some()),
        ("--shots", !shots && common.shots.is_some()),
    ];
    match unused.iter().find(|(_, bad)| *bad) {
        Some((flag, _)) => Err(CliError::config(format!("{flag} does not apply to {command}"))),
        None => Ok(()),
    }
}

fn need_seed(seed: Option<u64>, what: &str) -> Result<u64> {
    seed.ok_or_else(|| CliError::config(format!("{what} is randomized: pass --seed or set \"seed\" in the config")))
}

pub fn distinguish(common: &Common) -> Result<Output> {
    reject(common, "distinguish", true, true, false)?;
    let mut cfg: DistinguishConfig = config::load(common.config.as_deref())?;
    cfg.seed = common.seed.or(cfg.seed);
    if let Some(m) = common.mode {
        cfg.mode = match m {
            Mode::Exact => ReadoutMode::Exact,
            Mode::Sampled => ReadoutMode::Shots,
            Mode::Analytic => ReadoutMode::Analytic,
        };
    }
    cfg.repetitions = common.reps.or(cfg.repetitions);
    let seed = match cfg.mode {
        ReadoutMode::Analytic => cfg.seed.unwrap_or(0),
        _ => need_seed(cfg.seed, "distinguish")?,
    };
    let a_len = cfg.a_len.unwrap_or(cfg.n / 4);
    let setup = ProtocolSetup::number(ProtocolConfig {
        partition: Partition::new(cfg.n, a_len, a_len)?,
        p: cfg.p,
        q: cfg.q,
        delta: cfg.delta,
        repetitions: cfg.repetitions,
        mode: cfg.mode,
        seed,
        execution: cfg.execution,
    })?;
    let r = protocol::distinguish(&setup, &cfg.ensemble)?;
    cfg.a_len = Some(a_len);
    cfg.seed = Some(seed);
    cfg.repetitions = Some(r.repetitions);
    let samples: Vec<SampleRow> = r
        .samples
        .iter()
        .enumerate()
        .map(|(i, &q_a)| SampleRow { repetition: i, seed: derive_seed(seed, i as u64), q_a })
        .collect();
    let label = match r.decision {
        Decision::Shallow => "shallow",
        Decision::Global => "global",
        Decision::Inconclusive => "inconclusive",
    };
    let summary = format!("decision {label}: mean {:.4} over {} repetitions (threshold {:.4})", r.mean, r.repetitions, r.threshold);
    Ok(Output {
        command: "distinguish".into(),
        config: serde_json::to_value(&cfg)?,
        result: serde_json::to_value(&r)?,
        samples: Some(samples),
        circuit: None,
        summary,
    })
}

pub fn learn(common: &Common) -> Result<Output> {
    reject(common, "learn", true, false, true)?;
    let mut cfg: LearnConfig = config::load(common.config.as_deref())?;
    cfg.seed = common.seed.or(cfg.seed);
    cfg.shots = common.shots.or(cfg.shots);
    cfg.mode = match common.mode {
        None => cfg.mode,
        Some(Mode::Exact) => LearnMode::Exact,
        Some(Mode::Sampled) => LearnMode::Sampled,
        Some(Mode::Analytic) => return Err(CliError::config("learn has no analytic mode")),
    };
    let hidden = match &cfg.hidden {
        Some(rec) => Circuit::from_record(rec)?,
        None => {
            let seed = need_seed(cfg.seed, "a random hidden circuit")?;
            random_brickwork(cfg.n, cfg.p, cfg.depth, cfg.periodic, &mut rng_from_seed(seed))?
        }
    };
    cfg.n = hidden.n();
    cfg.p = hidden.p();
    let mut settings = match cfg.mode {
        LearnMode::Exact => TomographySettings::exact(),
        LearnMode::Sampled => {
            TomographySettings::sampled(cfg.epsilon, cfg.delta, need_seed(cfg.seed, "sampled tomography")?)
        }
    };
    settings.shots = cfg.shots;
    settings.execution = cfg.execution;
    let oracle = OracleChannel::new(hidden.clone(), cfg.periodic);
    let batch = batch_learn(&oracle, &settings)?;
    let sequential = if cfg.compare_sequential { Some(sequential_learn(&oracle, &settings)?) } else { None };
    let tol = match cfg.mode {
        LearnMode::Exact => 1e-7,
        LearnMode::Sampled => 0.5,
    };
    let learned = assemble_double_circuit(&batch.images, cfg.p, tol)?;
    let report = shallow_core::learning::verify_double(&learned, &hidden)?;
    let images: Vec<_> = batch.images.iter().map(|im| im.to_record()).collect();
    let seq_queries = sequential.as_ref().map(|s| s.queries);
    let result = json!({
        "distance": report.distance(),
        "trace_distance": report.trace_distance,
        "operator_distance": report.operator_distance,
        "groups": batch.groups,
        "shots_per_setting": batch.shots,
        "queries": {
            "batch": batch.queries,
            "sequential": seq_queries,
            "ratio": seq_queries.map(|s| s as f64 / batch.queries as f64),
        },
        "oracle_applications": {
            "batch": batch.applications,
            "sequential": sequential.as_ref().map(|s| s.applications),
        },
        "images": images,
    });
    let summary = format!(
        "distance {:.3e}; {} batch queries{}",
        report.distance(),
        batch.queries,
        seq_queries.map(|s| format!(" vs {s} sequential")).unwrap_or_default()
    );
    Ok(Output {
        command: "learn".into(),
        config: serde_json::to_value(&cfg)?,
        result,
        samples: None,
        circuit: Some(learned.circuit().to_record()),
        summary,
    })
}

fn factor(f: TensorFactorization) -> Result<TensorFactorization> {
    Ok(TensorFactorization::new(f.pa, f.pb)?)
}

fn build_map(src: &QcaSource, seed: Option<u64>) -> Result<QCAMap> {
    Ok(match src {
        QcaSource::Shift { n, p, e } => shift_qca(*n, *p, *e)?,
        QcaSource::FactorShift { n, factor: f, part, e } => factor_shift_qca(*n, factor(*f)?, *part, *e)?,
        QcaSource::Pump { n, factor: f } => beta_direct(*n, factor(*f)?)?,
        QcaSource::Circuit { circuit } => qca_from_circuit(&Circuit::from_record(circuit)?)?,
        QcaSource::RandomBrickwork { n, p, depth, seed: own } => {
            let s = need_seed(own.or(seed), "random_brickwork")?;
            qca_from_circuit(&random_brickwork(*n, *p, *depth, true, &mut rng_from_seed(s))?)?
        }
        QcaSource::Table { table } => QCAMap::from_record(table)?,
        QcaSource::Compose { maps } => {
            let mut parts = maps.iter().map(|m| build_map(m, seed));
            let first = parts.next().ok_or_else(|| CliError::config("compose needs at least one map"))??;
            parts.try_fold(first, |acc, m| Ok::<_, CliError>(compose_qca(&m?, &acc)?))?
        }
    })
}

fn load_map(common: &Common, command: &str) -> Result<(MapConfig, QCAMap)> {
    reject(common, command, false, false, false)?;
    let mut cfg: MapConfig = config::load(common.config.as_deref())?;
    cfg.seed = common.seed.or(cfg.seed);
    let map = build_map(&cfg.map, cfg.seed)?;
    Ok((cfg, map))
}

pub fn qca_index(common: &Common) -> Result<Output> {
    let (cfg, map) = load_map(common, "qca index")?;
    let index = gnvw_index(&map)?;
    Ok(Output {
        command: "qca index".into(),
        config: serde_json::to_value(&cfg)?,
        result: json!({
            "index": index.to_string(),
            "numer": index.numer(),
            "denom": index.denom(),
            "spread": map.measured_spread(),
        }),
        samples: None,
        circuit: None,
        summary: format!("index {index}"),
    })
}

pub fn qca_verify(common: &Common) -> Result<Output> {
    let (cfg, map) = load_map(common, "qca verify")?;
    let report = verify_qca(&map);
    let summary = if report.passed() {
        "all checks passed".to_string()
    } else {
        format!("{} check(s) failed", report.failures.len())
    };
    Ok(Output {
        command: "qca verify".into(),
        config: serde_json::to_value(&cfg)?,
        result: json!({
            "passed": report.passed(),
            "failures": report.failures,
            "rank_checked": report.rank_checked,
            "spread": map.measured_spread(),
        }),
        samples: None,
        circuit: None,
        summary,
    })
}

pub fn qca_compile(common: &Common) -> Result<Output> {
    reject(common, "qca compile", false, false, false)?;
    let cfg: config::CompileConfig = config::load(common.config.as_deref())?;
    let compiled = compile_qca(&cfg.0)?;
    let total = compiled.counts.total();
    Ok(Output {
        command: "qca compile".into(),
        config: serde_json::to_value(&cfg)?,
        result: json!({
            "gate_count": total,
            "counts": compiled.counts,
            "distance": compiled.distance,
        }),
        samples: None,
        circuit: Some(compiled.circuit.to_circuit()?.to_record()),
        summary: format!("{total} gates, distance {:.2e}", compiled.distance),
    })
}

pub fn qca_pump(common: &Common) -> Result<Output> {
    reject(common, "qca pump", false, false, false)?;
    let cfg: PumpConfig = config::load(common.config.as_deref())?;
    let f = factor(cfg.factor)?;
    let forward = pump_subalgebra(cfg.n, f)?;
    let (stair, e) = if cfg.inverse { (forward.inverse(), -1) } else { (forward, 1) };
    let distance = stair.to_qca()?.distance(&factor_shift_qca(cfg.n, f, Part::B, e)?);
    let count = stair.gate_count();
    Ok(Output {
        command: "qca pump".into(),
        config: serde_json::to_value(&cfg)?,
        result: json!({ "gate_count": count, "distance": distance }),
        samples: None,
        circuit: Some(stair.to_circuit()?.to_record()),
        summary: format!("{count} gates, distance {distance:.2e}"),
    })
}

/// Periodic brickwork repeating one Haar gate per layer.
fn ti_brickwork(n: usize, p: usize, depth: usize, seed: u64) -> Result<Circuit> {
    let mut rng = rng_from_seed(seed);
    let gates: Vec<_> = (0..depth).map(|_| haar_unitary(p * p, &mut rng)).collect();
    Ok(brickwork(n, p, depth, true, |t, i, j| LocalOperator::new(p, vec![i, j], gates[t].clone()))?)
}

fn blocks(bs: &[Block], n: usize) -> Value {
    bs.iter().map(|b| json!({ "sites": b.region(n), "gates": b.gates.len() })).collect()
}

pub fn qca_decompose(common: &Common) -> Result<Output> {
    reject(common, "qca decompose", false, false, false)?;
    let mut cfg: DecomposeConfig = config::load(common.config.as_deref())?;
    cfg.seed = common.seed.or(cfg.seed);
    let ti = match &cfg.circuit {
        Some(rec) => Circuit::from_record(rec)?,
        None => ti_brickwork(cfg.n, cfg.p, cfg.depth, need_seed(cfg.seed, "a random circuit")?)?,
    };
    cfg.n = ti.n();
    cfg.p = ti.p();
    cfg.depth = ti.depth();
    let split = two_layer_decompose(&ti, cfg.spacing)?;
    let stair = split.staircase()?;
    let distance = stair.to_qca()?.distance(&qca_from_circuit(&ti)?);
    if distance > 1e-9 {
        return Err(CliError::internal(format!("split misses the circuit by {distance:.2e}")));
    }
    let count = split.gate_count();
    Ok(Output {
        command: "qca decompose".into(),
        config: serde_json::to_value(&cfg)?,
        result: json!({
            "radius": split.radius,
            "translation_invariant": split.translation_invariant,
            "gate_count": count,
            "distance": distance,
            "mu2_blocks": blocks(&split.mu2, ti.n()),
            "mu1_blocks": blocks(&split.mu1, ti.n()),
        }),
        samples: None,
        circuit: Some(stair.to_circuit()?.to_record()),
        summary: format!("{count} gates in {} + {} blocks, distance {distance:.2e}", split.mu2.len(), split.mu1.len()),
    })
}
