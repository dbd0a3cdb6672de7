//! End-to-end acceptance run. Every criterion prints one PASS/FAIL line;
//! run with `--nocapture` to see them.

use std::time::{Duration, Instant};

use num_rational::Ratio;
use shallow_core::circuit::{brickwork, random_brickwork, Circuit};
use shallow_core::decompose::{hermitian_split, operator_to_densities, recombine};
use shallow_core::haar::{haar_unitary, haar_vector};
use shallow_core::learning::*;
use shallow_core::linalg::{c64, max_abs_diff, op_norm, CMatrix, C64};
use shallow_core::operator::LocalOperator;
use shallow_core::par::Execution;
use shallow_core::pauli::{generalized_pauli, swap_operator};
use shallow_core::protocol::*;
use shallow_core::qca::*;
use shallow_core::seed::{child_rng, rng_from_seed};
use shallow_core::state::StateVector;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(t: Instant, budget: Duration, what: &str) -> std::result::Result<(), String> {
    if t.elapsed() > budget {
        return Err(format!("{what} took {:.1?}, budget {budget:?}", t.elapsed()));
    }
    Ok(())
}

fn dense(c: &Circuit) -> CMatrix {
    let d = c.p().pow(c.n() as u32);
    let mut m = CMatrix::zeros(d, d);
    for j in 0..d {
        let mut s = StateVector::basis(c.n(), c.p(), j).unwrap();
        c.apply(&mut s).unwrap();
        for (i, a) in s.amplitudes().iter().enumerate() {
            m[(i, j)] = *a;
        }
    }
    m
}

fn protocol_config(mode: ReadoutMode, seed: u64) -> ProtocolConfig {
    ProtocolConfig {
        partition: Partition::new(12, 3, 3).unwrap(),
        p: 2,
        q: 3,
        delta: 0.01,
        repetitions: None,
        mode,
        seed,
        execution: Execution::Parallel,
    }
}

const SHALLOW: Ensemble = Ensemble::ShallowBrickwork { depth: 1 };

fn c1_analytic() -> Outcome {
    let t = Instant::now();
    let setup = ProtocolSetup::number(protocol_config(ReadoutMode::Analytic, 1)).map_err(|e| e.to_string())?;
    let s = distinguish(&setup, &SHALLOW).map_err(|e| e.to_string())?;
    let g = distinguish(&setup, &Ensemble::GlobalSymmetric).map_err(|e| e.to_string())?;
    within(t, Duration::from_secs(10), "analytic run")?;
    check(
        (s.mean - 1.5).abs() < 1e-9 && (g.mean - 0.75).abs() < 1e-9,
        format!("shallow {:.12}, global {:.12}", s.mean, g.mean),
    )
}

fn mc_samples(setup: &ProtocolSetup, ens: &Ensemble, count: u64, seed: u64) -> Vec<f64> {
    shallow_core::par::map_indexed(Execution::Parallel, count as usize, |i| {
        let mut rng = child_rng(seed, i as u64);
        let w = setup.sample_instance(ens, &mut rng).unwrap();
        setup.run_once(&w, &mut rng).unwrap()
    })
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn meta_labels(trials: u64) -> (usize, usize) {
    let mut right = (0, 0);
    for k in 0..trials {
        let setup = ProtocolSetup::number(protocol_config(ReadoutMode::Exact, 1000 + k)).unwrap();
        if distinguish(&setup, &SHALLOW).unwrap().decision == Decision::Shallow {
            right.0 += 1;
        }
        if distinguish(&setup, &Ensemble::GlobalSymmetric).unwrap().decision == Decision::Global {
            right.1 += 1;
        }
    }
    right
}

fn c2_monte_carlo() -> Outcome {
    let t = Instant::now();
    let setup = ProtocolSetup::number(protocol_config(ReadoutMode::Exact, 2)).map_err(|e| e.to_string())?;
    let (ms, ss) = mean_se(&mc_samples(&setup, &SHALLOW, 2000, 20));
    let (mg, sg) = mean_se(&mc_samples(&setup, &Ensemble::GlobalSymmetric, 2000, 21));
    let (rs, rg) = meta_labels(100);
    within(t, Duration::from_secs(300), "Monte Carlo run")?;
    check(
        (ms - 1.5).abs() < 3.0 * ss && (mg - 0.75).abs() < 3.0 * sg && rs >= 99 && rg >= 99,
        format!("shallow {ms:.4}±{ss:.4}, global {mg:.4}±{sg:.4}, labels {rs}/100 and {rg}/100"),
    )
}

fn charge_drifts(trials: u64, seed: u64) -> Vec<f64> {
    let q = ChargeOperator::number(2).unwrap();
    let mut total = LocalOperator::scalar(2, c64(0.0, 0.0));
    for s in 0..10 {
        total = total.add(&LocalOperator::single(2, s, q.shifted()).unwrap());
    }
    (0..trials)
        .map(|i| {
            let mut rng = child_rng(seed, i);
            let depth = 1 + (i % 3) as usize;
            let c = symmetric_brickwork(10, &q, depth, &mut rng).unwrap();
            let v = haar_vector(1 << 10, &mut rng);
            let mut s = StateVector::from_amplitudes(10, 2, v.iter().cloned().collect()).unwrap();
            let before = s.expectation(&total).unwrap().re;
            c.apply(&mut s).unwrap();
            (s.expectation(&total).unwrap().re - before).abs()
        })
        .collect()
}

fn c3_conservation() -> Outcome {
    let worst = charge_drifts(100, 3).into_iter().fold(0.0, f64::max);
    check(worst < 1e-9, format!("largest drift {worst:.2e} over 100 circuits"))
}

fn c4_swap_identity() -> Outcome {
    let mut worst = 0.0f64;
    for p in [2usize, 3, 5] {
        let mut sum = CMatrix::zeros(p * p, p * p);
        for a in 0..p as i64 {
            for b in 0..p as i64 {
                let m = generalized_pauli(p, a, b).map_err(|e| e.to_string())?;
                sum += m.kronecker(&m.adjoint());
            }
        }
        sum /= c64(p as f64, 0.0);
        worst = worst.max(max_abs_diff(&sum, &swap_operator(p).map_err(|e| e.to_string())?));
    }
    check(worst < 1e-12, format!("largest entry error {worst:.2e}"))
}

fn c5_decompositions() -> Outcome {
    let mut rng = rng_from_seed(5);
    let mut worst_h = 0.0f64;
    let mut worst_o = 0.0f64;
    for _ in 0..200 {
        let g = CMatrix::from_fn(4, 4, |_, _| shallow_core::haar::complex_gaussian(&mut rng));
        let h = (&g + g.adjoint()) * c64(0.5, 0.0);
        let s = hermitian_split(&h).map_err(|e| e.to_string())?;
        let mut rec = CMatrix::zeros(4, 4);
        if let Some(r) = &s.rho_plus {
            rec += r * c64(s.alpha, 0.0);
        }
        if let Some(r) = &s.rho_minus {
            rec -= r * c64(s.beta, 0.0);
        }
        worst_h = worst_h.max(max_abs_diff(&rec, &h));
    }
    for _ in 0..200 {
        let o = CMatrix::from_fn(4, 4, |_, _| shallow_core::haar::complex_gaussian(&mut rng));
        let parts = operator_to_densities(&o).map_err(|e| e.to_string())?;
        worst_o = worst_o.max(max_abs_diff(&recombine(&parts, 4), &o));
    }
    check(
        worst_h < 1e-10 && worst_o < 1e-10,
        format!("hermitian {worst_h:.2e}, general {worst_o:.2e}"),
    )
}

fn double_errors(count: u64, seed: u64) -> Vec<f64> {
    (0..count)
        .map(|i| {
            let mut rng = child_rng(seed, i);
            let n = 1 + (i % 4) as usize;
            let all: Vec<usize> = (0..n).collect();
            let v = LocalOperator::new(2, all, haar_unitary(1 << n, &mut rng)).unwrap();
            let c = Circuit::new(n, 2, vec![vec![v]]).unwrap();
            let learned = assemble_double_circuit(&exact_images(&c).unwrap(), 2, 1e-9).unwrap();
            let a = dense(learned.circuit());
            let b = dense(&reference_double(&c).unwrap());
            let ov: C64 = (b.adjoint() * &a).trace();
            op_norm(&(a - b * (ov / ov.norm())))
        })
        .collect()
}

fn c6_double_circuit() -> Outcome {
    let worst = double_errors(20, 6).into_iter().fold(0.0, f64::max);
    check(worst < 1e-10, format!("largest operator-norm error {worst:.2e} over 20 unitaries"))
}

fn c7_exact_learning() -> Outcome {
    let t = Instant::now();
    let c = random_brickwork(6, 2, 2, false, &mut rng_from_seed(7)).map_err(|e| e.to_string())?;
    let oracle = OracleChannel::new(c.clone(), false);
    let out = batch_learn(&oracle, &TomographySettings::exact()).map_err(|e| e.to_string())?;
    let learned = assemble_double_circuit(&out.images, 2, 1e-7).map_err(|e| e.to_string())?;
    let d = verify_double(&learned, &c).map_err(|e| e.to_string())?.distance();
    let c8 = random_brickwork(8, 2, 1, false, &mut rng_from_seed(8)).map_err(|e| e.to_string())?;
    let o8 = OracleChannel::new(c8, false);
    let batch = batch_learn(&o8, &TomographySettings::exact()).map_err(|e| e.to_string())?;
    let seq = sequential_learn(&o8, &TomographySettings::exact()).map_err(|e| e.to_string())?;
    within(t, Duration::from_secs(120), "exact learning")?;
    check(
        d < 1e-8 && 2 * batch.queries <= seq.queries,
        format!("distance {d:.2e}, queries batch {} vs sequential {}", batch.queries, seq.queries),
    )
}

fn sampled_distance(trial: u64, seed: u64) -> f64 {
    let mut rng = child_rng(seed, trial);
    let c = random_brickwork(4, 2, 1, false, &mut rng).unwrap();
    let oracle = OracleChannel::new(c.clone(), false);
    let settings = TomographySettings::sampled(0.1, 0.1, shallow_core::seed::derive_seed(seed, trial));
    let out = batch_learn(&oracle, &settings).unwrap();
    match assemble_double_circuit(&out.images, 2, 0.5) {
        Ok(learned) => verify_double(&learned, &c).unwrap().distance(),
        Err(_) => f64::INFINITY,
    }
}

fn c8_sampled_learning() -> Outcome {
    let t = Instant::now();
    let good = (0..50).filter(|&k| sampled_distance(k, 8) < 0.1).count();
    within(t, Duration::from_secs(900), "sampled learning")?;
    check(good >= 45, format!("{good}/50 trials below 0.1"))
}

fn power(p: u64, e: i64) -> Ratio<u64> {
    if e >= 0 {
        Ratio::from_integer(p.pow(e as u32))
    } else {
        Ratio::new(1, p.pow((-e) as u32))
    }
}

fn random_circuit_qcas(count: u64, seed: u64) -> Vec<QCAMap> {
    (0..count)
        .map(|i| {
            let mut rng = child_rng(seed, i);
            let p = if i % 4 == 3 { 3 } else { 2 };
            let depth = 1 + (i % 2) as usize;
            qca_from_circuit(&random_brickwork(8, p, depth, true, &mut rng).unwrap()).unwrap()
        })
        .collect()
}

fn c9_index() -> Outcome {
    let mut bad = Vec::new();
    for p in [2u64, 3] {
        for e in -2i64..=2 {
            let f = shift_qca(8, p as usize, e).map_err(|e| e.to_string())?;
            match gnvw_index(&f) {
                Ok(v) if v == power(p, e) => {}
                other => bad.push(format!("shift p={p} e={e}: {other:?}")),
            }
        }
    }
    let circuits = random_circuit_qcas(20, 9);
    for (k, f) in circuits.iter().enumerate() {
        if gnvw_index(f).ok() != Some(Ratio::from_integer(1)) {
            bad.push(format!("circuit {k}"));
        }
    }
    // compositions reach spread 4, which needs a ring of at least 16
    let mut maps = Vec::new();
    for e in [-2i64, -1, 1, 2] {
        maps.push((shift_qca(16, 2, e).map_err(|e| e.to_string())?, power(2, e)));
    }
    for seed in [90, 91] {
        let c = random_brickwork(16, 2, 1, true, &mut rng_from_seed(seed)).map_err(|e| e.to_string())?;
        maps.push((qca_from_circuit(&c).map_err(|e| e.to_string())?, Ratio::from_integer(1)));
    }
    let mut pairs = 0;
    for (f, a) in &maps {
        for (g, b) in &maps {
            let fg = compose_qca(f, g).map_err(|e| e.to_string())?;
            pairs += 1;
            match gnvw_index(&fg) {
                Ok(v) if v == a * b => {}
                other => bad.push(format!("composition {a} x {b}: {other:?}")),
            }
        }
    }
    check(bad.is_empty(), format!("10 shifts, 20 circuits, {pairs} compositions; failures {bad:?}"))
}

fn c10_staircase() -> Outcome {
    let mut bad = Vec::new();
    for n in 5..=32 {
        for e in [1i64, 2] {
            let s = compile_shift(n, 2, e, None).map_err(|e| e.to_string())?;
            let d = s.to_qca().map_err(|e| e.to_string())?.distance(&shift_qca(n, 2, e).map_err(|e| e.to_string())?);
            if s.gate_count() != (n - 1) * e as usize || d > 1e-10 {
                bad.push(format!("n={n} e={e}: {} gates, distance {d:.1e}", s.gate_count()));
            }
        }
    }
    for (pa, pb) in [(2, 3), (2, 2)] {
        let f = TensorFactorization::new(pa, pb).map_err(|e| e.to_string())?;
        for n in 4..=8 {
            let s = pump_subalgebra(n, f).map_err(|e| e.to_string())?;
            let d = s.to_qca().map_err(|e| e.to_string())?.distance(&beta_direct(n, f).map_err(|e| e.to_string())?);
            if d > 1e-10 {
                bad.push(format!("pump {pa}x{pb} n={n}: {d:.1e}"));
            }
        }
    }
    check(bad.is_empty(), format!("shifts n=5..32, pumps p=4,6 n=4..8; failures {bad:?}"))
}

fn ti_brickwork(n: usize, depth: usize, seed: u64) -> Circuit {
    let mut rng = rng_from_seed(seed);
    let gates: Vec<CMatrix> = (0..depth).map(|_| haar_unitary(4, &mut rng)).collect();
    brickwork(n, 2, depth, true, |t, i, j| LocalOperator::new(2, vec![i, j], gates[t].clone())).unwrap()
}

fn disjoint(blocks: &[Block]) -> bool {
    let prints: Vec<_> = blocks.iter().map(|b| b.footprint()).collect();
    prints.iter().enumerate().all(|(i, a)| prints[i + 1..].iter().all(|b| a.is_disjoint(b)))
}

fn c11_two_layer() -> Outcome {
    let mut bad = Vec::new();
    let mut summary = Vec::new();
    for depth in [1usize, 2] {
        let period = 6 * depth;
        let mut counts = Vec::new();
        for k in 2..=4 {
            let n = k * period;
            let ti = ti_brickwork(n, depth, 11 + depth as u64);
            let split = two_layer_decompose(&ti, Spacing::Tight).map_err(|e| e.to_string())?;
            if split.radius != depth {
                bad.push(format!("depth {depth}: r' = {}", split.radius));
            }
            let m1 = split.mu1_circuit().map_err(|e| e.to_string())?.to_qca().map_err(|e| e.to_string())?;
            let m2 = split.mu2_circuit().map_err(|e| e.to_string())?.to_qca().map_err(|e| e.to_string())?;
            let d = compose_qca(&m1, &m2).map_err(|e| e.to_string())?.distance(&qca_from_circuit(&ti).map_err(|e| e.to_string())?);
            if d > 1e-9 || !disjoint(&split.mu1) || !disjoint(&split.mu2) {
                bad.push(format!("depth {depth} n={n}: distance {d:.1e}"));
            }
            counts.push(split.gate_count());
        }
        // equally spaced n, so a linear fit means equal differences
        if counts[1] - counts[0] != counts[2] - counts[1] {
            bad.push(format!("depth {depth}: counts {counts:?} not linear"));
        }
        summary.push(format!("r'={depth} counts {counts:?}"));
    }
    check(bad.is_empty(), format!("{}; failures {bad:?}", summary.join(", ")))
}

fn c12_determinism() -> Outcome {
    let mut same = Vec::new();
    let cfg = |exec| {
        let mut c = protocol_config(ReadoutMode::Exact, 1000);
        c.execution = exec;
        ProtocolSetup::number(c).unwrap()
    };
    let a = distinguish(&cfg(Execution::Parallel), &SHALLOW).unwrap().samples;
    let b = distinguish(&cfg(Execution::Sequential), &SHALLOW).unwrap().samples;
    let c = distinguish(&cfg(Execution::Parallel), &Ensemble::GlobalSymmetric).unwrap().samples;
    let d = distinguish(&cfg(Execution::Parallel), &Ensemble::GlobalSymmetric).unwrap().samples;
    same.push(("protocol", a == b && c == d));
    let setup = ProtocolSetup::number(protocol_config(ReadoutMode::Exact, 2)).unwrap();
    same.push(("monte carlo", mc_samples(&setup, &SHALLOW, 50, 20) == mc_samples(&setup, &SHALLOW, 50, 20)));
    same.push(("conservation", charge_drifts(10, 3) == charge_drifts(10, 3)));
    same.push(("double circuit", double_errors(4, 6) == double_errors(4, 6)));
    same.push(("sampled learning", sampled_distance(0, 8) == sampled_distance(0, 8)));
    let x = random_circuit_qcas(3, 9);
    let y = random_circuit_qcas(3, 9);
    same.push(("circuit qca", x.iter().zip(&y).all(|(f, g)| f.distance(g) == 0.0)));
    let broken: Vec<&str> = same.iter().filter(|(_, ok)| !ok).map(|(w, _)| *w).collect();
    check(broken.is_empty(), format!("{} randomized runs repeated; differing {broken:?}", same.len()))
}

type Criterion = (&'static str, fn() -> Outcome);

#[test]
fn acceptance() {
    let criteria: [Criterion; 12] = [
        ("protocol separation, analytic", c1_analytic),
        ("protocol separation, Monte Carlo", c2_monte_carlo),
        ("charge conservation", c3_conservation),
        ("swap as a Pauli sum", c4_swap_identity),
        ("hermitian and operator decompositions", c5_decompositions),
        ("double circuit from true images", c6_double_circuit),
        ("exact learning end to end", c7_exact_learning),
        ("sampled learning end to end", c8_sampled_learning),
        ("QCA index", c9_index),
        ("staircase compilation", c10_staircase),
        ("two-layer factorization", c11_two_layer),
        ("determinism", c12_determinism),
    ];
    let mut failed = Vec::new();
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = run();
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("criterion {:>2} {tag} {name}: {detail} [{:.1?}]", k + 1, t.elapsed());
        if outcome.is_err() {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
