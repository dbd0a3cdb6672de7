use shallow_core::circuit::{random_brickwork, Circuit};
use shallow_core::learning::*;
use shallow_core::linalg::{max_abs_diff, op_norm, tensor_le, CMatrix};
use shallow_core::operator::LocalOperator;
use shallow_core::pauli::{clock, generalized_pauli, shift, swap_operator};
use shallow_core::seed::rng_from_seed;
use shallow_core::state::StateVector;
use shallow_core::Error;

fn swap_circuit(n: usize, p: usize, i: usize) -> Circuit {
    let g = LocalOperator::new(p, vec![i, i + 1], swap_operator(p).unwrap()).unwrap();
    Circuit::sequential(n, p, vec![g]).unwrap()
}

/// Dense unitary of a circuit, column by column from basis states.
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

fn site_op(n: usize, p: usize, i: usize, m: &CMatrix) -> CMatrix {
    let f: Vec<CMatrix> = (0..n).map(|s| if s == i { m.clone() } else { CMatrix::identity(p, p) }).collect();
    tensor_le(&f)
}

fn full(op: &LocalOperator, n: usize) -> CMatrix {
    op.expand(&(0..n).collect::<Vec<_>>()).unwrap()
}

#[test]
fn oracle_spread_and_counter() {
    let id = OracleChannel::new(Circuit::empty(4, 2), false);
    assert_eq!(id.spread(), 0);
    let bw = OracleChannel::new(random_brickwork(6, 2, 2, false, &mut rng_from_seed(1)).unwrap(), false);
    assert_eq!(bw.spread(), 2);
    let mut s = StateVector::zero(6, 2).unwrap();
    for _ in 0..5 {
        bw.apply(&mut s).unwrap();
    }
    assert_eq!(bw.applications(), 5);
    let ring = OracleChannel::new(random_brickwork(6, 2, 2, true, &mut rng_from_seed(1)).unwrap(), true);
    assert_eq!(ring.spread(), 2);
}

#[test]
fn identity_oracle_returns_generators() {
    for p in [2, 3] {
        let oracle = OracleChannel::new(Circuit::empty(4, p), false);
        let out = batch_learn(&oracle, &TomographySettings::exact()).unwrap();
        for img in &out.images {
            assert!(img.image_x.distance(&LocalOperator::single(p, img.site, shift(p)).unwrap()) < 1e-12);
            assert!(img.image_z.distance(&LocalOperator::single(p, img.site, clock(p)).unwrap()) < 1e-12);
        }
        assert_eq!(out.groups.len(), 1);
    }
}

#[test]
fn swap_oracle_moves_image() {
    let oracle = OracleChannel::new(swap_circuit(4, 3, 1), false);
    let img = learn_site_images(&oracle, 1, &TomographySettings::exact()).unwrap();
    assert!(img.image_x.distance(&LocalOperator::single(3, 2, shift(3)).unwrap()) < 1e-12);
    let sw = conjugated_swap(&img, 4, 1e-10).unwrap();
    let expect = LocalOperator::new(3, vec![2, 5], swap_operator(3).unwrap()).unwrap();
    assert!(sw.distance(&expect) < 1e-12);
}

#[test]
fn learned_images_match_dense_conjugation() {
    for (p, depth) in [(2, 1), (2, 2), (3, 1)] {
        let n = 4;
        let c = random_brickwork(n, p, depth, false, &mut rng_from_seed(7)).unwrap();
        let u = dense(&c);
        let oracle = OracleChannel::new(c, false);
        let out = batch_learn(&oracle, &TomographySettings::exact()).unwrap();
        for img in &out.images {
            let ux = &u * site_op(n, p, img.site, &shift(p)) * u.adjoint();
            let uz = &u * site_op(n, p, img.site, &clock(p)) * u.adjoint();
            assert!(max_abs_diff(&full(&img.image_x, n), &ux) < 1e-8, "p={p} depth={depth}");
            assert!(max_abs_diff(&full(&img.image_z, n), &uz) < 1e-8);
            let ball = oracle.ball(img.site, oracle.spread()).unwrap();
            assert!(img.image_x.support().iter().all(|s| ball.contains(s)));
        }
    }
}

#[test]
fn images_are_local_and_unitary() {
    let c = random_brickwork(6, 2, 2, false, &mut rng_from_seed(11)).unwrap();
    let truth = exact_images(&c).unwrap();
    let oracle = OracleChannel::new(c, false);
    let out = batch_learn(&oracle, &TomographySettings::exact()).unwrap();
    for (img, t) in out.images.iter().zip(&truth) {
        assert!(img.unitarity_deviation() < 1e-8);
        // the true image, truncated to its own support, lies inside the ball
        assert!(img.image_x.distance(&t.image_x) < 1e-6);
        assert!(img.image_z.distance(&t.image_z) < 1e-6);
    }
}

#[test]
fn image_map_is_multiplicative() {
    for p in [2, 3] {
        let c = random_brickwork(4, p, 1, false, &mut rng_from_seed(3)).unwrap();
        let oracle = OracleChannel::new(c, false);
        let s = TomographySettings::exact();
        let img = learn_site_images(&oracle, 1, &s).unwrap();
        let xz = learn_image(&oracle, 1, &generalized_pauli(p, 1, 1).unwrap(), &s).unwrap();
        assert!(img.image_x.mul(&img.image_z).distance(&xz) < 2e-8);
    }
}

#[test]
fn group_counts() {
    let c = random_brickwork(8, 2, 1, false, &mut rng_from_seed(1)).unwrap();
    let oracle = OracleChannel::new(c, false);
    assert_eq!(site_groups(&oracle).len(), 3);
    let id = OracleChannel::new(Circuit::empty(8, 2), false);
    assert_eq!(site_groups(&id).len(), 1);
}

#[test]
fn batching_saves_queries() {
    for n in [8, 12] {
        let c = random_brickwork(n, 2, 1, false, &mut rng_from_seed(n as u64)).unwrap();
        let oracle = OracleChannel::new(c, false);
        let s = TomographySettings::exact();
        let batch = batch_learn(&oracle, &s).unwrap();
        let seq = sequential_learn(&oracle, &s).unwrap();
        let bound = (n / 3) as f64 / 2.0;
        assert!(seq.queries as f64 / batch.queries as f64 >= bound);
        assert!(seq.applications as f64 / batch.applications as f64 >= bound);
        // query bound: groups x states per site x settings per state
        assert!(batch.queries <= 3 * 2 * 3u64.pow(3));
        for (a, b) in batch.images.iter().zip(&seq.images) {
            assert!(a.image_x.distance(&b.image_x) < 1e-10);
        }
    }
}

#[test]
fn true_images_rebuild_double_of_deep_circuit() {
    for (n, p) in [(2, 2), (3, 2), (2, 3)] {
        let c = random_brickwork(n, p, 6, false, &mut rng_from_seed(21)).unwrap();
        let learned = assemble_double_circuit(&exact_images(&c).unwrap(), p, 1e-9).unwrap();
        let a = dense(learned.circuit());
        let b = dense(&reference_double(&c).unwrap());
        let ov: shallow_core::linalg::C64 = (b.adjoint() * &a).trace();
        let phase = ov / ov.norm();
        assert!(op_norm(&(a - b * phase)) < 1e-10, "n={n} p={p}");
    }
}

#[test]
fn swap_order_is_immaterial() {
    let c = random_brickwork(3, 2, 2, false, &mut rng_from_seed(5)).unwrap();
    let imgs = exact_images(&c).unwrap();
    let gates: Vec<LocalOperator> = imgs.iter().map(|im| conjugated_swap(im, 3, 1e-9).unwrap()).collect();
    let all: Vec<usize> = (0..6).collect();
    let forward = gates.iter().fold(CMatrix::identity(64, 64), |acc, g| g.expand(&all).unwrap() * acc);
    let backward = gates.iter().rev().fold(CMatrix::identity(64, 64), |acc, g| g.expand(&all).unwrap() * acc);
    assert!(max_abs_diff(&forward, &backward) < 1e-9);
}

#[test]
fn identity_double_composes_to_identity() {
    let learned = assemble_double_circuit(&exact_images(&Circuit::empty(2, 2)).unwrap(), 2, 1e-10).unwrap();
    assert_eq!(learned.circuit().layers()[0].len(), 2);
    assert!(max_abs_diff(&dense(learned.circuit()), &CMatrix::identity(16, 16)) < 1e-12);
}

#[test]
fn exact_learning_end_to_end() {
    let c = random_brickwork(4, 2, 2, false, &mut rng_from_seed(9)).unwrap();
    let oracle = OracleChannel::new(c.clone(), false);
    let out = batch_learn(&oracle, &TomographySettings::exact()).unwrap();
    for im in &out.images {
        assert!(conjugated_swap(im, 4, 1e-7).is_ok());
    }
    let learned = assemble_double_circuit(&out.images, 2, 1e-7).unwrap();
    let r = verify_double(&learned, &c).unwrap();
    assert!(r.operator_distance.unwrap() < 1e-8);
    assert!(r.distance() < 1e-8);
}

#[test]
fn sampled_learning_meets_target() {
    let c = random_brickwork(4, 2, 1, false, &mut rng_from_seed(13)).unwrap();
    let oracle = OracleChannel::new(c.clone(), false);
    let settings = TomographySettings::sampled(0.1, 0.1, 99);
    let out = batch_learn(&oracle, &settings).unwrap();
    assert_eq!(out.shots, Some(shot_schedule(&oracle, &settings).unwrap()));
    let learned = assemble_double_circuit(&out.images, 2, 0.5).unwrap();
    assert!(verify_double(&learned, &c).unwrap().distance() < 0.1);
}

#[test]
fn sampled_configuration_errors() {
    let c = random_brickwork(4, 2, 1, false, &mut rng_from_seed(1)).unwrap();
    let oracle = OracleChannel::new(c, false);
    let mut s = TomographySettings::sampled(0.1, 0.1, 1);
    s.shots = Some(10);
    assert!(matches!(batch_learn(&oracle, &s), Err(Error::Config(_))));
    s.shots = Some(0);
    assert!(matches!(batch_learn(&oracle, &s), Err(Error::Config(_))));
    let q6 = OracleChannel::new(Circuit::empty(2, 6), false);
    assert!(matches!(
        batch_learn(&q6, &TomographySettings::sampled(0.1, 0.1, 1)),
        Err(Error::Config(_))
    ));
    assert!(matches!(learn_site_images(&q6, 5, &TomographySettings::exact()), Err(Error::Range(_))));
}

#[test]
fn images_round_trip_through_json() {
    let c = random_brickwork(3, 2, 1, false, &mut rng_from_seed(2)).unwrap();
    let img = &exact_images(&c).unwrap()[1];
    let json = serde_json::to_string(&img.to_record()).unwrap();
    let back = HeisenbergImage::from_record(2, &serde_json::from_str(&json).unwrap()).unwrap();
    assert!(back.image_x.distance(&img.image_x) < 1e-15);
    let learned = assemble_double_circuit(&exact_images(&c).unwrap(), 2, 1e-9).unwrap();
    let rec = serde_json::to_string(&learned.to_record()).unwrap();
    let again = LearnedDoubleCircuit::from_record(&serde_json::from_str(&rec).unwrap()).unwrap();
    assert_eq!(again.circuit().gate_count(), learned.circuit().gate_count());
}
