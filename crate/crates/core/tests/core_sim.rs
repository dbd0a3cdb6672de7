use nalgebra::DVector;
use proptest::prelude::*;
use shallow_core::circuit::{random_brickwork, Circuit};
use shallow_core::decompose::{hermitian_split, operator_to_densities, recombine};
use shallow_core::haar::{haar_unitary, haar_vector};
use shallow_core::linalg::{c64, max_abs_diff, CMatrix, C64, ONE, ZERO};
use shallow_core::operator::LocalOperator;
use shallow_core::pauli::{generalized_pauli, swap_operator};
use shallow_core::seed::rng_from_seed;
use shallow_core::state::StateVector;

fn root(p: usize, k: usize) -> C64 {
    let t = 2.0 * std::f64::consts::PI * k as f64 / p as f64;
    c64(t.cos(), t.sin())
}

/// `X^a Z^b` entry by entry: `<j| X^a Z^b |k> = w^{bk} [j = k + a]`.
fn pauli_oracle(p: usize, a: usize, b: usize) -> CMatrix {
    CMatrix::from_fn(p, p, |j, k| if j == (k + a) % p { root(p, (b * k) % p) } else { ZERO })
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

fn random_state(n: usize, p: usize, seed: u64) -> StateVector {
    let v = haar_vector(p.pow(n as u32), &mut rng_from_seed(seed));
    StateVector::from_amplitudes(n, p, v.iter().cloned().collect()).unwrap()
}

/// Partial trace by explicit loops over digit strings.
fn reduced_oracle(state: &StateVector, keep: &[usize]) -> CMatrix {
    let (n, p) = (state.n(), state.p());
    let amps = state.amplitudes();
    let rest: Vec<usize> = (0..n).filter(|s| !keep.contains(s)).collect();
    let dk = p.pow(keep.len() as u32);
    let dr = p.pow(rest.len() as u32);
    let index = |kd: usize, rd: usize| -> usize {
        let mut idx = 0;
        for (t, &s) in keep.iter().enumerate() {
            idx += ((kd / p.pow(t as u32)) % p) * p.pow(s as u32);
        }
        for (t, &s) in rest.iter().enumerate() {
            idx += ((rd / p.pow(t as u32)) % p) * p.pow(s as u32);
        }
        idx
    };
    let mut rho = CMatrix::zeros(dk, dk);
    for r in 0..dk {
        for c in 0..dk {
            for e in 0..dr {
                rho[(r, c)] += amps[index(r, e)] * amps[index(c, e)].conj();
            }
        }
    }
    rho
}

#[test]
fn paulis_match_entrywise_formula() {
    assert_eq!(generalized_pauli(2, 1, 0).unwrap(), CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]));
    assert_eq!(generalized_pauli(3, 0, 0).unwrap(), CMatrix::identity(3, 3));
    for p in [2, 3, 5] {
        for a in 0..p {
            for b in 0..p {
                let m = generalized_pauli(p, a as i64, b as i64).unwrap();
                assert!(max_abs_diff(&m, &pauli_oracle(p, a, b)) < 1e-12);
            }
        }
        let x = generalized_pauli(p, 1, 0).unwrap();
        let z = generalized_pauli(p, 0, 1).unwrap();
        let id = CMatrix::identity(p, p);
        assert!(max_abs_diff(&x.pow(p as u32), &id) < 1e-12);
        assert!(max_abs_diff(&z.pow(p as u32), &id) < 1e-12);
        assert!(max_abs_diff(&(&z * &x), &(&x * &z * root(p, 1))) < 1e-12);
        assert!(max_abs_diff(&generalized_pauli(p, -1, p as i64 + 1).unwrap(), &pauli_oracle(p, p - 1, 1)) < 1e-12);
    }
}

#[test]
fn swap_is_sum_of_pauli_pairs() {
    for p in [2, 3, 5] {
        let mut sum = CMatrix::zeros(p * p, p * p);
        for a in 0..p {
            for b in 0..p {
                let m = pauli_oracle(p, a, b);
                sum += kron(&m.adjoint(), &m);
            }
        }
        sum /= c64(p as f64, 0.0);
        let s = swap_operator(p).unwrap();
        assert!(max_abs_diff(&s, &sum) < 1e-12, "p={p}");
        // the swap is a permutation of digit pairs
        for x in 0..p {
            for y in 0..p {
                assert_eq!(s[(y + p * x, x + p * y)], ONE);
            }
        }
    }
    let q = swap_operator(2).unwrap();
    let terms = [(0, 0), (1, 0), (1, 1), (0, 1)];
    let mut sum = CMatrix::zeros(4, 4);
    for (a, b) in terms {
        let m = pauli_oracle(2, a, b);
        sum += kron(&m, &m.adjoint());
    }
    assert!(max_abs_diff(&q, &(sum * c64(0.5, 0.0))) < 1e-12);
}

#[test]
fn circuits_move_basis_states() {
    let swap = LocalOperator::new(2, vec![0, 1], swap_operator(2).unwrap()).unwrap();
    let c = Circuit::new(2, 2, vec![vec![swap]]).unwrap();
    let mut s = StateVector::basis(2, 2, 0).unwrap();
    Circuit::empty(2, 2).apply(&mut s).unwrap();
    assert_eq!(s.amplitudes()[0], ONE);
    c.apply(&mut s).unwrap();
    assert_eq!(s.amplitudes()[0], ONE);
    // site 0 is the low digit: |10> (site 0 = 1) is index 1
    let mut s = StateVector::basis(2, 2, 1).unwrap();
    c.apply(&mut s).unwrap();
    assert_eq!(s.amplitudes()[2], ONE);
}

#[test]
fn expectation_values() {
    let s0 = StateVector::basis(1, 2, 0).unwrap();
    let s1 = StateVector::basis(1, 2, 1).unwrap();
    let z = LocalOperator::single(2, 0, pauli_oracle(2, 0, 1)).unwrap();
    let num = LocalOperator::single(2, 0, CMatrix::from_diagonal(&DVector::from_vec(vec![ZERO, ONE]))).unwrap();
    let x = LocalOperator::single(2, 0, pauli_oracle(2, 1, 0)).unwrap();
    assert!((s0.expectation(&z).unwrap().re - 1.0).abs() < 1e-15);
    assert!((s1.expectation(&num).unwrap().re - 1.0).abs() < 1e-15);
    let h = 1.0 / 2f64.sqrt();
    let plus = StateVector::from_amplitudes(1, 2, vec![c64(h, 0.0), c64(h, 0.0)]).unwrap();
    assert!((plus.expectation(&x).unwrap().re - 1.0).abs() < 1e-12);
}

#[test]
fn reduced_density_matches_loops() {
    let s = StateVector::basis(2, 2, 0).unwrap();
    let rho = s.reduced_density(&[0]).unwrap();
    assert!(max_abs_diff(&rho.matrix, &CMatrix::from_diagonal(&DVector::from_vec(vec![ONE, ZERO]))) < 1e-15);
    let h = c64(1.0 / 2f64.sqrt(), 0.0);
    let bell = StateVector::from_amplitudes(2, 2, vec![h, ZERO, ZERO, h]).unwrap();
    assert!(max_abs_diff(&bell.reduced_density(&[0]).unwrap().matrix, &(CMatrix::identity(2, 2) * c64(0.5, 0.0))) < 1e-15);
    for p in [2, 3] {
        let s = random_state(3, p, p as u64);
        for keep in [vec![0], vec![1], vec![2], vec![0, 1], vec![0, 2], vec![1, 2], vec![0, 1, 2]] {
            let rho = s.reduced_density(&keep).unwrap();
            assert!(max_abs_diff(&rho.matrix, &reduced_oracle(&s, &keep)) < 1e-12, "p={p} {keep:?}");
        }
    }
    assert!(StateVector::basis(2, 2, 0).unwrap().reduced_density(&[]).is_err());
}

#[test]
fn haar_moments() {
    let mut rng = rng_from_seed(7);
    let u = haar_unitary(1, &mut rng);
    assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-12);
    let samples = 10_000;
    let mut m2 = 0.0;
    let mut m4 = 0.0;
    for _ in 0..samples {
        let u = haar_unitary(4, &mut rng);
        assert!(max_abs_diff(&(u.adjoint() * &u), &CMatrix::identity(4, 4)) < 1e-12);
        let w = u[(0, 0)].norm_sqr();
        m2 += w;
        m4 += w * w;
    }
    // E|U00|^2 = 1/d, E|U00|^4 = 2/(d(d+1))
    assert!((m2 / samples as f64 - 0.25).abs() < 0.01);
    assert!((m4 / samples as f64 - 0.1).abs() < 0.01);
}

#[test]
fn hermitian_split_examples() {
    let z = pauli_oracle(2, 0, 1);
    let s = hermitian_split(&z).unwrap();
    assert!((s.alpha - 1.0).abs() < 1e-12 && (s.beta - 1.0).abs() < 1e-12);
    let rp = s.rho_plus.unwrap();
    let rm = s.rho_minus.unwrap();
    assert!((rp[(0, 0)].re - 1.0).abs() < 1e-12 && (rm[(1, 1)].re - 1.0).abs() < 1e-12);
    let proj = CMatrix::from_diagonal(&DVector::from_vec(vec![ONE, ZERO]));
    let s = hermitian_split(&proj).unwrap();
    assert!((s.alpha - 1.0).abs() < 1e-12 && s.beta == 0.0);
    assert!(hermitian_split(&pauli_oracle(3, 1, 0)).is_err());
}

#[test]
fn operator_to_density_examples() {
    let x = pauli_oracle(2, 1, 0);
    let parts = operator_to_densities(&x).unwrap();
    assert_eq!(parts.len(), 2);
    let mut w: Vec<f64> = parts.iter().map(|t| t.weight.re).collect();
    w.sort_by(f64::total_cmp);
    assert!((w[0] + 1.0).abs() < 1e-12 && (w[1] - 1.0).abs() < 1e-12);
    let id = operator_to_densities(&CMatrix::identity(2, 2)).unwrap();
    assert_eq!(id.len(), 1);
    assert!((id[0].weight.re - 2.0).abs() < 1e-12);
    // qubit XZ is anti-hermitian: only the imaginary part survives
    let xz = pauli_oracle(2, 1, 1);
    let parts = operator_to_densities(&xz).unwrap();
    assert_eq!(parts.len(), 2);
    assert!(parts.iter().all(|t| t.weight.re.abs() < 1e-12));
    assert!(max_abs_diff(&recombine(&parts, 2), &xz) < 1e-10);
    let o = &xz + pauli_oracle(2, 0, 1) * c64(0.5, 0.0);
    let parts = operator_to_densities(&o).unwrap();
    assert_eq!(parts.len(), 4);
    assert!(max_abs_diff(&recombine(&parts, 2), &o) < 1e-10);
}

fn matrix_strategy(d: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d * d)
        .prop_map(move |v| CMatrix::from_iterator(d, d, v.into_iter().map(|(a, b)| c64(a, b))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_reconstructs_hermitian(m in matrix_strategy(4)) {
        let h = (&m + m.adjoint()) * c64(0.5, 0.0);
        let s = hermitian_split(&h).unwrap();
        let mut rec = CMatrix::zeros(4, 4);
        if let Some(r) = &s.rho_plus { rec += r * c64(s.alpha, 0.0); }
        if let Some(r) = &s.rho_minus { rec -= r * c64(s.beta, 0.0); }
        prop_assert!(max_abs_diff(&rec, &h) < 1e-10);
        prop_assert!((s.alpha - s.beta - h.trace().re).abs() < 1e-9);
        for r in [&s.rho_plus, &s.rho_minus].into_iter().flatten() {
            prop_assert!((r.trace().re - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn densities_reconstruct_operator(m in matrix_strategy(4)) {
        let parts = operator_to_densities(&m).unwrap();
        prop_assert!(parts.len() <= 4);
        prop_assert!(max_abs_diff(&recombine(&parts, 4), &m) < 1e-10);
    }

    #[test]
    fn circuits_preserve_norm(seed in any::<u64>(), depth in 0usize..4, p in 2usize..4) {
        let mut rng = rng_from_seed(seed);
        let c = random_brickwork(4, p, depth, seed % 2 == 0, &mut rng).unwrap();
        let mut s = random_state(4, p, seed ^ 1);
        c.apply(&mut s).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn reduced_density_has_unit_trace(seed in any::<u64>(), site in 0usize..3) {
        let s = random_state(3, 3, seed);
        let rho = s.reduced_density(&[site]).unwrap();
        prop_assert!((rho.matrix.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(rho.validate(1e-10).is_ok());
    }
}
