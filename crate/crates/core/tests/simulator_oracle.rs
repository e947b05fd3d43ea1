mod common;

use common::dense::{self, Mat};
use num_complex::Complex64;
use proptest::prelude::*;
use vqc_core::simcore::{Axis, EntanglerKind, Observable, ObservableTerm, Pauli, StateVector};

fn state(n: usize, salt: f64) -> StateVector {
    StateVector::from_amplitudes(dense::scrambled_state(n, salt)).unwrap()
}

fn assert_matches(sim: &StateVector, oracle: &[Complex64], tol: f64) {
    for (i, (a, b)) in sim.amplitudes().iter().zip(oracle).enumerate() {
        assert!((a - b).norm() < tol, "amplitude {i}: {a} vs {b}");
    }
}

fn axis_char(a: Axis) -> char {
    match a {
        Axis::X => 'X',
        Axis::Y => 'Y',
        Axis::Z => 'Z',
    }
}

#[test]
fn rx_on_middle_qubit_matches_kronecker_oracle() {
    let psi = dense::scrambled_state(3, 0.25);
    let mut s = StateVector::from_amplitudes(psi.clone()).unwrap();
    s.apply_rotation(Axis::X, 1, 0.7).unwrap();
    let u = dense::single(3, 1, &dense::rotation('X', 0.7));
    assert_matches(&s, &dense::matvec(&u, &psi), 1e-12);
}

#[test]
fn cnot_across_a_spectator_matches_oracle() {
    let psi = dense::scrambled_state(3, 1.5);
    let mut s = StateVector::from_amplitudes(psi.clone()).unwrap();
    s.apply_entangler(EntanglerKind::Cnot, 0, 2).unwrap();
    assert_matches(&s, &dense::matvec(&dense::cnot(3, 0, 2), &psi), 1e-12);
}

#[test]
fn zz_expectation_matches_quadratic_form() {
    let psi = dense::scrambled_state(3, 2.0);
    let s = StateVector::from_amplitudes(psi.clone()).unwrap();
    let obs = Observable::new(
        3,
        vec![ObservableTerm::Pauli {
            coeff: 0.5,
            string: vec![Pauli::Z, Pauli::Z, Pauli::I],
        }],
    )
    .unwrap();
    let h = dense::scale(&dense::pauli_string("ZZI"), dense::c(0.5, 0.0));
    let want = dense::expectation(&h, &psi);
    assert!(want.im.abs() < 1e-12);
    assert!((s.expectation(&obs).unwrap() - want.re).abs() < 1e-10);
}

#[test]
fn mixed_pauli_strings_match_quadratic_form() {
    let psi = dense::scrambled_state(4, 0.9);
    let s = StateVector::from_amplitudes(psi.clone()).unwrap();
    for (coeff, string) in [(1.0, "XYZI"), (-0.3, "YYII"), (2.0, "IXIY"), (0.7, "ZIXX")] {
        let obs = Observable::pauli_string(coeff, string).unwrap();
        let h = dense::scale(&dense::pauli_string(string), dense::c(coeff, 0.0));
        let want = dense::expectation(&h, &psi);
        assert!(
            (s.expectation(&obs).unwrap() - want.re).abs() < 1e-10,
            "{string}"
        );
    }
}

#[derive(Debug, Clone)]
enum Op {
    Rot(Axis, usize, f64),
    Ent(EntanglerKind, usize, usize),
}

fn op_strategy(n: usize) -> impl Strategy<Value = Op> {
    let axis = prop_oneof![Just(Axis::X), Just(Axis::Y), Just(Axis::Z)];
    let kind = prop_oneof![Just(EntanglerKind::Cnot), Just(EntanglerKind::Cz)];
    prop_oneof![
        (axis, 0..n, -7.0f64..7.0).prop_map(|(a, q, t)| Op::Rot(a, q, t)),
        (kind, 0..n, 1..n.max(2)).prop_map(move |(k, c, off)| Op::Ent(k, c, (c + off) % n)),
    ]
}

fn program_strategy() -> impl Strategy<Value = (usize, Vec<Op>)> {
    (1usize..=4).prop_flat_map(|n| (Just(n), prop::collection::vec(op_strategy(n), 1..24)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn gate_sequences_match_dense_product((n, ops) in program_strategy(), salt in 0.0f64..10.0) {
        let psi0 = dense::scrambled_state(n, salt);
        let mut sim = StateVector::from_amplitudes(psi0.clone()).unwrap();
        let mut u: Mat = dense::identity(1 << n);
        for op in &ops {
            let g = match *op {
                Op::Rot(a, q, t) => {
                    sim.apply_rotation(a, q, t).unwrap();
                    dense::single(n, q, &dense::rotation(axis_char(a), t))
                }
                Op::Ent(k, c, t) => {
                    if n == 1 {
                        // single-qubit registers have no entanglers
                        continue;
                    }
                    sim.apply_entangler(k, c, t).unwrap();
                    match k {
                        EntanglerKind::Cnot => dense::cnot(n, c, t),
                        EntanglerKind::Cz => dense::cz(n, c, t),
                    }
                }
            };
            u = dense::matmul(&g, &u);
            prop_assert!((sim.norm_sqr() - 1.0).abs() < 1e-10);
        }
        let want = dense::matvec(&u, &psi0);
        for (a, b) in sim.amplitudes().iter().zip(&want) {
            prop_assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn expectation_is_bounded(n in 1usize..=4, salt in 0.0f64..50.0,
                              coeffs in prop::collection::vec(-3.0f64..3.0, 1..4),
                              seed in 0u32..1000) {
        let syms = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
        let terms: Vec<ObservableTerm> = coeffs
            .iter()
            .enumerate()
            .map(|(t, &coeff)| ObservableTerm::Pauli {
                coeff,
                string: (0..n).map(|q| syms[((seed as usize) * 7 + t * 5 + q * 3) % 4]).collect(),
            })
            .collect();
        let obs = Observable::new(n, terms).unwrap();
        let e = state(n, salt).expectation(&obs).unwrap();
        prop_assert!(e.abs() <= obs.coefficient_bound() + 1e-12);
    }

    #[test]
    fn gates_are_deterministic(n in 1usize..=4, theta in -6.0f64..6.0) {
        let run = || {
            let mut s = StateVector::new_zero(n).unwrap();
            for q in 0..n {
                s.apply_rotation(Axis::Y, q, theta * (q as f64 + 1.0)).unwrap();
            }
            if n > 1 {
                s.apply_entangler(EntanglerKind::Cnot, 0, n - 1).unwrap();
            }
            s
        };
        let (a, b) = (run(), run());
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            prop_assert_eq!(x.re.to_bits(), y.re.to_bits());
            prop_assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
    }
}
