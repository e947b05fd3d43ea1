mod common;

use common::{ansatz_unitary, dense, Lcg};
use std::f64::consts::PI;
use vqc_core::ansatz::{self, CircuitSpec, EncodedSample, ParamTensor};
use vqc_core::simcore::{Axis, EntanglerKind, Observable};

struct Instance {
    circuit: CircuitSpec,
    params: ParamTensor,
    sample: EncodedSample,
    obs: Observable,
}

fn random_instance(rng: &mut Lcg) -> Instance {
    let n = 1 + rng.below(4);
    let r = 1 + rng.below(3);
    let l = 1 + rng.below(3);
    let axes_pool = [Axis::X, Axis::Y, Axis::Z];
    let axes: Vec<Axis> = (0..r).map(|_| axes_pool[rng.below(3)]).collect();
    let kind = if rng.next_f64() < 0.5 {
        EntanglerKind::Cnot
    } else {
        EntanglerKind::Cz
    };
    let circuit = CircuitSpec::with_axes(n, &axes, l, kind).unwrap();
    let values = (0..circuit.n_params())
        .map(|_| rng.range(-PI, PI))
        .collect();
    let params = ParamTensor::from_vec(circuit.shape(), values).unwrap();
    let angles = (0..n).map(|_| rng.range(0.0, PI)).collect();
    let sample = EncodedSample::new(angles, 0).unwrap();
    let obs = match rng.below(3) {
        0 => Observable::z(n, rng.below(n)).unwrap(),
        1 => Observable::zero_projector(n),
        _ => {
            let s: String = (0..n).map(|_| ['I', 'X', 'Y', 'Z'][rng.below(4)]).collect();
            Observable::pauli_string(rng.range(-2.0, 2.0), &s).unwrap()
        }
    };
    Instance {
        circuit,
        params,
        sample,
        obs,
    }
}

fn dense_observable(obs: &Observable) -> dense::Mat {
    let n = obs.n_qubits();
    let mut h = vec![vec![dense::c(0.0, 0.0); 1 << n]; 1 << n];
    for term in obs.terms() {
        let m = match term {
            vqc_core::simcore::ObservableTerm::Pauli { coeff, string } => {
                let s: String = string.iter().map(|p| format!("{p:?}")).collect();
                dense::scale(&dense::pauli_string(&s), dense::c(*coeff, 0.0))
            }
            vqc_core::simcore::ObservableTerm::ZeroProjector { coeff } => {
                let mut p = vec![vec![dense::c(0.0, 0.0); 1 << n]; 1 << n];
                p[0][0] = dense::c(*coeff, 0.0);
                p
            }
        };
        h = dense::add(&h, &m);
    }
    h
}

fn oracle_value(inst: &Instance) -> f64 {
    let u = ansatz_unitary(&inst.circuit, &inst.params, &inst.sample);
    let psi = dense::matvec(&u, &dense::zero_state(inst.circuit.n_qubits()));
    dense::expectation(&dense_observable(&inst.obs), &psi).re
}

#[test]
fn circuit_matches_dense_construction() {
    let mut rng = Lcg(11);
    for _ in 0..60 {
        let inst = random_instance(&mut rng);
        let got = ansatz::evaluate(&inst.circuit, &inst.params, &inst.sample, &inst.obs).unwrap();
        let want = oracle_value(&inst);
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }
}

#[test]
fn parameter_shift_matches_central_differences() {
    let h = 1e-5;
    let mut rng = Lcg(2024);
    for case in 0..100 {
        let inst = random_instance(&mut rng);
        let (value, grad) =
            ansatz::evaluate_with_gradient(&inst.circuit, &inst.params, &inst.sample, &inst.obs)
                .unwrap();
        let direct =
            ansatz::evaluate(&inst.circuit, &inst.params, &inst.sample, &inst.obs).unwrap();
        assert!((value - direct).abs() < 1e-12);
        for k in 0..inst.params.len() {
            let shifted = |d: f64| {
                let mut p = inst.params.clone();
                p.as_mut_slice()[k] += d;
                ansatz::evaluate(&inst.circuit, &p, &inst.sample, &inst.obs).unwrap()
            };
            let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
            let g = grad.as_slice()[k];
            if g.abs() < 1e-3 {
                assert!((g - fd).abs() < 1e-7, "case {case} param {k}: {g} vs {fd}");
            } else {
                assert!(
                    ((g - fd) / g).abs() < 1e-5,
                    "case {case} param {k}: {g} vs {fd}"
                );
            }
        }
    }
}

#[test]
fn first_layer_slice_agrees_with_full_gradient() {
    let mut rng = Lcg(5);
    for _ in 0..30 {
        let inst = random_instance(&mut rng);
        let full = ansatz::gradient(&inst.circuit, &inst.params, &inst.sample, &inst.obs).unwrap();
        let first =
            ansatz::first_layer_gradient(&inst.circuit, &inst.params, &inst.sample, &inst.obs)
                .unwrap();
        assert_eq!(first.as_slice(), full.layer(0));
    }
}

#[test]
fn gradient_components_are_bounded_by_coefficients() {
    let mut rng = Lcg(99);
    for _ in 0..100 {
        let inst = random_instance(&mut rng);
        let bound = inst.obs.coefficient_bound();
        let grad = ansatz::gradient(&inst.circuit, &inst.params, &inst.sample, &inst.obs).unwrap();
        assert!(grad.as_slice().iter().all(|g| g.abs() <= bound + 1e-12));
    }
}

#[test]
fn adjoint_sweep_agrees_with_parameter_shift() {
    use vqc_core::ansatz::GradientMethod;
    let mut rng = Lcg(404);
    for _ in 0..100 {
        let inst = random_instance(&mut rng);
        let (v1, g1) = ansatz::evaluate_with_gradient_by(
            &inst.circuit,
            &inst.params,
            &inst.sample,
            &inst.obs,
            GradientMethod::ParameterShift,
        )
        .unwrap();
        let (v2, g2) = ansatz::evaluate_with_gradient_by(
            &inst.circuit,
            &inst.params,
            &inst.sample,
            &inst.obs,
            GradientMethod::Adjoint,
        )
        .unwrap();
        assert!((v1 - v2).abs() < 1e-12);
        for (a, b) in g1.as_slice().iter().zip(g2.as_slice()) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }
}
