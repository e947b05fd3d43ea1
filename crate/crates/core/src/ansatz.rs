//! Layered hardware-efficient ansatz with RY angle encoding.
//!
//! Gate program for `N` qubits, `R` rotations per qubit and `L` layers:
//!
//! ```text
//! RY(x_0) … RY(x_{N-1})                      encoding, applied once
//! for l in 0..L:
//!     for q in 0..N: R_{a_0}(θ[l,q,0]) … R_{a_{R-1}}(θ[l,q,R-1])  on q
//!     entangler ring (q, q+1 mod N)
//! ```
//!
//! The ring is empty for `N == 1` and a single gate `(0, 1)` for `N == 2`.
//! Gradients use the two-point parameter-shift rule, which is exact for the
//! half-angle Pauli rotations of [`crate::simcore`]. An adjoint sweep giving
//! the same derivatives in linear time is available through
//! [`GradientMethod`].

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simcore::{
    mat2_mul, resolve_angle, rotation_matrix, AngleSource, Axis, EntanglerKind, GateOp, Mat2,
    Observable, StateVector, MAX_QUBITS,
};

/// Rotation axes used when none are given: `[X, Y, Z]`, cycled to length R.
pub const DEFAULT_AXES: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

/// Dimensions of a parameter tensor, stored layer-major as `(L, N, R)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParamShape {
    pub n_layers: usize,
    pub n_qubits: usize,
    pub n_rot: usize,
}

impl ParamShape {
    pub fn new(n_layers: usize, n_qubits: usize, n_rot: usize) -> Result<Self> {
        if n_layers == 0 || n_qubits == 0 || n_rot == 0 {
            return Err(Error::Dimensions(format!(
                "layers, qubits and rotations must all be ≥ 1 (got L={n_layers}, N={n_qubits}, R={n_rot})"
            )));
        }
        Ok(Self {
            n_layers,
            n_qubits,
            n_rot,
        })
    }

    pub fn len(&self) -> usize {
        self.n_layers * self.n_qubits * self.n_rot
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat offset of `(layer, qubit, rot)`.
    pub fn index(&self, layer: usize, qubit: usize, rot: usize) -> usize {
        debug_assert!(layer < self.n_layers && qubit < self.n_qubits && rot < self.n_rot);
        (layer * self.n_qubits + qubit) * self.n_rot + rot
    }

    pub fn per_layer(&self) -> usize {
        self.n_qubits * self.n_rot
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamTensor {
    shape: ParamShape,
    values: Vec<f64>,
}

impl ParamTensor {
    pub fn zeros(shape: ParamShape) -> Self {
        Self {
            shape,
            values: vec![0.0; shape.len()],
        }
    }

    pub fn from_vec(shape: ParamShape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::Shape(format!(
                "{} values for a tensor of {} parameters",
                values.len(),
                shape.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFiniteAngle(*v));
        }
        Ok(Self { shape, values })
    }

    pub fn shape(&self) -> ParamShape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, layer: usize, qubit: usize, rot: usize) -> f64 {
        self.values[self.shape.index(layer, qubit, rot)]
    }

    pub fn set(&mut self, layer: usize, qubit: usize, rot: usize, value: f64) {
        let i = self.shape.index(layer, qubit, rot);
        self.values[i] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    /// The `N·R` entries of one layer.
    pub fn layer(&self, layer: usize) -> &[f64] {
        let w = self.shape.per_layer();
        &self.values[layer * w..(layer + 1) * w]
    }
}

/// One data point, encoded as one RY angle per qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedSample {
    pub angles: Vec<f64>,
    pub label: u8,
}

impl EncodedSample {
    pub fn new(angles: Vec<f64>, label: u8) -> Result<Self> {
        if label > 1 {
            return Err(Error::Shape(format!("label {label} is not binary")));
        }
        if let Some(a) = angles.iter().find(|a| !(0.0..=PI).contains(*a)) {
            return Err(Error::Shape(format!("encoded angle {a} outside [0, π]")));
        }
        Ok(Self { angles, label })
    }

    /// Zero-pads `features` up to `n_qubits` angles.
    pub fn padded(features: &[f64], n_qubits: usize, label: u8) -> Result<Self> {
        if features.len() > n_qubits {
            return Err(Error::Shape(format!(
                "{} encoded features for {n_qubits} qubits",
                features.len()
            )));
        }
        let mut angles = features.to_vec();
        angles.resize(n_qubits, 0.0);
        Self::new(angles, label)
    }

    pub fn zeros(n_qubits: usize) -> Self {
        Self {
            angles: vec![0.0; n_qubits],
            label: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    shape: ParamShape,
    rot_axes: Vec<Axis>,
    entangler: EntanglerKind,
    program: Vec<GateOp>,
    /// Program position of each parameter slot.
    slot_pos: Vec<usize>,
}

impl CircuitSpec {
    /// `N` qubits, `R` rotations per qubit per layer, `L` layers, axes cycling
    /// through [`DEFAULT_AXES`], CNOT ring.
    pub fn build(n_qubits: usize, n_rot: usize, n_layers: usize) -> Result<Self> {
        let axes: Vec<Axis> = DEFAULT_AXES.iter().copied().cycle().take(n_rot).collect();
        Self::with_axes(n_qubits, &axes, n_layers, EntanglerKind::Cnot)
    }

    pub fn with_axes(
        n_qubits: usize,
        rot_axes: &[Axis],
        n_layers: usize,
        entangler: EntanglerKind,
    ) -> Result<Self> {
        let shape = ParamShape::new(n_layers, n_qubits, rot_axes.len())?;
        if n_qubits > MAX_QUBITS {
            return Err(Error::QubitCount(n_qubits));
        }
        let mut program = Vec::with_capacity(n_qubits + shape.len() + n_layers * n_qubits);
        let mut slot_pos = vec![0; shape.len()];
        for q in 0..n_qubits {
            program.push(GateOp::Rotation {
                axis: Axis::Y,
                qubit: q,
                angle: AngleSource::Input(q),
            });
        }
        let ring: Vec<(usize, usize)> = match n_qubits {
            1 => vec![],
            2 => vec![(0, 1)],
            n => (0..n).map(|q| (q, (q + 1) % n)).collect(),
        };
        for l in 0..n_layers {
            for q in 0..n_qubits {
                for (r, &axis) in rot_axes.iter().enumerate() {
                    let slot = shape.index(l, q, r);
                    slot_pos[slot] = program.len();
                    program.push(GateOp::Rotation {
                        axis,
                        qubit: q,
                        angle: AngleSource::Param(slot),
                    });
                }
            }
            for &(control, target) in &ring {
                program.push(GateOp::Entangler {
                    kind: entangler,
                    control,
                    target,
                });
            }
        }
        Ok(Self {
            shape,
            rot_axes: rot_axes.to_vec(),
            entangler,
            program,
            slot_pos,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.shape.n_qubits
    }

    pub fn n_rot(&self) -> usize {
        self.shape.n_rot
    }

    pub fn n_layers(&self) -> usize {
        self.shape.n_layers
    }

    pub fn n_params(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> ParamShape {
        self.shape
    }

    pub fn rot_axes(&self) -> &[Axis] {
        &self.rot_axes
    }

    pub fn entangler(&self) -> EntanglerKind {
        self.entangler
    }

    pub fn program(&self) -> &[GateOp] {
        &self.program
    }

    fn check(&self, params: &ParamTensor, sample: &EncodedSample, obs: &Observable) -> Result<()> {
        if params.shape() != self.shape {
            return Err(Error::Shape(format!(
                "parameter tensor {:?} does not match circuit {:?}",
                params.shape(),
                self.shape
            )));
        }
        if sample.angles.len() != self.n_qubits() {
            return Err(Error::Shape(format!(
                "{} encoded angles for a {}-qubit circuit",
                sample.angles.len(),
                self.n_qubits()
            )));
        }
        if obs.n_qubits() != self.n_qubits() {
            return Err(Error::Shape(format!(
                "observable on {} qubits for a {}-qubit circuit",
                obs.n_qubits(),
                self.n_qubits()
            )));
        }
        Ok(())
    }

    /// Runs `program[from..]` on `state`, merging consecutive single-qubit
    /// rotations on the same wire into one 2×2 product.
    fn run_fused(
        &self,
        state: &mut StateVector,
        from: usize,
        params: &[f64],
        inputs: &[f64],
    ) -> Result<()> {
        let n = self.n_qubits();
        let mut pending: Vec<Option<Mat2>> = vec![None; n];
        let flush = |state: &mut StateVector, slot: &mut Option<Mat2>, q: usize| -> Result<()> {
            if let Some(m) = slot.take() {
                state.apply_single_qubit(&m, q)?;
            }
            Ok(())
        };
        for op in &self.program[from..] {
            match *op {
                GateOp::Rotation { axis, qubit, angle } => {
                    let m = rotation_matrix(axis, resolve_angle(angle, params, inputs)?);
                    let slot = &mut pending[qubit];
                    *slot = Some(match slot {
                        Some(prev) => mat2_mul(&m, prev),
                        None => m,
                    });
                }
                GateOp::Entangler {
                    kind,
                    control,
                    target,
                } => {
                    flush(state, &mut pending[control], control)?;
                    flush(state, &mut pending[target], target)?;
                    state.apply_entangler(kind, control, target)?;
                }
            }
        }
        for (q, slot) in pending.iter_mut().enumerate() {
            flush(state, slot, q)?;
        }
        Ok(())
    }

    /// The state `U(θ) RY(x)|0…0⟩`.
    pub fn prepare(&self, params: &ParamTensor, sample: &EncodedSample) -> Result<StateVector> {
        let mut state = StateVector::new_zero(self.n_qubits())?;
        self.run_fused(&mut state, 0, params.as_slice(), &sample.angles)?;
        Ok(state)
    }

    /// Every derivative from one forward and one reverse sweep:
    /// `∂E/∂θ_k = Im⟨λ_k| P_k |ψ_k⟩`, with `ψ_k` the state right after gate
    /// `k` and `λ_k` the back-propagated `H|ψ⟩` at the same point.
    fn adjoint_gradient(
        &self,
        params: &ParamTensor,
        sample: &EncodedSample,
        obs: &Observable,
    ) -> Result<(f64, Vec<f64>)> {
        let theta = params.as_slice();
        let inputs = &sample.angles;
        let mut psi = StateVector::new_zero(self.n_qubits())?;
        self.run_fused(&mut psi, 0, theta, inputs)?;
        let value = psi.expectation(obs)?;
        let mut lambda = psi.apply_observable(obs)?;
        let mut grads = vec![0.0; theta.len()];
        // the encoding rotations come first and carry no parameters
        for op in self.program[self.n_qubits()..].iter().rev() {
            match *op {
                GateOp::Rotation { axis, qubit, angle } => {
                    let t = resolve_angle(angle, theta, inputs)?;
                    if let AngleSource::Param(k) = angle {
                        let mut p_psi = psi.clone();
                        p_psi.apply_pauli(axis, qubit)?;
                        grads[k] += lambda.inner(&p_psi).im;
                    }
                    psi.apply_rotation(axis, qubit, -t)?;
                    lambda.apply_rotation(axis, qubit, -t)?;
                }
                GateOp::Entangler {
                    kind,
                    control,
                    target,
                } => {
                    psi.apply_entangler(kind, control, target)?;
                    lambda.apply_entangler(kind, control, target)?;
                }
            }
        }
        Ok((value, grads))
    }

    /// Parameter-shift derivatives for the requested slots, plus `E(θ)`.
    ///
    /// The state right before each requested gate is cached from a single
    /// forward pass, so each shifted evaluation only re-runs the suffix.
    fn shift_gradient(
        &self,
        params: &ParamTensor,
        sample: &EncodedSample,
        obs: &Observable,
        slots: &[usize],
    ) -> Result<(f64, Vec<f64>)> {
        let theta = params.as_slice();
        let inputs = &sample.angles;
        let mut wanted: Vec<(usize, usize)> = slots
            .iter()
            .enumerate()
            .map(|(i, &s)| (self.slot_pos[s], i))
            .collect();
        wanted.sort_unstable();

        let mut state = StateVector::new_zero(self.n_qubits())?;
        let mut cursor = 0;
        let mut grads = vec![0.0; slots.len()];
        let mut shifted = theta.to_vec();
        for &(pos, out) in &wanted {
            for op in &self.program[cursor..pos] {
                state.apply_gate(op, theta, inputs)?;
            }
            cursor = pos;
            let slot = slots[out];
            let mut ev = |delta: f64| -> Result<f64> {
                shifted[slot] = theta[slot] + delta;
                let mut s = state.clone();
                self.run_fused(&mut s, pos, &shifted, inputs)?;
                shifted[slot] = theta[slot];
                s.expectation(obs)
            };
            let plus = ev(FRAC_PI_2)?;
            let minus = ev(-FRAC_PI_2)?;
            grads[out] = 0.5 * (plus - minus);
        }
        self.run_fused(&mut state, cursor, theta, inputs)?;
        Ok((state.expectation(obs)?, grads))
    }
}

/// How full-parameter gradients are computed. Both give the exact
/// derivative; they differ only in cost and rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientMethod {
    /// Two shifted circuit evaluations per parameter.
    #[default]
    ParameterShift,
    /// One reverse sweep over the circuit (adjoint differentiation); linear
    /// rather than quadratic in the parameter count.
    Adjoint,
}

/// `E(θ) = ⟨ψ(θ, x)| H |ψ(θ, x)⟩`.
pub fn evaluate(
    circuit: &CircuitSpec,
    params: &ParamTensor,
    sample: &EncodedSample,
    obs: &Observable,
) -> Result<f64> {
    circuit.check(params, sample, obs)?;
    circuit.prepare(params, sample)?.expectation(obs)
}

/// `∂E/∂θ_k` for every parameter, shaped like `params`.
pub fn gradient(
    circuit: &CircuitSpec,
    params: &ParamTensor,
    sample: &EncodedSample,
    obs: &Observable,
) -> Result<ParamTensor> {
    Ok(evaluate_with_gradient(circuit, params, sample, obs)?.1)
}

/// `E(θ)` together with its full parameter-shift gradient.
pub fn evaluate_with_gradient(
    circuit: &CircuitSpec,
    params: &ParamTensor,
    sample: &EncodedSample,
    obs: &Observable,
) -> Result<(f64, ParamTensor)> {
    circuit.check(params, sample, obs)?;
    let slots: Vec<usize> = (0..circuit.n_params()).collect();
    let (value, grads) = circuit.shift_gradient(params, sample, obs, &slots)?;
    Ok((value, ParamTensor::from_vec(circuit.shape(), grads)?))
}

/// [`evaluate_with_gradient`] with an explicit [`GradientMethod`].
pub fn evaluate_with_gradient_by(
    circuit: &CircuitSpec,
    params: &ParamTensor,
    sample: &EncodedSample,
    obs: &Observable,
    method: GradientMethod,
) -> Result<(f64, ParamTensor)> {
    match method {
        GradientMethod::ParameterShift => evaluate_with_gradient(circuit, params, sample, obs),
        GradientMethod::Adjoint => {
            circuit.check(params, sample, obs)?;
            let (value, grads) = circuit.adjoint_gradient(params, sample, obs)?;
            Ok((value, ParamTensor::from_vec(circuit.shape(), grads)?))
        }
    }
}

/// The layer-0 slice of [`gradient`], computed without touching later layers.
pub fn first_layer_gradient(
    circuit: &CircuitSpec,
    params: &ParamTensor,
    sample: &EncodedSample,
    obs: &Observable,
) -> Result<Vec<f64>> {
    circuit.check(params, sample, obs)?;
    let slots: Vec<usize> = (0..circuit.shape().per_layer()).collect();
    Ok(circuit.shift_gradient(params, sample, obs, &slots)?.1)
}
