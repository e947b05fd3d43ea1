//! Dense statevector simulator.
//!
//! Amplitudes are stored as `Complex64` in a flat array of length 2^N. Qubit 0
//! is the least-significant bit of the amplitude index, so basis state
//! `|q_{N-1} ... q_1 q_0⟩` lives at index `Σ q_i 2^i`.
//!
//! Rotations use the half-angle convention `R_P(θ) = exp(-i θ/2 P)`, which
//! makes the two-point parameter-shift rule with shift π/2 exact.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest register the simulator will allocate.
pub const MAX_QUBITS: usize = 16;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axis::X => "X",
            Axis::Y => "Y",
            Axis::Z => "Z",
        };
        f.write_str(s)
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().trim_start_matches('R') {
            "X" => Ok(Axis::X),
            "Y" => Ok(Axis::Y),
            "Z" => Ok(Axis::Z),
            _ => Err(Error::Dimensions(format!("unknown rotation axis `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EntanglerKind {
    Cnot,
    Cz,
}

/// Where a rotation takes its angle from when a program is executed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AngleSource {
    /// Index into the trainable parameter vector.
    Param(usize),
    /// Index into the per-sample encoded input angles.
    Input(usize),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GateOp {
    Rotation {
        axis: Axis,
        qubit: usize,
        angle: AngleSource,
    },
    Entangler {
        kind: EntanglerKind,
        control: usize,
        target: usize,
    },
}

impl GateOp {
    pub fn param_slot(&self) -> Option<usize> {
        match *self {
            GateOp::Rotation {
                angle: AngleSource::Param(k),
                ..
            } => Some(k),
            _ => None,
        }
    }
}

impl fmt::Display for GateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GateOp::Rotation { axis, qubit, angle } => match angle {
                AngleSource::Param(k) => write!(f, "R{axis}(θ[{k}]) q{qubit}"),
                AngleSource::Input(i) => write!(f, "R{axis}(x[{i}]) q{qubit}"),
                AngleSource::Fixed(a) => write!(f, "R{axis}({a}) q{qubit}"),
            },
            GateOp::Entangler {
                kind,
                control,
                target,
            } => {
                let name = match kind {
                    EntanglerKind::Cnot => "CNOT",
                    EntanglerKind::Cz => "CZ",
                };
                write!(f, "{name}({control},{target})")
            }
        }
    }
}

/// Row-major 2×2 complex matrix `[m00, m01, m10, m11]`.
pub type Mat2 = [Complex64; 4];

pub const IDENTITY2: Mat2 = [ONE, ZERO, ZERO, ONE];

pub fn rotation_matrix(axis: Axis, angle: f64) -> Mat2 {
    let (s, c) = (angle / 2.0).sin_cos();
    match axis {
        Axis::X => [
            Complex64::new(c, 0.0),
            Complex64::new(0.0, -s),
            Complex64::new(0.0, -s),
            Complex64::new(c, 0.0),
        ],
        Axis::Y => [
            Complex64::new(c, 0.0),
            Complex64::new(-s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(c, 0.0),
        ],
        Axis::Z => [Complex64::new(c, -s), ZERO, ZERO, Complex64::new(c, s)],
    }
}

/// Matrix product `a · b`.
pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl TryFrom<char> for Pauli {
    type Error = Error;

    fn try_from(c: char) -> Result<Self> {
        match c.to_ascii_uppercase() {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            _ => Err(Error::Observable(format!("unknown Pauli symbol `{c}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ObservableTerm {
    /// `coeff · P_0 ⊗ … ⊗ P_{N-1}`, with `string[q]` acting on qubit `q`.
    Pauli { coeff: f64, string: Vec<Pauli> },
    /// `coeff · |0…0⟩⟨0…0|`.
    ZeroProjector { coeff: f64 },
}

impl ObservableTerm {
    pub fn coeff(&self) -> f64 {
        match *self {
            ObservableTerm::Pauli { coeff, .. } | ObservableTerm::ZeroProjector { coeff } => coeff,
        }
    }
}

/// A Hermitian observable written as a real combination of Pauli strings
/// (plus, optionally, the all-zero projector).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    n_qubits: usize,
    terms: Vec<ObservableTerm>,
}

impl Observable {
    pub fn new(n_qubits: usize, terms: Vec<ObservableTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Observable("at least one term is required".into()));
        }
        for term in &terms {
            if !term.coeff().is_finite() {
                return Err(Error::Observable(format!(
                    "non-finite coefficient {}",
                    term.coeff()
                )));
            }
            if let ObservableTerm::Pauli { string, .. } = term {
                if string.len() != n_qubits {
                    return Err(Error::Observable(format!(
                        "Pauli string of length {} on a {n_qubits}-qubit observable",
                        string.len()
                    )));
                }
            }
        }
        Ok(Self { n_qubits, terms })
    }

    /// Single-qubit `Z` on `qubit`.
    pub fn z(n_qubits: usize, qubit: usize) -> Result<Self> {
        if qubit >= n_qubits {
            return Err(Error::QubitIndex {
                index: qubit,
                n_qubits,
            });
        }
        let mut string = vec![Pauli::I; n_qubits];
        string[qubit] = Pauli::Z;
        Self::new(n_qubits, vec![ObservableTerm::Pauli { coeff: 1.0, string }])
    }

    pub fn zero_projector(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            terms: vec![ObservableTerm::ZeroProjector { coeff: 1.0 }],
        }
    }

    /// Parses a Pauli string written with qubit 0 first, e.g. `"ZZI"`.
    pub fn pauli_string(coeff: f64, s: &str) -> Result<Self> {
        let string = s.chars().map(Pauli::try_from).collect::<Result<Vec<_>>>()?;
        Self::new(string.len(), vec![ObservableTerm::Pauli { coeff, string }])
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[ObservableTerm] {
        &self.terms
    }

    /// `Σ |coeff|`, an upper bound on `|⟨H⟩|` for every normalized state.
    pub fn coefficient_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff().abs()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn new_zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::QubitCount(n_qubits));
        }
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = ONE;
        Ok(Self { n_qubits, amps })
    }

    /// Wraps raw amplitudes. The length must be a power of two in range and
    /// the vector must be normalized to within 1e-10.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if !len.is_power_of_two() {
            return Err(Error::Shape(format!(
                "{len} amplitudes is not a power of two"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::QubitCount(n_qubits));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Shape(format!(
                "state is not normalized (‖ψ‖² = {norm})"
            )));
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::QubitIndex {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    pub fn apply_rotation(&mut self, axis: Axis, qubit: usize, angle: f64) -> Result<()> {
        if !angle.is_finite() {
            return Err(Error::NonFiniteAngle(angle));
        }
        self.apply_single_qubit(&rotation_matrix(axis, angle), qubit)
    }

    /// Applies an arbitrary 2×2 matrix to `qubit`. The caller is responsible
    /// for passing a unitary.
    pub fn apply_single_qubit(&mut self, m: &Mat2, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        let stride = 1usize << qubit;
        for block in self.amps.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = m[0] * x0 + m[1] * x1;
                *a1 = m[2] * x0 + m[3] * x1;
            }
        }
        Ok(())
    }

    pub fn apply_entangler(
        &mut self,
        kind: EntanglerKind,
        control: usize,
        target: usize,
    ) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::SameQubit(control));
        }
        let cbit = 1usize << control;
        let tbit = 1usize << target;
        match kind {
            EntanglerKind::Cnot => {
                for i in 0..self.amps.len() {
                    // visit each swapped pair once, from its target-bit-0 member
                    if i & cbit != 0 && i & tbit == 0 {
                        self.amps.swap(i, i | tbit);
                    }
                }
            }
            EntanglerKind::Cz => {
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if i & cbit != 0 && i & tbit != 0 {
                        *a = -*a;
                    }
                }
            }
        }
        Ok(())
    }

    /// Executes one gate, resolving its angle against `params` / `inputs`.
    pub fn apply_gate(&mut self, op: &GateOp, params: &[f64], inputs: &[f64]) -> Result<()> {
        match *op {
            GateOp::Rotation { axis, qubit, angle } => {
                let theta = resolve_angle(angle, params, inputs)?;
                self.apply_rotation(axis, qubit, theta)
            }
            GateOp::Entangler {
                kind,
                control,
                target,
            } => self.apply_entangler(kind, control, target),
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Applies the Pauli generator of `axis` to `qubit`.
    pub fn apply_pauli(&mut self, axis: Axis, qubit: usize) -> Result<()> {
        let i = Complex64::new(0.0, 1.0);
        let m = match axis {
            Axis::X => [ZERO, ONE, ONE, ZERO],
            Axis::Y => [ZERO, -i, i, ZERO],
            Axis::Z => [ONE, ZERO, ZERO, -ONE],
        };
        self.apply_single_qubit(&m, qubit)
    }

    /// `H|ψ⟩`, generally unnormalized.
    pub fn apply_observable(&self, obs: &Observable) -> Result<StateVector> {
        if obs.n_qubits() != self.n_qubits {
            return Err(Error::Observable(format!(
                "observable on {} qubits applied to a {}-qubit state",
                obs.n_qubits(),
                self.n_qubits
            )));
        }
        let mut out = StateVector {
            n_qubits: self.n_qubits,
            amps: vec![ZERO; self.amps.len()],
        };
        for term in obs.terms() {
            match term {
                ObservableTerm::Pauli { coeff, string } => {
                    let mut t = self.clone();
                    for (q, p) in string.iter().enumerate() {
                        match p {
                            Pauli::I => {}
                            Pauli::X => t.apply_pauli(Axis::X, q)?,
                            Pauli::Y => t.apply_pauli(Axis::Y, q)?,
                            Pauli::Z => t.apply_pauli(Axis::Z, q)?,
                        }
                    }
                    for (o, a) in out.amps.iter_mut().zip(&t.amps) {
                        *o += a * coeff;
                    }
                }
                ObservableTerm::ZeroProjector { coeff } => out.amps[0] += self.amps[0] * coeff,
            }
        }
        Ok(out)
    }

    /// `⟨ψ|H|ψ⟩`. The imaginary residue of each Pauli term is discarded.
    pub fn expectation(&self, obs: &Observable) -> Result<f64> {
        if obs.n_qubits() != self.n_qubits {
            return Err(Error::Observable(format!(
                "observable on {} qubits applied to a {}-qubit state",
                obs.n_qubits(),
                self.n_qubits
            )));
        }
        Ok(obs
            .terms()
            .iter()
            .map(|term| match term {
                ObservableTerm::Pauli { coeff, string } => coeff * self.pauli_expectation(string),
                ObservableTerm::ZeroProjector { coeff } => coeff * self.amps[0].norm_sqr(),
            })
            .sum())
    }

    // P = i^{#Y} X^x Z^z, so P|b⟩ = i^{#Y} (-1)^{|b ∧ z|} |b ⊕ x⟩.
    fn pauli_expectation(&self, string: &[Pauli]) -> f64 {
        let mut x_mask = 0usize;
        let mut z_mask = 0usize;
        let mut n_y = 0u32;
        for (q, p) in string.iter().enumerate() {
            match p {
                Pauli::I => {}
                Pauli::X => x_mask |= 1 << q,
                Pauli::Y => {
                    x_mask |= 1 << q;
                    z_mask |= 1 << q;
                    n_y += 1;
                }
                Pauli::Z => z_mask |= 1 << q,
            }
        }
        let sign = |b: usize| {
            if (b & z_mask).count_ones().is_multiple_of(2) {
                1.0
            } else {
                -1.0
            }
        };
        if x_mask == 0 {
            return self
                .amps
                .iter()
                .enumerate()
                .map(|(b, a)| sign(b) * a.norm_sqr())
                .sum();
        }
        let acc: Complex64 = self
            .amps
            .iter()
            .enumerate()
            .map(|(b, a)| self.amps[b ^ x_mask].conj() * a * sign(b))
            .sum();
        let phase = match n_y % 4 {
            0 => ONE,
            1 => Complex64::new(0.0, 1.0),
            2 => -ONE,
            _ => Complex64::new(0.0, -1.0),
        };
        (phase * acc).re
    }
}

pub fn resolve_angle(angle: AngleSource, params: &[f64], inputs: &[f64]) -> Result<f64> {
    let theta = match angle {
        AngleSource::Fixed(a) => a,
        AngleSource::Param(k) => *params.get(k).ok_or_else(|| {
            Error::Shape(format!(
                "parameter slot {k} but only {} parameters",
                params.len()
            ))
        })?,
        AngleSource::Input(i) => *inputs.get(i).ok_or_else(|| {
            Error::Shape(format!(
                "input slot {i} but only {} input angles",
                inputs.len()
            ))
        })?,
    };
    if !theta.is_finite() {
        return Err(Error::NonFiniteAngle(theta));
    }
    Ok(theta)
}
