pub mod dense;

use vqc_core::ansatz::{CircuitSpec, EncodedSample, ParamTensor};
use vqc_core::simcore::{Axis, EntanglerKind};

use dense::Mat;

/// Dense unitary of the layered ansatz, assembled from its construction
/// rule rather than from the circuit's gate program.
#[allow(dead_code)]
pub fn ansatz_unitary(circuit: &CircuitSpec, params: &ParamTensor, sample: &EncodedSample) -> Mat {
    let n = circuit.n_qubits();
    let mut u = dense::identity(1 << n);
    let mut push = |g: Mat| u = dense::matmul(&g, &u);
    for q in 0..n {
        push(dense::single(n, q, &dense::rotation('Y', sample.angles[q])));
    }
    for l in 0..circuit.n_layers() {
        for q in 0..n {
            for (r, axis) in circuit.rot_axes().iter().enumerate() {
                let sym = match axis {
                    Axis::X => 'X',
                    Axis::Y => 'Y',
                    Axis::Z => 'Z',
                };
                push(dense::single(
                    n,
                    q,
                    &dense::rotation(sym, params.get(l, q, r)),
                ));
            }
        }
        let pairs: Vec<(usize, usize)> = match n {
            1 => vec![],
            2 => vec![(0, 1)],
            _ => (0..n).map(|q| (q, (q + 1) % n)).collect(),
        };
        for (c, t) in pairs {
            push(match circuit.entangler() {
                EntanglerKind::Cnot => dense::cnot(n, c, t),
                EntanglerKind::Cz => dense::cz(n, c, t),
            });
        }
    }
    u
}

/// Small deterministic generator so oracle tests do not share the crate's RNG.
#[allow(dead_code)]
pub struct Lcg(pub u64);

#[allow(dead_code)]
impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_f64() * n as f64) as usize).min(n - 1)
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.next_f64().max(1e-300);
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}
