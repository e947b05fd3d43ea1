//! Dense-matrix reference simulator used as a test oracle.
//!
//! Every gate is materialized as a full 2^N × 2^N matrix built from
//! Kronecker products, with qubit 0 as the least-significant (rightmost)
//! factor. Nothing here shares code with the statevector kernels.
#![allow(dead_code)]

use num_complex::Complex64 as C;

pub type Mat = Vec<Vec<C>>;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn identity(d: usize) -> Mat {
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) })
                .collect()
        })
        .collect()
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0, 0.0); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let mut out = vec![vec![c(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == c(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn matvec(a: &Mat, v: &[C]) -> Vec<C> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

pub fn add(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect())
        .collect()
}

pub fn scale(a: &Mat, k: C) -> Mat {
    a.iter()
        .map(|r| r.iter().map(|x| x * k).collect())
        .collect()
}

pub fn pauli(sym: char) -> Mat {
    let (o, l, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
    match sym {
        'I' => vec![vec![l, o], vec![o, l]],
        'X' => vec![vec![o, l], vec![l, o]],
        'Y' => vec![vec![o, -i], vec![i, o]],
        'Z' => vec![vec![l, o], vec![o, -l]],
        _ => panic!("bad pauli {sym}"),
    }
}

/// `exp(-i θ/2 P) = cos(θ/2) I − i sin(θ/2) P`.
pub fn rotation(sym: char, theta: f64) -> Mat {
    add(
        &scale(&identity(2), c((theta / 2.0).cos(), 0.0)),
        &scale(&pauli(sym), c(0.0, -(theta / 2.0).sin())),
    )
}

/// Embeds per-qubit 2×2 factors (`factors[q]` on qubit `q`) into the full space.
pub fn embed(factors: &[Mat]) -> Mat {
    let mut out = factors[factors.len() - 1].clone();
    for f in factors.iter().rev().skip(1) {
        out = kron(&out, f);
    }
    out
}

pub fn single(n: usize, qubit: usize, m: &Mat) -> Mat {
    let factors: Vec<Mat> = (0..n)
        .map(|q| if q == qubit { m.clone() } else { identity(2) })
        .collect();
    embed(&factors)
}

fn projector(bit: usize) -> Mat {
    let (o, l) = (c(0.0, 0.0), c(1.0, 0.0));
    if bit == 0 {
        vec![vec![l, o], vec![o, o]]
    } else {
        vec![vec![o, o], vec![o, l]]
    }
}

/// `|0⟩⟨0|_c ⊗ I + |1⟩⟨1|_c ⊗ G_t`.
pub fn controlled(n: usize, control: usize, target: usize, g: &Mat) -> Mat {
    let off: Vec<Mat> = (0..n)
        .map(|q| {
            if q == control {
                projector(0)
            } else {
                identity(2)
            }
        })
        .collect();
    let on: Vec<Mat> = (0..n)
        .map(|q| {
            if q == control {
                projector(1)
            } else if q == target {
                g.clone()
            } else {
                identity(2)
            }
        })
        .collect();
    add(&embed(&off), &embed(&on))
}

pub fn cnot(n: usize, control: usize, target: usize) -> Mat {
    controlled(n, control, target, &pauli('X'))
}

pub fn cz(n: usize, control: usize, target: usize) -> Mat {
    controlled(n, control, target, &pauli('Z'))
}

/// Pauli string with `s[q]` acting on qubit `q`.
pub fn pauli_string(s: &str) -> Mat {
    let factors: Vec<Mat> = s.chars().map(pauli).collect();
    embed(&factors)
}

pub fn expectation(h: &Mat, psi: &[C]) -> C {
    let hp = matvec(h, psi);
    psi.iter().zip(&hp).map(|(a, b)| a.conj() * b).sum()
}

pub fn zero_state(n: usize) -> Vec<C> {
    let mut v = vec![c(0.0, 0.0); 1 << n];
    v[0] = c(1.0, 0.0);
    v
}

/// Deterministic normalized pseudo-random state (no RNG dependency).
pub fn scrambled_state(n: usize, salt: f64) -> Vec<C> {
    let d = 1 << n;
    let raw: Vec<C> = (0..d)
        .map(|i| {
            let t = i as f64 + salt;
            c((t * 1.618).sin() + 0.3, (t * 2.7).cos() - 0.1)
        })
        .collect();
    let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    raw.into_iter().map(|a| a / norm).collect()
}
