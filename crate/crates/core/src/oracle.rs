//! Brute-force dense simulation used as ground truth in tests and
//! `--cross-check`. Independent of the symbolic layers: only [`crate::linalg`]
//! and the circuit IR are shared.

use std::f64::consts::FRAC_1_SQRT_2;

use thiserror::Error;

use crate::circuit::{CircuitIR, Gate};
use crate::linalg::{c, Complex, Mat};

pub const MAX_QUBITS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("{0} qubits exceed the dense oracle cap of {MAX_QUBITS}")]
    TooLarge(usize),
    #[error("input has {found} bits, circuit has {expected} qubits")]
    InputLength { expected: usize, found: usize },
}

#[derive(Clone, Debug)]
pub struct DenseUnitary {
    pub qubits: usize,
    pub matrix: Mat,
}

/// Local matrix of a gate; the first operand is the most significant bit.
pub fn gate_matrix(g: Gate) -> Mat {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let r = c(FRAC_1_SQRT_2, 0.0);
    match g {
        Gate::H => Mat::from_rows(&[vec![r, r], vec![r, -r]]),
        Gate::X => Mat::from_rows(&[vec![z, o], vec![o, z]]),
        Gate::Y => Mat::from_rows(&[vec![z, c(0.0, -1.0)], vec![c(0.0, 1.0), z]]),
        Gate::Z => Mat::from_rows(&[vec![o, z], vec![z, -o]]),
        Gate::S => Mat::from_rows(&[vec![o, z], vec![z, c(0.0, 1.0)]]),
        Gate::T => Mat::from_rows(&[vec![o, z], vec![z, c(FRAC_1_SQRT_2, FRAC_1_SQRT_2)]]),
        Gate::SqrtNot => {
            let (p, m) = (c(0.5, 0.5), c(0.5, -0.5));
            Mat::from_rows(&[vec![p, m], vec![m, p]])
        }
        Gate::RTheta(t) => rotation(t),
        Gate::Cnot => permutation(4, |i| if i >= 2 { i ^ 1 } else { i }),
        Gate::Swap => permutation(4, |i| ((i & 1) << 1) | (i >> 1)),
        Gate::Ccx => permutation(8, |i| if i >= 6 { i ^ 1 } else { i }),
        Gate::Deutsch(t) => {
            let mut m = Mat::identity(8);
            let rot = rotation(t);
            for a in 0..2 {
                for b in 0..2 {
                    m.set(6 + a, 6 + b, rot.get(a, b));
                }
            }
            m
        }
    }
}

fn rotation(theta: f64) -> Mat {
    let (s, cs) = theta.sin_cos();
    Mat::from_rows(&[vec![c(0.0, cs), c(s, 0.0)], vec![c(s, 0.0), c(0.0, cs)]])
}

fn permutation(dim: usize, image: impl Fn(usize) -> usize) -> Mat {
    let mut m = Mat::zeros(dim, dim);
    for i in 0..dim {
        m.set(image(i), i, c(1.0, 0.0));
    }
    m
}

/// Applies `local` on `targets` to an `n`-qubit amplitude vector in place.
/// Qubit 0 is the most significant bit of the index.
fn apply_local(state: &mut [Complex], n: usize, local: &Mat, targets: &[usize]) {
    let k = targets.len();
    let masks: Vec<usize> = targets.iter().map(|&q| 1 << (n - 1 - q)).collect();
    let all: usize = masks.iter().sum();
    let dim = 1 << k;
    let offset = |sub: usize| -> usize {
        (0..k)
            .filter(|&p| (sub >> (k - 1 - p)) & 1 == 1)
            .map(|p| masks[p])
            .sum()
    };
    let offsets: Vec<usize> = (0..dim).map(offset).collect();
    let mut gathered = vec![c(0.0, 0.0); dim];
    for base in 0..state.len() {
        if base & all != 0 {
            continue;
        }
        for (s, &off) in offsets.iter().enumerate() {
            gathered[s] = state[base | off];
        }
        for (row, &off) in offsets.iter().enumerate() {
            let mut acc = c(0.0, 0.0);
            for (col, &amp) in gathered.iter().enumerate() {
                acc += local.get(row, col) * amp;
            }
            state[base | off] = acc;
        }
    }
}

fn run(c: &CircuitIR, state: &mut [Complex]) {
    for op in &c.ops {
        apply_local(state, c.qubits, &gate_matrix(op.gate), &op.qubits);
    }
}

fn check_cap(c: &CircuitIR) -> Result<(), OracleError> {
    if c.qubits > MAX_QUBITS {
        Err(OracleError::TooLarge(c.qubits))
    } else {
        Ok(())
    }
}

/// The circuit's unitary, built one column at a time.
pub fn dense_unitary(c: &CircuitIR) -> Result<DenseUnitary, OracleError> {
    check_cap(c)?;
    let dim = 1usize << c.qubits;
    let mut m = Mat::zeros(dim, dim);
    let mut column = vec![Complex::new(0.0, 0.0); dim];
    for j in 0..dim {
        column.iter_mut().for_each(|z| *z = Complex::new(0.0, 0.0));
        column[j] = Complex::new(1.0, 0.0);
        run(c, &mut column);
        for (i, &z) in column.iter().enumerate() {
            m.set(i, j, z);
        }
    }
    Ok(DenseUnitary {
        qubits: c.qubits,
        matrix: m,
    })
}

/// The circuit applied to the basis state `bits` (qubit 0 first).
pub fn dense_state(c: &CircuitIR, bits: &[bool]) -> Result<Vec<Complex>, OracleError> {
    check_cap(c)?;
    if bits.len() != c.qubits {
        return Err(OracleError::InputLength {
            expected: c.qubits,
            found: bits.len(),
        });
    }
    let index = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
    let mut state = vec![Complex::new(0.0, 0.0); 1 << c.qubits];
    state[index] = Complex::new(1.0, 0.0);
    run(c, &mut state);
    Ok(state)
}
