#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use symqc::circuit::{CircuitIR, Gate, GateApp};

pub fn distinct(rng: &mut impl Rng, n: usize, k: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    all.truncate(k);
    all
}

pub fn random_gate(rng: &mut impl Rng, n: usize) -> (Gate, Vec<usize>) {
    let angle = rng.gen_range(0.0..std::f64::consts::TAU);
    let choices: &[Gate] = match n {
        1 => &[Gate::H, Gate::X, Gate::Y, Gate::Z, Gate::S, Gate::T, Gate::SqrtNot, Gate::RTheta(angle)],
        2 => &[Gate::H, Gate::X, Gate::Y, Gate::Z, Gate::S, Gate::T, Gate::SqrtNot, Gate::RTheta(angle), Gate::Cnot, Gate::Swap],
        _ => &[
            Gate::H,
            Gate::X,
            Gate::Y,
            Gate::Z,
            Gate::S,
            Gate::T,
            Gate::SqrtNot,
            Gate::RTheta(angle),
            Gate::Cnot,
            Gate::Swap,
            Gate::Ccx,
            Gate::Deutsch(angle),
        ],
    };
    let g = *choices.choose(rng).unwrap();
    let qs = distinct(rng, n, g.arity());
    (g, qs)
}

pub fn random_circuit(rng: &mut impl Rng, n: usize, len: usize) -> CircuitIR {
    let mut c = CircuitIR::new(n);
    for _ in 0..len {
        let (g, qs) = random_gate(rng, n);
        c.push(g, &qs);
    }
    c
}

fn app(gate: Gate, qubits: &[usize]) -> GateApp {
    GateApp {
        gate,
        qubits: qubits.to_vec(),
        line: 0,
    }
}

/// Rewrites `c` into a different gate sequence with exactly the same unitary,
/// global phase included.
pub fn equivalent_variant(rng: &mut impl Rng, c: &CircuitIR, rounds: usize) -> CircuitIR {
    let n = c.qubits;
    let mut ops = c.ops.clone();
    for _ in 0..rounds {
        let choice = rng.gen_range(0..5);
        match choice {
            // expand one gate by an identity for its kind
            0 if !ops.is_empty() => {
                let i = rng.gen_range(0..ops.len());
                let op = ops[i].clone();
                let q = &op.qubits;
                let replacement = match op.gate {
                    Gate::Swap => vec![app(Gate::Cnot, &[q[0], q[1]]), app(Gate::Cnot, &[q[1], q[0]]), app(Gate::Cnot, &[q[0], q[1]])],
                    Gate::Ccx => vec![app(Gate::Deutsch(std::f64::consts::FRAC_PI_2), &[q[1], q[0], q[2]])],
                    Gate::Deutsch(a) => vec![app(Gate::Deutsch(a), &[q[1], q[0], q[2]])],
                    Gate::X => vec![app(Gate::H, q), app(Gate::Z, q), app(Gate::H, q)],
                    Gate::Z => vec![app(Gate::S, q), app(Gate::S, q)],
                    Gate::S => vec![app(Gate::T, q), app(Gate::T, q)],
                    Gate::SqrtNot => vec![app(Gate::H, q), app(Gate::S, q), app(Gate::H, q)],
                    _ => vec![op.clone()],
                };
                ops.splice(i..=i, replacement);
            }
            // insert a self-cancelling pair
            1 => {
                let i = rng.gen_range(0..=ops.len());
                let pair = match rng.gen_range(0..4) {
                    0 => {
                        let q = rng.gen_range(0..n);
                        let g = *[Gate::H, Gate::X, Gate::Y, Gate::Z].choose(rng).unwrap();
                        vec![app(g, &[q]), app(g, &[q])]
                    }
                    1 if n >= 2 => {
                        let qs = distinct(rng, n, 2);
                        let g = *[Gate::Cnot, Gate::Swap].choose(rng).unwrap();
                        vec![app(g, &qs), app(g, &qs)]
                    }
                    2 if n >= 3 => {
                        let qs = distinct(rng, n, 3);
                        vec![app(Gate::Ccx, &qs), app(Gate::Ccx, &qs)]
                    }
                    _ => {
                        let q = rng.gen_range(0..n);
                        vec![app(Gate::SqrtNot, &[q]), app(Gate::SqrtNot, &[q]), app(Gate::X, &[q])]
                    }
                };
                ops.splice(i..i, pair);
            }
            // commute neighbours on disjoint qubits
            _ if ops.len() >= 2 => {
                let i = rng.gen_range(0..ops.len() - 1);
                if ops[i].qubits.iter().all(|q| !ops[i + 1].qubits.contains(q)) {
                    ops.swap(i, i + 1);
                }
            }
            _ => {}
        }
    }
    CircuitIR { qubits: n, ops }
}

/// A near miss: one extra T gate somewhere, or every angle nudged.
pub fn perturbed(rng: &mut impl Rng, c: &CircuitIR) -> CircuitIR {
    let mut out = c.clone();
    let angled: Vec<usize> = out.ops.iter().enumerate().filter(|(_, o)| o.gate.angle().is_some()).map(|(i, _)| i).collect();
    if angled.is_empty() || rng.gen_bool(0.5) {
        let i = rng.gen_range(0..=out.ops.len());
        let q = rng.gen_range(0..c.qubits);
        out.ops.insert(i, app(Gate::T, &[q]));
    } else {
        let i = *angled.choose(rng).unwrap();
        out.ops[i].gate = match out.ops[i].gate {
            Gate::RTheta(a) => Gate::RTheta(a + 1e-3),
            Gate::Deutsch(a) => Gate::Deutsch(a + 1e-3),
            g => g,
        };
    }
    out
}
