mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symqc::circuit::{gate_expr, CircuitIR, Gate, GateApp};
use symqc::linalg::{approx_eq, c, Complex, Mat, Tolerance};
use symqc::mvbe::EquivOutcome;
use symqc::oracle::{dense_unitary, gate_matrix};
use symqc::qsym::{
    apply, compose, controlled, gate_from_matrix, h, rtheta, sequence, tensor, x, GateExpr, Reg, Register, StateExpr,
};

fn tol() -> Tolerance {
    Tolerance::new(1e-9).unwrap()
}

fn library(rng: &mut impl Rng) -> Vec<Gate> {
    let a = rng.gen_range(0.0..std::f64::consts::TAU);
    vec![
        Gate::H,
        Gate::X,
        Gate::Y,
        Gate::Z,
        Gate::S,
        Gate::T,
        Gate::SqrtNot,
        Gate::RTheta(a),
        Gate::Cnot,
        Gate::Swap,
        Gate::Ccx,
        Gate::Deutsch(a),
    ]
}

fn random_amps(rng: &mut impl Rng, n: usize) -> Vec<Complex> {
    let v: Vec<Complex> = (0..1 << n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

fn single(n: usize, gate: Gate, qubits: &[usize]) -> CircuitIR {
    let mut circ = CircuitIR::new(n);
    circ.push(gate, qubits);
    circ
}

fn app(gate: Gate, qubits: &[usize]) -> GateApp {
    GateApp {
        gate,
        qubits: qubits.to_vec(),
        line: 0,
    }
}

fn mat_vec(m: &Mat, v: &[Complex]) -> Vec<Complex> {
    (0..m.rows()).map(|r| (0..m.cols()).map(|k| m.get(r, k) * v[k]).sum()).collect()
}

fn close_vec(a: &[Complex], b: &[Complex], eps: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= eps)
}

/// Pads `g` with identities so it acts on the whole register.
fn full(reg: &Reg, g: &GateExpr) -> GateExpr {
    let rest: Vec<usize> = (0..reg.size()).filter(|q| !g.qubits().contains(q)).collect();
    if rest.is_empty() {
        g.clone()
    } else {
        tensor(g, &GateExpr::identity(reg, &rest).unwrap()).unwrap()
    }
}

#[test]
fn application_fidelity_and_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for round in 0..100 {
        let n = 1 + round % 4;
        let amps = random_amps(&mut rng, n);
        for gate in library(&mut rng) {
            if gate.arity() > n {
                continue;
            }
            let qs = common::distinct(&mut rng, n, gate.arity());
            let reg = Register::new(n);
            let s = StateExpr::from_amplitudes(&reg, &amps).unwrap();
            let g = gate_expr(&reg, &app(gate, &qs)).unwrap();
            let out = apply(&g, &s).unwrap();
            let want = mat_vec(&dense_unitary(&single(n, gate, &qs)).unwrap().matrix, &amps);
            assert!(close_vec(&out.amplitudes().unwrap(), &want, 1e-9), "{gate:?} on {qs:?}, n={n}");
            assert!((out.norm_sqr().sqrt() - 1.0).abs() <= 1e-9);
        }
    }
}

#[test]
fn gates_match_oracle_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for gate in library(&mut rng) {
        let k = gate.arity();
        let reg = Register::new(k);
        let qs: Vec<usize> = (0..k).collect();
        let g = gate_expr(&reg, &app(gate, &qs)).unwrap();
        assert!(approx_eq(&g.eval_full().unwrap(), &gate_matrix(gate), tol()).unwrap(), "{gate:?}");
    }
}

#[test]
fn grouping_is_transparent() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..40 {
        let n = rng.gen_range(2..=4);
        let reg = Register::new(n);
        let circ = common::random_circuit(&mut rng, n, 4);
        let mut g = GateExpr::identity(&reg, &(0..n).collect::<Vec<_>>()).unwrap();
        for op in &circ.ops {
            g = sequence(&g, &full(&reg, &gate_expr(&reg, op).unwrap())).unwrap();
        }
        let dense = g.eval_full().unwrap();
        let k = rng.gen_range(0..n);
        let keep = common::distinct(&mut rng, n, k);
        let grouped = g.group(&keep).unwrap();
        assert!(approx_eq(&grouped.eval_full().unwrap(), &dense, tol()).unwrap());
        assert!(approx_eq(&grouped.ungroup().unwrap().eval_full().unwrap(), &dense, tol()).unwrap());

        let amps = random_amps(&mut rng, n);
        let s = StateExpr::from_amplitudes(&reg, &amps).unwrap();
        let sg = s.group(&keep).unwrap();
        assert!(close_vec(&sg.amplitudes().unwrap(), &amps, 1e-9));
        assert!(close_vec(&sg.ungroup().unwrap().amplitudes().unwrap(), &amps, 1e-9));
        // applying to a grouped state agrees with the flat one
        let flat = apply(&g, &s).unwrap().amplitudes().unwrap();
        let via_group = apply(&g, &sg).unwrap().amplitudes().unwrap();
        assert!(close_vec(&flat, &via_group, 1e-9));
        assert!(close_vec(&flat, &mat_vec(&dense, &amps), 1e-9));
    }
}

#[test]
fn sequence_is_associative_and_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..40 {
        let n = rng.gen_range(1..=4);
        let reg = Register::new(n);
        let circ = common::random_circuit(&mut rng, n, 3);
        let gs: Vec<GateExpr> = circ.ops.iter().map(|op| gate_expr(&reg, op).unwrap()).collect();
        let left = sequence(&sequence(&gs[0], &gs[1]).unwrap(), &gs[2]).unwrap();
        let right = sequence(&gs[0], &sequence(&gs[1], &gs[2]).unwrap()).unwrap();
        let (l, r) = (full(&reg, &left).eval_full().unwrap(), full(&reg, &right).eval_full().unwrap());
        assert!(approx_eq(&l, &r, tol()).unwrap());
        assert!(approx_eq(&l, &dense_unitary(&circ).unwrap().matrix, tol()).unwrap(), "{circ}");
    }
}

#[test]
fn explicit_tier_compose_is_associative() {
    let reg = Register::new(2);
    let a = gate_expr(&reg, &app(Gate::H, &[0])).unwrap().canonical().unwrap();
    let a = tensor(&a, &gate_expr(&reg, &app(Gate::T, &[1])).unwrap()).unwrap();
    let b = gate_expr(&reg, &app(Gate::Cnot, &[0, 1])).unwrap();
    let m = gate_expr(&reg, &app(Gate::RTheta(0.4), &[0])).unwrap();
    let m = tensor(&m, &gate_expr(&reg, &app(Gate::S, &[1])).unwrap()).unwrap();
    let at = |g: &GateExpr, i: u32| g.retier(|_| (i, i + 1)).unwrap();
    let left = compose(&compose(&at(&a, 0), &at(&b, 1)).unwrap(), &at(&m, 2)).unwrap();
    let right = compose(&at(&a, 0), &compose(&at(&b, 1), &at(&m, 2)).unwrap()).unwrap();
    assert!(approx_eq(&left.eval_full().unwrap(), &right.eval_full().unwrap(), tol()).unwrap());
    let mut circ = CircuitIR::new(2);
    circ.push(Gate::H, &[0]).push(Gate::T, &[1]).push(Gate::Cnot, &[0, 1]);
    circ.push(Gate::RTheta(0.4), &[0]).push(Gate::S, &[1]);
    assert!(approx_eq(&left.eval_full().unwrap(), &dense_unitary(&circ).unwrap().matrix, tol()).unwrap());
}

#[test]
fn dagger_is_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    for _ in 0..20 {
        let n = rng.gen_range(1..=3);
        let u = dense_unitary(&common::random_circuit(&mut rng, n, 6)).unwrap().matrix;
        let reg = Register::new(n);
        let qs: Vec<usize> = (0..n).collect();
        let g = gate_from_matrix(&reg, &u, &qs).unwrap();
        let gd = gate_from_matrix(&reg, &u.dagger(), &qs).unwrap();
        let id = sequence(&g, &gd).unwrap();
        assert!(approx_eq(&id.eval_full().unwrap(), &Mat::identity(1 << n), tol()).unwrap());
        assert_eq!(id.equiv(&GateExpr::identity(&reg, &qs).unwrap()).unwrap(), EquivOutcome::Equivalent);
    }
}

fn block_diag(n_ctrl: usize, u: &Mat) -> Mat {
    let k = u.rows();
    let dim = k << n_ctrl;
    let mut m = Mat::identity(dim);
    for r in 0..k {
        for col in 0..k {
            m.set(dim - k + r, dim - k + col, u.get(r, col));
        }
    }
    m
}

#[test]
fn controlled_is_block_diagonal() {
    let reg = Register::new(3);
    for theta in [0.0, 0.3, 1.9] {
        let inner = rtheta(&reg, 2, theta).unwrap();
        let u = inner.eval_full().unwrap();
        let one = controlled(&[1], &inner).unwrap();
        assert!(approx_eq(&one.eval_full().unwrap(), &block_diag(1, &u), tol()).unwrap());
        let two = controlled(&[0, 1], &inner).unwrap();
        assert!(approx_eq(&two.eval_full().unwrap(), &block_diag(2, &u), tol()).unwrap());
    }
    let ch = controlled(&[0], &h(&reg, 1).unwrap()).unwrap();
    assert!(approx_eq(&ch.eval_full().unwrap(), &block_diag(1, &gate_matrix(Gate::H)), tol()).unwrap());
    let cx = controlled(&[0, 1], &x(&reg, 2).unwrap()).unwrap();
    assert!(approx_eq(&cx.eval_full().unwrap(), &gate_matrix(Gate::Ccx), tol()).unwrap());
}

#[test]
fn y_convention_pin() {
    let reg = Register::new(1);
    let y = gate_from_matrix(&reg, &gate_matrix(Gate::Y), &[0]).unwrap();
    let out = apply(&y, &StateExpr::basis(&reg, &[false]).unwrap()).unwrap();
    let amps = out.amplitudes().unwrap();
    assert!((amps[1] - c(0.0, 1.0)).norm() <= 1e-12);
    assert!(amps[0].norm() <= 1e-12);
}
