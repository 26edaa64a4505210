mod common;

use std::path::PathBuf;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symqc::circuit::{
    check_equivalence, elaborate_unitary, parse, simulate, CheckOptions, CircuitIR, ElabOptions, Status,
};
use symqc::linalg::{approx_eq, c, Tolerance};
use symqc::oracle::{dense_state, dense_unitary};
use symqc::qsym::{apply, Register, StateExpr};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/corpus").join(name)
}

fn valid_files() -> Vec<(String, CircuitIR)> {
    let mut out: Vec<(String, CircuitIR)> = std::fs::read_dir(corpus("valid"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "qc"))
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            let text = std::fs::read_to_string(&p).unwrap();
            let ir = parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
            (name, ir)
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

fn tol() -> Tolerance {
    Tolerance::new(1e-9).unwrap()
}

#[test]
fn corpus_unitaries_match_oracle() {
    for (name, ir) in valid_files() {
        for lazy in [false, true] {
            let reg = Register::new(ir.qubits);
            let opts = ElabOptions {
                lazy_quantify: lazy,
                ..ElabOptions::default()
            };
            let g = elaborate_unitary(&ir, &reg, &opts).unwrap();
            let want = dense_unitary(&ir).unwrap().matrix;
            assert!(approx_eq(&g.eval_full().unwrap(), &want, tol()).unwrap(), "{name} lazy={lazy}");
        }
    }
}

#[test]
fn simulate_agrees_with_elaborate_and_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..60 {
        let n = rng.gen_range(1..=5);
        let len = rng.gen_range(0..=10);
        let circ = common::random_circuit(&mut rng, n, len);
        let reg = Register::new(n);
        let bits: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let input = StateExpr::basis(&reg, &bits).unwrap();
        let sim = simulate(&circ, &input).unwrap();
        let g = elaborate_unitary(&circ, &reg, &ElabOptions::default()).unwrap();
        let via = apply(&g, &input).unwrap();
        assert!(matches!(
            sim.equiv(&via).unwrap(),
            symqc::mvbe::EquivOutcome::Equivalent
        ), "{circ}");
        let want = dense_state(&circ, &bits).unwrap();
        for (got, w) in sim.amplitudes().unwrap().iter().zip(&want) {
            assert!((got - w).norm() <= 1e-9, "{circ}");
        }
    }
}

#[test]
fn random_states_through_circuits() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let n = rng.gen_range(1..=4);
        let circ = common::random_circuit(&mut rng, n, 8);
        let reg = Register::new(n);
        let amps: Vec<_> = (0..1 << n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let norm = amps.iter().map(|z: &symqc::linalg::Complex| z.norm_sqr()).sum::<f64>().sqrt();
        let amps: Vec<_> = amps.into_iter().map(|z| z / norm).collect();
        let out = simulate(&circ, &StateExpr::from_amplitudes(&reg, &amps).unwrap()).unwrap();
        let u = dense_unitary(&circ).unwrap().matrix;
        for (r, got) in out.amplitudes().unwrap().iter().enumerate() {
            let want: symqc::linalg::Complex = (0..1 << n).map(|k| u.get(r, k) * amps[k]).sum();
            assert!((got - want).norm() <= 1e-9);
        }
    }
}

#[test]
fn equivalence_against_oracle_small() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let opts = CheckOptions {
        tolerance: Tolerance::new(1e-7).unwrap(),
        ..CheckOptions::default()
    };
    for i in 0..30 {
        let n = rng.gen_range(1..=4);
        let a = common::random_circuit(&mut rng, n, 8);
        let b = match i % 3 {
            0 => common::equivalent_variant(&mut rng, &a, 4),
            1 => common::perturbed(&mut rng, &a),
            _ => common::random_circuit(&mut rng, n, 8),
        };
        let v = check_equivalence(&a, &b, &opts).unwrap();
        let same = approx_eq(&dense_unitary(&a).unwrap().matrix, &dense_unitary(&b).unwrap().matrix, opts.tolerance)
            .unwrap();
        assert_eq!(v.status == Status::Equivalent, same, "{a}\nvs\n{b}");
        if v.status == Status::NotEquivalent {
            let w = v.witness.expect("witness below the cap");
            let idx = |bits: &[bool]| bits.iter().fold(0usize, |acc, &x| (acc << 1) | x as usize);
            let (r, k) = (idx(&w.output), idx(&w.input));
            assert!((dense_unitary(&a).unwrap().matrix.get(r, k) - w.left).norm() <= 1e-9);
            assert!((dense_unitary(&b).unwrap().matrix.get(r, k) - w.right).norm() <= 1e-9);
        }
    }
}

fn circuit_strategy() -> impl Strategy<Value = CircuitIR> {
    (1usize..=6, 0usize..=15, any::<u64>()).prop_map(|(n, len, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        common::random_circuit(&mut rng, n, len)
    })
}

proptest! {
    #[test]
    fn render_round_trip(circ in circuit_strategy()) {
        let text = circ.render();
        let back = parse(&text).unwrap();
        prop_assert!(back.same_ops(&circ));
        prop_assert_eq!(back.render(), text);
    }

    #[test]
    fn parse_is_insensitive_to_layout(circ in circuit_strategy(), pad in 1usize..4) {
        let spaced: String = circ
            .render()
            .lines()
            .map(|l| format!("{}{}   # note\n\n", " ".repeat(pad), l.split(' ').collect::<Vec<_>>().join(&"\t".repeat(pad))))
            .collect();
        let back = parse(&spaced).unwrap();
        prop_assert!(back.same_ops(&circ));
    }
}

#[test]
fn corpus_round_trips() {
    for (name, ir) in valid_files() {
        let back = parse(&ir.render()).unwrap();
        assert!(back.same_ops(&ir), "{name}");
    }
}
