//! Gate library. Gates with a short logical description are written down
//! directly from it; the rest go through [`gate_from_matrix`].

use std::f64::consts::FRAC_1_SQRT_2;

use super::{check_distinct, GateExpr, QsymError, Reg, Result, Wire, INPUT_TIER, OUTPUT_TIER};
use crate::bdd::VarId;
use crate::linalg::{c, is_unitary, Complex, Mat};

fn one() -> Mat {
    Mat::scalar(c(1.0, 0.0))
}

fn canonical_wires(qubits: &[usize]) -> Vec<Wire> {
    qubits.iter().map(|&q| Wire::canonical(q)).collect()
}

/// `Σ U[i][j] · out(i) · in(j)` where `qubits[0]` is the most significant bit
/// of both indices.
pub fn gate_from_matrix(reg: &Reg, u: &Mat, qubits: &[usize]) -> Result<GateExpr> {
    check_distinct(reg, qubits)?;
    let k = qubits.len();
    let dim = 1usize << k;
    if u.shape() != (dim, dim) {
        return Err(QsymError::BadShape {
            found: u.shape(),
            qubits: k,
        });
    }
    if !is_unitary(u, reg.tolerance())? {
        return Err(QsymError::NotUnitary);
    }
    let outs: Vec<VarId> = qubits.iter().map(|&q| reg.output(q)).collect();
    let ins: Vec<VarId> = qubits.iter().map(|&q| reg.input(q)).collect();
    let mut terms = Vec::new();
    for i in 0..dim {
        for j in 0..dim {
            let a = u.get(i, j);
            if a.norm() <= reg.tolerance().eps() {
                continue;
            }
            let mut lits = Vec::with_capacity(2 * k);
            for p in 0..k {
                lits.push((outs[p], super::bit_at(i, k, p)));
                lits.push((ins[p], super::bit_at(j, k, p)));
            }
            terms.push((Mat::scalar(a), reg.store().cube(&lits)?));
        }
    }
    GateExpr::from_parts(reg, reg.mk(terms, 1, 1)?, canonical_wires(qubits), Vec::new())
}

fn from_terms(reg: &Reg, terms: Vec<(Mat, crate::bdd::BoolFn)>, qubits: &[usize]) -> Result<GateExpr> {
    check_distinct(reg, qubits)?;
    GateExpr::from_parts(reg, reg.mk(terms, 1, 1)?, canonical_wires(qubits), Vec::new())
}

/// `1/√2 · [(q̄ + q̄') − q q']`.
pub fn h(reg: &Reg, q: usize) -> Result<GateExpr> {
    reg.check_qubit(q)?;
    let st = reg.store();
    let either_zero = st.or(reg.lit(q, INPUT_TIER, false), reg.lit(q, OUTPUT_TIER, false));
    let both_one = st.and(reg.lit(q, INPUT_TIER, true), reg.lit(q, OUTPUT_TIER, true));
    from_terms(
        reg,
        vec![
            (Mat::scalar(c(FRAC_1_SQRT_2, 0.0)), either_zero),
            (Mat::scalar(c(-FRAC_1_SQRT_2, 0.0)), both_one),
        ],
        &[q],
    )
}

/// `(q ↔ q̄')`.
pub fn x(reg: &Reg, q: usize) -> Result<GateExpr> {
    reg.check_qubit(q)?;
    from_terms(reg, vec![(one(), reg.link(q, INPUT_TIER, q, OUTPUT_TIER, false))], &[q])
}

fn single(reg: &Reg, q: usize, rows: [[Complex; 2]; 2]) -> Result<GateExpr> {
    let m = Mat::from_rows(&[rows[0].to_vec(), rows[1].to_vec()]);
    gate_from_matrix(reg, &m, &[q])
}

pub fn y(reg: &Reg, q: usize) -> Result<GateExpr> {
    single(reg, q, [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]])
}

pub fn z(reg: &Reg, q: usize) -> Result<GateExpr> {
    single(reg, q, [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]])
}

pub fn s(reg: &Reg, q: usize) -> Result<GateExpr> {
    single(reg, q, [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 1.0)]])
}

pub fn t(reg: &Reg, q: usize) -> Result<GateExpr> {
    let w = c(FRAC_1_SQRT_2, FRAC_1_SQRT_2);
    single(reg, q, [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), w]])
}

/// `R_θ = [[i cos θ, sin θ], [sin θ, i cos θ]]`.
pub fn rtheta(reg: &Reg, q: usize, theta: f64) -> Result<GateExpr> {
    let (sn, cs) = theta.sin_cos();
    single(reg, q, [[c(0.0, cs), c(sn, 0.0)], [c(sn, 0.0), c(0.0, cs)]])
}

/// `(1+i)/2 · (q ↔ q') + (1−i)/2 · (q ↔ q̄')`.
pub fn sqrt_not(reg: &Reg, q: usize) -> Result<GateExpr> {
    reg.check_qubit(q)?;
    from_terms(
        reg,
        vec![
            (Mat::scalar(c(0.5, 0.5)), reg.link(q, INPUT_TIER, q, OUTPUT_TIER, true)),
            (Mat::scalar(c(0.5, -0.5)), reg.link(q, INPUT_TIER, q, OUTPUT_TIER, false)),
        ],
        &[q],
    )
}

/// `q̄c q̄c' (t ↔ t') + qc qc' (t ↔ t̄')`.
pub fn cnot(reg: &Reg, control: usize, target: usize) -> Result<GateExpr> {
    check_distinct(reg, &[control, target])?;
    let st = reg.store();
    let off = st.and_all([
        reg.lit(control, INPUT_TIER, false),
        reg.lit(control, OUTPUT_TIER, false),
        reg.link(target, INPUT_TIER, target, OUTPUT_TIER, true),
    ]);
    let on = st.and_all([
        reg.lit(control, INPUT_TIER, true),
        reg.lit(control, OUTPUT_TIER, true),
        reg.link(target, INPUT_TIER, target, OUTPUT_TIER, false),
    ]);
    from_terms(reg, vec![(one(), off), (one(), on)], &[control, target])
}

/// `(a ↔ b')(b ↔ a')`.
pub fn swap(reg: &Reg, a: usize, b: usize) -> Result<GateExpr> {
    check_distinct(reg, &[a, b])?;
    let g = reg.store().and(
        reg.link(a, INPUT_TIER, b, OUTPUT_TIER, true),
        reg.link(b, INPUT_TIER, a, OUTPUT_TIER, true),
    );
    from_terms(reg, vec![(one(), g)], &[a, b])
}

pub fn toffoli(reg: &Reg, a: usize, b: usize, target: usize) -> Result<GateExpr> {
    let mut m = Mat::identity(8);
    m.set(6, 6, c(0.0, 0.0));
    m.set(7, 7, c(0.0, 0.0));
    m.set(6, 7, c(1.0, 0.0));
    m.set(7, 6, c(1.0, 0.0));
    gate_from_matrix(reg, &m, &[a, b, target])
}

/// `[a b (i cos θ (t ↔ t') + sin θ (t ↔ t̄')) + (ā + b̄)(t ↔ t')] (a ↔ a')(b ↔ b')`.
pub fn deutsch(reg: &Reg, a: usize, b: usize, target: usize, theta: f64) -> Result<GateExpr> {
    check_distinct(reg, &[a, b, target])?;
    let st = reg.store();
    let (sn, cs) = theta.sin_cos();
    let both = st.and(reg.lit(a, INPUT_TIER, true), reg.lit(b, INPUT_TIER, true));
    let keep = reg.link(target, INPUT_TIER, target, OUTPUT_TIER, true);
    let flip = reg.link(target, INPUT_TIER, target, OUTPUT_TIER, false);
    let frame = st.and(
        reg.link(a, INPUT_TIER, a, OUTPUT_TIER, true),
        reg.link(b, INPUT_TIER, b, OUTPUT_TIER, true),
    );
    let terms = vec![
        (Mat::scalar(c(0.0, cs)), st.and_all([both, keep, frame])),
        (Mat::scalar(c(sn, 0.0)), st.and_all([both, flip, frame])),
        (one(), st.and_all([st.not(both), keep, frame])),
    ];
    from_terms(reg, terms, &[a, b, target])
}

/// `C^n(U)`: `[(Σ q̄_i) Π (p_j ↔ p_j') + Π q_i · μ(U)] · Π (q_i ↔ q_i')`.
///
/// The control qubits are wired at canonical tiers; `inner` keeps its own
/// wiring and grouping.
pub fn controlled(controls: &[usize], inner: &GateExpr) -> Result<GateExpr> {
    let reg = inner.register();
    check_distinct(reg, controls)?;
    if let Some(&q) = controls.iter().find(|q| inner.qubits().contains(q)) {
        return Err(QsymError::Overlap(q));
    }
    let st = reg.store();
    let all_on = st.and_all(controls.iter().map(|&q| reg.lit(q, INPUT_TIER, true)));
    let frame = st.and_all(
        controls
            .iter()
            .map(|&q| reg.link(q, INPUT_TIER, q, OUTPUT_TIER, true)),
    );
    let idle = st.and_all(
        inner
            .wires()
            .iter()
            .map(|w| reg.link(w.qubit, w.input, w.qubit, w.output, true)),
    );
    let dim = 1usize << inner.implicit().len();
    let mut terms = vec![(Mat::identity(dim), st.and_all([st.not(all_on), idle, frame]))];
    for term in inner.expr().terms() {
        terms.push((term.coef.clone(), st.and_all([term.guard, all_on, frame])));
    }
    let mut wires = inner.wires().to_vec();
    wires.extend(canonical_wires(controls));
    GateExpr::from_parts(reg, reg.mk(terms, dim, dim)?, wires, inner.implicit().to_vec())
}
