//! Quantum states and gates as wired matrix-valued Boolean expressions.
//!
//! Every qubit `q` of a [`Register`] owns a column of Boolean variables, one
//! per *tier*: tier 0 is the input copy, [`OUTPUT_TIER`] the canonical output
//! copy, and the tiers in between are the intermediate copies introduced while
//! composing gates. Variable ranks are `(qubit << 32) | tier`, so all copies of
//! one qubit sit next to each other in the decision order.
//!
//! A gate's input variables carry the matrix column index and its output
//! variables the row index; [`apply`] therefore computes the usual `U|ψ⟩`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use thiserror::Error;

use crate::bdd::{BddError, BddStore, BoolFn, Store, VarId};
use crate::linalg::{Complex, LinalgError, Mat, Tolerance};
use crate::mvbe::{EquivOutcome, Mvbe, MvbeError};

mod gates;

pub use gates::{
    cnot, controlled, deutsch, gate_from_matrix, h, rtheta, s, sqrt_not, swap, t, toffoli, x, y, z,
};

pub const INPUT_TIER: u32 = 0;
pub const OUTPUT_TIER: u32 = u32::MAX;

/// Largest qubit count [`StateExpr::amplitudes`] and [`GateExpr::eval_full`]
/// will expand densely.
pub const DENSE_CAP: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QsymError {
    #[error("qubit {qubit} is outside a register of {size}")]
    QubitOutOfRange { qubit: usize, size: usize },
    #[error("qubit {0} is listed twice")]
    DuplicateQubit(usize),
    #[error("qubit {0} is used by both operands")]
    Overlap(usize),
    #[error("qubit {0} is not carried by the guards")]
    NotExplicit(usize),
    #[error("matrix is not unitary")]
    NotUnitary,
    #[error("matrix of shape {found:?} does not act on {qubits} qubits")]
    BadShape { found: (usize, usize), qubits: usize },
    #[error("expected {expected} values, got {found}")]
    BadLength { expected: usize, found: usize },
    #[error("squared norm {0} is not 1")]
    NotNormalized(f64),
    #[error("qubit {qubit} is wired at tier {found}, expected tier {expected}")]
    TierMismatch { qubit: usize, expected: u32, found: u32 },
    #[error("input tier {input} of qubit {qubit} is not below its output tier {output}")]
    TierOrder { qubit: usize, input: u32, output: u32 },
    #[error("the grouped qubit sets of the operands are incompatible")]
    Partition,
    #[error("{qubits} qubits exceed the dense expansion cap of {cap}")]
    TooLarge { qubits: usize, cap: usize },
    #[error("operands live in different registers")]
    RegisterMismatch,
    #[error(transparent)]
    Mvbe(#[from] MvbeError),
    #[error(transparent)]
    Bdd(#[from] BddError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

type Result<T> = std::result::Result<T, QsymError>;

/// Display name of a wire variable: `q1`, `q1'`, or `q1@3` for tier 3.
pub fn wire_name(qubit: usize, tier: u32) -> String {
    match tier {
        INPUT_TIER => format!("q{}", qubit + 1),
        OUTPUT_TIER => format!("q{}'", qubit + 1),
        t => format!("q{}@{}", qubit + 1, t),
    }
}

/// A fixed-size qubit register together with its BDD store and the map from
/// `(qubit, tier)` to variables. Variables are allocated on first use.
pub struct Register {
    store: Store,
    size: usize,
    tol: Tolerance,
    wires: RefCell<HashMap<(usize, u32), VarId>>,
    owners: RefCell<HashMap<VarId, (usize, u32)>>,
}

pub type Reg = Rc<Register>;

impl std::fmt::Debug for Register {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Register")
            .field("size", &self.size)
            .field("wires", &self.wires.borrow().len())
            .finish()
    }
}

impl Register {
    pub fn new(size: usize) -> Reg {
        Self::with_tolerance(size, Tolerance::DEFAULT)
    }

    pub fn with_tolerance(size: usize, tol: Tolerance) -> Reg {
        Rc::new(Register {
            store: BddStore::shared(),
            size,
            tol,
            wires: RefCell::new(HashMap::new()),
            owners: RefCell::new(HashMap::new()),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tol
    }

    pub fn check_qubit(&self, q: usize) -> Result<()> {
        if q < self.size {
            Ok(())
        } else {
            Err(QsymError::QubitOutOfRange {
                qubit: q,
                size: self.size,
            })
        }
    }

    /// Variable of `qubit` at `tier`, allocating it if needed.
    ///
    /// Panics if `qubit` is outside the register.
    pub fn wire(&self, qubit: usize, tier: u32) -> VarId {
        assert!(qubit < self.size, "qubit {qubit} outside register of {}", self.size);
        if let Some(&v) = self.wires.borrow().get(&(qubit, tier)) {
            return v;
        }
        let rank = ((qubit as u64) << 32) | tier as u64;
        let v = self
            .store
            .add_var_ranked(wire_name(qubit, tier), rank)
            .expect("wire ranks are unique per (qubit, tier)");
        self.wires.borrow_mut().insert((qubit, tier), v);
        self.owners.borrow_mut().insert(v, (qubit, tier));
        v
    }

    pub fn input(&self, qubit: usize) -> VarId {
        self.wire(qubit, INPUT_TIER)
    }

    pub fn output(&self, qubit: usize) -> VarId {
        self.wire(qubit, OUTPUT_TIER)
    }

    /// The `(qubit, tier)` a variable was allocated for.
    pub fn locate(&self, v: VarId) -> Option<(usize, u32)> {
        self.owners.borrow().get(&v).copied()
    }

    pub(crate) fn lit(&self, qubit: usize, tier: u32, value: bool) -> BoolFn {
        self.store
            .literal(self.wire(qubit, tier), value)
            .expect("wire variables exist")
    }

    /// `(a@ta <-> b@tb)`, or `(a@ta <-> !b@tb)` when `same` is false.
    pub(crate) fn link(&self, a: usize, ta: u32, b: usize, tb: u32, same: bool) -> BoolFn {
        let fa = self.lit(a, ta, true);
        let fb = self.lit(b, tb, true);
        if same {
            self.store.iff(fa, fb)
        } else {
            self.store.xor(fa, fb)
        }
    }

    fn mk(&self, terms: Vec<(Mat, BoolFn)>, rows: usize, cols: usize) -> Result<Mvbe> {
        if terms.is_empty() {
            return Ok(Mvbe::zero_with(&self.store, rows, cols, self.tol));
        }
        Ok(Mvbe::mk_with(&self.store, terms, self.tol)?)
    }
}

fn same_register(a: &Reg, b: &Reg) -> Result<()> {
    if Rc::ptr_eq(a, b) {
        Ok(())
    } else {
        Err(QsymError::RegisterMismatch)
    }
}

fn check_distinct(reg: &Register, qubits: &[usize]) -> Result<()> {
    for (i, &q) in qubits.iter().enumerate() {
        reg.check_qubit(q)?;
        if qubits[..i].contains(&q) {
            return Err(QsymError::DuplicateQubit(q));
        }
    }
    Ok(())
}

fn bit_at(index: usize, width: usize, k: usize) -> bool {
    (index >> (width - 1 - k)) & 1 == 1
}

/// Big-endian index over `order`, the first qubit being the most significant.
fn index_of(order: &[usize], mut bit: impl FnMut(usize) -> bool) -> usize {
    order.iter().fold(0, |acc, &q| (acc << 1) | bit(q) as usize)
}

fn sorted_union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Re-indexes a square (or column) matrix whose index bits follow `from` so
/// that they follow `to`, a permutation of `from`.
fn reorder(m: &Mat, from: &[usize], to: &[usize]) -> Mat {
    let width = from.len();
    let perm = |idx: usize| {
        index_of(to, |q| {
            let k = from.iter().position(|&p| p == q).expect("same qubit set");
            bit_at(idx, width, k)
        })
    };
    let mut out = Mat::zeros(m.rows(), m.cols());
    for r in 0..m.rows() {
        for k in 0..m.cols() {
            let kk = if m.cols() == 1 { 0 } else { perm(k) };
            out.set(perm(r), kk, m.get(r, k));
        }
    }
    out
}

fn reduced(m: Mvbe) -> Mvbe {
    m.to_reduced().into_inner()
}

/// A pure state of a whole register.
///
/// Qubits in `explicit` are carried by the guards, each at some tier; qubits
/// in `implicit` (register order) are folded into column-vector coefficients
/// of length `2^|implicit|`. The expression is kept in reduced form.
#[derive(Clone, Debug)]
pub struct StateExpr {
    reg: Reg,
    expr: Mvbe,
    explicit: Vec<(usize, u32)>,
    implicit: Vec<usize>,
}

impl StateExpr {
    /// `q1^{b1} ... qn^{bn}` with coefficient 1.
    pub fn basis(reg: &Reg, bits: &[bool]) -> Result<StateExpr> {
        if bits.len() != reg.size {
            return Err(QsymError::BadLength {
                expected: reg.size,
                found: bits.len(),
            });
        }
        let guard = reg
            .store
            .and_all(bits.iter().enumerate().map(|(q, &b)| reg.lit(q, INPUT_TIER, b)));
        let expr = reg.mk(vec![(Mat::scalar(Complex::new(1.0, 0.0)), guard)], 1, 1)?;
        Ok(Self::explicit_at_input(reg, expr))
    }

    /// Sum of `α_i · minterm(i)`; the input must have unit norm.
    pub fn from_amplitudes(reg: &Reg, amps: &[Complex]) -> Result<StateExpr> {
        let n = reg.size;
        let expected = 1usize.checked_shl(n as u32).unwrap_or(usize::MAX);
        if amps.len() != expected {
            return Err(QsymError::BadLength {
                expected,
                found: amps.len(),
            });
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::NonFinite.into());
        }
        let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > reg.tol.eps() {
            return Err(QsymError::NotNormalized(norm));
        }
        let vars: Vec<VarId> = (0..n).map(|q| reg.input(q)).collect();
        let mut terms = Vec::new();
        for (i, &a) in amps.iter().enumerate() {
            if a.norm() <= reg.tol.eps() {
                continue;
            }
            let lits: Vec<(VarId, bool)> = vars.iter().enumerate().map(|(k, &v)| (v, bit_at(i, n, k))).collect();
            terms.push((Mat::scalar(a), reg.store.cube(&lits)?));
        }
        let expr = reduced(reg.mk(terms, 1, 1)?);
        Ok(Self::explicit_at_input(reg, expr))
    }

    /// `1/√(2^n)` over the whole register.
    pub fn uniform(reg: &Reg) -> StateExpr {
        let amp = (0.5f64).powf(reg.size as f64 / 2.0);
        let expr = Mvbe::constant(reg.store(), Mat::scalar(Complex::new(amp, 0.0))).with_tolerance(reg.tol);
        Self::explicit_at_input(reg, expr)
    }

    fn explicit_at_input(reg: &Reg, expr: Mvbe) -> StateExpr {
        StateExpr {
            reg: Rc::clone(reg),
            expr,
            explicit: (0..reg.size).map(|q| (q, INPUT_TIER)).collect(),
            implicit: Vec::new(),
        }
    }

    pub fn register(&self) -> &Reg {
        &self.reg
    }

    pub fn expr(&self) -> &Mvbe {
        &self.expr
    }

    pub fn explicit(&self) -> &[(usize, u32)] {
        &self.explicit
    }

    pub fn implicit(&self) -> &[usize] {
        &self.implicit
    }

    pub fn term_count(&self) -> usize {
        self.expr.term_count()
    }

    pub fn tier_of(&self, qubit: usize) -> Option<u32> {
        self.explicit.iter().find(|w| w.0 == qubit).map(|w| w.1)
    }

    fn explicit_vars(&self) -> Vec<VarId> {
        self.explicit.iter().map(|&(q, t)| self.reg.wire(q, t)).collect()
    }

    pub fn render(&self) -> String {
        self.expr.render()
    }

    /// `Σ |a|²` over all basis states, computed per region of the regular form.
    pub fn norm_sqr(&self) -> f64 {
        let universe = self.explicit_vars();
        self.expr
            .terms()
            .iter()
            .map(|t| self.reg.store.sat_count(t.guard, &universe) * t.coef.norm_sqr())
            .sum()
    }

    /// Dense amplitude vector indexed big-endian in register order.
    pub fn amplitudes(&self) -> Result<Vec<Complex>> {
        let n = self.reg.size;
        if n > DENSE_CAP {
            return Err(QsymError::TooLarge {
                qubits: n,
                cap: DENSE_CAP,
            });
        }
        let order: Vec<usize> = (0..n).collect();
        let universe = self.explicit_vars();
        let k = self.implicit.len();
        let mut out = vec![Complex::new(0.0, 0.0); 1 << n];
        let mut value = vec![false; n];
        self.expr.for_each_point(&universe, |bits, coef| {
            for (&(q, _), &b) in self.explicit.iter().zip(bits) {
                value[q] = b;
            }
            for s in 0..1usize << k {
                for (j, &q) in self.implicit.iter().enumerate() {
                    value[q] = bit_at(s, k, j);
                }
                out[index_of(&order, |q| value[q])] += coef.get(s, 0);
            }
        });
        Ok(out)
    }

    /// Moves every explicit qubit outside `keep` into the vector coefficients.
    pub fn group(&self, keep: &[usize]) -> Result<StateExpr> {
        for &q in keep {
            if self.tier_of(q).is_none() {
                return Err(QsymError::NotExplicit(q));
            }
        }
        let moved: Vec<(usize, u32)> = self.explicit.iter().copied().filter(|w| !keep.contains(&w.0)).collect();
        if moved.len() > DENSE_CAP {
            return Err(QsymError::TooLarge {
                qubits: moved.len(),
                cap: DENSE_CAP,
            });
        }
        let moved_q: Vec<usize> = moved.iter().map(|w| w.0).collect();
        let implicit = sorted_union(&self.implicit, &moved_q);
        let st = &self.reg.store;
        let (old_k, new_k) = (self.implicit.len(), implicit.len());
        let mut terms = Vec::new();
        let mut value = vec![false; self.reg.size];
        for t in self.expr.terms() {
            for b in 0..1usize << moved.len() {
                let mut g = t.guard;
                for (j, &(q, tier)) in moved.iter().enumerate() {
                    let bit = bit_at(b, moved.len(), j);
                    value[q] = bit;
                    g = st.cofactor(g, self.reg.wire(q, tier), bit);
                }
                if g.is_false() {
                    continue;
                }
                let mut v = Mat::zeros(1 << new_k, 1);
                for s in 0..1usize << old_k {
                    for (j, &q) in self.implicit.iter().enumerate() {
                        value[q] = bit_at(s, old_k, j);
                    }
                    v.set(index_of(&implicit, |q| value[q]), 0, t.coef.get(s, 0));
                }
                terms.push((v, g));
            }
        }
        let expr = reduced(self.reg.mk(terms, 1 << new_k, 1)?);
        Ok(StateExpr {
            reg: Rc::clone(&self.reg),
            expr,
            explicit: self.explicit.iter().copied().filter(|w| keep.contains(&w.0)).collect(),
            implicit,
        })
    }

    /// Expands the vector coefficients back into guards, placing the released
    /// qubits at tier 0.
    pub fn ungroup(&self) -> Result<StateExpr> {
        if self.implicit.is_empty() {
            return Ok(self.clone());
        }
        let k = self.implicit.len();
        let vars: Vec<VarId> = self.implicit.iter().map(|&q| self.reg.input(q)).collect();
        let st = &self.reg.store;
        let mut terms = Vec::new();
        for t in self.expr.terms() {
            for s in 0..1usize << k {
                let a = t.coef.get(s, 0);
                if a.norm() <= self.reg.tol.eps() {
                    continue;
                }
                let lits: Vec<(VarId, bool)> = vars.iter().enumerate().map(|(j, &v)| (v, bit_at(s, k, j))).collect();
                terms.push((Mat::scalar(a), st.and(t.guard, st.cube(&lits)?)));
            }
        }
        let mut explicit = self.explicit.clone();
        explicit.extend(self.implicit.iter().map(|&q| (q, INPUT_TIER)));
        explicit.sort_unstable();
        Ok(StateExpr {
            reg: Rc::clone(&self.reg),
            expr: reduced(self.reg.mk(terms, 1, 1)?),
            explicit,
            implicit: Vec::new(),
        })
    }

    /// Equivalence of the underlying expressions; both states must use the
    /// same wiring.
    pub fn equiv(&self, other: &StateExpr) -> Result<EquivOutcome> {
        same_register(&self.reg, &other.reg)?;
        if self.explicit != other.explicit || self.implicit != other.implicit {
            return Err(QsymError::Partition);
        }
        Ok(self.expr.equiv_verdict(&other.expr)?)
    }
}

/// One explicitly carried qubit of a gate: its input and output tiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Wire {
    pub qubit: usize,
    pub input: u32,
    pub output: u32,
}

impl Wire {
    pub fn canonical(qubit: usize) -> Wire {
        Wire {
            qubit,
            input: INPUT_TIER,
            output: OUTPUT_TIER,
        }
    }
}

/// A unitary on some qubits of a register. Qubits not mentioned are left
/// untouched. Implicit qubits (register order) index the rows and columns of
/// square coefficients; explicit ones appear in the guards.
#[derive(Clone, Debug)]
pub struct GateExpr {
    reg: Reg,
    expr: Mvbe,
    wires: Vec<Wire>,
    implicit: Vec<usize>,
}

impl GateExpr {
    pub(crate) fn from_parts(reg: &Reg, expr: Mvbe, mut wires: Vec<Wire>, implicit: Vec<usize>) -> Result<GateExpr> {
        wires.sort_unstable();
        for w in &wires {
            reg.check_qubit(w.qubit)?;
            if w.input >= w.output {
                return Err(QsymError::TierOrder {
                    qubit: w.qubit,
                    input: w.input,
                    output: w.output,
                });
            }
        }
        let all: Vec<usize> = wires.iter().map(|w| w.qubit).chain(implicit.iter().copied()).collect();
        check_distinct(reg, &all)?;
        let dim = 1usize << implicit.len();
        if !expr.is_zero() && expr.shape() != (dim, dim) {
            return Err(QsymError::BadShape {
                found: expr.shape(),
                qubits: implicit.len(),
            });
        }
        Ok(GateExpr {
            reg: Rc::clone(reg),
            expr: reduced(expr),
            wires,
            implicit,
        })
    }

    /// `Π (q ↔ q')` over `qubits`; the constant 1 when `qubits` is empty.
    pub fn identity(reg: &Reg, qubits: &[usize]) -> Result<GateExpr> {
        check_distinct(reg, qubits)?;
        let guard = reg
            .store
            .and_all(qubits.iter().map(|&q| reg.link(q, INPUT_TIER, q, OUTPUT_TIER, true)));
        let expr = reg.mk(vec![(Mat::scalar(Complex::new(1.0, 0.0)), guard)], 1, 1)?;
        Self::from_parts(reg, expr, qubits.iter().map(|&q| Wire::canonical(q)).collect(), Vec::new())
    }

    pub fn register(&self) -> &Reg {
        &self.reg
    }

    pub fn expr(&self) -> &Mvbe {
        &self.expr
    }

    pub fn wires(&self) -> &[Wire] {
        &self.wires
    }

    pub fn implicit(&self) -> &[usize] {
        &self.implicit
    }

    pub fn term_count(&self) -> usize {
        self.expr.term_count()
    }

    pub fn render(&self) -> String {
        self.expr.render()
    }

    /// All qubits the gate acts on, in register order.
    pub fn qubits(&self) -> Vec<usize> {
        let explicit: Vec<usize> = self.wires.iter().map(|w| w.qubit).collect();
        sorted_union(&explicit, &self.implicit)
    }

    pub fn wire(&self, qubit: usize) -> Option<Wire> {
        self.wires.iter().copied().find(|w| w.qubit == qubit)
    }

    /// Moves every wire to the tiers chosen by `tiers(wire)`.
    pub fn retier(&self, mut tiers: impl FnMut(Wire) -> (u32, u32)) -> Result<GateExpr> {
        let mut map = HashMap::new();
        let mut wires = Vec::with_capacity(self.wires.len());
        for &w in &self.wires {
            let (input, output) = tiers(w);
            if input >= output {
                return Err(QsymError::TierOrder {
                    qubit: w.qubit,
                    input,
                    output,
                });
            }
            map.insert(self.reg.wire(w.qubit, w.input), self.reg.wire(w.qubit, input));
            map.insert(self.reg.wire(w.qubit, w.output), self.reg.wire(w.qubit, output));
            wires.push(Wire {
                qubit: w.qubit,
                input,
                output,
            });
        }
        map.retain(|a, b| a != b);
        let expr = if map.is_empty() {
            self.expr.clone()
        } else {
            self.expr.rename(&map)?
        };
        Ok(GateExpr {
            reg: Rc::clone(&self.reg),
            expr,
            wires,
            implicit: self.implicit.clone(),
        })
    }

    /// Every wire at tiers `(0, OUTPUT_TIER)`.
    pub fn canonical(&self) -> Result<GateExpr> {
        self.retier(|_| (INPUT_TIER, OUTPUT_TIER))
    }

    /// Moves every explicit qubit outside `keep` into the matrix coefficients.
    pub fn group(&self, keep: &[usize]) -> Result<GateExpr> {
        for &q in keep {
            if self.wire(q).is_none() {
                return Err(QsymError::NotExplicit(q));
            }
        }
        let moved: Vec<Wire> = self.wires.iter().copied().filter(|w| !keep.contains(&w.qubit)).collect();
        if 2 * moved.len() > DENSE_CAP {
            return Err(QsymError::TooLarge {
                qubits: moved.len(),
                cap: DENSE_CAP / 2,
            });
        }
        let moved_q: Vec<usize> = moved.iter().map(|w| w.qubit).collect();
        let implicit = sorted_union(&self.implicit, &moved_q);
        let st = &self.reg.store;
        let (old_k, new_k, m) = (self.implicit.len(), implicit.len(), moved.len());
        let mut terms = Vec::new();
        let mut row_bit = vec![false; self.reg.size];
        let mut col_bit = vec![false; self.reg.size];
        for t in self.expr.terms() {
            for out_bits in 0..1usize << m {
                for in_bits in 0..1usize << m {
                    let mut g = t.guard;
                    for (j, w) in moved.iter().enumerate() {
                        let (o, i) = (bit_at(out_bits, m, j), bit_at(in_bits, m, j));
                        row_bit[w.qubit] = o;
                        col_bit[w.qubit] = i;
                        g = st.cofactor(g, self.reg.wire(w.qubit, w.output), o);
                        g = st.cofactor(g, self.reg.wire(w.qubit, w.input), i);
                    }
                    if g.is_false() {
                        continue;
                    }
                    let mut a = Mat::zeros(1 << new_k, 1 << new_k);
                    for r in 0..1usize << old_k {
                        for c in 0..1usize << old_k {
                            for (j, &q) in self.implicit.iter().enumerate() {
                                row_bit[q] = bit_at(r, old_k, j);
                                col_bit[q] = bit_at(c, old_k, j);
                            }
                            let rr = index_of(&implicit, |q| row_bit[q]);
                            let cc = index_of(&implicit, |q| col_bit[q]);
                            a.set(rr, cc, t.coef.get(r, c));
                        }
                    }
                    terms.push((a, g));
                }
            }
        }
        let dim = 1 << new_k;
        let expr = self.reg.mk(terms, dim, dim)?;
        let wires = self.wires.iter().copied().filter(|w| keep.contains(&w.qubit)).collect();
        Self::from_parts(&self.reg, expr, wires, implicit)
    }

    /// Expands the matrix coefficients into guards, wiring each released qubit
    /// at `tiers(qubit)`.
    pub fn ungroup_with(&self, mut tiers: impl FnMut(usize) -> (u32, u32)) -> Result<GateExpr> {
        if self.implicit.is_empty() {
            return Ok(self.clone());
        }
        let k = self.implicit.len();
        let new_wires: Vec<Wire> = self
            .implicit
            .iter()
            .map(|&q| {
                let (input, output) = tiers(q);
                Wire {
                    qubit: q,
                    input,
                    output,
                }
            })
            .collect();
        let st = &self.reg.store;
        let mut terms = Vec::new();
        for t in self.expr.terms() {
            for r in 0..1usize << k {
                for c in 0..1usize << k {
                    let a = t.coef.get(r, c);
                    if a.norm() <= self.reg.tol.eps() {
                        continue;
                    }
                    let mut lits = Vec::with_capacity(2 * k);
                    for (j, w) in new_wires.iter().enumerate() {
                        lits.push((self.reg.wire(w.qubit, w.output), bit_at(r, k, j)));
                        lits.push((self.reg.wire(w.qubit, w.input), bit_at(c, k, j)));
                    }
                    terms.push((Mat::scalar(a), st.and(t.guard, st.cube(&lits)?)));
                }
            }
        }
        let mut wires = self.wires.clone();
        wires.extend(new_wires);
        Self::from_parts(&self.reg, self.reg.mk(terms, 1, 1)?, wires, Vec::new())
    }

    pub fn ungroup(&self) -> Result<GateExpr> {
        self.ungroup_with(|_| (INPUT_TIER, OUTPUT_TIER))
    }

    /// Dense matrix over [`GateExpr::qubits`], rows indexed by outputs and
    /// columns by inputs, big-endian in register order.
    pub fn eval_full(&self) -> Result<Mat> {
        let order = self.qubits();
        let n = order.len();
        if n > DENSE_CAP {
            return Err(QsymError::TooLarge {
                qubits: n,
                cap: DENSE_CAP,
            });
        }
        let universe: Vec<VarId> = self
            .wires
            .iter()
            .flat_map(|w| [self.reg.wire(w.qubit, w.input), self.reg.wire(w.qubit, w.output)])
            .collect();
        let k = self.implicit.len();
        let mut dense = Mat::zeros(1 << n, 1 << n);
        let mut row_bit = vec![false; self.reg.size];
        let mut col_bit = vec![false; self.reg.size];
        self.expr.for_each_point(&universe, |bits, coef| {
            for (j, w) in self.wires.iter().enumerate() {
                col_bit[w.qubit] = bits[2 * j];
                row_bit[w.qubit] = bits[2 * j + 1];
            }
            for r in 0..1usize << k {
                for c in 0..1usize << k {
                    for (j, &q) in self.implicit.iter().enumerate() {
                        row_bit[q] = bit_at(r, k, j);
                        col_bit[q] = bit_at(c, k, j);
                    }
                    let rr = index_of(&order, |q| row_bit[q]);
                    let cc = index_of(&order, |q| col_bit[q]);
                    dense.set(rr, cc, dense.get(rr, cc) + coef.get(r, c));
                }
            }
        });
        Ok(dense)
    }

    /// Equivalence of the underlying expressions; both gates must use the
    /// same wiring.
    pub fn equiv(&self, other: &GateExpr) -> Result<EquivOutcome> {
        same_register(&self.reg, &other.reg)?;
        if self.wires != other.wires || self.implicit != other.implicit {
            return Err(QsymError::Partition);
        }
        Ok(self.expr.equiv_verdict(&other.expr)?)
    }
}

/// How coefficients combine when two operands meet.
enum Combine {
    /// Same grouped qubits: ordinary matrix product.
    Matrix,
    /// One side is scalar and touches none of the other side's grouped qubits.
    Scale,
}

/// `∃ inputs: μ(U) · μ(ψ)`, then the output copies take over the state's
/// variable names.
pub fn apply(g: &GateExpr, s: &StateExpr) -> Result<StateExpr> {
    same_register(&g.reg, &s.reg)?;
    let combine = if g.implicit == s.implicit {
        Combine::Matrix
    } else if g.implicit.is_empty() && g.wires.iter().all(|w| !s.implicit.contains(&w.qubit)) {
        Combine::Scale
    } else {
        // regroup around an ungrouped application
        let keep: Vec<usize> = s.explicit.iter().map(|w| w.0).collect();
        let flat_s = s.ungroup()?;
        let flat_g = g.ungroup_with(|q| {
            let input = flat_s.tier_of(q).unwrap_or(INPUT_TIER);
            (input, if input == OUTPUT_TIER { INPUT_TIER } else { OUTPUT_TIER })
        })?;
        let flat = apply(&flat_g, &flat_s)?;
        return if s.implicit.is_empty() { Ok(flat) } else { flat.group(&keep) };
    };
    let mut consumed = Vec::with_capacity(g.wires.len());
    let mut rename = HashMap::new();
    for w in &g.wires {
        let tier = s.tier_of(w.qubit).ok_or(QsymError::NotExplicit(w.qubit))?;
        if tier != w.input {
            return Err(QsymError::TierMismatch {
                qubit: w.qubit,
                expected: tier,
                found: w.input,
            });
        }
        let input = g.reg.wire(w.qubit, w.input);
        consumed.push(input);
        rename.insert(g.reg.wire(w.qubit, w.output), input);
    }
    let prod = match combine {
        Combine::Matrix => g.expr.product(&s.expr)?,
        Combine::Scale => g.expr.kron_product(&s.expr)?,
    };
    let expr = prod.exists(&consumed).rename(&rename)?;
    Ok(StateExpr {
        reg: Rc::clone(&s.reg),
        expr: reduced(expr),
        explicit: s.explicit.clone(),
        implicit: s.implicit.clone(),
    })
}

/// `U ⊗ V ≡ μ(U) · μ(V)` for gates on disjoint qubits.
pub fn tensor(a: &GateExpr, b: &GateExpr) -> Result<GateExpr> {
    same_register(&a.reg, &b.reg)?;
    let qa = a.qubits();
    if let Some(&q) = b.qubits().iter().find(|q| qa.contains(q)) {
        return Err(QsymError::Overlap(q));
    }
    let mut wires = a.wires.clone();
    wires.extend(b.wires.iter().copied());
    if a.implicit.is_empty() && b.implicit.is_empty() {
        return GateExpr::from_parts(&a.reg, a.expr.product(&b.expr)?, wires, Vec::new());
    }
    let from: Vec<usize> = a.implicit.iter().chain(&b.implicit).copied().collect();
    let implicit = sorted_union(&a.implicit, &b.implicit);
    let dim = 1 << implicit.len();
    let expr = a
        .expr
        .kron_product(&b.expr)?
        .map_coefs(dim, dim, |m| reorder(m, &from, &implicit));
    GateExpr::from_parts(&a.reg, expr, wires, implicit)
}

/// `then ∘ first`: `∃ mid: μ(then) · μ(first)` where `mid` are the output
/// copies of `first` that `then` reads. Qubits touched by only one side keep
/// their own tiers.
pub fn compose(first: &GateExpr, then: &GateExpr) -> Result<GateExpr> {
    compose_inner(first, then, true)
}

pub(crate) fn compose_inner(first: &GateExpr, then: &GateExpr, quantify: bool) -> Result<GateExpr> {
    same_register(&first.reg, &then.reg)?;
    let combine = partition_rule(first, then)?;
    let mut mid = Vec::new();
    let mut wires = Vec::new();
    for w in &first.wires {
        match then.wire(w.qubit) {
            Some(v) => {
                if v.input != w.output {
                    return Err(QsymError::TierMismatch {
                        qubit: w.qubit,
                        expected: w.output,
                        found: v.input,
                    });
                }
                mid.push(first.reg.wire(w.qubit, w.output));
                wires.push(Wire {
                    qubit: w.qubit,
                    input: w.input,
                    output: v.output,
                });
            }
            None => wires.push(*w),
        }
    }
    wires.extend(then.wires.iter().copied().filter(|v| first.wire(v.qubit).is_none()));
    let prod = match combine {
        Combine::Matrix => then.expr.product(&first.expr)?,
        Combine::Scale => then.expr.kron_product(&first.expr)?,
    };
    let implicit = if first.implicit.is_empty() {
        then.implicit.clone()
    } else {
        first.implicit.clone()
    };
    if !quantify {
        // caller quantifies `mid` later; keep the raw product
        let mut wires = wires;
        wires.sort_unstable();
        return Ok(GateExpr {
            reg: Rc::clone(&first.reg),
            expr: prod,
            wires,
            implicit,
        });
    }
    GateExpr::from_parts(&first.reg, prod.exists(&mid), wires, implicit)
}

fn partition_rule(a: &GateExpr, b: &GateExpr) -> Result<Combine> {
    if a.implicit == b.implicit {
        return Ok(Combine::Matrix);
    }
    let disjoint = |scalar: &GateExpr, other: &GateExpr| {
        scalar.implicit.is_empty() && scalar.wires.iter().all(|w| !other.implicit.contains(&w.qubit))
    };
    if disjoint(a, b) || disjoint(b, a) {
        Ok(Combine::Scale)
    } else {
        Err(QsymError::Partition)
    }
}

/// [`compose`] after moving `then` onto fresh tiers right after `first`: on a
/// shared qubit `then` reads `first`'s output and writes the next free tier.
/// The result is returned with canonical tiers.
pub fn sequence(first: &GateExpr, then: &GateExpr) -> Result<GateExpr> {
    let a = first.retier(|_| (INPUT_TIER, 1))?;
    let b = then.retier(|w| match a.wire(w.qubit) {
        Some(_) => (1, 2),
        None => (INPUT_TIER, 2),
    })?;
    compose(&a, &b)?.canonical()
}
