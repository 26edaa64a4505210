//! Circuit text format, its IR, and the symbolic elaboration and checking
//! built on top of [`crate::qsym`].
//!
//! ```text
//! # comment
//! qubits 3
//! H 0
//! CNOT 0 1
//! D(pi/2) 0 1 2
//! ```

use std::fmt;
use std::time::Instant;

use thiserror::Error;

use crate::bdd::{Assignment, VarId};
use crate::linalg::{Complex, Tolerance};
use crate::mvbe::EquivOutcome;
use crate::qsym::{self, apply, compose, GateExpr, QsymError, Reg, Register, StateExpr, Wire, INPUT_TIER, OUTPUT_TIER};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    H,
    X,
    Y,
    Z,
    S,
    T,
    SqrtNot,
    RTheta(f64),
    Cnot,
    Swap,
    Ccx,
    Deutsch(f64),
}

impl Gate {
    pub fn arity(self) -> usize {
        match self {
            Gate::Cnot | Gate::Swap => 2,
            Gate::Ccx | Gate::Deutsch(_) => 3,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Gate::H => "H",
            Gate::X => "X",
            Gate::Y => "Y",
            Gate::Z => "Z",
            Gate::S => "S",
            Gate::T => "T",
            Gate::SqrtNot => "SQRTNOT",
            Gate::RTheta(_) => "RTHETA",
            Gate::Cnot => "CNOT",
            Gate::Swap => "SWAP",
            Gate::Ccx => "CCX",
            Gate::Deutsch(_) => "D",
        }
    }

    pub fn angle(self) -> Option<f64> {
        match self {
            Gate::RTheta(a) | Gate::Deutsch(a) => Some(a),
            _ => None,
        }
    }

    fn lookup(name: &str, angle: Option<f64>) -> Option<Result<Gate, &'static str>> {
        let plain = |g: Gate| Some(if angle.is_some() { Err("takes no angle") } else { Ok(g) });
        let angled = |f: fn(f64) -> Gate| Some(angle.map(f).ok_or("needs an angle"));
        match name {
            "H" => plain(Gate::H),
            "X" => plain(Gate::X),
            "Y" => plain(Gate::Y),
            "Z" => plain(Gate::Z),
            "S" => plain(Gate::S),
            "T" => plain(Gate::T),
            "SQRTNOT" | "SX" => plain(Gate::SqrtNot),
            "CNOT" | "CX" => plain(Gate::Cnot),
            "SWAP" => plain(Gate::Swap),
            "CCX" | "TOFFOLI" => plain(Gate::Ccx),
            "RTHETA" => angled(Gate::RTheta),
            "D" => angled(Gate::Deutsch),
            _ => None,
        }
    }
}

/// One gate application. `line` is the 1-based source line, 0 for ops that
/// were built in code.
#[derive(Clone, Debug, PartialEq)]
pub struct GateApp {
    pub gate: Gate,
    pub qubits: Vec<usize>,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitIR {
    pub qubits: usize,
    pub ops: Vec<GateApp>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("missing `qubits <n>` header")]
    MissingHeader,
    #[error("duplicate `qubits` header")]
    DuplicateHeader,
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("{gate} expects {expected} qubit(s), got {found}")]
    Arity {
        gate: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("qubit index {index} out of range for {qubits} qubit(s)")]
    IndexOutOfRange { index: usize, qubits: usize },
    #[error("qubit {0} used twice in one gate")]
    DuplicateQubit(usize),
    #[error("{0}")]
    Syntax(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

fn perr(line: usize, column: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, column, kind }
}

fn syntax(line: usize, column: usize, msg: impl Into<String>) -> ParseError {
    perr(line, column, ParseErrorKind::Syntax(msg.into()))
}

/// Whitespace-separated tokens with their 1-based columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, &line[s..]));
    }
    out.into_iter()
        .map(|(byte, tok)| (line[..byte].chars().count() + 1, tok))
        .collect()
}

fn parse_angle(text: &str) -> Option<f64> {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let v = match body {
        "pi" => PI,
        "pi/2" => FRAC_PI_2,
        "pi/4" => FRAC_PI_4,
        _ => {
            let ok = !body.is_empty()
                && body
                    .chars()
                    .all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-'))
                && body.starts_with(|c: char| c.is_ascii_digit() || c == '.');
            if !ok {
                return None;
            }
            body.parse::<f64>().ok().filter(|v| v.is_finite())?
        }
    };
    Some(if neg { -v } else { v })
}

fn parse_index(line: usize, col: usize, tok: &str, what: &str) -> Result<usize, ParseError> {
    if tok.is_empty() || !tok.chars().all(|c| c.is_ascii_digit()) {
        return Err(syntax(line, col, format!("expected a {what}, found `{tok}`")));
    }
    tok.parse()
        .map_err(|_| syntax(line, col, format!("{what} `{tok}` is too large")))
}

pub fn parse(text: &str) -> Result<CircuitIR, ParseError> {
    let mut qubits: Option<usize> = None;
    let mut ops = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("");
        let toks = tokens(body);
        let Some(&(col, head)) = toks.first() else {
            continue;
        };
        if head == "qubits" {
            if qubits.is_some() {
                return Err(perr(line, col, ParseErrorKind::DuplicateHeader));
            }
            if !ops.is_empty() {
                return Err(syntax(line, col, "`qubits` header must precede every gate"));
            }
            let &[_, (ncol, ntok)] = toks.as_slice() else {
                let c = toks.get(2).map_or(col, |t| t.0);
                return Err(syntax(line, c, "expected `qubits <n>`"));
            };
            let n = parse_index(line, ncol, ntok, "qubit count")?;
            if n == 0 {
                return Err(syntax(line, ncol, "a circuit needs at least one qubit"));
            }
            qubits = Some(n);
            continue;
        }
        let (name, angle) = match head.find('(') {
            Some(open) => {
                let Some(inner) = head[open + 1..].strip_suffix(')') else {
                    return Err(syntax(line, col, format!("unterminated angle in `{head}`")));
                };
                let acol = col + head[..open + 1].chars().count();
                let a = parse_angle(inner).ok_or_else(|| syntax(line, acol, format!("invalid angle `{inner}`")))?;
                (&head[..open], Some(a))
            }
            None => (head, None),
        };
        let gate = match Gate::lookup(name, angle) {
            None => return Err(perr(line, col, ParseErrorKind::UnknownGate(name.to_string()))),
            Some(Err(msg)) => return Err(syntax(line, col, format!("{name} {msg}"))),
            Some(Ok(g)) => g,
        };
        let args = &toks[1..];
        if args.len() != gate.arity() {
            let c = args.get(gate.arity()).map_or(col, |t| t.0);
            return Err(perr(
                line,
                c,
                ParseErrorKind::Arity {
                    gate: gate.name(),
                    expected: gate.arity(),
                    found: args.len(),
                },
            ));
        }
        let mut targets = Vec::with_capacity(args.len());
        for &(c, tok) in args {
            targets.push((c, parse_index(line, c, tok, "qubit index")?));
        }
        let Some(n) = qubits else {
            return Err(perr(line, col, ParseErrorKind::MissingHeader));
        };
        for (i, &(c, q)) in targets.iter().enumerate() {
            if q >= n {
                return Err(perr(line, c, ParseErrorKind::IndexOutOfRange { index: q, qubits: n }));
            }
            if targets[..i].iter().any(|t| t.1 == q) {
                return Err(perr(line, c, ParseErrorKind::DuplicateQubit(q)));
            }
        }
        ops.push(GateApp {
            gate,
            qubits: targets.into_iter().map(|t| t.1).collect(),
            line,
        });
    }
    let qubits = qubits.ok_or(perr(1, 1, ParseErrorKind::MissingHeader))?;
    Ok(CircuitIR { qubits, ops })
}

impl CircuitIR {
    pub fn new(qubits: usize) -> CircuitIR {
        CircuitIR {
            qubits,
            ops: Vec::new(),
        }
    }

    /// Appends an op built in code (line 0). Panics on an arity mismatch.
    pub fn push(&mut self, gate: Gate, qubits: &[usize]) -> &mut Self {
        assert_eq!(gate.arity(), qubits.len(), "{} arity", gate.name());
        self.ops.push(GateApp {
            gate,
            qubits: qubits.to_vec(),
            line: 0,
        });
        self
    }

    /// Same qubit count and the same op sequence, ignoring source lines.
    pub fn same_ops(&self, other: &CircuitIR) -> bool {
        self.qubits == other.qubits
            && self.ops.len() == other.ops.len()
            && self
                .ops
                .iter()
                .zip(&other.ops)
                .all(|(a, b)| a.gate == b.gate && a.qubits == b.qubits)
    }

    /// Canonical text; angles print as the shortest decimal that reparses to
    /// the same value.
    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for CircuitIR {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.qubits)?;
        for op in &self.ops {
            match op.gate.angle() {
                Some(a) => write!(f, "{}({:?})", op.gate.name(), a)?,
                None => write!(f, "{}", op.gate.name())?,
            }
            for q in &op.qubits {
                write!(f, " {q}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("circuits act on {left} and {right} qubits")]
    QubitCountMismatch { left: usize, right: usize },
    #[error("{qubits} qubits exceed the symbolic cap of {cap}")]
    TooManyQubits { qubits: usize, cap: usize },
    #[error("input has {found} bits, circuit has {expected} qubits")]
    InputLength { expected: usize, found: usize },
    #[error("invalid input bit `{0}`")]
    InputBit(char),
    #[error("deferred quantification grew to {terms} terms (cap {cap})")]
    LazyBlowup { terms: usize, cap: usize },
    #[error(transparent)]
    Qsym(#[from] QsymError),
}

#[derive(Clone, Copy, Debug)]
pub struct ElabOptions {
    /// Defer every intermediate quantification to one final pass.
    pub lazy_quantify: bool,
    /// Term count at which the deferred product gives up.
    pub lazy_term_cap: usize,
    pub qubit_cap: usize,
}

impl Default for ElabOptions {
    fn default() -> Self {
        ElabOptions {
            lazy_quantify: false,
            lazy_term_cap: 1 << 16,
            qubit_cap: 24,
        }
    }
}

/// The library gate for one application, wired at canonical tiers.
pub fn gate_expr(reg: &Reg, app: &GateApp) -> Result<GateExpr, QsymError> {
    let q = &app.qubits;
    match app.gate {
        Gate::H => qsym::h(reg, q[0]),
        Gate::X => qsym::x(reg, q[0]),
        Gate::Y => qsym::y(reg, q[0]),
        Gate::Z => qsym::z(reg, q[0]),
        Gate::S => qsym::s(reg, q[0]),
        Gate::T => qsym::t(reg, q[0]),
        Gate::SqrtNot => qsym::sqrt_not(reg, q[0]),
        Gate::RTheta(a) => qsym::rtheta(reg, q[0], a),
        Gate::Cnot => qsym::cnot(reg, q[0], q[1]),
        Gate::Swap => qsym::swap(reg, q[0], q[1]),
        Gate::Ccx => qsym::toffoli(reg, q[0], q[1], q[2]),
        Gate::Deutsch(a) => qsym::deutsch(reg, q[0], q[1], q[2], a),
    }
}

fn check_size(c: &CircuitIR, reg: &Reg, opts: &ElabOptions) -> Result<(), CircuitError> {
    if c.qubits > opts.qubit_cap {
        return Err(CircuitError::TooManyQubits {
            qubits: c.qubits,
            cap: opts.qubit_cap,
        });
    }
    if reg.size() != c.qubits {
        return Err(CircuitError::QubitCountMismatch {
            left: reg.size(),
            right: c.qubits,
        });
    }
    Ok(())
}

/// The whole circuit as one gate from tier-0 inputs to canonical outputs over
/// every qubit of the register. Qubits no gate touches get `(q ↔ q')`.
pub fn elaborate_unitary(c: &CircuitIR, reg: &Reg, opts: &ElabOptions) -> Result<GateExpr, CircuitError> {
    check_size(c, reg, opts)?;
    let mut tier = vec![INPUT_TIER; c.qubits];
    let mut staged = Vec::with_capacity(c.ops.len());
    for app in &c.ops {
        let g = gate_expr(reg, app)?.retier(|w| (tier[w.qubit], tier[w.qubit] + 1))?;
        for &q in &app.qubits {
            tier[q] += 1;
        }
        staged.push(g);
    }
    let body = if opts.lazy_quantify {
        lazy_fold(reg, staged, &tier, opts.lazy_term_cap)?
    } else {
        let mut acc: Option<GateExpr> = None;
        for g in staged {
            acc = Some(match acc {
                None => g,
                Some(a) => compose(&a, &g)?,
            });
        }
        acc
    };
    let idle: Vec<usize> = (0..c.qubits).filter(|&q| tier[q] == INPUT_TIER).collect();
    let frame = GateExpr::identity(reg, &idle)?;
    let Some(body) = body else {
        return Ok(frame);
    };
    debug_assert!(body.qubits().iter().all(|&q| tier[q] > INPUT_TIER));
    let body = body.retier(|w| (INPUT_TIER, if w.output == tier[w.qubit] { OUTPUT_TIER } else { w.output }))?;
    Ok(qsym::tensor(&body, &frame)?)
}

/// Multiplies every staged gate first and quantifies all intermediate tiers
/// at once. Gates with the smallest support go first.
fn lazy_fold(reg: &Reg, mut staged: Vec<GateExpr>, tier: &[u32], cap: usize) -> Result<Option<GateExpr>, CircuitError> {
    if staged.is_empty() {
        return Ok(None);
    }
    // all library gates are scalar, so the product order is free
    staged.sort_by_key(|g| g.expr().support().len());
    let mut product = staged[0].expr().clone();
    for g in &staged[1..] {
        product = product.product(g.expr()).map_err(QsymError::from)?;
        if product.term_count() > cap {
            return Err(CircuitError::LazyBlowup {
                terms: product.term_count(),
                cap,
            });
        }
    }
    let mut mid: Vec<VarId> = Vec::new();
    let mut wires = Vec::new();
    for (q, &t) in tier.iter().enumerate() {
        if t == INPUT_TIER {
            continue;
        }
        mid.extend((1..t).map(|k| reg.wire(q, k)));
        wires.push(Wire {
            qubit: q,
            input: INPUT_TIER,
            output: t,
        });
    }
    let expr = product.exists(&mid);
    Ok(Some(GateExpr::from_parts(reg, expr, wires, Vec::new())?))
}

pub fn parse_bits(text: &str) -> Result<Vec<bool>, CircuitError> {
    text.chars()
        .map(|ch| match ch {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(CircuitError::InputBit(other)),
        })
        .collect()
}

/// Applies the gates one at a time to `input`.
pub fn simulate(c: &CircuitIR, input: &StateExpr) -> Result<StateExpr, CircuitError> {
    let reg = input.register().clone();
    check_size(c, &reg, &ElabOptions::default())?;
    let mut state = input.clone();
    for app in &c.ops {
        state = apply(&gate_expr(&reg, app)?, &state)?;
    }
    Ok(state)
}

/// [`simulate`] on a basis state given as bits, in a fresh register.
pub fn simulate_bits(c: &CircuitIR, bits: &[bool], tol: Tolerance) -> Result<StateExpr, CircuitError> {
    if bits.len() != c.qubits {
        return Err(CircuitError::InputLength {
            expected: c.qubits,
            found: bits.len(),
        });
    }
    let reg = Register::with_tolerance(c.qubits, tol);
    simulate(c, &StateExpr::basis(&reg, bits)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Equivalent,
    NotEquivalent,
    Inconclusive,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Equivalent => "equivalent",
            Status::NotEquivalent => "not_equivalent",
            Status::Inconclusive => "inconclusive",
        }
    }
}

/// A basis transition on which the two circuits disagree.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub input: Vec<bool>,
    pub output: Vec<bool>,
    /// `⟨output| U_a |input⟩` and the same entry of `U_b`.
    pub left: Complex,
    pub right: Complex,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Timings {
    pub elaborate_ms: f64,
    pub compare_ms: f64,
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub status: Status,
    pub terms: (usize, usize),
    pub witness: Option<Witness>,
    pub node_count: usize,
    pub timings: Timings,
}

#[derive(Clone, Copy, Debug)]
pub struct CheckOptions {
    pub tolerance: Tolerance,
    pub elab: ElabOptions,
    /// Witness search gives up beyond this many term pairs.
    pub witness_pair_cap: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            tolerance: Tolerance::DEFAULT,
            elab: ElabOptions::default(),
            witness_pair_cap: 1 << 20,
        }
    }
}

/// Elaborates both circuits over one register and compares the reduced forms.
pub fn check_equivalence(a: &CircuitIR, b: &CircuitIR, opts: &CheckOptions) -> Result<Verdict, CircuitError> {
    if a.qubits != b.qubits {
        return Err(CircuitError::QubitCountMismatch {
            left: a.qubits,
            right: b.qubits,
        });
    }
    let reg = Register::with_tolerance(a.qubits, opts.tolerance);
    let t0 = Instant::now();
    let ua = elaborate_unitary(a, &reg, &opts.elab)?;
    let ub = elaborate_unitary(b, &reg, &opts.elab)?;
    let t1 = Instant::now();
    let ra = ua.expr().to_reduced();
    let rb = ub.expr().to_reduced();
    let status = match ra.compare(&rb) {
        EquivOutcome::Equivalent => Status::Equivalent,
        EquivOutcome::NotEquivalent => Status::NotEquivalent,
        EquivOutcome::Inconclusive => Status::Inconclusive,
    };
    let mut witness = None;
    if status == Status::NotEquivalent {
        let universe: Vec<VarId> = (0..a.qubits)
            .flat_map(|q| [reg.wire(q, INPUT_TIER), reg.wire(q, OUTPUT_TIER)])
            .collect();
        if let Some(bits) = ra.first_difference(&rb, &universe, opts.witness_pair_cap) {
            let at = Assignment::from_bits(&universe, &bits);
            let value = |g: &GateExpr| -> Result<Complex, CircuitError> {
                let m = g.expr().evaluate(&at).map_err(QsymError::from)?;
                Ok(m.get(0, 0))
            };
            witness = Some(Witness {
                input: bits.iter().step_by(2).copied().collect(),
                output: bits.iter().skip(1).step_by(2).copied().collect(),
                left: value(&ua)?,
                right: value(&ub)?,
            });
        }
    }
    let t2 = Instant::now();
    Ok(Verdict {
        status,
        terms: (ra.term_count(), rb.term_count()),
        witness,
        node_count: reg.store().node_count(),
        timings: Timings {
            elaborate_ms: (t1 - t0).as_secs_f64() * 1e3,
            compare_ms: (t2 - t1).as_secs_f64() * 1e3,
        },
    })
}

/// Bits as a `0`/`1` string.
pub fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}
