//! Command-line front end: `check`, `sim` and `expr`.
//!
//! Exit codes: 0 equivalent (or success), 1 not equivalent, 2 usage, input
//! or cross-check failure, 3 inconclusive.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use thiserror::Error;

use crate::circuit::{
    self, bits_to_string, check_equivalence, elaborate_unitary, parse, CheckOptions, CircuitError, CircuitIR, ElabOptions,
    ParseError, Status, Verdict,
};
use crate::linalg::{approx_eq, Complex, Tolerance};
use crate::mvbe::{format_complex, render_guard, Mvbe};
use crate::oracle::{self, OracleError};
use crate::qsym::Register;

pub const EXIT_EQUIVALENT: i32 = 0;
pub const EXIT_NOT_EQUIVALENT: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

pub const SCHEMA_ID: &str = "symqc-report/v1";

#[derive(Parser, Debug)]
#[command(name = "symqc", version, about = "Symbolic simulation and equivalence checking of quantum circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Coefficient tolerance.
    #[arg(long, global = true, default_value_t = 1e-9, allow_negative_numbers = true)]
    tolerance: f64,
    /// Also run the dense oracle (up to 10 qubits) and fail on disagreement.
    #[arg(long, global = true)]
    cross_check: bool,
    /// Quantify intermediate wires in one pass at the end.
    #[arg(long, global = true)]
    lazy_quantify: bool,
    /// Print a JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether two circuits implement the same unitary.
    Check { a: PathBuf, b: PathBuf },
    /// Run a circuit on a basis state.
    Sim {
        circuit: PathBuf,
        /// Input bits, qubit 0 first, e.g. `010`.
        #[arg(long)]
        input: String,
        /// Also print the dense amplitude vector (up to 10 qubits).
        #[arg(long)]
        amplitudes: bool,
    },
    /// Print the reduced expression of a circuit's unitary.
    Expr { circuit: PathBuf },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{}:{source}", path.display())]
    Parse { path: PathBuf, source: ParseError },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("invalid tolerance {0}")]
    Tolerance(f64),
    #[error("cross-check failed: {0}")]
    CrossCheck(String),
}

struct Settings {
    tol: Tolerance,
    cross_check: bool,
    elab: ElabOptions,
    json: bool,
}

/// Runs one command; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return if code == 0 { 0 } else { EXIT_ERROR };
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn load(path: &Path) -> Result<CircuitIR, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let tol = Tolerance::new(cli.tolerance).map_err(|_| CliError::Tolerance(cli.tolerance))?;
    let settings = Settings {
        tol,
        cross_check: cli.cross_check,
        elab: ElabOptions {
            lazy_quantify: cli.lazy_quantify,
            ..ElabOptions::default()
        },
        json: cli.json,
    };
    let started = Instant::now();
    let (code, mut report, text) = match &cli.command {
        Command::Check { a, b } => cmd_check(a, b, &settings)?,
        Command::Sim {
            circuit,
            input,
            amplitudes,
        } => cmd_sim(circuit, input, *amplitudes, &settings)?,
        Command::Expr { circuit } => cmd_expr(circuit, &settings)?,
    };
    if settings.json {
        report["stats"]["wall_time_ms"] = json!(started.elapsed().as_secs_f64() * 1e3);
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        let _ = write!(out, "{text}");
    }
    Ok(code)
}

fn complex_json(z: Complex) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn terms_json(m: &Mvbe) -> Value {
    let st = m.store();
    Value::Array(
        m.terms()
            .iter()
            .map(|t| {
                let z = t.coef.get(0, 0);
                json!({
                    "coef": complex_json(z),
                    "guard": render_guard(st, t.guard),
                })
            })
            .collect(),
    )
}

fn base_report(name: &str, files: &[&Path], input: Option<&str>, s: &Settings) -> Value {
    json!({
        "schema": SCHEMA_ID,
        "tool": { "name": "symqc", "version": env!("CARGO_PKG_VERSION") },
        "command": {
            "name": name,
            "files": files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "input": input,
            "tolerance": s.tol.eps(),
            "lazy_quantify": s.elab.lazy_quantify,
            "cross_check": s.cross_check,
        },
        "verdict": null,
        "state": null,
        "expression": null,
        "cross_check": { "performed": false, "agrees": null },
        "stats": { "term_counts": [], "node_count": 0, "wall_time_ms": 0.0 },
    })
}

fn exit_for(status: Status) -> i32 {
    match status {
        Status::Equivalent => EXIT_EQUIVALENT,
        Status::NotEquivalent => EXIT_NOT_EQUIVALENT,
        Status::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn verdict_text(v: &Verdict) -> String {
    let mut s = match v.status {
        Status::Equivalent => "equivalent\n".to_string(),
        Status::NotEquivalent => "not equivalent\n".to_string(),
        Status::Inconclusive => "inconclusive: coefficients too close to the tolerance\n".to_string(),
    };
    s += &format!("terms: {} {}\n", v.terms.0, v.terms.1);
    if let Some(w) = &v.witness {
        s += &format!(
            "witness: input {} output {}: {} vs {}\n",
            bits_to_string(&w.input),
            bits_to_string(&w.output),
            format_complex(w.left),
            format_complex(w.right)
        );
    }
    s
}

fn cmd_check(a: &Path, b: &Path, s: &Settings) -> Result<(i32, Value, String), CliError> {
    let (ca, cb) = (load(a)?, load(b)?);
    let opts = CheckOptions {
        tolerance: s.tol,
        elab: s.elab,
        ..CheckOptions::default()
    };
    let v = check_equivalence(&ca, &cb, &opts)?;
    let mut report = base_report("check", &[a, b], None, s);
    report["verdict"] = json!({
        "status": v.status.as_str(),
        "terms": [v.terms.0, v.terms.1],
        "witness": v.witness.as_ref().map(|w| json!({
            "input": bits_to_string(&w.input),
            "output": bits_to_string(&w.output),
            "left": complex_json(w.left),
            "right": complex_json(w.right),
        })),
    });
    report["stats"]["term_counts"] = json!([v.terms.0, v.terms.1]);
    report["stats"]["node_count"] = json!(v.node_count);
    if s.cross_check && ca.qubits <= oracle::MAX_QUBITS {
        let (da, db) = (oracle::dense_unitary(&ca)?, oracle::dense_unitary(&cb)?);
        let same = approx_eq(&da.matrix, &db.matrix, s.tol).expect("same qubit count");
        let agrees = match v.status {
            Status::Inconclusive => None,
            status => Some(same == (status == Status::Equivalent)),
        };
        report["cross_check"] = json!({ "performed": true, "agrees": agrees });
        if agrees == Some(false) {
            return Err(CliError::CrossCheck(format!(
                "symbolic verdict {} but dense matrices {}",
                v.status.as_str(),
                if same { "agree" } else { "differ" }
            )));
        }
    }
    Ok((exit_for(v.status), report, verdict_text(&v)))
}

fn amplitude_lines(amps: &[Complex], n: usize) -> String {
    let mut s = String::from("amplitudes:\n");
    for (i, z) in amps.iter().enumerate() {
        let bits: Vec<bool> = (0..n).map(|k| (i >> (n - 1 - k)) & 1 == 1).collect();
        s += &format!("|{}> {}\n", bits_to_string(&bits), format_complex(*z));
    }
    s
}

fn cmd_sim(path: &Path, input: &str, amplitudes: bool, s: &Settings) -> Result<(i32, Value, String), CliError> {
    let c = load(path)?;
    let bits = circuit::parse_bits(input)?;
    let state = circuit::simulate_bits(&c, &bits, s.tol)?;
    let mut report = base_report("sim", &[path], Some(input), s);
    let mut text = state.render();
    let dense = if c.qubits <= oracle::MAX_QUBITS && (amplitudes || s.cross_check) {
        Some(state.amplitudes().map_err(CircuitError::from)?)
    } else {
        None
    };
    let shown = if amplitudes { dense.as_ref() } else { None };
    if let Some(a) = shown {
        text += &amplitude_lines(a, c.qubits);
    }
    report["state"] = json!({
        "qubits": c.qubits,
        "term_count": state.term_count(),
        "terms": terms_json(state.expr()),
        "amplitudes": shown.map(|a| a.iter().map(|z| json!([z.re, z.im])).collect::<Vec<_>>()),
    });
    report["stats"]["term_counts"] = json!([state.term_count()]);
    report["stats"]["node_count"] = json!(state.register().store().node_count());
    if let (true, Some(a)) = (s.cross_check, &dense) {
        let want = oracle::dense_state(&c, &bits)?;
        let worst = a.iter().zip(&want).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        let agrees = worst <= s.tol.eps();
        report["cross_check"] = json!({ "performed": true, "agrees": agrees });
        if !agrees {
            return Err(CliError::CrossCheck(format!("amplitudes differ by {worst:e}")));
        }
    }
    Ok((0, report, text))
}

fn cmd_expr(path: &Path, s: &Settings) -> Result<(i32, Value, String), CliError> {
    let c = load(path)?;
    let reg = Register::with_tolerance(c.qubits, s.tol);
    let g = elaborate_unitary(&c, &reg, &s.elab)?;
    let mut report = base_report("expr", &[path], None, s);
    report["expression"] = json!({
        "qubits": c.qubits,
        "term_count": g.term_count(),
        "terms": terms_json(g.expr()),
    });
    report["stats"]["term_counts"] = json!([g.term_count()]);
    report["stats"]["node_count"] = json!(reg.store().node_count());
    if s.cross_check && c.qubits <= oracle::MAX_QUBITS {
        let want = oracle::dense_unitary(&c)?;
        let got = g.eval_full().map_err(CircuitError::from)?;
        let agrees = approx_eq(&got, &want.matrix, s.tol).expect("same shape");
        report["cross_check"] = json!({ "performed": true, "agrees": agrees });
        if !agrees {
            return Err(CliError::CrossCheck("dense unitary differs from the expression".into()));
        }
    }
    Ok((0, report, g.render()))
}
