//! Human-readable rendering of expressions.
//!
//! Guards are printed as a sum of products built from literals and
//! bi-implications `(a <-> b)` / `(a <-> !b)`, with Shannon splits where no
//! factor applies.

use std::fmt::Write as _;

use super::Mvbe;
use crate::bdd::{BoolFn, Store, VarId};
use crate::linalg::{Complex, Mat};

const SIG_DIGITS: usize = 8;

fn format_real(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let exp = x.abs().log10().floor() as i64;
    let decimals = (sig as i64 - 1 - exp).max(0) as usize;
    let s = format!("{:.*}", decimals, x);
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

/// Formats a complex number with 8 significant digits per component,
/// dropping a component that rounds to zero.
pub fn format_complex(z: Complex) -> String {
    const TINY: f64 = 1e-12;
    let re = if z.re.abs() < TINY { 0.0 } else { z.re };
    let im = if z.im.abs() < TINY { 0.0 } else { z.im };
    match (re == 0.0, im == 0.0) {
        (_, true) => format_real(re, SIG_DIGITS),
        (true, false) => format!("{}i", format_real(im, SIG_DIGITS)),
        (false, false) => {
            let sign = if im < 0.0 { '-' } else { '+' };
            format!(
                "({}{}{}i)",
                format_real(re, SIG_DIGITS),
                sign,
                format_real(im.abs(), SIG_DIGITS)
            )
        }
    }
}

/// Scalars print bare; larger matrices as `[a, b; c, d]`.
pub fn format_mat(m: &Mat) -> String {
    if let Some(z) = m.as_scalar() {
        return format_complex(z);
    }
    let mut out = String::from("[");
    for r in 0..m.rows() {
        if r > 0 {
            out.push_str("; ");
        }
        for k in 0..m.cols() {
            if k > 0 {
                out.push_str(", ");
            }
            out.push_str(&format_complex(m.get(r, k)));
        }
    }
    out.push(']');
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Factor {
    Lit(VarId, bool),
    /// `(a <-> b)` when the flag is true, `(a <-> !b)` otherwise.
    Iff(VarId, VarId, bool),
}

fn find_literal(st: &Store, f: BoolFn, support: &[VarId]) -> Option<(Factor, BoolFn)> {
    for &v in support {
        let f0 = st.cofactor(f, v, false);
        if f0.is_false() {
            return Some((Factor::Lit(v, true), st.cofactor(f, v, true)));
        }
        if st.cofactor(f, v, true).is_false() {
            return Some((Factor::Lit(v, false), f0));
        }
    }
    None
}

fn find_iff(st: &Store, f: BoolFn, support: &[VarId]) -> Option<(Factor, BoolFn)> {
    for (i, &v) in support.iter().enumerate() {
        let rest = st.exists(f, &[v]);
        let vf = st.var(v).expect("support variable");
        for &w in &support[i + 1..] {
            let wf = st.var(w).expect("support variable");
            for same in [true, false] {
                let rel = if same { st.iff(vf, wf) } else { st.xor(vf, wf) };
                if st.and(rel, rest) == f {
                    return Some((Factor::Iff(v, w, same), rest));
                }
            }
        }
    }
    None
}

// Above this support size only the greedy factoring is tried.
const SEARCH_LIMIT: usize = 12;

/// Products of a sum-of-products cover of `f`. Literal factors are always
/// pulled out; a bi-implication factor competes with a Shannon split on the
/// top variable and wins only with strictly fewer products.
fn products(st: &Store, f: BoolFn) -> Vec<Vec<Factor>> {
    if f.is_false() {
        return Vec::new();
    }
    if f.is_true() {
        return vec![Vec::new()];
    }
    let prepend = |factor: Factor, rest: Vec<Vec<Factor>>| -> Vec<Vec<Factor>> {
        rest.into_iter()
            .map(|mut p| {
                p.insert(0, factor.clone());
                p
            })
            .collect()
    };
    let support = st.support_ordered(f);
    if let Some((lit, rest)) = find_literal(st, f, &support) {
        return prepend(lit, products(st, rest));
    }
    let by_iff = find_iff(st, f, &support).map(|(factor, rest)| prepend(factor, products(st, rest)));
    if let Some(p) = &by_iff {
        if support.len() > SEARCH_LIMIT || p.len() == 1 {
            return by_iff.unwrap();
        }
    }
    let v = support[0];
    let mut split = prepend(Factor::Lit(v, false), products(st, st.cofactor(f, v, false)));
    split.extend(prepend(Factor::Lit(v, true), products(st, st.cofactor(f, v, true))));
    match by_iff {
        Some(p) if p.len() < split.len() => p,
        _ => split,
    }
}

fn render_factor(st: &Store, f: &Factor) -> String {
    match *f {
        Factor::Lit(v, true) => st.var_name(v),
        Factor::Lit(v, false) => format!("!{}", st.var_name(v)),
        Factor::Iff(a, b, true) => format!("({} <-> {})", st.var_name(a), st.var_name(b)),
        Factor::Iff(a, b, false) => format!("({} <-> !{})", st.var_name(a), st.var_name(b)),
    }
}

/// Sum-of-products text of a guard using the store's variable names.
pub fn render_guard(st: &Store, f: BoolFn) -> String {
    if f.is_false() {
        return "0".into();
    }
    if f.is_true() {
        return "1".into();
    }
    let out = products(st, f);
    let prods: Vec<String> = out
        .iter()
        .map(|p| {
            let parts: Vec<String> = p.iter().map(|x| render_factor(st, x)).collect();
            parts.join(" & ")
        })
        .collect();
    if prods.len() == 1 {
        let only = &prods[0];
        if out[0].len() == 1 {
            only.clone()
        } else {
            format!("({only})")
        }
    } else {
        format!("({})", prods.join(" | "))
    }
}

impl Mvbe {
    /// One line per term, `coef * guard`, in current term order. The zero
    /// expression renders as a single `0`.
    pub fn render(&self) -> String {
        if self.is_zero() {
            return "0\n".into();
        }
        let mut out = String::new();
        for t in &self.terms {
            let _ = writeln!(out, "{} * {}", format_mat(&t.coef), render_guard(&self.store, t.guard));
        }
        out
    }
}
