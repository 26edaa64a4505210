//! Matrix-valued Boolean expressions.
//!
//! An [`Mvbe`] is a finite sum `A_1 f_1 + ... + A_l f_l` of `m x k` complex
//! coefficients guarded by Boolean functions. At an assignment it denotes the
//! (multiset) sum of the coefficients whose guards hold there, and the zero
//! matrix when none does.
//!
//! Quantification follows the matrix-valued definition
//! `∃x: F = F|x=0 + F|x=1`; a term whose guard is satisfied under both values
//! of `x` therefore contributes its coefficient twice.

mod render;
mod rewrite;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use crate::bdd::{Assignment, BddError, BoolFn, Store, VarId};
use crate::linalg::{Complex, LinalgError, Mat, Tolerance};

pub use render::{format_complex, format_mat, render_guard};
pub use rewrite::{EquivOutcome, ReducedMvbe, RegularMvbe};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MvbeError {
    #[error("an expression needs at least one term")]
    Empty,
    #[error("coefficient shape {found:?} does not match expression shape {expected:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("guards belong to a different store")]
    StoreMixing,
    #[error(transparent)]
    Bdd(#[from] BddError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// One coefficient-guard pair.
#[derive(Clone, Debug)]
pub struct Term {
    pub coef: Mat,
    pub guard: BoolFn,
}

/// A matrix-valued Boolean expression over one BDD store.
///
/// The zero function has a single representation: the empty term list.
#[derive(Clone)]
pub struct Mvbe {
    store: Store,
    rows: usize,
    cols: usize,
    terms: Vec<Term>,
    tol: Tolerance,
}

impl fmt::Debug for Mvbe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mvbe")
            .field("shape", &(self.rows, self.cols))
            .field("terms", &self.terms)
            .finish()
    }
}

impl Mvbe {
    /// Builds an expression, dropping terms with a false guard or a coefficient
    /// that is zero within tolerance.
    pub fn mk(store: &Store, terms: Vec<(Mat, BoolFn)>) -> Result<Mvbe, MvbeError> {
        Self::mk_with(store, terms, Tolerance::DEFAULT)
    }

    pub fn mk_with(store: &Store, terms: Vec<(Mat, BoolFn)>, tol: Tolerance) -> Result<Mvbe, MvbeError> {
        let (rows, cols) = terms.first().ok_or(MvbeError::Empty)?.0.shape();
        let mut out = Mvbe::zero_with(store, rows, cols, tol);
        for (coef, guard) in terms {
            if coef.shape() != (rows, cols) {
                return Err(MvbeError::DimensionMismatch {
                    expected: (rows, cols),
                    found: coef.shape(),
                });
            }
            if !store.owns(guard) {
                return Err(MvbeError::StoreMixing);
            }
            out.push(coef, guard);
        }
        Ok(out)
    }

    pub fn zero(store: &Store, rows: usize, cols: usize) -> Mvbe {
        Self::zero_with(store, rows, cols, Tolerance::DEFAULT)
    }

    pub fn zero_with(store: &Store, rows: usize, cols: usize, tol: Tolerance) -> Mvbe {
        assert!(rows > 0 && cols > 0);
        Mvbe {
            store: Rc::clone(store),
            rows,
            cols,
            terms: Vec::new(),
            tol,
        }
    }

    /// `A · 1`.
    pub fn constant(store: &Store, coef: Mat) -> Mvbe {
        let one = store.one();
        let (r, k) = coef.shape();
        let mut out = Mvbe::zero(store, r, k);
        out.push(coef, one);
        out
    }

    /// `z · guard` with a 1x1 coefficient.
    pub fn scalar(store: &Store, z: Complex, guard: BoolFn) -> Mvbe {
        let mut out = Mvbe::zero(store, 1, 1);
        out.push(Mat::scalar(z), guard);
        out
    }

    fn empty_like(&self, rows: usize, cols: usize) -> Mvbe {
        Mvbe::zero_with(&self.store, rows, cols, self.tol)
    }

    fn push(&mut self, coef: Mat, guard: BoolFn) {
        debug_assert_eq!(coef.shape(), (self.rows, self.cols));
        if guard.is_false() || coef.is_zero(self.tol) {
            return;
        }
        self.terms.push(Term { coef, guard });
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Mvbe {
        self.tol = tol;
        let terms = std::mem::take(&mut self.terms);
        for t in terms {
            self.push(t.coef, t.guard);
        }
        self
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tol
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Union of the guard supports.
    pub fn support(&self) -> BTreeSet<VarId> {
        self.terms
            .iter()
            .flat_map(|t| self.store.support(t.guard))
            .collect()
    }

    /// Union of the guard supports, sorted by decision order.
    pub fn support_ordered(&self) -> Vec<VarId> {
        let mut vs: Vec<VarId> = self.support().into_iter().collect();
        self.store.order_vars(&mut vs);
        vs
    }

    fn same_store(&self, other: &Mvbe) -> Result<(), MvbeError> {
        if Rc::ptr_eq(&self.store, &other.store) {
            Ok(())
        } else {
            Err(MvbeError::StoreMixing)
        }
    }

    fn check_shape(&self, other: &Mvbe) -> Result<(), MvbeError> {
        if self.shape() != other.shape() {
            return Err(MvbeError::DimensionMismatch {
                expected: self.shape(),
                found: other.shape(),
            });
        }
        Ok(())
    }

    /// Multiset sum of the coefficients whose guards hold under `a`.
    pub fn evaluate(&self, a: &Assignment) -> Result<Mat, MvbeError> {
        let mut acc = Mat::zeros(self.rows, self.cols);
        for t in &self.terms {
            if self.store.eval(t.guard, a)? {
                acc = acc.add(&t.coef)?;
            }
        }
        Ok(acc)
    }

    /// `Σ (A_i B_j)(f_i · g_j)`.
    pub fn product(&self, other: &Mvbe) -> Result<Mvbe, MvbeError> {
        self.same_store(other)?;
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "product",
                left: self.shape(),
                right: other.shape(),
            }
            .into());
        }
        let mut out = self.empty_like(self.rows, other.cols);
        for a in &self.terms {
            for b in &other.terms {
                let g = self.store.and(a.guard, b.guard);
                if g.is_false() {
                    continue;
                }
                out.push(a.coef.mul(&b.coef)?, g);
            }
        }
        Ok(out)
    }

    /// `Σ (A_i ⊗ B_j)(f_i · g_j)`: the product used for expressions over
    /// disjoint sets of grouped qubits.
    pub fn kron_product(&self, other: &Mvbe) -> Result<Mvbe, MvbeError> {
        self.same_store(other)?;
        let mut out = self.empty_like(self.rows * other.rows, self.cols * other.cols);
        for a in &self.terms {
            for b in &other.terms {
                let g = self.store.and(a.guard, b.guard);
                if g.is_false() {
                    continue;
                }
                out.push(a.coef.kron(&b.coef), g);
            }
        }
        Ok(out)
    }

    /// Term concatenation; denotes the pointwise sum.
    pub fn add(&self, other: &Mvbe) -> Result<Mvbe, MvbeError> {
        self.same_store(other)?;
        self.check_shape(other)?;
        let mut out = self.clone();
        for t in &other.terms {
            out.push(t.coef.clone(), t.guard);
        }
        Ok(out)
    }

    pub fn scale(&self, z: Complex) -> Mvbe {
        let mut out = self.empty_like(self.rows, self.cols);
        for t in &self.terms {
            out.push(t.coef.scale(z), t.guard);
        }
        out
    }

    /// Applies `f` to every coefficient (the guards are kept).
    pub fn map_coefs(&self, rows: usize, cols: usize, mut f: impl FnMut(&Mat) -> Mat) -> Mvbe {
        let mut out = self.empty_like(rows, cols);
        for t in &self.terms {
            out.push(f(&t.coef), t.guard);
        }
        out
    }

    /// Restricts every guard.
    pub fn cofactor(&self, v: VarId, value: bool) -> Mvbe {
        let mut out = self.empty_like(self.rows, self.cols);
        for t in &self.terms {
            out.push(t.coef.clone(), self.store.cofactor(t.guard, v, value));
        }
        out
    }

    /// `∃ vars: f`, the sum over all values of `vars`.
    ///
    /// Each guard is split by how many completions over `vars` satisfy it;
    /// the region with `w` completions carries `w · A`.
    pub fn exists(&self, vars: &[VarId]) -> Mvbe {
        let mut out = self.empty_like(self.rows, self.cols);
        for t in &self.terms {
            for (w, g) in counting_exists(&self.store, t.guard, vars) {
                let coef = if w == 1 {
                    t.coef.clone()
                } else {
                    t.coef.scale(Complex::new(w as f64, 0.0))
                };
                out.push(coef, g);
            }
        }
        out
    }

    /// `x̄ · f|x=0 + x · f|x=1`.
    pub fn shannon(&self, v: VarId) -> Result<Mvbe, MvbeError> {
        let lit1 = self.store.literal(v, true)?;
        let lit0 = self.store.literal(v, false)?;
        let mut out = self.empty_like(self.rows, self.cols);
        for (lit, value) in [(lit0, false), (lit1, true)] {
            for t in &self.terms {
                let g = self.store.and(lit, self.store.cofactor(t.guard, v, value));
                out.push(t.coef.clone(), g);
            }
        }
        Ok(out)
    }

    /// Simultaneous variable renaming on every guard.
    pub fn rename(&self, map: &HashMap<VarId, VarId>) -> Result<Mvbe, MvbeError> {
        let mut out = self.empty_like(self.rows, self.cols);
        for t in &self.terms {
            out.push(t.coef.clone(), self.store.rename(t.guard, map)?);
        }
        Ok(out)
    }

    /// Conjoins every guard with `g`.
    pub fn restrict_to(&self, g: BoolFn) -> Mvbe {
        let mut out = self.empty_like(self.rows, self.cols);
        for t in &self.terms {
            out.push(t.coef.clone(), self.store.and(t.guard, g));
        }
        out
    }

    /// Calls `visit(bits, coef)` for every satisfying point of every guard over
    /// `universe` (a rank-sorted superset of the support).
    pub fn for_each_point(&self, universe: &[VarId], mut visit: impl FnMut(&[bool], &Mat)) {
        for t in &self.terms {
            self.store
                .for_each_sat(t.guard, universe, |bits| visit(bits, &t.coef));
        }
    }

    /// Dense table of `F` over `universe`: one matrix per assignment, indexed
    /// with the first universe variable as the most significant bit.
    pub fn table(&self, universe: &[VarId]) -> Vec<Mat> {
        assert!(universe.len() < 24, "table over too many variables");
        let mut table = vec![Mat::zeros(self.rows, self.cols); 1 << universe.len()];
        self.for_each_point(universe, |bits, coef| {
            let idx = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
            table[idx] = table[idx].add(coef).expect("uniform shape");
        });
        table
    }
}

/// Splits `f` into disjoint regions keyed by the number of assignments to
/// `vars` that extend a point to a model of `f`; the result is the counting
/// analogue of `∃ vars: f`. Weights are ascending.
pub fn counting_exists(store: &Store, f: BoolFn, vars: &[VarId]) -> Vec<(u64, BoolFn)> {
    if f.is_false() {
        return Vec::new();
    }
    let mut order: Vec<VarId> = vars.to_vec();
    order.sort();
    order.dedup();
    store.order_vars(&mut order);
    let mut parts: Vec<(u64, BoolFn)> = vec![(1, f)];
    for &v in order.iter().rev() {
        let p0: Vec<(u64, BoolFn)> = parts
            .iter()
            .map(|&(w, g)| (w, store.cofactor(g, v, false)))
            .filter(|(_, g)| !g.is_false())
            .collect();
        let p1: Vec<(u64, BoolFn)> = parts
            .iter()
            .map(|&(w, g)| (w, store.cofactor(g, v, true)))
            .filter(|(_, g)| !g.is_false())
            .collect();
        if p0.len() == 1 && p1.len() == 1 && p0[0].0 == p1[0].0 {
            let (w, a) = p0[0];
            let b = p1[0].1;
            if a == b {
                parts = vec![(2 * w, a)];
                continue;
            }
            if store.and(a, b).is_false() {
                parts = vec![(w, store.or(a, b))];
                continue;
            }
        }
        let u0 = store.or_all(p0.iter().map(|p| p.1));
        let u1 = store.or_all(p1.iter().map(|p| p.1));
        let mut acc: BTreeMap<u64, BoolFn> = BTreeMap::new();
        let mut add = |w: u64, g: BoolFn| {
            if !g.is_false() {
                let e = acc.entry(w).or_insert_with(|| store.zero());
                *e = store.or(*e, g);
            }
        };
        for &(w0, a) in &p0 {
            add(w0, store.diff(a, u1));
            for &(w1, b) in &p1 {
                add(w0 + w1, store.and(a, b));
            }
        }
        for &(w1, b) in &p1 {
            add(w1, store.diff(b, u0));
        }
        parts = acc.into_iter().collect();
    }
    parts
}
