//! Regular and reduced normal forms, and equivalence on top of them.

use std::collections::HashMap;
use std::ops::Deref;

use super::{Mvbe, MvbeError, Term};
use crate::bdd::{BoolFn, VarId};
use crate::linalg::{cluster, Mat, Tolerance};

/// An expression whose coefficients are non-zero and whose guards are
/// pairwise contradictory.
#[derive(Clone, Debug)]
pub struct RegularMvbe(Mvbe);

/// A regular expression whose coefficients are pairwise distinct (outside
/// tolerance). Terms are sorted by the smallest satisfying assignment of their
/// guard, so the term order is canonical.
#[derive(Clone, Debug)]
pub struct ReducedMvbe(Mvbe);

impl Deref for RegularMvbe {
    type Target = Mvbe;
    fn deref(&self) -> &Mvbe {
        &self.0
    }
}

impl Deref for ReducedMvbe {
    type Target = Mvbe;
    fn deref(&self) -> &Mvbe {
        &self.0
    }
}

impl RegularMvbe {
    pub fn into_inner(self) -> Mvbe {
        self.0
    }
}

impl ReducedMvbe {
    pub fn into_inner(self) -> Mvbe {
        self.0
    }

    pub fn as_mvbe(&self) -> &Mvbe {
        &self.0
    }
}

/// Outcome of comparing two expressions through their reduced forms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EquivOutcome {
    Equivalent,
    NotEquivalent,
    /// Some pair of coefficients sits between `eps/10` and `10·eps` apart, so
    /// the clustering cannot tell with confidence whether they are equal.
    Inconclusive,
}

impl Mvbe {
    /// Whether every coefficient is non-zero and the guards are pairwise
    /// contradictory.
    pub fn is_regular(&self) -> bool {
        let st = &self.store;
        self.terms.iter().all(|t| !t.coef.is_zero(self.tol) && !t.guard.is_false())
            && self.terms.iter().enumerate().all(|(i, a)| {
                self.terms[i + 1..]
                    .iter()
                    .all(|b| st.and(a.guard, b.guard).is_false())
            })
    }

    /// Regular with pairwise distinct coefficients.
    pub fn is_reduced(&self) -> bool {
        if !self.is_regular() {
            return false;
        }
        let mats: Vec<&Mat> = self.terms.iter().map(|t| &t.coef).collect();
        let labels = cluster(&mats, self.tol);
        let mut seen = std::collections::HashSet::new();
        labels.into_iter().all(|l| seen.insert(l))
    }

    /// Rewrites into a regular expression by folding terms from the back:
    /// with `rest = Σ_{i≥2} A_i f_i` already regular,
    /// `A_1 f_1 + rest ⇒ A_1 f_1 Π_{i≥2} ¬f_i + Σ_{i≥2} [A_i ¬f_1 f_i + (A_1 + A_i) f_1 f_i]`.
    pub fn regularise(&self) -> RegularMvbe {
        let st = &self.store;
        let tol = self.tol;
        let mut rest: Vec<Term> = Vec::new();
        // exact disjunction of the guards in `rest`
        let mut union = st.zero();
        for t in self.terms.iter().rev() {
            if t.guard.is_false() || t.coef.is_zero(tol) {
                continue;
            }
            let f1 = t.guard;
            if st.and(f1, union).is_false() {
                union = st.or(union, f1);
                rest.push(t.clone());
                continue;
            }
            let mut next = Vec::with_capacity(rest.len() + 2);
            let alone = st.diff(f1, union);
            let mut vanished = st.zero();
            for r in rest.drain(..) {
                let both = st.and(f1, r.guard);
                if both.is_false() {
                    next.push(r);
                    continue;
                }
                let only = st.diff(r.guard, f1);
                if !only.is_false() {
                    next.push(Term {
                        coef: r.coef.clone(),
                        guard: only,
                    });
                }
                let sum = t.coef.add(&r.coef).expect("uniform shape");
                if sum.is_zero(tol) {
                    vanished = st.or(vanished, both);
                } else {
                    next.push(Term {
                        coef: sum,
                        guard: both,
                    });
                }
            }
            if !alone.is_false() {
                next.push(Term {
                    coef: t.coef.clone(),
                    guard: alone,
                });
            }
            union = st.diff(st.or(union, f1), vanished);
            rest = next;
        }
        // keep the caller-visible order front-to-back
        rest.reverse();
        RegularMvbe(Mvbe {
            store: self.store.clone(),
            rows: self.rows,
            cols: self.cols,
            terms: rest,
            tol,
        })
    }

    /// Regularise then reduce.
    pub fn to_reduced(&self) -> ReducedMvbe {
        self.regularise().reduce()
    }

    /// Evaluates the reduced forms of both sides and compares them term by term.
    pub fn equiv(&self, other: &Mvbe) -> Result<bool, MvbeError> {
        Ok(self.equiv_verdict(other)? == EquivOutcome::Equivalent)
    }

    /// Like [`Mvbe::equiv`] but reports borderline coefficient spacing.
    pub fn equiv_verdict(&self, other: &Mvbe) -> Result<EquivOutcome, MvbeError> {
        self.same_store(other)?;
        self.check_shape(other)?;
        let a = self.to_reduced();
        let b = other.to_reduced();
        Ok(a.compare(&b))
    }
}

impl RegularMvbe {
    /// Merges terms whose coefficients cluster together, or-ing their guards.
    pub fn reduce(self) -> ReducedMvbe {
        let m = self.0;
        let st = m.store.clone();
        let mats: Vec<&Mat> = m.terms.iter().map(|t| &t.coef).collect();
        let labels = cluster(&mats, m.tol);
        let groups = labels.iter().copied().max().map_or(0, |x| x + 1);
        let mut merged: Vec<Option<Term>> = vec![None; groups];
        for (t, &l) in m.terms.iter().zip(&labels) {
            match &mut merged[l] {
                Some(acc) => acc.guard = st.or(acc.guard, t.guard),
                slot @ None => *slot = Some(t.clone()),
            }
        }
        let terms: Vec<Term> = merged.into_iter().flatten().collect();
        ReducedMvbe(Mvbe { terms, ..m }.sorted_by_min_sat())
    }
}

impl Mvbe {
    /// Sorts terms by the lexicographically smallest satisfying assignment of
    /// their guards over the joint support.
    fn sorted_by_min_sat(mut self) -> Mvbe {
        let universe = self.support_ordered();
        let st = self.store.clone();
        let mut keyed: Vec<(Vec<bool>, Term)> = self
            .terms
            .drain(..)
            .map(|t| (st.min_sat(t.guard, &universe).unwrap_or_default(), t))
            .collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        self.terms = keyed.into_iter().map(|(_, t)| t).collect();
        self
    }
}

impl ReducedMvbe {
    /// Equality of two reduced forms: same term count and a pairing of
    /// identical guards with approximately equal coefficients.
    pub fn compare(&self, other: &ReducedMvbe) -> EquivOutcome {
        let tol = self.tol;
        if borderline_spacing(
            self.terms.iter().chain(other.terms.iter()).map(|t| &t.coef),
            tol,
        ) {
            return EquivOutcome::Inconclusive;
        }
        if self.terms.len() != other.terms.len() {
            return EquivOutcome::NotEquivalent;
        }
        let by_guard: HashMap<BoolFn, &Mat> = other.terms.iter().map(|t| (t.guard, &t.coef)).collect();
        let all = self.terms.iter().all(|t| {
            by_guard
                .get(&t.guard)
                .is_some_and(|c| t.coef.max_diff(c).is_ok_and(|d| d <= tol.eps()))
        });
        if all {
            EquivOutcome::Equivalent
        } else {
            EquivOutcome::NotEquivalent
        }
    }

    /// Smallest assignment over `universe` (rank-sorted, covering both
    /// supports) at which the two expressions differ, or `None` if they agree
    /// everywhere or more than `pair_cap` term pairs would need inspecting.
    pub fn first_difference(&self, other: &ReducedMvbe, universe: &[VarId], pair_cap: usize) -> Option<Vec<bool>> {
        let st = &self.store;
        let tol = self.tol;
        if self.terms.len().saturating_mul(other.terms.len()) > pair_cap {
            return None;
        }
        let ua = st.or_all(self.terms.iter().map(|t| t.guard));
        let ub = st.or_all(other.terms.iter().map(|t| t.guard));
        let mut best: Option<Vec<bool>> = None;
        let mut consider = |g: BoolFn| {
            if let Some(bits) = st.min_sat(g, universe) {
                if best.as_ref().is_none_or(|b| bits < *b) {
                    best = Some(bits);
                }
            }
        };
        for a in &self.terms {
            consider(st.diff(a.guard, ub));
            for b in &other.terms {
                let close = a.coef.max_diff(&b.coef).is_ok_and(|d| d <= tol.eps());
                if !close {
                    consider(st.and(a.guard, b.guard));
                }
            }
        }
        for b in &other.terms {
            consider(st.diff(b.guard, ua));
        }
        best
    }
}

/// True when some pair of coefficients is farther apart than `eps/10` but not
/// farther than `10·eps` (entrywise max norm).
pub(crate) fn borderline_spacing<'a>(coefs: impl Iterator<Item = &'a Mat>, tol: Tolerance) -> bool {
    let eps = tol.eps();
    if eps == 0.0 {
        return false;
    }
    let mats: Vec<&Mat> = coefs.collect();
    // projection with fixed incommensurate weights; two matrices within
    // 10·eps differ by at most 2·len·10·eps in projection
    let proj = |m: &Mat| -> f64 {
        m.entries()
            .iter()
            .enumerate()
            .map(|(i, z)| {
                let w = 0.5 + ((i as f64 + 1.0) * 0.618_033_988_749_895).fract() * 0.5;
                w * z.re + (1.0 - w / 2.0) * z.im
            })
            .sum()
    };
    let mut order: Vec<(f64, &Mat)> = mats.iter().map(|m| (proj(m), *m)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (i, (p, m)) in order.iter().enumerate() {
        let reach = 2.0 * m.entries().len() as f64 * 10.0 * eps;
        for (q, n) in &order[i + 1..] {
            if q - p > reach {
                break;
            }
            if m.shape() != n.shape() {
                continue;
            }
            let d = m.max_diff(n).expect("same shape");
            if d > eps / 10.0 && d <= 10.0 * eps {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bdd::{BddStore, Store};
    use crate::linalg::c;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn s(z: f64) -> Mat {
        Mat::scalar(c(z, 0.0))
    }

    fn setup(n: usize) -> (Store, Vec<VarId>, Vec<BoolFn>) {
        let st = BddStore::shared();
        let vs: Vec<VarId> = (0..n).map(|i| st.add_var(format!("x{i}"))).collect();
        let fs = vs.iter().map(|&v| st.var(v).unwrap()).collect();
        (st, vs, fs)
    }

    #[test]
    fn full_overlap_sums() {
        let (st, _, x) = setup(1);
        let f = Mvbe::mk(&st, vec![(s(0.25), x[0]), (s(0.5), x[0])]).unwrap();
        let r = f.regularise();
        assert_eq!(r.term_count(), 1);
        assert_eq!(r.terms()[0].coef, s(0.75));
        assert_eq!(r.terms()[0].guard, x[0]);
        // cancellation leaves the zero function
        let g = Mvbe::mk(&st, vec![(s(0.5), x[0]), (s(-0.5), x[0])]).unwrap();
        assert!(g.to_reduced().is_zero());
    }

    #[test]
    fn hadamard_logical_form_is_already_regular() {
        let (st, _, x) = setup(2);
        let pos = st.or(st.not(x[0]), st.not(x[1]));
        let neg = st.and(x[0], x[1]);
        let h = Mvbe::mk(&st, vec![(s(FRAC_1_SQRT_2), pos), (s(-FRAC_1_SQRT_2), neg)]).unwrap();
        let r = h.regularise();
        assert_eq!(r.term_count(), 2);
        let guards: Vec<BoolFn> = r.terms().iter().map(|t| t.guard).collect();
        assert!(guards.contains(&pos) && guards.contains(&neg));
        assert!(r.is_regular());
    }

    #[test]
    fn hadamard_matrix_form_reduces_to_two_terms() {
        let (st, v, _) = setup(2);
        let a = FRAC_1_SQRT_2;
        let mut terms = Vec::new();
        for (i, j, val) in [(false, false, a), (false, true, a), (true, false, a), (true, true, -a)] {
            terms.push((s(val), st.cube(&[(v[0], i), (v[1], j)]).unwrap()));
        }
        let r = Mvbe::mk(&st, terms).unwrap().to_reduced();
        assert_eq!(r.term_count(), 2);
        let mut coefs: Vec<f64> = r.terms().iter().map(|t| t.coef.get(0, 0).re).collect();
        coefs.sort_by(f64::total_cmp);
        assert!((coefs[0] + a).abs() < 1e-15 && (coefs[1] - a).abs() < 1e-15);
        assert!(r.is_reduced());
    }

    #[test]
    fn ghz_merges_equal_coefficients() {
        let (st, v, x) = setup(3);
        let zeros = st.cube(&[(v[0], false), (v[1], false), (v[2], false)]).unwrap();
        let ones = st.cube(&[(v[0], true), (v[1], true), (v[2], true)]).unwrap();
        let f = Mvbe::mk(&st, vec![(s(FRAC_1_SQRT_2), zeros), (s(FRAC_1_SQRT_2), ones)]).unwrap();
        let r = f.to_reduced();
        assert_eq!(r.term_count(), 1);
        assert_eq!(r.terms()[0].guard, st.and(st.iff(x[0], x[1]), st.iff(x[1], x[2])));
        let again = r.as_mvbe().to_reduced();
        assert_eq!(again.term_count(), 1);
    }

    #[test]
    fn equiv_basics() {
        let (st, _, x) = setup(2);
        let f = Mvbe::mk(&st, vec![(s(1.0), x[0]), (s(2.0), x[1])]).unwrap();
        assert!(f.equiv(&f).unwrap());
        let z1 = Mvbe::zero(&st, 1, 1);
        let z2 = Mvbe::mk(&st, vec![(s(1.0), x[0]), (s(-1.0), x[0])]).unwrap();
        assert!(z1.equiv(&z2).unwrap());
        assert!(!f.equiv(&z1).unwrap());
        let g = Mvbe::mk(&st, vec![(s(1.0 + 3e-9), x[0]), (s(2.0), x[1])]).unwrap();
        assert_eq!(f.equiv_verdict(&g).unwrap(), EquivOutcome::Inconclusive);
        assert!(f.equiv(&Mvbe::constant(&st, Mat::identity(2))).is_err());
    }

    #[test]
    fn witness_is_smallest_difference() {
        let (st, v, x) = setup(2);
        let f = Mvbe::mk(&st, vec![(s(1.0), x[0])]).unwrap().to_reduced();
        let g = Mvbe::mk(&st, vec![(s(1.0), st.and(x[0], x[1]))]).unwrap().to_reduced();
        assert_eq!(f.first_difference(&g, &v, 100), Some(vec![true, false]));
        assert_eq!(f.first_difference(&f, &v, 100), None);
    }
}
