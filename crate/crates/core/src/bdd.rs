//! Reduced ordered binary decision diagrams.
//!
//! A [`BddStore`] owns a hash-consed node table. Every [`BoolFn`] it hands out
//! is a plain index into that table, so two handles are equal exactly when they
//! denote the same Boolean function under the store's variable order.
//!
//! Variables are allocated with an explicit *rank*. Nodes are ordered by rank,
//! not by allocation index, which lets callers insert a variable anywhere in the
//! order after other variables already exist (the quantum layer uses this to
//! keep every copy of a qubit adjacent in the order).

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;
use std::sync::atomic::{AtomicU32, Ordering};

use rustc_hash::FxHashMap;
use thiserror::Error;

/// Identifier of a Boolean variable inside one store.
///
/// Ids are dense and handed out in allocation order; the position of the
/// variable in the decision order is its rank, see [`BddStore::rank`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Handle to a canonical BDD node.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoolFn {
    store: u32,
    node: u32,
}

impl BoolFn {
    pub fn is_false(self) -> bool {
        self.node == FALSE
    }

    pub fn is_true(self) -> bool {
        self.node == TRUE
    }

    pub fn is_const(self) -> bool {
        self.node <= TRUE
    }

    /// Raw node index; only meaningful together with the owning store.
    pub fn node_index(self) -> u32 {
        self.node
    }

    pub fn store_id(self) -> u32 {
        self.store
    }
}

impl fmt::Debug for BoolFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node {
            FALSE => write!(f, "BoolFn(0)"),
            TRUE => write!(f, "BoolFn(1)"),
            n => write!(f, "BoolFn(#{n}@{})", self.store),
        }
    }
}

/// Boolean connectives accepted by [`BddStore::apply`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoolOp {
    Not,
    And,
    Or,
    Xor,
    Iff,
    Implies,
}

impl BoolOp {
    pub fn arity(self) -> usize {
        match self {
            BoolOp::Not => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BddError {
    #[error("unknown variable {0:?}")]
    UnknownVar(VarId),
    #[error("{op:?} takes {expected} argument(s), got {got}")]
    Arity {
        op: BoolOp,
        expected: usize,
        got: usize,
    },
    #[error("rename target {0:?} collides with another variable of the function")]
    RenameCollision(VarId),
    #[error("rename map is not order-compatible with the variable order")]
    RenameOrder,
    #[error("assignment has no binding for variable {0:?}")]
    MissingBinding(VarId),
    #[error("rank {0} is already taken by another variable")]
    DuplicateRank(u64),
}

/// A partial map from variables to truth values.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment {
    bindings: BTreeMap<VarId, bool>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, v: VarId, value: bool) -> Self {
        self.bindings.insert(v, value);
        self
    }

    pub fn set(&mut self, v: VarId, value: bool) {
        self.bindings.insert(v, value);
    }

    pub fn get(&self, v: VarId) -> Option<bool> {
        self.bindings.get(&v).copied()
    }

    pub fn remove(&mut self, v: VarId) {
        self.bindings.remove(&v);
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, bool)> + '_ {
        self.bindings.iter().map(|(v, b)| (*v, *b))
    }

    /// Builds the assignment `vars[i] = bits[i]`.
    pub fn from_bits(vars: &[VarId], bits: &[bool]) -> Self {
        assert_eq!(vars.len(), bits.len());
        Assignment {
            bindings: vars.iter().copied().zip(bits.iter().copied()).collect(),
        }
    }
}

impl FromIterator<(VarId, bool)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (VarId, bool)>>(iter: I) -> Self {
        Assignment {
            bindings: iter.into_iter().collect(),
        }
    }
}

const FALSE: u32 = 0;
const TRUE: u32 = 1;
const TERMINAL_LEVEL: u64 = u64::MAX;

#[derive(Clone, Copy, Debug)]
struct Node {
    var: u32,
    lo: u32,
    hi: u32,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum CacheOp {
    Not,
    And,
    Or,
    Xor,
}

struct Inner {
    nodes: Vec<Node>,
    unique: FxHashMap<(u32, u32, u32), u32>,
    cache: FxHashMap<(CacheOp, u32, u32), u32>,
    ranks: Vec<u64>,
    names: Vec<String>,
    rank_index: BTreeMap<u64, u32>,
}

static NEXT_STORE_ID: AtomicU32 = AtomicU32::new(1);

// Past this many memoized results the operation cache is dropped wholesale.
const CACHE_LIMIT: usize = 1 << 22;

/// Shared node table and operation cache.
///
/// The store uses interior mutability and is not `Sync`; it is meant to be
/// owned by one thread through an [`Rc`] (see [`Store`]). Handles carry the id
/// of the store that made them, and every operation checks it.
pub struct BddStore {
    id: u32,
    inner: RefCell<Inner>,
}

/// Reference-counted store, the form every higher layer passes around.
pub type Store = Rc<BddStore>;

impl Default for BddStore {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for BddStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inner = self.inner.borrow();
        f.debug_struct("BddStore")
            .field("id", &self.id)
            .field("vars", &inner.ranks.len())
            .field("nodes", &inner.nodes.len())
            .finish()
    }
}

impl Inner {
    fn level(&self, node: u32) -> u64 {
        if node <= TRUE {
            TERMINAL_LEVEL
        } else {
            self.ranks[self.nodes[node as usize].var as usize]
        }
    }

    fn mk(&mut self, var: u32, lo: u32, hi: u32) -> u32 {
        if lo == hi {
            return lo;
        }
        debug_assert!(self.ranks[var as usize] < self.level(lo));
        debug_assert!(self.ranks[var as usize] < self.level(hi));
        if let Some(&n) = self.unique.get(&(var, lo, hi)) {
            return n;
        }
        let n = self.nodes.len() as u32;
        self.nodes.push(Node { var, lo, hi });
        self.unique.insert((var, lo, hi), n);
        n
    }

    fn cofactors(&self, node: u32, level: u64) -> (u32, u32) {
        if self.level(node) == level {
            let n = self.nodes[node as usize];
            (n.lo, n.hi)
        } else {
            (node, node)
        }
    }

    fn top_var(&self, a: u32, b: u32) -> (u32, u64) {
        let (la, lb) = (self.level(a), self.level(b));
        if la <= lb {
            (self.nodes[a as usize].var, la)
        } else {
            (self.nodes[b as usize].var, lb)
        }
    }

    fn not(&mut self, a: u32) -> u32 {
        match a {
            FALSE => return TRUE,
            TRUE => return FALSE,
            _ => {}
        }
        if let Some(&r) = self.cache.get(&(CacheOp::Not, a, 0)) {
            return r;
        }
        let n = self.nodes[a as usize];
        let lo = self.not(n.lo);
        let hi = self.not(n.hi);
        let r = self.mk(n.var, lo, hi);
        self.cache.insert((CacheOp::Not, a, 0), r);
        r
    }

    fn binary(&mut self, op: CacheOp, a: u32, b: u32) -> u32 {
        match op {
            CacheOp::And => {
                if a == FALSE || b == FALSE {
                    return FALSE;
                }
                if a == TRUE || a == b {
                    return b;
                }
                if b == TRUE {
                    return a;
                }
            }
            CacheOp::Or => {
                if a == TRUE || b == TRUE {
                    return TRUE;
                }
                if a == FALSE || a == b {
                    return b;
                }
                if b == FALSE {
                    return a;
                }
            }
            CacheOp::Xor => {
                if a == b {
                    return FALSE;
                }
                if a == FALSE {
                    return b;
                }
                if b == FALSE {
                    return a;
                }
                if a == TRUE {
                    return self.not(b);
                }
                if b == TRUE {
                    return self.not(a);
                }
            }
            CacheOp::Not => unreachable!(),
        }
        // all three connectives are commutative
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        if let Some(&r) = self.cache.get(&(op, a, b)) {
            return r;
        }
        let (var, level) = self.top_var(a, b);
        let (a0, a1) = self.cofactors(a, level);
        let (b0, b1) = self.cofactors(b, level);
        let lo = self.binary(op, a0, b0);
        let hi = self.binary(op, a1, b1);
        let r = self.mk(var, lo, hi);
        self.cache.insert((op, a, b), r);
        r
    }

    fn restrict(&mut self, f: u32, var: u32, value: bool, memo: &mut FxHashMap<u32, u32>) -> u32 {
        let rank = self.ranks[var as usize];
        if self.level(f) > rank {
            return f;
        }
        let n = self.nodes[f as usize];
        if n.var == var {
            return if value { n.hi } else { n.lo };
        }
        if let Some(&r) = memo.get(&f) {
            return r;
        }
        let lo = self.restrict(n.lo, var, value, memo);
        let hi = self.restrict(n.hi, var, value, memo);
        let r = self.mk(n.var, lo, hi);
        memo.insert(f, r);
        r
    }

    fn exists_var(&mut self, f: u32, var: u32) -> u32 {
        let mut memo = FxHashMap::default();
        let f0 = self.restrict(f, var, false, &mut memo);
        memo.clear();
        let f1 = self.restrict(f, var, true, &mut memo);
        self.binary(CacheOp::Or, f0, f1)
    }

    fn forall_var(&mut self, f: u32, var: u32) -> u32 {
        let mut memo = FxHashMap::default();
        let f0 = self.restrict(f, var, false, &mut memo);
        memo.clear();
        let f1 = self.restrict(f, var, true, &mut memo);
        self.binary(CacheOp::And, f0, f1)
    }

    fn support(&self, f: u32) -> BTreeSet<VarId> {
        let mut seen = BTreeSet::new();
        let mut vars = BTreeSet::new();
        let mut stack = vec![f];
        while let Some(n) = stack.pop() {
            if n <= TRUE || !seen.insert(n) {
                continue;
            }
            let node = self.nodes[n as usize];
            vars.insert(VarId(node.var));
            stack.push(node.lo);
            stack.push(node.hi);
        }
        vars
    }

    fn rename(&mut self, f: u32, map: &HashMap<u32, u32>, memo: &mut FxHashMap<u32, u32>) -> u32 {
        if f <= TRUE {
            return f;
        }
        if let Some(&r) = memo.get(&f) {
            return r;
        }
        let n = self.nodes[f as usize];
        let lo = self.rename(n.lo, map, memo);
        let hi = self.rename(n.hi, map, memo);
        let var = map.get(&n.var).copied().unwrap_or(n.var);
        let r = self.mk(var, lo, hi);
        memo.insert(f, r);
        r
    }

    fn maybe_flush(&mut self) {
        if self.cache.len() > CACHE_LIMIT {
            self.cache.clear();
        }
    }
}

impl BddStore {
    pub fn new() -> Self {
        let terminal = Node {
            var: u32::MAX,
            lo: 0,
            hi: 0,
        };
        BddStore {
            id: NEXT_STORE_ID.fetch_add(1, Ordering::Relaxed),
            inner: RefCell::new(Inner {
                nodes: vec![terminal, terminal],
                unique: FxHashMap::default(),
                cache: FxHashMap::default(),
                ranks: Vec::new(),
                names: Vec::new(),
                rank_index: BTreeMap::new(),
            }),
        }
    }

    pub fn shared() -> Store {
        Rc::new(Self::new())
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    /// Allocates a variable placed after every existing one.
    pub fn add_var(&self, name: impl Into<String>) -> VarId {
        let rank = {
            let inner = self.inner.borrow();
            inner.rank_index.keys().next_back().map_or(0, |r| r + 1)
        };
        self.add_var_ranked(name, rank)
            .expect("fresh rank past the last variable is always free")
    }

    /// Allocates a variable at an explicit position in the decision order.
    pub fn add_var_ranked(&self, name: impl Into<String>, rank: u64) -> Result<VarId, BddError> {
        assert!(rank < TERMINAL_LEVEL, "rank u64::MAX is reserved for terminals");
        let mut inner = self.inner.borrow_mut();
        if inner.rank_index.contains_key(&rank) {
            return Err(BddError::DuplicateRank(rank));
        }
        let id = inner.ranks.len() as u32;
        inner.ranks.push(rank);
        inner.names.push(name.into());
        inner.rank_index.insert(rank, id);
        Ok(VarId(id))
    }

    pub fn var_count(&self) -> usize {
        self.inner.borrow().ranks.len()
    }

    pub fn rank(&self, v: VarId) -> u64 {
        self.inner.borrow().ranks[v.index()]
    }

    pub fn var_name(&self, v: VarId) -> String {
        self.inner.borrow().names[v.index()].clone()
    }

    /// Sorts variables by their position in the decision order.
    pub fn order_vars(&self, vars: &mut [VarId]) {
        let inner = self.inner.borrow();
        vars.sort_by_key(|v| inner.ranks[v.index()]);
    }

    /// Total number of nodes in the store, terminals included.
    pub fn node_count(&self) -> usize {
        self.inner.borrow().nodes.len()
    }

    /// Number of internal nodes reachable from `f`.
    pub fn size(&self, f: BoolFn) -> usize {
        self.check(f);
        let inner = self.inner.borrow();
        let mut seen = BTreeSet::new();
        let mut stack = vec![f.node];
        while let Some(n) = stack.pop() {
            if n <= TRUE || !seen.insert(n) {
                continue;
            }
            let node = inner.nodes[n as usize];
            stack.push(node.lo);
            stack.push(node.hi);
        }
        seen.len()
    }

    fn handle(&self, node: u32) -> BoolFn {
        BoolFn {
            store: self.id,
            node,
        }
    }

    #[inline]
    fn check(&self, f: BoolFn) {
        assert_eq!(
            f.store, self.id,
            "BoolFn from store {} used with store {}",
            f.store, self.id
        );
    }

    fn check_var(&self, v: VarId) -> Result<(), BddError> {
        if v.index() < self.inner.borrow().ranks.len() {
            Ok(())
        } else {
            Err(BddError::UnknownVar(v))
        }
    }

    /// Whether `f` was issued by this store.
    pub fn owns(&self, f: BoolFn) -> bool {
        f.store == self.id
    }

    pub fn zero(&self) -> BoolFn {
        self.handle(FALSE)
    }

    pub fn one(&self) -> BoolFn {
        self.handle(TRUE)
    }

    pub fn constant(&self, value: bool) -> BoolFn {
        if value {
            self.one()
        } else {
            self.zero()
        }
    }

    /// Projection function of `v`.
    pub fn var(&self, v: VarId) -> Result<BoolFn, BddError> {
        self.check_var(v)?;
        let n = self.inner.borrow_mut().mk(v.0, FALSE, TRUE);
        Ok(self.handle(n))
    }

    /// `v` when `value` is true, `¬v` otherwise.
    pub fn literal(&self, v: VarId, value: bool) -> Result<BoolFn, BddError> {
        self.check_var(v)?;
        let n = if value {
            self.inner.borrow_mut().mk(v.0, FALSE, TRUE)
        } else {
            self.inner.borrow_mut().mk(v.0, TRUE, FALSE)
        };
        Ok(self.handle(n))
    }

    /// Conjunction of literals `vars[i] = bits[i]`.
    pub fn cube(&self, lits: &[(VarId, bool)]) -> Result<BoolFn, BddError> {
        let mut acc = self.one();
        for &(v, b) in lits {
            let l = self.literal(v, b)?;
            acc = self.and(acc, l);
        }
        Ok(acc)
    }

    pub fn not(&self, f: BoolFn) -> BoolFn {
        self.check(f);
        let mut inner = self.inner.borrow_mut();
        inner.maybe_flush();
        let n = inner.not(f.node);
        self.handle(n)
    }

    fn bin(&self, op: CacheOp, f: BoolFn, g: BoolFn) -> BoolFn {
        self.check(f);
        self.check(g);
        let mut inner = self.inner.borrow_mut();
        inner.maybe_flush();
        let n = inner.binary(op, f.node, g.node);
        self.handle(n)
    }

    pub fn and(&self, f: BoolFn, g: BoolFn) -> BoolFn {
        self.bin(CacheOp::And, f, g)
    }

    pub fn or(&self, f: BoolFn, g: BoolFn) -> BoolFn {
        self.bin(CacheOp::Or, f, g)
    }

    pub fn xor(&self, f: BoolFn, g: BoolFn) -> BoolFn {
        self.bin(CacheOp::Xor, f, g)
    }

    pub fn iff(&self, f: BoolFn, g: BoolFn) -> BoolFn {
        let x = self.xor(f, g);
        self.not(x)
    }

    pub fn implies(&self, f: BoolFn, g: BoolFn) -> BoolFn {
        let nf = self.not(f);
        self.or(nf, g)
    }

    /// `f ∧ ¬g`.
    pub fn diff(&self, f: BoolFn, g: BoolFn) -> BoolFn {
        let ng = self.not(g);
        self.and(f, ng)
    }

    pub fn and_all(&self, fs: impl IntoIterator<Item = BoolFn>) -> BoolFn {
        fs.into_iter().fold(self.one(), |acc, f| self.and(acc, f))
    }

    pub fn or_all(&self, fs: impl IntoIterator<Item = BoolFn>) -> BoolFn {
        fs.into_iter().fold(self.zero(), |acc, f| self.or(acc, f))
    }

    /// Applies a connective to the right number of arguments.
    pub fn apply(&self, op: BoolOp, args: &[BoolFn]) -> Result<BoolFn, BddError> {
        if args.len() != op.arity() {
            return Err(BddError::Arity {
                op,
                expected: op.arity(),
                got: args.len(),
            });
        }
        Ok(match op {
            BoolOp::Not => self.not(args[0]),
            BoolOp::And => self.and(args[0], args[1]),
            BoolOp::Or => self.or(args[0], args[1]),
            BoolOp::Xor => self.xor(args[0], args[1]),
            BoolOp::Iff => self.iff(args[0], args[1]),
            BoolOp::Implies => self.implies(args[0], args[1]),
        })
    }

    /// Restriction `f|v=b`. A variable outside the support leaves `f` unchanged.
    pub fn cofactor(&self, f: BoolFn, v: VarId, value: bool) -> BoolFn {
        self.check(f);
        let mut inner = self.inner.borrow_mut();
        let mut memo = FxHashMap::default();
        let n = inner.restrict(f.node, v.0, value, &mut memo);
        self.handle(n)
    }

    /// Ordered list of variables sorted innermost (deepest rank) first.
    fn innermost_first(&self, vars: &[VarId]) -> Vec<VarId> {
        let mut vs: Vec<VarId> = vars.to_vec();
        vs.sort();
        vs.dedup();
        self.order_vars(&mut vs);
        vs.reverse();
        vs
    }

    /// `∃ vars: f`, eliminating the deepest variable first.
    pub fn exists(&self, f: BoolFn, vars: &[VarId]) -> BoolFn {
        self.check(f);
        let order = self.innermost_first(vars);
        let mut inner = self.inner.borrow_mut();
        inner.maybe_flush();
        let n = order.iter().fold(f.node, |acc, v| inner.exists_var(acc, v.0));
        self.handle(n)
    }

    /// `∀ vars: f`.
    pub fn forall(&self, f: BoolFn, vars: &[VarId]) -> BoolFn {
        self.check(f);
        let order = self.innermost_first(vars);
        let mut inner = self.inner.borrow_mut();
        inner.maybe_flush();
        let n = order.iter().fold(f.node, |acc, v| inner.forall_var(acc, v.0));
        self.handle(n)
    }

    /// Set of variables `f` essentially depends on.
    pub fn support(&self, f: BoolFn) -> BTreeSet<VarId> {
        self.check(f);
        self.inner.borrow().support(f.node)
    }

    /// Support sorted by decision order.
    pub fn support_ordered(&self, f: BoolFn) -> Vec<VarId> {
        let mut vs: Vec<VarId> = self.support(f).into_iter().collect();
        self.order_vars(&mut vs);
        vs
    }

    /// Top variable of `f`, `None` for constants.
    pub fn top_var(&self, f: BoolFn) -> Option<VarId> {
        self.check(f);
        if f.is_const() {
            None
        } else {
            Some(VarId(self.inner.borrow().nodes[f.node as usize].var))
        }
    }

    /// Renames variables simultaneously.
    ///
    /// The map must be injective, no target may already occur in `f` outside
    /// the renamed sources, and the renaming must preserve the relative order
    /// of the support. Identity entries are allowed.
    pub fn rename(&self, f: BoolFn, map: &HashMap<VarId, VarId>) -> Result<BoolFn, BddError> {
        self.check(f);
        for (&s, &t) in map {
            self.check_var(s)?;
            self.check_var(t)?;
        }
        let support = self.support_ordered(f);
        let mapped: Vec<VarId> = support
            .iter()
            .map(|v| map.get(v).copied().unwrap_or(*v))
            .collect();
        let mut seen = BTreeSet::new();
        for &t in &mapped {
            if !seen.insert(t) {
                return Err(BddError::RenameCollision(t));
            }
        }
        {
            let inner = self.inner.borrow();
            let ranks: Vec<u64> = mapped.iter().map(|v| inner.ranks[v.index()]).collect();
            if ranks.windows(2).any(|w| w[0] >= w[1]) {
                return Err(BddError::RenameOrder);
            }
        }
        let raw: HashMap<u32, u32> = map
            .iter()
            .filter(|(s, t)| s != t)
            .map(|(s, t)| (s.0, t.0))
            .collect();
        if raw.is_empty() {
            return Ok(f);
        }
        let mut inner = self.inner.borrow_mut();
        let mut memo = FxHashMap::default();
        let n = inner.rename(f.node, &raw, &mut memo);
        Ok(self.handle(n))
    }

    /// Truth value of `f`; the assignment must bind every support variable.
    pub fn eval(&self, f: BoolFn, a: &Assignment) -> Result<bool, BddError> {
        self.check(f);
        let inner = self.inner.borrow();
        for v in inner.support(f.node) {
            if a.get(v).is_none() {
                return Err(BddError::MissingBinding(v));
            }
        }
        let mut n = f.node;
        while n > TRUE {
            let node = inner.nodes[n as usize];
            n = if a.get(VarId(node.var)).unwrap_or(false) {
                node.hi
            } else {
                node.lo
            };
        }
        Ok(n == TRUE)
    }

    fn check_universe(&self, f: BoolFn, universe: &[VarId]) -> Vec<u64> {
        let inner = self.inner.borrow();
        let ranks: Vec<u64> = universe.iter().map(|v| inner.ranks[v.index()]).collect();
        assert!(
            ranks.windows(2).all(|w| w[0] < w[1]),
            "universe must be sorted by decision order"
        );
        let sup = inner.support(f.node);
        assert!(
            sup.iter().all(|v| universe.contains(v)),
            "universe must cover the support"
        );
        ranks
    }

    /// Calls `visit` with every satisfying assignment of `f` over `universe`
    /// (a rank-sorted superset of the support), as bits in universe order.
    pub fn for_each_sat(&self, f: BoolFn, universe: &[VarId], mut visit: impl FnMut(&[bool])) {
        self.check(f);
        self.check_universe(f, universe);
        let inner = self.inner.borrow();
        let mut bits = vec![false; universe.len()];
        fn rec(
            inner: &Inner,
            node: u32,
            universe: &[VarId],
            i: usize,
            bits: &mut Vec<bool>,
            visit: &mut dyn FnMut(&[bool]),
        ) {
            if node == FALSE {
                return;
            }
            if i == universe.len() {
                debug_assert_eq!(node, TRUE);
                visit(bits);
                return;
            }
            let (lo, hi) = if node > TRUE && inner.nodes[node as usize].var == universe[i].0 {
                let n = inner.nodes[node as usize];
                (n.lo, n.hi)
            } else {
                (node, node)
            };
            bits[i] = false;
            rec(inner, lo, universe, i + 1, bits, visit);
            bits[i] = true;
            rec(inner, hi, universe, i + 1, bits, visit);
            bits[i] = false;
        }
        rec(&inner, f.node, universe, 0, &mut bits, &mut visit);
    }

    /// Number of satisfying assignments over `universe`.
    pub fn sat_count(&self, f: BoolFn, universe: &[VarId]) -> f64 {
        self.check(f);
        self.check_universe(f, universe);
        let inner = self.inner.borrow();
        let pos: HashMap<u32, usize> = universe.iter().enumerate().map(|(i, v)| (v.0, i)).collect();
        let depth = |n: u32| -> usize {
            if n <= TRUE {
                universe.len()
            } else {
                pos[&inner.nodes[n as usize].var]
            }
        };
        let mut memo: FxHashMap<u32, f64> = FxHashMap::default();
        fn rec(
            n: u32,
            inner: &Inner,
            depth: &dyn Fn(u32) -> usize,
            memo: &mut FxHashMap<u32, f64>,
        ) -> f64 {
            match n {
                FALSE => return 0.0,
                TRUE => return 1.0,
                _ => {}
            }
            if let Some(&c) = memo.get(&n) {
                return c;
            }
            let node = inner.nodes[n as usize];
            let d = depth(n);
            let lo = rec(node.lo, inner, depth, memo) * 2f64.powi((depth(node.lo) - d - 1) as i32);
            let hi = rec(node.hi, inner, depth, memo) * 2f64.powi((depth(node.hi) - d - 1) as i32);
            memo.insert(n, lo + hi);
            lo + hi
        }
        rec(f.node, &inner, &depth, &mut memo) * 2f64.powi(depth(f.node) as i32)
    }

    /// Lexicographically smallest satisfying assignment over `universe`
    /// (false < true, first universe variable most significant).
    pub fn min_sat(&self, f: BoolFn, universe: &[VarId]) -> Option<Vec<bool>> {
        self.check(f);
        if f.is_false() {
            return None;
        }
        self.check_universe(f, universe);
        let inner = self.inner.borrow();
        let mut bits = Vec::with_capacity(universe.len());
        let mut n = f.node;
        for v in universe {
            if n > TRUE && inner.nodes[n as usize].var == v.0 {
                let node = inner.nodes[n as usize];
                if node.lo != FALSE {
                    bits.push(false);
                    n = node.lo;
                } else {
                    bits.push(true);
                    n = node.hi;
                }
            } else {
                bits.push(false);
            }
        }
        debug_assert_eq!(n, TRUE);
        Some(bits)
    }
}
