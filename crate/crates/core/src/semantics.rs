//! Models and the denotation of formulas.
//!
//! A model fixes a nonempty value set, a semitopology and, for each declared
//! predicate, a truth value at every point and value. Formulas are evaluated
//! to one truth value per point.
//!
//! Two evaluators live here. [`denote_all`] compiles a formula against the
//! model's signature and evaluates it over all points at once using bitmasks;
//! the checker uses it for sweeps. [`denote_direct`] is a plain structural
//! recursion with substitution at a single point, used to cross-check.

use std::collections::{BTreeMap, BTreeSet};

use crate::kernel3::{apply_binary, apply_unary, fold_and, fold_or, BinaryConn, TruthValue, UnaryConn, T};
use crate::semitopo::{PointSet, Semitopology, SpatialModality};
use crate::syntax::{free_vars, substitute, Formula, Quantifier, Term};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("free variable {0:?}; close the formula or instantiate it")]
    FreeVariable(String),
    #[error("predicate {0:?} is not declared by the model")]
    UnknownPredicate(String),
    #[error("value {0:?} is not in the model's value set")]
    UnknownValue(String),
    #[error("point {0:?} is not in the model's space")]
    UnknownPoint(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("a model needs at least one value")]
    NoValues,
    #[error("duplicate value {0:?}")]
    DuplicateValue(String),
    #[error("duplicate predicate {0:?}")]
    DuplicatePredicate(String),
}

/// A row of truth values over all points, stored as two masks: `b` has the
/// points whose value is at least `B`, `t` the points whose value is `T`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct PointRow {
    b: u64,
    t: u64,
}

impl PointRow {
    pub const FALSE: PointRow = PointRow { b: 0, t: 0 };

    fn constant(v: TruthValue, full: u64) -> Self {
        match v {
            TruthValue::F => PointRow { b: 0, t: 0 },
            TruthValue::B => PointRow { b: full, t: 0 },
            TruthValue::T => PointRow { b: full, t: full },
        }
    }

    pub fn get(self, p: usize) -> TruthValue {
        let bit = 1u64 << p;
        if self.t & bit != 0 {
            TruthValue::T
        } else if self.b & bit != 0 {
            TruthValue::B
        } else {
            TruthValue::F
        }
    }

    pub fn set(&mut self, p: usize, v: TruthValue) {
        let bit = 1u64 << p;
        self.b &= !bit;
        self.t &= !bit;
        if v >= TruthValue::B {
            self.b |= bit;
        }
        if v == TruthValue::T {
            self.t |= bit;
        }
    }

    pub fn to_vec(self, n: usize) -> Vec<TruthValue> {
        (0..n).map(|p| self.get(p)).collect()
    }

    pub fn from_slice(values: &[TruthValue]) -> Self {
        let mut r = PointRow::FALSE;
        for (p, v) in values.iter().enumerate() {
            r.set(p, *v);
        }
        r
    }

    /// Points where the value is valid, that is `T` or `B`.
    pub fn valid_points(self) -> PointSet {
        PointSet::from_bits(self.b)
    }

    fn meet(self, o: Self) -> Self {
        PointRow { b: self.b & o.b, t: self.t & o.t }
    }

    fn join(self, o: Self) -> Self {
        PointRow { b: self.b | o.b, t: self.t | o.t }
    }

    fn neg(self, full: u64) -> Self {
        PointRow { b: !self.t & full, t: !self.b & full }
    }

    /// A two-valued row from a mask of `T` points.
    fn crisp(mask: u64) -> Self {
        PointRow { b: mask, t: mask }
    }

    fn unary(self, c: UnaryConn, full: u64) -> Self {
        match c {
            UnaryConn::Neg => self.neg(full),
            UnaryConn::ModT => Self::crisp(self.t),
            UnaryConn::ModB => Self::crisp(self.b & !self.t),
            UnaryConn::ModF => Self::crisp(!self.b & full),
            UnaryConn::ModTB => Self::crisp(self.b),
            UnaryConn::ModTF => Self::crisp((self.t | !self.b) & full),
        }
    }

    fn binary(self, c: BinaryConn, o: Self, full: u64) -> Self {
        match c {
            BinaryConn::And => self.meet(o),
            BinaryConn::Or => self.join(o),
            BinaryConn::WeakImp => self.neg(full).join(o),
            BinaryConn::StrongImp => self.neg(full).join(Self::crisp(o.t)),
            BinaryConn::Xor => self.meet(o.neg(full)).join(self.neg(full).meet(o)),
            BinaryConn::Iff => {
                let both_t = self.t & o.t;
                let both_b = (self.b & !self.t) & (o.b & !o.t);
                let both_f = !self.b & !o.b & full;
                Self::crisp(both_t | both_b | both_f)
            }
        }
    }

    fn everywhere(self, full: u64) -> TruthValue {
        if self.t == full {
            TruthValue::T
        } else if self.b == full {
            TruthValue::B
        } else {
            TruthValue::F
        }
    }

    fn somewhere(self) -> TruthValue {
        if self.t != 0 {
            TruthValue::T
        } else if self.b != 0 {
            TruthValue::B
        } else {
            TruthValue::F
        }
    }

    /// Meet over the points of `o`.
    fn meet_over(self, o: u64) -> TruthValue {
        if o & !self.t == 0 {
            TruthValue::T
        } else if o & !self.b == 0 {
            TruthValue::B
        } else {
            TruthValue::F
        }
    }

    /// Join over the points of `o`.
    fn join_over(self, o: u64) -> TruthValue {
        if o & self.t != 0 {
            TruthValue::T
        } else if o & self.b != 0 {
            TruthValue::B
        } else {
            TruthValue::F
        }
    }
}

/// Interpretation of predicate symbols: a truth value for every predicate,
/// point and value.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interpretation {
    predicates: Vec<String>,
    n_values: usize,
    rows: Vec<PointRow>,
}

impl Interpretation {
    fn row_index(&self, pred: usize, value: usize) -> usize {
        pred * self.n_values + value
    }

    pub fn predicates(&self) -> &[String] {
        &self.predicates
    }

    pub fn row(&self, pred: usize, value: usize) -> PointRow {
        self.rows[self.row_index(pred, value)]
    }

    pub fn row_mut(&mut self, pred: usize, value: usize) -> &mut PointRow {
        let i = self.row_index(pred, value);
        &mut self.rows[i]
    }
}

/// A value set, a semitopology and an interpretation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    values: Vec<String>,
    space: Semitopology,
    interp: Interpretation,
}

impl Model {
    /// A model in which every predicate is `F` everywhere. Predicate names
    /// are kept sorted; values keep the given order.
    pub fn new<S: AsRef<str>, P: AsRef<str>>(
        values: &[S],
        space: Semitopology,
        predicates: &[P],
    ) -> Result<Self, ModelError> {
        let values: Vec<String> = values.iter().map(|v| v.as_ref().to_string()).collect();
        if values.is_empty() {
            return Err(ModelError::NoValues);
        }
        let mut seen = BTreeSet::new();
        for v in &values {
            if !seen.insert(v) {
                return Err(ModelError::DuplicateValue(v.clone()));
            }
        }
        let mut preds: Vec<String> = predicates.iter().map(|p| p.as_ref().to_string()).collect();
        preds.sort();
        for w in preds.windows(2) {
            if w[0] == w[1] {
                return Err(ModelError::DuplicatePredicate(w[0].clone()));
            }
        }
        let rows = vec![PointRow::FALSE; preds.len() * values.len()];
        let interp = Interpretation { predicates: preds, n_values: values.len(), rows };
        Ok(Model { values, space, interp })
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    pub fn space(&self) -> &Semitopology {
        &self.space
    }

    pub fn interpretation(&self) -> &Interpretation {
        &self.interp
    }

    pub fn predicates(&self) -> &[String] {
        &self.interp.predicates
    }

    pub fn value_index(&self, v: &str) -> Option<usize> {
        self.values.iter().position(|x| x == v)
    }

    pub fn predicate_index(&self, p: &str) -> Option<usize> {
        self.interp.predicates.iter().position(|x| x == p)
    }

    fn indices(&self, pred: &str, point: &str, value: &str) -> Result<(usize, usize, usize), EvalError> {
        let pi = self.predicate_index(pred).ok_or_else(|| EvalError::UnknownPredicate(pred.to_string()))?;
        let pt = self.space.point_index(point).ok_or_else(|| EvalError::UnknownPoint(point.to_string()))?;
        let vi = self.value_index(value).ok_or_else(|| EvalError::UnknownValue(value.to_string()))?;
        Ok((pi, pt, vi))
    }

    pub fn get(&self, pred: &str, point: &str, value: &str) -> Result<TruthValue, EvalError> {
        let (pi, pt, vi) = self.indices(pred, point, value)?;
        Ok(self.get_at(pi, pt, vi))
    }

    pub fn set(&mut self, pred: &str, point: &str, value: &str, tv: TruthValue) -> Result<(), EvalError> {
        let (pi, pt, vi) = self.indices(pred, point, value)?;
        self.set_at(pi, pt, vi, tv);
        Ok(())
    }

    pub fn get_at(&self, pred: usize, point: usize, value: usize) -> TruthValue {
        self.interp.row(pred, value).get(point)
    }

    pub fn set_at(&mut self, pred: usize, point: usize, value: usize, tv: TruthValue) {
        self.interp.row_mut(pred, value).set(point, tv);
    }

    /// Set a predicate at one value to the same truth value at every point.
    pub fn fill(&mut self, pred: usize, value: usize, tv: TruthValue) {
        let full = self.space.full().bits();
        *self.interp.row_mut(pred, value) = PointRow::constant(tv, full);
    }

    /// Number of (predicate, point, value) cells.
    pub fn cell_count(&self) -> usize {
        self.interp.predicates.len() * self.space.len() * self.values.len()
    }
}

/// A term after resolution: a variable slot or a value index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Var(usize),
    Val(usize),
}

#[derive(Clone, Debug)]
enum Node {
    Const(TruthValue),
    Pred(usize, Slot),
    Eq(Slot, Slot),
    Unary(UnaryConn, Box<Node>),
    Binary(BinaryConn, Box<Node>, Box<Node>),
    Spatial(SpatialModality, Box<Node>),
    Quant(Quantifier, usize, Box<Node>),
    Correct(Vec<usize>),
    Incorrect(Vec<usize>),
}

/// A formula resolved against a model signature (value list and predicate
/// list). Free variables occupy the first slots, in the order given to
/// [`Compiled::new`].
#[derive(Clone, Debug)]
pub struct Compiled {
    root: Node,
    free: Vec<String>,
    slots: usize,
}

impl Compiled {
    pub fn new(m: &Model, phi: &Formula, free: &[String]) -> Result<Self, EvalError> {
        let mut scope: Vec<String> = free.to_vec();
        let mut max = scope.len();
        let root = compile(m, phi, &mut scope, &mut max)?;
        Ok(Compiled { root, free: free.to_vec(), slots: max })
    }

    /// Compile a closed formula.
    pub fn closed(m: &Model, phi: &Formula) -> Result<Self, EvalError> {
        if let Some(v) = free_vars(phi).into_iter().next() {
            return Err(EvalError::FreeVariable(v));
        }
        Self::new(m, phi, &[])
    }

    pub fn free_vars(&self) -> &[String] {
        &self.free
    }

    /// Evaluate with the free variables bound to the given value indices.
    /// The model must share the signature the formula was compiled against.
    pub fn eval(&self, m: &Model, binding: &[usize]) -> PointRow {
        debug_assert_eq!(binding.len(), self.free.len());
        let mut env = vec![0usize; self.slots];
        env[..binding.len()].copy_from_slice(binding);
        let full = m.space.full().bits();
        eval_node(&self.root, m, &mut env, full)
    }
}

fn compile(m: &Model, phi: &Formula, scope: &mut Vec<String>, max: &mut usize) -> Result<Node, EvalError> {
    let term = |t: &Term, scope: &Vec<String>| -> Result<Slot, EvalError> {
        match t {
            Term::Var(a) => {
                scope.iter().rposition(|x| x == a).map(Slot::Var).ok_or_else(|| EvalError::FreeVariable(a.clone()))
            }
            Term::Val(v) => m.value_index(v).map(Slot::Val).ok_or_else(|| EvalError::UnknownValue(v.clone())),
        }
    };
    let pred = |p: &String| m.predicate_index(p).ok_or_else(|| EvalError::UnknownPredicate(p.clone()));
    Ok(match phi {
        Formula::Bot => Node::Const(TruthValue::F),
        Formula::Pred(p, t) => Node::Pred(pred(p)?, term(t, scope)?),
        Formula::Eq(s, t) => Node::Eq(term(s, scope)?, term(t, scope)?),
        Formula::Unary(c, a) => Node::Unary(*c, Box::new(compile(m, a, scope, max)?)),
        Formula::Binary(c, a, b) => {
            Node::Binary(*c, Box::new(compile(m, a, scope, max)?), Box::new(compile(m, b, scope, max)?))
        }
        Formula::Spatial(s, a) => Node::Spatial(*s, Box::new(compile(m, a, scope, max)?)),
        Formula::Quant(q, v, a) => {
            let slot = scope.len();
            scope.push(v.clone());
            *max = (*max).max(scope.len());
            let body = compile(m, a, scope, max);
            scope.pop();
            Node::Quant(*q, slot, Box::new(body?))
        }
        Formula::Correct(ps) => Node::Correct(ps.iter().map(pred).collect::<Result<_, _>>()?),
        Formula::Incorrect(ps) => Node::Incorrect(ps.iter().map(pred).collect::<Result<_, _>>()?),
    })
}

fn resolve(s: Slot, env: &[usize]) -> usize {
    match s {
        Slot::Var(i) => env[i],
        Slot::Val(v) => v,
    }
}

fn eval_node(node: &Node, m: &Model, env: &mut [usize], full: u64) -> PointRow {
    let n_values = m.values.len();
    match node {
        Node::Const(v) => PointRow::constant(*v, full),
        Node::Pred(p, t) => m.interp.row(*p, resolve(*t, env)),
        Node::Eq(s, t) => PointRow::constant(TruthValue::from_bool(resolve(*s, env) == resolve(*t, env)), full),
        Node::Unary(c, a) => eval_node(a, m, env, full).unary(*c, full),
        Node::Binary(c, a, b) => {
            let x = eval_node(a, m, env, full);
            let y = eval_node(b, m, env, full);
            x.binary(*c, y, full)
        }
        Node::Spatial(s, a) => {
            let x = eval_node(a, m, env, full);
            let v = match s {
                SpatialModality::Everywhere => x.everywhere(full),
                SpatialModality::Somewhere => x.somewhere(),
                SpatialModality::Quorum => {
                    fold_or(m.space.basis().iter().filter(|o| !o.is_empty()).map(|o| x.meet_over(o.bits())))
                }
                SpatialModality::Contraquorum => {
                    fold_and(m.space.basis().iter().filter(|o| !o.is_empty()).map(|o| x.join_over(o.bits())))
                }
            };
            PointRow::constant(v, full)
        }
        Node::Quant(q, slot, body) => {
            let mut rows = Vec::with_capacity(n_values);
            for v in 0..n_values {
                env[*slot] = v;
                rows.push(eval_node(body, m, env, full));
            }
            let exists = || rows.iter().fold(PointRow::FALSE, |acc, r| acc.join(*r));
            let affine = || {
                let mut acc = PointRow::constant(T, full);
                for i in 0..rows.len() {
                    for j in 0..rows.len() {
                        if i != j {
                            // (f(v) & f(v')) -> v == v' with the equality false
                            acc = acc.meet(rows[i].meet(rows[j]).neg(full));
                        } else {
                            // f(v) -> f(v), which is B exactly where f(v) is B
                            acc = acc.meet(rows[i].neg(full).join(rows[i]));
                        }
                    }
                }
                acc
            };
            match q {
                Quantifier::Exists => exists(),
                Quantifier::Forall => rows.iter().fold(PointRow::constant(T, full), |acc, r| acc.meet(*r)),
                Quantifier::ExistsAffine => affine(),
                Quantifier::ExistsUnique => affine().meet(exists()),
            }
        }
        Node::Correct(ps) | Node::Incorrect(ps) => {
            let modality = if matches!(node, Node::Correct(_)) { UnaryConn::ModTF } else { UnaryConn::ModB };
            let mut acc = PointRow::constant(T, full);
            for p in ps {
                for v in 0..n_values {
                    acc = acc.meet(m.interp.row(*p, v).unary(modality, full));
                }
            }
            acc
        }
    }
}

/// Denotation of a closed formula at every point, in point order.
pub fn denote_all(m: &Model, phi: &Formula) -> Result<Vec<TruthValue>, EvalError> {
    let c = Compiled::closed(m, phi)?;
    Ok(c.eval(m, &[]).to_vec(m.space.len()))
}

/// Denotation of a closed formula at a named point.
pub fn denote(m: &Model, phi: &Formula, point: &str) -> Result<TruthValue, EvalError> {
    let p = m.space.point_index(point).ok_or_else(|| EvalError::UnknownPoint(point.to_string()))?;
    let c = Compiled::closed(m, phi)?;
    Ok(c.eval(m, &[]).get(p))
}

/// `p |= phi`: the denotation at `p` is `T` or `B`.
pub fn holds_at(m: &Model, phi: &Formula, point: &str) -> Result<bool, EvalError> {
    Ok(denote(m, phi, point)?.is_valid())
}

/// `|= phi`: the formula holds at every point.
pub fn is_valid_in_model(m: &Model, phi: &Formula) -> Result<bool, EvalError> {
    Ok(denote_all(m, phi)?.iter().all(|v| v.is_valid()))
}

/// Structural recursion at a single point, substituting values for bound
/// variables as quantifiers are unfolded. Slow, and kept deliberately
/// independent of [`Compiled`]; use it to cross-check.
pub fn denote_direct(m: &Model, phi: &Formula, point: usize) -> Result<TruthValue, EvalError> {
    let value = |t: &Term| match t {
        Term::Var(a) => Err(EvalError::FreeVariable(a.clone())),
        Term::Val(v) => m.value_index(v).ok_or_else(|| EvalError::UnknownValue(v.clone())),
    };
    let pred = |p: &str| m.predicate_index(p).ok_or_else(|| EvalError::UnknownPredicate(p.to_string()));
    let every_point = |f: &Formula| -> Result<Vec<TruthValue>, EvalError> {
        (0..m.space.len()).map(|q| denote_direct(m, f, q)).collect()
    };
    let instances = |v: &str, f: &Formula| -> Result<Vec<TruthValue>, EvalError> {
        m.values.iter().map(|x| denote_direct(m, &substitute(f, v, x), point)).collect()
    };
    Ok(match phi {
        Formula::Bot => TruthValue::F,
        Formula::Pred(p, t) => m.get_at(pred(p)?, point, value(t)?),
        Formula::Eq(s, t) => TruthValue::from_bool(value(s)? == value(t)?),
        Formula::Unary(c, a) => apply_unary(*c, denote_direct(m, a, point)?),
        Formula::Binary(c, a, b) => apply_binary(*c, denote_direct(m, a, point)?, denote_direct(m, b, point)?),
        Formula::Spatial(s, a) => m.space.eval_modality(*s, &every_point(a)?),
        Formula::Quant(q, v, a) => {
            let fs = instances(v, a)?;
            let affine = || {
                let mut out = Vec::new();
                for (i, x) in fs.iter().enumerate() {
                    for (j, y) in fs.iter().enumerate() {
                        let rhs = if i == j { *x } else { TruthValue::F };
                        out.push(apply_binary(BinaryConn::WeakImp, x.meet(*y), rhs));
                    }
                }
                fold_and(out)
            };
            match q {
                Quantifier::Exists => fold_or(fs.iter().copied()),
                Quantifier::Forall => fold_and(fs.iter().copied()),
                Quantifier::ExistsAffine => affine(),
                Quantifier::ExistsUnique => affine().meet(fold_or(fs.iter().copied())),
            }
        }
        Formula::Correct(ps) | Formula::Incorrect(ps) => {
            let modality = if matches!(phi, Formula::Correct(_)) { UnaryConn::ModTF } else { UnaryConn::ModB };
            let mut out = Vec::new();
            for p in ps {
                let pi = pred(p)?;
                for v in 0..m.values.len() {
                    out.push(apply_unary(modality, m.get_at(pi, point, v)));
                }
            }
            fold_and(out)
        }
    })
}

/// Per-variable value domains for instantiating free variables. Variables
/// without an entry range over all of the model's values.
pub type Domains = BTreeMap<String, Vec<String>>;

/// One instantiation of a formula's free variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    /// `(variable, value)` pairs in variable order.
    pub bindings: Vec<(String, String)>,
    pub formula: Formula,
}

/// Every way of binding the free variables of `phi` to values of their
/// domains. Variables are taken in sorted order and the first varies
/// slowest; values follow domain order.
pub fn instances(m: &Model, phi: &Formula, domains: &Domains) -> Result<Vec<Instance>, EvalError> {
    let vars: Vec<String> = free_vars(phi).into_iter().collect();
    let mut doms = Vec::with_capacity(vars.len());
    for v in &vars {
        let d = match domains.get(v) {
            Some(d) => {
                for x in d {
                    m.value_index(x).ok_or_else(|| EvalError::UnknownValue(x.clone()))?;
                }
                d.clone()
            }
            None => m.values.clone(),
        };
        doms.push(d);
    }
    let mut out = Vec::new();
    for combo in cartesian(&doms.iter().map(|d| d.len()).collect::<Vec<_>>()) {
        let mut f = phi.clone();
        let mut bindings = Vec::with_capacity(vars.len());
        for (k, i) in combo.into_iter().enumerate() {
            let val = &doms[k][i];
            f = substitute(&f, &vars[k], val);
            bindings.push((vars[k].clone(), val.clone()));
        }
        out.push(Instance { bindings, formula: f });
    }
    Ok(out)
}

/// The closed instances of `phi`, as [`instances`] without the bindings.
pub fn universal_closure_instances(m: &Model, phi: &Formula, domains: &Domains) -> Result<Vec<Formula>, EvalError> {
    Ok(instances(m, phi, domains)?.into_iter().map(|i| i.formula).collect())
}

/// Index tuples of a cartesian product, first coordinate slowest.
pub(crate) fn cartesian(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &n in sizes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..n).map(move |i| {
                    let mut p = prefix.clone();
                    p.push(i);
                    p
                })
            })
            .collect();
    }
    out
}
