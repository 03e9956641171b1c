//! Finite semitopologies: a point set with a basis of open sets whose unions
//! are the opens. Nonempty opens are quorums.

use std::cmp::Ordering;
use std::fmt;

use crate::kernel3::{fold_and, fold_or, TruthValue};

/// Maximum number of points; point sets are stored as bitmasks.
pub const MAX_POINTS: usize = 64;

/// A set of points, as a bitmask over point indices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct PointSet(u64);

impl PointSet {
    pub const EMPTY: PointSet = PointSet(0);

    pub fn full(n: usize) -> Self {
        if n >= 64 {
            PointSet(u64::MAX)
        } else {
            PointSet((1u64 << n) - 1)
        }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(it: I) -> Self {
        let mut bits = 0u64;
        for i in it {
            bits |= 1u64 << i;
        }
        PointSet(bits)
    }

    pub fn from_bits(bits: u64) -> Self {
        PointSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1u64 << i) != 0
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1u64 << i;
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn union(self, other: Self) -> Self {
        PointSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        PointSet(self.0 & other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    /// Order by sorted member list, lexicographically.
    fn lex_cmp(self, other: Self) -> Ordering {
        self.iter().cmp(other.iter())
    }
}

/// The four spatial modalities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpatialModality {
    Everywhere,
    Somewhere,
    Quorum,
    Contraquorum,
}

impl SpatialModality {
    pub const ALL: [SpatialModality; 4] = [
        SpatialModality::Everywhere,
        SpatialModality::Somewhere,
        SpatialModality::Quorum,
        SpatialModality::Contraquorum,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SemitopologyError {
    #[error("a semitopology needs at least one point")]
    NoPoints,
    #[error("at most {MAX_POINTS} points are supported, got {0}")]
    TooManyPoints(usize),
    #[error("duplicate point {0:?}")]
    DuplicatePoint(String),
    #[error("unknown point {0:?}")]
    UnknownPoint(String),
    #[error("threshold must satisfy 1 <= q <= n (got n = {n}, q = {q})")]
    BadThreshold { n: usize, q: usize },
    #[error("predicate has {got} entries but the space has {expected} points")]
    PredicateArity { expected: usize, got: usize },
}

/// Compare identifiers so that numeric suffixes sort numerically:
/// `p2 < p10`.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn split(s: &str) -> (&str, Option<u64>) {
        let digits = s.bytes().rev().take_while(|b| b.is_ascii_digit()).count();
        let (head, tail) = s.split_at(s.len() - digits);
        (head, tail.parse().ok())
    }
    let (ha, na) = split(a);
    let (hb, nb) = split(b);
    ha.cmp(hb).then(na.cmp(&nb)).then(a.cmp(b))
}

/// A finite semitopology, stored by basis.
///
/// Points are kept in natural order and the basis is deduplicated and
/// sorted, so iteration is deterministic. The full point set is always open:
/// if the basis does not cover every point it is added as a generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Semitopology {
    points: Vec<String>,
    basis: Vec<PointSet>,
}

impl Semitopology {
    pub fn new<S: AsRef<str>>(points: &[S], basis: &[Vec<S>]) -> Result<Self, SemitopologyError> {
        let mut names: Vec<String> = points.iter().map(|p| p.as_ref().to_string()).collect();
        if names.is_empty() {
            return Err(SemitopologyError::NoPoints);
        }
        if names.len() > MAX_POINTS {
            return Err(SemitopologyError::TooManyPoints(names.len()));
        }
        names.sort_by(|a, b| natural_cmp(a, b));
        for w in names.windows(2) {
            if w[0] == w[1] {
                return Err(SemitopologyError::DuplicatePoint(w[0].clone()));
            }
        }
        let index_of =
            |p: &str| names.iter().position(|q| q == p).ok_or_else(|| SemitopologyError::UnknownPoint(p.to_string()));
        let mut sets = Vec::with_capacity(basis.len());
        for open in basis {
            let mut set = PointSet::EMPTY;
            for p in open {
                set.insert(index_of(p.as_ref())?);
            }
            sets.push(set);
        }
        Ok(Self::from_parts(names, sets))
    }

    fn from_parts(points: Vec<String>, mut basis: Vec<PointSet>) -> Self {
        let full = PointSet::full(points.len());
        let cover = basis.iter().fold(PointSet::EMPTY, |acc, s| acc.union(*s));
        if cover != full {
            basis.push(full);
        }
        basis.sort_by(|a, b| a.lex_cmp(*b));
        basis.dedup();
        Semitopology { points, basis }
    }

    /// `n` points `p0..p(n-1)`; the basis is every subset of size exactly
    /// `q`, so the opens are the empty set and every set of size at least `q`.
    pub fn from_threshold(n: usize, q: usize) -> Result<Self, SemitopologyError> {
        if q == 0 || q > n {
            return Err(SemitopologyError::BadThreshold { n, q });
        }
        if n > MAX_POINTS {
            return Err(SemitopologyError::TooManyPoints(n));
        }
        let points = (0..n).map(|i| format!("p{i}")).collect();
        let mut basis = Vec::new();
        let mut combo: Vec<usize> = (0..q).collect();
        loop {
            basis.push(PointSet::from_indices(combo.iter().copied()));
            // next q-combination of 0..n in lexicographic order
            let mut i = q;
            loop {
                if i == 0 {
                    return Ok(Self::from_parts(points, basis));
                }
                i -= 1;
                if combo[i] != i + n - q {
                    break;
                }
            }
            combo[i] += 1;
            for j in i + 1..q {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn full(&self) -> PointSet {
        PointSet::full(self.points.len())
    }

    pub fn point_index(&self, name: &str) -> Option<usize> {
        self.points.iter().position(|p| p == name)
    }

    /// Basis members, including the empty set if it was given one.
    pub fn basis(&self) -> &[PointSet] {
        &self.basis
    }

    /// Nonempty basis opens, in deterministic order.
    pub fn nonempty_basis_opens(&self) -> Vec<PointSet> {
        self.basis.iter().copied().filter(|s| !s.is_empty()).collect()
    }

    pub fn names_of(&self, set: PointSet) -> Vec<String> {
        set.iter().map(|i| self.points[i].clone()).collect()
    }

    pub fn set_of<S: AsRef<str>>(&self, names: &[S]) -> Result<PointSet, SemitopologyError> {
        let mut set = PointSet::EMPTY;
        for n in names {
            let i =
                self.point_index(n.as_ref()).ok_or_else(|| SemitopologyError::UnknownPoint(n.as_ref().to_string()))?;
            set.insert(i);
        }
        Ok(set)
    }

    /// A set is open when it is the union of the basis sets it contains.
    pub fn is_open(&self, set: PointSet) -> Result<bool, SemitopologyError> {
        if !set.is_subset(self.full()) {
            return Err(SemitopologyError::UnknownPoint(format!("index set {:#b}", set.bits())));
        }
        let inner = self.basis.iter().filter(|b| b.is_subset(set)).fold(PointSet::EMPTY, |acc, b| acc.union(*b));
        Ok(inner == set)
    }

    /// The largest number of points outside some quorum.
    pub fn coquorum_bound(&self) -> usize {
        let smallest = self.nonempty_basis_opens().iter().map(|s| s.len()).min().unwrap_or(self.len());
        self.len() - smallest
    }

    /// Evaluate a spatial modality over a point predicate given as one truth
    /// value per point, in point order.
    pub fn eval_modality(&self, m: SpatialModality, f: &[TruthValue]) -> TruthValue {
        debug_assert_eq!(f.len(), self.points.len());
        match m {
            SpatialModality::Everywhere => fold_and(f.iter().copied()),
            SpatialModality::Somewhere => fold_or(f.iter().copied()),
            SpatialModality::Quorum => {
                fold_or(self.basis.iter().filter(|o| !o.is_empty()).map(|o| fold_and(o.iter().map(|p| f[p]))))
            }
            SpatialModality::Contraquorum => {
                fold_and(self.basis.iter().filter(|o| !o.is_empty()).map(|o| fold_or(o.iter().map(|p| f[p]))))
            }
        }
    }

    /// As [`eval_modality`](Self::eval_modality) with arity checking.
    pub fn eval_predicate(&self, m: SpatialModality, f: &PointPredicate) -> Result<TruthValue, SemitopologyError> {
        if f.0.len() != self.points.len() {
            return Err(SemitopologyError::PredicateArity { expected: self.points.len(), got: f.0.len() });
        }
        Ok(self.eval_modality(m, &f.0))
    }

    /// Any `n` nonempty opens share a point. Checking basis generators is
    /// enough, since every nonempty open contains one.
    pub fn is_n_twined(&self, n: usize) -> bool {
        let opens = self.nonempty_basis_opens();
        if n == 0 {
            return !self.points.is_empty();
        }
        // Repetition never shrinks an intersection, so multisets of size n
        // reduce to sets of at most n distinct generators.
        fn go(opens: &[PointSet], start: usize, acc: PointSet, left: usize) -> bool {
            if acc.is_empty() {
                return false;
            }
            if left == 0 {
                return true;
            }
            (start..opens.len()).all(|i| go(opens, i + 1, acc.intersection(opens[i]), left - 1))
        }
        go(&opens, 0, self.full(), n)
    }
}

impl fmt::Display for Semitopology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}} with basis [", self.points.join(", "))?;
        for (i, o) in self.basis.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{{{}}}", self.names_of(*o).join(", "))?;
        }
        write!(f, "]")
    }
}

/// A three-valued predicate on points, one value per point in point order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointPredicate(pub Vec<TruthValue>);

impl PointPredicate {
    pub fn pointwise(&self, other: &Self, op: impl Fn(TruthValue, TruthValue) -> TruthValue) -> Self {
        PointPredicate(self.0.iter().zip(&other.0).map(|(a, b)| op(*a, *b)).collect())
    }

    pub fn map(&self, op: impl Fn(TruthValue) -> TruthValue) -> Self {
        PointPredicate(self.0.iter().map(|a| op(*a)).collect())
    }

    /// Every predicate over `n` points, lexicographically with the first
    /// point most significant.
    pub fn enumerate(n: usize) -> impl Iterator<Item = PointPredicate> {
        let total = 3usize.pow(n as u32);
        (0..total).map(move |mut k| {
            let mut v = vec![TruthValue::F; n];
            for slot in v.iter_mut().rev() {
                *slot = TruthValue::from_index(k % 3);
                k /= 3;
            }
            PointPredicate(v)
        })
    }
}
