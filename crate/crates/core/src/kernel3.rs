//! The three-element truth lattice `F < B < T` and its connectives.
//!
//! `B` reads as "both": the value a byzantine participant takes. A truth value
//! is *valid* when it is `T` or `B`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An element of the lattice `F < B < T`.
///
/// The derived ordering follows declaration order, so `Ord` is the lattice
/// order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TruthValue {
    F,
    B,
    T,
}

pub use TruthValue::{B, F, T};

impl TruthValue {
    pub const ALL: [TruthValue; 3] = [F, B, T];

    pub fn from_bool(b: bool) -> Self {
        if b {
            T
        } else {
            F
        }
    }

    pub fn as_char(self) -> char {
        match self {
            F => 'F',
            B => 'B',
            T => 'T',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'F' => Some(F),
            'B' => Some(B),
            'T' => Some(T),
            _ => None,
        }
    }

    /// Index in lattice order, `F = 0`.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    pub fn meet(self, other: Self) -> Self {
        self.min(other)
    }

    pub fn join(self, other: Self) -> Self {
        self.max(other)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(self) -> Self {
        match self {
            T => F,
            B => B,
            F => T,
        }
    }

    pub fn is_valid(self) -> bool {
        is_valid(self)
    }
}

impl fmt::Display for TruthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a truth value: {0:?} (expected T, B or F)")]
pub struct ParseTruthValueError(pub String);

impl FromStr for TruthValue {
    type Err = ParseTruthValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        match (chars.next().and_then(TruthValue::from_char), chars.next()) {
            (Some(tv), None) => Ok(tv),
            _ => Err(ParseTruthValueError(s.to_string())),
        }
    }
}

impl Serialize for TruthValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(match self {
            F => "F",
            B => "B",
            T => "T",
        })
    }
}

impl<'de> Deserialize<'de> for TruthValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Binary connectives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryConn {
    And,
    Or,
    /// `a -> b`, equal to `!a | b`.
    WeakImp,
    /// `a => b`, equal to `a -> %T b`.
    StrongImp,
    /// Identity of truth values; two-valued.
    Iff,
    Xor,
}

impl BinaryConn {
    pub const ALL: [BinaryConn; 6] =
        [BinaryConn::And, BinaryConn::Or, BinaryConn::WeakImp, BinaryConn::StrongImp, BinaryConn::Iff, BinaryConn::Xor];
}

/// Unary connectives: negation and the five modalities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryConn {
    Neg,
    ModT,
    ModB,
    ModF,
    ModTB,
    ModTF,
}

impl UnaryConn {
    pub const ALL: [UnaryConn; 6] =
        [UnaryConn::Neg, UnaryConn::ModT, UnaryConn::ModB, UnaryConn::ModF, UnaryConn::ModTB, UnaryConn::ModTF];
}

// Rows are indexed by the left argument, columns by the right, both in
// lattice order F, B, T.
const WEAK_IMP: [[TruthValue; 3]; 3] = [
    // F -> _
    [T, T, T],
    // B -> _
    [B, B, T],
    // T -> _
    [F, B, T],
];

const STRONG_IMP: [[TruthValue; 3]; 3] = [[T, T, T], [B, B, T], [F, F, T]];

const IFF: [[TruthValue; 3]; 3] = [[T, F, F], [F, T, F], [F, F, T]];

const XOR: [[TruthValue; 3]; 3] = [[F, B, T], [B, B, B], [T, B, F]];

pub fn apply_binary(conn: BinaryConn, a: TruthValue, b: TruthValue) -> TruthValue {
    let (i, j) = (a.index(), b.index());
    match conn {
        BinaryConn::And => a.meet(b),
        BinaryConn::Or => a.join(b),
        BinaryConn::WeakImp => WEAK_IMP[i][j],
        BinaryConn::StrongImp => STRONG_IMP[i][j],
        BinaryConn::Iff => IFF[i][j],
        BinaryConn::Xor => XOR[i][j],
    }
}

pub fn apply_unary(conn: UnaryConn, a: TruthValue) -> TruthValue {
    match conn {
        UnaryConn::Neg => a.neg(),
        UnaryConn::ModT => TruthValue::from_bool(a == T),
        UnaryConn::ModB => TruthValue::from_bool(a == B),
        UnaryConn::ModF => TruthValue::from_bool(a == F),
        UnaryConn::ModTB => TruthValue::from_bool(a != F),
        UnaryConn::ModTF => TruthValue::from_bool(a != B),
    }
}

/// Lattice order `a <= b`.
pub fn leq(a: TruthValue, b: TruthValue) -> bool {
    a <= b
}

/// The validity judgement: `T` and `B` are valid, `F` is not.
pub fn is_valid(a: TruthValue) -> bool {
    a != F
}

/// Big meet. The empty meet is `T`.
pub fn fold_and<I: IntoIterator<Item = TruthValue>>(xs: I) -> TruthValue {
    let mut acc = T;
    for x in xs {
        acc = acc.meet(x);
        if acc == F {
            break;
        }
    }
    acc
}

/// Big join. The empty join is `F`.
pub fn fold_or<I: IntoIterator<Item = TruthValue>>(xs: I) -> TruthValue {
    let mut acc = F;
    for x in xs {
        acc = acc.join(x);
        if acc == T {
            break;
        }
    }
    acc
}

/// Render a sequence of truth values as a compact string such as `"TTBF"`.
pub fn render(values: &[TruthValue]) -> String {
    values.iter().map(|v| v.as_char()).collect()
}

/// Parse a compact string such as `"TTBF"`.
pub fn parse_row(s: &str) -> Result<Vec<TruthValue>, ParseTruthValueError> {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| TruthValue::from_char(c).ok_or_else(|| ParseTruthValueError(c.to_string())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stated_entries() {
        assert_eq!(apply_binary(BinaryConn::And, T, B), B);
        assert_eq!(apply_binary(BinaryConn::WeakImp, F, B), T);
        assert_eq!(apply_binary(BinaryConn::StrongImp, T, B), F);
        assert_eq!(apply_binary(BinaryConn::Xor, B, T), B);
        for x in TruthValue::ALL {
            assert_eq!(apply_binary(BinaryConn::And, x, x), x);
        }
        assert_eq!(apply_unary(UnaryConn::Neg, B), B);
        assert_eq!(apply_unary(UnaryConn::ModT, B), F);
        assert_eq!(apply_unary(UnaryConn::ModTF, F), T);
    }

    #[test]
    fn order_and_validity() {
        assert!(leq(F, B));
        assert!(!leq(T, B));
        for x in TruthValue::ALL {
            assert!(leq(x, x));
        }
        assert!(is_valid(T));
        assert!(is_valid(B));
        assert!(!is_valid(F));
    }

    #[test]
    fn folds() {
        assert_eq!(fold_and([T, B, T]), B);
        assert_eq!(fold_or([F, F]), F);
        assert_eq!(fold_and([]), T);
        assert_eq!(fold_or([]), F);
    }

    #[test]
    fn text_form() {
        for x in TruthValue::ALL {
            assert_eq!(x.to_string().parse::<TruthValue>().unwrap(), x);
        }
        assert!("X".parse::<TruthValue>().is_err());
        assert!("TT".parse::<TruthValue>().is_err());
        assert_eq!(parse_row("TB F").unwrap(), vec![T, B, F]);
        assert_eq!(serde_json::to_string(&B).unwrap(), "\"B\"");
    }
}
