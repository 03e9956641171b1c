//! Formula syntax: the AST, desugaring to the core constructors, value
//! substitution, and a parser/printer for the ASCII surface grammar.
//!
//! Surface grammar, loosest binding first:
//!
//! ```text
//! formula  := quant | imp
//! quant    := ("exists" | "exists01" | "exists1" | "forall") VAR "." formula
//! imp      := xor (("->" | "=>" | "<->") imp)?          right-associative
//! xor      := or ("(+)" or)*
//! or       := and ("|" and)*
//! and      := unary ("&" unary)*
//! unary    := ("!" | "%T" | "%B" | "%F" | "%TB" | "%TF" | "[Q]" | "[C]" | "[E]" | "[S]") unary
//!           | quant | atom
//! atom     := "bot" | "(" formula ")" | PRED "(" term ")" | term "==" term
//!           | "correct{" PRED ("," PRED)* "}" | "incorrect{" PRED ("," PRED)* "}"
//! term     := VAR | "'" VALUE
//! ```
//!
//! Quantifier bodies extend as far right as possible.

use std::collections::BTreeSet;
use std::fmt;

use crate::kernel3::{BinaryConn, UnaryConn};
use crate::semitopo::SpatialModality;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Val(String),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(name.to_string())
    }

    pub fn val(name: &str) -> Self {
        Term::Val(name.to_string())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(a) => write!(f, "{a}"),
            Term::Val(v) => write!(f, "'{v}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Exists,
    /// At most one witness.
    ExistsAffine,
    /// Exactly one witness.
    ExistsUnique,
    Forall,
}

impl Quantifier {
    pub const ALL: [Quantifier; 4] =
        [Quantifier::Exists, Quantifier::ExistsAffine, Quantifier::ExistsUnique, Quantifier::Forall];

    fn keyword(self) -> &'static str {
        match self {
            Quantifier::Exists => "exists",
            Quantifier::ExistsAffine => "exists01",
            Quantifier::ExistsUnique => "exists1",
            Quantifier::Forall => "forall",
        }
    }
}

/// A formula. The core constructors are `Bot`, `Pred`, `Eq`, `Neg`, `ModTF`,
/// `And`, `Quorum`, `Everywhere`, `Exists` and `ExistsAffine`; everything
/// else is sugar that [`desugar`] eliminates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Bot,
    Pred(String, Term),
    Eq(Term, Term),
    Unary(UnaryConn, Box<Formula>),
    Binary(BinaryConn, Box<Formula>, Box<Formula>),
    Spatial(SpatialModality, Box<Formula>),
    Quant(Quantifier, String, Box<Formula>),
    /// Correct on every listed predicate: `forall a. %TF P(a)` for each.
    Correct(Vec<String>),
    /// Byzantine on every listed predicate: `forall a. %B P(a)` for each.
    Incorrect(Vec<String>),
}

impl Formula {
    pub fn pred(name: &str, t: Term) -> Self {
        Formula::Pred(name.to_string(), t)
    }

    pub fn unary(c: UnaryConn, a: Formula) -> Self {
        Formula::Unary(c, Box::new(a))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(a: Formula) -> Self {
        Self::unary(UnaryConn::Neg, a)
    }

    pub fn binary(c: BinaryConn, a: Formula, b: Formula) -> Self {
        Formula::Binary(c, Box::new(a), Box::new(b))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Self::binary(BinaryConn::And, a, b)
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Self::binary(BinaryConn::Or, a, b)
    }

    pub fn spatial(m: SpatialModality, a: Formula) -> Self {
        Formula::Spatial(m, Box::new(a))
    }

    pub fn quant(q: Quantifier, var: &str, body: Formula) -> Self {
        Formula::Quant(q, var.to_string(), Box::new(body))
    }

    /// True when the tree uses only core constructors.
    pub fn is_core(&self) -> bool {
        match self {
            Formula::Bot | Formula::Pred(..) | Formula::Eq(..) => true,
            Formula::Unary(c, a) => matches!(c, UnaryConn::Neg | UnaryConn::ModTF) && a.is_core(),
            Formula::Binary(c, a, b) => *c == BinaryConn::And && a.is_core() && b.is_core(),
            Formula::Spatial(m, a) => matches!(m, SpatialModality::Quorum | SpatialModality::Everywhere) && a.is_core(),
            Formula::Quant(q, _, a) => matches!(q, Quantifier::Exists | Quantifier::ExistsAffine) && a.is_core(),
            Formula::Correct(_) | Formula::Incorrect(_) => false,
        }
    }

    /// Predicate symbols mentioned anywhere, including inside `correct{..}`.
    pub fn predicates(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_predicates(&mut out);
        out
    }

    fn collect_predicates(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Bot | Formula::Eq(..) => {}
            Formula::Pred(p, _) => {
                out.insert(p.clone());
            }
            Formula::Unary(_, a) | Formula::Spatial(_, a) | Formula::Quant(_, _, a) => a.collect_predicates(out),
            Formula::Binary(_, a, b) => {
                a.collect_predicates(out);
                b.collect_predicates(out);
            }
            Formula::Correct(ps) | Formula::Incorrect(ps) => out.extend(ps.iter().cloned()),
        }
    }

    /// Value literals mentioned anywhere.
    pub fn values(&self) -> BTreeSet<String> {
        fn term(t: &Term, out: &mut BTreeSet<String>) {
            if let Term::Val(v) = t {
                out.insert(v.clone());
            }
        }
        fn go(f: &Formula, out: &mut BTreeSet<String>) {
            match f {
                Formula::Bot | Formula::Correct(_) | Formula::Incorrect(_) => {}
                Formula::Pred(_, t) => term(t, out),
                Formula::Eq(s, t) => {
                    term(s, out);
                    term(t, out);
                }
                Formula::Unary(_, a) | Formula::Spatial(_, a) | Formula::Quant(_, _, a) => go(a, out),
                Formula::Binary(_, a, b) => {
                    go(a, out);
                    go(b, out);
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut out);
        out
    }

    pub fn size(&self) -> usize {
        match self {
            Formula::Bot | Formula::Pred(..) | Formula::Eq(..) | Formula::Correct(_) | Formula::Incorrect(_) => 1,
            Formula::Unary(_, a) | Formula::Spatial(_, a) | Formula::Quant(_, _, a) => 1 + a.size(),
            Formula::Binary(_, a, b) => 1 + a.size() + b.size(),
        }
    }
}

/// Replace every free occurrence of variable `var` by the value `value`.
pub fn substitute(phi: &Formula, var: &str, value: &str) -> Formula {
    let term = |t: &Term| match t {
        Term::Var(a) if a == var => Term::Val(value.to_string()),
        other => other.clone(),
    };
    match phi {
        Formula::Bot | Formula::Correct(_) | Formula::Incorrect(_) => phi.clone(),
        Formula::Pred(p, t) => Formula::Pred(p.clone(), term(t)),
        Formula::Eq(s, t) => Formula::Eq(term(s), term(t)),
        Formula::Unary(c, a) => Formula::unary(*c, substitute(a, var, value)),
        Formula::Binary(c, a, b) => Formula::binary(*c, substitute(a, var, value), substitute(b, var, value)),
        Formula::Spatial(m, a) => Formula::spatial(*m, substitute(a, var, value)),
        Formula::Quant(q, bound, a) => {
            if bound == var {
                phi.clone()
            } else {
                Formula::Quant(*q, bound.clone(), Box::new(substitute(a, var, value)))
            }
        }
    }
}

pub fn free_vars(phi: &Formula) -> BTreeSet<String> {
    fn term(t: &Term, bound: &[String], out: &mut BTreeSet<String>) {
        if let Term::Var(a) = t {
            if !bound.contains(a) {
                out.insert(a.clone());
            }
        }
    }
    fn go(f: &Formula, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match f {
            Formula::Bot | Formula::Correct(_) | Formula::Incorrect(_) => {}
            Formula::Pred(_, t) => term(t, bound, out),
            Formula::Eq(s, t) => {
                term(s, bound, out);
                term(t, bound, out);
            }
            Formula::Unary(_, a) | Formula::Spatial(_, a) => go(a, bound, out),
            Formula::Binary(_, a, b) => {
                go(a, bound, out);
                go(b, bound, out);
            }
            Formula::Quant(_, v, a) => {
                bound.push(v.clone());
                go(a, bound, out);
                bound.pop();
            }
        }
    }
    let mut out = BTreeSet::new();
    go(phi, &mut Vec::new(), &mut out);
    out
}

/// Rewrite into core constructors only.
pub fn desugar(phi: &Formula) -> Formula {
    use BinaryConn as Bc;
    use Formula as Fm;
    use UnaryConn as Uc;

    let neg = Formula::neg;
    let and = Formula::and;
    let modtf = |a: Formula| Formula::unary(Uc::ModTF, a);
    // modT x = modTF x & x, on an already desugared x
    let modt = |a: Formula| and(modtf(a.clone()), a);
    // x | y = !(!x & !y), on already desugared operands
    let or = |a: Formula, b: Formula| neg(and(neg(a), neg(b)));

    match phi {
        Fm::Bot | Fm::Pred(..) | Fm::Eq(..) => phi.clone(),
        Fm::Unary(c, a) => {
            let a = desugar(a);
            match c {
                Uc::Neg => neg(a),
                Uc::ModTF => modtf(a),
                Uc::ModT => modt(a),
                Uc::ModB => neg(modtf(a)),
                Uc::ModF => modt(neg(a)),
                Uc::ModTB => neg(modt(neg(a))),
            }
        }
        Fm::Binary(c, a, b) => {
            let (a, b) = (desugar(a), desugar(b));
            match c {
                Bc::And => and(a, b),
                Bc::Or => or(a, b),
                Bc::WeakImp => or(neg(a), b),
                Bc::StrongImp => or(neg(a), modt(b)),
                Bc::Xor => or(and(a.clone(), neg(b.clone())), and(neg(a), b)),
                Bc::Iff => {
                    let both_t = and(modt(a.clone()), modt(b.clone()));
                    let both_b = and(neg(modtf(a.clone())), neg(modtf(b.clone())));
                    let both_f = and(modt(neg(a)), modt(neg(b)));
                    or(or(both_t, both_b), both_f)
                }
            }
        }
        Fm::Spatial(m, a) => {
            let a = desugar(a);
            match m {
                SpatialModality::Quorum | SpatialModality::Everywhere => Formula::spatial(*m, a),
                SpatialModality::Contraquorum => neg(Formula::spatial(SpatialModality::Quorum, neg(a))),
                SpatialModality::Somewhere => neg(Formula::spatial(SpatialModality::Everywhere, neg(a))),
            }
        }
        Fm::Quant(q, v, a) => {
            let a = desugar(a);
            match q {
                Quantifier::Exists | Quantifier::ExistsAffine => Formula::quant(*q, v, a),
                Quantifier::Forall => neg(Formula::quant(Quantifier::Exists, v, neg(a))),
                Quantifier::ExistsUnique => and(
                    Formula::quant(Quantifier::ExistsAffine, v, a.clone()),
                    Formula::quant(Quantifier::Exists, v, a),
                ),
            }
        }
        Fm::Correct(ps) | Fm::Incorrect(ps) => {
            let modality = if matches!(phi, Fm::Correct(_)) { Uc::ModTF } else { Uc::ModB };
            let one = |p: &String| {
                desugar(&Formula::quant(
                    Quantifier::Forall,
                    "a",
                    Formula::unary(modality, Formula::pred(p, Term::var("a"))),
                ))
            };
            let mut it = ps.iter();
            match it.next() {
                // correct{} asserts nothing
                None => neg(Fm::Bot),
                Some(first) => it.fold(one(first), |acc, p| and(acc, one(p))),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Printing

const PREC_QUANT: u8 = 0;
const PREC_IMP: u8 = 1;
const PREC_XOR: u8 = 2;
const PREC_OR: u8 = 3;
const PREC_AND: u8 = 4;
const PREC_UNARY: u8 = 5;
const PREC_ATOM: u8 = 6;

fn precedence(f: &Formula) -> u8 {
    match f {
        Formula::Quant(..) => PREC_QUANT,
        Formula::Binary(c, ..) => match c {
            BinaryConn::WeakImp | BinaryConn::StrongImp | BinaryConn::Iff => PREC_IMP,
            BinaryConn::Xor => PREC_XOR,
            BinaryConn::Or => PREC_OR,
            BinaryConn::And => PREC_AND,
        },
        Formula::Unary(..) | Formula::Spatial(..) => PREC_UNARY,
        _ => PREC_ATOM,
    }
}

fn binary_symbol(c: BinaryConn) -> &'static str {
    match c {
        BinaryConn::And => "&",
        BinaryConn::Or => "|",
        BinaryConn::WeakImp => "->",
        BinaryConn::StrongImp => "=>",
        BinaryConn::Iff => "<->",
        BinaryConn::Xor => "(+)",
    }
}

fn unary_symbol(c: UnaryConn) -> &'static str {
    match c {
        UnaryConn::Neg => "!",
        UnaryConn::ModT => "%T ",
        UnaryConn::ModB => "%B ",
        UnaryConn::ModF => "%F ",
        UnaryConn::ModTB => "%TB ",
        UnaryConn::ModTF => "%TF ",
    }
}

fn spatial_symbol(m: SpatialModality) -> &'static str {
    match m {
        SpatialModality::Quorum => "[Q] ",
        SpatialModality::Contraquorum => "[C] ",
        SpatialModality::Everywhere => "[E] ",
        SpatialModality::Somewhere => "[S] ",
    }
}

/// `tail` is true when nothing follows the formula in the enclosing text, so
/// an unparenthesised quantifier cannot capture anything extra.
fn write_formula(out: &mut String, f: &Formula, min_prec: u8, tail: bool) {
    let p = precedence(f);
    if p < min_prec && !(p == PREC_QUANT && tail) {
        out.push('(');
        write_inner(out, f, true);
        out.push(')');
    } else {
        write_inner(out, f, tail);
    }
}

fn write_inner(out: &mut String, f: &Formula, tail: bool) {
    match f {
        Formula::Bot => out.push_str("bot"),
        Formula::Pred(p, t) => {
            out.push_str(p);
            out.push('(');
            out.push_str(&t.to_string());
            out.push(')');
        }
        Formula::Eq(s, t) => {
            out.push_str(&format!("{s} == {t}"));
        }
        Formula::Correct(ps) | Formula::Incorrect(ps) => {
            out.push_str(if matches!(f, Formula::Correct(_)) { "correct{" } else { "incorrect{" });
            out.push_str(&ps.join(", "));
            out.push('}');
        }
        Formula::Unary(c, a) => {
            out.push_str(unary_symbol(*c));
            write_formula(out, a, PREC_UNARY, tail);
        }
        Formula::Spatial(m, a) => {
            out.push_str(spatial_symbol(*m));
            write_formula(out, a, PREC_UNARY, tail);
        }
        Formula::Quant(q, v, a) => {
            out.push_str(q.keyword());
            out.push(' ');
            out.push_str(v);
            out.push_str(". ");
            write_formula(out, a, PREC_QUANT, tail);
        }
        Formula::Binary(c, a, b) => {
            let p = precedence(f);
            let (left_min, right_min) = if p == PREC_IMP { (p + 1, p) } else { (p, p + 1) };
            write_formula(out, a, left_min, false);
            out.push(' ');
            out.push_str(binary_symbol(*c));
            out.push(' ');
            write_formula(out, b, right_min, tail);
        }
    }
}

/// Canonical text; `parse(&print(f)) == Ok(f)`.
pub fn print(phi: &Formula) -> String {
    let mut out = String::new();
    write_formula(&mut out, phi, PREC_QUANT, true);
    out
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print(self))
    }
}

// ---------------------------------------------------------------------------
// Lexing and parsing

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parse error at offset {position}: expected {expected}, found {found}")]
pub struct ParseError {
    pub position: usize,
    pub expected: String,
    pub found: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Lit(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Dot,
    Bang,
    Amp,
    Pipe,
    XorOp,
    Arrow,
    FatArrow,
    IffOp,
    EqEq,
    Modal(UnaryConn),
    Spatial(SpatialModality),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Lit(s) => write!(f, "value `'{s}`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Dot => write!(f, "`.`"),
            Tok::Bang => write!(f, "`!`"),
            Tok::Amp => write!(f, "`&`"),
            Tok::Pipe => write!(f, "`|`"),
            Tok::XorOp => write!(f, "`(+)`"),
            Tok::Arrow => write!(f, "`->`"),
            Tok::FatArrow => write!(f, "`=>`"),
            Tok::IffOp => write!(f, "`<->`"),
            Tok::EqEq => write!(f, "`==`"),
            Tok::Modal(c) => write!(f, "`{}`", unary_symbol(*c).trim()),
            Tok::Spatial(m) => write!(f, "`{}`", spatial_symbol(*m).trim()),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

const KEYWORDS: [&str; 7] = ["bot", "exists", "exists01", "exists1", "forall", "correct", "incorrect"];

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let at = |i: usize| chars.get(i).map(|(_, c)| *c);
    let offset = |i: usize| chars.get(i).map(|(o, _)| *o).unwrap_or(text.len());
    let err = |i: usize, expected: &str| ParseError {
        position: offset(i),
        expected: expected.to_string(),
        found: at(i).map(|c| format!("`{c}`")).unwrap_or_else(|| "end of input".into()),
    };
    let mut toks = Vec::new();
    let mut i = 0;
    while let Some(c) = at(i) {
        let start = offset(i);
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let simple = match c {
            ')' => Some(Tok::RParen),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ',' => Some(Tok::Comma),
            '.' => Some(Tok::Dot),
            '!' => Some(Tok::Bang),
            '&' => Some(Tok::Amp),
            '|' => Some(Tok::Pipe),
            _ => None,
        };
        if let Some(t) = simple {
            toks.push((start, t));
            i += 1;
            continue;
        }
        match c {
            '(' => {
                if at(i + 1) == Some('+') && at(i + 2) == Some(')') {
                    toks.push((start, Tok::XorOp));
                    i += 3;
                } else {
                    toks.push((start, Tok::LParen));
                    i += 1;
                }
            }
            '-' if at(i + 1) == Some('>') => {
                toks.push((start, Tok::Arrow));
                i += 2;
            }
            '=' if at(i + 1) == Some('>') => {
                toks.push((start, Tok::FatArrow));
                i += 2;
            }
            '=' if at(i + 1) == Some('=') => {
                toks.push((start, Tok::EqEq));
                i += 2;
            }
            '<' if at(i + 1) == Some('-') && at(i + 2) == Some('>') => {
                toks.push((start, Tok::IffOp));
                i += 3;
            }
            '%' => {
                let mut j = i + 1;
                let mut word = String::new();
                while let Some(c) = at(j).filter(|c| matches!(c, 'T' | 'B' | 'F')) {
                    word.push(c);
                    j += 1;
                }
                let conn = match word.as_str() {
                    "T" => UnaryConn::ModT,
                    "B" => UnaryConn::ModB,
                    "F" => UnaryConn::ModF,
                    "TB" => UnaryConn::ModTB,
                    "TF" => UnaryConn::ModTF,
                    _ => return Err(err(i + 1, "one of %T %B %F %TB %TF")),
                };
                toks.push((start, Tok::Modal(conn)));
                i = j;
            }
            '[' => {
                let m = match at(i + 1) {
                    Some('Q') => SpatialModality::Quorum,
                    Some('C') => SpatialModality::Contraquorum,
                    Some('E') => SpatialModality::Everywhere,
                    Some('S') => SpatialModality::Somewhere,
                    _ => return Err(err(i + 1, "one of [Q] [C] [E] [S]")),
                };
                if at(i + 2) != Some(']') {
                    return Err(err(i + 2, "`]`"));
                }
                toks.push((start, Tok::Spatial(m)));
                i += 3;
            }
            '\'' => {
                let mut j = i + 1;
                let mut word = String::new();
                while let Some(c) = at(j).filter(|c| is_ident_char(*c)) {
                    word.push(c);
                    j += 1;
                }
                if word.is_empty() {
                    return Err(err(i + 1, "value name after `'`"));
                }
                toks.push((start, Tok::Lit(word)));
                i = j;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                let mut word = String::new();
                while let Some(c) = at(j).filter(|c| is_ident_char(*c)) {
                    word.push(c);
                    j += 1;
                }
                // trailing primes, as in v', unless they start a value literal
                while at(j) == Some('\'') && !at(j + 1).is_some_and(is_ident_char) {
                    word.push('\'');
                    j += 1;
                }
                toks.push((start, Tok::Ident(word)));
                i = j;
            }
            _ => return Err(err(i, "a formula token")),
        }
    }
    toks.push((text.len(), Tok::Eof));
    Ok(toks)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ParseError {
        let (position, tok) = &self.toks[self.pos];
        ParseError { position: *position, expected: expected.to_string(), found: tok.to_string() }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn ident(&mut self, expected: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(expected)),
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        self.implication()
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let left = self.xor()?;
        let conn = match self.peek() {
            Tok::Arrow => BinaryConn::WeakImp,
            Tok::FatArrow => BinaryConn::StrongImp,
            Tok::IffOp => BinaryConn::Iff,
            _ => return Ok(left),
        };
        self.bump();
        let right = self.implication()?;
        Ok(Formula::binary(conn, left, right))
    }

    fn left_assoc(
        &mut self,
        op: Tok,
        conn: BinaryConn,
        next: fn(&mut Self) -> Result<Formula, ParseError>,
    ) -> Result<Formula, ParseError> {
        let mut acc = next(self)?;
        while *self.peek() == op {
            self.bump();
            let rhs = next(self)?;
            acc = Formula::binary(conn, acc, rhs);
        }
        Ok(acc)
    }

    fn xor(&mut self) -> Result<Formula, ParseError> {
        self.left_assoc(Tok::XorOp, BinaryConn::Xor, Self::or)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        self.left_assoc(Tok::Pipe, BinaryConn::Or, Self::and)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        self.left_assoc(Tok::Amp, BinaryConn::And, Self::unary)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(Formula::neg(self.unary()?))
            }
            Tok::Modal(c) => {
                self.bump();
                Ok(Formula::unary(c, self.unary()?))
            }
            Tok::Spatial(m) => {
                self.bump();
                Ok(Formula::spatial(m, self.unary()?))
            }
            Tok::Ident(w) if quantifier_keyword(&w).is_some() => {
                let q = quantifier_keyword(&w).unwrap();
                self.bump();
                let var = self.ident("a bound variable name")?;
                self.expect(Tok::Dot, "`.` after the bound variable")?;
                let body = self.formula()?;
                Ok(Formula::Quant(q, var, Box::new(body)))
            }
            _ => self.atom(),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Lit(v) => {
                self.bump();
                Ok(Term::Val(v))
            }
            Tok::Ident(_) => Ok(Term::Var(self.ident("a variable or 'value")?)),
            _ => Err(self.error("a variable or 'value")),
        }
    }

    fn pred_list(&mut self) -> Result<Vec<String>, ParseError> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut out = vec![self.ident("a predicate name")?];
        while *self.peek() == Tok::Comma {
            self.bump();
            out.push(self.ident("a predicate name")?);
        }
        self.expect(Tok::RBrace, "`,` or `}`")?;
        Ok(out)
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::Ident(w) if w == "bot" => {
                self.bump();
                Ok(Formula::Bot)
            }
            Tok::Ident(w) if w == "correct" || w == "incorrect" => {
                self.bump();
                let ps = self.pred_list()?;
                Ok(if w == "correct" { Formula::Correct(ps) } else { Formula::Incorrect(ps) })
            }
            Tok::Ident(_) if *self.peek_at(1) == Tok::LParen => {
                let p = self.ident("a predicate name")?;
                self.bump();
                let t = self.term()?;
                self.expect(Tok::RParen, "`)` after the predicate argument")?;
                Ok(Formula::Pred(p, t))
            }
            Tok::Ident(_) | Tok::Lit(_) => {
                let s = self.term()?;
                self.expect(Tok::EqEq, "`==` or `(`")?;
                let t = self.term()?;
                Ok(Formula::Eq(s, t))
            }
            _ => Err(self.error("a formula")),
        }
    }
}

fn quantifier_keyword(w: &str) -> Option<Quantifier> {
    Quantifier::ALL.into_iter().find(|q| q.keyword() == w)
}

pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error("an operator or end of input"));
    }
    Ok(f)
}

/// Build a formula from text that is known to be well formed.
///
/// Panics with the parse error otherwise; intended for built-in constant
/// schemas.
pub fn fm(text: &str) -> Formula {
    parse(text).unwrap_or_else(|e| panic!("bad built-in formula {text:?}: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(name: &str, t: Term) -> Formula {
        Formula::pred(name, t)
    }

    #[test]
    fn substitution() {
        let a = Term::var("a");
        assert_eq!(substitute(&p("echo", a.clone()), "a", "v0"), p("echo", Term::val("v0")));

        let bound = Formula::quant(Quantifier::Exists, "a", p("echo", a.clone()));
        assert_eq!(substitute(&bound, "a", "v0"), bound);

        let mixed = Formula::and(p("echo", a.clone()), Formula::quant(Quantifier::Exists, "a", p("ready", a.clone())));
        assert_eq!(
            substitute(&mixed, "a", "v0"),
            Formula::and(p("echo", Term::val("v0")), Formula::quant(Quantifier::Exists, "a", p("ready", a)))
        );
    }

    #[test]
    fn free_variables() {
        assert_eq!(free_vars(&fm("echo(a)")), BTreeSet::from(["a".to_string()]));
        assert!(free_vars(&fm("exists a. echo(a)")).is_empty());
        assert_eq!(free_vars(&fm("broadcast(a) -> (exists a. echo(a))")), BTreeSet::from(["a".to_string()]));
        assert_eq!(
            free_vars(&fm("(output(v) & output(v')) => v == v'")),
            BTreeSet::from(["v".to_string(), "v'".to_string()])
        );
    }

    #[test]
    fn desugar_examples() {
        let phi = p("echo", Term::var("a"));
        assert_eq!(
            desugar(&Formula::quant(Quantifier::Forall, "a", phi.clone())),
            Formula::neg(Formula::quant(Quantifier::Exists, "a", Formula::neg(phi.clone())))
        );
        let modtb = desugar(&Formula::unary(UnaryConn::ModTB, phi.clone()));
        let expect = Formula::neg(Formula::and(
            Formula::unary(UnaryConn::ModTF, Formula::neg(phi.clone())),
            Formula::neg(phi.clone()),
        ));
        assert_eq!(modtb, expect);
        assert!(desugar(&fm("[C] echo(a) => exists1 b. ready(b) <-> correct{echo, ready}")).is_core());
    }

    #[test]
    fn parse_examples() {
        assert_eq!(
            parse("deliver(a) -> [Q] ready(a)").unwrap(),
            Formula::binary(
                BinaryConn::WeakImp,
                p("deliver", Term::var("a")),
                Formula::spatial(SpatialModality::Quorum, p("ready", Term::var("a")))
            )
        );
        assert_eq!(
            parse("exists01 a. echo(a)").unwrap(),
            Formula::quant(Quantifier::ExistsAffine, "a", p("echo", Term::var("a")))
        );
        let input = |v: &str| p("input", Term::val(v));
        assert_eq!(
            parse("(input('0) (+) input('1)) & !input('half)").unwrap(),
            Formula::and(Formula::binary(BinaryConn::Xor, input("0"), input("1")), Formula::neg(input("half")))
        );
    }

    #[test]
    fn precedence_and_binding() {
        // & binds tighter than |, which binds tighter than (+), then ->
        assert_eq!(print(&fm("a == b & c == d | e == f")), "a == b & c == d | e == f");
        assert_eq!(fm("x(a) -> y(a) => z(a)"), fm("x(a) -> (y(a) => z(a))"));
        assert_eq!(fm("x(a) | y(a) & z(a)"), fm("x(a) | (y(a) & z(a))"));
        assert_eq!(fm("exists a. x(a) & y(a)"), fm("exists a. (x(a) & y(a))"));
        assert_eq!(fm("!x(a) & y(a)"), Formula::and(Formula::neg(fm("x(a)")), fm("y(a)")));
        // a quantifier in non-final position keeps its parentheses
        let f = Formula::and(fm("exists a. x(a)"), fm("y(b)"));
        assert_eq!(print(&f), "(exists a. x(a)) & y(b)");
        assert_eq!(parse(&print(&f)).unwrap(), f);
        let g = Formula::and(fm("y(b)"), fm("exists a. x(a)"));
        assert_eq!(print(&g), "y(b) & exists a. x(a)");
        let h = Formula::or(g.clone(), fm("z(c)"));
        assert_eq!(parse(&print(&h)).unwrap(), h);
    }

    #[test]
    fn primes_and_literals() {
        assert_eq!(fm("v == v'"), Formula::Eq(Term::var("v"), Term::var("v'")));
        assert_eq!(fm("output(v')"), p("output", Term::var("v'")));
        assert_eq!(fm("v=='0"), Formula::Eq(Term::var("v"), Term::val("0")));
    }

    #[test]
    fn parse_errors() {
        let e = parse("echo(a) &").unwrap_err();
        assert_eq!(e.position, 9);
        assert!(e.expected.contains("formula"));
        assert!(parse("echo(a").is_err());
        assert!(parse("%X echo(a)").is_err());
        assert!(parse("[Z] echo(a)").is_err());
        assert!(parse("exists . echo(a)").is_err());
        assert!(parse("a b").is_err());
        assert!(parse("").is_err());
        assert!(parse("echo(a) $").is_err());
    }
}
