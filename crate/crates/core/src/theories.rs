//! Axiom systems and correctness properties for the three protocols, and a
//! line-based text format for theory files.
//!
//! ```text
//! @theory ThyBB
//! @predicates broadcast, deliver, echo, ready
//! @values any
//! @axioms
//! BrDeliver? : : deliver(a) -> [Q] ready(a)
//! @structural 3twined
//! @properties
//! CaAgree : v in 0,1; v' in 0,1 : ([S] output(v) & [S] output(v')) => v == v'
//! ~Agreement : : [S] %T observe('u) & [S] %T !observe('u)
//! ```
//!
//! Each schema line is `NAME : DOMAINS : FORMULA`. A leading `~` on a name
//! marks a property that must be invalid. Lines starting with `#` are
//! comments.

use std::fmt;
use std::str::FromStr;

use crate::semantics::Domains;
use crate::syntax::{fm, parse, Formula, ParseError};

/// The protocols with built-in theories.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TheoryName {
    Vote,
    Bracha,
    Crusader,
}

impl TheoryName {
    pub const ALL: [TheoryName; 3] = [TheoryName::Vote, TheoryName::Bracha, TheoryName::Crusader];

    pub fn title(self) -> &'static str {
        match self {
            TheoryName::Vote => "ThyVote",
            TheoryName::Bracha => "ThyBB",
            TheoryName::Crusader => "ThyCA",
        }
    }
}

impl fmt::Display for TheoryName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.title())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown theory {0:?} (expected vote, bracha or crusader)")]
pub struct UnknownTheory(pub String);

impl FromStr for TheoryName {
    type Err = UnknownTheory;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vote" | "ThyVote" => Ok(TheoryName::Vote),
            "bracha" | "bb" | "ThyBB" => Ok(TheoryName::Bracha),
            "crusader" | "ca" | "ThyCA" => Ok(TheoryName::Crusader),
            _ => Err(UnknownTheory(s.to_string())),
        }
    }
}

/// Requirements on a space that are not expressible as a single formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Structural {
    /// Any three nonempty opens intersect.
    ThreeTwined,
}

impl Structural {
    pub fn keyword(self) -> &'static str {
        match self {
            Structural::ThreeTwined => "3twined",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SchemaBody {
    Formula(Formula),
    Structural(Structural),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomSchema {
    pub name: String,
    pub body: SchemaBody,
    pub domains: Domains,
}

impl AxiomSchema {
    pub fn formula(name: &str, text: &str) -> Self {
        AxiomSchema { name: name.to_string(), body: SchemaBody::Formula(fm(text)), domains: Domains::new() }
    }

    pub fn structural(s: Structural) -> Self {
        AxiomSchema { name: s.keyword().to_string(), body: SchemaBody::Structural(s), domains: Domains::new() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarity {
    MustBeValid,
    MustBeInvalid,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropertySchema {
    pub name: String,
    pub formula: Formula,
    pub domains: Domains,
    pub polarity: Polarity,
}

impl PropertySchema {
    pub fn valid(name: &str, text: &str) -> Self {
        PropertySchema {
            name: name.to_string(),
            formula: fm(text),
            domains: Domains::new(),
            polarity: Polarity::MustBeValid,
        }
    }

    pub fn invalid(name: &str, text: &str) -> Self {
        PropertySchema { polarity: Polarity::MustBeInvalid, ..Self::valid(name, text) }
    }

    pub fn with_domain(mut self, var: &str, values: &[&str]) -> Self {
        self.domains.insert(var.to_string(), values.iter().map(|v| v.to_string()).collect());
        self
    }
}

/// What value sets a theory accepts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValueProfile {
    /// Any nonempty value set.
    Any,
    /// Exactly these values, in this order.
    Exactly(Vec<String>),
}

impl ValueProfile {
    pub fn admits(&self, values: &[String]) -> bool {
        match self {
            ValueProfile::Any => !values.is_empty(),
            ValueProfile::Exactly(vs) => {
                let mut a = vs.clone();
                let mut b = values.to_vec();
                a.sort();
                b.sort();
                a == b
            }
        }
    }
}

impl fmt::Display for ValueProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueProfile::Any => f.write_str("any"),
            ValueProfile::Exactly(vs) => f.write_str(&vs.join(", ")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Theory {
    pub name: String,
    pub axioms: Vec<AxiomSchema>,
    /// Sorted predicate symbols.
    pub predicates: Vec<String>,
    pub profile: ValueProfile,
}

impl Theory {
    pub fn axiom(&self, name: &str) -> Option<&AxiomSchema> {
        self.axioms.iter().find(|a| a.name == name)
    }

    /// Swap the formula of a named axiom, keeping its position.
    pub fn replace_axiom(&mut self, name: &str, formula: Formula) -> Result<(), TheoryError> {
        let a = self
            .axioms
            .iter_mut()
            .find(|a| a.name == name)
            .ok_or_else(|| TheoryError::UnknownSchema(name.to_string()))?;
        a.body = SchemaBody::Formula(formula);
        Ok(())
    }

    pub fn remove_axiom(&mut self, name: &str) -> Result<AxiomSchema, TheoryError> {
        let i = self
            .axioms
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| TheoryError::UnknownSchema(name.to_string()))?;
        Ok(self.axioms.remove(i))
    }

    pub fn structural(&self) -> impl Iterator<Item = Structural> + '_ {
        self.axioms.iter().filter_map(|a| match a.body {
            SchemaBody::Structural(s) => Some(s),
            SchemaBody::Formula(_) => None,
        })
    }
}

fn sorted(ps: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = ps.iter().map(|s| s.to_string()).collect();
    v.sort();
    v
}

pub const CA_VALUES: [&str; 3] = ["0", "half", "1"];

pub fn theory(name: TheoryName) -> Theory {
    let f = AxiomSchema::formula;
    match name {
        TheoryName::Vote => Theory {
            name: name.title().into(),
            axioms: vec![
                f("Observe?", "observe('u) -> [Q] vote('u)"),
                f("ObserveNeg?", "!observe('u) -> [Q] !vote('u)"),
                f("Observe!", "[Q] vote('u) => observe('u)"),
                f("ObserveNeg!", "[Q] !vote('u) => !observe('u)"),
                f("Correct", "[Q] %TF vote('u)"),
                AxiomSchema::structural(Structural::ThreeTwined),
            ],
            predicates: sorted(&["vote", "observe"]),
            profile: ValueProfile::Exactly(vec!["u".into()]),
        },
        TheoryName::Bracha => Theory {
            name: name.title().into(),
            axioms: vec![
                f("BrDeliver?", "deliver(a) -> [Q] ready(a)"),
                f("BrReady?", "ready(a) -> [Q] echo(a)"),
                f("BrEcho?", "echo(a) -> [S] broadcast(a)"),
                f("BrEcho01", "exists01 a. echo(a)"),
                f("BrBroadcast1", "exists1 a. [S] broadcast(a)"),
                f("BrDeliver!", "[Q] ready(a) -> deliver(a)"),
                f("BrReady!", "[Q] echo(a) -> ready(a)"),
                f("BrEcho!", "[S] broadcast(a) -> exists b. echo(b)"),
                f("BrReady!!", "[C] ready(a) -> ready(a)"),
                f("BrCorrect", "[Q] correct{ready} & [Q] correct{echo}"),
                f("BrCorrect'", "(correct{ready} | incorrect{ready}) & (correct{echo} | incorrect{echo})"),
                f("BrCorrect''", "[E] correct{broadcast} | [E] incorrect{broadcast}"),
                AxiomSchema::structural(Structural::ThreeTwined),
            ],
            predicates: sorted(&["broadcast", "echo", "ready", "deliver"]),
            profile: ValueProfile::Any,
        },
        TheoryName::Crusader => Theory {
            name: name.title().into(),
            axioms: vec![
                f("CaEcho1?", "echo1(a) => [S] input(a)"),
                f("CaEcho2?", "echo2(a) -> [Q] echo1(a)"),
                f("CaOutput?", "(output('0) -> [Q] echo2('0)) & (output('1) -> [Q] echo2('1))"),
                f("CaOutput'?", "output('half) -> [Q] echo1('0) & [Q] echo1('1)"),
                f("CaCorrect", "[Q] correct{input, echo1, echo2, output}"),
                f(
                    "CaCorrect'",
                    "(correct{input} | incorrect{input}) & (correct{echo1} | incorrect{echo1}) \
                     & (correct{echo2} | incorrect{echo2}) & (correct{output} | incorrect{output})",
                ),
                f("CaInput", "(input('0) (+) input('1)) & !input('half)"),
                f("CaEcho2_01", "exists01 a. echo2(a)"),
                f("CaEcho1!", "input(a) | [C] echo1(a) -> echo1(a)"),
                f("CaEcho2!", "(exists a. [Q] echo1(a)) -> exists a. echo2(a)"),
                f("CaOutput!", "[Q] echo2(a) -> output(a)"),
                f("CaOutput'!", "[Q] echo1('0) & [Q] echo1('1) -> output('half)"),
                AxiomSchema::structural(Structural::ThreeTwined),
            ],
            predicates: sorted(&["input", "echo1", "echo2", "output"]),
            profile: ValueProfile::Exactly(CA_VALUES.iter().map(|s| s.to_string()).collect()),
        },
    }
}

pub fn properties(name: TheoryName) -> Vec<PropertySchema> {
    let p = PropertySchema::valid;
    match name {
        TheoryName::Vote => vec![PropertySchema::invalid("Agreement", "[S] %T observe('u) & [S] %T !observe('u)")],
        TheoryName::Bracha => vec![
            p("BrValidity", "[S] broadcast(a) -> [E] deliver(a)"),
            p("BrNoDup", "exists01 a. deliver(a)"),
            p("BrIntegrity", "deliver(a) -> [S] broadcast(a)"),
            p("BrConsistency", "exists01 a. [S] deliver(a)"),
            p("BrTotality", "[S] deliver(a) -> [E] deliver(a)"),
        ],
        TheoryName::Crusader => vec![
            p("CaAgree", "([S] output(v) & [S] output(v')) => v == v'")
                .with_domain("v", &["0", "1"])
                .with_domain("v'", &["0", "1"]),
            p("CaValid1", "(%TB [E] input(v) & output(v')) => v == v'").with_domain("v", &["0", "1"]),
            p("CaValid2", "[S] output(v) => [S] input(v)").with_domain("v", &["0", "1"]),
            p("CaLive", "[E] exists a. output(a)"),
        ],
    }
}

/// Intermediate results used on the way to the correctness properties,
/// rendered as formulas that every model of the theory should validate.
pub fn derived_lemmas(name: TheoryName) -> Vec<PropertySchema> {
    let p = PropertySchema::valid;
    match name {
        TheoryName::Vote => vec![
            p("ObserveSomewhere?", "[S] observe('u) -> [Q] vote('u)"),
            p("ObserveEverywhere!", "[Q] vote('u) => [E] observe('u)"),
            p("ObserveNegSomewhere?", "[S] !observe('u) -> [Q] !vote('u)"),
            p("ObserveNegEverywhere!", "[Q] !vote('u) => [E] !observe('u)"),
            p("SelfDual", "(%TB [Q] vote('u) => [C] vote('u)) <-> (%TB [Q] !vote('u) => [C] !vote('u))"),
        ],
        TheoryName::Bracha => vec![
            p(
                "BrSend",
                "%TB ([E] correct{broadcast} & exists1 a. %T [S] broadcast(a)) (+) %TB [E] incorrect{broadcast}",
            ),
            p("BrForwardEcho'", "[S] broadcast(a) -> echo(a)"),
            p("BrForwardEcho", "[S] broadcast(a) -> [E] echo(a)"),
            p("BrForwardReady", "[Q] echo(a) -> [E] ready(a)"),
            p("BrForwardDeliver", "[Q] ready(a) -> [E] deliver(a)"),
            p("BrEveryoneQuorumEcho", "%TB [E] echo(a) => [Q] echo(a)"),
            p("BrEveryoneQuorumReady", "%TB [E] ready(a) => [Q] ready(a)"),
            p("BrBoxDiamond", "%TB [Q] ready(a) => [C] ready(a)"),
            p("BrBoxBoxEcho", "%TB ([Q] echo(a) & [Q] echo(b)) => [S] (echo(a) & echo(b))"),
            p("BrBoxBoxReady", "%TB ([Q] ready(a) & [Q] ready(b)) => [S] (ready(a) & ready(b))"),
        ],
        TheoryName::Crusader => vec![
            p("CaInputFlip0", "%TB input('0) <-> %TB !input('1)"),
            p("CaInputFlip1", "%TB input('1) <-> %TB !input('0)"),
            p("CaInputUnique", "(%T input(a) & %T input(b)) => a == b"),
            p("CaInputEveryone", "(%TB [E] input(a) & %T [S] input(b)) => a == b"),
            p("CaQuorumContra", "%TB [Q] echo1(a) => [C] echo1(a)"),
            p("CaContraEveryone", "[C] echo1(a) -> [E] echo1(a)"),
            p("CaEveryoneQuorum", "%TB [E] echo1(a) => [Q] echo1(a)"),
            p("CaEcho2Quorum", "echo2(a) => [Q] echo1(a)"),
            p("CaContraInput", "%T [C] (input('0) & correct{echo1}) | %T [C] (input('1) & correct{echo1})"),
            p("CaContraEcho1", "%T [C] echo1('0) | %T [C] echo1('1)"),
            p("CaQuorumEcho1", "%T [Q] echo1('0) | %T [Q] echo1('1)"),
            p("CaEveryoneEcho2", "[E] (echo2('0) | echo2('1))"),
            p("CaQuorumEcho2", "%T [Q] (echo2('0) | echo2('1))"),
            p("CaInputBinary", "input(a) => a == '0 | a == '1"),
            p("CaEcho1Binary", "echo1(a) => a == '0 | a == '1"),
            p("CaEcho2Binary", "echo2(a) => a == '0 | a == '1"),
            p("CaNoHalfEcho2", "echo2('half) => bot"),
        ],
    }
}

/// A theory together with the properties and lemmas checked against it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TheoryFile {
    pub theory: Theory,
    pub properties: Vec<PropertySchema>,
    pub lemmas: Vec<PropertySchema>,
}

pub fn builtin(name: TheoryName) -> TheoryFile {
    TheoryFile { theory: theory(name), properties: properties(name), lemmas: derived_lemmas(name) }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TheoryError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Formula { line: usize, source: ParseError },
    #[error("no schema named {0:?}")]
    UnknownSchema(String),
}

fn schema_line(name: &str, d: &Domains, f: &Formula) -> String {
    let doms = d.iter().map(|(v, vals)| format!("{v} in {}", vals.join(","))).collect::<Vec<_>>().join("; ");
    if doms.is_empty() {
        format!("{name} : : {f}\n")
    } else {
        format!("{name} : {doms} : {f}\n")
    }
}

fn parse_domains(text: &str, line: usize) -> Result<Domains, TheoryError> {
    let mut out = Domains::new();
    for part in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (var, vals) = part.split_once(" in ").ok_or_else(|| TheoryError::Syntax {
            line,
            message: format!("expected `VAR in V1,V2,...`, found {part:?}"),
        })?;
        let vals: Vec<String> = vals.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
        if vals.is_empty() {
            return Err(TheoryError::Syntax { line, message: format!("empty domain for {}", var.trim()) });
        }
        out.insert(var.trim().to_string(), vals);
    }
    Ok(out)
}

/// Render in the text format; [`parse_theory_file`] reads it back.
pub fn print_theory_file(tf: &TheoryFile) -> String {
    let mut out = String::new();
    let t = &tf.theory;
    out.push_str(&format!("@theory {}\n", t.name));
    out.push_str(&format!("@predicates {}\n", t.predicates.join(", ")));
    out.push_str(&format!("@values {}\n", t.profile));
    out.push_str("@axioms\n");
    for a in &t.axioms {
        match &a.body {
            SchemaBody::Structural(s) => out.push_str(&format!("@structural {}\n", s.keyword())),
            SchemaBody::Formula(f) => out.push_str(&schema_line(&a.name, &a.domains, f)),
        }
    }
    let section = |out: &mut String, title: &str, ps: &[PropertySchema]| {
        if ps.is_empty() {
            return;
        }
        out.push_str(&format!("@{title}\n"));
        for p in ps {
            let mark = if p.polarity == Polarity::MustBeInvalid { "~" } else { "" };
            out.push_str(&schema_line(&format!("{mark}{}", p.name), &p.domains, &p.formula));
        }
    };
    section(&mut out, "properties", &tf.properties);
    section(&mut out, "lemmas", &tf.lemmas);
    out
}

#[derive(PartialEq)]
enum Section {
    Axioms,
    Properties,
    Lemmas,
}

pub fn parse_theory_file(text: &str) -> Result<TheoryFile, TheoryError> {
    let mut name = None;
    let mut predicates = None;
    let mut profile = ValueProfile::Any;
    let mut axioms = Vec::new();
    let mut props = Vec::new();
    let mut lemmas = Vec::new();
    let mut section = Section::Axioms;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let syntax = |message: String| TheoryError::Syntax { line, message };
        if let Some(directive) = s.strip_prefix('@') {
            let (word, rest) = directive.split_once(char::is_whitespace).unwrap_or((directive, ""));
            let rest = rest.trim();
            match word {
                "theory" => name = Some(rest.to_string()),
                "predicates" => {
                    let mut ps: Vec<String> =
                        rest.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect();
                    ps.sort();
                    predicates = Some(ps);
                }
                "values" => {
                    profile = if rest == "any" {
                        ValueProfile::Any
                    } else {
                        let vs: Vec<String> =
                            rest.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
                        if vs.is_empty() {
                            return Err(syntax("`@values` needs `any` or a value list".into()));
                        }
                        ValueProfile::Exactly(vs)
                    }
                }
                "axioms" => section = Section::Axioms,
                "properties" => section = Section::Properties,
                "lemmas" => section = Section::Lemmas,
                "structural" => {
                    if section != Section::Axioms {
                        return Err(syntax("`@structural` is only allowed among axioms".into()));
                    }
                    match rest {
                        "3twined" => axioms.push(AxiomSchema::structural(Structural::ThreeTwined)),
                        other => return Err(syntax(format!("unknown structural rule {other:?}"))),
                    }
                }
                other => return Err(syntax(format!("unknown directive @{other}"))),
            }
            continue;
        }
        let mut parts = s.splitn(3, ':');
        let (Some(head), Some(doms), Some(body)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(syntax("expected `NAME : DOMAINS : FORMULA`".into()));
        };
        let head = head.trim();
        let (invalid, sname) = match head.strip_prefix('~') {
            Some(n) => (true, n.trim()),
            None => (false, head),
        };
        if sname.is_empty() {
            return Err(syntax("missing schema name".into()));
        }
        let domains = parse_domains(doms, line)?;
        let formula = parse(body.trim()).map_err(|source| TheoryError::Formula { line, source })?;
        let polarity = if invalid { Polarity::MustBeInvalid } else { Polarity::MustBeValid };
        match section {
            Section::Axioms => {
                if invalid {
                    return Err(syntax("axioms cannot be marked `~`".into()));
                }
                axioms.push(AxiomSchema { name: sname.to_string(), body: SchemaBody::Formula(formula), domains });
            }
            Section::Properties | Section::Lemmas => {
                let p = PropertySchema { name: sname.to_string(), formula, domains, polarity };
                if section == Section::Properties {
                    props.push(p)
                } else {
                    lemmas.push(p)
                }
            }
        }
    }

    let predicates = match predicates {
        Some(p) => p,
        None => {
            let mut all = std::collections::BTreeSet::new();
            for a in &axioms {
                if let SchemaBody::Formula(f) = &a.body {
                    all.extend(f.predicates());
                }
            }
            for p in props.iter().chain(&lemmas) {
                all.extend(p.formula.predicates());
            }
            all.into_iter().collect()
        }
    };
    Ok(TheoryFile {
        theory: Theory { name: name.unwrap_or_else(|| "custom".into()), axioms, predicates, profile },
        properties: props,
        lemmas,
    })
}
