//! Checking models against theories and properties, exhaustive enumeration
//! of small model spaces, and counterexample search.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::kernel3::{render, TruthValue};
use crate::modelfile::model_digest;
use crate::semantics::{cartesian, instances, Compiled, Domains, EvalError, Model, ModelError};
use crate::semitopo::Semitopology;
use crate::syntax::{free_vars, Formula};
use crate::theories::{Polarity, PropertySchema, SchemaBody, Structural, Theory};

/// Default bound on the number of models an exhaustive sweep may visit.
pub const DEFAULT_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CheckError {
    #[error("theory {theory} does not accept the value set [{values}] (expects {expected})")]
    Profile { theory: String, values: String, expected: String },
    #[error("theory {theory} uses predicate {pred:?}, which the model does not declare")]
    UndeclaredPredicate { theory: String, pred: String },
    #[error("exhaustive enumeration needs 3^{cells} models, more than the cap of {cap}")]
    CapExceeded { cells: usize, cap: u64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("in schema {schema}: {source}")]
    Eval { schema: String, source: EvalError },
}

#[derive(Serialize, Debug, Clone, PartialEq, Eq)]
pub struct InstanceRecord {
    /// `(variable, value)` pairs.
    pub bindings: Vec<(String, String)>,
    pub formula: String,
    /// One truth value per point, in the report's point order.
    pub values: String,
    pub valid: bool,
}

#[derive(Serialize, Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub name: String,
    pub polarity: &'static str,
    pub instances: Vec<InstanceRecord>,
    pub valid: bool,
}

#[derive(Serialize, Debug, Clone, PartialEq, Eq)]
pub struct StructuralResult {
    pub name: String,
    pub valid: bool,
}

#[derive(Serialize, Debug, Clone, PartialEq, Eq, Default)]
pub struct Summary {
    pub checked: usize,
    pub failed: usize,
    pub failures: Vec<String>,
}

#[derive(Serialize, Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub digest: String,
    pub points: Vec<String>,
    pub axioms: Vec<Verdict>,
    pub structural: Vec<StructuralResult>,
    pub properties: Vec<Verdict>,
    pub lemmas: Vec<Verdict>,
    pub summary: Summary,
    pub valid: bool,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    /// Names of everything that failed, in report order.
    pub fn failures(&self) -> &[String] {
        &self.summary.failures
    }

    /// Plain text: one line per schema, then the failing instances.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("model {}\n", &self.digest[..16.min(self.digest.len())]));
        out.push_str(&format!("points {}\n", self.points.join(" ")));
        let mut section = |title: &str, vs: &[Verdict]| {
            if vs.is_empty() {
                return;
            }
            out.push_str(&format!("{title}:\n"));
            for v in vs {
                let mark = if v.valid { "ok  " } else { "FAIL" };
                let pol = if v.polarity == "must-be-invalid" { " (must be invalid)" } else { "" };
                out.push_str(&format!("  {mark} {}{pol}\n", v.name));
                if !v.valid {
                    for i in v.instances.iter().filter(|i| !i.valid) {
                        out.push_str(&format!("         {}  [{}]\n", i.values, i.formula));
                    }
                }
            }
        };
        section("axioms", &self.axioms);
        section("properties", &self.properties);
        section("lemmas", &self.lemmas);
        for s in &self.structural {
            let mark = if s.valid { "ok  " } else { "FAIL" };
            out.push_str(&format!("structural:\n  {mark} {}\n", s.name));
        }
        out.push_str(&format!(
            "{} checked, {} failed: {}\n",
            self.summary.checked,
            self.summary.failed,
            if self.valid { "PASS" } else { "FAIL" }
        ));
        out
    }
}

fn polarity_name(p: Polarity) -> &'static str {
    match p {
        Polarity::MustBeValid => "must-be-valid",
        Polarity::MustBeInvalid => "must-be-invalid",
    }
}

/// Check that a model fits a theory's signature.
pub fn check_signature(m: &Model, t: &Theory) -> Result<(), CheckError> {
    if !t.profile.admits(m.values()) {
        return Err(CheckError::Profile {
            theory: t.name.clone(),
            values: m.values().join(", "),
            expected: t.profile.to_string(),
        });
    }
    for p in &t.predicates {
        if m.predicate_index(p).is_none() {
            return Err(CheckError::UndeclaredPredicate { theory: t.name.clone(), pred: p.clone() });
        }
    }
    Ok(())
}

/// Evaluate one schema instance by instance.
pub fn verdict(
    m: &Model,
    name: &str,
    phi: &Formula,
    domains: &Domains,
    polarity: Polarity,
) -> Result<Verdict, CheckError> {
    let wrap = |source| CheckError::Eval { schema: name.to_string(), source };
    let n = m.space().len();
    let mut records = Vec::new();
    for inst in instances(m, phi, domains).map_err(wrap)? {
        let row = Compiled::closed(m, &inst.formula).map_err(wrap)?.eval(m, &[]);
        let values = row.to_vec(n);
        let all_valid = values.iter().all(|v| v.is_valid());
        let valid = match polarity {
            Polarity::MustBeValid => all_valid,
            Polarity::MustBeInvalid => !all_valid,
        };
        records.push(InstanceRecord {
            bindings: inst.bindings,
            formula: inst.formula.to_string(),
            values: render(&values),
            valid,
        });
    }
    let valid = records.iter().all(|r| r.valid);
    Ok(Verdict { name: name.to_string(), polarity: polarity_name(polarity), instances: records, valid })
}

fn structural_holds(space: &Semitopology, s: Structural) -> bool {
    match s {
        Structural::ThreeTwined => space.is_n_twined(3),
    }
}

/// Full check: the theory's axioms and structural rules (if a theory is
/// given), then properties and lemmas.
pub fn check(
    m: &Model,
    t: Option<&Theory>,
    properties: &[PropertySchema],
    lemmas: &[PropertySchema],
) -> Result<Report, CheckError> {
    let mut axioms = Vec::new();
    let mut structural = Vec::new();
    if let Some(t) = t {
        check_signature(m, t)?;
        for a in &t.axioms {
            match &a.body {
                SchemaBody::Formula(f) => axioms.push(verdict(m, &a.name, f, &a.domains, Polarity::MustBeValid)?),
                SchemaBody::Structural(s) => {
                    structural.push(StructuralResult { name: a.name.clone(), valid: structural_holds(m.space(), *s) })
                }
            }
        }
    }
    let run = |ps: &[PropertySchema]| -> Result<Vec<Verdict>, CheckError> {
        ps.iter().map(|p| verdict(m, &p.name, &p.formula, &p.domains, p.polarity)).collect()
    };
    let properties = run(properties)?;
    let lemmas = run(lemmas)?;

    let mut summary = Summary::default();
    for v in axioms.iter().chain(&properties).chain(&lemmas) {
        summary.checked += 1;
        if !v.valid {
            summary.failed += 1;
            summary.failures.push(v.name.clone());
        }
    }
    for s in &structural {
        summary.checked += 1;
        if !s.valid {
            summary.failed += 1;
            summary.failures.push(s.name.clone());
        }
    }
    Ok(Report {
        digest: model_digest(m),
        points: m.space().points().to_vec(),
        valid: summary.failed == 0,
        axioms,
        structural,
        properties,
        lemmas,
        summary,
    })
}

pub fn check_theory(m: &Model, t: &Theory) -> Result<Report, CheckError> {
    check(m, Some(t), &[], &[])
}

pub fn check_properties(m: &Model, props: &[PropertySchema]) -> Result<Report, CheckError> {
    check(m, None, props, &[])
}

/// A schema compiled once for a signature, with its instances as bindings
/// of value indices.
#[derive(Clone, Debug)]
struct CompiledSchema {
    name: String,
    compiled: Compiled,
    bindings: Vec<Vec<usize>>,
    polarity: Polarity,
}

impl CompiledSchema {
    fn new(m: &Model, name: &str, phi: &Formula, domains: &Domains, polarity: Polarity) -> Result<Self, CheckError> {
        let wrap = |source| CheckError::Eval { schema: name.to_string(), source };
        let vars: Vec<String> = free_vars(phi).into_iter().collect();
        let mut doms = Vec::new();
        for v in &vars {
            let d: Vec<usize> = match domains.get(v) {
                Some(d) => d
                    .iter()
                    .map(|x| m.value_index(x).ok_or_else(|| wrap(EvalError::UnknownValue(x.clone()))))
                    .collect::<Result<_, _>>()?,
                None => (0..m.values().len()).collect(),
            };
            doms.push(d);
        }
        let sizes: Vec<usize> = doms.iter().map(|d| d.len()).collect();
        let bindings =
            cartesian(&sizes).into_iter().map(|c| c.iter().enumerate().map(|(k, &i)| doms[k][i]).collect()).collect();
        let compiled = Compiled::new(m, phi, &vars).map_err(wrap)?;
        Ok(CompiledSchema { name: name.to_string(), compiled, bindings, polarity })
    }

    fn holds(&self, m: &Model) -> bool {
        let full = m.space().full().bits();
        self.bindings.iter().all(|b| {
            let all_valid = self.compiled.eval(m, b).valid_points().bits() == full;
            match self.polarity {
                Polarity::MustBeValid => all_valid,
                Polarity::MustBeInvalid => !all_valid,
            }
        })
    }
}

/// A theory and a property list compiled for repeated checks against models
/// that share one signature (values, predicates and space).
#[derive(Clone, Debug)]
pub struct CompiledSuite {
    axioms: Vec<CompiledSchema>,
    structural_ok: bool,
    properties: Vec<CompiledSchema>,
}

impl CompiledSuite {
    pub fn new(template: &Model, t: &Theory, props: &[PropertySchema]) -> Result<Self, CheckError> {
        check_signature(template, t)?;
        let mut axioms = Vec::new();
        let mut structural_ok = true;
        for a in &t.axioms {
            match &a.body {
                SchemaBody::Formula(f) => {
                    axioms.push(CompiledSchema::new(template, &a.name, f, &a.domains, Polarity::MustBeValid)?)
                }
                SchemaBody::Structural(s) => structural_ok &= structural_holds(template.space(), *s),
            }
        }
        let properties = props
            .iter()
            .map(|p| CompiledSchema::new(template, &p.name, &p.formula, &p.domains, p.polarity))
            .collect::<Result<_, _>>()?;
        Ok(CompiledSuite { axioms, structural_ok, properties })
    }

    /// All axioms and structural rules hold.
    pub fn is_model(&self, m: &Model) -> bool {
        self.structural_ok && self.axioms.iter().all(|a| a.holds(m))
    }

    /// Names of properties that fail.
    pub fn violated(&self, m: &Model) -> Vec<String> {
        self.properties.iter().filter(|p| !p.holds(m)).map(|p| p.name.clone()).collect()
    }
}

/// Number of models over a signature, or `None` beyond `u64`.
pub fn model_space_size(cells: usize) -> Option<u64> {
    3u64.checked_pow(u32::try_from(cells).ok()?)
}

/// Every interpretation of the template's signature, lexicographically over
/// (predicate, point, value) cells with the last cell varying fastest.
pub struct ModelEnumerator {
    current: Model,
    cells: Vec<(usize, usize, usize)>,
    started: bool,
    done: bool,
}

impl Iterator for ModelEnumerator {
    type Item = Model;

    fn next(&mut self) -> Option<Model> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(self.current.clone());
        }
        for &(p, pt, v) in self.cells.iter().rev() {
            let tv = self.current.get_at(p, pt, v);
            if tv == TruthValue::T {
                self.current.set_at(p, pt, v, TruthValue::F);
            } else {
                self.current.set_at(p, pt, v, TruthValue::from_index(tv.index() + 1));
                return Some(self.current.clone());
            }
        }
        self.done = true;
        None
    }
}

/// Enumerate all models with the given space, values and predicates.
pub fn enumerate_models<S: AsRef<str>, P: AsRef<str>>(
    space: &Semitopology,
    values: &[S],
    preds: &[P],
    cap: u64,
) -> Result<ModelEnumerator, CheckError> {
    let template = Model::new(values, space.clone(), preds)?;
    enumerate_like(&template, cap)
}

/// Enumerate all models with the template's signature; the template's own
/// truth values are ignored.
pub fn enumerate_like(template: &Model, cap: u64) -> Result<ModelEnumerator, CheckError> {
    let cells_n = template.cell_count();
    match model_space_size(cells_n) {
        Some(size) if size <= cap => {}
        _ => return Err(CheckError::CapExceeded { cells: cells_n, cap }),
    }
    let mut current = template.clone();
    let mut cells = Vec::with_capacity(cells_n);
    for p in 0..template.predicates().len() {
        for pt in 0..template.space().len() {
            for v in 0..template.values().len() {
                current.set_at(p, pt, v, TruthValue::F);
                cells.push((p, pt, v));
            }
        }
    }
    Ok(ModelEnumerator { current, cells, started: false, done: false })
}

/// Enumerate the models of a theory.
pub fn enumerate_theory_models(
    template: &Model,
    t: &Theory,
    cap: u64,
) -> Result<impl Iterator<Item = Model>, CheckError> {
    let suite = CompiledSuite::new(template, t, &[])?;
    Ok(enumerate_like(template, cap)?.filter(move |m| suite.is_model(m)))
}

#[derive(Debug, Clone)]
pub struct EntailmentResult {
    /// Models enumerated in total.
    pub enumerated: u64,
    /// Models of the theory among them.
    pub theory_models: u64,
    /// The first model of the theory that violates a property, with the
    /// names of the violated properties.
    pub first_violation: Option<(Model, Vec<String>)>,
}

impl EntailmentResult {
    /// No model of the theory exists, so the entailment holds for no reason.
    pub fn vacuous(&self) -> bool {
        self.theory_models == 0
    }

    pub fn holds(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Does every model of `t` over this signature satisfy `props`? Stops at the
/// first violation.
pub fn verify_entailment(
    template: &Model,
    t: &Theory,
    props: &[PropertySchema],
    cap: u64,
) -> Result<EntailmentResult, CheckError> {
    let suite = CompiledSuite::new(template, t, props)?;
    let mut res = EntailmentResult { enumerated: 0, theory_models: 0, first_violation: None };
    for m in enumerate_like(template, cap)? {
        res.enumerated += 1;
        if !suite.is_model(&m) {
            continue;
        }
        res.theory_models += 1;
        let bad = suite.violated(&m);
        if !bad.is_empty() {
            res.first_violation = Some((m, bad));
            break;
        }
    }
    Ok(res)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchMode {
    Exhaustive,
    Random,
    Guided,
}

impl std::str::FromStr for SearchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exhaustive" => Ok(SearchMode::Exhaustive),
            "random" => Ok(SearchMode::Random),
            "guided" => Ok(SearchMode::Guided),
            _ => Err(format!("unknown search mode {s:?} (expected exhaustive, random or guided)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub mode: SearchMode,
    pub seed: u64,
    /// Models to examine; 0 examines none.
    pub budget: u64,
    pub cap: u64,
}

#[derive(Debug, Clone)]
pub struct Counterexample {
    pub model: Model,
    pub violated: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub found: Option<Counterexample>,
    /// Candidate models examined.
    pub examined: u64,
    /// Candidates that were models of the theory.
    pub theory_models: u64,
}

/// Look for a model of `t` that violates one of `props`.
///
/// Exhaustive and random modes range over the template's signature. Guided
/// mode starts from the generator models (typically extracted from
/// simulator runs, all sharing one signature) and applies up to three random
/// mutations to each candidate. Everything is reproducible from the seed.
pub fn search_counterexample(
    t: &Theory,
    props: &[PropertySchema],
    cfg: &SearchConfig,
    template: &Model,
    generators: &[Model],
) -> Result<SearchOutcome, CheckError> {
    let suite = CompiledSuite::new(template, t, props)?;
    let mut out = SearchOutcome { found: None, examined: 0, theory_models: 0 };
    let consider = |m: Model, out: &mut SearchOutcome| -> bool {
        out.examined += 1;
        if !suite.is_model(&m) {
            return false;
        }
        out.theory_models += 1;
        let violated = suite.violated(&m);
        if violated.is_empty() {
            return false;
        }
        out.found = Some(Counterexample { model: m, violated });
        true
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    match cfg.mode {
        SearchMode::Exhaustive => {
            for m in enumerate_like(template, cfg.cap)? {
                if out.examined >= cfg.budget || consider(m, &mut out) {
                    break;
                }
            }
        }
        SearchMode::Random => {
            let mut m = template.clone();
            while out.examined < cfg.budget {
                for p in 0..m.predicates().len() {
                    for pt in 0..m.space().len() {
                        for v in 0..m.values().len() {
                            m.set_at(p, pt, v, TruthValue::from_index(rng.gen_range(0..3)));
                        }
                    }
                }
                if consider(m.clone(), &mut out) {
                    break;
                }
            }
        }
        SearchMode::Guided => {
            let pool: Vec<&Model> = if generators.is_empty() { vec![template] } else { generators.iter().collect() };
            while out.examined < cfg.budget {
                let mut m = (*pool.choose(&mut rng).expect("pool is nonempty")).clone();
                let k = rng.gen_range(0..=3);
                for _ in 0..k {
                    mutate(&mut m, &mut rng);
                }
                if consider(m, &mut out) {
                    break;
                }
            }
        }
    }
    Ok(out)
}

/// Points where every cell is `B`, the extraction of a byzantine participant.
pub fn byzantine_points(m: &Model) -> Vec<usize> {
    (0..m.space().len())
        .filter(|&pt| {
            (0..m.predicates().len()).all(|p| (0..m.values().len()).all(|v| m.get_at(p, pt, v) == TruthValue::B))
        })
        .collect()
}

/// One random change: set a (predicate, value) row to all `T`, all `F` or a
/// random mix at the honest points; flip one honest cell; or turn one more
/// point byzantine while staying within the coquorum bound.
fn mutate(m: &mut Model, rng: &mut ChaCha8Rng) {
    let byz = byzantine_points(m);
    let honest: Vec<usize> = (0..m.space().len()).filter(|p| !byz.contains(p)).collect();
    if honest.is_empty() {
        return;
    }
    let p = rng.gen_range(0..m.predicates().len().max(1));
    let v = rng.gen_range(0..m.values().len());
    if m.predicates().is_empty() {
        return;
    }
    match rng.gen_range(0..5) {
        0 | 1 => {
            let tv = if rng.gen_bool(0.5) { TruthValue::T } else { TruthValue::F };
            for &pt in &honest {
                m.set_at(p, pt, v, tv);
            }
        }
        2 => {
            for &pt in &honest {
                let tv = if rng.gen_bool(0.5) { TruthValue::T } else { TruthValue::F };
                m.set_at(p, pt, v, tv);
            }
        }
        3 => {
            let pt = *honest.choose(rng).expect("nonempty");
            let tv = TruthValue::from_index(rng.gen_range(0..3));
            m.set_at(p, pt, v, tv);
        }
        _ => {
            if byz.len() < m.space().coquorum_bound() {
                let pt = *honest.choose(rng).expect("nonempty");
                for p in 0..m.predicates().len() {
                    for v in 0..m.values().len() {
                        m.set_at(p, pt, v, TruthValue::B);
                    }
                }
            }
        }
    }
}
