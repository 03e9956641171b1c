//! `semitop`: evaluate formulas, check models against theories, run protocol
//! simulations and search for countermodels.
//!
//! Exit status: 0 when everything requested holds, 1 on a violation or a
//! countermodel, 2 on usage or input errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use semitop_core::checker::{check, search_counterexample, SearchConfig, SearchMode, DEFAULT_CAP};
use semitop_core::kernel3::TruthValue;
use semitop_core::modelfile::{load_model, save_model};
use semitop_core::semantics::{denote_all, Model};
use semitop_core::semitopo::Semitopology;
use semitop_core::simulator::{extract_model, run, Protocol, RunConfig, Strategy};
use semitop_core::syntax::{free_vars, parse};
use semitop_core::theories::{builtin, parse_theory_file, print_theory_file, PropertySchema, TheoryFile, TheoryName};

#[derive(Parser)]
#[command(name = "semitop", version, about = "Three-valued modal logic over semitopologies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a closed formula in a model.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        formula: String,
        /// Only this point; otherwise every point.
        #[arg(long)]
        at: Option<String>,
    },
    /// Check a model against a theory.
    Check {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        theory: TheoryArgs,
        /// Also check the theory's correctness properties.
        #[arg(long)]
        properties: bool,
        /// Also check the derived lemmas.
        #[arg(long)]
        lemmas: bool,
        #[arg(long)]
        json: bool,
    },
    /// Run a protocol and optionally check the extracted model.
    Simulate(SimulateArgs),
    /// Search for a model of a theory that violates a property.
    Search(SearchArgs),
    /// Print a built-in theory in the theory file format.
    Theory {
        /// vote, bracha or crusader.
        name: String,
    },
}

#[derive(Args)]
struct TheoryArgs {
    /// vote, bracha, crusader, or a theory file.
    #[arg(long)]
    theory: String,
    /// Replace one axiom before use, as NAME=FORMULA.
    #[arg(long = "mutate-axiom", value_name = "NAME=FORMULA")]
    mutate_axiom: Vec<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    protocol: Protocol,
    /// Classic preset: n = 3f+1, quorum 2f+1, contraquorum f+1.
    #[arg(long, default_value_t = 1)]
    f: usize,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    quorum: Option<usize>,
    #[arg(long)]
    contraquorum: Option<usize>,
    /// Comma-separated participants, as p0,p3 or 0,3.
    #[arg(long, default_value = "")]
    byzantine: String,
    #[arg(long, default_value = "conform")]
    strategy: Strategy,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Crusader inputs, as 0,0,1,1.
    #[arg(long)]
    inputs: Option<String>,
    /// Votes, as T,T,F,T.
    #[arg(long)]
    votes: Option<String>,
    /// Bracha value set, as u,w.
    #[arg(long)]
    values: Option<String>,
    #[arg(long, default_value = "p0")]
    sender: String,
    /// Defaults to the first value.
    #[arg(long = "sender-value")]
    sender_value: Option<String>,
    #[arg(long = "max-rounds")]
    max_rounds: Option<usize>,
    /// Crusader: output at most one value per participant.
    #[arg(long = "single-output")]
    single_output: bool,
    /// Write the extracted model here.
    #[arg(long = "emit-model")]
    emit_model: Option<PathBuf>,
    /// Write the trace here instead of printing it.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Check the extracted model against the protocol's theory, properties
    /// and lemmas, and print the report.
    #[arg(long)]
    check: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    theory: TheoryArgs,
    /// A property or lemma name, or ALL for every property.
    #[arg(long, default_value = "ALL")]
    property: String,
    #[arg(long, default_value = "guided")]
    mode: SearchMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    budget: u64,
    /// Enumeration cap for exhaustive mode.
    #[arg(long, env = "SEMITOP_CAP", default_value_t = DEFAULT_CAP)]
    cap: u64,
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Defaults to the largest quorum tolerating (n-1)/3 faults.
    #[arg(long)]
    quorum: Option<usize>,
    /// Value set; defaults to the theory's own, or u,w.
    #[arg(long)]
    values: Option<String>,
    /// Write a countermodel here instead of printing it.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(String::from).collect()
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn participant(s: &str, n: usize) -> Result<usize> {
    let digits = s.strip_prefix('p').unwrap_or(s);
    let i: usize = digits.parse().map_err(|_| anyhow!("{s:?} is not a participant (expected p0, p1, ...)"))?;
    if i >= n {
        bail!("participant {s} does not exist among {n}");
    }
    Ok(i)
}

fn load_theory(args: &TheoryArgs) -> Result<TheoryFile> {
    let mut tf = match args.theory.parse::<TheoryName>() {
        Ok(name) => builtin(name),
        Err(_) => {
            let text = read(Path::new(&args.theory))?;
            parse_theory_file(&text).with_context(|| format!("in theory file {}", args.theory))?
        }
    };
    for m in &args.mutate_axiom {
        let (name, text) =
            m.split_once('=').ok_or_else(|| anyhow!("--mutate-axiom expects NAME=FORMULA, got {m:?}"))?;
        let phi = parse(text).with_context(|| format!("in the formula for {name}"))?;
        tf.theory.replace_axiom(name.trim(), phi)?;
    }
    Ok(tf)
}

fn protocol_of(tf: &TheoryFile) -> Option<Protocol> {
    match tf.theory.name.parse::<TheoryName>().ok()? {
        TheoryName::Vote => Some(Protocol::Vote),
        TheoryName::Bracha => Some(Protocol::Bracha),
        TheoryName::Crusader => Some(Protocol::Crusader),
    }
}

fn status(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn cmd_eval(model: &Path, formula: &str, at: Option<&str>) -> Result<ExitCode> {
    let phi = parse(formula)?;
    let free = free_vars(&phi);
    if !free.is_empty() {
        bail!("the formula has free variables: {}", free.into_iter().collect::<Vec<_>>().join(", "));
    }
    let preds: Vec<String> = phi.predicates().into_iter().collect();
    let m = load_model(&read(model)?, &preds)?;
    let row = denote_all(&m, &phi)?;
    let points = m.space().points();
    match at {
        Some(p) => {
            let i = m.space().point_index(p).ok_or_else(|| anyhow!("unknown point {p:?}"))?;
            println!("{}", row[i]);
            Ok(status(row[i].is_valid()))
        }
        None => {
            for (p, v) in points.iter().zip(&row) {
                println!("{p} {v}");
            }
            Ok(status(row.iter().all(|v| v.is_valid())))
        }
    }
}

fn cmd_check(model: &Path, targs: &TheoryArgs, props: bool, lemmas: bool, json: bool) -> Result<ExitCode> {
    let tf = load_theory(targs)?;
    let m = load_model(&read(model)?, &tf.theory.predicates)?;
    let p: &[PropertySchema] = if props { &tf.properties } else { &[] };
    let l: &[PropertySchema] = if lemmas { &tf.lemmas } else { &[] };
    let report = check(&m, Some(&tf.theory), p, l)?;
    print!("{}", if json { report.to_json() } else { report.to_text() });
    Ok(status(report.valid))
}

fn sim_config(a: &SimulateArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::classic(a.protocol, a.f);
    if let Some(n) = a.n {
        cfg.n = n;
        cfg.quorum = n - n.saturating_sub(1) / 3;
        cfg.contraquorum = n - cfg.quorum + 1;
        cfg.votes = vec![true; n];
        cfg.inputs = vec![0; n];
    }
    let n = cfg.n;
    if let Some(q) = a.quorum {
        cfg.quorum = q;
        cfg.contraquorum = n.saturating_sub(q) + 1;
    }
    if let Some(k) = a.contraquorum {
        cfg.contraquorum = k;
    }
    cfg.byzantine = list(&a.byzantine).iter().map(|p| participant(p, n)).collect::<Result<_>>()?;
    cfg.strategy = a.strategy;
    cfg.seed = a.seed;
    if let Some(s) = &a.inputs {
        cfg.inputs = list(s)
            .iter()
            .map(|x| match x.as_str() {
                "0" => Ok(0),
                "1" => Ok(1),
                _ => Err(anyhow!("inputs must be 0 or 1, got {x:?}")),
            })
            .collect::<Result<_>>()?;
    }
    if let Some(s) = &a.votes {
        cfg.votes = list(s)
            .iter()
            .map(|x| match x.parse::<TruthValue>() {
                Ok(TruthValue::T) => Ok(true),
                Ok(TruthValue::F) => Ok(false),
                _ => Err(anyhow!("votes must be T or F, got {x:?}")),
            })
            .collect::<Result<_>>()?;
    }
    if let Some(s) = &a.values {
        cfg.values = list(s);
    }
    cfg.sender = participant(&a.sender, n)?;
    cfg.sender_value = match &a.sender_value {
        Some(v) => v.clone(),
        None => cfg.values.first().cloned().unwrap_or_default(),
    };
    cfg.max_rounds = a.max_rounds;
    cfg.single_output = a.single_output;
    Ok(cfg)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<ExitCode> {
    let cfg = sim_config(a)?;
    let tr = run(&cfg)?;
    for w in &tr.warnings {
        eprintln!("warning: {w}");
    }
    let m = extract_model(&tr, &cfg)?;
    if let Some(path) = &a.emit_model {
        write(path, &save_model(&m))?;
    }
    match &a.trace {
        Some(path) => write(path, &tr.to_json())?,
        None if !a.check => print!("{}", tr.to_json()),
        None => {}
    }
    if !a.check {
        return Ok(ExitCode::SUCCESS);
    }
    let tf = builtin(cfg.protocol.theory());
    let report = check(&m, Some(&tf.theory), &tf.properties, &tf.lemmas)?;
    print!("{}", if a.json { report.to_json() } else { report.to_text() });
    Ok(status(report.valid))
}

/// Protocol runs over the search signature, honest and with one byzantine
/// participant under every strategy, as starting points for guided search.
fn generators(protocol: Protocol, n: usize, q: usize, values: &[String]) -> Vec<Model> {
    let mut out = Vec::new();
    let mut base = RunConfig::classic(protocol, 1);
    base.n = n;
    base.quorum = q;
    base.contraquorum = n - q + 1;
    base.votes = vec![true; n];
    base.inputs = vec![0; n];
    if protocol == Protocol::Bracha {
        base.values = values.to_vec();
    }
    let mut variants = Vec::new();
    for i in 0..n {
        let mut c = base.clone();
        match protocol {
            Protocol::Vote => c.votes = (0..n).map(|j| j >= i).collect(),
            Protocol::Crusader => c.inputs = (0..n).map(|j| u8::from(j >= i)).collect(),
            Protocol::Bracha => {
                c.sender = i;
                c.sender_value = values[i % values.len()].clone();
            }
        }
        variants.push(c);
    }
    for c in variants {
        out.push(c.clone());
        if n > q {
            for strategy in Strategy::ALL {
                let mut b = c.clone();
                b.byzantine = [n - 1].into();
                b.strategy = strategy;
                out.push(b);
            }
        }
    }
    out.iter().filter_map(|c| run(c).ok().and_then(|tr| extract_model(&tr, c).ok())).collect()
}

fn cmd_search(a: &SearchArgs) -> Result<ExitCode> {
    let tf = load_theory(&a.theory)?;
    let props: Vec<PropertySchema> = if a.property == "ALL" {
        tf.properties.clone()
    } else {
        let p = tf.properties.iter().chain(&tf.lemmas).find(|p| p.name == a.property);
        vec![p.cloned().ok_or_else(|| anyhow!("{} has no property or lemma named {:?}", tf.theory.name, a.property))?]
    };
    let values: Vec<String> = match (&a.values, &tf.theory.profile) {
        (Some(v), _) => list(v),
        (None, semitop_core::theories::ValueProfile::Exactly(v)) => v.clone(),
        (None, semitop_core::theories::ValueProfile::Any) => vec!["u".into(), "w".into()],
    };
    let q = a.quorum.unwrap_or(a.n - a.n.saturating_sub(1) / 3);
    let space = Semitopology::from_threshold(a.n, q)?;
    let template = Model::new(&values, space, &tf.theory.predicates)?;
    let gens = match (a.mode, protocol_of(&tf)) {
        (SearchMode::Guided, Some(p)) => generators(p, a.n, q, &values),
        _ => Vec::new(),
    };
    let cfg = SearchConfig { mode: a.mode, seed: a.seed, budget: a.budget, cap: a.cap };
    let out = search_counterexample(&tf.theory, &props, &cfg, &template, &gens)?;
    eprintln!("examined {} candidates, {} models of {}", out.examined, out.theory_models, tf.theory.name);
    match out.found {
        None => {
            println!("no countermodel found");
            Ok(ExitCode::SUCCESS)
        }
        Some(c) => {
            println!("countermodel violates {}", c.violated.join(", "));
            match &a.out {
                Some(path) => write(path, &save_model(&c.model))?,
                None => print!("{}", save_model(&c.model)),
            }
            Ok(ExitCode::from(1))
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Eval { model, formula, at } => cmd_eval(&model, &formula, at.as_deref()),
        Command::Check { model, theory, properties, lemmas, json } => {
            cmd_check(&model, &theory, properties, lemmas, json)
        }
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Search(a) => cmd_search(&a),
        Command::Theory { name } => {
            let name: TheoryName = name.parse()?;
            print!("{}", print_theory_file(&builtin(name)));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
