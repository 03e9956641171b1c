//! Acceptance suite. Prints one line per criterion and exits nonzero if any
//! criterion fails or overruns its time limit.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semitop_core::checker::{
    check, enumerate_like, search_counterexample, verify_entailment, SearchConfig, SearchMode, DEFAULT_CAP,
};
use semitop_core::kernel3::{apply_binary, apply_unary, is_valid, leq, BinaryConn, TruthValue, UnaryConn, B, F, T};
use semitop_core::modelfile::{load_model, save_model};
use semitop_core::semantics::{denote, denote_direct, is_valid_in_model, Model};
use semitop_core::semitopo::{PointPredicate, Semitopology, SpatialModality};
use semitop_core::simulator::{extract_model, run, run_and_check, Protocol, RunConfig, Strategy};
use semitop_core::syntax::{fm, parse, print};
use semitop_core::theories::{builtin, derived_lemmas, properties, theory, PropertySchema, Theory, TheoryName};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn tv(c: char) -> TruthValue {
    TruthValue::from_char(c).unwrap()
}

// Rows and columns in the order T, B, F, as printed.
const TABLES: [(BinaryConn, [&str; 3]); 6] = [
    (BinaryConn::And, ["TBF", "BBF", "FFF"]),
    (BinaryConn::Or, ["TTT", "TBB", "TBF"]),
    (BinaryConn::WeakImp, ["TBF", "TBB", "TTT"]),
    (BinaryConn::StrongImp, ["TFF", "TBB", "TTT"]),
    (BinaryConn::Iff, ["TFF", "FTF", "FFT"]),
    (BinaryConn::Xor, ["FBT", "BBB", "TBF"]),
];

const UNARY: [(UnaryConn, &str); 6] = [
    (UnaryConn::Neg, "FBT"),
    (UnaryConn::ModT, "TFF"),
    (UnaryConn::ModB, "FTF"),
    (UnaryConn::ModF, "FFT"),
    (UnaryConn::ModTB, "TTF"),
    (UnaryConn::ModTF, "TFT"),
];

const TBF: [TruthValue; 3] = [T, B, F];

fn truth_tables() -> Outcome {
    let mut checked = 0;
    for (conn, rows) in TABLES {
        for (i, row) in rows.iter().enumerate() {
            for (j, c) in row.chars().enumerate() {
                let got = apply_binary(conn, TBF[i], TBF[j]);
                ensure(got == tv(c), || format!("{conn:?}({}, {}) = {got}, expected {c}", TBF[i], TBF[j]))?;
                checked += 1;
            }
        }
    }
    let mut unary = 0;
    for (conn, col) in UNARY {
        for (i, c) in col.chars().enumerate() {
            let got = apply_unary(conn, TBF[i]);
            ensure(got == tv(c), || format!("{conn:?}({}) = {got}, expected {c}", TBF[i]))?;
            unary += 1;
        }
    }
    Ok(format!("{} binary entries (45 in the five main tables plus 9 for xor), {unary} unary", checked))
}

fn kernel_laws() -> Outcome {
    use BinaryConn::*;
    use UnaryConn::*;
    let b = |c, x, y| apply_binary(c, x, y);
    let u = |c, x| apply_unary(c, x);
    let mut n = 0;
    for a in TruthValue::ALL {
        ensure(is_valid(b(Or, a, u(Neg, a))), || format!("excluded middle fails at {a}"))?;
        let para = is_valid(b(And, a, u(Neg, a)));
        ensure(para == (a == B) && para == is_valid(u(ModB, a)), || format!("paraconsistency fails at {a}"))?;
        ensure(u(Neg, u(ModT, u(Neg, a))) == u(ModTB, a), || format!("modal de Morgan (T) fails at {a}"))?;
        ensure(u(Neg, u(ModTB, u(Neg, a))) == u(ModT, a), || format!("modal de Morgan (TB) fails at {a}"))?;
        ensure(u(ModT, u(ModTB, a)) == u(ModTB, a) && u(ModTB, u(ModT, a)) == u(ModT, a), || {
            format!("modality composition fails at {a}")
        })?;
        n += 1;
        for c in TruthValue::ALL {
            ensure(is_valid(b(WeakImp, a, c)) == (a != T || is_valid(c)), || format!("weak MP at {a},{c}"))?;
            ensure(is_valid(b(StrongImp, a, c)) == (a != T || c == T), || format!("strong MP at {a},{c}"))?;
            ensure(is_valid(b(Or, a, c)) == (is_valid(a) || is_valid(c)), || format!("or validity at {a},{c}"))?;
            ensure(is_valid(b(And, a, c)) == (is_valid(a) && is_valid(c)), || format!("and validity at {a},{c}"))?;
            ensure(u(Neg, b(And, a, c)) == b(Or, u(Neg, a), u(Neg, c)), || format!("de Morgan at {a},{c}"))?;
            ensure(u(Neg, b(Or, a, c)) == b(And, u(Neg, a), u(Neg, c)), || format!("de Morgan at {a},{c}"))?;
            ensure(b(WeakImp, a, c) == b(Or, u(Neg, a), c), || format!("weak implication at {a},{c}"))?;
            ensure(b(WeakImp, a, c) == b(WeakImp, u(Neg, c), u(Neg, a)), || format!("contrapositive at {a},{c}"))?;
            ensure(b(StrongImp, a, c) == b(WeakImp, a, u(ModT, c)), || format!("strong implication at {a},{c}"))?;
            ensure(leq(a, c) == leq(u(Neg, c), u(Neg, a)), || format!("antitone negation at {a},{c}"))?;
            let xor = b(Or, b(And, a, u(Neg, c)), b(And, u(Neg, a), c));
            ensure(b(Xor, a, c) == xor, || format!("xor derivation at {a},{c}"))?;
            let agree = [ModT, ModB, ModF].map(|m| b(And, u(m, a), u(m, c)));
            ensure(b(Iff, a, c) == agree.into_iter().fold(F, |x, y| b(Or, x, y)), || {
                format!("iff derivation at {a},{c}")
            })?;
            for m in [ModT, ModTB] {
                ensure(u(m, b(And, a, c)) == b(And, u(m, a), u(m, c)), || format!("{m:?} over and at {a},{c}"))?;
                ensure(u(m, b(Or, a, c)) == b(Or, u(m, a), u(m, c)), || format!("{m:?} over or at {a},{c}"))?;
            }
            n += 1;
        }
    }
    Ok(format!("{n} grid points (3 unary + 9 binary)"))
}

/// Quorum and contraquorum by brute force over every subset, with the opens
/// of `from_threshold(n, q)` taken to be the subsets of size at least `q`.
fn oracle_quorum(f: &[TruthValue], q: usize) -> TruthValue {
    let n = f.len();
    (1u32..1 << n)
        .filter(|s| s.count_ones() as usize >= q)
        .map(|s| (0..n).filter(|i| s >> i & 1 == 1).map(|i| f[i]).fold(T, TruthValue::meet))
        .fold(F, TruthValue::join)
}

fn oracle_contraquorum(f: &[TruthValue], q: usize) -> TruthValue {
    oracle_quorum(&f.iter().map(|x| x.neg()).collect::<Vec<_>>(), q).neg()
}

fn lattice_modal_lemmas() -> Outcome {
    use SpatialModality::*;
    let s = Semitopology::from_threshold(4, 3).unwrap();
    let preds: Vec<PointPredicate> = PointPredicate::enumerate(4).collect();
    let modal = |m, f: &PointPredicate| s.eval_modality(m, &f.0);
    for f in &preds {
        ensure(modal(Quorum, f) == oracle_quorum(&f.0, 3), || {
            format!("quorum of {:?} disagrees with brute force", f.0)
        })?;
        ensure(modal(Contraquorum, f) == oracle_contraquorum(&f.0, 3), || {
            format!("contraquorum of {:?} disagrees with brute force", f.0)
        })?;
        let nf = f.map(TruthValue::neg);
        ensure(modal(Contraquorum, &nf).neg() == modal(Quorum, f), || format!("duality fails at {:?}", f.0))?;
        ensure(modal(Quorum, &nf).neg() == modal(Contraquorum, f), || format!("duality fails at {:?}", f.0))?;
    }
    let mut pairs = 0;
    for f in &preds {
        for g in &preds {
            let and = f.pointwise(g, TruthValue::meet);
            let or = f.pointwise(g, TruthValue::join);
            ensure(leq(modal(Everywhere, f).meet(modal(Quorum, g)), modal(Quorum, &and)), || {
                format!("everywhere/quorum lemma fails at {:?}, {:?}", f.0, g.0)
            })?;
            ensure(leq(modal(Quorum, f).meet(modal(Contraquorum, g)), modal(Somewhere, &and)), || {
                format!("quorum/contraquorum lemma fails at {:?}, {:?}", f.0, g.0)
            })?;
            ensure(leq(modal(Quorum, f).meet(modal(Quorum, g)), modal(Contraquorum, &and)), || {
                format!("3-twined theorem fails at {:?}, {:?}", f.0, g.0)
            })?;
            ensure(leq(modal(Quorum, &or), modal(Contraquorum, f).join(modal(Contraquorum, g))), || {
                format!("corollary fails at {:?}, {:?}", f.0, g.0)
            })?;
            pairs += 1;
        }
    }
    let weak = Semitopology::from_threshold(4, 2).unwrap();
    ensure(!weak.is_n_twined(3), || "from_threshold(4,2) reported 3-twined".into())?;
    let witness = preds.iter().flat_map(|f| preds.iter().map(move |g| (f, g))).find(|(f, g)| {
        let and = f.pointwise(g, TruthValue::meet);
        let lhs = weak.eval_modality(Quorum, &f.0).meet(weak.eval_modality(Quorum, &g.0));
        !leq(lhs, weak.eval_modality(Contraquorum, &and.0))
    });
    let (f, g) = witness.ok_or("no violating pair over from_threshold(4,2)")?;
    Ok(format!("{pairs} pairs over from_threshold(4,3); non-3-twined witness {} / {}", render(&f.0), render(&g.0)))
}

fn render(f: &[TruthValue]) -> String {
    semitop_core::kernel3::render(f)
}

fn unary_model(values: &[&str], f: &[TruthValue]) -> Model {
    let mut m = Model::new(values, Semitopology::from_threshold(1, 1).unwrap(), &["f"]).unwrap();
    for (v, x) in f.iter().enumerate() {
        m.set_at(0, 0, v, *x);
    }
    m
}

fn quantifiers() -> Outcome {
    let values = ["v0", "v1", "v2"];
    let ex = fm("exists a. f(a)");
    let ex01 = fm("exists01 a. f(a)");
    let ex1 = fm("exists1 a. f(a)");
    let mut maps = 0;
    for k in 0..27 {
        let f: Vec<TruthValue> = (0..3).map(|i| TruthValue::from_index(k / 3usize.pow(i) % 3)).collect();
        let m = unary_model(&values, &f);
        let d = |phi| {
            let fast = denote(&m, phi, "p0").unwrap();
            let slow = denote_direct(&m, phi, 0).unwrap();
            assert_eq!(fast, slow, "evaluators disagree on {phi} at {f:?}");
            fast
        };
        let (e, a, u) = (d(&ex), d(&ex01), d(&ex1));
        let ts = f.iter().filter(|x| **x == T).count();
        let has_b = f.contains(&B);
        let tag = render(&f);
        ensure(e == f.iter().copied().fold(F, TruthValue::join), || format!("exists at {tag}"))?;
        ensure(is_valid(a) == (ts <= 1), || format!("valid exists01 iff at most one T, at {tag}"))?;
        ensure(is_valid(u) == (f.iter().any(|x| is_valid(*x)) && is_valid(a)), || format!("valid exists1 at {tag}"))?;
        ensure((a == T) == (ts <= 1 && !has_b), || format!("exists01 = T iff at most one T and no B, at {tag}"))?;
        ensure((u == T) == (ts == 1 && !has_b), || format!("exists1 = T iff exactly one T and no B, at {tag}"))?;
        for i in 0..3 {
            for j in 0..3 {
                if (is_valid(a) || is_valid(u)) && f[i] == T && f[j] == T {
                    ensure(i == j, || format!("two T witnesses under a valid exists01 at {tag}"))?;
                }
            }
        }
        maps += 1;
    }
    // the case analysis: (map, exists1, exists01)
    let cases: [(&str, TruthValue, Option<TruthValue>); 7] = [
        ("TTF", F, Some(F)),
        ("TFF", T, Some(T)),
        ("TBF", B, Some(B)),
        ("BFF", B, Some(B)),
        ("BBF", B, Some(B)),
        ("BBB", B, None),
        ("FFF", F, Some(T)),
    ];
    for (row, want1, want01) in cases {
        let f: Vec<TruthValue> = row.chars().map(tv).collect();
        let m = unary_model(&values, &f);
        let u = denote(&m, &ex1, "p0").unwrap();
        ensure(u == want1, || format!("exists1 over {row} is {u}, expected {want1}"))?;
        if let Some(w) = want01 {
            let a = denote(&m, &ex01, "p0").unwrap();
            ensure(a == w, || format!("exists01 over {row} is {a}, expected {w}"))?;
        }
    }
    Ok(format!("{maps} maps, {} remark cases", cases.len()))
}

fn vote_template() -> Model {
    Model::new(&["u"], Semitopology::from_threshold(4, 3).unwrap(), &["vote", "observe"]).unwrap()
}

fn voting_entailment() -> Outcome {
    let template = vote_template();
    let t = theory(TheoryName::Vote);
    let mut props = properties(TheoryName::Vote);
    props.extend(derived_lemmas(TheoryName::Vote));
    let res = verify_entailment(&template, &t, &props, DEFAULT_CAP).map_err(|e| e.to_string())?;
    ensure(res.enumerated == 6561, || format!("enumerated {} models, expected 6561", res.enumerated))?;
    ensure(!res.vacuous(), || "ThyVote has no models".into())?;
    if let Some((m, bad)) = &res.first_violation {
        return Err(format!("model of ThyVote violates {bad:?}:\n{}", save_model(m)));
    }

    // Independent count of theory models, axiom by axiom at every point.
    let axioms: Vec<_> = t
        .axioms
        .iter()
        .filter_map(|a| match &a.body {
            semitop_core::theories::SchemaBody::Formula(f) => Some(f.clone()),
            _ => None,
        })
        .collect();
    let mut oracle_models = 0u64;
    for m in enumerate_like(&template, DEFAULT_CAP).map_err(|e| e.to_string())? {
        let ok = axioms.iter().all(|phi| (0..4).all(|p| is_valid(denote_direct(&m, phi, p).unwrap())));
        if ok {
            oracle_models += 1;
            let agreement = fm("[S] %T observe('u) & [S] %T !observe('u)");
            ensure((0..4).all(|p| !is_valid(denote_direct(&m, &agreement, p).unwrap())), || {
                "oracle found agreement violated".into()
            })?;
        }
    }
    ensure(oracle_models == res.theory_models, || {
        format!("checker counted {} models, direct evaluation {}", res.theory_models, oracle_models)
    })?;

    let mut weaker = t.clone();
    weaker.remove_axiom("Correct").map_err(|e| e.to_string())?;
    let agreement = properties(TheoryName::Vote);
    let res2 = verify_entailment(&template, &weaker, &agreement, DEFAULT_CAP).map_err(|e| e.to_string())?;
    let (cm, bad) = res2.first_violation.ok_or("dropping Correct found no countermodel")?;
    ensure(bad == ["Agreement"], || format!("countermodel violates {bad:?}"))?;
    ensure(is_valid_in_model(&cm, &fm("[S] %T observe('u) & [S] %T !observe('u)")).unwrap(), || {
        "countermodel does not make both observations".into()
    })?;
    let row = |p: &str| (0..4).map(|pt| cm.get_at(cm.predicate_index(p).unwrap(), pt, 0)).collect::<Vec<_>>();
    Ok(format!(
        "{} ThyVote models of 6561, entailment holds; without Correct: vote {} observe {}",
        res.theory_models,
        render(&row("vote")),
        render(&row("observe"))
    ))
}

fn bracha_grid() -> Vec<RunConfig> {
    let mut out = Vec::new();
    let mut seed = 0u64;
    while out.len() < 500 {
        for strategy in Strategy::ALL {
            for byz_sender in [false, true] {
                for nvals in [2, 3] {
                    let mut cfg = RunConfig::classic(Protocol::Bracha, 1);
                    cfg.strategy = strategy;
                    cfg.seed = seed;
                    cfg.values = ["u", "w", "x"][..nvals].iter().map(|s| s.to_string()).collect();
                    cfg.sender = (seed % 4) as usize;
                    cfg.sender_value = cfg.values[(seed as usize / 4) % nvals].clone();
                    let byz = if byz_sender { cfg.sender } else { (cfg.sender + 1 + (seed as usize % 3)) % 4 };
                    cfg.byzantine = [byz].into();
                    if out.len() < 500 {
                        out.push(cfg);
                    }
                }
            }
        }
        seed += 1;
    }
    out
}

fn expect_all_pass(cfgs: &[RunConfig], axioms: usize, props: usize, lemmas: usize) -> Result<usize, String> {
    for cfg in cfgs {
        let (tr, _, report) = run_and_check(cfg).map_err(|e| e.to_string())?;
        ensure(tr.warnings.is_empty(), || format!("{cfg:?}: {:?}", tr.warnings))?;
        ensure(report.axioms.len() == axioms && report.structural.len() == 1, || "axiom count".into())?;
        ensure(report.properties.len() == props && report.lemmas.len() == lemmas, || "property count".into())?;
        ensure(report.valid, || format!("{cfg:?}\n{}", report.to_text()))?;
    }
    Ok(cfgs.len())
}

fn bracha_loop() -> Outcome {
    let cfgs = bracha_grid();
    let lemmas = derived_lemmas(TheoryName::Bracha).len();
    let n = expect_all_pass(&cfgs, 12, 5, lemmas)?;
    let delivered = cfgs.iter().filter(|c| !c.is_byzantine(c.sender)).all(|c| {
        let tr = run(c).unwrap();
        (0..4).filter(|p| !c.is_byzantine(*p)).all(|p| tr.values_of(p, "deliver") == [c.sender_value.as_str()])
    });
    ensure(delivered, || "an honest sender's value was not delivered everywhere".into())?;
    Ok(format!("{n} runs, 12 axioms + 3-twined + 5 properties + {lemmas} lemmas each"))
}

fn bracha_fixture() -> Model {
    let mut m = Model::new(
        &["u", "w"],
        Semitopology::from_threshold(4, 3).unwrap(),
        &["broadcast", "echo", "ready", "deliver"],
    )
    .unwrap();
    m.set("broadcast", "p0", "u", T).unwrap();
    for p in m.space().points().to_vec() {
        m.set("echo", &p, "u", T).unwrap();
        for v in ["u", "w"] {
            m.set("ready", &p, v, T).unwrap();
            m.set("deliver", &p, v, T).unwrap();
        }
    }
    m
}

fn weakened_bracha() -> Theory {
    let mut t = theory(TheoryName::Bracha);
    t.replace_axiom("BrReady?", fm("ready(a) -> ([Q] echo(a) | [C] ready(a))")).unwrap();
    t
}

fn bracha_negative() -> Outcome {
    let weak = weakened_bracha();
    let props = properties(TheoryName::Bracha);
    let fixture = bracha_fixture();
    let r = check(&fixture, Some(&weak), &props, &[]).map_err(|e| e.to_string())?;
    ensure(r.axioms.iter().all(|v| v.valid) && r.structural.iter().all(|s| s.valid), || {
        format!("fixture is not a model of the weakened theory\n{}", r.to_text())
    })?;
    let failed: BTreeSet<&str> = r.properties.iter().filter(|v| !v.valid).map(|v| v.name.as_str()).collect();
    ensure(failed.contains("BrIntegrity") && failed.contains("BrConsistency"), || format!("fixture fails {failed:?}"))?;
    let unweakened = check(&fixture, Some(&theory(TheoryName::Bracha)), &[], &[]).map_err(|e| e.to_string())?;
    ensure(unweakened.failures().contains(&"BrReady?".to_string()), || "fixture is a model of ThyBB".into())?;

    let generators: Vec<Model> = ["u", "w"]
        .iter()
        .flat_map(|v| {
            (0..4).map(move |s| {
                let mut cfg = RunConfig::classic(Protocol::Bracha, 1);
                cfg.sender = s;
                cfg.sender_value = v.to_string();
                extract_model(&run(&cfg).unwrap(), &cfg).unwrap()
            })
        })
        .collect();
    let cfg = SearchConfig { mode: SearchMode::Guided, seed: 0, budget: 10_000, cap: DEFAULT_CAP };
    let out = search_counterexample(&weak, &props, &cfg, &generators[0], &generators).map_err(|e| e.to_string())?;
    let found = out.found.ok_or_else(|| format!("guided search found nothing in {} candidates", out.examined))?;
    let recheck = check(&found.model, Some(&weak), &props, &[]).map_err(|e| e.to_string())?;
    ensure(recheck.axioms.iter().all(|v| v.valid) && !recheck.valid, || "search result does not re-check".into())?;
    let same = search_counterexample(&weak, &props, &cfg, &generators[0], &generators).map_err(|e| e.to_string())?;
    ensure(same.examined == out.examined, || "guided search is not reproducible".into())?;

    let full = theory(TheoryName::Bracha);
    let mut swept = Vec::new();
    for (n, q, values) in [(1, 1, vec!["u", "w"]), (2, 2, vec!["u"]), (1, 1, vec!["u", "w", "x"]), (3, 3, vec!["u"])] {
        let template = Model::new(
            &values,
            Semitopology::from_threshold(n, q).unwrap(),
            &["broadcast", "echo", "ready", "deliver"],
        )
        .unwrap();
        let res = verify_entailment(&template, &full, &props, DEFAULT_CAP).map_err(|e| e.to_string())?;
        ensure(!res.vacuous(), || format!("ThyBB has no models at n={n}, |Val|={}", values.len()))?;
        if let Some((m, bad)) = res.first_violation {
            return Err(format!("ThyBB countermodel violating {bad:?}:\n{}", save_model(&m)));
        }
        let teeth = verify_entailment(&template, &weak, &props, DEFAULT_CAP).map_err(|e| e.to_string())?;
        let weak_note = if teeth.holds() { "holds" } else { "fails" };
        swept.push(format!(
            "n={n},|Val|={}: {} enumerated, {} models, weakened theory {weak_note}",
            values.len(),
            res.enumerated,
            res.theory_models
        ));
    }
    Ok(format!(
        "fixture fails {:?}; guided search hit {:?} after {} candidates; sweeps [{}]",
        failed,
        found.violated,
        out.examined,
        swept.join("; ")
    ))
}

fn crusader_grid() -> Vec<RunConfig> {
    let mut out = Vec::new();
    for inputs in ["0000", "1111", "0001", "0011", "0101"] {
        let inputs: Vec<u8> = inputs.bytes().map(|b| b - b'0').collect();
        let mut honest = RunConfig::classic(Protocol::Crusader, 1);
        honest.inputs = inputs.clone();
        out.push(honest);
        for strategy in Strategy::ALL {
            for seed in 0..5 {
                let mut cfg = RunConfig::classic(Protocol::Crusader, 1);
                cfg.inputs = inputs.clone();
                cfg.byzantine = [3].into();
                cfg.strategy = strategy;
                cfg.seed = seed;
                out.push(cfg);
            }
        }
    }
    out
}

fn crusader_loop() -> Outcome {
    let cfgs = crusader_grid();
    let lemmas = derived_lemmas(TheoryName::Crusader);
    ensure(lemmas.iter().any(|l| print(&l.formula) == "echo2('half) => bot"), || "impossibility lemma missing".into())?;
    let n = expect_all_pass(&cfgs, 12, 4, lemmas.len())?;
    Ok(format!("{n} runs, 12 axioms + 3-twined + 4 properties + {} lemmas each", lemmas.len()))
}

fn split_input() -> RunConfig {
    let mut cfg = RunConfig::classic(Protocol::Crusader, 1);
    cfg.inputs = vec![0, 0, 1, 1];
    cfg
}

fn non_functional_output() -> Outcome {
    let cfg = split_input();
    let (_, m, report) = run_and_check(&cfg).map_err(|e| e.to_string())?;
    ensure(report.axioms.iter().all(|v| v.valid) && report.structural.iter().all(|s| s.valid), || {
        format!("ThyCA fails on the split-input run\n{}", report.to_text())
    })?;
    let functional = fm("exists01 a. output(a)");
    ensure(!is_valid_in_model(&m, &functional).unwrap(), || "exists01 a. output(a) is valid".into())?;
    let both = fm("%T (output('half) & output('1))");
    let witnesses: Vec<&String> = m.space().points().iter().filter(|p| denote(&m, &both, p).unwrap() == T).collect();
    ensure(!witnesses.is_empty(), || "no point outputs both half and 1".into())?;

    let t = theory(TheoryName::Crusader);
    let prop = [PropertySchema::valid("OutputFunctional", "exists01 a. output(a)")];
    let cfg_s = SearchConfig { mode: SearchMode::Guided, seed: 0, budget: 1, cap: DEFAULT_CAP };
    let out = search_counterexample(&t, &prop, &cfg_s, &m, std::slice::from_ref(&m)).map_err(|e| e.to_string())?;
    ensure(out.found.is_some(), || "search did not confirm the example model".into())?;
    Ok(format!("ThyCA valid, output not functional, both outputs at {:?}", witnesses))
}

fn determinism() -> Outcome {
    let mut reports = 0;
    for protocol in [Protocol::Vote, Protocol::Bracha, Protocol::Crusader] {
        for seed in [0, 7, 42] {
            let mut cfg = RunConfig::classic(protocol, 1);
            cfg.byzantine = [2].into();
            cfg.strategy = Strategy::Random;
            cfg.seed = seed;
            let (t1, m1, r1) = run_and_check(&cfg).map_err(|e| e.to_string())?;
            let (t2, m2, r2) = run_and_check(&cfg).map_err(|e| e.to_string())?;
            ensure(t1.to_json() == t2.to_json(), || format!("traces differ for {cfg:?}"))?;
            ensure(r1.to_json() == r2.to_json(), || format!("reports differ for {cfg:?}"))?;
            ensure(save_model(&m1) == save_model(&m2), || format!("models differ for {cfg:?}"))?;
            let text = save_model(&m1);
            let reloaded = load_model(&text, &[]).map_err(|e| e.to_string())?;
            ensure(save_model(&reloaded) == text, || "model file does not round-trip".into())?;
            reports += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..200 {
        let n = rng.gen_range(1..=5);
        let q = rng.gen_range(1..=n);
        let m = common::random_model(&mut rng, n, q, &["u", "0", "half"], &["echo", "ready"]);
        let text = save_model(&m);
        ensure(save_model(&load_model(&text, &[]).unwrap()) == text, || "random model does not round-trip".into())?;
    }
    let mut formulas = 0;
    for _ in 0..10_000 {
        let depth = rng.gen_range(0..6);
        let phi = common::random_closed_formula(&mut rng, depth);
        let text = print(&phi);
        let back = parse(&text).map_err(|e| format!("{text}: {e}"))?;
        ensure(back == phi, || format!("parse(print(phi)) differs for {text}"))?;
        formulas += 1;
    }
    let tf = builtin(TheoryName::Bracha);
    ensure(!tf.theory.axioms.is_empty(), || "no theory".into())?;
    Ok(format!("{reports} configurations run twice, {formulas} formulas, 203 model files round-tripped"))
}

type Criterion = (&'static str, u64, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("truth-table fidelity", 1, truth_tables),
        ("kernel laws", 1, kernel_laws),
        ("lattice-modal lemmas", 5, lattice_modal_lemmas),
        ("quantifier characterizations", 1, quantifiers),
        ("voting entailment", 10, voting_entailment),
        ("bracha loop closure", 30, bracha_loop),
        ("bracha negative control", 60, bracha_negative),
        ("crusader loop closure", 30, crusader_loop),
        ("non-functional output witness", 5, non_functional_output),
        ("determinism and round-trips", 30, determinism),
    ];
    let mut failures = 0;
    for (i, (name, limit, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let over = elapsed > Duration::from_secs(*limit);
        let verdict = match (&outcome, over) {
            (Ok(_), false) => "PASS",
            _ => "FAIL",
        };
        let detail = match &outcome {
            Ok(d) if over => format!("{d}; exceeded the {limit} s limit"),
            Ok(d) => d.clone(),
            Err(e) => e.clone(),
        };
        println!("criterion {:>2} {verdict} {name} ({:.2} s, limit {limit} s): {detail}", i + 1, elapsed.as_secs_f64());
        if verdict == "FAIL" {
            failures += 1;
        }
    }
    if failures == 0 {
        println!("acceptance: all 10 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} of 10 criteria fail");
        ExitCode::FAILURE
    }
}
