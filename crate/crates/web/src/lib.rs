//! Browser bindings. Each exported function has a plain Rust twin returning
//! `Result<String, String>` with a JSON payload, so the logic is testable
//! without a browser.

use semitop_core::checker::check;
use semitop_core::kernel3::TruthValue;
use semitop_core::modelfile::{load_model, save_model};
use semitop_core::semantics::denote_all;
use semitop_core::semitopo::{Semitopology, SpatialModality};
use semitop_core::simulator::{extract_model, run, Protocol, RunConfig};
use semitop_core::syntax::{free_vars, parse};
use semitop_core::theories::builtin;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Denotation of a closed formula at every point of a model file.
pub fn evaluate(model_json: &str, formula: &str) -> Result<String, String> {
    let phi = parse(formula).map_err(err)?;
    if let Some(v) = free_vars(&phi).into_iter().next() {
        return Err(format!("free variable {v:?}; quantify it or use a value like 'u"));
    }
    let preds: Vec<String> = phi.predicates().into_iter().collect();
    let m = load_model(model_json, &preds).map_err(err)?;
    let row = denote_all(&m, &phi).map_err(err)?;
    Ok(json!({
        "points": m.space().points(),
        "values": row.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
        "valid": row.iter().all(|v| v.is_valid()),
    })
    .to_string())
}

/// The four spatial modalities of a point predicate, written like `TTBF`,
/// over the threshold semitopology with `n` points and quorums of size `q`.
pub fn modalities(n: usize, q: usize, row: &str) -> Result<String, String> {
    let space = Semitopology::from_threshold(n, q).map_err(err)?;
    let f = semitop_core::kernel3::parse_row(row).map_err(|e| format!("not a truth value: {:?}", e.0))?;
    if f.len() != n {
        return Err(format!("expected {n} truth values, got {}", f.len()));
    }
    let get = |m| space.eval_modality(m, &f).to_string();
    let quorums: Vec<Vec<String>> = space.nonempty_basis_opens().into_iter().map(|o| space.names_of(o)).collect();
    let meets: Vec<String> = space
        .nonempty_basis_opens()
        .into_iter()
        .map(|o| o.iter().map(|i| f[i]).fold(TruthValue::T, TruthValue::meet).to_string())
        .collect();
    Ok(json!({
        "everywhere": get(SpatialModality::Everywhere),
        "somewhere": get(SpatialModality::Somewhere),
        "quorum": get(SpatialModality::Quorum),
        "contraquorum": get(SpatialModality::Contraquorum),
        "quorums": quorums,
        "meets": meets,
        "twined3": space.is_n_twined(3),
        "tolerates": space.coquorum_bound(),
    })
    .to_string())
}

/// Run a protocol in the classic `3f+1` preset, extract the model and check
/// it against the protocol's theory, properties and lemmas.
pub fn simulate(
    protocol: &str,
    f: usize,
    byzantine: &str,
    strategy: &str,
    seed: u64,
    inputs: &str,
) -> Result<String, String> {
    let protocol: Protocol = protocol.parse()?;
    if f == 0 || f > 5 {
        return Err("f must be between 1 and 5".into());
    }
    let mut cfg = RunConfig::classic(protocol, f);
    cfg.strategy = strategy.parse()?;
    cfg.seed = seed;
    for p in byzantine.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let i: usize = p.trim_start_matches('p').parse().map_err(|_| format!("not a participant: {p:?}"))?;
        cfg.byzantine.insert(i);
    }
    let digits: Vec<char> = inputs.chars().filter(|c| !c.is_whitespace() && *c != ',').collect();
    if !digits.is_empty() {
        match protocol {
            Protocol::Crusader => cfg.inputs = digits.iter().map(|c| if *c == '1' { 1 } else { 0 }).collect(),
            Protocol::Vote => cfg.votes = digits.iter().map(|c| matches!(c, '1' | 'T')).collect(),
            Protocol::Bracha => {}
        }
    }
    let tr = run(&cfg).map_err(err)?;
    let m = extract_model(&tr, &cfg).map_err(err)?;
    let tf = builtin(protocol.theory());
    let report = check(&m, Some(&tf.theory), &tf.properties, &tf.lemmas).map_err(err)?;
    let events: Vec<String> = tr
        .events
        .iter()
        .enumerate()
        .map(|(p, es)| {
            let tag = if cfg.is_byzantine(p) { " (byzantine)" } else { "" };
            let list: Vec<String> = es.iter().map(|e| format!("r{} {}({})", e.round, e.action, e.value)).collect();
            format!("p{p}{tag}: {}", list.join(", "))
        })
        .collect();
    Ok(json!({
        "rounds": tr.rounds.len(),
        "messages": tr.rounds.iter().map(Vec::len).sum::<usize>(),
        "events": events,
        "warnings": tr.warnings,
        "report": report.to_text(),
        "valid": report.valid,
        "model": save_model(&m),
    })
    .to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = evaluate)]
pub fn evaluate_js(model_json: &str, formula: &str) -> Result<String, JsValue> {
    js(evaluate(model_json, formula))
}

#[wasm_bindgen(js_name = modalities)]
pub fn modalities_js(n: usize, q: usize, row: &str) -> Result<String, JsValue> {
    js(modalities(n, q, row))
}

#[wasm_bindgen(js_name = simulate)]
pub fn simulate_js(
    protocol: &str,
    f: usize,
    byzantine: &str,
    strategy: &str,
    seed: u64,
    inputs: &str,
) -> Result<String, JsValue> {
    js(simulate(protocol, f, byzantine, strategy, seed, inputs))
}
