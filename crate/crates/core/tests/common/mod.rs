#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use semitop_core::kernel3::{BinaryConn, TruthValue, UnaryConn};
use semitop_core::semantics::Model;
use semitop_core::semitopo::{Semitopology, SpatialModality};
use semitop_core::syntax::{Formula, Quantifier, Term};

pub const VARS: [&str; 3] = ["a", "b", "v'"];
pub const PREDS: [&str; 3] = ["echo", "ready", "p_1"];
pub const VALUES: [&str; 3] = ["u", "0", "half"];

fn term<R: Rng>(rng: &mut R, bound: &[String]) -> Term {
    if !bound.is_empty() && rng.gen_bool(0.6) {
        Term::Var(bound.choose(rng).unwrap().clone())
    } else {
        Term::val(VALUES.choose(rng).unwrap())
    }
}

/// A random formula whose free variables are among `bound`.
pub fn random_formula<R: Rng>(rng: &mut R, depth: u32, bound: &mut Vec<String>) -> Formula {
    if depth == 0 || rng.gen_bool(0.2) {
        return match rng.gen_range(0..10) {
            0 => Formula::Bot,
            1 => Formula::Eq(term(rng, bound), term(rng, bound)),
            2 => {
                let k = rng.gen_range(1..=2);
                let ps: Vec<String> = PREDS.choose_multiple(rng, k).map(|s| s.to_string()).collect();
                if rng.gen_bool(0.5) {
                    Formula::Correct(ps)
                } else {
                    Formula::Incorrect(ps)
                }
            }
            _ => Formula::pred(PREDS.choose(rng).unwrap(), term(rng, bound)),
        };
    }
    match rng.gen_range(0..4) {
        0 => Formula::unary(*UnaryConn::ALL.choose(rng).unwrap(), random_formula(rng, depth - 1, bound)),
        1 => {
            let a = random_formula(rng, depth - 1, bound);
            let b = random_formula(rng, depth - 1, bound);
            Formula::binary(*BinaryConn::ALL.choose(rng).unwrap(), a, b)
        }
        2 => Formula::spatial(*SpatialModality::ALL.choose(rng).unwrap(), random_formula(rng, depth - 1, bound)),
        _ => {
            let v = VARS.choose(rng).unwrap().to_string();
            bound.push(v.clone());
            let body = random_formula(rng, depth - 1, bound);
            bound.pop();
            Formula::quant(*Quantifier::ALL.choose(rng).unwrap(), &v, body)
        }
    }
}

pub fn random_closed_formula<R: Rng>(rng: &mut R, depth: u32) -> Formula {
    random_formula(rng, depth, &mut Vec::new())
}

/// A model over `from_threshold(n, q)` with every cell random.
pub fn random_model<R: Rng>(rng: &mut R, n: usize, q: usize, values: &[&str], preds: &[&str]) -> Model {
    let mut m = Model::new(values, Semitopology::from_threshold(n, q).unwrap(), preds).unwrap();
    for p in 0..preds.len() {
        for pt in 0..n {
            for v in 0..values.len() {
                m.set_at(p, pt, v, TruthValue::from_index(rng.gen_range(0..3)));
            }
        }
    }
    m
}
