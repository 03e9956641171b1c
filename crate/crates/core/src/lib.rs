//! Three-valued modal logic over finite semitopologies.
//!
//! The crate evaluates formulas over models whose points carry truth values
//! in `F < B < T`, encodes axiom systems for a voting protocol, Bracha
//! Broadcast and Crusader Agreement, checks and searches models, and runs a
//! deterministic byzantine simulator whose executions extract to models.

pub mod checker;
pub mod kernel3;
pub mod modelfile;
pub mod semantics;
pub mod semitopo;
pub mod simulator;
pub mod syntax;
pub mod theories;
