//! Deterministic synchronous simulation of the voting, Bracha Broadcast and
//! Crusader Agreement protocols with byzantine participants, and extraction
//! of executions into models.
//!
//! Every message sent in round `r` is delivered at the start of round
//! `r + 1`, to every recipient including the sender. A recipient handles its
//! deliveries one at a time, ordered by sender, tag and value, and reacts
//! after each; its reactions are sent in the same round. Execution stops at
//! the first round in which nothing is sent, or after the round limit.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::checker::{check, CheckError, Report};
use crate::kernel3::TruthValue;
use crate::semantics::Model;
use crate::semitopo::{Semitopology, MAX_POINTS};
use crate::theories::{builtin, TheoryName, CA_VALUES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Vote,
    Bracha,
    Crusader,
}

impl Protocol {
    pub fn theory(self) -> TheoryName {
        match self {
            Protocol::Vote => TheoryName::Vote,
            Protocol::Bracha => TheoryName::Bracha,
            Protocol::Crusader => TheoryName::Crusader,
        }
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vote" => Ok(Protocol::Vote),
            "bracha" => Ok(Protocol::Bracha),
            "crusader" => Ok(Protocol::Crusader),
            _ => Err(format!("unknown protocol {s:?} (expected vote, bracha or crusader)")),
        }
    }
}

/// How byzantine participants behave.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Follow the protocol.
    Conform,
    /// In the first two rounds send one value to the lower half of the
    /// recipients and another to the upper half, on every tag.
    Equivocate,
    /// Send nothing.
    Silent,
    /// In the first two rounds send, per recipient and tag, a random value
    /// or nothing.
    Random,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Conform, Strategy::Equivocate, Strategy::Silent, Strategy::Random];
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "conform" => Ok(Strategy::Conform),
            "equivocate" => Ok(Strategy::Equivocate),
            "silent" => Ok(Strategy::Silent),
            "random" => Ok(Strategy::Random),
            _ => Err(format!("unknown strategy {s:?} (expected conform, equivocate, silent or random)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tag {
    Vote,
    Broadcast,
    Echo,
    Ready,
    Echo1,
    Echo2,
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tag::Vote => "vote",
            Tag::Broadcast => "broadcast",
            Tag::Echo => "echo",
            Tag::Ready => "ready",
            Tag::Echo1 => "echo1",
            Tag::Echo2 => "echo2",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub protocol: Protocol,
    pub n: usize,
    pub quorum: usize,
    pub contraquorum: usize,
    pub byzantine: BTreeSet<usize>,
    pub strategy: Strategy,
    pub seed: u64,
    /// Bracha: the value set.
    pub values: Vec<String>,
    /// Bracha: the designated sender and the value it sends if honest.
    pub sender: usize,
    pub sender_value: String,
    /// Vote: each participant's vote.
    pub votes: Vec<bool>,
    /// Crusader: each participant's input, 0 or 1.
    pub inputs: Vec<u8>,
    /// See [`RunConfig::max_rounds`].
    pub max_rounds: Option<usize>,
    /// Crusader: output at most one value per participant.
    pub single_output: bool,
}

impl RunConfig {
    /// `3f + 1` participants, quorums of `2f + 1`, contraquorums of `f + 1`,
    /// nobody byzantine, everyone voting yes, every input 0, and sender `p0`
    /// broadcasting `u` from `{u, w}`.
    pub fn classic(protocol: Protocol, f: usize) -> Self {
        let n = 3 * f + 1;
        RunConfig {
            protocol,
            n,
            quorum: 2 * f + 1,
            contraquorum: f + 1,
            byzantine: BTreeSet::new(),
            strategy: Strategy::Conform,
            seed: 0,
            values: vec!["u".into(), "w".into()],
            sender: 0,
            sender_value: "u".into(),
            votes: vec![true; n],
            inputs: vec![0; n],
            max_rounds: None,
            single_output: false,
        }
    }

    /// Defaults to a bound under which every run reaches its fixpoint: after
    /// the adversary's rounds, each round that sends anything includes a new
    /// (tag, value) pair from some participant, and each participant has few.
    pub fn max_rounds(&self) -> usize {
        let per_node = match self.protocol {
            Protocol::Vote => 0,
            Protocol::Bracha => self.values.len() + 2,
            Protocol::Crusader => 3,
        };
        self.max_rounds.unwrap_or(ADVERSARY_ROUNDS + 1 + self.n * per_node)
    }

    pub fn is_byzantine(&self, p: usize) -> bool {
        self.byzantine.contains(&p)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if self.n == 0 || self.n > MAX_POINTS {
            return bad(format!("n must be between 1 and {MAX_POINTS}, got {}", self.n));
        }
        if self.quorum == 0 || self.quorum > self.n {
            return bad(format!("quorum size must be between 1 and n = {}, got {}", self.n, self.quorum));
        }
        if self.contraquorum == 0 || self.contraquorum > self.n {
            return bad(format!("contraquorum size must be between 1 and n = {}, got {}", self.n, self.contraquorum));
        }
        if let Some(p) = self.byzantine.iter().find(|&&p| p >= self.n) {
            return bad(format!("byzantine participant p{p} does not exist"));
        }
        if self.byzantine.len() > self.n - self.quorum {
            return bad(format!(
                "{} byzantine participants leave no honest quorum of {} among {}",
                self.byzantine.len(),
                self.quorum,
                self.n
            ));
        }
        match self.protocol {
            Protocol::Vote => {
                if self.votes.len() != self.n {
                    return bad(format!("expected {} votes, got {}", self.n, self.votes.len()));
                }
            }
            Protocol::Bracha => {
                if self.values.is_empty() {
                    return bad("the value set is empty".into());
                }
                if self.values.iter().collect::<BTreeSet<_>>().len() != self.values.len() {
                    return bad("the value set has duplicates".into());
                }
                if !self.values.contains(&self.sender_value) {
                    return bad(format!("sender value {:?} is not in the value set", self.sender_value));
                }
                if self.sender >= self.n {
                    return bad(format!("sender p{} does not exist", self.sender));
                }
            }
            Protocol::Crusader => {
                if self.inputs.len() != self.n {
                    return bad(format!("expected {} inputs, got {}", self.n, self.inputs.len()));
                }
                if self.inputs.iter().any(|&i| i > 1) {
                    return bad("inputs must be 0 or 1".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error("trace does not belong to this configuration: {0}")]
    Mismatch(String),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Message {
    pub from: usize,
    pub to: usize,
    pub tag: Tag,
    pub value: String,
}

/// Something a participant did: echo, ready, deliver, broadcast, vote,
/// observe, echo1, echo2 or output, at a value.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Event {
    pub round: usize,
    pub action: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Trace {
    pub protocol: Protocol,
    pub n: usize,
    /// Messages sent in each round, starting with round 1.
    pub rounds: Vec<Vec<Message>>,
    /// Per participant, in order.
    pub events: Vec<Vec<Event>>,
    pub warnings: Vec<String>,
}

impl Trace {
    pub fn did(&self, p: usize, action: &str, value: &str) -> bool {
        self.events[p].iter().any(|e| e.action == action && e.value == value)
    }

    pub fn values_of(&self, p: usize, action: &str) -> Vec<&str> {
        self.events[p].iter().filter(|e| e.action == action).map(|e| e.value.as_str()).collect()
    }

    /// JSON with point names instead of indices.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Msg<'a> {
            from: String,
            to: String,
            tag: Tag,
            value: &'a str,
        }
        #[derive(Serialize)]
        struct Out<'a> {
            protocol: Protocol,
            n: usize,
            rounds: Vec<Vec<Msg<'a>>>,
            events: BTreeMap<String, &'a [Event]>,
            warnings: &'a [String],
        }
        let name = |p: usize| format!("p{p}");
        let out = Out {
            protocol: self.protocol,
            n: self.n,
            rounds: self
                .rounds
                .iter()
                .map(|r| {
                    r.iter().map(|m| Msg { from: name(m.from), to: name(m.to), tag: m.tag, value: &m.value }).collect()
                })
                .collect(),
            events: self.events.iter().enumerate().map(|(p, e)| (name(p), e.as_slice())).collect(),
            warnings: &self.warnings,
        };
        let mut s = serde_json::to_string_pretty(&out).expect("traces always serialize");
        s.push('\n');
        s
    }
}

/// Per-participant protocol state.
#[derive(Default)]
struct Node {
    /// Senders seen per (tag, value), as a bitmask.
    seen: BTreeMap<(Tag, String), u64>,
    /// (tag, value) pairs this node has sent.
    sent: BTreeSet<(Tag, String)>,
    /// Actions performed, with their values.
    done: BTreeSet<(String, String)>,
    events: Vec<Event>,
}

impl Node {
    fn count(&self, tag: Tag, value: &str) -> usize {
        self.seen.get(&(tag, value.to_string())).map_or(0, |m| m.count_ones() as usize)
    }

    fn record(&mut self, m: &Message) {
        *self.seen.entry((m.tag, m.value.clone())).or_default() |= 1u64 << m.from;
    }

    fn has_sent(&self, tag: Tag, value: &str) -> bool {
        self.sent.contains(&(tag, value.to_string()))
    }

    fn sent_any(&self, tag: Tag) -> bool {
        self.sent.iter().any(|(t, _)| *t == tag)
    }

    fn has_done(&self, action: &str) -> bool {
        self.done.iter().any(|(a, _)| a == action)
    }

    /// Record an action once; returns whether it was new.
    fn act(&mut self, round: usize, action: &str, value: &str) -> bool {
        if self.done.insert((action.to_string(), value.to_string())) {
            self.events.push(Event { round, action: action.to_string(), value: value.to_string() });
            true
        } else {
            false
        }
    }

    /// Send to everyone and record it as an action named after the tag.
    fn send(&mut self, round: usize, tag: Tag, value: &str, out: &mut Vec<(Tag, String)>) {
        if self.sent.insert((tag, value.to_string())) {
            self.act(round, &tag.to_string(), value);
            out.push((tag, value.to_string()));
        }
    }
}

/// Seeded per (seed, round, sender, recipient).
fn adversary_rng(seed: u64, round: usize, from: usize, to: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(round as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(from as u64).to_le_bytes());
    key[24..].copy_from_slice(&(to as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// The last round in which misbehaving strategies send anything.
const ADVERSARY_ROUNDS: usize = 2;

struct Sim<'a> {
    cfg: &'a RunConfig,
    nodes: Vec<Node>,
}

impl<'a> Sim<'a> {
    fn crusader_value(i: u8) -> &'static str {
        if i == 0 {
            "0"
        } else {
            "1"
        }
    }

    /// What an honest (or conforming) participant sends in round 1.
    fn start(&mut self, p: usize) -> Vec<(Tag, String)> {
        let cfg = self.cfg;
        let mut out = Vec::new();
        let node = &mut self.nodes[p];
        match cfg.protocol {
            Protocol::Vote => {
                let v = if cfg.votes[p] { "T" } else { "F" };
                node.send(1, Tag::Vote, v, &mut out);
            }
            Protocol::Bracha => {
                if p == cfg.sender {
                    node.send(1, Tag::Broadcast, &cfg.sender_value, &mut out);
                }
            }
            Protocol::Crusader => {
                node.send(1, Tag::Echo1, Self::crusader_value(cfg.inputs[p]), &mut out);
            }
        }
        out
    }

    /// Honest reaction to one delivered message.
    fn react(&mut self, p: usize, round: usize, m: &Message, out: &mut Vec<(Tag, String)>) {
        let cfg = self.cfg;
        let (q, k) = (cfg.quorum, cfg.contraquorum);
        let node = &mut self.nodes[p];
        node.record(m);
        match cfg.protocol {
            Protocol::Vote => {}
            Protocol::Bracha => match m.tag {
                Tag::Broadcast => {
                    if m.from == cfg.sender && !node.sent_any(Tag::Echo) {
                        node.send(round, Tag::Echo, &m.value, out);
                    }
                }
                Tag::Echo | Tag::Ready => {
                    let v = &m.value;
                    if node.count(Tag::Echo, v) >= q || node.count(Tag::Ready, v) >= k {
                        node.send(round, Tag::Ready, v, out);
                    }
                    if node.count(Tag::Ready, v) >= q {
                        node.act(round, "deliver", v);
                    }
                }
                _ => {}
            },
            Protocol::Crusader => {
                if !matches!(m.tag, Tag::Echo1 | Tag::Echo2) {
                    return;
                }
                for w in ["0", "1"] {
                    if !node.has_sent(Tag::Echo1, w) && node.count(Tag::Echo1, w) >= k {
                        node.send(round, Tag::Echo1, w, out);
                    }
                }
                if !node.sent_any(Tag::Echo2) {
                    let ws: Vec<String> = node
                        .seen
                        .iter()
                        .filter(|((t, _), s)| *t == Tag::Echo1 && s.count_ones() as usize >= q)
                        .map(|((_, w), _)| w.clone())
                        .collect();
                    // a single delivery raises one count, so at most one
                    // value crosses the threshold here
                    if let Some(w) = ws.first() {
                        node.send(round, Tag::Echo2, w, out);
                    }
                }
                let may_output = |node: &Node| !cfg.single_output || !node.has_done("output");
                let us: Vec<String> =
                    node.seen.keys().filter(|(t, _)| *t == Tag::Echo2).map(|(_, u)| u.clone()).collect();
                for u in us {
                    if node.count(Tag::Echo2, &u) >= q && node.count(Tag::Echo1, &u) >= q && may_output(node) {
                        node.act(round, "output", &u);
                    }
                }
                if node.count(Tag::Echo1, "0") >= q && node.count(Tag::Echo1, "1") >= q && may_output(node) {
                    node.act(round, "output", "half");
                }
            }
        }
    }

    fn relay_tags(&self, p: usize) -> Vec<Tag> {
        match self.cfg.protocol {
            Protocol::Vote => vec![Tag::Vote],
            Protocol::Bracha => {
                let mut t = vec![Tag::Echo, Tag::Ready];
                if p == self.cfg.sender {
                    t.insert(0, Tag::Broadcast);
                }
                t
            }
            Protocol::Crusader => vec![Tag::Echo1, Tag::Echo2],
        }
    }

    fn alphabet(&self) -> Vec<String> {
        match self.cfg.protocol {
            Protocol::Vote => vec!["T".into(), "F".into()],
            Protocol::Bracha => self.cfg.values.clone(),
            Protocol::Crusader => CA_VALUES.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Point-to-point messages of a misbehaving byzantine participant.
    fn misbehave(&self, p: usize, round: usize) -> Vec<Message> {
        let cfg = self.cfg;
        let mut out = Vec::new();
        if round > ADVERSARY_ROUNDS {
            return out;
        }
        let alphabet = self.alphabet();
        let (a, b) = match cfg.protocol {
            Protocol::Crusader => ("0".to_string(), "1".to_string()),
            _ => (alphabet[0].clone(), alphabet[1 % alphabet.len()].clone()),
        };
        for to in 0..cfg.n {
            match cfg.strategy {
                Strategy::Equivocate => {
                    let v = if to < cfg.n / 2 { &a } else { &b };
                    for tag in self.relay_tags(p) {
                        out.push(Message { from: p, to, tag, value: v.clone() });
                    }
                }
                Strategy::Random => {
                    let mut rng = adversary_rng(cfg.seed, round, p, to);
                    for tag in self.relay_tags(p) {
                        if rng.gen_bool(0.5) {
                            let v = alphabet[rng.gen_range(0..alphabet.len())].clone();
                            out.push(Message { from: p, to, tag, value: v });
                        }
                    }
                }
                Strategy::Conform | Strategy::Silent => {}
            }
        }
        out
    }

    fn follows_protocol(&self, p: usize) -> bool {
        !self.cfg.is_byzantine(p) || self.cfg.strategy == Strategy::Conform
    }

    fn broadcast_all(&self, p: usize, sends: Vec<(Tag, String)>, out: &mut Vec<Message>) {
        for (tag, value) in sends {
            for to in 0..self.cfg.n {
                out.push(Message { from: p, to, tag, value: value.clone() });
            }
        }
    }
}

/// Execute a configuration.
pub fn run(cfg: &RunConfig) -> Result<Trace, SimError> {
    cfg.validate()?;
    let n = cfg.n;
    let mut sim = Sim { cfg, nodes: (0..n).map(|_| Node::default()).collect() };
    let mut rounds: Vec<Vec<Message>> = Vec::new();
    let mut warnings = Vec::new();

    let mut outbox = Vec::new();
    for p in 0..n {
        if sim.follows_protocol(p) {
            let sends = sim.start(p);
            sim.broadcast_all(p, sends, &mut outbox);
        } else {
            outbox.extend(sim.misbehave(p, 1));
        }
    }
    outbox.sort();
    rounds.push(outbox);

    for round in 2..=cfg.max_rounds() {
        let delivered = rounds.last().expect("round 1 exists");
        if delivered.is_empty() {
            break;
        }
        let mut inbox: Vec<Vec<&Message>> = vec![Vec::new(); n];
        for m in delivered {
            inbox[m.to].push(m);
        }
        let mut outbox = Vec::new();
        for (p, msgs) in inbox.into_iter().enumerate() {
            let mut sends = Vec::new();
            let mut ms = msgs;
            ms.sort_by(|x, y| (x.from, x.tag, &x.value).cmp(&(y.from, y.tag, &y.value)));
            for m in ms {
                if sim.follows_protocol(p) {
                    sim.react(p, round, m, &mut sends);
                } else {
                    sim.nodes[p].record(m);
                }
            }
            if sim.follows_protocol(p) {
                sim.broadcast_all(p, sends, &mut outbox);
            } else {
                outbox.extend(sim.misbehave(p, round));
            }
        }
        outbox.sort();
        rounds.push(outbox);
    }
    if rounds.last().is_some_and(|r| !r.is_empty()) {
        warnings.push(format!("stopped after {} rounds with messages still in flight", cfg.max_rounds()));
    }
    while rounds.last().is_some_and(|r| r.is_empty()) && rounds.len() > 1 {
        rounds.pop();
    }

    if cfg.protocol == Protocol::Vote {
        let final_round = rounds.len() + 1;
        for p in 0..n {
            let node = &mut sim.nodes[p];
            let obs = if node.count(Tag::Vote, "T") >= cfg.quorum {
                "T"
            } else if node.count(Tag::Vote, "F") >= cfg.quorum {
                "F"
            } else {
                "none"
            };
            node.act(final_round, "observe", obs);
        }
    }

    Ok(Trace {
        protocol: cfg.protocol,
        n,
        rounds,
        events: sim.nodes.into_iter().map(|nd| nd.events).collect(),
        warnings,
    })
}

/// The value set of the model extracted from a run.
pub fn model_values(cfg: &RunConfig) -> Vec<String> {
    match cfg.protocol {
        Protocol::Vote => vec!["u".into()],
        Protocol::Bracha => cfg.values.clone(),
        Protocol::Crusader => CA_VALUES.iter().map(|s| s.to_string()).collect(),
    }
}

/// Turn a run into a model over `from_threshold(n, quorum)`.
///
/// Honest participants get `T` exactly where they acted and `F` elsewhere;
/// byzantine participants get `B` everywhere. Two predicates are special.
/// `broadcast` is `T` at an honest sender for its value and `F` elsewhere,
/// or `B` everywhere when the sender is byzantine. `observe` at a byzantine
/// participant is read from the votes it received, like an honest one,
/// since a byzantine observation has no content a correct rule could rely
/// on.
pub fn extract_model(tr: &Trace, cfg: &RunConfig) -> Result<Model, SimError> {
    cfg.validate()?;
    if tr.protocol != cfg.protocol || tr.n != cfg.n {
        return Err(SimError::Mismatch(format!(
            "trace is {:?} with n = {}, configuration is {:?} with n = {}",
            tr.protocol, tr.n, cfg.protocol, cfg.n
        )));
    }
    let space = Semitopology::from_threshold(cfg.n, cfg.quorum).map_err(|e| SimError::Config(e.to_string()))?;
    let values = model_values(cfg);
    let preds: Vec<&str> = match cfg.protocol {
        Protocol::Vote => vec!["vote", "observe"],
        Protocol::Bracha => vec!["broadcast", "echo", "ready", "deliver"],
        Protocol::Crusader => vec!["input", "echo1", "echo2", "output"],
    };
    let mut m = Model::new(&values, space, &preds).map_err(|e| SimError::Config(e.to_string()))?;
    let tv = TruthValue::from_bool;
    for p in 0..cfg.n {
        let byz = cfg.is_byzantine(p);
        for (pi, pred) in m.predicates().to_vec().iter().enumerate() {
            for (vi, v) in values.iter().enumerate() {
                let cell = match (cfg.protocol, pred.as_str()) {
                    (Protocol::Vote, "vote") if !byz => tv(cfg.votes[p]),
                    (Protocol::Vote, "observe") => match tr.values_of(p, "observe").first().copied() {
                        Some("T") => TruthValue::T,
                        Some("F") => TruthValue::F,
                        _ => TruthValue::B,
                    },
                    (Protocol::Bracha, "broadcast") => {
                        if cfg.is_byzantine(cfg.sender) {
                            TruthValue::B
                        } else {
                            tv(p == cfg.sender && *v == cfg.sender_value)
                        }
                    }
                    (Protocol::Crusader, "input") if !byz => tv(*v == Sim::crusader_value(cfg.inputs[p])),
                    _ if byz => TruthValue::B,
                    _ => tv(tr.did(p, pred, v)),
                };
                m.set_at(pi, p, vi, cell);
            }
        }
    }
    Ok(m)
}

/// Run, extract, and check against the protocol's theory, properties and
/// lemmas.
pub fn run_and_check(cfg: &RunConfig) -> Result<(Trace, Model, Report), RunCheckError> {
    let tr = run(cfg)?;
    let m = extract_model(&tr, cfg)?;
    let tf = builtin(cfg.protocol.theory());
    let report = check(&m, Some(&tf.theory), &tf.properties, &tf.lemmas)?;
    Ok((tr, m, report))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RunCheckError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Check(#[from] CheckError),
}
