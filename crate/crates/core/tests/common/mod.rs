#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};
use std::path::PathBuf;
use std::sync::Arc;

use casecorr::constraints::{parse_constraints, ConstraintSet};
use casecorr::io::{read_log_csv, read_pnml, LogFileSchema};
use casecorr::model::{EventLog, RawEvent, UncorrelatedLog};
use casecorr::net::{Marking, WorkflowNet};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn day_first_schema() -> LogFileSchema {
    LogFileSchema {
        timestamp_format: "%d/%m/%Y %H:%M".into(),
        ..LogFileSchema::default()
    }
}

pub struct RunningExample {
    pub ul: Arc<UncorrelatedLog>,
    pub net: WorkflowNet,
    pub rules: ConstraintSet,
    /// Ground-truth correlation.
    pub truth: EventLog,
    /// The individual `x` used for the energy computations.
    pub x: EventLog,
}

fn correlated(name: &str, schema: &LogFileSchema, base: &Arc<UncorrelatedLog>) -> EventLog {
    let log = read_log_csv(fixture(name), schema)
        .unwrap()
        .into_correlated()
        .unwrap();
    assert_eq!(log.base().as_ref(), base.as_ref());
    let labels: Vec<&str> = (0..log.events().len()).map(|p| log.case_of(p)).collect();
    EventLog::from_labels(base.clone(), &labels).unwrap()
}

pub fn running_example() -> RunningExample {
    let schema = day_first_schema();
    let ul = Arc::new(
        read_log_csv(fixture("running_example.csv"), &schema)
            .unwrap()
            .uncorrelated(),
    );
    let text = std::fs::read_to_string(fixture("running_example.rules")).unwrap();
    RunningExample {
        net: read_pnml(fixture("running_example.pnml")).unwrap(),
        rules: parse_constraints(&text).unwrap(),
        truth: correlated("running_example_truth.csv", &schema, &ul),
        x: correlated("running_example_x.csv", &schema, &ul),
        ul,
    }
}

pub fn loop_net() -> WorkflowNet {
    read_pnml(fixture("loop_net.pnml")).unwrap()
}

/// The two logs of the measure examples, sharing one event base.
pub fn measure_logs() -> (EventLog, EventLog) {
    let schema = LogFileSchema::default();
    let l = read_log_csv(fixture("measure_ref.csv"), &schema)
        .unwrap()
        .into_correlated()
        .unwrap();
    let base = l.base().clone();
    let lp = correlated("measure_gen.csv", &schema, &base);
    (l, lp)
}

/// Index (0-based) of the event carrying the `event` attribute `name`.
pub fn pos_of(log: &EventLog, name: &str) -> usize {
    log.events()
        .iter()
        .position(|e| e.attr("event").map(|v| v.to_string()).as_deref() == Some(name))
        .unwrap()
}

// --- random block-structured nets -----------------------------------------

#[derive(Debug, Clone)]
pub enum Tree {
    Leaf(Option<char>),
    Seq(Vec<Tree>),
    Xor(Vec<Tree>),
    And(Vec<Tree>),
    Loop(Box<Tree>, Box<Tree>),
}

pub fn random_tree<R: Rng>(rng: &mut R, depth: u32, alphabet: &[char]) -> Tree {
    if depth == 0 || rng.gen_bool(0.4) {
        return if rng.gen_bool(0.15) {
            Tree::Leaf(None)
        } else {
            Tree::Leaf(Some(*alphabet.choose(rng).unwrap()))
        };
    }
    let arity = rng.gen_range(2..=3);
    let kids = |rng: &mut R| (0..arity).map(|_| random_tree(rng, depth - 1, alphabet)).collect();
    match rng.gen_range(0..4) {
        0 => Tree::Seq(kids(rng)),
        1 => Tree::Xor(kids(rng)),
        2 => Tree::And(kids(rng)),
        _ => Tree::Loop(
            Box::new(random_tree(rng, depth - 1, alphabet)),
            Box::new(random_tree(rng, depth - 1, alphabet)),
        ),
    }
}

struct NetGen {
    places: usize,
    transitions: Vec<(String, Option<char>)>,
    arcs: Vec<(String, String)>,
}

impl NetGen {
    fn place(&mut self) -> String {
        self.places += 1;
        format!("p{}", self.places)
    }

    fn transition(&mut self, label: Option<char>, pre: &[String], post: &[String]) {
        let id = format!("t{}", self.transitions.len() + 1);
        for p in pre {
            self.arcs.push((p.clone(), id.clone()));
        }
        for p in post {
            self.arcs.push((id.clone(), p.clone()));
        }
        self.transitions.push((id, label));
    }

    fn build(&mut self, t: &Tree, i: &str, o: &str) {
        match t {
            Tree::Leaf(l) => self.transition(*l, &[i.into()], &[o.into()]),
            Tree::Seq(ks) => {
                let mut cur = i.to_owned();
                for (k, c) in ks.iter().enumerate() {
                    let next = if k + 1 == ks.len() { o.to_owned() } else { self.place() };
                    self.build(c, &cur, &next);
                    cur = next;
                }
            }
            Tree::Xor(ks) => {
                for c in ks {
                    self.build(c, i, o);
                }
            }
            Tree::And(ks) => {
                let ins: Vec<String> = ks.iter().map(|_| self.place()).collect();
                let outs: Vec<String> = ks.iter().map(|_| self.place()).collect();
                self.transition(None, &[i.into()], &ins);
                for (c, (a, b)) in ks.iter().zip(ins.iter().zip(&outs)) {
                    self.build(c, a, b);
                }
                self.transition(None, &outs, &[o.into()]);
            }
            Tree::Loop(body, redo) => {
                let a = self.place();
                let b = self.place();
                self.transition(None, &[i.into()], std::slice::from_ref(&a));
                self.build(body, &a, &b);
                self.build(redo, &b, &a);
                self.transition(None, &[b], &[o.into()]);
            }
        }
    }
}

/// A workflow net `start -> tree -> end` from a process tree.
pub fn tree_net(tree: &Tree) -> WorkflowNet {
    let mut g = NetGen {
        places: 0,
        transitions: Vec::new(),
        arcs: Vec::new(),
    };
    let i = g.place();
    let o = g.place();
    g.build(tree, &i, &o);
    let mut b = WorkflowNet::builder();
    for k in 1..=g.places {
        b = b.place(format!("p{k}"));
    }
    for (id, l) in &g.transitions {
        b = b.transition(id.clone(), l.map(|c| c.to_string()).as_deref());
    }
    for (s, t) in g.arcs {
        b = b.arc(s, t);
    }
    b.build().unwrap()
}

/// A random net with at most `max_transitions` transitions.
pub fn random_net<R: Rng>(rng: &mut R, max_transitions: usize) -> WorkflowNet {
    loop {
        let tree = random_tree(rng, 3, &['A', 'B', 'C', 'D']);
        let net = tree_net(&tree);
        if net.transitions().len() <= max_transitions {
            return net;
        }
    }
}

/// A random firing sequence to a final marking, projected on visible labels.
pub fn random_run<R: Rng>(net: &WorkflowNet, rng: &mut R, max_steps: usize) -> Option<Vec<String>> {
    let mut m = net.initial_marking();
    let mut word = Vec::new();
    for _ in 0..max_steps {
        if m.tokens(net.output_place()) > 0 {
            return Some(word);
        }
        let en = net.enabled_transitions(&m);
        let t = *en.choose(rng)?;
        if let Some(l) = &net.transitions()[t].label {
            word.push(l.clone());
        }
        m = net.fire(&m, t).unwrap();
    }
    None
}

fn lcs(a: &[String], b: &[String]) -> usize {
    let mut dp = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            dp[i][j] = if a[i - 1] == b[j - 1] {
                dp[i - 1][j - 1] + 1
            } else {
                dp[i - 1][j].max(dp[i][j - 1])
            };
        }
    }
    dp[a.len()][b.len()]
}

/// Visible words of runs ending with the output place marked, up to `max_len`.
pub fn run_words(net: &WorkflowNet, max_len: usize) -> HashSet<Vec<String>> {
    let out = net.output_place();
    let mut seen: HashSet<(Marking, Vec<String>)> = HashSet::new();
    let mut words = HashSet::new();
    let start = (net.initial_marking(), Vec::new());
    seen.insert(start.clone());
    let mut queue = VecDeque::from([start]);
    while let Some((m, w)) = queue.pop_front() {
        if m.tokens(out) > 0 {
            words.insert(w.clone());
        }
        for t in net.enabled_transitions(&m) {
            let next = net.fire(&m, t).unwrap();
            let mut nw = w.clone();
            if let Some(l) = &net.transitions()[t].label {
                if nw.len() == max_len {
                    continue;
                }
                nw.push(l.clone());
            }
            if seen.insert((next.clone(), nw.clone())) {
                queue.push_back((next, nw));
            }
        }
    }
    words
}

/// Alignment cost by enumerating runs: min over words of `|t| + |w| - 2 LCS`.
pub fn brute_force_alignment(net: &WorkflowNet, trace: &[String]) -> usize {
    let shortest = (0..)
        .find_map(|len| {
            run_words(net, len)
                .iter()
                .map(Vec::len)
                .min()
        })
        .unwrap();
    let bound = 2 * trace.len() + shortest;
    run_words(net, bound)
        .iter()
        .map(|w| trace.len() + w.len() - 2 * lcs(trace, w))
        .min()
        .unwrap()
}

/// Minimum-cost perfect matching by trying every permutation.
pub fn brute_force_matching(cost: &[Vec<i64>]) -> i64 {
    fn go(cost: &[Vec<i64>], row: usize, used: &mut Vec<bool>, acc: i64, best: &mut i64) {
        if row == cost.len() {
            *best = (*best).min(acc);
            return;
        }
        for c in 0..cost.len() {
            if !used[c] {
                used[c] = true;
                go(cost, row + 1, used, acc + cost[row][c], best);
                used[c] = false;
            }
        }
    }
    let mut best = i64::MAX;
    go(cost, 0, &mut vec![false; cost.len()], 0, &mut best);
    if cost.is_empty() {
        0
    } else {
        best
    }
}

/// An uncorrelated log of `n` events over activities `A..`, one minute apart
/// plus random gaps.
pub fn random_ul<R: Rng>(rng: &mut R, n: usize, activities: usize) -> Arc<UncorrelatedLog> {
    let mut t = 0;
    let raw = (0..n)
        .map(|_| {
            t += rng.gen_range(0..30);
            let a = (b'A' + rng.gen_range(0..activities) as u8) as char;
            RawEvent::new(a.to_string(), t)
        })
        .collect();
    Arc::new(UncorrelatedLog::build(raw).unwrap())
}

/// A random partition of the events of `ul` into at most `max_cases` cases.
pub fn random_partition<R: Rng>(rng: &mut R, ul: &Arc<UncorrelatedLog>, max_cases: usize) -> EventLog {
    let labels: Vec<String> = (0..ul.len())
        .map(|_| format!("k{}", rng.gen_range(0..max_cases)))
        .collect();
    EventLog::from_labels(ul.clone(), &labels).unwrap()
}

// --- simulated logs on the loop net ----------------------------------------

pub use casecorr::io::{CaseAttribute, ResourceModel, SimulationConfig};

/// Three constraints that hold on every log from [`loop_net_simulation`].
pub const LOOP_NET_RULES: &str = r#"
K1: e[i].Customer == e[i-1].Customer
K2: IF e[i].Act == "E" AND e[j].Act == "A" THEN e[i].Res == e[j].Res
K3: IF e[i].Act == "D" THEN 60 <= duration <= 120
"#;

pub fn loop_net_simulation(n_cases: usize, inter_arrival: f64, seed: u64) -> SimulationConfig {
    let durations = [
        ("A", (30, 10)),
        ("B", (60, 20)),
        ("C", (120, 30)),
        ("D", (90, 30)),
        ("E", (45, 15)),
        ("F", (45, 15)),
    ]
    .into_iter()
    .map(|(a, d)| (a.to_string(), d))
    .collect();
    SimulationConfig {
        n_cases,
        inter_arrival,
        durations,
        case_attributes: vec![CaseAttribute {
            name: "Customer".into(),
            pool: (1..=20).map(|k| format!("cust{k}")).collect(),
        }],
        resource: Some(ResourceModel {
            attribute: "Res".into(),
            pool: (1..=6).map(|k| format!("r{k}")).collect(),
            handoffs: vec![("A".into(), "E".into())],
        }),
        seed,
        ..SimulationConfig::default()
    }
}

/// Insertion/deletion distance through an explicit LCS table.
pub fn ins_del_oracle(a: &[String], b: &[String]) -> usize {
    a.len() + b.len() - 2 * lcs(a, b)
}
