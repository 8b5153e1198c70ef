//! Workflow nets: token game, silent closure, validation and alignments.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::{Arc, RwLock};

use thiserror::Error;

use crate::model::EventLog;

/// Default cap on distinct markings explored by a silent closure.
pub const DEFAULT_MARKING_BUDGET: usize = 10_000;
/// Default cap on search states explored by one alignment.
pub const DEFAULT_STATE_BUDGET: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetError {
    #[error("transition {0} is not enabled")]
    NotEnabled(String),
    #[error("search budget of {0} states exhausted")]
    BudgetExceeded(usize),
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("duplicate node id {0}")]
    DuplicateNode(String),
    #[error("arc {0} -> {1} must connect a place and a transition")]
    InvalidArc(String, String),
    #[error("net has no source place")]
    NoSourcePlace,
    #[error("net has no sink place")]
    NoSinkPlace,
    #[error("invalid workflow net: {0}")]
    Invalid(ValidationReport),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub id: String,
    /// `None` for silent transitions.
    pub label: Option<String>,
}

impl Transition {
    pub fn is_silent(&self) -> bool {
        self.label.is_none()
    }
}

/// Token counts indexed by place.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marking(Box<[u32]>);

impl Marking {
    pub fn tokens(&self, place: usize) -> u32 {
        self.0[place]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| c as u64).sum()
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }
}

#[derive(Default)]
pub struct NetBuilder {
    places: Vec<String>,
    transitions: Vec<Transition>,
    arcs: Vec<(String, String)>,
}

impl NetBuilder {
    pub fn place(mut self, id: impl Into<String>) -> Self {
        self.places.push(id.into());
        self
    }

    pub fn transition(mut self, id: impl Into<String>, label: Option<&str>) -> Self {
        self.transitions.push(Transition {
            id: id.into(),
            label: label.map(str::to_owned),
        });
        self
    }

    pub fn arc(mut self, source: impl Into<String>, target: impl Into<String>) -> Self {
        self.arcs.push((source.into(), target.into()));
        self
    }

    pub fn build(self) -> Result<WorkflowNet, NetError> {
        enum Node {
            P(usize),
            T(usize),
        }
        let mut ids = HashMap::new();
        for (i, p) in self.places.iter().enumerate() {
            if ids.insert(p.clone(), Node::P(i)).is_some() {
                return Err(NetError::DuplicateNode(p.clone()));
            }
        }
        for (i, t) in self.transitions.iter().enumerate() {
            if ids.insert(t.id.clone(), Node::T(i)).is_some() {
                return Err(NetError::DuplicateNode(t.id.clone()));
            }
        }
        let nt = self.transitions.len();
        let np = self.places.len();
        let mut preset = vec![Vec::new(); nt];
        let mut postset = vec![Vec::new(); nt];
        let mut place_in = vec![Vec::new(); np];
        let mut place_out = vec![Vec::new(); np];
        for (s, t) in &self.arcs {
            let src = ids.get(s).ok_or_else(|| NetError::UnknownNode(s.clone()))?;
            let dst = ids.get(t).ok_or_else(|| NetError::UnknownNode(t.clone()))?;
            match (src, dst) {
                (Node::P(p), Node::T(tr)) => {
                    preset[*tr].push(*p);
                    place_out[*p].push(*tr);
                }
                (Node::T(tr), Node::P(p)) => {
                    postset[*tr].push(*p);
                    place_in[*p].push(*tr);
                }
                _ => return Err(NetError::InvalidArc(s.clone(), t.clone())),
            }
        }
        let sources: Vec<usize> = (0..np).filter(|&p| place_in[p].is_empty()).collect();
        let sinks: Vec<usize> = (0..np).filter(|&p| place_out[p].is_empty()).collect();
        if sources.is_empty() {
            return Err(NetError::NoSourcePlace);
        }
        if sinks.is_empty() {
            return Err(NetError::NoSinkPlace);
        }
        let mut label_index = HashMap::new();
        let mut labels = Vec::new();
        let label_of = self
            .transitions
            .iter()
            .map(|t| {
                t.label.as_ref().map(|l| {
                    *label_index.entry(l.clone()).or_insert_with(|| {
                        labels.push(l.clone());
                        labels.len() as u32 - 1
                    })
                })
            })
            .collect();
        Ok(WorkflowNet {
            places: self.places,
            transitions: self.transitions,
            preset,
            postset,
            place_in,
            place_out,
            sources,
            sinks,
            labels,
            label_index,
            label_of,
        })
    }
}

/// A workflow net. Construction only checks structure; use
/// [`WorkflowNet::validate`] for the full set of preconditions.
#[derive(Debug, Clone)]
pub struct WorkflowNet {
    places: Vec<String>,
    transitions: Vec<Transition>,
    preset: Vec<Vec<usize>>,
    postset: Vec<Vec<usize>>,
    place_in: Vec<Vec<usize>>,
    place_out: Vec<Vec<usize>>,
    sources: Vec<usize>,
    sinks: Vec<usize>,
    labels: Vec<String>,
    label_index: HashMap<String, u32>,
    label_of: Vec<Option<u32>>,
}

/// Label id of an activity inside a net; `None` when the net has no such label.
pub type LabelId = Option<u32>;

impl WorkflowNet {
    pub fn builder() -> NetBuilder {
        NetBuilder::default()
    }

    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn preset(&self, t: usize) -> &[usize] {
        &self.preset[t]
    }

    pub fn postset(&self, t: usize) -> &[usize] {
        &self.postset[t]
    }

    /// Transitions producing into place `p`.
    pub fn producers(&self, p: usize) -> &[usize] {
        &self.place_in[p]
    }

    /// Transitions consuming from place `p`.
    pub fn consumers(&self, p: usize) -> &[usize] {
        &self.place_out[p]
    }

    pub fn input_place(&self) -> usize {
        self.sources[0]
    }

    pub fn output_place(&self) -> usize {
        self.sinks[0]
    }

    pub fn place_index(&self, id: &str) -> Option<usize> {
        self.places.iter().position(|p| p == id)
    }

    pub fn transition_index(&self, id: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.id == id)
    }

    /// Distinct visible labels.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_id(&self, activity: &str) -> LabelId {
        self.label_index.get(activity).copied()
    }

    pub fn label_of(&self, t: usize) -> LabelId {
        self.label_of[t]
    }

    pub fn initial_marking(&self) -> Marking {
        let mut m = vec![0; self.places.len()];
        m[self.input_place()] = 1;
        Marking(m.into())
    }

    pub fn empty_marking(&self) -> Marking {
        Marking(vec![0; self.places.len()].into())
    }

    /// Builds a marking from `(place id, tokens)` pairs.
    pub fn marking(&self, tokens: &[(&str, u32)]) -> Result<Marking, NetError> {
        let mut m = vec![0; self.places.len()];
        for (p, n) in tokens {
            let i = self
                .place_index(p)
                .ok_or_else(|| NetError::UnknownNode((*p).to_owned()))?;
            m[i] += n;
        }
        Ok(Marking(m.into()))
    }

    pub fn is_enabled(&self, m: &Marking, t: usize) -> bool {
        self.preset[t].iter().all(|&p| m.0[p] > 0)
    }

    pub fn enabled_transitions(&self, m: &Marking) -> Vec<usize> {
        (0..self.transitions.len())
            .filter(|&t| self.is_enabled(m, t))
            .collect()
    }

    pub fn fire(&self, m: &Marking, t: usize) -> Result<Marking, NetError> {
        if !self.is_enabled(m, t) {
            return Err(NetError::NotEnabled(self.transitions[t].id.clone()));
        }
        Ok(self.fire_unchecked(m, t))
    }

    fn fire_unchecked(&self, m: &Marking, t: usize) -> Marking {
        let mut next = m.0.clone();
        for &p in &self.preset[t] {
            next[p] -= 1;
        }
        for &p in &self.postset[t] {
            next[p] += 1;
        }
        Marking(next)
    }

    /// Markings reachable from `m` through silent transitions only, in
    /// breadth-first order starting with `m` itself.
    pub fn silent_closure(&self, m: &Marking, budget: usize) -> Result<Vec<Marking>, NetError> {
        let mut seen = HashSet::new();
        let mut order = vec![m.clone()];
        seen.insert(m.clone());
        let mut head = 0;
        while head < order.len() {
            let cur = order[head].clone();
            head += 1;
            for t in 0..self.transitions.len() {
                if self.label_of[t].is_none() && self.is_enabled(&cur, t) {
                    let next = self.fire_unchecked(&cur, t);
                    if seen.insert(next.clone()) {
                        if order.len() >= budget {
                            return Err(NetError::BudgetExceeded(budget));
                        }
                        order.push(next);
                    }
                }
            }
        }
        Ok(order)
    }

    /// Summary of what a case in marking `m` can do next.
    pub fn closure_info(&self, m: &Marking, budget: usize) -> Result<ClosureInfo, NetError> {
        let closure = self.silent_closure(m, budget)?;
        let out = self.output_place();
        let is_final = closure.iter().any(|c| c.0[out] > 0);
        let mut advance: Vec<(u32, Marking)> = Vec::new();
        for c in &closure {
            for t in 0..self.transitions.len() {
                if let Some(l) = self.label_of[t] {
                    if self.is_enabled(c, t) && !advance.iter().any(|(x, _)| *x == l) {
                        advance.push((l, self.fire_unchecked(c, t)));
                    }
                }
            }
        }
        advance.sort_by_key(|(l, _)| *l);
        Ok(ClosureInfo { is_final, advance })
    }

    pub fn enabled_activities(&self, m: &Marking) -> Result<BTreeSet<String>, NetError> {
        self.enabled_activities_with_budget(m, DEFAULT_MARKING_BUDGET)
    }

    pub fn enabled_activities_with_budget(
        &self,
        m: &Marking,
        budget: usize,
    ) -> Result<BTreeSet<String>, NetError> {
        let info = self.closure_info(m, budget)?;
        Ok(info
            .advance
            .iter()
            .map(|(l, _)| self.labels[*l as usize].clone())
            .collect())
    }

    /// True when the output place is marked, possibly after silent firings.
    /// A closure that exhausts the default budget counts as not final.
    pub fn is_final(&self, m: &Marking) -> bool {
        self.closure_info(m, DEFAULT_MARKING_BUDGET)
            .map(|i| i.is_final)
            .unwrap_or(false)
    }

    /// The single visible activity that can occur first, if unambiguous.
    pub fn infer_start_activity(&self) -> Option<String> {
        let info = self
            .closure_info(&self.initial_marking(), DEFAULT_MARKING_BUDGET)
            .ok()?;
        match info.advance.as_slice() {
            [(l, _)] => Some(self.labels[*l as usize].clone()),
            _ => None,
        }
    }

    pub fn validate(&self, start_activity: &str) -> ValidationReport {
        let mut issues = Vec::new();
        let names = |v: &[usize]| v.iter().map(|&p| self.places[p].clone()).collect::<Vec<_>>();
        if self.sources.len() > 1 {
            issues.push(NetIssue::MultipleInputPlaces(names(&self.sources)));
        }
        if self.sinks.len() > 1 {
            issues.push(NetIssue::MultipleOutputPlaces(names(&self.sinks)));
        }

        // Structural reachability from the input place.
        let np = self.places.len();
        let mut place_seen = vec![false; np];
        let mut trans_seen = vec![false; self.transitions.len()];
        let mut queue = VecDeque::from([self.input_place()]);
        place_seen[self.input_place()] = true;
        while let Some(p) = queue.pop_front() {
            for &t in &self.place_out[p] {
                if !trans_seen[t] {
                    trans_seen[t] = true;
                    for &q in &self.postset[t] {
                        if !place_seen[q] {
                            place_seen[q] = true;
                            queue.push_back(q);
                        }
                    }
                }
            }
        }
        for (p, seen) in place_seen.iter().enumerate() {
            if !seen {
                issues.push(NetIssue::Unreachable(self.places[p].clone()));
            }
        }
        for (t, seen) in trans_seen.iter().enumerate() {
            if !seen {
                issues.push(NetIssue::Unreachable(self.transitions[t].id.clone()));
            }
        }

        let starts: Vec<usize> = (0..self.transitions.len())
            .filter(|&t| self.transitions[t].label.as_deref() == Some(start_activity))
            .collect();
        match starts.as_slice() {
            [] => issues.push(NetIssue::MissingStartActivity(start_activity.to_owned())),
            [t] => {
                if self.on_cycle(*t) {
                    issues.push(NetIssue::StartOnCycle(self.transitions[*t].id.clone()));
                }
            }
            many => issues.push(NetIssue::AmbiguousStartActivity(
                start_activity.to_owned(),
                many.iter().map(|&t| self.transitions[t].id.clone()).collect(),
            )),
        }

        match self.final_reachable(DEFAULT_MARKING_BUDGET) {
            Ok(true) => {}
            Ok(false) => issues.push(NetIssue::FinalUnreachable),
            Err(_) => issues.push(NetIssue::FinalSearchExhausted(DEFAULT_MARKING_BUDGET)),
        }
        ValidationReport { issues }
    }

    /// Whether transition `t` can reach itself through the flow relation.
    fn on_cycle(&self, t: usize) -> bool {
        let mut seen = vec![false; self.transitions.len()];
        let mut stack: Vec<usize> = self.postset[t].clone();
        let mut place_seen = vec![false; self.places.len()];
        while let Some(p) = stack.pop() {
            if std::mem::replace(&mut place_seen[p], true) {
                continue;
            }
            for &u in &self.place_out[p] {
                if u == t {
                    return true;
                }
                if !std::mem::replace(&mut seen[u], true) {
                    stack.extend_from_slice(&self.postset[u]);
                }
            }
        }
        false
    }

    fn final_reachable(&self, budget: usize) -> Result<bool, NetError> {
        let out = self.output_place();
        let start = self.initial_marking();
        let mut seen = HashSet::from([start.clone()]);
        let mut queue = VecDeque::from([start]);
        while let Some(m) = queue.pop_front() {
            if m.0[out] > 0 {
                return Ok(true);
            }
            for t in self.enabled_transitions(&m) {
                let next = self.fire_unchecked(&m, t);
                if seen.insert(next.clone()) {
                    if seen.len() > budget {
                        return Err(NetError::BudgetExceeded(budget));
                    }
                    queue.push_back(next);
                }
            }
        }
        Ok(false)
    }

    /// Maps activity names to label ids of this net.
    pub fn encode<S: AsRef<str>>(&self, trace: &[S]) -> Vec<LabelId> {
        trace.iter().map(|a| self.label_id(a.as_ref())).collect()
    }

    pub fn align_trace<S: AsRef<str>>(&self, trace: &[S]) -> Result<Alignment, NetError> {
        self.align_encoded(&self.encode(trace), DEFAULT_STATE_BUDGET)
    }

    /// Minimum-cost alignment by uniform-cost search over (marking, position).
    /// Log moves and visible model moves cost 1; synchronous and silent moves 0.
    pub fn align_encoded(&self, trace: &[LabelId], budget: usize) -> Result<Alignment, NetError> {
        let n = trace.len();
        // Symbols the net cannot produce must be log moves: admissible bound.
        let mut h = vec![0u32; n + 1];
        for i in (0..n).rev() {
            h[i] = h[i + 1] + trace[i].is_none() as u32;
        }
        let out = self.output_place();

        let mut index: HashMap<(Marking, usize), usize> = HashMap::new();
        let mut states: Vec<(Marking, usize)> = Vec::new();
        let mut g: Vec<u32> = Vec::new();
        let mut parent: Vec<Option<(usize, Step)>> = Vec::new();
        let mut closed: Vec<bool> = Vec::new();
        let mut heap = BinaryHeap::new();

        let start = (self.initial_marking(), 0);
        index.insert(start.clone(), 0);
        states.push(start);
        g.push(0);
        parent.push(None);
        closed.push(false);
        heap.push(Reverse((h[0], Reverse(0usize), 0usize)));

        while let Some(Reverse((_, _, id))) = heap.pop() {
            if closed[id] {
                continue;
            }
            closed[id] = true;
            let (m, pos) = states[id].clone();
            if pos == n && m.0[out] > 0 {
                return Ok(self.reconstruct(id, g[id], &states, &parent, trace));
            }
            let mut succ: Vec<(Marking, usize, u32, Step)> = Vec::new();
            if pos < n {
                succ.push((m.clone(), pos + 1, 1, Step::Log));
            }
            for t in self.enabled_transitions(&m) {
                let next = self.fire_unchecked(&m, t);
                match self.label_of[t] {
                    None => succ.push((next, pos, 0, Step::Model(t))),
                    Some(l) => {
                        if pos < n && trace[pos] == Some(l) {
                            succ.push((next.clone(), pos + 1, 0, Step::Sync(t)));
                        }
                        succ.push((next, pos, 1, Step::Model(t)));
                    }
                }
            }
            for (nm, npos, cost, step) in succ {
                let ng = g[id] + cost;
                let key = (nm, npos);
                let nid = match index.get(&key) {
                    Some(&nid) => {
                        if closed[nid] || g[nid] <= ng {
                            continue;
                        }
                        g[nid] = ng;
                        parent[nid] = Some((id, step));
                        nid
                    }
                    None => {
                        if states.len() >= budget {
                            return Err(NetError::BudgetExceeded(budget));
                        }
                        let nid = states.len();
                        index.insert(key.clone(), nid);
                        states.push(key);
                        g.push(ng);
                        parent.push(Some((id, step)));
                        closed.push(false);
                        nid
                    }
                };
                heap.push(Reverse((ng + h[npos], Reverse(npos), nid)));
            }
        }
        // The log-only path to a final marking always exists for valid nets.
        Err(NetError::Invalid(ValidationReport {
            issues: vec![NetIssue::FinalUnreachable],
        }))
    }

    fn reconstruct(
        &self,
        mut id: usize,
        cost: u32,
        states: &[(Marking, usize)],
        parent: &[Option<(usize, Step)>],
        trace: &[LabelId],
    ) -> Alignment {
        let mut moves = Vec::new();
        while let Some((p, step)) = parent[id] {
            let pos = states[p].1;
            let activity = || match trace[pos] {
                Some(l) => self.labels[l as usize].clone(),
                None => String::from("?"),
            };
            moves.push(match step {
                Step::Log => Move::Log { activity: activity() },
                Step::Sync(t) => Move::Sync {
                    activity: activity(),
                    transition: self.transitions[t].id.clone(),
                },
                Step::Model(t) => Move::Model {
                    transition: self.transitions[t].id.clone(),
                    label: self.transitions[t].label.clone(),
                },
            });
            id = p;
        }
        moves.reverse();
        Alignment { cost, moves }
    }
}

#[derive(Debug, Clone, Copy)]
enum Step {
    Log,
    Sync(usize),
    Model(usize),
}

/// What a case can do next from a given marking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosureInfo {
    /// Output place covered after silent firings.
    pub is_final: bool,
    /// Per enabled label, the marking after firing the silent path plus the
    /// labelled transition (first found in breadth-first order). Sorted by label.
    pub advance: Vec<(u32, Marking)>,
}

impl ClosureInfo {
    pub fn enables(&self, label: u32) -> bool {
        self.advance.binary_search_by_key(&label, |(l, _)| *l).is_ok()
    }

    pub fn advance(&self, label: u32) -> Option<&Marking> {
        self.advance
            .binary_search_by_key(&label, |(l, _)| *l)
            .ok()
            .map(|i| &self.advance[i].1)
    }
}

/// Memoized closure summaries, shared across threads.
pub struct ReplayCache {
    budget: usize,
    map: RwLock<HashMap<Marking, Arc<ClosureInfo>>>,
}

impl ReplayCache {
    pub fn new(budget: usize) -> Self {
        Self {
            budget,
            map: RwLock::new(HashMap::new()),
        }
    }

    pub fn get(&self, net: &WorkflowNet, m: &Marking) -> Result<Arc<ClosureInfo>, NetError> {
        if let Some(info) = self.map.read().expect("replay cache poisoned").get(m) {
            return Ok(info.clone());
        }
        let info = Arc::new(net.closure_info(m, self.budget)?);
        self.map
            .write()
            .expect("replay cache poisoned")
            .entry(m.clone())
            .or_insert(info.clone());
        Ok(info)
    }
}

/// Memoized alignment costs keyed by encoded trace.
pub struct AlignmentCache {
    budget: usize,
    map: RwLock<HashMap<Vec<LabelId>, u32>>,
}

impl AlignmentCache {
    pub fn new(budget: usize) -> Self {
        Self {
            budget,
            map: RwLock::new(HashMap::new()),
        }
    }

    pub fn cost(&self, net: &WorkflowNet, trace: &[LabelId]) -> Result<u32, NetError> {
        if let Some(&c) = self.map.read().expect("alignment cache poisoned").get(trace) {
            return Ok(c);
        }
        let c = net.align_encoded(trace, self.budget)?.cost;
        self.map
            .write()
            .expect("alignment cache poisoned")
            .insert(trace.to_vec(), c);
        Ok(c)
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("alignment cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Sum of per-case alignment costs.
pub fn log_alignment_cost(
    net: &WorkflowNet,
    log: &EventLog,
    cache: Option<&AlignmentCache>,
) -> Result<u64, NetError> {
    let mut total = 0u64;
    for case in log.cases() {
        let trace = net.encode(&case.trace());
        total += match cache {
            Some(c) => c.cost(net, &trace)?,
            None => net.align_encoded(&trace, DEFAULT_STATE_BUDGET)?.cost,
        } as u64;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Move {
    Sync { activity: String, transition: String },
    Log { activity: String },
    Model { transition: String, label: Option<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    pub cost: u32,
    pub moves: Vec<Move>,
}

impl Alignment {
    /// Cost recomputed from the moves: asynchronous non-silent moves.
    pub fn move_cost(&self) -> u32 {
        self.moves
            .iter()
            .filter(|m| match m {
                Move::Sync { .. } => false,
                Move::Log { .. } => true,
                Move::Model { label, .. } => label.is_some(),
            })
            .count() as u32
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NetIssue {
    MultipleInputPlaces(Vec<String>),
    MultipleOutputPlaces(Vec<String>),
    Unreachable(String),
    MissingStartActivity(String),
    AmbiguousStartActivity(String, Vec<String>),
    StartOnCycle(String),
    FinalUnreachable,
    FinalSearchExhausted(usize),
}

impl fmt::Display for NetIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetIssue::MultipleInputPlaces(p) => {
                write!(f, "multiple input places: {}", p.join(", "))
            }
            NetIssue::MultipleOutputPlaces(p) => {
                write!(f, "multiple output places: {}", p.join(", "))
            }
            NetIssue::Unreachable(n) => write!(f, "node {n} is not reachable from the input place"),
            NetIssue::MissingStartActivity(a) => write!(f, "no transition labelled {a}"),
            NetIssue::AmbiguousStartActivity(a, ts) => {
                write!(f, "start activity {a} labels several transitions: {}", ts.join(", "))
            }
            NetIssue::StartOnCycle(t) => write!(f, "P1: start transition {t} lies on a cycle"),
            NetIssue::FinalUnreachable => f.write_str("P2: no final marking is reachable"),
            NetIssue::FinalSearchExhausted(b) => {
                write!(f, "P2: final marking not found within {b} markings")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub issues: Vec<NetIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn into_result(self) -> Result<(), NetError> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(NetError::Invalid(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return f.write_str("valid");
        }
        let parts: Vec<String> = self.issues.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join("; "))
    }
}
