//! Multi-level simulated annealing over event-to-case assignments.
//!
//! An [`Individual`] is built by replaying the uncorrelated log on the net:
//! every event goes to a case that can execute it next, and data constraints
//! break ties between several such cases. Neighbours re-correlate a suffix of
//! the log from a random changing point. Survivors are chosen by comparing
//! `(fa, fr, ft)` lexicographically: alignment cost, rule cost, time variance.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::constraints::{rule_cost_f64, rule_cost_from_counts, ConstraintSet, RuleCost};
use crate::model::{Event, EventLog, UncorrelatedLog};
use crate::net::{
    AlignmentCache, LabelId, Marking, NetError, ReplayCache, WorkflowNet, DEFAULT_MARKING_BUDGET,
    DEFAULT_STATE_BUDGET,
};
use crate::par::map_indexed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnnealError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("the net has no unambiguous start activity; set one explicitly")]
    UnknownStartActivity,
    #[error("cached energies diverged from a full recomputation")]
    EnergyMismatch,
}

impl AnnealError {
    pub fn is_budget_exhausted(&self) -> bool {
        matches!(self, AnnealError::Net(NetError::BudgetExceeded(_)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealerConfig {
    pub tau_init: f64,
    pub s_max: u32,
    pub pop_size: usize,
    pub rng_seed: u64,
    pub marking_budget: usize,
    pub alignment_budget: usize,
    /// Defaults to the single activity the net can start with.
    pub start_activity: Option<String>,
    /// Evaluate population slots concurrently (needs the `parallel` feature).
    pub parallel: bool,
    /// Recompute every energy from scratch and compare with the cached value.
    pub verify_energies: bool,
}

impl Default for AnnealerConfig {
    fn default() -> Self {
        Self {
            tau_init: 100.0,
            s_max: 100,
            pop_size: 4,
            rng_seed: 0,
            marking_budget: DEFAULT_MARKING_BUDGET,
            alignment_budget: DEFAULT_STATE_BUDGET,
            start_activity: None,
            parallel: cfg!(feature = "parallel"),
            verify_energies: false,
        }
    }
}

impl AnnealerConfig {
    pub fn validate(&self) -> Result<(), AnnealError> {
        if !(self.tau_init > 0.0 && self.tau_init.is_finite()) {
            return Err(AnnealError::InvalidConfig("tau_init must be positive".into()));
        }
        if self.s_max == 0 {
            return Err(AnnealError::InvalidConfig("s_max must be at least 1".into()));
        }
        if self.pop_size == 0 {
            return Err(AnnealError::InvalidConfig("pop_size must be at least 1".into()));
        }
        if self.marking_budget == 0 || self.alignment_budget == 0 {
            return Err(AnnealError::InvalidConfig("budgets must be positive".into()));
        }
        Ok(())
    }
}

/// `tau_init / ln(1 + s)`.
pub fn cooling(tau_init: f64, s_curr: f64) -> f64 {
    tau_init / (1.0 + s_curr).ln()
}

/// `exp(-delta / tau)`; values above 1 mean certain acceptance.
pub fn acceptance_prob(delta: f64, tau: f64) -> f64 {
    (-delta / tau).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Energy {
    /// Total alignment cost.
    pub fa: u64,
    /// Mean share of violated triggered constraints.
    pub fr: RuleCost,
    /// Mean squared deviation of elapsed times from their activity mean.
    pub ft: f64,
}

impl Energy {
    /// Lexicographic order on `(fa, fr, ft)`; smaller is better.
    pub fn lex_cmp(&self, other: &Energy) -> Ordering {
        self.fa
            .cmp(&other.fa)
            .then_with(|| self.fr.cmp(&other.fr))
            .then_with(|| self.ft.total_cmp(&other.ft))
    }

    pub fn fr_f64(&self) -> f64 {
        rule_cost_f64(&self.fr)
    }
}

/// The cost of moving from `x` to `x'`, by the first criterion that worsens.
pub fn delta_cost(x: &Energy, xp: &Energy) -> f64 {
    if xp.fa > x.fa {
        (xp.fa - x.fa) as f64
    } else if xp.fr > x.fr {
        rule_cost_f64(&(xp.fr - x.fr))
    } else {
        xp.ft - x.ft
    }
}

/// Whether `x'` replaces `x`, given a uniform draw in `[0, 1)`.
pub fn decide(x: &Energy, xp: &Energy, tau: f64, draw: f64) -> bool {
    let prob_ok = || acceptance_prob(delta_cost(x, xp), tau) >= draw;
    match xp.fa.cmp(&x.fa) {
        Ordering::Less => true,
        Ordering::Greater => prob_ok(),
        Ordering::Equal => match xp.fr.cmp(&x.fr) {
            Ordering::Less => true,
            Ordering::Greater => prob_ok(),
            Ordering::Equal => xp.ft < x.ft || prob_ok(),
        },
    }
}

/// Selection step: `true` when `x'` is selected.
pub fn select_next<R: Rng>(x: &Energy, xp: &Energy, tau: f64, rng: &mut R) -> bool {
    let draw: f64 = rng.gen();
    decide(x, xp, tau, draw)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct CaseCost {
    align: u32,
    violated: u32,
    triggered: u32,
}

/// A candidate correlation: every event assigned to exactly one case.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    /// Case index per event position.
    assignment: Vec<u32>,
    /// Event positions per case, cases in opening order.
    cases: Vec<Vec<u32>>,
    case_costs: Vec<CaseCost>,
    energy: Energy,
}

impl Individual {
    pub fn energy(&self) -> &Energy {
        &self.energy
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    pub fn num_cases(&self) -> usize {
        self.cases.len()
    }

    /// 0-based event positions of every case.
    pub fn cases(&self) -> &[Vec<u32>] {
        &self.cases
    }

    /// The individual as an event log with case ids `c1, c2, ...` in opening order.
    pub fn to_event_log(&self, base: Arc<UncorrelatedLog>) -> EventLog {
        let ids = (1..=self.cases.len()).map(|k| format!("c{k}")).collect();
        let assignment = self.assignment.iter().map(|&c| c as usize).collect();
        EventLog::new(base, ids, assignment).expect("individuals are total and surjective")
    }
}

#[derive(Debug, Clone)]
struct CaseState {
    events: Vec<u32>,
    marking: Marking,
    closed: bool,
}

/// Replay state of all cases opened so far.
#[derive(Debug, Clone, Default)]
pub struct CorrelationState {
    cases: Vec<CaseState>,
}

impl CorrelationState {
    pub fn num_cases(&self) -> usize {
        self.cases.len()
    }

    /// Event positions of case `c`.
    pub fn case_events(&self, c: usize) -> &[u32] {
        &self.cases[c].events
    }

    pub fn is_closed(&self, c: usize) -> bool {
        self.cases[c].closed
    }

    pub fn marking(&self, c: usize) -> &Marking {
        &self.cases[c].marking
    }
}

/// Shared, read-mostly context of one correlation problem.
pub struct Correlator<'a> {
    log: &'a UncorrelatedLog,
    net: &'a WorkflowNet,
    constraints: &'a ConstraintSet,
    start_label: u32,
    labels: Vec<LabelId>,
    activity_ids: Vec<u32>,
    n_activities: usize,
    replay: ReplayCache,
    alignments: AlignmentCache,
    verify: bool,
}

impl<'a> Correlator<'a> {
    pub fn new(
        log: &'a UncorrelatedLog,
        net: &'a WorkflowNet,
        constraints: &'a ConstraintSet,
        config: &AnnealerConfig,
    ) -> Result<Self, AnnealError> {
        config.validate()?;
        let start = match &config.start_activity {
            Some(a) => a.clone(),
            None => net
                .infer_start_activity()
                .ok_or(AnnealError::UnknownStartActivity)?,
        };
        let start_label = net
            .label_id(&start)
            .ok_or(AnnealError::UnknownStartActivity)?;
        let labels = log.events().iter().map(|e| net.label_id(&e.activity)).collect();
        let mut ids: HashMap<&str, u32> = HashMap::new();
        let activity_ids = log
            .events()
            .iter()
            .map(|e| {
                let n = ids.len() as u32;
                *ids.entry(e.activity.as_str()).or_insert(n)
            })
            .collect();
        Ok(Self {
            log,
            net,
            constraints,
            start_label,
            labels,
            activity_ids,
            n_activities: ids.len(),
            replay: ReplayCache::new(config.marking_budget),
            alignments: AlignmentCache::new(config.alignment_budget),
            verify: config.verify_energies,
        })
    }

    fn event(&self, pos: u32) -> &'a Event {
        &self.log.events()[pos as usize]
    }

    fn case_refs(&self, events: &[u32]) -> Vec<&'a Event> {
        events.iter().map(|&p| self.event(p)).collect()
    }

    fn open_case(&self, state: &mut CorrelationState) -> usize {
        let marking = self.net.initial_marking();
        state.cases.push(CaseState {
            events: Vec::new(),
            closed: self.net.is_final(&marking),
            marking,
        });
        state.cases.len() - 1
    }

    /// Appends event `pos` to case `c`, firing its transition when the case
    /// is open and can execute it. Otherwise the marking is left as is.
    fn apply(&self, state: &mut CorrelationState, c: usize, pos: u32) -> Result<(), NetError> {
        let case = &mut state.cases[c];
        case.events.push(pos);
        if case.closed {
            return Ok(());
        }
        if let Some(label) = self.labels[pos as usize] {
            let info = self.replay.get(self.net, &case.marking)?;
            if let Some(next) = info.advance(label) {
                case.marking = next.clone();
                case.closed = self.replay.get(self.net, &case.marking)?.is_final;
            }
        }
        Ok(())
    }

    fn best_by_score<R: Rng>(
        &self,
        state: &CorrelationState,
        candidates: &[usize],
        pos: u32,
        rng: &mut R,
    ) -> usize {
        if candidates.len() == 1 {
            return candidates[0];
        }
        let ties: Vec<usize> = if self.constraints.is_empty() {
            candidates.to_vec()
        } else {
            let e = self.event(pos);
            let scores: Vec<usize> = candidates
                .iter()
                .map(|&c| {
                    self.constraints
                        .score(e, &self.case_refs(&state.cases[c].events))
                })
                .collect();
            let top = *scores.iter().max().expect("non-empty candidates");
            candidates
                .iter()
                .zip(&scores)
                .filter(|(_, &s)| s == top)
                .map(|(&c, _)| c)
                .collect()
        };
        ties[rng.gen_range(0..ties.len())]
    }

    /// Assigns event `pos` to a case and returns the case index.
    ///
    /// A start event always opens a case. Otherwise the candidates are the
    /// open cases that can execute the event next, or, when there are none,
    /// every case. The highest constraint score wins; ties are broken
    /// uniformly at random. If no case exists yet, one is opened.
    pub fn correlate_event<R: Rng>(
        &self,
        state: &mut CorrelationState,
        pos: usize,
        rng: &mut R,
    ) -> Result<usize, NetError> {
        let pos32 = pos as u32;
        let label = self.labels[pos];
        let c = if label == Some(self.start_label) || state.cases.is_empty() {
            self.open_case(state)
        } else {
            let mut enabled = Vec::new();
            if let Some(l) = label {
                for (c, case) in state.cases.iter().enumerate() {
                    if !case.closed && self.replay.get(self.net, &case.marking)?.enables(l) {
                        enabled.push(c);
                    }
                }
            }
            if enabled.is_empty() {
                let all: Vec<usize> = (0..state.cases.len()).collect();
                self.best_by_score(state, &all, pos32, rng)
            } else {
                self.best_by_score(state, &enabled, pos32, rng)
            }
        };
        self.apply(state, c, pos32)?;
        Ok(c)
    }

    pub fn initial_individual<R: Rng>(&self, rng: &mut R) -> Result<Individual, NetError> {
        let mut state = CorrelationState::default();
        for pos in 0..self.log.len() {
            self.correlate_event(&mut state, pos, rng)?;
        }
        self.finish(state, None, 0)
    }

    /// Re-correlates the events from a random changing point onwards. The
    /// changing point is drawn from `[floor(n (s-1) / s_max) + 1, n]`.
    pub fn neighbor<R: Rng>(
        &self,
        x: &Individual,
        s_curr: u32,
        s_max: u32,
        rng: &mut R,
    ) -> Result<Individual, NetError> {
        let n = self.log.len() as u64;
        let s = s_curr.clamp(1, s_max) as u64;
        let lo = n * (s - 1) / s_max as u64 + 1;
        let k = rng.gen_range(lo..=n) as usize;
        self.neighbor_at(x, k, rng)
    }

    /// Keeps the assignment of events `1..k` and re-correlates events `k..=n`
    /// (1-based).
    pub fn neighbor_at<R: Rng>(
        &self,
        x: &Individual,
        k: usize,
        rng: &mut R,
    ) -> Result<Individual, NetError> {
        let kp = k - 1;
        let mut state = CorrelationState::default();
        for pos in 0..kp {
            let c = x.assignment[pos] as usize;
            if c == state.cases.len() {
                self.open_case(&mut state);
            }
            self.apply(&mut state, c, pos as u32)?;
        }
        for pos in kp..self.log.len() {
            self.correlate_event(&mut state, pos, rng)?;
        }
        self.finish(state, Some(x), kp)
    }

    fn case_cost(&self, events: &[u32]) -> Result<CaseCost, NetError> {
        let trace: Vec<LabelId> = events.iter().map(|&p| self.labels[p as usize]).collect();
        let align = self.alignments.cost(self.net, &trace)?;
        let (violated, triggered) = if self.constraints.is_empty() {
            (0, 0)
        } else {
            self.constraints.case_counts(&self.case_refs(events))
        };
        Ok(CaseCost {
            align,
            violated,
            triggered,
        })
    }

    /// Builds an individual, reusing per-case costs of `prev` for cases that
    /// lie entirely before the changing point in both individuals.
    fn finish(
        &self,
        state: CorrelationState,
        prev: Option<&Individual>,
        kp: usize,
    ) -> Result<Individual, NetError> {
        let mut assignment = vec![0u32; self.log.len()];
        let mut cases = Vec::with_capacity(state.cases.len());
        for (c, case) in state.cases.into_iter().enumerate() {
            for &p in &case.events {
                assignment[p as usize] = c as u32;
            }
            cases.push(case.events);
        }
        let untouched = |c: usize, events: &[u32]| -> bool {
            let before = |ev: &[u32]| ev.last().is_some_and(|&p| (p as usize) < kp);
            prev.is_some_and(|x| c < x.cases.len() && before(&x.cases[c]) && before(events))
        };
        let mut case_costs = Vec::with_capacity(cases.len());
        for (c, events) in cases.iter().enumerate() {
            case_costs.push(match prev {
                Some(x) if untouched(c, events) => x.case_costs[c],
                _ => self.case_cost(events)?,
            });
        }
        let energy = self.energy_of(&cases, &case_costs);
        let ind = Individual {
            assignment,
            cases,
            case_costs,
            energy,
        };
        if self.verify && prev.is_some() {
            let fresh: Result<Vec<CaseCost>, NetError> =
                ind.cases.iter().map(|ev| self.case_cost(ev)).collect();
            let fresh = fresh?;
            assert_eq!(fresh, ind.case_costs, "cached case costs diverged");
            assert_eq!(self.energy_of(&ind.cases, &fresh), ind.energy);
        }
        Ok(ind)
    }

    fn energy_of(&self, cases: &[Vec<u32>], costs: &[CaseCost]) -> Energy {
        Energy {
            fa: costs.iter().map(|c| c.align as u64).sum(),
            fr: rule_cost_from_counts(costs.iter().map(|c| (c.violated, c.triggered))),
            ft: self.time_variance(cases),
        }
    }

    fn time_variance(&self, cases: &[Vec<u32>]) -> f64 {
        let mut sum = vec![0.0f64; self.n_activities];
        let mut count = vec![0u32; self.n_activities];
        let mut n = 0usize;
        for case in cases {
            for w in case.windows(2) {
                let a = self.activity_ids[w[1] as usize] as usize;
                sum[a] += (self.event(w[1]).timestamp - self.event(w[0]).timestamp) as f64;
                count[a] += 1;
                n += 1;
            }
        }
        if n == 0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for case in cases {
            for w in case.windows(2) {
                let a = self.activity_ids[w[1] as usize] as usize;
                let et = (self.event(w[1]).timestamp - self.event(w[0]).timestamp) as f64;
                let d = sum[a] / count[a] as f64 - et;
                acc += d * d;
            }
        }
        acc / n as f64
    }

    /// Energy of an arbitrary event log over the same events.
    pub fn evaluate(&self, log: &EventLog) -> Result<Energy, NetError> {
        let mut cases: Vec<Vec<u32>> = vec![Vec::new(); log.num_cases()];
        for (p, &c) in log.assignment().iter().enumerate() {
            cases[c].push(p as u32);
        }
        let costs: Result<Vec<CaseCost>, NetError> =
            cases.iter().map(|ev| self.case_cost(ev)).collect();
        Ok(self.energy_of(&cases, &costs?))
    }
}

/// Average elapsed time per activity over non-start events.
pub fn average_durations(log: &EventLog) -> std::collections::BTreeMap<String, f64> {
    let mut acc: std::collections::BTreeMap<String, (f64, u32)> = Default::default();
    for case in log.cases() {
        for w in case.events.windows(2) {
            let e = acc.entry(w[1].activity.clone()).or_default();
            e.0 += (w[1].timestamp - w[0].timestamp) as f64;
            e.1 += 1;
        }
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

/// Time variance of a log: mean squared deviation of each non-start event's
/// elapsed time from its activity's average. 0 when every case is a singleton.
pub fn time_variance(log: &EventLog) -> f64 {
    let avg = average_durations(log);
    let mut acc = 0.0;
    let mut n = 0usize;
    for case in log.cases() {
        for w in case.events.windows(2) {
            let d = avg[&w[1].activity] - (w[1].timestamp - w[0].timestamp) as f64;
            acc += d * d;
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        acc / n as f64
    }
}

/// One row of the iteration trace.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub s_curr: u32,
    pub tau_curr: f64,
    pub slot: usize,
    pub energy: Energy,
    pub accepted: bool,
    pub global_best: Energy,
}

impl IterationRecord {
    pub const CSV_HEADER: &'static str =
        "s_curr,tau_curr,slot,fa,fr,ft,accepted,global_best_fa,global_best_fr,global_best_ft";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.s_curr,
            self.tau_curr,
            self.slot,
            self.energy.fa,
            self.energy.fr_f64(),
            self.energy.ft,
            self.accepted as u8,
            self.global_best.fa,
            self.global_best.fr_f64(),
            self.global_best.ft
        )
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub best: Individual,
    pub trace: Vec<IterationRecord>,
}

impl RunOutcome {
    pub fn trace_csv(&self) -> String {
        let mut s = String::from(IterationRecord::CSV_HEADER);
        s.push('\n');
        for r in &self.trace {
            s.push_str(&r.to_csv_row());
            s.push('\n');
        }
        s
    }
}

/// Generator of population slot `slot`: one ChaCha8 stream per slot.
pub fn slot_rng(seed: u64, slot: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(slot as u64);
    rng
}

struct Slot {
    rng: ChaCha8Rng,
    current: Option<Individual>,
}

fn current(s: &Slot) -> &Individual {
    s.current.as_ref().expect("initialised")
}

/// Runs the annealer and returns the global best individual with the
/// per-iteration trace. The result depends only on the inputs and
/// `config.rng_seed`, not on `config.parallel`.
pub fn run(
    log: &UncorrelatedLog,
    net: &WorkflowNet,
    constraints: &ConstraintSet,
    config: &AnnealerConfig,
) -> Result<RunOutcome, AnnealError> {
    let corr = Correlator::new(log, net, constraints, config)?;
    let mut slots: Vec<Slot> = (0..config.pop_size)
        .map(|i| Slot {
            rng: slot_rng(config.rng_seed, i),
            current: None,
        })
        .collect();

    let init = map_indexed(&mut slots, config.parallel, |_, slot| {
        slot.current = Some(corr.initial_individual(&mut slot.rng)?);
        Ok::<_, NetError>(())
    });
    init.into_iter().collect::<Result<Vec<()>, _>>()?;

    let mut best = current(&slots[0]).clone();
    for s in &slots[1..] {
        if current(s).energy.lex_cmp(&best.energy).is_lt() {
            best = current(s).clone();
        }
    }

    let mut trace = Vec::with_capacity(config.s_max as usize * config.pop_size);
    for s_curr in 1..=config.s_max {
        let tau = cooling(config.tau_init, s_curr as f64);
        let steps = map_indexed(&mut slots, config.parallel, |_, slot| {
            let x = slot.current.as_ref().expect("initialised");
            let xp = corr.neighbor(x, s_curr, config.s_max, &mut slot.rng)?;
            let accepted = select_next(&x.energy, &xp.energy, tau, &mut slot.rng);
            if accepted {
                slot.current = Some(xp);
            }
            Ok::<_, NetError>(accepted)
        });
        for (i, step) in steps.into_iter().enumerate() {
            let accepted = step?;
            let x = current(&slots[i]);
            if x.energy.lex_cmp(&best.energy).is_lt() {
                best = x.clone();
            }
            trace.push(IterationRecord {
                s_curr,
                tau_curr: tau,
                slot: i,
                energy: x.energy.clone(),
                accepted,
                global_best: best.energy.clone(),
            });
        }
    }
    if config.verify_energies {
        let fresh = corr.evaluate(&best.to_event_log(Arc::new(log.clone())))?;
        if fresh != best.energy {
            return Err(AnnealError::EnergyMismatch);
        }
    }
    Ok(RunOutcome { best, trace })
}
