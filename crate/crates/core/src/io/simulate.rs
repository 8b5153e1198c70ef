//! Timed token-game simulation of a workflow net.

use std::collections::HashMap;
use std::sync::Arc;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::IoError;
use crate::model::{AttrValue, EventLog, Minutes, RawEvent, UncorrelatedLog};
use crate::net::WorkflowNet;

/// A per-case attribute drawn once per case from a pool.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseAttribute {
    pub name: String,
    pub pool: Vec<String>,
}

/// A per-event resource. For every `(from, to)` handoff, an event of
/// activity `to` reuses the resource of the latest `from` event of its case.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceModel {
    pub attribute: String,
    pub pool: Vec<String>,
    pub handoffs: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub n_cases: usize,
    /// Time between case starts as a fraction of the estimated cycle time.
    pub inter_arrival: f64,
    /// Per-activity `(mean, jitter)` in minutes; durations are drawn
    /// uniformly from `mean - jitter ..= mean + jitter`, at least 1.
    pub durations: HashMap<String, (Minutes, Minutes)>,
    pub default_duration: (Minutes, Minutes),
    /// Per decision place, the choice probability of each consuming
    /// transition (by id). Unlisted transitions weigh 1.
    pub branching: HashMap<String, Vec<(String, f64)>>,
    /// How often one transition may fire within a case while an alternative
    /// is enabled.
    pub max_loop_iterations: u32,
    pub case_attributes: Vec<CaseAttribute>,
    pub resource: Option<ResourceModel>,
    pub calibration_runs: usize,
    /// Timestamp of the first case start.
    pub start_time: Minutes,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n_cases: 100,
            inter_arrival: 1.0,
            durations: HashMap::new(),
            default_duration: (60, 30),
            branching: HashMap::new(),
            max_loop_iterations: 3,
            case_attributes: Vec::new(),
            resource: None,
            calibration_runs: 100,
            // 2020-01-01 00:00
            start_time: 26_297_280,
            seed: 0,
        }
    }
}

const MAX_STEPS: usize = 10_000;

struct Engine<'a> {
    net: &'a WorkflowNet,
    config: &'a SimulationConfig,
    weights: Vec<f64>,
}

impl<'a> Engine<'a> {
    fn new(net: &'a WorkflowNet, config: &'a SimulationConfig) -> Result<Self, IoError> {
        if !(config.inter_arrival > 0.0 && config.inter_arrival.is_finite()) {
            return Err(IoError::Simulation("inter_arrival must be positive".into()));
        }
        if config.n_cases == 0 {
            return Err(IoError::Simulation("n_cases must be positive".into()));
        }
        let mut weights = vec![1.0; net.transitions().len()];
        for (place, probs) in &config.branching {
            let p = net
                .place_index(place)
                .ok_or_else(|| IoError::Simulation(format!("unknown place {place}")))?;
            let sum: f64 = probs.iter().map(|(_, w)| w).sum();
            if (sum - 1.0).abs() > 1e-9 || probs.iter().any(|(_, w)| *w < 0.0) {
                return Err(IoError::Simulation(format!(
                    "probabilities of {place} must be non-negative and sum to 1"
                )));
            }
            for (t, w) in probs {
                let ti = net
                    .transition_index(t)
                    .filter(|ti| net.consumers(p).contains(ti))
                    .ok_or_else(|| {
                        IoError::Simulation(format!("{t} does not consume from {place}"))
                    })?;
                weights[ti] = *w;
            }
        }
        Ok(Self {
            net,
            config,
            weights,
        })
    }

    fn duration<R: Rng>(&self, label: &str, rng: &mut R) -> Minutes {
        let (mean, jitter) = self
            .config
            .durations
            .get(label)
            .copied()
            .unwrap_or(self.config.default_duration);
        let d = if jitter > 0 {
            rng.gen_range(mean - jitter..=mean + jitter)
        } else {
            mean
        };
        d.max(1)
    }

    /// One case run: visible `(completion time, label)` pairs in firing order.
    fn run_case<R: Rng>(&self, start: Minutes, rng: &mut R) -> Result<Vec<(Minutes, String)>, IoError> {
        let net = self.net;
        let out = net.output_place();
        let mut tokens: Vec<Vec<Minutes>> = vec![Vec::new(); net.places().len()];
        tokens[net.input_place()].push(start);
        let mut fired = vec![0u32; net.transitions().len()];
        let mut events = Vec::new();
        for _ in 0..MAX_STEPS {
            let enabled: Vec<usize> = (0..net.transitions().len())
                .filter(|&t| net.preset(t).iter().all(|&p| !tokens[p].is_empty()))
                .collect();
            if !tokens[out].is_empty() && (enabled.is_empty() || tokens.iter().map(Vec::len).sum::<usize>() == tokens[out].len()) {
                return Ok(events);
            }
            if enabled.is_empty() {
                return Err(IoError::Simulation("run got stuck before the final marking".into()));
            }
            let capped: Vec<usize> = enabled
                .iter()
                .copied()
                .filter(|&t| fired[t] < self.config.max_loop_iterations)
                .collect();
            let pool = if capped.is_empty() { &enabled } else { &capped };
            let w: Vec<f64> = pool.iter().map(|&t| self.weights[t]).collect();
            let t = match WeightedIndex::new(&w) {
                Ok(dist) => pool[dist.sample(rng)],
                Err(_) => pool[rng.gen_range(0..pool.len())],
            };
            fired[t] += 1;
            let mut ready = Minutes::MIN;
            for &p in net.preset(t) {
                let q = &mut tokens[p];
                let (k, &earliest) = q
                    .iter()
                    .enumerate()
                    .min_by_key(|(_, &v)| v)
                    .expect("enabled");
                q.swap_remove(k);
                ready = ready.max(earliest);
            }
            let done = match &net.transitions()[t].label {
                Some(l) => {
                    let d = ready + self.duration(l, rng);
                    events.push((d, l.clone()));
                    d
                }
                None => ready,
            };
            for &p in net.postset(t) {
                tokens[p].push(done);
            }
        }
        Err(IoError::Simulation(format!("run exceeded {MAX_STEPS} steps")))
    }
}

fn sort_case(events: &mut [(Minutes, String)]) {
    events.sort_by_key(|(t, _)| *t);
}

/// Mean cycle time over `config.calibration_runs` independent runs.
pub fn estimate_cycle_time(net: &WorkflowNet, config: &SimulationConfig) -> Result<f64, IoError> {
    let engine = Engine::new(net, config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let runs = config.calibration_runs.max(1);
    let mut total = 0.0;
    for _ in 0..runs {
        let mut ev = engine.run_case(0, &mut rng)?;
        sort_case(&mut ev);
        if let (Some(a), Some(b)) = (ev.first(), ev.last()) {
            total += (b.0 - a.0) as f64;
        }
    }
    Ok(total / runs as f64)
}

/// Simulates `n_cases` runs. Case `k` (0-based) starts at
/// `start_time + k * inter_arrival * CT`, with `CT` from a calibration pass.
/// Case ids are `c1, c2, ...` in order of their first event.
pub fn simulate_log(net: &WorkflowNet, config: &SimulationConfig) -> Result<EventLog, IoError> {
    let engine = Engine::new(net, config)?;
    let ct = estimate_cycle_time(net, config)?;
    let gap = config.inter_arrival * ct;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // (timestamp, case, seq, raw event)
    let mut all: Vec<(Minutes, usize, usize, RawEvent)> = Vec::new();
    for k in 0..config.n_cases {
        let start = config.start_time + (k as f64 * gap).round() as Minutes;
        let mut events = engine.run_case(start, &mut rng)?;
        sort_case(&mut events);
        let case_attrs: Vec<(String, String)> = config
            .case_attributes
            .iter()
            .filter(|a| !a.pool.is_empty())
            .map(|a| (a.name.clone(), a.pool[rng.gen_range(0..a.pool.len())].clone()))
            .collect();
        let mut last_res: HashMap<String, String> = HashMap::new();
        for (seq, (ts, label)) in events.into_iter().enumerate() {
            let mut raw = RawEvent::new(label.clone(), ts);
            for (n, v) in &case_attrs {
                raw.attributes.insert(n.clone(), AttrValue::Str(v.clone()));
            }
            if let Some(res) = config.resource.as_ref().filter(|r| !r.pool.is_empty()) {
                let handed = res
                    .handoffs
                    .iter()
                    .filter(|(_, to)| *to == label)
                    .find_map(|(from, _)| last_res.get(from).cloned());
                let r = handed.unwrap_or_else(|| res.pool[rng.gen_range(0..res.pool.len())].clone());
                last_res.insert(label.clone(), r.clone());
                raw.attributes.insert(res.attribute.clone(), AttrValue::Str(r));
            }
            all.push((ts, k, seq, raw));
        }
    }
    all.sort_by_key(|(ts, k, seq, _)| (*ts, *k, *seq));
    let cases: Vec<usize> = all.iter().map(|(_, k, _, _)| *k).collect();
    let log = UncorrelatedLog::build(all.into_iter().map(|(.., r)| r).collect())?;
    let mut rank: HashMap<usize, usize> = HashMap::new();
    let assignment: Vec<usize> = cases
        .iter()
        .map(|k| {
            let n = rank.len();
            *rank.entry(*k).or_insert(n)
        })
        .collect();
    let ids = (1..=rank.len()).map(|k| format!("c{k}")).collect();
    Ok(EventLog::new(Arc::new(log), ids, assignment)?)
}
