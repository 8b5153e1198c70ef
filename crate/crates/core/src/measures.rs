//! Log-to-log similarity and time-deviation measures.
//!
//! `L` is the reference log and `L'` the reconstructed one; both must share
//! the same underlying events. Events are identified by their index.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::model::{Case, EventLog, Minutes, Trace};

/// Insertion/deletion edit distance: `|a| + |b| - 2 * LCS(a, b)`.
pub fn edit_distance_ins_del<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (k, y) in b.iter().enumerate() {
            cur[k + 1] = if x == y {
                prev[k] + 1
            } else {
                cur[k].max(prev[k + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    a.len() + b.len() - 2 * prev[b.len()]
}

fn distinct_traces(log: &EventLog) -> Vec<Trace> {
    let mut seen = HashSet::new();
    log.traces()
        .into_iter()
        .filter(|t| seen.insert(t.clone()))
        .collect()
}

/// Each distinct trace of `L` is matched to its nearest trace of `L'`
/// (first in order of appearance on ties).
pub fn l2l_trace(l: &EventLog, lp: &EventLog) -> f64 {
    let tl = distinct_traces(l);
    let tp = distinct_traces(lp);
    let mut dist = 0usize;
    let mut len = 0usize;
    for t in &tl {
        let (d, n) = tp
            .iter()
            .map(|u| (edit_distance_ins_del(t, u), u.len()))
            .min_by_key(|&(d, _)| d)
            .unwrap_or((t.len(), 0));
        dist += d;
        len += t.len() + n;
    }
    if len == 0 {
        1.0
    } else {
        1.0 - dist as f64 / len as f64
    }
}

/// Minimum-cost perfect matching on a square integer cost matrix
/// (Hungarian method with potentials, `O(n^3)`). Returns the total cost and
/// the column assigned to every row.
pub fn hungarian(cost: &[Vec<i64>]) -> (i64, Vec<usize>) {
    let n = cost.len();
    if n == 0 {
        return (0, Vec::new());
    }
    assert!(cost.iter().all(|r| r.len() == n), "cost matrix must be square");
    // 1-based arrays; column 0 is a virtual start.
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        assign[p[j] - 1] = j - 1;
    }
    let total = (0..n).map(|i| cost[i][assign[i]]).sum();
    (total, assign)
}

/// Optimal case matching behind [`l2l_freq`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreqMatching {
    pub total_distance: usize,
    /// The logs had different case counts and empty cases were added.
    pub padded: bool,
}

pub fn freq_matching(l: &EventLog, lp: &EventLog) -> FreqMatching {
    let mut a = l.traces();
    let mut b = lp.traces();
    let padded = a.len() != b.len();
    let n = a.len().max(b.len());
    a.resize(n, Vec::new());
    b.resize(n, Vec::new());
    let cost: Vec<Vec<i64>> = a
        .iter()
        .map(|x| b.iter().map(|y| edit_distance_ins_del(x, y) as i64).collect())
        .collect();
    let (total, _) = hungarian(&cost);
    FreqMatching {
        total_distance: total as usize,
        padded,
    }
}

pub fn l2l_freq(l: &EventLog, lp: &EventLog) -> f64 {
    let m = freq_matching(l, lp);
    1.0 - m.total_distance as f64 / (2 * l.events().len()) as f64
}

fn indices(c: &Case<'_>) -> Vec<usize> {
    c.events.iter().map(|e| e.index).collect()
}

fn by_first<'a>(cases: &'a [Case<'a>]) -> HashMap<usize, &'a Case<'a>> {
    cases.iter().map(|c| (c.first().index, c)).collect()
}

fn case_sets(log: &EventLog) -> HashSet<Vec<usize>> {
    log.cases().iter().map(indices).collect()
}

/// Shared non-start events of cases that begin with the same event.
pub fn l2l_first(l: &EventLog, lp: &EventLog) -> f64 {
    let cl = l.cases();
    let cp = lp.cases();
    let denom = l.events().len() - cl.len();
    if denom == 0 {
        // only singleton cases: nothing to share unless partitions coincide
        return if case_sets(l) == case_sets(lp) { 1.0 } else { 0.0 };
    }
    let firsts = by_first(&cp);
    let mut shared = 0usize;
    for c in &cl {
        if let Some(o) = firsts.get(&c.first().index) {
            let tail: HashSet<usize> = o.events[1..].iter().map(|e| e.index).collect();
            shared += c.events[1..]
                .iter()
                .filter(|e| tail.contains(&e.index))
                .count();
        }
    }
    shared as f64 / denom as f64
}

/// Average over cases of `L` of the share of their `n`-event windows that
/// occur as a window of some case of `L'`. A case shorter than `n` counts 1
/// when it occurs unchanged in `L'` and 0 otherwise.
pub fn l2l_ngram(l: &EventLog, lp: &EventLog, n: usize) -> f64 {
    assert!(n >= 1);
    let cl = l.cases();
    let mut windows: HashSet<Vec<usize>> = HashSet::new();
    let other = case_sets(lp);
    for c in &other {
        for w in c.windows(n) {
            windows.insert(w.to_vec());
        }
    }
    let total: f64 = cl
        .iter()
        .map(|c| {
            let idx = indices(c);
            if idx.len() < n {
                return if other.contains(&idx) { 1.0 } else { 0.0 };
            }
            let all = idx.len() - n + 1;
            let hit = idx.windows(n).filter(|w| windows.contains(*w)).count();
            hit as f64 / all as f64
        })
        .sum();
    total / cl.len() as f64
}

pub fn l2l_2gram(l: &EventLog, lp: &EventLog) -> f64 {
    l2l_ngram(l, lp, 2)
}

pub fn l2l_3gram(l: &EventLog, lp: &EventLog) -> f64 {
    l2l_ngram(l, lp, 3)
}

/// Share of cases of `L` reproduced exactly (same events) in `L'`.
pub fn l2l_case(l: &EventLog, lp: &EventLog) -> f64 {
    let other = case_sets(lp);
    let cl = l.cases();
    let hit = cl.iter().filter(|c| other.contains(&indices(c))).count();
    hit as f64 / cl.len() as f64
}

fn smape_term(a: Minutes, b: Minutes) -> f64 {
    let den = a.abs() + b.abs();
    if den == 0 {
        0.0
    } else {
        (a - b).abs() as f64 / den as f64
    }
}

/// Elapsed time per event index, each event taken in its own case.
fn elapsed_times(log: &EventLog) -> HashMap<usize, Minutes> {
    let mut out = HashMap::new();
    for c in log.cases() {
        out.insert(c.events[0].index, 0);
        for w in c.events.windows(2) {
            out.insert(w[1].index, w[1].timestamp - w[0].timestamp);
        }
    }
    out
}

/// Mean SMAPE of elapsed times over the non-start events of `L`.
pub fn smape_et(l: &EventLog, lp: &EventLog) -> f64 {
    let et = elapsed_times(l);
    let etp = elapsed_times(lp);
    let cl = l.cases();
    let mut sum = 0.0;
    let mut count = 0usize;
    for c in &cl {
        for e in &c.events[1..] {
            sum += smape_term(et[&e.index], etp.get(&e.index).copied().unwrap_or(0));
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// SMAPE of cycle times over cases sharing their first event, averaged over `|I|`.
pub fn smape_ct(l: &EventLog, lp: &EventLog) -> f64 {
    let cl = l.cases();
    let cp = lp.cases();
    let firsts = by_first(&cp);
    let sum: f64 = cl
        .iter()
        .filter_map(|c| {
            firsts
                .get(&c.first().index)
                .map(|o| smape_term(c.cycle_time(), o.cycle_time()))
        })
        .sum();
    sum / cl.len() as f64
}

/// All eight measures for one pair of logs.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureReport {
    pub l2l_trace: f64,
    pub l2l_freq: f64,
    pub l2l_first: f64,
    pub l2l_2gram: f64,
    pub l2l_3gram: f64,
    pub l2l_case: f64,
    pub smape_et: f64,
    pub smape_ct: f64,
    /// Case counts differed and the frequency matching padded with empty cases.
    pub padded_cases: bool,
}

impl MeasureReport {
    pub const KEYS: [&'static str; 8] = [
        "l2l_trace",
        "l2l_freq",
        "l2l_first",
        "l2l_2gram",
        "l2l_3gram",
        "l2l_case",
        "smape_et",
        "smape_ct",
    ];

    pub fn compute(l: &EventLog, lp: &EventLog) -> Self {
        let m = freq_matching(l, lp);
        Self {
            l2l_trace: l2l_trace(l, lp),
            l2l_freq: 1.0 - m.total_distance as f64 / (2 * l.events().len()) as f64,
            l2l_first: l2l_first(l, lp),
            l2l_2gram: l2l_2gram(l, lp),
            l2l_3gram: l2l_3gram(l, lp),
            l2l_case: l2l_case(l, lp),
            smape_et: smape_et(l, lp),
            smape_ct: smape_ct(l, lp),
            padded_cases: m.padded,
        }
    }

    pub fn values(&self) -> [f64; 8] {
        [
            self.l2l_trace,
            self.l2l_freq,
            self.l2l_first,
            self.l2l_2gram,
            self.l2l_3gram,
            self.l2l_case,
            self.smape_et,
            self.smape_ct,
        ]
    }

    /// `key: value` lines, values to 3 decimals.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in Self::KEYS.iter().zip(self.values()) {
            let _ = writeln!(s, "{k}: {v:.3}");
        }
        if self.padded_cases {
            s.push_str("note: case counts differ, frequency matching padded with empty cases\n");
        }
        s
    }

    pub fn csv_header() -> String {
        Self::KEYS.join(",")
    }

    pub fn to_csv_row(&self) -> String {
        self.values()
            .iter()
            .map(|v| format!("{v:.3}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}
