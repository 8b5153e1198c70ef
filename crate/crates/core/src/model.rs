//! Events, uncorrelated logs, correlated logs, cases and traces.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Timestamps and durations are whole minutes since the Unix epoch.
pub type Minutes = i64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("log contains no events")]
    EmptyLog,
    #[error("record {record}: missing {field}")]
    MissingField { record: usize, field: &'static str },
    #[error("position {position} out of range for case of length {len}")]
    PositionOutOfRange { position: usize, len: usize },
    #[error("assignment has {got} entries but the log has {expected} events")]
    AssignmentLength { expected: usize, got: usize },
    #[error("case index {0} is out of range")]
    UnknownCase(usize),
    #[error("case {0} has no events")]
    EmptyCase(String),
    #[error("duplicate case id {0}")]
    DuplicateCase(String),
}

/// A scalar attribute value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttrValue {
    Int(i64),
    Str(String),
}

impl AttrValue {
    /// Parses a raw cell: integers become `Int` only when they print back identically.
    pub fn parse(raw: &str) -> Self {
        match raw.parse::<i64>() {
            Ok(v) if v.to_string() == raw => AttrValue::Int(v),
            _ => AttrValue::Str(raw.to_owned()),
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            AttrValue::Int(v) => Some(*v),
            AttrValue::Str(s) => s.trim().parse().ok(),
        }
    }
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Int(v) => write!(f, "{v}"),
            AttrValue::Str(s) => f.write_str(s),
        }
    }
}

impl From<&str> for AttrValue {
    fn from(s: &str) -> Self {
        AttrValue::Str(s.to_owned())
    }
}

impl From<String> for AttrValue {
    fn from(s: String) -> Self {
        AttrValue::Str(s)
    }
}

impl From<i64> for AttrValue {
    fn from(v: i64) -> Self {
        AttrValue::Int(v)
    }
}

/// An input record before ordering. Activity and timestamp may be missing so
/// that ingestion can report exactly which record is broken.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawEvent {
    pub activity: Option<String>,
    pub timestamp: Option<Minutes>,
    pub attributes: BTreeMap<String, AttrValue>,
}

impl RawEvent {
    pub fn new(activity: impl Into<String>, timestamp: Minutes) -> Self {
        Self {
            activity: Some(activity.into()),
            timestamp: Some(timestamp),
            attributes: BTreeMap::new(),
        }
    }

    pub fn with_attr(mut self, name: impl Into<String>, value: impl Into<AttrValue>) -> Self {
        self.attributes.insert(name.into(), value.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    /// 1-based position in the total order.
    pub index: usize,
    pub activity: String,
    pub timestamp: Minutes,
    pub attributes: BTreeMap<String, AttrValue>,
}

impl Event {
    pub fn attr(&self, name: &str) -> Option<&AttrValue> {
        self.attributes.get(name)
    }
}

/// A totally ordered stream of events without case identifiers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UncorrelatedLog {
    events: Vec<Event>,
}

impl UncorrelatedLog {
    /// Sorts records stably by timestamp and numbers them `1..=n`.
    pub fn build(raw: Vec<RawEvent>) -> Result<Self, ModelError> {
        let (log, _) = Self::build_with_order(raw)?;
        Ok(log)
    }

    /// Like [`build`](Self::build), also returning for every input record its
    /// 0-based position in the sorted log.
    pub fn build_with_order(raw: Vec<RawEvent>) -> Result<(Self, Vec<usize>), ModelError> {
        if raw.is_empty() {
            return Err(ModelError::EmptyLog);
        }
        let mut keyed = Vec::with_capacity(raw.len());
        for (record, r) in raw.into_iter().enumerate() {
            let activity = r.activity.ok_or(ModelError::MissingField {
                record: record + 1,
                field: "activity",
            })?;
            let timestamp = r.timestamp.ok_or(ModelError::MissingField {
                record: record + 1,
                field: "timestamp",
            })?;
            keyed.push((record, activity, timestamp, r.attributes));
        }
        // stable: equal timestamps keep input order
        keyed.sort_by_key(|k| k.2);
        let mut order = vec![0; keyed.len()];
        let events = keyed
            .into_iter()
            .enumerate()
            .map(|(pos, (record, activity, timestamp, attributes))| {
                order[record] = pos;
                Event {
                    index: pos + 1,
                    activity,
                    timestamp,
                    attributes,
                }
            })
            .collect();
        Ok((Self { events }, order))
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// A sequence of activity labels.
pub type Trace = Vec<String>;

/// One process instance: a non-empty, order-preserving subsequence of events.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Case<'a> {
    pub id: &'a str,
    pub events: Vec<&'a Event>,
}

impl<'a> Case<'a> {
    pub fn new(id: &'a str, events: Vec<&'a Event>) -> Self {
        Self { id, events }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn first(&self) -> &'a Event {
        self.events[0]
    }

    pub fn trace(&self) -> Trace {
        self.events.iter().map(|e| e.activity.clone()).collect()
    }

    /// Time since the previous event of the case; 0 at position 1.
    pub fn elapsed_time(&self, position: usize) -> Result<Minutes, ModelError> {
        if position == 0 || position > self.events.len() {
            return Err(ModelError::PositionOutOfRange {
                position,
                len: self.events.len(),
            });
        }
        Ok(if position == 1 {
            0
        } else {
            self.events[position - 1].timestamp - self.events[position - 2].timestamp
        })
    }

    pub fn cycle_time(&self) -> Minutes {
        match (self.events.first(), self.events.last()) {
            (Some(a), Some(b)) => b.timestamp - a.timestamp,
            _ => 0,
        }
    }
}

/// An uncorrelated log together with a total, surjective event-to-case map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventLog {
    base: Arc<UncorrelatedLog>,
    case_ids: Vec<String>,
    /// Case index per event position.
    assignment: Vec<usize>,
}

impl EventLog {
    pub fn new(
        base: Arc<UncorrelatedLog>,
        case_ids: Vec<String>,
        assignment: Vec<usize>,
    ) -> Result<Self, ModelError> {
        if assignment.len() != base.len() {
            return Err(ModelError::AssignmentLength {
                expected: base.len(),
                got: assignment.len(),
            });
        }
        let mut used = vec![false; case_ids.len()];
        for &c in &assignment {
            *used.get_mut(c).ok_or(ModelError::UnknownCase(c))? = true;
        }
        if let Some(c) = used.iter().position(|u| !u) {
            return Err(ModelError::EmptyCase(case_ids[c].clone()));
        }
        let mut seen = std::collections::HashSet::new();
        for id in &case_ids {
            if !seen.insert(id.as_str()) {
                return Err(ModelError::DuplicateCase(id.clone()));
            }
        }
        Ok(Self {
            base,
            case_ids,
            assignment,
        })
    }

    /// Builds a log from one case label per event position. Case order is the
    /// order in which labels first appear.
    pub fn from_labels<S: AsRef<str>>(
        base: Arc<UncorrelatedLog>,
        labels: &[S],
    ) -> Result<Self, ModelError> {
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut case_ids = Vec::new();
        let assignment = labels
            .iter()
            .map(|l| {
                *index.entry(l.as_ref()).or_insert_with(|| {
                    case_ids.push(l.as_ref().to_owned());
                    case_ids.len() - 1
                })
            })
            .collect();
        Self::new(base, case_ids, assignment)
    }

    pub fn base(&self) -> &Arc<UncorrelatedLog> {
        &self.base
    }

    pub fn events(&self) -> &[Event] {
        self.base.events()
    }

    pub fn case_ids(&self) -> &[String] {
        &self.case_ids
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn num_cases(&self) -> usize {
        self.case_ids.len()
    }

    /// Case id of the event at 0-based position `pos`.
    pub fn case_of(&self, pos: usize) -> &str {
        &self.case_ids[self.assignment[pos]]
    }

    /// All cases, ordered by their first event.
    pub fn cases(&self) -> Vec<Case<'_>> {
        let mut buckets: Vec<Vec<&Event>> = vec![Vec::new(); self.case_ids.len()];
        for (e, &c) in self.base.events().iter().zip(&self.assignment) {
            buckets[c].push(e);
        }
        let mut cases: Vec<Case<'_>> = buckets
            .into_iter()
            .enumerate()
            .map(|(c, events)| Case::new(&self.case_ids[c], events))
            .collect();
        cases.sort_by_key(|c| c.first().index);
        cases
    }

    pub fn traces(&self) -> Vec<Trace> {
        self.cases().iter().map(Case::trace).collect()
    }
}
