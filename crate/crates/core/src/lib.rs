//! Correlating events of an uncorrelated log into cases.
//!
//! Given a totally ordered stream of events without case identifiers, a
//! workflow net and optional data constraints, [`annealer::run`] searches for
//! an event-to-case assignment that minimises, in lexicographic order, the
//! alignment cost against the net, the share of violated constraints and the
//! variance of activity durations.

pub mod annealer;
pub mod constraints;
pub mod io;
pub mod measures;
pub mod model;
pub mod net;
mod par;

pub use annealer::{run, AnnealError, AnnealerConfig, Energy, Individual, RunOutcome};
pub use constraints::{parse_constraints, ConstraintSet};
pub use measures::MeasureReport;
pub use model::{EventLog, UncorrelatedLog};
pub use net::WorkflowNet;
