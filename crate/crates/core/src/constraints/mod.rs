//! Data constraints over event attributes: syntax tree, evaluation and rule cost.
//!
//! Three kinds exist. An equality constraint requires an attribute to match
//! the previous event of the case. An IF-THEN constraint binds the current
//! event `e[i]` and optionally a partner `e[j]` (the closest earlier event
//! matching the partner conditions). An event-time constraint bounds the time
//! elapsed since the previous event.

mod parse;

use std::cmp::Ordering;
use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;

use crate::model::{AttrValue, Event, EventLog};

pub use parse::{parse_constraints, ParseError};

/// Exact rule cost in `[0, 1]`.
pub type RuleCost = Ratio<u128>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Designator {
    /// `e[i]`
    Current,
    /// `e[j]`
    Partner,
    /// `e[i-1]`
    Previous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    fn test(self, ord: Ordering) -> bool {
        match self {
            CmpOp::Lt => ord.is_lt(),
            CmpOp::Le => ord.is_le(),
            CmpOp::Gt => ord.is_gt(),
            CmpOp::Ge => ord.is_ge(),
            CmpOp::Eq => ord.is_eq(),
            CmpOp::Ne => ord.is_ne(),
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Attr(Designator, String),
    Const(AttrValue),
}

impl Operand {
    fn designator(&self) -> Option<Designator> {
        match self {
            Operand::Attr(d, _) => Some(*d),
            Operand::Const(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comparison {
    pub lhs: Operand,
    pub op: CmpOp,
    pub rhs: Operand,
}

impl Comparison {
    fn mentions(&self, d: Designator) -> bool {
        self.lhs.designator() == Some(d) || self.rhs.designator() == Some(d)
    }

    /// Conjuncts mentioning only `e[i]` (or nothing) are evaluated before any
    /// partner is chosen.
    fn is_current_only(&self) -> bool {
        !self.mentions(Designator::Partner) && !self.mentions(Designator::Previous)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ThenExpr {
    Cmp(Comparison),
    And(Box<ThenExpr>, Box<ThenExpr>),
    Or(Box<ThenExpr>, Box<ThenExpr>),
}

impl ThenExpr {
    fn visit(&self, f: &mut impl FnMut(&Comparison)) {
        match self {
            ThenExpr::Cmp(c) => f(c),
            ThenExpr::And(a, b) | ThenExpr::Or(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstraintKind {
    Equality {
        attribute: String,
    },
    IfThen {
        when: Vec<Comparison>,
        then: ThenExpr,
    },
    EventTime {
        when: Vec<Comparison>,
        min: i64,
        max: i64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub label: String,
    pub kind: ConstraintKind,
}

/// Result of evaluating a constraint at one binding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Outcome {
    pub satisfied: bool,
    /// Some referenced attribute was absent on a selected event.
    pub missing_attribute: bool,
}

/// Random access to the events of a (possibly tentative) case.
trait Seq<'a> {
    fn at(&self, k: usize) -> &'a Event;
}

impl<'a> Seq<'a> for &[&'a Event] {
    fn at(&self, k: usize) -> &'a Event {
        self[k]
    }
}

/// A case prefix with one event tentatively appended.
struct Appended<'a, 'b> {
    prefix: &'b [&'a Event],
    next: &'a Event,
}

impl<'a> Seq<'a> for Appended<'a, '_> {
    fn at(&self, k: usize) -> &'a Event {
        if k == self.prefix.len() {
            self.next
        } else {
            self.prefix[k]
        }
    }
}

/// `Act` and `Ts` name the activity and timestamp; anything else is looked up
/// in the event attributes.
fn lookup(e: &Event, name: &str) -> Option<AttrValue> {
    match name {
        "Act" => Some(AttrValue::Str(e.activity.clone())),
        "Ts" => Some(AttrValue::Int(e.timestamp)),
        _ => e.attr(name).cloned(),
    }
}

/// Numeric when both sides read as integers, lexicographic otherwise.
pub fn compare_values(a: &AttrValue, b: &AttrValue) -> Ordering {
    match (a.as_int(), b.as_int()) {
        (Some(x), Some(y)) => x.cmp(&y),
        _ => a.to_string().cmp(&b.to_string()),
    }
}

#[derive(Default)]
struct Diag {
    missing: bool,
}

impl Constraint {
    /// Whether the IF clause refers to a partner `e[j]` chosen by closest-j search.
    pub fn uses_j(&self) -> bool {
        match &self.kind {
            ConstraintKind::IfThen { when, .. } => {
                when.iter().any(|c| c.mentions(Designator::Partner))
            }
            _ => false,
        }
    }

    fn resolve<'a>(
        op: &Operand,
        seq: &impl Seq<'a>,
        i: usize,
        j: Option<usize>,
        diag: &mut Diag,
    ) -> Option<AttrValue> {
        let v = match op {
            Operand::Const(v) => return Some(v.clone()),
            Operand::Attr(Designator::Current, name) => lookup(seq.at(i), name),
            Operand::Attr(_, name) => lookup(seq.at(j?), name),
        };
        if v.is_none() {
            diag.missing = true;
        }
        v
    }

    fn cmp<'a>(
        c: &Comparison,
        seq: &impl Seq<'a>,
        i: usize,
        j: Option<usize>,
        diag: &mut Diag,
    ) -> bool {
        let l = Self::resolve(&c.lhs, seq, i, j, diag);
        let r = Self::resolve(&c.rhs, seq, i, j, diag);
        match (l, r) {
            (Some(l), Some(r)) => c.op.test(compare_values(&l, &r)),
            _ => false,
        }
    }

    fn then_holds<'a>(
        t: &ThenExpr,
        seq: &impl Seq<'a>,
        i: usize,
        j: usize,
        diag: &mut Diag,
    ) -> bool {
        match t {
            ThenExpr::Cmp(c) => Self::cmp(c, seq, i, Some(j), diag),
            ThenExpr::And(a, b) => {
                Self::then_holds(a, seq, i, j, diag) && Self::then_holds(b, seq, i, j, diag)
            }
            ThenExpr::Or(a, b) => {
                Self::then_holds(a, seq, i, j, diag) || Self::then_holds(b, seq, i, j, diag)
            }
        }
    }

    /// The partner position for event `i`, or `None` when the IF clause does
    /// not hold for any admissible binding.
    fn binding<'a>(&self, seq: &impl Seq<'a>, i: usize, diag: &mut Diag) -> Option<usize> {
        let when = match &self.kind {
            ConstraintKind::Equality { .. } => return i.checked_sub(1),
            ConstraintKind::IfThen { when, .. } | ConstraintKind::EventTime { when, .. } => when,
        };
        if i == 0 {
            return None;
        }
        for c in when.iter().filter(|c| c.is_current_only()) {
            if !Self::cmp(c, seq, i, None, diag) {
                return None;
            }
        }
        let partner_ok = |j: usize, diag: &mut Diag| {
            when.iter()
                .filter(|c| !c.is_current_only())
                .all(|c| Self::cmp(c, seq, i, Some(j), diag))
        };
        if self.uses_j() {
            (0..i).rev().find(|&j| partner_ok(j, diag))
        } else {
            partner_ok(i - 1, diag).then_some(i - 1)
        }
    }

    fn holds<'a>(&self, seq: &impl Seq<'a>, i: usize, j: usize, diag: &mut Diag) -> bool {
        match &self.kind {
            ConstraintKind::Equality { attribute } => {
                let a = Self::resolve(
                    &Operand::Attr(Designator::Current, attribute.clone()),
                    seq,
                    i,
                    Some(j),
                    diag,
                );
                let b = Self::resolve(
                    &Operand::Attr(Designator::Previous, attribute.clone()),
                    seq,
                    i,
                    Some(j),
                    diag,
                );
                matches!((a, b), (Some(a), Some(b)) if compare_values(&a, &b).is_eq())
            }
            ConstraintKind::IfThen { then, .. } => Self::then_holds(then, seq, i, j, diag),
            ConstraintKind::EventTime { min, max, .. } => {
                let d = seq.at(i).timestamp - seq.at(j).timestamp;
                *min <= d && d <= *max
            }
        }
    }

    /// Evaluates the constraint with `e` tentatively appended to `case`.
    pub fn check(&self, e: &Event, case: &[&Event]) -> Outcome {
        let seq = Appended { prefix: case, next: e };
        let i = case.len();
        let mut diag = Diag::default();
        let satisfied = match self.binding(&seq, i, &mut diag) {
            Some(j) => self.holds(&seq, i, j, &mut diag),
            None => false,
        };
        Outcome {
            satisfied,
            missing_attribute: diag.missing,
        }
    }

    /// 1 when `e`, appended to `case`, satisfies the constraint. A false IF
    /// clause does not count as satisfied.
    pub fn e_sat(&self, e: &Event, case: &[&Event]) -> bool {
        self.check(e, case).satisfied
    }

    /// Whether the event at 0-based `pos` of a complete case violates the constraint.
    pub fn e_vio(&self, case: &[&Event], pos: usize) -> bool {
        let mut diag = Diag::default();
        match self.binding(&case, pos, &mut diag) {
            Some(j) => !self.holds(&case, pos, j, &mut diag),
            None => false,
        }
    }

    pub fn vio(&self, case: &[&Event]) -> bool {
        (0..case.len()).any(|p| self.e_vio(case, p))
    }

    /// Equality constraints always apply; the others apply when their IF
    /// clause binds somewhere in the case.
    pub fn trigger(&self, case: &[&Event]) -> bool {
        if matches!(self.kind, ConstraintKind::Equality { .. }) {
            return true;
        }
        let mut diag = Diag::default();
        (0..case.len()).any(|p| self.binding(&case, p, &mut diag).is_some())
    }
}

/// An ordered list of uniquely labelled constraints.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConstraintSet {
    constraints: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn new(constraints: Vec<Constraint>) -> Self {
        Self { constraints }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Constraint> {
        self.constraints.iter()
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.label == label)
    }

    /// Subset by labels, in the given order. Unknown labels are skipped.
    pub fn select(&self, labels: &[&str]) -> Self {
        Self::new(labels.iter().filter_map(|l| self.get(l).cloned()).collect())
    }

    /// Number of constraints satisfied by `e` appended to `case`.
    pub fn score(&self, e: &Event, case: &[&Event]) -> usize {
        self.constraints.iter().filter(|c| c.e_sat(e, case)).count()
    }

    /// `(violated, triggered)` counts for a complete case.
    pub fn case_counts(&self, case: &[&Event]) -> (u32, u32) {
        let mut v = 0;
        let mut t = 0;
        for c in &self.constraints {
            if c.trigger(case) {
                t += 1;
                v += c.vio(case) as u32;
            }
        }
        (v, t)
    }
}

impl<'a> IntoIterator for &'a ConstraintSet {
    type Item = &'a Constraint;
    type IntoIter = std::slice::Iter<'a, Constraint>;
    fn into_iter(self) -> Self::IntoIter {
        self.constraints.iter()
    }
}

/// Mean over cases of violated/triggered, from per-case counts.
/// Cases with nothing triggered contribute 0.
pub fn rule_cost_from_counts(counts: impl IntoIterator<Item = (u32, u32)>) -> RuleCost {
    let mut cases = 0u128;
    let mut terms = Vec::new();
    let mut lcm = 1u128;
    for (v, t) in counts {
        cases += 1;
        if t > 0 && v > 0 {
            lcm = lcm.lcm(&(t as u128));
            terms.push((v as u128, t as u128));
        }
    }
    if cases == 0 {
        return RuleCost::from_integer(0);
    }
    let num: u128 = terms.iter().map(|(v, t)| v * (lcm / t)).sum();
    RuleCost::new(num, lcm * cases)
}

pub fn rule_cost(log: &EventLog, constraints: &ConstraintSet) -> RuleCost {
    rule_cost_from_counts(
        log.cases()
            .iter()
            .map(|c| constraints.case_counts(&c.events)),
    )
}

pub fn rule_cost_f64(r: &RuleCost) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

// --- pretty printing -------------------------------------------------------

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !parse::is_keyword(s)
}

fn write_quoted(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            _ => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

impl fmt::Display for Designator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Designator::Current => "e[i]",
            Designator::Partner => "e[j]",
            Designator::Previous => "e[i-1]",
        })
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Attr(d, name) => {
                write!(f, "{d}.")?;
                if is_ident(name) {
                    f.write_str(name)
                } else {
                    write_quoted(f, name)
                }
            }
            Operand::Const(AttrValue::Int(v)) => write!(f, "{v}"),
            Operand::Const(AttrValue::Str(s)) => write_quoted(f, s),
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.op.symbol(), self.rhs)
    }
}

impl fmt::Display for ThenExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // AND binds tighter than OR; both parse left-associatively, so a right
        // operand of the same operator needs parentheses to round-trip.
        match self {
            ThenExpr::Cmp(c) => write!(f, "{c}"),
            ThenExpr::Or(a, b) => {
                write!(f, "{a} OR ")?;
                match **b {
                    ThenExpr::Or(..) => write!(f, "({b})"),
                    _ => write!(f, "{b}"),
                }
            }
            ThenExpr::And(a, b) => {
                match **a {
                    ThenExpr::Or(..) => write!(f, "({a})")?,
                    _ => write!(f, "{a}")?,
                }
                f.write_str(" AND ")?;
                match **b {
                    ThenExpr::Cmp(_) => write!(f, "{b}"),
                    _ => write!(f, "({b})"),
                }
            }
        }
    }
}

fn write_when(f: &mut fmt::Formatter<'_>, when: &[Comparison]) -> fmt::Result {
    f.write_str("IF ")?;
    for (k, c) in when.iter().enumerate() {
        if k > 0 {
            f.write_str(" AND ")?;
        }
        write!(f, "{c}")?;
    }
    Ok(())
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.label)?;
        match &self.kind {
            ConstraintKind::Equality { attribute } => {
                let a = Operand::Attr(Designator::Current, attribute.clone());
                let b = Operand::Attr(Designator::Previous, attribute.clone());
                write!(f, "{a} == {b}")
            }
            ConstraintKind::IfThen { when, then } => {
                write_when(f, when)?;
                write!(f, " THEN {then}")
            }
            ConstraintKind::EventTime { when, min, max } => {
                write_when(f, when)?;
                write!(f, " THEN {min} <= duration <= {max}")
            }
        }
    }
}

impl fmt::Display for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.constraints {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Attribute names referenced anywhere in the constraint.
pub fn referenced_attributes(c: &Constraint) -> Vec<String> {
    let mut out = Vec::new();
    let mut add = |cmp: &Comparison| {
        for op in [&cmp.lhs, &cmp.rhs] {
            if let Operand::Attr(_, n) = op {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
        }
    };
    match &c.kind {
        ConstraintKind::Equality { attribute } => {
            return vec![attribute.clone()];
        }
        ConstraintKind::IfThen { when, then } => {
            when.iter().for_each(&mut add);
            then.visit(&mut add);
        }
        ConstraintKind::EventTime { when, .. } => when.iter().for_each(&mut add),
    }
    out
}
