mod common;

use casecorr::constraints::{
    parse_constraints, rule_cost, rule_cost_f64, CmpOp, Comparison, Constraint, ConstraintKind,
    ConstraintSet, Designator, Operand, RuleCost, ThenExpr,
};
use casecorr::model::{AttrValue, EventLog, RawEvent, UncorrelatedLog};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

#[test]
fn running_example_scores() {
    let ex = common::running_example();
    let ev = ex.ul.events();
    let c124 = ex.rules.select(&["C1", "C2", "C4"]);
    // e3 (B, Home, Kate) against s1 = <e1> and s2 = <e2>
    let s1 = [&ev[0]];
    let s2 = [&ev[1]];
    assert_eq!(c124.score(&ev[2], &s1), 3);
    assert_eq!(c124.score(&ev[2], &s2), 1);

    // e8 (D, Car, Lily) in state x: s1 = e1 e3 e6, s2 = e2 e5 e7, s3 = e4
    let c15 = ex.rules.select(&["C1", "C5"]);
    let s1 = [&ev[0], &ev[2], &ev[5]];
    let s2 = [&ev[1], &ev[4], &ev[6]];
    let s3 = [&ev[3]];
    assert_eq!(c15.score(&ev[7], &s1), 0);
    assert_eq!(c15.score(&ev[7], &s2), 1);
    assert_eq!(c15.score(&ev[7], &s3), 1);
}

#[test]
fn running_example_rule_cost() {
    let ex = common::running_example();
    assert_eq!(rule_cost(&ex.x, &ex.rules), RuleCost::new(1, 6));
    // per case of x: s1 and s3 satisfy everything that triggers, s2 breaks C5
    let cases = ex.x.cases();
    let c5 = ex.rules.get("C5").unwrap();
    assert!(!c5.trigger(&cases[0].events));
    assert!(c5.trigger(&cases[2].events));
    assert!(c5.vio(&cases[2].events));
    let c3 = ex.rules.get("C3").unwrap();
    assert!(c3.trigger(&cases[0].events));
    assert!(!c3.vio(&cases[0].events));
}

#[test]
fn closest_partner_is_used() {
    // two earlier A events; only the closest one counts
    let ul = UncorrelatedLog::build(vec![
        RawEvent::new("A", 0).with_attr("R", "x"),
        RawEvent::new("A", 1).with_attr("R", "y"),
        RawEvent::new("B", 2).with_attr("R", "x"),
    ])
    .unwrap();
    let set = parse_constraints(r#"IF e[i].Act == "B" AND e[j].Act == "A" THEN e[i].R == e[j].R"#).unwrap();
    let c = set.iter().next().unwrap();
    assert_eq!(c.label, "C1");
    let ev = ul.events();
    assert!(c.vio(&[&ev[0], &ev[1], &ev[2]]));
    assert!(!c.vio(&[&ev[0], &ev[2]]));
    assert!(c.e_sat(&ev[2], &[&ev[0]]));
}

#[test]
fn missing_attributes_are_reported() {
    let ul = UncorrelatedLog::build(vec![RawEvent::new("A", 0), RawEvent::new("B", 5)]).unwrap();
    let set = parse_constraints("e[i].Res == e[i-1].Res").unwrap();
    let c = set.iter().next().unwrap();
    let ev = ul.events();
    let out = c.check(&ev[1], &[&ev[0]]);
    assert!(!out.satisfied);
    assert!(out.missing_attribute);
}

#[test]
fn numeric_and_lexicographic_comparison() {
    let ul = UncorrelatedLog::build(vec![
        RawEvent::new("A", 0).with_attr("N", 9).with_attr("S", "9"),
        RawEvent::new("B", 5).with_attr("N", 10).with_attr("S", "10x"),
    ])
    .unwrap();
    let ev = ul.events();
    let set = parse_constraints(
        "N: IF e[i].Act == \"B\" THEN e[i].N > e[i-1].N\nS: IF e[i].Act == \"B\" THEN e[i].S > e[i-1].S",
    )
    .unwrap();
    assert!(set.get("N").unwrap().e_sat(&ev[1], &[&ev[0]]));
    // "10x" < "9" lexicographically
    assert!(!set.get("S").unwrap().e_sat(&ev[1], &[&ev[0]]));
}

#[test]
fn loan_rules_parse() {
    let text = std::fs::read_to_string(common::fixture("loan_rules.rules")).unwrap();
    let set = parse_constraints(&text).unwrap();
    assert_eq!(set.len(), 10);
    let c4 = set.get("C4").unwrap();
    assert!(c4.uses_j());
    let again = parse_constraints(&c4.to_string()).unwrap();
    assert_eq!(again.get("C4"), Some(c4));
    let shown = c4.to_string();
    assert!(shown.contains("e[i].OfferID == e[j].EventId"), "{shown}");
}

#[test]
fn parse_errors_point_at_the_problem() {
    let err = parse_constraints("C1: e[i].Type = e[i-1].Type").unwrap_err();
    assert_eq!((err.line, err.column), (1, 15));
    let err = parse_constraints("C1: e[i].A == e[i-1].A\nC1: e[i].B == e[i-1].B").unwrap_err();
    assert_eq!(err.line, 2);
    assert!(parse_constraints("IF e[i].Act == \"B\" THEN 50 <= duration <= 10").is_err());
    assert!(parse_constraints("IF e[j].Act == \"B\" THEN 0 <= duration <= 10").is_err());
    assert!(parse_constraints("IF e[i].Act == \"B\" THEN e[i].R == e[j].R extra").is_err());
    assert!(parse_constraints("").unwrap().is_empty());
}

#[test]
fn unsatisfiable_if_never_triggers() {
    let ex = common::running_example();
    let set = parse_constraints(r#"IF e[i].Act == "Z" THEN e[i].Res == e[i-1].Res"#).unwrap();
    let c = set.iter().next().unwrap();
    for case in ex.truth.cases() {
        assert!(!c.trigger(&case.events));
        assert!(!c.vio(&case.events));
        for p in 1..case.len() {
            assert!(!c.e_sat(case.events[p], &case.events[..p]));
        }
    }
    assert_eq!(rule_cost(&ex.truth, &set), RuleCost::new(0, 1));
}

// --- generators -------------------------------------------------------------

fn attr_name() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("Res".to_string()),
        Just("Type".to_string()),
        Just("N".to_string()),
        Just("Act".to_string()),
        Just("Loan Goal".to_string()),
    ]
}

fn constant() -> impl Strategy<Value = AttrValue> {
    prop_oneof![
        (-50i64..50).prop_map(AttrValue::Int),
        "[a-zA-Z \"\\\\]{0,6}".prop_map(|s| AttrValue::parse(&s)),
    ]
}

fn op() -> impl Strategy<Value = CmpOp> {
    prop_oneof![
        Just(CmpOp::Lt),
        Just(CmpOp::Le),
        Just(CmpOp::Gt),
        Just(CmpOp::Ge),
        Just(CmpOp::Eq),
        Just(CmpOp::Ne),
    ]
}

fn designator(partner: bool) -> BoxedStrategy<Designator> {
    if partner {
        prop_oneof![Just(Designator::Current), Just(Designator::Partner)].boxed()
    } else {
        Just(Designator::Current).boxed()
    }
}

fn comparison(partner: bool) -> impl Strategy<Value = Comparison> {
    let attr = (designator(partner), attr_name()).prop_map(|(d, a)| Operand::Attr(d, a));
    let rhs = prop_oneof![
        (designator(partner), attr_name()).prop_map(|(d, a)| Operand::Attr(d, a)),
        constant().prop_map(Operand::Const),
    ];
    (attr, op(), rhs).prop_map(|(lhs, op, rhs)| Comparison { lhs, op, rhs })
}

fn then_expr() -> impl Strategy<Value = ThenExpr> {
    let leaf = comparison(true).prop_map(ThenExpr::Cmp);
    leaf.prop_recursive(3, 8, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| ThenExpr::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| ThenExpr::Or(Box::new(a), Box::new(b))),
        ]
    })
}

fn constraint_kind() -> impl Strategy<Value = ConstraintKind> {
    prop_oneof![
        attr_name().prop_map(|attribute| ConstraintKind::Equality { attribute }),
        (
            comparison(false),
            proptest::collection::vec(comparison(true), 0..2),
            then_expr()
        )
            .prop_map(|(first, rest, then)| {
                let mut when = vec![first];
                // the partner must be named in IF for THEN to refer to it
                let partner = Comparison {
                    lhs: Operand::Attr(Designator::Partner, "Act".into()),
                    op: CmpOp::Eq,
                    rhs: Operand::Const(AttrValue::Str("A".into())),
                };
                when.extend(rest);
                when.push(partner);
                ConstraintKind::IfThen { when, then }
            }),
        (comparison(false), 0i64..100, 0i64..100).prop_map(|(c, a, b)| ConstraintKind::EventTime {
            when: vec![c],
            min: a.min(b),
            max: a.max(b),
        }),
    ]
}

fn constraint_set() -> impl Strategy<Value = ConstraintSet> {
    proptest::collection::vec(constraint_kind(), 1..5).prop_map(|kinds| {
        ConstraintSet::new(
            kinds
                .into_iter()
                .enumerate()
                .map(|(k, kind)| Constraint {
                    label: format!("R{k}"),
                    kind,
                })
                .collect(),
        )
    })
}

fn random_attr_log(seed: u64, n: usize) -> EventLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0;
    let raw = (0..n)
        .map(|_| {
            t += rng.gen_range(0..40);
            let a = ["A", "B", "C"][rng.gen_range(0..3)];
            let mut e = RawEvent::new(a, t)
                .with_attr("Res", ["x", "y"][rng.gen_range(0..2)])
                .with_attr("N", rng.gen_range(-3..3));
            if rng.gen_bool(0.8) {
                e = e.with_attr("Type", ["Home", "Car"][rng.gen_range(0..2)]);
            }
            e
        })
        .collect();
    let ul = Arc::new(UncorrelatedLog::build(raw).unwrap());
    common::random_partition(&mut rng, &ul, 4)
}

/// Mean over cases of violated/triggered, in floating point.
fn rule_cost_oracle(log: &EventLog, set: &ConstraintSet) -> f64 {
    let cases = log.cases();
    let mut acc = 0.0;
    for c in &cases {
        let trig: Vec<&Constraint> = set.iter().filter(|k| k.trigger(&c.events)).collect();
        if !trig.is_empty() {
            let v = trig.iter().filter(|k| k.vio(&c.events)).count();
            acc += v as f64 / trig.len() as f64;
        }
    }
    acc / cases.len() as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn printed_constraints_parse_back(set in constraint_set()) {
        let text = set.to_string();
        let back = parse_constraints(&text);
        prop_assert!(back.is_ok(), "{}\n{:?}", text, back.err());
        prop_assert_eq!(back.unwrap(), set);
    }

    #[test]
    fn violation_implies_trigger(set in constraint_set(), seed in any::<u64>()) {
        let log = random_attr_log(seed, 16);
        for c in log.cases() {
            for k in &set {
                if k.vio(&c.events) {
                    prop_assert!(k.trigger(&c.events));
                }
            }
        }
    }

    #[test]
    fn rule_cost_is_a_mean_ratio(set in constraint_set(), seed in any::<u64>()) {
        let log = random_attr_log(seed, 16);
        let r = rule_cost(&log, &set);
        let f = rule_cost_f64(&r);
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f - rule_cost_oracle(&log, &set)).abs() < 1e-12);
    }

    #[test]
    fn score_is_bounded(set in constraint_set(), seed in any::<u64>()) {
        let log = random_attr_log(seed, 12);
        let ev = log.events();
        for p in 0..ev.len() {
            let prefix: Vec<_> = ev[..p].iter().collect();
            prop_assert!(set.score(&ev[p], &prefix) <= set.len());
        }
    }
}
