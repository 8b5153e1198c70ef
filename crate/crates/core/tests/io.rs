mod common;

use std::collections::HashMap;

use casecorr::io::{
    estimate_cycle_time, evaluate, parse_pnml, read_log_csv, read_log_reader, read_pnml,
    simulate_log, strip_case_ids, write_log_csv, IoError, LoadedLog, LogFileSchema,
};
use casecorr::net::log_alignment_cost;
use casecorr::parse_constraints;
use casecorr::constraints::rule_cost;

#[test]
fn running_example_round_trip() {
    let ex = common::running_example();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("truth.csv");
    let schema = common::day_first_schema();
    write_log_csv(&ex.truth, &path, &schema).unwrap();
    let back = read_log_csv(&path, &schema).unwrap().into_correlated().unwrap();
    assert_eq!(back, ex.truth);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("case_id,activity,timestamp,Res,Type\n"));
    assert!(text.contains("s1,A,07/06/2020 09:00,Kate,Home"));
}

#[test]
fn uncorrelated_input_and_strip() {
    let ex = common::running_example();
    let loaded = read_log_csv(common::fixture("running_example.csv"), &common::day_first_schema()).unwrap();
    assert!(matches!(loaded, LoadedLog::Uncorrelated(_)));
    assert_eq!(strip_case_ids(&ex.truth), *ex.ul);
}

#[test]
fn schema_errors() {
    let schema = LogFileSchema::default();
    let err = read_log_reader("act,timestamp\nA,2020-01-01 10:00\n".as_bytes(), &schema).unwrap_err();
    assert!(matches!(err, IoError::MissingColumn(c) if c == "activity"));
    let err = read_log_reader("activity,timestamp\nA,2020-01-01 10:00,extra\n".as_bytes(), &schema).unwrap_err();
    assert!(matches!(err, IoError::Csv { row: 2, .. }));
    let err = read_log_reader("activity,timestamp\n".as_bytes(), &schema).unwrap_err();
    assert!(matches!(err, IoError::Model(_)));
    let err = read_log_csv("/nonexistent/log.csv", &schema).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/log.csv"));
}

#[test]
fn custom_columns() {
    let schema = LogFileSchema {
        case_column: Some("Case".into()),
        activity_column: "Task".into(),
        timestamp_column: "When".into(),
        timestamp_format: "%Y-%m-%dT%H:%M:%S".into(),
    };
    let data = "Task,When,Case\nA,2020-01-01T10:00:00,x\nB,2020-01-01T10:00:31,x\n";
    let log = read_log_reader(data.as_bytes(), &schema).unwrap().into_correlated().unwrap();
    assert_eq!(log.events()[1].timestamp - log.events()[0].timestamp, 1);
}

#[test]
fn pnml_fixtures_load() {
    let net = common::loop_net();
    assert_eq!(net.transitions().len(), 9);
    assert_eq!(net.transitions().iter().filter(|t| t.is_silent()).count(), 3);
    let ex = common::running_example();
    assert_eq!(ex.net.places().len(), 4);
    assert!(matches!(read_pnml("/nonexistent.pnml"), Err(IoError::File { .. })));
    // parsing accepts any structure, reading also validates it
    let two_sources = r#"<pnml><net id="n"><page id="p">
      <place id="i"/><place id="j"/><place id="o"/>
      <transition id="a"><name><text>A</text></name></transition>
      <arc id="1" source="i" target="a"/><arc id="2" source="j" target="a"/>
      <arc id="3" source="a" target="o"/></page></net></pnml>"#;
    assert!(parse_pnml(two_sources).is_ok());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.pnml");
    std::fs::write(&path, two_sources).unwrap();
    let err = read_pnml(&path).unwrap_err();
    assert!(matches!(err, IoError::Net(_) | IoError::Pnml(_)), "{err}");
}

#[test]
fn evaluate_requires_the_same_events() {
    let ex = common::running_example();
    let (l, _) = common::measure_logs();
    assert!(matches!(evaluate(&ex.truth, &l), Err(IoError::UlMismatch)));
    let r = evaluate(&ex.truth, &ex.truth).unwrap();
    assert_eq!(r.l2l_case, 1.0);
}

#[test]
fn simulation_is_seeded() {
    let net = common::loop_net();
    let a = simulate_log(&net, &common::loop_net_simulation(30, 0.5, 11)).unwrap();
    let b = simulate_log(&net, &common::loop_net_simulation(30, 0.5, 11)).unwrap();
    let c = simulate_log(&net, &common::loop_net_simulation(30, 0.5, 12)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.num_cases(), 30);
    assert_eq!(a.case_ids()[0], "c1");
    assert_eq!(a.case_of(0), "c1");
}

#[test]
fn simulated_logs_fit_the_net_and_the_rules() {
    let net = common::loop_net();
    let rules = parse_constraints(common::LOOP_NET_RULES).unwrap();
    for seed in 0..5 {
        let log = simulate_log(&net, &common::loop_net_simulation(40, 0.25, seed)).unwrap();
        assert_eq!(log_alignment_cost(&net, &log, None).unwrap(), 0);
        assert_eq!(*rule_cost(&log, &rules).numer(), 0);
        for c in log.cases() {
            assert_eq!(c.first().activity, "A");
            let customers: Vec<_> = c.events.iter().map(|e| e.attr("Customer")).collect();
            assert!(customers.windows(2).all(|w| w[0] == w[1]));
        }
    }
}

#[test]
fn branching_and_loop_cap() {
    let net = common::loop_net();
    let mut config = common::loop_net_simulation(60, 1.0, 5);
    // always take B and loop back; once B is used up the cap forces C
    config.branching = HashMap::from([
        ("p2".to_string(), vec![("t2".to_string(), 1.0), ("t3".to_string(), 0.0)]),
        ("p3".to_string(), vec![("t4".to_string(), 0.0), ("t5".to_string(), 1.0)]),
    ]);
    config.max_loop_iterations = 2;
    let log = simulate_log(&net, &config).unwrap();
    for t in log.traces() {
        assert_eq!(t[..4], ["A", "B", "B", "C"]);
    }
    config.branching.insert("p9".into(), vec![]);
    assert!(matches!(simulate_log(&net, &config), Err(IoError::Simulation(_))));
}

/// Average number of open cases over the middle of the log.
fn mean_wip(log: &casecorr::EventLog) -> f64 {
    let spans: Vec<(i64, i64)> = log
        .cases()
        .iter()
        .map(|c| (c.first().timestamp, c.events.last().unwrap().timestamp))
        .collect();
    let n = spans.len();
    let (lo, hi) = (spans[n / 4].0, spans[3 * n / 4].0);
    let open: usize = (lo..hi)
        .map(|t| spans.iter().filter(|(a, b)| *a <= t && t < *b).count())
        .sum();
    open as f64 / (hi - lo) as f64
}

#[test]
fn inter_arrival_controls_work_in_progress() {
    let net = common::loop_net();
    for (ia, expect) in [(1.0, 1.0), (0.25, 4.0), (0.125, 8.0)] {
        let config = common::loop_net_simulation(200, ia, 3);
        let ct = estimate_cycle_time(&net, &config).unwrap();
        assert!(ct > 0.0);
        let wip = mean_wip(&simulate_log(&net, &config).unwrap());
        assert!((wip - expect).abs() <= 0.25 * expect, "ia {ia}: wip {wip}");
    }
}
