//! Command-line front end: correlate, evaluate, simulate, check-rules, strip.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use casecorr::annealer::{self, AnnealError, AnnealerConfig};
use casecorr::constraints::{parse_constraints, ConstraintSet};
use casecorr::io::{
    self, read_log_csv, read_pnml, simulate_log, write_log_csv, CaseAttribute, IoError, LoadedLog,
    LogFileSchema, ResourceModel, SimulationConfig,
};
use casecorr::net::NetError;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "casecorr", version, about = "Correlate events of an uncorrelated log into cases")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SchemaArgs {
    /// Case id column, used when present in the header.
    #[arg(long, default_value = "case_id")]
    case_col: String,
    #[arg(long, default_value = "activity")]
    activity_col: String,
    #[arg(long, default_value = "timestamp")]
    timestamp_col: String,
    /// chrono format string of the timestamp column.
    #[arg(long, default_value = "%Y-%m-%d %H:%M")]
    timestamp_format: String,
}

impl SchemaArgs {
    fn schema(&self) -> LogFileSchema {
        LogFileSchema {
            case_column: Some(self.case_col.clone()),
            activity_column: self.activity_col.clone(),
            timestamp_column: self.timestamp_col.clone(),
            timestamp_format: self.timestamp_format.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Assign case ids to the events of an uncorrelated log.
    Correlate {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Correlated log output.
        #[arg(long)]
        out: PathBuf,
        /// Per-iteration trace output (CSV).
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 100.0)]
        tau_init: f64,
        #[arg(long, default_value_t = 100)]
        s_max: u32,
        #[arg(long, default_value_t = 4)]
        pop_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Defaults to the single activity the net can start with.
        #[arg(long)]
        start_activity: Option<String>,
        #[arg(long, default_value_t = casecorr::net::DEFAULT_MARKING_BUDGET)]
        marking_budget: usize,
        #[arg(long, default_value_t = casecorr::net::DEFAULT_STATE_BUDGET)]
        alignment_budget: usize,
        /// Evaluate population slots one after another.
        #[arg(long)]
        serial: bool,
        #[command(flatten)]
        schema: SchemaArgs,
    },
    /// Compare a generated log with the original one.
    Evaluate {
        #[arg(long)]
        original: PathBuf,
        #[arg(long)]
        generated: PathBuf,
        /// Print a CSV header and row instead of `key: value` lines.
        #[arg(long)]
        csv: bool,
        #[command(flatten)]
        schema: SchemaArgs,
    },
    /// Generate a correlated log by playing the token game on a net.
    Simulate(SimulateArgs),
    /// Parse a rule file and print it in canonical form.
    CheckRules { file: PathBuf },
    /// Drop the case column of a correlated log.
    Strip {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        schema: SchemaArgs,
    },
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    net: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    cases: usize,
    /// Time between case starts as a fraction of the cycle time.
    #[arg(long, default_value_t = 1.0)]
    inter_arrival: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `ACTIVITY=MEAN:JITTER` in minutes; repeatable.
    #[arg(long = "duration")]
    durations: Vec<String>,
    /// `NAME=V1,V2,...`: a per-case attribute drawn from the pool; repeatable.
    #[arg(long = "case-attr")]
    case_attrs: Vec<String>,
    /// `NAME=R1,R2,...`: a per-event resource attribute.
    #[arg(long)]
    resource: Option<String>,
    /// `FROM:TO`: TO reuses the resource of FROM; repeatable.
    #[arg(long = "handoff")]
    handoffs: Vec<String>,
    #[arg(long, default_value_t = 3)]
    max_loop_iterations: u32,
    #[command(flatten)]
    schema: SchemaArgs,
}

fn load_rules(path: Option<&Path>) -> Result<ConstraintSet> {
    let Some(path) = path else {
        return Ok(ConstraintSet::empty());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_constraints(&text).with_context(|| format!("{}", path.display()))
}

fn parse_kv<'a>(s: &'a str, what: &str) -> Result<(&'a str, &'a str)> {
    s.split_once('=')
        .filter(|(k, _)| !k.is_empty())
        .with_context(|| format!("{what}: expected NAME=VALUE, got {s:?}"))
}

fn simulation_config(args: &SimulateArgs) -> Result<SimulationConfig> {
    let mut d = HashMap::new();
    for s in &args.durations {
        let (a, v) = parse_kv(s, "--duration")?;
        let (m, j) = v.split_once(':').unwrap_or((v, "0"));
        let m: i64 = m.parse().with_context(|| format!("--duration {s}"))?;
        let j: i64 = j.parse().with_context(|| format!("--duration {s}"))?;
        d.insert(a.to_owned(), (m, j));
    }
    let pool = |v: &str| v.split(',').map(str::to_owned).collect::<Vec<_>>();
    let mut attrs = Vec::new();
    for s in &args.case_attrs {
        let (n, v) = parse_kv(s, "--case-attr")?;
        attrs.push(CaseAttribute {
            name: n.to_owned(),
            pool: pool(v),
        });
    }
    let resource = match args.resource.as_deref() {
        None => None,
        Some(s) => {
            let (n, v) = parse_kv(s, "--resource")?;
            let mut h = Vec::new();
            for s in &args.handoffs {
                let (a, b) = s
                    .split_once(':')
                    .with_context(|| format!("--handoff: expected FROM:TO, got {s:?}"))?;
                h.push((a.to_owned(), b.to_owned()));
            }
            Some(ResourceModel {
                attribute: n.to_owned(),
                pool: pool(v),
                handoffs: h,
            })
        }
    };
    Ok(SimulationConfig {
        n_cases: args.cases,
        inter_arrival: args.inter_arrival,
        durations: d,
        max_loop_iterations: args.max_loop_iterations,
        case_attributes: attrs,
        resource,
        seed: args.seed,
        ..SimulationConfig::default()
    })
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Correlate {
            log,
            net,
            rules,
            out,
            trace,
            tau_init,
            s_max,
            pop_size,
            seed,
            start_activity,
            marking_budget,
            alignment_budget,
            serial,
            schema,
        } => {
            let schema = schema.schema();
            let ul = Arc::new(read_log_csv(&log, &schema)?.uncorrelated());
            let net = read_pnml(&net)?;
            let rules = load_rules(rules.as_deref())?;
            let config = AnnealerConfig {
                tau_init,
                s_max,
                pop_size,
                rng_seed: seed,
                marking_budget,
                alignment_budget,
                start_activity,
                parallel: !serial && cfg!(feature = "parallel"),
                verify_energies: false,
            };
            let outcome = annealer::run(&ul, &net, &rules, &config)?;
            let best = outcome.best.to_event_log(ul);
            write_log_csv(&best, &out, &schema)?;
            if let Some(path) = trace {
                fs::write(&path, outcome.trace_csv())
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            let e = outcome.best.energy();
            println!(
                "cases: {}\nfa: {}\nfr: {:.6}\nft: {:.3}",
                best.num_cases(),
                e.fa,
                e.fr_f64(),
                e.ft
            );
        }
        Command::Evaluate {
            original,
            generated,
            csv,
            schema,
        } => {
            let schema = schema.schema();
            let correlated = |p: &Path| -> Result<casecorr::EventLog> {
                match read_log_csv(p, &schema)? {
                    LoadedLog::Correlated(l) => Ok(l),
                    LoadedLog::Uncorrelated(_) => {
                        bail!("{}: no {} column", p.display(), schema.case_column.as_deref().unwrap_or(""))
                    }
                }
            };
            let l = correlated(&original)?;
            let lp = correlated(&generated)?;
            let report = io::evaluate(&l, &lp)?;
            if csv {
                println!("{}\n{}", casecorr::MeasureReport::csv_header(), report.to_csv_row());
            } else {
                print!("{}", report.to_text());
            }
        }
        Command::Simulate(args) => {
            let net = read_pnml(&args.net)?;
            let config = simulation_config(&args)?;
            let log = simulate_log(&net, &config)?;
            write_log_csv(&log, &args.out, &args.schema.schema())?;
            println!("events: {}\ncases: {}", log.events().len(), log.num_cases());
        }
        Command::CheckRules { file } => {
            let rules = load_rules(Some(&file))?;
            print!("{rules}");
        }
        Command::Strip { log, out, schema } => {
            let schema = schema.schema();
            let ul = read_log_csv(&log, &schema)?.uncorrelated();
            io::write_uncorrelated_csv(&ul, &out, &schema)?;
        }
    }
    Ok(())
}

fn budget_exhausted(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.downcast_ref::<AnnealError>()
            .is_some_and(AnnealError::is_budget_exhausted)
            || matches!(e.downcast_ref::<NetError>(), Some(NetError::BudgetExceeded(_)))
            || matches!(
                e.downcast_ref::<IoError>(),
                Some(IoError::Net(NetError::BudgetExceeded(_)))
            )
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(if budget_exhausted(&err) { 2 } else { 1 })
        }
    }
}
