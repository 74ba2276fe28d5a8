use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use renyi_accounting::conversion::{curve_to_dp, dp_target_to_rdp_budget};
use renyi_accounting::curve::RdpCurve;
use renyi_accounting::error::{Error, Result};
use renyi_accounting::harness::{
    self, reconstruct, replay_schedule, run_session, simulate_policy, ExportFormat, FilterBudget, PolicySpec,
    ScheduleReplay, SessionConfig, SessionMode, SessionSource, SessionState, Signal,
};
use renyi_accounting::mechanisms::{GaussianMechanism, World};
use renyi_accounting::odometer::FilterSchedule;
use renyi_accounting::oracle::{numeric_renyi_gaussian, verify_filter_bound, verify_truncated_odometer, AdversaryScript};
use renyi_accounting::orders::OrderSet;

#[derive(Parser)]
#[command(name = "renyi-acct", version, about = "Rényi DP filters, odometers and their exact oracle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// δ of the (ε, δ) guarantee.
    #[arg(long, default_value_t = 1e-5)]
    delta: f64,
    /// JSON order set (array or {"orders": [...]}); defaults to the 38-order set.
    #[arg(long)]
    orders_file: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Jsonl,
    Json,
    Csv,
}

impl From<Format> for ExportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Jsonl => ExportFormat::Jsonl,
            Format::Json => ExportFormat::Json,
            Format::Csv => ExportFormat::Csv,
        }
    }
}

#[derive(Args)]
struct SessionArgs {
    #[command(flatten)]
    common: Common,
    /// Adversary script (JSON tree).
    #[arg(long, conflicts_with = "schedule", required_unless_present = "schedule")]
    script: Option<PathBuf>,
    /// Budget schedule (JSON segments).
    #[arg(long)]
    schedule: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Neighboring dataset the mechanisms run on (0 or 1).
    #[arg(long, default_value_t = 0)]
    world: u8,
    #[arg(long, value_enum, default_value_t = Format::Jsonl)]
    format: Format,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Convert an RDP curve to (ε, δ)-DP, or a DP target to an RDP cap.
    Convert {
        #[command(flatten)]
        common: Common,
        /// Curve as inline JSON or a file.
        #[arg(long, required_unless_present = "dp_target", conflicts_with = "dp_target")]
        curve: Option<String>,
        #[arg(long)]
        dp_target: Option<f64>,
    },
    /// Print the default order set, or the granularity set for n.
    Orders {
        #[arg(long)]
        granularity: Option<u64>,
    },
    /// Run a filter session.
    Filter {
        #[command(flatten)]
        session: SessionArgs,
        /// Cap: a number (constant over orders), inline JSON curve, or file.
        #[arg(long, required_unless_present = "dp_target", conflicts_with = "dp_target")]
        cap: Option<String>,
        #[arg(long)]
        dp_target: Option<f64>,
        /// PASS everything after the first PASS.
        #[arg(long)]
        sealed: bool,
    },
    /// Run an odometer session.
    Odometer {
        #[command(flatten)]
        session: SessionArgs,
    },
    /// Cumulative spend trace of a schedule, or verification of a session log.
    Replay {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with = "log", required_unless_present = "log")]
        schedule: Option<PathBuf>,
        /// Session log (JSONL or JSON) to rebuild and check.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Replay the budget-adaptation policy on a per-period signal.
    Policy {
        #[arg(long)]
        policy: PathBuf,
        /// JSON array of booleans or improvement counts, one per period.
        #[arg(long)]
        signal: PathBuf,
        /// One-epoch baseline schedule.
        #[arg(long)]
        base: PathBuf,
        /// δ for the eps_dp column of CSV output.
        #[arg(long, default_value_t = 1e-5)]
        delta: f64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Exact checks; exit status 2 when a bound is violated.
    Oracle {
        #[command(subcommand)]
        check: OracleCheck,
    },
}

#[derive(Subcommand)]
enum OracleCheck {
    /// Divergence of the filtered views against the cap.
    Filter {
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        cap: String,
    },
    /// Divergence of truncated views against level(f, α).
    Odometer {
        #[arg(long, default_value_t = 1e-5)]
        delta: f64,
        #[arg(long)]
        script: PathBuf,
        #[arg(long, default_value_t = 1)]
        f: u32,
    },
    /// Closed-form Gaussian curve against numerical integration.
    Gaussian {
        #[arg(long)]
        orders_file: Option<PathBuf>,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 1.0)]
        sensitivity: f64,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
    },
}

enum Failure {
    Invalid(Error),
    Violated(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Invalid(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Invalid(e.into())
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn load_orders(path: Option<&Path>) -> Result<OrderSet> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OrdersFile {
        Bare(OrderSet),
        Wrapped { orders: OrderSet },
    }
    match path {
        None => Ok(OrderSet::default_set()),
        Some(path) => Ok(match read_json::<OrdersFile>(path)? {
            OrdersFile::Bare(o) | OrdersFile::Wrapped { orders: o } => o,
        }),
    }
}

fn load_curve(arg: &str, orders: Option<&OrderSet>) -> Result<RdpCurve> {
    if let (Ok(eps), Some(orders)) = (arg.parse::<f64>(), orders) {
        return RdpCurve::constant(orders, eps);
    }
    if arg.trim_start().starts_with('{') {
        return Ok(serde_json::from_str(arg)?);
    }
    read_json(Path::new(arg))
}

fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn pretty<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn run_and_emit(session: SessionArgs, mode: SessionMode, orders: OrderSet) -> Result<()> {
    let source = match (&session.script, &session.schedule) {
        (Some(path), _) => SessionSource::Script(read_json::<AdversaryScript>(path)?),
        (None, Some(path)) => SessionSource::Schedule(read_json::<ScheduleReplay>(path)?),
        (None, None) => return Err(Error::Config("one of --script or --schedule is required".into())),
    };
    let config = SessionConfig {
        mode,
        orders,
        delta: session.common.delta,
        seed: session.seed,
        world: World::from_bit(session.world)?,
        source,
    };
    let run = run_session(&config)?;
    let format = ExportFormat::from(session.format);
    match session.out {
        Some(path) => harness::export(&run.log, format, &path),
        None => {
            let text = match format {
                ExportFormat::Jsonl => harness::to_jsonl(&run.log)?,
                ExportFormat::Json => serde_json::to_string(&run.log)? + "\n",
                ExportFormat::Csv => {
                    let mut buf = Vec::new();
                    harness::to_csv(&run.log, &mut buf)?;
                    String::from_utf8(buf).expect("csv output is utf-8")
                }
            };
            emit(&text);
            Ok(())
        }
    }
}

fn trace_csv(orders: &OrderSet, trace: &[RdpCurve], delta: f64) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut columns = vec!["step".to_owned()];
    columns.extend(orders.iter().map(|a| format!("spent_a{a}")));
    columns.push("eps_dp".to_owned());
    writer.write_record(&columns)?;
    for (step, spent) in trace.iter().enumerate() {
        let mut row = vec![(step + 1).to_string()];
        row.extend(spent.values().iter().map(f64::to_string));
        row.push(curve_to_dp(spent, delta)?.epsilon.to_string());
        writer.write_record(&row)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn run(cli: Cli) -> std::result::Result<(), Failure> {
    match cli.command {
        Command::Convert {
            common,
            curve,
            dp_target,
        } => {
            let text = match (curve, dp_target) {
                (Some(curve), _) => pretty(&curve_to_dp(&load_curve(&curve, None)?, common.delta)?)?,
                (None, Some(eps)) => {
                    let orders = load_orders(common.orders_file.as_deref())?;
                    pretty(&dp_target_to_rdp_budget(eps, common.delta, &orders)?)?
                }
                (None, None) => return Err(Error::Config("one of --curve or --dp-target is required".into()).into()),
            };
            emit(&text);
        }
        Command::Orders { granularity } => {
            let orders = match granularity {
                Some(n) => OrderSet::granularity(n)?,
                None => OrderSet::default_set(),
            };
            emit(&(serde_json::to_string(&orders)? + "\n"));
        }
        Command::Filter {
            session,
            cap,
            dp_target,
            sealed,
        } => {
            let orders = load_orders(session.common.orders_file.as_deref())?;
            let budget = match (cap, dp_target) {
                (Some(cap), _) => FilterBudget::Cap(load_curve(&cap, Some(&orders))?),
                (None, Some(eps)) => FilterBudget::DpTarget(eps),
                (None, None) => return Err(Error::Config("one of --cap or --dp-target is required".into()).into()),
            };
            run_and_emit(session, SessionMode::Filter { budget, sealed }, orders)?;
        }
        Command::Odometer { session } => {
            let orders = load_orders(session.common.orders_file.as_deref())?;
            run_and_emit(session, SessionMode::Odometer, orders)?;
        }
        Command::Replay {
            common,
            schedule,
            log,
            format,
        } => {
            if let Some(path) = log {
                let log = harness::import(&path)?;
                let state = reconstruct(&log)?;
                let summary = match &state {
                    SessionState::Filter(f) => serde_json::json!({
                        "mode": "filter",
                        "events": log.len(),
                        "spent": f.spent(),
                        "dp": curve_to_dp(f.spent(), log.header().delta())?,
                    }),
                    SessionState::Odometer(o) => serde_json::json!({
                        "mode": "odometer",
                        "events": log.len(),
                        "spent": o.spent(),
                        "bound": harness::BoundRecord::from(o.running_bound()),
                    }),
                };
                emit(&pretty(&summary)?);
            } else if let Some(path) = schedule {
                let orders = load_orders(common.orders_file.as_deref())?;
                let trace = replay_schedule(&read_json::<ScheduleReplay>(&path)?, &orders)?;
                let text = match format {
                    Format::Csv => trace_csv(&orders, &trace, common.delta)?,
                    Format::Json => serde_json::to_string(&trace)? + "\n",
                    Format::Jsonl => {
                        let mut out = String::new();
                        for curve in &trace {
                            out.push_str(&serde_json::to_string(curve)?);
                            out.push('\n');
                        }
                        out
                    }
                };
                emit(&text);
            }
        }
        Command::Policy {
            policy,
            signal,
            base,
            delta,
            format,
        } => {
            let policy: PolicySpec = read_json(&policy)?;
            let signal: Vec<Signal> = read_json(&signal)?;
            let base: ScheduleReplay = read_json(&base)?;
            let trace = simulate_policy(&policy, &signal, &base)?;
            let text = match format {
                Format::Csv => {
                    let orders = policy.cap.orders();
                    trace_csv(orders, &replay_schedule(&trace.schedule, orders)?, delta)?
                }
                _ => pretty(&trace)?,
            };
            emit(&text);
        }
        Command::Oracle { check } => oracle(check)?,
    }
    Ok(())
}

fn oracle(check: OracleCheck) -> std::result::Result<(), Failure> {
    match check {
        OracleCheck::Filter { script, cap } => {
            let script: AdversaryScript = read_json(&script)?;
            let cap = load_curve(&cap, Some(script.orders()))?;
            let report = verify_filter_bound(&script, &cap)?;
            emit(&pretty(&report)?);
            if !report.holds {
                return Err(Failure::Violated("no order keeps the divergence within the cap".into()));
            }
        }
        OracleCheck::Odometer { delta, script, f } => {
            let script: AdversaryScript = read_json(&script)?;
            let schedule = FilterSchedule::new(delta, script.orders().clone())?;
            let report = verify_truncated_odometer(&script, &schedule, f)?;
            emit(&pretty(&report)?);
            if !report.holds {
                return Err(Failure::Violated(format!("truncated divergence exceeds level({f}, α)")));
            }
        }
        OracleCheck::Gaussian {
            orders_file,
            sigma,
            sensitivity,
            tolerance,
        } => {
            let orders = load_orders(orders_file.as_deref())?;
            let closed = GaussianMechanism::new(sigma, sensitivity)?.rdp_curve(&orders);
            let mut rows = Vec::with_capacity(orders.len());
            let mut worst: f64 = 0.0;
            for (alpha, eps) in closed.iter() {
                let numeric = numeric_renyi_gaussian(sigma, sensitivity, alpha)?;
                worst = worst.max((numeric - eps).abs());
                rows.push(serde_json::json!({"alpha": alpha, "closed_form": eps, "numeric": numeric}));
            }
            let holds = worst <= tolerance;
            emit(&pretty(&serde_json::json!({"holds": holds, "max_abs_error": worst, "orders": rows}))?);
            if !holds {
                return Err(Failure::Violated(format!("max |error| {worst:e} exceeds {tolerance:e}")));
            }
        }
    }
    Ok(())
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Violated(msg)) => {
            eprintln!("oracle assertion failed: {msg}");
            ExitCode::from(2)
        }
    }
}
