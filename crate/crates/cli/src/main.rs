use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use majority_sbm::analytics::{constants, threshold_delta, threshold_value};
use majority_sbm::harness::{
    emit, Destination, ExperimentReport, OutputFormat, Runner, ScanConfig, TableId,
    DEFAULT_MAX_ROUNDS,
};
use majority_sbm::oracle::{exact_absorption, exact_halt_day1, TransitionKernel};
use majority_sbm::{
    BlockParams, DeltaRule, Error, ExperimentSpec, ModelVariant, Result, ThresholdRegime,
};
use serde_json::json;

#[derive(Parser)]
#[command(name = "majority-sbm", version, about = "Majority dynamics on two-community random graphs")]
struct Cli {
    /// Log progress to stderr (-v info, -vv debug)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment
    Simulate(SimulateArgs),
    /// Reproduce a reference grid (T1..T6)
    Table(TableArgs),
    /// Sweep L and locate the 50% crossing
    Scan(ScanArgs),
    /// Exact small-graph kernel and absorption probabilities
    Oracle(OracleArgs),
    /// Closed-form constants H, C, C'
    Constants(PqArgs),
    /// Evaluate a bias threshold formula
    Thresholds(ThresholdArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Markovian,
    NonMarkovian,
}

impl From<Model> for ModelVariant {
    fn from(m: Model) -> Self {
        match m {
            Model::Markovian => ModelVariant::Markovian,
            Model::NonMarkovian => ModelVariant::NonMarkovian,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write to this file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: one per core)
    #[arg(long)]
    workers: Option<usize>,
}

impl Output {
    fn destination(&self) -> Destination {
        match &self.out {
            Some(p) => Destination::File(p.clone()),
            None => Destination::Stdout,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON experiment spec; replaces the experiment flags
    #[arg(long, conflicts_with_all = ["model", "n", "delta", "l", "p", "q"])]
    spec: Option<PathBuf>,
    #[arg(long, value_enum, required_unless_present = "spec")]
    model: Option<Model>,
    /// Size of the minus block
    #[arg(long, required_unless_present = "spec")]
    n: Option<u64>,
    /// Plus block has n + delta vertices
    #[arg(long, allow_negative_numbers = true, conflicts_with = "l")]
    delta: Option<i64>,
    /// delta = ceil((p - q) n / q - L sqrt(n ln n))
    #[arg(long = "L", id = "l", value_name = "L", required_unless_present_any = ["spec", "delta"])]
    l: Option<f64>,
    #[arg(long, required_unless_present = "spec")]
    p: Option<f64>,
    #[arg(long, required_unless_present = "spec")]
    q: Option<f64>,
    #[arg(long)]
    replicates: Option<u64>,
    #[arg(long)]
    max_rounds: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct TableArgs {
    /// T1..T6
    table: String,
    #[arg(long, default_value_t = 1000)]
    replicates: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long, value_enum, default_value = "non-markovian")]
    model: Model,
    #[arg(long)]
    n: u64,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
    #[arg(long = "L-from", id = "l_from", value_name = "L", required_unless_present = "l_values")]
    l_from: Option<f64>,
    #[arg(long = "L-to", id = "l_to", value_name = "L", required_unless_present = "l_values")]
    l_to: Option<f64>,
    #[arg(long = "L-step", id = "l_step", value_name = "L", required_unless_present = "l_values")]
    l_step: Option<f64>,
    /// Explicit comma-separated grid instead of a range
    #[arg(long = "L-values", id = "l_values", value_name = "L", value_delimiter = ',', conflicts_with_all = ["l_from", "l_to", "l_step"])]
    l_values: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1000)]
    replicates: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_ROUNDS)]
    max_rounds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    delta: usize,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PqArgs {
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
    /// halt, first-day, second-day, third-day, unit-halt, unit-second-day,
    /// unit-third-day, sharp-halt or experiment
    #[arg(long)]
    regime: String,
    #[arg(long = "L", id = "l", value_name = "L")]
    l: Option<f64>,
    /// Slack parameter of the second-day regimes (d_n for `halt`)
    #[arg(long)]
    delta_param: Option<f64>,
}

fn read_spec(path: &PathBuf) -> Result<ExperimentSpec> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut spec = match &args.spec {
        Some(path) => read_spec(path)?,
        None => {
            let params = BlockParams::new(args.p.expect("required"), args.q.expect("required"))?;
            let delta_rule = match (args.delta, args.l) {
                (Some(d), _) => DeltaRule::Explicit(d),
                (None, Some(l)) => DeltaRule::Threshold(ThresholdRegime::Experiment { l }),
                (None, None) => unreachable!("clap requires --delta or --L"),
            };
            ExperimentSpec {
                variant: args.model.expect("required").into(),
                n: args.n.expect("required"),
                delta_rule,
                params,
                replicates: 1000,
                max_rounds: DEFAULT_MAX_ROUNDS,
                master_seed: 0,
            }
        }
    };
    if let Some(r) = args.replicates {
        spec.replicates = r;
    }
    if let Some(m) = args.max_rounds {
        spec.max_rounds = m;
    }
    if let Some(s) = args.seed {
        spec.master_seed = s;
    }
    let report = Runner::new(args.output.workers)?.run_experiment(&spec)?;
    emit(&[report], args.output.format.into(), &args.output.destination())
}

fn table(args: TableArgs) -> Result<()> {
    let id: TableId = args.table.parse()?;
    let reports = Runner::new(args.output.workers)?.reproduce_table(id, args.replicates, args.seed)?;
    emit(&reports, args.output.format.into(), &args.output.destination())
}

fn grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if step.is_nan() || step <= 0.0 || !from.is_finite() || !to.is_finite() || to < from {
        return Err(Error::InvalidArgument(format!(
            "bad L range {from}..{to} step {step}"
        )));
    }
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    // snap to 1e-9 so 0.1-style steps print cleanly
    Ok((0..count)
        .map(|k| ((from + k as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

fn scan(args: ScanArgs) -> Result<()> {
    let l_grid = match args.l_values {
        Some(v) => v,
        None => grid(
            args.l_from.expect("required"),
            args.l_to.expect("required"),
            args.l_step.expect("required"),
        )?,
    };
    let config = ScanConfig {
        variant: args.model.into(),
        n: args.n,
        params: BlockParams::new(args.p, args.q)?,
        l_grid,
        replicates: args.replicates,
        max_rounds: args.max_rounds,
        master_seed: args.seed,
    };
    let result = Runner::new(args.output.workers)?.scan_phase(&config)?;
    let dest = args.output.destination();
    match args.output.format {
        Format::Csv => {
            let reports: Vec<ExperimentReport> =
                result.points.iter().map(|pt| pt.report.clone()).collect();
            match result.crossing {
                Some((lo, hi)) => eprintln!("crossing: [{lo}, {hi}]"),
                None => eprintln!("crossing: none"),
            }
            emit(&reports, OutputFormat::Csv, &dest)
        }
        Format::Json => write_value(&serde_json::to_value(&result)?, args.output.out.as_ref()),
    }
}

fn write_value(value: &serde_json::Value, out: Option<&PathBuf>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(path) => fs::write(path, text).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        }),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| Error::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

fn oracle(args: OracleArgs) -> Result<()> {
    let vertices = args.n * 2 + args.delta;
    let kernel = TransitionKernel::build(vertices, args.p, args.q)?;
    let absorption = exact_absorption(args.n, args.delta, args.p, args.q)?;
    let halt_day1 = if args.n > 0 {
        Some(exact_halt_day1(args.n, args.delta, args.p, args.q)?)
    } else {
        None
    };
    let value = json!({
        "n": args.n,
        "delta": args.delta,
        "p": args.p,
        "q": args.q,
        "vertices": vertices,
        "kernel": kernel.rows,
        "absorption": absorption,
        "halt_day1": halt_day1,
    });
    write_value(&value, args.out.as_ref())
}

fn show_constants(args: PqArgs) -> Result<()> {
    let c = constants(args.p, args.q)?;
    write_value(
        &json!({ "p": args.p, "q": args.q, "H": c.h, "C": c.c, "C_prime": c.c_prime }),
        None,
    )
}

fn thresholds(args: ThresholdArgs) -> Result<()> {
    let regime = ThresholdRegime::from_name(&args.regime, args.l, args.delta_param)?;
    let value = threshold_value(args.n, args.p, args.q, &regime)?;
    let delta = threshold_delta(args.n, args.p, args.q, &regime)?;
    write_value(
        &json!({
            "n": args.n,
            "p": args.p,
            "q": args.q,
            "regime": regime,
            "value": value,
            "delta": delta,
        }),
        None,
    )
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
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Table(a) => table(a),
        Command::Scan(a) => scan(a),
        Command::Oracle(a) => oracle(a),
        Command::Constants(a) => show_constants(a),
        Command::Thresholds(a) => thresholds(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
