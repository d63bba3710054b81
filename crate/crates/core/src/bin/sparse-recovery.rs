use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use sparse_recovery::bench::{loglog_slope, run_bench, run_once, BenchRow, BenchSpec, RunRow};
use sparse_recovery::signals::{
    gen_signal, load_signal, save_signal_binary, save_sparse_text, write_sparse_text, SignMode,
    SignalSpec, Tail,
};
use sparse_recovery::{recover, Constants, MeasurementLayout, MeasurementVector, RecoveryConfig};

#[derive(Parser)]
#[command(
    name = "sparse-recovery",
    version,
    about = "Sublinear-time l1 sparse recovery from hashed measurements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic signal and its ground-truth spikes.
    Gen(GenArgs),
    /// Print the measurement layout for a configuration.
    Plan(PlanArgs),
    /// Measure a signal file.
    Measure(MeasureArgs),
    /// Recover a sparse approximation from a measurement file.
    Decode(DecodeArgs),
    /// Plan, measure and decode a signal, emitting one CSV row per seed.
    Run(RunArgs),
    /// Time decoding over an (N, k) grid, emitting one CSV row per cell.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TailKind {
    None,
    Flat,
    Geometric,
}

#[derive(Args)]
struct TailArgs {
    /// Tail shape.
    #[arg(long, value_enum, default_value = "none")]
    tail: TailKind,
    /// Tail l1 mass.
    #[arg(long, default_value_t = 1.0)]
    mass: f64,
    /// Number of tail entries.
    #[arg(long, default_value_t = 512)]
    support: usize,
    /// Ratio of a geometric tail.
    #[arg(long, default_value_t = 0.5)]
    ratio: f64,
}

impl TailArgs {
    fn tail(&self) -> Tail {
        match self.tail {
            TailKind::None => Tail::None,
            TailKind::Flat => Tail::Flat {
                mass: self.mass,
                support: self.support,
            },
            TailKind::Geometric => Tail::Geometric {
                mass: self.mass,
                ratio: self.ratio,
                support: self.support,
            },
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[command(flatten)]
    tail: TailArgs,
    #[arg(long, default_value_t = 1.0)]
    spike_low: f64,
    #[arg(long, default_value_t = 10.0)]
    spike_high: f64,
    /// positive | mixed
    #[arg(long, default_value = "positive")]
    sign: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Signal output; the spikes go to `<out>.truth`.
    #[arg(long)]
    out: PathBuf,
    /// Write the signal in the sparse text format instead of binary.
    #[arg(long)]
    text: bool,
}

#[derive(Args)]
struct ConfigArgs {
    /// key=value configuration file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Override a constant, e.g. `--set c_reps=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self, n: Option<usize>) -> anyhow::Result<RecoveryConfig> {
        let mut text = match &self.config {
            Some(p) => {
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?
            }
            None => String::new(),
        };
        let mut push = |key: &str, value: String| text.push_str(&format!("\n{key}={value}"));
        if let Some(n) = n {
            push("n", n.to_string());
        }
        if let Some(k) = self.k {
            push("k", k.to_string());
        }
        if let Some(eps) = self.eps {
            push("eps", eps.to_string());
        }
        if let Some(ell) = self.ell {
            push("ell", ell.to_string());
        }
        if let Some(seed) = self.seed {
            push("seed", seed.to_string());
        }
        for o in &self.overrides {
            text.push('\n');
            text.push_str(o);
        }
        Ok(RecoveryConfig::parse(&text)?)
    }
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct MeasureArgs {
    #[arg(long)]
    signal: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    /// Output file; `.csv` selects the CSV format, anything else binary.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    mu: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    config: ConfigArgs,
    /// Sparse text output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    signal: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    /// Number of consecutive layout seeds to sweep, starting at `--seed`.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    /// CSV output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    n_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    k_list: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    ell: usize,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    tail: TailArgs,
    /// Skip the single-level full-scan comparison.
    #[arg(long)]
    no_baseline: bool,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// CSV output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A check that should hold for every input failed.
#[derive(Debug)]
struct InvariantViolation(String);

impl std::fmt::Display for InvariantViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "internal invariant violated: {}", self.0)
    }
}

impl std::error::Error for InvariantViolation {}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn cmd_gen(args: &GenArgs) -> anyhow::Result<()> {
    let spec = SignalSpec {
        n: args.n,
        k: args.k,
        spike_low: args.spike_low,
        spike_high: args.spike_high,
        tail: args.tail.tail(),
        sign: args.sign.parse::<SignMode>()?,
        seed: args.seed,
    };
    let (x, truth) = gen_signal(&spec)?;
    if args.text {
        save_sparse_text(&x.to_sparse(), &args.out)?;
    } else {
        save_signal_binary(&x, &args.out)?;
    }
    let mut truth_path = args.out.clone().into_os_string();
    truth_path.push(".truth");
    save_sparse_text(&truth, Path::new(&truth_path))?;
    Ok(())
}

fn cmd_plan(args: &PlanArgs) -> anyhow::Result<()> {
    let config = args.config.resolve(args.n)?;
    let layout = MeasurementLayout::plan(&config)?;
    print!("{}", layout.describe());
    Ok(())
}

fn cmd_measure(args: &MeasureArgs) -> anyhow::Result<()> {
    let x = load_signal(&args.signal)?;
    let config = args.config.resolve(Some(x.len()))?;
    let layout = MeasurementLayout::plan(&config)?;
    layout.measure(&x)?.save(&args.out)?;
    Ok(())
}

fn cmd_decode(args: &DecodeArgs) -> anyhow::Result<()> {
    let mu = MeasurementVector::load(&args.mu)?;
    let config = args.config.resolve(args.n)?;
    let layout = MeasurementLayout::plan(&config)?;
    let xhat = recover(&mu, &layout)?;
    let mut out = output(args.out.as_deref())?;
    write_sparse_text(&xhat, &mut out)?;
    out.flush()?;
    Ok(())
}

/// `Σ_j ceil(c_top · s_j)`, the most entries a recovery can return.
fn support_bound(config: &RecoveryConfig) -> usize {
    (1..=config.iterations())
        .map(|j| (config.constants.c_top * config.sparsity(j) as f64).ceil() as usize)
        .sum()
}

fn cmd_run(args: &RunArgs) -> anyhow::Result<()> {
    let x = load_signal(&args.signal)?;
    let base = args.config.resolve(Some(x.len()))?;
    let mut out = output(args.out.as_deref())?;
    writeln!(out, "{}", RunRow::csv_header())?;
    for offset in 0..args.seeds {
        let mut config = base.clone();
        config.seed = base.seed.wrapping_add(offset);
        let row = run_once(&config, &x)?;
        if row.outcome.support_size > support_bound(&config) {
            bail!(InvariantViolation(format!(
                "support {} exceeds the bound {}",
                row.outcome.support_size,
                support_bound(&config)
            )));
        }
        writeln!(out, "{}", row.to_csv())?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> anyhow::Result<()> {
    let mut constants = Constants::default();
    if !args.overrides.is_empty() {
        let text = format!("n=1\nk=1\n{}", args.overrides.join("\n"));
        constants = RecoveryConfig::parse(&text)?.constants;
    }
    let threads = match std::env::var("RECOVER_THREADS") {
        Ok(v) => v
            .parse::<usize>()
            .context("RECOVER_THREADS must be a positive integer")?
            .max(1),
        Err(_) => 1,
    };
    let spec = BenchSpec {
        n_list: args.n_list.clone(),
        k_list: args.k_list.clone(),
        eps: args.eps,
        ell: args.ell,
        trials: args.trials.max(1),
        seed: args.seed,
        tail: args.tail.tail(),
        constants,
        baseline: !args.no_baseline,
        threads,
    };
    let mut out = output(args.out.as_deref())?;
    writeln!(out, "{}", BenchRow::csv_header())?;
    let mut write_err = None;
    let rows = run_bench(&spec, |row| {
        if let Err(e) = writeln!(out, "{}", row.to_csv()).and_then(|_| out.flush()) {
            write_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = write_err {
        return Err(e.into());
    }
    if rows.len() >= 2 && spec.k_list.len() == 1 {
        let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
        let t: Vec<f64> = rows.iter().map(|r| r.median_decode_ms).collect();
        eprintln!(
            "decode-time log-log slope vs N: {:.3}",
            loglog_slope(&ns, &t)
        );
        if spec.baseline {
            let b: Vec<f64> = rows
                .iter()
                .filter_map(|r| r.baseline_median_decode_ms)
                .collect();
            eprintln!("full-scan baseline slope: {:.3}", loglog_slope(&ns, &b));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Measure(a) => cmd_measure(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Run(a) => cmd_run(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<InvariantViolation>() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
