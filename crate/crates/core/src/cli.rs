//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for invalid input (bad flags, bad config,
//! a point file that fails `verify-net`), 2 when a run fails.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::estimators::RiskLevel;
use crate::experiments::{self, full_grid, mc_truth, ExperimentConfig, Sampler, CSV_LEGEND};
use crate::lowdisc::{is_net, NetCheck, NetParams, PointMeta, PointSet};
use crate::models::{LossModel, Model, ModelConfig};
use crate::numfmt::format_g;

/// Significant digits for point coordinates; round-trips any `f64`.
const POINT_DIGITS: usize = 17;
const TRUTH_DEFAULT_N: u64 = 100_000_000;

#[derive(Debug, Parser)]
#[command(name = "qmc-risk", version, about = "Quasi-Monte Carlo quantile and expected shortfall estimation")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print sampler points as CSV, one point per row.
    Points(PointsArgs),
    /// Check that a CSV point file is a (t,m,d)-net in base b.
    VerifyNet(VerifyNetArgs),
    /// Estimate the quantile and expected shortfall from one batch.
    Estimate(EstimateArgs),
    /// Large-sample Monte Carlo reference values for a model.
    Truth(TruthArgs),
    /// Replicated convergence study; writes the result table as CSV.
    Converge(ConvergeArgs),
}

#[derive(Debug, Args)]
struct PointsArgs {
    #[arg(long, default_value = "owen")]
    sampler: Sampler,
    #[arg(short = 'd', long)]
    dim: usize,
    #[arg(short = 'n', long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyNetArgs {
    #[arg(long)]
    file: PathBuf,
    #[arg(short = 't')]
    t: u32,
    #[arg(short = 'm')]
    m: u32,
    #[arg(short = 'd', long)]
    dim: usize,
    #[arg(short = 'b', default_value_t = 2)]
    b: u32,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Model config; an experiment config's `[model]` table also works.
    /// Defaults to the 15-activity network.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(short = 'p', long, default_value_t = experiments::DEFAULT_LEVEL)]
    level: f64,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value = "owen")]
    sampler: Sampler,
    #[arg(short = 'n', long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct TruthArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(short = 'n', long, default_value_t = TRUTH_DEFAULT_N)]
    count: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ConvergeArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid 2^8..2^20 instead of the config's grid.
    #[arg(long)]
    full_grid: bool,
    /// Overrides the config's `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's `level`.
    #[arg(short = 'p', long)]
    level: Option<f64>,
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code. Results go to `out`, diagnostics to `err`.
pub fn dispatch(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let (mut buf_out, mut buf_err) = (Vec::new(), Vec::new());
    let result = run_with_threads(cli, &mut buf_out, &mut buf_err);
    let _ = out.write_all(&buf_out);
    let _ = err.write_all(&buf_err);
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn run_with_threads(cli: Cli, out: &mut Vec<u8>, err: &mut Vec<u8>) -> Result<i32> {
    match cli.threads {
        None => run(cli.command, out, err),
        Some(0) => Err(Error::Invalid {
            key: "--threads".into(),
            message: "must be at least 1".into(),
        }),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Resource(format!("thread pool: {e}")))?;
            pool.install(|| run(cli.command, out, err))
        }
    }
}

fn run(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Points(a) => points(a, out),
        Command::VerifyNet(a) => verify_net(a, out),
        Command::Estimate(a) => estimate(a, out),
        Command::Truth(a) => truth(a, out),
        Command::Converge(a) => converge(a, out, err),
    }
}

fn positive(flag: &str, value: usize) -> Result<()> {
    if value == 0 {
        return Err(Error::Invalid {
            key: flag.into(),
            message: "must be positive".into(),
        });
    }
    Ok(())
}

fn level_flag(p: f64) -> Result<RiskLevel> {
    RiskLevel::new(p).map_err(|e| Error::Invalid {
        key: "--level".into(),
        message: e.to_string(),
    })
}

fn read_file(flag: &str, path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Invalid {
        key: flag.into(),
        message: format!("cannot read {}: {e}", path.display()),
    })
}

fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Formats points as CSV rows.
pub fn points_csv(ps: &PointSet) -> String {
    let mut text = String::with_capacity(ps.len() * ps.dim() * 24);
    for row in ps.iter() {
        let cells: Vec<String> = row.iter().map(|&x| format_g(x, POINT_DIGITS)).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    text
}

/// Parses CSV rows of coordinates; blank lines and `#` comments are skipped.
pub fn parse_points_csv(text: &str) -> Result<PointSet> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|cell| {
                cell.trim().parse::<f64>().map_err(|e| Error::Parse {
                    key: format!("line {}", lineno + 1),
                    message: format!("`{}`: {e}", cell.trim()),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Precondition("point file has no rows".into()));
    }
    PointSet::from_rows(&rows, PointMeta::new("file"))
}

fn points(a: PointsArgs, out: &mut dyn Write) -> Result<i32> {
    positive("--dim", a.dim)?;
    positive("--count", a.count)?;
    let ps = experiments::points(a.sampler, a.dim, a.count, a.seed, 0)?;
    emit(a.out.as_deref(), &points_csv(&ps), out)?;
    Ok(0)
}

fn verify_net(a: VerifyNetArgs, out: &mut dyn Write) -> Result<i32> {
    let params = NetParams::new(a.t, a.m, a.dim, a.b)?;
    let ps = parse_points_csv(&read_file("--file", &a.file)?)?;
    match is_net(&ps, params)? {
        NetCheck::Pass => {
            writeln!(out, "PASS")?;
            Ok(0)
        }
        NetCheck::Fail(w) => {
            writeln!(out, "FAIL {w}")?;
            Ok(1)
        }
    }
}

fn load_model_arg(path: Option<&Path>) -> Result<LossModel> {
    let Some(path) = path else {
        return ModelConfig {
            kind: "san-15".into(),
            ..ModelConfig::default()
        }
        .build();
    };
    let text = read_file("--config", path)?;
    let parse_err = |e: toml::de::Error| Error::Parse {
        key: "--config".into(),
        message: e.to_string(),
    };
    let mut table: toml::Table = toml::from_str(&text).map_err(parse_err)?;
    let model = match table.remove("model") {
        Some(toml::Value::Table(t)) => t,
        _ => table,
    };
    let cfg: ModelConfig = model.try_into().map_err(parse_err)?;
    cfg.build()
}

fn estimate(a: EstimateArgs, out: &mut dyn Write) -> Result<i32> {
    positive("--count", a.count)?;
    let level = level_flag(a.model.level)?;
    let model = load_model_arg(a.model.config.as_deref())?;
    let est = experiments::estimate_once(&model, a.sampler, a.count, a.seed, level)?;
    writeln!(out, "sampler,N,p,quantile,shortfall")?;
    writeln!(
        out,
        "{},{},{},{},{}",
        a.sampler,
        a.count,
        level.value(),
        format_g(est.quantile, POINT_DIGITS),
        format_g(est.shortfall, POINT_DIGITS)
    )?;
    Ok(0)
}

fn truth(a: TruthArgs, out: &mut dyn Write) -> Result<i32> {
    let level = level_flag(a.model.level)?;
    let model = load_model_arg(a.model.config.as_deref())?;
    let t = mc_truth(&model, level, a.count, a.seed)?;
    writeln!(out, "model: {}", model.name())?;
    writeln!(out, "p: {}", format_g(level.value(), 9))?;
    writeln!(out, "N: {}", t.n)?;
    writeln!(
        out,
        "quantile: {} (stderr {})",
        format_g(t.quantile, 9),
        format_g(t.quantile_stderr, 3)
    )?;
    writeln!(
        out,
        "shortfall: {} (stderr {})",
        format_g(t.shortfall, 9),
        format_g(t.shortfall_stderr, 3)
    )?;
    if let (Some(v), Some(c)) = (model.true_quantile(level), model.true_shortfall(level)) {
        writeln!(out, "closed form: quantile {} shortfall {}", format_g(v, 9), format_g(c, 9))?;
    }
    Ok(0)
}

fn converge(a: ConvergeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let mut cfg = ExperimentConfig::from_toml(&read_file("--config", &a.config)?)?;
    if a.full_grid {
        cfg.n_grid = full_grid();
    }
    if let Some(seed) = a.seed {
        cfg.master_seed = seed;
    }
    if let Some(p) = a.level {
        cfg.level = level_flag(p)?;
    }
    let table = experiments::run_convergence(&cfg)?;
    emit(a.out.as_deref(), &table.to_csv(), out)?;
    writeln!(err, "{CSV_LEGEND}")?;
    for s in table.rate_summaries() {
        writeln!(
            err,
            "{} {} slope {}{}",
            s.sampler,
            s.metric.name(),
            format_g(s.fit.slope, 4),
            if s.excluded_smallest { " (smallest N excluded)" } else { "" }
        )?;
    }
    Ok(0)
}
