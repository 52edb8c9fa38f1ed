//! The `loci` command: p-values and intervals for a data file, replicated
//! simulations from a config file, and unit-cube designs.

pub mod data;
pub mod error;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use loci_core::{
    bootstrap_ci, bootstrap_pvalue, default_m, grid_design, is_ci_upper, is_pvalue_design, is_pvalue_refined,
    lhd_design, m_out_of_n_ci, nb_ci, nb_pvalue, CiResult, Model, PValueResult, RefineOptions, Side, Streams,
    UnitDesign,
};
use loci_harness::{run_experiment, try_design, DesignSpec, ExperimentConfig, Method};
use loci_models::calibration::{BinomialModel, NormalMeanModel};
use loci_models::hdreg::{default_lambda, HdRegModel};
use loci_models::multinomial::MultinomialModel;
use loci_models::npreg::{default_bandwidth, NpRegModel, NwSmoother};
use loci_models::weibull::WeibullModel;
use serde::Serialize;
use serde_json::json;

pub use error::{CliError, Result};

use data::Table;

#[derive(Debug, Parser)]
#[command(name = "loci", version, about = "Local optimization-based tests and confidence intervals")]
pub struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "LOCI_THREADS")]
    pub threads: Option<usize>,
    /// Print warnings and design sizes to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// P-value for a data file; prints the p-value.
    Test(TestArgs),
    /// Confidence interval for a data file; prints `lower upper`.
    Ci(CiArgs),
    /// Replicated experiment from a config file; writes `<out>.csv` and `<out>.json`.
    Simulate(SimulateArgs),
    /// Prints a unit-cube design as CSV.
    Designs(DesignArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelId {
    Multinomial,
    Weibull,
    Hdreg,
    Npreg,
    NormalMean,
    Binomial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DesignKindArg {
    Grid,
    Lhd,
    Center,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long, value_enum)]
    pub model: ModelId,
    /// CSV data file, schema per model.
    #[arg(long)]
    pub data: PathBuf,
    /// Resamples per try point.
    #[arg(long = "M", default_value_t = 1000)]
    pub resamples: usize,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "grid")]
    pub design: DesignKindArg,
    /// Grid levels per free coordinate.
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    /// Latin hypercube runs.
    #[arg(long, default_value_t = 30)]
    pub runs: usize,
    /// Same as `--design center`.
    #[arg(long)]
    pub center_only: bool,
    /// Null hypothesis `target <= bound` (normal-mean, binomial).
    #[arg(long)]
    pub null_upper: Option<f64>,
    /// Known standard deviation (normal-mean).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Penalty level (hdreg); defaults to `4 sqrt(ln p / n)`.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// JSON record destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl CommonArgs {
    fn design_spec(&self) -> DesignSpec {
        match (self.center_only, self.design) {
            (true, _) | (_, DesignKindArg::Center) => DesignSpec::CenterOnly,
            (_, DesignKindArg::Grid) => DesignSpec::Grid { levels: self.levels },
            (_, DesignKindArg::Lhd) => DesignSpec::Lhd { runs: self.runs },
        }
    }

    fn check(&self) -> Result<()> {
        if self.resamples == 0 {
            return Err(CliError::Input("--M must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(CliError::Input(format!("--delta must be positive, got {}", self.delta)));
        }
        if self.levels == 0 || self.runs == 0 {
            return Err(CliError::Input("designs need at least one point".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// bootstrap, lot-nb, lot-is-design, lot-is-refined or lot-exact.
    #[arg(long, default_value = "lot-nb")]
    pub method: Method,
    /// Adds the decision `p < alpha` to the record.
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CiArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// bootstrap, m-out-of-n, loci-nb or loci-is.
    #[arg(long, default_value = "loci-nb")]
    pub method: Method,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "two-sided")]
    pub side: SideArg,
    /// Subsample size for m-out-of-n; defaults to `floor(2 sqrt(n))`.
    #[arg(long)]
    pub subsample: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Upper,
    Lower,
    TwoSided,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Side {
        match s {
            SideArg::Upper => Side::Upper,
            SideArg::Lower => Side::Lower,
            SideArg::TwoSided => Side::TwoSided,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Experiment config, TOML or JSON.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long = "M")]
    pub resamples: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Replaces the configured method list; repeat or separate with commas.
    #[arg(long, value_delimiter = ',')]
    pub method: Vec<Method>,
    /// Output stem for the CSV and JSON files.
    #[arg(long, default_value = "loci-report")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[arg(long, value_enum, default_value = "grid")]
    pub kind: DesignKindArg,
    /// Number of coordinates.
    #[arg(long)]
    pub dim: usize,
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    #[arg(long, default_value_t = 30)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write to a file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs a parsed command, writing the headline result to `stdout` and
/// diagnostics to `stderr`.
pub fn run(cli: Cli, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> Result<()> {
    if cli.threads == Some(0) {
        return Err(CliError::Input("--threads must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Numeric(format!("thread pool: {e}")))?;
    let verbose = cli.verbose;
    pool.install(|| match cli.command {
        Command::Test(a) => cmd_test(&a, verbose, stdout, stderr),
        Command::Ci(a) => cmd_ci(&a, verbose, stdout, stderr),
        Command::Simulate(a) => cmd_simulate(&a, cli.threads, stdout, stderr),
        Command::Designs(a) => cmd_designs(&a, stdout),
    })
}

fn io(e: std::io::Error) -> CliError {
    CliError::Numeric(format!("write failed: {e}"))
}

fn write_record(path: &Path, record: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(record).map_err(|e| CliError::Numeric(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn report_warnings(warnings: &[String], verbose: u8, stderr: &mut (dyn Write + Send)) -> Result<()> {
    if verbose > 0 {
        for w in warnings {
            writeln!(stderr, "warning: {w}").map_err(io)?;
        }
    }
    Ok(())
}

/// Something to do with a loaded model and its data.
trait Task {
    type Output;
    fn apply<M: Model<f64>>(self, model: &M, data: &M::Data) -> Result<Self::Output>;
}

fn with_model<T: Task>(a: &CommonArgs, task: T) -> Result<T::Output> {
    let table = Table::read(&a.data)?;
    match a.model {
        ModelId::Multinomial => {
            let counts = data::multinomial(&table)?;
            task.apply(&MultinomialModel::new(counts.counts.len())?, &counts)
        }
        ModelId::Weibull => task.apply(&WeibullModel, &data::weibull(&table)?),
        ModelId::Hdreg => {
            let (x, y) = data::hdreg(&table)?;
            let lambda = a.lambda.unwrap_or_else(|| default_lambda(x.nrows(), x.ncols()));
            task.apply(&HdRegModel::with_options(x, lambda, true)?, &y)
        }
        ModelId::Npreg => {
            let (xs, ys) = data::npreg(&table)?;
            let h = default_bandwidth(xs.len());
            task.apply(&NpRegModel::new(NwSmoother::new(xs, h)?), &ys)
        }
        ModelId::NormalMean => {
            let sample = data::normal(&table)?;
            let mut model = match a.sigma {
                Some(s) => NormalMeanModel::known_sigma(s)?,
                None => NormalMeanModel::unknown_sigma(),
            };
            if let Some(b) = a.null_upper {
                model = model.with_null_upper(b);
            }
            task.apply(&model, &sample)
        }
        ModelId::Binomial => {
            let count = data::binomial(&table)?;
            let model = match a.null_upper {
                Some(b) => BinomialModel::with_null_upper(b)?,
                None => BinomialModel::new(),
            };
            task.apply(&model, &count)
        }
    }
}

struct PValueTask<'a>(&'a TestArgs);

impl Task for PValueTask<'_> {
    type Output = (PValueResult<f64>, usize);

    fn apply<M: Model<f64>>(self, model: &M, data: &M::Data) -> Result<Self::Output> {
        let a = &self.0.common;
        let streams = Streams::new(a.seed);
        if self.0.method == Method::Bootstrap {
            return Ok((bootstrap_pvalue(model, data, a.resamples, &streams)?, 1));
        }
        let (_, region, design) = try_design(model, data, a.design_spec(), a.delta, a.seed)?;
        let r = match self.0.method {
            Method::LotNb => nb_pvalue(model, data, &design, a.resamples, &streams)?,
            Method::LotIsDesign => is_pvalue_design(model, data, &design, a.resamples, &streams)?,
            Method::LotIsRefined => {
                is_pvalue_refined(model, data, &region, &design, a.resamples, &streams, RefineOptions::default())?
            }
            m => return Err(CliError::Input(format!("{m} is not a test method"))),
        };
        Ok((r, design.len()))
    }
}

struct IntervalTask<'a>(&'a CiArgs);

impl Task for IntervalTask<'_> {
    type Output = (CiResult<f64>, usize);

    fn apply<M: Model<f64>>(self, model: &M, data: &M::Data) -> Result<Self::Output> {
        let CiArgs { common: a, method, alpha, side, subsample } = self.0;
        let streams = Streams::new(a.seed);
        let side = Side::from(*side);
        match method {
            Method::Bootstrap => Ok((bootstrap_ci(model, data, a.resamples, &streams, *alpha, side)?, 1)),
            Method::MOutOfN => {
                let n = model.sample_size(data);
                let m = subsample.unwrap_or_else(|| default_m(n));
                if m == 0 || m > n {
                    return Err(CliError::Input(format!("--subsample must lie in 1..={n}, got {m}")));
                }
                Ok((m_out_of_n_ci(model, data, m, a.resamples, &streams, *alpha, side)?, 1))
            }
            Method::LociNb | Method::LociIs => {
                let (_, _, design) = try_design(model, data, a.design_spec(), a.delta, a.seed)?;
                let r = if *method == Method::LociNb {
                    nb_ci(model, data, &design, a.resamples, &streams, *alpha, side)?
                } else {
                    is_ci_upper(model, data, &design, a.resamples, &streams, 1.0 - alpha)?
                };
                Ok((r, design.len()))
            }
            m => Err(CliError::Input(format!("{m} is not an interval method"))),
        }
    }
}

fn design_json(a: &CommonArgs) -> serde_json::Value {
    serde_json::to_value(a.design_spec()).unwrap_or(serde_json::Value::Null)
}

fn model_name(m: ModelId) -> String {
    m.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
}

/// JSON record of a `test` run (without writing it anywhere).
pub fn test_record(a: &TestArgs, result: &impl Serialize) -> serde_json::Value {
    let c = &a.common;
    let mut v = json!({
        "command": "test",
        "model": model_name(c.model),
        "method": a.method.name(),
        "seed": c.seed,
        "M": c.resamples,
        "delta": c.delta,
        "design": design_json(c),
        "result": result,
    });
    if let Some(alpha) = a.alpha {
        v["alpha"] = json!(alpha);
    }
    v
}

fn cmd_test(a: &TestArgs, verbose: u8, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> Result<()> {
    a.common.check()?;
    if let Some(alpha) = a.alpha {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CliError::Input(format!("--alpha must lie in (0,1), got {alpha}")));
        }
    }
    let (p, record) = if a.method == Method::LotExact {
        if a.common.model != ModelId::Binomial {
            return Err(CliError::Input("lot-exact is only available for the binomial model".into()));
        }
        let count = data::binomial(&Table::read(&a.common.data)?)?;
        let bound = a.common.null_upper.ok_or_else(|| CliError::Input("lot-exact needs --null-upper".into()))?;
        let levels = match a.common.design_spec() {
            DesignSpec::Grid { levels } => levels,
            DesignSpec::Lhd { runs } => runs,
            DesignSpec::CenterOnly => 1,
        };
        let p = BinomialModel::with_null_upper(bound)?.exact_lot_pvalue(&count, a.common.delta, levels)?;
        (p, test_record(a, &json!({ "p": p })))
    } else {
        let (r, points) = with_model(&a.common, PValueTask(a))?;
        if verbose > 0 {
            writeln!(stderr, "{points} try point(s), {} resamples each", a.common.resamples).map_err(io)?;
        }
        report_warnings(&r.warnings, verbose, stderr)?;
        (r.p, test_record(a, &r))
    };
    let mut record = record;
    if let Some(alpha) = a.alpha {
        record["reject"] = json!(p < alpha);
    }
    writeln!(stdout, "{p}").map_err(io)?;
    if let Some(out) = &a.common.out {
        write_record(out, &record)?;
    }
    Ok(())
}

/// JSON record of a `ci` run.
pub fn ci_record(a: &CiArgs, result: &CiResult<f64>) -> serde_json::Value {
    let c = &a.common;
    json!({
        "command": "ci",
        "model": model_name(c.model),
        "method": a.method.name(),
        "seed": c.seed,
        "M": c.resamples,
        "delta": c.delta,
        "alpha": a.alpha,
        "side": Side::from(a.side),
        "design": design_json(c),
        "result": result,
    })
}

fn cmd_ci(a: &CiArgs, verbose: u8, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> Result<()> {
    a.common.check()?;
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(CliError::Input(format!("--alpha must lie in (0,1), got {}", a.alpha)));
    }
    if a.method == Method::LociIs && a.side != SideArg::Upper {
        return Err(CliError::Input("loci-is gives upper limits only; use --side upper".into()));
    }
    let (r, points) = with_model(&a.common, IntervalTask(a))?;
    if verbose > 0 {
        writeln!(stderr, "{points} try point(s), {} resamples each", a.common.resamples).map_err(io)?;
    }
    report_warnings(&r.warnings, verbose, stderr)?;
    writeln!(stdout, "{} {}", r.lower, r.upper).map_err(io)?;
    if let Some(out) = &a.common.out {
        write_record(out, &ci_record(a, &r))?;
    }
    Ok(())
}

/// Loads the config and applies command-line overrides.
pub fn effective_config(a: &SimulateArgs, threads: Option<usize>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_path(&a.config)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(r) = a.reps {
        cfg.reps = r;
    }
    if let Some(m) = a.resamples {
        cfg.resamples = m;
    }
    if let Some(d) = a.delta {
        cfg.delta = d;
    }
    if let Some(al) = a.alpha {
        cfg.alpha = al;
    }
    if !a.method.is_empty() {
        cfg.methods = a.method.clone();
    }
    if threads.is_some() {
        cfg.threads = threads;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_simulate(
    a: &SimulateArgs,
    threads: Option<usize>,
    stdout: &mut (dyn Write + Send),
    stderr: &mut (dyn Write + Send),
) -> Result<()> {
    let cfg = effective_config(a, threads)?;
    let report = run_experiment(&cfg)?;
    let (csv, json) = report.write_files(&a.out)?;
    stdout.write_all(report.csv_string()?.as_bytes()).map_err(io)?;
    writeln!(
        stderr,
        "wrote {} and {} ({} skipped, {:.1}s)",
        csv.display(),
        json.display(),
        report.skipped.len(),
        report.wall_time_secs
    )
    .map_err(io)?;
    Ok(())
}

fn cmd_designs(a: &DesignArgs, stdout: &mut (dyn Write + Send)) -> Result<()> {
    let d: UnitDesign<f64> = match a.kind {
        DesignKindArg::Grid => grid_design(a.levels, a.dim)?,
        DesignKindArg::Lhd => lhd_design(a.runs, a.dim, a.seed)?,
        DesignKindArg::Center => UnitDesign::empty(a.dim),
    };
    match &a.out {
        Some(path) => {
            let f = std::fs::File::create(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            d.write_csv(f, None)?;
        }
        None => d.write_csv(stdout, None)?,
    }
    Ok(())
}
