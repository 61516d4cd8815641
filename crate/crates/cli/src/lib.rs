//! `lppl` command-line interface.
//!
//! Exit codes: 0 success, 1 domain error, 2 usage error. Errors are written
//! to stderr as one JSON object per line.

pub mod overlay;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use lppl_core::model::{self, DividendModel, GrowthSpec, LpplParams};
use lppl_core::numfmt::{fmt_sig, round_json};
use lppl_core::synth::{Grid, Regime, SynthSpec};
use lppl_core::timeseries::parse_time;
use lppl_core::{FitResult, LoadOptions, PriceSeries, ScanConfig};

#[derive(Debug, Parser)]
#[command(name = "lppl", version, about = "Log-periodic power law bubble diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Calibrate one window and print the fit as JSON.
    Fit(FitArgs),
    /// Scan rolling windows and write report.json and report.csv.
    Scan(ScanArgs),
    /// Generate a synthetic series plus a ground-truth sidecar.
    Synth(SynthArgs),
    /// Gordon-Shapiro price D / (r - g).
    Price(PriceArgs),
    /// Doubling cascade table with its finite-time singularity.
    Cascade(CascadeArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// CSV file with a header row.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Time column (defaults to `date`, then `time`).
    #[arg(long)]
    pub time_col: Option<String>,
    #[arg(long, default_value = "price")]
    pub price_col: String,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Settings file of key=value lines; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Filter and search overrides, e.g. `--filters m_max=0.9 starts=30`.
    #[arg(long, num_args = 1.., value_name = "K=V")]
    pub filters: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Upper bound on concurrent fits.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Window start (ISO date or number).
    #[arg(long, allow_hyphen_values = true)]
    pub t1: String,
    /// Window end (ISO date or number).
    #[arg(long, allow_hyphen_values = true)]
    pub t2: String,
    #[arg(long, default_value_t = lppl_core::timeseries::DEFAULT_MIN_POINTS)]
    pub min_points: usize,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Write the JSON here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated window lengths in time units.
    #[arg(long)]
    pub windows: Option<String>,
    /// Scan every k-th observation.
    #[arg(long)]
    pub every: Option<usize>,
    /// Lower and upper quantile probabilities of the critical-time band.
    #[arg(long)]
    pub band: Option<String>,
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RegimeKind {
    Lppl,
    Exp,
    Logistic,
    Hyperbolic,
    Cascade,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub regime: RegimeKind,
    /// Regime parameters, e.g. `tc=220 m=0.5 omega=6.28`.
    #[arg(long, num_args = 1.., value_name = "K=V")]
    pub params: Vec<String>,
    /// Standard deviation of Gaussian log-price noise.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub start: f64,
    #[arg(long, default_value_t = 199.0, allow_hyphen_values = true)]
    pub end: f64,
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV path; the sidecar goes next to it with a `.truth.json` suffix.
    #[arg(long, short, default_value = "synth.csv")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct PriceArgs {
    #[arg(long)]
    pub dividend: f64,
    #[arg(long = "return", allow_hyphen_values = true)]
    pub total_return: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub growth: f64,
}

#[derive(Debug, Args)]
pub struct CascadeArgs {
    #[arg(long)]
    pub p0: f64,
    #[arg(long)]
    pub rate: f64,
    #[arg(long)]
    pub steps: usize,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(lppl_core::Error),
}

impl From<lppl_core::Error> for CliError {
    fn from(e: lppl_core::Error) -> Self {
        CliError::Domain(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            report_error("usage", &msg);
            eprintln!("{}", Cli::command().render_usage());
            2
        }
        Err(CliError::Domain(e)) => {
            report_error(e.kind(), &e.to_string());
            1
        }
    }
}

fn report_error(kind: &str, message: &str) {
    eprintln!("{}", json!({ "error": kind, "message": message }));
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Fit(args) => with_jobs(args.common.jobs, || fit(&args)),
        Command::Scan(args) => with_jobs(args.common.jobs, || scan(&args)),
        Command::Synth(args) => synth(&args),
        Command::Price(args) => price(&args),
        Command::Cascade(args) => cascade(&args),
    }
}

fn with_jobs<F>(jobs: Option<usize>, f: F) -> Result<(), CliError>
where
    F: FnOnce() -> Result<(), CliError> + Send,
{
    match jobs {
        None => f(),
        Some(0) => Err(usage("--jobs must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| usage(format!("thread pool: {e}")))?
            .install(f),
    }
}

fn load_series(input: &InputArgs) -> Result<PriceSeries, CliError> {
    let file = File::open(&input.input).map_err(|e| usage(format!("cannot open {}: {e}", input.input.display())))?;
    let options = LoadOptions {
        time_column: input.time_col.clone(),
        price_column: input.price_col.clone(),
        label: input.input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        strict: false,
    };
    let loaded = lppl_core::load_csv(file, &options)?;
    for row in &loaded.rejected {
        eprintln!("{}", json!({ "warning": "rejected_row", "line": row.line, "message": row.message }));
    }
    Ok(loaded.series)
}

/// Scan settings from defaults, then the config file, then `--filters`.
fn settings(common: &CommonArgs) -> Result<ScanConfig, CliError> {
    let mut cfg = ScanConfig::default();
    if let Some(path) = &common.config {
        let text =
            fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        for (k, v) in overlay::parse_lines(&text).map_err(usage)? {
            overlay::apply_scan(&mut cfg, &k, &v).map_err(usage)?;
        }
    }
    for item in &common.filters {
        let (k, v) = overlay::parse_pair(item).map_err(usage)?;
        overlay::apply_scan(&mut cfg, &k, &v).map_err(usage)?;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn to_pretty(mut value: Value) -> String {
    round_json(&mut value);
    let mut text = serde_json::to_string_pretty(&value).expect("JSON values always serialize");
    text.push('\n');
    text
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Domain(e.into())),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes()).map_err(|e| CliError::Domain(e.into()))
        }
    }
}

/// JSON document for one fit, as documented in the README.
pub fn fit_json(fit: &FitResult, label: &str, seed: u64) -> Value {
    let p = &fit.params;
    json!({
        "label": label,
        "seed": seed,
        "window": {
            "t1": fit.window.t1,
            "t2": fit.window.t2,
            "start": fit.window.start,
            "end": fit.window.end,
        },
        "n_points": fit.n_points,
        "params": {
            "t_c": p.t_c,
            "m": p.m,
            "omega": p.omega,
            "phi": p.phi,
            "a": p.a,
            "b": p.b,
            "c": p.c,
            "c1": p.c1(),
            "c2": p.c2(),
        },
        "scaling_ratio": p.scaling_ratio().ok(),
        "oscillations": fit.oscillations(),
        "oscillation_snr": fit.oscillation_snr(),
        "sse": fit.sse,
        "rmse": fit.rmse,
        "qualified": fit.qualified,
        "sign": fit.sign.as_str(),
        "checks": fit.checks,
        "reasons": fit.reasons(),
    })
}

fn fit(args: &FitArgs) -> Result<(), CliError> {
    let series = load_series(&args.input)?;
    let cfg = settings(&args.common)?;
    cfg.search.validate().map_err(|e| usage(e.to_string()))?;
    cfg.filters.validate().map_err(|e| usage(e.to_string()))?;
    let t1 = parse_time(&args.t1).ok_or_else(|| usage(format!("--t1: cannot parse `{}`", args.t1)))?;
    let t2 = parse_time(&args.t2).ok_or_else(|| usage(format!("--t2: cannot parse `{}`", args.t2)))?;
    let window = series.slice_with_min(t1, t2, args.min_points)?;
    let result = lppl_core::fit_window(&series, &window, &cfg.search, &cfg.filters, cfg.seed)?;
    let text = to_pretty(fit_json(&result, series.label(), cfg.seed));
    write_text(args.output.as_deref(), &text)
}

fn scan(args: &ScanArgs) -> Result<(), CliError> {
    let series = load_series(&args.input)?;
    let mut cfg = settings(&args.common)?;
    if let Some(w) = &args.windows {
        cfg.window_lengths = overlay::list("windows", w).map_err(usage)?;
    }
    if let Some(k) = args.every {
        cfg.every = k;
    }
    if let Some(b) = &args.band {
        cfg.band = overlay::pair("band", b).map_err(usage)?;
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let report = lppl_core::report(&series, &cfg)?;

    fs::create_dir_all(&args.out_dir).map_err(|e| usage(format!("cannot create {}: {e}", args.out_dir.display())))?;
    let value = serde_json::to_value(&report).expect("report serializes");
    fs::write(args.out_dir.join("report.json"), to_pretty(value)).map_err(|e| CliError::Domain(e.into()))?;
    let file = File::create(args.out_dir.join("report.csv")).map_err(|e| CliError::Domain(e.into()))?;
    report.write_csv(BufWriter::new(file))?;
    Ok(())
}

fn param(map: &[(String, String)], key: &str, default: Option<f64>) -> Result<f64, CliError> {
    match map.iter().rev().find(|(k, _)| k == key) {
        Some((_, v)) => v.parse::<f64>().map_err(|_| usage(format!("--params {key}: `{v}` is not a number"))),
        None => default.ok_or_else(|| usage(format!("--params requires `{key}`"))),
    }
}

fn synth_regime(kind: RegimeKind, params: &[(String, String)]) -> Result<Regime, CliError> {
    let allowed: &[&str] = match kind {
        RegimeKind::Lppl => &["tc", "m", "omega", "phi", "a", "b", "c"],
        RegimeKind::Exp => &["rate", "p0"],
        RegimeKind::Logistic => &["rate", "capacity", "p0"],
        RegimeKind::Hyperbolic => &["tc", "alpha", "scale"],
        RegimeKind::Cascade => &["p0", "rate"],
    };
    if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
        return Err(usage(format!("unknown parameter `{k}`; expected one of {}", allowed.join(", "))));
    }
    let p = |key, default| param(params, key, default);
    Ok(match kind {
        RegimeKind::Lppl => Regime::Lppl {
            params: LpplParams::new(
                p("tc", None)?,
                p("m", Some(0.5))?,
                p("omega", Some(std::f64::consts::TAU))?,
                p("phi", Some(0.0))?,
                p("a", Some(8.0))?,
                p("b", Some(-1.0))?,
                p("c", Some(0.05))?,
            ),
        },
        RegimeKind::Exp => {
            Regime::Growth { spec: GrowthSpec::Exponential { rate: p("rate", None)?, p0: p("p0", Some(100.0))? } }
        }
        RegimeKind::Logistic => Regime::Growth {
            spec: GrowthSpec::Logistic {
                rate: p("rate", None)?,
                capacity: p("capacity", None)?,
                p0: p("p0", Some(1.0))?,
            },
        },
        RegimeKind::Hyperbolic => Regime::Growth {
            spec: GrowthSpec::Hyperbolic {
                t_c: p("tc", None)?,
                alpha: p("alpha", Some(1.0))?,
                scale: p("scale", Some(1.0))?,
            },
        },
        RegimeKind::Cascade => Regime::Cascade { p0: p("p0", Some(2.0))?, r0: p("rate", None)? },
    })
}

/// `out.csv` -> `out.truth.json`
pub fn sidecar_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    csv.with_file_name(format!("{stem}.truth.json"))
}

fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let mut params = Vec::with_capacity(args.params.len());
    for item in &args.params {
        params.push(overlay::parse_pair(item).map_err(usage)?);
    }
    let regime = synth_regime(args.regime, &params)?;
    let spec = SynthSpec {
        regime,
        grid: Grid { start: args.start, end: args.end, step: args.step },
        noise_sigma: args.noise,
        seed: args.seed.unwrap_or(lppl_core::DEFAULT_SEED),
    };
    let generated = lppl_core::generate(&spec)?;
    let mut csv = Vec::new();
    lppl_core::save_csv(&generated.series, &mut csv)?;
    fs::write(&args.output, csv).map_err(|e| CliError::Domain(e.into()))?;
    let truth = serde_json::to_value(generated.truth).expect("spec serializes");
    fs::write(sidecar_path(&args.output), to_pretty(truth)).map_err(|e| CliError::Domain(e.into()))?;
    Ok(())
}

fn price(args: &PriceArgs) -> Result<(), CliError> {
    let dm = DividendModel { d: args.dividend, r: args.total_return, g: args.growth };
    let p = model::gordon_shapiro_price(&dm)?;
    println!("{}", fmt_sig(p));
    Ok(())
}

fn cascade(args: &CascadeArgs) -> Result<(), CliError> {
    let rows = model::cascade(args.p0, args.rate, args.steps)?;
    let mut text = String::from("time,population,rate,doubling_time\n");
    for r in &rows {
        text.push_str(&format!(
            "{},{},{},{}\n",
            fmt_sig(r.time),
            fmt_sig(r.population),
            fmt_sig(r.rate),
            fmt_sig(r.doubling_time)
        ));
    }
    write_text(args.output.as_deref(), &text)
}
