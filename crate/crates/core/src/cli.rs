//! The `fracfit` command line.
//!
//! Exit codes: 0 success, 2 usage, 3 data or I/O, 4 kernel domain or model
//! evaluation, 5 optimizer failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::dataio::{self, DataError, DatasetManifest};
use crate::fit::{
    self, AlphaMode, FitConfig, FitError, FitResult, KernelCandidate, TimeSeries,
};
use crate::kernels::Kernel;
use crate::models::{model_eval, ModelError, ModelFamily, ModelParams, ModelSpec};
use crate::specfun::{mittag_leffler, MlEvalConfig, SpecialFnError};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_DOMAIN: i32 = 4;
pub const EXIT_OPTIMIZER: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "fracfit", version, about = "Fit fractional growth, cooling and epidemic models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit one model to a dataset.
    Fit(FitArgs),
    /// Evaluate a fitted (or explicitly given) model at chosen times.
    Eval(EvalArgs),
    /// Predict from a saved result, optionally against an observed value.
    Predict(PredictArgs),
    /// Classical, fractional ψ(x)=x and best-kernel fits side by side.
    Compare(CompareArgs),
    /// Evaluate the Mittag-Leffler function E_α(x).
    Ml(MlArgs),
    /// Write observed and fitted curves as CSV for plotting.
    EmitPlot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum KernelChoice {
    Auto,
    Fixed(Kernel),
}

fn parse_kernel_choice(s: &str) -> Result<KernelChoice, String> {
    if s == "auto" {
        return Ok(KernelChoice::Auto);
    }
    s.parse::<Kernel>().map(KernelChoice::Fixed).map_err(|e| e.to_string())
}

fn parse_kernel(s: &str) -> Result<Kernel, String> {
    s.parse::<Kernel>().map_err(|e| e.to_string())
}

fn parse_alpha(s: &str) -> Result<AlphaMode, String> {
    if s == "free" {
        return Ok(AlphaMode::Free);
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(AlphaMode::Fixed(v)),
        _ => Err(format!("expected `free` or a positive number, got `{s}`")),
    }
}

fn parse_family(s: &str) -> Result<ModelFamily, String> {
    s.parse::<ModelFamily>().map_err(|e| e.to_string())
}

fn parse_manifest(s: &str) -> Result<DatasetManifest, String> {
    DatasetManifest::by_name(s)
        .ok_or_else(|| format!("unknown manifest `{s}` (expected gdp, cooling, bombay or population)"))
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got `{s}`")),
    }
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let v: f64 = value.parse().map_err(|_| format!("`{value}` is not a number"))?;
    Ok((name.trim().to_string(), v))
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Two-column CSV `t,value` (header optional).
    #[arg(long)]
    data: PathBuf,
    /// Check the data against a case-study design: gdp, cooling, bombay, population.
    #[arg(long, value_parser = parse_manifest)]
    manifest: Option<DatasetManifest>,
    #[arg(long, value_parser = parse_family)]
    model: ModelFamily,
    /// Time of the initial condition (default: first data time).
    #[arg(long)]
    origin: Option<f64>,
}

#[derive(Debug, Args)]
struct SearchArgs {
    /// Hold the initial value (S0, T0 or R0) fixed.
    #[arg(long = "fix-init")]
    fix_init: Option<f64>,
    /// Hold the ambient temperature Ta fixed (cooling model).
    #[arg(long)]
    ambient: Option<f64>,
    /// Optimise the kernel shape b instead of using the grid value.
    #[arg(long = "fit-b")]
    fit_b: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..))]
    starts: u64,
    #[arg(long = "max-iters", default_value_t = 2000, value_parser = clap::value_parser!(u64).range(1..))]
    max_iters: u64,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// id, log, pow:b=<v>, sin:b=<v>, or auto to search the default grid.
    #[arg(long, value_parser = parse_kernel_choice)]
    kernel: KernelChoice,
    /// `free` or a fixed order.
    #[arg(long, default_value = "free", value_parser = parse_alpha)]
    alpha: AlphaMode,
    #[command(flatten)]
    search: SearchArgs,
    /// Saved classical fit; its error is used to report Efficiency.
    #[arg(long)]
    baseline: Option<PathBuf>,
    /// Write the result as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the JSON result instead of the table row.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Candidate kernels for the third row (default: the auto grid).
    #[arg(long = "kernel", value_parser = parse_kernel, value_delimiter = ',')]
    kernels: Vec<Kernel>,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Saved result to evaluate.
    #[arg(long, conflicts_with_all = ["model", "kernel", "alpha", "param"])]
    result: Option<PathBuf>,
    #[arg(long, value_parser = parse_family, requires = "param")]
    model: Option<ModelFamily>,
    #[arg(long, value_parser = parse_kernel, default_value = "id")]
    kernel: Kernel,
    #[arg(long, value_parser = parse_positive, default_value_t = 1.0)]
    alpha: f64,
    /// Parameter value, e.g. `--param k=0.05`; repeat for each parameter.
    #[arg(long = "param", value_parser = parse_param)]
    param: Vec<(String, f64)>,
    #[arg(long, default_value_t = 0.0)]
    origin: f64,
    /// Comma-separated evaluation times.
    #[arg(long, value_delimiter = ',', required = true)]
    t: Vec<f64>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    result: PathBuf,
    #[arg(long)]
    t: f64,
    /// Observed value; prints the absolute prediction error.
    #[arg(long)]
    actual: Option<f64>,
    /// Evaluate closed-form models past the kernel's increasing branch.
    #[arg(long = "allow-extrapolation")]
    allow_extrapolation: bool,
}

#[derive(Debug, Args)]
struct MlArgs {
    #[arg(long, value_parser = parse_positive)]
    alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    x: f64,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long)]
    result: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    /// Output CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }
}

fn model_code(e: &ModelError) -> i32 {
    match e.root() {
        ModelError::InvalidParams(_) | ModelError::FamilyMismatch { .. } | ModelError::UnknownFamily(_) => {
            EXIT_DATA
        }
        ModelError::Special(SpecialFnError::NonConvergence { .. }) => EXIT_OPTIMIZER,
        _ => EXIT_DOMAIN,
    }
}

impl From<FitError> for Failure {
    fn from(e: FitError) -> Self {
        let code = match &e {
            FitError::InvalidData(_) | FitError::EfficiencyUndefined(_) => EXIT_DATA,
            FitError::InvalidConfig(_) => EXIT_USAGE,
            FitError::Domain(_) | FitError::Kernel(_) => EXIT_DOMAIN,
            FitError::Model(m) => model_code(m),
            FitError::AllStartsFailed { .. } | FitError::NoCandidates { .. } => EXIT_OPTIMIZER,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Series(f) => f.into(),
            other => Failure { code: EXIT_DATA, message: other.to_string() },
        }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure { code: model_code(&e), message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure { code: EXIT_DATA, message: e.to_string() }
    }
}

/// Entry point used by the binary: parses `args` (including the program
/// name) and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let stdout = io::stdout();
    let stderr = io::stderr();
    run(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Like [`main_with_args`], with explicit output streams.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(rendered.as_bytes());
            } else {
                let _ = err.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Fit(a) => cmd_fit(a, out, err),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Predict(a) => cmd_predict(a, out),
        Command::Compare(a) => cmd_compare(a, out, err),
        Command::Ml(a) => cmd_ml(a, out),
        Command::EmitPlot(a) => cmd_emit_plot(a, out),
    };
    match outcome {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn search_config(family: ModelFamily, alpha: AlphaMode, s: &SearchArgs) -> Result<FitConfig, Failure> {
    let mut cfg = FitConfig {
        alpha,
        fit_shape: s.fit_b,
        seed: s.seed,
        starts: s.starts as usize,
        max_iters: s.max_iters as usize,
        ..FitConfig::default()
    };
    if let Some(v) = s.fix_init {
        cfg = cfg.pin(family.param_names()[0], v);
    }
    if let Some(v) = s.ambient {
        if family != ModelFamily::NewtonCooling {
            return Err(Failure::usage("--ambient only applies to --model cooling"));
        }
        cfg = cfg.pin("Ta", v);
    }
    Ok(cfg)
}

fn load_data(a: &DataArgs) -> Result<TimeSeries, Failure> {
    Ok(dataio::load_csv(&a.data, a.manifest.as_ref())?)
}

fn template(a: &DataArgs, data: &TimeSeries, kernel: Kernel) -> ModelSpec {
    ModelSpec { origin: a.origin.unwrap_or(data.t_min()), ..ModelSpec::new(a.model, kernel, 1.0) }
}

fn grid_for(kernels: &[Kernel], fit_b: bool) -> Vec<KernelCandidate> {
    if kernels.is_empty() {
        return KernelCandidate::default_grid()
            .into_iter()
            .map(|c| KernelCandidate { fit_shape: fit_b, ..c })
            .collect();
    }
    kernels.iter().map(|&kernel| KernelCandidate { kernel, fit_shape: fit_b }).collect()
}

fn report_skipped(sel: &fit::Selection, err: &mut dyn Write) {
    for s in &sel.skipped {
        let _ = writeln!(err, "note: skipped {}: {}", s.kernel, s.reason);
    }
}

fn cmd_fit(a: FitArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let cfg = search_config(a.data.model, a.alpha, &a.search)?;
    let baseline = a.baseline.as_deref().map(dataio::load_stored).transpose()?;
    let data = load_data(&a.data)?;
    let result = match a.kernel {
        KernelChoice::Fixed(k) => fit::fit(&template(&a.data, &data, k), &data, &cfg)?,
        KernelChoice::Auto => {
            let sel = fit::select_kernel(
                &template(&a.data, &data, Kernel::Identity),
                &data,
                &grid_for(&[], a.search.fit_b),
                &cfg,
            )?;
            report_skipped(&sel, err);
            if !a.json {
                writeln!(out, "{:<12} {:>12} {:>16}", "kernel", "alpha", "Error")?;
                for r in &sel.ranked {
                    writeln!(out, "{:<12} {:>12.6} {:>16.6}", r.spec.kernel.to_string(), r.alpha(), r.error)?;
                }
                writeln!(out)?;
            }
            sel.ranked.into_iter().next().expect("selection is non-empty")
        }
    };
    let efficiency = baseline.map(|b| fit::efficiency(b.result.error, result.error)).transpose()?;
    for w in result.params.warnings() {
        let _ = writeln!(err, "warning: {w}");
    }
    if a.json {
        out.write_all(dataio::result_to_json(&result, efficiency).as_bytes())?;
    } else {
        out.write_all(result_row(&result, efficiency).as_bytes())?;
    }
    if let Some(path) = &a.out {
        dataio::save_result_with(&result, efficiency, path)?;
    }
    Ok(())
}

fn result_row(r: &FitResult, efficiency: Option<f64>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<11} {}", "model", r.spec.family);
    let _ = writeln!(s, "{:<11} {}", "kernel", r.spec.kernel);
    let _ = writeln!(s, "{:<11} {:.6}", "alpha", r.alpha());
    for (name, v) in r.spec.family.param_names().iter().zip(r.params.to_vec()) {
        let _ = writeln!(s, "{name:<11} {v:.6}");
    }
    let _ = writeln!(s, "{:<11} {:.6}", "Error", r.error);
    if let Some(e) = efficiency {
        let _ = writeln!(s, "{:<11} {:.6}%", "Efficiency", e);
    }
    let _ = writeln!(s, "{:<11} {} ({} iterations)", "converged", r.converged, r.iterations);
    s
}

fn cmd_compare(a: CompareArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let fractional_cfg = search_config(a.data.model, AlphaMode::Free, &a.search)?;
    let classical_cfg = FitConfig { alpha: AlphaMode::Fixed(1.0), fit_shape: false, ..fractional_cfg.clone() };
    let data = load_data(&a.data)?;
    let id = template(&a.data, &data, Kernel::Identity);

    let classical = fit::fit(&id, &data, &classical_cfg)?;
    let frac_id = fit::fit(&id, &data, &fractional_cfg)?;
    let sel = fit::select_kernel(&id, &data, &grid_for(&a.kernels, a.search.fit_b), &fractional_cfg)?;
    report_skipped(&sel, err);
    let best = sel.best();

    let names = a.data.model.param_names();
    let mut header = format!("{:<11} {:<12} {:>10}", "model", "kernel", "alpha");
    for n in names {
        let _ = write!(header, " {n:>14}");
    }
    let _ = write!(header, " {:>16} {:>12}", "Error", "Efficiency");
    writeln!(out, "{header}")?;
    for (i, (label, r)) in [("classical", &classical), ("fractional", &frac_id), ("fractional", best)]
        .into_iter()
        .enumerate()
    {
        let mut line = format!("{label:<11} {:<12} {:>10.6}", r.spec.kernel.to_string(), r.alpha());
        for v in r.params.to_vec() {
            let _ = write!(line, " {v:>14.6}");
        }
        let eff = if i == 0 {
            "-".to_string()
        } else {
            match fit::efficiency(classical.error, r.error) {
                Ok(e) => format!("{e:.6}%"),
                Err(_) => "n/a".to_string(),
            }
        };
        let _ = write!(line, " {:>16.6} {eff:>12}", r.error);
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn cmd_eval(a: EvalArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let (spec, params) = match (&a.result, a.model) {
        (Some(path), _) => {
            let r = dataio::load_result(path)?;
            (r.spec, r.params)
        }
        (None, Some(family)) => {
            let mut values = Vec::new();
            for name in family.param_names() {
                let v = a
                    .param
                    .iter()
                    .find(|(n, _)| n == name)
                    .map(|p| p.1)
                    .ok_or_else(|| Failure::usage(format!("missing --param {name}=<value> for {family}")))?;
                values.push(v);
            }
            if let Some((extra, _)) = a.param.iter().find(|(n, _)| !family.param_names().contains(&n.as_str())) {
                return Err(Failure::usage(format!("unknown parameter `{extra}` for {family}")));
            }
            let params = ModelParams::from_slice(family, &values)?;
            (ModelSpec { family, kernel: a.kernel, alpha: a.alpha, origin: a.origin }, params)
        }
        (None, None) => return Err(Failure::usage("give either --result or --model with --param values")),
    };
    writeln!(out, "t,value")?;
    for &t in &a.t {
        let v = model_eval(&spec, &params, t)?;
        writeln!(out, "{t},{v}")?;
    }
    Ok(())
}

fn cmd_predict(a: PredictArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let r = dataio::load_result(&a.result)?;
    let predicted = if a.allow_extrapolation {
        fit::predict_extrapolated(&r, a.t)?
    } else {
        fit::predict(&r, a.t)?
    };
    writeln!(out, "{:<10} {}", "t", a.t)?;
    writeln!(out, "{:<10} {predicted:.6}", "predicted")?;
    if let Some(actual) = a.actual {
        writeln!(out, "{:<10} {actual}", "actual")?;
        writeln!(out, "{:<10} {:.6}", "error", fit::prediction_error(predicted, actual))?;
    }
    Ok(())
}

fn cmd_ml(a: MlArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let v = mittag_leffler(a.alpha, a.x, &MlEvalConfig::default()).map_err(|e| {
        let code = match e {
            SpecialFnError::NonConvergence { .. } => EXIT_OPTIMIZER,
            _ => EXIT_DOMAIN,
        };
        Failure { code, message: e.to_string() }
    })?;
    writeln!(out, "{v}")?;
    Ok(())
}

fn cmd_emit_plot(a: PlotArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let r = dataio::load_result(&a.result)?;
    let data = dataio::load_csv(&a.data, None)?;
    let text = plot_csv(&r, &data, a.samples as usize)?;
    match &a.out {
        Some(path) => write_file(path, &text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)
        .map_err(|e| Failure { code: EXIT_DATA, message: format!("{}: {e}", path.display()) })
}

/// Sample rows over the data window followed by one row per data point. The
/// epidemic model also gets per-step increments R(t) − R(t − 1), i.e. deaths
/// per week for weekly data.
pub fn plot_csv(r: &FitResult, data: &TimeSeries, samples: usize) -> Result<String, ModelError> {
    let increments = r.spec.family == ModelFamily::EpidemicCoshSq;
    let eval = |t: f64| model_eval(&r.spec, &r.params, t);
    let step = |t: f64| -> Result<Option<f64>, ModelError> {
        if t - 1.0 >= r.spec.origin {
            Ok(Some(eval(t)? - eval(t - 1.0)?))
        } else {
            Ok(None)
        }
    };
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    let mut s = String::from("kind,t,observed,fitted");
    if increments {
        s.push_str(",observed_increment,fitted_increment");
    }
    s.push('\n');
    let (lo, hi) = (data.t_min(), data.t_max());
    for i in 0..samples {
        let t = if samples == 1 { lo } else { lo + (hi - lo) * i as f64 / (samples - 1) as f64 };
        let _ = write!(s, "sample,{t},,{}", eval(t)?);
        if increments {
            let _ = write!(s, ",,{}", opt(step(t)?));
        }
        s.push('\n');
    }
    let (ts, ys) = (data.times(), data.values());
    for i in 0..data.len() {
        let _ = write!(s, "data,{},{},{}", ts[i], ys[i], eval(ts[i])?);
        if increments {
            let observed = (i > 0 && ts[i] - ts[i - 1] == 1.0).then(|| ys[i] - ys[i - 1]);
            let _ = write!(s, ",{},{}", opt(observed), opt(step(ts[i])?));
        }
        s.push('\n');
    }
    Ok(s)
}
