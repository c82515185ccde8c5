//! Least-squares fitting, kernel selection and the Error/Efficiency metrics.
//!
//! Every model family is linear in its initial value and amplitude (S0 and k
//! for linear growth, S0 for exponential growth, T0 and Ta for cooling, R0 and
//! A for the epidemic). Those are solved exactly, within their bounds, for
//! each trial of the remaining nonlinear parameters (rates, B, C, α and
//! optionally the kernel shape b). The nonlinear search is a latin-hypercube
//! multi-start Nelder–Mead in logistic coordinates followed by a
//! Levenberg–Marquardt polish of the best start.

mod optim;

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::kernels::{DomainViolation, Kernel, KernelError, KernelFamily};
use crate::models::{
    epidemic_basis, model_eval, model_eval_extrapolated, model_eval_series, ModelError, ModelFamily,
    ModelParams, ModelSpec,
};

use optim::{bounded_lstsq, levenberg_marquardt, nelder_mead};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("invalid fit configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Domain(#[from] DomainViolation),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("all {starts} optimizer starts failed to produce a finite error")]
    AllStartsFailed { starts: usize },
    #[error("efficiency is undefined when the classical error is {0}")]
    EfficiencyUndefined(f64),
    #[error("no admissible kernel candidate ({skipped} skipped)")]
    NoCandidates { skipped: usize },
}

/// Observed points `(t̃ᵢ, ỹᵢ)` with strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    t: Vec<f64>,
    y: Vec<f64>,
    pub label: Option<String>,
    pub unit: Option<String>,
}

impl TimeSeries {
    pub fn new(t: Vec<f64>, y: Vec<f64>) -> Result<Self, FitError> {
        if t.len() != y.len() {
            return Err(FitError::InvalidData(format!(
                "{} times but {} values",
                t.len(),
                y.len()
            )));
        }
        if t.len() < 2 {
            return Err(FitError::InvalidData("at least two points are required".into()));
        }
        for (i, (ti, yi)) in t.iter().zip(&y).enumerate() {
            if !ti.is_finite() || !yi.is_finite() {
                return Err(FitError::InvalidData(format!("non-finite value at point {i}")));
            }
            if i > 0 && *ti <= t[i - 1] {
                return Err(FitError::InvalidData(format!(
                    "times must be strictly increasing (point {i}: {ti} after {})",
                    t[i - 1]
                )));
            }
        }
        Ok(TimeSeries { t, y, label: None, unit: None })
    }

    pub fn from_points(points: &[(f64, f64)]) -> Result<Self, FitError> {
        TimeSeries::new(points.iter().map(|p| p.0).collect(), points.iter().map(|p| p.1).collect())
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn t_min(&self) -> f64 {
        self.t[0]
    }

    pub fn t_max(&self) -> f64 {
        self.t[self.t.len() - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaMode {
    Fixed(f64),
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub alpha: AlphaMode,
    /// Optimise the kernel shape b continuously instead of keeping the
    /// template's value.
    pub fit_shape: bool,
    /// Linear parameters held at a given value instead of fitted, by name
    /// (`S0`, `T0`, `Ta`, `R0`, `A`, and `k` of linear growth).
    pub pinned: BTreeMap<String, f64>,
    /// Box overrides keyed by parameter name (`k`, `alpha`, `b`, `A`, ...).
    pub bounds: BTreeMap<String, (f64, f64)>,
    pub starts: usize,
    pub max_iters: usize,
    pub x_tol: f64,
    pub f_tol: f64,
    pub seed: u64,
    pub polish: bool,
    pub parallel: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            alpha: AlphaMode::Free,
            fit_shape: false,
            pinned: BTreeMap::new(),
            bounds: BTreeMap::new(),
            starts: 32,
            max_iters: 2000,
            x_tol: 1e-10,
            f_tol: 1e-12,
            seed: 0,
            polish: true,
            parallel: true,
        }
    }
}

impl FitConfig {
    /// Holds the linear parameter `name` at `value`.
    pub fn pin(mut self, name: &str, value: f64) -> Self {
        self.pinned.insert(name.to_string(), value);
        self
    }

    pub fn validate(&self) -> Result<(), FitError> {
        let bad = |m: String| Err(FitError::InvalidConfig(m));
        if self.starts < 1 {
            return bad("starts must be at least 1".into());
        }
        if self.max_iters < 1 {
            return bad("max_iters must be at least 1".into());
        }
        if !(self.x_tol > 0.0) || !(self.f_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if let AlphaMode::Fixed(a) = self.alpha {
            if !(a > 0.0) || !a.is_finite() {
                return bad(format!("fixed alpha must be positive, got {a}"));
            }
        }
        for (name, v) in &self.pinned {
            if !v.is_finite() {
                return bad(format!("pinned {name} must be finite, got {v}"));
            }
        }
        for (name, (lo, hi)) in &self.bounds {
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return bad(format!("bounds for {name} need lower < upper, got [{lo}, {hi}]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Fitted specification: kernel (with b) and α.
    pub spec: ModelSpec,
    pub params: ModelParams,
    /// Sum of squared residuals, recomputed with [`sse`].
    pub error: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `ỹᵢ − F(t̃ᵢ)` at the data points.
    pub residuals: Vec<f64>,
    pub seed: u64,
    /// Number of fitted (not pinned) parameters, counting α and b when free.
    pub free_params: usize,
}

impl FitResult {
    pub fn alpha(&self) -> f64 {
        self.spec.alpha
    }

    pub fn b(&self) -> Option<f64> {
        self.spec.kernel.shape()
    }
}

/// Error = Σᵢ (ỹᵢ − F(t̃ᵢ))².
pub fn sse(spec: &ModelSpec, p: &ModelParams, data: &TimeSeries) -> Result<f64, FitError> {
    let fitted = model_eval_series(spec, p, data.times())?;
    Ok(fitted.iter().zip(data.values()).map(|(f, y)| (y - f).powi(2)).sum())
}

/// `(Error_C − Error_F) / Error_C × 100`.
pub fn efficiency(error_classical: f64, error_fractional: f64) -> Result<f64, FitError> {
    if !(error_classical > 0.0) || !error_classical.is_finite() {
        return Err(FitError::EfficiencyUndefined(error_classical));
    }
    Ok((error_classical - error_fractional) / error_classical * 100.0)
}

/// Model value of a fitted result at `t`.
pub fn predict(result: &FitResult, t: f64) -> Result<f64, FitError> {
    Ok(model_eval(&result.spec, &result.params, t)?)
}

/// Like [`predict`], but allows closed-form families to continue past the
/// kernel's increasing branch.
pub fn predict_extrapolated(result: &FitResult, t: f64) -> Result<f64, FitError> {
    Ok(model_eval_extrapolated(&result.spec, &result.params, t)?)
}

pub fn prediction_error(predicted: f64, actual: f64) -> f64 {
    (actual - predicted).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Rate,
    EpidemicB,
    EpidemicC,
    Alpha,
    Shape,
}

impl Slot {
    fn name(self) -> &'static str {
        match self {
            Slot::Rate => "k",
            Slot::EpidemicB => "B",
            Slot::EpidemicC => "C",
            Slot::Alpha => "alpha",
            Slot::Shape => "b",
        }
    }
}

/// Search space of one fit: nonlinear slots with their boxes and the linear
/// coefficients solved per trial.
struct Problem<'a> {
    template: ModelSpec,
    data: &'a TimeSeries,
    slots: Vec<(Slot, f64, f64)>,
    /// Value of each linear parameter when pinned, in family order.
    linear_pins: Vec<Option<f64>>,
    linear_lo: Vec<f64>,
    linear_hi: Vec<f64>,
}

/// Parameters that enter the model linearly, in parameter-vector order.
fn linear_names(family: ModelFamily) -> &'static [&'static str] {
    match family {
        ModelFamily::LinearGrowth => &["S0", "k"],
        ModelFamily::ExponentialGrowth => &["S0"],
        ModelFamily::NewtonCooling => &["T0", "Ta"],
        ModelFamily::EpidemicCoshSq => &["R0", "A"],
    }
}

fn default_box(name: &str, family: ModelFamily, data: &TimeSeries, kernel: &Kernel, origin: f64) -> (f64, f64) {
    let inf = f64::INFINITY;
    let ymax = data.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    match name {
        "k" if family == ModelFamily::LinearGrowth => (-inf, inf),
        "k" => (-10.0, 10.0),
        "alpha" => (0.05, 6.0),
        "A" => (0.0, 10.0 * ymax.max(f64::MIN_POSITIVE)),
        "B" => (0.0, 2.0),
        "C" => (-20.0, 20.0),
        "b" => match kernel.family() {
            KernelFamily::ScaledSine => {
                let reach = origin.abs().max(data.t_max().abs());
                let lo = (reach / FRAC_PI_2) * (1.0 + 1e-9) + f64::MIN_POSITIVE;
                (lo, (10.0 * lo).max(100.0))
            }
            _ => (0.05, 5.0),
        },
        _ => (-inf, inf),
    }
}

impl<'a> Problem<'a> {
    fn new(template: &ModelSpec, data: &'a TimeSeries, cfg: &FitConfig) -> Result<Self, FitError> {
        let family = template.family;
        let origin = template.origin;
        if data.t_min() < origin {
            return Err(FitError::InvalidData(format!(
                "data start at t = {} before the model origin {origin}",
                data.t_min()
            )));
        }
        let shape_free = cfg.fit_shape && template.kernel.family().uses_shape();
        if !shape_free {
            template.kernel.validate_domain(origin, data.t_max())?;
        }
        let bounds = |name: &str| {
            cfg.bounds
                .get(name)
                .copied()
                .unwrap_or_else(|| default_box(name, family, data, &template.kernel, origin))
        };

        let mut slot_kinds = match family {
            ModelFamily::LinearGrowth => vec![],
            ModelFamily::ExponentialGrowth | ModelFamily::NewtonCooling => vec![Slot::Rate],
            ModelFamily::EpidemicCoshSq => vec![Slot::EpidemicB, Slot::EpidemicC],
        };
        if cfg.alpha == AlphaMode::Free {
            slot_kinds.push(Slot::Alpha);
        }
        if shape_free {
            slot_kinds.push(Slot::Shape);
        }
        let mut slots = Vec::new();
        for s in slot_kinds {
            let (lo, hi) = bounds(s.name());
            if !lo.is_finite() || !hi.is_finite() {
                return Err(FitError::InvalidConfig(format!("{} needs a finite box", s.name())));
            }
            slots.push((s, lo, hi));
        }
        if shape_free {
            let (lo, hi) = slots.last().map(|s| (s.1, s.2)).unwrap_or((0.0, 0.0));
            if !(lo > 0.0) {
                return Err(FitError::InvalidConfig(format!("b box must be positive, got [{lo}, {hi}]")));
            }
            if template.kernel.family() == KernelFamily::ScaledSine {
                template.kernel.with_shape(lo)?.validate_domain(origin, data.t_max())?;
            }
        }

        let names = linear_names(family);
        if let Some(bad) = cfg.pinned.keys().find(|k| !names.contains(&k.as_str())) {
            return Err(FitError::InvalidConfig(format!(
                "{bad} cannot be pinned for {family} (linear parameters: {})",
                names.join(", ")
            )));
        }
        let linear_pins: Vec<Option<f64>> = names.iter().map(|n| cfg.pinned.get(*n).copied()).collect();
        let (linear_lo, linear_hi) = names
            .iter()
            .zip(&linear_pins)
            .filter(|(_, pin)| pin.is_none())
            .map(|(n, _)| bounds(n))
            .unzip();
        Ok(Problem { template: *template, data, slots, linear_pins, linear_lo, linear_hi })
    }

    fn dim(&self) -> usize {
        self.slots.len()
    }

    fn free_params(&self) -> usize {
        self.slots.len() + self.linear_lo.len()
    }

    /// Spec and nonlinear family parameters for a point of the search space.
    fn decode(&self, theta: &[f64]) -> Result<(ModelSpec, Vec<f64>), FitError> {
        let mut spec = self.template;
        let mut rest = Vec::new();
        for (&(slot, _, _), &v) in self.slots.iter().zip(theta) {
            match slot {
                Slot::Alpha => spec.alpha = v,
                Slot::Shape => spec.kernel = spec.kernel.with_shape(v)?,
                _ => rest.push(v),
            }
        }
        Ok((spec, rest))
    }

    /// Columns of the linear sub-problem and the adjusted target.
    fn columns(&self, spec: &ModelSpec, rest: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<f64>), FitError> {
        let ts = self.data.times();
        let unit = |p: ModelParams| {
            let spec = ModelSpec { family: p.family(), ..*spec };
            model_eval_series(&spec, &p, ts)
        };
        let ones = vec![1.0; ts.len()];
        let cols = match spec.family {
            ModelFamily::LinearGrowth => {
                vec![ones, unit(ModelParams::LinearGrowth { s0: 0.0, k: 1.0 })?]
            }
            ModelFamily::ExponentialGrowth => {
                vec![unit(ModelParams::ExponentialGrowth { s0: 1.0, k: rest[0] })?]
            }
            ModelFamily::NewtonCooling => {
                let e = unit(ModelParams::ExponentialGrowth { s0: 1.0, k: rest[0] })?;
                let complement = e.iter().map(|v| 1.0 - v).collect();
                vec![e, complement]
            }
            ModelFamily::EpidemicCoshSq => {
                let (b, c) = (rest[0], rest[1]);
                let basis = ts
                    .iter()
                    .map(|&t| epidemic_basis(spec, b, c, t))
                    .collect::<Result<Vec<_>, _>>()?;
                vec![ones, basis]
            }
        };
        let mut target = self.data.values().to_vec();
        let mut free = Vec::with_capacity(cols.len());
        for (col, pin) in cols.into_iter().zip(&self.linear_pins) {
            match pin {
                Some(v) => {
                    for (y, c) in target.iter_mut().zip(&col) {
                        *y -= v * c;
                    }
                }
                None => free.push(col),
            }
        }
        Ok((free, target))
    }

    /// SSE and linear coefficients at `theta`, or `None` where the model
    /// cannot be evaluated.
    fn solve(&self, theta: &[f64]) -> Option<(f64, Vec<f64>, Vec<f64>)> {
        let (spec, rest) = self.decode(theta).ok()?;
        let (cols, target) = self.columns(&spec, &rest).ok()?;
        let (coef, sse) = bounded_lstsq(&cols, &target, &self.linear_lo, &self.linear_hi)?;
        if !sse.is_finite() {
            return None;
        }
        let residuals = (0..target.len())
            .map(|i| target[i] - cols.iter().zip(&coef).map(|(c, v)| v * c[i]).sum::<f64>())
            .collect();
        Some((sse, coef, residuals))
    }

    fn objective(&self, theta: &[f64]) -> f64 {
        self.solve(theta).map_or(f64::INFINITY, |s| s.0)
    }

    fn params(&self, theta: &[f64]) -> Result<(ModelSpec, ModelParams), FitError> {
        let (spec, rest) = self.decode(theta)?;
        let (_, coef, _) = self
            .solve(theta)
            .ok_or_else(|| FitError::AllStartsFailed { starts: 1 })?;
        let mut coef = coef.into_iter();
        let linear: Vec<f64> = self
            .linear_pins
            .iter()
            .map(|pin| pin.unwrap_or_else(|| coef.next().unwrap_or(f64::NAN)))
            .collect();
        let values = match spec.family {
            ModelFamily::LinearGrowth => linear,
            ModelFamily::ExponentialGrowth | ModelFamily::NewtonCooling => {
                let mut v = linear;
                v.push(rest[0]);
                v
            }
            ModelFamily::EpidemicCoshSq => vec![linear[0], linear[1], rest[0], rest[1]],
        };
        Ok((spec, ModelParams::from_slice(spec.family, &values)?))
    }

    fn to_theta(&self, u: &[f64]) -> Vec<f64> {
        self.slots.iter().zip(u).map(|(&(_, lo, hi), &u)| lo + (hi - lo) * u).collect()
    }

    fn to_u(&self, theta: &[f64]) -> Vec<f64> {
        self.slots
            .iter()
            .zip(theta)
            .map(|(&(_, lo, hi), &v)| ((v - lo) / (hi - lo)).clamp(U_EDGE, 1.0 - U_EDGE))
            .collect()
    }

    fn slot_index(&self, slot: Slot) -> Option<usize> {
        self.slots.iter().position(|s| s.0 == slot)
    }
}

const U_EDGE: f64 = 1e-9;

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn logit(u: f64) -> f64 {
    (u / (1.0 - u)).ln()
}

/// Latin-hypercube points in the open unit cube, one row per start.
fn latin_hypercube(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; dim]; n];
    for j in 0..dim {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(rng);
        for (i, s) in strata.into_iter().enumerate() {
            let u = (s as f64 + rng.gen::<f64>()) / n as f64;
            out[i][j] = u.clamp(1e-3, 1.0 - 1e-3);
        }
    }
    out
}

struct StartOutcome {
    theta: Vec<f64>,
    f: f64,
    iterations: usize,
    converged: bool,
}

/// Fits the nonlinear and linear parameters of `template` to `data`.
///
/// The template supplies the family, kernel and origin; α is taken from the
/// template when the config pins neither a value nor `Free`. Deterministic
/// for a given seed, serial or parallel.
pub fn fit(template: &ModelSpec, data: &TimeSeries, cfg: &FitConfig) -> Result<FitResult, FitError> {
    cfg.validate()?;
    template.validate()?;
    let mut template = *template;
    if let AlphaMode::Fixed(a) = cfg.alpha {
        template.alpha = a;
    }
    let problem = Problem::new(&template, data, cfg)?;
    let dim = problem.dim();

    let best = if dim == 0 {
        let f = problem.objective(&[]);
        if !f.is_finite() {
            return Err(FitError::AllStartsFailed { starts: 1 });
        }
        StartOutcome { theta: Vec::new(), f, iterations: 0, converged: true }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut starts = latin_hypercube(&mut rng, cfg.starts, dim);
        starts[0] = vec![0.5; dim];
        if let Some(ia) = problem.slot_index(Slot::Alpha) {
            // start 0 sits on the classical order, warm-started from the
            // α = 1 fit so the fractional fit nests the classical one
            let (_, lo, hi) = problem.slots[ia];
            starts[0][ia] = ((1.0 - lo) / (hi - lo)).clamp(U_EDGE, 1.0 - U_EDGE);
            let sub_cfg = FitConfig {
                alpha: AlphaMode::Fixed(1.0),
                starts: (cfg.starts / 4).max(2),
                ..cfg.clone()
            };
            if let Ok(sub) = fit(&template, data, &sub_cfg) {
                let sub_problem = Problem::new(&template, data, &sub_cfg)?;
                let theta = nonlinear_of(&sub_problem, &sub);
                let u = sub_problem.to_u(&theta);
                let mut k = 0;
                for (j, slot) in problem.slots.iter().enumerate() {
                    if slot.0 != Slot::Alpha {
                        starts[0][j] = u[k];
                        k += 1;
                    }
                }
            }
        }

        let run = |u: &Vec<f64>| run_start(&problem, u, cfg, data);
        let outcomes: Vec<StartOutcome> = if cfg.parallel {
            starts.par_iter().map(run).collect()
        } else {
            starts.iter().map(run).collect()
        };
        // minimum by SSE, ties to the lowest start index
        let mut best: Option<StartOutcome> = None;
        for o in outcomes {
            if o.f.is_finite() && best.as_ref().is_none_or(|b| o.f < b.f) {
                best = Some(o);
            }
        }
        let mut best = best.ok_or(FitError::AllStartsFailed { starts: cfg.starts })?;

        if cfg.polish {
            let lo: Vec<f64> = problem.slots.iter().map(|s| s.1 + U_EDGE * (s.2 - s.1)).collect();
            let hi: Vec<f64> = problem.slots.iter().map(|s| s.2 - U_EDGE * (s.2 - s.1)).collect();
            let lm = levenberg_marquardt(|th| problem.solve(th).map(|s| s.2), &best.theta, &lo, &hi, 200);
            if lm.f < best.f {
                best.theta = lm.x;
                best.f = lm.f;
                best.converged |= lm.converged;
            }
            best.iterations += lm.iterations;
        }
        best
    };

    let (spec, params) = problem.params(&best.theta)?;
    let fitted = model_eval_series(&spec, &params, data.times())?;
    let residuals: Vec<f64> = data.values().iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let error = residuals.iter().map(|r| r * r).sum();
    Ok(FitResult {
        spec,
        params,
        error,
        iterations: best.iterations,
        converged: best.converged,
        residuals,
        seed: cfg.seed,
        free_params: problem.free_params(),
    })
}

fn nonlinear_of(problem: &Problem, r: &FitResult) -> Vec<f64> {
    problem
        .slots
        .iter()
        .map(|&(slot, _, _)| match (slot, r.params) {
            (Slot::Alpha, _) => r.spec.alpha,
            (Slot::Shape, _) => r.spec.kernel.shape().unwrap_or(f64::NAN),
            (Slot::Rate, ModelParams::ExponentialGrowth { k, .. })
            | (Slot::Rate, ModelParams::NewtonCooling { k, .. }) => k,
            (Slot::EpidemicB, ModelParams::EpidemicCoshSq { b, .. }) => b,
            (Slot::EpidemicC, ModelParams::EpidemicCoshSq { c, .. }) => c,
            _ => f64::NAN,
        })
        .collect()
}

fn run_start(problem: &Problem, u0: &[f64], cfg: &FitConfig, data: &TimeSeries) -> StartOutcome {
    let scale: f64 = data.values().iter().map(|y| y * y).sum();
    let f_floor = 1e-30 * scale.max(f64::MIN_POSITIVE);
    let objective = |z: &[f64]| {
        let u: Vec<f64> = z.iter().map(|&z| logistic(z).clamp(U_EDGE, 1.0 - U_EDGE)).collect();
        problem.objective(&problem.to_theta(&u))
    };
    let z0: Vec<f64> = u0.iter().map(|&u| logit(u)).collect();
    let mut m = nelder_mead(&objective, &z0, 0.5, cfg.max_iters, cfg.x_tol, cfg.f_tol, f_floor);
    let mut iterations = m.iterations;
    // one restart from the incumbent guards against a collapsed simplex
    if m.f.is_finite() && iterations < cfg.max_iters {
        let again = nelder_mead(&objective, &m.x, 0.05, cfg.max_iters - iterations, cfg.x_tol, cfg.f_tol, f_floor);
        iterations += again.iterations;
        if again.f <= m.f {
            m = again;
        }
    }
    let u: Vec<f64> = m.x.iter().map(|&z| logistic(z).clamp(U_EDGE, 1.0 - U_EDGE)).collect();
    StartOutcome { theta: problem.to_theta(&u), f: m.f, iterations, converged: m.converged }
}

/// One kernel to try in [`select_kernel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelCandidate {
    pub kernel: Kernel,
    /// Treat the kernel's b as a starting value and optimise it.
    pub fit_shape: bool,
}

impl KernelCandidate {
    pub fn fixed(kernel: Kernel) -> Self {
        KernelCandidate { kernel, fit_shape: false }
    }

    /// Grid used for `--kernel auto`: the power, log and sine families at
    /// the shape values found useful on the case-study data.
    pub fn default_grid() -> Vec<KernelCandidate> {
        let mut out = Vec::new();
        for b in [0.3, 0.5, 0.7, 0.9, 1.5, 2.0] {
            out.push(KernelCandidate::fixed(Kernel::ShiftedPower { b }));
        }
        out.push(KernelCandidate::fixed(Kernel::ShiftedLog));
        for b in [30.0, 40.0, 50.0, 60.0, 80.0, 100.0] {
            out.push(KernelCandidate::fixed(Kernel::ScaledSine { b }));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedCandidate {
    pub kernel: Kernel,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Ascending by error, then fewer free parameters, then kernel name.
    pub ranked: Vec<FitResult>,
    pub skipped: Vec<SkippedCandidate>,
}

impl Selection {
    pub fn best(&self) -> &FitResult {
        &self.ranked[0]
    }
}

/// Fits every candidate kernel and ranks the results.
pub fn select_kernel(
    template: &ModelSpec,
    data: &TimeSeries,
    candidates: &[KernelCandidate],
    cfg: &FitConfig,
) -> Result<Selection, FitError> {
    if candidates.is_empty() {
        return Err(FitError::NoCandidates { skipped: 0 });
    }
    let mut ranked = Vec::new();
    let mut skipped = Vec::new();
    for cand in candidates {
        let spec = ModelSpec { kernel: cand.kernel, ..*template };
        let cfg = FitConfig { fit_shape: cand.fit_shape, ..cfg.clone() };
        match fit(&spec, data, &cfg) {
            Ok(r) => ranked.push(r),
            Err(e @ (FitError::Domain(_) | FitError::Kernel(_) | FitError::AllStartsFailed { .. })) => {
                log::info!("skipping kernel {}: {e}", cand.kernel);
                skipped.push(SkippedCandidate { kernel: cand.kernel, reason: e.to_string() });
            }
            Err(e) => return Err(e),
        }
    }
    if ranked.is_empty() {
        return Err(FitError::NoCandidates { skipped: skipped.len() });
    }
    rank(&mut ranked);
    Ok(Selection { ranked, skipped })
}

fn rank(results: &mut [FitResult]) {
    results.sort_by(|a, b| {
        a.error
            .total_cmp(&b.error)
            .then(a.free_params.cmp(&b.free_params))
            .then_with(|| a.spec.kernel.to_string().cmp(&b.spec.kernel.to_string()))
    });
}
