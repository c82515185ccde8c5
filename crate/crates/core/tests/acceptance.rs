//! Acceptance harness: one PASS/FAIL/SKIP line per criterion.
//!
//! Exits non-zero only on an unexpected outcome. A FAIL that is fully
//! explained by an inconsistency in the printed source tables is reported
//! as such and does not fail the run.

mod common;

use std::path::{Path, PathBuf};
use std::time::Instant;

use common::*;
use fracfit::dataio::load_csv;
use fracfit::fit::AlphaMode;
use fracfit::fracops::{frac_integral_single, QuadratureConfig};
use fracfit::models::model_eval_extrapolated;
use fracfit::{
    efficiency, fit, gamma, mittag_leffler, model_eval, model_eval_series, sse, FitConfig, Kernel,
    MlEvalConfig, ModelFamily, ModelParams, ModelSpec, TimeSeries,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DATA_ENV: &str = "FRACFIT_TABLE_DATA";

enum Verdict {
    Pass(String),
    Fail(String),
    /// Failing, with a cause outside this crate that the check has confirmed.
    KnownFail(String),
    Skip(String),
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 6] = [
        ("efficiency arithmetic", efficiency_rows),
        ("special-function oracles", special_functions),
        ("operator identities", operator_identities),
        ("synthetic parameter recovery", synthetic_recovery),
        ("table-level reproduction", table_reproduction),
        ("classical degeneration", classical_degeneration),
    ];
    let mut unexpected = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let verdict = check();
        let secs = started.elapsed().as_secs_f64();
        let (tag, detail) = match verdict {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                unexpected += 1;
                ("FAIL", d)
            }
            Verdict::KnownFail(d) => ("FAIL", format!("{d} [source inconsistency, expected]")),
            Verdict::Skip(d) => ("SKIP", d),
        };
        println!("criterion {} {name}: {tag} ({secs:.2}s) {detail}", i + 1);
    }
    if unexpected > 0 {
        std::process::exit(1);
    }
}

fn efficiency_rows() -> Verdict {
    const TOL: f64 = 1e-4;
    // The two UK linear rows do not follow from the printed classical error;
    // each implies a different Error_C (≈2.3469e8 and ≈2.3471e8).
    const KNOWN: [&str; 2] = ["GDP UK linear, fractional psi1", "GDP UK linear, fractional psi3"];
    let mut worst_ok = 0.0f64;
    let mut off = Vec::new();
    for &(name, ec, ef, printed) in EFFICIENCY_ROWS {
        let got = efficiency(ec, ef).unwrap();
        let dev = (got - printed).abs();
        if dev <= TOL {
            worst_ok = worst_ok.max(dev);
        } else {
            let implied = ef / (1.0 - printed / 100.0);
            off.push((name, got, printed, implied));
        }
    }
    if off.is_empty() {
        return Verdict::Pass(format!("{} rows, max deviation {worst_ok:.2e}", EFFICIENCY_ROWS.len()));
    }
    let detail = off
        .iter()
        .map(|(n, g, p, i)| format!("{n}: {g:.6}% vs printed {p:.6}% (implied Error_C {i:.6e})"))
        .collect::<Vec<_>>()
        .join("; ");
    let summary = format!(
        "{}/{} rows off; others within {worst_ok:.2e}; {detail}",
        off.len(),
        EFFICIENCY_ROWS.len()
    );
    let names: Vec<&str> = off.iter().map(|o| o.0).collect();
    if names == KNOWN {
        Verdict::KnownFail(summary)
    } else {
        Verdict::Fail(summary)
    }
}

fn special_functions() -> Verdict {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/ml_reference.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    let cfg = MlEvalConfig::default();
    let (mut worst, mut cells, mut overflow) = (0.0f64, 0, 0);
    let mut problems = Vec::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (alpha, x): (f64, f64) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        let got = mittag_leffler(alpha, x, &cfg);
        cells += 1;
        if f[2] == "overflow" {
            overflow += 1;
            if got.is_ok() {
                problems.push(format!("E_{alpha}({x}) should overflow"));
            }
            continue;
        }
        let want: f64 = f[2].parse().unwrap();
        match got {
            Ok(v) => {
                let e = rel(v, want);
                worst = worst.max(e);
                if e > 1e-10 {
                    problems.push(format!("E_{alpha}({x}) = {v:e}, oracle {want:e}"));
                }
            }
            Err(e) => problems.push(format!("E_{alpha}({x}): {e}")),
        }
    }

    let mut gamma_worst = 0.0f64;
    let mut fact = 1.0;
    for n in 1..=20 {
        fact *= n as f64;
        gamma_worst = gamma_worst.max(rel(gamma(n as f64 + 1.0).unwrap(), fact));
    }
    let mut x: f64 = 0.05;
    while x < 40.0 {
        if x.fract() != 0.0 {
            let lhs = gamma(x + 1.0).unwrap();
            gamma_worst = gamma_worst.max(rel(lhs, x * gamma(x).unwrap()));
        }
        x += 0.173;
    }
    if gamma_worst > 1e-12 {
        problems.push(format!("gamma worst relative error {gamma_worst:e}"));
    }

    let detail = format!(
        "{cells} ML cells ({overflow} beyond f64), worst {worst:.2e}; gamma worst {gamma_worst:.2e}"
    );
    if problems.is_empty() {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}; {}", problems.join("; ")))
    }
}

fn operator_identities() -> Verdict {
    const TOL: f64 = 1e-5;
    let windows = kernel_windows();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut power = 0.0f64;
    for _ in 0..50 {
        let (k, a, x_max) = windows[rng.gen_range(0..windows.len())];
        let alpha = rng.gen_range(0.1..2.9);
        let beta = f64::ceil(alpha) + 1.0 + rng.gen_range(0.1..2.0);
        let x = a + rng.gen_range(0.2..1.0) * (x_max - a);
        let (got, want) = power_rule(alpha, beta, &k, a, x);
        power = power.max(rel(got, want));
    }

    let mut eigen = 0.0f64;
    for &lambda in &[-1.0, -0.1, 0.1, 1.0] {
        for &alpha in &[0.4, 0.8, 1.4] {
            for &(k, a, x_max) in &windows {
                let (got, want) = eigenfunction(alpha, lambda, &k, a, a + 0.6 * (x_max - a));
                eigen = eigen.max(rel(got, want));
            }
        }
    }

    let mut inversion = 0.0f64;
    for &(k, a, x_max) in &windows {
        let x = a + 0.7 * (x_max - a);
        for &alpha in &[0.3, 0.75] {
            let (got, want) = inversion_first_order(alpha, &k, a, x);
            inversion = inversion.max(rel(got, want));
        }
        let (got, want) = inversion_second_order(1.6, &k, a, x);
        inversion = inversion.max(rel(got, want));
    }

    let detail = format!("worst relative: power rule {power:.2e}, eigenfunction {eigen:.2e}, inversion {inversion:.2e}");
    if power.max(eigen).max(inversion) <= TOL {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

struct RecoveryCase {
    family: ModelFamily,
    kernel: Kernel,
    alpha: f64,
    params: ModelParams,
    ts: Vec<f64>,
}

fn grid(n: usize, step: f64) -> Vec<f64> {
    (0..n).map(|i| i as f64 * step).collect()
}

fn recovery_cases() -> Vec<RecoveryCase> {
    let kernels = [
        Kernel::Identity,
        Kernel::ShiftedPower { b: 0.7 },
        Kernel::ShiftedLog,
        Kernel::ScaledSine { b: 100.0 },
    ];
    let mut cases = Vec::new();
    for k in kernels {
        // rates chosen so the driving term k·w^α is of order one over each window
        let span = |ts: &[f64], alpha: f64| k.increment(0.0, *ts.last().unwrap()).unwrap().powf(alpha);
        let ts = grid(10, 5.0);
        cases.push(RecoveryCase {
            family: ModelFamily::LinearGrowth,
            kernel: k,
            alpha: 1.4,
            params: ModelParams::LinearGrowth { s0: 4000.0, k: 30000.0 / span(&ts, 1.4) },
            ts,
        });
        let ts = grid(13, 5.0);
        cases.push(RecoveryCase {
            family: ModelFamily::ExponentialGrowth,
            kernel: k,
            alpha: 0.8,
            params: ModelParams::ExponentialGrowth { s0: 230.0, k: 1.5 / span(&ts, 0.8) },
            ts,
        });
        let ts = grid(30, 1.0);
        cases.push(RecoveryCase {
            family: ModelFamily::NewtonCooling,
            kernel: k,
            alpha: 1.3,
            params: ModelParams::NewtonCooling { t0: 100.0, ta: 23.0, k: -1.0 / span(&ts, 1.3) },
            ts,
        });
        cases.push(RecoveryCase {
            family: ModelFamily::EpidemicCoshSq,
            kernel: k,
            alpha: 0.9,
            params: ModelParams::EpidemicCoshSq { r0: 40.0, a: 700.0, b: 0.18, c: -5.0 },
            ts: grid(52, 1.0),
        });
    }
    cases
}

/// (name, true, recovered) for each rate-type parameter.
fn rates(truth: &ModelParams, got: &ModelParams) -> Vec<(&'static str, f64, f64)> {
    match (truth, got) {
        (ModelParams::LinearGrowth { k, .. }, ModelParams::LinearGrowth { k: g, .. })
        | (ModelParams::ExponentialGrowth { k, .. }, ModelParams::ExponentialGrowth { k: g, .. })
        | (ModelParams::NewtonCooling { k, .. }, ModelParams::NewtonCooling { k: g, .. }) => vec![("k", *k, *g)],
        (ModelParams::EpidemicCoshSq { b, c, .. }, ModelParams::EpidemicCoshSq { b: gb, c: gc, .. }) => {
            vec![("B", *b, *gb), ("C", *c, *gc)]
        }
        _ => unreachable!("family mismatch"),
    }
}

fn synthetic_recovery() -> Verdict {
    let cfg = FitConfig { starts: 8, ..FitConfig::default() };
    let (mut worst_rate, mut worst_alpha, mut worst_sse) = (0.0f64, 0.0f64, 0.0f64);
    let mut problems = Vec::new();
    let cases = recovery_cases();
    for case in &cases {
        let spec = ModelSpec::new(case.family, case.kernel, case.alpha);
        let ys = model_eval_series(&spec, &case.params, &case.ts).unwrap();
        let scale: f64 = ys.iter().map(|y| y * y).sum();
        let data = TimeSeries::new(case.ts.clone(), ys).unwrap();
        let template = ModelSpec::new(case.family, case.kernel, 1.0);
        let label = format!("{} {}", case.family, case.kernel);
        let r = match fit(&template, &data, &cfg) {
            Ok(r) => r,
            Err(e) => {
                problems.push(format!("{label}: {e}"));
                continue;
            }
        };
        for (name, want, got) in rates(&case.params, &r.params) {
            let e = rel(got, want);
            worst_rate = worst_rate.max(e);
            if e > 1e-3 {
                problems.push(format!("{label}: {name} = {got} (true {want})"));
            }
        }
        let da = (r.alpha() - case.alpha).abs();
        worst_alpha = worst_alpha.max(da);
        if da > 1e-3 {
            problems.push(format!("{label}: alpha = {} (true {})", r.alpha(), case.alpha));
        }
        let ratio = r.error / scale;
        worst_sse = worst_sse.max(ratio);
        if ratio > 1e-8 {
            problems.push(format!("{label}: SSE/Σy² = {ratio:e}"));
        }
    }
    let detail = format!(
        "{} fits, worst rate rel {worst_rate:.2e}, worst |Δα| {worst_alpha:.2e}, worst SSE/Σy² {worst_sse:.2e}",
        cases.len()
    );
    if problems.is_empty() {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}; {}", problems.join("; ")))
    }
}

fn classical_degeneration() -> Verdict {
    let mut worst = 0.0f64;
    let mut problems = Vec::new();
    let mut check = |label: String, got: f64, want: f64| {
        let e = (got - want).abs() / want.abs().max(1e-300);
        worst = worst.max(e);
        if e > 1e-10 {
            problems.push(format!("{label}: {got} vs {want}"));
        }
    };
    for origin in [0.0, 3.0] {
        let ts: Vec<f64> = (0..100).map(|i| origin + 0.5 * i as f64).collect();
        let spec = |family| ModelSpec { origin, ..ModelSpec::classical(family) };
        let lin = ModelParams::LinearGrowth { s0: 4000.0, k: 900.0 };
        let exp = ModelParams::ExponentialGrowth { s0: 230.0, k: 0.03 };
        let cool = ModelParams::NewtonCooling { t0: 100.0, ta: 23.0, k: -0.0665349 };
        let plague = ModelParams::EpidemicCoshSq { r0: 5.0, a: 736.714057, b: 0.183346, c: -5.070156 };
        for &t in &ts {
            let d = t - origin;
            let at = |f, p: &ModelParams| model_eval(&spec(f), p, t).unwrap();
            check(format!("linear t={t}"), at(ModelFamily::LinearGrowth, &lin), 4000.0 + 900.0 * d);
            check(format!("exp t={t}"), at(ModelFamily::ExponentialGrowth, &exp), 230.0 * (0.03 * d).exp());
            check(
                format!("cooling t={t}"),
                at(ModelFamily::NewtonCooling, &cool),
                23.0 + 77.0 * (-0.0665349 * d).exp(),
            );
            let (b, c) = (0.183346, -5.070156);
            let closed = 5.0 + 736.714057 / b * ((b * t + c).tanh() - (b * origin + c).tanh());
            check(format!("plague t={t}"), at(ModelFamily::EpidemicCoshSq, &plague), closed);
            if origin == 0.0 && t > 0.0 {
                // the general quadrature path at α = 1 must agree with the same closed form
                let rate = |s: f64| 736.714057 / (b * s + c).cosh().powi(2);
                let q = QuadratureConfig::default();
                let via = 5.0 + frac_integral_single(rate, 1.0, &Kernel::Identity, origin, t, &q).unwrap();
                check(format!("plague quadrature t={t}"), via, closed);
            }
        }
    }
    let detail = format!("4 families x 2 origins x 100 points, worst relative {worst:.2e}");
    if problems.is_empty() {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}; {}", problems.join("; ")))
    }
}

/// One printed table row: kernel, α (None for the classical row), printed
/// rate parameters, printed Error.
struct Row {
    kernel: Kernel,
    alpha: Option<f64>,
    rate: &'static [f64],
    error: f64,
}

struct Table {
    file: &'static str,
    family: ModelFamily,
    rows: &'static [Row],
}

const fn row(kernel: Kernel, alpha: Option<f64>, rate: &'static [f64], error: f64) -> Row {
    Row { kernel, alpha, rate, error }
}

const TABLES: &[Table] = &[
    Table {
        file: "gdp_usa.csv",
        family: ModelFamily::LinearGrowth,
        rows: &[
            row(Kernel::Identity, None, &[938.653334], 1.163673e8),
            row(Kernel::Identity, Some(1.439934), &[251.518736], 9.895013e6),
            row(Kernel::ScaledSine { b: 50.0 }, Some(1.664986), &[1.050515], 7.346859e6),
        ],
    },
    Table {
        file: "gdp_usa.csv",
        family: ModelFamily::ExponentialGrowth,
        rows: &[
            row(Kernel::Identity, None, &[0.058556], 2.302460e8),
            row(Kernel::Identity, Some(0.400291), &[0.267899], 4.129788e7),
            row(Kernel::ShiftedLog, Some(4.880700), &[1.501965], 8.241729e6),
        ],
    },
    Table {
        file: "gdp_uk.csv",
        family: ModelFamily::LinearGrowth,
        rows: &[
            row(Kernel::Identity, None, &[785.672510], 2.315927e8),
            row(Kernel::Identity, Some(1.683547), &[105.319149], 7.114080e7),
            row(Kernel::ShiftedLog, Some(5.961180), &[9.274772e4], 6.947902e7),
        ],
    },
    Table {
        file: "gdp_uk.csv",
        family: ModelFamily::ExponentialGrowth,
        rows: &[
            row(Kernel::Identity, None, &[0.071713], 2.562247e8),
            row(Kernel::Identity, Some(0.33255), &[0.359075], 9.980382e7),
            row(Kernel::ShiftedLog, Some(5.873892), &[4.412682], 6.951255e7),
        ],
    },
    Table {
        file: "cooling.csv",
        family: ModelFamily::NewtonCooling,
        rows: &[
            row(Kernel::Identity, None, &[-0.0665349], 940.640679),
            row(Kernel::Identity, Some(0.798038), &[-0.130333], 39.844721),
            row(Kernel::ShiftedLog, Some(1.428019), &[-0.249423], 26.691909),
        ],
    },
    Table {
        file: "bombay.csv",
        family: ModelFamily::EpidemicCoshSq,
        rows: &[
            row(Kernel::Identity, None, &[736.714057, 0.183346, -5.070156], 6.309364e5),
            row(Kernel::Identity, Some(1.002834), &[733.259286, 0.184230, -5.088524], 6.302366e5),
            row(Kernel::ShiftedLog, Some(1.017019), &[2.217880e4, 0.194156, -5.478100], 5.983701e5),
        ],
    },
    Table {
        file: "population_africa.csv",
        family: ModelFamily::ExponentialGrowth,
        rows: &[
            row(Kernel::Identity, None, &[0.025116], 327.024434),
            row(Kernel::Identity, Some(1.03793), &[0.022421], 236.643618),
            row(Kernel::ShiftedPower { b: 0.7 }, Some(1.699578), &[0.027381], 40.953972),
        ],
    },
    Table {
        file: "population_america.csv",
        family: ModelFamily::ExponentialGrowth,
        rows: &[
            row(Kernel::Identity, None, &[0.017806], 6660.898290),
            row(Kernel::Identity, Some(0.723857), &[0.042814], 685.697720),
            row(Kernel::ScaledSine { b: 60.0 }, Some(0.915357), &[1.114633], 10.987758),
        ],
    },
    Table {
        file: "population_asia.csv",
        family: ModelFamily::ExponentialGrowth,
        rows: &[
            row(Kernel::Identity, None, &[0.019087], 1.378920e5),
            row(Kernel::Identity, Some(0.761743), &[0.040394], 49095.37114),
            row(Kernel::ScaledSine { b: 50.0 }, Some(1.124085), &[1.326809], 920.911794),
        ],
    },
    Table {
        file: "population_europe.csv",
        family: ModelFamily::ExponentialGrowth,
        rows: &[
            row(Kernel::Identity, None, &[0.005879], 6246.195248),
            row(Kernel::Identity, Some(0.485031), &[0.035060], 776.467956),
            row(Kernel::ScaledSine { b: 40.0 }, Some(0.711280), &[0.263725], 155.33140),
        ],
    },
];

/// Printed parameters; the tables omit initial values, which are taken
/// from the first observation (cooling: the stated 100 and 23 degrees).
fn printed_params(family: ModelFamily, rate: &[f64], y0: f64) -> ModelParams {
    match family {
        ModelFamily::LinearGrowth => ModelParams::LinearGrowth { s0: y0, k: rate[0] },
        ModelFamily::ExponentialGrowth => ModelParams::ExponentialGrowth { s0: y0, k: rate[0] },
        ModelFamily::NewtonCooling => ModelParams::NewtonCooling { t0: 100.0, ta: 23.0, k: rate[0] },
        ModelFamily::EpidemicCoshSq => ModelParams::EpidemicCoshSq { r0: y0, a: rate[0], b: rate[1], c: rate[2] },
    }
}

fn row_spec(family: ModelFamily, r: &Row) -> ModelSpec {
    ModelSpec::new(family, r.kernel, r.alpha.unwrap_or(1.0))
}

fn table_reproduction() -> Verdict {
    let Some(dir) = std::env::var_os(DATA_ENV).map(PathBuf::from) else {
        return Verdict::Skip(format!("set {DATA_ENV} to a directory of transcribed datasets"));
    };
    let mut problems = Vec::new();
    let mut checked = 0;
    let mut missing = Vec::new();
    let load = |file: &str| load_csv(&dir.join(file), None).ok();

    for table in TABLES {
        let Some(data) = load(table.file) else {
            missing.push(table.file);
            continue;
        };
        let y0 = data.values()[0];
        for r in table.rows {
            checked += 1;
            let spec = row_spec(table.family, r);
            let label = format!("{} {} {}", table.file, table.family, spec.kernel);
            let p = printed_params(table.family, r.rate, y0);
            match sse(&spec, &p, &data) {
                Ok(e) if rel(e, r.error) <= 0.02 => {}
                Ok(e) => problems.push(format!("{label}: SSE at printed params {e:.6e} vs {:.6e}", r.error)),
                Err(e) => problems.push(format!("{label}: {e}")),
            }
            let alpha = if r.alpha.is_some() { AlphaMode::Free } else { AlphaMode::Fixed(1.0) };
            let mut cfg = FitConfig { alpha, ..FitConfig::default() };
            if table.family == ModelFamily::NewtonCooling {
                cfg = cfg.pin("T0", 100.0).pin("Ta", 23.0);
            }
            match fit(&ModelSpec::new(table.family, r.kernel, 1.0), &data, &cfg) {
                Ok(f) if f.error <= r.error * 1.02 => {}
                Ok(f) => problems.push(format!("{label}: fitted SSE {:.6e} above {:.6e}", f.error, r.error * 1.02)),
                Err(e) => problems.push(format!("{label}: fit failed: {e}")),
            }
        }
    }

    // 2014 GDP predictions with the lowest-error linear rows
    for (file, table, actual, printed_err) in [("gdp_usa.csv", 0, 54629.0, 324.0), ("gdp_uk.csv", 2, 46332.0, 1284.0)] {
        let Some(data) = load(file) else { continue };
        let r = &TABLES[table].rows[2];
        let spec = row_spec(ModelFamily::LinearGrowth, r);
        let p = printed_params(ModelFamily::LinearGrowth, r.rate, data.values()[0]);
        checked += 1;
        match model_eval_extrapolated(&spec, &p, 48.0) {
            Ok(v) if rel((actual - v).abs(), printed_err) <= 0.05 => {}
            Ok(v) => problems.push(format!("{file}: 2014 prediction {v:.0}, error {:.0} vs {printed_err}", (actual - v).abs())),
            Err(e) => problems.push(format!("{file}: {e}")),
        }
    }

    // 2015 population predictions of the best fractional rows
    for (table, printed) in [(6, 1161.0), (7, 990.0), (8, 4342.0), (9, 743.0)] {
        let t = &TABLES[table];
        let Some(data) = load(t.file) else { continue };
        let r = &t.rows[2];
        let spec = row_spec(t.family, r);
        let p = printed_params(t.family, r.rate, data.values()[0]);
        checked += 1;
        match model_eval_extrapolated(&spec, &p, 65.0) {
            Ok(v) if (v - printed).abs() <= 2.0 => {}
            Ok(v) => problems.push(format!("{}: 2015 prediction {v:.1} vs {printed}", t.file)),
            Err(e) => problems.push(format!("{}: {e}", t.file)),
        }
    }

    if checked == 0 {
        return Verdict::Skip(format!("no dataset files found in {}", dir.display()));
    }
    let detail = format!("{checked} checks, missing files: {missing:?}");
    if problems.is_empty() {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}; {}", problems.join("; ")))
    }
}
