//! Oracles shared by the integration tests and the acceptance harness.
#![allow(dead_code)]

use fracfit::fracops::{caputo_derivative, frac_integral_single, FractionalOrder, QuadratureConfig};
use fracfit::{frac_integral, gamma, mittag_leffler, Kernel, MlEvalConfig};

pub fn rel(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x.fract() == 0.0 {
        0.0
    } else {
        1.0 / gamma(x).unwrap()
    }
}

/// Kernels with a window [a, x_max] on their increasing branch.
pub fn kernel_windows() -> Vec<(Kernel, f64, f64)> {
    vec![
        (Kernel::Identity, 0.0, 2.5),
        (Kernel::ShiftedPower { b: 0.7 }, 0.0, 4.0),
        (Kernel::ShiftedPower { b: 1.5 }, 0.5, 2.0),
        (Kernel::ShiftedLog, 0.0, 6.0),
        (Kernel::ScaledSine { b: 40.0 }, 0.0, 55.0),
        (Kernel::ScaledSine { b: 2.0 }, -1.0, 2.5),
    ]
}

/// Caputo derivative of (ψ(x)−ψ(a))^(β−1): (numeric, closed form).
pub fn power_rule(alpha: f64, beta: f64, k: &Kernel, a: f64, x: f64) -> (f64, f64) {
    let ord = FractionalOrder::new(alpha).unwrap();
    let n = ord.n() as f64;
    let cn = gamma(beta).unwrap() / gamma(beta - n).unwrap();
    let kk = *k;
    let fd = move |t: f64| cn * kk.increment(a, t).unwrap().max(0.0).powf(beta - n - 1.0);
    let numeric = caputo_derivative(fd, ord, k, a, x, &QuadratureConfig::default()).unwrap();
    let w = k.increment(a, x).unwrap();
    let exact = gamma(beta).unwrap() / gamma(beta - alpha).unwrap() * w.powf(beta - alpha - 1.0);
    (numeric, exact)
}

/// n-th ψ-derivative of E_α(λ w^α), w = ψ(t) − ψ(a), by term-wise
/// differentiation of the power series.
pub fn ml_psi_derivative(alpha: f64, lambda: f64, n: u32, w: f64) -> f64 {
    let n = n as f64;
    if w <= 0.0 {
        // weakly singular at the base point; a single node there has no mass
        return 0.0;
    }
    let mut sum = 0.0;
    for k in 1..400 {
        let kf = k as f64;
        let term = lambda.powi(k) * w.powf(alpha * kf - n) * rgamma(alpha * kf + 1.0 - n);
        sum += term;
        if kf * alpha > n + 2.0 && term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// Caputo derivative of E_α(λ w^α) against λ E_α(λ w^α).
pub fn eigenfunction(alpha: f64, lambda: f64, k: &Kernel, a: f64, x: f64) -> (f64, f64) {
    let ord = FractionalOrder::new(alpha).unwrap();
    let kk = *k;
    let fd = move |t: f64| ml_psi_derivative(alpha, lambda, ord.n(), kk.increment(a, t).unwrap().max(0.0));
    let numeric = caputo_derivative(fd, ord, k, a, x, &QuadratureConfig::default()).unwrap();
    let w = k.increment(a, x).unwrap();
    let exact = lambda * mittag_leffler(alpha, lambda * w.powf(alpha), &MlEvalConfig::default()).unwrap();
    (numeric, exact)
}

/// Quadrature for nested operator checks: each outer node needs a full
/// inner Caputo derivative.
pub const NESTED: QuadratureConfig = QuadratureConfig { nodes: 24, panels: 6, rel_tol: 1e-8 };

fn nested_inversion<D>(alpha: f64, k: &Kernel, a: f64, x: f64, d: D) -> f64
where
    D: Fn(f64) -> f64 + Copy,
{
    let ord = FractionalOrder::new(alpha).unwrap();
    let kk = *k;
    let inner = move |t: f64| {
        if t <= a {
            return 0.0;
        }
        frac_integral_single(d, ord.n() as f64 - alpha, &kk, a, t, &NESTED).unwrap()
    };
    frac_integral_single(inner, alpha, k, a, x, &NESTED).unwrap()
}

/// I^α(ᶜD^α f)(x) against f(x) − f(a) for f = cos w + w², α ∈ (0, 1).
pub fn inversion_first_order(alpha: f64, k: &Kernel, a: f64, x: f64) -> (f64, f64) {
    let kk = *k;
    let d1 = move |t: f64| {
        let w = kk.increment(a, t).unwrap().max(0.0);
        -w.sin() + 2.0 * w
    };
    let numeric = nested_inversion(alpha, k, a, x, d1);
    let w = k.increment(a, x).unwrap();
    (numeric, w.cos() + w * w - 1.0)
}

/// Second-order form for f = 1 + 2w + 3w² + w³, α ∈ (1, 2): the ψ-Taylor
/// remainder f(a) + f_ψ′(a) w leaves 3w² + w³.
pub fn inversion_second_order(alpha: f64, k: &Kernel, a: f64, x: f64) -> (f64, f64) {
    let kk = *k;
    let d2 = move |t: f64| 6.0 + 6.0 * kk.increment(a, t).unwrap().max(0.0);
    let numeric = nested_inversion(alpha, k, a, x, d2);
    let w = k.increment(a, x).unwrap();
    (numeric, 3.0 * w * w + w * w * w)
}

/// frac_integral of a constant: k (ψ(x) − ψ(a))^α / Γ(α + 1).
pub fn constant_integral(alpha: f64, k: &Kernel, a: f64, x: f64) -> (f64, f64) {
    let numeric = frac_integral(|_| 2.5, alpha, k, a, x, &QuadratureConfig::default()).unwrap();
    let w = k.increment(a, x).unwrap();
    (numeric, 2.5 * w.powf(alpha) / gamma(alpha + 1.0).unwrap())
}

/// Printed (Error_C, Error_F, Efficiency %) triples of the case-study tables.
pub const EFFICIENCY_ROWS: &[(&str, f64, f64, f64)] = &[
    ("GDP USA linear, fractional psi1", 1.163673e8, 9.895013e6, 91.496740),
    ("GDP USA linear, fractional psi4 (b=50)", 1.163673e8, 7.346859e6, 93.686491),
    ("GDP USA exponential, fractional psi1", 2.302460e8, 4.129788e7, 82.063587),
    ("GDP USA exponential, fractional psi3", 2.302460e8, 8.241729e6, 96.420468),
    ("GDP UK linear, fractional psi1", 2.315927e8, 7.114080e7, 69.687165),
    ("GDP UK linear, fractional psi3", 2.315927e8, 6.947902e7, 70.408906),
    ("GDP UK exponential, fractional psi1", 2.562247e8, 9.980382e7, 61.048327),
    ("GDP UK exponential, fractional psi3", 2.562247e8, 6.951255e7, 72.870476),
    ("Newton cooling, fractional psi1", 940.640679, 39.844721, 95.764087),
    ("Newton cooling, fractional psi3", 940.640679, 26.691909, 97.162369),
    ("Bombay plague, fractional psi1", 6.309364e5, 6.302366e5, 0.110908),
    ("Bombay plague, fractional psi3", 6.309364e5, 5.983701e5, 5.161572),
    ("Population Africa, fractional psi1", 327.024434, 236.643618, 27.637328),
    ("Population Africa, fractional psi2 (b=0.7)", 327.024434, 40.953972, 87.476785),
    ("Population America, fractional psi1", 6660.898290, 685.697720, 89.705627),
    ("Population America, fractional psi4 (b=60)", 6660.898290, 10.987758, 99.835041),
    ("Population Asia, fractional psi1", 1.378920e5, 49095.37114, 64.395774),
    ("Population Asia, fractional psi4 (b=50)", 1.378920e5, 920.911794, 99.332150),
    ("Population Europe, fractional psi1", 6246.195248, 776.467956, 87.568945),
    ("Population Europe, fractional psi4 (b=40)", 6246.195248, 155.33140, 97.513184),
];
