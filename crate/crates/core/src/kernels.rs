//! Kernel functions ψ for the generalised fractional operators.
//!
//! | family         | ψ(x)        | ψ′(x)            | monotone domain          |
//! |----------------|-------------|------------------|--------------------------|
//! | `Identity`     | x           | 1                | ℝ                        |
//! | `ShiftedPower` | (x + 1)^b   | b (x + 1)^(b−1)  | x > −1                   |
//! | `ShiftedLog`   | ln(x + 1)   | 1 / (x + 1)      | x > −1                   |
//! | `ScaledSine`   | sin(x / b)  | cos(x / b) / b   | −πb/2 < x < πb/2         |
//!
//! Only differences ψ(x) − ψ(a) enter the models, so [`Kernel::increment`]
//! evaluates them directly in a cancellation-free form.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KernelFamily {
    Identity,
    ShiftedPower,
    ShiftedLog,
    ScaledSine,
}

impl KernelFamily {
    pub fn uses_shape(self) -> bool {
        matches!(self, KernelFamily::ShiftedPower | KernelFamily::ScaledSine)
    }

    pub fn tag(self) -> &'static str {
        match self {
            KernelFamily::Identity => "id",
            KernelFamily::ShiftedPower => "pow",
            KernelFamily::ShiftedLog => "log",
            KernelFamily::ScaledSine => "sin",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Identity,
    ShiftedPower { b: f64 },
    ShiftedLog,
    ScaledSine { b: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("kernel shape parameter b must be positive and finite, got {0}")]
    InvalidShape(f64),
    #[error("{kernel}: x = {x} outside the valid domain {domain}")]
    OutOfDomain { kernel: String, x: f64, domain: String },
    #[error("{0}")]
    Violation(#[from] DomainViolation),
    #[error("invalid kernel spec `{0}` (expected id, log, pow:b=<v> or sin:b=<v>)")]
    Parse(String),
}

/// Which end of the monotone domain an interval crosses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Lower,
    Upper,
}

/// Report returned by [`Kernel::validate_domain`] for an inadmissible window.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kernel}: window [{a}, {x_max}] crosses the {side} bound {limit} of the increasing branch", side = match .bound { Bound::Lower => "lower", Bound::Upper => "upper" })]
pub struct DomainViolation {
    pub kernel: String,
    pub a: f64,
    pub x_max: f64,
    pub bound: Bound,
    pub limit: f64,
}

impl Kernel {
    pub fn new(family: KernelFamily, b: Option<f64>) -> Result<Kernel, KernelError> {
        let shape = |b: Option<f64>| match b {
            Some(v) if v > 0.0 && v.is_finite() => Ok(v),
            Some(v) => Err(KernelError::InvalidShape(v)),
            None => Err(KernelError::InvalidShape(f64::NAN)),
        };
        Ok(match family {
            KernelFamily::Identity => Kernel::Identity,
            KernelFamily::ShiftedLog => Kernel::ShiftedLog,
            KernelFamily::ShiftedPower => Kernel::ShiftedPower { b: shape(b)? },
            KernelFamily::ScaledSine => Kernel::ScaledSine { b: shape(b)? },
        })
    }

    pub fn family(&self) -> KernelFamily {
        match self {
            Kernel::Identity => KernelFamily::Identity,
            Kernel::ShiftedPower { .. } => KernelFamily::ShiftedPower,
            Kernel::ShiftedLog => KernelFamily::ShiftedLog,
            Kernel::ScaledSine { .. } => KernelFamily::ScaledSine,
        }
    }

    /// Shape parameter b, for the families that have one.
    pub fn shape(&self) -> Option<f64> {
        match *self {
            Kernel::ShiftedPower { b } | Kernel::ScaledSine { b } => Some(b),
            _ => None,
        }
    }

    /// Same family with a different shape parameter.
    pub fn with_shape(&self, b: f64) -> Result<Kernel, KernelError> {
        Kernel::new(self.family(), Some(b))
    }

    /// Open interval on which ψ is increasing with ψ′ > 0.
    pub fn monotone_interval(&self) -> (f64, f64) {
        match *self {
            Kernel::Identity => (f64::NEG_INFINITY, f64::INFINITY),
            Kernel::ShiftedPower { .. } | Kernel::ShiftedLog => (-1.0, f64::INFINITY),
            Kernel::ScaledSine { b } => (-FRAC_PI_2 * b, FRAC_PI_2 * b),
        }
    }

    fn check(&self, x: f64) -> Result<(), KernelError> {
        let (lo, hi) = self.monotone_interval();
        if x.is_nan() || x <= lo || x >= hi {
            return Err(KernelError::OutOfDomain {
                kernel: self.to_string(),
                x,
                domain: format!("({lo}, {hi})"),
            });
        }
        Ok(())
    }

    /// ψ(x).
    pub fn eval(&self, x: f64) -> Result<f64, KernelError> {
        self.check(x)?;
        Ok(self.eval_raw(x))
    }

    /// The family formula without the monotone-branch check.
    pub(crate) fn eval_raw(&self, x: f64) -> f64 {
        match *self {
            Kernel::Identity => x,
            Kernel::ShiftedPower { b } => (x + 1.0).powf(b),
            Kernel::ShiftedLog => x.ln_1p(),
            Kernel::ScaledSine { b } => (x / b).sin(),
        }
    }

    /// ψ′(x), strictly positive inside the domain.
    pub fn derivative(&self, x: f64) -> Result<f64, KernelError> {
        self.check(x)?;
        Ok(match *self {
            Kernel::Identity => 1.0,
            Kernel::ShiftedPower { b } => b * (x + 1.0).powf(b - 1.0),
            Kernel::ShiftedLog => 1.0 / (x + 1.0),
            Kernel::ScaledSine { b } => (x / b).cos() / b,
        })
    }

    /// `Ok` iff [a, x_max] lies strictly inside the monotone domain.
    pub fn validate_domain(&self, a: f64, x_max: f64) -> Result<(), DomainViolation> {
        let (lo, hi) = self.monotone_interval();
        let violation = |bound, limit| DomainViolation {
            kernel: self.to_string(),
            a,
            x_max,
            bound,
            limit,
        };
        if !(a > lo) {
            return Err(violation(Bound::Lower, lo));
        }
        if !(x_max < hi) {
            return Err(violation(Bound::Upper, hi));
        }
        Ok(())
    }

    /// ψ(x) − ψ(a), evaluated without subtractive cancellation.
    pub fn increment(&self, a: f64, x: f64) -> Result<f64, KernelError> {
        self.check(a)?;
        self.check(x)?;
        Ok(self.increment_raw(a, x))
    }

    pub(crate) fn increment_raw(&self, a: f64, x: f64) -> f64 {
        let h = x - a;
        match *self {
            Kernel::Identity => h,
            Kernel::ShiftedPower { b } => {
                (a + 1.0).powf(b) * (b * (h / (a + 1.0)).ln_1p()).exp_m1()
            }
            Kernel::ShiftedLog => (h / (a + 1.0)).ln_1p(),
            Kernel::ScaledSine { b } => 2.0 * ((x + a) / (2.0 * b)).cos() * (h / (2.0 * b)).sin(),
        }
    }

    /// ψ⁻¹(u) in closed form.
    pub fn inverse(&self, u: f64) -> Result<f64, KernelError> {
        let out = || KernelError::OutOfDomain {
            kernel: self.to_string(),
            x: u,
            domain: "range of ψ".to_string(),
        };
        let x = match *self {
            Kernel::Identity => u,
            Kernel::ShiftedPower { b } => {
                if !(u > 0.0) {
                    return Err(out());
                }
                u.powf(1.0 / b) - 1.0
            }
            Kernel::ShiftedLog => u.exp_m1(),
            Kernel::ScaledSine { b } => {
                if !(u.abs() < 1.0) {
                    return Err(out());
                }
                b * u.asin()
            }
        };
        self.check(x)?;
        Ok(x)
    }

    /// `ψ⁻¹(ψ(a) + du) − a`, accurate when `du` is small.
    ///
    /// Assumes the target lies inside the monotone domain; callers derive `du`
    /// from increments over a validated window.
    pub fn offset_inverse(&self, a: f64, du: f64) -> f64 {
        match *self {
            Kernel::Identity => du,
            Kernel::ShiftedPower { b } => {
                let base = a + 1.0;
                base * ((du / base.powf(b)).ln_1p() / b).exp_m1()
            }
            Kernel::ShiftedLog => (a + 1.0) * du.exp_m1(),
            Kernel::ScaledSine { b } => {
                let s = ((a / b).sin() + du).clamp(-1.0, 1.0);
                b * s.asin() - a
            }
        }
    }
}

/// Safeguarded Newton–bisection solve of ψ(x) = u on the bracket [lo, hi].
///
/// Independent of the closed-form inverses; tolerance is 1e-13 in ψ-space.
pub fn invert_bracketed(k: &Kernel, u: f64, mut lo: f64, mut hi: f64) -> Result<f64, KernelError> {
    let f_lo = k.eval(lo)? - u;
    let f_hi = k.eval(hi)? - u;
    if f_lo > 0.0 || f_hi < 0.0 {
        return Err(KernelError::OutOfDomain {
            kernel: k.to_string(),
            x: u,
            domain: format!("ψ([{lo}, {hi}])"),
        });
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = k.eval(x)? - u;
        if fx.abs() <= 1e-13 * u.abs().max(1.0) {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let step = x - fx / k.derivative(x)?;
        x = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
        if hi - lo <= f64::EPSILON * x.abs().max(1.0) {
            return Ok(x);
        }
    }
    Ok(x)
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Kernel::Identity => f.write_str("id"),
            Kernel::ShiftedLog => f.write_str("log"),
            Kernel::ShiftedPower { b } => write!(f, "pow:b={b}"),
            Kernel::ScaledSine { b } => write!(f, "sin:b={b}"),
        }
    }
}

impl FromStr for Kernel {
    type Err = KernelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || KernelError::Parse(s.to_string());
        match s {
            "id" => return Ok(Kernel::Identity),
            "log" => return Ok(Kernel::ShiftedLog),
            _ => {}
        }
        let (tag, rest) = s.split_once(':').ok_or_else(bad)?;
        let value = rest.strip_prefix("b=").ok_or_else(bad)?;
        let b: f64 = value.parse().map_err(|_| bad())?;
        let family = match tag {
            "pow" => KernelFamily::ShiftedPower,
            "sin" => KernelFamily::ScaledSine,
            _ => return Err(bad()),
        };
        Kernel::new(family, Some(b))
    }
}
