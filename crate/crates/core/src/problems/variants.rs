use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::schedules::{lambda_bound, ParameterSchedule};

const INVERSION_TOL: f64 = 1e-12;

/// Inertia pattern used by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// `α = β = 0`.
    None,
    /// `β = 0`.
    HeavyBall,
    /// `α = β`.
    Nesterov,
    /// `α = 0`.
    Reflected,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::None,
        Variant::HeavyBall,
        Variant::Nesterov,
        Variant::Reflected,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::None => "none",
            Variant::HeavyBall => "hb",
            Variant::Nesterov => "nesterov",
            Variant::Reflected => "reflected",
        }
    }

    fn path(&self, t: f64) -> (f64, f64) {
        match self {
            Variant::None => (0.0, 0.0),
            Variant::HeavyBall => (t, 0.0),
            Variant::Nesterov => (t, t),
            Variant::Reflected => (0.0, t),
        }
    }

    fn t_max(&self) -> f64 {
        match self {
            Variant::Reflected => 1.0,
            _ => 1.0 - INVERSION_TOL,
        }
    }

    /// The largest inertia along this variant's path whose relaxation bound
    /// still admits `lambda`, found by bisection on [`lambda_bound`].
    pub fn tight_parameters(&self, lambda: f64) -> Result<(f64, f64)> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::domain(format!(
                "lambda = {lambda} must lie in (0,1)"
            )));
        }
        if *self == Variant::None {
            return Ok((0.0, 0.0));
        }
        let ok = |t: f64| -> Result<bool> {
            let (a, b) = self.path(t);
            Ok(lambda_bound(a, b)? >= lambda)
        };
        let hi_t = self.t_max();
        if ok(hi_t)? {
            return Ok(self.path(hi_t));
        }
        let (mut lo, mut hi) = (0.0, hi_t);
        while hi - lo > INVERSION_TOL {
            let mid = 0.5 * (lo + hi);
            if ok(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(self.path(lo))
    }

    /// Tight parameters ramped as `α_k = (1−1/k)α`, `β_k = (1−1/k)β`, with constant `λ`.
    pub fn schedule(&self, lambda: f64) -> Result<ParameterSchedule> {
        let (a, b) = self.tight_parameters(lambda)?;
        Ok(ParameterSchedule::ramped(a, b, lambda))
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Variant::None),
            "hb" | "heavy-ball" => Ok(Variant::HeavyBall),
            "nesterov" => Ok(Variant::Nesterov),
            "reflected" => Ok(Variant::Reflected),
            other => Err(Error::config(format!(
                "unknown variant '{other}' (expected none|hb|nesterov|reflected)"
            ))),
        }
    }
}
