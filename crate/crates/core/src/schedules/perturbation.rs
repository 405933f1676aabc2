use std::fmt;
use std::sync::Arc;

use super::sequence::ParameterSchedule;
use crate::error::{Error, Result};
use crate::Point;

/// Fixed direction of a power-law perturbation.
#[derive(Debug, Clone, PartialEq)]
pub enum Direction {
    /// `(1, …, 1)/√n` in whatever dimension the stream is evaluated.
    Diagonal,
    Vector(Point),
}

impl Direction {
    fn resolve(&self, dim: usize) -> Result<Point> {
        match self {
            Direction::Diagonal => Ok(Point::from_element(dim, 1.0 / (dim as f64).sqrt())),
            Direction::Vector(v) if v.len() == dim => Ok(v.clone()),
            Direction::Vector(v) => Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            }),
        }
    }
}

/// One error stream (`ε_k`, `ρ_k` or `θ_k`), evaluated lazily per index.
#[derive(Clone, Default)]
pub enum Stream {
    #[default]
    Zero,
    /// `scale · k^(−power) · direction`.
    Power {
        scale: f64,
        power: f64,
        direction: Direction,
    },
    /// `v[k−1]`, zero past the end.
    Explicit(Vec<Point>),
    Custom(Arc<dyn Fn(usize, usize) -> Point + Send + Sync>),
}

impl fmt::Debug for Stream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stream::Zero => f.write_str("Zero"),
            Stream::Power {
                scale,
                power,
                direction,
            } => f
                .debug_struct("Power")
                .field("scale", scale)
                .field("power", power)
                .field("direction", direction)
                .finish(),
            Stream::Explicit(v) => f.debug_tuple("Explicit").field(&v.len()).finish(),
            Stream::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Stream {
    pub fn power(scale: f64, power: f64) -> Self {
        Stream::Power {
            scale,
            power,
            direction: Direction::Diagonal,
        }
    }

    /// Builds a stream from `f(k, dim)`.
    pub fn from_fn(f: impl Fn(usize, usize) -> Point + Send + Sync + 'static) -> Self {
        Stream::Custom(Arc::new(f))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Stream::Zero)
    }

    /// Term `k` of the stream in dimension `dim`; `None` means exactly zero.
    /// Indices `k < 1` are zero.
    pub fn at(&self, k: usize, dim: usize) -> Result<Option<Point>> {
        if k == 0 {
            return Ok(None);
        }
        let v = match self {
            Stream::Zero => return Ok(None),
            Stream::Power {
                scale,
                power,
                direction,
            } => direction.resolve(dim)? * (scale * (k as f64).powf(-power)),
            Stream::Explicit(v) => match v.get(k - 1) {
                Some(p) => p.clone(),
                None => return Ok(None),
            },
            Stream::Custom(f) => f(k, dim),
        };
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
        Ok(Some(v))
    }

    fn norm_at(&self, k: usize, dim: usize) -> Result<f64> {
        Ok(match self {
            Stream::Zero => 0.0,
            Stream::Power {
                scale,
                power,
                direction: Direction::Diagonal,
            } => scale.abs() * (k as f64).powf(-power),
            _ => self.at(k, dim)?.map_or(0.0, |v| v.norm()),
        })
    }

    /// Parses `C/k^P`, `1/k^P`, `C/k` or a bare constant `C` (direction is the unit diagonal).
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let bad = || {
            Error::config(format!(
                "cannot parse perturbation `{text}`; expected C/k^P"
            ))
        };
        if text == "0" {
            return Ok(Stream::Zero);
        }
        let (scale, tail) = match text.split_once('/') {
            Some((s, t)) => (s.trim().parse::<f64>().map_err(|_| bad())?, Some(t.trim())),
            None => (text.parse::<f64>().map_err(|_| bad())?, None),
        };
        let power = match tail {
            None => 0.0,
            Some("k") => 1.0,
            Some(t) => t
                .strip_prefix("k^")
                .ok_or_else(bad)?
                .trim()
                .parse::<f64>()
                .map_err(|_| bad())?,
        };
        if !scale.is_finite() || !power.is_finite() {
            return Err(bad());
        }
        Ok(Stream::power(scale, power))
    }
}

/// Perturbation terms at a single index.
#[derive(Debug, Clone, Default)]
pub struct Perturbations {
    pub eps: Option<Point>,
    pub rho: Option<Point>,
    pub theta: Option<Point>,
}

/// The three error streams of the update: `ε_k` (on `y_k`), `ρ_k` (on `z_k`)
/// and `θ_k` (on `x_{k+1}`).
#[derive(Debug, Clone, Default)]
pub struct PerturbationSchedule {
    pub eps: Stream,
    pub rho: Stream,
    pub theta: Stream,
}

impl PerturbationSchedule {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.eps.is_zero() && self.rho.is_zero() && self.theta.is_zero()
    }

    pub fn at(&self, k: usize, dim: usize) -> Result<Perturbations> {
        Ok(Perturbations {
            eps: self.eps.at(k, dim)?,
            rho: self.rho.at(k, dim)?,
            theta: self.theta.at(k, dim)?,
        })
    }

    /// Parses `eps=1/k^2, rho=0.5/k^1.5, theta=...`. An empty string means no perturbation.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Self::default();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::config(format!("expected name=C/k^P, found `{item}`")))?;
            let stream = Stream::parse(value)?;
            match key.trim() {
                "eps" => out.eps = stream,
                "rho" => out.rho = stream,
                "theta" => out.theta = stream,
                other => {
                    return Err(Error::config(format!(
                        "unknown perturbation stream `{other}`"
                    )))
                }
            }
        }
        Ok(out)
    }

    /// Folds `θ` into the other two streams.
    ///
    /// With `x̃_k = x_k − θ_{k−1}` (and `θ_0 = θ_{−1} = 0`), running the returned
    /// schedule produces `x̃_k`, and the same `y_k`, `z_k`:
    /// `ε̃_k = θ_{k−1} + α_k(θ_{k−1} − θ_{k−2}) + ε_k`, likewise `ρ̃_k` with `β_k`.
    pub fn absorb_theta(&self, schedule: &ParameterSchedule) -> Self {
        let fold = |base: Stream, weight: super::Sequence| {
            let theta = self.theta.clone();
            Stream::from_fn(move |k, dim| {
                let th = |j: usize| {
                    theta
                        .at(j, dim)
                        .expect("theta stream dimension")
                        .unwrap_or_else(|| Point::zeros(dim))
                };
                let (t1, t2) = (
                    th(k.saturating_sub(1)),
                    if k >= 2 { th(k - 2) } else { Point::zeros(dim) },
                );
                let w = weight.at(k);
                let mut v = &t1 + (&t1 - &t2) * w;
                if let Some(b) = base.at(k, dim).expect("perturbation stream dimension") {
                    v += b;
                }
                v
            })
        };
        Self {
            eps: fold(self.eps.clone(), schedule.alpha.clone()),
            rho: fold(self.rho.clone(), schedule.beta.clone()),
            theta: Stream::Zero,
        }
    }
}

/// ℓ¹ / ℓ² budget of one stream over a finite horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamBudget {
    /// `Σ_{k≤n} ‖e_k‖` for `n = 1..=horizon`.
    pub l1_partial: Vec<f64>,
    /// `Σ_{k≤n} ‖e_k‖²` for `n = 1..=horizon`.
    pub l2_partial: Vec<f64>,
    /// Last-quarter contribution divided by first-quarter contribution.
    pub l1_tail_ratio: f64,
    pub l2_tail_ratio: f64,
    pub l1_flagged: bool,
    pub l2_flagged: bool,
}

impl StreamBudget {
    pub fn l1(&self) -> f64 {
        self.l1_partial.last().copied().unwrap_or(0.0)
    }

    pub fn l2(&self) -> f64 {
        self.l2_partial.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSummary {
    pub horizon: usize,
    pub eps: StreamBudget,
    pub rho: StreamBudget,
    pub theta: StreamBudget,
}

/// Tail ratio above which a stream is reported as apparently non-summable.
pub const TAIL_RATIO_FLAG: f64 = 1e-2;

fn tail_ratio(terms: &[f64]) -> f64 {
    let n = terms.len();
    let quarter = (n / 4).max(1);
    let first: f64 = terms[..quarter].iter().sum();
    let last: f64 = terms[n - quarter..].iter().sum();
    if last == 0.0 {
        0.0
    } else if first == 0.0 {
        f64::INFINITY
    } else {
        last / first
    }
}

fn budget(stream: &Stream, horizon: usize, dim: usize) -> Result<StreamBudget> {
    let norms = (1..=horizon)
        .map(|k| stream.norm_at(k, dim))
        .collect::<Result<Vec<_>>>()?;
    let squares: Vec<f64> = norms.iter().map(|n| n * n).collect();
    let partial = |v: &[f64]| {
        v.iter()
            .scan(0.0, |acc, x| {
                *acc += x;
                Some(*acc)
            })
            .collect::<Vec<_>>()
    };
    let (r1, r2) = (tail_ratio(&norms), tail_ratio(&squares));
    Ok(StreamBudget {
        l1_partial: partial(&norms),
        l2_partial: partial(&squares),
        l1_tail_ratio: r1,
        l2_tail_ratio: r2,
        l1_flagged: r1 > TAIL_RATIO_FLAG,
        l2_flagged: r2 > TAIL_RATIO_FLAG,
    })
}

/// Partial ℓ¹ and ℓ² sums of every stream, with a tail-growth flag for apparent
/// non-summability.
pub fn classify_perturbations(
    perts: &PerturbationSchedule,
    horizon: usize,
    dim: usize,
) -> Result<PerturbationSummary> {
    if horizon == 0 {
        return Err(Error::domain("horizon must be at least 1"));
    }
    Ok(PerturbationSummary {
        horizon,
        eps: budget(&perts.eps, horizon, dim)?,
        rho: budget(&perts.rho, horizon, dim)?,
        theta: budget(&perts.theta, horizon, dim)?,
    })
}
