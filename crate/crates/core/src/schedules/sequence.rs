use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A real sequence indexed by `k ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum Sequence {
    /// `c_k = c`.
    Constant(f64),
    /// `c_k = (1 − 1/k) c`, nondecreasing towards `c` when `c ≥ 0`.
    Ramp(f64),
    /// Raw finite prefix; indices past the end repeat the last entry.
    /// Suprema over such a sequence are only known up to the inspected horizon.
    Prefix(Vec<f64>),
}

impl Sequence {
    /// Value at index `k`. Index 0 is mapped to index 1 (`x_0 = x_1` convention).
    pub fn at(&self, k: usize) -> f64 {
        let k = k.max(1);
        match self {
            Sequence::Constant(c) => *c,
            Sequence::Ramp(c) => (1.0 - 1.0 / k as f64) * c,
            Sequence::Prefix(v) => match v.get(k - 1) {
                Some(x) => *x,
                None => v.last().copied().unwrap_or(0.0),
            },
        }
    }

    /// Limit as `k → ∞`, when it is known in closed form.
    pub fn limit(&self) -> Option<f64> {
        match self {
            Sequence::Constant(c) | Sequence::Ramp(c) => Some(*c),
            Sequence::Prefix(_) => None,
        }
    }

    /// Whether suprema over this sequence can be evaluated exactly.
    pub fn is_closed_form(&self) -> bool {
        !matches!(self, Sequence::Prefix(_))
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Sequence::Constant(_))
    }

    fn kind(&self) -> &'static str {
        match self {
            Sequence::Constant(_) => "constant",
            Sequence::Ramp(_) => "ramp",
            Sequence::Prefix(_) => "prefix",
        }
    }

    fn value_text(&self) -> String {
        match self {
            Sequence::Constant(c) | Sequence::Ramp(c) => format!("{c}"),
            Sequence::Prefix(v) => v
                .iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(";"),
        }
    }

    fn from_parts(name: &str, value: &str, kind: &str) -> Result<Self> {
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::config(format!("{name}: cannot parse `{s}` as a number")))
        };
        match kind {
            "constant" => Ok(Sequence::Constant(parse(value)?)),
            "ramp" => Ok(Sequence::Ramp(parse(value)?)),
            "prefix" => {
                let v = value.split(';').map(parse).collect::<Result<Vec<_>>>()?;
                if v.is_empty() {
                    return Err(Error::config(format!("{name}: empty prefix")));
                }
                Ok(Sequence::Prefix(v))
            }
            other => Err(Error::config(format!(
                "{name}_kind: unknown kind `{other}`"
            ))),
        }
    }
}

/// Parameters of a single step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub q: f64,
}

impl Params {
    pub fn mu(&self) -> f64 {
        (1.0 - self.lambda) * self.alpha + self.lambda * self.beta
    }

    pub fn nu(&self) -> f64 {
        1.0 / self.lambda - 1.0
    }
}

/// Inertia (`α_k`, `β_k`), relaxation (`λ_k`) and optional contraction moduli (`q_k`).
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSchedule {
    pub alpha: Sequence,
    pub beta: Sequence,
    pub lambda: Sequence,
    pub q: Option<Sequence>,
}

impl ParameterSchedule {
    pub fn new(alpha: Sequence, beta: Sequence, lambda: Sequence) -> Self {
        Self {
            alpha,
            beta,
            lambda,
            q: None,
        }
    }

    pub fn constant(alpha: f64, beta: f64, lambda: f64) -> Self {
        Self::new(
            Sequence::Constant(alpha),
            Sequence::Constant(beta),
            Sequence::Constant(lambda),
        )
    }

    /// `α_k = (1−1/k)α`, `β_k = (1−1/k)β`, constant `λ`.
    pub fn ramped(alpha: f64, beta: f64, lambda: f64) -> Self {
        Self::new(
            Sequence::Ramp(alpha),
            Sequence::Ramp(beta),
            Sequence::Constant(lambda),
        )
    }

    pub fn with_q(mut self, q: Sequence) -> Self {
        self.q = Some(q);
        self
    }

    pub fn at(&self, k: usize) -> Params {
        Params {
            alpha: self.alpha.at(k),
            beta: self.beta.at(k),
            lambda: self.lambda.at(k),
            q: self.q.as_ref().map_or(1.0, |q| q.at(k)),
        }
    }

    /// Parameters in the limit `k → ∞`, if every component has a closed-form limit.
    pub fn limit(&self) -> Option<Params> {
        Some(Params {
            alpha: self.alpha.limit()?,
            beta: self.beta.limit()?,
            lambda: self.lambda.limit()?,
            q: match &self.q {
                Some(q) => q.limit()?,
                None => 1.0,
            },
        })
    }

    pub fn is_closed_form(&self) -> bool {
        self.alpha.is_closed_form()
            && self.beta.is_closed_form()
            && self.lambda.is_closed_form()
            && self.q.as_ref().is_none_or(Sequence::is_closed_form)
    }

    /// Parses `alpha=0.3, alpha_kind=ramp, beta=0, lambda=0.5[, q=0.5]`.
    ///
    /// Entries are separated by commas or whitespace. Missing kinds default to
    /// `constant`; `alpha` and `beta` default to 0. `lambda` is required.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for item in text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
        {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::config(format!("expected key=value, found `{item}`")))?;
            let key = key.trim();
            const KEYS: [&str; 8] = [
                "alpha",
                "alpha_kind",
                "beta",
                "beta_kind",
                "lambda",
                "lambda_kind",
                "q",
                "q_kind",
            ];
            if !KEYS.contains(&key) {
                return Err(Error::config(format!("unknown key `{key}`")));
            }
            if map
                .insert(key.to_string(), value.trim().to_string())
                .is_some()
            {
                return Err(Error::config(format!("duplicate key `{key}`")));
            }
        }
        let seq = |name: &str, default: Option<&str>| -> Result<Option<Sequence>> {
            let kind = map
                .get(&format!("{name}_kind"))
                .map(String::as_str)
                .unwrap_or("constant");
            match map.get(name).map(String::as_str).or(default) {
                Some(v) => Sequence::from_parts(name, v, kind).map(Some),
                None => Ok(None),
            }
        };
        let lambda = seq("lambda", None)?.ok_or_else(|| Error::config("missing `lambda`"))?;
        Ok(Self {
            alpha: seq("alpha", Some("0"))?.expect("defaulted"),
            beta: seq("beta", Some("0"))?.expect("defaulted"),
            lambda,
            q: seq("q", None)?,
        })
    }
}

impl fmt::Display for ParameterSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = vec![];
        let mut push = |name: &str, s: &Sequence| {
            parts.push(format!("{name}={}", s.value_text()));
            parts.push(format!("{name}_kind={}", s.kind()));
        };
        push("alpha", &self.alpha);
        push("beta", &self.beta);
        push("lambda", &self.lambda);
        if let Some(q) = &self.q {
            push("q", q);
        }
        f.write_str(&parts.join(", "))
    }
}

impl FromStr for ParameterSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}
