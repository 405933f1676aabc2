//! Spectral tightness study of the relaxation bound on planar rotations.
//!
//! Identifying the plane with `ℂ`, the rotation `T_φ z = e^{iφ} z` turns the
//! constant-parameter iteration into the recurrence `x_{k+1} = ω x_k − δ x_{k−1}`
//! with `ω = (1−λ)(1+α) + λ(1+β)e^{iφ}` and `δ = (1−λ)α + λβe^{iφ}`, i.e. the
//! companion matrix `[[ω, −δ], [1, 0]]`. The iteration converges iff its
//! spectral radius is below 1; `λ̃(α, β, φ)` is the supremum of such `λ`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::iteration::fmt_num;
use crate::schedules::lambda_bound;

/// Step of the coarse scan over `λ ∈ (0, 1]`.
pub const SCAN_STEP: f64 = 1e-3;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_PHI_COUNT: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompanionSystem {
    pub omega: Complex64,
    pub delta: Complex64,
}

impl CompanionSystem {
    /// `[[ω, −δ], [1, 0]]`, row-major.
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        [
            [self.omega, -self.delta],
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        ]
    }

    /// Advances `(x_k, x_{k−1})` one step.
    pub fn advance(&self, x: Complex64, x_prev: Complex64) -> Complex64 {
        self.omega * x - self.delta * x_prev
    }

    /// Roots of `μ² − ωμ + δ`, larger modulus first.
    pub fn eigenvalues(&self) -> (Complex64, Complex64) {
        let disc = (self.omega * self.omega - 4.0 * self.delta).sqrt();
        // take the sign that avoids cancellation, then recover the other root by Vieta
        let (a, b) = (self.omega + disc, self.omega - disc);
        let big = if a.norm_sqr() >= b.norm_sqr() { a } else { b } * 0.5;
        let small = if big.norm_sqr() == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            self.delta / big
        };
        (big, small)
    }
}

pub fn companion(alpha: f64, beta: f64, lambda: f64, phi: f64) -> CompanionSystem {
    companion_rot(alpha, beta, lambda, Complex64::from_polar(1.0, phi))
}

fn companion_rot(alpha: f64, beta: f64, lambda: f64, rot: Complex64) -> CompanionSystem {
    CompanionSystem {
        omega: (1.0 - lambda) * (1.0 + alpha) + lambda * (1.0 + beta) * rot,
        delta: (1.0 - lambda) * alpha + lambda * beta * rot,
    }
}

pub fn spectral_radius(sys: &CompanionSystem) -> f64 {
    let (a, b) = sys.eigenvalues();
    a.norm().max(b.norm())
}

/// Schur–Cohn test: both roots of `μ² − ωμ + δ` lie in the open unit disk iff
/// `|δ| < 1` and `|ω − ω̄δ| < 1 − |δ|²`.
pub fn is_schur_stable(sys: &CompanionSystem) -> bool {
    let d2 = sys.delta.norm_sqr();
    if d2 >= 1.0 {
        return false;
    }
    (sys.omega - sys.omega.conj() * sys.delta).norm() < 1.0 - d2
}

fn stable(alpha: f64, beta: f64, lambda: f64, rot: Complex64) -> bool {
    is_schur_stable(&companion_rot(alpha, beta, lambda, rot))
}

/// Convergence threshold for one rotation angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub value: f64,
    /// No scanned `λ` was stable.
    pub empty: bool,
    /// Some `λ` beyond the first instability was stable again.
    pub anomaly: bool,
}

/// `sup{λ ∈ (0,1]: ρ(companion(α,β,λ,φ)) < 1}`: coarse scan, then bisection on
/// the first stable→unstable transition. When the very first scan point is
/// already unstable the bisection runs on `(0, SCAN_STEP)`. Returns 1 if every
/// scanned `λ` below 1 is stable and the transition lies within `2·tol` of 1.
pub fn lambda_tilde_phi(alpha: f64, beta: f64, phi: f64, tol: f64) -> Result<Threshold> {
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance {tol} must be positive")));
    }
    let rot = Complex64::from_polar(1.0, phi);
    let steps = (1.0 / SCAN_STEP).round() as usize;
    let at = |j: usize| j as f64 * SCAN_STEP;
    let first_bad = (1..=steps).find(|&j| !stable(alpha, beta, at(j), rot));
    let Some(j) = first_bad else {
        return Ok(Threshold {
            value: 1.0,
            empty: false,
            anomaly: false,
        });
    };
    let anomaly = (j + 1..=steps).any(|i| stable(alpha, beta, at(i), rot));
    let (mut lo, mut hi) = (at(j - 1), at(j));
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if stable(alpha, beta, mid, rot) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let value = if j == steps && lo > 1.0 - 2.0 * tol {
        1.0
    } else {
        lo
    };
    Ok(Threshold {
        value,
        empty: j == 1 && lo == 0.0,
        anomaly,
    })
}

/// The angle grid `{jπ/n : j = 1..n}`.
pub fn phi_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|j| j as f64 * PI / n as f64).collect()
}

/// `inf_φ λ̃(α, β, φ)` over the given angle grid.
pub fn lambda_tilde_on(alpha: f64, beta: f64, phis: &[f64], tol: f64) -> Result<f64> {
    let mut best = f64::INFINITY;
    for &phi in phis {
        best = best.min(lambda_tilde_phi(alpha, beta, phi, tol)?.value);
    }
    Ok(best)
}

/// `λ̃(α, β)` over the default 30-angle grid and bisection tolerance.
pub fn lambda_tilde(alpha: f64, beta: f64) -> Result<f64> {
    lambda_tilde_on(alpha, beta, &phi_grid(DEFAULT_PHI_COUNT), DEFAULT_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    HeavyBall,
    Nesterov,
    Reflected,
    General,
}

impl Regime {
    pub const ALL: [Regime; 4] = [
        Regime::HeavyBall,
        Regime::Nesterov,
        Regime::Reflected,
        Regime::General,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Regime::HeavyBall => "heavy-ball",
            Regime::Nesterov => "nesterov",
            Regime::Reflected => "reflected",
            Regime::General => "general",
        }
    }

    pub fn domain(&self) -> &'static str {
        match self {
            Regime::HeavyBall => "{(a,0): a in [0,1)}",
            Regime::Nesterov => "{(a,a): a in [0,1)}",
            Regime::Reflected => "{(0,b): b in [0,1]}",
            Regime::General => "[0,1) x [0,1]",
        }
    }

    /// Samples of the regime's domain; `α` uses `i/n` (excluding 1), `β` uses `j/(n−1)`.
    pub fn samples(&self, n: usize) -> Vec<(f64, f64)> {
        let a = |i: usize| i as f64 / n as f64;
        let b = |j: usize| j as f64 / (n - 1) as f64;
        match self {
            Regime::HeavyBall => (0..n).map(|i| (a(i), 0.0)).collect(),
            Regime::Nesterov => (0..n).map(|i| (a(i), a(i))).collect(),
            Regime::Reflected => (0..n).map(|j| (0.0, b(j))).collect(),
            Regime::General => (0..n)
                .flat_map(|i| (0..n).map(move |j| (a(i), b(j))))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TightnessSample {
    pub alpha: f64,
    pub beta: f64,
    pub lambda_bound: f64,
    pub lambda_tilde: f64,
}

impl TightnessSample {
    pub fn gap(&self) -> f64 {
        self.lambda_tilde - self.lambda_bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeSummary {
    pub regime: Regime,
    pub samples: Vec<TightnessSample>,
    /// Mean `|λ̃ − λ|` times the domain measure (1 for every regime).
    pub gap_l1: f64,
    pub gap_linf: f64,
    /// Sample where `gap_linf` is attained.
    pub argmax: (f64, f64),
    /// Most negative gap; the bound is sufficient so this should be `≥ −tol`.
    pub min_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TightnessReport {
    pub resolution: usize,
    pub tol: f64,
    pub regimes: Vec<RegimeSummary>,
}

impl TightnessReport {
    pub fn regime(&self, r: Regime) -> Option<&RegimeSummary> {
        self.regimes.iter().find(|s| s.regime == r)
    }

    /// Largest gap over all regimes.
    pub fn gap_linf(&self) -> f64 {
        self.regimes.iter().map(|r| r.gap_linf).fold(0.0, f64::max)
    }

    /// `regime,alpha,beta,lambda_bound,lambda_tilde,gap` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "regime",
            "alpha",
            "beta",
            "lambda_bound",
            "lambda_tilde",
            "gap",
        ])?;
        for r in &self.regimes {
            for s in &r.samples {
                w.write_record([
                    r.regime.name().to_string(),
                    fmt_num(s.alpha),
                    fmt_num(s.beta),
                    fmt_num(s.lambda_bound),
                    fmt_num(s.lambda_tilde),
                    fmt_num(s.gap()),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Summary block: `regime,domain,gap_l1,gap_linf`.
    pub fn write_summary<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["regime", "domain", "gap_l1", "gap_linf"])?;
        for r in &self.regimes {
            w.write_record([
                r.regime.name().to_string(),
                r.regime.domain().to_string(),
                fmt_num(r.gap_l1),
                fmt_num(r.gap_linf),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluates `λ` and `λ̃` on a set of `(α, β)` samples in parallel.
pub fn evaluate_samples(
    points: &[(f64, f64)],
    phis: &[f64],
    tol: f64,
) -> Result<Vec<TightnessSample>> {
    points
        .par_iter()
        .map(|&(alpha, beta)| {
            Ok(TightnessSample {
                alpha,
                beta,
                lambda_bound: lambda_bound(alpha, beta)?,
                lambda_tilde: lambda_tilde_on(alpha, beta, phis, tol)?,
            })
        })
        .collect()
}

pub fn summarize(regime: Regime, samples: Vec<TightnessSample>) -> RegimeSummary {
    let mut linf = 0.0;
    let mut argmax = (samples[0].alpha, samples[0].beta);
    let mut total = 0.0;
    let mut min_gap = f64::INFINITY;
    for s in &samples {
        let g = s.gap();
        total += g.abs();
        min_gap = min_gap.min(g);
        if g.abs() > linf {
            linf = g.abs();
            argmax = (s.alpha, s.beta);
        }
    }
    RegimeSummary {
        regime,
        gap_l1: total / samples.len() as f64,
        gap_linf: linf,
        argmax,
        min_gap,
        samples,
    }
}

/// Gap statistics over the requested regimes at the given resolution.
pub fn tightness_report_for(
    regimes: &[Regime],
    resolution: usize,
    tol: f64,
    phi_count: usize,
) -> Result<TightnessReport> {
    if resolution < 10 {
        return Err(Error::domain(format!(
            "grid resolution {resolution} must be at least 10"
        )));
    }
    let phis = phi_grid(phi_count);
    let regimes = regimes
        .iter()
        .map(|&r| {
            Ok(summarize(
                r,
                evaluate_samples(&r.samples(resolution), &phis, tol)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TightnessReport {
        resolution,
        tol,
        regimes,
    })
}

/// All four regimes on the default angle grid.
pub fn tightness_report(resolution: usize, tol: f64) -> Result<TightnessReport> {
    tightness_report_for(&Regime::ALL, resolution, tol, DEFAULT_PHI_COUNT)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn companion_examples() {
        let c = companion(0.0, 0.0, 0.5, PI);
        assert!(c.omega.norm() < 1e-15 && c.delta.norm() < 1e-15);
        let c = companion(0.0, 1.0, 0.5, PI);
        assert_relative_eq!(c.omega.re, -0.5, epsilon = 1e-15);
        assert_relative_eq!(c.delta.re, -0.5, epsilon = 1e-15);
        assert!(c.omega.im.abs() < 1e-15 && c.delta.im.abs() < 1e-15);
        for (l, phi) in [(0.2, 0.3), (0.9, 2.0)] {
            assert_eq!(companion(0.0, 0.0, l, phi).delta, Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn spectral_radius_examples() {
        let sys = |w: Complex64, d: Complex64| CompanionSystem { omega: w, delta: d };
        let zero = Complex64::new(0.0, 0.0);
        assert_eq!(spectral_radius(&sys(zero, zero)), 0.0);
        let r = spectral_radius(&sys(Complex64::new(-0.5, 0.0), Complex64::new(-0.5, 0.0)));
        assert_relative_eq!(r, 1.0, epsilon = 1e-15);
        let r = spectral_radius(&sys(Complex64::new(0.5, 0.5), zero));
        assert_relative_eq!(r, 0.5f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn threshold_examples() {
        let t = lambda_tilde_phi(0.0, 1.0, PI, 1e-6).unwrap();
        assert!((t.value - 0.5).abs() <= 1e-6);
        for phi in phi_grid(30) {
            let t = lambda_tilde_phi(0.0, 0.0, phi, 1e-6).unwrap();
            assert_eq!(t.value, 1.0, "phi = {phi}");
        }
        let t = lambda_tilde_phi(0.5, 0.5, PI, 1e-6).unwrap();
        assert!(t.value >= 0.25);
        assert!(lambda_tilde_phi(0.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn infimum_over_angles() {
        assert!((lambda_tilde(0.0, 1.0).unwrap() - 0.5).abs() <= 1e-6);
        assert_eq!(lambda_tilde(0.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn schur_test_agrees_with_radius() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        for _ in 0..20_000 {
            let sys = companion(
                rng.random::<f64>(),
                rng.random::<f64>(),
                rng.random::<f64>(),
                rng.random::<f64>() * PI,
            );
            let r = spectral_radius(&sys);
            if (r - 1.0).abs() > 1e-9 {
                assert_eq!(is_schur_stable(&sys), r < 1.0, "{sys:?} radius {r}");
                checked += 1;
            }
        }
        assert!(checked > 19_000);
    }

    #[test]
    fn thresholds_below_the_scan_step_are_resolved() {
        // α = 0.98, β = 0: the bound is about 2.1e-4, under the first scan point
        let t = lambda_tilde_phi(0.98, 0.0, PI / 30.0, 1e-7).unwrap();
        assert!(!t.empty);
        assert!(t.value > 0.0 && t.value < SCAN_STEP);
        assert!(t.value >= lambda_bound(0.98, 0.0).unwrap() - 1e-6);
    }

    #[test]
    fn report_rejects_coarse_grid() {
        assert!(tightness_report(5, 1e-6).is_err());
    }

    #[test]
    fn regime_samples() {
        let s = Regime::Reflected.samples(11);
        assert_eq!(s.first(), Some(&(0.0, 0.0)));
        assert_eq!(s.last(), Some(&(0.0, 1.0)));
        assert_eq!(Regime::General.samples(10).len(), 100);
        assert!(Regime::HeavyBall
            .samples(10)
            .iter()
            .all(|(a, b)| *a < 1.0 && *b == 0.0));
    }
}
