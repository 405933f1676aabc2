use super::{Operator, OperatorFamily};
use crate::Point;

/// Three-operator splitting map
/// `T = I − J_B + J_A ∘ (2 J_B − I − ρ C ∘ J_B)`.
///
/// `J_A`, `J_B` are the resolvents at step `ρ` (already scaled by the caller)
/// and `C` is `τ`-cocoercive. `T` is nonexpansive for `ρ ∈ (0, 2τ)`; outside that
/// range the operator is still usable but [`DavisYin::is_certified`] is false.
/// Zeros of `A + B + C` are recovered as `J_B(p)` for `p ∈ Fix(T)`.
#[derive(Debug, Clone)]
pub struct DavisYin<JB, JA, C> {
    jb: JB,
    ja: JA,
    c: C,
    rho: f64,
    tau: f64,
}

impl<JB: Operator, JA: Operator, C: Operator> DavisYin<JB, JA, C> {
    pub fn new(jb: JB, ja: JA, c: C, rho: f64, tau: f64) -> Self {
        Self {
            jb,
            ja,
            c,
            rho,
            tau,
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Whether `ρ` lies in the nonexpansiveness range `(0, 2τ)`.
    pub fn is_certified(&self) -> bool {
        self.rho > 0.0 && self.rho < 2.0 * self.tau
    }

    pub fn warning(&self) -> Option<String> {
        (!self.is_certified()).then(|| {
            format!(
                "step {} outside (0, {}): nonexpansiveness not certified",
                self.rho,
                2.0 * self.tau
            )
        })
    }

    /// `J_B(x)`: the candidate solution associated with a governing point `x`.
    pub fn solution(&self, x: &Point) -> Point {
        self.jb.apply(x)
    }

    pub fn apply_point(&self, x: &Point) -> Point {
        let xb = self.jb.apply(x);
        let reflected = &xb * 2.0 - x - self.c.apply(&xb) * self.rho;
        x - xb + self.ja.apply(&reflected)
    }
}

impl<JB: Operator, JA: Operator, C: Operator> OperatorFamily for DavisYin<JB, JA, C> {
    fn apply(&self, _k: usize, x: &Point) -> Point {
        self.apply_point(x)
    }
}

/// `T = P_C(I − ρF)`, nonexpansive when `F` is monotone and `L`-Lipschitz
/// (cocoercive in the affine-monotone case used here) and `0 < ρ < 2/L`.
#[derive(Debug, Clone)]
pub struct ProjectedGradient<P, F> {
    proj: P,
    field: F,
    rho: f64,
    lipschitz: f64,
}

impl<P: Operator, F: Operator> ProjectedGradient<P, F> {
    pub fn new(proj: P, field: F, rho: f64, lipschitz: f64) -> Self {
        Self {
            proj,
            field,
            rho,
            lipschitz,
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn is_certified(&self) -> bool {
        self.rho > 0.0 && self.rho * self.lipschitz < 2.0
    }

    pub fn warning(&self) -> Option<String> {
        (!self.is_certified()).then(|| {
            format!(
                "step {} outside (0, 2/L = {}): nonexpansiveness not certified",
                self.rho,
                2.0 / self.lipschitz
            )
        })
    }

    pub fn apply_point(&self, x: &Point) -> Point {
        self.proj.apply(&(x - self.field.apply(x) * self.rho))
    }
}

impl<P: Operator, F: Operator> OperatorFamily for ProjectedGradient<P, F> {
    fn apply(&self, _k: usize, x: &Point) -> Point {
        self.apply_point(x)
    }
}
