use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::iteration::{run, RunReport};
use crate::operators::{BoxProjection, Operator, ProjectedGradient};
use crate::schedules::{ParameterSchedule, PerturbationSchedule};
use crate::Point;

pub const BOX_LO: f64 = 1.0;
pub const BOX_HI: f64 = 40.0;
const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 100_000;

pub type CournotOperator = ProjectedGradient<BoxProjection, Arc<dyn Operator>>;

/// Oligopoly with linear inverse demand and quadratic costs. Its equilibrium
/// solves the variational inequality `⟨F(x̂), x − x̂⟩ ≥ 0` on `[1, 40]^m`
/// with the affine field `F(x) = Jx + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct CournotProblem {
    pub m: usize,
    pub gamma: f64,
    pub beta_coef: Point,
    pub p_cost: Point,
    pub q_cost: Point,
    /// Zero diagonal, row `i` equal to `β_i` off the diagonal.
    pub b: DMatrix<f64>,
    /// `diag(β)`.
    pub b_tilde: DMatrix<f64>,
    /// `B + 2B̃ + diag(p)`.
    pub jacobian: DMatrix<f64>,
    /// `q − Γ`.
    pub offset: Point,
    /// Spectral norm of the Jacobian.
    pub lipschitz: f64,
    pub seed: Option<u64>,
}

/// Largest singular value of `a` by power iteration on `aᵀa`.
pub fn spectral_norm(a: &DMatrix<f64>, rel_tol: f64) -> f64 {
    let ata = a.transpose() * a;
    let mut v = Point::from_element(a.ncols(), 1.0);
    let mut est = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let w = &ata * &v;
        let n = w.norm();
        if n == 0.0 {
            return 0.0;
        }
        v = w / n;
        if (n - est).abs() <= rel_tol * n {
            return n.sqrt();
        }
        est = n;
    }
    est.sqrt()
}

impl CournotProblem {
    pub fn from_coefficients(
        gamma: f64,
        beta_coef: Point,
        p_cost: Point,
        q_cost: Point,
    ) -> Result<Self> {
        let m = beta_coef.len();
        if m == 0 {
            return Err(Error::domain("need at least one firm"));
        }
        for v in [&p_cost, &q_cost] {
            if v.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: v.len(),
                });
            }
        }
        let b = DMatrix::from_fn(m, m, |i, j| if i == j { 0.0 } else { beta_coef[i] });
        let b_tilde = DMatrix::from_diagonal(&beta_coef);
        let jacobian = &b + &b_tilde * 2.0 + DMatrix::from_diagonal(&p_cost);
        let offset = q_cost.add_scalar(-gamma);
        let lipschitz = spectral_norm(&jacobian, POWER_TOL);
        Ok(Self {
            m,
            gamma,
            beta_coef,
            p_cost,
            q_cost,
            b,
            b_tilde,
            jacobian,
            offset,
            lipschitz,
            seed: None,
        })
    }

    /// `F(x) = Bx − Γ + 2B̃x + (p_i x_i + q_i)_i`.
    pub fn field(&self, x: &Point) -> Result<Point> {
        if x.len() != self.m {
            return Err(Error::domain(format!(
                "point has length {}, expected {}",
                x.len(),
                self.m
            )));
        }
        Ok(&self.jacobian * x + &self.offset)
    }

    pub fn box_projection(&self) -> BoxProjection {
        BoxProjection::new(BOX_LO, BOX_HI).expect("static bounds")
    }

    /// `T = P_C(I − ρF)`.
    pub fn operator(&self, rho: f64) -> CournotOperator {
        let j = self.jacobian.clone();
        let c = self.offset.clone();
        let field: Arc<dyn Operator> = Arc::new(move |x: &Point| &j * x + &c);
        ProjectedGradient::new(self.box_projection(), field, rho, self.lipschitz)
    }

    /// Centre of the box.
    pub fn initial_point(&self) -> Point {
        Point::from_element(self.m, 0.5 * (BOX_LO + BOX_HI))
    }

    /// Most negative `⟨F(x̂), v − x̂⟩` over the `2m` points obtained from `x̂` by
    /// moving one coordinate to either face of the box. Nonnegative at an equilibrium.
    pub fn vi_violation(&self, x_hat: &Point) -> Result<f64> {
        let f = self.field(x_hat)?;
        let mut worst = f64::INFINITY;
        for i in 0..self.m {
            for face in [BOX_LO, BOX_HI] {
                worst = worst.min(f[i] * (face - x_hat[i]));
            }
        }
        Ok(worst)
    }

    /// Smallest eigenvalue of `J + Jᵀ`.
    pub fn monotonicity_margin(&self) -> f64 {
        let sym = &self.jacobian + self.jacobian.transpose();
        SymmetricEigen::new(sym).eigenvalues.min()
    }

    pub fn solve(
        &self,
        rho: f64,
        schedule: &ParameterSchedule,
        tolerance: f64,
        max_iter: usize,
    ) -> Result<RunReport> {
        run(
            &self.operator(rho),
            schedule,
            &PerturbationSchedule::none(),
            self.initial_point(),
            tolerance,
            max_iter,
        )
    }

    /// High-accuracy equilibrium from the uninertial iteration.
    pub fn reference_solution(&self, tolerance: f64) -> Result<Point> {
        let rep = self.solve(
            1.0 / self.lipschitz,
            &ParameterSchedule::constant(0.0, 0.0, 0.5),
            tolerance,
            10_000_000,
        )?;
        if !rep.converged() {
            return Err(Error::Numeric(format!(
                "reference solve stalled at residual {:e}",
                rep.final_residual()
            )));
        }
        Ok(rep.final_point)
    }
}

/// Draws `β_i ∈ (0,1]`, `p_i, q_i ∈ [1,3]` uniformly from the seeded generator.
pub fn build_cournot(m: usize, gamma: f64, seed: u64) -> Result<CournotProblem> {
    if m == 0 {
        return Err(Error::domain("need at least one firm"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beta = Point::from_fn(m, |_, _| 1.0 - rng.random::<f64>());
    let p = Point::from_fn(m, |_, _| 1.0 + 2.0 * rng.random::<f64>());
    let q = Point::from_fn(m, |_, _| 1.0 + 2.0 * rng.random::<f64>());
    let mut prob = CournotProblem::from_coefficients(gamma, beta, p, q)?;
    prob.seed = Some(seed);
    Ok(prob)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::OperatorFamily;

    fn scalar() -> CournotProblem {
        CournotProblem::from_coefficients(
            200.0,
            Point::from_vec(vec![0.5]),
            Point::from_vec(vec![2.0]),
            Point::from_vec(vec![2.0]),
        )
        .unwrap()
    }

    #[test]
    fn scalar_field_and_boundary_equilibrium() {
        let p = scalar();
        assert_eq!(p.b[(0, 0)], 0.0);
        let f = p.field(&Point::from_vec(vec![10.0])).unwrap();
        assert_eq!(f[0], 3.0 * 10.0 + 2.0 - 200.0);
        assert!((p.lipschitz - 3.0).abs() < 1e-9);
        // unconstrained root 66 lies outside the box, so the equilibrium is the face 40
        let x = p.reference_solution(1e-12).unwrap();
        assert!((x[0] - 40.0).abs() < 1e-9);
        assert!(p.vi_violation(&x).unwrap() >= -1e-9);
    }

    #[test]
    fn zero_gives_offset_and_field_is_affine() {
        let p = build_cournot(5, 200.0, 3).unwrap();
        assert_eq!(
            p.field(&Point::zeros(5)).unwrap(),
            p.q_cost.add_scalar(-200.0)
        );
        let x = Point::from_fn(5, |i, _| i as f64 + 1.5);
        let y = Point::from_fn(5, |i, _| 10.0 - i as f64);
        let d = p.field(&x).unwrap() - p.field(&y).unwrap();
        assert!((d - &p.jacobian * (&x - &y)).norm() < 1e-12);
        assert!(p.field(&Point::zeros(4)).is_err());
    }

    #[test]
    fn draws_lie_in_their_intervals() {
        for seed in 0..20 {
            let p = build_cournot(8, 200.0, seed).unwrap();
            assert!(p.beta_coef.iter().all(|b| *b > 0.0 && *b <= 1.0));
            assert!(p
                .p_cost
                .iter()
                .chain(p.q_cost.iter())
                .all(|v| (1.0..=3.0).contains(v)));
            for i in 0..8 {
                assert_eq!(p.b[(i, i)], 0.0);
                assert_eq!(p.b_tilde[(i, i)], p.beta_coef[i]);
                for j in 0..8 {
                    if i != j {
                        assert_eq!(p.b[(i, j)], p.beta_coef[i]);
                    }
                }
            }
            assert!(p.monotonicity_margin() >= -1e-8, "seed {seed}");
        }
        assert_eq!(
            build_cournot(8, 200.0, 5).unwrap(),
            build_cournot(8, 200.0, 5).unwrap()
        );
    }

    #[test]
    fn lipschitz_matches_svd() {
        let p = build_cournot(8, 200.0, 1).unwrap();
        let s = p.jacobian.clone().singular_values().max();
        assert!((p.lipschitz - s).abs() <= 1e-8 * s);
    }

    #[test]
    fn operator_fixes_the_equilibrium() {
        let p = build_cournot(8, 200.0, 2).unwrap();
        let x = p.reference_solution(1e-12).unwrap();
        let t = p.operator(1.0 / p.lipschitz);
        assert!((t.apply(1, &x) - &x).norm() <= 1e-11);
        assert!(p.vi_violation(&x).unwrap() >= -1e-6);
    }
}
