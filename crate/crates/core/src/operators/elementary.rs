use std::fmt;
use std::sync::Arc;

use super::{Operator, OperatorFamily};
use crate::error::{Error, Result};
use crate::Point;

/// A single operator used at every index.
#[derive(Debug, Clone)]
pub struct Stationary<O> {
    op: O,
    fixed_point: Option<Point>,
    modulus: Option<f64>,
}

impl<O: Operator> Stationary<O> {
    pub fn new(op: O) -> Self {
        Self {
            op,
            fixed_point: None,
            modulus: None,
        }
    }

    pub fn with_fixed_point(mut self, p: Point) -> Self {
        self.fixed_point = Some(p);
        self
    }

    pub fn with_modulus(mut self, q: f64) -> Self {
        self.modulus = Some(q);
        self
    }

    pub fn inner(&self) -> &O {
        &self.op
    }
}

impl<O: Operator> OperatorFamily for Stationary<O> {
    fn apply(&self, _k: usize, x: &Point) -> Point {
        self.op.apply(x)
    }

    fn dim(&self) -> Option<usize> {
        self.fixed_point.as_ref().map(Point::len)
    }

    fn fixed_point(&self, _k: usize) -> Option<Point> {
        self.fixed_point.clone()
    }

    fn contraction_modulus(&self) -> Option<f64> {
        self.modulus
    }
}

/// `T x = p* + q (x − p*)`.
#[derive(Debug, Clone)]
pub struct AffineContraction {
    p_star: Point,
    q: f64,
}

impl AffineContraction {
    pub fn new(p_star: Point, q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::domain(format!(
                "contraction modulus {q} must lie in (0,1)"
            )));
        }
        Ok(Self { p_star, q })
    }

    pub fn q(&self) -> f64 {
        self.q
    }
}

impl OperatorFamily for AffineContraction {
    fn apply(&self, _k: usize, x: &Point) -> Point {
        &self.p_star + (x - &self.p_star) * self.q
    }

    fn dim(&self) -> Option<usize> {
        Some(self.p_star.len())
    }

    fn fixed_point(&self, _k: usize) -> Option<Point> {
        Some(self.p_star.clone())
    }

    fn contraction_modulus(&self) -> Option<f64> {
        Some(self.q)
    }
}

/// Counterclockwise rotation of the plane by `phi`.
#[derive(Debug, Clone, Copy)]
pub struct Rotation2d {
    phi: f64,
    cos: f64,
    sin: f64,
}

impl Rotation2d {
    pub fn new(phi: f64) -> Result<Self> {
        if !(phi > 0.0 && phi <= std::f64::consts::PI) {
            return Err(Error::domain(format!(
                "rotation angle {phi} must lie in (0, pi]"
            )));
        }
        let (sin, cos) = phi.sin_cos();
        Ok(Self { phi, cos, sin })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

impl OperatorFamily for Rotation2d {
    fn apply(&self, _k: usize, x: &Point) -> Point {
        Point::from_vec(vec![
            self.cos * x[0] - self.sin * x[1],
            self.sin * x[0] + self.cos * x[1],
        ])
    }

    fn dim(&self) -> Option<usize> {
        Some(2)
    }

    fn fixed_point(&self, _k: usize) -> Option<Point> {
        Some(Point::zeros(2))
    }
}

type PointFn = Arc<dyn Fn(usize) -> Point + Send + Sync>;

#[derive(Clone)]
enum PointSource {
    List(Vec<Point>),
    Func(PointFn),
}

/// `T_k x = p_k` for every `x`: a moving-set family with `Fix(T_k) = {p_k}`.
#[derive(Clone)]
pub struct ConstantFamily {
    source: PointSource,
    dim: usize,
    limit: Option<Point>,
}

impl fmt::Debug for ConstantFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConstantFamily")
            .field("dim", &self.dim)
            .field("limit", &self.limit)
            .finish_non_exhaustive()
    }
}

impl ConstantFamily {
    /// Indices past the end of `points` repeat the last point, which is also the limit.
    pub fn from_points(points: Vec<Point>) -> Result<Self> {
        let last = points
            .last()
            .cloned()
            .ok_or_else(|| Error::config("constant family needs at least one point"))?;
        if let Some(bad) = points.iter().find(|p| p.len() != last.len()) {
            return Err(Error::DimensionMismatch {
                expected: last.len(),
                got: bad.len(),
            });
        }
        Ok(Self {
            dim: last.len(),
            limit: Some(last),
            source: PointSource::List(points),
        })
    }

    /// `p_k = f(k)`, with an optional known limit `p_∞`.
    pub fn from_fn(
        dim: usize,
        f: impl Fn(usize) -> Point + Send + Sync + 'static,
        limit: Option<Point>,
    ) -> Self {
        Self {
            source: PointSource::Func(Arc::new(f)),
            dim,
            limit,
        }
    }

    pub fn point(&self, k: usize) -> Point {
        match &self.source {
            PointSource::List(v) => v[(k.max(1) - 1).min(v.len() - 1)].clone(),
            PointSource::Func(f) => f(k.max(1)),
        }
    }
}

impl OperatorFamily for ConstantFamily {
    fn apply(&self, k: usize, _x: &Point) -> Point {
        self.point(k)
    }

    fn dim(&self) -> Option<usize> {
        Some(self.dim)
    }

    fn fixed_point(&self, k: usize) -> Option<Point> {
        Some(self.point(k))
    }

    fn is_moving(&self) -> bool {
        true
    }

    fn target(&self) -> Option<Point> {
        self.limit.clone()
    }
}

/// `T̃_k x = T_k(x + p_k − p_∞) − p_k + p_∞`, which fixes `p_∞` at every index.
#[derive(Debug, Clone)]
pub struct ShiftedFamily<F> {
    inner: F,
    p_inf: Point,
}

impl<F: OperatorFamily> ShiftedFamily<F> {
    pub fn new(inner: F, p_inf: Point) -> Result<Self> {
        if inner.fixed_point(1).is_none() {
            return Err(Error::config(
                "shifted family needs per-index fixed points p_k",
            ));
        }
        Ok(Self { inner, p_inf })
    }

    fn shift(&self, k: usize) -> Point {
        let p_k = self
            .inner
            .fixed_point(k)
            .expect("inner family declares fixed points");
        p_k - &self.p_inf
    }
}

impl<F: OperatorFamily> OperatorFamily for ShiftedFamily<F> {
    fn apply(&self, k: usize, x: &Point) -> Point {
        let s = self.shift(k);
        self.inner.apply(k, &(x + &s)) - s
    }

    fn dim(&self) -> Option<usize> {
        Some(self.p_inf.len())
    }

    fn fixed_point(&self, _k: usize) -> Option<Point> {
        Some(self.p_inf.clone())
    }

    fn contraction_modulus(&self) -> Option<f64> {
        self.inner.contraction_modulus()
    }
}

/// Componentwise clamp onto `[lo, hi]^n`.
#[derive(Debug, Clone, Copy)]
pub struct BoxProjection {
    lo: f64,
    hi: f64,
}

impl BoxProjection {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::domain(format!("empty box [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
}

impl Operator for BoxProjection {
    fn apply(&self, x: &Point) -> Point {
        x.map(|v| v.clamp(self.lo, self.hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::fixed_point_defect;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn pt(v: &[f64]) -> Point {
        Point::from_column_slice(v)
    }

    #[test]
    fn affine_contraction_examples() {
        let p = pt(&[1.0, -2.0, 0.5]);
        let t = AffineContraction::new(p.clone(), 0.3).unwrap();
        assert_eq!(t.apply(1, &p), p);
        let t0 = AffineContraction::new(Point::zeros(2), 0.5).unwrap();
        assert_eq!(t0.apply(3, &pt(&[1.0, 0.0])), pt(&[0.5, 0.0]));
        assert!(AffineContraction::new(p.clone(), 1.0).is_err());
        assert!(AffineContraction::new(p, 0.0).is_err());
    }

    #[test]
    fn rotation_examples() {
        let r = Rotation2d::new(PI).unwrap();
        let y = r.apply(1, &pt(&[1.0, 0.0]));
        assert_relative_eq!(y[0], -1.0, epsilon = 1e-15);
        assert!(y[1].abs() < 1e-15);
        let r = Rotation2d::new(PI / 2.0).unwrap();
        let y = r.apply(1, &pt(&[1.0, 0.0]));
        assert!(y[0].abs() < 1e-15);
        assert_relative_eq!(y[1], 1.0, epsilon = 1e-15);
        assert!(Rotation2d::new(0.0).is_err());
        assert!(Rotation2d::new(4.0).is_err());
    }

    #[test]
    fn constant_family_examples() {
        let f = ConstantFamily::from_points(vec![pt(&[1.0]), pt(&[2.0])]).unwrap();
        assert_eq!(f.apply(1, &pt(&[9.0])), pt(&[1.0]));
        assert_eq!(f.apply(2, &pt(&[-3.0])), pt(&[2.0]));
        assert_eq!(f.apply(10, &pt(&[0.0])), pt(&[2.0]));
        assert_eq!(f.target(), Some(pt(&[2.0])));
        assert!(f.is_moving());
        assert!(ConstantFamily::from_points(vec![]).is_err());
        assert!(ConstantFamily::from_points(vec![pt(&[1.0]), pt(&[1.0, 2.0])]).is_err());
    }

    #[test]
    fn shifted_family_fixes_the_limit() {
        let p_inf = pt(&[1.0, 1.0]);
        let e = pt(&[1.0, 0.0]);
        let pi = p_inf.clone();
        let inner =
            ConstantFamily::from_fn(2, move |k| &pi + &e / (k * k) as f64, Some(p_inf.clone()));
        let s = ShiftedFamily::new(inner, p_inf.clone()).unwrap();
        assert!(fixed_point_defect(&s, 1..50).unwrap() < 1e-14);

        // zero shift leaves the family unchanged
        let same = ConstantFamily::from_points(vec![p_inf.clone()]).unwrap();
        let s = ShiftedFamily::new(same.clone(), p_inf.clone()).unwrap();
        let x = pt(&[3.0, -1.0]);
        assert_eq!(s.apply(4, &x), same.apply(4, &x));

        let no_fix = Stationary::new(|x: &Point| x.clone());
        assert!(matches!(
            ShiftedFamily::new(no_fix, p_inf),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn box_projection_examples() {
        let b = BoxProjection::new(1.0, 40.0).unwrap();
        let x = pt(&[1.0, 20.0, 40.0]);
        assert_eq!(b.apply(&x), x);
        assert_eq!(b.apply(&pt(&[50.0, -3.0])), pt(&[40.0, 1.0]));
        assert!(BoxProjection::new(2.0, 2.0).is_err());
    }

    proptest! {
        #[test]
        fn contraction_ratio_is_q(v in proptest::collection::vec(-10.0..10.0f64, 3), q in 0.01..0.99f64) {
            let p = pt(&[0.5, 1.0, -1.0]);
            let x = pt(&v);
            prop_assume!((&x - &p).norm() > 1e-6);
            let t = AffineContraction::new(p.clone(), q).unwrap();
            let ratio = (t.apply(1, &x) - &p).norm() / (&x - &p).norm();
            prop_assert!((ratio - q).abs() < 1e-12);
        }

        #[test]
        fn rotation_is_isometry(x in -10.0..10.0f64, y in -10.0..10.0f64, phi in 0.001..PI) {
            let r = Rotation2d::new(phi).unwrap();
            let v = pt(&[x, y]);
            prop_assert!((r.apply(1, &v).norm() - v.norm()).abs() < 1e-12);
        }

        #[test]
        fn box_projection_nonexpansive(
            a in proptest::collection::vec(-100.0..100.0f64, 4),
            b in proptest::collection::vec(-100.0..100.0f64, 4),
        ) {
            let p = BoxProjection::new(1.0, 40.0).unwrap();
            let (a, b) = (pt(&a), pt(&b));
            prop_assert!((p.apply(&a) - p.apply(&b)).norm() <= (a - b).norm() + 1e-12);
        }

        #[test]
        fn shifted_constant_family_quasi_nonexpansive(
            v in proptest::collection::vec(-10.0..10.0f64, 2), k in 1usize..100
        ) {
            let p_inf = pt(&[0.0, 2.0]);
            let pi = p_inf.clone();
            let inner = ConstantFamily::from_fn(2, move |k| &pi + pt(&[1.0, -1.0]) / k as f64, None);
            let s = ShiftedFamily::new(inner, p_inf.clone()).unwrap();
            let x = pt(&v);
            prop_assert!((s.apply(k, &x) - &p_inf).norm() <= (&x - &p_inf).norm() + 1e-12);
        }
    }
}
