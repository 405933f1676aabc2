//! Operator zoo: elementary test maps and the composite operators of the
//! inpainting and equilibrium experiments.

mod elementary;
mod image;
mod prox;
mod splitting;

pub use elementary::{
    AffineContraction, BoxProjection, ConstantFamily, Rotation2d, ShiftedFamily, Stationary,
};
pub use image::{ImageTensor, Mask, CHANNELS};
pub use prox::{nuclear_norm, nuclear_prox, singular_values};
pub use splitting::{DavisYin, ProjectedGradient};

use std::sync::Arc;

use crate::Point;

/// A single map `H → H`.
pub trait Operator: Send + Sync {
    fn apply(&self, x: &Point) -> Point;
}

impl<F> Operator for F
where
    F: Fn(&Point) -> Point + Send + Sync,
{
    fn apply(&self, x: &Point) -> Point {
        self(x)
    }
}

impl<O: Operator + ?Sized> Operator for Arc<O> {
    fn apply(&self, x: &Point) -> Point {
        (**self).apply(x)
    }
}

/// An indexed family of quasi-nonexpansive maps `T_k`, `k ≥ 1`.
pub trait OperatorFamily: Send + Sync {
    fn apply(&self, k: usize, x: &Point) -> Point;

    /// Dimension of the domain, when the family is tied to one.
    fn dim(&self) -> Option<usize> {
        None
    }

    /// A known fixed point of `T_k` (common point `p*`, or `p_k` for moving sets).
    fn fixed_point(&self, _k: usize) -> Option<Point> {
        None
    }

    /// True when fixed points move with `k` and have no common element.
    fn is_moving(&self) -> bool {
        false
    }

    /// Point the iterates are expected to approach: `p*`, or `p_∞` for moving sets.
    fn target(&self) -> Option<Point> {
        if self.is_moving() {
            None
        } else {
            self.fixed_point(1)
        }
    }

    /// Uniform quasi-contraction modulus `q < 1`, when known.
    fn contraction_modulus(&self) -> Option<f64> {
        None
    }
}

macro_rules! forward_family {
    ($($ty:ty),*) => {$(
        impl<F: OperatorFamily + ?Sized> OperatorFamily for $ty {
            fn apply(&self, k: usize, x: &Point) -> Point { (**self).apply(k, x) }
            fn dim(&self) -> Option<usize> { (**self).dim() }
            fn fixed_point(&self, k: usize) -> Option<Point> { (**self).fixed_point(k) }
            fn is_moving(&self) -> bool { (**self).is_moving() }
            fn target(&self) -> Option<Point> { (**self).target() }
            fn contraction_modulus(&self) -> Option<f64> { (**self).contraction_modulus() }
        }
    )*};
}

forward_family!(&F, Box<F>, Arc<F>);

/// Largest `‖T_k p_k − p_k‖` over the given indices, for every index where a
/// fixed point is declared. Returns `None` when no fixed point is declared.
pub fn fixed_point_defect<F: OperatorFamily + ?Sized>(
    family: &F,
    indices: impl IntoIterator<Item = usize>,
) -> Option<f64> {
    let mut worst: Option<f64> = None;
    for k in indices {
        if let Some(p) = family.fixed_point(k) {
            let d = (family.apply(k, &p) - &p).norm();
            worst = Some(worst.map_or(d, |w| w.max(d)));
        }
    }
    worst
}
