//! Inertial Krasnoselskii–Mann iterations.
//!
//! The core update, for an indexed family of quasi-nonexpansive maps `T_k`, is
//!
//! ```text
//! y_k     = x_k + α_k (x_k − x_{k−1}) + ε_k
//! z_k     = x_k + β_k (x_k − x_{k−1}) + ρ_k
//! x_{k+1} = (1 − λ_k) y_k + λ_k T_k z_k + θ_k
//! ```
//!
//! with `x_0 = x_1`. The crate is split into:
//!
//! * [`schedules`]: parameter and perturbation schedules, plus the admissibility
//!   test for the relaxation/inertia parameters and its closed-form bounds.
//! * [`iteration`]: the update itself, run loop, traces and post-run diagnostics.
//! * [`tightness`]: spectral study of the parameter bound on planar rotations.
//! * [`operators`]: elementary maps, nuclear-norm prox, three-operator splitting
//!   and projected gradient.
//! * [`problems`]: image inpainting and Nash–Cournot experiment instances, and
//!   binary PPM/PGM I/O.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod iteration;
pub mod operators;
pub mod problems;
pub mod schedules;
pub mod tightness;

pub use error::{Error, Result};
pub use iteration::{run, step, IterationState, RunReport, StopReason};
pub use operators::{Operator, OperatorFamily};
pub use schedules::{ParameterSchedule, PerturbationSchedule, Sequence};

/// An element of the ambient finite-dimensional Hilbert space.
pub type Point = nalgebra::DVector<f64>;
