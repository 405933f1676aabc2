//! Experiment instances: colour-image inpainting by three-operator splitting
//! and a Nash–Cournot equilibrium by projected gradient, with the inertia
//! variants used to compare them.

pub mod cournot;
pub mod inpainting;
pub mod pnm;
pub mod variants;

pub use cournot::{build_cournot, CournotProblem};
pub use inpainting::{
    build_inpainting, desk_tolerance, synthetic_image, InpaintOutcome, InpaintProblem,
};
pub use pnm::{read_ppm, write_pgm_mask, write_ppm};
pub use variants::Variant;

use crate::iteration::fmt_num;

/// `variant,lambda,rho,ratio_or_seed,iterations,converged`.
pub const SUMMARY_HEADER: &str = "variant,lambda,rho,ratio_or_seed,iterations,converged";

pub fn summary_line(
    variant: Variant,
    lambda: f64,
    rho: f64,
    ratio_or_seed: &str,
    iterations: usize,
    converged: bool,
) -> String {
    format!(
        "{variant},{},{},{ratio_or_seed},{iterations},{converged}",
        fmt_num(lambda),
        fmt_num(rho)
    )
}
