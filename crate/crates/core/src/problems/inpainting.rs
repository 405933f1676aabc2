use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::iteration::{run, RunReport};
use crate::operators::{nuclear_norm, nuclear_prox, DavisYin, ImageTensor, Mask, Operator};
use crate::schedules::{ParameterSchedule, PerturbationSchedule};
use crate::Point;

/// Cocoercivity constant of the data-fit gradient `X ↦ 𝒜X − X_corrupt`.
pub const TAU: f64 = 1.0;
/// Stopping tolerance at the reference scale of 512×512 pixels.
pub const REFERENCE_TOL: f64 = 0.5;
pub const REFERENCE_SIDE: f64 = 512.0;

pub type InpaintOperator = DavisYin<Arc<dyn Operator>, Arc<dyn Operator>, Arc<dyn Operator>>;

/// `min_X ½‖𝒜X − X_corrupt‖² + σ‖X_(1)‖_* + σ‖X_(2)‖_*`, split as
/// `A = σ‖·_(1)‖_*`, `B = σ‖·_(2)‖_*`, `C = ∇ ½‖𝒜· − X_corrupt‖²`.
pub struct InpaintProblem {
    pub original: ImageTensor,
    pub x_corrupt: ImageTensor,
    pub mask: Mask,
    pub sigma: f64,
    pub rho: f64,
    pub ratio: f64,
    pub seed: u64,
    family: InpaintOperator,
}

impl fmt::Debug for InpaintProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InpaintProblem")
            .field("dims", &self.original.dims())
            .field("erased", &self.mask.erased_count())
            .field("sigma", &self.sigma)
            .field("rho", &self.rho)
            .field("ratio", &self.ratio)
            .field("seed", &self.seed)
            .finish_non_exhaustive()
    }
}

fn nan_point(len: usize) -> Point {
    Point::from_element(len, f64::NAN)
}

/// `X ↦ prox_{t‖X_(1)‖_*}` or `prox_{t‖X_(2)‖_*}` on flattened images. A failed
/// SVD yields NaNs, which the run loop reports as divergence.
fn unfolded_prox(rows: usize, cols: usize, threshold: f64, second: bool) -> Arc<dyn Operator> {
    Arc::new(move |x: &Point| {
        let go = || -> Result<Point> {
            let img = ImageTensor::from_point(rows, cols, x)?;
            let out = if second {
                ImageTensor::refold2(&nuclear_prox(&img.unfold2(), threshold)?, rows, cols)?
            } else {
                ImageTensor::refold1(&nuclear_prox(&img.unfold1(), threshold)?, rows, cols)?
            };
            Ok(out.to_point())
        };
        go().unwrap_or_else(|_| nan_point(x.len()))
    })
}

/// Samples a mask with exactly `⌊ratio·M·N⌋` erased pixels, uniformly without replacement.
pub fn sample_mask(rows: usize, cols: usize, ratio: f64, seed: u64) -> Result<Mask> {
    if !(0.0..1.0).contains(&ratio) {
        return Err(Error::domain(format!(
            "erase ratio {ratio} must lie in [0,1)"
        )));
    }
    let n = rows * cols;
    let erase = (ratio * n as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![true; n];
    for idx in rand::seq::index::sample(&mut rng, n, erase) {
        keep[idx] = false;
    }
    Mask::from_vec(rows, cols, keep)
}

pub fn build_inpainting(
    image: ImageTensor,
    ratio: f64,
    seed: u64,
    sigma: f64,
    rho: f64,
) -> Result<InpaintProblem> {
    if !(sigma > 0.0) {
        return Err(Error::domain(format!("sigma = {sigma} must be positive")));
    }
    if !(rho > 0.0 && rho < 2.0 * TAU) {
        return Err(Error::domain(format!(
            "rho = {rho} must lie in (0, {})",
            2.0 * TAU
        )));
    }
    let (rows, cols) = image.dims();
    let mask = sample_mask(rows, cols, ratio, seed)?;
    let x_corrupt = mask.apply(&image);

    let threshold = rho * sigma;
    let jb = unfolded_prox(rows, cols, threshold, true);
    let ja = unfolded_prox(rows, cols, threshold, false);
    let data = x_corrupt.to_point();
    let m = mask.clone();
    let c: Arc<dyn Operator> = Arc::new(move |x: &Point| m.apply_point(x) - &data);
    Ok(InpaintProblem {
        original: image,
        x_corrupt,
        mask,
        sigma,
        rho,
        ratio,
        seed,
        family: DavisYin::new(jb, ja, c, rho, TAU),
    })
}

/// Stopping tolerance rescaled from the 512×512 reference by the square root of
/// the pixel-count ratio. Returns `(tolerance, factor)`.
pub fn desk_tolerance(rows: usize, cols: usize) -> (f64, f64) {
    let factor = ((rows * cols) as f64).sqrt() / REFERENCE_SIDE;
    (REFERENCE_TOL * factor, factor)
}

/// A smooth, nearly low-rank colour test pattern with values in `[0, 1]`.
pub fn synthetic_image(rows: usize, cols: usize) -> ImageTensor {
    ImageTensor::from_fn(rows, cols, |i, j, c| {
        let u = i as f64 / rows as f64;
        let v = j as f64 / cols as f64;
        let ch = c as f64;
        0.45 + 0.25 * (2.0 * PI * u + 0.7 * ch).sin() * (3.0 * PI * v).cos()
            + 0.2 * v * (ch + 1.0) / 3.0
    })
}

#[derive(Debug, Clone)]
pub struct InpaintOutcome {
    pub report: RunReport,
    /// `J_{ρB}` of the last iterate.
    pub recovered: ImageTensor,
    /// Composite objective at `J_{ρB}(x_1)` and at the recovered image.
    pub objective_initial: f64,
    pub objective_final: f64,
    /// Mean-square deviation from the corrupt data over kept pixels, at the same two points.
    pub masked_mse_initial: f64,
    pub masked_mse_final: f64,
    pub tolerance: f64,
    pub tolerance_factor: f64,
}

impl InpaintProblem {
    pub fn family(&self) -> &InpaintOperator {
        &self.family
    }

    pub fn dims(&self) -> (usize, usize) {
        self.original.dims()
    }

    /// `X_0 = X_1 = X_corrupt`.
    pub fn initial_point(&self) -> Point {
        self.x_corrupt.to_point()
    }

    pub fn recover(&self, x: &Point) -> Result<ImageTensor> {
        let (rows, cols) = self.dims();
        ImageTensor::from_point(rows, cols, &self.family.solution(x))
    }

    pub fn objective(&self, x: &ImageTensor) -> Result<f64> {
        let fit = self.mask.apply(x).to_point() - self.x_corrupt.to_point();
        Ok(0.5 * fit.norm_squared()
            + self.sigma * nuclear_norm(&x.unfold1())?
            + self.sigma * nuclear_norm(&x.unfold2())?)
    }

    pub fn masked_mse(&self, x: &ImageTensor) -> f64 {
        let kept = self.mask.apply(x).to_point() - self.x_corrupt.to_point();
        let count = (self.x_corrupt.len() / crate::operators::CHANNELS - self.mask.erased_count())
            * crate::operators::CHANNELS;
        if count == 0 {
            0.0
        } else {
            kept.norm_squared() / count as f64
        }
    }

    /// Runs the splitting iteration from `X_corrupt` with the rescaled tolerance.
    pub fn solve(&self, schedule: &ParameterSchedule, max_iter: usize) -> Result<InpaintOutcome> {
        let (rows, cols) = self.dims();
        let (tol, factor) = desk_tolerance(rows, cols);
        self.solve_with_tolerance(schedule, tol, max_iter)
            .map(|o| InpaintOutcome {
                tolerance_factor: factor,
                ..o
            })
    }

    pub fn solve_with_tolerance(
        &self,
        schedule: &ParameterSchedule,
        tolerance: f64,
        max_iter: usize,
    ) -> Result<InpaintOutcome> {
        let x0 = self.initial_point();
        let start = self.recover(&x0)?;
        let report = run(
            &self.family,
            schedule,
            &PerturbationSchedule::none(),
            x0,
            tolerance,
            max_iter,
        )?;
        let recovered = self.recover(&report.final_point)?;
        Ok(InpaintOutcome {
            objective_initial: self.objective(&start)?,
            objective_final: self.objective(&recovered)?,
            masked_mse_initial: self.masked_mse(&start),
            masked_mse_final: self.masked_mse(&recovered),
            recovered,
            report,
            tolerance,
            tolerance_factor: tolerance / REFERENCE_TOL,
        })
    }
}
