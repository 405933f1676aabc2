//! `ikm`: command-line driver for inertial Krasnoselskii–Mann experiments.
//!
//! Data goes to `--output` (or stdout) as CSV; the configuration echo,
//! warnings and verdicts go to stderr.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use inertial_km::iteration::fmt_num;
use inertial_km::operators::{AffineContraction, ConstantFamily, Rotation2d};
use inertial_km::problems::{
    build_cournot, build_inpainting, read_ppm, summary_line, synthetic_image, write_pgm_mask,
    write_ppm, Variant, SUMMARY_HEADER,
};
use inertial_km::schedules::{check_feasibility, lambda_bound, FeasibilityVerdict};
use inertial_km::tightness::{tightness_report_for, Regime};
use inertial_km::{
    run, Error, OperatorFamily, ParameterSchedule, PerturbationSchedule, Point, RunReport,
};

const EXIT_USAGE: u8 = 2;
const EXIT_DIVERGED: u8 = 3;
const FEASIBILITY_HORIZON: usize = 10_000;

#[derive(Parser, Debug)]
#[command(
    name = "ikm",
    version,
    about = "Inertial Krasnoselskii-Mann iterations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Relaxation bound over a grid of inertia parameters.
    Feasibility(FeasibilityArgs),
    /// Gap between the relaxation bound and the spectral threshold on rotations.
    Tightness(TightnessArgs),
    /// Run the iteration on an elementary operator.
    Run(RunArgs),
    /// Colour-image inpainting by three-operator splitting.
    Inpaint(InpaintArgs),
    /// Nash-Cournot equilibrium by projected gradient.
    Cournot(CournotArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RegimeArg {
    Hb,
    Nesterov,
    Reflected,
    General,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Hb => Regime::HeavyBall,
            RegimeArg::Nesterov => Regime::Nesterov,
            RegimeArg::Reflected => Regime::Reflected,
            RegimeArg::General => Regime::General,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    None,
    Hb,
    Nesterov,
    Reflected,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::None => Variant::None,
            VariantArg::Hb => Variant::HeavyBall,
            VariantArg::Nesterov => Variant::Nesterov,
            VariantArg::Reflected => Variant::Reflected,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OperatorArg {
    Contraction,
    Rotation,
    ConstantSeq,
}

#[derive(Args, Debug)]
struct FeasibilityArgs {
    #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u32).range(2..))]
    alpha_steps: u32,
    #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u32).range(2..))]
    beta_steps: u32,
    #[arg(long, value_enum, default_value_t = RegimeArg::General)]
    regime: RegimeArg,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TightnessArgs {
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(10..))]
    resolution: u32,
    #[arg(long, default_value_t = 1e-6, value_parser = positive)]
    tol: f64,
    /// Number of rotation angles jπ/n, j = 1..n.
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u32).range(1..))]
    phi_count: u32,
    /// Restrict to one regime; all four by default.
    #[arg(long, value_enum)]
    regime: Option<RegimeArg>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Also write the per-regime summary as CSV.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, value_enum)]
    operator: OperatorArg,
    #[arg(long, default_value_t = 0.0, value_parser = unit_closed)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0, value_parser = unit_closed)]
    beta: f64,
    #[arg(long, default_value_t = 0.5, value_parser = unit_open)]
    lambda: f64,
    /// Ramp α and β as (1 − 1/k)·value.
    #[arg(long)]
    ramp: bool,
    /// Contraction modulus of `contraction`.
    #[arg(long, default_value_t = 0.5, value_parser = unit_open)]
    q: f64,
    /// Angle of `rotation`, in (0, π].
    #[arg(long, default_value_t = std::f64::consts::PI)]
    phi: f64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    dim: u32,
    /// Perturbation streams, e.g. "eps=1/k^2, theta=0.5/k^1.5".
    #[arg(long, default_value = "", value_parser = perturbation)]
    perturb: String,
    #[arg(long, default_value_t = 1e-8, value_parser = positive)]
    tol: f64,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_iter: u64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InpaintArgs {
    /// Binary PPM (P6) input.
    #[arg(
        long,
        conflicts_with = "synthetic",
        required_unless_present = "synthetic"
    )]
    image: Option<PathBuf>,
    /// Use the built-in smooth test pattern of this side length instead of a file.
    #[arg(long)]
    synthetic: Option<u32>,
    #[arg(long, default_value_t = 0.5, value_parser = ratio)]
    ratio: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5, value_parser = positive)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 0.5, value_parser = unit_open)]
    lambda: f64,
    #[arg(long, value_enum, default_value_t = VariantArg::None)]
    variant: VariantArg,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    max_iter: u64,
    /// Override the size-rescaled stopping tolerance.
    #[arg(long, value_parser = positive)]
    tol: Option<f64>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Write the recovered image as PPM.
    #[arg(long)]
    recovered: Option<PathBuf>,
    /// Write the sampled mask as PGM.
    #[arg(long)]
    mask: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CournotArgs {
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
    m: u32,
    #[arg(long, default_value_t = 200.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Step as a multiple of 1/L.
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    rho_frac: f64,
    #[arg(long, default_value_t = 0.5, value_parser = unit_open)]
    lambda: f64,
    #[arg(long, value_enum, default_value_t = VariantArg::None)]
    variant: VariantArg,
    #[arg(long, default_value_t = 1e-4, value_parser = positive)]
    tol: f64,
    #[arg(long, default_value_t = 800, value_parser = clap::value_parser!(u64).range(1..))]
    max_iter: u64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn number(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|e| format!("{s}: {e}"))
}

fn positive(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must be positive"))
    }
}

fn unit_closed(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} must lie in [0,1]"))
    }
}

fn unit_open(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} must lie in (0,1)"))
    }
}

fn ratio(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} must lie in [0,1)"))
    }
}

fn perturbation(s: &str) -> Result<String, String> {
    PerturbationSchedule::parse(s)
        .map(|_| s.to_string())
        .map_err(|e| e.to_string())
}

enum Failure {
    Usage(String),
    Diverged(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Diverged { .. } => Failure::Diverged(e.to_string()),
            Error::Domain(_) | Error::Config(_) => Failure::Usage(e.to_string()),
            e => Failure::Other(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Other(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn echo(command: &str, pairs: &[(&str, String)]) {
    let body: Vec<String> = pairs.iter().map(|(k, v)| format!("{k}={v}")).collect();
    eprintln!("# ikm {command} {}", body.join(" "));
}

fn path_or(p: &Option<PathBuf>, default: &str) -> String {
    p.as_deref()
        .map_or(default.to_string(), |p| p.display().to_string())
}

fn warn_if_infeasible(verdict: &FeasibilityVerdict) {
    for v in &verdict.violations {
        eprintln!("warning: {v}");
    }
    if !verdict.feasible_weak {
        eprintln!(
            "warning: parameters violate the relaxation-inertia inequality (margin sup {}); convergence is not guaranteed",
            fmt_num(verdict.weak_margin_sup)
        );
    }
}

fn write_report(report: &RunReport, output: &Option<PathBuf>) -> CmdResult {
    let mut out = sink(output)?;
    report.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

/// Runs, writes the trace even when the run diverged, and maps divergence to its exit code.
fn run_and_write<F: OperatorFamily + ?Sized>(
    family: &F,
    schedule: &ParameterSchedule,
    perts: &PerturbationSchedule,
    x0: Point,
    tol: f64,
    max_iter: usize,
    output: &Option<PathBuf>,
) -> Result<RunReport, Failure> {
    match run(family, schedule, perts, x0, tol, max_iter) {
        Ok(rep) => {
            write_report(&rep, output)?;
            Ok(rep)
        }
        Err(Error::Diverged {
            last_finite_k,
            report,
        }) => {
            write_report(&report, output)?;
            Err(Failure::Diverged(format!(
                "iteration diverged after k = {last_finite_k}"
            )))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_feasibility(a: FeasibilityArgs) -> CmdResult {
    echo(
        "feasibility",
        &[
            ("alpha_steps", a.alpha_steps.to_string()),
            ("beta_steps", a.beta_steps.to_string()),
            ("regime", format!("{:?}", a.regime).to_lowercase()),
            ("output", path_or(&a.output, "-")),
        ],
    );
    let alphas: Vec<f64> = (0..a.alpha_steps)
        .map(|i| i as f64 / a.alpha_steps as f64)
        .collect();
    let betas: Vec<f64> = (0..a.beta_steps)
        .map(|j| j as f64 / (a.beta_steps - 1) as f64)
        .collect();
    let points: Vec<(f64, f64)> = match a.regime {
        RegimeArg::Hb => alphas.iter().map(|&x| (x, 0.0)).collect(),
        RegimeArg::Nesterov => alphas.iter().map(|&x| (x, x)).collect(),
        RegimeArg::Reflected => betas.iter().map(|&b| (0.0, b)).collect(),
        RegimeArg::General => alphas
            .iter()
            .flat_map(|&x| betas.iter().map(move |&b| (x, b)))
            .collect(),
    };
    let mut out = sink(&a.output)?;
    writeln!(out, "alpha,beta,lambda_bound")?;
    for (x, b) in points {
        writeln!(
            out,
            "{},{},{}",
            fmt_num(x),
            fmt_num(b),
            fmt_num(lambda_bound(x, b)?)
        )?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_tightness(a: TightnessArgs) -> CmdResult {
    let regimes: Vec<Regime> = match a.regime {
        Some(r) => vec![r.into()],
        None => Regime::ALL.to_vec(),
    };
    echo(
        "tightness",
        &[
            ("resolution", a.resolution.to_string()),
            ("tol", fmt_num(a.tol)),
            ("phi_count", a.phi_count.to_string()),
            (
                "regimes",
                regimes
                    .iter()
                    .map(|r| r.name())
                    .collect::<Vec<_>>()
                    .join("+"),
            ),
            ("output", path_or(&a.output, "-")),
        ],
    );
    let rep = tightness_report_for(&regimes, a.resolution as usize, a.tol, a.phi_count as usize)?;
    let mut out = sink(&a.output)?;
    rep.write_csv(&mut out)?;
    out.flush()?;
    if let Some(p) = &a.summary {
        rep.write_summary(sink(&Some(p.clone()))?)?;
    }
    eprintln!(
        "{:<11} {:>10} {:>10}  argmax",
        "regime", "gap_l1", "gap_linf"
    );
    for r in &rep.regimes {
        eprintln!(
            "{:<11} {:>10.5} {:>10.5}  ({:.4}, {:.4})  min gap {:.2e}",
            r.regime.name(),
            r.gap_l1,
            r.gap_linf,
            r.argmax.0,
            r.argmax.1,
            r.min_gap
        );
    }
    Ok(())
}

fn cmd_run(a: RunArgs) -> CmdResult {
    let schedule = if a.ramp {
        ParameterSchedule::ramped(a.alpha, a.beta, a.lambda)
    } else {
        ParameterSchedule::constant(a.alpha, a.beta, a.lambda)
    };
    let dim = a.dim as usize;
    let perts = PerturbationSchedule::parse(&a.perturb)?;
    echo(
        "run",
        &[
            ("operator", format!("{:?}", a.operator).to_lowercase()),
            ("schedule", schedule.to_string().replace(' ', "")),
            ("q", fmt_num(a.q)),
            ("phi", fmt_num(a.phi)),
            ("dim", dim.to_string()),
            ("perturb", format!("\"{}\"", a.perturb.trim())),
            ("tol", fmt_num(a.tol)),
            ("max_iter", a.max_iter.to_string()),
            ("output", path_or(&a.output, "-")),
        ],
    );
    warn_if_infeasible(&check_feasibility(&schedule, FEASIBILITY_HORIZON)?);
    let max_iter = a.max_iter as usize;
    let rep = match a.operator {
        OperatorArg::Contraction => {
            let p = Point::from_element(dim, 1.0);
            let fam = AffineContraction::new(p, a.q)?;
            run_and_write(
                &fam,
                &schedule,
                &perts,
                Point::zeros(dim),
                a.tol,
                max_iter,
                &a.output,
            )?
        }
        OperatorArg::Rotation => {
            if dim != 2 {
                return Err(Failure::Usage(
                    "rotation acts on the plane: use --dim 2".into(),
                ));
            }
            let fam = Rotation2d::new(a.phi)?;
            let x0 = Point::from_vec(vec![1.0, 0.0]);
            run_and_write(&fam, &schedule, &perts, x0, a.tol, max_iter, &a.output)?
        }
        OperatorArg::ConstantSeq => {
            let target = Point::from_element(dim, 1.0);
            let t = target.clone();
            let e = Point::from_fn(dim, |i, _| if i == 0 { 1.0 } else { 0.0 });
            let fam = ConstantFamily::from_fn(dim, move |k| &t + &e / (k * k) as f64, Some(target));
            run_and_write(
                &fam,
                &schedule,
                &perts,
                Point::zeros(dim),
                a.tol,
                max_iter,
                &a.output,
            )?
        }
    };
    eprintln!(
        "verdict: {} after {} iterations, residual {}",
        if rep.converged() {
            "converged"
        } else {
            "not converged"
        },
        rep.iterations,
        fmt_num(rep.final_residual())
    );
    Ok(())
}

fn print_summary(variant: Variant, lambda: f64, rho: f64, key: &str, rep: &RunReport) {
    eprintln!("{SUMMARY_HEADER}");
    eprintln!(
        "{}",
        summary_line(variant, lambda, rho, key, rep.iterations, rep.converged())
    );
}

fn cmd_inpaint(a: InpaintArgs) -> CmdResult {
    let (image, source) = match (&a.image, a.synthetic) {
        (Some(p), _) => (read_ppm(p)?, p.display().to_string()),
        (None, Some(n)) => (
            synthetic_image(n as usize, n as usize),
            format!("synthetic:{n}"),
        ),
        (None, None) => return Err(Failure::Usage("need --image or --synthetic".into())),
    };
    let variant: Variant = a.variant.into();
    let schedule = variant.schedule(a.lambda)?;
    let prob = build_inpainting(image, a.ratio, a.seed, a.sigma, a.rho)?;
    let (rows, cols) = prob.dims();
    let (default_tol, factor) = inertial_km::problems::desk_tolerance(rows, cols);
    let tol = a.tol.unwrap_or(default_tol);
    echo(
        "inpaint",
        &[
            ("image", source),
            ("size", format!("{rows}x{cols}")),
            ("ratio", fmt_num(a.ratio)),
            ("seed", a.seed.to_string()),
            ("sigma", fmt_num(a.sigma)),
            ("rho", fmt_num(a.rho)),
            ("variant", variant.to_string()),
            ("schedule", schedule.to_string().replace(' ', "")),
            ("tol", fmt_num(tol)),
            (
                "tol_scale",
                fmt_num(if a.tol.is_some() { tol / 0.5 } else { factor }),
            ),
            ("max_iter", a.max_iter.to_string()),
            ("output", path_or(&a.output, "-")),
        ],
    );
    if let Some(w) = prob.family().warning() {
        eprintln!("warning: {w}");
    }
    if let Some(p) = &a.mask {
        write_pgm_mask(p, &prob.mask)?;
    }
    let out = match prob.solve_with_tolerance(&schedule, tol, a.max_iter as usize) {
        Ok(o) => o,
        Err(Error::Diverged {
            last_finite_k,
            report,
        }) => {
            write_report(&report, &a.output)?;
            return Err(Failure::Diverged(format!(
                "iteration diverged after k = {last_finite_k}"
            )));
        }
        Err(e) => return Err(e.into()),
    };
    write_report(&out.report, &a.output)?;
    if let Some(p) = &a.recovered {
        write_ppm(p, &out.recovered)?;
    }
    eprintln!(
        "objective {} -> {}",
        fmt_num(out.objective_initial),
        fmt_num(out.objective_final)
    );
    print_summary(variant, a.lambda, a.rho, &fmt_num(a.ratio), &out.report);
    Ok(())
}

fn cmd_cournot(a: CournotArgs) -> CmdResult {
    let variant: Variant = a.variant.into();
    let schedule = variant.schedule(a.lambda)?;
    let prob = build_cournot(a.m as usize, a.gamma, a.seed)?;
    let rho = a.rho_frac / prob.lipschitz;
    echo(
        "cournot",
        &[
            ("m", a.m.to_string()),
            ("gamma", fmt_num(a.gamma)),
            ("seed", a.seed.to_string()),
            ("lipschitz", fmt_num(prob.lipschitz)),
            ("rho", fmt_num(rho)),
            ("variant", variant.to_string()),
            ("schedule", schedule.to_string().replace(' ', "")),
            ("tol", fmt_num(a.tol)),
            ("max_iter", a.max_iter.to_string()),
            ("output", path_or(&a.output, "-")),
        ],
    );
    let op = prob.operator(rho);
    if let Some(w) = op.warning() {
        eprintln!("warning: {w}");
    }
    let rep = run_and_write(
        &op,
        &schedule,
        &PerturbationSchedule::none(),
        prob.initial_point(),
        a.tol,
        a.max_iter as usize,
        &a.output,
    )?;
    eprintln!(
        "vi check at final iterate: {}",
        fmt_num(prob.vi_violation(&rep.final_point)?)
    );
    print_summary(variant, a.lambda, rho, &a.seed.to_string(), &rep);
    Ok(())
}

fn dispatch(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Feasibility(a) => cmd_feasibility(a),
        Command::Tightness(a) => cmd_tightness(a),
        Command::Run(a) => cmd_run(a),
        Command::Inpaint(a) => cmd_inpaint(a),
        Command::Cournot(a) => cmd_cournot(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Diverged(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_DIVERGED)
        }
        Err(Failure::Other(m)) => {
            eprintln!("error: {m}");
            ExitCode::FAILURE
        }
    }
}
