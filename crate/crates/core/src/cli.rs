//! Command-line front end.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0  | success |
//! | 2  | no third kernel mode found |
//! | 3  | transversality determinant vanishes |
//! | 4  | Newton iteration failed (divergence or surface collapse) |
//! | 64 | usage error (bad arguments, wavenumbers, grid or amplitudes) |
//! | 65 | malformed input data or degenerate triple |
//! | 66 | input file not found |
//! | 70 | internal numerical failure |
//! | 74 | I/O error while writing output |

use clap::{Args, Parser, Subcommand};
use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io::{read_json, to_json, write_field_csv, write_json, write_profile_csv, KernelDocument};
use crate::kernel_finder::{attach_third_mode_with, transversality, AttachOptions};
use crate::modal_classes::{classify, reduced_period_check, Case};
use crate::nonlinear_solver::{
    continue_in_amplitude, solve_branch_point, surface_profile, BranchPoint, SolverOptions,
};
use crate::operator::Grid;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO_THIRD_MODE: i32 = 2;
pub const EXIT_TRANSVERSALITY: i32 = 3;
pub const EXIT_NEWTON: i32 = 4;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_NO_INPUT: i32 = 66;
pub const EXIT_INTERNAL: i32 = 70;
pub const EXIT_IO: i32 = 74;

/// Samples per rendered profile.
pub const PROFILE_SAMPLES: usize = 2048;

#[derive(Debug, Parser)]
#[command(name = "trimodal", version, about = "Trimodal steady water waves with affine vorticity")]
pub struct Cli {
    #[command(flatten)]
    pub config: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

/// Settings shared by every command.
#[derive(Debug, Clone, Args, Serialize)]
pub struct RunConfig {
    /// Newton stopping tolerance on the max-norm residual.
    #[arg(long, global = true, default_value_t = 1e-11)]
    pub tol: f64,
    /// Cosine modes in q.
    #[arg(long, global = true, default_value_t = 64)]
    pub grid_modes: usize,
    /// Vertical intervals in s.
    #[arg(long, global = true, default_value_t = 48)]
    pub grid_s: usize,
    /// Cone parameter of the admissibility check.
    #[arg(long, global = true, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Seed for randomly drawn sweep directions.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidParams(format!("--tol must be positive, got {}", self.tol)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParams(format!("--delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(4..=1024).contains(&self.grid_modes) {
            return Err(Error::InvalidParams(format!("--grid-modes must lie in 4..=1024, got {}", self.grid_modes)));
        }
        if self.grid_s > 512 {
            return Err(Error::InvalidParams(format!("--grid-s must be at most 512, got {}", self.grid_s)));
        }
        Ok(())
    }

    fn solver_options(&self) -> SolverOptions {
        SolverOptions { tol: self.tol, delta: self.delta, ..SolverOptions::default() }
    }

    fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid_modes, self.grid_s)
    }

    fn output(&self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out_dir).map_err(output_error)?;
        Ok(self.out_dir.join(name))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify a three-dimensional kernel at wavenumbers k1 < k2 < k3.
    FindKernel {
        k1: u32,
        k2: u32,
        k3: u32,
        /// Phase of the laminar flow.
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
        lambda: f64,
        /// Trace the two-mode curve even when the closed form applies.
        #[arg(long)]
        continuation: bool,
    },
    /// Modal class, reduced triple and amplitude region of a triple.
    Classify { m1: u64, m2: u64, m3: u64 },
    /// Solve for the wave with kernel amplitudes t.
    Solve {
        /// Kernel JSON written by find-kernel.
        spec: PathBuf,
        #[arg(long, num_args = 3, allow_hyphen_values = true, required = true)]
        t: Vec<f64>,
        /// Stem of the output files.
        #[arg(long, default_value = "branch")]
        name: String,
        #[arg(long, default_value_t = 50)]
        max_iter: usize,
    },
    /// Sample the surfaces of solved branch points.
    Render {
        #[arg(required = true)]
        points: Vec<PathBuf>,
        #[arg(long, default_value_t = PROFILE_SAMPLES)]
        samples: usize,
    },
    /// Continue solutions along rays in amplitude space.
    Sweep {
        spec: PathBuf,
        /// Ray direction; normalised before use.
        #[arg(long, num_args = 3, allow_hyphen_values = true)]
        direction: Option<Vec<f64>>,
        /// Number of random directions drawn with --seed when no direction is given.
        #[arg(long, default_value_t = 1)]
        random: usize,
        #[arg(long, default_value_t = 1e-3)]
        h_max: f64,
        #[arg(long, default_value_t = 10)]
        steps: usize,
    },
}

/// Maps an error to its exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NoThirdMode { .. } => EXIT_NO_THIRD_MODE,
        Error::NewtonDivergence { .. } | Error::DomainCollapse { .. } => EXIT_NEWTON,
        Error::InvalidParams(_) | Error::InvalidWavenumbers(_) | Error::GridMismatch(_) => EXIT_USAGE,
        Error::DegenerateTriple(_) | Error::Parse(_) | Error::Json(_) | Error::Csv(_) => EXIT_DATA,
        Error::Io(e) if e.kind() == std::io::ErrorKind::NotFound => EXIT_NO_INPUT,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_INTERNAL,
    }
}

fn output_error(e: std::io::Error) -> Error {
    // a missing output directory is not a missing input
    Error::Io(std::io::Error::new(
        if e.kind() == std::io::ErrorKind::NotFound { std::io::ErrorKind::Other } else { e.kind() },
        e,
    ))
}

fn write_out<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_json(path, value).map_err(|e| match e {
        Error::Io(io) => output_error(io),
        other => other,
    })
}

/// Parses `args` and runs the command, writing reports to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let cfg = &cli.config;
    cfg.validate()?;
    match &cli.command {
        Command::FindKernel { k1, k2, k3, lambda, continuation } => {
            find_kernel(cfg, [*k1, *k2, *k3], *lambda, *continuation, out)
        }
        Command::Classify { m1, m2, m3 } => classify_cmd([*m1, *m2, *m3], out),
        Command::Solve { spec, t, name, max_iter } => solve(cfg, spec, [t[0], t[1], t[2]], name, *max_iter, out),
        Command::Render { points, samples } => render(cfg, points, *samples, out),
        Command::Sweep { spec, direction, random, h_max, steps } => {
            sweep(cfg, spec, direction.as_deref(), *random, *h_max, *steps, out)
        }
    }
}

fn find_kernel(cfg: &RunConfig, ks: [u32; 3], lambda: f64, continuation: bool, out: &mut dyn Write) -> Result<i32> {
    let opts = AttachOptions { lambda, force_continuation: continuation };
    let spec = attach_third_mode_with(ks[0], ks[1], ks[2], &opts)?;
    let report = transversality(&spec);
    let doc = KernelDocument::new(&spec, report.clone());
    let path = cfg.output(&format!("kernel_{}_{}_{}.json", ks[0], ks[1], ks[2]))?;
    write_out(&path, &doc)?;
    info!("wrote {}", path.display());
    out.write_all(to_json(&doc)?.as_bytes())?;
    Ok(if report.nonzero { EXIT_OK } else { EXIT_TRANSVERSALITY })
}

fn classify_cmd(m: [u64; 3], out: &mut dyn Write) -> Result<i32> {
    let class = classify(m)?;
    writeln!(out, "case\treduced\tdivisor\tregion")?;
    let r = class.reduced;
    writeln!(out, "{}\t({}, {}, {})\t{}\t{}", class.case, r[0], r[1], r[2], class.divisor, class.case.region_formula())?;
    Ok(EXIT_OK)
}

/// Summary printed by `solve`.
#[derive(Serialize)]
struct SolveSummary<'a> {
    wavenumbers: [u32; 3],
    t: [f64; 3],
    mu: f64,
    alpha: f64,
    lambda: f64,
    xi: f64,
    residual: f64,
    iterations: usize,
    case: Case,
    admissible: bool,
    files: [&'a str; 3],
}

fn solve(cfg: &RunConfig, spec_path: &Path, t: [f64; 3], name: &str, max_iter: usize, out: &mut dyn Write) -> Result<i32> {
    let spec = read_json::<KernelDocument>(spec_path)?.spec()?;
    let grid = cfg.grid()?;
    let opts = SolverOptions { max_iter, ..cfg.solver_options() };
    let bp = solve_branch_point(&spec, t, &grid, &opts)?;
    if !bp.admissible {
        eprintln!("warning: t = {t:?} lies outside the region of case {} (delta = {})", bp.case, cfg.delta);
    }
    let files = [format!("{name}.json"), format!("{name}_field.csv"), format!("{name}_profile.csv")];
    write_out(&cfg.output(&files[0])?, &bp)?;
    write_field_csv(&cfg.output(&files[1])?, &bp.field)?;
    write_profile_csv(&cfg.output(&files[2])?, &surface_profile(&bp, PROFILE_SAMPLES))?;
    let p = bp.params;
    let summary = SolveSummary {
        wavenumbers: bp.wavenumbers,
        t: bp.t,
        mu: p.mu,
        alpha: p.alpha,
        lambda: p.lambda,
        xi: p.xi,
        residual: bp.residual_norm,
        iterations: bp.newton_iters,
        case: bp.case,
        admissible: bp.admissible,
        files: [&files[0], &files[1], &files[2]],
    };
    out.write_all(to_json(&summary)?.as_bytes())?;
    Ok(EXIT_OK)
}

fn render(cfg: &RunConfig, points: &[PathBuf], samples: usize, out: &mut dyn Write) -> Result<i32> {
    if samples < 2 {
        return Err(Error::InvalidParams("--samples must be at least 2".into()));
    }
    for path in points {
        let bp: BranchPoint = read_json(path)?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("branch");
        let target = cfg.output(&format!("{stem}_profile.csv"))?;
        write_profile_csv(&target, &surface_profile(&bp, samples))?;
        let active = bp.t.map(|x| x != 0.0);
        let period = reduced_period_check(bp.wavenumbers.map(u64::from), active)
            .map_or_else(|| "flat".to_string(), |p| p.to_string());
        writeln!(out, "{}\t{}\tperiod {period}", path.display(), target.display())?;
    }
    Ok(EXIT_OK)
}

fn unit(d: [f64; 3]) -> Result<[f64; 3]> {
    let n = d.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::InvalidParams("sweep direction must be nonzero".into()));
    }
    Ok(d.map(|x| x / n))
}

fn sweep(
    cfg: &RunConfig,
    spec_path: &Path,
    direction: Option<&[f64]>,
    random: usize,
    h_max: f64,
    steps: usize,
    out: &mut dyn Write,
) -> Result<i32> {
    let spec = read_json::<KernelDocument>(spec_path)?.spec()?;
    let grid = cfg.grid()?;
    let opts = cfg.solver_options();
    let directions = match direction {
        Some(d) => vec![unit([d[0], d[1], d[2]])?],
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            (0..random)
                .map(|_| unit([0; 3].map(|_: i32| rng.gen_range(-1.0..1.0))))
                .collect::<Result<Vec<_>>>()?
        }
    };
    let path = cfg.output("sweep.csv")?;
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["ray", "step", "t1", "t2", "t3", "mu", "alpha", "xi", "residual", "iterations", "admissible"])?;
    let fmt = |v: f64| format!("{v:.16e}");
    for (ray, d) in directions.iter().enumerate() {
        let c = continue_in_amplitude(&spec, *d, h_max, steps, &grid, &opts)?;
        for (step, p) in c.points.iter().enumerate() {
            let mut rec: Vec<String> = vec![ray.to_string(), (step + 1).to_string()];
            rec.extend(p.t.iter().map(|&x| fmt(x)));
            rec.extend([p.params.mu, p.params.alpha, p.params.xi, p.residual_norm].map(fmt));
            rec.push(p.newton_iters.to_string());
            rec.push(p.admissible.to_string());
            w.write_record(&rec)?;
        }
        writeln!(
            out,
            "ray {ray} direction ({:.6}, {:.6}, {:.6}): {} of {steps} points, max |t| {:.6e}{}",
            d[0],
            d[1],
            d[2],
            c.points.len(),
            c.max_amplitude,
            if c.truncated { " (truncated)" } else { "" }
        )?;
    }
    w.flush()?;
    Ok(EXIT_OK)
}
