use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use hankelmc::certificate::{golfing_certificate, special_dual_certificate, verify_certificate};
use hankelmc::experiment::{grid_csv, phase_transition_run, RunConfig};
use hankelmc::fourier::hankel_blockdiag;
use hankelmc::geometry::{avg_incoherence, block_svd, check_incoherence_consequences, worst_incoherence, DEFAULT_RANK_TOL};
use hankelmc::sampling::{bernoulli_mask, golfing_partition, project};
use hankelmc::signals::{gen_spectral_3d, gen_spectral_matrix, gen_special, replace_rows};
use hankelmc::solver::{admm_complete, admm_complete_3d};
use hankelmc::{io as fio, Error, HankelShape, Result, SolverConfig, TwoLevelShape};

#[derive(Parser)]
#[command(name = "hankelmc", version, about = "Fourier-domain Hankel matrix completion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a ground-truth instance and optionally a sampling mask
    Gen(GenArgs),
    /// Complete a matrix or 3D array from the entries in a mask
    Complete(CompleteArgs),
    /// Run a phase-transition experiment from a JSON config
    Phase(PhaseArgs),
    /// Build and check a dual certificate
    Certify(CertifyArgs),
    /// Report incoherence parameters of a matrix
    Incoherence(IncoherenceArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GenMode {
    #[value(name = "2d")]
    TwoD,
    #[value(name = "3d")]
    ThreeD,
    Special,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "2d")]
    mode: GenMode,
    /// `d,n` for matrices, `n,s,d` for 3D arrays
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    r: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Two-level shape `L1,K1,L2,K2` (3D only)
    #[arg(long, value_delimiter = ',')]
    shape: Option<Vec<usize>>,
    /// Replace two Fourier-domain rows by adversarial signals (2D only)
    #[arg(long)]
    adversarial: bool,
    #[arg(long)]
    out: PathBuf,
    /// Also draw a Bernoulli(p) mask
    #[arg(long, requires = "mask")]
    p: Option<f64>,
    #[arg(long)]
    mask: Option<PathBuf>,
}

#[derive(Args)]
struct CompleteArgs {
    /// Matrix (`#complex`) or 3D array (`#complex3`) file
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    mask: PathBuf,
    /// Completed output, same format as the input
    #[arg(long)]
    out: PathBuf,
    /// `n1,n2` or `L1,K1,L2,K2`
    #[arg(long, value_delimiter = ',')]
    shape: Option<Vec<usize>>,
    /// Solver settings as JSON; missing fields take their defaults
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Ground truth for the relative error
    #[arg(long)]
    truth: Option<PathBuf>,
    /// JSON report; printed to stdout when omitted
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct PhaseArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    pgm: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    /// Closed-form certificate for the special matrix
    #[arg(long, conflicts_with_all = ["input", "p"])]
    special: bool,
    #[arg(long, requires = "special")]
    d: Option<usize>,
    /// Observed rows of the first column, 1-based
    #[arg(long, value_delimiter = ',', requires = "special")]
    omega: Option<Vec<usize>>,
    /// Ground-truth matrix for the golfing construction
    #[arg(long, required_unless_present = "special")]
    input: Option<PathBuf>,
    #[arg(long, required_unless_present = "special")]
    p: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',')]
    shape: Option<Vec<usize>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IncoherenceArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn emit<S: Serialize>(value: &S, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => fio::save_json(p, value),
        None => {
            let mut out = io::stdout().lock();
            serde_json::to_writer_pretty(&mut out, value).map_err(io::Error::from)?;
            writeln!(out)?;
            Ok(())
        }
    }
}

fn flat_shape(shape: Option<&[usize]>, n: usize) -> Result<HankelShape> {
    let s = match shape {
        None => HankelShape::for_length(n)?,
        Some(&[n1, n2]) => HankelShape::new(n1, n2)?,
        Some(other) => return Err(invalid(format!("expected shape n1,n2, got {other:?}"))),
    };
    s.check_len("--shape", n)?;
    Ok(s)
}

fn cube_shape(shape: Option<&[usize]>, n: usize, s: usize) -> Result<TwoLevelShape> {
    let sh = match shape {
        None => TwoLevelShape::for_dims(n, s)?,
        Some(&[l1, k1, l2, k2]) => TwoLevelShape::new(l1, k1, l2, k2)?,
        Some(other) => return Err(invalid(format!("expected shape L1,K1,L2,K2, got {other:?}"))),
    };
    if sh.slice_dims() != (n, s) {
        return Err(invalid(format!("shape gives slices {:?}, data has ({n}, {s})", sh.slice_dims())));
    }
    Ok(sh)
}

fn is_array3(path: &Path) -> Result<bool> {
    let reader = BufReader::new(fs::File::open(path)?);
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            return Ok(line.trim_start().starts_with("#complex3"));
        }
    }
    Ok(false)
}

fn gen(a: GenArgs) -> Result<()> {
    let dims = a.dims.as_slice();
    match (a.mode, dims) {
        (GenMode::TwoD | GenMode::Special, &[d, n]) => {
            let x = match a.mode {
                GenMode::Special => gen_special::<f64>(d, n),
                _ => {
                    let inst = gen_spectral_matrix::<f64>(d, n, a.r, a.seed)?;
                    if a.adversarial {
                        replace_rows(&inst.xhat, 2, a.r, a.seed)?.0
                    } else {
                        inst.x
                    }
                }
            };
            fio::save_matrix(&a.out, &x)?;
        }
        (GenMode::ThreeD, &[n, s, d]) => {
            if a.adversarial {
                return Err(invalid("--adversarial applies to 2d instances only"));
            }
            let shape = cube_shape(a.shape.as_deref(), n, s)?;
            fio::save_array3(&a.out, &gen_spectral_3d::<f64>(n, s, d, a.r, shape, a.seed)?.x)?;
        }
        _ => return Err(invalid(format!("--dims {dims:?} do not fit the chosen mode"))),
    }
    if let (Some(p), Some(path)) = (a.p, &a.mask) {
        fio::save_mask(path, &bernoulli_mask(dims, p, a.seed)?)?;
    }
    Ok(())
}

fn complete(a: CompleteArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => serde_json::from_str::<SolverConfig>(&fs::read_to_string(p)?).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?,
        None => SolverConfig::default(),
    };
    if let Some(rho) = a.rho {
        cfg.rho = rho;
    }
    if let Some(m) = a.max_iter {
        cfg.max_iter = m;
    }
    let mask = fio::load_mask(&a.mask)?;
    let report = if is_array3(&a.input)? {
        let x = fio::load_array3::<f64>(&a.input)?;
        let (n, s, _) = x.dims();
        let shape = cube_shape(a.shape.as_deref(), n, s)?;
        let mut res = admm_complete_3d(&project(&x, &mask)?, &mask, shape, &cfg)?;
        if let Some(t) = &a.truth {
            res.score(&fio::load_array3(t)?)?;
        }
        fio::save_array3(&a.out, &res.x)?;
        summary(res.iterations, res.primal_residual, res.dual_residual, res.converged, res.relative_error, &cfg)
    } else {
        let x = fio::load_matrix::<f64>(&a.input)?;
        let shape = flat_shape(a.shape.as_deref(), x.ncols())?;
        let mut res = admm_complete(&project(&x, &mask)?, &mask, shape, &cfg)?;
        if let Some(t) = &a.truth {
            res.score(&fio::load_matrix(t)?)?;
        }
        fio::save_matrix(&a.out, &res.x)?;
        summary(res.iterations, res.primal_residual, res.dual_residual, res.converged, res.relative_error, &cfg)
    };
    emit(&report, a.report.as_deref())
}

fn summary(
    iterations: usize,
    primal: f64,
    dual: f64,
    converged: bool,
    relative_error: Option<f64>,
    cfg: &SolverConfig,
) -> serde_json::Value {
    json!({
        "iterations": iterations,
        "primal_residual": primal,
        "dual_residual": dual,
        "converged": converged,
        "relative_error": relative_error,
        "success": relative_error.map(|e| e < cfg.success_threshold),
        "solver": cfg,
    })
}

fn phase(a: PhaseArgs) -> Result<()> {
    let mut cfg = RunConfig::load(&a.config)?;
    if a.json.is_some() {
        cfg.output.json = a.json;
    }
    if a.csv.is_some() {
        cfg.output.csv = a.csv;
    }
    if a.pgm.is_some() {
        cfg.output.pgm = a.pgm;
    }
    let grid = phase_transition_run(&cfg)?;
    print!("{}", grid_csv(&grid));
    Ok(())
}

fn certify(a: CertifyArgs) -> Result<()> {
    if a.special {
        let d = a.d.ok_or_else(|| invalid("--special needs --d"))?;
        let omega = a.omega.ok_or_else(|| invalid("--special needs --omega"))?;
        return emit(&special_dual_certificate(&omega, d)?, a.out.as_deref());
    }
    let path = a.input.expect("clap enforces --input");
    let p = a.p.expect("clap enforces --p");
    let x = fio::load_matrix::<f64>(&path)?;
    let (d, n) = x.shape();
    let shape = flat_shape(a.shape.as_deref(), n)?;
    let (tangent, _) = block_svd(&hankel_blockdiag(&x, shape)?, DEFAULT_RANK_TOL)?;
    let partition = golfing_partition(&[d, n], p, a.seed)?;
    let cert = golfing_certificate(&tangent, &tangent.uv(), &partition)?;
    let report = verify_certificate(&cert.lambda, &tangent, &partition.union(), p, n)?;
    let out = json!({
        "k0": partition.k0,
        "q": partition.q,
        "residuals": cert.residuals,
        "report": report,
        "passed": report.passed,
    });
    emit(&out, a.out.as_deref())
}

fn incoherence(a: IncoherenceArgs) -> Result<()> {
    let x = fio::load_matrix::<f64>(&a.input)?;
    let shape = HankelShape::square_for_length(x.ncols())?;
    let (tangent, _) = block_svd(&hankel_blockdiag(&x, shape)?, DEFAULT_RANK_TOL)?;
    let avg = avg_incoherence(&tangent)?;
    let worst = worst_incoherence(&tangent)?;
    let checks = check_incoherence_consequences(&tangent)?;
    let out = json!({
        "mu0": avg.mu0,
        "mu1": worst.mu1,
        "average": avg,
        "worst": worst,
        "consequences": checks,
    });
    emit(&out, a.out.as_deref())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Complete(a) => complete(a),
        Command::Phase(a) => phase(a),
        Command::Certify(a) => certify(a),
        Command::Incoherence(a) => incoherence(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
