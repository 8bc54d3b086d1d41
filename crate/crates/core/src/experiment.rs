//! Monte-Carlo phase-transition runs and their CSV/PGM renderings.
//!
//! Every trial draws its instance and mask from streams keyed by
//! `(seed, r index, p index, trial)`, so a grid does not depend on the
//! order in which the thread pool executes trials.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hankel::{HankelShape, TwoLevelShape};
use crate::sampling::{bernoulli_mask, project, stream_id};
use crate::signals::{gen_spectral_3d, gen_spectral_matrix, gen_special, replace_rows};
use crate::solver::{admm_complete, admm_complete_3d, SolverConfig};

/// Rows replaced by adversarial signals when `adversarial` is set.
pub const ADVERSARIAL_ROWS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Spectrally sparse rows, `dims = [d, n]`.
    #[serde(rename = "2d")]
    TwoD,
    /// Spectrally sparse frontal slices, `dims = [n, s, d]`.
    #[serde(rename = "3d")]
    ThreeD,
    /// The matrix with ones in its first column, `dims = [d, n]`; rank 1.
    #[serde(rename = "special")]
    Special,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub pgm: Option<PathBuf>,
}

/// JSON schema of a phase-transition run. Omitted grids take the defaults
/// of [`default_p_values`] and [`default_r_values`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub dims: Vec<usize>,
    /// `[n1, n2]` in 2D, `[L1, K1, L2, K2]` in 3D; derived from `dims`
    /// when omitted.
    #[serde(default)]
    pub shape: Option<Vec<usize>>,
    #[serde(default)]
    pub p_values: Option<Vec<f64>>,
    #[serde(default)]
    pub r_values: Option<Vec<usize>>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Replace two Fourier-domain rows by adversarial signals (2D only).
    #[serde(default)]
    pub adversarial: bool,
    #[serde(default)]
    pub output: OutputPaths,
}

fn default_trials() -> usize {
    50
}

/// 18 equispaced values from 0.1 to 0.95.
pub fn default_p_values() -> Vec<f64> {
    (0..18).map(|k| (10 + 5 * k) as f64 / 100.0).collect()
}

/// `1..=24` for 2D (the lift of a length-47 row is 24×24), `1..=25` for
/// 3D (25×25 two-level lift of a 9×9 slice), `[1]` for the special matrix.
pub fn default_r_values(mode: Mode) -> Vec<usize> {
    match mode {
        Mode::TwoD => (1..=24).collect(),
        Mode::ThreeD => (1..=25).collect(),
        Mode::Special => vec![1],
    }
}

#[derive(Debug, Clone, Copy)]
enum Geometry {
    Flat(HankelShape),
    Cube(TwoLevelShape),
}

impl RunConfig {
    pub fn new(mode: Mode, dims: Vec<usize>) -> Self {
        Self {
            mode,
            dims,
            shape: None,
            p_values: None,
            r_values: None,
            trials: default_trials(),
            seed: 0,
            solver: SolverConfig::default(),
            adversarial: false,
            output: OutputPaths::default(),
        }
    }

    /// The special-matrix run: `d = 16`, `n = 47`, default `p` grid.
    pub fn special() -> Self {
        Self::new(Mode::Special, vec![16, 47])
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn p_grid(&self) -> Vec<f64> {
        self.p_values.clone().unwrap_or_else(default_p_values)
    }

    pub fn r_grid(&self) -> Vec<usize> {
        self.r_values.clone().unwrap_or_else(|| default_r_values(self.mode))
    }

    fn geometry(&self) -> Result<Geometry> {
        match (self.mode, self.dims.as_slice()) {
            (Mode::TwoD | Mode::Special, &[d, n]) => {
                if d == 0 {
                    return Err(Error::InvalidArgument("d must be positive".into()));
                }
                let shape = match self.shape.as_deref() {
                    None => HankelShape::for_length(n)?,
                    Some(&[n1, n2]) => HankelShape::new(n1, n2)?,
                    Some(other) => return Err(Error::InvalidArgument(format!("2D shape needs [n1, n2], got {other:?}"))),
                };
                shape.check_len("RunConfig", n)?;
                Ok(Geometry::Flat(shape))
            }
            (Mode::ThreeD, &[n, s, d]) => {
                if d == 0 {
                    return Err(Error::InvalidArgument("d must be positive".into()));
                }
                let shape = match self.shape.as_deref() {
                    None => TwoLevelShape::for_dims(n, s)?,
                    Some(&[l1, k1, l2, k2]) => TwoLevelShape::new(l1, k1, l2, k2)?,
                    Some(other) => {
                        return Err(Error::InvalidArgument(format!("3D shape needs [L1, K1, L2, K2], got {other:?}")))
                    }
                };
                if shape.slice_dims() != (n, s) {
                    return Err(Error::dim("RunConfig", format!("{:?}", shape.slice_dims()), format!("({n}, {s})")));
                }
                Ok(Geometry::Cube(shape))
            }
            (mode, dims) => Err(Error::InvalidArgument(format!("dims {dims:?} do not fit mode {mode:?}"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        self.geometry()?;
        let ps = self.p_grid();
        if ps.is_empty() || ps.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::InvalidArgument(format!("p values must lie in (0, 1], got {ps:?}")));
        }
        let rs = self.r_grid();
        if rs.is_empty() || rs.contains(&0) {
            return Err(Error::InvalidArgument(format!("r values must be positive, got {rs:?}")));
        }
        if self.mode == Mode::Special && rs != [1] {
            return Err(Error::InvalidArgument("the special matrix has rank 1; r_values must be [1]".into()));
        }
        if self.adversarial && self.mode != Mode::TwoD {
            return Err(Error::InvalidArgument("adversarial rows are defined for 2d mode only".into()));
        }
        if self.adversarial && self.dims[0] < ADVERSARIAL_ROWS {
            return Err(Error::InvalidArgument(format!("adversarial mode needs d >= {ADVERSARIAL_ROWS}")));
        }
        Ok(())
    }
}

/// Success counts over an `r × p` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub p_values: Vec<f64>,
    pub r_values: Vec<usize>,
    pub trials: usize,
    /// `successes[ri][pi]`.
    pub successes: Vec<Vec<usize>>,
    /// Trials that hit `max_iter`, in the same layout.
    pub unconverged: Vec<Vec<usize>>,
    pub seed: u64,
    pub config: RunConfig,
}

impl PhaseGrid {
    /// Success fraction; zero when no trials were run.
    pub fn rate(&self, ri: usize, pi: usize) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes[ri][pi] as f64 / self.trials as f64
        }
    }

    pub fn rates(&self) -> Vec<Vec<f64>> {
        (0..self.r_values.len())
            .map(|ri| (0..self.p_values.len()).map(|pi| self.rate(ri, pi)).collect())
            .collect()
    }

    /// Count of adjacent-`p` decreases in row `ri`, with the largest drop in
    /// trials.
    pub fn inversions(&self, ri: usize) -> (usize, usize) {
        let row = &self.successes[ri];
        row.windows(2)
            .filter(|w| w[1] < w[0])
            .fold((0, 0), |(count, worst), w| (count + 1, worst.max(w[0] - w[1])))
    }
}

/// Keys for the independent random streams of one trial.
fn trial_seed(seed: u64, ri: usize, pi: usize, trial: usize, purpose: u64) -> u64 {
    stream_id(&[seed, ri as u64, pi as u64, trial as u64, purpose])
}

/// Relative error of one trial and whether the solver converged.
pub fn run_trial(cfg: &RunConfig, ri: usize, pi: usize, trial: usize) -> Result<(f64, bool)> {
    let r = cfg.r_grid()[ri];
    let p = cfg.p_grid()[pi];
    let instance_seed = trial_seed(cfg.seed, ri, pi, trial, 0);
    let mask_seed = trial_seed(cfg.seed, ri, pi, trial, 1);
    match cfg.geometry()? {
        Geometry::Flat(shape) => {
            let (d, n) = (cfg.dims[0], cfg.dims[1]);
            let truth = match cfg.mode {
                Mode::Special => gen_special::<f64>(d, n),
                _ => {
                    let inst = gen_spectral_matrix::<f64>(d, n, r, instance_seed)?;
                    if cfg.adversarial && r >= 2 && r <= (n - 1) / 2 && n % 2 == 1 {
                        let seed = trial_seed(cfg.seed, ri, pi, trial, 2);
                        replace_rows(&inst.xhat, ADVERSARIAL_ROWS, r, seed)?.0
                    } else {
                        if cfg.adversarial {
                            warn!("no adversarial row of rank {r} exists for n={n}; rows left unchanged");
                        }
                        inst.x
                    }
                }
            };
            let mask = bernoulli_mask(&[d, n], p, mask_seed)?;
            let observed = project(&truth, &mask)?;
            let mut res = admm_complete(&observed, &mask, shape, &cfg.solver)?;
            Ok((res.score(&truth)?, res.converged))
        }
        Geometry::Cube(shape) => {
            let (n, s, d) = (cfg.dims[0], cfg.dims[1], cfg.dims[2]);
            let truth = gen_spectral_3d::<f64>(n, s, d, r, shape, instance_seed)?.x;
            let mask = bernoulli_mask(&[n, s, d], p, mask_seed)?;
            let observed = project(&truth, &mask)?;
            let mut res = admm_complete_3d(&observed, &mask, shape, &cfg.solver)?;
            Ok((res.score(&truth)?, res.converged))
        }
    }
}

/// Runs every `(r, p, trial)` cell and writes the outputs named in the
/// config.
pub fn phase_transition_run(cfg: &RunConfig) -> Result<PhaseGrid> {
    cfg.validate()?;
    let (ps, rs) = (cfg.p_grid(), cfg.r_grid());
    let jobs: Vec<(usize, usize, usize)> = (0..rs.len())
        .flat_map(|ri| (0..ps.len()).flat_map(move |pi| (0..cfg.trials).map(move |t| (ri, pi, t))))
        .collect();
    let outcomes: Vec<(f64, bool)> = jobs
        .par_iter()
        .map(|&(ri, pi, t)| run_trial(cfg, ri, pi, t))
        .collect::<Result<_>>()?;

    let mut successes = vec![vec![0; ps.len()]; rs.len()];
    let mut unconverged = vec![vec![0; ps.len()]; rs.len()];
    for (&(ri, pi, t), &(err, converged)) in jobs.iter().zip(&outcomes) {
        if err < cfg.solver.success_threshold {
            successes[ri][pi] += 1;
        }
        if !converged {
            unconverged[ri][pi] += 1;
            warn!("r={} p={} trial {t}: solver hit max_iter (error {err:.3e})", rs[ri], ps[pi]);
        }
    }
    for (ri, r) in rs.iter().enumerate() {
        info!("r={r}: successes {:?} of {}", successes[ri], cfg.trials);
    }
    let grid = PhaseGrid {
        p_values: ps,
        r_values: rs,
        trials: cfg.trials,
        successes,
        unconverged,
        seed: cfg.seed,
        config: cfg.clone(),
    };
    if let Some(path) = &cfg.output.json {
        crate::io::save_json(path, &grid)?;
    }
    if let Some(path) = &cfg.output.csv {
        emit_grid_csv(&grid, path)?;
    }
    if let Some(path) = &cfg.output.pgm {
        emit_heatmap_pgm(&grid, path)?;
    }
    Ok(grid)
}

/// Header row `r\p,<p values>`, then one row per `r` with rates to six
/// decimals.
pub fn grid_csv(grid: &PhaseGrid) -> String {
    let mut out = String::from("r\\p");
    for p in &grid.p_values {
        write!(out, ",{p}").unwrap();
    }
    out.push('\n');
    for (ri, r) in grid.r_values.iter().enumerate() {
        write!(out, "{r}").unwrap();
        for pi in 0..grid.p_values.len() {
            write!(out, ",{:.6}", grid.rate(ri, pi)).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn emit_grid_csv(grid: &PhaseGrid, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, grid_csv(grid))?;
    Ok(())
}

/// A grid read back from CSV: `rates[ri][pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTable {
    pub p_values: Vec<f64>,
    pub r_values: Vec<usize>,
    pub rates: Vec<Vec<f64>>,
}

impl GridTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r\\p");
        for p in &self.p_values {
            write!(out, ",{p}").unwrap();
        }
        out.push('\n');
        for (r, row) in self.r_values.iter().zip(&self.rates) {
            write!(out, "{r}").unwrap();
            for v in row {
                write!(out, ",{v:.6}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

pub fn parse_grid_csv(text: &str) -> Result<GridTable> {
    let err = |line: usize, message: String| Error::Parse { line, message };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty grid file".into()))?;
    let mut fields = header.split(',');
    fields.next();
    let p_values = fields
        .enumerate()
        .map(|(k, f)| f.trim().parse().map_err(|_| err(1, format!("field {}: bad p value `{f}`", k + 2))))
        .collect::<Result<Vec<f64>>>()?;
    let mut r_values = Vec::new();
    let mut rates = Vec::new();
    for (i, line) in lines {
        let no = i + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != p_values.len() + 1 {
            return Err(err(no, format!("expected {} fields, found {}", p_values.len() + 1, fields.len())));
        }
        r_values.push(fields[0].trim().parse().map_err(|_| err(no, format!("field 1: bad r value `{}`", fields[0])))?);
        rates.push(
            fields[1..]
                .iter()
                .enumerate()
                .map(|(k, f)| f.trim().parse().map_err(|_| err(no, format!("field {}: bad rate `{f}`", k + 2))))
                .collect::<Result<Vec<f64>>>()?,
        );
    }
    Ok(GridTable {
        p_values,
        r_values,
        rates,
    })
}

pub fn read_grid_csv(path: impl AsRef<Path>) -> Result<GridTable> {
    parse_grid_csv(&fs::read_to_string(path)?)
}

/// Plain PGM (P2): one pixel per cell, `p` along the width, `r` increasing
/// downwards, gray level `round(255·rate)`.
pub fn heatmap_pgm(grid: &PhaseGrid) -> String {
    let (w, h) = (grid.p_values.len(), grid.r_values.len());
    let mut out = format!("P2\n{w} {h}\n255\n");
    for ri in 0..h {
        let row: Vec<String> = (0..w)
            .map(|pi| ((255.0 * grid.rate(ri, pi)).round() as u8).to_string())
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn emit_heatmap_pgm(grid: &PhaseGrid, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, heatmap_pgm(grid))?;
    Ok(())
}
