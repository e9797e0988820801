//! Experiment grid driver: configuration, per-cell solves and spectra, and
//! their CSV rows.
//!
//! A cell is one `(m, N, L)` combination on the capped layout: `N` points
//! of which `n_cap` lie in a small polar cap and the rest are spread over
//! the remaining sphere.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::analysis::{schur_spectra_nested, SpectrumReport};
use crate::assembly::{assemble_lambda, builtin_field, SaddleSystem};
use crate::dense::{norm2, norm_inf};
use crate::error::{Error, Result};
use crate::harmonics::{eval_matrix, HarmonicBasis};
use crate::kernels::{
    default_node_count, fourier_legendre_coeffs, CoefficientTable, WendlandOrder, ZonalKernel,
};
use crate::minres::{minres_solve, MinresOptions, SolveReport, StoppingRule};
use crate::precond::{default_overlap, BlockDiagPreconditioner, PrimalChoice, SchurChoice};
use crate::sphere_points::{generate_equal_area, generate_experiment_set, CapSpec, PointSet};

/// Hard bound on the upper generalized eigenvalue of `(S, Lambda_L)`.
pub const LAMBDA_MAX_BOUND: f64 = 1.0 + 1e-8;

/// Post-solve bound on the interpolation and side-condition residuals,
/// relative to `||f_X||_inf`.
pub const POST_SOLVE_REL_BOUND: f64 = 1e-6;

/// Largest `N` for the dense exact-Schur and dense-solve paths.
pub const DESK_SCALE_MAX_N: usize = 8000;

const MU_CEILING: f64 = std::f64::consts::FRAC_PI_3 * 0.999;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub orders: Vec<WendlandOrder>,
    pub n_values: Vec<usize>,
    pub degrees: Vec<usize>,
    pub cap_radius: f64,
    pub n_cap: usize,
    pub precond: PrimalChoice,
    pub schur: SchurChoice,
    pub rtol: f64,
    pub stopping: StoppingRule,
    /// `None` means `5 (N + M)`.
    pub max_iter: Option<usize>,
    /// `None` means the defaults of [`default_overlap`].
    pub nu: Option<f64>,
    pub mu: Option<f64>,
    pub field: String,
    pub output_dir: PathBuf,
    pub jobs: usize,
    /// Writes `walltime_s` as zero so reruns are byte-identical.
    pub deterministic: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            orders: vec![WendlandOrder::Zero],
            n_values: vec![2000],
            degrees: vec![5],
            cap_radius: 0.1,
            n_cap: 1000,
            precond: PrimalChoice::Schwarz,
            schur: SchurChoice::Lambda,
            rtol: MinresOptions::DEFAULT_RTOL,
            stopping: StoppingRule::Relative,
            max_iter: None,
            nu: None,
            mu: None,
            field: "capped-exp".to_string(),
            output_dir: PathBuf::from("."),
            jobs: 1,
            deterministic: true,
        }
    }
}

pub fn parse_list<T: std::str::FromStr>(value: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| format!("{s:?}: {e}")))
        .collect()
}

pub fn parse_precond(value: &str) -> Result<PrimalChoice> {
    match value {
        "none" => Ok(PrimalChoice::None),
        "schwarz" | "block" => Ok(PrimalChoice::Schwarz),
        "exact" => Ok(PrimalChoice::Exact),
        _ => Err(Error::invalid(format!(
            "unknown preconditioner {value:?} (none, schwarz, exact)"
        ))),
    }
}

pub fn parse_schur(value: &str) -> Result<SchurChoice> {
    match value {
        "lambda" => Ok(SchurChoice::Lambda),
        "exact" => Ok(SchurChoice::Exact),
        _ => Err(Error::invalid(format!(
            "unknown Schur choice {value:?} (lambda, exact)"
        ))),
    }
}

pub fn parse_stopping(value: &str) -> Result<StoppingRule> {
    match value {
        "relative" => Ok(StoppingRule::Relative),
        "absolute" => Ok(StoppingRule::Absolute),
        _ => Err(Error::invalid(format!(
            "unknown stopping rule {value:?} (relative, absolute)"
        ))),
    }
}

pub fn precond_name(p: PrimalChoice, s: SchurChoice) -> &'static str {
    match (p, s) {
        (PrimalChoice::None, _) => "none",
        (PrimalChoice::Schwarz, SchurChoice::Lambda) => "schwarz+lambda",
        (PrimalChoice::Schwarz, SchurChoice::Exact) => "schwarz+exact",
        (PrimalChoice::Exact, SchurChoice::Lambda) => "exact+lambda",
        (PrimalChoice::Exact, SchurChoice::Exact) => "exact+exact",
    }
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |e: String| Error::invalid(format!("{key}: {e}"));
        let num = |v: &str| -> Result<f64> { v.parse::<f64>().map_err(|e| bad(e.to_string())) };
        match key {
            "m" => {
                self.orders = parse_list::<u32>(value)
                    .map_err(bad)?
                    .into_iter()
                    .map(WendlandOrder::from_index)
                    .collect::<Result<_>>()?
            }
            "n" => self.n_values = parse_list(value).map_err(bad)?,
            "l" => self.degrees = parse_list(value).map_err(bad)?,
            "cap_radius" => self.cap_radius = num(value)?,
            "n_cap" => {
                self.n_cap = value
                    .parse()
                    .map_err(|e: std::num::ParseIntError| bad(e.to_string()))?
            }
            "precond" => self.precond = parse_precond(value)?,
            "schur" => self.schur = parse_schur(value)?,
            "rtol" => self.rtol = num(value)?,
            "stopping" => self.stopping = parse_stopping(value)?,
            "max_iter" => {
                self.max_iter = Some(
                    value
                        .parse()
                        .map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                )
            }
            "nu" => self.nu = Some(num(value)?),
            "mu" => self.mu = Some(num(value)?),
            "field" => self.field = value.to_string(),
            "output_dir" => self.output_dir = PathBuf::from(value),
            "jobs" => {
                self.jobs = value
                    .parse()
                    .map_err(|e: std::num::ParseIntError| bad(e.to_string()))?
            }
            "deterministic" => {
                self.deterministic = value
                    .parse()
                    .map_err(|e: std::str::ParseBoolError| bad(e.to_string()))?
            }
            _ => return Err(Error::invalid(format!("unknown configuration key {key:?}"))),
        }
        Ok(())
    }

    /// Parses flat `key = value` text; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message: "expected `key = value`".into(),
            })?;
            self.set(k.trim(), v.trim()).map_err(|e| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(&text, path)?;
        Ok(cfg)
    }

    /// Range checks shared by every command.
    pub fn validate(&self) -> Result<()> {
        if self.orders.is_empty() || self.n_values.is_empty() || self.degrees.is_empty() {
            return Err(Error::invalid("m, n and l lists must be nonempty"));
        }
        CapSpec::north_polar(self.cap_radius)?;
        if let Some(&n) = self.n_values.iter().find(|&&n| n < 2) {
            return Err(Error::invalid(format!("N = {n} is too small")));
        }
        if let Some(&n) = self.n_values.iter().find(|&&n| n > DESK_SCALE_MAX_N) {
            return Err(Error::invalid(format!(
                "N = {n} exceeds the dense desk-scale limit {DESK_SCALE_MAX_N}"
            )));
        }
        if !(self.rtol > 0.0 && self.rtol < 1.0) {
            return Err(Error::invalid(format!(
                "rtol must lie in (0, 1), got {}",
                self.rtol
            )));
        }
        if self.jobs == 0 {
            return Err(Error::invalid("jobs must be at least 1"));
        }
        Ok(())
    }

    pub fn cap(&self) -> Result<CapSpec> {
        CapSpec::north_polar(self.cap_radius)
    }

    /// Cap count for a given total: `n_cap`, halved while it is not below `n`.
    pub fn cap_count(&self, n: usize) -> usize {
        let mut c = self.n_cap;
        while c >= n && c > 0 {
            c /= 2;
        }
        c
    }

    pub fn overlap(&self, n: usize) -> (f64, f64) {
        let (nu0, mu0) = default_overlap(n);
        let nu = self.nu.unwrap_or(nu0);
        // An explicit nu without mu keeps the default mu/nu ratio.
        let mu = self.mu.unwrap_or(if self.nu.is_some() {
            (mu0 / nu0 * nu).min(MU_CEILING)
        } else {
            mu0
        });
        (nu, mu)
    }

    /// All `(m, N, L)` cells in deterministic order.
    pub fn cells(&self) -> Vec<(WendlandOrder, usize, usize)> {
        let mut out = Vec::new();
        for &m in &self.orders {
            for &n in &self.n_values {
                for &l in &self.degrees {
                    out.push((m, n, l));
                }
            }
        }
        out
    }
}

/// The capped point layout for `n` points under this configuration; with
/// no cap points it is the plain equal-area set.
pub fn experiment_points(cfg: &ExperimentConfig, n: usize) -> Result<PointSet> {
    match cfg.cap_count(n) {
        0 => generate_equal_area(n),
        c => generate_experiment_set(n, &cfg.cap()?, c),
    }
}

pub fn coefficients(order: WendlandOrder, l_max: usize) -> Result<CoefficientTable> {
    fourier_legendre_coeffs(order, l_max, default_node_count(l_max))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveRow {
    pub m: u32,
    pub n: usize,
    pub l: usize,
    pub precond: String,
    pub iterations: usize,
    pub converged: bool,
    /// Final preconditioned residual relative to the initial one.
    pub residual: f64,
    pub walltime_s: f64,
    pub interp_residual_inf: f64,
    pub side_condition_inf: f64,
    /// `||f_X||_inf`, for relative checks.
    pub data_inf: f64,
    /// `||K x - b||_2 / ||b||_2`.
    pub true_relative_residual: f64,
}

pub const SOLVE_CSV_HEADER: &str =
    "m,N,L,precond,iterations,converged,residual,walltime_s,interp_residual_inf,side_condition_inf";

impl SolveRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.6e},{:.3},{:.6e},{:.6e}",
            self.m,
            self.n,
            self.l,
            self.precond,
            self.iterations,
            self.converged,
            self.residual,
            self.walltime_s,
            self.interp_residual_inf,
            self.side_condition_inf
        )
    }

    /// The post-solve interpolation and side-condition bounds; vacuous when
    /// the solve did not converge.
    pub fn invariants_hold(&self) -> bool {
        !self.converged
            || (self.interp_residual_inf <= POST_SOLVE_REL_BOUND * self.data_inf
                && self.side_condition_inf <= POST_SOLVE_REL_BOUND * self.data_inf)
    }
}

/// Result of one solve, with the system kept for further inspection.
pub struct SolveOutcome {
    pub system: SaddleSystem,
    pub solution: Vec<f64>,
    pub report: SolveReport,
    pub row: SolveRow,
}

/// Assembles and solves one cell.
pub fn solve_cell(
    cfg: &ExperimentConfig,
    order: WendlandOrder,
    n: usize,
    l: usize,
) -> Result<SolveOutcome> {
    let points = experiment_points(cfg, n)?;
    solve_on(cfg, &points, order, l)
}

/// Assembles and solves on a given point set.
pub fn solve_on(
    cfg: &ExperimentConfig,
    points: &PointSet,
    order: WendlandOrder,
    l: usize,
) -> Result<SolveOutcome> {
    let kernel = ZonalKernel::new(order);
    let field = builtin_field(&cfg.field)?;
    let system = SaddleSystem::assemble(points, &kernel, Some(l), field.as_ref())?;
    let coeffs = coefficients(order, l)?;
    let lambda = assemble_lambda(&coeffs, l)?;
    let pc = BlockDiagPreconditioner::build(
        &system,
        cfg.precond,
        cfg.schur,
        Some(&lambda),
        cfg.overlap(points.len()),
    )?;
    let opts = MinresOptions {
        rtol: cfg.rtol,
        max_iter: cfg.max_iter.unwrap_or(5 * system.dim()),
        rule: cfg.stopping,
    };
    let (x, report) = minres_solve(&system, &pc, system.rhs(), &opts)?;
    let sol = system.split_solution(&x);
    let kx = system.apply(&x);
    let diff: Vec<f64> = kx.iter().zip(system.rhs()).map(|(a, b)| a - b).collect();
    let row = SolveRow {
        m: order.index(),
        n: points.len(),
        l,
        precond: precond_name(cfg.precond, cfg.schur).to_string(),
        iterations: report.iterations,
        converged: report.converged,
        residual: report.relative_residual(),
        walltime_s: if cfg.deterministic {
            0.0
        } else {
            report.wall_time
        },
        interp_residual_inf: system.interpolation_residual(&sol),
        side_condition_inf: system.side_condition(&sol),
        data_inf: norm_inf(system.data()),
        true_relative_residual: norm2(&diff) / norm2(system.rhs()),
    };
    Ok(SolveOutcome {
        system,
        solution: x,
        report,
        row,
    })
}

/// Runs `jobs(i)` for `i in 0..count` on up to `threads` worker threads and
/// returns the results in index order.
pub fn run_indexed<T: Send>(
    count: usize,
    threads: usize,
    job: impl Fn(usize) -> T + Sync,
) -> Vec<T> {
    let slots: Mutex<BTreeMap<usize, T>> = Mutex::new(BTreeMap::new());
    let next = AtomicUsize::new(0);
    let threads = threads.clamp(1, count.max(1));
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= count {
                    break;
                }
                let r = job(i);
                slots.lock().expect("result map poisoned").insert(i, r);
            });
        }
    });
    slots
        .into_inner()
        .expect("result map poisoned")
        .into_values()
        .collect()
}

/// Solves every cell of the grid. Failed cells are returned as errors in
/// their slot.
pub fn run_solve_grid(
    cfg: &ExperimentConfig,
) -> Vec<((WendlandOrder, usize, usize), Result<SolveOutcome>)> {
    let cells = cfg.cells();
    let results = run_indexed(cells.len(), cfg.jobs, |i| {
        let (m, n, l) = cells[i];
        solve_cell(cfg, m, n, l)
    });
    cells.into_iter().zip(results).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumRow {
    pub m: u32,
    pub n: usize,
    pub l: usize,
    pub report: SpectrumReport,
}

pub const SPECTRUM_CSV_HEADER: &str = "m,N,L,M,lambda_min,lambda_max,infsup_estimate";

impl SpectrumRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{:.7},{:.7},{:.7}",
            self.m,
            self.n,
            self.l,
            (self.l + 1) * (self.l + 1),
            self.report.lambda_min,
            self.report.lambda_max,
            self.report.infsup_estimate
        )
    }

    /// `0 < lambda_min <= lambda_max <= 1 + 1e-8`.
    pub fn invariants_hold(&self) -> bool {
        self.report.lambda_min > 0.0 && self.report.lambda_max <= LAMBDA_MAX_BOUND
    }
}

/// Spectra of `(S, Lambda_L)` for every degree in `degrees`, on `points`,
/// sharing one factorization of `A`.
pub fn spectra_on(
    points: &PointSet,
    order: WendlandOrder,
    degrees: &[usize],
) -> Result<Vec<SpectrumRow>> {
    let l_max = *degrees
        .iter()
        .max()
        .ok_or_else(|| Error::invalid("no degrees given"))?;
    let kernel = ZonalKernel::new(order);
    let a = crate::assembly::assemble_a(points, &kernel);
    let factor = a.factor()?;
    let q = eval_matrix(points, &HarmonicBasis::new(l_max));
    let lambda = assemble_lambda(&coefficients(order, l_max)?, l_max)?;
    Ok(schur_spectra_nested(&factor, &q, &lambda, degrees)?
        .into_iter()
        .map(|(l, report)| SpectrumRow {
            m: order.index(),
            n: points.len(),
            l,
            report,
        })
        .collect())
}

/// `(m, N)` and the rows for every configured degree.
pub type SpectrumCell = ((WendlandOrder, usize), Result<Vec<SpectrumRow>>);

/// Spectrum rows for every `(m, N)` of the grid and every degree.
pub fn run_spectrum_grid(cfg: &ExperimentConfig) -> Vec<SpectrumCell> {
    let mut cells = Vec::new();
    for &m in &cfg.orders {
        for &n in &cfg.n_values {
            cells.push((m, n));
        }
    }
    let results = run_indexed(cells.len(), cfg.jobs, |i| {
        let (m, n) = cells[i];
        experiment_points(cfg, n).and_then(|p| spectra_on(&p, m, &cfg.degrees))
    });
    cells.into_iter().zip(results).collect()
}
