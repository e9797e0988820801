//! Command-line driver for the hybrid RBF/polynomial interpolation experiments.

mod verify;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use sphere_hybrid::experiment::{
    experiment_points, run_solve_grid, run_spectrum_grid, ExperimentConfig, SOLVE_CSV_HEADER,
    SPECTRUM_CSV_HEADER,
};
use sphere_hybrid::kernels::{default_node_count, fourier_legendre_coeffs, WendlandOrder};

#[derive(Parser)]
#[command(
    name = "sphere-hybrid",
    version,
    about = "Hybrid RBF + spherical polynomial interpolation on the sphere"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the capped experiment point layout.
    GenPoints {
        #[command(flatten)]
        grid: GridArgs,
        /// Output file; only valid with a single N.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fourier-Legendre coefficients of a Wendland kernel.
    Coeffs {
        #[arg(long, default_value_t = 0)]
        m: u32,
        #[arg(long)]
        l_max: usize,
        /// Quadrature nodes; defaults to max(256, 2 l_max + 64).
        #[arg(long)]
        nodes: Option<usize>,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the saddle system for every (m, N, L) cell.
    Solve {
        #[command(flatten)]
        grid: GridArgs,
        /// Residual history CSV; with several cells a `_m{m}_N{n}_L{l}` suffix is added.
        #[arg(long)]
        residual_log: Option<PathBuf>,
    },
    /// Extreme generalized eigenvalues of (S, Lambda_L).
    Spectrum {
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Run the acceptance checks and print one line per check.
    Verify {
        /// Also run the N = 2000 and N = 4000 checks (minutes).
        #[arg(long)]
        full: bool,
    },
}

#[derive(Args, Default)]
struct GridArgs {
    /// Flat `key = value` configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Kernel orders, comma separated.
    #[arg(long)]
    m: Option<String>,
    /// Point counts, comma separated.
    #[arg(long)]
    n: Option<String>,
    /// Polynomial degrees, comma separated.
    #[arg(long)]
    l: Option<String>,
    #[arg(long)]
    cap_radius: Option<f64>,
    #[arg(long)]
    n_cap: Option<usize>,
    #[arg(long, value_parser = ["none", "schwarz", "exact"])]
    precond: Option<String>,
    #[arg(long, value_parser = ["lambda", "exact"])]
    schur: Option<String>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long, value_parser = ["relative", "absolute"])]
    stopping: Option<String>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Schwarz center separation (radians).
    #[arg(long)]
    nu: Option<f64>,
    /// Schwarz cap radius (radians).
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    field: Option<String>,
    #[arg(long, short = 'o')]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Record wall times instead of zeros (output is then not reproducible).
    #[arg(long)]
    timing: bool,
}

impl GridArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        let overrides: [(&str, Option<String>); 15] = [
            ("m", self.m.clone()),
            ("n", self.n.clone()),
            ("l", self.l.clone()),
            ("cap_radius", self.cap_radius.map(|v| v.to_string())),
            ("n_cap", self.n_cap.map(|v| v.to_string())),
            ("precond", self.precond.clone()),
            ("schur", self.schur.clone()),
            ("rtol", self.rtol.map(|v| v.to_string())),
            ("stopping", self.stopping.clone()),
            ("max_iter", self.max_iter.map(|v| v.to_string())),
            ("nu", self.nu.map(|v| v.to_string())),
            ("mu", self.mu.map(|v| v.to_string())),
            ("field", self.field.clone()),
            (
                "output_dir",
                self.output_dir.as_ref().map(|p| p.display().to_string()),
            ),
            ("jobs", self.jobs.map(|v| v.to_string())),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                cfg.set(key, &v)
                    .with_context(|| format!("--{}", key.replace('_', "-")))?;
            }
        }
        if self.timing {
            cfg.deterministic = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}{suffix}"),
    };
    path.with_file_name(name)
}

fn gen_points(grid: &GridArgs, out: Option<&Path>) -> Result<bool> {
    let cfg = grid.config()?;
    if out.is_some() && cfg.n_values.len() != 1 {
        bail!("--out needs exactly one N");
    }
    for &n in &cfg.n_values {
        let pts = experiment_points(&cfg, n)?;
        let path = match out {
            Some(p) => p.to_path_buf(),
            None => cfg.output_dir.join(format!("points_N{n}.txt")),
        };
        write_file(&path, &pts.to_text())?;
        println!(
            "{}: {} points, {} in cap",
            path.display(),
            pts.len(),
            pts.count_in_cap(&cfg.cap()?)
        );
    }
    Ok(true)
}

fn coeffs(m: u32, l_max: usize, nodes: Option<usize>, out: Option<&Path>) -> Result<bool> {
    let order = WendlandOrder::from_index(m)?;
    let table = fourier_legendre_coeffs(
        order,
        l_max,
        nodes.unwrap_or_else(|| default_node_count(l_max)),
    )?;
    let csv = table.to_csv(order == WendlandOrder::One);
    match out {
        Some(p) => write_file(p, &csv)?,
        None => print!("{csv}"),
    }
    Ok(true)
}

fn solve(grid: &GridArgs, residual_log: Option<&Path>) -> Result<bool> {
    let cfg = grid.config()?;
    let results = run_solve_grid(&cfg);
    let single = results.len() == 1;
    let mut ok = true;
    let mut csv = format!("{SOLVE_CSV_HEADER}\n");
    println!("{SOLVE_CSV_HEADER}");
    for ((order, n, l), result) in results {
        let outcome = match result {
            Ok(o) => o,
            Err(e) => {
                eprintln!("cell m={} N={n} L={l} failed: {e}", order.index());
                ok = false;
                continue;
            }
        };
        let row = &outcome.row;
        if !row.invariants_hold() {
            eprintln!(
                "cell m={} N={n} L={l}: post-solve residuals {:.3e}, {:.3e} exceed the bound; row withheld",
                row.m, row.interp_residual_inf, row.side_condition_inf
            );
            ok = false;
            continue;
        }
        if !row.converged {
            eprintln!(
                "cell m={} N={n} L={l}: no convergence in {} iterations",
                row.m, row.iterations
            );
        }
        let line = row.csv_line();
        println!("{line}");
        csv.push_str(&line);
        csv.push('\n');
        if let Some(p) = residual_log {
            let path = if single {
                p.to_path_buf()
            } else {
                suffixed(p, &format!("_m{}_N{n}_L{l}", row.m))
            };
            write_file(&path, &outcome.report.residual_csv())?;
        }
    }
    write_file(&cfg.output_dir.join("solve.csv"), &csv)?;
    Ok(ok)
}

fn spectrum(grid: &GridArgs) -> Result<bool> {
    let cfg = grid.config()?;
    let mut ok = true;
    let mut summary = format!("{SPECTRUM_CSV_HEADER}\n");
    println!("{SPECTRUM_CSV_HEADER}");
    for ((order, n), result) in run_spectrum_grid(&cfg) {
        let rows = match result {
            Ok(r) => r,
            Err(e) => {
                eprintln!("cell m={} N={n} failed: {e}", order.index());
                ok = false;
                continue;
            }
        };
        for row in rows {
            if !row.invariants_hold() {
                eprintln!(
                    "cell m={} N={n} L={}: eigenvalues [{:.3e}, {:.12}] leave (0, 1 + 1e-8]; row withheld",
                    row.m, row.l, row.report.lambda_min, row.report.lambda_max
                );
                ok = false;
                continue;
            }
            let line = row.csv_line();
            println!("{line}");
            summary.push_str(&line);
            summary.push('\n');
            let path = cfg
                .output_dir
                .join(format!("spectrum_m{}_N{n}_L{}.csv", row.m, row.l));
            write_file(&path, &row.report.to_csv())?;
        }
    }
    write_file(&cfg.output_dir.join("spectrum.csv"), &summary)?;
    Ok(ok)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::GenPoints { grid, out } => gen_points(&grid, out.as_deref()),
        Command::Coeffs {
            m,
            l_max,
            nodes,
            out,
        } => coeffs(m, l_max, nodes, out.as_deref()),
        Command::Solve { grid, residual_log } => solve(&grid, residual_log.as_deref()),
        Command::Spectrum { grid } => spectrum(&grid),
        Command::Verify { full } => Ok(verify::run(full)),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
