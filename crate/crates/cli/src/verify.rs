//! `verify`: the acceptance checks runnable from the command line.

use std::f64::consts::PI;
use std::time::Instant;

use sphere_hybrid::analysis::exact_precond_spectrum;
use sphere_hybrid::assembly::{evaluate_interpolant, CappedExpField, SaddleSystem};
use sphere_hybrid::dense::norm_inf;
use sphere_hybrid::experiment::{
    experiment_points, solve_on, spectra_on, ExperimentConfig, SolveRow, LAMBDA_MAX_BOUND,
};
use sphere_hybrid::harmonics::{addition_theorem_sum, eval_harmonic, HarmonicIndex};
use sphere_hybrid::kernels::{fourier_legendre_coeffs, legendre_p, WendlandOrder, ZonalKernel};
use sphere_hybrid::minres::{minres_solve, MinresOptions, StoppingRule};
use sphere_hybrid::precond::{BlockDiagPreconditioner, PrimalChoice};
use sphere_hybrid::sphere_points::{generate_equal_area, UnitVector3};

type Outcome = sphere_hybrid::Result<(bool, String)>;

/// Deterministic well-spread query points from a golden-ratio sequence.
fn query_points(count: usize) -> Vec<UnitVector3> {
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    (0..count)
        .map(|i| {
            let u = ((i as f64 + 0.5) * golden).fract();
            let v = ((i as f64 + 0.5) * golden * golden).fract();
            UnitVector3::from_spherical((1.0 - 2.0 * u).acos(), 2.0 * PI * v)
        })
        .collect()
}

fn post_solve_ok(row: &SolveRow) -> bool {
    row.converged && row.invariants_hold()
}

fn exact_preconditioner_clusters(rows: &mut Vec<SolveRow>) -> Outcome {
    let start = Instant::now();
    let pts = generate_equal_area(60)?;
    let sys = SaddleSystem::assemble(
        &pts,
        &ZonalKernel::new(WendlandOrder::One),
        Some(1),
        &CappedExpField,
    )?;
    let clusters = exact_precond_spectrum(&sys)?;
    let targets = [0.5 * (1.0 - 5f64.sqrt()), 1.0, 0.5 * (1.0 + 5f64.sqrt())];
    let clustered = clusters.len() == 3
        && clusters
            .iter()
            .zip(targets)
            .all(|(c, t)| (c.min - t).abs() <= 1e-8 && (c.max - t).abs() <= 1e-8);
    let pc = BlockDiagPreconditioner::exact(&sys)?;
    let opts = MinresOptions {
        rtol: 1e-10,
        max_iter: 4,
        rule: StoppingRule::Relative,
    };
    let (x, report) = minres_solve(&sys, &pc, sys.rhs(), &opts)?;
    let sol = sys.split_solution(&x);
    let f_inf = norm_inf(sys.data());
    rows.push(SolveRow {
        m: 1,
        n: 60,
        l: 1,
        precond: "exact+exact".into(),
        iterations: report.iterations,
        converged: report.converged,
        residual: report.relative_residual(),
        walltime_s: 0.0,
        interp_residual_inf: sys.interpolation_residual(&sol),
        side_condition_inf: sys.side_condition(&sol),
        data_inf: f_inf,
        true_relative_residual: 0.0,
    });
    let secs = start.elapsed().as_secs_f64();
    Ok((
        clustered && report.converged && secs < 5.0,
        format!(
            "{} clusters, MINRES {} iterations (converged={}), {secs:.2}s",
            clusters.len(),
            report.iterations,
            report.converged
        ),
    ))
}

fn schur_bounds(full: bool) -> Outcome {
    let cfg = ExperimentConfig::default();
    let ns: &[usize] = if full { &[500, 2000, 4000] } else { &[500] };
    let mut worst = (f64::INFINITY, f64::NEG_INFINITY);
    let mut ok = true;
    for &n in ns {
        let pts = experiment_points(&cfg, n)?;
        for order in WendlandOrder::ALL {
            for row in spectra_on(&pts, order, &[0, 5, 10])? {
                ok &= row.report.lambda_min > 0.0 && row.report.lambda_max <= LAMBDA_MAX_BOUND;
                worst.0 = worst.0.min(row.report.lambda_min);
                worst.1 = worst.1.max(row.report.lambda_max);
            }
        }
    }
    Ok((
        ok,
        format!(
            "N in {ns:?}: eigenvalues in [{:.6e}, {:.12}]",
            worst.0, worst.1
        ),
    ))
}

fn extreme_eigenvalues() -> Outcome {
    let cfg = ExperimentConfig::default();
    let pts = experiment_points(&cfg, 4000)?;
    let r0 = spectra_on(&pts, WendlandOrder::Zero, &[5, 25])?;
    let r1 = spectra_on(&pts, WendlandOrder::One, &[25])?;
    let (a, b, c, d) = (
        r0[0].report.lambda_min,
        r0[0].report.lambda_max,
        r0[1].report.lambda_min,
        r1[0].report.lambda_min,
    );
    let ok = (a - 0.9987).abs() <= 0.02
        && (b - 0.99977).abs() <= 0.005
        && (c - 0.835).abs() <= 0.05
        && (d - 0.991).abs() <= 0.02;
    Ok((
        ok,
        format!("m=0 L=5 [{a:.7}, {b:.7}], m=0 L=25 min {c:.7}, m=1 L=25 min {d:.7}"),
    ))
}

fn preconditioning_trend(rows: &mut Vec<SolveRow>) -> Outcome {
    let mut cfg = ExperimentConfig::default();
    let mut counts = Vec::new();
    for n in [2000, 4000] {
        let pts = experiment_points(&cfg, n)?;
        let mut pair = [0usize; 2];
        for (slot, p) in [PrimalChoice::Schwarz, PrimalChoice::None]
            .into_iter()
            .enumerate()
        {
            cfg.precond = p;
            let out = solve_on(&cfg, &pts, WendlandOrder::Zero, 5)?;
            pair[slot] = if out.row.converged {
                out.row.iterations
            } else {
                usize::MAX
            };
            rows.push(out.row);
        }
        counts.push(pair);
    }
    let ratio_ok = counts.iter().all(|[p, u]| *u != usize::MAX && *u >= 5 * p);
    let (a, b) = (counts[0][0] as f64, counts[1][0] as f64);
    let flat = (a - b).abs() <= 0.6 * a.min(b);
    Ok((
        ratio_ok && flat,
        format!(
            "(preconditioned, unpreconditioned): N=2000 {:?}, N=4000 {:?}",
            counts[0], counts[1]
        ),
    ))
}

fn coefficient_profile() -> Outcome {
    let table = fourier_legendre_coeffs(WendlandOrder::One, 50, 256)?;
    let scaled: Vec<f64> = (5..=50)
        .map(|l| (l as f64 + 1.0).powi(5) * table.values()[l])
        .collect();
    let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((
        lo > 0.0 && hi / lo < 20.0,
        format!("(l+1)^5 a_l in [{lo:.2}, {hi:.2}], ratio {:.3}", hi / lo),
    ))
}

fn polynomial_reproduction() -> Outcome {
    let pts = generate_equal_area(400)?;
    let kernel = ZonalKernel::new(WendlandOrder::One);
    let y21 = HarmonicIndex::new(2, 1)?;
    let field = move |p: &UnitVector3| eval_harmonic(y21, p).unwrap_or(f64::NAN);
    let sys = SaddleSystem::assemble(&pts, &kernel, Some(3), &field)?;
    let pc = BlockDiagPreconditioner::exact(&sys)?;
    let opts = MinresOptions {
        rtol: 1e-13,
        ..MinresOptions::for_dim(sys.dim())
    };
    let (x, _) = minres_solve(&sys, &pc, sys.rhs(), &opts)?;
    let sol = sys.split_solution(&x);
    let alpha_inf = norm_inf(&sol.alpha);
    let err = query_points(50)
        .iter()
        .map(|q| (evaluate_interpolant(&sol, &pts, &kernel, sys.basis(), q) - field(q)).abs())
        .fold(0.0, f64::max);
    Ok((
        alpha_inf <= 1e-8 && err <= 1e-8,
        format!("|alpha|_inf = {alpha_inf:.2e}, query error {err:.2e}"),
    ))
}

fn addition_theorem() -> Outcome {
    let q = query_points(40);
    let mut worst = 0.0f64;
    for pair in q.chunks(2) {
        for l in 0..=30 {
            let t = pair[0].dot(&pair[1]);
            let want = (2 * l + 1) as f64 / (4.0 * PI) * legendre_p(l, t);
            worst = worst.max((addition_theorem_sum(l, &pair[0], &pair[1]) - want).abs());
        }
    }
    Ok((
        worst <= 1e-11,
        format!("max deviation {worst:.2e} for l <= 30"),
    ))
}

/// Runs the checks, prints one line each and returns whether all passed.
pub fn run(full: bool) -> bool {
    let mut rows = Vec::new();
    let mut results: Vec<(&str, Outcome)> = vec![(
        "exact preconditioner clusters",
        exact_preconditioner_clusters(&mut rows),
    )];
    results.push(("Schur spectrum in (0, 1 + 1e-8]", schur_bounds(full)));
    if full {
        results.push(("N = 4000 extreme eigenvalues", extreme_eigenvalues()));
        results.push(("preconditioning trend", preconditioning_trend(&mut rows)));
    }
    results.push(("coefficient decay profile", coefficient_profile()));
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| !post_solve_ok(r))
        .map(|r| format!("m={} N={} L={} {}", r.m, r.n, r.l, r.precond))
        .collect();
    results.push((
        "post-solve residuals",
        Ok((
            bad.is_empty(),
            format!(
                "{} solves checked{}",
                rows.len(),
                if bad.is_empty() {
                    String::new()
                } else {
                    format!(", failing: {}", bad.join("; "))
                }
            ),
        )),
    ));
    results.push(("polynomial reproduction", polynomial_reproduction()));
    results.push(("addition theorem", addition_theorem()));

    let mut all = true;
    for (name, outcome) in results {
        match outcome {
            Ok((pass, detail)) => {
                all &= pass;
                println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
            }
            Err(e) => {
                all = false;
                println!("FAIL {name}: error: {e}");
            }
        }
    }
    all
}
