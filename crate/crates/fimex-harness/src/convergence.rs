//! Convergence studies: run a method over a step schedule, measure errors
//! against a reference, and fit the order as the least-squares slope of
//! log(error) versus log(stepsize).

use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;

use fimex_core::integrator::{integrate_with_tableau, MethodSpec, SolverConfig};
use fimex_core::problems::reference::{rel_inf_error, vdp_reference};
use fimex_core::problems::{vdp_initial_condition, vdp_rhs_components, DahlquistProblem, VdpSplitting};
use fimex_core::tableaux::build_propagator;
use fimex_core::Error;

use crate::csvio::{fmt_f, row, write_lines};

/// Outcome of one (method, stepsize) run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    /// The implicit solver failed (Newton divergence or singular system).
    NewtonDivergence,
    /// The error is non-finite or beyond any stable magnitude.
    Overflow,
    /// The error sits at the reference/roundoff floor and carries no order
    /// information.
    Floor,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::NewtonDivergence => "newton-divergence",
            RunStatus::Overflow => "overflow",
            RunStatus::Floor => "floor",
        }
    }
}

/// One row of a convergence report.
#[derive(Debug, Clone)]
pub struct ConvRow {
    pub h: f64,
    pub n_steps: usize,
    pub error: f64,
    pub wall_ms: f64,
    pub status: RunStatus,
}

/// All rows for one method plus the order fit over the clean rows.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub method_id: String,
    pub rows: Vec<ConvRow>,
    /// `(p_hat, rms_residual)`; `None` with fewer than two clean rows.
    pub fit: Option<(f64, f64)>,
}

impl ConvergenceReport {
    pub fn fitted_order(&self) -> Option<f64> {
        self.fit.map(|(p, _)| p)
    }
}

/// Study-wide knobs.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub solver: SolverConfig,
    /// Relative errors below this are flagged `floor` and excluded from the
    /// fit (the spec sets trustworthy tolerances at >= 100x the reference
    /// uncertainty; the default matches that margin).
    pub floor_rel: f64,
    /// Relative errors above this are flagged `overflow`.
    pub overflow_rel: f64,
    /// Timing repetitions; the minimum wall time is reported.
    pub reps: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            solver: SolverConfig::default(),
            floor_rel: 1e-11,
            overflow_rel: 1e3,
            reps: 1,
        }
    }
}

/// Ordinary least squares on `(ln h, ln error)`: returns the slope (the
/// fitted order) and the RMS fit residual. Needs at least two pairs with
/// positive error.
pub fn fit_order(pairs: &[(f64, f64)]) -> Result<(f64, f64), Error> {
    let clean: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|(h, e)| *h > 0.0 && *e > 0.0 && e.is_finite())
        .map(|&(h, e)| (h.ln(), e.ln()))
        .collect();
    if clean.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "order fit needs at least 2 valid (h, error) pairs, got {}",
            clean.len()
        )));
    }
    let n = clean.len() as f64;
    let sx: f64 = clean.iter().map(|(x, _)| x).sum();
    let sy: f64 = clean.iter().map(|(_, y)| y).sum();
    let sxx: f64 = clean.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = clean.iter().map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return Err(Error::InvalidInput("degenerate abscissae in order fit".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let ss: f64 = clean
        .iter()
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    Ok((slope, (ss / n).sqrt()))
}

fn classify(error: f64, study: &StudyConfig) -> RunStatus {
    if !error.is_finite() || error > study.overflow_rel {
        RunStatus::Overflow
    } else if error < study.floor_rel {
        RunStatus::Floor
    } else {
        RunStatus::Ok
    }
}

fn finish_report(method_id: String, rows: Vec<ConvRow>) -> ConvergenceReport {
    let pairs: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.status == RunStatus::Ok)
        .map(|r| (r.h, r.error))
        .collect();
    let fit = fit_order(&pairs).ok();
    ConvergenceReport { method_id, rows, fit }
}

fn is_solver_failure(err: &Error) -> bool {
    matches!(
        err,
        Error::NewtonDivergence { .. } | Error::LinearSolveFailure(_)
    )
}

/// Van der Pol convergence study for several methods over one step schedule.
/// The reference is cached under `cache_dir` and generated at 64x the finest
/// step count.
pub fn vdp_convergence(
    eps: f64,
    splitting: VdpSplitting,
    methods: &[MethodSpec],
    schedule: &[usize],
    t_end: f64,
    cache_dir: &Path,
    study: &StudyConfig,
) -> Result<Vec<ConvergenceReport>, Error> {
    if schedule.is_empty() {
        return Err(Error::InvalidInput("empty step schedule".into()));
    }
    let n_ref = 64 * schedule.iter().copied().max().unwrap();
    let y_ref = vdp_reference(cache_dir, eps, t_end, n_ref)?;
    let y0 = vdp_initial_condition(eps);

    let mut reports = Vec::with_capacity(methods.len());
    for spec in methods {
        let tableau = build_propagator(spec.q, spec.variant)?;
        let mut rows = Vec::with_capacity(schedule.len());
        for &n_steps in schedule {
            let h = t_end / n_steps as f64;
            let mut best_ms = f64::INFINITY;
            let mut outcome: Option<Result<[f64; 2], Error>> = None;
            for _ in 0..study.reps.max(1) {
                let mut problem = vdp_rhs_components(splitting, eps);
                let clock = Instant::now();
                let run = integrate_with_tableau(
                    &mut problem,
                    &tableau,
                    spec,
                    &y0,
                    0.0,
                    t_end,
                    n_steps,
                    &study.solver,
                );
                best_ms = best_ms.min(clock.elapsed().as_secs_f64() * 1e3);
                outcome = Some(run.map(|r| [r.y_end[0], r.y_end[1]]));
            }
            let row = match outcome.unwrap() {
                Ok(y_end) => {
                    let error = rel_inf_error(&y_end, &y_ref);
                    ConvRow {
                        h,
                        n_steps,
                        error,
                        wall_ms: best_ms,
                        status: classify(error, study),
                    }
                }
                Err(e) if is_solver_failure(&e) => ConvRow {
                    h,
                    n_steps,
                    error: f64::NAN,
                    wall_ms: best_ms,
                    status: RunStatus::NewtonDivergence,
                },
                Err(e) => return Err(e),
            };
            rows.push(row);
        }
        reports.push(finish_report(spec.id(), rows));
    }
    Ok(reports)
}

/// Dahlquist convergence study against the closed-form solution.
#[allow(clippy::too_many_arguments)]
pub fn dahlquist_convergence(
    lambda1: Complex64,
    lambda2: Complex64,
    y0: Complex64,
    methods: &[MethodSpec],
    schedule: &[usize],
    t_end: f64,
    study: &StudyConfig,
) -> Result<Vec<ConvergenceReport>, Error> {
    let exact = DahlquistProblem::new(lambda1, lambda2, y0).exact(t_end);
    let mut reports = Vec::with_capacity(methods.len());
    for spec in methods {
        let tableau = build_propagator(spec.q, spec.variant)?;
        let mut rows = Vec::with_capacity(schedule.len());
        for &n_steps in schedule {
            let h = t_end / n_steps as f64;
            let clock = Instant::now();
            let mut problem = DahlquistProblem::new(lambda1, lambda2, y0);
            let run = integrate_with_tableau(
                &mut problem,
                &tableau,
                spec,
                &[y0],
                0.0,
                t_end,
                n_steps,
                &study.solver,
            );
            let wall_ms = clock.elapsed().as_secs_f64() * 1e3;
            let row = match run {
                Ok(r) => {
                    let error = (r.y_end[0] - exact).norm() / exact.norm().max(f64::MIN_POSITIVE);
                    ConvRow {
                        h,
                        n_steps,
                        error,
                        wall_ms,
                        status: classify(error, study),
                    }
                }
                Err(e) if is_solver_failure(&e) => ConvRow {
                    h,
                    n_steps,
                    error: f64::NAN,
                    wall_ms,
                    status: RunStatus::NewtonDivergence,
                },
                Err(e) => return Err(e),
            };
            rows.push(row);
        }
        reports.push(finish_report(spec.id(), rows));
    }
    Ok(reports)
}

/// Filesystem-safe method label.
pub fn method_file_id(spec: &MethodSpec) -> String {
    format!("{}_q{}_k{}", spec.variant, spec.q, spec.kappa)
}

/// Write one report as CSV: columns `(h, n_steps, error, wall_ms, status)`,
/// with the fit in a trailing comment line.
pub fn write_report_csv(dir: &Path, stem: &str, report: &ConvergenceReport) -> Result<PathBuf, Error> {
    let path = dir.join(format!("{stem}.csv"));
    let mut lines: Vec<String> = report
        .rows
        .iter()
        .map(|r| {
            row(&[
                fmt_f(r.h),
                r.n_steps.to_string(),
                fmt_f(r.error),
                fmt_f(r.wall_ms),
                r.status.as_str().to_string(),
            ])
        })
        .collect();
    if let Some((p, resid)) = report.fit {
        lines.push(format!("# fit,p_hat={},residual={}", fmt_f(p), fmt_f(resid)));
    } else {
        lines.push("# fit,none".to_string());
    }
    write_lines(&path, "h,n_steps,error,wall_ms,status", &lines)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_exact_cubic_data() {
        // error = C h^3 exactly -> slope 3 to roundoff
        let pairs: Vec<(f64, f64)> = (1..8)
            .map(|i| {
                let h = 0.5f64.powi(i);
                (h, 2.5 * h.powi(3))
            })
            .collect();
        let (p, resid) = fit_order(&pairs).unwrap();
        assert!((p - 3.0).abs() < 1e-10, "p = {p}");
        assert!(resid < 1e-10);
    }

    #[test]
    fn fit_two_point_slope() {
        let (p, _) = fit_order(&[(0.1, 1e-3), (0.05, 1.25e-4)]).unwrap();
        assert!((p - 3.0).abs() < 1e-12);
    }

    #[test]
    fn fit_constant_error_is_slope_zero() {
        let (p, _) = fit_order(&[(0.1, 1e-4), (0.05, 1e-4), (0.025, 1e-4)]).unwrap();
        assert!(p.abs() < 1e-12);
    }

    #[test]
    fn fit_rejects_insufficient_data() {
        assert!(fit_order(&[(0.1, 1e-3)]).is_err());
        assert!(fit_order(&[(0.1, 0.0), (0.05, -1.0)]).is_err());
    }

    #[test]
    fn fit_noisy_fifth_order() {
        // +-1% multiplicative noise, seeded
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let pairs: Vec<(f64, f64)> = (0..12)
            .map(|i| {
                let h = 0.2 * 0.7f64.powi(i);
                let noise = 1.0 + rng.gen_range(-0.01..0.01);
                (h, 0.3 * h.powi(5) * noise)
            })
            .collect();
        let (p, _) = fit_order(&pairs).unwrap();
        assert!(p > 4.9 && p < 5.1, "p = {p}");
    }
}
