//! KdV accuracy/efficiency table: error versus wall time per step count,
//! serial and optionally node-parallel.

use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;

use fimex_core::integrator::{integrate_with_tableau, MethodSpec, SolverConfig};
use fimex_core::problems::reference::{kdv_reference, rel_inf_error_c};
use fimex_core::problems::KdvSpectralProblem;
use fimex_core::tableaux::build_propagator;
use fimex_core::Error;

use crate::convergence::{RunStatus, StudyConfig};
use crate::csvio::{fmt_f, row, write_lines};

/// One row of the efficiency table.
#[derive(Debug, Clone)]
pub struct KdvRow {
    pub method_id: String,
    pub n_steps: usize,
    pub error: f64,
    pub wall_ms_serial: f64,
    pub wall_ms_parallel: Option<f64>,
    pub status: RunStatus,
}

fn run_once(
    n: usize,
    tableau: &fimex_core::tableaux::MethodTableau,
    spec: &MethodSpec,
    t_end: f64,
    n_steps: usize,
    solver: &SolverConfig,
) -> Result<(Vec<Complex64>, f64), Error> {
    let mut problem = KdvSpectralProblem::new(n)?;
    let y0 = problem.initial_spectrum();
    let clock = Instant::now();
    let result = integrate_with_tableau(&mut problem, tableau, spec, &y0, 0.0, t_end, n_steps, solver)?;
    let ms = clock.elapsed().as_secs_f64() * 1e3;
    Ok((result.y_end, ms))
}

/// Run the table: errors are relative infinity-norm against the cached
/// reference (64x the finest step count). When `with_parallel` is set each
/// run is repeated with node-parallel derivative evaluation and its wall
/// time reported alongside.
#[allow(clippy::too_many_arguments)]
pub fn kdv_efficiency(
    n: usize,
    methods: &[MethodSpec],
    schedule: &[usize],
    t_end: f64,
    cache_dir: &Path,
    study: &StudyConfig,
    with_parallel: bool,
) -> Result<Vec<KdvRow>, Error> {
    if schedule.is_empty() {
        return Err(Error::InvalidInput("empty step schedule".into()));
    }
    let n_ref = 64 * schedule.iter().copied().max().unwrap();
    let y_ref = kdv_reference(cache_dir, n, t_end, n_ref)?;

    let mut rows = Vec::new();
    for spec in methods {
        let tableau = build_propagator(spec.q, spec.variant)?;
        for &n_steps in schedule {
            let mut serial_ms = f64::INFINITY;
            let mut outcome: Option<Result<Vec<Complex64>, Error>> = None;
            for _ in 0..study.reps.max(1) {
                match run_once(n, &tableau, spec, t_end, n_steps, &study.solver) {
                    Ok((y, ms)) => {
                        serial_ms = serial_ms.min(ms);
                        outcome = Some(Ok(y));
                    }
                    Err(e) => {
                        outcome = Some(Err(e));
                        break;
                    }
                }
            }
            let parallel_ms = if with_parallel {
                let mut cfg = study.solver.clone();
                cfg.parallel = true;
                let mut best = f64::INFINITY;
                for _ in 0..study.reps.max(1) {
                    if let Ok((_, ms)) = run_once(n, &tableau, spec, t_end, n_steps, &cfg) {
                        best = best.min(ms);
                    }
                }
                best.is_finite().then_some(best)
            } else {
                None
            };
            let row = match outcome.unwrap() {
                Ok(y_end) => {
                    let error = rel_inf_error_c(&y_end, &y_ref);
                    let status = if !error.is_finite() || error > study.overflow_rel {
                        RunStatus::Overflow
                    } else {
                        RunStatus::Ok
                    };
                    KdvRow {
                        method_id: spec.id(),
                        n_steps,
                        error,
                        wall_ms_serial: serial_ms,
                        wall_ms_parallel: parallel_ms,
                        status,
                    }
                }
                Err(e)
                    if matches!(
                        e,
                        Error::NewtonDivergence { .. } | Error::LinearSolveFailure(_)
                    ) =>
                {
                    KdvRow {
                        method_id: spec.id(),
                        n_steps,
                        error: f64::NAN,
                        wall_ms_serial: serial_ms,
                        wall_ms_parallel: parallel_ms,
                        status: RunStatus::NewtonDivergence,
                    }
                }
                Err(e) => return Err(e),
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Write the table: columns
/// `(method, n_steps, error, wall_ms_serial, wall_ms_parallel, status)`.
pub fn write_kdv_csv(dir: &Path, stem: &str, rows: &[KdvRow]) -> Result<PathBuf, Error> {
    let path = dir.join(format!("{stem}.csv"));
    let lines: Vec<String> = rows
        .iter()
        .map(|r| {
            row(&[
                r.method_id.clone(),
                r.n_steps.to_string(),
                fmt_f(r.error),
                fmt_f(r.wall_ms_serial),
                r.wall_ms_parallel.map(fmt_f).unwrap_or_default(),
                r.status.as_str().to_string(),
            ])
        })
        .collect();
    write_lines(
        &path,
        "method,n_steps,error,wall_ms_serial,wall_ms_parallel,status",
        &lines,
    )?;
    Ok(path)
}
