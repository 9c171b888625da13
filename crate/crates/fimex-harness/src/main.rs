//! `fimex` — coefficient export, stability-region scans, and convergence /
//! efficiency studies for the FIMEX block methods.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use fimex_core::integrator::MethodSpec;
use fimex_core::problems::VdpSplitting;
use fimex_core::stability::{default_gamma_samples, GridSpec};
use fimex_core::tableaux::{build_propagator, export_coeffs, ExportFormat, Variant};
use fimex_core::Error;

use fimex_harness::convergence::{
    dahlquist_convergence, method_file_id, vdp_convergence, write_report_csv, StudyConfig,
};
use fimex_harness::csvio::fmt_f;
use fimex_harness::kdv::{kdv_efficiency, write_kdv_csv};
use fimex_harness::manifest::write_manifest;
use fimex_harness::stability_export::{export_s_hat, export_s_tilde};
use fimex_harness::{parse_steps_arg, resolve_cache_dir};

#[derive(Parser)]
#[command(name = "fimex", version, about = "FIMEX polynomial block method toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Radau,
    #[value(name = "radau-star")]
    RadauStar,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Radau => Variant::Radau,
            VariantArg::RadauStar => Variant::RadauStar,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct MethodArgs {
    /// Node count (2..=9).
    #[arg(long, default_value_t = 4)]
    q: usize,
    /// Iterator applications per composite step.
    #[arg(long, default_value_t = 1)]
    kappa: usize,
    #[arg(long, value_enum, default_value = "radau-star")]
    variant: VariantArg,
    /// Override list, e.g. "radau-star:5:2,radau:3:1"; wins over --q/--kappa.
    #[arg(long)]
    methods: Option<String>,
}

impl MethodArgs {
    fn specs(&self) -> Result<Vec<MethodSpec>, Error> {
        match &self.methods {
            Some(list) => parse_methods(list),
            None => Ok(vec![MethodSpec::new(self.variant.into(), self.q, self.kappa)]),
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Print or save the coefficient matrices for one method.
    Coeffs {
        #[arg(long, default_value_t = 3)]
        q: usize,
        #[arg(long, value_enum, default_value = "radau")]
        variant: VariantArg,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scan stability-region slices and export grid + contour CSV files.
    Stability {
        #[command(flatten)]
        method: MethodArgs,
        /// Semicolon-separated z1 values "re,im;re,im;..."; defaults to the
        /// nine |z1| in {0,3,6} x arg in {0, 3pi/2, pi/2} settings.
        #[arg(long)]
        z1: Option<String>,
        /// Scan the wedge slice for this angle (radians) instead of fixed z1.
        #[arg(long)]
        theta: Option<f64>,
        /// Grid "re_min,re_max,im_min,im_max,nx,ny".
        #[arg(long, default_value = "-8,8,-8,8,401,401")]
        grid: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        parallel: bool,
    },
    /// Convergence study with a least-squares order fit.
    Converge {
        /// "vdp" or "dahlquist".
        #[arg(long, default_value = "vdp")]
        problem: String,
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        /// "semi-implicit" or "linearly-implicit".
        #[arg(long, default_value = "semi-implicit")]
        splitting: String,
        #[command(flatten)]
        method: MethodArgs,
        /// Comma list ("10,20,40") or log range "lo:hi:count" of step counts.
        #[arg(long, default_value = "10:500:12")]
        steps: String,
        #[arg(long, default_value_t = 0.5)]
        t_end: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        /// Timing repetitions per run (minimum reported).
        #[arg(long, default_value_t = 1)]
        reps: usize,
    },
    /// Van der Pol stiffness sweep: one convergence study per epsilon.
    Vdp {
        /// Comma-separated epsilon list; default 1 down to 1e-8, log-spaced.
        #[arg(long)]
        eps_list: Option<String>,
        #[arg(long, default_value = "semi-implicit")]
        splitting: String,
        #[command(flatten)]
        method: MethodArgs,
        #[arg(long, default_value = "2:5000:30")]
        steps: String,
        #[arg(long, default_value_t = 0.5)]
        t_end: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
    /// KdV accuracy/efficiency table.
    Kdv {
        /// Fourier modes (power of two).
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[command(flatten)]
        method: MethodArgs,
        #[arg(long, default_value = "200,400,800,1600")]
        steps: String,
        /// Final time; defaults to 3.6/pi.
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        /// Also time node-parallel runs.
        #[arg(long)]
        parallel: bool,
        #[arg(long, default_value_t = 3)]
        reps: usize,
    },
}

fn parse_methods(list: &str) -> Result<Vec<MethodSpec>, Error> {
    let mut specs = Vec::new();
    for tok in list.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        let parts: Vec<&str> = tok.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidInput(format!(
                "expected variant:q:kappa, got '{tok}'"
            )));
        }
        let variant = Variant::from_str(parts[0])?;
        let q = parts[1]
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad q '{}'", parts[1])))?;
        let kappa = parts[2]
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad kappa '{}'", parts[2])))?;
        specs.push(MethodSpec::new(variant, q, kappa));
    }
    if specs.is_empty() {
        return Err(Error::InvalidInput("empty method list".into()));
    }
    Ok(specs)
}

fn parse_grid(arg: &str) -> Result<GridSpec, Error> {
    let parts: Vec<&str> = arg.split(',').collect();
    if parts.len() != 6 {
        return Err(Error::InvalidInput(format!(
            "grid needs 6 fields re_min,re_max,im_min,im_max,nx,ny, got '{arg}'"
        )));
    }
    let f = |s: &str| -> Result<f64, Error> {
        s.trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad grid number '{s}'")))
    };
    let u = |s: &str| -> Result<usize, Error> {
        s.trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad grid size '{s}'")))
    };
    let grid = GridSpec {
        re_min: f(parts[0])?,
        re_max: f(parts[1])?,
        im_min: f(parts[2])?,
        im_max: f(parts[3])?,
        nx: u(parts[4])?,
        ny: u(parts[5])?,
    };
    grid.validate()?;
    Ok(grid)
}

fn parse_z1_list(arg: &str) -> Result<Vec<Complex64>, Error> {
    let mut out = Vec::new();
    for tok in arg.split(';') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        let parts: Vec<&str> = tok.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::InvalidInput(format!("expected re,im, got '{tok}'")));
        }
        let re: f64 = parts[0]
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad number '{}'", parts[0])))?;
        let im: f64 = parts[1]
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad number '{}'", parts[1])))?;
        out.push(Complex64::new(re, im));
    }
    if out.is_empty() {
        return Err(Error::InvalidInput("empty z1 list".into()));
    }
    Ok(out)
}

/// The figure settings: |z1| in {0, 3, 6} x arg(z1) in {0, 3pi/2, pi/2},
/// with the origin listed once.
fn default_z1_list() -> Vec<Complex64> {
    let mut list = vec![Complex64::new(0.0, 0.0)];
    for arg in [0.0, 3.0 * std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2] {
        for mag in [3.0, 6.0] {
            list.push(Complex64::from_polar(mag, arg));
        }
    }
    list
}

fn default_eps_sweep() -> Vec<f64> {
    (0..=8).map(|i| 10f64.powi(-i)).collect()
}

fn run() -> Result<bool, Error> {
    if let Ok(threads) = std::env::var("FIMEX_THREADS") {
        if let Ok(k) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
        }
    }
    let cli = Cli::parse();
    let mut all_ok = true;

    match cli.cmd {
        Cmd::Coeffs { q, variant, format, out } => {
            let tableau = build_propagator(q, variant.into())?;
            let text = export_coeffs(
                &tableau,
                match format {
                    FormatArg::Csv => ExportFormat::Csv,
                    FormatArg::Json => ExportFormat::Json,
                },
            );
            match out {
                Some(path) => {
                    if let Some(dir) = path.parent() {
                        std::fs::create_dir_all(dir)?;
                    }
                    std::fs::write(path, text)?;
                }
                None => print!("{text}"),
            }
        }
        Cmd::Stability { method, z1, theta, grid, out, parallel } => {
            let grid = parse_grid(&grid)?;
            let z1_list = match &z1 {
                Some(arg) => parse_z1_list(arg)?,
                None => default_z1_list(),
            };
            let mut files = Vec::new();
            for spec in method.specs()? {
                let tableau = build_propagator(spec.q, spec.variant)?;
                if let Some(theta) = theta {
                    files.extend(export_s_tilde(
                        &tableau,
                        spec.kappa,
                        theta,
                        &grid,
                        &default_gamma_samples(),
                        &out,
                        parallel,
                    )?);
                } else {
                    files.extend(export_s_hat(
                        &tableau, spec.kappa, &z1_list, &grid, &out, parallel,
                    )?);
                }
            }
            write_manifest(
                &out,
                "stability",
                serde_json::json!({
                    "methods": method.specs()?.iter().map(|m| m.id()).collect::<Vec<_>>(),
                    "z1": z1_list.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                    "theta": theta,
                    "grid": grid,
                    "parallel": parallel,
                    "files": files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
                }),
            )?;
        }
        Cmd::Converge {
            problem,
            eps,
            splitting,
            method,
            steps,
            t_end,
            out,
            cache_dir,
            reps,
        } => {
            let schedule = parse_steps_arg(&steps)?;
            let specs = method.specs()?;
            let study = StudyConfig { reps, ..StudyConfig::default() };
            let cache = resolve_cache_dir(cache_dir, Some(&out));
            let reports = match problem.as_str() {
                "vdp" => {
                    let split: VdpSplitting = splitting.parse()?;
                    vdp_convergence(eps, split, &specs, &schedule, t_end, &cache, &study)?
                }
                "dahlquist" => dahlquist_convergence(
                    Complex64::new(-1.0, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(1.0, 0.0),
                    &specs,
                    &schedule,
                    t_end,
                    &study,
                )?,
                other => {
                    return Err(Error::InvalidInput(format!(
                        "unknown problem '{other}' (expected vdp or dahlquist)"
                    )))
                }
            };
            std::fs::create_dir_all(&out)?;
            for (spec, report) in specs.iter().zip(&reports) {
                write_report_csv(&out, &method_file_id(spec), report)?;
                let ok_rows = report
                    .rows
                    .iter()
                    .filter(|r| r.status == fimex_harness::RunStatus::Ok)
                    .count();
                if ok_rows == 0 {
                    all_ok = false;
                }
                match report.fit {
                    Some((p, _)) => println!("{}: fitted order {}", report.method_id, fmt_f(p)),
                    None => println!("{}: no fit (insufficient clean rows)", report.method_id),
                }
            }
            write_manifest(
                &out,
                "converge",
                serde_json::json!({
                    "problem": problem,
                    "eps": eps,
                    "splitting": splitting,
                    "methods": specs.iter().map(|m| m.id()).collect::<Vec<_>>(),
                    "steps": schedule,
                    "t_end": t_end,
                    "reps": reps,
                }),
            )?;
        }
        Cmd::Vdp {
            eps_list,
            splitting,
            method,
            steps,
            t_end,
            out,
            cache_dir,
        } => {
            let eps_values = match &eps_list {
                Some(arg) => arg
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::InvalidInput(format!("bad eps '{s}'")))
                    })
                    .collect::<Result<Vec<_>, _>>()?,
                None => default_eps_sweep(),
            };
            let split: VdpSplitting = splitting.parse()?;
            let schedule = parse_steps_arg(&steps)?;
            let specs = method.specs()?;
            let study = StudyConfig::default();
            let cache = resolve_cache_dir(cache_dir, Some(&out));
            std::fs::create_dir_all(&out)?;
            // rate summary: one row per (eps, method)
            let mut rate_lines = Vec::new();
            for &eps in &eps_values {
                let reports =
                    vdp_convergence(eps, split, &specs, &schedule, t_end, &cache, &study)?;
                for (spec, report) in specs.iter().zip(&reports) {
                    let stem = format!("eps{eps:.1e}_{}", method_file_id(spec));
                    write_report_csv(&out, &stem, report)?;
                    let ok_rows = report
                        .rows
                        .iter()
                        .filter(|r| r.status == fimex_harness::RunStatus::Ok)
                        .count();
                    if ok_rows == 0 {
                        all_ok = false;
                    }
                    rate_lines.push(fimex_harness::csvio::row(&[
                        fmt_f(eps),
                        report.method_id.clone(),
                        report
                            .fit
                            .map(|(p, _)| fmt_f(p))
                            .unwrap_or_else(|| "".into()),
                    ]));
                }
            }
            fimex_harness::csvio::write_lines(
                &out.join("rates.csv"),
                "eps,method,p_hat",
                &rate_lines,
            )?;
            write_manifest(
                &out,
                "vdp",
                serde_json::json!({
                    "eps": eps_values,
                    "splitting": splitting,
                    "methods": specs.iter().map(|m| m.id()).collect::<Vec<_>>(),
                    "steps": schedule,
                    "t_end": t_end,
                }),
            )?;
        }
        Cmd::Kdv {
            n,
            method,
            steps,
            t_end,
            out,
            cache_dir,
            parallel,
            reps,
        } => {
            let t_end = t_end.unwrap_or(3.6 / std::f64::consts::PI);
            let schedule = parse_steps_arg(&steps)?;
            let specs = method.specs()?;
            let study = StudyConfig { reps, ..StudyConfig::default() };
            let cache = resolve_cache_dir(cache_dir, Some(&out));
            let rows = kdv_efficiency(n, &specs, &schedule, t_end, &cache, &study, parallel)?;
            std::fs::create_dir_all(&out)?;
            write_kdv_csv(&out, "kdv_efficiency", &rows)?;
            if rows
                .iter()
                .all(|r| r.status != fimex_harness::RunStatus::Ok)
            {
                all_ok = false;
            }
            write_manifest(
                &out,
                "kdv",
                serde_json::json!({
                    "n": n,
                    "methods": specs.iter().map(|m| m.id()).collect::<Vec<_>>(),
                    "steps": schedule,
                    "t_end": t_end,
                    "parallel": parallel,
                    "reps": reps,
                }),
            )?;
        }
    }
    Ok(all_ok)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("fimex: one or more studies produced no clean rows");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("fimex: {e}");
            ExitCode::FAILURE
        }
    }
}
