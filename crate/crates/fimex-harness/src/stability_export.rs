//! Stability-region CSV export: per-point spectral radius grids plus the
//! rho = 1 contour segments, one file pair per slice.

use std::path::{Path, PathBuf};

use num_complex::Complex64;

use fimex_core::stability::{region_s_hat, region_s_tilde, GridSpec, RegionScan};
use fimex_core::tableaux::MethodTableau;
use fimex_core::Error;

use crate::csvio::{fmt_f, row, write_lines};

fn write_scan(dir: &Path, stem: &str, scan: &RegionScan) -> Result<Vec<PathBuf>, Error> {
    let grid_path = dir.join(format!("{stem}.csv"));
    let mut lines = Vec::with_capacity(scan.rho.len());
    for iy in 0..scan.grid.ny {
        for ix in 0..scan.grid.nx {
            let z2 = scan.grid.point(ix, iy);
            lines.push(row(&[
                fmt_f(z2.re),
                fmt_f(z2.im),
                fmt_f(scan.rho[iy * scan.grid.nx + ix]),
            ]));
        }
    }
    write_lines(&grid_path, "re_z2,im_z2,rho", &lines)?;

    let contour_path = dir.join(format!("{stem}_contour.csv"));
    let lines: Vec<String> = scan
        .contours
        .iter()
        .map(|s| row(&[fmt_f(s[0]), fmt_f(s[1]), fmt_f(s[2]), fmt_f(s[3])]))
        .collect();
    write_lines(&contour_path, "x1,y1,x2,y2", &lines)?;
    Ok(vec![grid_path, contour_path])
}

/// Export `S^(z1)` for each listed `z1`. File stems carry the list index;
/// the run manifest records the mapping.
pub fn export_s_hat(
    tableau: &MethodTableau,
    kappa: usize,
    z1_list: &[Complex64],
    grid: &GridSpec,
    out_dir: &Path,
    parallel: bool,
) -> Result<Vec<PathBuf>, Error> {
    if z1_list.is_empty() {
        return Err(Error::InvalidInput("empty z1 list".into()));
    }
    let mut written = Vec::new();
    for (idx, &z1) in z1_list.iter().enumerate() {
        let scan = region_s_hat(z1, tableau, kappa, grid, parallel)?;
        let stem = format!(
            "shat_{}_q{}_k{}_z1idx{}",
            tableau.variant(),
            tableau.q(),
            kappa,
            idx
        );
        written.extend(write_scan(out_dir, &stem, &scan)?);
    }
    Ok(written)
}

/// Export `S~(theta)`.
#[allow(clippy::too_many_arguments)]
pub fn export_s_tilde(
    tableau: &MethodTableau,
    kappa: usize,
    theta: f64,
    grid: &GridSpec,
    gamma_samples: &[f64],
    out_dir: &Path,
    parallel: bool,
) -> Result<Vec<PathBuf>, Error> {
    let scan = region_s_tilde(theta, tableau, kappa, grid, gamma_samples, parallel)?;
    let stem = format!(
        "stilde_{}_q{}_k{}_theta{:.6}",
        tableau.variant(),
        tableau.q(),
        kappa,
        theta
    );
    write_scan(out_dir, &stem, &scan)
}
