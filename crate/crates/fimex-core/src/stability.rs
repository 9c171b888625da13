//! Partitioned-Dahlquist amplification matrices and stability-region slices.
//!
//! On `y' = lambda1 y + lambda2 y` the composite method reduces to
//! `y^[n+1] = M(z1, z2) y^[n]` with `z_k = h lambda_k`; since `h = 2r` the
//! internal scaling is `w_k = z_k / 2`. The slices scanned here are
//! `S(z1)` (fixed implicit argument), `S^(z1)` (conjugate-symmetrized), and
//! `S~(theta)` (uniform over a wedge of implicit arguments).

use num_complex::Complex64;

use crate::error::Error;
use crate::linalg::{CMat, Lu};
use crate::tableaux::MethodTableau;

/// One amplification evaluation point.
#[derive(Debug, Clone, Copy)]
pub struct AmplificationQuery<'a> {
    pub z1: Complex64,
    pub z2: Complex64,
    pub tableau: &'a MethodTableau,
    /// Iterator applications per composite step.
    pub kappa: usize,
}

fn resolvent_times(b: &CMat, w1: Complex64, rhs: &CMat, z1: Complex64) -> Result<CMat, Error> {
    let q = b.rows();
    let mut m = CMat::identity(q);
    for i in 0..q {
        for j in 0..q {
            m[(i, j)] -= w1 * b[(i, j)];
        }
    }
    let lu = Lu::factor(m).map_err(|_| Error::SingularResolvent { z1 })?;
    // solve column by column
    let mut out = CMat::zeros(q, rhs.cols());
    let mut col = vec![Complex64::new(0.0, 0.0); q];
    for j in 0..rhs.cols() {
        for i in 0..q {
            col[i] = rhs[(i, j)];
        }
        lu.solve_in_place(&mut col);
        for i in 0..q {
            out[(i, j)] = col[i];
        }
    }
    Ok(out)
}

/// Amplification matrix of the composite method:
/// `M = M_iter^kappa * M_prop` with
/// `M_prop = (I - w1 B1)^-1 (A + w2 B2)` and
/// `M_iter = (I - w1 B_it)^-1 (A~ + w2 B_it)`.
pub fn amplification(query: &AmplificationQuery) -> Result<CMat, Error> {
    let t = query.tableau;
    let q = t.q();
    let w1 = query.z1.scale(0.5);
    let w2 = query.z2.scale(0.5);

    let b1 = t.b1().to_complex();
    let b2 = t.b2().to_complex();
    let a = t.a().to_complex();
    let b_it = t.b_it().to_complex();
    let a_tilde = t.a_tilde().to_complex();

    let mut rhs_prop = a;
    for i in 0..q {
        for j in 0..q {
            rhs_prop[(i, j)] += w2 * b2[(i, j)];
        }
    }
    let m_prop = resolvent_times(&b1, w1, &rhs_prop, query.z1)?;
    if query.kappa == 0 {
        return Ok(m_prop);
    }

    let mut rhs_iter = a_tilde;
    for i in 0..q {
        for j in 0..q {
            rhs_iter[(i, j)] += w2 * b_it[(i, j)];
        }
    }
    let m_iter = resolvent_times(&b_it, w1, &rhs_iter, query.z1)?;

    let mut m = m_prop;
    for _ in 0..query.kappa {
        m = m_iter.matmul(&m);
    }
    Ok(m)
}

/// Spectral radius via the complex Schur form.
pub fn spectral_radius(m: &CMat) -> Result<f64, Error> {
    let q = m.rows();
    if q != m.cols() {
        return Err(Error::InvalidInput("spectral radius needs a square matrix".into()));
    }
    if m.data().iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let dm = nalgebra::DMatrix::<Complex64>::from_fn(q, q, |i, j| m[(i, j)]);
    let schur = nalgebra::linalg::Schur::try_new(dm, f64::EPSILON, 20000)
        .ok_or(Error::EigenFailure { rows: q, cols: q })?;
    let (_, t) = schur.unpack();
    Ok((0..q).map(|i| t[(i, i)].norm()).fold(0.0, f64::max))
}

/// Spectral radius at one `(z1, z2)` point; poles count as unstable
/// (`+infinity`).
pub fn rho_at(z1: Complex64, z2: Complex64, tableau: &MethodTableau, kappa: usize) -> f64 {
    let query = AmplificationQuery { z1, z2, tableau, kappa };
    match amplification(&query).and_then(|m| spectral_radius(&m)) {
        Ok(r) => r,
        Err(_) => f64::INFINITY,
    }
}

/// Rectangular sampling of the z2-plane.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    /// The window of the method's stability figures: `[-8, 8]^2` at 401x401.
    pub fn paper_window() -> Self {
        GridSpec {
            re_min: -8.0,
            re_max: 8.0,
            im_min: -8.0,
            im_max: 8.0,
            nx: 401,
            ny: 401,
        }
    }

    pub fn with_resolution(mut self, nx: usize, ny: usize) -> Self {
        self.nx = nx;
        self.ny = ny;
        self
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::InvalidInput(format!(
                "grid must be at least 2x2, got {}x{}",
                self.nx, self.ny
            )));
        }
        if !(self.re_max > self.re_min) || !(self.im_max > self.im_min) {
            return Err(Error::InvalidInput("grid window is empty".into()));
        }
        Ok(())
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.re_min + (self.re_max - self.re_min) * ix as f64 / (self.nx - 1) as f64
    }

    pub fn y(&self, iy: usize) -> f64 {
        self.im_min + (self.im_max - self.im_min) * iy as f64 / (self.ny - 1) as f64
    }

    pub fn point(&self, ix: usize, iy: usize) -> Complex64 {
        Complex64::new(self.x(ix), self.y(iy))
    }

    fn cell_area(&self) -> f64 {
        let dx = (self.re_max - self.re_min) / (self.nx - 1) as f64;
        let dy = (self.im_max - self.im_min) / (self.ny - 1) as f64;
        dx * dy
    }
}

/// Tolerance band for the stability mask: `rho <= 1 + MASK_TOL`.
pub const MASK_TOL: f64 = 1e-12;

/// Result of scanning one stability slice.
#[derive(Debug, Clone)]
pub struct RegionScan {
    pub grid: GridSpec,
    /// Spectral radius per grid point, row-major (`iy * nx + ix`).
    pub rho: Vec<f64>,
    /// `rho <= 1 + 1e-12` per grid point.
    pub mask: Vec<bool>,
    /// Marching-squares segments of the `rho = 1` contour:
    /// `(x1, y1, x2, y2)` each.
    pub contours: Vec<[f64; 4]>,
}

impl RegionScan {
    /// Area of the stable mask (grid cells scaled by cell area).
    pub fn stable_area(&self) -> f64 {
        self.mask.iter().filter(|&&m| m).count() as f64 * self.grid.cell_area()
    }
}

fn scan_grid(grid: &GridSpec, parallel: bool, f: impl Fn(Complex64) -> f64 + Sync) -> Vec<f64> {
    let nx = grid.nx;
    let eval_row = |iy: usize| -> Vec<f64> {
        (0..nx).map(|ix| f(grid.point(ix, iy))).collect()
    };
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return (0..grid.ny)
            .into_par_iter()
            .map(eval_row)
            .collect::<Vec<_>>()
            .concat();
    }
    let _ = parallel;
    (0..grid.ny).flat_map(eval_row).collect()
}

fn finish_scan(grid: GridSpec, rho: Vec<f64>) -> RegionScan {
    let mask: Vec<bool> = rho.iter().map(|&r| r <= 1.0 + MASK_TOL).collect();
    let contours = marching_squares(&grid, &rho);
    RegionScan { grid, rho, mask, contours }
}

/// `S(z1)`: the z2 values with `rho(M(z1, z2)) <= 1`.
pub fn region_s(
    z1: Complex64,
    tableau: &MethodTableau,
    kappa: usize,
    grid: &GridSpec,
    parallel: bool,
) -> Result<RegionScan, Error> {
    grid.validate()?;
    let rho = scan_grid(grid, parallel, |z2| rho_at(z1, z2, tableau, kappa));
    Ok(finish_scan(*grid, rho))
}

/// `S^(z1)`: stability under both `z1` and its conjugate, matching the
/// spectrum symmetry of real-valued discretizations.
pub fn region_s_hat(
    z1: Complex64,
    tableau: &MethodTableau,
    kappa: usize,
    grid: &GridSpec,
    parallel: bool,
) -> Result<RegionScan, Error> {
    grid.validate()?;
    let z1c = z1.conj();
    let rho = scan_grid(grid, parallel, |z2| {
        let a = rho_at(z1, z2, tableau, kappa);
        if z1c == z1 {
            a
        } else {
            a.max(rho_at(z1c, z2, tableau, kappa))
        }
    });
    Ok(finish_scan(*grid, rho))
}

/// Interior-plus-boundary rays of the wedge `theta <= omega <= pi`.
pub fn wedge_rays(theta: f64) -> Vec<f64> {
    let mut rays = Vec::with_capacity(5);
    for m in 0..=4 {
        let w = theta + (std::f64::consts::PI - theta) * m as f64 / 4.0;
        if rays.last().map_or(true, |&last: &f64| (w - last).abs() > 1e-14) {
            rays.push(w);
        }
    }
    rays
}

/// Default magnitude samples for the wedge scan: gamma = 0 plus 60
/// log-spaced values up to 1e3.
pub fn default_gamma_samples() -> Vec<f64> {
    let mut g = vec![0.0];
    let (lo, hi) = (1e-3f64, 1e3f64);
    for i in 0..60 {
        let t = i as f64 / 59.0;
        g.push(lo * (hi / lo).powf(t));
    }
    g
}

/// `S~(theta)`: z2 values stable for every sampled `z1 = gamma e^{i omega}`
/// in the wedge (conjugate arguments included). The stored `rho` is the
/// maximum over all samples, capped once it exceeds 1.5.
pub fn region_s_tilde(
    theta: f64,
    tableau: &MethodTableau,
    kappa: usize,
    grid: &GridSpec,
    gamma_samples: &[f64],
    parallel: bool,
) -> Result<RegionScan, Error> {
    grid.validate()?;
    if !(0.0..=std::f64::consts::PI + 1e-12).contains(&theta) {
        return Err(Error::InvalidInput(format!(
            "wedge angle theta={theta} outside [0, pi]"
        )));
    }
    if gamma_samples.is_empty() {
        return Err(Error::InvalidInput("empty gamma sample list".into()));
    }
    let rays = wedge_rays(theta);
    let rho = scan_grid(grid, parallel, |z2| {
        let mut worst = 0.0f64;
        'outer: for &gamma in gamma_samples {
            for &omega in &rays {
                let z1 = Complex64::from_polar(gamma, omega);
                worst = worst.max(rho_at(z1, z2, tableau, kappa));
                if z1.im != 0.0 {
                    worst = worst.max(rho_at(z1.conj(), z2, tableau, kappa));
                }
                if worst > 1.5 {
                    break 'outer;
                }
                if gamma == 0.0 {
                    // all rays coincide at the origin
                    break;
                }
            }
        }
        worst
    });
    Ok(finish_scan(*grid, rho))
}

/// Marching squares on `rho - 1` with linear interpolation, no smoothing.
fn marching_squares(grid: &GridSpec, rho: &[f64]) -> Vec<[f64; 4]> {
    let nx = grid.nx;
    let ny = grid.ny;
    let level = |v: f64| -> f64 {
        let f = if v.is_finite() { v } else { 1e30 };
        f - 1.0
    };
    let mut segs = Vec::new();
    for iy in 0..ny - 1 {
        for ix in 0..nx - 1 {
            let f = [
                level(rho[iy * nx + ix]),           // bottom-left
                level(rho[iy * nx + ix + 1]),       // bottom-right
                level(rho[(iy + 1) * nx + ix + 1]), // top-right
                level(rho[(iy + 1) * nx + ix]),     // top-left
            ];
            let xs = [grid.x(ix), grid.x(ix + 1), grid.x(ix + 1), grid.x(ix)];
            let ys = [grid.y(iy), grid.y(iy), grid.y(iy + 1), grid.y(iy + 1)];
            let mut case = 0usize;
            for (b, &fv) in f.iter().enumerate() {
                if fv <= 0.0 {
                    case |= 1 << b;
                }
            }
            if case == 0 || case == 15 {
                continue;
            }
            // interpolated crossing on edge (a, b)
            let cross = |a: usize, b: usize| -> (f64, f64) {
                let t = if (f[a] - f[b]).abs() > 0.0 {
                    (f[a] / (f[a] - f[b])).clamp(0.0, 1.0)
                } else {
                    0.5
                };
                (xs[a] + t * (xs[b] - xs[a]), ys[a] + t * (ys[b] - ys[a]))
            };
            let e = [cross(0, 1), cross(1, 2), cross(2, 3), cross(3, 0)];
            let mut emit = |a: usize, b: usize| {
                segs.push([e[a].0, e[a].1, e[b].0, e[b].1]);
            };
            match case {
                1 | 14 => emit(3, 0),
                2 | 13 => emit(0, 1),
                3 | 12 => emit(3, 1),
                4 | 11 => emit(1, 2),
                6 | 9 => emit(0, 2),
                7 | 8 => emit(2, 3),
                5 | 10 => {
                    // saddle: disambiguate with the cell-center value
                    let center = (f[0] + f[1] + f[2] + f[3]) * 0.25;
                    let inside = center <= 0.0;
                    if (case == 5) == inside {
                        emit(0, 1);
                        emit(2, 3);
                    } else {
                        emit(3, 0);
                        emit(1, 2);
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    segs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tableaux::{build_propagator, Variant};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn spectral_radius_trivial_cases() {
        let id = CMat::identity(4);
        assert!((spectral_radius(&id).unwrap() - 1.0).abs() < 1e-14);
        let mut nil = CMat::zeros(3, 3);
        nil[(0, 1)] = c(2.0, 0.0);
        nil[(1, 2)] = c(-1.0, 3.0);
        assert!(spectral_radius(&nil).unwrap() < 1e-12);
        let tri = CMat::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(0.5, 0.0)]]);
        assert!((spectral_radius(&tri).unwrap() - 0.5).abs() < 1e-13);
    }

    #[test]
    fn zero_arguments_give_unit_radius() {
        for variant in [Variant::Radau, Variant::RadauStar] {
            for q in [2usize, 3, 5] {
                let t = build_propagator(q, variant).unwrap();
                for kappa in [0usize, 1, 3] {
                    let m = amplification(&AmplificationQuery {
                        z1: c(0.0, 0.0),
                        z2: c(0.0, 0.0),
                        tableau: &t,
                        kappa,
                    })
                    .unwrap();
                    let rho = spectral_radius(&m).unwrap();
                    assert!((rho - 1.0).abs() < 1e-12, "q={q} kappa={kappa}: {rho}");
                }
            }
        }
    }

    #[test]
    fn q2_amplification_is_imex_euler() {
        let t = build_propagator(2, Variant::Radau).unwrap();
        let samples = [
            (c(-1.0, 0.5), c(0.3, -0.2)),
            (c(-4.0, 2.0), c(1.0, 1.0)),
            (c(0.2, -3.0), c(-0.7, 0.1)),
        ];
        for (z1, z2) in samples {
            let rho = rho_at(z1, z2, &t, 0);
            let expect = (c(1.0, 0.0) + z2).norm() / (c(1.0, 0.0) - z1).norm();
            assert!((rho - expect).abs() < 1e-12, "{z1} {z2}: {rho} vs {expect}");
        }
    }

    #[test]
    fn l_stability_limit() {
        let t = build_propagator(3, Variant::Radau).unwrap();
        let rho = rho_at(c(-1e8, 0.0), c(0.0, 0.0), &t, 0);
        assert!(rho <= 1e-6, "rho at z1=-1e8: {rho}");
    }

    #[test]
    fn conjugate_symmetry() {
        let t = build_propagator(4, Variant::RadauStar).unwrap();
        let pts = [
            (c(-2.0, 1.5), c(0.4, -2.2)),
            (c(0.5, 3.0), c(-1.0, 0.8)),
            (c(-6.0, -2.0), c(2.0, 2.0)),
        ];
        for (z1, z2) in pts {
            for kappa in [0usize, 2] {
                let a = rho_at(z1, z2, &t, kappa);
                let b = rho_at(z1.conj(), z2.conj(), &t, kappa);
                assert!((a - b).abs() <= 1e-12 * a.max(1.0), "{z1} {z2}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn composite_kappa_zero_is_propagator() {
        let t = build_propagator(3, Variant::Radau).unwrap();
        let (z1, z2) = (c(-1.2, 0.3), c(0.2, 0.9));
        let m0 = amplification(&AmplificationQuery { z1, z2, tableau: &t, kappa: 0 }).unwrap();
        // recompute by hand: (I - w1 B1)^-1 (A + w2 B2)
        let w1 = z1.scale(0.5);
        let w2 = z2.scale(0.5);
        let mut rhs = t.a().to_complex();
        for i in 0..3 {
            for j in 0..3 {
                rhs[(i, j)] += w2 * t.b2().to_complex()[(i, j)];
            }
        }
        let expect = resolvent_times(&t.b1().to_complex(), w1, &rhs, z1).unwrap();
        assert!(m0.sub(&expect).max_abs() < 1e-14);
    }

    #[test]
    fn region_s_forward_euler_disk() {
        // q=2 Radau, kappa=0, z1=0: stable iff |1 + z2| <= 1
        let t = build_propagator(2, Variant::Radau).unwrap();
        let grid = GridSpec {
            re_min: -3.0,
            re_max: 1.0,
            im_min: -2.0,
            im_max: 2.0,
            nx: 41,
            ny: 41,
        };
        let scan = region_s(c(0.0, 0.0), &t, 0, &grid, false).unwrap();
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let z2 = grid.point(ix, iy);
                let expect = (c(1.0, 0.0) + z2).norm() <= 1.0 + MASK_TOL;
                assert_eq!(scan.mask[iy * grid.nx + ix], expect, "z2={z2}");
            }
        }
        assert!(!scan.contours.is_empty());
    }

    #[test]
    fn region_disk_grows_with_real_stiffness() {
        // z1 = -6 enlarges the disk to |1 + z2| <= 7
        let t = build_propagator(2, Variant::Radau).unwrap();
        let grid = GridSpec {
            re_min: -8.0,
            re_max: 6.5,
            im_min: -7.3,
            im_max: 7.3,
            nx: 31,
            ny: 31,
        };
        let scan = region_s(c(-6.0, 0.0), &t, 0, &grid, false).unwrap();
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let z2 = grid.point(ix, iy);
                let expect = (c(1.0, 0.0) + z2).norm() / 7.0 <= 1.0 + MASK_TOL;
                assert_eq!(scan.mask[iy * grid.nx + ix], expect, "z2={z2}");
            }
        }
    }

    #[test]
    fn deep_stable_zone_fully_masked() {
        let t = build_propagator(3, Variant::Radau).unwrap();
        let grid = GridSpec {
            re_min: -0.5,
            re_max: 0.5,
            im_min: -0.5,
            im_max: 0.5,
            nx: 11,
            ny: 11,
        };
        let scan = region_s(c(-3.0, 0.0), &t, 0, &grid, false).unwrap();
        assert!(scan.mask.iter().all(|&m| m));
    }

    #[test]
    fn s_hat_equals_s_for_real_z1_and_is_subset() {
        let t = build_propagator(3, Variant::RadauStar).unwrap();
        let grid = GridSpec {
            re_min: -4.0,
            re_max: 2.0,
            im_min: -3.0,
            im_max: 3.0,
            nx: 21,
            ny: 21,
        };
        let s_real = region_s(c(-2.0, 0.0), &t, 1, &grid, false).unwrap();
        let s_hat_real = region_s_hat(c(-2.0, 0.0), &t, 1, &grid, false).unwrap();
        assert_eq!(s_real.mask, s_hat_real.mask);

        let z1 = c(-1.0, 2.0);
        let s = region_s(z1, &t, 1, &grid, false).unwrap();
        let s_hat = region_s_hat(z1, &t, 1, &grid, false).unwrap();
        for (h, p) in s_hat.mask.iter().zip(&s.mask) {
            assert!(!h || *p, "S-hat must be a subset of S");
        }
    }

    #[test]
    fn s_tilde_negative_axis_is_forward_euler_disk() {
        // theta = pi: the wedge degenerates to the negative real axis and the
        // worst case is gamma = 0
        let t = build_propagator(2, Variant::Radau).unwrap();
        let grid = GridSpec {
            re_min: -2.5,
            re_max: 0.6,
            im_min: -1.4,
            im_max: 1.4,
            nx: 21,
            ny: 21,
        };
        let gammas = [0.0, 0.5, 2.0, 10.0, 400.0];
        let scan =
            region_s_tilde(std::f64::consts::PI, &t, 0, &grid, &gammas, false).unwrap();
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let z2 = grid.point(ix, iy);
                let expect = (c(1.0, 0.0) + z2).norm() <= 1.0 + MASK_TOL;
                assert_eq!(scan.mask[iy * grid.nx + ix], expect, "z2={z2}");
            }
        }
    }

    #[test]
    fn s_tilde_subset_of_s_hat_rays() {
        let t = build_propagator(3, Variant::Radau).unwrap();
        let grid = GridSpec {
            re_min: -3.0,
            re_max: 1.5,
            im_min: -2.0,
            im_max: 2.0,
            nx: 15,
            ny: 15,
        };
        let theta = std::f64::consts::FRAC_PI_2;
        let gammas = [0.0, 1.0, 3.0];
        let tilde = region_s_tilde(theta, &t, 1, &grid, &gammas, false).unwrap();
        for &gamma in &gammas {
            let z1 = Complex64::from_polar(gamma, theta);
            let hat = region_s_hat(z1, &t, 1, &grid, false).unwrap();
            for (ti, hi) in tilde.mask.iter().zip(&hat.mask) {
                assert!(!ti || *hi, "S~ must be inside S^ at gamma={gamma}");
            }
        }
    }

    #[test]
    fn empty_grid_rejected() {
        let t = build_propagator(2, Variant::Radau).unwrap();
        let grid = GridSpec {
            re_min: -1.0,
            re_max: 1.0,
            im_min: -1.0,
            im_max: 1.0,
            nx: 1,
            ny: 0,
        };
        assert!(region_s(c(0.0, 0.0), &t, 0, &grid, false).is_err());
    }
}
