//! Desk-scale test problems: partitioned Dahlquist, Van der Pol with two
//! splittings, and a pseudospectral Korteweg-de Vries discretization.

pub mod reference;

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::Error;
use crate::fft::{plan, FftPlan};
use crate::integrator::splitting::{FullyImplicitSplit, JacobianSplit, PartitionedOde};
use crate::linalg::{Mat, RMat};

/// `y' = lambda1 y + lambda2 y` with exact solution `y0 exp((l1+l2) t)`.
#[derive(Debug, Clone)]
pub struct DahlquistProblem {
    pub lambda1: Complex64,
    pub lambda2: Complex64,
    pub y0: Complex64,
    diag: [Complex64; 1],
    use_diag: bool,
}

impl DahlquistProblem {
    /// Dense-structure variant (exercises the Newton path).
    pub fn new(lambda1: Complex64, lambda2: Complex64, y0: Complex64) -> Self {
        DahlquistProblem {
            lambda1,
            lambda2,
            y0,
            diag: [lambda1],
            use_diag: false,
        }
    }

    /// Diagonal-linear variant (exercises the cached per-mode solver).
    pub fn diagonal(lambda1: Complex64, lambda2: Complex64, y0: Complex64) -> Self {
        DahlquistProblem {
            lambda1,
            lambda2,
            y0,
            diag: [lambda1],
            use_diag: true,
        }
    }

    pub fn exact(&self, t: f64) -> Complex64 {
        self.y0 * ((self.lambda1 + self.lambda2) * t).exp()
    }
}

impl PartitionedOde<Complex64> for DahlquistProblem {
    fn dim(&self) -> usize {
        1
    }
    fn eval_f1(&self, _t: f64, y: &[Complex64], out: &mut [Complex64]) {
        out[0] = self.lambda1 * y[0];
    }
    fn eval_f2(&self, _t: f64, y: &[Complex64], out: &mut [Complex64]) {
        out[0] = self.lambda2 * y[0];
    }
    fn jacobian_f1(&self, _t: f64, _y: &[Complex64]) -> Option<Mat<Complex64>> {
        let mut j = Mat::zeros(1, 1);
        j[(0, 0)] = self.lambda1;
        Some(j)
    }
    fn diagonal_implicit(&self) -> Option<&[Complex64]> {
        self.use_diag.then_some(&self.diag[..])
    }
}

/// Which splitting of the Van der Pol right-hand side to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VdpSplitting {
    /// First component explicit, second (stiff) component implicit.
    SemiImplicit,
    /// Linearly implicit in the exact Jacobian frozen at each step anchor.
    LinearlyImplicitJacobian,
}

impl std::str::FromStr for VdpSplitting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "semi-implicit" => Ok(VdpSplitting::SemiImplicit),
            "linearly-implicit" | "linearly-implicit-jacobian" => {
                Ok(VdpSplitting::LinearlyImplicitJacobian)
            }
            other => Err(Error::InvalidInput(format!(
                "unknown splitting '{other}' (expected 'semi-implicit' or 'linearly-implicit')"
            ))),
        }
    }
}

/// Initial condition on the slow manifold:
/// `(2, -2/3 + 10 eps/81 - 292 eps^2/2187 - 1814 eps^3/19683)`.
pub fn vdp_initial_condition(eps: f64) -> [f64; 2] {
    [
        2.0,
        -2.0 / 3.0 + 10.0 * eps / 81.0 - 292.0 * eps * eps / 2187.0
            - 1814.0 * eps * eps * eps / 19683.0,
    ]
}

/// Unsplit right-hand side: `y1' = y2`, `y2' = ((1 - y1^2) y2 - y1) / eps`.
pub fn vdp_full_rhs(eps: f64, y: &[f64], out: &mut [f64]) {
    out[0] = y[1];
    out[1] = ((1.0 - y[0] * y[0]) * y[1] - y[0]) / eps;
}

/// Exact Jacobian of the unsplit right-hand side.
pub fn vdp_full_jacobian(eps: f64, y: &[f64]) -> RMat {
    let mut j = RMat::zeros(2, 2);
    j[(0, 1)] = 1.0;
    j[(1, 0)] = (-2.0 * y[0] * y[1] - 1.0) / eps;
    j[(1, 1)] = (1.0 - y[0] * y[0]) / eps;
    j
}

/// Build the Van der Pol problem under the requested splitting.
pub fn vdp_rhs_components(
    splitting: VdpSplitting,
    eps: f64,
) -> Box<dyn PartitionedOde<f64>> {
    match splitting {
        VdpSplitting::SemiImplicit => {
            let stiff = move |_t: f64, y: &[f64], out: &mut [f64]| {
                out[0] = 0.0;
                out[1] = ((1.0 - y[0] * y[0]) * y[1] - y[0]) / eps;
            };
            let nonstiff = |_t: f64, y: &[f64], out: &mut [f64]| {
                out[0] = y[1];
                out[1] = 0.0;
            };
            let jac = move |_t: f64, y: &[f64]| {
                let mut j = RMat::zeros(2, 2);
                j[(1, 0)] = (-2.0 * y[0] * y[1] - 1.0) / eps;
                j[(1, 1)] = (1.0 - y[0] * y[0]) / eps;
                j
            };
            Box::new(FullyImplicitSplit::new(
                2,
                Box::new(stiff),
                Box::new(nonstiff),
                Some(Box::new(jac)),
            ))
        }
        VdpSplitting::LinearlyImplicitJacobian => {
            let full = move |_t: f64, y: &[f64], out: &mut [f64]| vdp_full_rhs(eps, y, out);
            let jac = move |_t: f64, y: &[f64]| vdp_full_jacobian(eps, y);
            Box::new(JacobianSplit::new(2, Box::new(full), Box::new(jac)))
        }
    }
}

/// Fully implicit treatment of the whole Van der Pol right-hand side
/// (`f2 = 0`); used for reference cross-checks.
pub fn vdp_fully_implicit(eps: f64) -> Box<dyn PartitionedOde<f64>> {
    let full = move |_t: f64, y: &[f64], out: &mut [f64]| vdp_full_rhs(eps, y, out);
    let zero = |_t: f64, _y: &[f64], out: &mut [f64]| out.fill(0.0);
    let jac = move |_t: f64, y: &[f64]| vdp_full_jacobian(eps, y);
    Box::new(FullyImplicitSplit::new(
        2,
        Box::new(full),
        Box::new(zero),
        Some(Box::new(jac)),
    ))
}

/// Pseudospectral KdV `u_t = -(delta u_xxx + (u^2)_x / 2)` on `x in [0, 2]`
/// with periodic boundary conditions, advanced in Fourier space.
///
/// The state vector holds the Fourier coefficients `u^_k` (coefficient
/// convention: `u(x_j) = sum_k u^_k exp(i pi k x_j)`). The linear symbol is
/// `L_k = i delta (pi k)^3`; the nonlinear term is evaluated
/// pseudospectrally and dealiased by zeroing every mode with `|k| > N/3`.
pub struct KdvSpectralProblem {
    n: usize,
    delta: f64,
    symbol: Vec<Complex64>,
    /// `-(1/2) i pi k` per mode, already masked by the dealiasing rule.
    deriv_factor: Vec<Complex64>,
    plan: Arc<FftPlan>,
}

impl KdvSpectralProblem {
    pub const DELTA: f64 = 0.022;

    pub fn new(n: usize) -> Result<Self, Error> {
        if !n.is_power_of_two() || n < 4 {
            return Err(Error::InvalidInput(format!(
                "KdV grid size must be a power of two >= 4, got {n}"
            )));
        }
        let plan = plan(n)?;
        let delta = Self::DELTA;
        let cutoff = (n / 3) as i64;
        let mut symbol = Vec::with_capacity(n);
        let mut deriv_factor = Vec::with_capacity(n);
        for idx in 0..n {
            let k = Self::wavenumber(n, idx) as f64;
            let pk = std::f64::consts::PI * k;
            symbol.push(Complex64::new(0.0, delta * pk * pk * pk));
            let masked = Self::wavenumber(n, idx).abs() <= cutoff;
            deriv_factor.push(if masked {
                Complex64::new(0.0, -0.5 * pk)
            } else {
                Complex64::new(0.0, 0.0)
            });
        }
        Ok(KdvSpectralProblem {
            n,
            delta,
            symbol,
            deriv_factor,
            plan,
        })
    }

    /// Signed wavenumber of FFT bin `idx`.
    pub fn wavenumber(n: usize, idx: usize) -> i64 {
        if idx < n / 2 {
            idx as i64
        } else {
            idx as i64 - n as i64
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn symbol(&self) -> &[Complex64] {
        &self.symbol
    }

    /// Spectrum of the initial condition `u(x, 0) = cos(pi x)`: exactly one
    /// half in each of the `k = +-1` bins.
    pub fn initial_spectrum(&self) -> Vec<Complex64> {
        let mut u = vec![Complex64::new(0.0, 0.0); self.n];
        u[1] = Complex64::new(0.5, 0.0);
        u[self.n - 1] = Complex64::new(0.5, 0.0);
        u
    }

    /// Physical-space samples of a coefficient spectrum.
    pub fn to_physical(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let mut buf = spectrum.to_vec();
        self.plan.inverse_unnormalized(&mut buf);
        buf
    }
}

impl PartitionedOde<Complex64> for KdvSpectralProblem {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval_f1(&self, _t: f64, y: &[Complex64], out: &mut [Complex64]) {
        for ((o, &l), &v) in out.iter_mut().zip(&self.symbol).zip(y) {
            *o = l * v;
        }
    }
    fn eval_f2(&self, _t: f64, y: &[Complex64], out: &mut [Complex64]) {
        // u = inverse transform, square pointwise, transform, derivative + dealias
        let mut u = y.to_vec();
        self.plan.inverse_unnormalized(&mut u);
        for v in u.iter_mut() {
            *v = *v * *v;
        }
        self.plan.forward(&mut u);
        let scale = 1.0 / self.n as f64;
        for ((o, &w), &d) in out.iter_mut().zip(&u).zip(&self.deriv_factor) {
            *o = d * w.scale(scale);
        }
    }
    fn diagonal_implicit(&self) -> Option<&[Complex64]> {
        Some(&self.symbol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dahlquist_exact_solution() {
        let p = DahlquistProblem::new(
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        );
        let e = p.exact(1.0);
        assert!((e.re - (-1.0f64).exp()).abs() < 1e-15);
        assert!(e.im.abs() < 1e-15);
    }

    #[test]
    fn vdp_semi_implicit_components_sum() {
        // at (2, -2/3), eps = 1 the full rhs is (-2/3, 0)
        let p = vdp_rhs_components(VdpSplitting::SemiImplicit, 1.0);
        let y = [2.0, -2.0 / 3.0];
        let mut f1 = [0.0; 2];
        let mut f2 = [0.0; 2];
        p.eval_f1(0.0, &y, &mut f1);
        p.eval_f2(0.0, &y, &mut f2);
        assert!((f1[0] + f2[0] - (-2.0 / 3.0)).abs() < 1e-15);
        assert!((f1[1] + f2[1]).abs() < 1e-15);
        // first row of the explicit part is always (y2, .)
        assert_eq!(f2[0], y[1]);
        assert_eq!(f2[1], 0.0);
    }

    #[test]
    fn vdp_jacobian_hand_value() {
        let j = vdp_full_jacobian(1.0, &[2.0, -2.0 / 3.0]);
        assert_eq!(j[(0, 0)], 0.0);
        assert_eq!(j[(0, 1)], 1.0);
        assert!((j[(1, 0)] - 5.0 / 3.0).abs() < 1e-15);
        assert!((j[(1, 1)] - (-3.0)).abs() < 1e-15);
    }

    #[test]
    fn vdp_jacobian_splitting_sums_to_full() {
        let mut p = vdp_rhs_components(VdpSplitting::LinearlyImplicitJacobian, 0.1);
        let anchor = vdp_initial_condition(0.1);
        p.refresh_anchor(0.0, &anchor);
        let y = [1.7, -0.4];
        let mut f1 = [0.0; 2];
        let mut f2 = [0.0; 2];
        let mut full = [0.0; 2];
        p.eval_f1(0.3, &y, &mut f1);
        p.eval_f2(0.3, &y, &mut f2);
        vdp_full_rhs(0.1, &y, &mut full);
        for i in 0..2 {
            let sum = f1[i] + f2[i];
            assert!(
                (sum - full[i]).abs() <= 1e-13 * full[i].abs().max(1.0),
                "component {i}: {sum} vs {}",
                full[i]
            );
        }
    }

    #[test]
    fn kdv_symbol_values() {
        let p = KdvSpectralProblem::new(64).unwrap();
        assert_eq!(p.symbol()[0], Complex64::new(0.0, 0.0));
        // L_1 = i delta pi^3
        let l1 = p.symbol()[1];
        assert!(l1.re.abs() < 1e-18);
        assert!((l1.im - 0.022 * std::f64::consts::PI.powi(3)).abs() < 1e-12);
        assert!((l1.im - 0.68213).abs() < 1e-4);
        // Hermitian symmetry of the symbol (the unpaired Nyquist bin aside)
        for idx in 1..64 {
            if idx == 32 {
                continue;
            }
            let conj = p.symbol()[64 - idx].conj();
            assert!((p.symbol()[idx] - conj).norm() < 1e-18);
        }
    }

    #[test]
    fn kdv_nonlinear_term_of_cosine() {
        // u = cos(pi x): u^2 = (1 + cos(2 pi x)) / 2, so the nonlinear term is
        // supported on k = +-2 with coefficient -(i pi)/4 at k = 2
        let p = KdvSpectralProblem::new(64).unwrap();
        let u = p.initial_spectrum();
        let mut out = vec![Complex64::new(0.0, 0.0); 64];
        p.eval_f2(0.0, &u, &mut out);
        for (idx, v) in out.iter().enumerate() {
            let k = KdvSpectralProblem::wavenumber(64, idx);
            match k {
                2 => {
                    let expect = Complex64::new(0.0, -std::f64::consts::PI / 4.0);
                    assert!((v - expect).norm() < 1e-14, "k=2: {v}");
                }
                -2 => {
                    let expect = Complex64::new(0.0, std::f64::consts::PI / 4.0);
                    assert!((v - expect).norm() < 1e-14, "k=-2: {v}");
                }
                _ => assert!(v.norm() < 1e-14, "k={k}: {v}"),
            }
        }
        // mode 0 identically zero: the derivative kills the mean
        assert_eq!(out[0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn kdv_dealias_mask_idempotent() {
        let p = KdvSpectralProblem::new(32).unwrap();
        // applying the mask twice equals once: masked factors are already zero
        for (idx, d) in p.deriv_factor.iter().enumerate() {
            let k = KdvSpectralProblem::wavenumber(32, idx);
            if k.abs() > (32 / 3) as i64 {
                assert_eq!(*d, Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn kdv_rejects_bad_sizes() {
        assert!(KdvSpectralProblem::new(100).is_err());
        assert!(KdvSpectralProblem::new(2).is_err());
    }

    #[test]
    fn kdv_to_physical_of_initial_data() {
        let p = KdvSpectralProblem::new(32).unwrap();
        let u = p.to_physical(&p.initial_spectrum());
        for (j, v) in u.iter().enumerate() {
            let x = 2.0 * j as f64 / 32.0;
            assert!((v.re - (std::f64::consts::PI * x).cos()).abs() < 1e-14);
            assert!(v.im.abs() < 1e-14);
        }
    }
}
