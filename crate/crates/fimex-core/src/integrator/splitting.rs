//! The partitioned right-hand-side abstraction and the standard splitting
//! adapters.
//!
//! A `PartitionedOde` exposes `y' = f1(t,y) + f2(t,y)` with the first
//! component treated implicitly. Evaluators must be safe for concurrent
//! invocation on distinct arguments (the stepper may dispatch the per-node
//! evaluations across threads); anchor-dependent splittings mutate their
//! frozen Jacobian only through `refresh_anchor`, which the driver calls
//! between macro steps.

use crate::linalg::{Mat, Scalar};

/// Additively partitioned ODE with the first component implicit.
pub trait PartitionedOde<S: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    /// Implicit component.
    fn eval_f1(&self, t: f64, y: &[S], out: &mut [S]);

    /// Explicit component.
    fn eval_f2(&self, t: f64, y: &[S], out: &mut [S]);

    /// Jacobian of the implicit component; `None` falls back to forward
    /// finite differences inside the Newton solver.
    fn jacobian_f1(&self, _t: f64, _y: &[S]) -> Option<Mat<S>> {
        None
    }

    /// Diagonal of a diagonal-linear implicit component (`f1 = diag .* y`),
    /// solved exactly per mode with cached factors.
    fn diagonal_implicit(&self) -> Option<&[S]> {
        None
    }

    /// Dense matrix of a linear implicit component (`f1 = M y`), solved
    /// directly with one cached factorization per anchor.
    fn linear_implicit_matrix(&self) -> Option<&Mat<S>> {
        None
    }

    /// Whether the splitting itself changes at each macro-step anchor.
    fn anchor_dependent(&self) -> bool {
        false
    }

    /// Refresh anchor-dependent state (the frozen Jacobian) at `(t, y)`.
    fn refresh_anchor(&mut self, _t: f64, _y: &[S]) {}
}

impl<S: Scalar, T: PartitionedOde<S> + ?Sized> PartitionedOde<S> for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval_f1(&self, t: f64, y: &[S], out: &mut [S]) {
        (**self).eval_f1(t, y, out)
    }
    fn eval_f2(&self, t: f64, y: &[S], out: &mut [S]) {
        (**self).eval_f2(t, y, out)
    }
    fn jacobian_f1(&self, t: f64, y: &[S]) -> Option<Mat<S>> {
        (**self).jacobian_f1(t, y)
    }
    fn diagonal_implicit(&self) -> Option<&[S]> {
        (**self).diagonal_implicit()
    }
    fn linear_implicit_matrix(&self) -> Option<&Mat<S>> {
        (**self).linear_implicit_matrix()
    }
    fn anchor_dependent(&self) -> bool {
        (**self).anchor_dependent()
    }
    fn refresh_anchor(&mut self, t: f64, y: &[S]) {
        (**self).refresh_anchor(t, y)
    }
}

/// Component evaluator `(t, y, out)`.
pub type RhsFn<S> = Box<dyn Fn(f64, &[S], &mut [S]) + Send + Sync>;
/// Jacobian evaluator `(t, y) -> matrix`.
pub type JacFn<S> = Box<dyn Fn(f64, &[S]) -> Mat<S> + Send + Sync>;

/// Semilinear splitting `y' = L y + N(t, y)` with diagonal `L`: the linear
/// operator is implicit, the nonlinearity explicit.
pub struct SemilinearSplit<S: Scalar> {
    l_diag: Vec<S>,
    nonlinear: RhsFn<S>,
}

impl<S: Scalar> SemilinearSplit<S> {
    pub fn new(l_diag: Vec<S>, nonlinear: RhsFn<S>) -> Self {
        SemilinearSplit { l_diag, nonlinear }
    }
}

impl<S: Scalar> PartitionedOde<S> for SemilinearSplit<S> {
    fn dim(&self) -> usize {
        self.l_diag.len()
    }
    fn eval_f1(&self, _t: f64, y: &[S], out: &mut [S]) {
        for ((o, &l), &v) in out.iter_mut().zip(&self.l_diag).zip(y) {
            *o = l * v;
        }
    }
    fn eval_f2(&self, t: f64, y: &[S], out: &mut [S]) {
        (self.nonlinear)(t, y, out);
    }
    fn diagonal_implicit(&self) -> Option<&[S]> {
        Some(&self.l_diag)
    }
}

/// Fully implicit splitting of `y' = A(t,y) + B(t,y)`: `f1 = A`, `f2 = B`.
pub struct FullyImplicitSplit<S: Scalar> {
    dim: usize,
    a: RhsFn<S>,
    b: RhsFn<S>,
    jac_a: Option<JacFn<S>>,
}

impl<S: Scalar> FullyImplicitSplit<S> {
    pub fn new(dim: usize, a: RhsFn<S>, b: RhsFn<S>, jac_a: Option<JacFn<S>>) -> Self {
        FullyImplicitSplit { dim, a, b, jac_a }
    }
}

impl<S: Scalar> PartitionedOde<S> for FullyImplicitSplit<S> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_f1(&self, t: f64, y: &[S], out: &mut [S]) {
        (self.a)(t, y, out);
    }
    fn eval_f2(&self, t: f64, y: &[S], out: &mut [S]) {
        (self.b)(t, y, out);
    }
    fn jacobian_f1(&self, t: f64, y: &[S]) -> Option<Mat<S>> {
        self.jac_a.as_ref().map(|j| j(t, y))
    }
}

/// Linearly implicit in the first component of `y' = A(t,y) + B(t,y)`:
/// `f1 = dA/dy(t_n, y_n) y`, `f2 = A + B - f1`, with the Jacobian frozen at
/// the step anchor.
pub struct LinearlyImplicitFirstSplit<S: Scalar> {
    dim: usize,
    a: RhsFn<S>,
    b: RhsFn<S>,
    jac_a: JacFn<S>,
    j_n: Mat<S>,
}

impl<S: Scalar> LinearlyImplicitFirstSplit<S> {
    pub fn new(dim: usize, a: RhsFn<S>, b: RhsFn<S>, jac_a: JacFn<S>) -> Self {
        LinearlyImplicitFirstSplit {
            dim,
            a,
            b,
            jac_a,
            j_n: Mat::zeros(dim, dim),
        }
    }

    pub fn frozen_jacobian(&self) -> &Mat<S> {
        &self.j_n
    }
}

impl<S: Scalar> PartitionedOde<S> for LinearlyImplicitFirstSplit<S> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_f1(&self, _t: f64, y: &[S], out: &mut [S]) {
        out.copy_from_slice(&self.j_n.matvec(y));
    }
    fn eval_f2(&self, t: f64, y: &[S], out: &mut [S]) {
        let mut b = vec![S::zero(); self.dim];
        (self.a)(t, y, out);
        (self.b)(t, y, &mut b);
        let jy = self.j_n.matvec(y);
        for ((o, &bv), &jv) in out.iter_mut().zip(&b).zip(&jy) {
            *o = *o + bv - jv;
        }
    }
    fn linear_implicit_matrix(&self) -> Option<&Mat<S>> {
        Some(&self.j_n)
    }
    fn anchor_dependent(&self) -> bool {
        true
    }
    fn refresh_anchor(&mut self, t: f64, y: &[S]) {
        self.j_n = (self.jac_a)(t, y);
    }
}

/// Linearly implicit in an (approximate) full Jacobian: `f1 = J_n y`,
/// `f2 = f(t,y) - J_n y`.
pub struct JacobianSplit<S: Scalar> {
    dim: usize,
    full: RhsFn<S>,
    full_jac: JacFn<S>,
    j_n: Mat<S>,
}

impl<S: Scalar> JacobianSplit<S> {
    pub fn new(dim: usize, full: RhsFn<S>, full_jac: JacFn<S>) -> Self {
        JacobianSplit {
            dim,
            full,
            full_jac,
            j_n: Mat::zeros(dim, dim),
        }
    }

    pub fn frozen_jacobian(&self) -> &Mat<S> {
        &self.j_n
    }
}

impl<S: Scalar> PartitionedOde<S> for JacobianSplit<S> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_f1(&self, _t: f64, y: &[S], out: &mut [S]) {
        out.copy_from_slice(&self.j_n.matvec(y));
    }
    fn eval_f2(&self, t: f64, y: &[S], out: &mut [S]) {
        (self.full)(t, y, out);
        let jy = self.j_n.matvec(y);
        for (o, &jv) in out.iter_mut().zip(&jy) {
            *o -= jv;
        }
    }
    fn linear_implicit_matrix(&self) -> Option<&Mat<S>> {
        Some(&self.j_n)
    }
    fn anchor_dependent(&self) -> bool {
        true
    }
    fn refresh_anchor(&mut self, t: f64, y: &[S]) {
        self.j_n = (self.full_jac)(t, y);
    }
}
