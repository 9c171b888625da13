//! Composite FIMEX time stepping: one propagator application advances the
//! block by `h = 2r`, each iterator application re-solves the current block
//! and raises its accuracy by one order (up to the collocation order).

mod implicit;
pub mod splitting;

pub use implicit::{solve_block_implicit, DiagCache};
pub use splitting::{
    FullyImplicitSplit, JacobianSplit, LinearlyImplicitFirstSplit, PartitionedOde,
    SemilinearSplit,
};

use crate::error::Error;
use crate::linalg::Scalar;
use crate::nodes::NodeSet;
use crate::tableaux::{build_propagator, MethodTableau, Variant};

/// Newton strategy for dense implicit solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NewtonMode {
    /// Jacobian rebuilt and refactored every iteration.
    Full,
    /// Jacobian frozen at the initial guess for the whole solve.
    Simplified,
}

/// Implicit-solver configuration.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Residual tolerance for the block Newton iteration.
    pub newton_tol: f64,
    pub newton_max_iters: usize,
    pub newton_mode: NewtonMode,
    /// Dispatch the independent per-node derivative evaluations across
    /// threads (requires the `parallel` feature; results are bitwise
    /// identical to serial since nodes write disjoint buffers).
    pub parallel: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            newton_tol: 1e-12,
            newton_max_iters: 50,
            newton_mode: NewtonMode::Full,
            parallel: false,
        }
    }
}

/// Method selector: variant, node count, and iterator applications per step.
#[derive(Debug, Clone, Copy)]
pub struct MethodSpec {
    pub variant: Variant,
    pub q: usize,
    pub kappa: usize,
    /// Start-up iterator applications; defaults to q-1 (Radau) / q (Radau*).
    pub kappa_start: Option<usize>,
}

impl MethodSpec {
    pub fn new(variant: Variant, q: usize, kappa: usize) -> Self {
        MethodSpec {
            variant,
            q,
            kappa,
            kappa_start: None,
        }
    }

    pub fn id(&self) -> String {
        format!("{}({},{})", self.variant, self.q, self.kappa)
    }

    /// Design order of the composite method: `min(2q-3, q-1+kappa)` for the
    /// Radau variant, `min(2q-3, q+kappa)` for Radau*.
    pub fn order(&self) -> usize {
        let collocation = 2 * self.q - 3;
        let explicit = match self.variant {
            Variant::Radau => self.q - 1 + self.kappa,
            Variant::RadauStar => self.q + self.kappa,
        };
        collocation.min(explicit)
    }

    /// Start-up iterator count: the explicit-component minimum, raised to the
    /// composite order so the first block cannot cap the global accuracy
    /// (iterators never revisit node 1, so a start defect in the last node
    /// persists through every later block).
    pub fn start_kappa(&self) -> usize {
        self.kappa_start
            .unwrap_or_else(|| self.variant.default_start_kappa(self.q).max(self.order()))
    }
}

/// Counters accumulated by a [`Stepper`].
#[derive(Debug, Clone, Copy, Default)]
pub struct BlockMeta {
    /// Propagator applications this block has been through.
    pub propagations: usize,
    /// Iterator applications (including start-up) this block has received.
    pub iterations: usize,
}

/// The q solution values of one block together with the cached
/// explicit-component derivatives at the block nodes.
///
/// Node `j` sits at `t_anchor + r * (z_j + 1)`, i.e. the nodes are translated
/// so the first one coincides with the anchor.
#[derive(Debug, Clone)]
pub struct BlockState<S> {
    pub t_anchor: f64,
    pub r: f64,
    pub y: Vec<Vec<S>>,
    pub f2_in: Vec<Vec<S>>,
    pub meta: BlockMeta,
}

impl<S: Scalar> BlockState<S> {
    pub fn q(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.y.first().map_or(0, Vec::len)
    }

    pub fn node_time(&self, nodes: &NodeSet, j: usize) -> f64 {
        self.t_anchor + self.r * (nodes.z()[j] + 1.0)
    }

    fn node_times(&self, nodes: &NodeSet) -> Vec<f64> {
        (0..nodes.q()).map(|j| self.node_time(nodes, j)).collect()
    }
}

/// Evaluate one derivative component at several nodes. Each node writes its
/// own buffer, so the parallel path returns bitwise the serial result.
fn eval_component<S: Scalar, P: PartitionedOde<S> + ?Sized>(
    problem: &P,
    first: bool,
    ts: &[f64],
    ys: &[Vec<S>],
    parallel: bool,
) -> Vec<Vec<S>> {
    let n = problem.dim();
    let eval_one = |j: usize| {
        let mut out = vec![S::zero(); n];
        if first {
            problem.eval_f1(ts[j], &ys[j], &mut out);
        } else {
            problem.eval_f2(ts[j], &ys[j], &mut out);
        }
        out
    };
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return (0..ts.len()).into_par_iter().map(eval_one).collect();
    }
    let _ = parallel;
    (0..ts.len()).map(eval_one).collect()
}

/// Reusable stepping context: holds the tableau, configuration, cached
/// implicit factorizations, and cumulative Newton statistics.
pub struct Stepper<'t, S: Scalar> {
    tableau: &'t MethodTableau,
    cfg: SolverConfig,
    diag_cache: Option<DiagCache<S>>,
    lin_cache: Option<implicit::LinearCache<S>>,
    /// Total Newton iterations across all implicit solves.
    pub newton_iters: usize,
}

impl<'t, S: Scalar> Stepper<'t, S> {
    pub fn new(tableau: &'t MethodTableau, cfg: SolverConfig) -> Self {
        Stepper {
            tableau,
            cfg,
            diag_cache: None,
            lin_cache: None,
            newton_iters: 0,
        }
    }

    pub fn tableau(&self) -> &MethodTableau {
        self.tableau
    }

    pub fn cfg(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Drop factorizations tied to the current anchor (call after the
    /// problem's anchor state changes).
    pub fn invalidate_anchor_caches(&mut self) {
        self.lin_cache = None;
    }

    /// Zeroth-order initial block at `t0`: every node value is `y0`, then
    /// `kappa_start` iterator applications sharpen it (one order each).
    pub fn start<P: PartitionedOde<S> + ?Sized>(
        &mut self,
        problem: &P,
        y0: &[S],
        t0: f64,
        r: f64,
        kappa_start: usize,
    ) -> Result<BlockState<S>, Error> {
        let q = self.tableau.q();
        if y0.len() != problem.dim() {
            return Err(Error::InvalidInput(format!(
                "initial state length {} does not match problem dimension {}",
                y0.len(),
                problem.dim()
            )));
        }
        let mut state = BlockState {
            t_anchor: t0,
            r,
            y: vec![y0.to_vec(); q],
            f2_in: Vec::new(),
            meta: BlockMeta::default(),
        };
        let ts = state.node_times(self.tableau.nodes());
        state.f2_in = eval_component(problem, false, &ts, &state.y, self.cfg.parallel);
        for _ in 0..kappa_start {
            state = self.iterate(problem, &state)?;
        }
        Ok(state)
    }

    /// Advance the block by `h = 2r`: solve the implicit propagator system
    /// and refresh the explicit derivatives at the new nodes.
    pub fn propagate<P: PartitionedOde<S> + ?Sized>(
        &mut self,
        problem: &P,
        state: &BlockState<S>,
    ) -> Result<BlockState<S>, Error> {
        let q = self.tableau.q();
        self.check_dims(state, problem)?;
        let r = state.r;
        let b2 = self.tableau.b2();

        // rhs_i = y_q + r * sum_j B2[i][j] f2_in[j]; the first row has no
        // derivative terms so output 1 copies input q bitwise.
        let last = &state.y[q - 1];
        let rhs: Vec<Vec<S>> = (0..q)
            .map(|i| {
                let mut v = last.clone();
                for j in 0..q {
                    let w = b2[(i, j)];
                    if w != 0.0 {
                        let rw = r * w;
                        for (slot, &f) in v.iter_mut().zip(&state.f2_in[j]) {
                            *slot += f.scale(rw);
                        }
                    }
                }
                v
            })
            .collect();

        let mut next = BlockState {
            t_anchor: state.t_anchor + 2.0 * r,
            r,
            y: Vec::new(),
            f2_in: Vec::new(),
            meta: BlockMeta {
                propagations: state.meta.propagations + 1,
                iterations: state.meta.iterations,
            },
        };
        let ts = next.node_times(self.tableau.nodes());
        let guess: Vec<Vec<S>> = vec![last.clone(); q];
        let (y_new, iters) = implicit::solve_block(
            &rhs,
            self.tableau.b1(),
            r,
            problem,
            &ts,
            &guess,
            &self.cfg,
            &mut self.diag_cache,
            &mut self.lin_cache,
        )?;
        self.newton_iters += iters;
        next.f2_in = eval_component(problem, false, &ts, &y_new, self.cfg.parallel);
        next.y = y_new;
        Ok(next)
    }

    /// Re-solve the current block (anchor unchanged); output 1 equals input 1
    /// bitwise.
    pub fn iterate<P: PartitionedOde<S> + ?Sized>(
        &mut self,
        problem: &P,
        state: &BlockState<S>,
    ) -> Result<BlockState<S>, Error> {
        let q = self.tableau.q();
        self.check_dims(state, problem)?;
        let r = state.r;
        let b_it = self.tableau.b_it();

        let first = &state.y[0];
        let rhs: Vec<Vec<S>> = (0..q)
            .map(|i| {
                let mut v = first.clone();
                for j in 0..q {
                    let w = b_it[(i, j)];
                    if w != 0.0 {
                        let rw = r * w;
                        for (slot, &f) in v.iter_mut().zip(&state.f2_in[j]) {
                            *slot += f.scale(rw);
                        }
                    }
                }
                v
            })
            .collect();

        let ts = state.node_times(self.tableau.nodes());
        let (y_new, iters) = implicit::solve_block(
            &rhs,
            b_it,
            r,
            problem,
            &ts,
            &state.y,
            &self.cfg,
            &mut self.diag_cache,
            &mut self.lin_cache,
        )?;
        self.newton_iters += iters;

        // node 1 is untouched by the iterator, so its cached derivative stays
        let mut f2_new = eval_component(problem, false, &ts[1..], &y_new[1..], self.cfg.parallel);
        f2_new.insert(0, state.f2_in[0].clone());

        Ok(BlockState {
            t_anchor: state.t_anchor,
            r,
            y: y_new,
            f2_in: f2_new,
            meta: BlockMeta {
                propagations: state.meta.propagations,
                iterations: state.meta.iterations + 1,
            },
        })
    }

    /// Recompute the cached explicit derivatives at all current nodes (needed
    /// after an anchor refresh changes the splitting itself).
    pub fn refresh_f2<P: PartitionedOde<S> + ?Sized>(
        &self,
        problem: &P,
        state: &mut BlockState<S>,
    ) {
        let ts = state.node_times(self.tableau.nodes());
        state.f2_in = eval_component(problem, false, &ts, &state.y, self.cfg.parallel);
    }

    fn check_dims<P: PartitionedOde<S> + ?Sized>(
        &self,
        state: &BlockState<S>,
        problem: &P,
    ) -> Result<(), Error> {
        let q = self.tableau.q();
        if state.q() != q || state.f2_in.len() != q {
            return Err(Error::InvalidInput(format!(
                "block has {} values / {} cached derivatives, tableau needs q={q}",
                state.q(),
                state.f2_in.len()
            )));
        }
        if state.dim() != problem.dim() {
            return Err(Error::InvalidInput(format!(
                "block dimension {} does not match problem dimension {}",
                state.dim(),
                problem.dim()
            )));
        }
        Ok(())
    }
}

/// One-shot propagator application (no cache reuse across calls).
pub fn propagate<S: Scalar, P: PartitionedOde<S> + ?Sized>(
    state: &BlockState<S>,
    tableau: &MethodTableau,
    problem: &P,
    cfg: &SolverConfig,
) -> Result<BlockState<S>, Error> {
    Stepper::new(tableau, cfg.clone()).propagate(problem, state)
}

/// One-shot iterator application.
pub fn iterate<S: Scalar, P: PartitionedOde<S> + ?Sized>(
    state: &BlockState<S>,
    tableau: &MethodTableau,
    problem: &P,
    cfg: &SolverConfig,
) -> Result<BlockState<S>, Error> {
    Stepper::new(tableau, cfg.clone()).iterate(problem, state)
}

/// One-shot starting procedure.
pub fn start<S: Scalar, P: PartitionedOde<S> + ?Sized>(
    y0: &[S],
    t0: f64,
    r: f64,
    tableau: &MethodTableau,
    kappa_start: usize,
    problem: &P,
    cfg: &SolverConfig,
) -> Result<BlockState<S>, Error> {
    Stepper::new(tableau, cfg.clone()).start(problem, y0, t0, r, kappa_start)
}

/// Result of a full integration.
#[derive(Debug, Clone)]
pub struct Integration<S> {
    /// Solution at `t_end` (node q of the last block).
    pub y_end: Vec<S>,
    pub final_block: BlockState<S>,
    pub newton_iters: usize,
}

/// Integrate from `t0` to `t_end` in `n_steps` macro steps of size
/// `h = (t_end - t0) / n_steps`.
///
/// The start-up iterator builds the first block on `[t0, t0 + h]`; each of
/// the remaining `n_steps - 1` composite steps applies one propagator and
/// `kappa` iterators. Node q of the final block lands exactly on `t_end`.
/// For anchor-dependent splittings the anchor state is refreshed once per
/// macro step at `(t_n, y_q)` before the propagator and held fixed through
/// the iterators of that step.
pub fn integrate<S: Scalar, P: PartitionedOde<S> + ?Sized>(
    problem: &mut P,
    spec: &MethodSpec,
    y0: &[S],
    t0: f64,
    t_end: f64,
    n_steps: usize,
    cfg: &SolverConfig,
) -> Result<Integration<S>, Error> {
    if n_steps == 0 {
        return Err(Error::InvalidInput("n_steps must be at least 1".into()));
    }
    if !(t_end > t0) {
        return Err(Error::InvalidInput(format!(
            "t_end {t_end} must exceed t0 {t0}"
        )));
    }
    let tableau = build_propagator(spec.q, spec.variant)?;
    integrate_with_tableau(problem, &tableau, spec, y0, t0, t_end, n_steps, cfg)
}

/// [`integrate`] with a caller-supplied tableau (avoids rebuilding it across
/// runs of a convergence study).
#[allow(clippy::too_many_arguments)]
pub fn integrate_with_tableau<S: Scalar, P: PartitionedOde<S> + ?Sized>(
    problem: &mut P,
    tableau: &MethodTableau,
    spec: &MethodSpec,
    y0: &[S],
    t0: f64,
    t_end: f64,
    n_steps: usize,
    cfg: &SolverConfig,
) -> Result<Integration<S>, Error> {
    let q = tableau.q();
    let r = (t_end - t0) / (2.0 * n_steps as f64);
    let kappa_start = spec.start_kappa();

    let mut stepper = Stepper::new(tableau, cfg.clone());
    problem.refresh_anchor(t0, y0);
    stepper.invalidate_anchor_caches();
    let mut state = stepper
        .start(problem, y0, t0, r, kappa_start)
        .map_err(|e| e.with_step(0))?;

    for step in 1..n_steps {
        if problem.anchor_dependent() {
            let t_n = state.node_time(tableau.nodes(), q - 1);
            let y_n = state.y[q - 1].clone();
            problem.refresh_anchor(t_n, &y_n);
            stepper.invalidate_anchor_caches();
            stepper.refresh_f2(problem, &mut state);
        }
        state = stepper
            .propagate(problem, &state)
            .map_err(|e| e.with_step(step))?;
        for _ in 0..spec.kappa {
            state = stepper
                .iterate(problem, &state)
                .map_err(|e| e.with_step(step))?;
        }
    }

    Ok(Integration {
        y_end: state.y[q - 1].clone(),
        newton_iters: stepper.newton_iters,
        final_block: state,
    })
}
