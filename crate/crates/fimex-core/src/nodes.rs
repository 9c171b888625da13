//! Block node sets and generic polynomial quadrature weights.
//!
//! The node set for a q-value block is `{-1}` together with the q-1
//! right-Radau quadrature points on `[-1, 1]`. The latter are the zeros of
//! `d^(q-2)/dx^(q-2) [ x^(q-2) (x-1)^(q-1) ]` on `(0, 1]`, mapped through
//! `z = 2x - 1`. Tabulated values anchor q <= 8 and a polished Newton
//! iteration on the exactly expanded polynomial is the authoritative result;
//! q = 9 is root-found from scratch.

use crate::error::Error;
use crate::linalg::{Lu, RMat};

/// Maximum supported node count (Vandermonde conditioning bound).
pub const MAX_Q: usize = 9;

/// The PBM node set for a given `q`: strictly increasing, `z[0] = -1`,
/// `z[q-1] = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    q: usize,
    z: Vec<f64>,
}

impl NodeSet {
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }
}

/// Interior + right-endpoint nodes for q = 2..=8 (z-coordinates on [-1,1],
/// excluding the leading -1).
const NODE_TABLE: [&[f64]; 7] = [
    &[1.0],
    &[-0.333333333333333, 1.0],
    &[-0.689897948556636, 0.289897948556636, 1.0],
    &[-0.822824080974592, -0.181066271118531, 0.575318923521694, 1.0],
    &[
        -0.885791607770965,
        -0.446313972723752,
        0.167180864737834,
        0.720480271312439,
        1.0,
    ],
    &[
        -0.920380285897062,
        -0.603973164252784,
        -0.124050379505228,
        0.390928546707272,
        0.802929828402347,
        1.0,
    ],
    &[
        -0.941367145680430,
        -0.703842800663031,
        -0.326030619437691,
        0.117343037543100,
        0.538467724060109,
        0.853891342639482,
        1.0,
    ],
];

/// Coefficients (ascending powers, exact integers) of
/// `d^(q-2)/dx^(q-2) [ x^(q-2) (x-1)^(q-1) ]`.
fn defining_poly(q: usize) -> Vec<i64> {
    // x^(q-2) (x-1)^(q-1) expanded in the monomial basis
    let mut coeffs = vec![0i64; 2 * q - 2];
    let n = q - 1;
    let mut c = vec![0i64; n + 1]; // binomial row for (x-1)^n
    c[0] = 1;
    for row in 1..=n {
        for col in (1..=row).rev() {
            c[col] += c[col - 1];
        }
    }
    for (k, &ck) in c.iter().enumerate() {
        let sign = if (n - k) % 2 == 0 { 1 } else { -1 };
        coeffs[q - 2 + k] = sign * ck;
    }
    // differentiate q-2 times
    for _ in 0..q.saturating_sub(2) {
        let mut d = vec![0i64; coeffs.len().saturating_sub(1).max(1)];
        for (p, slot) in d.iter_mut().enumerate() {
            *slot = coeffs.get(p + 1).copied().unwrap_or(0) * (p as i64 + 1);
        }
        coeffs = d;
    }
    while coeffs.len() > 1 && *coeffs.last().unwrap() == 0 {
        coeffs.pop();
    }
    coeffs
}

fn poly_eval(coeffs: &[i64], x: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * x + c as f64;
    }
    acc
}

fn poly_derivative(coeffs: &[i64]) -> Vec<i64> {
    if coeffs.len() <= 1 {
        return vec![0];
    }
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(p, &c)| c * p as i64)
        .collect()
}

/// Newton iteration on the defining polynomial, seeded at `x0`. Deterministic:
/// fixed iteration cap and a purely value-based stopping rule.
fn newton_polish(coeffs: &[i64], dcoeffs: &[i64], x0: f64) -> f64 {
    let mut x = x0;
    for _ in 0..60 {
        let f = poly_eval(coeffs, x);
        let df = poly_eval(dcoeffs, x);
        if df == 0.0 {
            break;
        }
        let dx = f / df;
        let next = x - dx;
        if dx.abs() <= 1e-16 * x.abs().max(1.0) || next == x {
            x = next;
            break;
        }
        x = next;
    }
    x
}

/// Compute the PBM node set for `q` in `2..=9`.
///
/// Accuracy: interior nodes agree with the tabulated right-Radau points to
/// better than 1e-13 and satisfy the defining polynomial to roundoff.
pub fn radau_nodes(q: usize) -> Result<NodeSet, Error> {
    if !(2..=MAX_Q).contains(&q) {
        return Err(Error::UnsupportedOrder { q });
    }
    let coeffs = defining_poly(q);
    let dcoeffs = poly_derivative(&coeffs);

    let interior: Vec<f64> = if q <= 8 {
        // seed from the table, polish in the unmapped variable x = (z+1)/2
        NODE_TABLE[q - 2][..q - 2]
            .iter()
            .map(|&z| newton_polish(&coeffs, &dcoeffs, (z + 1.0) / 2.0))
            .collect()
    } else {
        interior_roots_from_scratch(&coeffs, &dcoeffs, q)?
    };

    let mut z = Vec::with_capacity(q);
    z.push(-1.0);
    for &x in &interior {
        z.push(2.0 * x - 1.0);
    }
    z.push(1.0);

    for w in z.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::InvalidInput(format!(
                "node computation produced non-increasing nodes for q={q}: {z:?}"
            )));
        }
    }
    Ok(NodeSet { q, z })
}

/// Bracketed search for the q-2 interior zeros on (0, 1): sample the defining
/// polynomial on a Chebyshev-clustered grid, bisect each sign change, then
/// polish with Newton.
fn interior_roots_from_scratch(
    coeffs: &[i64],
    dcoeffs: &[i64],
    q: usize,
) -> Result<Vec<f64>, Error> {
    const GRID: usize = 4096;
    let sample = |i: usize| -> f64 {
        let theta = std::f64::consts::PI * i as f64 / GRID as f64;
        (1.0 - theta.cos()) / 2.0
    };
    let mut roots = Vec::new();
    let mut prev_x = sample(0);
    let mut prev_f = poly_eval(coeffs, prev_x);
    for i in 1..GRID {
        let x = sample(i);
        let f = poly_eval(coeffs, x);
        if prev_f == 0.0 {
            roots.push(prev_x);
        } else if prev_f.signum() != f.signum() && f != 0.0 {
            let (mut lo, mut hi) = (prev_x, x);
            let mut flo = prev_f;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let fm = poly_eval(coeffs, mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push(newton_polish(coeffs, dcoeffs, 0.5 * (lo + hi)));
        }
        prev_x = x;
        prev_f = f;
    }
    // the grid ends just before x = 1, where the remaining (non-interior) root sits
    if roots.len() != q - 2 {
        return Err(Error::InvalidInput(format!(
            "expected {} interior nodes for q={q}, found {}",
            q - 2,
            roots.len()
        )));
    }
    Ok(roots)
}

/// Integrals of the Lagrange basis on `interp_nodes` over `[a, b[i]]`:
/// returns `W` with `W[i][j] = \int_a^{b_i} l_j(s) ds`. Exact for polynomial
/// integrands up to degree `interp_nodes.len() - 1`.
///
/// Solves the transposed Vandermonde system with partial-pivot LU, moments
/// accumulated in ascending power. `a == b[i]` is legal and yields a zero row.
pub fn quad_weights(interp_nodes: &[f64], a: f64, b: &[f64]) -> Result<RMat, Error> {
    let n = interp_nodes.len();
    if n == 0 {
        return Err(Error::DegenerateInterpolation("empty node list".into()));
    }
    if n > MAX_Q {
        return Err(Error::DegenerateInterpolation(format!(
            "{n} interpolation nodes exceed the supported maximum of {MAX_Q}"
        )));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if interp_nodes[i] == interp_nodes[j] {
                return Err(Error::DegenerateInterpolation(format!(
                    "nodes {i} and {j} coincide at {}",
                    interp_nodes[i]
                )));
            }
        }
    }
    // transposed Vandermonde: row p holds x_j^p
    let mut v = RMat::zeros(n, n);
    for (j, &x) in interp_nodes.iter().enumerate() {
        let mut pow = 1.0;
        for p in 0..n {
            v[(p, j)] = pow;
            pow *= x;
        }
    }
    let lu = Lu::factor(v).map_err(|_| {
        Error::DegenerateInterpolation("singular Vandermonde system".into())
    })?;

    let mut w = RMat::zeros(b.len(), n);
    for (i, &bi) in b.iter().enumerate() {
        // moments \int_a^{b_i} s^p ds, ascending powers
        let mut m = vec![0.0f64; n];
        let mut pow_b = bi;
        let mut pow_a = a;
        for (p, slot) in m.iter_mut().enumerate() {
            *slot = (pow_b - pow_a) / (p as f64 + 1.0);
            pow_b *= bi;
            pow_a *= a;
        }
        lu.solve_in_place(&mut m);
        for j in 0..n {
            w[(i, j)] = m[j];
        }
    }
    Ok(w)
}
