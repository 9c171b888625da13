//! Coefficient matrices for FIMEX-Radau / FIMEX-Radau* propagators and the
//! shared iterator, plus the general-linear-method embedding and text export.
//!
//! Propagator: `y^[n+1] = A y^[n] + r B1 f1^[n+1] + r B2 f2^[n]` where `A`
//! copies the last input, `B1` integrates the Lagrange basis on the output
//! Radau nodes, and `B2` integrates the basis on the input nodes (all inputs
//! for the * variant, Radau nodes only otherwise). Iterator:
//! `y^[n+1] = A~ y^[n] + r B_it (f1^[n+1] + f2^[n])` with `B_it = B1`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::Error;
use crate::linalg::{Lu, Mat, RMat};
use crate::nodes::{quad_weights, radau_nodes, NodeSet};

/// Explicit-polynomial flavor of the propagator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Variant {
    /// Explicit interpolation on the q-1 input Radau nodes (order q-1).
    Radau,
    /// Explicit interpolation on all q input nodes (order q).
    RadauStar,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Radau => "radau",
            Variant::RadauStar => "radau-star",
        }
    }

    /// Default number of start-up iterator applications: matches the order of
    /// the explicit component (q-1 for Radau, q for Radau*).
    pub fn default_start_kappa(&self, q: usize) -> usize {
        match self {
            Variant::Radau => q - 1,
            Variant::RadauStar => q,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "radau" => Ok(Variant::Radau),
            "radau-star" | "radau*" => Ok(Variant::RadauStar),
            other => Err(Error::InvalidInput(format!(
                "unknown variant '{other}' (expected 'radau' or 'radau-star')"
            ))),
        }
    }
}

/// Complete coefficient set for one (q, variant) pair.
///
/// Matrices are stored dense with the structural zero rows/columns
/// materialized; the structure is asserted at construction, not exploited
/// here.
#[derive(Debug, Clone)]
pub struct MethodTableau {
    q: usize,
    variant: Variant,
    nodes: NodeSet,
    a: RMat,
    b1: RMat,
    b2: RMat,
    a_tilde: RMat,
    b_it: RMat,
}

impl MethodTableau {
    pub fn q(&self) -> usize {
        self.q
    }
    pub fn variant(&self) -> Variant {
        self.variant
    }
    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }
    /// Input map of the propagator (copies the last input to every output).
    pub fn a(&self) -> &RMat {
        &self.a
    }
    /// Implicit weights, applied to first-component derivatives at the
    /// output nodes.
    pub fn b1(&self) -> &RMat {
        &self.b1
    }
    /// Explicit weights, applied to second-component derivatives at the
    /// input nodes.
    pub fn b2(&self) -> &RMat {
        &self.b2
    }
    /// Input map of the iterator (copies the first input to every output).
    pub fn a_tilde(&self) -> &RMat {
        &self.a_tilde
    }
    /// Iterator weights (identical to `b1`), applied to both component
    /// derivative sets.
    pub fn b_it(&self) -> &RMat {
        &self.b_it
    }
}

/// Build the propagator (and embedded iterator) coefficients for `q` in
/// `2..=9`.
pub fn build_propagator(q: usize, variant: Variant) -> Result<MethodTableau, Error> {
    let nodes = radau_nodes(q)?;
    let z = nodes.z();

    // Implicit weights: the integral over [1, z_i + 2] of the basis on the
    // shifted output nodes equals the integral over [-1, z_i] of the basis on
    // the unshifted nodes, so one quadrature call serves propagator and
    // iterator alike.
    let w_impl = quad_weights(&z[1..], -1.0, z)?;
    let mut b1 = RMat::zeros(q, q);
    for i in 0..q {
        for j in 0..q - 1 {
            b1[(i, j + 1)] = w_impl[(i, j)];
        }
    }

    let upper: Vec<f64> = z.iter().map(|&t| t + 2.0).collect();
    let b2 = match variant {
        Variant::Radau => {
            let w = quad_weights(&z[1..], 1.0, &upper)?;
            let mut m = RMat::zeros(q, q);
            for i in 0..q {
                for j in 0..q - 1 {
                    m[(i, j + 1)] = w[(i, j)];
                }
            }
            m
        }
        Variant::RadauStar => quad_weights(z, 1.0, &upper)?,
    };

    let mut a = RMat::zeros(q, q);
    let mut a_tilde = RMat::zeros(q, q);
    for i in 0..q {
        a[(i, q - 1)] = 1.0;
        a_tilde[(i, 0)] = 1.0;
    }
    let b_it = b1.clone();

    for j in 0..q {
        assert_eq!(b1[(0, j)], 0.0, "B1 first row must vanish");
        assert_eq!(b2[(0, j)], 0.0, "B2 first row must vanish");
    }
    for i in 0..q {
        assert_eq!(b1[(i, 0)], 0.0, "B1 first column must vanish");
    }

    Ok(MethodTableau {
        q,
        variant,
        nodes,
        a,
        b1,
        b2,
        a_tilde,
        b_it,
    })
}

/// Iterator coefficients alone: the input map `A~` and weights `B_it`.
pub fn build_iterator(q: usize) -> Result<(RMat, RMat), Error> {
    let t = build_propagator(q, Variant::Radau)?;
    Ok((t.a_tilde, t.b_it))
}

/// The method recast as an implicit-explicit general linear method on the
/// augmented state `(y, r f1, r f2)`: `3q` inputs, `q` stages.
#[derive(Debug, Clone)]
pub struct GlmEmbedding {
    /// Stage input map, `q x 3q`: `[A | 0 | B2]` (this family has no
    /// input-derivative coupling for the implicit component).
    pub u: RMat,
    /// Output input map, `3q x 3q`; its top block row equals `u`.
    pub v: RMat,
    /// Implicit stage coupling (`B1`).
    pub a1: RMat,
    /// Explicit stage coupling (zero for this family).
    pub a2: RMat,
    /// Implicit stage-to-output weights: `[B1; I; 0]`.
    pub bg1: RMat,
    /// Explicit stage-to-output weights: `[0; 0; I]`.
    pub bg2: RMat,
}

impl MethodTableau {
    pub fn to_glm(&self) -> GlmEmbedding {
        let q = self.q;
        let mut u = RMat::zeros(q, 3 * q);
        for i in 0..q {
            for j in 0..q {
                u[(i, j)] = self.a[(i, j)];
                u[(i, 2 * q + j)] = self.b2[(i, j)];
            }
        }
        let mut v = RMat::zeros(3 * q, 3 * q);
        for i in 0..q {
            for j in 0..3 * q {
                v[(i, j)] = u[(i, j)];
            }
        }
        let mut bg1 = RMat::zeros(3 * q, q);
        let mut bg2 = RMat::zeros(3 * q, q);
        for i in 0..q {
            for j in 0..q {
                bg1[(i, j)] = self.b1[(i, j)];
            }
            bg1[(q + i, i)] = 1.0;
            bg2[(2 * q + i, i)] = 1.0;
        }
        GlmEmbedding {
            u,
            v,
            a1: self.b1.clone(),
            a2: RMat::zeros(q, q),
            bg1,
            bg2,
        }
    }
}

impl GlmEmbedding {
    /// Number of block values `q` (the embedding has `3q` inputs).
    pub fn q(&self) -> usize {
        self.a1.rows()
    }

    /// One GLM step on the partitioned Dahlquist pair. The augmented state
    /// `w` stacks `(y, r f1, r f2)` (length `3q`); returns the next state.
    pub fn step_dahlquist(
        &self,
        w: &[Complex64],
        lambda1: Complex64,
        lambda2: Complex64,
        r: f64,
    ) -> Result<Vec<Complex64>, Error> {
        let q = self.q();
        if w.len() != 3 * q {
            return Err(Error::InvalidInput(format!(
                "augmented state length {} does not match 3q = {}",
                w.len(),
                3 * q
            )));
        }
        let uw = self.u.map(Complex64::from).matvec(w);
        // stages: (I - r l1 A1 - r l2 A2) Y = U w
        let mut m = Mat::<Complex64>::identity(q);
        for i in 0..q {
            for j in 0..q {
                m[(i, j)] -= Complex64::from(self.a1[(i, j)]).scale(r) * lambda1
                    + Complex64::from(self.a2[(i, j)]).scale(r) * lambda2;
            }
        }
        let stages = Lu::factor(m)?.solve(&uw);
        let mut next = self.v.map(Complex64::from).matvec(w);
        for i in 0..3 * q {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..q {
                acc += (Complex64::from(self.bg1[(i, j)]) * lambda1
                    + Complex64::from(self.bg2[(i, j)]) * lambda2)
                    * stages[j];
            }
            next[i] += acc.scale(r);
        }
        Ok(next)
    }
}

/// Output format for [`export_coeffs`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serialize all coefficient matrices at 17 significant digits. The output
/// round-trips losslessly through [`import_coeffs`].
pub fn export_coeffs(t: &MethodTableau, format: ExportFormat) -> String {
    match format {
        ExportFormat::Csv => {
            let mut out = String::new();
            out.push_str(&format!("q,{}\n", t.q));
            out.push_str(&format!("variant,{}\n", t.variant));
            out.push_str("field,i,j,value\n");
            for (j, &zj) in t.nodes.z().iter().enumerate() {
                out.push_str(&format!("z,0,{j},{}\n", fmt_f(zj)));
            }
            for (name, m) in [
                ("a", &t.a),
                ("b1", &t.b1),
                ("b2", &t.b2),
                ("a_tilde", &t.a_tilde),
                ("b_it", &t.b_it),
            ] {
                for i in 0..m.rows() {
                    for j in 0..m.cols() {
                        out.push_str(&format!("{name},{i},{j},{}\n", fmt_f(m[(i, j)])));
                    }
                }
            }
            out
        }
        ExportFormat::Json => {
            let emit_vec = |v: &[f64]| {
                let items: Vec<String> = v.iter().map(|&x| fmt_f(x)).collect();
                format!("[{}]", items.join(","))
            };
            let emit_mat = |m: &RMat| {
                let rows: Vec<String> = (0..m.rows()).map(|i| emit_vec(m.row(i))).collect();
                format!("[{}]", rows.join(","))
            };
            format!(
                concat!(
                    "{{\n",
                    "  \"q\": {},\n",
                    "  \"variant\": \"{}\",\n",
                    "  \"z\": {},\n",
                    "  \"a\": {},\n",
                    "  \"b1\": {},\n",
                    "  \"b2\": {},\n",
                    "  \"a_tilde\": {},\n",
                    "  \"b_it\": {}\n",
                    "}}\n"
                ),
                t.q,
                t.variant,
                emit_vec(t.nodes.z()),
                emit_mat(&t.a),
                emit_mat(&t.b1),
                emit_mat(&t.b2),
                emit_mat(&t.a_tilde),
                emit_mat(&t.b_it),
            )
        }
    }
}

/// Coefficients parsed back from an export; field-for-field mirror of
/// [`MethodTableau`] without the validated node set.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCoeffs {
    pub q: usize,
    pub variant: Variant,
    pub z: Vec<f64>,
    pub a: RMat,
    pub b1: RMat,
    pub b2: RMat,
    pub a_tilde: RMat,
    pub b_it: RMat,
}

/// Parse the output of [`export_coeffs`].
pub fn import_coeffs(text: &str, format: ExportFormat) -> Result<ParsedCoeffs, Error> {
    match format {
        ExportFormat::Csv => import_csv(text),
        ExportFormat::Json => import_json(text),
    }
}

fn import_csv(text: &str) -> Result<ParsedCoeffs, Error> {
    let mut lines = text.lines();
    let q: usize = parse_kv(lines.next(), "q")?
        .parse()
        .map_err(|e| Error::Parse(format!("bad q: {e}")))?;
    let variant: Variant = parse_kv(lines.next(), "variant")?.parse()?;
    let header = lines.next().unwrap_or_default();
    if header != "field,i,j,value" {
        return Err(Error::Parse(format!("unexpected header '{header}'")));
    }
    let mut z = vec![0.0; q];
    let mut mats: std::collections::HashMap<&str, RMat> = ["a", "b1", "b2", "a_tilde", "b_it"]
        .into_iter()
        .map(|n| (n, RMat::zeros(q, q)))
        .collect();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.splitn(4, ',').collect();
        if parts.len() != 4 {
            return Err(Error::Parse(format!("malformed row '{line}'")));
        }
        let i: usize = parts[1].parse().map_err(|_| Error::Parse(line.into()))?;
        let j: usize = parts[2].parse().map_err(|_| Error::Parse(line.into()))?;
        let v: f64 = parts[3].parse().map_err(|_| Error::Parse(line.into()))?;
        if parts[0] == "z" {
            z[j] = v;
        } else if let Some(m) = mats.get_mut(parts[0]) {
            m[(i, j)] = v;
        } else {
            return Err(Error::Parse(format!("unknown field '{}'", parts[0])));
        }
    }
    Ok(ParsedCoeffs {
        q,
        variant,
        z,
        a: mats.remove("a").unwrap(),
        b1: mats.remove("b1").unwrap(),
        b2: mats.remove("b2").unwrap(),
        a_tilde: mats.remove("a_tilde").unwrap(),
        b_it: mats.remove("b_it").unwrap(),
    })
}

fn parse_kv<'a>(line: Option<&'a str>, key: &str) -> Result<&'a str, Error> {
    let line = line.ok_or_else(|| Error::Parse(format!("missing '{key}' line")))?;
    line.strip_prefix(&format!("{key},"))
        .ok_or_else(|| Error::Parse(format!("expected '{key},...', got '{line}'")))
}

fn import_json(text: &str) -> Result<ParsedCoeffs, Error> {
    let v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let q = v["q"]
        .as_u64()
        .ok_or_else(|| Error::Parse("missing q".into()))? as usize;
    let variant: Variant = v["variant"]
        .as_str()
        .ok_or_else(|| Error::Parse("missing variant".into()))?
        .parse()?;
    let vec_of = |key: &str| -> Result<Vec<f64>, Error> {
        v[key]
            .as_array()
            .ok_or_else(|| Error::Parse(format!("missing {key}")))?
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| Error::Parse(format!("bad number in {key}"))))
            .collect()
    };
    let mat_of = |key: &str| -> Result<RMat, Error> {
        let rows = v[key]
            .as_array()
            .ok_or_else(|| Error::Parse(format!("missing {key}")))?;
        let mut data = Vec::new();
        for row in rows {
            let row = row
                .as_array()
                .ok_or_else(|| Error::Parse(format!("bad row in {key}")))?;
            let mut out = Vec::new();
            for x in row {
                out.push(
                    x.as_f64()
                        .ok_or_else(|| Error::Parse(format!("bad number in {key}")))?,
                );
            }
            data.push(out);
        }
        Ok(RMat::from_rows(&data))
    };
    Ok(ParsedCoeffs {
        q,
        variant,
        z: vec_of("z")?,
        a: mat_of("a")?,
        b1: mat_of("b1")?,
        b2: mat_of("b2")?,
        a_tilde: mat_of("a_tilde")?,
        b_it: mat_of("b_it")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn q3_radau_matches_paper_tables() {
        let t = build_propagator(3, Variant::Radau).unwrap();
        let b1_expect = [[0.0, 0.0, 0.0], [0.0, 5.0 / 6.0, -1.0 / 6.0], [0.0, 1.5, 0.5]];
        let b2_expect = [[0.0, 0.0, 0.0], [0.0, -1.0 / 6.0, 5.0 / 6.0], [0.0, -1.5, 3.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!(close(t.b1()[(i, j)], b1_expect[i][j], 1e-13));
                assert!(close(t.b2()[(i, j)], b2_expect[i][j], 1e-13));
            }
        }
    }

    #[test]
    fn q3_radau_star_matches_paper_tables() {
        let t = build_propagator(3, Variant::RadauStar).unwrap();
        let b2_expect = [
            [0.0, 0.0, 0.0],
            [8.0 / 27.0, -11.0 / 18.0, 53.0 / 54.0],
            [4.0, -7.5, 5.5],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    close(t.b2()[(i, j)], b2_expect[i][j], 1e-13),
                    "({i},{j}): {} vs {}",
                    t.b2()[(i, j)],
                    b2_expect[i][j]
                );
            }
        }
    }

    #[test]
    fn q2_tables() {
        let t = build_propagator(2, Variant::Radau).unwrap();
        assert!(close(t.b1()[(1, 1)], 2.0, 1e-14));
        assert!(close(t.b2()[(1, 1)], 2.0, 1e-14));
        let ts = build_propagator(2, Variant::RadauStar).unwrap();
        assert!(close(ts.b2()[(1, 0)], -1.0, 1e-14));
        assert!(close(ts.b2()[(1, 1)], 3.0, 1e-14));
    }

    #[test]
    fn iterator_weights_equal_b1_bitwise() {
        for q in 2..=9 {
            let t = build_propagator(q, Variant::RadauStar).unwrap();
            for i in 0..q {
                for j in 0..q {
                    assert_eq!(t.b1()[(i, j)].to_bits(), t.b_it()[(i, j)].to_bits());
                }
            }
            let (a_tilde, b_it) = build_iterator(q).unwrap();
            for i in 0..q {
                assert_eq!(a_tilde[(i, 0)], 1.0);
                for j in 1..q {
                    assert_eq!(a_tilde[(i, j)], 0.0);
                }
                for j in 0..q {
                    assert!(close(b_it[(i, j)], t.b_it()[(i, j)], 0.0));
                }
            }
        }
    }

    #[test]
    fn q3_iterator_row_matches_paper() {
        let (_, b_it) = build_iterator(3).unwrap();
        assert!(close(b_it[(1, 1)], 5.0 / 6.0, 1e-14));
        assert!(close(b_it[(1, 2)], -1.0 / 6.0, 1e-14));
        assert!(close(b_it[(2, 1)], 1.5, 1e-14));
        assert!(close(b_it[(2, 2)], 0.5, 1e-14));
    }

    #[test]
    fn row_sums_are_node_spans() {
        for q in 2..=9 {
            for variant in [Variant::Radau, Variant::RadauStar] {
                let t = build_propagator(q, variant).unwrap();
                let z = t.nodes().z();
                for i in 1..q {
                    let span = z[i] + 1.0;
                    let s1: f64 = (0..q).map(|j| t.b1()[(i, j)]).sum();
                    let s2: f64 = (0..q).map(|j| t.b2()[(i, j)]).sum();
                    let si: f64 = (0..q).map(|j| t.b_it()[(i, j)]).sum();
                    // tolerance scales with the row magnitude: large-q star
                    // rows cancel heavily
                    let mag: f64 = (0..q).map(|j| t.b2()[(i, j)].abs()).sum::<f64>().max(1.0);
                    assert!(close(s1, span, 1e-12 * mag), "q={q} {variant} b1 row {i}");
                    assert!(close(s2, span, 1e-12 * mag), "q={q} {variant} b2 row {i}");
                    assert!(close(si, span, 1e-12 * mag), "q={q} {variant} b_it row {i}");
                }
            }
        }
    }

    #[test]
    fn quadrature_exactness_of_rows() {
        // row i of B1 applied to samples of p at the output Radau nodes must
        // integrate p over [1, z_i + 2]; analogous statements for B2/B2*/B_it.
        for q in 2..=9 {
            let star = build_propagator(q, Variant::RadauStar).unwrap();
            let plain = build_propagator(q, Variant::Radau).unwrap();
            let z = star.nodes().z();
            let poly = |t: f64, d: usize| t.powi(d as i32);
            let integral = |lo: f64, hi: f64, d: usize| {
                (hi.powi(d as i32 + 1) - lo.powi(d as i32 + 1)) / (d as f64 + 1.0)
            };
            for d in 0..q - 1 {
                for i in 0..q {
                    // implicit rows: basis on z[1..] + 2, integral over [1, z_i+2]
                    let b1_apply: f64 = (1..q)
                        .map(|j| plain.b1()[(i, j)] * poly(z[j] + 2.0, d))
                        .sum();
                    let exact = integral(1.0, z[i] + 2.0, d);
                    assert!(
                        close(b1_apply, exact, 1e-12 * exact.abs().max(1.0)),
                        "b1 q={q} d={d} i={i}"
                    );
                    // explicit rows (Radau): basis on input z[1..]
                    let b2_apply: f64 =
                        (1..q).map(|j| plain.b2()[(i, j)] * poly(z[j], d)).sum();
                    assert!(
                        close(b2_apply, exact, 1e-12 * exact.abs().max(1.0)),
                        "b2 q={q} d={d} i={i}"
                    );
                    // iterator rows: integral over [-1, z_i]
                    let it_apply: f64 =
                        (1..q).map(|j| plain.b_it()[(i, j)] * poly(z[j], d)).sum();
                    let exact_it = integral(-1.0, z[i], d);
                    assert!(
                        close(it_apply, exact_it, 1e-12 * exact_it.abs().max(1.0)),
                        "b_it q={q} d={d} i={i}"
                    );
                }
            }
            // star explicit rows are exact one degree higher
            for d in 0..q {
                for i in 0..q {
                    let apply: f64 = (0..q).map(|j| star.b2()[(i, j)] * poly(z[j], d)).sum();
                    let exact = integral(1.0, z[i] + 2.0, d);
                    assert!(
                        close(apply, exact, 1e-11 * exact.abs().max(1.0)),
                        "b2* q={q} d={d} i={i}: {apply} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn radau_iia_reduction_q3() {
        // with f2 = 0 the q=3 propagator is the Radau IIA two-stage update
        let t = build_propagator(3, Variant::Radau).unwrap();
        assert!(close(t.b1()[(1, 1)], 5.0 / 6.0, 1e-14));
        assert!(close(t.b1()[(1, 2)], -1.0 / 6.0, 1e-14));
        assert!(close(t.b1()[(2, 1)], 3.0 / 2.0, 1e-14));
        assert!(close(t.b1()[(2, 2)], 1.0 / 2.0, 1e-14));
        for i in 0..3 {
            assert_eq!(t.a()[(i, 2)], 1.0);
        }
    }

    #[test]
    fn glm_block_layout_q2() {
        let t = build_propagator(2, Variant::Radau).unwrap();
        let g = t.to_glm();
        assert_eq!(g.u.rows(), 2);
        assert_eq!(g.u.cols(), 6);
        // input-derivative coupling for the implicit part is empty; the
        // explicit block carries B2
        let row0: Vec<f64> = g.u.row(0).to_vec();
        let row1: Vec<f64> = g.u.row(1).to_vec();
        assert_eq!(row0, vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(row1, vec![0.0, 1.0, 0.0, 0.0, 0.0, 2.0]);
        // V top block row equals U
        for i in 0..2 {
            for j in 0..6 {
                assert_eq!(g.v[(i, j)], g.u[(i, j)]);
            }
        }
        // stage coupling is B1
        assert_eq!(g.a1[(1, 1)], t.b1()[(1, 1)]);
        assert_eq!(g.a2.max_abs(), 0.0);
    }

    #[test]
    fn export_round_trip() {
        for q in [2usize, 3, 4] {
            for variant in [Variant::Radau, Variant::RadauStar] {
                let t = build_propagator(q, variant).unwrap();
                for format in [ExportFormat::Csv, ExportFormat::Json] {
                    let text = export_coeffs(&t, format);
                    let p = import_coeffs(&text, format).unwrap();
                    assert_eq!(p.q, q);
                    assert_eq!(p.variant, variant);
                    for (x, y) in p.z.iter().zip(t.nodes().z()) {
                        assert_eq!(x.to_bits(), y.to_bits());
                    }
                    for (pm, tm) in [
                        (&p.a, t.a()),
                        (&p.b1, t.b1()),
                        (&p.b2, t.b2()),
                        (&p.a_tilde, t.a_tilde()),
                        (&p.b_it, t.b_it()),
                    ] {
                        for i in 0..q {
                            for j in 0..q {
                                assert_eq!(pm[(i, j)].to_bits(), tm[(i, j)].to_bits());
                            }
                        }
                    }
                }
            }
        }
    }
}
