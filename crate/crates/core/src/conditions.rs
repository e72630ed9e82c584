//! Self-adjoint vertex conditions in `(P, L)` form.
//!
//! `P` is an orthogonal projector on the `2E`-dimensional space of boundary
//! values and `L` a self-adjoint map on `ker P`. An eigenfunction `F` with
//! boundary values `F_bv` and inward derivatives `F'_bv` satisfies
//!
//! ```text
//! P F_bv = 0,    (1 - P)(F'_bv + L F_bv) = 0,
//! ```
//!
//! which is the operator belonging to the form
//! `Q[F] = sum_e ||f_e'||^2 - <F_bv, L F_bv>`. With this sign a positive
//! eigenvalue `s` of `L` on a single end produces a bound state
//! `-k^2` with `k tanh(k l) = s`.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::MetricGraph;

pub type CMatrix = DMatrix<Complex64>;

const INVARIANT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Dimension { rows: usize, cols: usize, expected: usize },
    NonFinite,
    PNotHermitian,
    NotAProjector,
    LNotHermitian,
    LNotEndomorphismOfKernel,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Dimension {
                rows,
                cols,
                expected,
            } => write!(f, "matrix is {rows}x{cols}, expected {expected}x{expected}"),
            Violation::NonFinite => f.write_str("non-finite matrix entry"),
            Violation::PNotHermitian => f.write_str("P not hermitian"),
            Violation::NotAProjector => f.write_str("not a projector"),
            Violation::LNotHermitian => f.write_str("L not hermitian"),
            Violation::LNotEndomorphismOfKernel => f.write_str("L not an endomorphism of ker P"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexConditions {
    p: CMatrix,
    l: CMatrix,
}

/// Eigenvalues of `L` restricted to `ker P`, sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct LSpectrumSummary {
    pub eigenvalues: Vec<f64>,
    /// Largest eigenvalue; `None` when `ker P` is trivial.
    pub l_max: Option<f64>,
    pub count_positive: usize,
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

impl VertexConditions {
    /// Wraps explicit matrices without checking them; see [`Self::validate`].
    pub fn from_matrices_unchecked(p: CMatrix, l: CMatrix) -> Self {
        VertexConditions { p, l }
    }

    /// Builds conditions from explicit matrices and rejects invalid ones.
    pub fn from_matrices(p: CMatrix, l: CMatrix) -> Result<Self> {
        let vc = VertexConditions { p, l };
        let violations = vc.validate();
        if violations.is_empty() {
            Ok(vc)
        } else {
            Err(Error::InvalidConditions(violations))
        }
    }

    pub fn p(&self) -> &CMatrix {
        &self.p
    }

    pub fn l(&self) -> &CMatrix {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    /// All boundary values vanish.
    pub fn dirichlet(g: &MetricGraph) -> Self {
        let n = g.boundary_dim();
        VertexConditions {
            p: CMatrix::identity(n, n),
            l: CMatrix::zeros(n, n),
        }
    }

    /// All inward derivatives vanish; edges are decoupled.
    pub fn neumann(g: &MetricGraph) -> Self {
        let n = g.boundary_dim();
        VertexConditions {
            p: CMatrix::zeros(n, n),
            l: CMatrix::zeros(n, n),
        }
    }

    /// Continuity plus vanishing sum of inward derivatives at every vertex.
    pub fn kirchhoff(g: &MetricGraph) -> Self {
        Self::delta(g, &vec![0.0; g.vertex_count()]).expect("one strength per vertex")
    }

    /// δ-coupling with strength `alpha_v` at vertex `v`, i.e. the form
    /// `sum_e ||f_e'||^2 + sum_v alpha_v |f(v)|^2`. Attractive couplings have
    /// `alpha_v < 0` and give `L` the eigenvalue `-alpha_v / deg(v)`.
    pub fn delta(g: &MetricGraph, strengths: &[f64]) -> Result<Self> {
        if strengths.len() < g.vertex_count() {
            return Err(Error::MissingStrength(strengths.len()));
        }
        let n = g.boundary_dim();
        let mut p = CMatrix::identity(n, n);
        let mut l = CMatrix::zeros(n, n);
        for (v, &alpha) in strengths.iter().enumerate().take(g.vertex_count()) {
            if !alpha.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "strength at vertex {v} is not finite"
                )));
            }
            let ends = g.ends_at(v);
            let d = ends.len() as f64;
            // u u^dagger with u = (1, ..., 1) / sqrt(d) on the ends at v.
            for &i in &ends {
                for &j in &ends {
                    p[(i, j)] -= c(1.0 / d);
                    l[(i, j)] += c(-alpha / (d * d));
                }
            }
        }
        Ok(VertexConditions { p, l })
    }

    /// Lists every violated invariant; empty when the conditions are valid.
    pub fn validate(&self) -> Vec<Violation> {
        let expected = self.p.nrows();
        let mut out = Vec::new();
        for m in [&self.p, &self.l] {
            if m.nrows() != expected || m.ncols() != expected {
                out.push(Violation::Dimension {
                    rows: m.nrows(),
                    cols: m.ncols(),
                    expected,
                });
            }
        }
        if !out.is_empty() {
            return out;
        }
        if self.p.iter().chain(self.l.iter()).any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            out.push(Violation::NonFinite);
            return out;
        }
        if max_abs(&(&self.p - self.p.adjoint())) > INVARIANT_TOL {
            out.push(Violation::PNotHermitian);
        }
        if max_abs(&(&self.p * &self.p - &self.p)) > INVARIANT_TOL {
            out.push(Violation::NotAProjector);
        }
        if max_abs(&(&self.l - self.l.adjoint())) > INVARIANT_TOL {
            out.push(Violation::LNotHermitian);
        }
        if max_abs(&(&self.p * &self.l)) > INVARIANT_TOL
            || max_abs(&(&self.l * &self.p)) > INVARIANT_TOL
        {
            out.push(Violation::LNotEndomorphismOfKernel);
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConditions(v))
        }
    }

    /// True when both matrices are real.
    pub fn is_real(&self) -> bool {
        self.p.iter().chain(self.l.iter()).all(|z| z.im == 0.0)
    }

    pub fn l_spectrum(&self) -> Result<LSpectrumSummary> {
        self.ensure_valid()?;
        let n = self.dim();
        let eig = SymmetricEigen::new(self.p.clone());
        let kernel: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] < 0.5).collect();
        let mut q = CMatrix::zeros(n, kernel.len());
        for (col, &i) in kernel.iter().enumerate() {
            q.set_column(col, &eig.eigenvectors.column(i));
        }
        let mut eigenvalues: Vec<f64> = if kernel.is_empty() {
            Vec::new()
        } else {
            let restricted = q.adjoint() * &self.l * &q;
            SymmetricEigen::new(restricted).eigenvalues.iter().copied().collect()
        };
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        let scale = eigenvalues.iter().map(|x| x.abs()).fold(1.0, f64::max);
        let count_positive = eigenvalues
            .iter()
            .filter(|&&x| x > INVARIANT_TOL * scale)
            .count();
        Ok(LSpectrumSummary {
            l_max: eigenvalues.first().copied(),
            eigenvalues,
            count_positive,
        })
    }
}
