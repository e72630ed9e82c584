//! One-particle Laplacian spectra from the secular equation.
//!
//! On each edge the eigenfunction is expanded in a two-dimensional basis of
//! solutions of `-f'' = E f`, centred on the edge midpoint so that no basis
//! function grows exponentially:
//!
//! * `E = k^2 > 0`: `cos(k(x - l/2))` and `sin(k(x - l/2)) / min(1, kl/2)`,
//! * `E = -k^2 < 0`: `cosh(k(x - l/2)) / cosh(kl/2)` and
//!   `sinh(k(x - l/2)) / sinh(kl/2)`,
//!
//! and both families reduce to `1`, `(x - l/2) / (l/2)` at `k = 0`. The
//! boundary conditions become a square matrix `M` acting on the `2E`
//! coefficients,
//!
//! ```text
//! M = (P + L/d) A + (1 - P) B / d,    d = max(k, 1 / l_max),
//! ```
//!
//! with `A` the boundary values and `B` the inward derivatives of the basis.
//! Because `P` and `1 - P` have orthogonal ranges, `ker M` is exactly the
//! eigenspace. Roots are located as zeros of the smallest singular value.

use std::f64::consts::PI;

use nalgebra::{ComplexField, DMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::VertexConditions;
use crate::error::{Error, Result};
use crate::graph::MetricGraph;

/// Relative singular-value threshold for counting null directions.
pub const MULTIPLICITY_TOL: f64 = 1e-8;
/// Width of the bracket at which root refinement stops.
pub const ROOT_TOL: f64 = 1e-12;
const GRID_GUARD: f64 = 0.05;
/// Largest number of points in one root scan.
pub const MAX_GRID_POINTS: usize = 20_000_000;

/// A point on either branch of the spectral parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralPoint {
    /// `E = k^2`, `k >= 0`.
    Oscillatory(f64),
    /// `E = -k^2`, `k >= 0`.
    Decaying(f64),
}

impl SpectralPoint {
    pub fn energy(self) -> f64 {
        match self {
            SpectralPoint::Oscillatory(k) => k * k,
            SpectralPoint::Decaying(k) => -k * k,
        }
    }

    fn parameter(self) -> f64 {
        match self {
            SpectralPoint::Oscillatory(k) | SpectralPoint::Decaying(k) => k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub energy: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Eigenvalues `E < 0`, ascending.
    pub negatives: Vec<Eigenvalue>,
    /// Eigenvalues `0 <= E <= cutoff`, ascending.
    pub nonnegatives: Vec<Eigenvalue>,
    pub total_length: f64,
    pub cutoff: f64,
}

impl Spectrum {
    /// Builds a spectrum from explicit levels, e.g. a textbook spectrum or a
    /// toy model. Levels are sorted and split by sign.
    pub fn from_levels(levels: &[Eigenvalue], total_length: f64, cutoff: f64) -> Self {
        let mut sorted = levels.to_vec();
        sorted.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        let (negatives, nonnegatives) = sorted.into_iter().partition(|e| e.energy < 0.0);
        Spectrum {
            negatives,
            nonnegatives,
            total_length,
            cutoff,
        }
    }

    pub fn levels(&self) -> impl Iterator<Item = &Eigenvalue> {
        self.negatives.iter().chain(self.nonnegatives.iter())
    }

    pub fn ground(&self) -> Option<Eigenvalue> {
        self.levels().next().copied()
    }

    pub fn ground_energy(&self) -> Option<f64> {
        self.ground().map(|e| e.energy)
    }

    /// Energies repeated according to multiplicity.
    pub fn state_energies(&self) -> Vec<f64> {
        self.levels()
            .flat_map(|e| std::iter::repeat_n(e.energy, e.multiplicity))
            .collect()
    }

    pub fn negative_count(&self) -> usize {
        self.negatives.iter().map(|e| e.multiplicity).sum()
    }

    pub fn state_count(&self) -> usize {
        self.levels().map(|e| e.multiplicity).sum()
    }

    fn merged(neg: Spectrum, pos: Spectrum) -> Spectrum {
        Spectrum {
            negatives: neg.negatives,
            nonnegatives: pos.nonnegatives,
            total_length: pos.total_length,
            cutoff: pos.cutoff,
        }
    }
}

/// Boundary data of the two basis functions on one edge.
#[derive(Debug, Clone, Copy)]
struct EdgeBasis {
    /// Values of the even function at start / end.
    even_value: [f64; 2],
    odd_value: [f64; 2],
    /// Inward derivatives at start / end.
    even_slope: [f64; 2],
    odd_slope: [f64; 2],
}

impl EdgeBasis {
    fn at(point: SpectralPoint, length: f64) -> EdgeBasis {
        match point {
            SpectralPoint::Oscillatory(k) => {
                let t = 0.5 * k * length;
                let (sin_t, cos_t) = t.sin_cos();
                // sin(t) / min(1, t) and k / min(1, t)
                let (odd_end, odd_rate) = if t < 1.0 {
                    let sinc = if t == 0.0 { 1.0 } else { sin_t / t };
                    (sinc, 2.0 / length)
                } else {
                    (sin_t, k)
                };
                EdgeBasis {
                    even_value: [cos_t, cos_t],
                    odd_value: [-odd_end, odd_end],
                    even_slope: [k * sin_t, k * sin_t],
                    odd_slope: [odd_rate * cos_t, -odd_rate * cos_t],
                }
            }
            SpectralPoint::Decaying(k) => {
                let t = 0.5 * k * length;
                let tanh_t = t.tanh();
                let odd_rate = if t < 1e-8 { 2.0 / length } else { k / tanh_t };
                EdgeBasis {
                    even_value: [1.0, 1.0],
                    odd_value: [-1.0, 1.0],
                    even_slope: [-k * tanh_t, -k * tanh_t],
                    odd_slope: [odd_rate, -odd_rate],
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Coupling {
    Real {
        value_rows: DMatrix<f64>,
        slope_rows: DMatrix<f64>,
        l: DMatrix<f64>,
    },
    Complex {
        value_rows: DMatrix<num_complex::Complex64>,
        slope_rows: DMatrix<num_complex::Complex64>,
        l: DMatrix<num_complex::Complex64>,
    },
}

/// The secular matrix `M(point)` for a fixed graph and vertex conditions.
#[derive(Debug, Clone)]
pub struct SecularSystem {
    lengths: Vec<f64>,
    max_length: f64,
    coupling: Coupling,
}

fn assemble<T>(
    lengths: &[f64],
    point: SpectralPoint,
    scale: f64,
    value_rows: &DMatrix<T>,
    slope_rows: &DMatrix<T>,
    l: &DMatrix<T>,
) -> DMatrix<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let edges = lengths.len();
    let n = 2 * edges;
    let inv = 1.0 / scale;
    // Columns of P + L/d and (1 - P)/d.
    let value_op = value_rows + l.map(|z| z.scale(inv));
    let slope_op = slope_rows.map(|z| z.scale(inv));
    let mut m = DMatrix::<T>::zeros(n, n);
    for (e, &len) in lengths.iter().enumerate() {
        let basis = EdgeBasis::at(point, len);
        let ends = [e, edges + e];
        for (col, values, slopes) in [
            (e, basis.even_value, basis.even_slope),
            (edges + e, basis.odd_value, basis.odd_slope),
        ] {
            for side in 0..2 {
                let j = ends[side];
                for i in 0..n {
                    m[(i, col)] += value_op[(i, j)].scale(values[side])
                        + slope_op[(i, j)].scale(slopes[side]);
                }
            }
        }
    }
    m
}

impl SecularSystem {
    pub fn new(g: &MetricGraph, vc: &VertexConditions) -> Result<Self> {
        if vc.dim() != g.boundary_dim() {
            return Err(Error::DimensionMismatch {
                rows: vc.p().nrows(),
                cols: vc.p().ncols(),
                expected: g.boundary_dim(),
            });
        }
        vc.ensure_valid()?;
        let n = vc.dim();
        let complement = DMatrix::identity(n, n) - vc.p();
        let coupling = if vc.is_real() {
            Coupling::Real {
                value_rows: vc.p().map(|z| z.re),
                slope_rows: complement.map(|z| z.re),
                l: vc.l().map(|z| z.re),
            }
        } else {
            Coupling::Complex {
                value_rows: vc.p().clone(),
                slope_rows: complement,
                l: vc.l().clone(),
            }
        };
        Ok(SecularSystem {
            lengths: g.edges().iter().map(|e| e.length).collect(),
            max_length: g.max_edge_length(),
            coupling,
        })
    }

    /// Singular values of `M(point)`, descending.
    pub fn singular_values(&self, point: SpectralPoint) -> Vec<f64> {
        let scale = point.parameter().max(1.0 / self.max_length);
        let mut sv: Vec<f64> = match &self.coupling {
            Coupling::Real {
                value_rows,
                slope_rows,
                l,
            } => assemble(&self.lengths, point, scale, value_rows, slope_rows, l)
                .singular_values()
                .iter()
                .copied()
                .collect(),
            Coupling::Complex {
                value_rows,
                slope_rows,
                l,
            } => assemble(&self.lengths, point, scale, value_rows, slope_rows, l)
                .singular_values()
                .iter()
                .copied()
                .collect(),
        };
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    pub fn smallest_singular_value(&self, point: SpectralPoint) -> f64 {
        self.singular_values(point).last().copied().unwrap_or(0.0)
    }

    /// Number of singular values below `MULTIPLICITY_TOL * max(sigma_max, 1)`.
    ///
    /// The basis keeps the entries of `M` of order one, and `M` can vanish
    /// identically at a fully degenerate root, hence the floor.
    pub fn nullity(&self, point: SpectralPoint) -> usize {
        let sv = self.singular_values(point);
        let threshold = MULTIPLICITY_TOL * sv.first().copied().unwrap_or(0.0).max(1.0);
        sv.iter().filter(|&&s| s <= threshold).count()
    }

    fn check_grid(&self, upper: f64, cutoff: f64) -> Result<()> {
        let grid_points = upper / self.grid_step(upper);
        if grid_points > MAX_GRID_POINTS as f64 {
            return Err(Error::CutoffTooLarge {
                cutoff,
                grid_points,
                limit: MAX_GRID_POINTS,
            });
        }
        Ok(())
    }

    fn grid_step(&self, upper: f64) -> f64 {
        (PI / (8.0 * self.max_length)).min(GRID_GUARD).min(upper / 16.0)
    }

    /// Roots of `sigma_min` on `(0, upper]` along one branch, ascending, with
    /// multiplicities. The point `0` is excluded; see [`Self::nullity`].
    fn scan(&self, branch: fn(f64) -> SpectralPoint, upper: f64) -> Vec<(f64, usize)> {
        let step = self.grid_step(upper);
        let n = (upper / step).ceil() as usize;
        let grid: Vec<f64> = (0..=n).map(|i| upper * i as f64 / n as f64).collect();
        let sigma: Vec<f64> = grid
            .par_iter()
            .map(|&x| self.smallest_singular_value(branch(x)))
            .collect();

        let mut brackets = Vec::new();
        for i in 1..=n {
            if i < n {
                if sigma[i] < sigma[i - 1] && sigma[i] <= sigma[i + 1] {
                    brackets.push((grid[i - 1], grid[i + 1]));
                }
            } else if sigma[i] < sigma[i - 1] {
                brackets.push((grid[i - 1], grid[i] + step));
            }
        }

        let zero_guard = 1e-6 * step;
        let mut roots: Vec<(f64, usize)> = brackets
            .par_iter()
            .filter_map(|&(a, b)| {
                let x = golden_section(|x| self.smallest_singular_value(branch(x)), a, b);
                if x <= zero_guard || x > upper * (1.0 + 1e-12) + 1e-12 {
                    return None;
                }
                let mult = self.nullity(branch(x));
                if mult == 0 {
                    return None;
                }
                let mut cluster = vec![(x, mult)];
                let lo = (x - 2.0 * step).max(zero_guard);
                let hi = (x + 2.0 * step).min(upper);
                while let Some(y) = self.hidden_root(branch, &cluster, lo, hi) {
                    cluster.push((y, 1));
                }
                Some(cluster)
            })
            .flatten()
            .collect();
        roots.sort_by(|a, b| a.0.total_cmp(&b.0));
        roots.dedup_by(|next, prev| {
            if (next.0 - prev.0).abs() <= 1e-10 * prev.0.max(1.0) {
                prev.1 = prev.1.max(next.1);
                true
            } else {
                false
            }
        });
        roots
    }
}

impl SecularSystem {
    /// A root in `[lo, hi]` other than the ones in `known`, found by dividing
    /// the known roots out of the product of the smallest singular values.
    /// Resolves roots closer together than the scan grid.
    fn hidden_root(
        &self,
        branch: fn(f64) -> SpectralPoint,
        known: &[(f64, usize)],
        lo: f64,
        hi: f64,
    ) -> Option<f64> {
        let count: usize = known.iter().map(|r| r.1).sum();
        if count >= 2 * self.lengths.len() {
            return None;
        }
        let deflated = |k: f64| {
            let sv = self.singular_values(branch(k));
            let product: f64 = sv.iter().rev().take(count + 1).product();
            let divisor: f64 = known
                .iter()
                .map(|&(r, m)| (k - r).abs().powi(m as i32))
                .product();
            product / divisor
        };
        let mut cuts: Vec<f64> = known
            .iter()
            .map(|r| r.0)
            .filter(|&r| r > lo && r < hi)
            .collect();
        cuts.push(lo);
        cuts.push(hi);
        cuts.sort_by(f64::total_cmp);
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b - a <= 1e-9 * b.max(1.0) {
                continue;
            }
            let x = golden_section(deflated, a, b);
            let reference = deflated(a + 0.25 * (b - a)).max(deflated(a + 0.75 * (b - a)));
            let separated = known
                .iter()
                .all(|&(r, _)| (x - r).abs() > 1e-9 * r.max(1.0));
            if separated && deflated(x) <= 1e-6 * reference && self.nullity(branch(x)) > 0 {
                return Some(x);
            }
        }
        None
    }
}

/// Minimiser of a unimodal function on `[a, b]`, to bracket width `ROOT_TOL`.
fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > ROOT_TOL && b - a > 4.0 * f64::EPSILON * b.abs() {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

/// Smallest singular value of the secular matrix at `point`; zero exactly at
/// eigenvalues.
pub fn secular_value(g: &MetricGraph, vc: &VertexConditions, point: SpectralPoint) -> Result<f64> {
    Ok(SecularSystem::new(g, vc)?.smallest_singular_value(point))
}

/// Eigenvalues in `[0, e_max]` with multiplicities.
pub fn positive_spectrum(g: &MetricGraph, vc: &VertexConditions, e_max: f64) -> Result<Spectrum> {
    if !(e_max.is_finite() && e_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "spectral cutoff must be positive, got {e_max}"
        )));
    }
    let system = SecularSystem::new(g, vc)?;
    system.check_grid(e_max.sqrt(), e_max)?;
    let mut nonnegatives = Vec::new();
    let zero = system.nullity(SpectralPoint::Oscillatory(0.0));
    if zero > 0 {
        nonnegatives.push(Eigenvalue {
            energy: 0.0,
            multiplicity: zero,
        });
    }
    nonnegatives.extend(
        system
            .scan(SpectralPoint::Oscillatory, e_max.sqrt())
            .into_iter()
            .map(|(k, multiplicity)| Eigenvalue {
                energy: k * k,
                multiplicity,
            }),
    );
    let total_length = g.total_length();
    let weyl_bound = (2 * g.edge_count() + g.vertex_count()) as f64;
    if nonnegatives.is_empty() && total_length * e_max.sqrt() / PI > weyl_bound {
        return Err(Error::CutoffTooSmall { cutoff: e_max });
    }
    log::debug!(
        "positive spectrum: {} levels up to E = {e_max}",
        nonnegatives.len()
    );
    Ok(Spectrum {
        negatives: Vec::new(),
        nonnegatives,
        total_length,
        cutoff: e_max,
    })
}

/// Upper end of the decay-rate scan for bound states.
pub fn decay_rate_bound(g: &MetricGraph, l_max: Option<f64>) -> f64 {
    2.0 * l_max.unwrap_or(0.0).max(1.0).max(1.0 / g.min_edge_length())
}

/// All eigenvalues `E < 0`.
pub fn negative_spectrum(g: &MetricGraph, vc: &VertexConditions) -> Result<Spectrum> {
    let system = SecularSystem::new(g, vc)?;
    let summary = vc.l_spectrum()?;
    let upper = decay_rate_bound(g, summary.l_max);
    system.check_grid(upper, -upper * upper)?;
    let mut negatives: Vec<Eigenvalue> = system
        .scan(SpectralPoint::Decaying, upper)
        .into_iter()
        .map(|(k, multiplicity)| Eigenvalue {
            energy: -k * k,
            multiplicity,
        })
        .collect();
    negatives.reverse();
    let found: usize = negatives.iter().map(|e| e.multiplicity).sum();
    if found > summary.count_positive {
        return Err(Error::BoundViolation {
            found,
            bound: summary.count_positive,
        });
    }
    Ok(Spectrum {
        negatives,
        nonnegatives: Vec::new(),
        total_length: g.total_length(),
        cutoff: 0.0,
    })
}

/// Both branches, nonnegative part up to `e_max`.
pub fn full_spectrum(g: &MetricGraph, vc: &VertexConditions, e_max: f64) -> Result<Spectrum> {
    let neg = negative_spectrum(g, vc)?;
    let pos = positive_spectrum(g, vc, e_max)?;
    Ok(Spectrum::merged(neg, pos))
}

/// Lowest eigenvalue over both branches.
pub fn ground_state_energy(g: &MetricGraph, vc: &VertexConditions, e_max: f64) -> Result<f64> {
    let neg = negative_spectrum(g, vc)?;
    if let Some(e) = neg.ground_energy() {
        return Ok(e);
    }
    positive_spectrum(g, vc, e_max)?
        .ground_energy()
        .ok_or(Error::CutoffTooSmall { cutoff: e_max })
}

/// Largest deviation of the counting function `N(k)` (eigenvalues `<= k^2`,
/// with multiplicity) from the Weyl term `L k / pi`, over `0 <= k <= sqrt(cutoff)`.
pub fn weyl_deviation(spec: &Spectrum) -> f64 {
    let weyl = |k: f64| spec.total_length * k / PI;
    let mut below = spec.negative_count() as f64;
    let mut worst: f64 = 0.0;
    let mut at_zero_done = false;
    for level in &spec.nonnegatives {
        let k = level.energy.max(0.0).sqrt();
        if !at_zero_done {
            worst = worst.max((below - weyl(0.0)).abs());
            at_zero_done = true;
        }
        let left = below;
        let right = below + level.multiplicity as f64;
        worst = worst.max((left - weyl(k)).abs()).max((right - weyl(k)).abs());
        below = right;
    }
    let k_max = spec.cutoff.max(0.0).sqrt();
    worst.max((below - weyl(k_max)).abs())
}
