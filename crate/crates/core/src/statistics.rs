//! Ideal Bose gas over a computed one-particle spectrum.
//!
//! Grand-canonical quantities use the levels up to the spectral cutoff plus a
//! Weyl-law tail `(1/pi) * integral_{k_c}^inf n(k^2) dk` per unit length. A
//! spectrum with an infinite cutoff is treated as complete and gets no tail.
//! Canonical quantities use the bosonic recursion
//! `Z_N = (1/N) sum_k Z_1(k beta) Z_{N-k}` on a truncated level list.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;
use crate::spectral::{Eigenvalue, Spectrum};

/// The Weyl tail must stay below this fraction of the density.
pub const TAIL_REL_TOL: f64 = 1e-8;
/// Relative density residual accepted by the chemical-potential solver.
pub const DENSITY_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasObservables {
    pub beta: f64,
    pub mu: f64,
    pub rho: f64,
    pub n0_fraction: f64,
    pub total_length: f64,
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "inverse temperature must be positive, got {beta}"
        )))
    }
}

fn ground(spec: &Spectrum) -> Result<Eigenvalue> {
    spec.ground()
        .ok_or_else(|| Error::InvalidParameter("spectrum has no levels".into()))
}

/// Weyl-law estimate of the density carried by levels above `cutoff`.
pub(crate) fn weyl_tail(
    cutoff: f64,
    integrand: impl Fn(f64) -> f64,
    beta: f64,
    mu: f64,
) -> Result<f64> {
    if cutoff.is_infinite() {
        return Ok(0.0);
    }
    if cutoff <= mu.max(0.0) {
        return Err(Error::InsufficientCutoff {
            cutoff,
            reason: format!("cutoff does not exceed max(mu, 0) = {}", mu.max(0.0)),
        });
    }
    let k_cut = cutoff.sqrt();
    let k_hi = (cutoff + 60.0 / beta).sqrt();
    let integral = quadrature::integrate(integrand, k_cut, k_hi, 1e-20)?;
    Ok(integral / PI)
}

/// `rho` at `mu = E_0 - offset`, energies measured from the ground level.
fn density_at_offset(spec: &Spectrum, beta: f64, offset: f64) -> Result<f64> {
    let e0 = ground(spec)?.energy;
    let mu = e0 - offset;
    let levels: f64 = spec
        .levels()
        .map(|e| e.multiplicity as f64 / (beta * ((e.energy - e0) + offset)).exp_m1())
        .sum();
    let rho = levels / spec.total_length;
    let tail = weyl_tail(
        spec.cutoff,
        |k| 1.0 / (beta * (k * k - mu)).exp_m1(),
        beta,
        mu,
    )?;
    if tail > TAIL_REL_TOL * rho {
        return Err(Error::InsufficientCutoff {
            cutoff: spec.cutoff,
            reason: format!("Weyl tail {tail:e} exceeds {TAIL_REL_TOL:e} of the density {rho:e}"),
        });
    }
    Ok(rho + tail)
}

/// Grand-canonical particle density at chemical potential `mu < E_0`.
pub fn bose_density(spec: &Spectrum, beta: f64, mu: f64) -> Result<f64> {
    check_beta(beta)?;
    let e0 = ground(spec)?.energy;
    if !(mu < e0) {
        return Err(Error::ChemicalPotentialAboveGroundState { mu, ground: e0 });
    }
    density_at_offset(spec, beta, e0 - mu)
}

/// Chemical potential giving density `rho_target`, by bisection on
/// `log(E_0 - mu)`.
pub fn solve_chemical_potential(spec: &Spectrum, beta: f64, rho_target: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(rho_target.is_finite() && rho_target > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "density must be positive, got {rho_target}"
        )));
    }
    let g = ground(spec)?;
    let particles = rho_target * spec.total_length;
    // Ground level alone holds all particles here, so rho(lo) >= target.
    let mut lo = (g.multiplicity as f64 / particles).ln_1p() / beta;
    let mut hi = 2.0 * lo;
    let mut doublings = 0;
    while density_at_offset(spec, beta, hi)? >= rho_target {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 2000 || !hi.is_finite() {
            return Err(Error::NoConvergence(
                "could not bracket the chemical potential".into(),
            ));
        }
    }
    for _ in 0..500 {
        let mid = (lo * hi).sqrt();
        let rho = density_at_offset(spec, beta, mid)?;
        if ((rho - rho_target) / rho_target).abs() <= DENSITY_REL_TOL {
            return Ok(g.energy - mid);
        }
        if rho > rho_target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 4.0 * f64::EPSILON {
            break;
        }
    }
    Err(Error::NoConvergence(format!(
        "density residual above {DENSITY_REL_TOL:e} after bisection"
    )))
}

/// Fraction of the particles in the ground level.
pub fn condensate_fraction(spec: &Spectrum, beta: f64, mu: f64, rho: f64) -> Result<f64> {
    check_beta(beta)?;
    let g = ground(spec)?;
    if !(mu < g.energy) {
        return Err(Error::ChemicalPotentialAboveGroundState {
            mu,
            ground: g.energy,
        });
    }
    let n0 = g.multiplicity as f64 / (beta * (g.energy - mu)).exp_m1();
    Ok(n0 / (rho * spec.total_length))
}

/// Solves for `mu` at fixed density and reports the condensate fraction.
pub fn observables(spec: &Spectrum, beta: f64, rho: f64) -> Result<GasObservables> {
    let mu = solve_chemical_potential(spec, beta, rho)?;
    Ok(GasObservables {
        beta,
        mu,
        rho,
        n0_fraction: condensate_fraction(spec, beta, mu, rho)?,
        total_length: spec.total_length,
    })
}

/// Canonical partition functions `Z_0..Z_{N_max}` of an ideal Bose gas.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalTable {
    beta: f64,
    levels: Vec<Eigenvalue>,
    /// Ground energy subtracted from all levels.
    shift: f64,
    /// `ln Z_N` of the shifted levels.
    ln_z_shifted: Vec<f64>,
}

impl CanonicalTable {
    pub fn n_max(&self) -> usize {
        self.ln_z_shifted.len() - 1
    }

    pub fn levels(&self) -> &[Eigenvalue] {
        &self.levels
    }

    pub fn ln_z(&self, n: usize) -> f64 {
        self.ln_z_shifted[n] - self.beta * self.shift * n as f64
    }

    pub fn z(&self, n: usize) -> f64 {
        self.ln_z(n).exp()
    }

    /// Mean occupation of each level (summed over its multiplicity) at `n`
    /// particles.
    pub fn occupations(&self, n: usize) -> Vec<f64> {
        assert!(n <= self.n_max(), "particle number beyond the table");
        let ln_zn = self.ln_z_shifted[n];
        self.levels
            .iter()
            .map(|lvl| {
                let eps = lvl.energy - self.shift;
                let sum: f64 = (1..=n)
                    .map(|k| {
                        (-(k as f64) * self.beta * eps + self.ln_z_shifted[n - k] - ln_zn).exp()
                    })
                    .sum();
                lvl.multiplicity as f64 * sum
            })
            .collect()
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

pub fn canonical_partitions(levels: &[Eigenvalue], n_max: usize, beta: f64) -> Result<CanonicalTable> {
    check_beta(beta)?;
    if levels.is_empty() {
        return Err(Error::InvalidParameter("no levels".into()));
    }
    if n_max == 0 {
        return Err(Error::InvalidParameter("N_max must be at least 1".into()));
    }
    if levels
        .iter()
        .any(|l| !l.energy.is_finite() || l.multiplicity == 0)
    {
        return Err(Error::InvalidParameter(
            "levels need finite energies and positive multiplicities".into(),
        ));
    }
    let mut levels = levels.to_vec();
    levels.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    let shift = levels[0].energy;

    // ln Z_1(k beta) for the shifted levels; every term is <= multiplicity.
    let ln_z1: Vec<f64> = (0..=n_max)
        .map(|k| {
            levels
                .iter()
                .map(|l| l.multiplicity as f64 * (-(k as f64) * beta * (l.energy - shift)).exp())
                .sum::<f64>()
                .ln()
        })
        .collect();

    let mut ln_z = Vec::with_capacity(n_max + 1);
    ln_z.push(0.0);
    let mut terms = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        terms.clear();
        terms.extend((1..=n).map(|k| ln_z1[k] + ln_z[n - k]));
        let value = log_sum_exp(&terms) - (n as f64).ln();
        if !value.is_finite() {
            return Err(Error::Overflow("canonical recursion"));
        }
        ln_z.push(value);
    }
    Ok(CanonicalTable {
        beta,
        levels,
        shift,
        ln_z_shifted: ln_z,
    })
}

/// Largest eigenvalue of the reduced one-particle density matrix divided by
/// `N`, for an ideal gas where it is diagonal in the one-particle eigenbasis.
pub fn penrose_onsager_lambda(levels: &[Eigenvalue], n: usize, beta: f64) -> Result<f64> {
    let table = canonical_partitions(levels, n, beta)?;
    Ok(largest_state_occupation(&table, n) / n as f64)
}

pub(crate) fn largest_state_occupation(table: &CanonicalTable, n: usize) -> f64 {
    table
        .occupations(n)
        .iter()
        .zip(table.levels())
        .map(|(occ, lvl)| occ / lvl.multiplicity as f64)
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::VertexConditions;
    use crate::graph::MetricGraph;
    use crate::spectral::positive_spectrum;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn lv(energy: f64, multiplicity: usize) -> Eigenvalue {
        Eigenvalue { energy, multiplicity }
    }

    fn toy(levels: &[(f64, usize)], length: f64) -> Spectrum {
        let l: Vec<_> = levels.iter().map(|&(e, m)| lv(e, m)).collect();
        Spectrum::from_levels(&l, length, f64::INFINITY)
    }

    #[test]
    fn single_level_density() {
        let s = toy(&[(1.0, 1)], 1.0);
        let rho = bose_density(&s, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(rho, 1.0 / (std::f64::consts::E - 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(rho, 0.581977, epsilon = 1e-6);
        let mu = solve_chemical_potential(&s, 1.0, rho).unwrap();
        assert_abs_diff_eq!(mu, 0.0, epsilon = 1e-10);
        let rho_at_mu = bose_density(&s, 1.0, mu).unwrap();
        assert_eq!(condensate_fraction(&s, 1.0, mu, rho_at_mu).unwrap(), 1.0);
    }

    #[test]
    fn dominated_level() {
        let s = toy(&[(0.0, 1), (1e6, 1)], 1.0);
        let rho = bose_density(&s, 1.0, -1.0).unwrap();
        assert_abs_diff_eq!(rho, 1.0 / (std::f64::consts::E - 1.0), epsilon = 1e-15);
    }

    #[test]
    fn mu_above_ground_is_rejected() {
        let s = toy(&[(1.0, 1)], 1.0);
        assert!(matches!(
            bose_density(&s, 1.0, 1.0),
            Err(Error::ChemicalPotentialAboveGroundState { .. })
        ));
    }

    #[test]
    fn neumann_interval_against_explicit_levels() {
        let g = MetricGraph::interval(1.0).unwrap();
        let spec = positive_spectrum(&g, &VertexConditions::neumann(&g), 30.0).unwrap();
        let rho = bose_density(&spec, 1.0, -0.5).unwrap();
        let direct: f64 = (0..10_000)
            .map(|n| {
                let e = (n as f64 * PI).powi(2);
                1.0 / (e + 0.5).exp_m1()
            })
            .sum();
        assert_relative_eq!(rho, direct, max_relative = 1e-10);
    }

    #[test]
    fn insufficient_cutoff() {
        let g = MetricGraph::interval(1.0).unwrap();
        let spec = positive_spectrum(&g, &VertexConditions::neumann(&g), 1.0).unwrap();
        assert!(matches!(
            bose_density(&spec, 1.0, -0.5),
            Err(Error::InsufficientCutoff { .. })
        ));
    }

    #[test]
    fn chemical_potential_roundtrip_and_monotone() {
        let g = MetricGraph::interval(100.0).unwrap();
        let spec = positive_spectrum(&g, &VertexConditions::neumann(&g), 40.0).unwrap();
        let mu1 = solve_chemical_potential(&spec, 1.0, 1.0).unwrap();
        assert!(mu1 < 0.0);
        let back = bose_density(&spec, 1.0, mu1).unwrap();
        assert_relative_eq!(back, 1.0, max_relative = 1e-10);
        let mu2 = solve_chemical_potential(&spec, 1.0, 2.0).unwrap();
        assert!(mu2 > mu1);
    }

    #[test]
    fn condensed_regime_converges() {
        let s = toy(&[(-1.0, 1), (0.0, 1), (0.5, 2)], 100.0);
        let mu = solve_chemical_potential(&s, 8.0, 1.0).unwrap();
        assert!(mu < -1.0);
        let rho = bose_density(&s, 8.0, mu).unwrap();
        assert_relative_eq!(rho, 1.0, max_relative = 1e-10);
        assert!(condensate_fraction(&s, 8.0, mu, 1.0).unwrap() > 0.99);
    }

    #[test]
    fn fraction_decreases_with_temperature() {
        let s = toy(&[(0.0, 1), (1.0, 1), (2.0, 1)], 1.0);
        let mut last = f64::INFINITY;
        for t in [0.1, 0.5, 1.0, 5.0, 50.0] {
            let beta = 1.0 / t;
            let mu = -0.1;
            let rho = bose_density(&s, beta, mu).unwrap();
            let f = condensate_fraction(&s, beta, mu, rho).unwrap();
            assert!(f < last);
            last = f;
        }
        assert!(last > 1.0 / 3.0 - 0.05);
    }

    #[test]
    fn two_level_canonical() {
        let t = canonical_partitions(&[lv(0.0, 1), lv(1.0, 1)], 2, 1.0).unwrap();
        let e = (-1.0f64).exp();
        assert_abs_diff_eq!(t.z(0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.z(2), 1.0 + e + e * e, epsilon = 1e-14);
        assert_abs_diff_eq!(t.z(2), 1.503215, epsilon = 1e-6);
        let occ = t.occupations(2);
        assert_abs_diff_eq!(occ.iter().sum::<f64>(), 2.0, epsilon = 1e-12);
        // (2 * 1 + 1 * e) / Z_2
        assert_abs_diff_eq!(occ[0], (2.0 + e) / (1.0 + e + e * e), epsilon = 1e-14);
        let lambda = penrose_onsager_lambda(&[lv(0.0, 1), lv(1.0, 1)], 2, 1.0).unwrap();
        assert_abs_diff_eq!(lambda, 0.787605, epsilon = 1e-6);
    }

    #[test]
    fn one_level_canonical() {
        let t = canonical_partitions(&[lv(0.0, 1)], 7, 0.3).unwrap();
        for n in 0..=7 {
            assert_abs_diff_eq!(t.z(n), 1.0, epsilon = 1e-14);
        }
        assert_eq!(penrose_onsager_lambda(&[lv(0.0, 1)], 5, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn shifted_negative_ground() {
        let t = canonical_partitions(&[lv(-50.0, 1), lv(-49.0, 2)], 20, 3.0).unwrap();
        assert!(t.ln_z(20).is_finite());
        assert_abs_diff_eq!(t.occupations(20).iter().sum::<f64>(), 20.0, epsilon = 1e-10);
    }

    #[test]
    fn saturation_at_low_temperature() {
        let lambda = penrose_onsager_lambda(&[lv(0.0, 1), lv(0.3, 1), lv(1.0, 3)], 10, 200.0).unwrap();
        assert_abs_diff_eq!(lambda, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bad_inputs() {
        assert!(canonical_partitions(&[], 2, 1.0).is_err());
        assert!(canonical_partitions(&[lv(0.0, 1)], 0, 1.0).is_err());
        assert!(canonical_partitions(&[lv(0.0, 0)], 2, 1.0).is_err());
        assert!(canonical_partitions(&[lv(0.0, 1)], 2, -1.0).is_err());
    }
}
