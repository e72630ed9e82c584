//! Hardcore bosons on graphs through the Fermi–Bose mapping.
//!
//! For hardcore interactions the bosonic many-particle eigenfunctions vanish
//! on all coincidence hyperplanes, so in the permutation-invariant cases the
//! `N`-particle energies are sums of `N` distinct one-particle levels and the
//! grand-canonical trace factorises like that of free fermions:
//!
//! ```text
//! f_L(beta, mu) = -(1 / (beta L)) sum_n log(1 + exp(-beta (E_n - mu))),
//! f(beta, mu)   = -(1 / (pi beta)) integral_0^inf log(1 + exp(-beta (k^2 - mu))) dk.
//! ```

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;
use crate::spectral::Spectrum;
use crate::statistics::weyl_tail;

/// `exp(-beta (E_max - mu))` must stay below this for finite-volume sums.
pub const BOLTZMANN_CUTOFF: f64 = 1e-14;
pub const MAX_HARDCORE_PARTICLES: usize = 6;
const MAX_COMBINATIONS: u128 = 5_000_000;

/// `log(1 + exp(y))` without overflow.
fn softplus(y: f64) -> f64 {
    if y > 0.0 {
        y + (-y).exp().ln_1p()
    } else {
        y.exp().ln_1p()
    }
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

/// Infinite-volume free-energy density of the hardcore Bose gas.
pub fn limit_free_energy_density(beta: f64, mu: f64) -> Result<f64> {
    check_beta(beta)?;
    if !mu.is_finite() {
        return Err(Error::InvalidParameter(format!("mu must be finite, got {mu}")));
    }
    let integrand = |k: f64| softplus(-beta * (k * k - mu));
    let fermi_k = mu.max(0.0).sqrt();
    let mut k_cut = (mu.max(0.0) + 40.0 / beta).sqrt();
    // integral beyond k_cut <= exp(-beta (k_cut^2 - mu)) / (2 beta k_cut)
    let tail_bound = |k: f64| (-beta * (k * k - mu)).exp() / (2.0 * beta * k) / (PI * beta);
    while tail_bound(k_cut) >= 1e-12 {
        k_cut *= 1.5;
    }
    let tol = 1e-12 * PI * beta;
    let inner = quadrature::integrate(integrand, 0.0, fermi_k, 0.5 * tol)?;
    let outer = quadrature::integrate(integrand, fermi_k, k_cut, 0.5 * tol)?;
    Ok(-(inner + outer) / (PI * beta))
}

/// Particle density `-df/dmu` of the infinite hardcore gas, i.e. the free
/// Fermi gas density.
pub fn limit_density(beta: f64, mu: f64) -> Result<f64> {
    check_beta(beta)?;
    let occupation = |k: f64| {
        let x = beta * (k * k - mu);
        if x > 0.0 {
            let e = (-x).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + x.exp())
        }
    };
    let fermi_k = mu.max(0.0).sqrt();
    let k_cut = (mu.max(0.0) + 45.0 / beta).sqrt();
    let tol = 1e-13;
    let v = quadrature::integrate(occupation, 0.0, fermi_k, tol)?
        + quadrature::integrate(occupation, fermi_k, k_cut, tol)?;
    Ok(v / PI)
}

/// Free-energy density of the hardcore gas on a graph of finite length.
pub fn finite_free_energy_density(spec: &Spectrum, beta: f64, mu: f64) -> Result<f64> {
    check_beta(beta)?;
    if spec.cutoff.is_finite() && (-beta * (spec.cutoff - mu)).exp() >= BOLTZMANN_CUTOFF {
        return Err(Error::InsufficientCutoff {
            cutoff: spec.cutoff,
            reason: format!(
                "exp(-beta (E_max - mu)) must be below {BOLTZMANN_CUTOFF:e} at beta = {beta}, mu = {mu}"
            ),
        });
    }
    let sum: f64 = spec
        .levels()
        .map(|e| e.multiplicity as f64 * softplus(-beta * (e.energy - mu)))
        .sum();
    let tail = weyl_tail(spec.cutoff, |k| softplus(-beta * (k * k - mu)), beta, mu)?;
    Ok(-(sum / spec.total_length + tail) / beta)
}

/// Energies of `n` hardcore bosons in the mapped cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardcoreSpectrum {
    pub particles: usize,
    /// All sums of `particles` distinct one-particle states, ascending.
    pub energies: Vec<f64>,
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Calls `visit(sum)` for the level sum of every `size`-subset of `levels`.
fn for_each_subset_sum(levels: &[f64], size: usize, visit: &mut impl FnMut(f64)) {
    fn go(levels: &[f64], start: usize, left: usize, acc: f64, visit: &mut impl FnMut(f64)) {
        if left == 0 {
            visit(acc);
            return;
        }
        for i in start..=levels.len() - left {
            go(levels, i + 1, left - 1, acc + levels[i], visit);
        }
    }
    if size <= levels.len() {
        go(levels, 0, size, 0.0, visit);
    }
}

/// `levels` lists one-particle states; degenerate levels appear repeatedly.
pub fn hardcore_levels(levels: &[f64], particles: usize) -> Result<HardcoreSpectrum> {
    if particles > MAX_HARDCORE_PARTICLES {
        return Err(Error::InvalidParameter(format!(
            "at most {MAX_HARDCORE_PARTICLES} hardcore particles, got {particles}"
        )));
    }
    if levels.len() < particles {
        return Err(Error::TooFewLevels {
            needed: particles,
            available: levels.len(),
        });
    }
    if binomial(levels.len(), particles) > MAX_COMBINATIONS {
        return Err(Error::InvalidParameter(format!(
            "C({}, {particles}) combinations exceed {MAX_COMBINATIONS}",
            levels.len()
        )));
    }
    let mut energies = Vec::new();
    for_each_subset_sum(levels, particles, &mut |e| energies.push(e));
    energies.sort_by(f64::total_cmp);
    Ok(HardcoreSpectrum {
        particles,
        energies,
    })
}

/// Relative difference between `prod_n (1 + exp(-beta (E_n - mu)))` and the
/// fugacity sum `sum_{N <= n_max} exp(N beta mu) Z_N` with `Z_N` built from
/// hardcore `N`-particle energies. The enumeration is exponential in the
/// number of levels.
pub fn grand_canonical_consistency(levels: &[f64], beta: f64, mu: f64, n_max: usize) -> f64 {
    let product: f64 = levels
        .iter()
        .map(|e| 1.0 + (-beta * (e - mu)).exp())
        .product();
    let mut sum = 0.0;
    for n in 0..=n_max.min(levels.len()) {
        let mut z_n = 0.0;
        for_each_subset_sum(levels, n, &mut |e| z_n += (-beta * e).exp());
        sum += (n as f64 * beta * mu).exp() * z_n;
    }
    (product - sum).abs() / product
}

/// Free-energy density on a uniform `mu` grid with central differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyCurve {
    pub beta: f64,
    pub step: f64,
    pub mu: Vec<f64>,
    pub f: Vec<f64>,
    /// First derivative at `mu[1..len-1]`.
    pub df_dmu: Vec<f64>,
    /// Second derivative at `mu[1..len-1]`.
    pub d2f_dmu2: Vec<f64>,
}

impl FreeEnergyCurve {
    /// Largest change of the second derivative between neighbouring points.
    pub fn jump_statistic(&self) -> f64 {
        self.d2f_dmu2
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max)
    }
}

fn uniform_step(grid: &[f64]) -> Result<f64> {
    if grid.len() < 9 {
        return Err(Error::InvalidParameter(format!(
            "need at least 9 grid points, got {}",
            grid.len()
        )));
    }
    let step = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    if !(step > 0.0) {
        return Err(Error::InvalidParameter("grid must be increasing".into()));
    }
    for (i, &x) in grid.iter().enumerate() {
        if (x - (grid[0] + i as f64 * step)).abs() > 1e-9 * step.max(x.abs()) {
            return Err(Error::InvalidParameter("grid must be uniform".into()));
        }
    }
    Ok(step)
}

/// Limit free energy and its `mu`-derivatives on `mu_grid` for every beta.
/// The grid must be uniform with at least 9 points.
pub fn smoothness_scan(beta_grid: &[f64], mu_grid: &[f64]) -> Result<Vec<FreeEnergyCurve>> {
    let step = uniform_step(mu_grid)?;
    beta_grid
        .iter()
        .map(|&beta| {
            let f = mu_grid
                .iter()
                .map(|&mu| limit_free_energy_density(beta, mu))
                .collect::<Result<Vec<_>>>()?;
            let df_dmu = f.windows(3).map(|w| (w[2] - w[0]) / (2.0 * step)).collect();
            let d2f_dmu2 = f
                .windows(3)
                .map(|w| (w[2] - 2.0 * w[1] + w[0]) / (step * step))
                .collect();
            Ok(FreeEnergyCurve {
                beta,
                step,
                mu: mu_grid.to_vec(),
                f,
                df_dmu,
                d2f_dmu2,
            })
        })
        .collect()
}

/// Central second difference of the limit free energy at `mu` with step `h`.
pub fn second_difference(beta: f64, mu: f64, h: f64) -> Result<f64> {
    let f = |m| limit_free_energy_density(beta, m);
    Ok((f(mu + h)? - 2.0 * f(mu)? + f(mu - h)?) / (h * h))
}

/// Largest change of the second difference at the points
/// `mu_lo, mu_lo + h, ..., mu_hi` when the step is halved from `h` to `h/2`.
pub fn refinement_change(beta: f64, mu_lo: f64, mu_hi: f64, h: f64) -> Result<f64> {
    if !(h > 0.0 && mu_hi > mu_lo) {
        return Err(Error::InvalidParameter("need h > 0 and mu_hi > mu_lo".into()));
    }
    let n = ((mu_hi - mu_lo) / h).round() as usize;
    let mut worst: f64 = 0.0;
    for i in 0..=n {
        let mu = mu_lo + i as f64 * h;
        let coarse = second_difference(beta, mu, h)?;
        let fine = second_difference(beta, mu, 0.5 * h)?;
        worst = worst.max((coarse - fine).abs());
    }
    Ok(worst)
}
