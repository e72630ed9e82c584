//! Thermodynamic-limit sweeps: every edge length is multiplied by `eta` while
//! the vertex conditions stay fixed, and observables are followed as `eta`
//! grows.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::VertexConditions;
use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::spectral::{full_spectrum, ground_state_energy, negative_spectrum, Spectrum};
use crate::statistics::{self, canonical_partitions};
use crate::tonks;

pub const DEFAULT_ETAS: [f64; 5] = [10.0, 20.0, 40.0, 80.0, 160.0];
/// Spectra for Bose statistics extend `BOLTZMANN_WINDOW * T` above the ground state.
const BOLTZMANN_WINDOW: f64 = 40.0;
/// Largest particle number for which the canonical `lambda_PO` is evaluated.
const MAX_CANONICAL_PARTICLES: usize = 5000;

/// Cutoffs turning finite-`eta` data into verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// Final condensate fraction at or below which BEC is called vanishing.
    pub vanishing: f64,
    /// Final condensate fraction at or above which BEC is called persistent.
    pub persistent: f64,
    /// Allowed decrease between consecutive fractions of a persistent sweep.
    pub persistent_slack: f64,
    /// Condensate fraction defining the operational critical temperature.
    pub critical: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            vanishing: 0.02,
            persistent: 0.5,
            persistent_slack: 1e-2,
            critical: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Vanishing,
    Persistent,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Vanishing => "vanishing",
            Verdict::Persistent => "persistent",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub eta: f64,
    pub total_length: f64,
    pub e0: f64,
    pub negative_count: usize,
    pub mu: Option<f64>,
    pub n0_fraction: Option<f64>,
    pub lambda_po: Option<f64>,
    pub f_finite: Option<f64>,
    /// `|E_0 + L_max^2|`.
    pub e0_residual: Option<f64>,
    /// `|f_L - f_inf|`.
    pub f_gap: Option<f64>,
}

impl SweepRecord {
    fn new(eta: f64, total_length: f64, e0: f64, negative_count: usize) -> Self {
        SweepRecord {
            eta,
            total_length,
            e0,
            negative_count,
            mu: None,
            n0_fraction: None,
            lambda_po: None,
            f_finite: None,
            e0_residual: None,
            f_gap: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BecSweep {
    pub temperature: f64,
    pub density: f64,
    pub thresholds: Thresholds,
    pub records: Vec<SweepRecord>,
    pub verdict: Verdict,
}

fn check_etas(etas: &[f64]) -> Result<()> {
    if etas.is_empty() {
        return Err(Error::InvalidParameter("empty eta list".into()));
    }
    if etas.iter().any(|&e| !(e.is_finite() && e > 0.0)) {
        return Err(Error::InvalidParameter("eta values must be positive".into()));
    }
    if etas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("eta values must be strictly increasing".into()));
    }
    Ok(())
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")))
    }
}

/// Ground-state energy against the predicted limit `-L_max^2`.
pub fn ground_state_sweep(
    g: &MetricGraph,
    vc: &VertexConditions,
    etas: &[f64],
) -> Result<Vec<SweepRecord>> {
    check_etas(etas)?;
    let l_max = match vc.l_spectrum()?.l_max {
        Some(x) if x > 0.0 => x,
        _ => {
            return Err(Error::InvalidParameter(
                "ground-state sweep needs L with a positive eigenvalue".into(),
            ))
        }
    };
    etas.par_iter()
        .map(|&eta| {
            let scaled = g.scale(eta)?;
            let neg = negative_spectrum(&scaled, vc)?;
            let e0 = match neg.ground_energy() {
                Some(e) => e,
                None => {
                    let e_max = (4.0 * std::f64::consts::PI / scaled.min_edge_length()).powi(2);
                    ground_state_energy(&scaled, vc, e_max)?
                }
            };
            let mut rec = SweepRecord::new(eta, scaled.total_length(), e0, neg.negative_count());
            rec.e0_residual = Some((e0 + l_max * l_max).abs());
            Ok(rec)
        })
        .collect()
}

/// Spectrum of `g` wide enough for Bose statistics at `temperature`.
fn bose_spectrum(g: &MetricGraph, vc: &VertexConditions, temperature: f64) -> Result<Spectrum> {
    let floor = negative_spectrum(g, vc)?.ground_energy().unwrap_or(0.0);
    let e_max = (floor + BOLTZMANN_WINDOW * temperature).max(0.25 * BOLTZMANN_WINDOW * temperature);
    full_spectrum(g, vc, e_max)
}

fn classify(fractions: &[f64], th: &Thresholds) -> Verdict {
    let Some(&last) = fractions.last() else {
        return Verdict::Inconclusive;
    };
    if fractions.windows(2).all(|w| w[1] < w[0]) && last <= th.vanishing {
        Verdict::Vanishing
    } else if last >= th.persistent
        && fractions.windows(2).all(|w| w[1] >= w[0] - th.persistent_slack)
    {
        Verdict::Persistent
    } else {
        Verdict::Inconclusive
    }
}

/// Grand-canonical condensate fraction at fixed temperature and density
/// along the `eta` sequence.
pub fn bec_sweep(
    g: &MetricGraph,
    vc: &VertexConditions,
    etas: &[f64],
    temperature: f64,
    density: f64,
    thresholds: &Thresholds,
) -> Result<BecSweep> {
    check_etas(etas)?;
    check_positive("temperature", temperature)?;
    check_positive("density", density)?;
    let beta = 1.0 / temperature;
    let records = etas
        .par_iter()
        .map(|&eta| {
            let scaled = g.scale(eta)?;
            let spec = bose_spectrum(&scaled, vc, temperature)?;
            let obs = statistics::observables(&spec, beta, density)?;
            let e0 = spec.ground_energy().expect("spectrum is non-empty after solving");
            let mut rec = SweepRecord::new(eta, spec.total_length, e0, spec.negative_count());
            rec.mu = Some(obs.mu);
            rec.n0_fraction = Some(obs.n0_fraction);
            let particles = (density * spec.total_length).round() as usize;
            if (1..=MAX_CANONICAL_PARTICLES).contains(&particles) {
                let levels: Vec<_> = spec.levels().copied().collect();
                let table = canonical_partitions(&levels, particles, beta)?;
                rec.lambda_po =
                    Some(statistics::largest_state_occupation(&table, particles) / particles as f64);
            }
            log::info!("bec sweep eta = {eta}: mu = {}, n0 = {}", obs.mu, obs.n0_fraction);
            Ok(rec)
        })
        .collect::<Result<Vec<_>>>()?;
    let fractions: Vec<f64> = records.iter().filter_map(|r| r.n0_fraction).collect();
    Ok(BecSweep {
        temperature,
        density,
        thresholds: *thresholds,
        verdict: classify(&fractions, thresholds),
        records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperaturePoint {
    pub temperature: f64,
    pub mu: f64,
    pub n0_fraction: f64,
}

/// Condensate fraction over a temperature grid at a single `eta`.
pub fn fraction_over_temperatures(
    g: &MetricGraph,
    vc: &VertexConditions,
    eta: f64,
    density: f64,
    temperatures: &[f64],
) -> Result<Vec<TemperaturePoint>> {
    check_positive("density", density)?;
    if temperatures.is_empty() {
        return Err(Error::InvalidParameter("empty temperature grid".into()));
    }
    for &t in temperatures {
        check_positive("temperature", t)?;
    }
    let t_max = temperatures.iter().copied().fold(0.0, f64::max);
    let scaled = g.scale(eta)?;
    let spec = bose_spectrum(&scaled, vc, t_max)?;
    temperatures
        .par_iter()
        .map(|&t| {
            let obs = statistics::observables(&spec, 1.0 / t, density)?;
            Ok(TemperaturePoint {
                temperature: t,
                mu: obs.mu,
                n0_fraction: obs.n0_fraction,
            })
        })
        .collect()
}

/// Operational critical temperature: the largest grid temperature whose
/// condensate fraction reaches `threshold`. Only an estimate at finite `eta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcEstimate {
    pub temperature: f64,
    pub eta: f64,
    pub threshold: f64,
}

pub fn estimate_from_points(points: &[TemperaturePoint], eta: f64, threshold: f64) -> Result<TcEstimate> {
    points
        .iter()
        .filter(|p| p.n0_fraction >= threshold)
        .map(|p| p.temperature)
        .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.max(t))))
        .map(|temperature| TcEstimate {
            temperature,
            eta,
            threshold,
        })
        .ok_or(Error::NoCondensationDetected)
}

pub fn critical_temperature_estimate(
    g: &MetricGraph,
    vc: &VertexConditions,
    eta: f64,
    density: f64,
    temperatures: &[f64],
    threshold: f64,
) -> Result<TcEstimate> {
    let points = fraction_over_temperatures(g, vc, eta, density, temperatures)?;
    estimate_from_points(&points, eta, threshold)
}

/// Cutoff that makes `exp(-beta (E_max - mu))` negligible for the hardcore gas.
fn fermi_cutoff(beta: f64, mu: f64) -> f64 {
    (mu + 36.0 / beta).max(1.0)
}

/// Finite-length hardcore free-energy density against its limit, for the
/// Dirichlet conditions of `g`.
pub fn tonks_convergence_sweep(
    g: &MetricGraph,
    etas: &[f64],
    beta: f64,
    mu: f64,
) -> Result<Vec<SweepRecord>> {
    tonks_convergence_sweep_with(g, &VertexConditions::dirichlet(g), etas, beta, mu)
}

pub fn tonks_convergence_sweep_with(
    g: &MetricGraph,
    vc: &VertexConditions,
    etas: &[f64],
    beta: f64,
    mu: f64,
) -> Result<Vec<SweepRecord>> {
    check_etas(etas)?;
    check_positive("beta", beta)?;
    let f_limit = tonks::limit_free_energy_density(beta, mu)?;
    etas.par_iter()
        .map(|&eta| {
            let scaled = g.scale(eta)?;
            let spec = full_spectrum(&scaled, vc, fermi_cutoff(beta, mu))?;
            let f = tonks::finite_free_energy_density(&spec, beta, mu)?;
            let e0 = spec.ground_energy().unwrap_or(f64::NAN);
            let mut rec = SweepRecord::new(eta, spec.total_length, e0, spec.negative_count());
            rec.f_finite = Some(f);
            rec.f_gap = Some((f - f_limit).abs());
            Ok(rec)
        })
        .collect()
}

/// Finite-length hardcore free-energy density of `g` itself.
pub fn finite_free_energy_for_graph(
    g: &MetricGraph,
    vc: &VertexConditions,
    beta: f64,
    mu: f64,
) -> Result<f64> {
    check_positive("beta", beta)?;
    let spec = full_spectrum(g, vc, fermi_cutoff(beta, mu))?;
    tonks::finite_free_energy_density(&spec, beta, mu)
}
