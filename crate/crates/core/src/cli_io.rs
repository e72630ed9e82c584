//! JSON run configurations, command dispatch and CSV/manifest output.
//!
//! A run reads one [`RunConfig`], executes a single [`Command`] and writes
//! `<command>.csv` plus `manifest.json` into the output directory. Floats are
//! written with 17 significant digits and rows come in a fixed order, so
//! identical configurations give byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conditions::VertexConditions;
use crate::error::Error;
use crate::graph::{Edge, MetricGraph};
use crate::spectral::full_spectrum;
use crate::thermo_limit::{self, Thresholds, DEFAULT_ETAS};
use crate::tonks;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    BecSweep,
    TcEstimate,
    TonksFreeEnergy,
    TonksSmoothness,
    Validate,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Spectrum,
        Command::BecSweep,
        Command::TcEstimate,
        Command::TonksFreeEnergy,
        Command::TonksSmoothness,
        Command::Validate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::BecSweep => "bec-sweep",
            Command::TcEstimate => "tc-estimate",
            Command::TonksFreeEnergy => "tonks-free-energy",
            Command::TonksSmoothness => "tonks-smoothness",
            Command::Validate => "validate",
        }
    }
}

impl std::str::FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub vertices: usize,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Dirichlet,
    Neumann,
    Kirchhoff,
    Delta,
}

/// Dense complex matrix as rows of `[re, im]` pairs.
pub type MatrixSpec = Vec<Vec<[f64; 2]>>;

/// Either `preset` (with `strengths` for `delta`) or both `p` and `l`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionsSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strengths: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<MatrixSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumParams {
    pub e_max: f64,
    #[serde(default = "one")]
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BecSweepParams {
    pub temperature: f64,
    pub density: f64,
    #[serde(default = "default_etas")]
    pub etas: Vec<f64>,
    #[serde(default)]
    pub thresholds: Thresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TcEstimateParams {
    pub density: f64,
    pub temperatures: Vec<f64>,
    #[serde(default = "default_tc_eta")]
    pub eta: f64,
    #[serde(default = "default_tc_threshold")]
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TonksFreeEnergyParams {
    pub betas: Vec<f64>,
    pub mus: Vec<f64>,
    #[serde(default = "one")]
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TonksSmoothnessParams {
    pub betas: Vec<f64>,
    pub mu_min: f64,
    pub mu_max: f64,
    pub step: f64,
}

fn one() -> f64 {
    1.0
}

fn default_etas() -> Vec<f64> {
    DEFAULT_ETAS.to_vec()
}

fn default_tc_eta() -> f64 {
    160.0
}

fn default_tc_threshold() -> f64 {
    Thresholds::default().critical
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub graph: GraphSpec,
    pub conditions: ConditionsSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bec_sweep: Option<BecSweepParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tc_estimate: Option<TcEstimateParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tonks_free_energy: Option<TonksFreeEnergyParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tonks_smoothness: Option<TonksSmoothnessParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// A problem with a configuration, located by a path such as
/// `graph.edges[0].length`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl ConfigIssue {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigIssue {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("validation failed: {}", format_issues(.0))]
    Validation(Vec<ConfigIssue>),
    #[error(transparent)]
    Numerics(#[from] Error),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("{}: {}", i.path, i.message))
        .collect::<Vec<_>>()
        .join("; ")
}

impl RunError {
    /// 1 for bad input, 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Numerics(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Schema { .. } => "SchemaError",
            RunError::Validation(_) => "ValidationError",
            RunError::Numerics(e) => e.kind(),
            RunError::Io { .. } => "IoError",
        }
    }

    /// Machine-readable description for standard error.
    pub fn to_json(&self) -> String {
        let mut value = serde_json::json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        match self {
            RunError::Schema { path, .. } => value["path"] = path.clone().into(),
            RunError::Validation(issues) => {
                value["violations"] = serde_json::to_value(issues).expect("plain data")
            }
            _ => {}
        }
        value.to_string()
    }
}

/// Parses and validates a configuration. Unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<RunConfig, RunError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| RunError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    let issues = config.validate();
    if issues.is_empty() {
        Ok(config)
    } else {
        Err(RunError::Validation(issues))
    }
}

fn matrix(spec: &MatrixSpec, dim: usize, path: &str, issues: &mut Vec<ConfigIssue>) -> Option<DMatrix<Complex64>> {
    if spec.len() != dim || spec.iter().any(|row| row.len() != dim) {
        issues.push(ConfigIssue::new(path, format!("expected a {dim}x{dim} matrix")));
        return None;
    }
    Some(DMatrix::from_fn(dim, dim, |i, j| {
        Complex64::new(spec[i][j][0], spec[i][j][1])
    }))
}

fn positive(x: f64, path: &str, issues: &mut Vec<ConfigIssue>) {
    if !(x.is_finite() && x > 0.0) {
        issues.push(ConfigIssue::new(path, format!("must be positive and finite, got {x}")));
    }
}

fn finite(x: f64, path: &str, issues: &mut Vec<ConfigIssue>) {
    if !x.is_finite() {
        issues.push(ConfigIssue::new(path, "must be finite"));
    }
}

fn non_empty<T>(v: &[T], path: &str, issues: &mut Vec<ConfigIssue>) {
    if v.is_empty() {
        issues.push(ConfigIssue::new(path, "must not be empty"));
    }
}

fn increasing(v: &[f64], path: &str, issues: &mut Vec<ConfigIssue>) {
    for (i, &x) in v.iter().enumerate() {
        positive(x, &format!("{path}[{i}]"), issues);
    }
    non_empty(v, path, issues);
    if v.windows(2).any(|w| w[1] <= w[0]) {
        issues.push(ConfigIssue::new(path, "must be strictly increasing"));
    }
}

impl RunConfig {
    pub fn metric_graph(&self) -> Result<MetricGraph, RunError> {
        self.build_graph().map_err(RunError::Validation)
    }

    pub fn vertex_conditions(&self, g: &MetricGraph) -> Result<VertexConditions, RunError> {
        self.build_conditions(g).map_err(RunError::Validation)
    }

    fn build_graph(&self) -> Result<MetricGraph, Vec<ConfigIssue>> {
        let mut issues = Vec::new();
        let n = self.graph.vertices;
        if n == 0 {
            issues.push(ConfigIssue::new("graph.vertices", "must be at least 1"));
        }
        non_empty(&self.graph.edges, "graph.edges", &mut issues);
        for (i, e) in self.graph.edges.iter().enumerate() {
            positive(e.length, &format!("graph.edges[{i}].length"), &mut issues);
            for (name, v) in [("start", e.start), ("end", e.end)] {
                if v >= n {
                    issues.push(ConfigIssue::new(
                        format!("graph.edges[{i}].{name}"),
                        format!("vertex {v} out of range for {n} vertices"),
                    ));
                }
            }
        }
        if !issues.is_empty() {
            return Err(issues);
        }
        MetricGraph::new(n, self.graph.edges.clone())
            .map_err(|e| vec![ConfigIssue::new("graph", e.to_string())])
    }

    fn build_conditions(&self, g: &MetricGraph) -> Result<VertexConditions, Vec<ConfigIssue>> {
        let c = &self.conditions;
        let mut issues = Vec::new();
        let vc = match (c.preset, &c.p, &c.l) {
            (Some(preset), None, None) => {
                if preset != Preset::Delta && c.strengths.is_some() {
                    issues.push(ConfigIssue::new(
                        "conditions.strengths",
                        "only used with the delta preset",
                    ));
                }
                match preset {
                    Preset::Dirichlet => Some(VertexConditions::dirichlet(g)),
                    Preset::Neumann => Some(VertexConditions::neumann(g)),
                    Preset::Kirchhoff => Some(VertexConditions::kirchhoff(g)),
                    Preset::Delta => match &c.strengths {
                        None => {
                            issues.push(ConfigIssue::new("conditions.strengths", "required for delta"));
                            None
                        }
                        Some(s) if s.len() != g.vertex_count() => {
                            issues.push(ConfigIssue::new(
                                "conditions.strengths",
                                format!("expected {} strengths, got {}", g.vertex_count(), s.len()),
                            ));
                            None
                        }
                        Some(s) => {
                            for (i, &a) in s.iter().enumerate() {
                                finite(a, &format!("conditions.strengths[{i}]"), &mut issues);
                            }
                            VertexConditions::delta(g, s).ok()
                        }
                    },
                }
            }
            (None, Some(p), Some(l)) => {
                if c.strengths.is_some() {
                    issues.push(ConfigIssue::new("conditions.strengths", "only used with the delta preset"));
                }
                let dim = g.boundary_dim();
                let p = matrix(p, dim, "conditions.p", &mut issues);
                let l = matrix(l, dim, "conditions.l", &mut issues);
                match (p, l) {
                    (Some(p), Some(l)) => Some(VertexConditions::from_matrices_unchecked(p, l)),
                    _ => None,
                }
            }
            _ => {
                issues.push(ConfigIssue::new(
                    "conditions",
                    "give either `preset` or both `p` and `l`",
                ));
                None
            }
        };
        if let Some(vc) = &vc {
            for v in vc.validate() {
                issues.push(ConfigIssue::new("conditions", v.to_string()));
            }
        }
        match vc {
            Some(vc) if issues.is_empty() => Ok(vc),
            _ => Err(issues),
        }
    }

    /// Every problem found in the configuration; empty when it is runnable.
    pub fn validate(&self) -> Vec<ConfigIssue> {
        let mut issues = match self.build_graph() {
            Ok(g) => self.build_conditions(&g).err().unwrap_or_default(),
            Err(issues) => issues,
        };
        if let Some(s) = &self.spectrum {
            positive(s.e_max, "spectrum.e_max", &mut issues);
            positive(s.eta, "spectrum.eta", &mut issues);
        }
        if let Some(b) = &self.bec_sweep {
            positive(b.temperature, "bec_sweep.temperature", &mut issues);
            positive(b.density, "bec_sweep.density", &mut issues);
            increasing(&b.etas, "bec_sweep.etas", &mut issues);
            let t = &b.thresholds;
            for (name, x) in [
                ("vanishing", t.vanishing),
                ("persistent", t.persistent),
                ("critical", t.critical),
            ] {
                if !(0.0..=1.0).contains(&x) {
                    issues.push(ConfigIssue::new(
                        format!("bec_sweep.thresholds.{name}"),
                        "must lie in [0, 1]",
                    ));
                }
            }
            if !(t.persistent_slack >= 0.0 && t.persistent_slack.is_finite()) {
                issues.push(ConfigIssue::new(
                    "bec_sweep.thresholds.persistent_slack",
                    "must be non-negative",
                ));
            }
        }
        if let Some(t) = &self.tc_estimate {
            positive(t.density, "tc_estimate.density", &mut issues);
            positive(t.eta, "tc_estimate.eta", &mut issues);
            increasing(&t.temperatures, "tc_estimate.temperatures", &mut issues);
            if !(t.threshold > 0.0 && t.threshold <= 1.0) {
                issues.push(ConfigIssue::new("tc_estimate.threshold", "must lie in (0, 1]"));
            }
        }
        if let Some(t) = &self.tonks_free_energy {
            non_empty(&t.betas, "tonks_free_energy.betas", &mut issues);
            non_empty(&t.mus, "tonks_free_energy.mus", &mut issues);
            for (i, &b) in t.betas.iter().enumerate() {
                positive(b, &format!("tonks_free_energy.betas[{i}]"), &mut issues);
            }
            for (i, &m) in t.mus.iter().enumerate() {
                finite(m, &format!("tonks_free_energy.mus[{i}]"), &mut issues);
            }
            positive(t.eta, "tonks_free_energy.eta", &mut issues);
        }
        if let Some(t) = &self.tonks_smoothness {
            non_empty(&t.betas, "tonks_smoothness.betas", &mut issues);
            for (i, &b) in t.betas.iter().enumerate() {
                positive(b, &format!("tonks_smoothness.betas[{i}]"), &mut issues);
            }
            finite(t.mu_min, "tonks_smoothness.mu_min", &mut issues);
            finite(t.mu_max, "tonks_smoothness.mu_max", &mut issues);
            positive(t.step, "tonks_smoothness.step", &mut issues);
            if t.mu_max - t.mu_min < 8.0 * t.step * (1.0 - 1e-9) {
                issues.push(ConfigIssue::new(
                    "tonks_smoothness",
                    "mu range must hold at least 9 grid points",
                ));
            }
        }
        issues
    }

    fn missing_block(&self, command: Command) -> Option<ConfigIssue> {
        let present = match command {
            Command::Spectrum => self.spectrum.is_some(),
            Command::BecSweep => self.bec_sweep.is_some(),
            Command::TcEstimate => self.tc_estimate.is_some(),
            Command::TonksFreeEnergy => self.tonks_free_energy.is_some(),
            Command::TonksSmoothness => self.tonks_smoothness.is_some(),
            Command::Validate => true,
        };
        (!present).then(|| {
            ConfigIssue::new(
                command.name().replace('-', "_"),
                format!("command {} needs this block", command.name()),
            )
        })
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".to_string(), fmt_float)
}

/// CSV text with a `# key=value` header.
#[derive(Debug, Clone, Default)]
pub struct CsvTable {
    header: Vec<(String, String)>,
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    fn new(columns: &[&'static str]) -> Self {
        CsvTable {
            columns: columns.to_vec(),
            ..Default::default()
        }
    }

    fn meta(&mut self, key: &str, value: impl ToString) {
        self.header.push((key.to_string(), value.to_string()));
    }

    fn row(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.header {
            writeln!(out, "# {k}={v}").unwrap();
        }
        writeln!(out, "{}", self.columns.join(",")).unwrap();
        for r in &self.rows {
            writeln!(out, "{}", r.join(",")).unwrap();
        }
        out
    }
}

fn join_floats(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_float(x)).collect::<Vec<_>>().join(";")
}

/// Result of a run before it is written to disk.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub command: Command,
    pub csv: Option<CsvTable>,
    /// Command-specific results for the manifest.
    pub results: serde_json::Value,
}

/// Executes `command`, or the command named in the configuration.
pub fn execute(config: &RunConfig, command: Option<Command>) -> Result<RunOutput, RunError> {
    let command = command.or(config.command).ok_or_else(|| {
        RunError::Validation(vec![ConfigIssue::new("command", "no command given")])
    })?;
    let issues = config.validate();
    if !issues.is_empty() {
        return Err(RunError::Validation(issues));
    }
    if let Some(issue) = config.missing_block(command) {
        return Err(RunError::Validation(vec![issue]));
    }
    let g = config.metric_graph()?;
    let vc = config.vertex_conditions(&g)?;
    log::info!("running {} on a graph with {} edges", command.name(), g.edge_count());
    let (csv, results) = match command {
        Command::Validate => (
            None,
            serde_json::json!({ "violations": Vec::<ConfigIssue>::new() }),
        ),
        Command::Spectrum => run_spectrum(&g, &vc, config.spectrum.as_ref().unwrap())?,
        Command::BecSweep => run_bec_sweep(&g, &vc, config.bec_sweep.as_ref().unwrap())?,
        Command::TcEstimate => run_tc_estimate(&g, &vc, config.tc_estimate.as_ref().unwrap())?,
        Command::TonksFreeEnergy => {
            run_tonks_free_energy(&g, &vc, config.tonks_free_energy.as_ref().unwrap())?
        }
        Command::TonksSmoothness => run_tonks_smoothness(config.tonks_smoothness.as_ref().unwrap())?,
    };
    Ok(RunOutput {
        command,
        csv,
        results,
    })
}

type Produced = (Option<CsvTable>, serde_json::Value);

fn run_spectrum(g: &MetricGraph, vc: &VertexConditions, p: &SpectrumParams) -> Result<Produced, RunError> {
    let scaled = g.scale(p.eta)?;
    let spec = full_spectrum(&scaled, vc, p.e_max)?;
    let mut csv = CsvTable::new(&["branch", "E", "multiplicity"]);
    csv.meta("command", "spectrum");
    csv.meta("version", VERSION);
    csv.meta("e_max", fmt_float(p.e_max));
    csv.meta("eta", fmt_float(p.eta));
    csv.meta("total_length", fmt_float(spec.total_length));
    for (branch, levels) in [("negative", &spec.negatives), ("nonnegative", &spec.nonnegatives)] {
        for e in levels {
            csv.row(vec![branch.to_string(), fmt_float(e.energy), e.multiplicity.to_string()]);
        }
    }
    let results = serde_json::json!({
        "negative_count": spec.negative_count(),
        "state_count": spec.state_count(),
    });
    Ok((Some(csv), results))
}

fn run_bec_sweep(g: &MetricGraph, vc: &VertexConditions, p: &BecSweepParams) -> Result<Produced, RunError> {
    let sweep = thermo_limit::bec_sweep(g, vc, &p.etas, p.temperature, p.density, &p.thresholds)?;
    let mut csv = CsvTable::new(&["eta", "length", "E0", "mu", "rho", "n0_fraction", "lambda_PO"]);
    csv.meta("command", "bec-sweep");
    csv.meta("version", VERSION);
    csv.meta("temperature", fmt_float(p.temperature));
    csv.meta("density", fmt_float(p.density));
    csv.meta("threshold_vanishing", fmt_float(p.thresholds.vanishing));
    csv.meta("threshold_persistent", fmt_float(p.thresholds.persistent));
    csv.meta("threshold_persistent_slack", fmt_float(p.thresholds.persistent_slack));
    csv.meta("verdict", sweep.verdict.as_str());
    for r in &sweep.records {
        csv.row(vec![
            fmt_float(r.eta),
            fmt_float(r.total_length),
            fmt_float(r.e0),
            fmt_opt(r.mu),
            fmt_float(p.density),
            fmt_opt(r.n0_fraction),
            fmt_opt(r.lambda_po),
        ]);
    }
    let results = serde_json::json!({
        "verdict": sweep.verdict,
        "thresholds": sweep.thresholds,
        "records": sweep.records,
    });
    Ok((Some(csv), results))
}

fn run_tc_estimate(g: &MetricGraph, vc: &VertexConditions, p: &TcEstimateParams) -> Result<Produced, RunError> {
    let points = thermo_limit::fraction_over_temperatures(g, vc, p.eta, p.density, &p.temperatures)?;
    let estimate = match thermo_limit::estimate_from_points(&points, p.eta, p.threshold) {
        Ok(e) => Some(e),
        Err(Error::NoCondensationDetected) => None,
        Err(e) => return Err(e.into()),
    };
    let mut csv = CsvTable::new(&["T", "eta", "mu", "n0_fraction"]);
    csv.meta("command", "tc-estimate");
    csv.meta("version", VERSION);
    csv.meta("density", fmt_float(p.density));
    csv.meta("threshold", fmt_float(p.threshold));
    csv.meta("temperatures", join_floats(&p.temperatures));
    csv.meta(
        "tc_estimate",
        estimate.as_ref().map_or_else(|| "none".to_string(), |e| fmt_float(e.temperature)),
    );
    for pt in &points {
        csv.row(vec![
            fmt_float(pt.temperature),
            fmt_float(p.eta),
            fmt_float(pt.mu),
            fmt_float(pt.n0_fraction),
        ]);
    }
    let results = serde_json::json!({
        "estimate": estimate,
        "note": "operational estimate at finite eta",
        "points": points,
    });
    Ok((Some(csv), results))
}

fn run_tonks_free_energy(
    g: &MetricGraph,
    vc: &VertexConditions,
    p: &TonksFreeEnergyParams,
) -> Result<Produced, RunError> {
    let scaled = g.scale(p.eta)?;
    let mut csv = CsvTable::new(&["beta", "mu", "f_finite", "f_limit", "abs_gap"]);
    csv.meta("command", "tonks-free-energy");
    csv.meta("version", VERSION);
    csv.meta("eta", fmt_float(p.eta));
    csv.meta("total_length", fmt_float(scaled.total_length()));
    let pairs: Vec<(f64, f64)> = p
        .betas
        .iter()
        .flat_map(|&b| p.mus.iter().map(move |&m| (b, m)))
        .collect();
    use rayon::prelude::*;
    let rows = pairs
        .par_iter()
        .map(|&(beta, mu)| {
            let f = thermo_limit::finite_free_energy_for_graph(&scaled, vc, beta, mu)?;
            let f_inf = tonks::limit_free_energy_density(beta, mu)?;
            Ok([beta, mu, f, f_inf, (f - f_inf).abs()])
        })
        .collect::<crate::error::Result<Vec<_>>>()?;
    for r in &rows {
        csv.row(r.iter().map(|&x| fmt_float(x)).collect());
    }
    let max_gap = rows.iter().map(|r| r[4]).fold(0.0, f64::max);
    Ok((Some(csv), serde_json::json!({ "max_abs_gap": max_gap })))
}

fn run_tonks_smoothness(p: &TonksSmoothnessParams) -> Result<Produced, RunError> {
    let n = ((p.mu_max - p.mu_min) / p.step).round() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| p.mu_min + i as f64 * p.step).collect();
    let curves = tonks::smoothness_scan(&p.betas, &grid)?;
    let mut csv = CsvTable::new(&["beta", "mu", "f", "df_dmu", "d2f_dmu2"]);
    csv.meta("command", "tonks-smoothness");
    csv.meta("version", VERSION);
    csv.meta("step", fmt_float(p.step));
    let mut jumps = Vec::new();
    for c in &curves {
        csv.meta(&format!("jump_statistic[beta={}]", fmt_float(c.beta)), fmt_float(c.jump_statistic()));
        jumps.push(serde_json::json!({ "beta": c.beta, "jump_statistic": c.jump_statistic() }));
        for i in 0..c.df_dmu.len() {
            csv.row(vec![
                fmt_float(c.beta),
                fmt_float(c.mu[i + 1]),
                fmt_float(c.f[i + 1]),
                fmt_float(c.df_dmu[i]),
                fmt_float(c.d2f_dmu2[i]),
            ]);
        }
    }
    Ok((Some(csv), serde_json::json!({ "jump_statistics": jumps })))
}

#[derive(Debug, Clone, Serialize)]
struct Manifest<'a> {
    version: &'static str,
    command: Command,
    config: &'a RunConfig,
    outputs: Vec<String>,
    results: &'a serde_json::Value,
}

fn io_error(path: &Path, e: std::io::Error) -> RunError {
    RunError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Writes `<command>.csv` (when the command produces one) and
/// `manifest.json` into `out_dir`; returns the written paths.
pub fn write_outputs(config: &RunConfig, output: &RunOutput, out_dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    fs::create_dir_all(out_dir).map_err(|e| io_error(out_dir, e))?;
    let mut written = Vec::new();
    if let Some(csv) = &output.csv {
        let path = out_dir.join(format!("{}.csv", output.command.name()));
        fs::write(&path, csv.render()).map_err(|e| io_error(&path, e))?;
        written.push(path);
    }
    let mut recorded = config.clone();
    recorded.command = Some(output.command);
    let manifest = Manifest {
        version: VERSION,
        command: output.command,
        config: &recorded,
        outputs: written
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
        results: &output.results,
    };
    let path = out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|e| io_error(&path, e))?;
    written.push(path);
    Ok(written)
}

/// Parses, executes and writes a run. `out_dir` overrides the configured
/// output directory, which defaults to the current directory.
pub fn run(text: &str, command: Option<Command>, out_dir: Option<&Path>) -> Result<RunOutput, RunError> {
    let config = parse_config(text)?;
    let output = execute(&config, command)?;
    let dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    write_outputs(&config, &output, &dir)?;
    Ok(output)
}
