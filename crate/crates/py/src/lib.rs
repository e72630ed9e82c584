//! Python bindings for the `graphbec` crate.

use graphbec::spectral;
use graphbec::statistics;
use graphbec::thermo_limit::{self, SweepRecord, Thresholds};
use graphbec::tonks;
use graphbec::{cli_io, Edge, Eigenvalue, Error};
use nalgebra::DMatrix;
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(graphbec_py, NumericalError, PyRuntimeError, "A numerical method failed.");
create_exception!(
    graphbec_py,
    NoCondensationDetected,
    NumericalError,
    "No temperature on the grid reaches the condensate threshold."
);

fn to_py(err: Error) -> PyErr {
    match err {
        Error::NoCondensationDetected => NoCondensationDetected::new_err(err.to_string()),
        e if e.is_numerical() => NumericalError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

#[pyclass(name = "MetricGraph", module = "graphbec_py", frozen)]
struct PyGraph(graphbec::MetricGraph);

#[pymethods]
impl PyGraph {
    /// `edges` holds `(start, end, length)` triples; vertices are 0-based.
    #[new]
    fn new(vertices: usize, edges: Vec<(usize, usize, f64)>) -> PyResult<Self> {
        graphbec::MetricGraph::from_triples(vertices, &edges)
            .map(PyGraph)
            .map_err(to_py)
    }

    #[staticmethod]
    fn interval(length: f64) -> PyResult<Self> {
        graphbec::MetricGraph::interval(length).map(PyGraph).map_err(to_py)
    }

    #[staticmethod]
    fn loop_graph(length: f64) -> PyResult<Self> {
        graphbec::MetricGraph::loop_graph(length).map(PyGraph).map_err(to_py)
    }

    /// Star with the centre at vertex 0.
    #[staticmethod]
    fn star(arms: usize, length: f64) -> PyResult<Self> {
        graphbec::MetricGraph::star(arms, length).map(PyGraph).map_err(to_py)
    }

    fn scale(&self, eta: f64) -> PyResult<Self> {
        self.0.scale(eta).map(PyGraph).map_err(to_py)
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.0.vertex_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.0.edge_count()
    }

    #[getter]
    fn total_length(&self) -> f64 {
        self.0.total_length()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.0
            .edges()
            .iter()
            .map(|&Edge { start, end, length }| (start, end, length))
            .collect()
    }

    fn degree(&self, vertex: usize) -> usize {
        self.0.degree(vertex)
    }

    fn __repr__(&self) -> String {
        format!(
            "MetricGraph(vertices={}, edges={}, total_length={})",
            self.0.vertex_count(),
            self.0.edge_count(),
            self.0.total_length()
        )
    }
}

fn matrix(rows: Vec<Vec<Complex64>>) -> PyResult<DMatrix<Complex64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

#[pyclass(name = "VertexConditions", module = "graphbec_py", frozen)]
struct PyConditions(graphbec::VertexConditions);

#[pymethods]
impl PyConditions {
    /// Explicit `(P, L)` as nested lists of complex numbers. Invalid pairs
    /// raise `ValueError`.
    #[staticmethod]
    fn from_matrices(p: Vec<Vec<Complex64>>, l: Vec<Vec<Complex64>>) -> PyResult<Self> {
        graphbec::VertexConditions::from_matrices(matrix(p)?, matrix(l)?)
            .map(PyConditions)
            .map_err(to_py)
    }

    #[staticmethod]
    fn dirichlet(g: &PyGraph) -> Self {
        PyConditions(graphbec::VertexConditions::dirichlet(&g.0))
    }

    #[staticmethod]
    fn neumann(g: &PyGraph) -> Self {
        PyConditions(graphbec::VertexConditions::neumann(&g.0))
    }

    #[staticmethod]
    fn kirchhoff(g: &PyGraph) -> Self {
        PyConditions(graphbec::VertexConditions::kirchhoff(&g.0))
    }

    /// Delta coupling with one strength per vertex.
    #[staticmethod]
    fn delta(g: &PyGraph, strengths: Vec<f64>) -> PyResult<Self> {
        graphbec::VertexConditions::delta(&g.0, &strengths)
            .map(PyConditions)
            .map_err(to_py)
    }

    fn validate(&self) -> Vec<String> {
        self.0.validate().iter().map(ToString::to_string).collect()
    }

    /// `(eigenvalues, L_max, count_positive)` of L restricted to ker P.
    fn l_spectrum(&self) -> PyResult<(Vec<f64>, Option<f64>, usize)> {
        let s = self.0.l_spectrum().map_err(to_py)?;
        Ok((s.eigenvalues, s.l_max, s.count_positive))
    }

    fn is_real(&self) -> bool {
        self.0.is_real()
    }

    #[getter]
    fn p(&self) -> Vec<Vec<Complex64>> {
        rows(self.0.p())
    }

    #[getter]
    fn l(&self) -> Vec<Vec<Complex64>> {
        rows(self.0.l())
    }
}

fn rows(m: &DMatrix<Complex64>) -> Vec<Vec<Complex64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

#[pyclass(name = "Spectrum", module = "graphbec_py", frozen)]
struct PySpectrum(graphbec::Spectrum);

fn pairs(levels: &[Eigenvalue]) -> Vec<(f64, usize)> {
    levels.iter().map(|e| (e.energy, e.multiplicity)).collect()
}

#[pymethods]
impl PySpectrum {
    /// Spectrum from explicit `(energy, multiplicity)` pairs.
    #[new]
    #[pyo3(signature = (levels, total_length, cutoff = f64::INFINITY))]
    fn new(levels: Vec<(f64, usize)>, total_length: f64, cutoff: f64) -> Self {
        let levels: Vec<Eigenvalue> = levels
            .into_iter()
            .map(|(energy, multiplicity)| Eigenvalue { energy, multiplicity })
            .collect();
        PySpectrum(graphbec::Spectrum::from_levels(&levels, total_length, cutoff))
    }

    #[getter]
    fn negatives(&self) -> Vec<(f64, usize)> {
        pairs(&self.0.negatives)
    }

    #[getter]
    fn nonnegatives(&self) -> Vec<(f64, usize)> {
        pairs(&self.0.nonnegatives)
    }

    #[getter]
    fn total_length(&self) -> f64 {
        self.0.total_length
    }

    #[getter]
    fn cutoff(&self) -> f64 {
        self.0.cutoff
    }

    fn ground_energy(&self) -> Option<f64> {
        self.0.ground_energy()
    }

    /// Energies repeated by multiplicity.
    fn state_energies(&self) -> Vec<f64> {
        self.0.state_energies()
    }

    fn weyl_deviation(&self) -> f64 {
        spectral::weyl_deviation(&self.0)
    }

    fn __len__(&self) -> usize {
        self.0.state_count()
    }
}

#[pyfunction]
fn positive_spectrum(g: &PyGraph, vc: &PyConditions, e_max: f64) -> PyResult<PySpectrum> {
    spectral::positive_spectrum(&g.0, &vc.0, e_max)
        .map(PySpectrum)
        .map_err(to_py)
}

#[pyfunction]
fn negative_spectrum(g: &PyGraph, vc: &PyConditions) -> PyResult<PySpectrum> {
    spectral::negative_spectrum(&g.0, &vc.0).map(PySpectrum).map_err(to_py)
}

#[pyfunction]
fn full_spectrum(g: &PyGraph, vc: &PyConditions, e_max: f64) -> PyResult<PySpectrum> {
    spectral::full_spectrum(&g.0, &vc.0, e_max)
        .map(PySpectrum)
        .map_err(to_py)
}

#[pyfunction]
fn ground_state_energy(g: &PyGraph, vc: &PyConditions, e_max: f64) -> PyResult<f64> {
    spectral::ground_state_energy(&g.0, &vc.0, e_max).map_err(to_py)
}

#[pyfunction]
fn bose_density(spectrum: &PySpectrum, beta: f64, mu: f64) -> PyResult<f64> {
    statistics::bose_density(&spectrum.0, beta, mu).map_err(to_py)
}

#[pyfunction]
fn solve_chemical_potential(spectrum: &PySpectrum, beta: f64, density: f64) -> PyResult<f64> {
    statistics::solve_chemical_potential(&spectrum.0, beta, density).map_err(to_py)
}

#[pyfunction]
fn condensate_fraction(spectrum: &PySpectrum, beta: f64, density: f64) -> PyResult<f64> {
    statistics::observables(&spectrum.0, beta, density)
        .map(|o| o.n0_fraction)
        .map_err(to_py)
}

fn levels_from(levels: Vec<(f64, usize)>) -> Vec<Eigenvalue> {
    levels
        .into_iter()
        .map(|(energy, multiplicity)| Eigenvalue { energy, multiplicity })
        .collect()
}

/// `[Z_0, ..., Z_n]` for `(energy, multiplicity)` levels.
#[pyfunction]
fn canonical_partition_functions(levels: Vec<(f64, usize)>, n: usize, beta: f64) -> PyResult<Vec<f64>> {
    let table = statistics::canonical_partitions(&levels_from(levels), n, beta).map_err(to_py)?;
    Ok((0..=n).map(|k| table.z(k)).collect())
}

#[pyfunction]
fn penrose_onsager_lambda(levels: Vec<(f64, usize)>, n: usize, beta: f64) -> PyResult<f64> {
    statistics::penrose_onsager_lambda(&levels_from(levels), n, beta).map_err(to_py)
}

#[pyfunction]
fn limit_free_energy_density(beta: f64, mu: f64) -> PyResult<f64> {
    tonks::limit_free_energy_density(beta, mu).map_err(to_py)
}

#[pyfunction]
fn finite_free_energy_density(spectrum: &PySpectrum, beta: f64, mu: f64) -> PyResult<f64> {
    tonks::finite_free_energy_density(&spectrum.0, beta, mu).map_err(to_py)
}

#[pyfunction]
fn hardcore_levels(levels: Vec<f64>, particles: usize) -> PyResult<Vec<f64>> {
    tonks::hardcore_levels(&levels, particles)
        .map(|h| h.energies)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (levels, beta, mu, n_max = None))]
fn grand_canonical_consistency(levels: Vec<f64>, beta: f64, mu: f64, n_max: Option<usize>) -> f64 {
    let n = n_max.unwrap_or(levels.len());
    tonks::grand_canonical_consistency(&levels, beta, mu, n)
}

fn record_dict<'py>(py: Python<'py>, r: &SweepRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("eta", r.eta)?;
    d.set_item("total_length", r.total_length)?;
    d.set_item("e0", r.e0)?;
    d.set_item("negative_count", r.negative_count)?;
    d.set_item("mu", r.mu)?;
    d.set_item("n0_fraction", r.n0_fraction)?;
    d.set_item("lambda_po", r.lambda_po)?;
    d.set_item("f_finite", r.f_finite)?;
    d.set_item("e0_residual", r.e0_residual)?;
    d.set_item("f_gap", r.f_gap)?;
    Ok(d)
}

fn record_list<'py>(py: Python<'py>, records: &[SweepRecord]) -> PyResult<Vec<Bound<'py, PyDict>>> {
    records.iter().map(|r| record_dict(py, r)).collect()
}

#[pyfunction]
fn ground_state_sweep<'py>(
    py: Python<'py>,
    g: &PyGraph,
    vc: &PyConditions,
    etas: Vec<f64>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let records = py
        .detach(|| thermo_limit::ground_state_sweep(&g.0, &vc.0, &etas))
        .map_err(to_py)?;
    record_list(py, &records)
}

/// Returns `(verdict, records)`.
#[pyfunction]
#[pyo3(signature = (g, vc, etas, temperature, density, vanishing = 0.02, persistent = 0.5))]
#[allow(clippy::too_many_arguments)]
fn bec_sweep<'py>(
    py: Python<'py>,
    g: &PyGraph,
    vc: &PyConditions,
    etas: Vec<f64>,
    temperature: f64,
    density: f64,
    vanishing: f64,
    persistent: f64,
) -> PyResult<(String, Vec<Bound<'py, PyDict>>)> {
    let thresholds = Thresholds {
        vanishing,
        persistent,
        ..Thresholds::default()
    };
    let sweep = py
        .detach(|| thermo_limit::bec_sweep(&g.0, &vc.0, &etas, temperature, density, &thresholds))
        .map_err(to_py)?;
    Ok((sweep.verdict.as_str().to_string(), record_list(py, &sweep.records)?))
}

/// Largest grid temperature with condensate fraction at least `threshold`,
/// or `None` when no grid point condenses.
#[pyfunction]
#[pyo3(signature = (g, vc, eta, density, temperatures, threshold = 0.1))]
fn critical_temperature_estimate(
    py: Python<'_>,
    g: &PyGraph,
    vc: &PyConditions,
    eta: f64,
    density: f64,
    temperatures: Vec<f64>,
    threshold: f64,
) -> PyResult<Option<f64>> {
    match py.detach(|| {
        thermo_limit::critical_temperature_estimate(&g.0, &vc.0, eta, density, &temperatures, threshold)
    }) {
        Ok(e) => Ok(Some(e.temperature)),
        Err(Error::NoCondensationDetected) => Ok(None),
        Err(e) => Err(to_py(e)),
    }
}

/// Hardcore free energy against its limit; Dirichlet conditions unless
/// `vc` is given.
#[pyfunction]
#[pyo3(signature = (g, etas, beta, mu, vc = None))]
fn tonks_convergence_sweep<'py>(
    py: Python<'py>,
    g: &PyGraph,
    etas: Vec<f64>,
    beta: f64,
    mu: f64,
    vc: Option<&PyConditions>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let records = py
        .detach(|| match vc {
            Some(vc) => thermo_limit::tonks_convergence_sweep_with(&g.0, &vc.0, &etas, beta, mu),
            None => thermo_limit::tonks_convergence_sweep(&g.0, &etas, beta, mu),
        })
        .map_err(to_py)?;
    record_list(py, &records)
}

/// Runs a JSON configuration like the command-line tool and returns the
/// manifest results as JSON text.
#[pyfunction]
#[pyo3(signature = (config, command = None, out = None))]
fn run_config(config: &str, command: Option<&str>, out: Option<std::path::PathBuf>) -> PyResult<String> {
    let command = command
        .map(str::parse::<cli_io::Command>)
        .transpose()
        .map_err(PyValueError::new_err)?;
    match cli_io::run(config, command, out.as_deref()) {
        Ok(output) => Ok(output.results.to_string()),
        Err(e) if e.exit_code() == 2 => Err(NumericalError::new_err(e.to_json())),
        Err(e) => Err(PyValueError::new_err(e.to_json())),
    }
}

#[pymodule]
fn graphbec_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("NumericalError", py.get_type::<NumericalError>())?;
    m.add("NoCondensationDetected", py.get_type::<NoCondensationDetected>())?;
    m.add_class::<PyGraph>()?;
    m.add_class::<PyConditions>()?;
    m.add_class::<PySpectrum>()?;
    m.add_function(wrap_pyfunction!(positive_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(negative_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(full_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(ground_state_energy, m)?)?;
    m.add_function(wrap_pyfunction!(bose_density, m)?)?;
    m.add_function(wrap_pyfunction!(solve_chemical_potential, m)?)?;
    m.add_function(wrap_pyfunction!(condensate_fraction, m)?)?;
    m.add_function(wrap_pyfunction!(canonical_partition_functions, m)?)?;
    m.add_function(wrap_pyfunction!(penrose_onsager_lambda, m)?)?;
    m.add_function(wrap_pyfunction!(limit_free_energy_density, m)?)?;
    m.add_function(wrap_pyfunction!(finite_free_energy_density, m)?)?;
    m.add_function(wrap_pyfunction!(hardcore_levels, m)?)?;
    m.add_function(wrap_pyfunction!(grand_canonical_consistency, m)?)?;
    m.add_function(wrap_pyfunction!(ground_state_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(bec_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(critical_temperature_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(tonks_convergence_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
