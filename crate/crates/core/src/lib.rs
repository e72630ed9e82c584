pub mod cli_io;
pub mod conditions;
pub mod error;
pub mod graph;
pub mod quadrature;
pub mod spectral;
pub mod statistics;
pub mod thermo_limit;
pub mod tonks;

pub use conditions::{LSpectrumSummary, VertexConditions, Violation};
pub use error::{Error, Result};
pub use graph::{Edge, EdgeEnd, MetricGraph};
pub use spectral::{Eigenvalue, SecularSystem, SpectralPoint, Spectrum};
