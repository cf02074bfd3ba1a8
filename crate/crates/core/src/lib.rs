//! Schrödinger operators with singularly scaled potentials `α ε⁻² Q(t/ε)` on
//! star graphs: resonances of the core problem, limit vertex conditions,
//! resolvents, scattering matrices, the corrector construction behind the
//! norm resolvent convergence, and numerical convergence studies.

pub mod approximation;
pub mod convergence;
pub mod error;
pub mod graph;
pub mod ode;
pub mod poly;
pub mod resolvent;
pub mod resonance;
pub mod scattering;
pub mod potential;
pub mod source;
pub mod vertex;

pub use error::{Error, Result};
pub use graph::{build_star, norms, vertex_residual, GraphFunction, NormReport, SampleGrid, StarGraph};
pub use ode::{scaled_transfer, solve_cauchy, solve_core_bvp, transfer, TransferMatrix};
pub use potential::PotentialProfile;
pub use source::Source;
pub use vertex::VertexCondition;

pub use num_complex::Complex64 as C64;
