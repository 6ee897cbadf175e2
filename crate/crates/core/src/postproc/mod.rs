//! Error norms, convergence tables, temporal Fourier transforms, trace
//! consistency checks and VTK output.

mod convergence;
mod dft;
mod error_norm;
mod trace_check;
mod vtk;

pub use convergence::{convergence_order, ConvergenceReport, ConvergenceRow};
pub use dft::{pointwise_dft, Dft};
pub use error_norm::{relative_difference, relative_l2_error, ErrorNorm};
pub use trace_check::{trace_consistency, TraceConsistency};
pub use vtk::{export_vtk, parse_vtk, vertex_field, vtk_string, VtkData};
