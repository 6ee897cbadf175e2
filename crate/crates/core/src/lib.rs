//! Hybridizable discontinuous Galerkin (HDG) solvers for the time-domain
//! Maxwell equations in dielectric and conductive media.
//!
//! Two formulations are provided:
//!
//! * [`Formulation::Mixed`]: first-order system in the magnetic field `H` and
//!   the electric field `E`, with displacement and conduction currents,
//!   perfect-electric-conductor and Silver–Müller absorbing boundaries.
//! * [`Formulation::ElectricField`]: electromagnetic diffusion equation for
//!   `E`, split with the auxiliary variable `u = μ⁻¹∇×E`.
//!
//! In both cases the only globally coupled unknown is the tangential trace of
//! the electric field on mesh faces. Time stepping is backward Euler; the
//! interior unknowns are condensed element by element and recovered after
//! every trace solve.

pub mod assembly;
pub mod basis;
mod error;
pub mod mesh;
pub mod par;
pub mod physics;
pub mod postproc;
pub mod solver;

pub use assembly::{Discretization, DofMap, ElementOperator, Formulation, TauSpec};
pub use basis::{CellKind, QuadratureRule, ReferenceBasis};
pub use error::{Error, Result};
pub use mesh::{BoundaryTag, Face, Mesh};
pub use par::Parallelism;
pub use physics::{AnalyticalField, Material, MaterialProperties, PlaneWave, SourceTerm};
pub use solver::{CondensedSystem, FieldState, Problem};
