//! Backward-Euler time stepping with static condensation onto the trace
//! unknowns.

mod condensed;
mod run;
mod sparse;

pub use condensed::{CondensedSystem, StepDiagnostics};
pub use run::{run, steps_for, RunSummary};

use nalgebra::{Point3, Vector3};

use crate::assembly::{project_trace, project_volume, Discretization, Formulation};
use crate::par::{try_map_indexed, Parallelism};
use crate::physics::{AnalyticalField, PlaneWave, SourceTerm};
use crate::Result;

/// Data driving a run besides the initial state.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Problem {
    pub source: SourceTerm,
    /// Tangential electric field imposed on PEC faces; `None` means
    /// `n × E = 0`.
    pub dirichlet: Option<AnalyticalField>,
    /// Incident wave entering through absorbing faces.
    pub incident: Option<PlaneWave>,
}

/// Unknowns at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub time: f64,
    /// Interior coefficients laid out by [`crate::DofMap`].
    pub interior: Vec<f64>,
    /// All trace coefficients, constrained ones included.
    pub trace: Vec<f64>,
    /// Magnetic field for the electric-field formulation, accumulated from
    /// `u` by the trapezoidal rule; empty for the mixed formulation.
    pub magnetic: Vec<f64>,
}

impl FieldState {
    pub fn zeros(disc: &Discretization) -> Self {
        let magnetic = match disc.formulation {
            Formulation::Mixed => Vec::new(),
            Formulation::ElectricField => vec![0.0; disc.dofs.n_interior / 2],
        };
        FieldState {
            time: 0.0,
            interior: vec![0.0; disc.dofs.n_interior],
            trace: vec![0.0; disc.dofs.n_trace],
            magnetic,
        }
    }

    /// Projects an analytical field at time `t`: `E` and `H` elementwise,
    /// `u = μ⁻¹∇×E` for the electric-field formulation, and the tangential
    /// `E` onto every face.
    pub fn from_analytical(
        disc: &Discretization,
        field: &AnalyticalField,
        t: f64,
        mode: Parallelism,
    ) -> Result<Self> {
        Self::from_fields(
            disc,
            t,
            |x| field.e(x, t),
            |x| field.h(x, t),
            |x| field.curl_e(x, t),
            mode,
        )
    }

    /// Projection of given fields; `curl_e` is only used by the
    /// electric-field formulation.
    pub fn from_fields<E, H, C>(
        disc: &Discretization,
        t: f64,
        e: E,
        h: H,
        curl_e: C,
        mode: Parallelism,
    ) -> Result<Self>
    where
        E: Fn(&Point3<f64>) -> Vector3<f64> + Sync + Send,
        H: Fn(&Point3<f64>) -> Vector3<f64> + Sync + Send,
        C: Fn(&Point3<f64>) -> Vector3<f64> + Sync + Send,
    {
        let mut state = FieldState::zeros(disc);
        state.time = t;
        let blocks = try_map_indexed(disc.n_elements(), mode, |el| {
            let ev = project_volume(disc, el, &e)?;
            let hv = project_volume(disc, el, &h)?;
            let first = match disc.formulation {
                Formulation::Mixed => hv.clone(),
                Formulation::ElectricField => {
                    let mu = disc.properties(el).mu;
                    project_volume(disc, el, |x| curl_e(x) / mu)?
                }
            };
            Ok::<_, crate::Error>((first, ev, hv))
        })?;
        for (el, (first, ev, hv)) in blocks.into_iter().enumerate() {
            let r = disc.dofs.element_range(el);
            let n = first.len();
            state.interior[r.start..r.start + n].copy_from_slice(&first);
            state.interior[r.start + n..r.end].copy_from_slice(&ev);
            if disc.formulation == Formulation::ElectricField {
                let o = disc.dofs.element_offset[el] / 2;
                state.magnetic[o..o + n].copy_from_slice(&hv);
            }
        }
        let traces =
            crate::par::map_indexed(disc.mesh.faces.len(), mode, |f| project_trace(disc, f, &e));
        for (f, v) in traces.into_iter().enumerate() {
            state.trace[disc.dofs.face_range(f)].copy_from_slice(&v);
        }
        Ok(state)
    }

    /// First field (`H` or `u`) of element `e`.
    pub fn first<'a>(&'a self, disc: &Discretization, e: usize) -> &'a [f64] {
        let r = disc.dofs.element_range(e);
        &self.interior[r.start..r.start + 3 * disc.dofs.element_basis[e]]
    }

    pub fn electric<'a>(&'a self, disc: &Discretization, e: usize) -> &'a [f64] {
        let r = disc.dofs.element_range(e);
        &self.interior[r.start + 3 * disc.dofs.element_basis[e]..r.end]
    }

    pub fn magnetic_field<'a>(&'a self, disc: &Discretization, e: usize) -> &'a [f64] {
        match disc.formulation {
            Formulation::Mixed => self.first(disc, e),
            Formulation::ElectricField => {
                let o = disc.dofs.element_offset[e] / 2;
                &self.magnetic[o..o + 3 * disc.dofs.element_basis[e]]
            }
        }
    }

    pub fn face_trace<'a>(&'a self, disc: &Discretization, f: usize) -> &'a [f64] {
        &self.trace[disc.dofs.face_range(f)]
    }
}
