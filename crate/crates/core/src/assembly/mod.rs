//! Discrete spaces, degree-of-freedom numbering and element operators.
//!
//! Volume unknowns are broken vector Lagrange fields stored component-major
//! in global Cartesian components. The hybrid unknown lives on faces and is
//! stored as two scalar fields along the face tangents `(t1, t2)`, so its
//! normal component vanishes by construction.

mod dofmap;
mod element;
mod projection;

pub use dofmap::{DofMap, NOT_FREE};
pub(crate) use element::face_quadrature;
pub use element::{assemble_element, operator_key, ElementOperator};
pub use projection::{
    abc_rhs, assemble_source, eval_element, eval_trace, project_trace, project_volume,
};

use nalgebra::DMatrix;

use crate::basis::{make_basis, make_quadrature, CellKind, QuadratureRule, ReferenceBasis};
use crate::mesh::{BoundaryTag, Mesh};
use crate::physics::{Material, MaterialProperties};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Formulation {
    /// First-order system in `(H, E)`.
    #[default]
    Mixed,
    /// Diffusion equation for `E`, split with `u = μ⁻¹∇×E`. PEC only.
    ElectricField,
}

/// How the stabilization parameter is chosen on each face.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TauSpec {
    /// `scale · sqrt(ε/μ)` of the adjacent material, harmonic mean across
    /// material interfaces.
    Impedance {
        scale: f64,
    },
    Constant(f64),
}

impl TauSpec {
    pub fn default_for(formulation: Formulation) -> Self {
        match formulation {
            Formulation::Mixed => TauSpec::Impedance { scale: 1.0 },
            Formulation::ElectricField => TauSpec::Constant(1.0),
        }
    }

    fn one_sided(&self, m: &MaterialProperties) -> f64 {
        match *self {
            TauSpec::Impedance { scale } => scale * m.admittance(),
            TauSpec::Constant(t) => t,
        }
    }
}

/// Reference data for one volume cell kind.
#[derive(Clone, Debug)]
pub(crate) struct CellSpace {
    pub basis: ReferenceBasis,
    pub quad: QuadratureRule,
    /// `phi[q * nb + i]`.
    pub phi: Vec<f64>,
    pub dphi: Vec<[f64; 3]>,
    /// Higher-order rule used for error norms.
    pub error_quad: QuadratureRule,
    pub error_phi: Vec<f64>,
}

impl CellSpace {
    fn new(kind: CellKind, p: usize) -> Result<Self> {
        let basis = make_basis(kind, p)?;
        let quad = make_quadrature(kind, 2 * p + 1)?;
        let error_quad = make_quadrature(kind, 2 * p + 2)?;
        let nb = basis.len();
        let mut phi = vec![0.0; quad.len() * nb];
        let mut dphi = vec![[0.0; 3]; quad.len() * nb];
        for (q, xi) in quad.points.iter().enumerate() {
            basis.eval(xi, &mut phi[q * nb..(q + 1) * nb]);
            basis.eval_grad(xi, &mut dphi[q * nb..(q + 1) * nb]);
        }
        let mut error_phi = vec![0.0; error_quad.len() * nb];
        for (q, xi) in error_quad.points.iter().enumerate() {
            basis.eval(xi, &mut error_phi[q * nb..(q + 1) * nb]);
        }
        Ok(CellSpace {
            basis,
            quad,
            phi,
            dphi,
            error_quad,
            error_phi,
        })
    }
}

/// Reference data for one face kind.
#[derive(Clone, Debug)]
pub(crate) struct FaceSpace {
    pub basis: ReferenceBasis,
    pub quad: QuadratureRule,
    pub psi: Vec<f64>,
}

impl FaceSpace {
    fn new(kind: CellKind, p: usize) -> Result<Self> {
        let basis = make_basis(kind, p)?;
        let quad = make_quadrature(kind, 2 * p + 1)?;
        let nb = basis.len();
        let mut psi = vec![0.0; quad.len() * nb];
        for (q, st) in quad.points.iter().enumerate() {
            basis.eval(st, &mut psi[q * nb..(q + 1) * nb]);
        }
        Ok(FaceSpace { basis, quad, psi })
    }
}

/// A mesh together with its discrete spaces, materials and stabilization.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub mesh: Mesh,
    pub formulation: Formulation,
    pub degree: usize,
    pub material: Material,
    /// Stabilization per face.
    pub tau: Vec<f64>,
    pub dofs: DofMap,
    cells: Vec<(CellKind, CellSpace)>,
    faces: Vec<(CellKind, FaceSpace)>,
}

impl Discretization {
    /// Checks materials against the formulation and numbers the unknowns.
    /// The mesh must carry face topology.
    pub fn new(
        mesh: Mesh,
        formulation: Formulation,
        degree: usize,
        material: Material,
        tau: TauSpec,
    ) -> Result<Self> {
        if mesh.faces.is_empty() && !mesh.cells.is_empty() {
            return Err(Error::InvalidArgument("mesh has no face topology".into()));
        }
        let mut cells: Vec<(CellKind, CellSpace)> = Vec::new();
        let mut faces: Vec<(CellKind, FaceSpace)> = Vec::new();
        for (e, c) in mesh.cells.iter().enumerate() {
            let props = material.get(c.region)?;
            if formulation == Formulation::ElectricField && !props.sigma_is_definite() {
                return Err(Error::Solvability {
                    element: e,
                    reason:
                        "conductivity must be positive definite for the electric-field formulation"
                            .into(),
                });
            }
            if !cells.iter().any(|(k, _)| *k == c.kind) {
                cells.push((c.kind, CellSpace::new(c.kind, degree)?));
                let fk = c.kind.face_kind().expect("volume cell");
                if !faces.iter().any(|(k, _)| *k == fk) {
                    faces.push((fk, FaceSpace::new(fk, degree)?));
                }
            }
        }
        if formulation == Formulation::ElectricField
            && mesh.faces.iter().any(|f| f.tag == BoundaryTag::Absorbing)
        {
            return Err(Error::Unsupported(
                "absorbing boundaries are not available for the electric-field formulation".into(),
            ));
        }

        let mut taus = Vec::with_capacity(mesh.faces.len());
        for f in &mesh.faces {
            let t_own = tau.one_sided(material.get(mesh.cells[f.owner].region)?);
            let t = match f.neighbor {
                Some(nb) => {
                    let t_nb = tau.one_sided(material.get(mesh.cells[nb].region)?);
                    if t_own == t_nb {
                        t_own
                    } else {
                        2.0 * t_own * t_nb / (t_own + t_nb)
                    }
                }
                None => t_own,
            };
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Stabilization(t));
            }
            taus.push(t);
        }

        let dofs = DofMap::new(&mesh, degree);
        Ok(Discretization {
            mesh,
            formulation,
            degree,
            material,
            tau: taus,
            dofs,
            cells,
            faces,
        })
    }

    /// Default stabilization for the formulation.
    pub fn with_defaults(
        mesh: Mesh,
        formulation: Formulation,
        degree: usize,
        material: Material,
    ) -> Result<Self> {
        Self::new(
            mesh,
            formulation,
            degree,
            material,
            TauSpec::default_for(formulation),
        )
    }

    pub fn n_elements(&self) -> usize {
        self.mesh.cells.len()
    }

    pub fn properties(&self, e: usize) -> &MaterialProperties {
        self.material
            .get(self.mesh.cells[e].region)
            .expect("materials checked at construction")
    }

    pub(crate) fn cell_space(&self, kind: CellKind) -> &CellSpace {
        &self
            .cells
            .iter()
            .find(|(k, _)| *k == kind)
            .expect("cell kind present")
            .1
    }

    pub(crate) fn face_space(&self, kind: CellKind) -> &FaceSpace {
        &self
            .faces
            .iter()
            .find(|(k, _)| *k == kind)
            .expect("face kind present")
            .1
    }

    /// Reference basis of element `e`.
    pub fn basis(&self, e: usize) -> &ReferenceBasis {
        &self.cell_space(self.mesh.cells[e].kind).basis
    }

    /// Reference basis of the trace space on face `f`.
    pub fn face_basis(&self, f: usize) -> &ReferenceBasis {
        &self.face_space(self.mesh.faces[f].kind).basis
    }

    /// Scalar mass matrix of element `e`.
    pub fn mass_matrix(&self, e: usize) -> Result<DMatrix<f64>> {
        element::scalar_mass(self, e)
    }
}
