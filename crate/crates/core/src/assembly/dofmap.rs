use crate::mesh::{BoundaryTag, Mesh};

/// Marker for trace unknowns that are not part of the condensed system.
pub const NOT_FREE: usize = usize::MAX;

/// Numbering of interior and trace unknowns.
///
/// Element `e` owns `6 nb` interior values starting at `element_offset[e]`:
/// the first field (`H` or `u`) then `E`, each stored as `a * nb + i` for
/// component `a` and basis function `i`. Face `f` owns `2 nf` trace values
/// starting at `face_offset[f]`, stored as `c * nf + k` for tangent `t_{c+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DofMap {
    pub element_basis: Vec<usize>,
    pub element_offset: Vec<usize>,
    pub n_interior: usize,
    pub face_basis: Vec<usize>,
    pub face_offset: Vec<usize>,
    pub n_trace: usize,
    /// Trace of the face is fixed by boundary data (PEC faces).
    pub constrained: Vec<bool>,
    /// Index of each trace unknown in the condensed system, or [`NOT_FREE`].
    pub free: Vec<usize>,
    pub n_free: usize,
}

impl DofMap {
    pub fn new(mesh: &Mesh, degree: usize) -> Self {
        let mut element_basis = Vec::with_capacity(mesh.cells.len());
        let mut element_offset = Vec::with_capacity(mesh.cells.len());
        let mut n_interior = 0;
        for c in &mesh.cells {
            let nb = c.kind.basis_size(degree);
            element_basis.push(nb);
            element_offset.push(n_interior);
            n_interior += 6 * nb;
        }
        let mut face_basis = Vec::with_capacity(mesh.faces.len());
        let mut face_offset = Vec::with_capacity(mesh.faces.len());
        let mut constrained = Vec::with_capacity(mesh.faces.len());
        let mut free = Vec::new();
        let mut n_trace = 0;
        let mut n_free = 0;
        for f in &mesh.faces {
            let nf = f.kind.basis_size(degree);
            face_basis.push(nf);
            face_offset.push(n_trace);
            let fixed = f.tag == BoundaryTag::Pec;
            constrained.push(fixed);
            for _ in 0..2 * nf {
                if fixed {
                    free.push(NOT_FREE);
                } else {
                    free.push(n_free);
                    n_free += 1;
                }
            }
            n_trace += 2 * nf;
        }
        DofMap {
            element_basis,
            element_offset,
            n_interior,
            face_basis,
            face_offset,
            n_trace,
            constrained,
            free,
            n_free,
        }
    }

    /// Interior range of element `e`.
    pub fn element_range(&self, e: usize) -> std::ops::Range<usize> {
        let o = self.element_offset[e];
        o..o + 6 * self.element_basis[e]
    }

    pub fn face_range(&self, f: usize) -> std::ops::Range<usize> {
        let o = self.face_offset[f];
        o..o + 2 * self.face_basis[f]
    }

    /// Global trace indices of element `e` in local order (faces in local
    /// order, then `c * nf + k`).
    pub fn element_trace(&self, mesh: &Mesh, e: usize) -> Vec<usize> {
        mesh.element_faces[e]
            .iter()
            .flat_map(|ef| self.face_range(ef.face))
            .collect()
    }
}
