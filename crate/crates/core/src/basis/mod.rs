//! Reference cells, nodal Lagrange bases, quadrature and geometric maps.
//!
//! Reference cells follow the Gmsh/VTK vertex numbering:
//!
//! * hexahedron `[-1, 1]^3`, vertices `(-1,-1,-1), (1,-1,-1), (1,1,-1), (-1,1,-1)`
//!   and then the same four at `z = 1`;
//! * tetrahedron with vertices `0, e_x, e_y, e_z`;
//! * quadrilateral `[-1, 1]^2` and triangle `0, e_x, e_y` for faces.

mod lagrange;
mod quadrature;

pub use lagrange::{make_basis, ReferenceBasis, MAX_DEGREE};
pub use quadrature::{gauss_legendre, make_quadrature, QuadratureRule, MAX_EXACTNESS};

use nalgebra::{Matrix3, Point3, Vector3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CellKind {
    Hexahedron,
    Tetrahedron,
    Quadrilateral,
    Triangle,
}

const HEX_VERTICES: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

/// Faces as vertex cycles, counter-clockwise seen from outside.
const HEX_FACES: [&[usize]; 6] = [
    &[0, 3, 2, 1],
    &[4, 5, 6, 7],
    &[0, 1, 5, 4],
    &[2, 3, 7, 6],
    &[0, 4, 7, 3],
    &[1, 2, 6, 5],
];

const TET_VERTICES: [[f64; 3]; 4] = [
    [0.0, 0.0, 0.0],
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
];

const TET_FACES: [&[usize]; 4] = [&[0, 2, 1], &[0, 1, 3], &[0, 3, 2], &[1, 2, 3]];

const QUAD_VERTICES: [[f64; 3]; 4] = [
    [-1.0, -1.0, 0.0],
    [1.0, -1.0, 0.0],
    [1.0, 1.0, 0.0],
    [-1.0, 1.0, 0.0],
];

const TRI_VERTICES: [[f64; 3]; 3] = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];

impl CellKind {
    pub fn dim(self) -> usize {
        match self {
            CellKind::Hexahedron | CellKind::Tetrahedron => 3,
            CellKind::Quadrilateral | CellKind::Triangle => 2,
        }
    }

    pub fn n_vertices(self) -> usize {
        self.reference_vertices().len()
    }

    pub fn reference_vertices(self) -> &'static [[f64; 3]] {
        match self {
            CellKind::Hexahedron => &HEX_VERTICES,
            CellKind::Tetrahedron => &TET_VERTICES,
            CellKind::Quadrilateral => &QUAD_VERTICES,
            CellKind::Triangle => &TRI_VERTICES,
        }
    }

    /// Measure of the reference cell.
    pub fn reference_measure(self) -> f64 {
        match self {
            CellKind::Hexahedron => 8.0,
            CellKind::Tetrahedron => 1.0 / 6.0,
            CellKind::Quadrilateral => 4.0,
            CellKind::Triangle => 0.5,
        }
    }

    /// Local faces of a volume cell as outward-oriented vertex cycles.
    pub fn faces(self) -> &'static [&'static [usize]] {
        match self {
            CellKind::Hexahedron => &HEX_FACES,
            CellKind::Tetrahedron => &TET_FACES,
            _ => &[],
        }
    }

    pub fn n_faces(self) -> usize {
        self.faces().len()
    }

    pub fn face_kind(self) -> Option<CellKind> {
        match self {
            CellKind::Hexahedron => Some(CellKind::Quadrilateral),
            CellKind::Tetrahedron => Some(CellKind::Triangle),
            _ => None,
        }
    }

    /// Number of scalar Lagrange functions of degree `p`.
    pub fn basis_size(self, p: usize) -> usize {
        match self {
            CellKind::Hexahedron => (p + 1).pow(3),
            CellKind::Quadrilateral => (p + 1).pow(2),
            CellKind::Tetrahedron => (p + 1) * (p + 2) * (p + 3) / 6,
            CellKind::Triangle => (p + 1) * (p + 2) / 2,
        }
    }

    /// Geometric (vertex) shape functions and their reference gradients.
    pub fn geometric_shape(self, xi: &[f64; 3], n: &mut [f64], dn: &mut [[f64; 3]]) {
        match self {
            CellKind::Hexahedron => {
                for (a, v) in HEX_VERTICES.iter().enumerate() {
                    let fx = 1.0 + v[0] * xi[0];
                    let fy = 1.0 + v[1] * xi[1];
                    let fz = 1.0 + v[2] * xi[2];
                    n[a] = 0.125 * fx * fy * fz;
                    dn[a] = [
                        0.125 * v[0] * fy * fz,
                        0.125 * fx * v[1] * fz,
                        0.125 * fx * fy * v[2],
                    ];
                }
            }
            CellKind::Tetrahedron => {
                n[0] = 1.0 - xi[0] - xi[1] - xi[2];
                n[1] = xi[0];
                n[2] = xi[1];
                n[3] = xi[2];
                dn[0] = [-1.0, -1.0, -1.0];
                dn[1] = [1.0, 0.0, 0.0];
                dn[2] = [0.0, 1.0, 0.0];
                dn[3] = [0.0, 0.0, 1.0];
            }
            CellKind::Quadrilateral => {
                for (a, v) in QUAD_VERTICES.iter().enumerate() {
                    let fx = 1.0 + v[0] * xi[0];
                    let fy = 1.0 + v[1] * xi[1];
                    n[a] = 0.25 * fx * fy;
                    dn[a] = [0.25 * v[0] * fy, 0.25 * fx * v[1], 0.0];
                }
            }
            CellKind::Triangle => {
                n[0] = 1.0 - xi[0] - xi[1];
                n[1] = xi[0];
                n[2] = xi[1];
                dn[0] = [-1.0, -1.0, 0.0];
                dn[1] = [1.0, 0.0, 0.0];
                dn[2] = [0.0, 1.0, 0.0];
            }
        }
    }
}

/// Result of mapping a reference point into a physical volume cell.
#[derive(Clone, Copy, Debug)]
pub struct PhysicalMap {
    pub point: Point3<f64>,
    /// `J[(i, j)] = ∂x_i / ∂ξ_j`.
    pub jacobian: Matrix3<f64>,
    pub det: f64,
}

impl PhysicalMap {
    /// Maps a reference gradient to a physical one (`J^{-T} ∇_ξ`).
    pub fn inverse_transpose(&self) -> Matrix3<f64> {
        let inv = self
            .jacobian
            .try_inverse()
            .expect("jacobian checked to be non-singular");
        inv.transpose()
    }
}

/// Raised when a geometric map has a non-positive Jacobian determinant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonPositiveJacobian {
    pub det: f64,
}

impl NonPositiveJacobian {
    pub fn in_element(self, element: usize) -> crate::Error {
        crate::Error::Geometry {
            element,
            reason: format!("non-positive Jacobian determinant {:e}", self.det),
        }
    }
}

/// Maps `xi` on the reference cell of `kind` to the physical cell spanned by
/// `vertices` (reference vertex order).
pub fn map_physical(
    kind: CellKind,
    vertices: &[Point3<f64>],
    xi: &[f64; 3],
) -> Result<PhysicalMap, NonPositiveJacobian> {
    debug_assert_eq!(kind.dim(), 3);
    let nv = kind.n_vertices();
    let mut n = [0.0; 8];
    let mut dn = [[0.0; 3]; 8];
    kind.geometric_shape(xi, &mut n[..nv], &mut dn[..nv]);
    let mut point = Vector3::zeros();
    let mut jacobian = Matrix3::<f64>::zeros();
    for a in 0..nv {
        let x = vertices[a].coords;
        point += x * n[a];
        for j in 0..3 {
            for i in 0..3 {
                jacobian[(i, j)] += x[i] * dn[a][j];
            }
        }
    }
    let det = jacobian.determinant();
    if det.is_nan() || det <= 0.0 {
        return Err(NonPositiveJacobian { det });
    }
    Ok(PhysicalMap {
        point: Point3::from(point),
        jacobian,
        det,
    })
}

/// Point and surface element of a face map.
#[derive(Clone, Copy, Debug)]
pub struct FaceMap {
    pub point: Point3<f64>,
    /// Unnormalized normal `∂x/∂s × ∂x/∂t`; its length is the area scaling.
    pub area_normal: Vector3<f64>,
}

/// Maps a reference face point to the physical face spanned by `corners`.
pub fn map_face(kind: CellKind, corners: &[Point3<f64>], st: &[f64; 3]) -> FaceMap {
    debug_assert_eq!(kind.dim(), 2);
    let nv = kind.n_vertices();
    let mut n = [0.0; 4];
    let mut dn = [[0.0; 3]; 4];
    kind.geometric_shape(st, &mut n[..nv], &mut dn[..nv]);
    let mut point = Vector3::zeros();
    let mut ds = Vector3::zeros();
    let mut dt = Vector3::zeros();
    for a in 0..nv {
        let x = corners[a].coords;
        point += x * n[a];
        ds += x * dn[a][0];
        dt += x * dn[a][1];
    }
    FaceMap {
        point: Point3::from(point),
        area_normal: ds.cross(&dt),
    }
}

/// Interpolates reference coordinates of a face's corners (in the adjacent
/// volume cell) at the face point `st`.
pub fn face_to_cell(face_kind: CellKind, corner_refs: &[[f64; 3]], st: &[f64; 3]) -> [f64; 3] {
    let nv = face_kind.n_vertices();
    let mut n = [0.0; 4];
    let mut dn = [[0.0; 3]; 4];
    face_kind.geometric_shape(st, &mut n[..nv], &mut dn[..nv]);
    let mut xi = [0.0; 3];
    for a in 0..nv {
        for d in 0..3 {
            xi[d] += n[a] * corner_refs[a][d];
        }
    }
    xi
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_cube() -> Vec<Point3<f64>> {
        HEX_VERTICES
            .iter()
            .map(|v| Point3::new(0.5 * (v[0] + 1.0), 0.5 * (v[1] + 1.0), 0.5 * (v[2] + 1.0)))
            .collect()
    }

    #[test]
    fn reference_faces_point_outward() {
        for kind in [CellKind::Hexahedron, CellKind::Tetrahedron] {
            let verts = kind.reference_vertices();
            let centroid: Vector3<f64> = verts
                .iter()
                .map(|v| Vector3::from(*v))
                .sum::<Vector3<f64>>()
                / verts.len() as f64;
            for face in kind.faces() {
                let a = Vector3::from(verts[face[0]]);
                let b = Vector3::from(verts[face[1]]);
                let c = Vector3::from(verts[face[2]]);
                let n = (b - a).cross(&(c - a));
                assert!(n.dot(&(a - centroid)) > 0.0, "{kind:?} face {face:?}");
            }
        }
    }

    #[test]
    fn unit_cube_map_has_half_identity_jacobian() {
        let m = map_physical(CellKind::Hexahedron, &unit_cube(), &[0.3, -0.2, 0.9]).unwrap();
        assert!((m.jacobian - Matrix3::identity() * 0.5).norm() < 1e-15);
        assert!((m.det - 0.125).abs() < 1e-15);
        assert!((m.point - Point3::new(0.65, 0.4, 0.95)).norm() < 1e-15);
    }

    #[test]
    fn tet_map_is_constant_and_translation_invariant() {
        let verts = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ];
        let shifted: Vec<_> = verts
            .iter()
            .map(|p| p + Vector3::new(3.0, -1.0, 7.5))
            .collect();
        let a = map_physical(CellKind::Tetrahedron, &verts, &[0.1, 0.2, 0.3]).unwrap();
        let b = map_physical(CellKind::Tetrahedron, &verts, &[0.4, 0.1, 0.0]).unwrap();
        let c = map_physical(CellKind::Tetrahedron, &shifted, &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(a.jacobian, Matrix3::identity());
        assert_eq!(a.jacobian, b.jacobian);
        assert_eq!(a.jacobian, c.jacobian);
    }

    #[test]
    fn inverted_cell_is_rejected() {
        let mut v = unit_cube();
        v.swap(0, 1);
        assert!(map_physical(CellKind::Hexahedron, &v, &[-0.9, -0.9, -0.9]).is_err());
    }

    #[test]
    fn face_map_area() {
        let corners = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
            Point3::new(2.0, 3.0, 0.0),
            Point3::new(0.0, 3.0, 0.0),
        ];
        let f = map_face(CellKind::Quadrilateral, &corners, &[0.0, 0.0, 0.0]);
        // reference area 4, physical area 6
        assert!((f.area_normal.norm() * 4.0 - 6.0).abs() < 1e-14);
        assert!(f.area_normal.z > 0.0);
    }
}
