//! Volume meshes with face topology, outward normals, boundary
//! classification and per-face tangent frames.

mod generate;
mod gmsh;
mod validate;

pub use generate::{
    generate_ball_tet, generate_box_hex, generate_unit_cube_hex, generate_unit_cube_tet, BallMesh,
};
pub use gmsh::{export_gmsh, gmsh_string, import_gmsh, parse_gmsh};
pub use validate::{validate, Diagnostic, ValidationReport};

use std::collections::BTreeMap;

use nalgebra::{Point3, Vector3};

use crate::basis::CellKind;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    #[default]
    Interior,
    /// Perfect electric conductor, `n × E = 0` (Γ_D).
    Pec,
    /// Silver–Müller absorbing boundary (Γ_A).
    Absorbing,
}

/// Volume cell with straight-sided (affine or trilinear) geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub kind: CellKind,
    pub vertices: Vec<usize>,
    pub region: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Face {
    pub kind: CellKind,
    /// Canonical vertex cycle: the owner's local cycle rotated so that the
    /// smallest vertex id comes first.
    pub vertices: Vec<usize>,
    pub owner: usize,
    pub owner_local: usize,
    pub neighbor: Option<usize>,
    pub neighbor_local: Option<usize>,
    /// Unit normal, outward from the owner.
    pub normal: Vector3<f64>,
    pub t1: Vector3<f64>,
    pub t2: Vector3<f64>,
    pub area: f64,
    pub centroid: Point3<f64>,
    pub tag: BoundaryTag,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.neighbor.is_none()
    }
}

/// A face as seen from one of its cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ElementFace {
    pub face: usize,
    pub is_owner: bool,
    /// Cell-local vertex index of each canonical face corner.
    pub corners: [usize; 4],
}

impl ElementFace {
    /// `+1` when the face normal points out of this cell, `-1` otherwise.
    pub fn sign(&self) -> f64 {
        if self.is_owner {
            1.0
        } else {
            -1.0
        }
    }
}

/// Sorted vertex ids of a face, padded with `usize::MAX` for triangles.
pub type FaceKey = [usize; 4];

pub fn face_key(vertices: &[usize]) -> FaceKey {
    let mut k = [usize::MAX; 4];
    k[..vertices.len()].copy_from_slice(vertices);
    k.sort_unstable();
    k
}

#[derive(Clone, Debug, Default)]
pub struct Mesh {
    pub vertices: Vec<Point3<f64>>,
    pub cells: Vec<Cell>,
    /// Boundary classification of selected boundary faces; unlisted boundary
    /// faces are PEC.
    pub boundary_markers: BTreeMap<FaceKey, BoundaryTag>,
    /// Names of the material regions, when known.
    pub region_names: BTreeMap<u32, String>,
    pub faces: Vec<Face>,
    pub element_faces: Vec<Vec<ElementFace>>,
}

impl Mesh {
    /// Mesh without face topology; see [`build_face_topology`].
    pub fn new(vertices: Vec<Point3<f64>>, cells: Vec<Cell>) -> Self {
        Mesh {
            vertices,
            cells,
            ..Default::default()
        }
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_points(&self, e: usize) -> Vec<Point3<f64>> {
        self.cells[e]
            .vertices
            .iter()
            .map(|&v| self.vertices[v])
            .collect()
    }

    pub fn cell_volume(&self, e: usize) -> f64 {
        let cell = &self.cells[e];
        let pts = self.cell_points(e);
        let q = crate::basis::make_quadrature(cell.kind, 2).expect("low-order rule");
        q.iter()
            .map(|(xi, w)| {
                crate::basis::map_physical(cell.kind, &pts, xi)
                    .map(|m| m.det)
                    .unwrap_or(0.0)
                    * w
            })
            .sum()
    }

    pub fn cell_centroid(&self, e: usize) -> Point3<f64> {
        let vs = &self.cells[e].vertices;
        let s: Vector3<f64> = vs.iter().map(|&v| self.vertices[v].coords).sum();
        Point3::from(s / vs.len() as f64)
    }

    /// Largest vertex-to-vertex distance of a cell.
    pub fn cell_diameter(&self, e: usize) -> f64 {
        let pts = self.cell_points(e);
        let mut d: f64 = 0.0;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                d = d.max((pts[i] - pts[j]).norm());
            }
        }
        d
    }

    pub fn n_interior_faces(&self) -> usize {
        self.faces.iter().filter(|f| !f.is_boundary()).count()
    }

    pub fn n_boundary_faces(&self) -> usize {
        self.faces.iter().filter(|f| f.is_boundary()).count()
    }

    /// Reclassifies every boundary face with `tag(face)`.
    pub fn tag_boundary(&mut self, tag: impl Fn(&Face) -> BoundaryTag) {
        for f in self.faces.iter_mut().filter(|f| f.neighbor.is_none()) {
            let t = tag(f);
            f.tag = t;
            self.boundary_markers.insert(face_key(&f.vertices), t);
        }
    }

    /// Boundary tags in use, with face counts.
    pub fn boundary_census(&self) -> BTreeMap<BoundaryTag, usize> {
        let mut m = BTreeMap::new();
        for f in self.faces.iter().filter(|f| f.is_boundary()) {
            *m.entry(f.tag).or_insert(0) += 1;
        }
        m
    }

    pub fn regions(&self) -> Vec<u32> {
        let mut r: Vec<u32> = self.cells.iter().map(|c| c.region).collect();
        r.sort_unstable();
        r.dedup();
        r
    }
}

/// Tangent frame of a face with unit normal `n`:
/// `t1 = normalize(e_k - (e_k·n) n)` for the axis `e_k` least aligned with
/// `n` (smallest `k` on ties), `t2 = n × t1`.
pub fn tangent_frame(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let a = n.abs();
    let min = a.min();
    // tolerate round-off so that nominally equal components tie
    let k = (0..3).find(|&k| a[k] <= min + 1e-12).unwrap();
    let mut e = Vector3::zeros();
    e[k] = 1.0;
    let t1 = (e - n * n.dot(&e)).normalize();
    let t2 = n.cross(&t1);
    (t1, t2)
}

/// Area-weighted normal (not normalized) of a planar or nearly planar face
/// polygon; its length is the area for triangles and planar quads.
pub fn polygon_area_normal(pts: &[Point3<f64>]) -> Vector3<f64> {
    match pts.len() {
        3 => 0.5 * (pts[1] - pts[0]).cross(&(pts[2] - pts[0])),
        4 => 0.5 * (pts[2] - pts[0]).cross(&(pts[3] - pts[1])),
        _ => unreachable!(),
    }
}

/// Builds faces, cell-to-face incidence, normals and frames. Faces are
/// ordered by sorted vertex ids, so the result does not depend on the order
/// in which cells are listed (up to the choice of owner).
pub fn build_face_topology(mut mesh: Mesh) -> Result<Mesh> {
    let mut incidence: BTreeMap<FaceKey, Vec<(usize, usize)>> = BTreeMap::new();
    for (e, cell) in mesh.cells.iter().enumerate() {
        if cell.vertices.len() != cell.kind.n_vertices() || cell.kind.dim() != 3 {
            return Err(Error::InvalidArgument(format!(
                "cell {e}: {:?} with {} vertices",
                cell.kind,
                cell.vertices.len()
            )));
        }
        if let Some(&v) = cell.vertices.iter().find(|&&v| v >= mesh.vertices.len()) {
            return Err(Error::InvalidArgument(format!(
                "cell {e} references missing vertex {v}"
            )));
        }
        for (lf, local) in cell.kind.faces().iter().enumerate() {
            let global: Vec<usize> = local.iter().map(|&l| cell.vertices[l]).collect();
            incidence
                .entry(face_key(&global))
                .or_default()
                .push((e, lf));
        }
    }

    let mut faces = Vec::with_capacity(incidence.len());
    let mut element_faces: Vec<Vec<Option<ElementFace>>> = mesh
        .cells
        .iter()
        .map(|c| vec![None; c.kind.n_faces()])
        .collect();

    for (key, mut inc) in incidence {
        if inc.len() > 2 {
            let vertices = key.iter().copied().filter(|&v| v != usize::MAX).collect();
            return Err(Error::NonManifold {
                vertices,
                count: inc.len(),
            });
        }
        inc.sort_unstable();
        let (owner, owner_local) = inc[0];
        let cell = &mesh.cells[owner];
        let local = cell.kind.faces()[owner_local];
        let mut cycle: Vec<usize> = local.iter().map(|&l| cell.vertices[l]).collect();
        let start = (0..cycle.len()).min_by_key(|&i| cycle[i]).unwrap();
        cycle.rotate_left(start);

        let pts: Vec<Point3<f64>> = cycle.iter().map(|&v| mesh.vertices[v]).collect();
        let an = polygon_area_normal(&pts);
        let area = an.norm();
        if area <= 0.0 || !area.is_finite() {
            return Err(Error::Geometry {
                element: owner,
                reason: format!("degenerate face {cycle:?}"),
            });
        }
        let normal = an / area;
        let (t1, t2) = tangent_frame(&normal);
        let centroid =
            Point3::from(pts.iter().map(|p| p.coords).sum::<Vector3<f64>>() / pts.len() as f64);

        let (neighbor, neighbor_local) = match inc.get(1) {
            Some(&(e, l)) => (Some(e), Some(l)),
            None => (None, None),
        };
        let tag = if neighbor.is_some() {
            BoundaryTag::Interior
        } else {
            mesh.boundary_markers
                .get(&key)
                .copied()
                .filter(|t| *t != BoundaryTag::Interior)
                .unwrap_or(BoundaryTag::Pec)
        };
        let fid = faces.len();
        let kind = if cycle.len() == 4 {
            CellKind::Quadrilateral
        } else {
            CellKind::Triangle
        };
        for &(e, lf) in &inc {
            let cv = &mesh.cells[e].vertices;
            let mut corners = [usize::MAX; 4];
            for (k, v) in cycle.iter().enumerate() {
                corners[k] = cv.iter().position(|w| w == v).unwrap();
            }
            element_faces[e][lf] = Some(ElementFace {
                face: fid,
                is_owner: e == owner,
                corners,
            });
        }
        faces.push(Face {
            kind,
            vertices: cycle,
            owner,
            owner_local,
            neighbor,
            neighbor_local,
            normal,
            t1,
            t2,
            area,
            centroid,
            tag,
        });
    }

    mesh.faces = faces;
    mesh.element_faces = element_faces
        .into_iter()
        .map(|v| v.into_iter().map(|f| f.unwrap()).collect())
        .collect();
    Ok(mesh)
}
