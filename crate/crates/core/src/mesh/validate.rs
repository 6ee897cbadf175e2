use std::collections::BTreeMap;
use std::fmt;

use nalgebra::Vector3;

use super::{face_key, polygon_area_normal, FaceKey, Mesh};
use crate::basis::{make_quadrature, map_physical};

#[derive(Clone, Debug, PartialEq)]
pub enum Diagnostic {
    /// Non-positive Jacobian determinant at a quadrature point or vertex.
    Jacobian { element: usize, det: f64 },
    /// Face shared by more than two cells, or two cells with the same vertices.
    NonManifold { vertices: Vec<usize>, count: usize },
    /// Sum of outward area normals of a cell is not zero.
    OpenCell { element: usize, residual: f64 },
    /// Normal or tangent frame not orthonormal and right-handed.
    Frame { face: usize, defect: f64 },
    /// Interior face whose owner id is not smaller than its neighbor id.
    Orientation { face: usize },
    /// Face topology disagrees with the cells.
    Topology(String),
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::Jacobian { element, det } => {
                write!(f, "element {element}: Jacobian determinant {det:e}")
            }
            Diagnostic::NonManifold { vertices, count } => {
                write!(f, "face {vertices:?} shared by {count} cells")
            }
            Diagnostic::OpenCell { element, residual } => {
                write!(
                    f,
                    "element {element}: surface not closed (residual {residual:e})"
                )
            }
            Diagnostic::Frame { face, defect } => {
                write!(f, "face {face}: frame defect {defect:e}")
            }
            Diagnostic::Orientation { face } => write!(f, "face {face}: owner id >= neighbor id"),
            Diagnostic::Topology(s) => write!(f, "topology: {s}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub diagnostics: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.diagnostics.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.diagnostics.is_empty() {
            return writeln!(f, "mesh valid");
        }
        for d in &self.diagnostics {
            writeln!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Checks every mesh and face invariant and lists the violations.
/// Face-level checks only run when the face topology has been built.
pub fn validate(mesh: &Mesh) -> ValidationReport {
    let mut out = Vec::new();

    for (e, cell) in mesh.cells.iter().enumerate() {
        let pts = mesh.cell_points(e);
        let q = make_quadrature(cell.kind, 3).expect("low-order rule");
        let probes = q.points.iter().chain(cell.kind.reference_vertices().iter());
        let mut worst = f64::INFINITY;
        for xi in probes {
            let det = match map_physical(cell.kind, &pts, xi) {
                Ok(m) => m.det,
                Err(j) => j.det,
            };
            worst = worst.min(if det.is_nan() { -1.0 } else { det });
        }
        if worst <= 0.0 {
            out.push(Diagnostic::Jacobian {
                element: e,
                det: worst,
            });
        }

        let mut sum = Vector3::zeros();
        let mut total = 0.0;
        for local in cell.kind.faces() {
            let fp: Vec<_> = local.iter().map(|&l| pts[l]).collect();
            let an = polygon_area_normal(&fp);
            sum += an;
            total += an.norm();
        }
        if sum.norm() > 1e-12 * total {
            out.push(Diagnostic::OpenCell {
                element: e,
                residual: sum.norm(),
            });
        }
    }

    let mut count: BTreeMap<FaceKey, usize> = BTreeMap::new();
    let mut seen: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for cell in &mesh.cells {
        for local in cell.kind.faces() {
            let g: Vec<usize> = local.iter().map(|&l| cell.vertices[l]).collect();
            *count.entry(face_key(&g)).or_insert(0) += 1;
        }
        let mut key = cell.vertices.clone();
        key.sort_unstable();
        *seen.entry(key).or_insert(0) += 1;
    }
    for (vertices, c) in seen.into_iter().filter(|(_, c)| *c > 1) {
        out.push(Diagnostic::NonManifold { vertices, count: c });
    }
    for (key, c) in count.iter().filter(|(_, c)| **c > 2) {
        out.push(Diagnostic::NonManifold {
            vertices: key.iter().copied().filter(|&v| v != usize::MAX).collect(),
            count: *c,
        });
    }

    if !mesh.faces.is_empty() {
        if mesh.faces.len() != count.len() {
            out.push(Diagnostic::Topology(format!(
                "{} faces stored, {} distinct faces in cells",
                mesh.faces.len(),
                count.len()
            )));
        }
        for (i, f) in mesh.faces.iter().enumerate() {
            let n = &f.normal;
            let defect = [
                (n.norm() - 1.0).abs(),
                f.t1.dot(&f.t2).abs(),
                f.t1.dot(n).abs(),
                f.t2.dot(n).abs(),
                (f.t1.cross(&f.t2) - n).norm(),
            ]
            .into_iter()
            .fold(0.0, f64::max);
            if defect > 1e-14 {
                out.push(Diagnostic::Frame { face: i, defect });
            }
            if let Some(nb) = f.neighbor {
                if f.owner >= nb {
                    out.push(Diagnostic::Orientation { face: i });
                }
            }
            let expected = if f.neighbor.is_some() { 2 } else { 1 };
            if count.get(&face_key(&f.vertices)) != Some(&expected) {
                out.push(Diagnostic::Topology(format!("face {i} incidence mismatch")));
            }
        }
    }
    ValidationReport { diagnostics: out }
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;

    #[test]
    fn valid_cube_has_empty_report() {
        let m = generate_unit_cube_hex(5).unwrap();
        assert!(validate(&m).is_valid(), "{}", validate(&m));
    }

    #[test]
    fn inverted_hex_is_flagged() {
        let mut m = generate_unit_cube_hex(1).unwrap();
        m.cells[0].vertices.swap(0, 1);
        let r = validate(&m);
        assert!(r
            .diagnostics
            .iter()
            .any(|d| matches!(d, Diagnostic::Jacobian { element: 0, .. })));
    }

    #[test]
    fn duplicated_element_is_flagged() {
        let m = generate_unit_cube_hex(2).unwrap();
        let mut cells = m.cells.clone();
        cells.push(cells[3].clone());
        let raw = Mesh::new(m.vertices.clone(), cells);
        let r = validate(&raw);
        assert!(r
            .diagnostics
            .iter()
            .any(|d| matches!(d, Diagnostic::NonManifold { .. })));
    }
}
