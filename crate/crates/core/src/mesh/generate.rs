use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{build_face_topology, BoundaryTag, Cell, Mesh};
use crate::basis::CellKind;
use crate::{Error, Result};

fn grid_index(n: [usize; 3], i: usize, j: usize, k: usize) -> usize {
    i + (n[0] + 1) * (j + (n[1] + 1) * k)
}

fn grid_vertices(n: [usize; 3], extent: [f64; 3]) -> Vec<Point3<f64>> {
    let mut v = Vec::with_capacity((n[0] + 1) * (n[1] + 1) * (n[2] + 1));
    for k in 0..=n[2] {
        for j in 0..=n[1] {
            for i in 0..=n[0] {
                v.push(Point3::new(
                    extent[0] * (i as f64 / n[0] as f64),
                    extent[1] * (j as f64 / n[1] as f64),
                    extent[2] * (k as f64 / n[2] as f64),
                ));
            }
        }
    }
    v
}

/// Structured grid of `n[0] × n[1] × n[2]` hexahedra on `[0, a] × [0, b] × [0, d]`.
/// All boundary faces are PEC.
pub fn generate_box_hex(n: [usize; 3], extent: [f64; 3]) -> Result<Mesh> {
    if n.contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "grid size {n:?} must be positive"
        )));
    }
    if extent.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "box extent {extent:?} must be positive"
        )));
    }
    let vertices = grid_vertices(n, extent);
    let mut cells = Vec::with_capacity(n[0] * n[1] * n[2]);
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                let g = |a, b, c| grid_index(n, i + a, j + b, k + c);
                cells.push(Cell {
                    kind: CellKind::Hexahedron,
                    vertices: vec![
                        g(0, 0, 0),
                        g(1, 0, 0),
                        g(1, 1, 0),
                        g(0, 1, 0),
                        g(0, 0, 1),
                        g(1, 0, 1),
                        g(1, 1, 1),
                        g(0, 1, 1),
                    ],
                    region: 1,
                });
            }
        }
    }
    build_face_topology(Mesh::new(vertices, cells))
}

/// `n³` hexahedra of side `1/n` covering the unit cube.
pub fn generate_unit_cube_hex(n: usize) -> Result<Mesh> {
    generate_box_hex([n, n, n], [1.0, 1.0, 1.0])
}

fn signed_volume(p: &[Point3<f64>]) -> f64 {
    (p[1] - p[0]).cross(&(p[2] - p[0])).dot(&(p[3] - p[0])) / 6.0
}

/// Splits every cube of an `n³` grid into five tetrahedra. The central
/// tetrahedron of each cube joins the corners of even global parity, so the
/// face diagonals of neighbouring cubes agree.
fn five_tet_cells(n: usize, vertices: &[Point3<f64>]) -> Vec<Cell> {
    let nn = [n; 3];
    let mut cells = Vec::with_capacity(5 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let corner = |c: [usize; 3]| grid_index(nn, i + c[0], j + c[1], k + c[2]);
                let even = |c: [usize; 3]| (i + j + k + c[0] + c[1] + c[2]).is_multiple_of(2);
                let all: Vec<[usize; 3]> = (0..8)
                    .map(|m| [m & 1, (m >> 1) & 1, (m >> 2) & 1])
                    .collect();
                let mut tets: Vec<Vec<usize>> = Vec::with_capacity(5);
                tets.push(
                    all.iter()
                        .filter(|c| even(**c))
                        .map(|c| corner(*c))
                        .collect(),
                );
                for o in all.iter().filter(|c| !even(**c)) {
                    let mut t = vec![corner(*o)];
                    for d in 0..3 {
                        let mut c = *o;
                        c[d] ^= 1;
                        t.push(corner(c));
                    }
                    tets.push(t);
                }
                for mut t in tets {
                    let p: Vec<_> = t.iter().map(|&v| vertices[v]).collect();
                    if signed_volume(&p) < 0.0 {
                        t.swap(2, 3);
                    }
                    cells.push(Cell {
                        kind: CellKind::Tetrahedron,
                        vertices: t,
                        region: 1,
                    });
                }
            }
        }
    }
    cells
}

/// Unstructured-looking tetrahedral mesh of the unit cube: an `n³` grid split
/// into five tetrahedra per cube, with vertices displaced by up to
/// `jitter · h` in every coordinate that does not lie on the boundary.
/// Deterministic for a given `seed`.
pub fn generate_unit_cube_tet(n: usize, jitter: f64, seed: u64) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidArgument("grid size must be positive".into()));
    }
    if !(0.0..0.3).contains(&jitter) {
        return Err(Error::InvalidArgument(format!(
            "jitter {jitter} outside [0, 0.3)"
        )));
    }
    let mut vertices = grid_vertices([n; 3], [1.0; 3]);
    let h = 1.0 / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                let v = &mut vertices[grid_index([n; 3], i, j, k)];
                for (d, idx) in [i, j, k].into_iter().enumerate() {
                    let r: f64 = rng.random_range(-1.0..1.0);
                    if jitter > 0.0 && idx > 0 && idx < n {
                        v[d] += r * jitter * h;
                    }
                }
            }
        }
    }
    let cells = five_tet_cells(n, &vertices);
    build_face_topology(Mesh::new(vertices, cells))
}

/// Parameters of a tetrahedral ball mesh; see [`generate_ball_tet`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallMesh {
    /// Cubes per side of the underlying `[-1, 1]^3` grid.
    pub n: usize,
    pub radius: f64,
    /// Radius of a concentric inner ball assigned to region 2.
    pub inner_radius: Option<f64>,
}

/// Maps a point on the surface of `[-1, 1]^3` to the unit sphere with a
/// smooth, nearly equal-area map.
fn spherify(q: Vector3<f64>) -> Vector3<f64> {
    let (x2, y2, z2) = (q.x * q.x, q.y * q.y, q.z * q.z);
    Vector3::new(
        q.x * (1.0 - y2 / 2.0 - z2 / 2.0 + y2 * z2 / 3.0).sqrt(),
        q.y * (1.0 - z2 / 2.0 - x2 / 2.0 + z2 * x2 / 3.0).sqrt(),
        q.z * (1.0 - x2 / 2.0 - y2 / 2.0 + x2 * y2 / 3.0).sqrt(),
    )
}

/// Tetrahedral mesh of a ball: an `n³` grid on `[-1, 1]^3` is split into
/// five tetrahedra per cube, and the concentric cube shells `|p|_∞ = r` are
/// mapped onto spheres of radius `R r`. The outer surface is absorbing.
///
/// With an inner radius `r_i`, the shell `|p|_∞ = r_i / R` must be a grid
/// plane; cells inside it get region 2, the others region 1.
pub fn generate_ball_tet(spec: BallMesh) -> Result<Mesh> {
    let BallMesh {
        n,
        radius,
        inner_radius,
    } = spec;
    if n == 0 || !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "invalid ball mesh {spec:?}"
        )));
    }
    let rho = match inner_radius {
        Some(r) => {
            if !(r > 0.0 && r < radius) {
                return Err(Error::InvalidArgument(format!(
                    "inner radius {r} must lie in (0, {radius})"
                )));
            }
            let rho = r / radius;
            let i = n as f64 * (1.0 + rho) / 2.0;
            if (i - i.round()).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "inner radius {r} does not fall on a grid shell for n = {n}"
                )));
            }
            Some(rho)
        }
        None => None,
    };
    let cube = grid_vertices([n; 3], [2.0; 3]);
    let mut vertices = Vec::with_capacity(cube.len());
    let mut rinf = Vec::with_capacity(cube.len());
    for p in &cube {
        let p = p.coords - Vector3::repeat(1.0);
        let r = p.amax();
        rinf.push(r);
        if r == 0.0 {
            vertices.push(Point3::origin());
        } else {
            vertices.push(Point3::from(radius * r * spherify(p / r)));
        }
    }
    let mut cells = five_tet_cells(n, &vertices);
    for c in &mut cells {
        let p: Vec<_> = c.vertices.iter().map(|&v| vertices[v]).collect();
        if signed_volume(&p) < 0.0 {
            c.vertices.swap(2, 3);
        }
        if let Some(rho) = rho {
            // centroid in cube coordinates
            let g: Vector3<f64> = c
                .vertices
                .iter()
                .map(|&v| cube[v].coords)
                .sum::<Vector3<f64>>()
                / 4.0
                - Vector3::repeat(1.0);
            if g.amax() < rho {
                c.region = 2;
            }
        }
    }
    let mut mesh = build_face_topology(Mesh::new(vertices, cells))?;
    mesh.tag_boundary(|_| BoundaryTag::Absorbing);
    mesh.region_names.insert(1, "outer".into());
    if rho.is_some() {
        mesh.region_names.insert(2, "inner".into());
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cube() {
        let m = generate_unit_cube_hex(1).unwrap();
        assert_eq!(m.cells.len(), 1);
        assert_eq!(m.vertices.len(), 8);
        assert_eq!(m.n_boundary_faces(), 6);
        assert_eq!(m.n_interior_faces(), 0);
        assert!(m.faces.iter().all(|f| f.tag == BoundaryTag::Pec));
    }

    #[test]
    fn tet_cube_volume_and_counts() {
        for n in [1, 2, 3] {
            let m = generate_unit_cube_tet(n, 0.2, 11).unwrap();
            assert_eq!(m.cells.len(), 5 * n * n * n);
            let v: f64 = (0..m.cells.len()).map(|e| m.cell_volume(e)).sum();
            assert!((v - 1.0).abs() < 1e-12);
            assert_eq!(m.n_boundary_faces(), 12 * n * n);
        }
    }

    #[test]
    fn ball_volume_approaches_sphere() {
        let m = generate_ball_tet(BallMesh {
            n: 6,
            radius: 1.5,
            inner_radius: Some(0.5),
        })
        .unwrap();
        let v: f64 = (0..m.cells.len()).map(|e| m.cell_volume(e)).sum();
        let exact = 4.0 / 3.0 * std::f64::consts::PI * 1.5f64.powi(3);
        assert!(v < exact && v > 0.8 * exact, "{v} vs {exact}");
        assert_eq!(m.regions(), vec![1, 2]);
        assert!(m.faces.iter().filter(|f| f.is_boundary()).all(|f| f.tag
            == BoundaryTag::Absorbing
            && (f.centroid.coords.norm() - 1.5).abs() < 0.1));
        assert!(generate_ball_tet(BallMesh {
            n: 5,
            radius: 1.5,
            inner_radius: Some(0.5)
        })
        .is_err());
    }
}
