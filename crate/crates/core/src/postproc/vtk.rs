use std::fmt::Write;
use std::path::Path;

use nalgebra::{Point3, Vector3};

use crate::assembly::{eval_element, Discretization};
use crate::basis::CellKind;
use crate::mesh::Mesh;
use crate::{Error, Result};

/// Point values of an elementwise field, averaged over the elements sharing
/// each mesh vertex.
pub fn vertex_field<'a>(
    disc: &'a Discretization,
    field: impl Fn(usize) -> &'a [f64],
) -> Vec<Vector3<f64>> {
    let mesh = &disc.mesh;
    let mut sum = vec![Vector3::zeros(); mesh.vertices.len()];
    let mut count = vec![0usize; mesh.vertices.len()];
    for (e, cell) in mesh.cells.iter().enumerate() {
        let coeffs = field(e);
        for (lv, &v) in cell.vertices.iter().enumerate() {
            sum[v] += eval_element(disc, e, coeffs, &cell.kind.reference_vertices()[lv]);
            count[v] += 1;
        }
    }
    sum.iter()
        .zip(&count)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { *s })
        .collect()
}

fn vtk_cell_type(kind: CellKind) -> u8 {
    match kind {
        CellKind::Hexahedron => 12,
        CellKind::Tetrahedron => 10,
        CellKind::Quadrilateral => 9,
        CellKind::Triangle => 5,
    }
}

/// Legacy ASCII unstructured grid with vector point data.
pub fn vtk_string(mesh: &Mesh, fields: &[(&str, &[Vector3<f64>])]) -> Result<String> {
    let np = mesh.vertices.len();
    for (name, v) in fields {
        if v.len() != np {
            return Err(Error::InvalidArgument(format!(
                "field {name} has {} values for {np} points",
                v.len()
            )));
        }
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!(
                "invalid field name {name:?}"
            )));
        }
    }
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\nmaxwell-hdg\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {np} double");
    for p in &mesh.vertices {
        let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z);
    }
    let size: usize = mesh.cells.iter().map(|c| c.vertices.len() + 1).sum();
    let _ = writeln!(s, "CELLS {} {size}", mesh.cells.len());
    for c in &mesh.cells {
        let _ = write!(s, "{}", c.vertices.len());
        for v in &c.vertices {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "CELL_TYPES {}", mesh.cells.len());
    for c in &mesh.cells {
        let _ = writeln!(s, "{}", vtk_cell_type(c.kind));
    }
    if !fields.is_empty() {
        let _ = writeln!(s, "POINT_DATA {np}");
        for (name, v) in fields {
            let _ = writeln!(s, "VECTORS {name} double");
            for x in v.iter() {
                let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", x.x, x.y, x.z);
            }
        }
    }
    Ok(s)
}

pub fn export_vtk(
    mesh: &Mesh,
    fields: &[(&str, &[Vector3<f64>])],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let text = vtk_string(mesh, fields)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Contents of a legacy VTK file as written by [`vtk_string`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VtkData {
    pub points: Vec<Point3<f64>>,
    pub cells: Vec<Vec<usize>>,
    pub cell_types: Vec<u8>,
    pub fields: Vec<(String, Vec<Vector3<f64>>)>,
}

/// Minimal reader for unstructured grids with vector point data.
pub fn parse_vtk(text: &str) -> Result<VtkData> {
    let bad = |line: usize, what: &str| Error::Parse {
        path: "<vtk>".into(),
        line,
        reason: what.to_string(),
    };
    let lines: Vec<&str> = text.lines().collect();
    if !lines
        .first()
        .is_some_and(|l| l.starts_with("# vtk DataFile"))
    {
        return Err(bad(1, "missing VTK header"));
    }
    if lines.get(2).map(|l| l.trim()) != Some("ASCII") {
        return Err(bad(3, "only ASCII files are supported"));
    }
    let mut out = VtkData::default();
    let mut i = 3;
    let num = |s: Option<&str>, line: usize| -> Result<usize> {
        s.and_then(|t| t.parse().ok())
            .ok_or_else(|| bad(line, "expected a count"))
    };
    let vec3 = |l: &str, line: usize| -> Result<Vector3<f64>> {
        let v: Vec<f64> = l
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(line, "bad number"))?;
        if v.len() != 3 {
            return Err(bad(line, "expected three components"));
        }
        Ok(Vector3::new(v[0], v[1], v[2]))
    };
    let mut n_points = 0;
    while i < lines.len() {
        let mut tok = lines[i].split_whitespace();
        let key = tok.next().unwrap_or("");
        match key {
            "" | "DATASET" => i += 1,
            "POINTS" => {
                n_points = num(tok.next(), i + 1)?;
                for k in 0..n_points {
                    let l = lines
                        .get(i + 1 + k)
                        .ok_or_else(|| bad(i + 2 + k, "truncated POINTS"))?;
                    out.points.push(Point3::from(vec3(l, i + 2 + k)?));
                }
                i += 1 + n_points;
            }
            "CELLS" => {
                let n = num(tok.next(), i + 1)?;
                for k in 0..n {
                    let l = lines
                        .get(i + 1 + k)
                        .ok_or_else(|| bad(i + 2 + k, "truncated CELLS"))?;
                    let v: Vec<usize> = l
                        .split_whitespace()
                        .map(str::parse)
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad(i + 2 + k, "bad connectivity"))?;
                    if v.is_empty() || v[0] + 1 != v.len() || v[1..].iter().any(|&p| p >= n_points)
                    {
                        return Err(bad(i + 2 + k, "inconsistent cell"));
                    }
                    out.cells.push(v[1..].to_vec());
                }
                i += 1 + n;
            }
            "CELL_TYPES" => {
                let n = num(tok.next(), i + 1)?;
                for k in 0..n {
                    let l = lines
                        .get(i + 1 + k)
                        .ok_or_else(|| bad(i + 2 + k, "truncated CELL_TYPES"))?;
                    out.cell_types.push(
                        l.trim()
                            .parse()
                            .map_err(|_| bad(i + 2 + k, "bad cell type"))?,
                    );
                }
                i += 1 + n;
            }
            "POINT_DATA" => {
                if num(tok.next(), i + 1)? != n_points {
                    return Err(bad(i + 1, "POINT_DATA count differs from POINTS"));
                }
                i += 1;
            }
            "VECTORS" => {
                let name = tok
                    .next()
                    .ok_or_else(|| bad(i + 1, "missing field name"))?
                    .to_string();
                let mut v = Vec::with_capacity(n_points);
                for k in 0..n_points {
                    let l = lines
                        .get(i + 1 + k)
                        .ok_or_else(|| bad(i + 2 + k, "truncated VECTORS"))?;
                    v.push(vec3(l, i + 2 + k)?);
                }
                out.fields.push((name, v));
                i += 1 + n_points;
            }
            other => return Err(bad(i + 1, &format!("unknown section {other}"))),
        }
    }
    if out.cells.len() != out.cell_types.len() {
        return Err(bad(lines.len(), "CELLS and CELL_TYPES differ in length"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{project_volume, Formulation, TauSpec};
    use crate::mesh::generate_unit_cube_hex;
    use crate::physics::{Material, MaterialProperties};

    fn cube(n: usize) -> Discretization {
        let m = generate_unit_cube_hex(n).unwrap();
        let mat = Material::uniform(MaterialProperties::isotropic(1.0, 1.0, 0.0).unwrap());
        Discretization::new(m, Formulation::Mixed, 1, mat, TauSpec::Constant(1.0)).unwrap()
    }

    #[test]
    fn single_element_file() {
        let d = cube(1);
        let c = project_volume(&d, 0, |x| Vector3::new(x.x, 2.0 * x.y, -x.z)).unwrap();
        let e = vertex_field(&d, |_| &c);
        let text = vtk_string(&d.mesh, &[("E", &e)]).unwrap();
        let back = parse_vtk(&text).unwrap();
        assert_eq!(back.points.len(), 8);
        assert_eq!(back.cells.len(), 1);
        assert_eq!(back.cell_types, vec![12]);
        assert_eq!(back.fields[0].0, "E");
        for (p, v) in back.points.iter().zip(&back.fields[0].1) {
            assert!((v - Vector3::new(p.x, 2.0 * p.y, -p.z)).norm() < 1e-13);
        }
        assert_eq!(text, vtk_string(&d.mesh, &[("E", &e)]).unwrap());
    }

    #[test]
    fn averaged_continuous_field_is_exact() {
        let d = cube(3);
        let c: Vec<Vec<f64>> = (0..d.n_elements())
            .map(|e| project_volume(&d, e, |x| Vector3::new(1.0, x.x + x.y, x.z)).unwrap())
            .collect();
        let v = vertex_field(&d, |e| &c[e]);
        for (p, x) in d.mesh.vertices.iter().zip(&v) {
            assert!((x - Vector3::new(1.0, p.x + p.y, p.z)).norm() < 1e-12);
        }
    }

    #[test]
    fn round_trip_and_errors() {
        let d = cube(2);
        let z = vec![Vector3::new(1.5, -2.0, 1e-300); d.mesh.vertices.len()];
        let text = vtk_string(&d.mesh, &[("E", &z), ("H", &z)]).unwrap();
        let back = parse_vtk(&text).unwrap();
        assert_eq!(back.fields.len(), 2);
        assert_eq!(back.fields[1].1, z);
        assert_eq!(back.points, d.mesh.vertices);
        assert!(vtk_string(&d.mesh, &[("E", &z[1..])]).is_err());
        assert!(vtk_string(&d.mesh, &[("a b", &z)]).is_err());
        assert!(parse_vtk("hello").is_err());
        let truncated: String = text.lines().take(20).collect::<Vec<_>>().join("\n");
        assert!(parse_vtk(&truncated).is_err());
    }

    #[test]
    fn io_error_carries_path() {
        let d = cube(1);
        let err = export_vtk(&d.mesh, &[], "/nonexistent-dir/x.vtk").unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.vtk"));
    }
}
