//! Gmsh MSH 4.1 ASCII input and output (sections `$MeshFormat`,
//! `$PhysicalNames`, `$Entities`, `$Nodes`, `$Elements`; others are skipped).

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::Point3;

use super::{build_face_topology, face_key, validate, BoundaryTag, Cell, Diagnostic, Mesh};
use crate::basis::CellKind;
use crate::{Error, Result};

struct Section<'a> {
    name: &'a str,
    /// (line number, content)
    lines: Vec<(usize, &'a str)>,
    end_line: usize,
}

struct Tokens<'a> {
    path: &'a Path,
    items: Vec<(usize, &'a str)>,
    pos: usize,
    end_line: usize,
}

impl<'a> Tokens<'a> {
    fn new(path: &'a Path, s: &Section<'a>) -> Self {
        let items = s
            .lines
            .iter()
            .flat_map(|(l, text)| text.split_whitespace().map(move |t| (*l, t)))
            .collect();
        Tokens {
            path,
            items,
            pos: 0,
            end_line: s.end_line,
        }
    }

    fn err(&self, line: usize, reason: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line,
            reason: reason.into(),
        }
    }

    fn next<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let Some(&(line, tok)) = self.items.get(self.pos) else {
            return Err(self.err(
                self.end_line,
                format!("unexpected end of section, expected {what}"),
            ));
        };
        self.pos += 1;
        tok.parse()
            .map_err(|_| self.err(line, format!("expected {what}, found `{tok}`")))
    }

    fn line(&self) -> usize {
        self.items.get(self.pos).map_or(self.end_line, |t| t.0)
    }
}

fn split_sections<'a>(path: &Path, text: &'a str) -> Result<Vec<Section<'a>>> {
    let mut out = Vec::new();
    let mut current: Option<Section<'a>> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim();
        if let Some(name) = t.strip_prefix("$End") {
            match current.take() {
                Some(mut s) if s.name == name => {
                    s.end_line = line;
                    out.push(s);
                }
                _ => {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line,
                        reason: format!("unmatched section terminator `{t}`"),
                    })
                }
            }
        } else if let Some(name) = t.strip_prefix('$') {
            if let Some(s) = &current {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    reason: format!("section `${name}` opened inside `${}`", s.name),
                });
            }
            if name.is_empty() || name.contains(char::is_whitespace) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    reason: format!("malformed section header `{t}`"),
                });
            }
            current = Some(Section {
                name,
                lines: Vec::new(),
                end_line: line,
            });
        } else if let Some(s) = &mut current {
            if !t.is_empty() {
                s.lines.push((line, t));
            }
        } else if !t.is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                reason: "content outside of a section".into(),
            });
        }
    }
    if let Some(s) = current {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: text.lines().count(),
            reason: format!("section `${}` is not terminated", s.name),
        });
    }
    Ok(out)
}

fn element_info(ty: u32) -> Option<(usize, usize, Option<CellKind>)> {
    // (dimension, node count, kind of the straight-sided cell)
    Some(match ty {
        15 => (0, 1, None),
        1 => (1, 2, None),
        8 => (1, 3, None),
        2 => (2, 3, Some(CellKind::Triangle)),
        9 => (2, 6, Some(CellKind::Triangle)),
        3 => (2, 4, Some(CellKind::Quadrilateral)),
        10 => (2, 9, Some(CellKind::Quadrilateral)),
        16 => (2, 8, Some(CellKind::Quadrilateral)),
        4 => (3, 4, Some(CellKind::Tetrahedron)),
        11 => (3, 10, Some(CellKind::Tetrahedron)),
        5 => (3, 8, Some(CellKind::Hexahedron)),
        12 => (3, 27, Some(CellKind::Hexahedron)),
        17 => (3, 20, Some(CellKind::Hexahedron)),
        _ => return None,
    })
}

pub fn import_gmsh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_gmsh(&text, path)
}

/// Parses MSH 4.1 text. Volume cells become mesh cells; their physical tag
/// (or entity tag) becomes the region id. Surface elements in physical groups
/// named `PEC` or `ABC` classify boundary faces. High-order cells are read
/// with their corner nodes only.
pub fn parse_gmsh(text: &str, path: impl AsRef<Path>) -> Result<Mesh> {
    let path: PathBuf = path.as_ref().to_path_buf();
    let sections = split_sections(&path, text)?;

    let mut phys_names: HashMap<(usize, i64), String> = HashMap::new();
    let mut entity_phys: HashMap<(usize, i64), Vec<i64>> = HashMap::new();
    let mut nodes: HashMap<usize, Point3<f64>> = HashMap::new();
    // (dim, entity tag, kind, corner node tags)
    let mut elements: Vec<(usize, i64, CellKind, Vec<usize>)> = Vec::new();
    let mut saw_format = false;

    for s in &sections {
        let mut tk = Tokens::new(&path, s);
        match s.name {
            "MeshFormat" => {
                let version: String = tk.next("version")?;
                let line = tk.line();
                let file_type: u32 = tk.next("file type")?;
                let _size: u32 = tk.next("data size")?;
                if !version.starts_with("4.1") {
                    return Err(tk.err(s.lines[0].0, format!("unsupported MSH version {version}")));
                }
                if file_type != 0 {
                    return Err(tk.err(line, "binary MSH files are not supported"));
                }
                saw_format = true;
            }
            "PhysicalNames" => {
                let n: usize = tk.next("number of physical names")?;
                if s.lines.len() != n + 1 {
                    return Err(tk.err(s.end_line, format!("expected {n} physical names")));
                }
                for &(line, l) in &s.lines[1..] {
                    let mut it = l.splitn(3, char::is_whitespace);
                    let dim = it.next().and_then(|t| t.parse().ok());
                    let tag = it.next().and_then(|t| t.parse().ok());
                    let name = it.next().map(|t| t.trim().trim_matches('"').to_string());
                    match (dim, tag, name) {
                        (Some(d), Some(t), Some(nm)) => {
                            phys_names.insert((d, t), nm);
                        }
                        _ => return Err(tk.err(line, "malformed physical name")),
                    }
                }
            }
            "Entities" => {
                let counts: [usize; 4] = [
                    tk.next("point count")?,
                    tk.next("curve count")?,
                    tk.next("surface count")?,
                    tk.next("volume count")?,
                ];
                for (dim, &count) in counts.iter().enumerate() {
                    for _ in 0..count {
                        let tag: i64 = tk.next("entity tag")?;
                        let nbox = if dim == 0 { 3 } else { 6 };
                        for _ in 0..nbox {
                            tk.next::<f64>("bounding box")?;
                        }
                        let np: usize = tk.next("physical tag count")?;
                        let mut phys = Vec::with_capacity(np);
                        for _ in 0..np {
                            phys.push(tk.next::<i64>("physical tag")?);
                        }
                        if dim > 0 {
                            let nb: usize = tk.next("bounding entity count")?;
                            for _ in 0..nb {
                                tk.next::<i64>("bounding entity")?;
                            }
                        }
                        entity_phys.insert((dim, tag), phys);
                    }
                }
            }
            "Nodes" => {
                let blocks: usize = tk.next("entity block count")?;
                let _total: usize = tk.next("node count")?;
                tk.next::<usize>("min node tag")?;
                tk.next::<usize>("max node tag")?;
                for _ in 0..blocks {
                    let dim: usize = tk.next("entity dimension")?;
                    tk.next::<i64>("entity tag")?;
                    let parametric: u32 = tk.next("parametric flag")?;
                    let n: usize = tk.next("block node count")?;
                    let mut tags = Vec::with_capacity(n);
                    for _ in 0..n {
                        tags.push(tk.next::<usize>("node tag")?);
                    }
                    for t in tags {
                        let x = tk.next("x")?;
                        let y = tk.next("y")?;
                        let z = tk.next("z")?;
                        if parametric == 1 {
                            for _ in 0..dim {
                                tk.next::<f64>("parametric coordinate")?;
                            }
                        }
                        nodes.insert(t, Point3::new(x, y, z));
                    }
                }
            }
            "Elements" => {
                let blocks: usize = tk.next("entity block count")?;
                let _total: usize = tk.next("element count")?;
                tk.next::<usize>("min element tag")?;
                tk.next::<usize>("max element tag")?;
                for _ in 0..blocks {
                    let dim: usize = tk.next("entity dimension")?;
                    let etag: i64 = tk.next("entity tag")?;
                    let line = tk.line();
                    let ty: u32 = tk.next("element type")?;
                    let n: usize = tk.next("block element count")?;
                    let Some((tdim, nn, kind)) = element_info(ty) else {
                        return Err(tk.err(line, format!("unsupported element type {ty}")));
                    };
                    if tdim != dim {
                        return Err(tk.err(line, format!("element type {ty} in a {dim}-d entity")));
                    }
                    for _ in 0..n {
                        tk.next::<usize>("element tag")?;
                        let mut v = Vec::with_capacity(nn);
                        for _ in 0..nn {
                            v.push(tk.next::<usize>("node tag")?);
                        }
                        if let Some(kind) = kind {
                            v.truncate(kind.n_vertices());
                            elements.push((dim, etag, kind, v));
                        }
                    }
                }
            }
            _ => {}
        }
    }
    if !saw_format {
        return Err(Error::Parse {
            path,
            line: 1,
            reason: "missing $MeshFormat section".into(),
        });
    }

    let has_groups = entity_phys.values().any(|p| !p.is_empty());
    let has_surfaces = elements.iter().any(|e| e.0 == 2);
    if has_surfaces && !has_groups && elements.iter().any(|e| e.0 == 3) {
        return Err(Error::Classification(
            "surface and volume cells present but no physical groups to classify them".into(),
        ));
    }

    let physical_of = |dim: usize, etag: i64| {
        entity_phys
            .get(&(dim, etag))
            .and_then(|p| p.first())
            .copied()
    };

    // keep only nodes referenced by volume cells, in tag order
    let mut used: Vec<usize> = elements
        .iter()
        .filter(|e| e.0 == 3)
        .flat_map(|e| e.3.iter().copied())
        .collect();
    used.sort_unstable();
    used.dedup();
    let mut index = HashMap::with_capacity(used.len());
    let mut vertices = Vec::with_capacity(used.len());
    for t in used {
        let Some(p) = nodes.get(&t) else {
            return Err(Error::Parse {
                path,
                line: 0,
                reason: format!("element references undefined node {t}"),
            });
        };
        index.insert(t, vertices.len());
        vertices.push(*p);
    }

    let mut cells = Vec::new();
    let mut region_names = BTreeMap::new();
    let mut markers = BTreeMap::new();
    for (dim, etag, kind, v) in &elements {
        match dim {
            3 => {
                let region = physical_of(3, *etag).unwrap_or(*etag);
                let region = u32::try_from(region)
                    .map_err(|_| Error::Classification(format!("negative region tag {region}")))?;
                if let Some(name) = phys_names.get(&(3, region as i64)) {
                    region_names.insert(region, name.clone());
                }
                cells.push(Cell {
                    kind: *kind,
                    vertices: v.iter().map(|t| index[t]).collect(),
                    region,
                });
            }
            2 => {
                let Some(p) = physical_of(2, *etag) else {
                    continue;
                };
                let tag = match phys_names.get(&(2, p)).map(String::as_str) {
                    Some("PEC") => BoundaryTag::Pec,
                    Some("ABC") => BoundaryTag::Absorbing,
                    _ => continue,
                };
                let ids: Option<Vec<usize>> = v.iter().map(|t| index.get(t).copied()).collect();
                if let Some(ids) = ids {
                    markers.insert(face_key(&ids), tag);
                }
            }
            _ => {}
        }
    }
    if cells.is_empty() {
        return Err(Error::Classification("no volume cells in mesh".into()));
    }

    let mut mesh = Mesh::new(vertices, cells);
    mesh.boundary_markers = markers;
    mesh.region_names = region_names;
    let mesh = build_face_topology(mesh)?;
    let report = validate(&mesh);
    for d in &report.diagnostics {
        if let Diagnostic::Jacobian { element, det } = d {
            return Err(Error::Geometry {
                element: *element,
                reason: format!("non-positive Jacobian determinant {det:e}"),
            });
        }
    }
    if !report.is_valid() {
        return Err(Error::Classification(format!("invalid mesh: {report}")));
    }
    Ok(mesh)
}

fn gmsh_type(kind: CellKind) -> u32 {
    match kind {
        CellKind::Triangle => 2,
        CellKind::Quadrilateral => 3,
        CellKind::Tetrahedron => 4,
        CellKind::Hexahedron => 5,
    }
}

/// Serializes a mesh as MSH 4.1 ASCII. Coordinates are written in shortest
/// round-trip form, so re-import reproduces them bitwise. Boundary faces are
/// written as surface elements in the physical groups `PEC` and `ABC`.
pub fn export_gmsh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, gmsh_string(mesh)).map_err(|e| Error::io(path, e))
}

pub fn gmsh_string(mesh: &Mesh) -> String {
    let regions = mesh.regions();
    let boundary: Vec<(BoundaryTag, i64, &str)> = [
        (BoundaryTag::Pec, 1, "PEC"),
        (BoundaryTag::Absorbing, 2, "ABC"),
    ]
    .into_iter()
    .filter(|(t, _, _)| mesh.faces.iter().any(|f| f.is_boundary() && f.tag == *t))
    .collect();

    let mut s = String::new();
    s.push_str("$MeshFormat\n4.1 0 8\n$EndMeshFormat\n");
    let _ = writeln!(s, "$PhysicalNames\n{}", regions.len() + boundary.len());
    for (_, tag, name) in &boundary {
        let _ = writeln!(s, "2 {tag} \"{name}\"");
    }
    for r in &regions {
        let name = mesh
            .region_names
            .get(r)
            .cloned()
            .unwrap_or_else(|| format!("region{r}"));
        let _ = writeln!(s, "3 {r} \"{name}\"");
    }
    s.push_str("$EndPhysicalNames\n");

    let _ = writeln!(s, "$Entities\n0 0 {} {}", boundary.len(), regions.len());
    for (_, tag, _) in &boundary {
        let _ = writeln!(s, "{tag} 0 0 0 0 0 0 1 {tag} 0");
    }
    for r in &regions {
        let _ = writeln!(s, "{r} 0 0 0 0 0 0 1 {r} 0");
    }
    s.push_str("$EndEntities\n");

    let nv = mesh.vertices.len();
    let _ = writeln!(s, "$Nodes\n1 {nv} 1 {nv}\n3 {} 0 {nv}", regions[0]);
    for i in 0..nv {
        let _ = writeln!(s, "{}", i + 1);
    }
    for p in &mesh.vertices {
        let _ = writeln!(s, "{:e} {:e} {:e}", p.x, p.y, p.z);
    }
    s.push_str("$EndNodes\n");

    // blocks: maximal runs of cells with equal (region, kind), then boundary groups
    let mut blocks: Vec<(usize, i64, u32, Vec<Vec<usize>>)> = Vec::new();
    for c in &mesh.cells {
        let ty = gmsh_type(c.kind);
        match blocks.last_mut() {
            Some(b) if b.1 == c.region as i64 && b.2 == ty => b.3.push(c.vertices.clone()),
            _ => blocks.push((3, c.region as i64, ty, vec![c.vertices.clone()])),
        }
    }
    for (t, tag, _) in &boundary {
        for kind in [CellKind::Triangle, CellKind::Quadrilateral] {
            let items: Vec<Vec<usize>> = mesh
                .faces
                .iter()
                .filter(|f| f.is_boundary() && f.tag == *t && f.kind == kind)
                .map(|f| f.vertices.clone())
                .collect();
            if !items.is_empty() {
                blocks.push((2, *tag, gmsh_type(kind), items));
            }
        }
    }
    let ne: usize = blocks.iter().map(|b| b.3.len()).sum();
    let _ = writeln!(s, "$Elements\n{} {ne} 1 {ne}", blocks.len());
    let mut id = 1;
    for (dim, etag, ty, items) in &blocks {
        let _ = writeln!(s, "{dim} {etag} {ty} {}", items.len());
        for v in items {
            let _ = write!(s, "{id}");
            for x in v {
                let _ = write!(s, " {}", x + 1);
            }
            s.push('\n');
            id += 1;
        }
    }
    s.push_str("$EndElements\n");
    s
}
