use nalgebra::{DMatrix, DVector, Point3, Vector3};

use super::{Discretization, Formulation};
use crate::basis::{map_face, map_physical};
use crate::physics::{PlaneWave, SourceTerm};
use crate::{Error, Result};

fn solve_spd(m: DMatrix<f64>, b: DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    m.cholesky()
        .map(|c| c.solve(&b))
        .ok_or_else(|| Error::InvalidArgument(format!("singular {what} mass matrix")))
}

/// Elementwise L² projection of a vector field; returns `3 nb` values,
/// component-major.
pub fn project_volume(
    disc: &Discretization,
    e: usize,
    f: impl Fn(&Point3<f64>) -> Vector3<f64>,
) -> Result<Vec<f64>> {
    let kind = disc.mesh.cells[e].kind;
    let sp = disc.cell_space(kind);
    let nb = sp.basis.len();
    let geo = disc.mesh.cell_points(e);
    let mut m = DMatrix::<f64>::zeros(nb, nb);
    let mut b = DMatrix::zeros(nb, 3);
    for (q, (xi, w)) in sp.error_quad.iter().enumerate() {
        let map = map_physical(kind, &geo, xi).map_err(|j| j.in_element(e))?;
        let phi = &sp.error_phi[q * nb..(q + 1) * nb];
        let wq = w * map.det;
        let v = f(&map.point);
        for i in 0..nb {
            for j in 0..nb {
                m[(i, j)] += wq * phi[i] * phi[j];
            }
            for a in 0..3 {
                b[(i, a)] += wq * phi[i] * v[a];
            }
        }
    }
    let x = solve_spd(m, b, "element")?;
    Ok(x.as_slice().to_vec())
}

/// L² projection of the tangential part `n × (f × n)` of a vector field
/// onto the trace space of face `f`; returns `2 nf` values (`t1` block
/// first).
pub fn project_trace(
    disc: &Discretization,
    face: usize,
    f: impl Fn(&Point3<f64>) -> Vector3<f64>,
) -> Vec<f64> {
    let fc = &disc.mesh.faces[face];
    let fs = disc.face_space(fc.kind);
    let nf = fs.basis.len();
    let corners: Vec<Point3<f64>> = fc.vertices.iter().map(|&v| disc.mesh.vertices[v]).collect();
    let mut m = DMatrix::<f64>::zeros(nf, nf);
    let mut b = DMatrix::zeros(nf, 2);
    for (q, (st, w)) in fs.quad.iter().enumerate() {
        let fm = map_face(fc.kind, &corners, st);
        let wq = w * fm.area_normal.norm();
        let psi = &fs.psi[q * nf..(q + 1) * nf];
        let v = f(&fm.point);
        let (v1, v2) = (v.dot(&fc.t1), v.dot(&fc.t2));
        for k in 0..nf {
            for l in 0..nf {
                m[(k, l)] += wq * psi[k] * psi[l];
            }
            b[(k, 0)] += wq * psi[k] * v1;
            b[(k, 1)] += wq * psi[k] * v2;
        }
    }
    let x = solve_spd(m, b, "face").expect("face mass matrix is positive definite");
    x.as_slice().to_vec()
}

/// Source part of the element right-hand side at time `t`: `-(w, i_s)` for
/// the mixed formulation, `-(w, ∂i_s/∂t)` for the electric-field one.
/// Returns `6 nb` values; the first field's rows are zero.
pub fn assemble_source(
    disc: &Discretization,
    e: usize,
    source: &SourceTerm,
    t: f64,
) -> Result<Vec<f64>> {
    let kind = disc.mesh.cells[e].kind;
    let sp = disc.cell_space(kind);
    let nb = sp.basis.len();
    let mut out = vec![0.0; 6 * nb];
    if source.is_none() {
        return Ok(out);
    }
    let geo = disc.mesh.cell_points(e);
    for (q, (xi, w)) in sp.quad.iter().enumerate() {
        let map = map_physical(kind, &geo, xi).map_err(|j| j.in_element(e))?;
        let v = match disc.formulation {
            Formulation::Mixed => source.current(&map.point, t),
            Formulation::ElectricField => source.current_rate(&map.point, t),
        };
        let wq = w * map.det;
        let phi = &sp.phi[q * nb..(q + 1) * nb];
        for a in 0..3 {
            for i in 0..nb {
                out[3 * nb + a * nb + i] -= wq * phi[i] * v[a];
            }
        }
    }
    Ok(out)
}

/// Incident-wave functional `-⟨η, g_inc⟩` on an absorbing face.
pub fn abc_rhs(disc: &Discretization, face: usize, wave: &PlaneWave, t: f64) -> Vec<f64> {
    let fc = &disc.mesh.faces[face];
    let fs = disc.face_space(fc.kind);
    let nf = fs.basis.len();
    let corners: Vec<Point3<f64>> = fc.vertices.iter().map(|&v| disc.mesh.vertices[v]).collect();
    let mut out = vec![0.0; 2 * nf];
    for (q, (st, w)) in fs.quad.iter().enumerate() {
        let fm = map_face(fc.kind, &corners, st);
        let wq = w * fm.area_normal.norm();
        let g = wave.abc_data(&fm.point, t, &fc.normal);
        let (g1, g2) = (g.dot(&fc.t1), g.dot(&fc.t2));
        let psi = &fs.psi[q * nf..(q + 1) * nf];
        for k in 0..nf {
            out[k] -= wq * psi[k] * g1;
            out[nf + k] -= wq * psi[k] * g2;
        }
    }
    out
}

/// Value of a `3 nb` element field at reference point `xi`.
pub fn eval_element(
    disc: &Discretization,
    e: usize,
    coeffs: &[f64],
    xi: &[f64; 3],
) -> Vector3<f64> {
    let basis = disc.basis(e);
    let nb = basis.len();
    let mut phi = vec![0.0; nb];
    basis.eval(xi, &mut phi);
    let phi = DVector::from_vec(phi);
    Vector3::new(
        phi.dot(&DVector::from_column_slice(&coeffs[..nb])),
        phi.dot(&DVector::from_column_slice(&coeffs[nb..2 * nb])),
        phi.dot(&DVector::from_column_slice(&coeffs[2 * nb..3 * nb])),
    )
}

/// Value of a `2 nf` trace field at face parameter `st`, as a 3-vector.
pub fn eval_trace(
    disc: &Discretization,
    face: usize,
    coeffs: &[f64],
    st: &[f64; 3],
) -> Vector3<f64> {
    let fc = &disc.mesh.faces[face];
    let basis = disc.face_basis(face);
    let nf = basis.len();
    let mut psi = vec![0.0; nf];
    basis.eval(st, &mut psi);
    let l1: f64 = psi.iter().zip(&coeffs[..nf]).map(|(a, b)| a * b).sum();
    let l2: f64 = psi
        .iter()
        .zip(&coeffs[nf..2 * nf])
        .map(|(a, b)| a * b)
        .sum();
    fc.t1 * l1 + fc.t2 * l2
}
