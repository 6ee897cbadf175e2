use nalgebra::{DMatrix, Matrix3, Point3, Vector3};

use super::{Discretization, Formulation};
use crate::basis::{face_to_cell, map_face, map_physical};
use crate::mesh::BoundaryTag;
use crate::Result;

/// Dense blocks of one element.
///
/// With `u` the first field (`H` or `u = μ⁻¹∇×E`), the element equations are
///
/// ```text
/// [ s·a  c        ] [u]   [d]
/// [ f    e/Δt + g ] [E] + [h] Λ = r
/// [ i    j        ] [u,E] + l Λ  = r_Λ
/// ```
///
/// with `s = 1/Δt` for the mixed formulation and `s = 1` for the
/// electric-field formulation. `i` and `j` equal `±dᵀ` and `±hᵀ`, see
/// [`ElementOperator::signs`].
#[derive(Clone, Debug)]
pub struct ElementOperator {
    pub formulation: Formulation,
    pub n_basis: usize,
    /// Scalar mass matrix `∫ φ_i φ_j`.
    pub mass: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub f: DMatrix<f64>,
    pub e: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub i: DMatrix<f64>,
    pub j: DMatrix<f64>,
    pub l: DMatrix<f64>,
}

impl ElementOperator {
    pub fn n_local(&self) -> usize {
        6 * self.n_basis
    }

    pub fn n_trace(&self) -> usize {
        self.l.nrows()
    }

    /// Signs `(t_u, t_E)` such that `[i j] = (T [d; h])ᵀ` with
    /// `T = diag(t_u, t_E)`. `T` times the local block is symmetric.
    pub fn signs(&self) -> (f64, f64) {
        match self.formulation {
            Formulation::Mixed => (-1.0, 1.0),
            Formulation::ElectricField => (1.0, -1.0),
        }
    }

    /// The upper-left 2×2 block for time step `dt`.
    pub fn local_block(&self, dt: f64) -> DMatrix<f64> {
        let n = 3 * self.n_basis;
        let s = match self.formulation {
            Formulation::Mixed => 1.0 / dt,
            Formulation::ElectricField => 1.0,
        };
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&(&self.a * s));
        m.view_mut((0, n), (n, n)).copy_from(&self.c);
        m.view_mut((n, 0), (n, n)).copy_from(&self.f);
        m.view_mut((n, n), (n, n))
            .copy_from(&(&self.e / dt + &self.g));
        m
    }

    /// Trace-to-field coupling `[d; h]`.
    pub fn coupling(&self) -> DMatrix<f64> {
        let n = 3 * self.n_basis;
        let mut x = DMatrix::zeros(2 * n, self.n_trace());
        x.view_mut((0, 0), (n, self.n_trace())).copy_from(&self.d);
        x.view_mut((n, 0), (n, self.n_trace())).copy_from(&self.h);
        x
    }

    /// Field-to-trace rows `[i j]`.
    pub fn trace_rows(&self) -> DMatrix<f64> {
        let n = 3 * self.n_basis;
        let mut y = DMatrix::zeros(self.n_trace(), 2 * n);
        y.view_mut((0, 0), (self.n_trace(), n)).copy_from(&self.i);
        y.view_mut((0, n), (self.n_trace(), n)).copy_from(&self.j);
        y
    }
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    let (i, j, k) = (i as i32, j as i32, k as i32);
    ((j - i) * (k - j) * (k - i)) as f64 / 2.0
}

/// Quadrature data of one face seen from one of its elements.
pub(crate) struct FaceQuadrature {
    pub face: usize,
    /// Outward normal of the element.
    pub normal: Vector3<f64>,
    pub tangents: [Vector3<f64>; 2],
    /// Reference coordinates in the element.
    pub xi: Vec<[f64; 3]>,
    #[allow(dead_code)]
    pub points: Vec<Point3<f64>>,
    /// Physical weights.
    pub weights: Vec<f64>,
}

pub(crate) fn face_quadrature(disc: &Discretization, e: usize, lf: usize) -> FaceQuadrature {
    let mesh = &disc.mesh;
    let ef = mesh.element_faces[e][lf];
    let face = &mesh.faces[ef.face];
    let fs = disc.face_space(face.kind);
    let kind = mesh.cells[e].kind;
    let nfv = face.vertices.len();
    let corners: Vec<Point3<f64>> = face.vertices.iter().map(|&v| mesh.vertices[v]).collect();
    let refs: Vec<[f64; 3]> = (0..nfv)
        .map(|k| kind.reference_vertices()[ef.corners[k]])
        .collect();
    let mut xi = Vec::with_capacity(fs.quad.len());
    let mut points = Vec::with_capacity(fs.quad.len());
    let mut weights = Vec::with_capacity(fs.quad.len());
    for (st, w) in fs.quad.iter() {
        let fm = map_face(face.kind, &corners, st);
        xi.push(face_to_cell(face.kind, &refs, st));
        points.push(fm.point);
        weights.push(w * fm.area_normal.norm());
    }
    FaceQuadrature {
        face: ef.face,
        normal: face.normal * ef.sign(),
        tangents: [face.t1, face.t2],
        xi,
        points,
        weights,
    }
}

pub(crate) fn scalar_mass(disc: &Discretization, e: usize) -> Result<DMatrix<f64>> {
    let kind = disc.mesh.cells[e].kind;
    let sp = disc.cell_space(kind);
    let nb = sp.basis.len();
    let geo = disc.mesh.cell_points(e);
    let mut m = DMatrix::<f64>::zeros(nb, nb);
    for (q, (xi, w)) in sp.quad.iter().enumerate() {
        let map = map_physical(kind, &geo, xi).map_err(|j| j.in_element(e))?;
        let phi = &sp.phi[q * nb..(q + 1) * nb];
        let wq = w * map.det;
        for j in 0..nb {
            for i in 0..nb {
                m[(i, j)] += wq * phi[i] * phi[j];
            }
        }
    }
    Ok(m)
}

/// Assembles all blocks of element `e`, including the absorbing-boundary
/// augmentation of `l` on absorbing faces.
pub fn assemble_element(disc: &Discretization, e: usize) -> Result<ElementOperator> {
    let mesh = &disc.mesh;
    let kind = mesh.cells[e].kind;
    let sp = disc.cell_space(kind);
    let nb = sp.basis.len();
    let n = 3 * nb;
    let props = *disc.properties(e);
    let geo = mesh.cell_points(e);

    // scalar mass and K^c_ij = ∫ ∂_c φ_i φ_j
    let mut m = DMatrix::<f64>::zeros(nb, nb);
    let mut k = [
        DMatrix::<f64>::zeros(nb, nb),
        DMatrix::<f64>::zeros(nb, nb),
        DMatrix::<f64>::zeros(nb, nb),
    ];
    let mut grad = vec![Vector3::zeros(); nb];
    for (q, (xi, w)) in sp.quad.iter().enumerate() {
        let map = map_physical(kind, &geo, xi).map_err(|j| j.in_element(e))?;
        let jit = map.inverse_transpose();
        let wq = w * map.det;
        let phi = &sp.phi[q * nb..(q + 1) * nb];
        for (g, d) in grad.iter_mut().zip(&sp.dphi[q * nb..(q + 1) * nb]) {
            *g = jit * Vector3::new(d[0], d[1], d[2]);
        }
        for j in 0..nb {
            let wj = wq * phi[j];
            for i in 0..nb {
                m[(i, j)] += wj * phi[i];
                for c in 0..3 {
                    k[c][(i, j)] += wj * grad[i][c];
                }
            }
        }
    }

    // (∇×v, E): v = φ_i e_a, E = φ_j e_b
    let mut curl = DMatrix::zeros(n, n);
    for a in 0..3 {
        for b in 0..3 {
            if a == b {
                continue;
            }
            let c = 3 - a - b;
            let s = levi_civita(b, c, a);
            for j in 0..nb {
                for i in 0..nb {
                    curl[(a * nb + i, b * nb + j)] = s * k[c][(i, j)];
                }
            }
        }
    }

    let kron = |coef: &Matrix3<f64>| {
        let mut out = DMatrix::zeros(n, n);
        for a in 0..3 {
            for b in 0..3 {
                if coef[(a, b)] == 0.0 {
                    continue;
                }
                for j in 0..nb {
                    for i in 0..nb {
                        out[(a * nb + i, b * nb + j)] = coef[(a, b)] * m[(i, j)];
                    }
                }
            }
        }
        out
    };

    let faces = &mesh.element_faces[e];
    let n_trace: usize = faces
        .iter()
        .map(|ef| 2 * disc.dofs.face_basis[ef.face])
        .sum();
    let mut g = DMatrix::zeros(n, n);
    let mut dmat = DMatrix::zeros(n, n_trace);
    let mut hmat = DMatrix::zeros(n, n_trace);
    let mut l = DMatrix::zeros(n_trace, n_trace);
    let mut phi = vec![0.0; nb];
    let mut off = 0;
    for lf in 0..faces.len() {
        let fq = face_quadrature(disc, e, lf);
        let fs = disc.face_space(mesh.faces[fq.face].kind);
        let nf = fs.basis.len();
        let tau = disc.tau[fq.face];
        let nrm = fq.normal;
        let mut mff = DMatrix::<f64>::zeros(nb, nb);
        let mut p = DMatrix::<f64>::zeros(nb, nf);
        let mut mtt = DMatrix::<f64>::zeros(nf, nf);
        for (q, (xi, &w)) in fq.xi.iter().zip(&fq.weights).enumerate() {
            sp.basis.eval(xi, &mut phi);
            let psi = &fs.psi[q * nf..(q + 1) * nf];
            for j in 0..nb {
                for i in 0..nb {
                    mff[(i, j)] += w * phi[i] * phi[j];
                }
            }
            for kk in 0..nf {
                for i in 0..nb {
                    p[(i, kk)] += w * phi[i] * psi[kk];
                }
                for ll in 0..nf {
                    mtt[(kk, ll)] += w * psi[kk] * psi[ll];
                }
            }
        }
        // τ ⟨E_t, w_t⟩
        for a in 0..3 {
            for b in 0..3 {
                let proj = if a == b { 1.0 } else { 0.0 } - nrm[a] * nrm[b];
                if proj == 0.0 {
                    continue;
                }
                for j in 0..nb {
                    for i in 0..nb {
                        g[(a * nb + i, b * nb + j)] += tau * proj * mff[(i, j)];
                    }
                }
            }
        }
        // ⟨v × n, Λ⟩ and -τ ⟨w, Λ⟩ with Λ = ψ_k t_c
        for c in 0..2 {
            let t = fq.tangents[c];
            for a in 0..3 {
                let mut ea = Vector3::zeros();
                ea[a] = 1.0;
                let cross = ea.cross(&nrm).dot(&t);
                for kk in 0..nf {
                    for i in 0..nb {
                        dmat[(a * nb + i, off + c * nf + kk)] = cross * p[(i, kk)];
                        hmat[(a * nb + i, off + c * nf + kk)] = -tau * t[a] * p[(i, kk)];
                    }
                }
            }
        }
        let mut coef = tau;
        if mesh.faces[fq.face].tag == BoundaryTag::Absorbing {
            coef += props.admittance();
        }
        if disc.formulation == Formulation::ElectricField {
            coef = -tau;
        }
        for c in 0..2 {
            for ll in 0..nf {
                for kk in 0..nf {
                    l[(off + c * nf + kk, off + c * nf + ll)] = coef * mtt[(kk, ll)];
                }
            }
        }
        off += 2 * nf;
    }

    let eye = Matrix3::identity();
    let op = match disc.formulation {
        Formulation::Mixed => ElementOperator {
            formulation: Formulation::Mixed,
            n_basis: nb,
            a: kron(&(eye * props.mu)),
            e: kron(&(eye * props.eps)),
            f: -curl.transpose(),
            c: curl,
            g: g + kron(&props.sigma),
            i: -dmat.transpose(),
            j: hmat.transpose(),
            d: dmat,
            h: hmat,
            l,
            mass: m,
        },
        Formulation::ElectricField => ElementOperator {
            formulation: Formulation::ElectricField,
            n_basis: nb,
            a: kron(&(eye * props.mu)),
            e: kron(&props.sigma),
            f: curl.transpose(),
            c: -curl,
            g,
            i: -dmat.transpose(),
            j: -hmat.transpose(),
            d: -dmat,
            h: hmat,
            l,
            mass: m,
        },
    };
    Ok(op)
}

/// Key identifying elements whose operators coincide: same shape up to
/// translation, material, stabilization, boundary type and face frames.
pub fn operator_key(disc: &Discretization, e: usize, length_scale: f64) -> Vec<i64> {
    let mesh = &disc.mesh;
    let cell = &mesh.cells[e];
    let quant = |x: f64| (x / length_scale * 1e10).round() as i64;
    let mut key = vec![cell.kind as i64, cell.region as i64];
    let x0 = mesh.vertices[cell.vertices[0]];
    for &v in &cell.vertices[1..] {
        let d = mesh.vertices[v] - x0;
        key.extend(d.iter().map(|&x| quant(x)));
    }
    for ef in &mesh.element_faces[e] {
        let face = &mesh.faces[ef.face];
        key.push(disc.tau[ef.face].to_bits() as i64);
        key.push((face.tag == BoundaryTag::Absorbing) as i64);
        key.extend(ef.corners.iter().map(|&c| c as i64));
        for t in [face.t1, face.t2] {
            key.extend(t.iter().map(|&x| (x * 1e12).round() as i64));
        }
    }
    key
}
