//! Dense monolithic backward-Euler solve, assembled directly from the weak
//! forms, against the statically condensed solver.

use maxwell_hdg::basis::{face_to_cell, make_quadrature, map_face, map_physical};
use maxwell_hdg::mesh::{generate_box_hex, generate_unit_cube_tet, BoundaryTag};
use maxwell_hdg::*;
use nalgebra::{DMatrix, DVector, Matrix3, Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit(a: usize) -> Vector3<f64> {
    let mut v = Vector3::zeros();
    v[a] = 1.0;
    v
}

/// Global index of component `a`, basis function `i` of the first (`field = 0`)
/// or second (`field = 1`) volume field of element `e`.
fn vol(d: &Discretization, e: usize, field: usize, a: usize, i: usize) -> usize {
    let nb = d.dofs.element_basis[e];
    d.dofs.element_range(e).start + field * 3 * nb + a * nb + i
}

fn tr(d: &Discretization, f: usize, c: usize, k: usize) -> usize {
    d.dofs.n_interior + d.dofs.face_range(f).start + c * d.dofs.face_basis[f] + k
}

/// Monolithic system `A x = b` for one step from `old` to `t1`.
fn monolithic(
    d: &Discretization,
    dt: f64,
    old: &FieldState,
    problem: &Problem,
) -> (DMatrix<f64>, DVector<f64>) {
    let mesh = &d.mesh;
    let p = d.degree;
    let n = d.dofs.n_interior + d.dofs.n_trace;
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    let t1 = old.time + dt;
    let mixed = d.formulation == Formulation::Mixed;

    for e in 0..d.n_elements() {
        let kind = mesh.cells[e].kind;
        let basis = d.basis(e);
        let nb = basis.len();
        let geo = mesh.cell_points(e);
        let props = *d.properties(e);
        let rule = make_quadrature(kind, 2 * p + 1).unwrap();
        let mut phi = vec![0.0; nb];
        let mut dphi = vec![[0.0; 3]; nb];
        let old_first = old.first(d, e);
        let old_second = old.electric(d, e);
        for (xi, w) in rule.iter() {
            let map = map_physical(kind, &geo, xi).unwrap();
            let jit = map.jacobian.try_inverse().unwrap().transpose();
            let wq = w * map.det;
            basis.eval(xi, &mut phi);
            basis.eval_grad(xi, &mut dphi);
            let grad: Vec<Vector3<f64>> = dphi
                .iter()
                .map(|g| jit * Vector3::new(g[0], g[1], g[2]))
                .collect();
            let src = if mixed {
                problem.source.current(&map.point, t1)
            } else {
                problem.source.current_rate(&map.point, t1)
            };
            let u_old = (0..3).fold(Vector3::zeros(), |acc: Vector3<f64>, c| {
                acc + unit(c) * (0..nb).map(|j| phi[j] * old_first[c * nb + j]).sum::<f64>()
            });
            let e_old = (0..3).fold(Vector3::zeros(), |acc: Vector3<f64>, c| {
                acc + unit(c)
                    * (0..nb)
                        .map(|j| phi[j] * old_second[c * nb + j])
                        .sum::<f64>()
            });
            for ta in 0..3 {
                for i in 0..nb {
                    let v = unit(ta) * phi[i];
                    let curl_v = grad[i].cross(&unit(ta));
                    let rv = vol(d, e, 0, ta, i);
                    let rw = vol(d, e, 1, ta, i);
                    for sb in 0..3 {
                        for j in 0..nb {
                            let u = unit(sb) * phi[j];
                            let curl_u = grad[j].cross(&unit(sb));
                            let cu = vol(d, e, 0, sb, j);
                            let ce = vol(d, e, 1, sb, j);
                            if mixed {
                                // μ ∂H/∂t + ∇×E = 0
                                a[(rv, cu)] += wq * props.mu / dt * v.dot(&u);
                                a[(rv, ce)] += wq * curl_v.dot(&u);
                                // ε ∂E/∂t + σE − ∇×H = −i_s
                                a[(rw, ce)] +=
                                    wq * (props.eps / dt * v.dot(&u) + v.dot(&(props.sigma * u)));
                                a[(rw, cu)] -= wq * v.dot(&curl_u);
                            } else {
                                // μ u − ∇×E = 0
                                a[(rv, cu)] += wq * props.mu * v.dot(&u);
                                a[(rv, ce)] -= wq * curl_v.dot(&u);
                                // σ ∂E/∂t + ∇×u = −∂i_s/∂t
                                a[(rw, ce)] += wq * v.dot(&(props.sigma * u)) / dt;
                                a[(rw, cu)] += wq * v.dot(&curl_u);
                            }
                        }
                    }
                    if mixed {
                        b[rv] += wq * props.mu / dt * v.dot(&u_old);
                        b[rw] += wq * (props.eps / dt * v.dot(&e_old) - v.dot(&src));
                    } else {
                        b[rw] += wq * (v.dot(&(props.sigma * e_old)) / dt - v.dot(&src));
                    }
                }
            }
        }

        for ef in &mesh.element_faces[e] {
            let f = ef.face;
            let face = &mesh.faces[f];
            let nrm = if ef.is_owner {
                face.normal
            } else {
                -face.normal
            };
            let tangents = [face.t1, face.t2];
            let tau = d.tau[f];
            let fb = d.face_basis(f);
            let nf = fb.len();
            let corners: Vec<Point3<f64>> =
                face.vertices.iter().map(|&v| mesh.vertices[v]).collect();
            let refs: Vec<[f64; 3]> = (0..face.vertices.len())
                .map(|k| kind.reference_vertices()[ef.corners[k]])
                .collect();
            let frule = make_quadrature(face.kind, 2 * p + 1).unwrap();
            let mut psi = vec![0.0; nf];
            for (st, w) in frule.iter() {
                let fm = map_face(face.kind, &corners, st);
                let wq = w * fm.area_normal.norm();
                basis.eval(&face_to_cell(face.kind, &refs, st), &mut phi);
                fb.eval(st, &mut psi);
                let tangential = |x: Vector3<f64>| nrm.cross(&x.cross(&nrm));
                for ta in 0..3 {
                    for i in 0..nb {
                        let v = unit(ta) * phi[i];
                        let rv = vol(d, e, 0, ta, i);
                        let rw = vol(d, e, 1, ta, i);
                        for sb in 0..3 {
                            for j in 0..nb {
                                let u = unit(sb) * phi[j];
                                let ce = vol(d, e, 1, sb, j);
                                // ⟨w × n, τ (E_t × n)⟩
                                a[(rw, ce)] +=
                                    wq * tau * v.cross(&nrm).dot(&tangential(u).cross(&nrm));
                            }
                        }
                        for c in 0..2 {
                            for k in 0..nf {
                                let lam = tangents[c] * psi[k];
                                let cl = tr(d, f, c, k);
                                let sgn = if mixed { 1.0 } else { -1.0 };
                                a[(rv, cl)] += sgn * wq * v.cross(&nrm).dot(&lam);
                                a[(rw, cl)] -= wq * tau * v.cross(&nrm).dot(&lam.cross(&nrm));
                            }
                        }
                    }
                }
                // flux continuity rows
                for c in 0..2 {
                    for k in 0..nf {
                        let eta = tangents[c] * psi[k];
                        let row = tr(d, f, c, k);
                        for sb in 0..3 {
                            for j in 0..nb {
                                let u = unit(sb) * phi[j];
                                let cu = vol(d, e, 0, sb, j);
                                let ce = vol(d, e, 1, sb, j);
                                // mixed: −⟨η, Ĥ × n⟩, Ĥ = H − τ(E_t − Λ) × n
                                // E-field: −⟨η, û × n⟩, û = u + τ(E_t − Λ) × n
                                let s = if mixed { -1.0 } else { 1.0 };
                                a[(row, cu)] -= wq * eta.dot(&u.cross(&nrm));
                                a[(row, ce)] -=
                                    wq * s * tau * eta.dot(&tangential(u).cross(&nrm).cross(&nrm));
                            }
                        }
                        for l in 0..nf {
                            for c2 in 0..2 {
                                let lam2 = tangents[c2] * psi[l];
                                let s = if mixed { -1.0 } else { 1.0 };
                                a[(row, tr(d, f, c2, l))] +=
                                    wq * s * tau * eta.dot(&lam2.cross(&nrm).cross(&nrm));
                            }
                        }
                        if face.tag == BoundaryTag::Absorbing {
                            let y = (props.eps / props.mu).sqrt();
                            for c2 in 0..2 {
                                for l in 0..nf {
                                    a[(row, tr(d, f, c2, l))] +=
                                        wq * y * eta.dot(&(tangents[c2] * psi[l]));
                                }
                            }
                            if let Some(wave) = &problem.incident {
                                b[row] -= wq * eta.dot(&wave.abc_data(&fm.point, t1, &nrm));
                            }
                        }
                    }
                }
            }
        }
    }

    // Dirichlet faces: L² projection of the tangential datum
    for (f, face) in mesh.faces.iter().enumerate() {
        if face.tag != BoundaryTag::Pec {
            continue;
        }
        let fb = d.face_basis(f);
        let nf = fb.len();
        let corners: Vec<Point3<f64>> = face.vertices.iter().map(|&v| mesh.vertices[v]).collect();
        let rows: Vec<usize> = (0..2)
            .flat_map(|c| (0..nf).map(move |k| (c, k)))
            .map(|(c, k)| tr(d, f, c, k))
            .collect();
        for &r in &rows {
            a.row_mut(r).fill(0.0);
            b[r] = 0.0;
        }
        let frule = make_quadrature(face.kind, 2 * p + 1).unwrap();
        let mut psi = vec![0.0; nf];
        for (st, w) in frule.iter() {
            let fm = map_face(face.kind, &corners, st);
            let wq = w * fm.area_normal.norm();
            fb.eval(st, &mut psi);
            let g = problem
                .dirichlet
                .map(|fld| fld.e(&fm.point, t1))
                .unwrap_or_else(Vector3::zeros);
            for c in 0..2 {
                for k in 0..nf {
                    let r = tr(d, f, c, k);
                    for l in 0..nf {
                        a[(r, tr(d, f, c, l))] += wq * psi[k] * psi[l];
                    }
                    b[r] += wq * psi[k] * g.dot(&[face.t1, face.t2][c]);
                }
            }
        }
    }
    (a, b)
}

fn random_spd(rng: &mut ChaCha8Rng, scale: f64) -> Matrix3<f64> {
    let m = Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0));
    (m * m.transpose() + Matrix3::identity() * 0.2) * scale
}

fn random_mesh(rng: &mut ChaCha8Rng) -> Mesh {
    if rng.random_bool(0.5) {
        let mut n = [1usize; 3];
        for _ in 0..rng.random_range(0..4) {
            n[rng.random_range(0..3)] = 2;
        }
        let ext = [
            rng.random_range(0.5..2.0),
            rng.random_range(0.5..2.0),
            rng.random_range(0.5..2.0),
        ];
        generate_box_hex(n, ext).unwrap()
    } else {
        generate_unit_cube_tet(1, 0.0, rng.random()).unwrap()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Relative difference between one condensed step and the monolithic solve
/// on the random case `seed`.
pub fn check(seed: u64, formulation: Formulation, tau: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mesh = random_mesh(&mut rng);
    for c in mesh.cells.iter_mut() {
        c.region = rng.random_range(0..2);
    }
    let mixed = formulation == Formulation::Mixed;
    if mixed && rng.random_bool(0.5) {
        let side = rng.random_range(0..3);
        mesh.tag_boundary(|f| {
            if f.normal[side].abs() > 0.9 {
                BoundaryTag::Absorbing
            } else {
                BoundaryTag::Pec
            }
        });
    }
    let mut props = || {
        let sigma = if mixed && rng.random_bool(0.3) {
            Matrix3::zeros()
        } else {
            random_spd(&mut rng, 2.0)
        };
        MaterialProperties::new(
            rng.random_range(0.5..3.0),
            rng.random_range(0.5..3.0),
            sigma,
        )
        .unwrap()
    };
    let material = Material::uniform(props()).with_region(1, props());
    let degree = rng.random_range(1..3);
    let d =
        Discretization::new(mesh, formulation, degree, material, TauSpec::Constant(tau)).unwrap();
    let dt = rng.random_range(0.01..0.5);

    let mut old = FieldState::zeros(&d);
    old.time = rng.random_range(0.0..1.0);
    for v in old
        .interior
        .iter_mut()
        .chain(old.trace.iter_mut())
        .chain(old.magnetic.iter_mut())
    {
        *v = rng.random_range(-1.0..1.0);
    }
    let problem = Problem {
        source: SourceTerm::GaussianPulse {
            amplitude: rng.random_range(-2.0..2.0),
            direction: Vector3::new(rng.random(), rng.random(), rng.random()),
            center: Point3::new(0.5, 0.5, 0.5),
            width: 0.7,
            t0: 0.3,
            spread: 0.5,
        },
        dirichlet: seed.is_multiple_of(2).then_some(AnalyticalField::Cavity111),
        incident: Some(PlaneWave::new(0.7, 1.3, 0.8).unwrap()),
    };

    let sys = CondensedSystem::build(&d, dt, Parallelism::Sequential).unwrap();
    let new = sys.step(&d, &old, &problem).unwrap();

    let (a, b) = monolithic(&d, dt, &old, &problem);
    let x = a.lu().solve(&b).expect("monolithic system is nonsingular");
    let mut got = new.interior.clone();
    got.extend_from_slice(&new.trace);
    let diff: Vec<f64> = got.iter().zip(x.iter()).map(|(g, r)| g - r).collect();
    let mut rel = norm(&diff) / norm(x.as_slice());

    if !mixed {
        // H^{n+1} = H^n − Δt/2 (u^n + u^{n+1})
        let h: Vec<f64> = (0..d.n_elements())
            .flat_map(|e| {
                let nb3 = 3 * d.dofs.element_basis[e];
                let r = d.dofs.element_range(e).start;
                let old_h = old.magnetic_field(&d, e).to_vec();
                let (old_u, xs) = (old.first(&d, e).to_vec(), &x);
                (0..nb3)
                    .map(move |k| old_h[k] - 0.5 * dt * (old_u[k] + xs[r + k]))
                    .collect::<Vec<_>>()
            })
            .collect();
        let dh: Vec<f64> = h.iter().zip(&new.magnetic).map(|(a, b)| a - b).collect();
        rel = rel.max(norm(&dh) / norm(&h));
    }
    rel
}
