use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, Matrix3};

use super::sparse::{TraceMatrix, TracePattern};
use super::{FieldState, Problem};
use crate::assembly::{
    abc_rhs, assemble_element, assemble_source, operator_key, project_trace, Discretization,
    Formulation, NOT_FREE,
};
use crate::mesh::BoundaryTag;
use crate::par::{for_each_chunk_mut, map_indexed, try_map_indexed, Parallelism};
use crate::{Error, Result};

/// Per-operator data kept for time stepping.
#[derive(Clone, Debug)]
struct LocalSolver {
    /// Inverse of the local block.
    sinv: DMatrix<f64>,
    /// `S⁻¹ X`.
    z: DMatrix<f64>,
    /// Condensed element matrix; kept only where Dirichlet data enter.
    ke: Option<DMatrix<f64>>,
    mass: DMatrix<f64>,
    /// Coefficient of `M u^n` and `M E^n` in the right-hand side.
    first_coef: f64,
    second_coef: Matrix3<f64>,
    signs: (f64, f64),
    eps: f64,
    mu: f64,
}

/// Per-step diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time: f64,
    /// `½ (ε‖E‖² + μ‖H‖²)`.
    pub energy: f64,
    /// Relative residual of the trace solve.
    pub residual: f64,
}

/// Factorized condensed trace system for a fixed time step.
pub struct CondensedSystem {
    pub dt: f64,
    pub formulation: Formulation,
    pub mode: Parallelism,
    op_of_element: Vec<usize>,
    locals: Vec<LocalSolver>,
    /// Global trace indices of each element, local order.
    element_trace: Vec<Vec<usize>>,
    has_dirichlet: Vec<bool>,
    matrix: TraceMatrix,
    /// `K` is factorized as `sign · K` (negative definite for the
    /// electric-field formulation).
    sign: f64,
}

impl CondensedSystem {
    /// Assembles and factorizes the condensed system. Elements with equal
    /// geometry up to translation share one local operator.
    pub fn build(disc: &Discretization, dt: f64, mode: Parallelism) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "time step {dt} must be positive"
            )));
        }
        let mesh = &disc.mesh;
        let ne = disc.n_elements();
        let scale = mesh_length_scale(disc);

        let mut classes: HashMap<Vec<i64>, usize> = HashMap::new();
        let mut representative = Vec::new();
        let mut op_of_element = Vec::with_capacity(ne);
        for e in 0..ne {
            let key = operator_key(disc, e, scale);
            let next = representative.len();
            let id = *classes.entry(key).or_insert(next);
            if id == next {
                representative.push(e);
            }
            op_of_element.push(id);
        }
        drop(classes);

        let has_dirichlet: Vec<bool> = (0..ne)
            .map(|e| {
                mesh.element_faces[e]
                    .iter()
                    .any(|ef| disc.dofs.constrained[ef.face])
            })
            .collect();
        let mut needs_ke = vec![false; representative.len()];
        for e in 0..ne {
            needs_ke[op_of_element[e]] |= has_dirichlet[e];
        }

        let mut locals = try_map_indexed(representative.len(), mode, |o| {
            local_solver(disc, representative[o], dt)
        })?;
        let element_trace: Vec<Vec<usize>> =
            (0..ne).map(|e| disc.dofs.element_trace(mesh, e)).collect();

        let pattern = TracePattern::new(mesh, &disc.dofs);
        let matrix = TraceMatrix::assemble(pattern, mode, |pattern, f, out| {
            if disc.dofs.constrained[f] {
                return;
            }
            let face = &mesh.faces[f];
            let nf2 = 2 * disc.dofs.face_basis[f];
            for e in std::iter::once(face.owner).chain(face.neighbor) {
                let ke = locals[op_of_element[e]]
                    .ke
                    .as_ref()
                    .expect("kept until assembly");
                let efaces = &mesh.element_faces[e];
                let offsets = local_offsets(disc, e);
                let lf = efaces.iter().position(|ef| ef.face == f).unwrap();
                let of = offsets[lf];
                for (lg, ef) in efaces.iter().enumerate() {
                    let g = ef.face;
                    if g < f || disc.dofs.constrained[g] {
                        continue;
                    }
                    let og = offsets[lg];
                    let ng2 = 2 * disc.dofs.face_basis[g];
                    for m in 0..nf2 {
                        let k0 = if g == f { m } else { 0 };
                        for k in k0..ng2 {
                            out[pattern.local_position(nf2, f, m, g, k)] += ke[(og + k, of + m)];
                        }
                    }
                }
            }
        });

        for (o, l) in locals.iter_mut().enumerate() {
            if !needs_ke[o] {
                l.ke = None;
            }
        }
        let sign = match disc.formulation {
            Formulation::Mixed => 1.0,
            Formulation::ElectricField => -1.0,
        };
        let mut system = CondensedSystem {
            dt,
            formulation: disc.formulation,
            mode,
            op_of_element,
            locals,
            element_trace,
            has_dirichlet,
            matrix,
            sign,
        };
        system.matrix.factorize(sign)?;
        Ok(system)
    }

    /// Number of trace unknowns in the global system.
    pub fn n_free(&self) -> usize {
        self.matrix.pattern.n
    }

    /// Stored entries of the lower triangle.
    pub fn nnz(&self) -> usize {
        self.matrix.pattern.nnz()
    }

    /// Number of distinct local operators.
    pub fn n_operators(&self) -> usize {
        self.locals.len()
    }

    /// Lower-triangle entries `(row, column, value)` of the condensed matrix.
    pub fn lower_entries(&self) -> Vec<(usize, usize, f64)> {
        let p = &self.matrix.pattern;
        let mut out = Vec::with_capacity(p.nnz());
        for j in 0..p.n {
            for idx in p.col_ptr[j]..p.col_ptr[j + 1] {
                out.push((p.row_idx[idx], j, self.matrix.values[idx]));
            }
        }
        out
    }

    /// `K x` for a vector over the free trace unknowns.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.apply(x)
    }

    /// Local right-hand side `r` of element `e` at the new time level.
    fn local_rhs(
        &self,
        disc: &Discretization,
        state: &FieldState,
        problem: &Problem,
        e: usize,
        t: f64,
    ) -> Result<DVector<f64>> {
        let l = &self.locals[self.op_of_element[e]];
        let nb = disc.dofs.element_basis[e];
        let mut r = DVector::from_vec(assemble_source(disc, e, &problem.source, t)?);
        let first = state.first(disc, e);
        let second = state.electric(disc, e);
        for a in 0..3 {
            if l.first_coef != 0.0 {
                let u = DVector::from_column_slice(&first[a * nb..(a + 1) * nb]);
                let mu = &l.mass * u * l.first_coef;
                let mut rows = r.rows_mut(a * nb, nb);
                rows += &mu;
            }
            for b in 0..3 {
                let c = l.second_coef[(a, b)];
                if c == 0.0 {
                    continue;
                }
                let v = DVector::from_column_slice(&second[b * nb..(b + 1) * nb]);
                let mv = &l.mass * v * c;
                let mut rows = r.rows_mut(3 * nb + a * nb, nb);
                rows += &mv;
            }
        }
        Ok(r)
    }

    /// Advances `state` by one time step.
    pub fn step(
        &self,
        disc: &Discretization,
        state: &FieldState,
        problem: &Problem,
    ) -> Result<FieldState> {
        self.step_with_diagnostics(disc, state, problem)
            .map(|(s, _)| s)
    }

    /// Advances `state` and reports the relative residual of the trace
    /// solve.
    pub fn step_with_diagnostics(
        &self,
        disc: &Discretization,
        state: &FieldState,
        problem: &Problem,
    ) -> Result<(FieldState, f64)> {
        let mesh = &disc.mesh;
        let dofs = &disc.dofs;
        let t1 = state.time + self.dt;
        let ne = disc.n_elements();

        let mut lam = vec![0.0; dofs.n_trace];
        if let Some(field) = &problem.dirichlet {
            let fixed: Vec<usize> = (0..mesh.faces.len())
                .filter(|&f| dofs.constrained[f])
                .collect();
            let vals = map_indexed(fixed.len(), self.mode, |i| {
                project_trace(disc, fixed[i], |x| field.e(x, t1))
            });
            for (f, v) in fixed.into_iter().zip(vals) {
                lam[dofs.face_range(f)].copy_from_slice(&v);
            }
        }

        let rhs_parts = try_map_indexed(ne, self.mode, |e| {
            let l = &self.locals[self.op_of_element[e]];
            let r = self.local_rhs(disc, state, problem, e, t1)?;
            let n = r.len() / 2;
            let mut tr = r.clone();
            tr.rows_mut(0, n).scale_mut(l.signs.0);
            tr.rows_mut(n, n).scale_mut(l.signs.1);
            let mut fe = -(l.z.tr_mul(&tr));
            if self.has_dirichlet[e] {
                let idx = &self.element_trace[e];
                let v = DVector::from_iterator(
                    idx.len(),
                    idx.iter().map(|&g| {
                        if dofs.free[g] == NOT_FREE {
                            lam[g]
                        } else {
                            0.0
                        }
                    }),
                );
                fe -= l.ke.as_ref().expect("kept for Dirichlet elements") * v;
            }
            Ok::<_, Error>((r, fe))
        })?;

        let mut rhs = vec![0.0; dofs.n_free];
        if let Some(wave) = &problem.incident {
            for (f, face) in mesh.faces.iter().enumerate() {
                if face.tag != BoundaryTag::Absorbing {
                    continue;
                }
                for (k, v) in dofs.face_range(f).zip(abc_rhs(disc, f, wave, t1)) {
                    rhs[dofs.free[k]] += v;
                }
            }
        }
        for (e, (_, fe)) in rhs_parts.iter().enumerate() {
            for (k, &g) in self.element_trace[e].iter().enumerate() {
                let i = dofs.free[g];
                if i != NOT_FREE {
                    rhs[i] += fe[k];
                }
            }
        }

        let mut x = rhs.clone();
        self.matrix.solve_in_place(self.sign, &mut x);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Step {
                step: (t1 / self.dt).round() as usize,
                time: t1,
                reason: "non-finite trace solution".into(),
            });
        }
        let residual = if self.n_free() == 0 {
            0.0
        } else {
            let kx = self.matrix.apply(&x);
            let num: f64 = kx
                .iter()
                .zip(&rhs)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let den: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
            if den > 0.0 {
                num / den
            } else {
                num
            }
        };
        for (g, &i) in dofs.free.iter().enumerate() {
            if i != NOT_FREE {
                lam[g] = x[i];
            }
        }

        let mut next = FieldState {
            time: t1,
            interior: vec![0.0; dofs.n_interior],
            trace: lam,
            magnetic: Vec::new(),
        };
        let sizes: Vec<usize> = dofs.element_basis.iter().map(|nb| 6 * nb).collect();
        {
            let lam = &next.trace;
            for_each_chunk_mut(&mut next.interior, &sizes, self.mode, |e, out| {
                let l = &self.locals[self.op_of_element[e]];
                let idx = &self.element_trace[e];
                let lam_e = DVector::from_iterator(idx.len(), idx.iter().map(|&g| lam[g]));
                let u = &l.sinv * &rhs_parts[e].0 - &l.z * lam_e;
                out.copy_from_slice(u.as_slice());
            });
        }
        if self.formulation == Formulation::ElectricField {
            // ∂H/∂t = -u, trapezoidal in time
            let mut h = state.magnetic.clone();
            for e in 0..ne {
                let nb3 = 3 * dofs.element_basis[e];
                let o = dofs.element_offset[e] / 2;
                let old = state.first(disc, e);
                let new = next.first(disc, e);
                for k in 0..nb3 {
                    h[o + k] -= 0.5 * self.dt * (old[k] + new[k]);
                }
            }
            next.magnetic = h;
        }
        Ok((next, residual))
    }

    /// `½ (ε‖E‖² + μ‖H‖²)` over the mesh.
    pub fn energy(&self, disc: &Discretization, state: &FieldState) -> f64 {
        let parts = map_indexed(disc.n_elements(), self.mode, |e| {
            let l = &self.locals[self.op_of_element[e]];
            let nb = disc.dofs.element_basis[e];
            let quad = |v: &[f64]| -> f64 {
                (0..3)
                    .map(|a| {
                        let x = DVector::from_column_slice(&v[a * nb..(a + 1) * nb]);
                        x.dot(&(&l.mass * &x))
                    })
                    .sum()
            };
            0.5 * (l.eps * quad(state.electric(disc, e))
                + l.mu * quad(state.magnetic_field(disc, e)))
        });
        parts.iter().sum()
    }
}

fn local_offsets(disc: &Discretization, e: usize) -> Vec<usize> {
    let mut off = 0;
    disc.mesh.element_faces[e]
        .iter()
        .map(|ef| {
            let o = off;
            off += 2 * disc.dofs.face_basis[ef.face];
            o
        })
        .collect()
}

fn mesh_length_scale(disc: &Discretization) -> f64 {
    let v = &disc.mesh.vertices;
    if v.is_empty() {
        return 1.0;
    }
    let mut lo = v[0].coords;
    let mut hi = v[0].coords;
    for p in v {
        lo = lo.inf(&p.coords);
        hi = hi.sup(&p.coords);
    }
    (hi - lo).norm().max(f64::MIN_POSITIVE)
}

fn local_solver(disc: &Discretization, e: usize, dt: f64) -> Result<LocalSolver> {
    let op = assemble_element(disc, e)?;
    let s = op.local_block(dt);
    let sinv = s
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Solvability {
            element: e,
            reason: "singular local block".into(),
        })?;
    let x = op.coupling();
    let z = &sinv * &x;
    let mut ke = &op.l - op.trace_rows() * &z;
    // symmetric up to round-off
    let kt = ke.transpose();
    ke = (ke + kt) * 0.5;
    let props = disc.properties(e);
    let (first_coef, second_coef) = match disc.formulation {
        Formulation::Mixed => (props.mu / dt, Matrix3::identity() * (props.eps / dt)),
        Formulation::ElectricField => (0.0, props.sigma / dt),
    };
    let signs = op.signs();
    Ok(LocalSolver {
        sinv,
        z,
        ke: Some(ke),
        mass: op.mass,
        first_coef,
        second_coef,
        signs,
        eps: props.eps,
        mu: props.mu,
    })
}
