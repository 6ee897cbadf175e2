use nalgebra::Vector3;

use crate::assembly::{eval_element, face_quadrature, Discretization, Formulation};
use crate::solver::FieldState;

/// Mismatch of the numerical flux across interior faces.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TraceConsistency {
    /// `max |Ĥ⁺_t − Ĥ⁻_t| / max |Ĥ_t|` over interior face quadrature points
    /// (`û` for the electric-field formulation).
    pub flux_mismatch: f64,
    /// `max |Λ − Λ*| / max |Λ|`, where `Λ*` is the value implied by the two
    /// element states through flux continuity.
    pub trace_mismatch: f64,
}

/// Evaluates both one-sided numerical fluxes
/// `first − s τ (E_t − Λ) × n` (`s = 1` mixed, `-1` electric-field) on every
/// interior face.
pub fn trace_consistency(disc: &Discretization, state: &FieldState) -> TraceConsistency {
    let s = match disc.formulation {
        Formulation::Mixed => 1.0,
        Formulation::ElectricField => -1.0,
    };
    let (mut flux_diff, mut flux_max, mut lam_diff, mut lam_max) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (f, face) in disc.mesh.faces.iter().enumerate() {
        let Some(nb) = face.neighbor else { continue };
        let tau = disc.tau[f];
        let n = face.normal;
        let tangential = |v: Vector3<f64>| v - n * v.dot(&n);
        let fq_o = face_quadrature(disc, face.owner, face.owner_local);
        let fq_n = face_quadrature(disc, nb, face.neighbor_local.expect("interior face"));
        let fs = disc.face_basis(f);
        let nf = fs.len();
        let lam_c = state.face_trace(disc, f);
        let mut psi = vec![0.0; nf];
        for q in 0..fq_o.xi.len() {
            let st = disc_face_point(disc, f, q);
            fs.eval(&st, &mut psi);
            let l1: f64 = psi.iter().zip(&lam_c[..nf]).map(|(a, b)| a * b).sum();
            let l2: f64 = psi.iter().zip(&lam_c[nf..]).map(|(a, b)| a * b).sum();
            let lam = face.t1 * l1 + face.t2 * l2;

            let h_o = eval_element(disc, face.owner, state.first(disc, face.owner), &fq_o.xi[q]);
            let e_o = tangential(eval_element(
                disc,
                face.owner,
                state.electric(disc, face.owner),
                &fq_o.xi[q],
            ));
            let h_n = eval_element(disc, nb, state.first(disc, nb), &fq_n.xi[q]);
            let e_n = tangential(eval_element(
                disc,
                nb,
                state.electric(disc, nb),
                &fq_n.xi[q],
            ));

            let flux_o = tangential(h_o - s * tau * (e_o - lam).cross(&n));
            let flux_n = tangential(h_n + s * tau * (e_n - lam).cross(&n));
            flux_diff = flux_diff.max((flux_o - flux_n).norm());
            flux_max = flux_max.max(flux_o.norm()).max(flux_n.norm());

            let implied = (e_o + e_n) * 0.5 + s * (h_o - h_n).cross(&n) / (2.0 * tau);
            lam_diff = lam_diff.max((implied - lam).norm());
            lam_max = lam_max.max(lam.norm());
        }
    }
    let ratio = |d: f64, m: f64| if m > 0.0 { d / m } else { d };
    TraceConsistency {
        flux_mismatch: ratio(flux_diff, flux_max),
        trace_mismatch: ratio(lam_diff, lam_max),
    }
}

fn disc_face_point(disc: &Discretization, f: usize, q: usize) -> [f64; 3] {
    disc.face_space(disc.mesh.faces[f].kind).quad.points[q]
}
