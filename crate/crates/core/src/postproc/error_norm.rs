use nalgebra::{Point3, Vector3};

use crate::assembly::Discretization;
use crate::basis::map_physical;
use crate::par::{try_map_indexed, Parallelism};
use crate::{Error, Result};

/// How elementwise contributions are combined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ErrorNorm {
    /// `(Σ_e ∫|E^a − E_h|² / Σ_e ∫|E^a|²)^{1/2}`.
    #[default]
    GlobalRatio,
    /// `(Σ_e ∫|E^a − E_h|² / ∫|E^a|²)^{1/2}`, ratio taken per element.
    ElementRatio,
}

/// Squared error and squared reference norm of one element.
fn element_integrals(
    disc: &Discretization,
    e: usize,
    coeffs: &[f64],
    reference: &(impl Fn(&Point3<f64>) -> Vector3<f64> + Sync),
) -> Result<(f64, f64)> {
    let kind = disc.mesh.cells[e].kind;
    let sp = disc.cell_space(kind);
    let nb = sp.basis.len();
    let geo = disc.mesh.cell_points(e);
    let (mut num, mut den) = (0.0, 0.0);
    for (q, (xi, w)) in sp.error_quad.iter().enumerate() {
        let map = map_physical(kind, &geo, xi).map_err(|j| j.in_element(e))?;
        let phi = &sp.error_phi[q * nb..(q + 1) * nb];
        let mut uh = Vector3::zeros();
        for a in 0..3 {
            uh[a] = phi
                .iter()
                .zip(&coeffs[a * nb..(a + 1) * nb])
                .map(|(p, c)| p * c)
                .sum();
        }
        let ua = reference(&map.point);
        let wq = w * map.det;
        num += wq * (ua - uh).norm_squared();
        den += wq * ua.norm_squared();
    }
    Ok((num, den))
}

/// Relative L² error of an elementwise field against a reference.
/// `field(e)` returns the `3 nb` coefficients of element `e`.
pub fn relative_l2_error<'a>(
    disc: &'a Discretization,
    field: impl Fn(usize) -> &'a [f64] + Sync + Send,
    reference: impl Fn(&Point3<f64>) -> Vector3<f64> + Sync + Send,
    norm: ErrorNorm,
    mode: Parallelism,
) -> Result<f64> {
    let parts = try_map_indexed(disc.n_elements(), mode, |e| {
        element_integrals(disc, e, field(e), &reference)
    })?;
    match norm {
        ErrorNorm::GlobalRatio => {
            let (num, den) = parts
                .iter()
                .fold((0.0, 0.0), |(a, b), (n, d)| (a + n, b + d));
            if den == 0.0 {
                return Err(Error::InvalidArgument(
                    "reference field vanishes on the whole mesh".into(),
                ));
            }
            Ok((num / den).sqrt())
        }
        ErrorNorm::ElementRatio => {
            let mut sum = 0.0;
            for (e, (n, d)) in parts.iter().enumerate() {
                if *d == 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "reference field vanishes on element {e}"
                    )));
                }
                sum += n / d;
            }
            Ok(sum.sqrt())
        }
    }
}

/// `‖a − b‖ / ‖b‖` over the selected elements, both given as elementwise
/// coefficients.
pub fn relative_difference<'a>(
    disc: &'a Discretization,
    a: impl Fn(usize) -> &'a [f64],
    b: impl Fn(usize) -> &'a [f64],
    select: impl Fn(usize) -> bool,
) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for e in (0..disc.n_elements()).filter(|&e| select(e)) {
        let m = disc.mass_matrix(e)?;
        let nb = m.nrows();
        let (ae, be) = (a(e), b(e));
        for c in 0..3 {
            let d = nalgebra::DVector::from_iterator(
                nb,
                (0..nb).map(|i| ae[c * nb + i] - be[c * nb + i]),
            );
            let r = nalgebra::DVector::from_column_slice(&be[c * nb..(c + 1) * nb]);
            num += d.dot(&(&m * &d));
            den += r.dot(&(&m * &r));
        }
    }
    if den == 0.0 {
        return Err(Error::InvalidArgument(
            "reference field vanishes on the selection".into(),
        ));
    }
    Ok((num / den).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{project_volume, Formulation, TauSpec};
    use crate::mesh::generate_unit_cube_hex;
    use crate::physics::{cavity_mode_111, Material, MaterialProperties};

    fn cube(n: usize, p: usize) -> Discretization {
        let m = generate_unit_cube_hex(n).unwrap();
        let mat = Material::uniform(MaterialProperties::isotropic(1.0, 1.0, 0.0).unwrap());
        Discretization::new(m, Formulation::Mixed, p, mat, TauSpec::Constant(1.0)).unwrap()
    }

    fn projected(
        d: &Discretization,
        f: impl Fn(&Point3<f64>) -> Vector3<f64> + Copy,
    ) -> Vec<Vec<f64>> {
        (0..d.n_elements())
            .map(|e| project_volume(d, e, f).unwrap())
            .collect()
    }

    #[test]
    fn polynomial_reference_has_zero_error() {
        let d = cube(2, 2);
        let f = |x: &Point3<f64>| Vector3::new(x.x * x.y, 1.0 + x.z * x.z, x.x - 2.0 * x.y);
        let c = projected(&d, f);
        for norm in [ErrorNorm::GlobalRatio, ErrorNorm::ElementRatio] {
            let err = relative_l2_error(&d, |e| &c[e], f, norm, Parallelism::Sequential).unwrap();
            assert!(err < 1e-13, "{err}");
        }
    }

    #[test]
    fn error_is_scale_invariant() {
        let d = cube(3, 1);
        let f = |x: &Point3<f64>| cavity_mode_111(x, 0.0).0;
        let c = projected(&d, f);
        let base = relative_l2_error(
            &d,
            |e| &c[e],
            f,
            ErrorNorm::GlobalRatio,
            Parallelism::Sequential,
        )
        .unwrap();
        let s = -7.5;
        let cs: Vec<Vec<f64>> = c
            .iter()
            .map(|v| v.iter().map(|x| x * s).collect())
            .collect();
        let scaled = relative_l2_error(
            &d,
            |e| &cs[e],
            |x| f(x) * s,
            ErrorNorm::GlobalRatio,
            Parallelism::Sequential,
        )
        .unwrap();
        assert!(base > 1e-3);
        assert!((base - scaled).abs() < 1e-13 * base.max(1.0));
    }

    #[test]
    fn vanishing_reference_is_reported() {
        let d = cube(2, 1);
        let zero = vec![0.0; 24];
        let r = relative_l2_error(
            &d,
            |_| &zero,
            |_| Vector3::zeros(),
            ErrorNorm::ElementRatio,
            Parallelism::Sequential,
        );
        assert!(matches!(r, Err(Error::InvalidArgument(ref s)) if s.contains("element 0")));
        let r = relative_l2_error(
            &d,
            |_| &zero,
            |_| Vector3::zeros(),
            ErrorNorm::GlobalRatio,
            Parallelism::Sequential,
        );
        assert!(r.is_err());
    }

    #[test]
    fn modes_agree_bitwise() {
        let d = cube(3, 2);
        let f = |x: &Point3<f64>| cavity_mode_111(x, 0.2).0;
        let c = projected(&d, |x| f(x) * 1.01);
        let a = relative_l2_error(
            &d,
            |e| &c[e],
            f,
            ErrorNorm::GlobalRatio,
            Parallelism::Sequential,
        )
        .unwrap();
        let b = relative_l2_error(
            &d,
            |e| &c[e],
            f,
            ErrorNorm::GlobalRatio,
            Parallelism::Parallel,
        )
        .unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn difference_of_identical_fields_is_zero() {
        let d = cube(2, 1);
        let c = projected(&d, |x| cavity_mode_111(x, 0.0).0);
        assert_eq!(
            relative_difference(&d, |e| &c[e], |e| &c[e], |_| true).unwrap(),
            0.0
        );
    }
}
