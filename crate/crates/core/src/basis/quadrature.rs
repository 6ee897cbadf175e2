use super::CellKind;
use crate::{Error, Result};

/// Highest polynomial degree for which rules are provided.
pub const MAX_EXACTNESS: usize = 11;

/// Quadrature rule on a reference cell.
///
/// Hexahedra and quadrilaterals use tensor-product Gauss–Legendre rules on
/// `[-1, 1]^d`. Simplices use collapsed (Duffy) products of Gauss–Legendre
/// rules on the unit right simplex; all weights are positive and the points
/// lie strictly inside the cell.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub kind: CellKind,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64; 3], f64)> + '_ {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev initial guess, refined by Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    // remove the last-ulp drift so that the weights sum to 2
    let s: f64 = w.iter().sum();
    for wi in &mut w {
        *wi *= 2.0 / s;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}

fn points_for(degree: usize) -> usize {
    degree / 2 + 1
}

/// Gauss–Legendre rule mapped to `[0, 1]`.
fn unit_interval(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    (
        x.iter().map(|&t| 0.5 * (t + 1.0)).collect(),
        w.iter().map(|&t| 0.5 * t).collect(),
    )
}

/// Builds a rule on `kind` that integrates polynomials of total degree
/// `exactness` exactly.
pub fn make_quadrature(kind: CellKind, exactness: usize) -> Result<QuadratureRule> {
    if exactness > MAX_EXACTNESS {
        return Err(Error::Unsupported(format!(
            "quadrature of exactness {exactness} on {kind:?} (maximum {MAX_EXACTNESS})"
        )));
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    match kind {
        CellKind::Hexahedron => {
            let (x, w) = gauss_legendre(points_for(exactness));
            for k in 0..x.len() {
                for j in 0..x.len() {
                    for i in 0..x.len() {
                        points.push([x[i], x[j], x[k]]);
                        weights.push(w[i] * w[j] * w[k]);
                    }
                }
            }
        }
        CellKind::Quadrilateral => {
            let (x, w) = gauss_legendre(points_for(exactness));
            for j in 0..x.len() {
                for i in 0..x.len() {
                    points.push([x[i], x[j], 0.0]);
                    weights.push(w[i] * w[j]);
                }
            }
        }
        CellKind::Triangle => {
            // (x, y) = (u (1 - v), v), dA = (1 - v) du dv
            let (u, wu) = unit_interval(points_for(exactness));
            let (v, wv) = unit_interval(points_for(exactness + 1));
            for (&vj, &wj) in v.iter().zip(&wv) {
                for (&ui, &wi) in u.iter().zip(&wu) {
                    points.push([ui * (1.0 - vj), vj, 0.0]);
                    weights.push(wi * wj * (1.0 - vj));
                }
            }
        }
        CellKind::Tetrahedron => {
            // (x, y, z) = (u (1 - v)(1 - w), v (1 - w), w), dV = (1 - v)(1 - w)^2
            let (u, wu) = unit_interval(points_for(exactness));
            let (v, wv) = unit_interval(points_for(exactness + 1));
            let (w, ww) = unit_interval(points_for(exactness + 2));
            for (&wk, &wwk) in w.iter().zip(&ww) {
                for (&vj, &wvj) in v.iter().zip(&wv) {
                    for (&ui, &wui) in u.iter().zip(&wu) {
                        points.push([ui * (1.0 - vj) * (1.0 - wk), vj * (1.0 - wk), wk]);
                        weights.push(wui * wvj * wwk * (1.0 - vj) * (1.0 - wk) * (1.0 - wk));
                    }
                }
            }
        }
    }
    Ok(QuadratureRule {
        kind,
        points,
        weights,
        exactness,
    })
}
