use super::CellKind;
use crate::{Error, Result};

/// Nodal Lagrange basis of total degree `p` (simplices) or tensor degree `p`
/// (hexahedra, quadrilaterals) on a reference cell.
///
/// Tensor cells use Gauss–Lobatto–Legendre nodes, numbered with the first
/// reference coordinate running fastest. Simplices use the principal lattice
/// `{α / p : |α| = p}`.
#[derive(Clone, Debug)]
pub struct ReferenceBasis {
    pub kind: CellKind,
    pub degree: usize,
    pub nodes: Vec<[f64; 3]>,
    // tensor cells: 1D GLL nodes; simplices: barycentric multi-indices
    gll: Vec<f64>,
    lattice: Vec<[usize; 4]>,
}

/// Gauss–Lobatto–Legendre nodes for degree 1 and 2.
fn gll_nodes(p: usize) -> Vec<f64> {
    match p {
        1 => vec![-1.0, 1.0],
        2 => vec![-1.0, 0.0, 1.0],
        _ => unreachable!(),
    }
}

/// Highest polynomial degree with a nodal basis.
pub const MAX_DEGREE: usize = 2;

pub fn make_basis(kind: CellKind, p: usize) -> Result<ReferenceBasis> {
    if !(1..=MAX_DEGREE).contains(&p) {
        return Err(Error::Unsupported(format!(
            "Lagrange basis of degree {p} on {kind:?} (supported: 1..={MAX_DEGREE})"
        )));
    }
    let dim = kind.dim();
    let mut nodes = Vec::new();
    let mut gll = Vec::new();
    let mut lattice = Vec::new();
    match kind {
        CellKind::Hexahedron | CellKind::Quadrilateral => {
            gll = gll_nodes(p);
            let nz = if dim == 3 { p + 1 } else { 1 };
            for k in 0..nz {
                for j in 0..=p {
                    for i in 0..=p {
                        let z = if dim == 3 { gll[k] } else { 0.0 };
                        nodes.push([gll[i], gll[j], z]);
                    }
                }
            }
        }
        CellKind::Tetrahedron | CellKind::Triangle => {
            let kmax = if dim == 3 { p } else { 0 };
            for k in 0..=kmax {
                for j in 0..=p - k {
                    for i in 0..=p - k - j {
                        let a0 = p - i - j - k;
                        lattice.push([a0, i, j, k]);
                        let h = p as f64;
                        nodes.push([i as f64 / h, j as f64 / h, k as f64 / h]);
                    }
                }
            }
        }
    }
    debug_assert_eq!(nodes.len(), kind.basis_size(p));
    Ok(ReferenceBasis {
        kind,
        degree: p,
        nodes,
        gll,
        lattice,
    })
}

fn lagrange_1d(nodes: &[f64], i: usize, x: f64) -> (f64, f64) {
    let mut v = 1.0;
    let mut d = 0.0;
    for (m, &xm) in nodes.iter().enumerate() {
        if m == i {
            continue;
        }
        let den = nodes[i] - xm;
        d = d * (x - xm) / den + v / den;
        v *= (x - xm) / den;
    }
    (v, d)
}

/// `Π_{k<a} (p λ - k) / (k + 1)` and its derivative in `λ`.
fn lattice_factor(p: f64, a: usize, lambda: f64) -> (f64, f64) {
    let mut v = 1.0;
    let mut d = 0.0;
    for k in 0..a {
        let kf = k as f64;
        let f = (p * lambda - kf) / (kf + 1.0);
        let df = p / (kf + 1.0);
        d = d * f + v * df;
        v *= f;
    }
    (v, d)
}

impl ReferenceBasis {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Shape-function values at `xi`.
    pub fn eval(&self, xi: &[f64; 3], out: &mut [f64]) {
        match self.kind {
            CellKind::Hexahedron | CellKind::Quadrilateral => {
                let n = self.degree + 1;
                let mut lx = [[0.0; 3]; 3];
                for d in 0..self.kind.dim() {
                    for i in 0..n {
                        lx[d][i] = lagrange_1d(&self.gll, i, xi[d]).0;
                    }
                }
                if self.kind.dim() == 2 {
                    for j in 0..n {
                        for i in 0..n {
                            out[i + n * j] = lx[0][i] * lx[1][j];
                        }
                    }
                } else {
                    for k in 0..n {
                        for j in 0..n {
                            for i in 0..n {
                                out[i + n * (j + n * k)] = lx[0][i] * lx[1][j] * lx[2][k];
                            }
                        }
                    }
                }
            }
            CellKind::Tetrahedron | CellKind::Triangle => {
                let lam = barycentric(xi, self.kind.dim());
                let p = self.degree as f64;
                for (m, a) in self.lattice.iter().enumerate() {
                    out[m] = (0..4).map(|c| lattice_factor(p, a[c], lam[c]).0).product();
                }
            }
        }
    }

    /// Reference gradients of the shape functions at `xi`. The third
    /// component is zero for face cells.
    pub fn eval_grad(&self, xi: &[f64; 3], out: &mut [[f64; 3]]) {
        match self.kind {
            CellKind::Hexahedron | CellKind::Quadrilateral => {
                let n = self.degree + 1;
                let dim = self.kind.dim();
                let mut lx = [[(1.0, 0.0); 3]; 3];
                for d in 0..dim {
                    for i in 0..n {
                        lx[d][i] = lagrange_1d(&self.gll, i, xi[d]);
                    }
                }
                let nk = if dim == 3 { n } else { 1 };
                for k in 0..nk {
                    for j in 0..n {
                        for i in 0..n {
                            let (vx, dx) = lx[0][i];
                            let (vy, dy) = lx[1][j];
                            let (vz, dz) = if dim == 3 { lx[2][k] } else { (1.0, 0.0) };
                            out[i + n * (j + n * k)] = [dx * vy * vz, vx * dy * vz, vx * vy * dz];
                        }
                    }
                }
            }
            CellKind::Tetrahedron | CellKind::Triangle => {
                let dim = self.kind.dim();
                let lam = barycentric(xi, dim);
                let p = self.degree as f64;
                for (m, a) in self.lattice.iter().enumerate() {
                    let f: [(f64, f64); 4] =
                        std::array::from_fn(|c| lattice_factor(p, a[c], lam[c]));
                    // ∂φ/∂λ_c, then chain rule with λ_0 = 1 - Σ ξ
                    let mut dl = [0.0; 4];
                    for c in 0..4 {
                        let mut prod = f[c].1;
                        for (e, fe) in f.iter().enumerate() {
                            if e != c {
                                prod *= fe.0;
                            }
                        }
                        dl[c] = prod;
                    }
                    let mut g = [0.0; 3];
                    for d in 0..dim {
                        g[d] = dl[d + 1] - dl[0];
                    }
                    out[m] = g;
                }
            }
        }
    }
}

fn barycentric(xi: &[f64; 3], dim: usize) -> [f64; 4] {
    if dim == 3 {
        [1.0 - xi[0] - xi[1] - xi[2], xi[0], xi[1], xi[2]]
    } else {
        [1.0 - xi[0] - xi[1], xi[0], xi[1], 0.0]
    }
}

#[cfg(test)]
mod tests {
    use super::super::make_quadrature;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const KINDS: [CellKind; 4] = [
        CellKind::Hexahedron,
        CellKind::Tetrahedron,
        CellKind::Quadrilateral,
        CellKind::Triangle,
    ];

    fn random_inside(kind: CellKind, rng: &mut ChaCha8Rng) -> [f64; 3] {
        loop {
            let mut x = [0.0; 3];
            for d in 0..kind.dim() {
                x[d] = match kind {
                    CellKind::Hexahedron | CellKind::Quadrilateral => rng.random_range(-0.95..0.95),
                    _ => rng.random_range(0.02..0.9),
                };
            }
            let s: f64 = x.iter().sum();
            if matches!(kind, CellKind::Hexahedron | CellKind::Quadrilateral) || s < 0.95 {
                return x;
            }
        }
    }

    #[test]
    fn sizes() {
        assert_eq!(make_basis(CellKind::Hexahedron, 1).unwrap().len(), 8);
        assert_eq!(make_basis(CellKind::Hexahedron, 2).unwrap().len(), 27);
        assert_eq!(make_basis(CellKind::Triangle, 2).unwrap().len(), 6);
        assert_eq!(make_basis(CellKind::Tetrahedron, 2).unwrap().len(), 10);
        assert_eq!(make_basis(CellKind::Quadrilateral, 1).unwrap().len(), 4);
        assert!(make_basis(CellKind::Hexahedron, 3).is_err());
        assert!(make_basis(CellKind::Tetrahedron, 0).is_err());
    }

    #[test]
    fn kronecker_and_partition_of_unity() {
        for kind in KINDS {
            for p in 1..=2 {
                let b = make_basis(kind, p).unwrap();
                let mut v = vec![0.0; b.len()];
                for (j, x) in b.nodes.iter().enumerate() {
                    b.eval(x, &mut v);
                    for (i, vi) in v.iter().enumerate() {
                        let d = if i == j { 1.0 } else { 0.0 };
                        assert!((vi - d).abs() < 1e-13, "{kind:?} p={p}");
                    }
                }
                let q = make_quadrature(kind, 2 * p + 1).unwrap();
                for (x, _) in q.iter() {
                    b.eval(x, &mut v);
                    assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = 1e-5;
        for kind in KINDS {
            for p in 1..=2 {
                let b = make_basis(kind, p).unwrap();
                let n = b.len();
                let mut g = vec![[0.0; 3]; n];
                let mut vp = vec![0.0; n];
                let mut vm = vec![0.0; n];
                for _ in 0..20 {
                    let x = random_inside(kind, &mut rng);
                    b.eval_grad(&x, &mut g);
                    for d in 0..kind.dim() {
                        let mut xp = x;
                        let mut xm = x;
                        xp[d] += h;
                        xm[d] -= h;
                        b.eval(&xp, &mut vp);
                        b.eval(&xm, &mut vm);
                        for i in 0..n {
                            let fd = (vp[i] - vm[i]) / (2.0 * h);
                            assert!((fd - g[i][d]).abs() <= 1e-6, "{kind:?} p={p}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn gradients_sum_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kind in KINDS {
            let b = make_basis(kind, 2).unwrap();
            let mut g = vec![[0.0; 3]; b.len()];
            let x = random_inside(kind, &mut rng);
            b.eval_grad(&x, &mut g);
            for d in 0..3 {
                assert!(g.iter().map(|v| v[d]).sum::<f64>().abs() < 1e-12);
            }
        }
    }
}
