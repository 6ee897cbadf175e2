//! Lower triangle of the condensed trace matrix in compressed-column form.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{MatMut, Side};

use crate::assembly::{DofMap, NOT_FREE};
use crate::mesh::Mesh;
use crate::par::{for_each_chunk_mut, Parallelism};
use crate::{Error, Result};

/// Sparsity of the condensed system: a face couples to the faces of its
/// (one or two) elements. Only free faces take part.
#[derive(Clone, Debug)]
pub(crate) struct TracePattern {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    /// Free faces `g > f` coupled to face `f`, ascending, with the offset of
    /// their rows inside each column of `f` (after `f`'s own rows).
    adjacent: Vec<Vec<(usize, usize)>>,
    /// Total number of rows of the coupled faces in each column of `f`.
    tail: Vec<usize>,
    /// Number of values per face (all its columns).
    pub face_values: Vec<usize>,
}

impl TracePattern {
    pub fn new(mesh: &Mesh, dofs: &DofMap) -> Self {
        let nfaces = mesh.faces.len();
        let mut adjacent = vec![Vec::new(); nfaces];
        let mut tail = vec![0; nfaces];
        for (f, face) in mesh.faces.iter().enumerate() {
            if dofs.constrained[f] {
                continue;
            }
            let mut list: Vec<usize> = std::iter::once(face.owner)
                .chain(face.neighbor)
                .flat_map(|e| mesh.element_faces[e].iter().map(|ef| ef.face))
                .filter(|&g| g > f && !dofs.constrained[g])
                .collect();
            list.sort_unstable();
            list.dedup();
            let mut off = 0;
            adjacent[f] = list
                .into_iter()
                .map(|g| {
                    let entry = (g, off);
                    off += 2 * dofs.face_basis[g];
                    entry
                })
                .collect();
            tail[f] = off;
        }

        let mut col_ptr = vec![0usize];
        let mut row_idx = Vec::new();
        let mut face_values = vec![0; nfaces];
        for f in 0..nfaces {
            if dofs.constrained[f] {
                continue;
            }
            let start = row_idx.len();
            let r = dofs.face_range(f);
            for j in r.clone() {
                for i in j..r.end {
                    row_idx.push(dofs.free[i]);
                }
                for &(g, _) in &adjacent[f] {
                    row_idx.extend(dofs.face_range(g).map(|i| dofs.free[i]));
                }
                col_ptr.push(row_idx.len());
            }
            face_values[f] = row_idx.len() - start;
        }
        debug_assert!(row_idx.iter().all(|&i| i != NOT_FREE));
        TracePattern {
            n: dofs.n_free,
            col_ptr,
            row_idx,
            adjacent,
            tail,
            face_values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Position of entry (`g`'s local row `k`, `f`'s local column `m`)
    /// relative to the start of face `f`'s values, for `g ≥ f`.
    pub fn local_position(&self, nf2: usize, f: usize, m: usize, g: usize, k: usize) -> usize {
        // own rows shrink by one per column
        let before = m * self.tail[f] + (0..m).map(|c| nf2 - c).sum::<usize>();
        if g == f {
            before + (k - m)
        } else {
            let i = self.adjacent[f]
                .binary_search_by_key(&g, |&(h, _)| h)
                .expect("coupled face");
            before + (nf2 - m) + self.adjacent[f][i].1 + k
        }
    }
}

/// Numeric lower triangle and its Cholesky factor.
pub(crate) struct TraceMatrix {
    pub pattern: TracePattern,
    pub values: Vec<f64>,
    factor: Option<Llt<usize, f64>>,
}

impl TraceMatrix {
    /// Fills the values face by face. `add(f, out)` must add every
    /// contribution to the columns of face `f` into `out` (laid out as in
    /// the pattern).
    pub fn assemble(
        pattern: TracePattern,
        mode: Parallelism,
        add: impl Fn(&TracePattern, usize, &mut [f64]) + Sync + Send,
    ) -> Self {
        let mut values = vec![0.0; pattern.nnz()];
        for_each_chunk_mut(&mut values, &pattern.face_values, mode, |f, out| {
            add(&pattern, f, out)
        });
        TraceMatrix {
            pattern,
            values,
            factor: None,
        }
    }

    /// Cholesky factorization of `sign · K`.
    pub fn factorize(&mut self, sign: f64) -> Result<()> {
        if self.pattern.n == 0 {
            return Ok(());
        }
        faer::set_global_parallelism(faer::Par::Seq);
        let symbolic = SymbolicSparseColMatRef::new_checked(
            self.pattern.n,
            self.pattern.n,
            &self.pattern.col_ptr,
            None,
            &self.pattern.row_idx,
        );
        let scaled: Vec<f64> = self.values.iter().map(|v| v * sign).collect();
        let mat = SparseColMatRef::new(symbolic, &scaled);
        let llt = mat
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        self.factor = Some(llt);
        Ok(())
    }

    /// Solves `sign · K x = sign · b` in place.
    pub fn solve_in_place(&self, sign: f64, b: &mut [f64]) {
        let Some(llt) = &self.factor else { return };
        for v in b.iter_mut() {
            *v *= sign;
        }
        let n = b.len();
        let rhs = MatMut::from_column_major_slice_mut(b, n, 1);
        llt.solve_in_place(rhs);
    }

    /// `y = K x` using the symmetric lower triangle.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        let p = &self.pattern;
        for j in 0..p.n {
            for idx in p.col_ptr[j]..p.col_ptr[j + 1] {
                let i = p.row_idx[idx];
                let v = self.values[idx];
                y[i] += v * x[j];
                if i != j {
                    y[j] += v * x[i];
                }
            }
        }
        y
    }
}
