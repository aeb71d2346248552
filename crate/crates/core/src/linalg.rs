//! Mesh-based sparse matrices and a sequential sparse LU wrapper.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{CavError, Result};
use crate::mesh::Mesh;

/// CSR pattern of the P1 vertex graph (vertex plus its edge neighbours).
#[derive(Debug, Clone)]
pub struct SparsePattern {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub diag: Vec<usize>,
}

impl SparsePattern {
    pub fn from_mesh(mesh: &Mesh) -> Self {
        let n = mesh.n_vertices();
        let mut adj: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for t in &mesh.triangles {
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        adj[t[i]].push(t[j]);
                    }
                }
            }
        }
        let mut row_ptr = vec![0];
        let mut col = Vec::new();
        let mut diag = Vec::with_capacity(n);
        for (i, a) in adj.iter_mut().enumerate() {
            a.sort_unstable();
            a.dedup();
            diag.push(col.len() + a.binary_search(&i).expect("diagonal present"));
            col.extend_from_slice(a);
            row_ptr.push(col.len());
        }
        Self { n, row_ptr, col, diag }
    }

    pub fn nnz(&self) -> usize {
        self.col.len()
    }

    pub fn row(&self, i: usize) -> std::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        let r = self.row(i);
        r.start + self.col[r].binary_search(&j).expect("entry in pattern")
    }

    /// Replaces masked rows by identity rows.
    pub fn apply_dirichlet_rows(&self, vals: &mut [f64], mask: &[bool]) {
        for (i, &m) in mask.iter().enumerate() {
            if m {
                for k in self.row(i) {
                    vals[k] = 0.0;
                }
                vals[self.diag[i]] = 1.0;
            }
        }
    }

    /// Adds the minimal symmetric edge diffusion that makes every
    /// off-diagonal entry nonpositive; row sums are unchanged.
    pub fn discrete_upwind(&self, vals: &mut [f64]) {
        for i in 0..self.n {
            for k in self.row(i) {
                let j = self.col[k];
                if j <= i {
                    continue;
                }
                let kt = self.index(j, i);
                let d = vals[k].max(vals[kt]).max(0.0);
                if d > 0.0 {
                    vals[k] -= d;
                    vals[kt] -= d;
                    vals[self.diag[i]] += d;
                    vals[self.diag[j]] += d;
                }
            }
        }
    }

    pub fn matvec(&self, vals: &[f64], x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|k| vals[k] * x[self.col[k]]).sum())
            .collect()
    }

    /// Row residuals `A u - f` and magnitudes `sum |a_ij u_j| + |f_i|`.
    pub fn residual(&self, vals: &[f64], u: &[f64], f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut r = Vec::with_capacity(self.n);
        let mut m = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let (mut s, mut a) = (0.0, 0.0);
            for k in self.row(i) {
                let v = vals[k] * u[self.col[k]];
                s += v;
                a += v.abs();
            }
            r.push(s - f[i]);
            m.push(a + f[i].abs());
        }
        (r, m)
    }

    pub fn is_m_matrix_pattern(&self, vals: &[f64]) -> bool {
        (0..self.n).all(|i| self.row(i).all(|k| self.col[k] == i || vals[k] <= 0.0) && vals[self.diag[i]] > 0.0)
    }
}

pub struct SparseSolver {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    n: usize,
}

impl SparseSolver {
    pub fn factor(p: &SparsePattern, vals: &[f64]) -> Result<Self> {
        static SEQ: std::sync::Once = std::sync::Once::new();
        SEQ.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
        let mut trip = Vec::with_capacity(p.nnz());
        for i in 0..p.n {
            for k in p.row(i) {
                trip.push(Triplet::new(i, p.col[k], vals[k]));
            }
        }
        let m = SparseColMat::<usize, f64>::try_new_from_triplets(p.n, p.n, &trip)
            .map_err(|e| CavError::Linear(format!("{e:?}")))?;
        let lu = m.sp_lu().map_err(|e| CavError::Linear(format!("{e:?}")))?;
        Ok(Self { lu, n: p.n })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut x = Mat::<f64>::from_fn(self.n, 1, |i, _| rhs[i]);
        self.lu.solve_in_place(x.as_mut());
        let out: Vec<f64> = (0..self.n).map(|i| x[(i, 0)]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(CavError::Linear("non-finite solution".into()));
        }
        Ok(out)
    }
}
