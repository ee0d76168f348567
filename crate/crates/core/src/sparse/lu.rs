//! Left-looking sparse LU (Gilbert–Peierls) with partial pivoting.
//!
//! Columns are processed in a caller-chosen order `q`; rows are permuted by
//! pivoting. Factors are held in compressed-column form:
//! `P A Q = L U` with unit lower-triangular `L`.

use alloc::vec;
use alloc::vec::Vec;

use super::SparseMatrix;
use crate::error::{check_len, Error, Result};

/// Pivots smaller than this multiple of the largest matrix entry are zero.
const SINGULAR_THRESHOLD: f64 = 1e-13;
/// Threshold pivoting: the diagonal candidate is kept when it is at least
/// this fraction of the largest candidate, which preserves band structure.
const DIAGONAL_PREFERENCE: f64 = 0.1;

/// Reusable LU factorization of a square sparse matrix.
#[derive(Debug, Clone)]
pub struct SparseLu {
    n: usize,
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_ptr: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    /// `pinv[row] = pivot position` of each original row.
    pinv: Vec<usize>,
    /// Column order: step `k` eliminates original column `q[k]`.
    q: Vec<usize>,
    fingerprint: u64,
}

impl SparseLu {
    /// Factors `a` with the natural column order.
    pub fn factor(a: &SparseMatrix) -> Result<Self> {
        let q: Vec<usize> = (0..a.rows()).collect();
        Self::factor_ordered(a, &q)
    }

    /// Factors `a`, eliminating columns in the order given by `q`.
    pub fn factor_ordered(a: &SparseMatrix, q: &[usize]) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::InvalidInput(alloc::format!(
                "LU needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        check_len(n, q.len())?;
        let mut seen = vec![false; n];
        for &c in q {
            if c >= n || seen[c] {
                return Err(Error::InvalidInput(
                    "column order is not a permutation".into(),
                ));
            }
            seen[c] = true;
        }

        // Compressed-column view of A.
        let at = a.transpose();
        let (a_ptr, a_idx, a_val) = (at.row_offsets(), at.col_indices(), at.values());
        let scale = a.max_abs();

        const NONE: usize = usize::MAX;
        let mut pinv = vec![NONE; n];
        let mut l_ptr = vec![0usize; n + 1];
        let mut u_ptr = vec![0usize; n + 1];
        let cap = 4 * a.nnz() + n;
        let mut l_idx: Vec<usize> = Vec::with_capacity(cap);
        let mut l_val = Vec::with_capacity(cap);
        let mut u_idx: Vec<usize> = Vec::with_capacity(cap);
        let mut u_val = Vec::with_capacity(cap);

        let mut x = vec![0.0; n];
        let mut xi = vec![0usize; n];
        let mut stack = vec![0usize; n];
        let mut pstack = vec![0usize; n];
        let mut marked = vec![false; n];

        for k in 0..n {
            l_ptr[k] = l_idx.len();
            u_ptr[k] = u_idx.len();
            let col = q[k];

            // Reach of column `col` in the graph of the partial L; the
            // reach is stored topologically in xi[top..n].
            let mut top = n;
            for p in a_ptr[col]..a_ptr[col + 1] {
                let start = a_idx[p];
                if marked[start] {
                    continue;
                }
                let mut head = 0usize;
                stack[0] = start;
                while let Some(&j) = stack[..=head].last() {
                    let jcol = pinv[j];
                    if !marked[j] {
                        marked[j] = true;
                        pstack[head] = if jcol == NONE { 0 } else { l_ptr[jcol] + 1 };
                    }
                    let end = if jcol == NONE { 0 } else { l_ptr[jcol + 1] };
                    let mut descended = false;
                    let mut pp = pstack[head];
                    while pp < end {
                        let i = l_idx[pp];
                        pp += 1;
                        if !marked[i] {
                            pstack[head] = pp;
                            head += 1;
                            stack[head] = i;
                            descended = true;
                            break;
                        }
                    }
                    if !descended {
                        top -= 1;
                        xi[top] = j;
                        if head == 0 {
                            break;
                        }
                        head -= 1;
                    }
                }
            }
            for &j in &xi[top..n] {
                marked[j] = false;
            }

            // Sparse triangular solve x = L \ A(:, col).
            for &j in &xi[top..n] {
                x[j] = 0.0;
            }
            for p in a_ptr[col]..a_ptr[col + 1] {
                x[a_idx[p]] = a_val[p];
            }
            for t in top..n {
                let j = xi[t];
                let jcol = pinv[j];
                if jcol == NONE {
                    continue;
                }
                let xj = x[j];
                for p in (l_ptr[jcol] + 1)..l_ptr[jcol + 1] {
                    x[l_idx[p]] -= l_val[p] * xj;
                }
            }

            // Partial pivoting over the rows not yet pivotal.
            let mut ipiv = NONE;
            let mut best = -1.0;
            for &i in &xi[top..n] {
                if pinv[i] == NONE {
                    let v = x[i].abs();
                    if v > best {
                        best = v;
                        ipiv = i;
                    }
                } else {
                    u_idx.push(pinv[i]);
                    u_val.push(x[i]);
                }
            }
            if ipiv == NONE || !(best > SINGULAR_THRESHOLD * scale) {
                return Err(Error::SingularMatrix { column: col });
            }
            if pinv[col] == NONE && x[col].abs() >= DIAGONAL_PREFERENCE * best {
                ipiv = col;
            }
            let pivot = x[ipiv];
            u_idx.push(k);
            u_val.push(pivot);
            pinv[ipiv] = k;
            l_idx.push(ipiv);
            l_val.push(1.0);
            for &i in &xi[top..n] {
                if pinv[i] == NONE {
                    l_idx.push(i);
                    l_val.push(x[i] / pivot);
                }
                x[i] = 0.0;
            }
        }
        l_ptr[n] = l_idx.len();
        u_ptr[n] = u_idx.len();
        for r in l_idx.iter_mut() {
            *r = pinv[*r];
        }

        Ok(Self {
            n,
            l_ptr,
            l_idx,
            l_val,
            u_ptr,
            u_idx,
            u_val,
            pinv,
            q: q.to_vec(),
            fingerprint: a.fingerprint(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Fingerprint of the matrix this factorization was computed from.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Stored entries of `L` plus `U`.
    pub fn factor_nnz(&self) -> usize {
        self.l_idx.len() + self.u_idx.len()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n];
        self.solve_into(b, &mut out)?;
        Ok(out)
    }

    /// Solves `A x = b` into `out`.
    pub fn solve_into(&self, b: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(self.n, b.len())?;
        check_len(self.n, out.len())?;
        let mut x = vec![0.0; self.n];
        for (i, &bi) in b.iter().enumerate() {
            x[self.pinv[i]] = bi;
        }
        // L y = P b, unit diagonal stored first in every column.
        for j in 0..self.n {
            let xj = x[j];
            if xj != 0.0 {
                for p in (self.l_ptr[j] + 1)..self.l_ptr[j + 1] {
                    x[self.l_idx[p]] -= self.l_val[p] * xj;
                }
            }
        }
        // U z = y, diagonal stored last in every column.
        for j in (0..self.n).rev() {
            let last = self.u_ptr[j + 1] - 1;
            x[j] /= self.u_val[last];
            let xj = x[j];
            if xj != 0.0 {
                for p in self.u_ptr[j]..last {
                    x[self.u_idx[p]] -= self.u_val[p] * xj;
                }
            }
        }
        for (k, &c) in self.q.iter().enumerate() {
            out[c] = x[k];
        }
        Ok(())
    }
}
