//! Sparse LDLᵀ factorisation of symmetric quasi-definite matrices.
//!
//! Up-looking elimination-tree algorithm (the same scheme as Davis' LDL and
//! QDLDL) with no pivoting. Quasi-definite matrices factor stably under any
//! symmetric permutation; pivots whose sign disagrees with the expected
//! inertia are replaced by a small signed value (dynamic regularisation) and
//! the caller recovers accuracy with iterative refinement.

use crate::ordering::minimum_degree;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub(crate) struct Ldl {
    n: usize,
    /// `perm[k]` = original index of permuted node `k`.
    perm: Vec<usize>,
    /// Upper triangle of the permuted matrix, CSC, diagonal last in each column.
    ap: Vec<usize>,
    ai: Vec<usize>,
    pub(crate) ax: Vec<f64>,
    /// Slot of the diagonal of original node `i` in `ax`.
    diag_slot: Vec<usize>,
    signs: Vec<f64>,
    etree: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    dinv: Vec<f64>,
    // workspaces
    y_vals: Vec<f64>,
    y_mark: Vec<bool>,
    y_idx: Vec<usize>,
    elim: Vec<usize>,
    next_in_col: Vec<usize>,
    pub(crate) dyn_eps: f64,
    pub(crate) dyn_delta: f64,
}

impl Ldl {
    /// Symbolic analysis. `entries` are off-diagonal or diagonal positions
    /// `(i, j)` of the symmetric matrix in original numbering (either
    /// triangle). `signs[i]` is `+1` for nodes expected to carry positive
    /// pivots and `-1` otherwise. Returns the factorisation object and, for
    /// every input entry, its slot in [`Ldl::ax`].
    pub fn analyze(n: usize, entries: &[(usize, usize)], signs: &[f64]) -> (Self, Vec<usize>) {
        let mut adj = vec![Vec::new(); n];
        for &(i, j) in entries {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        let perm = minimum_degree(&adj);
        drop(adj);
        let mut iperm = vec![0usize; n];
        for (k, &p) in perm.iter().enumerate() {
            iperm[p] = k;
        }

        // permuted upper triangle incl. all diagonals
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(i, j) in entries {
            let (a, b) = (iperm[i], iperm[j]);
            let (r, c) = if a <= b { (a, b) } else { (b, a) };
            cols[c].push(r);
        }
        for (c, col) in cols.iter_mut().enumerate() {
            col.push(c);
            col.sort_unstable();
            col.dedup();
        }
        let mut ap = Vec::with_capacity(n + 1);
        let mut ai = Vec::new();
        ap.push(0);
        for col in &cols {
            ai.extend_from_slice(col);
            ap.push(ai.len());
        }
        let slot_of = |r: usize, c: usize| -> usize {
            let s = &ai[ap[c]..ap[c + 1]];
            ap[c] + s.binary_search(&r).expect("entry in pattern")
        };
        let slots: Vec<usize> = entries
            .iter()
            .map(|&(i, j)| {
                let (a, b) = (iperm[i], iperm[j]);
                if a <= b {
                    slot_of(a, b)
                } else {
                    slot_of(b, a)
                }
            })
            .collect();
        let diag_slot: Vec<usize> = (0..n).map(|i| slot_of(iperm[i], iperm[i])).collect();
        let psigns: Vec<f64> = perm.iter().map(|&p| signs[p]).collect();

        // elimination tree and column counts
        let mut etree = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut work = vec![NONE; n];
        for j in 0..n {
            work[j] = j;
            for &i0 in &ai[ap[j]..ap[j + 1]] {
                let mut i = i0;
                if i == j {
                    continue;
                }
                while work[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    work[i] = j;
                    i = etree[i];
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }
        let total = lp[n];
        let nnz = ai.len();
        (
            Ldl {
                n,
                perm,
                ap,
                ai,
                ax: vec![0.0; nnz],
                diag_slot,
                signs: psigns,
                etree,
                li: vec![0; total],
                lx: vec![0.0; total],
                lp,
                d: vec![0.0; n],
                dinv: vec![0.0; n],
                y_vals: vec![0.0; n],
                y_mark: vec![false; n],
                y_idx: vec![0; n],
                elim: vec![0; n],
                next_in_col: vec![0; n],
                dyn_eps: 1e-13,
                dyn_delta: 1e-7,
            },
            slots,
        )
    }

    pub fn diag_slot(&self, i: usize) -> usize {
        self.diag_slot[i]
    }

    #[cfg(test)]
    pub fn factor_nnz(&self) -> usize {
        self.lp[self.n]
    }

    /// Numeric factorisation of the values currently in `ax`. Returns the
    /// number of dynamically regularised pivots.
    pub fn factor(&mut self) -> usize {
        let n = self.n;
        let mut bumped = 0;
        for k in 0..n {
            self.next_in_col[k] = self.lp[k];
        }
        for k in 0..n {
            let mut nnz_y = 0usize;
            self.d[k] = 0.0;
            for p in self.ap[k]..self.ap[k + 1] {
                let b = self.ai[p];
                if b == k {
                    self.d[k] = self.ax[p];
                    continue;
                }
                self.y_vals[b] = self.ax[p];
                if !self.y_mark[b] {
                    self.y_mark[b] = true;
                    self.elim[0] = b;
                    let mut ne = 1;
                    let mut nx = self.etree[b];
                    while nx != NONE && nx < k {
                        if self.y_mark[nx] {
                            break;
                        }
                        self.y_mark[nx] = true;
                        self.elim[ne] = nx;
                        ne += 1;
                        nx = self.etree[nx];
                    }
                    while ne > 0 {
                        ne -= 1;
                        self.y_idx[nnz_y] = self.elim[ne];
                        nnz_y += 1;
                    }
                }
            }
            for i in (0..nnz_y).rev() {
                let c = self.y_idx[i];
                let end = self.next_in_col[c];
                let yc = self.y_vals[c];
                for j in self.lp[c]..end {
                    self.y_vals[self.li[j]] -= self.lx[j] * yc;
                }
                let l = yc * self.dinv[c];
                self.li[end] = k;
                self.lx[end] = l;
                self.d[k] -= yc * l;
                self.next_in_col[c] += 1;
                self.y_vals[c] = 0.0;
                self.y_mark[c] = false;
            }
            let s = self.signs[k];
            if !(self.d[k] * s > self.dyn_eps) {
                self.d[k] = s * self.dyn_delta;
                bumped += 1;
            }
            self.dinv[k] = 1.0 / self.d[k];
        }
        bumped
    }

    /// Solves `K x = b` in place (original numbering).
    pub fn solve(&self, b: &mut [f64], work: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            work[k] = b[self.perm[k]];
        }
        for i in 0..n {
            let xi = work[i];
            if xi != 0.0 {
                for j in self.lp[i]..self.lp[i + 1] {
                    work[self.li[j]] -= self.lx[j] * xi;
                }
            }
        }
        for i in 0..n {
            work[i] *= self.dinv[i];
        }
        for i in (0..n).rev() {
            let mut acc = work[i];
            for j in self.lp[i]..self.lp[i + 1] {
                acc -= self.lx[j] * work[self.li[j]];
            }
            work[i] = acc;
        }
        for k in 0..n {
            b[self.perm[k]] = work[k];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_mul(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
    }

    #[test]
    fn solves_small_quasi_definite_system() {
        // [ H  A'; A -D ] with H = diag(4, 3, 2), A = [1 1 0; 0 1 1], D = diag(0.5, 0.25)
        let k = vec![
            vec![4.0, 0.0, 0.0, 1.0, 0.0],
            vec![0.0, 3.0, 0.0, 1.0, 1.0],
            vec![0.0, 0.0, 2.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0, -0.5, 0.0],
            vec![0.0, 1.0, 1.0, 0.0, -0.25],
        ];
        let mut entries = Vec::new();
        let mut vals = Vec::new();
        for (i, row) in k.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 && i <= j {
                    entries.push((i, j));
                    vals.push(v);
                }
            }
        }
        let signs = [1.0, 1.0, 1.0, -1.0, -1.0];
        let (mut ldl, slots) = Ldl::analyze(5, &entries, &signs);
        for (s, v) in slots.iter().zip(&vals) {
            ldl.ax[*s] += v;
        }
        assert_eq!(ldl.factor(), 0);
        let b = vec![1.0, -2.0, 0.5, 3.0, 1.0];
        let mut x = b.clone();
        let mut w = vec![0.0; 5];
        ldl.solve(&mut x, &mut w);
        let r = dense_mul(&k, &x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-12, "{r:?} vs {b:?}");
        }
    }

    #[test]
    fn arrow_matrix_with_dense_border() {
        // tridiagonal SPD core plus one dense last row/column
        let n = 40;
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n - 1 {
            dense[i][i] = 4.0;
            if i + 1 < n - 1 {
                dense[i][i + 1] = -1.0;
                dense[i + 1][i] = -1.0;
            }
            dense[i][n - 1] = 0.1;
            dense[n - 1][i] = 0.1;
        }
        dense[n - 1][n - 1] = 10.0;
        let mut entries = Vec::new();
        let mut vals = Vec::new();
        for i in 0..n {
            for j in i..n {
                if dense[i][j] != 0.0 {
                    entries.push((i, j));
                    vals.push(dense[i][j]);
                }
            }
        }
        let (mut ldl, slots) = Ldl::analyze(n, &entries, &vec![1.0; n]);
        for (s, v) in slots.iter().zip(&vals) {
            ldl.ax[*s] += v;
        }
        ldl.factor();
        // fill stays linear in n
        assert!(ldl.factor_nnz() <= 3 * n);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut x = b.clone();
        let mut w = vec![0.0; n];
        ldl.solve(&mut x, &mut w);
        let r = dense_mul(&dense, &x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-12);
        }
    }
}
