//! Minimal compressed-sparse-column storage.

#[derive(Debug, Clone, Default)]
pub(crate) struct Csc {
    pub ncols: usize,
    pub colptr: Vec<usize>,
    pub rowind: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csc {
    /// Builds a CSC matrix from triplets, summing duplicates. Row indices
    /// within each column come out sorted.
    pub fn from_triplets(ncols: usize, trip: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; ncols + 1];
        for &(_, c, _) in trip {
            counts[c + 1] += 1;
        }
        for c in 0..ncols {
            counts[c + 1] += counts[c];
        }
        let mut next = counts.clone();
        let mut rows = vec![0usize; trip.len()];
        let mut vals = vec![0.0; trip.len()];
        for &(r, c, v) in trip {
            let p = next[c];
            rows[p] = r;
            vals[p] = v;
            next[c] += 1;
        }
        let mut colptr = Vec::with_capacity(ncols + 1);
        let mut rowind = Vec::with_capacity(trip.len());
        let mut values = Vec::with_capacity(trip.len());
        colptr.push(0);
        let mut buf: Vec<(usize, f64)> = Vec::new();
        for c in 0..ncols {
            buf.clear();
            buf.extend((counts[c]..counts[c + 1]).map(|p| (rows[p], vals[p])));
            buf.sort_by_key(|e| e.0);
            for &(r, v) in &buf {
                if rowind.len() > colptr[c] && *rowind.last().unwrap() == r {
                    *values.last_mut().unwrap() += v;
                } else {
                    rowind.push(r);
                    values.push(v);
                }
            }
            colptr.push(rowind.len());
        }
        Csc { ncols, colptr, rowind, values }
    }

    pub fn nnz(&self) -> usize {
        self.rowind.len()
    }

    pub fn col(&self, c: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.colptr[c]..self.colptr[c + 1]).map(move |p| (self.rowind[p], self.values[p]))
    }

    /// `y += A x`
    pub fn mul_add(&self, x: &[f64], y: &mut [f64]) {
        for c in 0..self.ncols {
            let xc = x[c];
            if xc != 0.0 {
                for (r, v) in self.col(c) {
                    y[r] += v * xc;
                }
            }
        }
    }

    /// `y += A' x`
    pub fn tmul_add(&self, x: &[f64], y: &mut [f64]) {
        for (c, yc) in y.iter_mut().enumerate().take(self.ncols) {
            let mut acc = 0.0;
            for (r, v) in self.col(c) {
                acc += v * x[r];
            }
            *yc += acc;
        }
    }

    pub fn scale(&mut self, rows: &[f64], cols: &[f64]) {
        for c in 0..self.ncols {
            for p in self.colptr[c]..self.colptr[c + 1] {
                self.values[p] *= rows[self.rowind[p]] * cols[c];
            }
        }
    }
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
