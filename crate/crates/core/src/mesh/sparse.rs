//! Compressed sparse row matrices.

/// A real matrix in compressed sparse row layout.
///
/// Column indices are stored as `u32`; the largest meshes in the laboratory
/// have a few million unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<u32>,
    pub val: Vec<f64>,
}

impl Csr {
    pub fn empty(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col: Vec::new(),
            val: Vec::new(),
        }
    }

    /// Builds a matrix from per-row `(column, value)` lists; duplicate
    /// columns within a row are summed and columns end up sorted.
    pub fn from_rows(ncols: usize, rows: &[Vec<(usize, f64)>]) -> Self {
        let mut b = CsrBuilder::new(ncols);
        for r in rows {
            b.push_row(r.iter().copied());
        }
        b.finish()
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let ncols = rows.first().map_or(0, Vec::len);
        let lists: Vec<Vec<(usize, f64)>> = rows
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, v)| (j, *v))
                    .collect()
            })
            .collect();
        Self::from_rows(ncols, &lists)
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col[r.clone()]
            .iter()
            .zip(&self.val[r])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col[r.clone()].binary_search(&(j as u32)) {
            Ok(k) => self.val[r.start + k],
            Err(_) => 0.0,
        }
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.val[k] * x[self.col[k] as usize];
            }
            *yi = s;
        }
    }

    pub fn transpose(&self) -> Csr {
        let mut count = vec![0usize; self.ncols + 1];
        for &c in &self.col {
            count[c as usize + 1] += 1;
        }
        for j in 0..self.ncols {
            count[j + 1] += count[j];
        }
        let row_ptr = count.clone();
        let mut next = count;
        let mut col = vec![0u32; self.nnz()];
        let mut val = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let c = self.col[k] as usize;
                let dst = next[c];
                col[dst] = i as u32;
                val[dst] = self.val[k];
                next[c] += 1;
            }
        }
        Csr {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            col,
            val,
        }
    }

    /// Sparse product `A B` (Gustavson's algorithm, sorted output rows).
    pub fn matmul(&self, other: &Csr) -> Csr {
        assert_eq!(self.ncols, other.nrows, "dimension mismatch in sparse product");
        let mut acc = vec![0.0; other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut touched: Vec<u32> = Vec::new();
        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        row_ptr.push(0);
        let mut col = Vec::new();
        let mut val = Vec::new();
        for i in 0..self.nrows {
            touched.clear();
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = 0.0;
                        touched.push(j as u32);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                col.push(j);
                val.push(acc[j as usize]);
            }
            row_ptr.push(col.len());
        }
        Csr {
            nrows: self.nrows,
            ncols: other.ncols,
            row_ptr,
            col,
            val,
        }
    }

    /// Position of the diagonal entry in each row (`usize::MAX` if absent).
    pub fn diagonal_positions(&self) -> Vec<usize> {
        (0..self.nrows)
            .map(|i| {
                let r = self.row_ptr[i]..self.row_ptr[i + 1];
                match self.col[r.clone()].binary_search(&(i as u32)) {
                    Ok(k) => r.start + k,
                    Err(_) => usize::MAX,
                }
            })
            .collect()
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry magnitude.
    pub fn asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let scale = self.val.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                if j > i {
                    worst = worst.max((v - self.get(j, i)).abs());
                }
            }
        }
        // entries of the transpose without a partner in the matrix
        let t = self.transpose();
        for i in 0..t.nrows {
            for (j, v) in t.row(i) {
                if self.get(i, j) == 0.0 {
                    worst = worst.max(v.abs());
                }
            }
        }
        worst / scale
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] += v;
            }
        }
        d
    }
}

/// Incremental row-by-row CSR construction.
#[derive(Debug)]
pub struct CsrBuilder {
    ncols: usize,
    row_ptr: Vec<usize>,
    col: Vec<u32>,
    val: Vec<f64>,
    scratch: Vec<(usize, f64)>,
}

impl CsrBuilder {
    pub fn new(ncols: usize) -> Self {
        Self {
            ncols,
            row_ptr: vec![0],
            col: Vec::new(),
            val: Vec::new(),
            scratch: Vec::new(),
        }
    }

    pub fn push_row(&mut self, entries: impl IntoIterator<Item = (usize, f64)>) {
        self.scratch.clear();
        self.scratch.extend(entries);
        self.scratch.sort_unstable_by_key(|e| e.0);
        let mut last = usize::MAX;
        for &(c, v) in &self.scratch {
            assert!(c < self.ncols, "column {c} out of range");
            if c == last {
                *self.val.last_mut().expect("previous entry") += v;
            } else {
                self.col.push(c as u32);
                self.val.push(v);
                last = c;
            }
        }
        self.row_ptr.push(self.col.len());
    }

    pub fn finish(self) -> Csr {
        Csr {
            nrows: self.row_ptr.len() - 1,
            ncols: self.ncols,
            row_ptr: self.row_ptr,
            col: self.col,
            val: self.val,
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Csr {
        Csr::from_dense(&[
            vec![4.0, -1.0, 0.0],
            vec![-1.0, 4.0, -2.0],
            vec![0.0, -1.0, 3.0],
        ])
    }

    #[test]
    fn matvec_matches_dense() {
        let a = sample();
        let mut y = vec![0.0; 3];
        a.matvec(&[1.0, 2.0, 3.0], &mut y);
        assert_eq!(y, vec![2.0, 1.0, 7.0]);
    }

    #[test]
    fn transpose_and_product() {
        let a = sample();
        let t = a.transpose();
        assert_eq!(t.get(2, 1), -2.0);
        assert_eq!(t.get(1, 2), -1.0);
        let p = a.matmul(&t);
        let d = a.to_dense();
        for i in 0..3 {
            for j in 0..3 {
                let e: f64 = (0..3).map(|k| d[i][k] * d[j][k]).sum();
                assert_eq!(p.get(i, j), e);
            }
        }
        assert!(a.asymmetry() > 0.0);
        assert_eq!(p.asymmetry(), 0.0);
    }

    #[test]
    fn builder_merges_duplicates() {
        let a = Csr::from_rows(3, &[vec![(2, 1.0), (0, 1.0), (2, 2.0)]]);
        assert_eq!(a.col, vec![0, 2]);
        assert_eq!(a.val, vec![1.0, 3.0]);
        assert_eq!(a.diagonal_positions(), vec![0]);
    }
}
