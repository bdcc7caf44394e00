//! Dense and sparse storage plus a blocked Cholesky factorization.
//!
//! The nonlocal stiffness couples every pair of degrees of freedom, so the
//! system matrices are stored dense (row-major). Mass matrices only couple
//! neighbouring vertices and are kept in CSR form.

use std::cell::Cell;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Square dense matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data; `data.len()` must be `n * n`.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Parameter(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = dot(self.row(i), x);
        }
    }

    /// `x^T M x`
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.matvec(x))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `max |M - M^T| / max |M|` (zero for the zero matrix).
    pub fn asymmetry(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst / scale
    }

    /// Replaces the matrix by `(M + M^T) / 2`.
    pub fn symmetrize(&mut self) {
        let n = self.n;
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = v;
                self.data[j * n + i] = v;
            }
        }
    }

    /// `self += alpha * other`
    pub fn add_scaled(&mut self, alpha: f64, other: &DenseMatrix) {
        assert_eq!(self.n, other.n);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    /// `self += alpha * other` for a sparse `other` of the same size.
    pub fn add_scaled_sparse(&mut self, alpha: f64, other: &CsrMatrix) {
        assert_eq!(self.n, other.dim());
        for i in 0..self.n {
            for (j, v) in other.row_iter(i) {
                self.data[i * self.n + j] += alpha * v;
            }
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    /// Writes `i,j,value` rows for entries with magnitude above `1e-15`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "i,j,value")?;
        for i in 0..self.n {
            for (j, v) in self.row(i).iter().enumerate() {
                if v.abs() > 1e-15 {
                    writeln!(out, "{i},{j},{v:e}")?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Square sparse matrix in compressed-row form with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i},{j}) out of range for n={n}");
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row_iter(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row_iter(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.matvec(x))
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n);
        for i in 0..self.n {
            for (j, v) in self.row_iter(i) {
                d[(i, j)] = v;
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `max |M - M^T| / max |M|`
    pub fn asymmetry(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for (j, v) in self.row_iter(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    /// Row sums, i.e. `M * 1`.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row_iter(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "i,j,value")?;
        for i in 0..self.n {
            for (j, v) in self.row_iter(i) {
                if v.abs() > 1e-15 {
                    writeln!(out, "{i},{j},{v:e}")?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

const BLOCK: usize = 48;

/// Lower-triangular Cholesky factor `S = L L^T` of a symmetric positive
/// definite matrix. Only the lower triangle of the input is read.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
    solves: Cell<usize>,
}

impl Cholesky {
    /// Factorizes `s`. Fails when a pivot drops below `pivot_tol * max|diag|`
    /// (or is not positive); the error names the offending row.
    pub fn factor(s: &DenseMatrix) -> Result<Self> {
        Self::factor_with_tolerance(s, 1e-14)
    }

    pub fn factor_with_tolerance(s: &DenseMatrix, pivot_tol: f64) -> Result<Self> {
        let n = s.dim();
        let mut l = s.as_slice().to_vec();
        // zero the strict upper triangle so rows can be used as dot operands
        for i in 0..n {
            for j in i + 1..n {
                l[i * n + j] = 0.0;
            }
        }
        let diag_scale = (0..n).fold(0.0_f64, |m, i| m.max(s[(i, i)].abs()));
        let threshold = pivot_tol * diag_scale.max(f64::MIN_POSITIVE);

        let mut j0 = 0;
        while j0 < n {
            let j1 = (j0 + BLOCK).min(n);
            // left-looking update of the block column with the finished panel
            if j0 > 0 {
                for i in j0..n {
                    let jmax = j1.min(i + 1);
                    let (head, tail) = l.split_at_mut(i * n);
                    let li = &mut tail[..n];
                    let (done, cur) = li.split_at_mut(j0);
                    for (jj, c) in cur.iter_mut().enumerate().take(jmax - j0) {
                        let j = j0 + jj;
                        let lj = if j < i { &head[j * n..j * n + j0] } else { &*done };
                        *c -= dot(done, lj);
                    }
                }
            }
            // unblocked factorization of the diagonal block and panel below it
            for j in j0..j1 {
                let mut d = l[j * n + j];
                for k in j0..j {
                    d -= l[j * n + k] * l[j * n + k];
                }
                if !(d > threshold) {
                    return Err(Error::Solver(format!(
                        "matrix is not positive definite: pivot {d:.3e} at row {j} (threshold {threshold:.3e})"
                    )));
                }
                let d = d.sqrt();
                l[j * n + j] = d;
                for i in j + 1..n {
                    let mut v = l[i * n + j];
                    for k in j0..j {
                        v -= l[i * n + k] * l[j * n + k];
                    }
                    l[i * n + j] = v / d;
                }
            }
            j0 = j1;
        }
        Ok(Self { n, l, solves: Cell::new(0) })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of triangular solve pairs performed so far.
    pub fn solve_count(&self) -> usize {
        self.solves.get()
    }

    /// Solves `S x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            b[i] = (b[i] - dot(row, &b[..i])) / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let xi = b[i] / self.l[i * n + i];
            b[i] = xi;
            let row = &self.l[i * n..i * n + i];
            for (bk, lk) in b[..i].iter_mut().zip(row) {
                *bk -= lk * xi;
            }
        }
        self.solves.set(self.solves.get() + 1);
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Smallest diagonal entry of `L` (square root of the smallest pivot).
    pub fn min_pivot(&self) -> f64 {
        (0..self.n).map(|i| self.l[i * self.n + i]).fold(f64::INFINITY, f64::min)
    }
}
