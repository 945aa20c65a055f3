//! Compressed sparse row matrices.
//!
//! The CSR form here is canonical: row offsets are non-decreasing with
//! `row_offsets[n_rows] == nnz`, column indices are strictly increasing
//! within each row, and no explicit zeros are stored. Every constructor
//! and operation returns matrices in canonical form.
//!
//! `spmm` may distribute output rows over threads; each row is always
//! accumulated serially in ascending column order, so results are
//! bit-identical to the row-serial reference for any thread count.

use rayon::prelude::*;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Empty matrix of the given shape.
    pub fn empty(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Assembles a canonical CSR matrix from coordinate triplets.
    /// Duplicate positions are summed in input order; entries that end up
    /// exactly zero are dropped.
    pub fn from_triplets(
        rows: &[usize],
        cols: &[usize],
        vals: &[f64],
        shape: (usize, usize),
    ) -> Result<Self> {
        if rows.len() != cols.len() || rows.len() != vals.len() {
            return Err(Error::ShapeMismatch(
                "triplet arrays have differing lengths".into(),
            ));
        }
        let (n_rows, n_cols) = shape;
        for (&r, &c) in rows.iter().zip(cols) {
            if r >= n_rows || c >= n_cols {
                return Err(Error::IndexOutOfBounds(format!(
                    "triplet ({r},{c}) outside {n_rows}x{n_cols}"
                )));
            }
        }
        if let Some(bad) = vals.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite triplet value at index {bad}"
            )));
        }

        // Stable sort by (row, col) keeps input order within duplicates,
        // which fixes the summation order.
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.sort_by_key(|&i| (rows[i], cols[i]));

        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(order.len());
        let mut values = Vec::with_capacity(order.len());

        let mut it = order.into_iter().peekable();
        while let Some(i) = it.next() {
            let (r, c) = (rows[i], cols[i]);
            let mut acc = vals[i];
            while let Some(&j) = it.peek() {
                if rows[j] == r && cols[j] == c {
                    acc += vals[j];
                    it.next();
                } else {
                    break;
                }
            }
            if acc != 0.0 {
                col_indices.push(c);
                values.push(acc);
                row_offsets[r + 1] += 1;
            }
        }
        for r in 0..n_rows {
            row_offsets[r + 1] += row_offsets[r];
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Iterates the stored `(col, value)` pairs of one row.
    pub fn row_iter(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_offsets[r];
        let hi = self.row_offsets[r + 1];
        self.col_indices[lo..hi]
            .iter()
            .zip(&self.values[lo..hi])
            .map(|(&c, &v)| (c, v))
    }

    /// True when offsets, ordering, and no-explicit-zero all hold.
    pub fn is_canonical(&self) -> bool {
        if self.row_offsets.len() != self.n_rows + 1
            || *self.row_offsets.last().unwrap_or(&0) != self.values.len()
            || self.col_indices.len() != self.values.len()
        {
            return false;
        }
        for r in 0..self.n_rows {
            if self.row_offsets[r] > self.row_offsets[r + 1] {
                return false;
            }
            let row = &self.col_indices[self.row_offsets[r]..self.row_offsets[r + 1]];
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return false;
            }
            if row.iter().any(|&c| c >= self.n_cols) {
                return false;
            }
        }
        self.values.iter().all(|&v| v != 0.0 && v.is_finite())
    }

    /// Sparse-dense product `self * rhs`.
    pub fn spmm(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.n_cols != rhs.n_rows() {
            return Err(Error::ShapeMismatch(format!(
                "spmm {}x{} * {}x{}",
                self.n_rows,
                self.n_cols,
                rhs.n_rows(),
                rhs.n_cols()
            )));
        }
        let nc = rhs.n_cols();
        let mut out = DenseMatrix::zeros(self.n_rows, nc);
        out.values_mut()
            .par_chunks_mut(nc.max(1))
            .enumerate()
            .for_each(|(i, out_row)| {
                for (c, v) in self.row_iter(i) {
                    let b_row = rhs.row(c);
                    for (o, &b) in out_row.iter_mut().zip(b_row) {
                        *o += v * b;
                    }
                }
            });
        Ok(out)
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.n_cols {
            counts[c + 1] += counts[c];
        }
        let row_offsets = counts.clone();
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        let mut cursor = counts;
        for r in 0..self.n_rows {
            for (c, v) in self.row_iter(r) {
                let dst = cursor[c];
                col_indices[dst] = r;
                values[dst] = v;
                cursor[c] += 1;
            }
        }
        SparseMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Multiplies row `i` by `scaling[i]`. Entries scaled to exact zero are
    /// dropped to keep the result canonical.
    pub fn scale_rows(&self, scaling: &[f64]) -> Result<SparseMatrix> {
        if scaling.len() != self.n_rows {
            return Err(Error::ShapeMismatch("scale_rows vector length".into()));
        }
        if scaling.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "non-finite row scaling factor".into(),
            ));
        }
        self.scaled(|r, _| scaling[r])
    }

    /// Multiplies column `j` by `scaling[j]`.
    pub fn scale_cols(&self, scaling: &[f64]) -> Result<SparseMatrix> {
        if scaling.len() != self.n_cols {
            return Err(Error::ShapeMismatch("scale_cols vector length".into()));
        }
        if scaling.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "non-finite column scaling factor".into(),
            ));
        }
        self.scaled(|_, c| scaling[c])
    }

    fn scaled(&self, factor: impl Fn(usize, usize) -> f64) -> Result<SparseMatrix> {
        let mut row_offsets = vec![0usize; self.n_rows + 1];
        let mut col_indices = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        for r in 0..self.n_rows {
            for (c, v) in self.row_iter(r) {
                let scaled = v * factor(r, c);
                if scaled != 0.0 {
                    col_indices.push(c);
                    values.push(scaled);
                    row_offsets[r + 1] += 1;
                }
            }
        }
        for r in 0..self.n_rows {
            row_offsets[r + 1] += row_offsets[r];
        }
        Ok(SparseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Sparse-sparse product `self * rhs` via row-wise expansion with a
    /// dense accumulator. Accumulation order within an output row follows
    /// ascending `k` over `self`'s row, then ascending column within
    /// `rhs`'s row `k`, which fixes the floating-point result.
    pub fn spgemm(&self, rhs: &SparseMatrix) -> Result<SparseMatrix> {
        if self.n_cols != rhs.n_rows {
            return Err(Error::ShapeMismatch(format!(
                "spgemm {}x{} * {}x{}",
                self.n_rows, self.n_cols, rhs.n_rows, rhs.n_cols
            )));
        }
        let mut row_offsets = vec![0usize; self.n_rows + 1];
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        let mut acc = vec![0.0f64; rhs.n_cols];
        let mut touched: Vec<usize> = Vec::new();
        for r in 0..self.n_rows {
            touched.clear();
            for (k, a) in self.row_iter(r) {
                for (c, b) in rhs.row_iter(k) {
                    if acc[c] == 0.0 && !touched.contains(&c) {
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                let v = acc[c];
                acc[c] = 0.0;
                if v != 0.0 {
                    col_indices.push(c);
                    values.push(v);
                    row_offsets[r + 1] += 1;
                }
            }
        }
        for r in 0..self.n_rows {
            row_offsets[r + 1] += row_offsets[r];
        }
        Ok(SparseMatrix {
            n_rows: self.n_rows,
            n_cols: rhs.n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for r in 0..self.n_rows {
            for (c, v) in self.row_iter(r) {
                out.set(r, c, v);
            }
        }
        out
    }

    /// Largest-magnitude eigenvalue estimate via power iteration with a
    /// fixed pseudo-random start vector. Intended for symmetric operators;
    /// the Rayleigh quotient then converges to the spectral radius from
    /// below.
    pub fn spectral_radius_est(&self, max_iters: usize) -> f64 {
        assert_eq!(self.n_rows, self.n_cols, "square matrix required");
        let n = self.n_rows;
        if n == 0 || self.nnz() == 0 {
            return 0.0;
        }
        // xorshift-style deterministic start; independent of any seed the
        // caller is using elsewhere.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut x: Vec<f64> = (0..n)
            .map(|_| {
                state = crate::seed::splitmix64(state);
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        x.iter_mut().for_each(|v| *v /= norm);

        let mut lambda = 0.0f64;
        let mut y = vec![0.0f64; n];
        for _ in 0..max_iters {
            y.iter_mut().for_each(|v| *v = 0.0);
            for r in 0..n {
                let mut s = 0.0;
                for (c, v) in self.row_iter(r) {
                    s += v * x[c];
                }
                y[r] = s;
            }
            let prev = lambda;
            lambda = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
            let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if y_norm == 0.0 {
                return 0.0;
            }
            for (xv, yv) in x.iter_mut().zip(&y) {
                *xv = yv / y_norm;
            }
            if (lambda - prev).abs() <= 1e-14 * lambda.abs().max(1.0) {
                break;
            }
        }
        lambda.abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_oracle_mul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(a.n_rows(), b.n_cols());
        for i in 0..a.n_rows() {
            for k in 0..a.n_cols() {
                for j in 0..b.n_cols() {
                    let v = out.get(i, j) + a.get(i, k) * b.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = SparseMatrix::from_triplets(&[0, 0], &[0, 0], &[1.0, 2.0], (1, 1)).unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.values(), &[3.0]);
    }

    #[test]
    fn triplets_drop_zero() {
        let m = SparseMatrix::from_triplets(&[0], &[1], &[0.0], (2, 2)).unwrap();
        assert_eq!(m.nnz(), 0);
        assert!(m.is_canonical());
    }

    #[test]
    fn triplets_row_offsets() {
        let m = SparseMatrix::from_triplets(&[1], &[0], &[5.0], (2, 3)).unwrap();
        assert_eq!(m.row_offsets(), &[0, 0, 1]);
    }

    #[test]
    fn triplets_out_of_bounds() {
        assert!(matches!(
            SparseMatrix::from_triplets(&[2], &[0], &[1.0], (2, 2)),
            Err(Error::IndexOutOfBounds(_))
        ));
    }

    #[test]
    fn spmm_identity() {
        let x = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let i3 = SparseMatrix::identity(3);
        assert_eq!(i3.spmm(&x).unwrap(), x);
    }

    #[test]
    fn spmm_zero() {
        let x = DenseMatrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let z = SparseMatrix::empty(2, 2);
        assert_eq!(z.spmm(&x).unwrap(), DenseMatrix::zeros(2, 1));
    }

    #[test]
    fn transpose_involution() {
        let m = SparseMatrix::from_triplets(
            &[0, 1, 1, 2],
            &[2, 0, 1, 2],
            &[1.0, -2.0, 3.5, 4.0],
            (3, 3),
        )
        .unwrap();
        assert_eq!(m.transpose().transpose(), m);
    }

    #[test]
    fn scale_rows_by_ones_is_identity() {
        let m =
            SparseMatrix::from_triplets(&[0, 1], &[1, 0], &[2.0, 3.0], (2, 2)).unwrap();
        assert_eq!(m.scale_rows(&[1.0, 1.0]).unwrap(), m);
    }

    fn random_sparse(seed: u64, n_rows: usize, n_cols: usize, density: f64) -> SparseMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for r in 0..n_rows {
            for c in 0..n_cols {
                if rng.gen::<f64>() < density {
                    rows.push(r);
                    cols.push(c);
                    vals.push(rng.gen_range(-2.0..2.0));
                }
            }
        }
        SparseMatrix::from_triplets(&rows, &cols, &vals, (n_rows, n_cols)).unwrap()
    }

    #[test]
    fn spmm_matches_dense_oracle_8x8() {
        let s = random_sparse(42, 8, 8, 0.4);
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let d = DenseMatrix::from_vec(8, 5, (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .unwrap();
        let got = s.spmm(&d).unwrap();
        let want = dense_oracle_mul(&s.to_dense(), &d);
        assert!(got.max_abs_diff(&want) <= 1e-12);
    }

    #[test]
    fn spgemm_matches_dense_oracle_6x6() {
        let a = random_sparse(1, 6, 6, 0.5);
        let b = random_sparse(2, 6, 6, 0.5);
        let got = a.spgemm(&b).unwrap().to_dense();
        let want = dense_oracle_mul(&a.to_dense(), &b.to_dense());
        assert!(got.max_abs_diff(&want) <= 1e-12);
        assert!(a.spgemm(&b).unwrap().is_canonical());
    }

    #[test]
    fn spectral_radius_of_identity() {
        let i = SparseMatrix::identity(6);
        assert!((i.spectral_radius_est(100) - 1.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn prop_spmm_matches_dense_oracle(seed in 0u64..1000, n in 1usize..64, m in 1usize..64, k in 1usize..8) {
            let s = random_sparse(seed, n, m, 0.2);
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
            let d = DenseMatrix::from_vec(m, k, (0..m * k).map(|_| rng.gen_range(-1e3..1e3)).collect()).unwrap();
            let got = s.spmm(&d).unwrap();
            let want = dense_oracle_mul(&s.to_dense(), &d);
            prop_assert!(got.max_abs_diff(&want) <= 1e-12 * 1e3);
        }

        #[test]
        fn prop_canonicalization_idempotent(seed in 0u64..1000, n in 1usize..32, m in 1usize..32) {
            let s = random_sparse(seed, n, m, 0.3);
            // Re-assemble from its own triplets; must be a no-op.
            let mut rows = Vec::new();
            let mut cols = Vec::new();
            let mut vals = Vec::new();
            for r in 0..n {
                for (c, v) in s.row_iter(r) {
                    rows.push(r);
                    cols.push(c);
                    vals.push(v);
                }
            }
            let re = SparseMatrix::from_triplets(&rows, &cols, &vals, (n, m)).unwrap();
            prop_assert_eq!(re, s);
        }

        #[test]
        fn prop_spgemm_associative(seed in 0u64..500, n in 1usize..10) {
            let a = random_sparse(seed, n, n, 0.4);
            let b = random_sparse(seed ^ 1, n, n, 0.4);
            let c = random_sparse(seed ^ 2, n, n, 0.4);
            let left = a.spgemm(&b).unwrap().spgemm(&c).unwrap().to_dense();
            let right = a.spgemm(&b.spgemm(&c).unwrap()).unwrap().to_dense();
            prop_assert!(left.max_abs_diff(&right) <= 1e-10);
        }
    }
}
