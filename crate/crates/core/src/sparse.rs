//! Compressed sparse row matrices and a banded LDLᵀ factorization with inertia.

use std::io::{self, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Square sparse matrix in CSR layout with sorted, duplicate-free rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Accumulates (row, col, value) entries; duplicates are summed on [`build`](Self::build).
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn with_capacity(n: usize, capacity: usize) -> Self {
        Self {
            n,
            entries: Vec::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push((row, col, value));
    }

    /// Adds `value` at (i, j) and (j, i); the diagonal gets it once.
    pub fn push_symmetric(&mut self, i: usize, j: usize, value: f64) {
        self.push(i, j, value);
        if i != j {
            self.push(j, i, value);
        }
    }

    pub fn build(mut self) -> CsrMatrix {
        self.entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n: self.n,
            row_ptr,
            cols,
            vals,
        }
    }
}

impl CsrMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn diagonal_matrix(values: &[f64]) -> Self {
        let n = values.len();
        CsrMatrix {
            n,
            row_ptr: (0..=n).collect(),
            cols: (0..n).collect(),
            vals: values.to_vec(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal_matrix(&vec![1.0; n])
    }

    /// (column, value) pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
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

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            *yi = self.cols[r.clone()]
                .iter()
                .zip(&self.vals[r])
                .map(|(&j, v)| v * x[j])
                .sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// xᵀ M x
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut b = TripletBuilder::with_capacity(self.n, self.nnz());
        for (i, j, v) in self.triplets() {
            b.push(j, i, v);
        }
        b.build()
    }

    /// max |M − Mᵀ| entrywise.
    pub fn max_asymmetry(&self) -> f64 {
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// max |M + Mᵀ| entrywise.
    pub fn max_symmetric_part(&self) -> f64 {
        self.triplets()
            .map(|(i, j, v)| (v + self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self) -> bool {
        self.max_asymmetry() == 0.0
    }

    /// Largest |i − j| over stored entries.
    pub fn bandwidth(&self) -> usize {
        self.triplets().map(|(i, j, _)| i.abs_diff(j)).max().unwrap_or(0)
    }

    pub fn add_diagonal(&self, shift: f64) -> CsrMatrix {
        let mut b = TripletBuilder::with_capacity(self.n, self.nnz() + self.n);
        for (i, j, v) in self.triplets() {
            b.push(i, j, v);
        }
        for i in 0..self.n {
            b.push(i, i, shift);
        }
        b.build()
    }

    pub fn scale(&self, factor: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// D M D for a diagonal D given by `d`.
    pub fn scale_symmetric(&self, d: &[f64]) -> CsrMatrix {
        let mut out = self.clone();
        for i in 0..self.n {
            for k in out.row_ptr[i]..out.row_ptr[i + 1] {
                out.vals[k] *= d[i] * d[out.cols[k]];
            }
        }
        out
    }

    pub fn add(&self, other: &CsrMatrix, factor: f64) -> CsrMatrix {
        let mut b = TripletBuilder::with_capacity(self.n, self.nnz() + other.nnz());
        for (i, j, v) in self.triplets() {
            b.push(i, j, v);
        }
        for (i, j, v) in other.triplets() {
            b.push(i, j, factor * v);
        }
        b.build()
    }

    pub fn matmul(&self, other: &CsrMatrix) -> CsrMatrix {
        let mut b = TripletBuilder::new(self.n);
        let mut acc: Vec<f64> = vec![0.0; self.n];
        let mut seen = vec![false; self.n];
        let mut touched: Vec<usize> = Vec::new();
        for i in 0..self.n {
            for (k, a) in self.row(i) {
                for (j, c) in other.row(k) {
                    if !seen[j] {
                        seen[j] = true;
                        touched.push(j);
                    }
                    acc[j] += a * c;
                }
            }
            for &j in &touched {
                b.push(i, j, acc[j]);
                acc[j] = 0.0;
                seen[j] = false;
            }
            touched.clear();
        }
        b.build()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    /// Gershgorin lower bound on the spectrum of a symmetric matrix.
    pub fn gershgorin_lower(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let mut diag = 0.0;
                let mut off = 0.0;
                for (j, v) in self.row(i) {
                    if j == i {
                        diag = v;
                    } else {
                        off += v.abs();
                    }
                }
                diag - off
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// max_i Σ_j |m_ij|
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Coordinate triplet text: `row col value` per line, zero-based indices.
    pub fn write_triplets<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# dim {} nnz {}", self.n, self.nnz())?;
        for (i, j, v) in self.triplets() {
            writeln!(out, "{i} {j} {v:.17e}")?;
        }
        Ok(())
    }
}

/// LDLᵀ factorization of a symmetric banded matrix without pivoting.
///
/// Row `i` stores L_{i,i−b..i−1} followed by the pivot d_i.
#[derive(Debug, Clone)]
pub struct BandedLdl {
    n: usize,
    band: usize,
    data: Vec<f64>,
}

impl BandedLdl {
    /// Factors `m − shift·I`.
    pub fn factor(m: &CsrMatrix, shift: f64) -> Result<Self> {
        let n = m.dim();
        let b = m.bandwidth();
        let w = b + 1;
        let mut data = vec![0.0; n * w];
        for i in 0..n {
            for (j, v) in m.row(i) {
                if j <= i {
                    data[i * w + (j + b - i)] += v;
                }
            }
            data[i * w + b] -= shift;
        }
        let mut tmp = vec![0.0; w];
        for i in 0..n {
            let lo = i.saturating_sub(b);
            let (prev, row_i) = data.split_at_mut(i * w);
            let row_i = &mut row_i[..w];
            // tmp[k - lo] holds L_ik d_k
            for j in lo..i {
                let row_j = &prev[j * w..(j + 1) * w];
                let mut s = row_i[j + b - i];
                let kl = lo.max(j.saturating_sub(b));
                for k in kl..j {
                    s -= tmp[k - lo] * row_j[k + b - j];
                }
                tmp[j - lo] = s;
                row_i[j + b - i] = s / row_j[b];
            }
            let mut d = row_i[b];
            for k in lo..i {
                d -= tmp[k - lo] * row_i[k + b - i];
            }
            if !d.is_finite() || d == 0.0 {
                return Err(Error::Factorization(format!(
                    "pivot {d} at row {i} (shift {shift})"
                )));
            }
            row_i[b] = d;
        }
        Ok(Self { n, band: b, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of negative pivots, which equals the number of eigenvalues of the
    /// factored matrix below the shift (Sylvester's law of inertia).
    pub fn negative_count(&self) -> usize {
        let w = self.band + 1;
        (0..self.n).filter(|&i| self.data[i * w + self.band] < 0.0).count()
    }

    /// Smallest |pivot|, a cheap conditioning hint.
    pub fn min_abs_pivot(&self) -> f64 {
        let w = self.band + 1;
        (0..self.n)
            .map(|i| self.data[i * w + self.band].abs())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let b = self.band;
        let w = b + 1;
        for i in 0..self.n {
            let lo = i.saturating_sub(b);
            let row = &self.data[i * w..(i + 1) * w];
            let mut s = x[i];
            for k in lo..i {
                s -= row[k + b - i] * x[k];
            }
            x[i] = s;
        }
        for i in 0..self.n {
            x[i] /= self.data[i * w + b];
        }
        for i in (0..self.n).rev() {
            let xi = x[i];
            let lo = i.saturating_sub(b);
            let row = &self.data[i * w..(i + 1) * w];
            for k in lo..i {
                x[k] -= row[k + b - i] * xi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> CsrMatrix {
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            b.push(i, i, 2.0);
            if i + 1 < n {
                b.push_symmetric(i, i + 1, -1.0);
            }
        }
        b.build()
    }

    #[test]
    fn builder_sums_duplicates() {
        let mut b = TripletBuilder::new(2);
        b.push(0, 1, 1.0);
        b.push(0, 1, 2.5);
        b.push(1, 1, -1.0);
        let m = b.build();
        assert_eq!(m.get(0, 1), 3.5);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(1, 0), 0.0);
    }

    #[test]
    fn ldl_solves_and_counts() {
        let m = tridiag(50);
        let f = BandedLdl::factor(&m, 0.0).unwrap();
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut y = m.mul_vec(&x);
        f.solve_in_place(&mut y);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-10);
        }
        // eigenvalues 2 − 2cos(kπ/51)
        let below = (1..=50)
            .filter(|k| 2.0 - 2.0 * (*k as f64 * std::f64::consts::PI / 51.0).cos() < 0.9)
            .count();
        assert_eq!(BandedLdl::factor(&m, 0.9).unwrap().negative_count(), below);
    }

    #[test]
    fn matmul_matches_dense() {
        let a = tridiag(6);
        let mut b = TripletBuilder::new(6);
        for i in 0..5 {
            b.push(i, i + 1, i as f64 + 1.0);
            b.push(i + 1, i, -(i as f64) - 1.0);
        }
        let s = b.build();
        let c = a.matmul(&s).to_dense();
        assert!((c - a.to_dense() * s.to_dense()).amax() < 1e-14);
        assert_eq!(s.max_symmetric_part(), 0.0);
    }
}
