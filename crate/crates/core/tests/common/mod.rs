//! Reference computations that share no code with the library.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

/// Ground state below ν₁ = π²/4 of the bent strip (−1,1) with curvature
/// κ(s) = amp·e^{−s²}, computed on the infinite line.
///
/// The wave function is expanded in the first `modes` transverse sines, which turns
/// the eigenproblem into 2·modes first-order ODEs in s. Outside |s| ≤ s_max the
/// strip is straight to machine precision, so the decaying solutions are known there;
/// they are integrated inwards with RK4 (re-orthonormalized every step) and an
/// eigenvalue is a zero of the matching determinant at s = 0.
pub struct StripOracle {
    modes: usize,
    step: f64,
    s_max: f64,
    /// (A, V) Galerkin matrices at s = −s_max + k·step/2.
    table: Vec<(DMatrix<f64>, DMatrix<f64>)>,
    nu: Vec<f64>,
}

fn kappa(amp: f64, s: f64) -> [f64; 3] {
    let g = amp * (-s * s).exp();
    [g, -2.0 * s * g, (4.0 * s * s - 2.0) * g]
}

impl StripOracle {
    pub fn new(amp: f64, modes: usize, step: f64, s_max: f64) -> Self {
        let nu: Vec<f64> = (1..=modes).map(|n| (n as f64 * PI / 2.0).powi(2)).collect();
        let quad = 2000;
        let du = 2.0 / quad as f64;
        let weights: Vec<f64> = (0..=quad)
            .map(|i| {
                let w = if i == 0 || i == quad { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                w * du / 3.0
            })
            .collect();
        let us: Vec<f64> = (0..=quad).map(|i| -1.0 + i as f64 * du).collect();
        let chi: Vec<Vec<f64>> = (1..=modes)
            .map(|n| us.iter().map(|u| (n as f64 * PI * (u + 1.0) / 2.0).sin()).collect())
            .collect();
        let count = (2.0 * s_max / step).round() as usize * 2 + 1;
        let mut table = Vec::with_capacity(count);
        for k in 0..count {
            let s = -s_max + k as f64 * step / 2.0;
            let [kp, kd, kdd] = kappa(amp, s);
            let mut a = DMatrix::zeros(modes, modes);
            let mut v = DMatrix::zeros(modes, modes);
            for (q, u) in us.iter().enumerate() {
                let h = 1.0 - kp * u;
                let hs = -kd * u;
                let hss = -kdd * u;
                let pot = -1.25 * hs * hs / h.powi(4) + 0.5 * hss / h.powi(3) - 0.25 * kp * kp / (h * h);
                let g = 1.0 / (h * h);
                for n in 0..modes {
                    for m in n..modes {
                        let w = weights[q] * chi[n][q] * chi[m][q];
                        a[(n, m)] += w * g;
                        v[(n, m)] += w * pot;
                    }
                }
            }
            for n in 0..modes {
                for m in 0..n {
                    a[(n, m)] = a[(m, n)];
                    v[(n, m)] = v[(m, n)];
                }
            }
            table.push((a, v));
        }
        Self { modes, step, s_max, table, nu }
    }

    fn rhs(&self, k: usize, e: f64, y: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.modes;
        let (a, v) = &self.table[k];
        let phi = y.rows(0, n);
        let p = y.rows(n, n);
        let dphi = a.clone().lu().solve(&p.into_owned()).unwrap();
        let mut c = v.clone();
        for i in 0..n {
            c[(i, i)] += self.nu[i] - e;
        }
        let dp = c * phi;
        let mut out = DMatrix::zeros(2 * n, n);
        out.rows_mut(0, n).copy_from(&dphi);
        out.rows_mut(n, n).copy_from(&dp);
        out
    }

    fn orthonormalize(y: DMatrix<f64>) -> DMatrix<f64> {
        let qr = y.qr();
        let r = qr.r();
        let mut q = qr.q();
        for j in 0..q.ncols() {
            if r[(j, j)] < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        q
    }

    /// Decaying solution space at s = 0 coming from one side.
    fn shoot(&self, e: f64, from_left: bool) -> DMatrix<f64> {
        let n = self.modes;
        let mut y = DMatrix::zeros(2 * n, n);
        for i in 0..n {
            let k = (self.nu[i] - e).sqrt();
            y[(i, i)] = 1.0;
            y[(n + i, i)] = if from_left { k } else { -k };
        }
        let steps = (self.s_max / self.step).round() as usize;
        let last = self.table.len() - 1;
        let h = if from_left { self.step } else { -self.step };
        for j in 0..steps {
            let (k0, k1, k2) = if from_left { (2 * j, 2 * j + 1, 2 * j + 2) } else { (last - 2 * j, last - 2 * j - 1, last - 2 * j - 2) };
            let f1 = self.rhs(k0, e, &y);
            let f2 = self.rhs(k1, e, &(&y + &f1 * (0.5 * h)));
            let f3 = self.rhs(k1, e, &(&y + &f2 * (0.5 * h)));
            let f4 = self.rhs(k2, e, &(&y + &f3 * h));
            y = Self::orthonormalize(&y + (f1 + f2 * 2.0 + f3 * 2.0 + f4) * (h / 6.0));
        }
        y
    }

    pub fn matching_determinant(&self, e: f64) -> f64 {
        let n = self.modes;
        let l = self.shoot(e, true);
        let r = self.shoot(e, false);
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.columns_mut(0, n).copy_from(&l);
        m.columns_mut(n, n).copy_from(&r);
        m.determinant()
    }

    /// The lowest zero of the matching determinant in (lo, hi), by scanning and
    /// bisection.
    pub fn ground_state(&self, lo: f64, hi: f64, scan: usize) -> Option<f64> {
        let grid: Vec<f64> = (0..=scan).map(|i| lo + (hi - lo) * i as f64 / scan as f64).collect();
        let mut prev = (grid[0], self.matching_determinant(grid[0]));
        for &e in &grid[1..] {
            let d = self.matching_determinant(e);
            if d.signum() != prev.1.signum() {
                let (mut a, mut b, mut da) = (prev.0, e, prev.1);
                for _ in 0..60 {
                    let mid = 0.5 * (a + b);
                    let dm = self.matching_determinant(mid);
                    if dm.signum() == da.signum() {
                        a = mid;
                        da = dm;
                    } else {
                        b = mid;
                    }
                }
                return Some(0.5 * (a + b));
            }
            prev = (e, d);
        }
        None
    }
}

pub fn vector(values: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(values)
}
