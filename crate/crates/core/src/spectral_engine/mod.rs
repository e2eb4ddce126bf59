//! Eigenvalue computations on assembled operators, bound-state ladders, the
//! dilation/commutator discretization and the Mourre check.

pub mod bound_states;
pub mod conjugate;
pub mod mourre;
pub mod report;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{input, Error, Result};
use crate::sparse::{BandedLdl, CsrMatrix};

pub use bound_states::{bound_states, BoundState, BoundStateReport, ConvergencePolicy, OperatorRecipe};
pub use conjugate::{assemble_commutator, assemble_dilation, direct_commutator, direct_commutator_form};
pub use mourre::{mourre_check_free, MourreCheck, MourreWindow};
pub use report::SpectralReport;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Residual target ‖Mv − λv‖ ≤ tol·max(1, ‖M‖∞) for unit v.
    pub tol: f64,
    pub max_restarts: usize,
    /// Krylov basis size per restart; 0 picks max(2k + 20, 40).
    pub krylov_dim: usize,
    /// Matrices up to this dimension are solved densely.
    pub dense_limit: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_restarts: 60,
            krylov_dim: 0,
            dense_limit: 2000,
            seed: 0x5eed_cafe,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    Dense,
    ShiftInvertLanczos,
}

/// Eigenpairs with their residual norms, sorted by eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    /// Lanczos steps taken (0 for the dense path).
    pub iterations: usize,
    pub method: SolverMethod,
    pub shift: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn residual(m: &CsrMatrix, lambda: f64, v: &[f64]) -> f64 {
    let mut r = m.mul_vec(v);
    axpy(-lambda, v, &mut r);
    norm(&r)
}

fn residual_scale(m: &CsrMatrix) -> f64 {
    m.norm_inf().max(1.0)
}

/// Number of eigenvalues of `m` strictly below `x`.
pub fn count_below(m: &CsrMatrix, x: f64) -> Result<usize> {
    Ok(factor_near(m, x)?.0.negative_count())
}

/// Number of eigenvalues in the open window (lo, hi).
pub fn count_in_window(m: &CsrMatrix, lo: f64, hi: f64) -> Result<usize> {
    if !(lo < hi) {
        return Err(Error::Window(format!("empty window ({lo}, {hi})")));
    }
    Ok(count_below(m, hi)? - count_below(m, lo)?)
}

/// Factors M − σI, nudging σ by tiny amounts if a pivot vanishes exactly.
fn factor_near(m: &CsrMatrix, sigma: f64) -> Result<(BandedLdl, f64)> {
    let scale = residual_scale(m);
    let mut last = None;
    for attempt in 0..4 {
        let s = sigma + attempt as f64 * 1e-12 * scale;
        match BandedLdl::factor(m, s) {
            Ok(f) => return Ok((f, s)),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap())
}

fn dense_eigen(m: &CsrMatrix) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.to_dense());
    let mut order: Vec<usize> = (0..m.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.dim(), m.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

fn dense_result(m: &CsrMatrix, pick: &[usize], values: &[f64], vectors: &DMatrix<f64>) -> EigenResult {
    let vecs: Vec<Vec<f64>> = pick.iter().map(|&i| vectors.column(i).iter().copied().collect()).collect();
    let vals: Vec<f64> = pick.iter().map(|&i| values[i]).collect();
    let residuals = vals.iter().zip(&vecs).map(|(l, v)| residual(m, *l, v)).collect();
    EigenResult {
        values: vals,
        vectors: vecs,
        residuals,
        iterations: 0,
        method: SolverMethod::Dense,
        shift: f64::NAN,
    }
}

fn check_request(m: &CsrMatrix, k: usize) -> Result<()> {
    if k == 0 {
        return input("at least one eigenvalue must be requested");
    }
    if k > m.dim() {
        return input(format!("{k} eigenvalues requested from a {}-dimensional operator", m.dim()));
    }
    Ok(())
}

/// The `k` smallest eigenvalues of a symmetric matrix.
pub fn lowest_eigenvalues(m: &CsrMatrix, k: usize, opts: &EigenOptions) -> Result<EigenResult> {
    check_request(m, k)?;
    if m.dim() <= opts.dense_limit {
        let (values, vectors) = dense_eigen(m);
        let pick: Vec<usize> = (0..k).collect();
        return Ok(dense_result(m, &pick, &values, &vectors));
    }
    // Stage 1: a rough estimate of the bottom of the spectrum from a shift safely below it.
    let sigma0 = (m.gershgorin_lower() - 1.0).min(-1.0);
    let (f0, sigma0) = factor_near(m, sigma0)?;
    let rough = ShiftInvert::new(m, f0, sigma0, opts).run(1, true)?;
    // Stage 2: move the shift just below the estimate, verified by inertia.
    let estimate = rough.values[0];
    let mut delta = 1e-3 * estimate.abs().max(1.0);
    let mut chosen = None;
    while estimate - delta > sigma0 {
        let (f, s) = factor_near(m, estimate - delta)?;
        if f.negative_count() == 0 {
            chosen = Some((f, s));
            break;
        }
        delta *= 10.0;
    }
    let (f, sigma) = match chosen {
        Some(c) => c,
        None => factor_near(m, sigma0)?,
    };
    let mut result = ShiftInvert::new(m, f, sigma, opts).run(k, false)?;
    // Every eigenvalue up to the largest one found must have been found.
    let top = result.values[k - 1];
    let gap = 1e-9 * top.abs().max(1.0);
    let below = count_below(m, top + gap)?;
    if below > k {
        let mut retry = *opts;
        retry.krylov_dim = 2 * opts.krylov_dim.max(2 * k + 20).max(40);
        retry.seed = opts.seed.wrapping_add(1);
        let (f, sigma) = factor_near(m, sigma)?;
        result = ShiftInvert::new(m, f, sigma, &retry).run(k, false)?;
        let top = result.values[k - 1];
        if count_below(m, top + gap)? > k {
            return Err(Error::Solver {
                iterations: result.iterations,
                residual: f64::NAN,
            });
        }
    }
    Ok(result)
}

/// The `k` eigenpairs closest to `sigma`, sorted by eigenvalue.
pub fn eigenpairs_near(m: &CsrMatrix, sigma: f64, k: usize, opts: &EigenOptions) -> Result<EigenResult> {
    check_request(m, k)?;
    if m.dim() <= opts.dense_limit {
        let (values, vectors) = dense_eigen(m);
        let mut pick: Vec<usize> = (0..m.dim()).collect();
        pick.sort_by(|&a, &b| (values[a] - sigma).abs().total_cmp(&(values[b] - sigma).abs()));
        pick.truncate(k);
        pick.sort();
        return Ok(dense_result(m, &pick, &values, &vectors));
    }
    let (f, s) = factor_near(m, sigma)?;
    ShiftInvert::new(m, f, s, opts).run(k, false)
}

/// Lanczos on (M − σI)⁻¹ with full reorthogonalization, locking and explicit restarts.
struct ShiftInvert<'a> {
    m: &'a CsrMatrix,
    factor: BandedLdl,
    sigma: f64,
    opts: &'a EigenOptions,
}

impl<'a> ShiftInvert<'a> {
    fn new(m: &'a CsrMatrix, factor: BandedLdl, sigma: f64, opts: &'a EigenOptions) -> Self {
        Self { m, factor, sigma, opts }
    }

    /// (M − σI)⁻¹v. Without pivoting the factorization at an interior shift can lose
    /// digits, so it is followed by iterative refinement there.
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut x = v.to_vec();
        self.factor.solve_in_place(&mut x);
        if self.factor.negative_count() == 0 {
            return x;
        }
        let nv = norm(v);
        for _ in 0..3 {
            let mut r = self.m.mul_vec(&x);
            axpy(-self.sigma, &x, &mut r);
            r.iter_mut().zip(v).for_each(|(ri, vi)| *ri = vi - *ri);
            if norm(&r) <= 1e-15 * nv {
                break;
            }
            self.factor.solve_in_place(&mut r);
            axpy(1.0, &r, &mut x);
        }
        x
    }

    fn orthogonalize(v: &mut [f64], against: &[Vec<f64>]) {
        for _ in 0..2 {
            for q in against {
                let c = dot(v, q);
                axpy(-c, q, v);
            }
        }
    }

    /// With `rough`, a single Krylov sweep is made and its best Ritz pairs are returned
    /// unconverged.
    fn run(&self, k: usize, rough: bool) -> Result<EigenResult> {
        let n = self.m.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed);
        let random = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };
        let krylov = if self.opts.krylov_dim == 0 { (2 * k + 20).max(40) } else { self.opts.krylov_dim };
        let krylov = krylov.min(n);
        let scale = residual_scale(self.m);
        let mut locked: Vec<Vec<f64>> = Vec::new();
        let mut locked_theta: Vec<f64> = Vec::new();
        let mut start = random(&mut rng);
        let mut iterations = 0;
        let mut best_residual = f64::INFINITY;

        for _restart in 0..self.opts.max_restarts.max(1) {
            let mut v = start.clone();
            Self::orthogonalize(&mut v, &locked);
            let mut nv = norm(&v);
            if nv < 1e-10 {
                v = random(&mut rng);
                Self::orthogonalize(&mut v, &locked);
                nv = norm(&v);
            }
            v.iter_mut().for_each(|x| *x /= nv);
            let room = krylov.min(n - locked.len());
            if room == 0 {
                break;
            }
            let mut basis = vec![v];
            let mut alpha = Vec::new();
            let mut beta: Vec<f64> = Vec::new();
            for j in 0..room {
                let mut w = self.apply(&basis[j]);
                iterations += 1;
                let a = dot(&w, &basis[j]);
                alpha.push(a);
                Self::orthogonalize(&mut w, &locked);
                Self::orthogonalize(&mut w, &basis);
                let b = norm(&w);
                beta.push(b);
                if j + 1 == room || b <= 1e-13 * a.abs().max(1e-300) {
                    break;
                }
                w.iter_mut().for_each(|x| *x /= b);
                basis.push(w);
            }
            let size = alpha.len();
            let t = DMatrix::from_fn(size, size, |r, c| {
                if r == c {
                    alpha[r]
                } else if r + 1 == c {
                    beta[r]
                } else if c + 1 == r {
                    beta[c]
                } else {
                    0.0
                }
            });
            let eig = SymmetricEigen::new(t);
            let mut order: Vec<usize> = (0..size).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].abs().total_cmp(&eig.eigenvalues[a].abs()));
            let need = k - locked.len();
            let exhausted = size < room || locked.len() + size == n;
            let ritz_vector = |i: usize| -> Vec<f64> {
                let mut x = vec![0.0; n];
                for (j, q) in basis.iter().enumerate() {
                    axpy(eig.eigenvectors[(j, i)], q, &mut x);
                }
                let nx = norm(&x);
                x.iter_mut().for_each(|v| *v /= nx);
                x
            };
            if rough {
                for &i in order.iter().take(need) {
                    locked.push(ritz_vector(i));
                    locked_theta.push(eig.eigenvalues[i]);
                }
                break;
            }
            let mut pending = Vec::new();
            for &i in order.iter().take(need) {
                let theta = eig.eigenvalues[i];
                let x = ritz_vector(i);
                let lambda = self.sigma + 1.0 / theta;
                let res = residual(self.m, lambda, &x);
                if exhausted || res <= self.opts.tol * scale {
                    locked.push(x);
                    locked_theta.push(theta);
                } else {
                    best_residual = best_residual.min(res);
                    pending.push(x);
                }
            }
            if locked.len() >= k {
                break;
            }
            start = vec![0.0; n];
            for x in &pending {
                axpy(1.0, x, &mut start);
            }
            if pending.is_empty() {
                start = random(&mut rng);
            }
        }
        if locked.len() < k {
            return Err(Error::Solver {
                iterations,
                residual: best_residual,
            });
        }
        let mut pairs: Vec<(f64, Vec<f64>)> = locked_theta
            .into_iter()
            .zip(locked)
            .map(|(theta, x)| (self.sigma + 1.0 / theta, x))
            .collect();
        pairs.truncate(k);
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let residuals: Vec<f64> = pairs.iter().map(|(l, x)| residual(self.m, *l, x)).collect();
        if !rough {
            let worst = residuals.iter().copied().fold(0.0, f64::max);
            if worst > self.opts.tol * scale {
                return Err(Error::Solver { iterations, residual: worst });
            }
        }
        let (values, vectors) = pairs.into_iter().unzip();
        Ok(EigenResult {
            values,
            vectors,
            residuals,
            iterations,
            method: SolverMethod::ShiftInvertLanczos,
            shift: self.sigma,
        })
    }
}
