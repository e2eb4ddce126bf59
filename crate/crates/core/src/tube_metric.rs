//! The reference-tube metric g = diag(h², 1, …, 1) and every derivative of h that
//! enters the effective potential, for euclidean tubes and for surface strips.

use std::io::{self, Write};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::curvature::{Curvature, CurvatureProfile};
use crate::curve_geometry::{integrate_tang_rotation, IntegratorOptions};
use crate::error::{input, Error, Result};
use crate::numerics::{cubic_interp, cubic_stencil, halton, lagrange_weights, linspace, sampled_derivative};

/// Where a metric comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricSource {
    EuclideanTube,
    SurfaceStrip,
}

impl MetricSource {
    pub fn label(self) -> &'static str {
        match self {
            MetricSource::EuclideanTube => "euclidean-tube",
            MetricSource::SurfaceStrip => "surface-strip",
        }
    }
}

/// h and its derivatives at one point of the reference tube.
///
/// `p` is δ^{μν}h_{,μ}h_{,ν} and `q` is δ^{μν}h_{,μν}; `p_s`, `q_s` are their
/// s-derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricSample {
    pub h: f64,
    pub h_s: f64,
    pub h_ss: f64,
    pub h_sss: f64,
    pub p: f64,
    pub p_s: f64,
    pub q: f64,
    pub q_s: f64,
}

impl MetricSample {
    /// Determinant of g, which equals h².
    pub fn det_g(&self) -> f64 {
        self.h * self.h
    }

    fn fields(&self) -> [f64; 8] {
        [self.h, self.h_s, self.h_ss, self.h_sss, self.p, self.p_s, self.q, self.q_s]
    }

    fn from_fields(f: [f64; 8]) -> Self {
        Self {
            h: f[0],
            h_s: f[1],
            h_ss: f[2],
            h_sss: f[3],
            p: f[4],
            p_s: f[5],
            q: f[6],
            q_s: f[7],
        }
    }
}

/// All metric data along one cross-section {s} × ω, ready for evaluation at any u.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricColumn {
    /// h is affine in u: h = 1 + u·c₀ and h^{(k)} = u·c_k.
    Affine { coeffs: [DVector<f64>; 4], p: f64, p_s: f64 },
    /// Samples at transverse nodes, interpolated by local cubics.
    Tabulated { u: Vec<f64>, rows: Vec<MetricSample> },
}

impl MetricColumn {
    pub fn sample(&self, u: &[f64]) -> MetricSample {
        match self {
            MetricColumn::Affine { coeffs, p, p_s } => {
                let dot = |c: &DVector<f64>| c.iter().zip(u).map(|(a, b)| a * b).sum::<f64>();
                MetricSample {
                    h: 1.0 + dot(&coeffs[0]),
                    h_s: dot(&coeffs[1]),
                    h_ss: dot(&coeffs[2]),
                    h_sss: dot(&coeffs[3]),
                    p: *p,
                    p_s: *p_s,
                    q: 0.0,
                    q_s: 0.0,
                }
            }
            MetricColumn::Tabulated { u: nodes, rows } => {
                let (lo, hi) = cubic_stencil(nodes, u[0]);
                let w = lagrange_weights(&nodes[lo..hi], u[0]);
                let mut out = [0.0; 8];
                for (wi, row) in w.iter().zip(&rows[lo..hi]) {
                    for (o, f) in out.iter_mut().zip(row.fields()) {
                        *o += wi * f;
                    }
                }
                MetricSample::from_fields(out)
            }
        }
    }
}

/// Evaluator for the reference-tube metric on Ω = ℝ × ω.
pub trait TubeMetric: Send + Sync {
    /// Ambient dimension d; the cross-section has dimension d − 1.
    fn dimension(&self) -> usize;
    /// a = sup_{u∈ω} |u|.
    fn radius(&self) -> f64;
    fn s_range(&self) -> (f64, f64);
    fn source(&self) -> MetricSource;
    fn column(&self, s: f64) -> Result<MetricColumn>;

    fn sample(&self, s: f64, u: &[f64]) -> Result<MetricSample> {
        Ok(self.column(s)?.sample(u))
    }

    fn h(&self, s: f64, u: &[f64]) -> Result<f64> {
        Ok(self.sample(s, u)?.h)
    }

    /// Analytic ellipticity bounds when known.
    fn analytic_bounds(&self) -> Option<(f64, f64)> {
        None
    }
}

/// Metric of a tube about a curve in ℝ^d built with the Tang frame:
/// h(s,u) = 1 + u^μ R_μ^α(s) K_α^1(s).
#[derive(Debug, Clone)]
pub struct EuclideanTubeMetric {
    profile: CurvatureProfile,
    radius: f64,
    kappa1_sup: f64,
    s_grid: Vec<f64>,
    /// `rotation_entries[i*(d−1)+j][k]` is R_{ij}(s_k).
    rotation_entries: Vec<Vec<f64>>,
}

/// Builds the euclidean tube metric from curvature data and sampled Tang rotations.
pub fn metric_from_frames(
    profile: &CurvatureProfile,
    s_grid: &[f64],
    rotations: &[DMatrix<f64>],
    radius: f64,
) -> Result<EuclideanTubeMetric> {
    let d = profile.dimension();
    if s_grid.len() != rotations.len() || s_grid.is_empty() {
        return input("rotation samples must match the arclength grid");
    }
    if rotations.iter().any(|r| r.nrows() != d - 1 || r.ncols() != d - 1) {
        return input(format!("rotations must be {}×{}", d - 1, d - 1));
    }
    if !(radius > 0.0) {
        return input("tube radius must be positive");
    }
    let kappa1_sup = profile.sup_norm(0);
    let product = radius * kappa1_sup;
    if product >= 1.0 {
        return Err(Error::Ellipticity {
            detail: format!("a‖κ₁‖∞ = {product} is not below 1"),
            value: product,
        });
    }
    let n = d - 1;
    let rotation_entries = (0..n * n)
        .map(|ij| rotations.iter().map(|r| r[(ij / n, ij % n)]).collect())
        .collect();
    Ok(EuclideanTubeMetric {
        profile: profile.clone(),
        radius,
        kappa1_sup,
        s_grid: s_grid.to_vec(),
        rotation_entries,
    })
}

impl EuclideanTubeMetric {
    /// Integrates the Tang rotation on a uniform grid of spacing at most `step` over the
    /// whole profile range and builds the metric.
    pub fn from_profile(profile: &CurvatureProfile, radius: f64, step: f64) -> Result<Self> {
        let (lo, hi) = profile.s_range();
        let n = ((hi - lo) / step).ceil() as usize + 1;
        let grid = linspace(lo, hi, n.max(5));
        let d = profile.dimension();
        let rotations = integrate_tang_rotation(
            profile,
            &grid,
            &DMatrix::identity(d - 1, d - 1),
            IntegratorOptions {
                max_step: step,
                ..IntegratorOptions::default()
            },
        )?;
        metric_from_frames(profile, &grid, &rotations, radius)
    }

    pub fn profile(&self) -> &CurvatureProfile {
        &self.profile
    }

    pub fn kappa1_sup(&self) -> f64 {
        self.kappa1_sup
    }

    /// R(s) by cubic interpolation of the rotation samples.
    pub fn rotation(&self, s: f64) -> DMatrix<f64> {
        let n = self.profile.dimension() - 1;
        if n == 1 {
            return DMatrix::identity(1, 1);
        }
        DMatrix::from_fn(n, n, |i, j| cubic_interp(&self.s_grid, &self.rotation_entries[i * n + j], s))
    }
}

/// Greek column K_·^1 and Greek block K_·^· of the `order`-th derivative of K.
fn greek_parts(k: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = k.nrows() - 1;
    let w = k.view((1, 0), (n, 1)).column(0).into_owned();
    let m = k.view((1, 1), (n, n)).into_owned();
    (w, m)
}

impl TubeMetric for EuclideanTubeMetric {
    fn dimension(&self) -> usize {
        self.profile.dimension()
    }

    fn radius(&self) -> f64 {
        self.radius
    }

    fn s_range(&self) -> (f64, f64) {
        self.profile.s_range()
    }

    fn source(&self) -> MetricSource {
        MetricSource::EuclideanTube
    }

    fn analytic_bounds(&self) -> Option<(f64, f64)> {
        let r = self.radius * self.kappa1_sup;
        Some((1.0 - r, 1.0 + r))
    }

    fn column(&self, s: f64) -> Result<MetricColumn> {
        let d = self.profile.dimension();
        let (w0, m0) = greek_parts(&self.profile.frenet_matrix(s, 0)?);
        let (w1, m1) = greek_parts(&self.profile.frenet_matrix(s, 1)?);
        let (w2, m2) = greek_parts(&self.profile.frenet_matrix(s, 2)?);
        // Only K_2^1 = −κ₁ is non-zero in the Greek column, so w⃛ needs κ₁⃛ alone.
        let mut w3 = DVector::zeros(d - 1);
        w3[0] = -self.profile.kappa(0, s, 3)?;
        // d/ds (R f) = R (ḟ − M f) because Ṙ = −R M.
        let d1 = &w1 - &m0 * &w0;
        let d2 = &w2 - &m1 * &w0 - &m0 * &w1 * 2.0 + &m0 * &m0 * &w0;
        let d3 = &w3 - &m2 * &w0 - &m1 * &w1 * 3.0 - &m0 * &w2 * 3.0
            + &m1 * &m0 * &w0
            + &m0 * &m1 * &w0 * 2.0
            + &m0 * &m0 * &w1 * 3.0
            - &m0 * &m0 * &m0 * &w0;
        let r = self.rotation(s);
        Ok(MetricColumn::Affine {
            p: w0.norm_squared(),
            p_s: 2.0 * w0.dot(&w1),
            coeffs: [&r * w0, &r * d1, &r * d2, &r * d3],
        })
    }
}

/// Gauss curvature of the ambient surface in Fermi coordinates (s,u).
pub type GaussCurvature = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Data of a strip of half-width `a` about a curve on a surface.
#[derive(Clone)]
pub struct SurfaceData {
    pub gauss: GaussCurvature,
    pub kappa_geodesic: Curvature,
    pub half_width: f64,
}

impl SurfaceData {
    pub fn flat(kappa_geodesic: Curvature, half_width: f64) -> Self {
        Self {
            gauss: Arc::new(|_, _| 0.0),
            kappa_geodesic,
            half_width,
        }
    }

    pub fn constant_gauss(k: f64, kappa_geodesic: Curvature, half_width: f64) -> Self {
        Self {
            gauss: Arc::new(move |_, _| k),
            kappa_geodesic,
            half_width,
        }
    }
}

/// Strip metric tabulated from the Jacobi equation h_{,uu} + K h = 0.
#[derive(Debug, Clone)]
pub struct JacobiStripMetric {
    s: Vec<f64>,
    u: Vec<f64>,
    half_width: f64,
    /// `table[i]` holds the samples for `s[i]`, one per u node.
    table: Vec<Vec<MetricSample>>,
    gauss_max: f64,
}

/// Largest internal RK4 step of the Jacobi integration.
const JACOBI_MAX_STEP: f64 = 1.0 / 32.0;

fn jacobi_column(k: &dyn Fn(f64) -> f64, kappa: f64, u: &[f64], zero: usize) -> (Vec<f64>, Vec<f64>) {
    let n = u.len();
    let mut h = vec![0.0; n];
    let mut hu = vec![0.0; n];
    h[zero] = 1.0;
    hu[zero] = -kappa;
    let rhs = |x: f64, y: [f64; 2]| [y[1], -k(x) * y[0]];
    let mut step = |from: usize, to: usize| {
        let span = u[to] - u[from];
        let m = (span.abs() / JACOBI_MAX_STEP).ceil().max(1.0) as usize;
        let dh = span / m as f64;
        let mut y = [h[from], hu[from]];
        for i in 0..m {
            let x = u[from] + dh * i as f64;
            let k1 = rhs(x, y);
            let k2 = rhs(x + 0.5 * dh, [y[0] + 0.5 * dh * k1[0], y[1] + 0.5 * dh * k1[1]]);
            let k3 = rhs(x + 0.5 * dh, [y[0] + 0.5 * dh * k2[0], y[1] + 0.5 * dh * k2[1]]);
            let k4 = rhs(x + dh, [y[0] + dh * k3[0], y[1] + dh * k3[1]]);
            for c in 0..2 {
                y[c] += dh / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            }
        }
        h[to] = y[0];
        hu[to] = y[1];
    };
    for j in zero + 1..n {
        step(j - 1, j);
    }
    for j in (0..zero).rev() {
        step(j + 1, j);
    }
    (h, hu)
}

/// Integrates the Jacobi equation from the centreline outward for every s in `s_grid`
/// and tabulates h with its s-derivatives (finite differences across s columns).
pub fn metric_from_jacobi(surface: &SurfaceData, s_grid: &[f64], u_grid: &[f64]) -> Result<JacobiStripMetric> {
    let a = surface.half_width;
    if !(a > 0.0) {
        return input("strip half-width must be positive");
    }
    if s_grid.len() < 8 || s_grid.windows(2).any(|w| w[1] <= w[0]) {
        return input("strip s-grid needs at least 8 strictly increasing samples");
    }
    if u_grid.len() < 4 || u_grid.windows(2).any(|w| w[1] <= w[0]) {
        return input("strip u-grid needs at least 4 strictly increasing samples");
    }
    if u_grid[0] < -a * (1.0 + 1e-12) || u_grid[u_grid.len() - 1] > a * (1.0 + 1e-12) {
        return input("strip u-grid leaves [−a, a]");
    }
    let Some(zero) = u_grid.iter().position(|&u| u == 0.0) else {
        return input("strip u-grid must contain the centreline u = 0");
    };
    let ns = s_grid.len();
    let nu = u_grid.len();
    let mut h = vec![vec![0.0; nu]; ns];
    let mut hu = vec![vec![0.0; nu]; ns];
    let mut gauss_max: f64 = 0.0;
    for (i, &s) in s_grid.iter().enumerate() {
        let kappa = surface.kappa_geodesic.eval(s, 0)?;
        let k = |u: f64| (surface.gauss)(s, u);
        for &u in u_grid {
            gauss_max = gauss_max.max(k(u).abs());
        }
        let (hc, huc) = jacobi_column(&k, kappa, u_grid, zero);
        for (j, &v) in hc.iter().enumerate() {
            if !(v > 0.0) {
                return Err(Error::Ellipticity {
                    detail: format!("focal point: h ≤ 0 at (s = {s}, u = {})", u_grid[j]),
                    value: v,
                });
            }
        }
        h[i] = hc;
        hu[i] = huc;
    }
    let column = |tab: &Vec<Vec<f64>>, j: usize| -> Vec<f64> { tab.iter().map(|row| row[j]).collect() };
    let mut table = vec![vec![MetricSample::default(); nu]; ns];
    for j in 0..nu {
        let hj = column(&h, j);
        let huj = column(&hu, j);
        let pj: Vec<f64> = huj.iter().map(|v| v * v).collect();
        let qj: Vec<f64> = (0..ns).map(|i| -(surface.gauss)(s_grid[i], u_grid[j]) * hj[i]).collect();
        for i in 0..ns {
            table[i][j] = MetricSample {
                h: hj[i],
                h_s: sampled_derivative(s_grid, &hj, i, 1),
                h_ss: sampled_derivative(s_grid, &hj, i, 2),
                h_sss: sampled_derivative(s_grid, &hj, i, 3),
                p: pj[i],
                p_s: sampled_derivative(s_grid, &pj, i, 1),
                q: qj[i],
                q_s: sampled_derivative(s_grid, &qj, i, 1),
            };
        }
    }
    Ok(JacobiStripMetric {
        s: s_grid.to_vec(),
        u: u_grid.to_vec(),
        half_width: a,
        table,
        gauss_max,
    })
}

impl JacobiStripMetric {
    /// max |K| over the tabulation nodes.
    pub fn gauss_max(&self) -> f64 {
        self.gauss_max
    }

    pub fn u_nodes(&self) -> &[f64] {
        &self.u
    }

    pub fn s_nodes(&self) -> &[f64] {
        &self.s
    }
}

impl TubeMetric for JacobiStripMetric {
    fn dimension(&self) -> usize {
        2
    }

    fn radius(&self) -> f64 {
        self.half_width
    }

    fn s_range(&self) -> (f64, f64) {
        (self.s[0], self.s[self.s.len() - 1])
    }

    fn source(&self) -> MetricSource {
        MetricSource::SurfaceStrip
    }

    fn column(&self, s: f64) -> Result<MetricColumn> {
        let (lo, hi) = cubic_stencil(&self.s, s);
        let w = lagrange_weights(&self.s[lo..hi], s);
        let rows = (0..self.u.len())
            .map(|j| {
                let mut out = [0.0; 8];
                for (wi, row) in w.iter().zip(&self.table[lo..hi]) {
                    for (o, f) in out.iter_mut().zip(row[j].fields()) {
                        *o += wi * f;
                    }
                }
                MetricSample::from_fields(out)
            })
            .collect();
        Ok(MetricColumn::Tabulated { u: self.u.clone(), rows })
    }
}

/// Sampled and (when available) analytic bounds c₋ ≤ h ≤ c₊.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticityBounds {
    pub lower: f64,
    pub upper: f64,
    pub analytic: Option<(f64, f64)>,
}

impl EllipticityBounds {
    /// Sampled bounds lie inside the analytic ones (vacuously true without them).
    pub fn consistent(&self) -> bool {
        match self.analytic {
            Some((lo, hi)) => self.lower >= lo - 1e-12 && self.upper <= hi + 1e-12,
            None => true,
        }
    }
}

/// Points of the ball |u| ≤ a used to probe a cross-section column: lines through
/// u ∈ {−a, 0, a} along each axis plus Halton points of the ball.
pub(crate) fn probe_points(n: usize, a: f64, halton_count: usize) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![0.0; n]];
    for axis in 0..n {
        for sign in [-1.0, 1.0] {
            let mut u = vec![0.0; n];
            u[axis] = sign * a;
            pts.push(u);
        }
    }
    let mut idx = 0u64;
    while pts.len() < 2 * n + 1 + halton_count && idx < 64 * halton_count as u64 + 64 {
        let x = halton(idx, n + 1);
        idx += 1;
        let u: Vec<f64> = x[1..].iter().map(|t| a * (2.0 * t - 1.0)).collect();
        if u.iter().map(|v| v * v).sum::<f64>() <= a * a {
            pts.push(u);
        }
    }
    pts
}

/// Min and max of h over a deterministic sample of `[s_lo, s_hi] × ω`.
pub fn ellipticity_bounds(metric: &dyn TubeMetric, s_window: (f64, f64), sample_budget: usize) -> Result<EllipticityBounds> {
    let n = metric.dimension() - 1;
    let a = metric.radius();
    let n_s = ((sample_budget as f64).sqrt().ceil() as usize).max(8);
    let per_column = (sample_budget / n_s).max(1);
    let probes = probe_points(n, a, per_column);
    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    let offsets: Vec<f64> = (0..n_s).map(|i| halton(i as u64, 1)[0]).collect();
    let mut s_values: Vec<f64> = linspace(s_window.0, s_window.1, n_s);
    s_values.extend(offsets.iter().map(|t| s_window.0 + t * (s_window.1 - s_window.0)));
    for s in s_values {
        let column = metric.column(s)?;
        for u in &probes {
            let h = column.sample(u).h;
            lower = lower.min(h);
            upper = upper.max(h);
        }
    }
    Ok(EllipticityBounds {
        lower,
        upper,
        analytic: metric.analytic_bounds(),
    })
}

/// Writes `s, u…, h, h_1, h_11` on the tensor grid `s_values × u_values`.
pub fn write_metric_csv<W: Write>(
    metric: &dyn TubeMetric,
    s_values: &[f64],
    u_values: &[Vec<f64>],
    mut out: W,
) -> io::Result<()> {
    let n = metric.dimension() - 1;
    let mut header = vec!["s".to_string()];
    header.extend((1..=n).map(|i| if n == 1 { "u".to_string() } else { format!("u{i}") }));
    header.extend(["h", "h_1", "h_11"].map(String::from));
    writeln!(out, "{}", header.join(","))?;
    for &s in s_values {
        let column = metric.column(s).map_err(io::Error::other)?;
        for u in u_values {
            let m = column.sample(u);
            let mut line = format!("{s:.12e}");
            for v in u.iter().chain([m.h, m.h_s, m.h_ss].iter()) {
                line.push_str(&format!(",{v:.12e}"));
            }
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::Curvature;

    #[test]
    fn planar_metric_is_one_minus_kappa_u() {
        let k = Curvature::gaussian(0.5, 1.0);
        let p = CurvatureProfile::planar(k.clone(), (-6.0, 6.0)).unwrap();
        let m = EuclideanTubeMetric::from_profile(&p, 1.0, 0.05).unwrap();
        for s in [-2.0, -0.3, 0.0, 1.1] {
            for u in [-1.0, -0.4, 0.7] {
                let x = m.sample(s, &[u]).unwrap();
                assert!((x.h - (1.0 - k.eval(s, 0).unwrap() * u)).abs() < 1e-15);
                assert!((x.h_s + k.eval(s, 1).unwrap() * u).abs() < 1e-15);
                assert!((x.h_sss + k.eval(s, 3).unwrap() * u).abs() < 1e-15);
                assert!((x.p - k.eval(s, 0).unwrap().powi(2)).abs() < 1e-15);
                assert_eq!(x.q, 0.0);
            }
        }
    }

    #[test]
    fn three_dimensional_metric_matches_rotated_form() {
        let p = CurvatureProfile::new(
            3,
            vec![Curvature::gaussian(0.4, 1.5), Curvature::Constant(0.3)],
            (-8.0, 8.0),
        )
        .unwrap();
        let m = EuclideanTubeMetric::from_profile(&p, 1.0, 1.0 / 64.0).unwrap();
        for s in [-3.0, 0.5, 2.25] {
            let alpha: f64 = 0.3 * s;
            let kappa = 0.4 * (-(s / 1.5) * (s / 1.5)).exp();
            let (u2, u3) = (0.3, -0.6);
            let expected = 1.0 - kappa * (u2 * alpha.cos() + u3 * alpha.sin());
            assert!((m.h(s, &[u2, u3]).unwrap() - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn ellipticity_violation_reports_product() {
        let p = CurvatureProfile::planar(Curvature::Constant(1.0), (-1.0, 1.0)).unwrap();
        match EuclideanTubeMetric::from_profile(&p, 1.0, 0.1) {
            Err(Error::Ellipticity { value, .. }) => assert_eq!(value, 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn jacobi_strip_closed_forms() {
        let s = linspace(-2.0, 2.0, 33);
        let u = linspace(-1.0, 1.0, 65);
        let flat = metric_from_jacobi(&SurfaceData::flat(Curvature::gaussian(0.5, 1.0), 1.0), &s, &u).unwrap();
        let sphere = metric_from_jacobi(&SurfaceData::constant_gauss(1.0, Curvature::zero(), 1.0), &s, &u).unwrap();
        let saddle = metric_from_jacobi(&SurfaceData::constant_gauss(-1.0, Curvature::zero(), 1.0), &s, &u).unwrap();
        for &si in &s {
            let kappa = 0.5 * (-si * si).exp();
            for &uj in &u {
                assert!((flat.h(si, &[uj]).unwrap() - (1.0 - kappa * uj)).abs() < 1e-10);
                assert!((sphere.h(si, &[uj]).unwrap() - uj.cos()).abs() < 1e-8);
                assert!((saddle.h(si, &[uj]).unwrap() - uj.cosh()).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn focal_point_inside_strip_is_rejected() {
        let s = linspace(-1.0, 1.0, 9);
        let u = linspace(-2.0, 2.0, 41);
        let err = metric_from_jacobi(&SurfaceData::constant_gauss(1.0, Curvature::zero(), 2.0), &s, &u);
        assert!(matches!(err, Err(Error::Ellipticity { .. })));
    }

    #[test]
    fn bounds_for_reference_cases() {
        let straight = CurvatureProfile::straight(2, (-5.0, 5.0)).unwrap();
        let m = EuclideanTubeMetric::from_profile(&straight, 1.0, 0.1).unwrap();
        let b = ellipticity_bounds(&m, (-5.0, 5.0), 400).unwrap();
        assert_eq!((b.lower, b.upper), (1.0, 1.0));

        let bent = CurvatureProfile::planar(Curvature::Constant(0.5), (-5.0, 5.0)).unwrap();
        let m = EuclideanTubeMetric::from_profile(&bent, 1.0, 0.1).unwrap();
        let b = ellipticity_bounds(&m, (-5.0, 5.0), 400).unwrap();
        assert_eq!(b.analytic, Some((0.5, 1.5)));
        assert!(b.consistent());
        assert!((b.lower - 0.5).abs() < 1e-12 && (b.upper - 1.5).abs() < 1e-12);

        let s = linspace(-3.0, 3.0, 25);
        let u = linspace(-1.0, 1.0, 33);
        let strip = metric_from_jacobi(&SurfaceData::constant_gauss(1.0, Curvature::zero(), 1.0), &s, &u).unwrap();
        let b = ellipticity_bounds(&strip, (-3.0, 3.0), 400).unwrap();
        assert!((b.lower - 1f64.cos()).abs() < 1e-6 && (b.upper - 1.0).abs() < 1e-6);
    }

    #[test]
    fn csv_snapshot_has_header() {
        let p = CurvatureProfile::planar(Curvature::Constant(0.2), (-1.0, 1.0)).unwrap();
        let m = EuclideanTubeMetric::from_profile(&p, 1.0, 0.1).unwrap();
        let mut buf = Vec::new();
        write_metric_csv(&m, &[0.0, 0.5], &[vec![-1.0], vec![1.0]], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("s,u,h,h_1,h_11\n"));
        assert_eq!(text.lines().count(), 5);
    }
}
