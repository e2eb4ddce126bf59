//! Reconstruction of the reference curve, its Frenet frame and the Tang frame from
//! curvature data, plus the tube embedding used for export and overlap checks.

use std::collections::HashMap;
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};

use crate::curvature::CurvatureProfile;
use crate::error::{input, Error, Result};

/// Default tolerance for orthonormality and unit-determinant checks.
pub const FRAME_TOL: f64 = 1e-10;

/// Integrator settings shared by the Frenet and Tang-rotation solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    /// Largest RK4 step; grid intervals longer than this are subdivided evenly.
    pub max_step: f64,
    /// Step-halving attempts allowed per grid interval before giving up.
    pub retry_budget: usize,
    /// Re-projection corrections larger than this reject the step.
    pub max_correction: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            max_step: 1.0 / 16.0,
            retry_budget: 12,
            max_correction: 1e-6,
        }
    }
}

/// Sampled moving frames along the curve.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameField {
    pub s: Vec<f64>,
    /// Frenet frame per sample, stored with `e_i` as row `i`.
    pub frames: Vec<DMatrix<f64>>,
    pub points: Vec<DVector<f64>>,
    /// Tang rotation R(s) per sample, (d−1)×(d−1).
    pub rotations: Vec<DMatrix<f64>>,
}

impl FrameField {
    pub fn dimension(&self) -> usize {
        self.frames[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Tang frame ẽ_μ = R_μ^ν e_ν at sample `k`, one normal vector per row.
    pub fn tang_frame(&self, k: usize) -> DMatrix<f64> {
        let d = self.dimension();
        let normals = self.frames[k].rows(1, d - 1).into_owned();
        &self.rotations[k] * normals
    }

    /// Largest deviation of the Frenet frames and rotations from orthonormality and
    /// of det R from 1, over all samples.
    pub fn max_frame_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (e, r) in self.frames.iter().zip(&self.rotations) {
            worst = worst.max(orthogonality_defect(e));
            worst = worst.max(orthogonality_defect(r));
            worst = worst.max((r.determinant() - 1.0).abs());
        }
        worst
    }
}

pub(crate) fn orthogonality_defect(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    (m * m.transpose() - DMatrix::<f64>::identity(n, n)).amax()
}

fn nearest_orthogonal(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let svd = m.clone().try_svd(true, true, f64::EPSILON, 200)?;
    Some(svd.u? * svd.v_t?)
}

fn check_rotation(m: &DMatrix<f64>, what: &str, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return input(format!("{what} must be {n}×{n}"));
    }
    let defect = orthogonality_defect(m);
    if !(defect <= 1e-8) {
        return input(format!("{what} is not orthonormal (defect {defect:.3e})"));
    }
    if m.determinant() <= 0.0 {
        return input(format!("{what} does not have positive orientation"));
    }
    Ok(())
}

fn check_grid(profile: &CurvatureProfile, s_grid: &[f64]) -> Result<()> {
    if s_grid.is_empty() {
        return input("empty arclength grid");
    }
    if s_grid.windows(2).any(|w| w[1] <= w[0]) {
        return input("arclength grid must be strictly increasing");
    }
    let (lo, hi) = profile.s_range();
    let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    if s_grid[0] < lo - slack || s_grid[s_grid.len() - 1] > hi + slack {
        return input(format!(
            "arclength grid [{}, {}] leaves the profile range [{lo}, {hi}]",
            s_grid[0],
            s_grid[s_grid.len() - 1]
        ));
    }
    Ok(())
}

/// A linear matrix ODE `Ẋ = f(s, X)` integrated with RK4 and polar re-projection of
/// the orthogonal part after every step.
struct OrthogonalFlow<'a> {
    rhs: &'a dyn Fn(f64, &DMatrix<f64>, &DVector<f64>) -> Result<(DMatrix<f64>, DVector<f64>)>,
    options: IntegratorOptions,
}

impl OrthogonalFlow<'_> {
    fn rk4(
        &self,
        s: f64,
        h: f64,
        x: &DMatrix<f64>,
        p: &DVector<f64>,
    ) -> Result<(DMatrix<f64>, DVector<f64>)> {
        let (k1, l1) = (self.rhs)(s, x, p)?;
        let (k2, l2) = (self.rhs)(s + 0.5 * h, &(x + &k1 * (0.5 * h)), &(p + &l1 * (0.5 * h)))?;
        let (k3, l3) = (self.rhs)(s + 0.5 * h, &(x + &k2 * (0.5 * h)), &(p + &l2 * (0.5 * h)))?;
        let (k4, l4) = (self.rhs)(s + h, &(x + &k3 * h), &(p + &l3 * h))?;
        let x_new = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        let p_new = p + (l1 + l2 * 2.0 + l3 * 2.0 + l4) * (h / 6.0);
        Ok((x_new, p_new))
    }

    /// Advances from `s0` to `s1` (either direction) in equal substeps.
    fn advance(
        &self,
        s0: f64,
        s1: f64,
        x: &DMatrix<f64>,
        p: &DVector<f64>,
    ) -> Result<(DMatrix<f64>, DVector<f64>)> {
        let span = s1 - s0;
        if span == 0.0 {
            return Ok((x.clone(), p.clone()));
        }
        let base = (span.abs() / self.options.max_step).ceil().max(1.0) as usize;
        let mut last_reason = String::new();
        for attempt in 0..=self.options.retry_budget {
            let n = base << attempt;
            let h = span / n as f64;
            match self.run(s0, h, n, x, p) {
                Ok(out) => return Ok(out),
                Err(reason) => last_reason = reason,
            }
        }
        Err(Error::Integration {
            s: s0,
            reason: last_reason,
        })
    }

    fn run(
        &self,
        s0: f64,
        h: f64,
        n: usize,
        x: &DMatrix<f64>,
        p: &DVector<f64>,
    ) -> std::result::Result<(DMatrix<f64>, DVector<f64>), String> {
        let mut x = x.clone();
        let mut p = p.clone();
        for i in 0..n {
            let s = s0 + h * i as f64;
            let (x_new, p_new) = self.rk4(s, h, &x, &p).map_err(|e| e.to_string())?;
            if x_new.iter().chain(p_new.iter()).any(|v| !v.is_finite()) {
                return Err(format!("non-finite state near s = {s}"));
            }
            let projected = nearest_orthogonal(&x_new)
                .ok_or_else(|| format!("polar decomposition failed near s = {s}"))?;
            let correction = (&projected - &x_new).amax();
            if correction > self.options.max_correction {
                return Err(format!(
                    "re-projection correction {correction:.3e} near s = {s}"
                ));
            }
            x = projected;
            p = p_new;
        }
        Ok((x, p))
    }

    /// Integrates from s = 0 to every grid point, outward in both directions.
    fn sweep(
        &self,
        s_grid: &[f64],
        x0: &DMatrix<f64>,
        p0: &DVector<f64>,
    ) -> Result<Vec<(DMatrix<f64>, DVector<f64>)>> {
        let n = s_grid.len();
        let mut out = vec![(x0.clone(), p0.clone()); n];
        let start = s_grid.partition_point(|&s| s < 0.0);
        let (mut x, mut p, mut s_prev) = (x0.clone(), p0.clone(), 0.0);
        for k in start..n {
            (x, p) = self.advance(s_prev, s_grid[k], &x, &p)?;
            s_prev = s_grid[k];
            out[k] = (x.clone(), p.clone());
        }
        let (mut x, mut p, mut s_prev) = (x0.clone(), p0.clone(), 0.0);
        for k in (0..start).rev() {
            (x, p) = self.advance(s_prev, s_grid[k], &x, &p)?;
            s_prev = s_grid[k];
            out[k] = (x.clone(), p.clone());
        }
        Ok(out)
    }
}

/// Solves ė_i = K_i^j e_j with ṗ = e₁ from the data `initial_frame` (rows e_i) and
/// `initial_point` at s = 0, and the Tang rotation with R(0) = 1.
pub fn integrate_frenet(
    profile: &CurvatureProfile,
    initial_frame: &DMatrix<f64>,
    initial_point: &DVector<f64>,
    s_grid: &[f64],
    options: IntegratorOptions,
) -> Result<FrameField> {
    let d = profile.dimension();
    check_rotation(initial_frame, "initial frame", d)?;
    if initial_point.len() != d {
        return input(format!("initial point must have {d} components"));
    }
    check_grid(profile, s_grid)?;
    let rhs = |s: f64, e: &DMatrix<f64>, _p: &DVector<f64>| {
        let k = profile.frenet_matrix(s, 0)?;
        Ok((&k * e, e.row(0).transpose()))
    };
    let flow = OrthogonalFlow {
        rhs: &rhs,
        options,
    };
    let states = flow.sweep(s_grid, initial_frame, initial_point)?;
    let rotations =
        integrate_tang_rotation(profile, s_grid, &DMatrix::identity(d - 1, d - 1), options)?;
    let (frames, points) = states.into_iter().unzip();
    Ok(FrameField {
        s: s_grid.to_vec(),
        frames,
        points,
        rotations,
    })
}

/// [`integrate_frenet`] with the standard basis and the origin at s = 0.
pub fn integrate_frenet_default(profile: &CurvatureProfile, s_grid: &[f64]) -> Result<FrameField> {
    let d = profile.dimension();
    integrate_frenet(
        profile,
        &DMatrix::identity(d, d),
        &DVector::zeros(d),
        s_grid,
        IntegratorOptions::default(),
    )
}

/// Solves Ṙ_μ^ν + R_μ^α K_α^ν = 0 (Greek indices 2..d) with R(0) = `r0`.
pub fn integrate_tang_rotation(
    profile: &CurvatureProfile,
    s_grid: &[f64],
    r0: &DMatrix<f64>,
    options: IntegratorOptions,
) -> Result<Vec<DMatrix<f64>>> {
    let d = profile.dimension();
    check_rotation(r0, "initial rotation", d - 1)?;
    check_grid(profile, s_grid)?;
    if profile.curvatures()[1..].iter().all(|k| k.is_identically_zero()) {
        return Ok(vec![r0.clone(); s_grid.len()]);
    }
    let rhs = |s: f64, r: &DMatrix<f64>, p: &DVector<f64>| {
        let k = profile.frenet_matrix(s, 0)?;
        let m = k.view((1, 1), (d - 1, d - 1));
        Ok((-(r * m), DVector::zeros(p.len())))
    };
    let flow = OrthogonalFlow {
        rhs: &rhs,
        options,
    };
    Ok(flow
        .sweep(s_grid, r0, &DVector::zeros(0))?
        .into_iter()
        .map(|(r, _)| r)
        .collect())
}

/// Rotation angle α of a 2×2 rotation [[cos α, −sin α], [sin α, cos α]].
pub fn rotation_angle(r: &DMatrix<f64>) -> f64 {
    r[(1, 0)].atan2(r[(0, 0)])
}

/// Tube points 𝓛(s_k, u_m), stored s-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TubeCloud {
    pub s: Vec<f64>,
    pub u: Vec<DVector<f64>>,
    pub points: Vec<DVector<f64>>,
}

impl TubeCloud {
    pub fn point(&self, k: usize, m: usize) -> &DVector<f64> {
        &self.points[k * self.u.len() + m]
    }

    /// Plain-text mesh: a '#' header naming the columns, then one vertex per line.
    pub fn write_mesh<W: Write>(&self, mut out: W) -> io::Result<()> {
        let n = self.u.first().map_or(0, |u| u.len());
        let d = self.points.first().map_or(0, |p| p.len());
        let mut header = vec!["s".to_string()];
        header.extend((1..=n).map(|i| format!("u{i}")));
        header.extend((1..=d).map(|i| format!("x{i}")));
        writeln!(out, "# {}", header.join(" "))?;
        for (k, s) in self.s.iter().enumerate() {
            for (m, u) in self.u.iter().enumerate() {
                let mut line = format!("{s:.12e}");
                for v in u.iter().chain(self.point(k, m).iter()) {
                    line.push_str(&format!(" {v:.12e}"));
                }
                writeln!(out, "{line}")?;
            }
        }
        Ok(())
    }
}

/// 𝓛(s,u) = p(s) + ẽ_μ(s) u^μ for every frame sample and every cross-section point.
pub fn tube_embedding(frame: &FrameField, cross_section_points: &[DVector<f64>], radius: f64) -> Result<TubeCloud> {
    let d = frame.dimension();
    for u in cross_section_points {
        if u.len() != d - 1 {
            return input(format!("cross-section points need {} components", d - 1));
        }
        if u.norm() > radius * (1.0 + 1e-12) {
            return input(format!(
                "cross-section point with |u| = {} outside radius {radius}",
                u.norm()
            ));
        }
    }
    let mut points = Vec::with_capacity(frame.len() * cross_section_points.len());
    for k in 0..frame.len() {
        let tang = frame.tang_frame(k);
        for u in cross_section_points {
            points.push(&frame.points[k] + tang.tr_mul(u));
        }
    }
    Ok(TubeCloud {
        s: frame.s.clone(),
        u: cross_section_points.to_vec(),
        points,
    })
}

/// A pair of tube points from distant parts of the curve that come too close.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapPair {
    pub first: usize,
    pub second: usize,
    pub s_first: f64,
    pub s_second: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapReport {
    pub embedded: bool,
    pub pairs: Vec<OverlapPair>,
    pub min_arc_separation: f64,
    pub clearance: f64,
}

/// Offending pairs beyond this count are not recorded.
const MAX_REPORTED_PAIRS: usize = 1000;

/// Heuristic self-overlap test: flags every pair of samples more than
/// `min_arc_separation` apart in arclength that lie within `clearance` of each other.
pub fn check_self_overlap(
    cloud: &TubeCloud,
    min_arc_separation: f64,
    clearance: f64,
) -> Result<OverlapReport> {
    if !(clearance > 0.0 && min_arc_separation >= 0.0) {
        return input("clearance must be positive and the arc separation non-negative");
    }
    let nu = cloud.u.len();
    for k in 1..cloud.s.len() {
        for m in 0..nu {
            let gap = (cloud.point(k, m) - cloud.point(k - 1, m)).norm();
            if gap >= 0.5 * clearance {
                return Err(Error::Resolution(format!(
                    "adjacent tube samples {gap:.4} apart near s = {}, need < {:.4}",
                    cloud.s[k],
                    0.5 * clearance
                )));
            }
        }
    }
    let cell = |x: &DVector<f64>| -> Vec<i64> {
        x.iter().map(|v| (v / clearance).floor() as i64).collect()
    };
    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, x) in cloud.points.iter().enumerate() {
        buckets.entry(cell(x)).or_default().push(i);
    }
    let d = cloud.points.first().map_or(0, |p| p.len());
    let offsets: Vec<Vec<i64>> = (0..3usize.pow(d as u32))
        .map(|mut code| {
            (0..d)
                .map(|_| {
                    let o = (code % 3) as i64 - 1;
                    code /= 3;
                    o
                })
                .collect()
        })
        .collect();
    let arc = |i: usize| cloud.s[i / nu.max(1)];
    let mut pairs = Vec::new();
    let mut embedded = true;
    for (i, x) in cloud.points.iter().enumerate() {
        let base = cell(x);
        for off in &offsets {
            let key: Vec<i64> = base.iter().zip(off).map(|(a, b)| a + b).collect();
            let Some(members) = buckets.get(&key) else {
                continue;
            };
            for &j in members {
                if j <= i || (arc(j) - arc(i)).abs() <= min_arc_separation {
                    continue;
                }
                let distance = (x - &cloud.points[j]).norm();
                if distance < clearance {
                    embedded = false;
                    if pairs.len() < MAX_REPORTED_PAIRS {
                        pairs.push(OverlapPair {
                            first: i,
                            second: j,
                            s_first: arc(i),
                            s_second: arc(j),
                            distance,
                        });
                    }
                }
            }
        }
    }
    pairs.sort_by(|a, b| (a.first, a.second).cmp(&(b.first, b.second)));
    Ok(OverlapReport {
        embedded,
        pairs,
        min_arc_separation,
        clearance,
    })
}

/// Default overlap parameters for a tube of radius `a`: (4a, 2a·0.99).
pub fn default_overlap_parameters(a: f64) -> (f64, f64) {
    (4.0 * a, 2.0 * a * 0.99)
}
