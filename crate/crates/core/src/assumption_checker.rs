//! Finite-range checks of the decay and boundedness hypotheses on curvature,
//! metric and coefficient data.
//!
//! "f → 0 as |s| → ∞" is read as: the tail sups sup_{|s|≥R}|f| strictly decrease
//! along the ladder R₀, 2R₀, … and the last one is below `zero_tol` times the global
//! sup. "f = O(|s|^{−(1+θ)})" is certified either by dominance (R²·tail(R) is
//! non-increasing, which gives θ = 1) or by a log-log fit of the tail sups.

use std::fmt;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::curvature::CurvatureProfile;
use crate::curve_geometry::OverlapReport;
use crate::effective_operator::{CoefficientField, EffectivePotential, PotentialSample};
use crate::error::{Error, Result};
use crate::numerics::fit_line;
use crate::tube_metric::{ellipticity_bounds, probe_points, MetricSample, TubeMetric};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    /// Conjunction with inconclusive propagating (fail dominates).
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
            _ => Verdict::Pass,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckerConfig {
    /// First ladder radius R₀; the ladder doubles up to the range limit.
    pub r0: f64,
    /// "→ 0" needs the last tail sup below zero_tol × the global sup.
    pub zero_tol: f64,
    pub theta_min: f64,
    /// Largest accepted rms residual of the log-log fit.
    pub max_rms: f64,
    /// Geometric samples per sign between R₀ and the range limit.
    pub samples: usize,
    /// Transverse probe points per column for metric quantities.
    pub transverse_probes: usize,
    /// Tail sups below noise_floor × max(1, global sup) are rounding residue of
    /// tabulated data and are read as zero.
    pub noise_floor: f64,
}

impl Default for CheckerConfig {
    fn default() -> Self {
        Self {
            r0: 1.0,
            zero_tol: 1e-4,
            theta_min: 0.05,
            max_rms: 0.2,
            samples: 2048,
            transverse_probes: 16,
            noise_floor: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LadderPoint {
    pub r: f64,
    pub sup: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Certificate {
    Dominance,
    Regression,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub c: f64,
    /// Capped to at most 1.
    pub theta: f64,
    /// The uncapped exponent −slope − 1 (for dominance: the lower bound 1).
    pub raw_theta: f64,
    pub rms: f64,
    /// Smallest radius the bound is claimed for.
    pub from_r: f64,
    pub certificate: Certificate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionEntry {
    pub id: String,
    pub quantity: String,
    pub ladder: Vec<LadderPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<DecayFit>,
    pub verdict: Verdict,
    pub notes: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub overall: Verdict,
    /// Minimum fitted θ over all decay items, when any was fitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub zero_tol: f64,
    pub theta_min: f64,
    pub max_rms: f64,
    pub entries: Vec<AssumptionEntry>,
}

impl AssumptionReport {
    fn from_entries(entries: Vec<AssumptionEntry>, cfg: &CheckerConfig) -> Self {
        let overall = entries.iter().fold(Verdict::Pass, |v, e| v.and(e.verdict));
        let theta = entries
            .iter()
            .filter_map(|e| e.fit.map(|f| f.theta))
            .fold(None, |m: Option<f64>, t| Some(m.map_or(t, |m| m.min(t))));
        Self {
            overall,
            theta,
            zero_tol: cfg.zero_tol,
            theta_min: cfg.theta_min,
            max_rms: cfg.max_rms,
            entries,
        }
    }

    /// Appends the entries of another report and recomputes the summary.
    pub fn merge(self, other: AssumptionReport) -> Self {
        let cfg = CheckerConfig {
            zero_tol: self.zero_tol,
            theta_min: self.theta_min,
            max_rms: self.max_rms,
            ..CheckerConfig::default()
        };
        let mut entries = self.entries;
        entries.extend(other.entries);
        Self::from_entries(entries, &cfg)
    }

    pub fn entry(&self, id: &str) -> Option<&AssumptionEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// The entries whose id starts with `prefix`, combined.
    pub fn verdict_of(&self, prefix: &str) -> Verdict {
        self.entries.iter().filter(|e| e.id.starts_with(prefix)).fold(Verdict::Pass, |v, e| v.and(e.verdict))
    }
}

/// The ladder R₀, 2R₀, … up to `limit`.
pub fn ladder(r0: f64, limit: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = r0;
    while r <= limit * (1.0 + 1e-12) {
        out.push(r);
        r *= 2.0;
    }
    out
}

/// Tail sups of |f| on one fixed sample set, so that the ladder is non-increasing
/// by construction.
struct TailSampler {
    radii: Vec<f64>,
    /// Sample abscissae |s| ≥ R₀ paired with the index of the first ladder radius
    /// they exceed.
    points: Vec<f64>,
    /// Points with |s| < R₀ that only enter the global sup.
    core: Vec<f64>,
}

impl TailSampler {
    fn new(s_range: (f64, f64), cfg: &CheckerConfig) -> Self {
        let limit = s_range.1.min(-s_range.0);
        let radii = ladder(cfg.r0, limit);
        let mut points = Vec::new();
        if limit > cfg.r0 {
            let n = cfg.samples.max(2);
            let ratio = (limit / cfg.r0).ln();
            for j in 0..n {
                let r = cfg.r0 * (ratio * j as f64 / (n - 1) as f64).exp();
                points.push(r.min(limit));
            }
        }
        points.extend(radii.iter().copied());
        points.sort_by(f64::total_cmp);
        points.dedup();
        let core = (0..=64).map(|i| -cfg.r0 + 2.0 * cfg.r0 * i as f64 / 64.0).collect();
        Self { radii, points, core }
    }

    /// (ladder, global sup).
    fn run(&self, f: &dyn Fn(f64) -> Result<f64>) -> Result<(Vec<LadderPoint>, f64)> {
        let mut values = Vec::with_capacity(self.points.len());
        for &r in &self.points {
            values.push(f(r)?.abs().max(f(-r)?.abs()));
        }
        let mut global = values.iter().copied().fold(0.0, f64::max);
        for &s in &self.core {
            global = global.max(f(s)?.abs());
        }
        // Suffix maxima give every tail sup in one sweep.
        let mut suffix = vec![0.0f64; values.len() + 1];
        for i in (0..values.len()).rev() {
            suffix[i] = suffix[i + 1].max(values[i]);
        }
        let ladder = self
            .radii
            .iter()
            .map(|&r| {
                let i = self.points.partition_point(|p| *p < r);
                LadderPoint { r, sup: suffix[i] }
            })
            .collect();
        Ok((ladder, global))
    }

    fn coverage(&self) -> bool {
        self.radii.len() >= 4 && self.radii[self.radii.len() - 1] >= 8.0 * self.radii[0]
    }
}

fn entry(id: &str, quantity: &str, ladder: Vec<LadderPoint>, fit: Option<DecayFit>, verdict: Verdict, notes: String) -> AssumptionEntry {
    AssumptionEntry {
        id: id.into(),
        quantity: quantity.into(),
        ladder,
        fit,
        verdict,
        notes,
    }
}

/// The "→ 0" test on a ladder.
fn limit_entry(id: &str, quantity: &str, ladder: Vec<LadderPoint>, global: f64, cfg: &CheckerConfig, coverage: bool) -> AssumptionEntry {
    if global == 0.0 {
        return entry(id, quantity, ladder, None, Verdict::Pass, "identically zero".into());
    }
    let nonzero: Vec<f64> = ladder.iter().map(|p| p.sup).take_while(|v| *v > 0.0).collect();
    let strictly = nonzero.windows(2).all(|w| w[1] < w[0]);
    let last = ladder.last().map_or(global, |p| p.sup);
    let small = last < cfg.zero_tol * global;
    let (verdict, notes) = if !coverage {
        (Verdict::Inconclusive, "ladder spans less than a factor 8 in R".to_string())
    } else if !strictly {
        (Verdict::Fail, "tail sup does not decrease strictly".to_string())
    } else if !small {
        (
            Verdict::Inconclusive,
            format!("decreasing, last tail sup {last:.3e} above {:.1e} of the global sup {global:.3e}", cfg.zero_tol),
        )
    } else {
        (Verdict::Pass, format!("last tail sup {last:.3e}"))
    };
    entry(id, quantity, ladder, None, verdict, notes)
}

fn boundedness_entry(id: &str, quantity: &str, ladder: Vec<LadderPoint>, global: f64) -> AssumptionEntry {
    let (verdict, notes) = if global.is_finite() {
        (Verdict::Pass, format!("sup {global:.6e}"))
    } else {
        (Verdict::Fail, "unbounded or non-finite".to_string())
    };
    entry(id, quantity, ladder, None, verdict, notes)
}

/// Points a certificate must rest on.
const MIN_TAIL_POINTS: usize = 3;

/// Fits sup_{|s|≥R}|f| ≤ C·R^{−(1+θ)} for R ≥ `from_r`.
///
/// Dominance is tried first on every ladder suffix of at least three points, longest
/// first: if R²·tail(R) is non-increasing there, the bound holds with θ = 1 from that
/// radius on. Otherwise a log-log line is fitted to the nonzero points of the upper
/// half of the ladder, where the asymptotic regime is closest.
pub fn fit_decay(ladder: &[LadderPoint]) -> Option<DecayFit> {
    if ladder.len() < MIN_TAIL_POINTS || ladder[0].sup == 0.0 {
        return None;
    }
    let weighted: Vec<f64> = ladder.iter().map(|p| p.sup * p.r * p.r).collect();
    for start in 0..=ladder.len() - MIN_TAIL_POINTS {
        if weighted[start..].windows(2).all(|w| w[1] <= w[0]) {
            return Some(DecayFit {
                c: weighted[start],
                theta: 1.0,
                raw_theta: 1.0,
                rms: 0.0,
                from_r: ladder[start].r,
                certificate: Certificate::Dominance,
            });
        }
    }
    let half = ladder.len() / 2;
    let pts: Vec<&LadderPoint> = ladder[half.min(ladder.len() - MIN_TAIL_POINTS)..].iter().filter(|p| p.sup > 0.0).collect();
    if pts.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.r.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.sup.ln()).collect();
    let line = fit_line(&xs, &ys)?;
    let raw_theta = -line.slope - 1.0;
    Some(DecayFit {
        c: line.intercept.exp(),
        theta: raw_theta.min(1.0),
        raw_theta,
        rms: line.rms,
        from_r: pts[0].r,
        certificate: Certificate::Regression,
    })
}

fn decay_entry(id: &str, quantity: &str, ladder: Vec<LadderPoint>, global: f64, cfg: &CheckerConfig, coverage: bool) -> AssumptionEntry {
    if global == 0.0 {
        return entry(id, quantity, ladder, None, Verdict::Pass, "identically zero".into());
    }
    if !coverage {
        let fit = fit_decay(&ladder);
        return entry(id, quantity, ladder, fit, Verdict::Inconclusive, "ladder spans less than a factor 8 in R".into());
    }
    match fit_decay(&ladder) {
        None => entry(id, quantity, ladder, None, Verdict::Pass, "zero on every tail".into()),
        Some(fit) => {
            let ok = fit.theta >= cfg.theta_min && fit.rms < cfg.max_rms;
            let notes = format!(
                "{} fit for R >= {}: θ = {:.4} (raw {:.4}), C = {:.4e}, rms = {:.3e}",
                match fit.certificate {
                    Certificate::Dominance => "dominance",
                    Certificate::Regression => "log-log",
                },
                fit.from_r,
                fit.theta,
                fit.raw_theta,
                fit.c,
                fit.rms
            );
            entry(id, quantity, ladder, Some(fit), if ok { Verdict::Pass } else { Verdict::Fail }, notes)
        }
    }
}

type Probe<'a> = Box<dyn Fn(f64) -> Result<f64> + 'a>;

enum Kind {
    Limit,
    Bounded,
    Decay,
}

fn run_items(items: Vec<(&str, &str, Kind, Probe<'_>)>, s_range: (f64, f64), cfg: &CheckerConfig) -> Result<AssumptionReport> {
    let sampler = TailSampler::new(s_range, cfg);
    let coverage = sampler.coverage();
    let mut entries = Vec::with_capacity(items.len());
    for (id, quantity, kind, f) in items {
        let (mut ladder, mut global) = sampler.run(f.as_ref())?;
        let floor = cfg.noise_floor * global.max(1.0);
        for p in &mut ladder {
            if p.sup < floor {
                p.sup = 0.0;
            }
        }
        if global < floor {
            global = 0.0;
        }
        entries.push(match kind {
            Kind::Limit => limit_entry(id, quantity, ladder, global, cfg, coverage),
            Kind::Bounded => boundedness_entry(id, quantity, ladder, global),
            Kind::Decay => decay_entry(id, quantity, ladder, global, cfg, coverage),
        });
    }
    Ok(AssumptionReport::from_entries(entries, cfg))
}

fn greek_block(k: &DMatrix<f64>) -> DMatrix<f64> {
    let d = k.nrows();
    k.view((1, 1), (d - 1, d - 1)).into_owned()
}

fn greek_column(k: &DMatrix<f64>, col: usize) -> nalgebra::DVector<f64> {
    let d = k.nrows();
    k.view((1, col), (d - 1, 1)).column(0).into_owned()
}

/// Checks the curvature-level decay hypotheses: K_α^1, K̈_α^1 → 0; K_α^β, K̇_α^2
/// bounded; K̇_α^1, K⃛_α^1, K_α^2, K̈_α^2, K̇_α^βK_β^2, K_α^βK̇_β^2 decaying like
/// |s|^{−(1+θ)}. Vector quantities are measured in the Euclidean norm over α.
pub fn check_curvature_decay(profile: &CurvatureProfile, cfg: &CheckerConfig) -> Result<AssumptionReport> {
    let d = profile.dimension();
    let k = |s: f64, order: usize| profile.frenet_matrix(s, order);
    let col = move |order: usize, c: usize| -> Probe<'_> { Box::new(move |s| Ok(greek_column(&k(s, order)?, c).norm())) };
    let mut items: Vec<(&str, &str, Kind, Probe<'_>)> = vec![
        ("Ass3.4-item1-K1", "K_a^1", Kind::Limit, col(0, 0)),
        ("Ass3.4-item1-K1dd", "K''_a^1", Kind::Limit, col(2, 0)),
    ];
    if d >= 3 {
        items.push((
            "Ass3.4-item2-Kab",
            "K_a^b",
            Kind::Bounded,
            Box::new(move |s| Ok(greek_block(&k(s, 0)?).norm())),
        ));
        items.push(("Ass3.4-item2-K2d", "K'_a^2", Kind::Bounded, col(1, 1)));
    }
    items.push(("Ass3.4-item3-K1d", "K'_a^1", Kind::Decay, col(1, 0)));
    items.push(("Ass3.4-item3-K1ddd", "K'''_a^1", Kind::Decay, col(3, 0)));
    if d >= 3 {
        items.push(("Ass3.4-item3-K2", "K_a^2", Kind::Decay, col(0, 1)));
        items.push(("Ass3.4-item3-K2dd", "K''_a^2", Kind::Decay, col(2, 1)));
        items.push((
            "Ass3.4-item3-KdK2",
            "K'_a^b K_b^2",
            Kind::Decay,
            Box::new(move |s| Ok((greek_block(&k(s, 1)?) * greek_column(&k(s, 0)?, 1)).norm())),
        ));
        items.push((
            "Ass3.4-item3-KK2d",
            "K_a^b K'_b^2",
            Kind::Decay,
            Box::new(move |s| Ok((greek_block(&k(s, 0)?) * greek_column(&k(s, 1)?, 1)).norm())),
        ));
    }
    run_items(items, profile.s_range(), cfg)
}

/// Sup over transverse probe points of |f(sample)|, as a function of s.
fn column_sup<'a>(
    metric: &'a dyn TubeMetric,
    probes: &'a [Vec<f64>],
    f: impl Fn(&MetricSample) -> f64 + 'a,
) -> Probe<'a> {
    Box::new(move |s| {
        let column = metric.column(s)?;
        Ok(probes.iter().map(|u| f(&column.sample(u)).abs()).fold(0.0, f64::max))
    })
}

fn metric_probes(metric: &dyn TubeMetric, cfg: &CheckerConfig) -> Vec<Vec<f64>> {
    let n = metric.dimension() - 1;
    let a = metric.radius();
    if n == 1 {
        (0..=cfg.transverse_probes).map(|i| vec![-a + 2.0 * a * i as f64 / cfg.transverse_probes as f64]).collect()
    } else {
        probe_points(n, a, cfg.transverse_probes)
    }
}

/// Checks the metric-level hypotheses uniformly over the transverse probe points:
/// h → 1; h_{,11}, δh_μh_ν, δh_{,μν} → 0; h_{,1}, h_{,111}, (δh_μh_ν)_{,1},
/// δh_{,1μν} decaying like |s|^{−(1+θ)}.
pub fn check_metric_hypotheses(metric: &dyn TubeMetric, cfg: &CheckerConfig) -> Result<AssumptionReport> {
    let probes = metric_probes(metric, cfg);
    let items: Vec<(&str, &str, Kind, Probe<'_>)> = vec![
        ("Ass3.3-item1-h", "h - 1", Kind::Limit, column_sup(metric, &probes, |m| m.h - 1.0)),
        ("Ass3.3-item2-h11", "h_11", Kind::Limit, column_sup(metric, &probes, |m| m.h_ss)),
        ("Ass3.3-item2-p", "h_mu h_mu", Kind::Limit, column_sup(metric, &probes, |m| m.p)),
        ("Ass3.3-item2-q", "h_mumu", Kind::Limit, column_sup(metric, &probes, |m| m.q)),
        ("Ass3.3-item3-h1", "h_1", Kind::Decay, column_sup(metric, &probes, |m| m.h_s)),
        ("Ass3.3-item3-h111", "h_111", Kind::Decay, column_sup(metric, &probes, |m| m.h_sss)),
        ("Ass3.3-item3-p1", "(h_mu h_mu)_1", Kind::Decay, column_sup(metric, &probes, |m| m.p_s)),
        ("Ass3.3-item3-q1", "h_1mumu", Kind::Decay, column_sup(metric, &probes, |m| m.q_s)),
    ];
    run_items(items, metric.s_range(), cfg)
}

/// Checks the abstract coefficient hypotheses on G = diag(h⁻², 1, …) and V. The
/// derivative G_{,1} is measured in the spectral norm, which here is |G^{11}_{,1}|.
pub fn check_coefficient_assumptions(
    coeffs: &CoefficientField,
    potential: &EffectivePotential,
    cfg: &CheckerConfig,
) -> Result<AssumptionReport> {
    let metric = coeffs.metric().as_ref();
    let sampler = TailSampler::new(metric.s_range(), cfg);
    if !sampler.coverage() {
        return Err(Error::Coverage(format!(
            "the s-range {:?} gives {} ladder points from R0 = {}; at least 4 spanning a factor 8 are needed",
            metric.s_range(),
            sampler.radii.len(),
            cfg.r0
        )));
    }
    let probes = metric_probes(metric, cfg);
    let floor = potential.floor();
    let guard = move |m: &MetricSample| if m.h >= floor { Ok(()) } else { Err(m.h) };
    let v = move |m: &MetricSample| match guard(m) {
        Ok(()) => PotentialSample::from_metric(m).v,
        Err(_) => f64::INFINITY,
    };
    let v_s = move |m: &MetricSample| match guard(m) {
        Ok(()) => PotentialSample::from_metric(m).v_s,
        Err(_) => f64::INFINITY,
    };
    let items: Vec<(&str, &str, Kind, Probe<'_>)> = vec![
        ("Ass2.1-item1-inverse", "1/h^2", Kind::Bounded, column_sup(metric, &probes, |m| 1.0 / (m.h * m.h))),
        ("Ass2.1-item1-h2", "h^2", Kind::Bounded, column_sup(metric, &probes, |m| m.h * m.h)),
        ("Ass2.1-item2", "G - 1", Kind::Limit, column_sup(metric, &probes, |m| CoefficientField::g11(m) - 1.0)),
        ("Ass2.1-item3", "G_1", Kind::Decay, column_sup(metric, &probes, CoefficientField::g11_s)),
        ("Ass2.1-item4", "G^1i_i", Kind::Bounded, column_sup(metric, &probes, CoefficientField::g11_s)),
        ("Ass2.2-item1", "V", Kind::Bounded, column_sup(metric, &probes, v)),
        ("Ass2.2-item2", "V", Kind::Limit, column_sup(metric, &probes, v)),
        ("Ass2.2-item3", "V_1", Kind::Decay, column_sup(metric, &probes, v_s)),
    ];
    let mut report = run_items(items, metric.s_range(), cfg)?;
    // Positivity of h is part of item 1: 1/h² is only meaningful where h > 0.
    let lower = ellipticity_bounds(metric, metric.s_range(), 4096)?.lower;
    if !(lower > 0.0) {
        if let Some(e) = report.entries.iter_mut().find(|e| e.id == "Ass2.1-item1-inverse") {
            e.verdict = Verdict::Fail;
            e.notes = format!("h reaches {lower:.4e}");
        }
        report = AssumptionReport::from_entries(report.entries, cfg);
    }
    Ok(report)
}

/// How the self-overlap hypothesis was settled.
#[derive(Debug, Clone, PartialEq)]
pub enum OverlapEvidence<'a> {
    Checked(&'a OverlapReport),
    /// The tube is treated as an abstract Riemannian manifold.
    Waived,
    NotChecked,
}

/// a‖κ₁‖_∞ < 1, ellipticity of h, and the overlap heuristic.
pub fn check_basic(
    profile: Option<&CurvatureProfile>,
    metric: &dyn TubeMetric,
    overlap: OverlapEvidence<'_>,
    cfg: &CheckerConfig,
) -> Result<AssumptionReport> {
    let mut entries = Vec::new();
    let a = metric.radius();
    if let Some(p) = profile {
        let product = a * p.sup_norm(0);
        let margin = 1.0 - product;
        entries.push(entry(
            "Ass5-radius",
            "a*|kappa_1|_inf",
            vec![],
            None,
            if margin > 0.0 { Verdict::Pass } else { Verdict::Fail },
            format!("a*|kappa_1| = {product:.6}, margin {margin:.6}"),
        ));
    }
    let b = ellipticity_bounds(metric, metric.s_range(), 4096)?;
    let positive = b.lower > 0.0 && b.upper.is_finite();
    entries.push(entry(
        "Ass9-elliptic",
        "c- <= h <= c+",
        vec![],
        None,
        if positive && b.consistent() { Verdict::Pass } else { Verdict::Fail },
        format!(
            "sampled [{:.6}, {:.6}]{}",
            b.lower,
            b.upper,
            b.analytic.map_or(String::new(), |(lo, hi)| format!(", analytic [{lo:.6}, {hi:.6}]"))
        ),
    ));
    let (verdict, notes) = match overlap {
        OverlapEvidence::Checked(r) if r.embedded => (
            Verdict::Pass,
            format!(
                "heuristic: no samples more than {} apart in arclength within {} of each other",
                r.min_arc_separation, r.clearance
            ),
        ),
        OverlapEvidence::Checked(r) => (
            Verdict::Fail,
            format!("heuristic: {} close pairs, first at s = {:?}", r.pairs.len(), r.pairs.first().map(|p| (p.s_first, p.s_second))),
        ),
        OverlapEvidence::Waived => (Verdict::Pass, "waived (abstract manifold)".to_string()),
        OverlapEvidence::NotChecked => (Verdict::Inconclusive, "not checked".to_string()),
    };
    entries.push(entry("Ass5-overlap", "self-overlap", vec![], None, verdict, notes));
    Ok(AssumptionReport::from_entries(entries, cfg))
}
