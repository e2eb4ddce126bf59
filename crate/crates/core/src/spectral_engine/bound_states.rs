//! Bound states below ν₁: domain-length doubling, a spacing ladder and Richardson
//! extrapolation with error bars.

use std::sync::Arc;

use serde::Serialize;

use super::{count_below, lowest_eigenvalues, EigenOptions};
use crate::cross_section::{CrossSection, ThresholdSet};
use crate::effective_operator::{
    assemble_free_hamiltonian, assemble_hamiltonian, assemble_weighted_form, effective_potential, CoefficientField,
    DiscreteOperator,
};
use crate::error::{input, Error, Result};
use crate::grid::{TransverseGrid, TruncatedGrid, MIN_TRANSVERSE_NODES};
use crate::sparse::TripletBuilder;
use crate::tube_metric::TubeMetric;

/// Anything that can build an operator on [−L, L] × ω at a given spacing.
pub trait OperatorRecipe: Send + Sync {
    fn assemble(&self, half_length: f64, spacing: f64) -> Result<DiscreteOperator>;

    /// The bottom of the essential spectrum of the discretized infinite tube at this
    /// spacing, i.e. the lowest eigenvalue of the discrete transverse Laplacian.
    fn discrete_threshold(&self, spacing: f64) -> Result<f64>;

    fn describe(&self) -> String;
}

/// Which discretization of the tube operator to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Discretization {
    /// −∂_s h⁻²∂_s − Δ_u + V on flat measure.
    Transformed,
    /// The quadratic form ∫ h⁻¹|ψ_s|² + h|∇_uψ|² with mass h.
    Weighted,
    /// −Δ on the straight tube, ignoring the metric.
    Free,
}

/// Recipe for a tube given by a metric on the reference tube ℝ × ω.
#[derive(Clone)]
pub struct TubeRecipe {
    pub metric: Arc<dyn TubeMetric>,
    pub cross_section: CrossSection,
    pub discretization: Discretization,
    pub min_transverse_nodes: usize,
}

impl TubeRecipe {
    pub fn new(metric: Arc<dyn TubeMetric>, cross_section: CrossSection, discretization: Discretization) -> Self {
        Self {
            metric,
            cross_section,
            discretization,
            min_transverse_nodes: MIN_TRANSVERSE_NODES,
        }
    }

    pub fn grid(&self, half_length: f64, spacing: f64) -> Result<TruncatedGrid> {
        TruncatedGrid::with_min_nodes(&self.cross_section, half_length, spacing, spacing, self.min_transverse_nodes)
    }
}

impl OperatorRecipe for TubeRecipe {
    fn assemble(&self, half_length: f64, spacing: f64) -> Result<DiscreteOperator> {
        let (lo, hi) = self.metric.s_range();
        if -half_length < lo || half_length > hi {
            return input(format!(
                "truncation [−{half_length}, {half_length}] leaves the metric range [{lo}, {hi}]"
            ));
        }
        let grid = self.grid(half_length, spacing)?;
        match self.discretization {
            Discretization::Transformed => {
                let v = effective_potential(self.metric.clone());
                assemble_hamiltonian(&CoefficientField::new(self.metric.clone()), &v, &grid)
            }
            Discretization::Weighted => {
                let floor = effective_potential(self.metric.clone()).floor();
                assemble_weighted_form(self.metric.as_ref(), &grid, floor)
            }
            Discretization::Free => Ok(assemble_free_hamiltonian(&grid)),
        }
    }

    fn discrete_threshold(&self, spacing: f64) -> Result<f64> {
        transverse_threshold(&self.cross_section, spacing, self.min_transverse_nodes)
    }

    fn describe(&self) -> String {
        format!(
            "{} on {} ({:?})",
            self.metric.source().label(),
            self.cross_section.describe(),
            self.discretization
        )
    }
}

/// Lowest eigenvalue of the 5-point Dirichlet Laplacian on the transverse grid.
pub fn transverse_threshold(omega: &CrossSection, spacing: f64, min_nodes: usize) -> Result<f64> {
    let t = TransverseGrid::new(omega, spacing, min_nodes)?;
    let mut b = TripletBuilder::new(t.len());
    for k in 0..t.len() {
        let mut d = 0.0;
        for a in 0..t.dimension() {
            let inv = 1.0 / (t.spacing[a] * t.spacing[a]);
            d += 2.0 * inv;
            if let Some(m) = t.neighbours[k][a].1 {
                b.push_symmetric(k, m, -inv);
            }
        }
        b.push(k, k, d);
    }
    Ok(lowest_eigenvalues(&b.build(), 1, &EigenOptions::default())?.values[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergencePolicy {
    pub initial_half_length: f64,
    pub max_half_length: f64,
    /// Coarsest spacing; the ladder halves it `levels − 1` times.
    pub coarse_spacing: f64,
    pub levels: usize,
    /// L-doubling stops once the lowest eigenvalue moves by less than trunc_tol·ν₁.
    pub trunc_tol: f64,
    /// Fitted orders further than this from 2 are flagged.
    pub order_tolerance: f64,
    /// Skip L-doubling and use this half-length.
    pub fixed_half_length: Option<f64>,
    #[serde(skip)]
    pub eigen: EigenOptions,
}

impl Default for ConvergencePolicy {
    fn default() -> Self {
        Self {
            initial_half_length: 12.0,
            max_half_length: 512.0,
            coarse_spacing: 0.125,
            levels: 3,
            trunc_tol: 1e-6,
            order_tolerance: 0.3,
            fixed_half_length: None,
            eigen: EigenOptions::default(),
        }
    }
}

impl ConvergencePolicy {
    pub fn spacings(&self) -> Vec<f64> {
        (0..self.levels).map(|j| self.coarse_spacing / f64::powi(2.0, j as i32)).collect()
    }
}

/// Richardson extrapolation of a second-order ladder h, h/2, h/4, ….
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extrapolation {
    pub value: f64,
    /// Difference between the last two extrapolants (or the last raw difference
    /// when only two levels exist).
    pub error: f64,
    /// log₂ of the ratio of successive differences, when defined.
    pub order: Option<f64>,
    pub flagged: bool,
}

/// Extrapolates `values` (coarse to fine, ratio 2). Errors if the ladder is not
/// monotone in one direction.
pub fn extrapolate(values: &[f64], order_tolerance: f64) -> Result<Extrapolation> {
    match values.len() {
        0 => input("empty ladder"),
        1 => Ok(Extrapolation {
            value: values[0],
            error: f64::INFINITY,
            order: None,
            flagged: true,
        }),
        n => {
            let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
            if diffs.windows(2).any(|d| d[0] * d[1] < 0.0) {
                return Err(Error::Diagnostics(format!("non-monotone ladder {values:?}")));
            }
            let rich = |c: f64, f: f64| (4.0 * f - c) / 3.0;
            let value = rich(values[n - 2], values[n - 1]);
            let (error, order) = if n >= 3 {
                let prev = rich(values[n - 3], values[n - 2]);
                let (d1, d2) = (diffs[n - 3], diffs[n - 2]);
                let order = if d1 != 0.0 && d2 != 0.0 { Some((d1 / d2).log2()) } else { None };
                ((value - prev).abs(), order)
            } else {
                (diffs[0].abs() / 3.0, None)
            };
            let flagged = order.is_none_or(|p| (p - 2.0).abs() > order_tolerance);
            Ok(Extrapolation {
                value,
                error,
                order,
                flagged,
            })
        }
    }
}

/// One solve on the spacing ladder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderLevel {
    pub half_length: f64,
    pub spacing: f64,
    pub dimension: usize,
    pub discrete_threshold: f64,
    /// Eigenvalues below the discrete threshold.
    pub count: usize,
    pub values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

/// Solves for the `k` lowest eigenvalues on each spacing at fixed L. With `k = None`
/// the number of eigenvalues below the discrete threshold at the finest level is used.
pub fn spacing_ladder(
    recipe: &dyn OperatorRecipe,
    half_length: f64,
    spacings: &[f64],
    k: Option<usize>,
    opts: &EigenOptions,
) -> Result<Vec<LadderLevel>> {
    let mut levels = Vec::with_capacity(spacings.len());
    let mut want = k;
    for &h in spacings.iter().rev() {
        let op = recipe.assemble(half_length, h)?;
        let thr = recipe.discrete_threshold(h)?;
        let count = count_below(&op.matrix, thr)?;
        let n = *want.get_or_insert(count);
        let (values, residuals, iterations) = if n > 0 {
            let r = lowest_eigenvalues(&op.matrix, n, opts)?;
            (r.values, r.residuals, r.iterations)
        } else {
            (vec![], vec![], 0)
        };
        levels.push(LadderLevel {
            half_length,
            spacing: h,
            dimension: op.matrix.dim(),
            discrete_threshold: thr,
            count,
            values,
            residuals,
            iterations,
        });
    }
    levels.reverse();
    Ok(levels)
}

/// One step of the L-doubling at the coarse spacing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationStep {
    pub half_length: f64,
    pub count: usize,
    pub lowest: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundState {
    pub index: usize,
    pub value: f64,
    /// Richardson error + truncation estimate + worst solver residual.
    pub error: f64,
    /// The Richardson part of `error` alone.
    pub extrapolation_error: f64,
    pub order: Option<f64>,
    pub order_flagged: bool,
    /// Raw eigenvalues coarse to fine.
    pub ladder: Vec<f64>,
    pub truncation_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundStateReport {
    pub operator: String,
    pub nu1: f64,
    pub half_length: f64,
    pub truncation_converged: bool,
    pub truncation: Vec<TruncationStep>,
    pub levels: Vec<LadderLevel>,
    /// Extrapolated eigenvalues below ν₁ − error.
    pub states: Vec<BoundState>,
    /// Extrapolated values that did not separate from ν₁.
    pub candidates: Vec<BoundState>,
    /// Eigenvalue counts below ν₁ − error on the last two levels agree.
    pub count_stable: bool,
    pub note: String,
}

impl BoundStateReport {
    pub fn none_detected(&self) -> bool {
        self.states.is_empty()
    }

    /// Every reported state lies below ν₁ by more than its error bar.
    pub fn is_sound(&self) -> bool {
        self.states.iter().all(|b| b.value < self.nu1 - b.error)
    }

    pub fn total_iterations(&self) -> usize {
        self.levels.iter().map(|l| l.iterations).sum()
    }
}

fn truncation_search(
    recipe: &dyn OperatorRecipe,
    nu1: f64,
    policy: &ConvergencePolicy,
) -> Result<(f64, bool, Vec<TruncationStep>)> {
    let h0 = policy.coarse_spacing;
    let thr = recipe.discrete_threshold(h0)?;
    let mut steps: Vec<TruncationStep> = Vec::new();
    let mut l = policy.initial_half_length;
    loop {
        let op = recipe.assemble(l, h0)?;
        let count = count_below(&op.matrix, thr)?;
        let lowest = if count > 0 {
            Some(lowest_eigenvalues(&op.matrix, 1, &policy.eigen)?.values[0])
        } else {
            None
        };
        let converged = match (steps.last().and_then(|s| s.lowest), lowest) {
            (Some(prev), Some(now)) => (prev - now).abs() < policy.trunc_tol * nu1,
            _ => false,
        };
        steps.push(TruncationStep { half_length: l, count, lowest });
        if converged {
            return Ok((l, true, steps));
        }
        if 2.0 * l > policy.max_half_length {
            return Ok((l, false, steps));
        }
        l *= 2.0;
    }
}

/// Runs the (L, spacing) ladder and reports the eigenvalues that separate from ν₁.
pub fn bound_states(
    recipe: &dyn OperatorRecipe,
    thresholds: &ThresholdSet,
    policy: &ConvergencePolicy,
) -> Result<BoundStateReport> {
    if policy.levels == 0 || !(policy.coarse_spacing > 0.0) {
        return input("convergence policy needs at least one level and a positive spacing");
    }
    let nu1 = thresholds.nu1();
    let (half_length, truncation_converged, truncation) = match policy.fixed_half_length {
        Some(l) => (l, true, vec![]),
        None => truncation_search(recipe, nu1, policy)?,
    };
    let mut report = BoundStateReport {
        operator: recipe.describe(),
        nu1,
        half_length,
        truncation_converged,
        truncation: truncation.clone(),
        levels: vec![],
        states: vec![],
        candidates: vec![],
        count_stable: true,
        note: String::new(),
    };
    if policy.fixed_half_length.is_none() && truncation.last().is_none_or(|s| s.count == 0) {
        report.note = format!("no bound state detected: no eigenvalue below the discrete threshold up to L = {half_length}");
        return Ok(report);
    }
    let truncation_error = match truncation.as_slice() {
        [.., a, b] => match (a.lowest, b.lowest) {
            (Some(x), Some(y)) => (x - y).abs(),
            _ => 0.0,
        },
        _ => 0.0,
    };
    let levels = spacing_ladder(recipe, half_length, &policy.spacings(), None, &policy.eigen)?;
    let k = levels.last().map_or(0, |l| l.values.len());
    for j in 0..k {
        let ladder: Vec<f64> = levels.iter().map(|l| l.values[j]).collect();
        let ex = extrapolate(&ladder, policy.order_tolerance)
            .map_err(|e| Error::Diagnostics(format!("eigenvalue {j} at L = {half_length}: {e}")))?;
        let residual = levels.iter().map(|l| l.residuals[j]).fold(0.0, f64::max);
        let state = BoundState {
            index: j,
            value: ex.value,
            error: ex.error + truncation_error + residual,
            extrapolation_error: ex.error,
            order: ex.order,
            order_flagged: ex.flagged,
            ladder,
            truncation_error,
        };
        if state.value < nu1 - state.error {
            report.states.push(state);
        } else {
            report.candidates.push(state);
        }
    }
    if levels.len() >= 2 {
        let below = |l: &LadderLevel| {
            l.values
                .iter()
                .zip(report.states.iter().chain(&report.candidates))
                .filter(|(v, b)| **v < nu1 - b.error)
                .count()
        };
        report.count_stable = below(&levels[levels.len() - 2]) == below(&levels[levels.len() - 1]);
    }
    report.levels = levels;
    if report.states.is_empty() {
        report.note = "no bound state detected: no extrapolated eigenvalue separates from the threshold".into();
    } else if !truncation_converged {
        report.note = format!("L-doubling stopped at L = {half_length} before convergence");
    }
    Ok(report)
}
