//! The Mourre estimate for the free Hamiltonian: E i[H₀,A] E ≥ 2ρ(λ) E on a window.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::{count_in_window, eigenpairs_near, EigenOptions};
use crate::cross_section::{rho_of_lambda, CrossSection, Rho, ThresholdSet};
use crate::effective_operator::{assemble_free_hamiltonian, DiscreteOperator};
use crate::error::{Error, Result};
use crate::grid::TruncatedGrid;
use crate::spectral_engine::conjugate::assemble_free_commutator;

/// The energy window (λ − ε, λ + ε) and the declared distance δ it keeps from 𝒯.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MourreWindow {
    pub lambda: f64,
    pub epsilon: f64,
    pub margin: f64,
}

impl MourreWindow {
    /// ε = 0.02ρ(λ), but never more than 5% of the gap between the thresholds around
    /// λ; the margin is 2ε.
    pub fn around(thresholds: &ThresholdSet, lambda: f64) -> Result<Self> {
        let rho = match rho_of_lambda(thresholds, lambda)? {
            Rho::Finite(r) if r > 0.0 => r,
            _ => return Err(Error::Window(format!("λ = {lambda} has no positive ρ"))),
        };
        let distinct = thresholds.distinct();
        let below = distinct.iter().copied().filter(|z| *z <= lambda).fold(f64::NEG_INFINITY, f64::max);
        let above = distinct.iter().copied().find(|z| *z > lambda);
        let gap = above.map_or(rho, |a| a - below);
        let epsilon = (0.02 * rho).min(0.05 * gap);
        Ok(Self {
            lambda,
            epsilon,
            margin: 2.0 * epsilon,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MourreOptions {
    /// PASS iff m ≥ (1 − relative_tol)·2ρ(λ).
    pub relative_tol: f64,
    /// Eigenvectors with more than `wall_mass` of their norm² within `wall_nodes`
    /// s-steps of the truncation walls are discarded.
    pub wall_nodes: usize,
    pub wall_mass: f64,
    #[serde(skip)]
    pub eigen: EigenOptions,
}

impl Default for MourreOptions {
    fn default() -> Self {
        Self {
            relative_tol: 0.05,
            wall_nodes: 4,
            wall_mass: 0.01,
            eigen: EigenOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MourreCheck {
    pub window: MourreWindow,
    /// Eigenvalues of H₀ in the window.
    pub count: usize,
    /// Eigenvectors left after wall filtering.
    pub kept: usize,
    /// Smallest eigenvalue of the projected commutator.
    pub measured: f64,
    pub rho: f64,
    /// 2ρ(λ).
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn validate(window: &MourreWindow, thresholds: &ThresholdSet) -> Result<()> {
    let MourreWindow { lambda, epsilon, margin } = *window;
    if !(epsilon > 0.0 && epsilon < margin) {
        return Err(Error::Window(format!("window width ε = {epsilon} must be positive and below the margin δ = {margin}")));
    }
    let distance = thresholds.nu.iter().map(|z| (z - lambda).abs()).fold(f64::INFINITY, f64::min);
    if distance <= epsilon {
        return Err(Error::Window(format!(
            "window ({}, {}) contains a threshold",
            lambda - epsilon,
            lambda + epsilon
        )));
    }
    if distance < margin {
        return Err(Error::Window(format!(
            "λ = {lambda} is {distance} from a threshold, closer than the margin {margin}"
        )));
    }
    if lambda < thresholds.nu1() {
        return Err(Error::Window(format!("λ = {lambda} lies below ν₁, where H₀ has no spectrum")));
    }
    Ok(())
}

fn wall_fraction(grid: &TruncatedGrid, v: &[f64], nodes: usize) -> f64 {
    let total: f64 = v.iter().map(|x| x * x).sum();
    let near: f64 = v
        .iter()
        .enumerate()
        .filter(|(k, _)| grid.near_s_wall(*k, nodes))
        .map(|(_, x)| x * x)
        .sum();
    near / total
}

/// Measures the projected commutator on each window. Invalid windows are rejected
/// before anything is computed.
pub fn mourre_check_free(
    h0: &DiscreteOperator,
    commutator: &DiscreteOperator,
    thresholds: &ThresholdSet,
    windows: &[MourreWindow],
    opts: &MourreOptions,
) -> Result<Vec<MourreCheck>> {
    for w in windows {
        validate(w, thresholds)?;
    }
    let mut out = Vec::with_capacity(windows.len());
    for w in windows {
        let (lo, hi) = (w.lambda - w.epsilon, w.lambda + w.epsilon);
        let count = count_in_window(&h0.matrix, lo, hi)?;
        if count == 0 {
            return Err(Error::Window(format!(
                "no eigenvalue of H₀ in ({lo}, {hi}) at L = {}; increase L",
                h0.grid.half_length
            )));
        }
        let pairs = eigenpairs_near(&h0.matrix, w.lambda, count, &opts.eigen)?;
        let kept: Vec<&Vec<f64>> = pairs
            .vectors
            .iter()
            .zip(&pairs.values)
            .filter(|(v, l)| **l > lo && **l < hi && wall_fraction(&h0.grid, v, opts.wall_nodes) <= opts.wall_mass)
            .map(|(v, _)| v)
            .collect();
        if kept.is_empty() {
            return Err(Error::Window(format!(
                "all {count} eigenvectors in ({lo}, {hi}) are wall-localized; increase L"
            )));
        }
        let cv: Vec<Vec<f64>> = kept.iter().map(|v| commutator.matrix.mul_vec(v)).collect();
        let projected = DMatrix::from_fn(kept.len(), kept.len(), |i, j| {
            let a: f64 = kept[i].iter().zip(&cv[j]).map(|(x, y)| x * y).sum();
            let b: f64 = kept[j].iter().zip(&cv[i]).map(|(x, y)| x * y).sum();
            0.5 * (a + b)
        });
        let measured = SymmetricEigen::new(projected).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let rho = rho_of_lambda(thresholds, w.lambda)?.finite().unwrap_or(f64::INFINITY);
        let expected = 2.0 * rho;
        let tolerance = opts.relative_tol * expected;
        out.push(MourreCheck {
            window: *w,
            count,
            kept: kept.len(),
            measured,
            rho,
            expected,
            tolerance,
            pass: measured >= expected - tolerance,
        });
    }
    Ok(out)
}

/// Builds H₀ and i[H₀,A] on the straight tube and runs the check, doubling L (up to
/// `max_doublings` times) when a window holds no usable eigenvector.
pub fn mourre_check_straight(
    omega: &CrossSection,
    half_length: f64,
    spacing: f64,
    thresholds: &ThresholdSet,
    windows: &[MourreWindow],
    opts: &MourreOptions,
    max_doublings: usize,
) -> Result<(f64, Vec<MourreCheck>)> {
    let mut l = half_length;
    for attempt in 0..=max_doublings {
        let grid = TruncatedGrid::new(omega, l, spacing, spacing)?;
        let h0 = assemble_free_hamiltonian(&grid);
        let c = assemble_free_commutator(&grid);
        match mourre_check_free(&h0, &c, thresholds, windows, opts) {
            Ok(checks) => return Ok((l, checks)),
            Err(Error::Window(msg)) if msg.contains("increase L") && attempt < max_doublings => l *= 2.0,
            Err(e) => return Err(e),
        }
    }
    unreachable!("the last attempt returns")
}
