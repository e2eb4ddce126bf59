//! The transformed Hamiltonian H = −∂_i G^{ij}∂_j + V on the straight reference tube,
//! its weighted-form twin, and the free Hamiltonian H₀.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::TruncatedGrid;
use crate::sparse::{CsrMatrix, TripletBuilder};
use crate::tube_metric::{MetricColumn, MetricSample, TubeMetric};

pub use crate::assumption_checker::check_coefficient_assumptions;

/// V, V_{,1} and the four terms of V at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PotentialSample {
    pub v: f64,
    pub v_s: f64,
    /// −5/4·h_{,1}²/h⁴, ½·h_{,11}/h³, −¼·δ^{μν}h_{,μ}h_{,ν}/h², ½·δ^{μν}h_{,μν}/h
    pub terms: [f64; 4],
}

impl PotentialSample {
    pub fn from_metric(m: &MetricSample) -> Self {
        let h = m.h;
        let (h2, h3) = (h * h, h * h * h);
        let h4 = h2 * h2;
        let h5 = h4 * h;
        let terms = [
            -1.25 * m.h_s * m.h_s / h4,
            0.5 * m.h_ss / h3,
            -0.25 * m.p / h2,
            0.5 * m.q / h,
        ];
        let v_s = 5.0 * m.h_s.powi(3) / h5 - 4.0 * m.h_s * m.h_ss / h4 + m.h_sss / (2.0 * h3)
            + 0.5 * m.p * m.h_s / h3
            - 0.25 * m.p_s / h2
            - 0.5 * m.q * m.h_s / h2
            + 0.5 * m.q_s / h;
        Self {
            v: terms.iter().sum(),
            v_s,
            terms,
        }
    }
}

/// The effective potential generated by the unitary rescaling ψ ↦ |g|^{1/4}ψ.
#[derive(Clone)]
pub struct EffectivePotential {
    metric: Arc<dyn TubeMetric>,
    floor: f64,
}

/// Builds V from a metric. The singularity floor defaults to half the analytic lower
/// bound of h when one is known and to 10⁻⁶ otherwise.
pub fn effective_potential(metric: Arc<dyn TubeMetric>) -> EffectivePotential {
    let floor = metric.analytic_bounds().map_or(1e-6, |(lo, _)| (0.5 * lo).max(1e-12));
    EffectivePotential { metric, floor }
}

impl EffectivePotential {
    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    pub fn metric(&self) -> &Arc<dyn TubeMetric> {
        &self.metric
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn eval(&self, s: f64, u: &[f64]) -> Result<PotentialSample> {
        self.eval_in(&self.metric.column(s)?, s, u)
    }

    pub fn eval_in(&self, column: &MetricColumn, s: f64, u: &[f64]) -> Result<PotentialSample> {
        let m = column.sample(u);
        self.check(&m, s, u)?;
        Ok(PotentialSample::from_metric(&m))
    }

    pub(crate) fn check(&self, m: &MetricSample, s: f64, u: &[f64]) -> Result<()> {
        if !(m.h >= self.floor) {
            return Err(Error::Singularity {
                s,
                u: u.to_vec(),
                h: m.h,
                floor: self.floor,
            });
        }
        Ok(())
    }
}

/// G = diag(h⁻², 1, …, 1) and its s-derivative.
#[derive(Clone)]
pub struct CoefficientField {
    metric: Arc<dyn TubeMetric>,
}

impl CoefficientField {
    pub fn new(metric: Arc<dyn TubeMetric>) -> Self {
        Self { metric }
    }

    pub fn metric(&self) -> &Arc<dyn TubeMetric> {
        &self.metric
    }

    pub fn g11(m: &MetricSample) -> f64 {
        1.0 / (m.h * m.h)
    }

    /// G^{11}_{,1} = −2h_{,1}/h³; this is also the spectral norm of G_{,1}, whose other
    /// entries vanish.
    pub fn g11_s(m: &MetricSample) -> f64 {
        -2.0 * m.h_s / (m.h * m.h * m.h)
    }

    /// (C₋, C₊) with C₋·1 ≤ G ≤ C₊·1, from ellipticity bounds c₋ ≤ h ≤ c₊.
    pub fn matrix_bounds(c_minus: f64, c_plus: f64) -> (f64, f64) {
        (1.0 / (c_plus * c_plus), (1.0 / (c_minus * c_minus)).max(1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Hamiltonian,
    FreeHamiltonian,
    WeightedForm,
    Dilation,
    Commutator,
    DirectCommutator,
}

impl OperatorKind {
    pub fn label(self) -> &'static str {
        match self {
            OperatorKind::Hamiltonian => "H",
            OperatorKind::FreeHamiltonian => "H0",
            OperatorKind::WeightedForm => "weighted-form",
            OperatorKind::Dilation => "A",
            OperatorKind::Commutator => "commutator",
            OperatorKind::DirectCommutator => "direct-commutator",
        }
    }
}

/// A sparse real matrix on a truncated grid with Dirichlet rows eliminated.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    pub matrix: CsrMatrix,
    pub grid: TruncatedGrid,
    pub kind: OperatorKind,
}

/// Metric samples at every transverse node of every s index, walls included.
pub(crate) struct NodalSamples {
    /// `(n_s + 2) × n_t`, row-major in the wall-inclusive s index.
    pub samples: Vec<MetricSample>,
    pub columns: Vec<MetricColumn>,
}

pub(crate) fn sample_grid(metric: &dyn TubeMetric, grid: &TruncatedGrid) -> Result<NodalSamples> {
    let n_t = grid.n_t();
    let mut samples = Vec::with_capacity((grid.n_s() + 2) * n_t);
    let mut columns = Vec::with_capacity(grid.n_s() + 2);
    for i in 0..grid.n_s() + 2 {
        let column = metric.column(grid.s_with_walls(i))?;
        for u in &grid.transverse.points {
            samples.push(column.sample(u));
        }
        columns.push(column);
    }
    Ok(NodalSamples { samples, columns })
}

/// Transverse face coefficients: nodal values, and the value on a wall face.
pub(crate) struct TransverseCoefficient<'a> {
    pub nodal: Option<&'a [f64]>,
    pub wall: &'a dyn Fn(usize, usize, usize, bool) -> f64,
}

/// Conservative finite-volume discretization of −∂_s a ∂_s − Σ_μ ∂_μ b ∂_μ + c.
///
/// `s_coef` holds nodal values of a on the wall-inclusive s index, face values are
/// arithmetic means, and each off-diagonal value is computed once and written to both
/// triangles, so the result is exactly symmetric.
pub(crate) fn assemble_divergence_form(
    grid: &TruncatedGrid,
    s_coef: &[f64],
    transverse: Option<TransverseCoefficient<'_>>,
    diag: &[f64],
) -> CsrMatrix {
    let n_t = grid.n_t();
    let n_s = grid.n_s();
    let dims = grid.transverse.dimension();
    let inv_ds2 = 1.0 / (grid.ds * grid.ds);
    let mut b = TripletBuilder::with_capacity(grid.len(), grid.len() * (3 + 2 * dims));
    for i in 1..=n_s {
        for t in 0..n_t {
            let node = grid.index(i - 1, t);
            let c = s_coef[i * n_t + t];
            let minus = 0.5 * (s_coef[(i - 1) * n_t + t] + c);
            let plus = 0.5 * (c + s_coef[(i + 1) * n_t + t]);
            let mut d = (minus + plus) * inv_ds2 + diag[node];
            if i < n_s {
                b.push_symmetric(node, grid.index(i, t), -plus * inv_ds2);
            }
            for a in 0..dims {
                let inv = 1.0 / (grid.transverse.spacing[a] * grid.transverse.spacing[a]);
                let (mn, pl) = grid.transverse.neighbours[t][a];
                let (fm, fp) = match &transverse {
                    None => (1.0, 1.0),
                    Some(tc) => {
                        let here = tc.nodal.map_or(1.0, |v| v[node]);
                        let face = |nb: Option<usize>, upper: bool| match (nb, tc.nodal) {
                            (Some(m), Some(v)) => 0.5 * (here + v[grid.index(i - 1, m)]),
                            (Some(_), None) => 1.0,
                            (None, _) => 0.5 * (here + (tc.wall)(i, t, a, upper)),
                        };
                        (face(mn, false), face(pl, true))
                    }
                };
                d += (fm + fp) * inv;
                if let Some(m) = pl {
                    b.push_symmetric(node, grid.index(i - 1, m), -fp * inv);
                }
            }
            b.push(node, node, d);
        }
    }
    b.build()
}

/// H = −∂_s h⁻²∂_s − Δ_u + V on the grid.
pub fn assemble_hamiltonian(
    coeffs: &CoefficientField,
    potential: &EffectivePotential,
    grid: &TruncatedGrid,
) -> Result<DiscreteOperator> {
    let nodal = sample_grid(coeffs.metric().as_ref(), grid)?;
    let n_t = grid.n_t();
    let s_coef: Vec<f64> = nodal.samples.iter().map(CoefficientField::g11).collect();
    let mut diag = vec![0.0; grid.len()];
    for (k, s) in grid.s.iter().enumerate() {
        for (t, u) in grid.transverse.points.iter().enumerate() {
            let m = &nodal.samples[(k + 1) * n_t + t];
            potential.check(m, *s, u)?;
            diag[grid.index(k, t)] = PotentialSample::from_metric(m).v;
        }
    }
    Ok(DiscreteOperator {
        matrix: assemble_divergence_form(grid, &s_coef, None, &diag),
        grid: grid.clone(),
        kind: OperatorKind::Hamiltonian,
    })
}

/// The Dirichlet Laplacian −Δ on the truncated straight tube.
pub fn assemble_free_hamiltonian(grid: &TruncatedGrid) -> DiscreteOperator {
    let s_coef = vec![1.0; (grid.n_s() + 2) * grid.n_t()];
    let diag = vec![0.0; grid.len()];
    DiscreteOperator {
        matrix: assemble_divergence_form(grid, &s_coef, None, &diag),
        grid: grid.clone(),
        kind: OperatorKind::FreeHamiltonian,
    }
}

/// The operator of the quadratic form ∫ (h⁻¹|ψ_{,1}|² + h|∇_uψ|²) with mass h,
/// returned as W^{−1/2} K W^{−1/2} so its eigenvalues solve K x = λ W x.
pub fn assemble_weighted_form(metric: &dyn TubeMetric, grid: &TruncatedGrid, floor: f64) -> Result<DiscreteOperator> {
    let nodal = sample_grid(metric, grid)?;
    let n_t = grid.n_t();
    for (k, s) in grid.s.iter().enumerate() {
        for (t, u) in grid.transverse.points.iter().enumerate() {
            let h = nodal.samples[(k + 1) * n_t + t].h;
            if !(h >= floor) {
                return Err(Error::Singularity { s: *s, u: u.clone(), h, floor });
            }
        }
    }
    let s_coef: Vec<f64> = nodal.samples.iter().map(|m| 1.0 / m.h).collect();
    let weight: Vec<f64> = (0..grid.len()).map(|node| nodal.samples[node + n_t].h).collect();
    let wall = |i: usize, t: usize, a: usize, upper: bool| -> f64 {
        let (lo, hi) = &grid.transverse.wall_points[t][a];
        nodal.columns[i].sample(if upper { hi } else { lo }).h
    };
    let stiffness = assemble_divergence_form(
        grid,
        &s_coef,
        Some(TransverseCoefficient {
            nodal: Some(&weight),
            wall: &wall,
        }),
        &vec![0.0; grid.len()],
    );
    let inv_sqrt: Vec<f64> = weight.iter().map(|w| 1.0 / w.sqrt()).collect();
    Ok(DiscreteOperator {
        matrix: stiffness.scale_symmetric(&inv_sqrt),
        grid: grid.clone(),
        kind: OperatorKind::WeightedForm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cross_section::CrossSection;
    use crate::curvature::{Curvature, CurvatureProfile};
    use crate::tube_metric::EuclideanTubeMetric;

    fn bent(kappa: f64) -> Arc<dyn TubeMetric> {
        let p = CurvatureProfile::planar(Curvature::gaussian(kappa, 1.0), (-20.0, 20.0)).unwrap();
        Arc::new(EuclideanTubeMetric::from_profile(&p, 1.0, 0.05).unwrap())
    }

    #[test]
    fn straight_potential_vanishes() {
        let p = CurvatureProfile::straight(2, (-5.0, 5.0)).unwrap();
        let m: Arc<dyn TubeMetric> = Arc::new(EuclideanTubeMetric::from_profile(&p, 1.0, 0.1).unwrap());
        let v = effective_potential(m);
        let x = v.eval(0.3, &[0.4]).unwrap();
        assert_eq!((x.v, x.v_s), (0.0, 0.0));
    }

    #[test]
    fn constant_curvature_on_centreline() {
        let p = CurvatureProfile::planar(Curvature::Constant(0.6), (-5.0, 5.0)).unwrap();
        let m: Arc<dyn TubeMetric> = Arc::new(EuclideanTubeMetric::from_profile(&p, 1.0, 0.1).unwrap());
        let x = effective_potential(m).eval(1.0, &[0.0]).unwrap();
        assert!((x.v + 0.09).abs() < 1e-15);
    }

    #[test]
    fn toy_grid_single_entry() {
        let g = TruncatedGrid::with_min_nodes(&CrossSection::interval(1.0), 1.0, 1.0, 1.0, 1).unwrap();
        let h = assemble_free_hamiltonian(&g);
        assert_eq!(h.matrix.dim(), 1);
        assert_eq!(h.matrix.get(0, 0), 4.0);
    }

    #[test]
    fn hamiltonian_is_symmetric_with_five_point_pattern() {
        let metric = bent(0.5);
        let g = TruncatedGrid::new(&CrossSection::interval(1.0), 4.0, 0.25, 0.125).unwrap();
        let h = assemble_hamiltonian(&CoefficientField::new(metric.clone()), &effective_potential(metric.clone()), &g).unwrap();
        assert!(h.matrix.is_symmetric());
        assert_eq!(h.matrix.bandwidth(), g.n_t());
        for i in 0..h.matrix.dim() {
            assert!(h.matrix.row(i).count() <= 5);
        }
        let w = assemble_weighted_form(metric.as_ref(), &g, 1e-6).unwrap();
        assert!(w.matrix.is_symmetric());
    }

    #[test]
    fn singular_metric_is_reported() {
        let metric = bent(0.5);
        let v = effective_potential(metric).with_floor(0.9);
        assert!(matches!(v.eval(0.0, &[1.0]), Err(Error::Singularity { .. })));
    }
}
