//! The dilation generator A = ½(q¹p₁ + p₁q¹) and the commutator i[H, A].
//!
//! A is stored as the real antisymmetric S with A = iS, so i[H, A] = SH − HS and all
//! quadratic forms stay real.

use crate::effective_operator::{
    assemble_divergence_form, sample_grid, CoefficientField, DiscreteOperator, EffectivePotential, OperatorKind,
    PotentialSample,
};
use crate::error::{input, Result};
use crate::grid::TruncatedGrid;
use crate::sparse::{CsrMatrix, TripletBuilder};

/// S = −½(QD + DQ) with D the centred difference in s and Q = diag(s).
pub fn assemble_dilation(grid: &TruncatedGrid) -> DiscreteOperator {
    let n_t = grid.n_t();
    let mut b = TripletBuilder::with_capacity(grid.len(), 2 * grid.len());
    for i in 0..grid.n_s().saturating_sub(1) {
        let value = -(grid.s[i] + grid.s[i + 1]) / (4.0 * grid.ds);
        for t in 0..n_t {
            let (p, q) = (grid.index(i, t), grid.index(i + 1, t));
            b.push(p, q, value);
            b.push(q, p, -value);
        }
    }
    DiscreteOperator {
        matrix: b.build(),
        grid: grid.clone(),
        kind: OperatorKind::Dilation,
    }
}

/// i[H, A] = −∂_s c ∂_s − q¹V_{,1} with c = 2G^{11} − q¹G^{11}_{,1}, on the same
/// face-value stencil as the Hamiltonian.
pub fn assemble_commutator(
    coeffs: &CoefficientField,
    potential: &EffectivePotential,
    grid: &TruncatedGrid,
) -> Result<DiscreteOperator> {
    let nodal = sample_grid(coeffs.metric().as_ref(), grid)?;
    let n_t = grid.n_t();
    let mut s_coef = Vec::with_capacity(nodal.samples.len());
    for (idx, m) in nodal.samples.iter().enumerate() {
        let s = grid.s_with_walls(idx / n_t);
        s_coef.push(2.0 * CoefficientField::g11(m) - s * CoefficientField::g11_s(m));
    }
    let mut diag = vec![0.0; grid.len()];
    for (k, s) in grid.s.iter().enumerate() {
        for (t, u) in grid.transverse.points.iter().enumerate() {
            let m = &nodal.samples[(k + 1) * n_t + t];
            potential.check(m, *s, u)?;
            diag[grid.index(k, t)] = -s * PotentialSample::from_metric(m).v_s;
        }
    }
    let zero = |_: usize, _: usize, _: usize, _: bool| 0.0;
    let matrix = assemble_divergence_form(
        grid,
        &s_coef,
        Some(crate::effective_operator::TransverseCoefficient {
            nodal: Some(&vec![0.0; grid.len()]),
            wall: &zero,
        }),
        &diag,
    );
    Ok(DiscreteOperator {
        matrix,
        grid: grid.clone(),
        kind: OperatorKind::Commutator,
    })
}

/// i[H₀, A] = −2∂_s² for the straight tube.
pub fn assemble_free_commutator(grid: &TruncatedGrid) -> DiscreteOperator {
    let s_coef = vec![2.0; (grid.n_s() + 2) * grid.n_t()];
    let zero = |_: usize, _: usize, _: usize, _: bool| 0.0;
    let matrix = assemble_divergence_form(
        grid,
        &s_coef,
        Some(crate::effective_operator::TransverseCoefficient {
            nodal: Some(&vec![0.0; grid.len()]),
            wall: &zero,
        }),
        &vec![0.0; grid.len()],
    );
    DiscreteOperator {
        matrix,
        grid: grid.clone(),
        kind: OperatorKind::Commutator,
    }
}

/// The matrix commutator SH − HS.
pub fn direct_commutator(h: &DiscreteOperator, s: &DiscreteOperator) -> Result<DiscreteOperator> {
    if h.matrix.dim() != s.matrix.dim() {
        return input("operators live on different grids");
    }
    let sh = s.matrix.matmul(&h.matrix);
    let hs = h.matrix.matmul(&s.matrix);
    Ok(DiscreteOperator {
        matrix: sh.add(&hs, -1.0),
        grid: h.grid.clone(),
        kind: OperatorKind::DirectCommutator,
    })
}

/// ⟨v, (SH − HS) v⟩ = −2 (Sv)·(Hv), without forming the product matrix.
pub fn direct_commutator_form(h: &CsrMatrix, s: &CsrMatrix, v: &[f64]) -> f64 {
    let sv = s.mul_vec(v);
    let hv = h.mul_vec(v);
    -2.0 * sv.iter().zip(&hv).map(|(a, b)| a * b).sum::<f64>()
}

/// ⟨v, A v⟩ for the complex grid function v = re + i·im, which equals −2 reᵀS im.
pub fn dilation_form(s: &CsrMatrix, re: &[f64], im: &[f64]) -> f64 {
    let sim = s.mul_vec(im);
    -2.0 * re.iter().zip(&sim).map(|(a, b)| a * b).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cross_section::CrossSection;
    use crate::effective_operator::assemble_free_hamiltonian;

    fn grid() -> TruncatedGrid {
        TruncatedGrid::new(&CrossSection::interval(1.0), 8.0, 1.0 / 16.0, 1.0 / 8.0).unwrap()
    }

    #[test]
    fn dilation_is_antisymmetric_and_halves_constants() {
        let g = grid();
        let s = assemble_dilation(&g);
        assert_eq!(s.matrix.max_symmetric_part(), 0.0);
        let v = vec![1.0; g.len()];
        let sv = s.matrix.mul_vec(&v);
        for i in 2..g.n_s() - 2 {
            for t in 0..g.n_t() {
                assert!((sv[g.index(i, t)] + 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn free_commutator_matches_direct_on_interior_vectors() {
        let g = grid();
        let h = assemble_free_hamiltonian(&g);
        let s = assemble_dilation(&g);
        let c = assemble_free_commutator(&g);
        let direct = direct_commutator(&h, &s).unwrap();
        assert!(direct.matrix.is_symmetric() || direct.matrix.max_asymmetry() < 1e-9);
        let v: Vec<f64> = (0..g.len())
            .map(|node| {
                let s = g.s[node / g.n_t()];
                let u = g.transverse.points[node % g.n_t()][0];
                (-(s - 1.0) * (s - 1.0)).exp() * (std::f64::consts::FRAC_PI_2 * u).cos()
            })
            .collect();
        let a = c.matrix.quadratic_form(&v);
        let b = direct.matrix.quadratic_form(&v);
        assert!((b - direct_commutator_form(&h.matrix, &s.matrix, &v)).abs() < 1e-9 * b.abs());
        assert!((a - b).abs() / a.abs() < 1e-2, "{a} vs {b}");
    }
}
