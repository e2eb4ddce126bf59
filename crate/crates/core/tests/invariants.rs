use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use waveguide_core::assumption_checker::{check_curvature_decay, check_metric_hypotheses, ladder, CheckerConfig};
use waveguide_core::cross_section::{rho_of_lambda, CrossSection, Exactness, Rho, ThresholdSet};
use waveguide_core::curvature::{Curvature, CurvatureProfile};
use waveguide_core::curve_geometry::{integrate_frenet, integrate_frenet_default, IntegratorOptions};
use waveguide_core::effective_operator::{assemble_hamiltonian, effective_potential, CoefficientField};
use waveguide_core::grid::TruncatedGrid;
use waveguide_core::numerics::linspace;
use waveguide_core::spectral_engine::{assemble_commutator, lowest_eigenvalues, EigenOptions};
use waveguide_core::tube_metric::{metric_from_jacobi, EuclideanTubeMetric, SurfaceData, TubeMetric};

fn space_curve() -> impl Strategy<Value = CurvatureProfile> {
    (3usize..=4, -0.9f64..0.9, 0.4f64..2.0, -0.6f64..0.6, -0.4f64..0.4).prop_map(|(d, k1, sigma, k2, k3)| {
        let mut kappas = vec![Curvature::gaussian(k1, sigma), Curvature::Constant(k2)];
        if d == 4 {
            kappas.push(Curvature::gaussian(k3, 1.0));
        }
        CurvatureProfile::new(d, kappas, (-8.0, 8.0)).unwrap()
    })
}

fn planar(amp: f64, sigma: f64, range: f64) -> Arc<dyn TubeMetric> {
    let p = CurvatureProfile::planar(Curvature::gaussian(amp, sigma), (-range, range)).unwrap();
    Arc::new(EuclideanTubeMetric::from_profile(&p, 1.0, 1.0 / 16.0).unwrap())
}

fn ground(metric: Arc<dyn TubeMetric>, half_length: f64, spacing: f64) -> f64 {
    let grid = TruncatedGrid::with_min_nodes(&CrossSection::interval(1.0), half_length, spacing, spacing, 4).unwrap();
    let ham = assemble_hamiltonian(&CoefficientField::new(metric.clone()), &effective_potential(metric), &grid).unwrap();
    lowest_eigenvalues(&ham.matrix, 1, &sparse_solver()).unwrap().values[0]
}

/// Forces the shift-invert Lanczos path even on small matrices.
fn sparse_solver() -> EigenOptions {
    EigenOptions {
        dense_limit: 0,
        ..EigenOptions::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn frames_stay_orthonormal(profile in space_curve()) {
        let f = integrate_frenet_default(&profile, &linspace(-8.0, 8.0, 129)).unwrap();
        prop_assert!(f.max_frame_defect() < 1e-10);
        let d = profile.dimension();
        for r in &f.rotations {
            prop_assert!((r.transpose() * r - DMatrix::<f64>::identity(d - 1, d - 1)).amax() < 1e-10);
            prop_assert!((r.determinant() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn rotating_the_initial_frame_rotates_the_output(profile in space_curve(), angle in 0.0f64..6.28) {
        let d = profile.dimension();
        let mut p = DMatrix::<f64>::identity(d, d);
        p[(0, 0)] = angle.cos();
        p[(0, 1)] = -angle.sin();
        p[(1, 0)] = angle.sin();
        p[(1, 1)] = angle.cos();
        let grid = linspace(-8.0, 8.0, 65);
        let base = integrate_frenet_default(&profile, &grid).unwrap();
        // Frame rows are the vectors e_i; rotating all of them is right-multiplication.
        let rotated = integrate_frenet(&profile, &p.transpose(), &DVector::zeros(d), &grid, IntegratorOptions::default()).unwrap();
        for (a, b) in base.frames.iter().zip(&rotated.frames) {
            prop_assert!((a * p.transpose() - b).amax() < 1e-8);
        }
        for (a, b) in base.points.iter().zip(&rotated.points) {
            prop_assert!((&p * a - b).amax() < 1e-8);
        }
    }

    #[test]
    fn metric_derivatives_match_differences(profile in space_curve(), s in -5.0f64..5.0, u1 in -0.7f64..0.7, u2 in -0.7f64..0.7) {
        let m = EuclideanTubeMetric::from_profile(&profile, 1.0, 1.0 / 64.0).unwrap();
        let u: Vec<f64> = [u1, u2, 0.3 * u1].into_iter().take(profile.dimension() - 1).collect();
        let h = |x: f64| m.sample(x, &u).unwrap();
        let e = 0.005;
        // Fourth-order centred differences of h, h_s and h_ss.
        let d1 = |f: &dyn Fn(f64) -> f64| (f(s - 2.0 * e) - 8.0 * f(s - e) + 8.0 * f(s + e) - f(s + 2.0 * e)) / (12.0 * e);
        let here = h(s);
        prop_assert!((d1(&|x| h(x).h) - here.h_s).abs() < 1e-5);
        prop_assert!((d1(&|x| h(x).h_s) - here.h_ss).abs() < 1e-5);
        let e3 = (d1(&|x| h(x).h_ss) - here.h_sss).abs();
        prop_assert!(e3 < 1e-5, "h_sss {} err {}", here.h_sss, e3);
    }

    #[test]
    fn euclidean_metric_is_affine_in_u(profile in space_curve(), s in -7.0f64..7.0, u1 in -1.0f64..1.0, u2 in -1.0f64..1.0, t in 0.0f64..1.0) {
        let m = EuclideanTubeMetric::from_profile(&profile, 1.0, 1.0 / 16.0).unwrap();
        let u: Vec<f64> = [u1, u2, -u1].into_iter().take(profile.dimension() - 1).collect();
        let scaled: Vec<f64> = u.iter().map(|x| t * x).collect();
        let full = m.sample(s, &u).unwrap();
        let part = m.sample(s, &scaled).unwrap();
        prop_assert!(((part.h - 1.0) - t * (full.h - 1.0)).abs() < 1e-14);
        prop_assert_eq!(full.det_g(), full.h * full.h);
    }

    #[test]
    fn jacobi_solutions_superpose(k in -0.8f64..0.8, amp in 0.0f64..0.6, s in -3.0f64..3.0, u in -1.0f64..1.0) {
        let s_grid = linspace(-4.0, 4.0, 129);
        let u_grid = linspace(-1.0, 1.0, 33);
        let strip = |a: f64| {
            metric_from_jacobi(&SurfaceData::constant_gauss(k, Curvature::gaussian(a, 1.0), 1.0), &s_grid, &u_grid).unwrap()
        };
        let (plus, minus, zero) = (strip(amp), strip(-amp), strip(0.0));
        let sum = plus.h(s, &[u]).unwrap() + minus.h(s, &[u]).unwrap();
        prop_assert!((sum - 2.0 * zero.h(s, &[u]).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn rho_matches_brute_force(mut nu in prop::collection::vec(0.1f64..80.0, 1..10), t in 0.0f64..1.2) {
        nu.sort_by(f64::total_cmp);
        let set = ThresholdSet::new(nu.clone(), Exactness::Analytic).unwrap();
        let lambda = t * nu[nu.len() - 1];
        if lambda > nu[nu.len() - 1] {
            // Above the computed thresholds ρ is unknown and the call must refuse.
            prop_assert!(rho_of_lambda(&set, lambda).is_err());
            return Ok(());
        }
        match rho_of_lambda(&set, lambda).unwrap() {
            Rho::Infinite => prop_assert!(lambda < nu[0]),
            Rho::Finite(r) => {
                let below = nu.iter().copied().filter(|z| *z <= lambda).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(r >= 0.0);
                prop_assert_eq!(r, lambda - below);
            }
        }
    }

    #[test]
    fn tail_ladders_never_increase(amp in 0.05f64..1.0, sigma in 0.5f64..3.0, p in 0.6f64..3.0) {
        let profile = CurvatureProfile::planar(Curvature::power_tail(amp, sigma, p), (-500.0, 500.0)).unwrap();
        let report = check_curvature_decay(&profile, &CheckerConfig::default()).unwrap();
        for e in &report.entries {
            for w in e.ladder.windows(2) {
                prop_assert!(w[1].sup <= w[0].sup, "{}: {:?}", e.id, e.ladder);
            }
        }
    }

    #[test]
    fn planar_checks_agree(amp in 0.0f64..0.9, sigma in 0.3f64..2.0, p in 0.3f64..3.0, tail in proptest::bool::ANY) {
        let kappa = if tail { Curvature::power_tail(amp, sigma, p) } else { Curvature::gaussian(amp, sigma) };
        let profile = CurvatureProfile::planar(kappa, (-300.0, 300.0)).unwrap();
        let metric = EuclideanTubeMetric::from_profile(&profile, 1.0, 1.0 / 16.0).unwrap();
        let cfg = CheckerConfig::default();
        let a = check_curvature_decay(&profile, &cfg).unwrap().overall;
        let b = check_metric_hypotheses(&metric, &cfg).unwrap().overall;
        prop_assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn assembled_matrices_are_exactly_symmetric(amp in -0.9f64..0.9, sigma in 0.5f64..2.0) {
        let metric = planar(amp, sigma, 10.0);
        let grid = TruncatedGrid::new(&CrossSection::interval(1.0), 6.0, 0.125, 0.125).unwrap();
        let coeffs = CoefficientField::new(metric.clone());
        let potential = effective_potential(metric);
        let ham = assemble_hamiltonian(&coeffs, &potential, &grid).unwrap();
        let com = assemble_commutator(&coeffs, &potential, &grid).unwrap();
        prop_assert_eq!(ham.matrix.max_asymmetry(), 0.0);
        prop_assert_eq!(com.matrix.max_asymmetry(), 0.0);
    }

    #[test]
    fn ground_state_does_not_rise_with_length(amp in 0.0f64..0.8, sigma in 0.6f64..1.5) {
        let metric = planar(amp, sigma, 40.0);
        let mut prev = f64::INFINITY;
        for l in [3.0, 6.0, 12.0, 24.0] {
            let low = ground(metric.clone(), l, 0.25);
            prop_assert!(low <= prev + 1e-9, "L = {}: {} > {}", l, low, prev);
            prev = low;
        }
    }

    #[test]
    fn constant_potential_shift_moves_every_eigenvalue(amp in 0.0f64..0.8, c in -3.0f64..3.0) {
        let metric = planar(amp, 1.0, 10.0);
        let grid = TruncatedGrid::with_min_nodes(&CrossSection::interval(1.0), 8.0, 0.125, 0.125, 4).unwrap();
        let ham = assemble_hamiltonian(&CoefficientField::new(metric.clone()), &effective_potential(metric), &grid).unwrap();
        let opts = sparse_solver();
        let base = lowest_eigenvalues(&ham.matrix, 4, &opts).unwrap();
        let shifted = lowest_eigenvalues(&ham.matrix.add_diagonal(c), 4, &opts).unwrap();
        for (a, b) in base.values.iter().zip(&shifted.values) {
            prop_assert!((b - a - c).abs() < 1e-10, "{} vs {}", b - a, c);
        }
    }

    #[test]
    fn bending_the_other_way_mirrors_the_matrix(amp in 0.05f64..0.9, sigma in 0.5f64..2.0) {
        let grid = TruncatedGrid::new(&CrossSection::interval(1.0), 5.0, 0.125, 0.125).unwrap();
        let assemble = |a: f64| {
            let metric = planar(a, sigma, 8.0);
            assemble_hamiltonian(&CoefficientField::new(metric.clone()), &effective_potential(metric), &grid).unwrap()
        };
        let (up, down) = (assemble(amp), assemble(-amp));
        let n_t = grid.n_t();
        let mirror = |node: usize| (node / n_t) * n_t + (n_t - 1 - node % n_t);
        for (i, j, v) in up.matrix.triplets() {
            prop_assert!((down.matrix.get(mirror(i), mirror(j)) - v).abs() <= 1e-12 * v.abs().max(1.0));
        }
        prop_assert_eq!(up.matrix.nnz(), down.matrix.nnz());
    }
}

#[test]
fn ladder_starts_at_r0_and_doubles() {
    assert_eq!(ladder(1.0, 10.0), vec![1.0, 2.0, 4.0, 8.0]);
}
