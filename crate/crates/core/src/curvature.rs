//! Curvature data of the reference curve and the Serret–Frenet generator built from it.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{input, Error, Result};
use crate::numerics::{cubic_interp, linspace, sampled_derivative};

/// Highest derivative order any curvature source provides.
pub const MAX_DERIVATIVE: usize = 3;

type CurvatureFn = dyn Fn(f64, usize) -> f64 + Send + Sync;

/// A closed-form curvature supplied as a callable `(s, order) -> κ^{(order)}(s)`.
#[derive(Clone)]
pub struct AnalyticCurvature {
    pub label: String,
    pub max_order: usize,
    pub sup_bound: Option<f64>,
    func: Arc<CurvatureFn>,
}

impl AnalyticCurvature {
    pub fn new(
        label: impl Into<String>,
        max_order: usize,
        func: impl Fn(f64, usize) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            max_order,
            sup_bound: None,
            func: Arc::new(func),
        }
    }

    pub fn with_sup_bound(mut self, bound: f64) -> Self {
        self.sup_bound = Some(bound);
        self
    }
}

/// Curvature known only through samples; derivatives come from finite differences.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurvature {
    s: Vec<f64>,
    /// `table[k][i]` is the k-th derivative estimate at `s[i]`.
    table: Vec<Vec<f64>>,
}

impl SampledCurvature {
    pub fn new(s: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if s.len() != values.len() {
            return input("curvature samples: abscissae and values differ in length");
        }
        if s.len() < 8 {
            return input("curvature samples: at least 8 samples are required");
        }
        if s.windows(2).any(|w| w[1] <= w[0]) {
            return input("curvature samples: abscissae must be strictly increasing");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return input("curvature samples: non-finite value");
        }
        let table = (0..=MAX_DERIVATIVE)
            .map(|k| {
                (0..s.len())
                    .map(|i| sampled_derivative(&s, &values, i, k))
                    .collect()
            })
            .collect();
        Ok(Self { s, table })
    }

    pub fn samples(&self) -> (&[f64], &[f64]) {
        (&self.s, &self.table[0])
    }

    fn eval(&self, s: f64, order: usize) -> f64 {
        cubic_interp(&self.s, &self.table[order], s)
    }
}

/// One curvature function κ_i(s).
#[derive(Clone)]
pub enum Curvature {
    Constant(f64),
    /// `amplitude · exp(-((s - center)/sigma)²)`
    GaussianBump {
        amplitude: f64,
        sigma: f64,
        center: f64,
    },
    /// `amplitude · (1 + (s/sigma)²)^(-exponent/2)`, decaying like `|s|^-exponent`.
    PowerTail {
        amplitude: f64,
        sigma: f64,
        exponent: f64,
    },
    Sampled(SampledCurvature),
    Analytic(AnalyticCurvature),
}

impl fmt::Debug for Curvature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Curvature::Constant(k) => write!(f, "Constant({k})"),
            Curvature::GaussianBump {
                amplitude,
                sigma,
                center,
            } => write!(f, "GaussianBump({amplitude}, {sigma}, {center})"),
            Curvature::PowerTail {
                amplitude,
                sigma,
                exponent,
            } => write!(f, "PowerTail({amplitude}, {sigma}, {exponent})"),
            Curvature::Sampled(s) => write!(f, "Sampled({} samples)", s.s.len()),
            Curvature::Analytic(a) => write!(f, "Analytic({})", a.label),
        }
    }
}

impl Curvature {
    pub fn zero() -> Self {
        Curvature::Constant(0.0)
    }

    pub fn gaussian(amplitude: f64, sigma: f64) -> Self {
        Curvature::GaussianBump {
            amplitude,
            sigma,
            center: 0.0,
        }
    }

    pub fn power_tail(amplitude: f64, sigma: f64, exponent: f64) -> Self {
        Curvature::PowerTail {
            amplitude,
            sigma,
            exponent,
        }
    }

    pub fn max_order(&self) -> usize {
        match self {
            Curvature::Analytic(a) => a.max_order,
            _ => MAX_DERIVATIVE,
        }
    }

    /// Analytic bound on `sup |κ|`, when the family provides one.
    pub fn sup_bound(&self) -> Option<f64> {
        match self {
            Curvature::Constant(k) => Some(k.abs()),
            Curvature::GaussianBump { amplitude, .. } | Curvature::PowerTail { amplitude, .. } => {
                Some(amplitude.abs())
            }
            Curvature::Sampled(_) => None,
            Curvature::Analytic(a) => a.sup_bound,
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        match self {
            Curvature::Constant(k) => *k == 0.0,
            Curvature::GaussianBump { amplitude, .. } | Curvature::PowerTail { amplitude, .. } => {
                *amplitude == 0.0
            }
            Curvature::Sampled(s) => s.table[0].iter().all(|v| *v == 0.0),
            Curvature::Analytic(_) => false,
        }
    }

    /// The `order`-th derivative at `s`.
    pub fn eval(&self, s: f64, order: usize) -> Result<f64> {
        if order > self.max_order() {
            return Err(Error::DerivativeOrder {
                requested: order,
                available: self.max_order(),
            });
        }
        Ok(self.eval_unchecked(s, order))
    }

    fn eval_unchecked(&self, s: f64, order: usize) -> f64 {
        match self {
            Curvature::Constant(k) => {
                if order == 0 {
                    *k
                } else {
                    0.0
                }
            }
            Curvature::GaussianBump {
                amplitude,
                sigma,
                center,
            } => {
                let x = (s - center) / sigma;
                let hermite = match order {
                    0 => 1.0,
                    1 => 2.0 * x,
                    2 => 4.0 * x * x - 2.0,
                    _ => 8.0 * x * x * x - 12.0 * x,
                };
                let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
                amplitude * sign * hermite * (-x * x).exp() / sigma.powi(order as i32)
            }
            Curvature::PowerTail {
                amplitude,
                sigma,
                exponent,
            } => {
                let x = s / sigma;
                let q = 0.5 * exponent;
                let g = 1.0 + x * x;
                let v = match order {
                    0 => g.powf(-q),
                    1 => -2.0 * q * x * g.powf(-q - 1.0),
                    2 => -2.0 * q * g.powf(-q - 1.0) + 4.0 * q * (q + 1.0) * x * x * g.powf(-q - 2.0),
                    _ => {
                        12.0 * q * (q + 1.0) * x * g.powf(-q - 2.0)
                            - 8.0 * q * (q + 1.0) * (q + 2.0) * x * x * x * g.powf(-q - 3.0)
                    }
                };
                amplitude * v / sigma.powi(order as i32)
            }
            Curvature::Sampled(samples) => samples.eval(s, order),
            Curvature::Analytic(a) => (a.func)(s, order),
        }
    }
}

/// The d−1 curvature functions of a curve in ℝ^d on a closed arclength range.
#[derive(Debug, Clone)]
pub struct CurvatureProfile {
    dimension: usize,
    kappas: Vec<Curvature>,
    s_range: (f64, f64),
}

impl CurvatureProfile {
    pub fn new(dimension: usize, kappas: Vec<Curvature>, s_range: (f64, f64)) -> Result<Self> {
        if dimension < 2 {
            return input(format!("dimension must be at least 2, got {dimension}"));
        }
        if kappas.len() != dimension - 1 {
            return input(format!(
                "dimension {dimension} needs {} curvatures, got {}",
                dimension - 1,
                kappas.len()
            ));
        }
        if !(s_range.0.is_finite() && s_range.1.is_finite() && s_range.0 < s_range.1) {
            return input(format!("invalid arclength range {s_range:?}"));
        }
        let profile = Self {
            dimension,
            kappas,
            s_range,
        };
        for (i, k) in profile.kappas.iter().enumerate() {
            for s in linspace(s_range.0, s_range.1, 257) {
                if !k.eval_unchecked(s, 0).is_finite() {
                    return input(format!("curvature {} is not finite at s = {s}", i + 1));
                }
            }
        }
        Ok(profile)
    }

    /// Planar profile with a single curvature.
    pub fn planar(kappa: Curvature, s_range: (f64, f64)) -> Result<Self> {
        Self::new(2, vec![kappa], s_range)
    }

    pub fn straight(dimension: usize, s_range: (f64, f64)) -> Result<Self> {
        Self::new(
            dimension,
            (1..dimension).map(|_| Curvature::zero()).collect(),
            s_range,
        )
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn s_range(&self) -> (f64, f64) {
        self.s_range
    }

    pub fn curvatures(&self) -> &[Curvature] {
        &self.kappas
    }

    /// `order`-th derivative of κ_{index+1} at `s`.
    pub fn kappa(&self, index: usize, s: f64, order: usize) -> Result<f64> {
        self.kappas
            .get(index)
            .ok_or_else(|| Error::Input(format!("no curvature with index {}", index + 1)))?
            .eval(s, order)
    }

    /// Lowest derivative order available across all curvatures.
    pub fn max_order(&self) -> usize {
        self.kappas.iter().map(Curvature::max_order).min().unwrap_or(0)
    }

    pub fn is_straight(&self) -> bool {
        self.kappas.iter().all(Curvature::is_identically_zero)
    }

    /// `order`-th derivative of the skew-symmetric Frenet generator K(s):
    /// K_i^{i+1} = κ_i and K_{i+1}^i = −κ_i, all other entries zero.
    pub fn frenet_matrix(&self, s: f64, order: usize) -> Result<DMatrix<f64>> {
        let d = self.dimension;
        let mut k = DMatrix::zeros(d, d);
        for (i, kappa) in self.kappas.iter().enumerate() {
            let v = kappa.eval(s, order)?;
            k[(i, i + 1)] = v;
            k[(i + 1, i)] = -v;
        }
        Ok(k)
    }

    /// Estimate of ‖κ_{index+1}‖_∞: the maximum over an 8× refinement of a
    /// 1024-interval sampling of the range, combined with any analytic bound.
    pub fn sup_norm(&self, index: usize) -> f64 {
        let kappa = &self.kappas[index];
        let (a, b) = self.s_range;
        let sampled = linspace(a, b, 1024 * 8 + 1)
            .into_iter()
            .map(|s| kappa.eval_unchecked(s, 0).abs())
            .fold(0.0, f64::max);
        match kappa.sup_bound() {
            Some(bound) => bound.max(sampled),
            None => sampled,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_derivatives(k: &Curvature, points: &[f64], tol: f64) {
        let h = 1e-4;
        for &s in points {
            for order in 1..=3 {
                let fd = (k.eval(s + h, order - 1).unwrap() - k.eval(s - h, order - 1).unwrap())
                    / (2.0 * h);
                let exact = k.eval(s, order).unwrap();
                assert!(
                    (fd - exact).abs() < tol * (1.0 + exact.abs()),
                    "{k:?} order {order} at {s}: fd {fd} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn family_derivatives_match_finite_differences() {
        let pts = [-2.3, -0.4, 0.0, 0.7, 1.9];
        check_derivatives(&Curvature::gaussian(0.5, 1.3), &pts, 1e-6);
        check_derivatives(&Curvature::power_tail(0.8, 0.7, 1.5), &pts, 1e-6);
        check_derivatives(&Curvature::power_tail(1.0, 1.0, 0.5), &pts, 1e-6);
    }

    #[test]
    fn frenet_matrix_is_bidiagonal_skew() {
        let p = CurvatureProfile::new(
            4,
            vec![
                Curvature::Constant(0.3),
                Curvature::gaussian(0.2, 1.0),
                Curvature::Constant(-0.1),
            ],
            (-5.0, 5.0),
        )
        .unwrap();
        let k = p.frenet_matrix(0.4, 0).unwrap();
        assert_eq!(&k + k.transpose(), DMatrix::zeros(4, 4));
        for i in 0..4 {
            for j in 0..4 {
                if (i as isize - j as isize).abs() != 1 {
                    assert_eq!(k[(i, j)], 0.0);
                }
            }
        }
        assert_eq!(k[(0, 1)], 0.3);
        assert_eq!(k[(3, 2)], 0.1);
    }

    #[test]
    fn derivative_requests_beyond_availability_fail() {
        let k = Curvature::Analytic(AnalyticCurvature::new("k", 1, |s, o| {
            if o == 0 {
                s.sin()
            } else {
                s.cos()
            }
        }));
        assert!(matches!(
            k.eval(0.0, 2),
            Err(Error::DerivativeOrder {
                requested: 2,
                available: 1
            })
        ));
    }

    #[test]
    fn sampled_curvature_follows_samples() {
        let s = linspace(-4.0, 4.0, 161);
        let v: Vec<f64> = s.iter().map(|x| 0.5 * (-x * x).exp()).collect();
        let k = Curvature::Sampled(SampledCurvature::new(s, v).unwrap());
        let exact = Curvature::gaussian(0.5, 1.0);
        for x in [-1.234, 0.0, 0.51] {
            for o in 0..=2 {
                let a = k.eval(x, o).unwrap();
                let b = exact.eval(x, o).unwrap();
                assert!((a - b).abs() < 1e-4, "order {o} at {x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn sup_norm_uses_the_larger_estimate() {
        let p = CurvatureProfile::planar(Curvature::gaussian(-0.5, 1.0), (-3.0, 3.0)).unwrap();
        assert_eq!(p.sup_norm(0), 0.5);
    }
}
