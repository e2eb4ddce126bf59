//! Browser front end for a planar strip bent by a gaussian curvature bump.
//!
//! The numerics live in [`ops`], which is plain Rust and testable natively. The
//! `#[wasm_bindgen]` wrappers below only convert errors into JS exceptions. Every
//! operation returns a flat `Float64Array`; the row layout is documented per function.

use wasm_bindgen::prelude::*;

pub mod ops {
    use std::sync::Arc;

    use nalgebra::DVector;
    use waveguide_core::cross_section::{cross_section_spectrum, CrossSection};
    use waveguide_core::curvature::{Curvature, CurvatureProfile};
    use waveguide_core::curve_geometry::{integrate_frenet_default, tube_embedding};
    use waveguide_core::effective_operator::effective_potential;
    use waveguide_core::numerics::linspace;
    use waveguide_core::spectral_engine::bound_states::{bound_states, ConvergencePolicy, Discretization, TubeRecipe};
    use waveguide_core::tube_metric::EuclideanTubeMetric;
    use waveguide_core::{Error, Result};

    /// Transverse nodes used for the min/max of the potential across the strip.
    const ACROSS: usize = 17;

    /// A strip of half-width `half_width` around a planar curve with curvature
    /// `amplitude·exp(−s²/σ²)`.
    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct BentStrip {
        pub amplitude: f64,
        pub sigma: f64,
        pub half_width: f64,
    }

    impl BentStrip {
        fn validate(&self) -> Result<()> {
            if !(self.sigma > 0.0 && self.half_width > 0.0) {
                return Err(Error::Input("sigma and the half-width must be positive".into()));
            }
            if !(self.amplitude.abs() * self.half_width < 1.0) {
                return Err(Error::Input(format!(
                    "|amplitude|·half-width = {} must stay below 1",
                    self.amplitude.abs() * self.half_width
                )));
            }
            Ok(())
        }

        fn profile(&self, half_length: f64) -> Result<CurvatureProfile> {
            self.validate()?;
            if !(half_length > 0.0) {
                return Err(Error::Input("half-length must be positive".into()));
            }
            let r = half_length + 1.0;
            CurvatureProfile::planar(Curvature::gaussian(self.amplitude, self.sigma), (-r, r))
        }

        fn metric(&self, half_length: f64) -> Result<EuclideanTubeMetric> {
            EuclideanTubeMetric::from_profile(&self.profile(half_length)?, self.half_width, 1.0 / 16.0)
        }
    }

    /// Rows `[x, y, x₋, y₋, x₊, y₊]`: the centreline and both edges at `samples`
    /// equally spaced arc lengths in `[−half_length, half_length]`.
    pub fn tube_outline(strip: BentStrip, half_length: f64, samples: usize) -> Result<Vec<f64>> {
        let profile = strip.profile(half_length)?;
        let frame = integrate_frenet_default(&profile, &linspace(-half_length, half_length, samples.max(2)))?;
        let a = strip.half_width;
        let across = [DVector::from_element(1, 0.0), DVector::from_element(1, -a), DVector::from_element(1, a)];
        let cloud = tube_embedding(&frame, &across, a)?;
        Ok(cloud.points.iter().flat_map(|p| [p[0], p[1]]).collect())
    }

    /// Rows `[s, V(s, 0), min_u V, max_u V]` of the effective potential.
    pub fn potential_profile(strip: BentStrip, half_length: f64, samples: usize) -> Result<Vec<f64>> {
        let v = effective_potential(Arc::new(strip.metric(half_length)?));
        let us = linspace(-strip.half_width, strip.half_width, ACROSS);
        let mut out = Vec::with_capacity(4 * samples);
        for s in linspace(-half_length, half_length, samples.max(2)) {
            let centre = v.eval(s, &[0.0])?.v;
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &u in &us {
                let x = v.eval(s, &[u])?.v;
                lo = lo.min(x);
                hi = hi.max(x);
            }
            out.extend([s, centre, lo, hi]);
        }
        Ok(out)
    }

    /// `[ν₁, λ, δλ]` for the lowest bound state on `[−half_length, half_length]`, or
    /// `[ν₁]` when nothing separates from the threshold.
    pub fn ground_state(strip: BentStrip, half_length: f64) -> Result<Vec<f64>> {
        let metric = Arc::new(strip.metric(half_length)?);
        let omega = CrossSection::interval(strip.half_width);
        let thresholds = cross_section_spectrum(&omega, 1, None)?;
        let recipe = TubeRecipe::new(metric, omega, Discretization::Transformed);
        let policy = ConvergencePolicy {
            fixed_half_length: Some(half_length),
            coarse_spacing: strip.half_width / 8.0,
            ..ConvergencePolicy::default()
        };
        let report = bound_states(&recipe, &thresholds, &policy)?;
        let mut out = vec![report.nu1];
        if let Some(b) = report.states.first() {
            out.extend([b.value, b.error]);
        }
        Ok(out)
    }
}

fn strip(amplitude: f64, sigma: f64, half_width: f64) -> ops::BentStrip {
    ops::BentStrip {
        amplitude,
        sigma,
        half_width,
    }
}

fn js(e: waveguide_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = tubeOutline)]
pub fn tube_outline(amplitude: f64, sigma: f64, half_width: f64, half_length: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    ops::tube_outline(strip(amplitude, sigma, half_width), half_length, samples).map_err(js)
}

#[wasm_bindgen(js_name = effectivePotentialProfile)]
pub fn effective_potential_profile(
    amplitude: f64,
    sigma: f64,
    half_width: f64,
    half_length: f64,
    samples: usize,
) -> Result<Vec<f64>, JsError> {
    ops::potential_profile(strip(amplitude, sigma, half_width), half_length, samples).map_err(js)
}

#[wasm_bindgen(js_name = boundState)]
pub fn bound_state(amplitude: f64, sigma: f64, half_width: f64, half_length: f64) -> Result<Vec<f64>, JsError> {
    ops::ground_state(strip(amplitude, sigma, half_width), half_length).map_err(js)
}
