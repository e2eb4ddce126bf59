//! Numerical spectral toolkit for curved quantum waveguides.
//!
//! The pipeline runs from curvature data to frames ([`curve_geometry`]), the tube
//! metric ([`tube_metric`]), the cross-section spectrum ([`cross_section`]), the
//! transformed Hamiltonian ([`effective_operator`]) and finally its spectrum and the
//! Mourre check ([`spectral_engine`]). [`assumption_checker`] validates the decay
//! hypotheses on the data.

pub mod assumption_checker;
pub mod cross_section;
pub mod curvature;
pub mod curve_geometry;
pub mod effective_operator;
pub mod error;
pub mod grid;
pub mod numerics;
pub mod sparse;
pub mod spectral_engine;
pub mod tube_metric;

pub use error::{Error, Result};
