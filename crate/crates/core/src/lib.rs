//! Canopy reconstruction by fitting procedural plant models to overhead depth maps.
//!
//! A candidate parameter vector is turned into a row-planted canopy mesh
//! ([`morphology`]), rendered to depth ([`render`]), summarized as histograms and
//! compared with the observation ([`loss`]). [`bayesopt`] searches the parameter box,
//! [`metrics`] reads leaf area index and leaf angles off the result, and
//! [`pipeline`] ties the steps together. [`rowfit`] recovers the ground plane, crop
//! rows and the standardized render camera from a colored point cloud.

pub mod bayesopt;
pub mod error;
pub mod io;
pub mod loss;
pub mod mesh;
pub mod metrics;
pub mod morphology;
pub mod pipeline;
pub mod render;
pub mod rng;
pub mod rowfit;

pub use error::{Error, Result};
