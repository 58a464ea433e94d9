//! Discrete stability analysis of hypersurfaces that are critical for the
//! Gaussian-weighted area `∫ e^{-|x|²/4} dA`.
//!
//! The pipeline is: build or load a [`SurfaceMesh`], estimate its
//! [`geometry`], assemble the weighted Jacobi operator in [`jacobi`], and
//! compare the resulting spectra with the closed forms in [`analytic`]. The
//! [`estimates`] module evaluates the integral and pointwise bounds that hold
//! for stable critical surfaces.

pub mod analytic;
pub mod ball;
pub mod cholesky;
pub mod eigen;
pub mod error;
pub mod estimates;
pub mod generate;
pub mod geometry;
pub mod io;
pub mod jacobi;
pub mod measure;
pub mod mesh;
pub mod sparse;

pub use analytic::AnalyticCase;
pub use error::{Error, Result};
pub use estimates::{EstimateReport, StabilityScreen};
pub use generate::{generate, refine, Shape, SurfaceSpec};
pub use mesh::{Point, SurfaceMesh};
pub use geometry::{compute_geometry, criticality_residual, GeometryField};
pub use measure::{WeightSpec, WeightedMeasure};
