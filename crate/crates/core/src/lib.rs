//! Exponential-family marked Gibbs point processes in the plane: sufficient
//! statistics for six interaction families, maximum pseudolikelihood
//! estimation, block sandwich covariances, GNZ residuals and
//! Metropolis-Hastings simulation.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`). The aliases at the
//! crate root fix the scalar to `f64`, which is what the CLI uses.

pub mod config;
pub mod error;
pub mod geometry;
pub mod inference;
pub mod linalg;
pub mod models;
pub mod patterns;
pub mod pseudolikelihood;
pub mod quadrature;
pub mod scalar;
pub mod simulate;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Point64 = geometry::Point<f64>;
pub type Window64 = geometry::Window<f64>;
pub type CellGrid64 = geometry::CellGrid<f64>;
pub type MarkedPoint64 = patterns::MarkedPoint<f64>;
pub type Mark64 = patterns::Mark<f64>;
pub type MarkSpace64 = patterns::MarkSpace<f64>;
pub type PointPattern64 = patterns::PointPattern<f64>;
pub type ModelSpec64 = models::ModelSpec<f64>;
pub type Theta64 = models::ThetaVector<f64>;
pub type QuadratureScheme64 = quadrature::QuadratureScheme<f64>;
pub type FitResult64 = inference::FitResult<f64>;
pub type SimConfig64 = simulate::SimConfig<f64>;

pub type Point32 = geometry::Point<f32>;
pub type Window32 = geometry::Window<f32>;
pub type PointPattern32 = patterns::PointPattern<f32>;
pub type ModelSpec32 = models::ModelSpec<f32>;
