//! Reconstruction of 2D moving regions from discrete snapshots.
//!
//! The crate compresses snapshot sequences ([`sampling`]), generates
//! in-between regions by signed-distance blending ([`interp`]) or with a
//! conditional variational autoencoder ([`cvae`]), and scores the result
//! with overlap, Hausdorff and temporal-consistency metrics ([`metrics`]).
//! [`harness`] ties the stages together into reproducible runs.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64`/`*32` aliases below fix the precision.

pub mod cvae;
pub mod distance;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod interp;
pub mod metrics;
pub mod sampling;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Point64 = geometry::Point2D<f64>;
pub type Point32 = geometry::Point2D<f32>;
pub type Region64 = geometry::Region<f64>;
pub type Region32 = geometry::Region<f32>;
pub type Affine64 = geometry::Affine<f64>;
pub type Affine32 = geometry::Affine<f32>;
pub type RasterMask64 = geometry::RasterMask<f64>;
pub type RasterMask32 = geometry::RasterMask<f32>;
pub type Snapshot64 = geometry::Snapshot<f64>;
pub type Snapshot32 = geometry::Snapshot<f32>;
pub type SignedDistanceMap64 = distance::SignedDistanceMap<f64>;
pub type SignedDistanceMap32 = distance::SignedDistanceMap<f32>;
pub type CvaeModel64 = cvae::CvaeModel<f64>;
pub type CvaeModel32 = cvae::CvaeModel<f32>;
