//! Fréchet video/image distance and tools for stress-testing it.
//!
//! - [`frechet`]: Gaussian fitting and the Fréchet distance (FVD on clip features, FID on
//!   frame features).
//! - [`resampler`]: softmax-weighted resampling that minimizes the distance over a candidate
//!   set, to measure how much of a score can be bought without better samples.
//! - [`distortion`]: paired spatial / spatiotemporal corruptions and frozen clips.
//! - [`protocols`]: temporal-sensitivity, null-space and long-video experiments with reports.
//! - [`feature_io`]: feature files, clip manifests, the extractor registry and a toy extractor.

pub mod clip;
pub mod distortion;
pub mod error;
pub mod feature_io;
pub mod features;
pub mod frechet;
pub mod protocols;
pub mod resampler;
pub mod rng;
pub mod synthetic;

pub use clip::{Clip, ClipSet, Frame};
pub use error::{Error, Result};
pub use features::FeatureMatrix;
pub use frechet::{compute_fvd, fit_gaussian, frechet_distance, sqrtm_psd, FrechetResult, GaussianStats};
