//! Geometric autoencoders.
//!
//! Train MLP autoencoders whose decoder is pushed toward constant local area
//! distortion, inspect decoders through pullback-metric diagnostics
//! (indicatrices and determinant heatmaps), and score embeddings with a suite
//! of neighborhood and distance-preservation metrics.
//!
//! The numeric core ([`autodiff`], [`nn`], [`geometry`], [`diagnostics`],
//! [`metrics`]) is generic over [`Scalar`] (`f32` or `f64`). Data handling,
//! PCA and plotting work in `f64`. The aliases below fix the scalar to `f64`.

pub mod autodiff;
pub mod datasets;
pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod nn;
pub mod pca;
pub mod plotting;
pub mod scalar;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Tensor64 = autodiff::Tensor<f64>;
pub type Tape64 = autodiff::Tape<f64>;
pub type Mlp64 = nn::Mlp<f64>;
pub type Autoencoder64 = nn::Autoencoder<f64>;
pub type PullbackMetric64 = geometry::PullbackMetric<f64>;
