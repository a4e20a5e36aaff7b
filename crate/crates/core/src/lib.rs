//! Training-free detection of images produced by latent-diffusion models.
//!
//! The central score is the high-frequency influence (HFI) of an image on its
//! reconstruction error through a latent-diffusion autoencoder:
//!
//! ```text
//! HFI(x) = d(x, AE(x)) − d(F(x), AE(F(x)))
//! ```
//!
//! where `F` is a small low-pass filter and `d` a reconstruction distance.
//! Real photographs carry high-frequency detail that an `8×` latent grid
//! aliases, so their HFI is large; images decoded by the same family of
//! autoencoders do not.
//!
//! Modules, bottom up:
//!
//! * [`imaging`]: decoding, geometry normalization, JPEG and crop corruptions.
//! * [`filters`] and [`dct`]: the low-pass family and high-pass residuals.
//! * [`reconstruct`] and [`registry`]: neural (ONNX) and classical autoencoders.
//! * [`distance`]: LPIPS (full and per stage), MSE, L1.
//! * [`scoring`]: AEROBLADE, HFI, B-HFI, min-ensembles, classification.
//! * [`metrics`] and [`evaluate`]: AUROC/AUPR, ranks, benchmark drivers, reports.

pub mod dct;
pub mod distance;
pub mod error;
pub mod evaluate;
pub mod filters;
pub mod golden;
pub mod imaging;
pub mod metrics;
pub mod onnx;
pub mod reconstruct;
pub mod registry;
pub mod scoring;
pub mod synth;

pub use distance::{DistanceKind, Distances, Lpips};
pub use error::{Error, Result};
pub use filters::FilterSpec;
pub use imaging::{CorruptionSpec, ImageTensor};
pub use reconstruct::{Reconstructor, ReconstructorHandle, Upsample};
pub use registry::{load_registry, Registry};
pub use scoring::{ScoreRecord, Scorer, ScorerConfig};
