//! Golden fixtures emitted by the model-export tooling.
//!
//! An index JSON lists fixtures; each references raw little-endian `f32`
//! blobs of shape `[1, 3, side, side]` (samples in `[0, 1]`) together with
//! their SHA-256 checksums and reference values:
//!
//! ```json
//! {
//!   "side": 32,
//!   "channels": [64, 128, 256, 512, 512],
//!   "fixtures": [{
//!     "name": "gaussian_pair",
//!     "x": "x.f32", "y": "y.f32", "reconstruction": "recon.f32",
//!     "lpips_full": 0.0123, "lpips_layers": [0.001, 0.002, 0.003, 0.004, 0.0023],
//!     "checksums": {"x": "…", "y": "…", "reconstruction": "…"}
//!   }]
//! }
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::imaging::ImageTensor;

#[derive(Clone, Debug, Deserialize)]
pub struct GoldenFixture {
    pub name: String,
    pub x: String,
    #[serde(default)]
    pub y: Option<String>,
    #[serde(default)]
    pub reconstruction: Option<String>,
    #[serde(default)]
    pub lpips_full: Option<f64>,
    #[serde(default)]
    pub lpips_layers: Option<Vec<f64>>,
    #[serde(default)]
    pub checksums: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct GoldenIndex {
    #[serde(skip)]
    pub dir: PathBuf,
    pub side: usize,
    /// Expected backbone channel count per stage.
    #[serde(default)]
    pub channels: Vec<usize>,
    pub fixtures: Vec<GoldenFixture>,
}

impl GoldenIndex {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut index: GoldenIndex = serde_json::from_str(&text)?;
        index.dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(index)
    }

    /// Reads the blob stored under `field` (`x`, `y` or `reconstruction`),
    /// verifying its checksum when one is recorded.
    pub fn image(&self, fixture: &GoldenFixture, field: &str) -> Result<ImageTensor> {
        let file = match field {
            "x" => Some(&fixture.x),
            "y" => fixture.y.as_ref(),
            "reconstruction" => fixture.reconstruction.as_ref(),
            _ => None,
        }
        .ok_or_else(|| Error::param(format!("fixture `{}` has no `{field}` blob", fixture.name)))?;
        let path = self.dir.join(file);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if let Some(expected) = fixture.checksums.get(field) {
            let actual = hex::encode(Sha256::digest(&bytes));
            if !actual.eq_ignore_ascii_case(expected) {
                return Err(Error::Asset {
                    id: fixture.name.clone(),
                    reason: format!("checksum mismatch for {}", path.display()),
                });
            }
        }
        let expected_len = 3 * self.side * self.side * 4;
        if bytes.len() != expected_len {
            return Err(Error::geometry(format!(
                "{} holds {} bytes, expected {expected_len}",
                path.display(),
                bytes.len()
            )));
        }
        let samples = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        ImageTensor::new(3, self.side, self.side, samples)
    }
}
