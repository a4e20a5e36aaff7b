//! Thin wrapper over a tract inference plan for image-in, tensors-out assets.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use tract_onnx::prelude::*;

use crate::error::{Error, Result};
use crate::imaging::ImageTensor;

/// How an asset expects image samples to be scaled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputRange {
    /// `[-1, 1]`, the latent-diffusion convention.
    #[default]
    Signed,
    /// `[0, 1]`.
    Unit,
}

impl InputRange {
    pub fn encode(self, v: f64) -> f32 {
        match self {
            InputRange::Signed => (2.0 * v - 1.0) as f32,
            InputRange::Unit => v as f32,
        }
    }

    pub fn decode(self, v: f32) -> f64 {
        match self {
            InputRange::Signed => (v as f64 + 1.0) / 2.0,
            InputRange::Unit => v as f64,
        }
    }
}

/// One dense output tensor, shape in NCHW order.
#[derive(Clone, Debug)]
pub struct OutputTensor {
    pub shape: Vec<usize>,
    pub values: Vec<f32>,
}

/// An ONNX graph with a single `[1, 3, H, W]` float input.
///
/// Plans are optimized per input geometry on first use and cached; the cache
/// is append-only and plans are immutable, so a session can be shared across
/// threads.
pub struct OnnxSession {
    id: String,
    path: PathBuf,
    range: InputRange,
    plans: Mutex<HashMap<(usize, usize), Arc<TypedSimplePlan>>>,
}

impl std::fmt::Debug for OnnxSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OnnxSession").field("id", &self.id).field("path", &self.path).finish()
    }
}

impl OnnxSession {
    pub fn open(id: &str, path: &Path, range: InputRange) -> Result<Self> {
        if !path.is_file() {
            return Err(Error::Asset {
                id: id.to_string(),
                reason: format!("missing asset {}", path.display()),
            });
        }
        Ok(Self { id: id.to_string(), path: path.to_path_buf(), range, plans: Mutex::new(HashMap::new()) })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    fn asset_err(&self, e: impl std::fmt::Display) -> Error {
        Error::Asset { id: self.id.clone(), reason: e.to_string() }
    }

    fn plan(&self, h: usize, w: usize) -> Result<Arc<TypedSimplePlan>> {
        let mut plans = self.plans.lock().expect("plan cache poisoned");
        if let Some(p) = plans.get(&(h, w)) {
            return Ok(p.clone());
        }
        let plan = tract_onnx::onnx()
            .model_for_path(&self.path)
            .and_then(|m| m.with_input_fact(0, f32::fact([1, 3, h, w]).into()))
            .and_then(|m| m.into_optimized())
            .and_then(|m| m.into_runnable())
            .map_err(|e| self.asset_err(format!("cannot load {}: {e:#}", self.path.display())))?;
        plans.insert((h, w), plan.clone());
        Ok(plan)
    }

    /// Runs the graph on a 3-channel image and returns every output.
    pub fn run(&self, img: &ImageTensor) -> Result<Vec<OutputTensor>> {
        let (c, h, w) = img.dims();
        if c != 3 {
            return Err(Error::geometry(format!("asset `{}` needs 3 channels, got {c}", self.id)));
        }
        let data: Vec<f32> = img.samples().iter().map(|&v| self.range.encode(v)).collect();
        let input = Tensor::from_shape(&[1, 3, h, w], &data).map_err(|e| self.asset_err(e))?;
        let outputs = self.plan(h, w)?.run(tvec!(input.into())).map_err(|e| self.asset_err(e))?;
        outputs
            .iter()
            .map(|t| {
                let view = t.to_plain_array_view::<f32>().map_err(|e| self.asset_err(e))?;
                Ok(OutputTensor { shape: view.shape().to_vec(), values: view.iter().copied().collect() })
            })
            .collect()
    }

    pub fn range(&self) -> InputRange {
        self.range
    }
}
