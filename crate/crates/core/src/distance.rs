//! Reconstruction distances: LPIPS (full and per stage) and pixel-space
//! mean squared / mean absolute error.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::ImageTensor;
use crate::onnx::OnnxSession;
use crate::registry::{sha256_file, DistanceAsset};

pub const LPIPS_STAGES: usize = 5;

/// Which distance `d(x, y)` to compute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum DistanceKind {
    /// Sum of all five stage terms.
    LpipsFull,
    /// A single stage term, `1..=5`.
    LpipsLayer(u8),
    Mse,
    L1,
}

impl DistanceKind {
    pub fn needs_lpips(self) -> bool {
        matches!(self, DistanceKind::LpipsFull | DistanceKind::LpipsLayer(_))
    }

    /// Every kind, LPIPS variants first.
    pub fn all() -> Vec<DistanceKind> {
        let mut v = vec![DistanceKind::LpipsFull];
        v.extend((1..=5).map(DistanceKind::LpipsLayer));
        v.extend([DistanceKind::Mse, DistanceKind::L1]);
        v
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceKind::LpipsFull => f.write_str("lpips"),
            DistanceKind::LpipsLayer(j) => write!(f, "lpips{j}"),
            DistanceKind::Mse => f.write_str("mse"),
            DistanceKind::L1 => f.write_str("l1"),
        }
    }
}

impl FromStr for DistanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lpips" => Ok(DistanceKind::LpipsFull),
            "mse" => Ok(DistanceKind::Mse),
            "l1" => Ok(DistanceKind::L1),
            _ => match s.strip_prefix("lpips").map(str::parse::<u8>) {
                Some(Ok(j)) if (1..=5).contains(&j) => Ok(DistanceKind::LpipsLayer(j)),
                _ => Err(Error::param(format!(
                    "unknown distance `{s}` (expected lpips, lpips1..lpips5, mse, l1)"
                ))),
            },
        }
    }
}

impl From<DistanceKind> for String {
    fn from(k: DistanceKind) -> String {
        k.to_string()
    }
}

impl TryFrom<String> for DistanceKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

fn check_dims(x: &ImageTensor, y: &ImageTensor) -> Result<()> {
    if x.same_dims(y) {
        Ok(())
    } else {
        Err(Error::geometry(format!("distance between {:?} and {:?}", x.dims(), y.dims())))
    }
}

/// Mean squared sample difference.
pub fn mse(x: &ImageTensor, y: &ImageTensor) -> Result<f64> {
    check_dims(x, y)?;
    let n = x.samples().len() as f64;
    Ok(x.samples().iter().zip(y.samples()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n)
}

/// Mean absolute sample difference.
pub fn l1(x: &ImageTensor, y: &ImageTensor) -> Result<f64> {
    check_dims(x, y)?;
    let n = x.samples().len() as f64;
    Ok(x.samples().iter().zip(y.samples()).map(|(a, b)| (a - b).abs()).sum::<f64>() / n)
}

/// One backbone activation map, `channels × height × width`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    pub stage: usize,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub values: Vec<f32>,
}

impl FeatureMap {
    /// Channel vector at a spatial location.
    pub fn at(&self, y: usize, x: usize) -> impl Iterator<Item = f32> + '_ {
        let hw = self.height * self.width;
        let off = y * self.width + x;
        (0..self.channels).map(move |c| self.values[c * hw + off])
    }
}

/// The five backbone stages LPIPS compares.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureStack {
    stages: Vec<FeatureMap>,
}

impl FeatureStack {
    pub fn new(stages: Vec<FeatureMap>) -> Result<Self> {
        if stages.len() != LPIPS_STAGES {
            return Err(Error::Numeric {
                stage: "backbone".into(),
                reason: format!("expected {LPIPS_STAGES} stages, got {}", stages.len()),
            });
        }
        for (i, s) in stages.iter().enumerate() {
            if s.values.len() != s.channels * s.height * s.width {
                return Err(Error::Numeric {
                    stage: format!("stage {}", i + 1),
                    reason: "value count does not match shape".into(),
                });
            }
            if s.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric {
                    stage: format!("stage {}", i + 1),
                    reason: "non-finite activation".into(),
                });
            }
            if i > 0 {
                let prev = &stages[i - 1];
                if s.height * s.width >= prev.height * prev.width
                    || s.height > prev.height
                    || s.width > prev.width
                {
                    return Err(Error::Numeric {
                        stage: format!("stage {}", i + 1),
                        reason: format!(
                            "spatial size {}x{} does not shrink from {}x{}",
                            s.height, s.width, prev.height, prev.width
                        ),
                    });
                }
            }
        }
        Ok(Self { stages })
    }

    pub fn stages(&self) -> &[FeatureMap] {
        &self.stages
    }

    pub fn channel_counts(&self) -> Vec<usize> {
        self.stages.iter().map(|s| s.channels).collect()
    }
}

/// Source of backbone activations for LPIPS.
pub trait FeatureExtractor: Send + Sync + fmt::Debug {
    fn extract(&self, img: &ImageTensor) -> Result<FeatureStack>;
}

impl FeatureExtractor for OnnxSession {
    fn extract(&self, img: &ImageTensor) -> Result<FeatureStack> {
        let outputs = self.run(img)?;
        let stages = outputs
            .into_iter()
            .enumerate()
            .map(|(i, t)| match t.shape.as_slice() {
                [1, c, h, w] => Ok(FeatureMap {
                    stage: i + 1,
                    channels: *c,
                    height: *h,
                    width: *w,
                    values: t.values,
                }),
                other => Err(Error::Asset {
                    id: self.id().to_string(),
                    reason: format!("stage {} has shape {other:?}, expected [1,C,H,W]", i + 1),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        FeatureStack::new(stages)
    }
}

/// Channel-unit-normalizes a feature map: `v / (‖v‖₂ + eps)` per location.
pub fn normalize_channels(map: &FeatureMap, eps: f64) -> Vec<f64> {
    let hw = map.height * map.width;
    let mut out: Vec<f64> = map.values.iter().map(|&v| v as f64).collect();
    for off in 0..hw {
        let norm = (0..map.channels).map(|c| out[c * hw + off].powi(2)).sum::<f64>().sqrt();
        for c in 0..map.channels {
            out[c * hw + off] /= norm + eps;
        }
    }
    out
}

/// Per-stage LPIPS terms: spatial mean of the head-weighted squared
/// difference of channel-normalized features.
pub fn lpips_stage_terms(
    fx: &FeatureStack,
    fy: &FeatureStack,
    heads: &[Vec<f64>],
    eps: f64,
) -> Result<[f64; LPIPS_STAGES]> {
    let mut terms = [0.0; LPIPS_STAGES];
    for (j, ((a, b), w)) in fx.stages.iter().zip(&fy.stages).zip(heads).enumerate() {
        if (a.channels, a.height, a.width) != (b.channels, b.height, b.width) {
            return Err(Error::geometry(format!("stage {} shapes differ", j + 1)));
        }
        if w.len() != a.channels {
            return Err(Error::Numeric {
                stage: format!("stage {}", j + 1),
                reason: format!("{} head weights for {} channels", w.len(), a.channels),
            });
        }
        let na = normalize_channels(a, eps);
        let nb = normalize_channels(b, eps);
        let hw = a.height * a.width;
        let mut acc = 0.0;
        for (c, &wc) in w.iter().enumerate() {
            let (ra, rb) = (&na[c * hw..(c + 1) * hw], &nb[c * hw..(c + 1) * hw]);
            acc += wc * ra.iter().zip(rb).map(|(p, q)| (p - q) * (p - q)).sum::<f64>();
        }
        let term = acc / hw as f64;
        if !term.is_finite() {
            return Err(Error::Numeric { stage: format!("stage {}", j + 1), reason: "non-finite term".into() });
        }
        terms[j] = term;
    }
    Ok(terms)
}

#[derive(Deserialize)]
struct HeadsFile {
    stages: Vec<Vec<f64>>,
}

/// A loaded LPIPS model: backbone plus non-negative per-channel head weights.
#[derive(Clone, Debug)]
pub struct Lpips {
    id: String,
    backbone: Arc<dyn FeatureExtractor>,
    heads: Vec<Vec<f64>>,
    eps: f64,
}

impl Lpips {
    pub fn new(
        id: impl Into<String>,
        backbone: Arc<dyn FeatureExtractor>,
        heads: Vec<Vec<f64>>,
        eps: f64,
    ) -> Result<Self> {
        let id = id.into();
        if heads.len() != LPIPS_STAGES {
            return Err(Error::Asset { id, reason: format!("{} head stages, expected 5", heads.len()) });
        }
        if heads.iter().flatten().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Asset { id, reason: "head weights must be finite and non-negative".into() });
        }
        Ok(Self { id, backbone, heads, eps })
    }

    /// Loads a registry distance asset, verifying both checksums.
    pub fn open(asset: &DistanceAsset) -> Result<Self> {
        let err = |reason: String| Error::Asset { id: asset.id.clone(), reason };
        for (path, expected) in [(&asset.backbone, &asset.backbone_sha256), (&asset.heads, &asset.heads_sha256)] {
            let actual = sha256_file(path).map_err(|e| err(format!("{}: {e}", path.display())))?;
            if !actual.eq_ignore_ascii_case(expected) {
                return Err(err(format!("checksum mismatch for {}", path.display())));
            }
        }
        let text = std::fs::read_to_string(&asset.heads).map_err(|e| Error::io(&asset.heads, e))?;
        let heads: HeadsFile =
            serde_json::from_str(&text).map_err(|e| err(format!("heads file: {e}")))?;
        let session = OnnxSession::open(&asset.id, &asset.backbone, asset.input_range)?;
        Self::new(asset.id.clone(), Arc::new(session), heads.stages, asset.eps)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn extract_features(&self, img: &ImageTensor) -> Result<FeatureStack> {
        if img.channels() != 3 {
            return Err(Error::geometry("LPIPS needs a 3-channel image"));
        }
        let stack = self.backbone.extract(img)?;
        let got = stack.channel_counts();
        let want: Vec<usize> = self.heads.iter().map(Vec::len).collect();
        if got != want {
            return Err(Error::Asset {
                id: self.id.clone(),
                reason: format!("backbone channels {got:?} do not match heads {want:?}"),
            });
        }
        Ok(stack)
    }

    /// All five stage terms for a pair.
    pub fn stage_terms(&self, x: &ImageTensor, y: &ImageTensor) -> Result<[f64; LPIPS_STAGES]> {
        check_dims(x, y)?;
        let fx = self.extract_features(x)?;
        let fy = self.extract_features(y)?;
        lpips_stage_terms(&fx, &fy, &self.heads, self.eps)
    }
}

/// Distance evaluator; LPIPS kinds are available only when a model is attached.
#[derive(Clone, Debug, Default)]
pub struct Distances {
    lpips: Option<Arc<Lpips>>,
}

impl Distances {
    /// Pixel-space kinds only.
    pub fn pixel_only() -> Self {
        Self { lpips: None }
    }

    pub fn with_lpips(lpips: Lpips) -> Self {
        Self { lpips: Some(Arc::new(lpips)) }
    }

    pub fn has_lpips(&self) -> bool {
        self.lpips.is_some()
    }

    pub fn lpips(&self) -> Option<&Lpips> {
        self.lpips.as_deref()
    }

    pub fn available(&self) -> Vec<DistanceKind> {
        DistanceKind::all().into_iter().filter(|k| self.has_lpips() || !k.needs_lpips()).collect()
    }

    /// `d(x, y)`; zero when `x == y`, symmetric, non-negative.
    pub fn distance(&self, x: &ImageTensor, y: &ImageTensor, kind: DistanceKind) -> Result<f64> {
        match kind {
            DistanceKind::Mse => mse(x, y),
            DistanceKind::L1 => l1(x, y),
            DistanceKind::LpipsFull | DistanceKind::LpipsLayer(_) => {
                let lpips = self.lpips.as_ref().ok_or_else(|| Error::Asset {
                    id: kind.to_string(),
                    reason: "no LPIPS distance asset is registered".into(),
                })?;
                let terms = lpips.stage_terms(x, y)?;
                Ok(match kind {
                    DistanceKind::LpipsLayer(j) if (1..=5).contains(&j) => terms[j as usize - 1],
                    DistanceKind::LpipsLayer(j) => {
                        return Err(Error::param(format!("LPIPS stage {j} outside 1..=5")))
                    }
                    _ => terms.iter().sum(),
                })
            }
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Deterministic stand-in backbone: stage `j` is a 2^(j-1) average-pooled
    /// copy of the image with channels mixed by fixed signs and rectified.
    #[derive(Debug)]
    pub(crate) struct PoolingBackbone {
        pub channels: [usize; LPIPS_STAGES],
    }

    impl FeatureExtractor for PoolingBackbone {
        fn extract(&self, img: &ImageTensor) -> Result<FeatureStack> {
            let mut stages = Vec::new();
            for (j, &c) in self.channels.iter().enumerate() {
                let f = 1usize << j;
                let (h, w) = (img.height() / f, img.width() / f);
                let mut values = Vec::with_capacity(c * h * w);
                for k in 0..c {
                    for y in 0..h {
                        for x in 0..w {
                            let mut acc = 0.0;
                            for dy in 0..f {
                                for dx in 0..f {
                                    for ch in 0..3 {
                                        let sign = if (k + ch) % 3 == 0 { -1.0 } else { 1.0 };
                                        acc += sign * (k + 1) as f64 * img.get(ch, y * f + dy, x * f + dx);
                                    }
                                }
                            }
                            values.push(((acc / (f * f) as f64) + 0.3).max(0.0) as f32);
                        }
                    }
                }
                stages.push(FeatureMap { stage: j + 1, channels: c, height: h, width: w, values });
            }
            FeatureStack::new(stages)
        }
    }

    pub(crate) fn toy_lpips() -> Lpips {
        let channels = [4, 6, 6, 8, 8];
        let heads = channels.iter().enumerate().map(|(j, &c)| (0..c).map(|i| 0.1 + 0.05 * ((i + j) % 4) as f64).collect()).collect();
        Lpips::new("toy", Arc::new(PoolingBackbone { channels }), heads, 1e-10).unwrap()
    }

    fn random_image(seed: u64) -> ImageTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImageTensor::from_fn(3, 32, 32, |_, _, _| rng.gen())
    }

    #[test]
    fn kind_text_round_trips() {
        for k in DistanceKind::all() {
            assert_eq!(k.to_string().parse::<DistanceKind>().unwrap(), k);
        }
        assert!("lpips6".parse::<DistanceKind>().is_err());
        assert!("lpips0".parse::<DistanceKind>().is_err());
        assert!("dists".parse::<DistanceKind>().is_err());
    }

    #[test]
    fn pixel_distances() {
        let x = ImageTensor::row(&[1.0, 0.0, 1.0, 0.0]);
        let y = ImageTensor::row(&[1.0; 4]);
        assert_eq!(mse(&x, &y).unwrap(), 0.5);
        assert_eq!(l1(&x, &y).unwrap(), 0.5);
        assert!(mse(&x, &ImageTensor::row(&[1.0; 3])).is_err());
    }

    #[test]
    fn self_distance_is_zero_and_symmetric() {
        let d = Distances::with_lpips(toy_lpips());
        let (x, y) = (random_image(1), random_image(2));
        for k in d.available() {
            assert!(d.distance(&x, &x, k).unwrap().abs() < 1e-7, "{k}");
            let (a, b) = (d.distance(&x, &y, k).unwrap(), d.distance(&y, &x, k).unwrap());
            assert!(a >= 0.0 && (a - b).abs() < 1e-12, "{k}");
        }
    }

    #[test]
    fn full_lpips_is_sum_of_stages() {
        let d = Distances::with_lpips(toy_lpips());
        for seed in 0..4 {
            let (x, y) = (random_image(seed), random_image(seed + 100));
            let full = d.distance(&x, &y, DistanceKind::LpipsFull).unwrap();
            let sum: f64 = (1..=5).map(|j| d.distance(&x, &y, DistanceKind::LpipsLayer(j)).unwrap()).sum();
            assert!((full - sum).abs() < 1e-6);
        }
    }

    #[test]
    fn normalized_channels_have_unit_norm() {
        let lpips = toy_lpips();
        let stack = lpips.extract_features(&random_image(3)).unwrap();
        for map in stack.stages() {
            let n = normalize_channels(map, 1e-10);
            let hw = map.height * map.width;
            for off in 0..hw {
                let raw: f64 = map.at(off / map.width, off % map.width).map(|v| (v as f64).powi(2)).sum::<f64>().sqrt();
                if raw > 1e-6 {
                    let norm: f64 = (0..map.channels).map(|c| n[c * hw + off].powi(2)).sum::<f64>().sqrt();
                    assert!((norm - 1.0).abs() < 1e-5);
                }
            }
        }
    }

    #[test]
    fn lpips_unavailable_without_asset() {
        let d = Distances::pixel_only();
        assert_eq!(d.available(), vec![DistanceKind::Mse, DistanceKind::L1]);
        let x = random_image(0);
        assert!(matches!(d.distance(&x, &x, DistanceKind::LpipsLayer(2)), Err(Error::Asset { .. })));
    }

    #[test]
    fn zero_image_features_are_finite() {
        let stack = toy_lpips().extract_features(&ImageTensor::filled(3, 32, 32, 0.0)).unwrap();
        assert!(stack.stages().iter().all(|s| s.values.iter().all(|v| v.is_finite())));
    }

    #[test]
    fn feature_stack_invariants() {
        let map = |stage, h| FeatureMap { stage, channels: 1, height: h, width: h, values: vec![0.0; h * h] };
        assert!(FeatureStack::new(vec![map(1, 8), map(2, 4), map(3, 2), map(4, 1)]).is_err());
        assert!(FeatureStack::new(vec![map(1, 8), map(2, 8), map(3, 4), map(4, 2), map(5, 1)]).is_err());
        let mut bad = vec![map(1, 8), map(2, 4), map(3, 2), map(4, 1), map(5, 1)];
        assert!(FeatureStack::new(bad.clone()).is_err());
        bad[4] = FeatureMap { stage: 5, channels: 1, height: 1, width: 1, values: vec![f32::NAN] };
        bad[3] = map(4, 2);
        bad[2] = map(3, 3);
        let err = FeatureStack::new(bad).unwrap_err().to_string();
        assert!(err.contains("stage 5"), "{err}");
    }
}
