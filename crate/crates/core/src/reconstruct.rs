//! Deterministic reconstruction maps `x ↦ D(E(x))`.
//!
//! Two backends sit behind [`Reconstructor`]: neural autoencoders exported as
//! ONNX assets (encoder posterior mean, then decoder) and classical
//! decimate/upsample kernels that make the aliasing behaviour of an `s×`
//! latent grid testable without any model weights.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{apply_lowpass, FilterSpec};
use crate::imaging::ImageTensor;
use crate::onnx::{InputRange, OnnxSession};

/// Interpolation used by a classical decoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Upsample {
    Nearest,
    Bilinear,
    Bicubic,
}

impl fmt::Display for Upsample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Upsample::Nearest => "nearest",
            Upsample::Bilinear => "bilinear",
            Upsample::Bicubic => "bicubic",
        })
    }
}

impl FromStr for Upsample {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(Upsample::Nearest),
            "bilinear" => Ok(Upsample::Bilinear),
            "bicubic" => Ok(Upsample::Bicubic),
            other => Err(Error::param(format!("unknown upsample kind `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeuralSpec {
    pub asset: PathBuf,
    pub sha256: String,
    pub input_range: InputRange,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalSpec {
    pub prefilter: Option<FilterSpec>,
    pub upsample: Upsample,
}

#[derive(Clone, Debug, PartialEq)]
pub enum HandleKind {
    Neural(NeuralSpec),
    Classical(ClassicalSpec),
}

/// Immutable descriptor of one autoencoder.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructorHandle {
    pub id: String,
    pub kind: HandleKind,
    pub native_side: usize,
    pub downsampling: usize,
    /// Tag of the corpus the autoencoder was trained on.
    pub training_corpus: String,
}

impl ReconstructorHandle {
    pub fn classical(
        id: impl Into<String>,
        native_side: usize,
        downsampling: usize,
        prefilter: Option<FilterSpec>,
        upsample: Upsample,
    ) -> Result<Self> {
        let h = Self {
            id: id.into(),
            kind: HandleKind::Classical(ClassicalSpec { prefilter, upsample }),
            native_side,
            downsampling,
            training_corpus: "none".into(),
        };
        h.validate()?;
        Ok(h)
    }

    /// `s = 1`, no prefilter: the identity map.
    pub fn identity(id: impl Into<String>, native_side: usize) -> Self {
        Self::classical(id, native_side, 1, None, Upsample::Nearest).expect("identity handle")
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::param("handle id is empty"));
        }
        if self.native_side == 0 || self.downsampling == 0 {
            return Err(Error::param(format!("`{}`: side and factor must be positive", self.id)));
        }
        if self.native_side % self.downsampling != 0 {
            return Err(Error::param(format!(
                "`{}`: native side {} not divisible by factor {}",
                self.id, self.native_side, self.downsampling
            )));
        }
        if let HandleKind::Classical(ClassicalSpec { prefilter: Some(f), .. }) = &self.kind {
            f.validate()?;
        }
        Ok(())
    }

    pub fn is_classical(&self) -> bool {
        matches!(self.kind, HandleKind::Classical(_))
    }

    /// True for classical handles whose whole map is linear before clamping.
    pub fn is_linear(&self) -> bool {
        match &self.kind {
            HandleKind::Classical(c) => c.prefilter.map_or(true, |f| f.is_linear()),
            HandleKind::Neural(_) => false,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            HandleKind::Neural(_) => "neural",
            HandleKind::Classical(_) => "classical",
        }
    }

    /// The default desk-scale classical suite at the given side: anti-aliased
    /// and aliasing `8×` kernels plus the identity.
    pub fn classical_suite(side: usize) -> Vec<ReconstructorHandle> {
        vec![
            Self::classical("classical-aa", side, 8, Some(FilterSpec::default()), Upsample::Bilinear)
                .expect("valid suite"),
            Self::classical("classical-alias", side, 8, None, Upsample::Bilinear).expect("valid suite"),
            Self::identity("classical-identity", side),
        ]
    }
}

fn classical_spec(handle: &ReconstructorHandle) -> Result<&ClassicalSpec> {
    match &handle.kind {
        HandleKind::Classical(c) => Ok(c),
        HandleKind::Neural(_) => {
            Err(Error::Contract(format!("`{}` is not a classical handle", handle.id)))
        }
    }
}

/// Optional prefilter, then phase-0 stride-`s` decimation.
///
/// The latent has `ceil(H/s) × ceil(W/s)` samples per channel.
pub fn classical_encode(handle: &ReconstructorHandle, img: &ImageTensor) -> Result<ImageTensor> {
    let spec = classical_spec(handle)?;
    let filtered;
    let src = match &spec.prefilter {
        Some(f) => {
            filtered = apply_lowpass(img, f)?;
            &filtered
        }
        None => img,
    };
    let s = handle.downsampling;
    let (c, h, w) = src.dims();
    let (lh, lw) = (h.div_ceil(s), w.div_ceil(s));
    Ok(ImageTensor::from_fn(c, lh, lw, |ch, y, x| src.get(ch, y * s, x * s)))
}

/// Cubic convolution weight, `a = -0.75`.
fn cubic(t: f64) -> f64 {
    const A: f64 = -0.75;
    let t = t.abs();
    if t <= 1.0 {
        ((A + 2.0) * t - (A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((A * t - 5.0 * A) * t + 8.0 * A) * t - 4.0 * A
    } else {
        0.0
    }
}

/// Interpolation taps `(index, weight)` for output index `i` when upsampling
/// `n` samples by `s` (half-pixel centers, edge indices clamped).
fn taps(i: usize, s: usize, n: usize, mode: Upsample) -> Vec<(usize, f64)> {
    let last = n as isize - 1;
    let clamp = |j: isize| j.clamp(0, last) as usize;
    match mode {
        Upsample::Nearest => vec![(clamp((i / s) as isize), 1.0)],
        Upsample::Bilinear => {
            let src = ((i as f64 + 0.5) / s as f64 - 0.5).max(0.0);
            let j = src.floor();
            let t = src - j;
            let j = j as isize;
            vec![(clamp(j), 1.0 - t), (clamp(j + 1), t)]
        }
        Upsample::Bicubic => {
            let src = (i as f64 + 0.5) / s as f64 - 0.5;
            let j = src.floor();
            let t = src - j;
            let j = j as isize;
            (-1..=2).map(|o| (clamp(j + o), cubic(t - o as f64))).collect()
        }
    }
}

/// Upsamples a latent by `s` and crops to `height × width`. No clamping.
pub fn classical_decode(
    latent: &ImageTensor,
    factor: usize,
    mode: Upsample,
    height: usize,
    width: usize,
) -> ImageTensor {
    let (c, lh, lw) = latent.dims();
    let rows: Vec<_> = (0..height).map(|y| taps(y, factor, lh, mode)).collect();
    let cols: Vec<_> = (0..width).map(|x| taps(x, factor, lw, mode)).collect();
    ImageTensor::from_fn(c, height, width, |ch, y, x| {
        let mut acc = 0.0;
        for &(yy, wy) in &rows[y] {
            for &(xx, wx) in &cols[x] {
                acc += wy * wx * latent.get(ch, yy, xx);
            }
        }
        acc
    })
}

/// A handle bound to whatever runtime state its backend needs.
#[derive(Clone, Debug)]
pub struct Reconstructor {
    handle: ReconstructorHandle,
    session: Option<Arc<OnnxSession>>,
}

impl Reconstructor {
    /// Binds a handle. Neural handles open their ONNX asset here.
    pub fn open(handle: ReconstructorHandle) -> Result<Self> {
        handle.validate()?;
        let session = match &handle.kind {
            HandleKind::Neural(n) => {
                Some(Arc::new(OnnxSession::open(&handle.id, &n.asset, n.input_range)?))
            }
            HandleKind::Classical(_) => None,
        };
        Ok(Self { handle, session })
    }

    pub fn handle(&self) -> &ReconstructorHandle {
        &self.handle
    }

    pub fn id(&self) -> &str {
        &self.handle.id
    }

    pub fn native_side(&self) -> usize {
        self.handle.native_side
    }

    /// Classical map without the final clamp; linear for linear handles.
    pub fn reconstruct_unclamped(&self, img: &ImageTensor) -> Result<ImageTensor> {
        let spec = classical_spec(&self.handle)?;
        let latent = classical_encode(&self.handle, img)?;
        Ok(classical_decode(
            &latent,
            self.handle.downsampling,
            spec.upsample,
            img.height(),
            img.width(),
        ))
    }

    /// `AE(x)`, clamped to `[0, 1]`, same dimensions as the input.
    ///
    /// Neural handles require a `native_side × native_side` 3-channel input.
    /// Classical handles accept any size.
    pub fn reconstruct(&self, img: &ImageTensor) -> Result<ImageTensor> {
        match &self.session {
            None => Ok(self.reconstruct_unclamped(img)?.clamp01()),
            Some(session) => {
                let side = self.handle.native_side;
                if img.dims() != (3, side, side) {
                    return Err(Error::geometry(format!(
                        "`{}` expects 3x{side}x{side}, got {:?}",
                        self.handle.id,
                        img.dims()
                    )));
                }
                let out = session.run(img)?;
                let first = out.into_iter().next().ok_or_else(|| Error::Asset {
                    id: self.handle.id.clone(),
                    reason: "asset produced no outputs".into(),
                })?;
                if first.shape != [1, 3, side, side] {
                    return Err(Error::Asset {
                        id: self.handle.id.clone(),
                        reason: format!("output shape {:?} does not match input", first.shape),
                    });
                }
                let range = session.range();
                let samples =
                    first.values.iter().map(|&v| range.decode(v).clamp(0.0, 1.0)).collect();
                ImageTensor::new(3, side, side, samples).map_err(|e| Error::Asset {
                    id: self.handle.id.clone(),
                    reason: e.to_string(),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn alt_row() -> ImageTensor {
        ImageTensor::row(&[1.0, 0.0, 1.0, 0.0])
    }

    fn stride2(prefilter: Option<FilterSpec>, up: Upsample) -> ReconstructorHandle {
        ReconstructorHandle::classical("s2", 4, 2, prefilter, up).unwrap()
    }

    #[test]
    fn encode_strides_from_phase_zero() {
        let lat = classical_encode(&stride2(None, Upsample::Nearest), &alt_row()).unwrap();
        assert_eq!(lat.samples(), &[1.0, 1.0]);
        let lat = classical_encode(&stride2(Some(FilterSpec::Box { k: 3 }), Upsample::Nearest), &alt_row())
            .unwrap();
        for v in lat.samples() {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
        let id = ReconstructorHandle::identity("id", 4);
        assert_eq!(classical_encode(&id, &alt_row()).unwrap(), alt_row());
    }

    #[test]
    fn nearest_stride2_collapses_alternation() {
        let r = Reconstructor::open(stride2(None, Upsample::Nearest)).unwrap();
        assert_eq!(r.reconstruct(&alt_row()).unwrap().samples(), &[1.0; 4]);
    }

    #[test]
    fn factor_one_is_identity_for_every_upsampler() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let img = ImageTensor::from_fn(3, 9, 11, |_, _, _| rng.gen());
        for up in [Upsample::Nearest, Upsample::Bilinear, Upsample::Bicubic] {
            let r = Reconstructor::open(ReconstructorHandle::classical("id", 8, 1, None, up).unwrap())
                .unwrap();
            assert!(r.reconstruct(&img).unwrap().max_abs_diff(&img) < 1e-12, "{up}");
        }
    }

    #[test]
    fn constants_are_fixed_points() {
        let img = ImageTensor::filled(3, 24, 24, 0.6);
        for handle in ReconstructorHandle::classical_suite(24)
            .into_iter()
            .chain([ReconstructorHandle::classical("cubic", 24, 4, None, Upsample::Bicubic).unwrap()])
        {
            let r = Reconstructor::open(handle).unwrap();
            assert!(r.reconstruct(&img).unwrap().max_abs_diff(&img) < 1e-12, "{}", r.id());
        }
    }

    #[test]
    fn checkerboard_aliases_to_constant() {
        let img = ImageTensor::from_fn(3, 16, 16, |_, y, x| ((x + y) % 2) as f64);
        for up in [Upsample::Nearest, Upsample::Bilinear, Upsample::Bicubic] {
            let r = Reconstructor::open(ReconstructorHandle::classical("a", 16, 2, None, up).unwrap())
                .unwrap();
            let out = r.reconstruct(&img).unwrap();
            let first = out.samples()[0];
            assert!(out.samples().iter().all(|&v| v == first), "{up}");
        }
    }

    #[test]
    fn reconstruct_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let img = ImageTensor::from_fn(3, 32, 32, |_, _, _| rng.gen());
        for handle in ReconstructorHandle::classical_suite(32) {
            let r = Reconstructor::open(handle).unwrap();
            assert_eq!(r.reconstruct(&img).unwrap(), r.reconstruct(&img).unwrap());
        }
    }

    #[test]
    fn bilinear_weights_interpolate_linearly() {
        // A latent ramp upsampled bilinearly reproduces the ramp inside the support.
        let latent = ImageTensor::row(&[0.0, 1.0, 2.0, 3.0]);
        let out = classical_decode(&latent, 2, Upsample::Bilinear, 1, 8);
        let expected = [0.0, 0.25, 0.75, 1.25, 1.75, 2.25, 2.75, 3.0];
        for (a, b) in out.samples().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{:?}", out.samples());
        }
    }

    #[test]
    fn handle_validation() {
        assert!(ReconstructorHandle::classical("x", 12, 8, None, Upsample::Nearest).is_err());
        assert!(ReconstructorHandle::classical("", 8, 8, None, Upsample::Nearest).is_err());
        assert!(ReconstructorHandle::classical(
            "x",
            8,
            8,
            Some(FilterSpec::Gaussian { k: 2, sigma: 1.0 }),
            Upsample::Nearest
        )
        .is_err());
    }

    #[test]
    fn classical_encode_rejects_neural_handle() {
        let h = ReconstructorHandle {
            id: "vae".into(),
            kind: HandleKind::Neural(NeuralSpec {
                asset: "missing.onnx".into(),
                sha256: String::new(),
                input_range: InputRange::Signed,
            }),
            native_side: 8,
            downsampling: 8,
            training_corpus: "x".into(),
        };
        assert!(matches!(classical_encode(&h, &alt_row()), Err(Error::Contract(_))));
        let err = Reconstructor::open(h).unwrap_err();
        assert!(matches!(err, Error::Asset { ref id, .. } if id == "vae"));
    }
}
