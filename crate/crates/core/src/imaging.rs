//! Image decoding, geometry normalization and benchmark corruptions.
//!
//! Everything here works on [`ImageTensor`], a planar `c×H×W` float image
//! with nominal range `[0, 1]`. Quantization to 8 bits only happens at codec
//! boundaries ([`decode_image`], [`ImageTensor::encode_png`], JPEG corruption).

use std::fmt;
use std::io::Cursor;
use std::str::FromStr;

use image::imageops::{self, FilterType};
use image::{DynamicImage, ImageBuffer, ImageFormat, Luma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Codec identifier recorded in reports so JPEG corruption results can be
/// traced to the encoder that produced them.
pub const JPEG_CODEC: &str = "image-rs 0.25 baseline encoder (IJG quantization tables)";

/// Planar float image, `channels × height × width`, row-major per channel.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageTensor {
    channels: usize,
    height: usize,
    width: usize,
    samples: Vec<f64>,
}

impl ImageTensor {
    pub fn new(channels: usize, height: usize, width: usize, samples: Vec<f64>) -> Result<Self> {
        if !(channels == 1 || channels == 3) {
            return Err(Error::param(format!("channels must be 1 or 3, got {channels}")));
        }
        if height == 0 || width == 0 {
            return Err(Error::geometry(format!("empty image {height}x{width}")));
        }
        if samples.len() != channels * height * width {
            return Err(Error::geometry(format!(
                "{} samples for a {channels}x{height}x{width} image",
                samples.len()
            )));
        }
        if let Some(pos) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric {
                stage: "image".into(),
                reason: format!("non-finite sample at index {pos}"),
            });
        }
        Ok(Self { channels, height, width, samples })
    }

    /// Image with every sample set to `value`.
    pub fn filled(channels: usize, height: usize, width: usize, value: f64) -> Self {
        Self::new(channels, height, width, vec![value; channels * height * width])
            .expect("filled image with valid geometry")
    }

    /// Builds an image by evaluating `f(channel, y, x)` for every sample.
    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut samples = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    samples.push(f(c, y, x));
                }
            }
        }
        Self::new(channels, height, width, samples).expect("from_fn produced a valid image")
    }

    /// Single-channel single-row image, handy for 1-D worked examples.
    pub fn row(values: &[f64]) -> Self {
        Self::new(1, 1, values.len(), values.to_vec()).expect("row image")
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.samples[c * n..(c + 1) * n]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.height * self.width;
        &mut self.samples[c * n..(c + 1) * n]
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.samples[(c * self.height + y) * self.width + x]
    }

    pub fn same_dims(&self, other: &ImageTensor) -> bool {
        self.dims() == other.dims()
    }

    /// Builds an image with the same geometry from a new sample buffer.
    /// Used internally where the samples are known to be finite.
    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), self.samples.len());
        Self { channels: self.channels, height: self.height, width: self.width, samples }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        self.with_samples(self.samples.iter().map(|&v| f(v)).collect())
    }

    /// Element-wise combination of two equally shaped images.
    pub fn zip_map(&self, other: &ImageTensor, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if !self.same_dims(other) {
            return Err(Error::geometry(format!(
                "{:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(self.with_samples(
            self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    pub fn clamp01(&self) -> Self {
        self.map(|v| v.clamp(0.0, 1.0))
    }

    /// Rounds every sample to the nearest 8-bit level (after clamping).
    pub fn quantize_u8(&self) -> Self {
        self.map(|v| to_u8(v) as f64 / 255.0)
    }

    pub fn max_abs_diff(&self, other: &ImageTensor) -> f64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Interleaved 8-bit RGB. Single-channel images are replicated.
    pub fn to_rgb8(&self) -> image::RgbImage {
        let (h, w) = (self.height, self.width);
        let mut out = image::RgbImage::new(w as u32, h as u32);
        for (x, y, px) in out.enumerate_pixels_mut() {
            let (x, y) = (x as usize, y as usize);
            for c in 0..3 {
                let src = if self.channels == 3 { c } else { 0 };
                px.0[c] = to_u8(self.get(src, y, x));
            }
        }
        out
    }

    /// Lossless PNG encoding of the 8-bit quantized image.
    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut buf = Cursor::new(Vec::new());
        DynamicImage::ImageRgb8(self.to_rgb8())
            .write_to(&mut buf, ImageFormat::Png)
            .map_err(|e| Error::Encode(e.to_string()))?;
        Ok(buf.into_inner())
    }

    pub fn encode_jpeg(&self, quality: u8) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        let encoder = image::codecs::jpeg::JpegEncoder::new_with_quality(&mut buf, quality);
        self.to_rgb8().write_with_encoder(encoder).map_err(|e| Error::Encode(e.to_string()))?;
        Ok(buf)
    }

    fn from_dynamic(img: &DynamicImage) -> Self {
        let (w, h) = (img.width() as usize, img.height() as usize);
        let n = w * h;
        let mut samples = vec![0.0; 3 * n];
        let deep = matches!(
            img.color(),
            image::ColorType::L16
                | image::ColorType::La16
                | image::ColorType::Rgb16
                | image::ColorType::Rgba16
        );
        if deep {
            let rgb = img.to_rgb16();
            for (i, px) in rgb.pixels().enumerate() {
                for c in 0..3 {
                    samples[c * n + i] = px.0[c] as f64 / 65535.0;
                }
            }
        } else {
            let rgb = img.to_rgb8();
            for (i, px) in rgb.pixels().enumerate() {
                for c in 0..3 {
                    samples[c * n + i] = px.0[c] as f64 / 255.0;
                }
            }
        }
        Self { channels: 3, height: h, width: w, samples }
    }
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Container format hint for [`decode_image`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FormatHint {
    #[default]
    Auto,
    Png,
    Jpeg,
}

impl FormatHint {
    /// Hint from a file extension (`png`, `jpg`, `jpeg`, case-insensitive).
    pub fn from_extension(ext: &str) -> Self {
        match ext.to_ascii_lowercase().as_str() {
            "png" => FormatHint::Png,
            "jpg" | "jpeg" => FormatHint::Jpeg,
            _ => FormatHint::Auto,
        }
    }
}

/// Decodes a PNG or JPEG stream into a 3-channel tensor in `[0, 1]`.
///
/// Alpha is discarded and grayscale is replicated across channels.
pub fn decode_image(bytes: &[u8], hint: FormatHint) -> Result<ImageTensor> {
    let sniffed = image::guess_format(bytes).ok();
    let format = match hint {
        FormatHint::Png => ImageFormat::Png,
        FormatHint::Jpeg => ImageFormat::Jpeg,
        FormatHint::Auto => sniffed.ok_or_else(|| {
            Error::Decode(format!(
                "unrecognized image signature in the first {} bytes of a {}-byte stream",
                bytes.len().min(16),
                bytes.len()
            ))
        })?,
    };
    if !matches!(format, ImageFormat::Png | ImageFormat::Jpeg) {
        return Err(Error::Decode(format!("unsupported container {format:?}")));
    }
    let img = image::load_from_memory_with_format(bytes, format).map_err(|e| {
        Error::Decode(format!(
            "malformed {format:?} stream ({} bytes, signature {}): {e}",
            bytes.len(),
            hex::encode(&bytes[..bytes.len().min(8)])
        ))
    })?;
    Ok(ImageTensor::from_dynamic(&img))
}

/// Reads and decodes an image file, picking the format hint from its extension.
pub fn read_image(path: &std::path::Path) -> Result<ImageTensor> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let hint = path
        .extension()
        .and_then(|e| e.to_str())
        .map(FormatHint::from_extension)
        .unwrap_or_default();
    decode_image(&bytes, hint)
}

/// Center crop to `height × width`. Both must not exceed the source.
pub fn center_crop(img: &ImageTensor, height: usize, width: usize) -> Result<ImageTensor> {
    if height == 0 || width == 0 || height > img.height || width > img.width {
        return Err(Error::geometry(format!(
            "cannot crop {}x{} to {height}x{width}",
            img.height, img.width
        )));
    }
    let top = (img.height - height) / 2;
    let left = (img.width - width) / 2;
    Ok(ImageTensor::from_fn(img.channels, height, width, |c, y, x| {
        img.get(c, top + y, left + x)
    }))
}

/// Bicubic (Catmull-Rom) resize to `height × width`, clamped to `[0, 1]`.
pub fn resize_bicubic(img: &ImageTensor, height: usize, width: usize) -> Result<ImageTensor> {
    if height == 0 || width == 0 {
        return Err(Error::geometry(format!("cannot resize to {height}x{width}")));
    }
    if (height, width) == (img.height, img.width) {
        return Ok(img.clamp01());
    }
    let mut samples = Vec::with_capacity(img.channels * height * width);
    for c in 0..img.channels {
        let plane: Vec<f32> = img.plane(c).iter().map(|&v| v as f32).collect();
        let buf: ImageBuffer<Luma<f32>, Vec<f32>> =
            ImageBuffer::from_raw(img.width as u32, img.height as u32, plane)
                .expect("plane length matches geometry");
        let resized = imageops::resize(&buf, width as u32, height as u32, FilterType::CatmullRom);
        samples.extend(resized.into_raw().into_iter().map(|v| (v as f64).clamp(0.0, 1.0)));
    }
    ImageTensor::new(img.channels, height, width, samples)
}

/// Normalizes an image to a reconstructor's square native geometry.
///
/// Axes longer than `side` are center-cropped to `side`; if an axis is still
/// shorter than `side` afterwards, the cropped image is resized bicubically to
/// `side × side`.
pub fn fit_to_dim(img: &ImageTensor, side: usize) -> Result<ImageTensor> {
    if side == 0 {
        return Err(Error::param("side must be positive"));
    }
    let h = img.height.min(side);
    let w = img.width.min(side);
    let cropped = if (h, w) == (img.height, img.width) { img.clone() } else { center_crop(img, h, w)? };
    if (h, w) == (side, side) {
        Ok(cropped)
    } else {
        resize_bicubic(&cropped, side, side)
    }
}

/// Surrounds the image with a constant border of `border` pixels on every side.
pub fn pad_constant(img: &ImageTensor, border: usize, value: f64) -> ImageTensor {
    let (c, h, w) = img.dims();
    ImageTensor::from_fn(c, h + 2 * border, w + 2 * border, |ch, y, x| {
        if y < border || x < border || y >= h + border || x >= w + border {
            value
        } else {
            img.get(ch, y - border, x - border)
        }
    })
}

/// A benchmark corruption applied identically to real and generated images.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CorruptionSpec {
    /// JPEG encode at `quality` then decode.
    Jpeg { quality: u8 },
    /// Center crop to `fraction` of each side, then resize back.
    Crop { fraction: f64 },
}

/// Default JPEG quality grid for corruption sweeps.
pub const JPEG_GRID: [u8; 8] = [95, 90, 80, 70, 60, 50, 40, 30];
/// Default crop-fraction grid for corruption sweeps.
pub const CROP_GRID: [f64; 6] = [0.95, 0.9, 0.8, 0.7, 0.6, 0.5];

impl CorruptionSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CorruptionSpec::Jpeg { quality } if !(1..=100).contains(&quality) => {
                Err(Error::param(format!("jpeg quality {quality} outside [1,100]")))
            }
            CorruptionSpec::Crop { fraction } if !(fraction > 0.0 && fraction <= 1.0) => {
                Err(Error::param(format!("crop fraction {fraction} outside (0,1]")))
            }
            _ => Ok(()),
        }
    }

    /// Grid parameter as a number, for curve tables.
    pub fn parameter(&self) -> f64 {
        match *self {
            CorruptionSpec::Jpeg { quality } => quality as f64,
            CorruptionSpec::Crop { fraction } => fraction,
        }
    }
}

impl fmt::Display for CorruptionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorruptionSpec::Jpeg { quality } => write!(f, "jpeg:q={quality}"),
            CorruptionSpec::Crop { fraction } => write!(f, "crop:f={fraction}"),
        }
    }
}

/// Which corruption family a sweep runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorruptionKind {
    Jpeg,
    Crop,
}

impl CorruptionKind {
    /// The default grid for this family.
    pub fn default_grid(self) -> Vec<CorruptionSpec> {
        match self {
            CorruptionKind::Jpeg => {
                JPEG_GRID.iter().map(|&quality| CorruptionSpec::Jpeg { quality }).collect()
            }
            CorruptionKind::Crop => {
                CROP_GRID.iter().map(|&fraction| CorruptionSpec::Crop { fraction }).collect()
            }
        }
    }
}

impl FromStr for CorruptionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jpeg" => Ok(CorruptionKind::Jpeg),
            "crop" => Ok(CorruptionKind::Crop),
            other => Err(Error::param(format!("unknown corruption kind `{other}`"))),
        }
    }
}

/// Applies a corruption to a 3-channel image; dimensions are preserved.
pub fn corrupt(img: &ImageTensor, spec: &CorruptionSpec) -> Result<ImageTensor> {
    spec.validate()?;
    if img.channels != 3 {
        return Err(Error::param("corruptions apply to 3-channel images"));
    }
    match *spec {
        CorruptionSpec::Jpeg { quality } => {
            let bytes = img.encode_jpeg(quality)?;
            decode_image(&bytes, FormatHint::Jpeg)
        }
        CorruptionSpec::Crop { fraction } => {
            if fraction == 1.0 {
                return Ok(img.clone());
            }
            let h = ((img.height as f64 * fraction).round() as usize).max(1);
            let w = ((img.width as f64 * fraction).round() as usize).max(1);
            let cropped = center_crop(img, h, w)?;
            resize_bicubic(&cropped, img.height, img.width)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn png_of(w: u32, h: u32, rgb: [u8; 3]) -> Vec<u8> {
        let img = image::RgbImage::from_pixel(w, h, image::Rgb(rgb));
        let mut buf = Cursor::new(Vec::new());
        img.write_to(&mut buf, ImageFormat::Png).unwrap();
        buf.into_inner()
    }

    fn checkerboard(side: usize) -> ImageTensor {
        ImageTensor::from_fn(3, side, side, |_, y, x| ((x + y) % 2) as f64)
    }

    #[test]
    fn white_png_decodes_to_ones() {
        let img = decode_image(&png_of(2, 2, [255, 255, 255]), FormatHint::Png).unwrap();
        assert_eq!(img.dims(), (3, 2, 2));
        assert!(img.samples().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn black_png_decodes_to_zeros() {
        let img = decode_image(&png_of(1, 1, [0, 0, 0]), FormatHint::Auto).unwrap();
        assert_eq!(img.samples(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn grayscale_is_replicated_and_alpha_dropped() {
        let gray = image::GrayAlphaImage::from_pixel(1, 1, image::LumaA([51, 7]));
        let mut buf = Cursor::new(Vec::new());
        gray.write_to(&mut buf, ImageFormat::Png).unwrap();
        let img = decode_image(buf.get_ref(), FormatHint::Png).unwrap();
        assert_eq!(img.samples(), &[0.2, 0.2, 0.2]);
    }

    #[test]
    fn malformed_stream_reports_context() {
        let mut bytes = png_of(4, 4, [1, 2, 3]);
        bytes.truncate(30);
        let err = decode_image(&bytes, FormatHint::Png).unwrap_err().to_string();
        assert!(err.contains("30 bytes"), "{err}");
        let err = decode_image(b"not an image", FormatHint::Auto).unwrap_err().to_string();
        assert!(err.contains("12-byte"), "{err}");
    }

    #[test]
    fn jpeg_round_trip_is_lossy() {
        // Regression value: max abs diff of the q=100 re-encode of this fixture.
        let src = ImageTensor::from_fn(3, 16, 16, |c, y, x| ((x * 13 + y * 7 + c * 5) % 17) as f64 / 16.0);
        let jpeg = decode_image(&src.encode_jpeg(90).unwrap(), FormatHint::Jpeg).unwrap();
        let again = decode_image(&jpeg.encode_jpeg(100).unwrap(), FormatHint::Jpeg).unwrap();
        let diff = jpeg.max_abs_diff(&again);
        assert!((diff - 3.0 / 255.0).abs() < 1e-12, "{diff}");
    }

    #[test]
    fn fit_crops_the_long_axis_only() {
        let img = ImageTensor::from_fn(3, 768, 512, |_, y, _| y as f64 / 767.0);
        let out = fit_to_dim(&img, 512).unwrap();
        assert_eq!(out.dims(), (3, 512, 512));
        assert_eq!(out.get(0, 0, 0), img.get(0, 128, 0));
        assert_eq!(out.get(2, 511, 3), img.get(2, 639, 3));
    }

    #[test]
    fn fit_is_identity_at_native_side() {
        let img = checkerboard(512);
        assert_eq!(fit_to_dim(&img, 512).unwrap(), img);
    }

    #[test]
    fn fit_crops_then_resizes_mixed_axes() {
        let img = ImageTensor::from_fn(3, 600, 300, |_, y, x| ((y / 50 + x / 50) % 2) as f64);
        let out = fit_to_dim(&img, 512).unwrap();
        assert_eq!(out.dims(), (3, 512, 512));
        assert!(out.samples().iter().all(|v| (0.0..=1.0).contains(v)));
        // Crop keeps rows 44..556; the first output row samples that region.
        let direct = resize_bicubic(&center_crop(&img, 512, 300).unwrap(), 512, 512).unwrap();
        assert_eq!(out, direct);
    }

    #[test]
    fn crop_fraction_one_is_identity() {
        let img = checkerboard(8);
        assert_eq!(corrupt(&img, &CorruptionSpec::Crop { fraction: 1.0 }).unwrap(), img);
    }

    #[test]
    fn jpeg_max_quality_keeps_constant_image() {
        let img = ImageTensor::filled(3, 32, 32, 100.0 / 255.0);
        let out = corrupt(&img, &CorruptionSpec::Jpeg { quality: 100 }).unwrap();
        assert!(out.max_abs_diff(&img) <= 1.0 / 255.0 + 1e-12);
    }

    #[test]
    fn jpeg_q50_damages_checkerboard() {
        let img = checkerboard(32);
        let out = corrupt(&img, &CorruptionSpec::Jpeg { quality: 50 }).unwrap();
        let mse = img
            .samples()
            .iter()
            .zip(out.samples())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / img.samples().len() as f64;
        // Regression value for the bundled encoder.
        assert!((mse - 8.213187e-4).abs() < 1e-9, "mse {mse}");
    }

    #[test]
    fn corruption_parameters_are_validated() {
        let img = checkerboard(8);
        assert!(corrupt(&img, &CorruptionSpec::Jpeg { quality: 0 }).is_err());
        assert!(corrupt(&img, &CorruptionSpec::Jpeg { quality: 101 }).is_err());
        assert!(corrupt(&img, &CorruptionSpec::Crop { fraction: 0.0 }).is_err());
        assert!(corrupt(&img, &CorruptionSpec::Crop { fraction: 1.5 }).is_err());
        let gray = ImageTensor::filled(1, 8, 8, 0.5);
        assert!(corrupt(&gray, &CorruptionSpec::Crop { fraction: 0.5 }).is_err());
    }

    #[test]
    fn tensor_rejects_bad_samples() {
        assert!(ImageTensor::new(3, 1, 1, vec![0.0; 2]).is_err());
        assert!(ImageTensor::new(2, 1, 1, vec![0.0; 2]).is_err());
        assert!(ImageTensor::new(1, 1, 1, vec![f64::NAN]).is_err());
    }
}
