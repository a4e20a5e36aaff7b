//! Orthonormal 2-D DCT (type II forward, type III inverse) and radial
//! frequency nulling.

use crate::error::{Error, Result};
use crate::imaging::ImageTensor;

/// DCT coefficients of one image plane, `height × width`, row-major.
/// Index `(u, v)` is vertical frequency `u`, horizontal frequency `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct DctPlane {
    pub height: usize,
    pub width: usize,
    pub coeffs: Vec<f64>,
}

impl DctPlane {
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.coeffs[u * self.width + v]
    }
}

/// Orthonormal DCT-II basis, `basis[k * n + i] = a_k cos(pi (2i + 1) k / 2n)`.
fn basis(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    let nf = n as f64;
    for k in 0..n {
        let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
        for i in 0..n {
            m[k * n + i] =
                scale * (std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2.0 * nf)).cos();
        }
    }
    m
}

/// `out = basis(h) · plane · basis(w)ᵀ` (forward) or the transposed products (inverse).
fn transform(plane: &[f64], h: usize, w: usize, inverse: bool) -> Vec<f64> {
    let bh = basis(h);
    let bw = basis(w);
    // Rows first: tmp[y][v] = Σ_x plane[y][x] Bw[v][x]   (inverse: Σ_x plane[y][x] Bw[x][v])
    let mut tmp = vec![0.0; h * w];
    for y in 0..h {
        let row = &plane[y * w..(y + 1) * w];
        for v in 0..w {
            let mut acc = 0.0;
            for (x, &s) in row.iter().enumerate() {
                let b = if inverse { bw[x * w + v] } else { bw[v * w + x] };
                acc += s * b;
            }
            tmp[y * w + v] = acc;
        }
    }
    let mut out = vec![0.0; h * w];
    for u in 0..h {
        for y in 0..h {
            let b = if inverse { bh[y * h + u] } else { bh[u * h + y] };
            if b == 0.0 {
                continue;
            }
            let src = &tmp[y * w..(y + 1) * w];
            let dst = &mut out[u * w..(u + 1) * w];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += b * s;
            }
        }
    }
    out
}

/// Forward orthonormal DCT of every channel.
pub fn dct2(img: &ImageTensor) -> Vec<DctPlane> {
    let (c, h, w) = img.dims();
    (0..c)
        .map(|ch| DctPlane { height: h, width: w, coeffs: transform(img.plane(ch), h, w, false) })
        .collect()
}

/// Inverse of [`dct2`]. No clamping is applied.
pub fn idct2(planes: &[DctPlane]) -> Result<ImageTensor> {
    let first = planes.first().ok_or_else(|| Error::param("no DCT planes"))?;
    let (h, w) = (first.height, first.width);
    if planes.iter().any(|p| p.height != h || p.width != w || p.coeffs.len() != h * w) {
        return Err(Error::geometry("DCT planes disagree in size"));
    }
    let mut samples = Vec::with_capacity(planes.len() * h * w);
    for p in planes {
        samples.extend(transform(&p.coeffs, h, w, true));
    }
    ImageTensor::new(planes.len(), h, w, samples)
}

/// Zeroes every coefficient with `sqrt(u² + v²) > cutoff` and inverts,
/// without clamping.
pub fn dct_null_unclamped(img: &ImageTensor, cutoff: f64) -> Result<ImageTensor> {
    if cutoff.is_nan() || cutoff <= 0.0 {
        return Err(Error::param(format!("DCT cutoff must be positive, got {cutoff}")));
    }
    let mut planes = dct2(img);
    for p in &mut planes {
        let w = p.width;
        for (i, c) in p.coeffs.iter_mut().enumerate() {
            let (u, v) = ((i / w) as f64, (i % w) as f64);
            if (u * u + v * v).sqrt() > cutoff {
                *c = 0.0;
            }
        }
    }
    idct2(&planes)
}

/// Radial DCT low-pass: [`dct_null_unclamped`] followed by clamping to `[0, 1]`.
pub fn dct_null(img: &ImageTensor, cutoff: f64) -> Result<ImageTensor> {
    Ok(dct_null_unclamped(img, cutoff)?.clamp01())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(c: usize, h: usize, w: usize, seed: u64) -> ImageTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImageTensor::from_fn(c, h, w, |_, _, _| rng.gen())
    }

    #[test]
    fn constant_plane_is_dc_only() {
        let img = ImageTensor::filled(1, 6, 10, 0.4);
        let p = &dct2(&img)[0];
        assert!((p.get(0, 0) - 0.4 * (60f64).sqrt()).abs() < 1e-12);
        for (i, c) in p.coeffs.iter().enumerate().skip(1) {
            assert!(c.abs() < 1e-12, "coefficient {i} = {c}");
        }
    }

    #[test]
    fn matches_direct_dct_definition() {
        let img = random_image(1, 5, 7, 3);
        let p = &dct2(&img)[0];
        let (h, w) = (5usize, 7usize);
        let pi = std::f64::consts::PI;
        for u in 0..h {
            for v in 0..w {
                let au = if u == 0 { (1.0 / h as f64).sqrt() } else { (2.0 / h as f64).sqrt() };
                let av = if v == 0 { (1.0 / w as f64).sqrt() } else { (2.0 / w as f64).sqrt() };
                let mut acc = 0.0;
                for y in 0..h {
                    for x in 0..w {
                        acc += img.get(0, y, x)
                            * (pi * (2 * y + 1) as f64 * u as f64 / (2 * h) as f64).cos()
                            * (pi * (2 * x + 1) as f64 * v as f64 / (2 * w) as f64).cos();
                    }
                }
                assert!((au * av * acc - p.get(u, v)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        let img = random_image(3, 64, 48, 9);
        let planes = dct2(&img);
        let back = idct2(&planes).unwrap();
        assert!(back.max_abs_diff(&img) < 1e-5);
        let e_img: f64 = img.samples().iter().map(|v| v * v).sum();
        let e_coef: f64 = planes.iter().flat_map(|p| &p.coeffs).map(|v| v * v).sum();
        assert!(((e_img - e_coef) / e_img).abs() < 1e-5);
    }

    #[test]
    fn generous_cutoff_changes_nothing() {
        let img = random_image(3, 12, 9, 1);
        let f = ((11.0f64).powi(2) + 8.0f64.powi(2)).sqrt();
        assert!(dct_null(&img, f).unwrap().max_abs_diff(&img) < 1e-5);
    }

    #[test]
    fn constant_survives_any_cutoff() {
        let img = ImageTensor::filled(3, 16, 16, 0.7);
        assert!(dct_null(&img, 0.5).unwrap().max_abs_diff(&img) < 1e-12);
    }

    #[test]
    fn coefficient_beyond_cutoff_is_erased() {
        let mut coeffs = vec![0.0; 64 * 64];
        coeffs[40] = 3.0; // (u=0, v=40)
        let planes = vec![DctPlane { height: 64, width: 64, coeffs }];
        let img = idct2(&planes).unwrap();
        assert!(img.samples().iter().any(|v| v.abs() > 1e-3));
        let out = dct_null_unclamped(&img, 36.0).unwrap();
        assert!(out.samples().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn rejects_non_positive_cutoff() {
        let img = ImageTensor::filled(1, 4, 4, 0.0);
        assert!(dct_null(&img, 0.0).is_err());
        assert!(dct_null(&img, f64::NAN).is_err());
    }
}
