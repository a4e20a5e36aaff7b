//! Low-pass filter family and the high-pass residual `x − F(x)`.
//!
//! All spatial filters pad by reflection without repeating the edge sample
//! (`… 2 1 | 0 1 2 … n-1 | n-2 …`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dct;
use crate::error::{Error, Result};
use crate::imaging::ImageTensor;

/// Default range sigma of the bilateral filter (intensities in `[0, 1]`).
pub const BILATERAL_SIGMA_RANGE: f64 = 0.1;
/// Default spatial sigma of the bilateral filter.
pub const BILATERAL_SIGMA_SPATIAL: f64 = 0.8;
/// DCT cutoff matching the Nyquist rate of an 8× latent grid.
pub const DCT_NYQUIST_CUTOFF: f64 = 36.0;

/// A low-pass filter. Its canonical text form (see [`fmt::Display`]) is
/// what the CLI accepts and what reports record, e.g. `gaussian:k=3,sigma=0.8`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum FilterSpec {
    Gaussian { k: usize, sigma: f64 },
    Box { k: usize },
    Median { k: usize },
    Bilateral { k: usize, sigma_spatial: f64, sigma_range: f64 },
    DctNull { cutoff: f64 },
    Identity,
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec::Gaussian { k: 3, sigma: 0.8 }
    }
}

impl FilterSpec {
    pub fn validate(&self) -> Result<()> {
        let check_k = |k: usize| {
            if k % 2 == 1 {
                Ok(())
            } else {
                Err(Error::param(format!("kernel size must be odd and positive, got {k}")))
            }
        };
        let check_pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match *self {
            FilterSpec::Gaussian { k, sigma } => {
                check_k(k)?;
                check_pos("sigma", sigma)
            }
            FilterSpec::Box { k } | FilterSpec::Median { k } => check_k(k),
            FilterSpec::Bilateral { k, sigma_spatial, sigma_range } => {
                check_k(k)?;
                check_pos("sigma_s", sigma_spatial)?;
                check_pos("sigma_r", sigma_range)
            }
            FilterSpec::DctNull { cutoff } => check_pos("f", cutoff),
            FilterSpec::Identity => Ok(()),
        }
    }

    /// True when `F(x)` is linear in `x`.
    pub fn is_linear(&self) -> bool {
        matches!(self, FilterSpec::Gaussian { .. } | FilterSpec::Box { .. } | FilterSpec::Identity)
    }

    /// The Gaussian grid explored when ablating `k` and `sigma`.
    pub fn gaussian_grid() -> Vec<FilterSpec> {
        let mut out = Vec::new();
        for k in [3, 5, 7] {
            for sigma in [0.5, 0.8, 1.1, 1.4] {
                out.push(FilterSpec::Gaussian { k, sigma });
            }
        }
        out
    }

    /// One representative of every filter kind, each at kernel size 3.
    pub fn ablation_set() -> Vec<FilterSpec> {
        vec![
            FilterSpec::default(),
            FilterSpec::Box { k: 3 },
            FilterSpec::Bilateral {
                k: 3,
                sigma_spatial: BILATERAL_SIGMA_SPATIAL,
                sigma_range: BILATERAL_SIGMA_RANGE,
            },
            FilterSpec::Median { k: 3 },
            FilterSpec::DctNull { cutoff: DCT_NYQUIST_CUTOFF },
        ]
    }
}

impl fmt::Display for FilterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterSpec::Gaussian { k, sigma } => write!(f, "gaussian:k={k},sigma={sigma}"),
            FilterSpec::Box { k } => write!(f, "box:k={k}"),
            FilterSpec::Median { k } => write!(f, "median:k={k}"),
            FilterSpec::Bilateral { k, sigma_spatial, sigma_range } => {
                write!(f, "bilateral:k={k},sigma_s={sigma_spatial},sigma_r={sigma_range}")
            }
            FilterSpec::DctNull { cutoff } => write!(f, "dct:f={cutoff}"),
            FilterSpec::Identity => f.write_str("identity"),
        }
    }
}

impl FromStr for FilterSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, params) = match s.split_once(':') {
            Some((kind, params)) => (kind, params),
            None => (s, ""),
        };
        let mut fields = Vec::new();
        if !params.is_empty() {
            for item in params.split(',') {
                let (key, value) = item
                    .split_once('=')
                    .ok_or_else(|| Error::param(format!("malformed filter parameter `{item}`")))?;
                fields.push((key, value));
            }
        }
        let mut take = |key: &str| -> Option<&str> {
            let pos = fields.iter().position(|(k, _)| *k == key)?;
            Some(fields.remove(pos).1)
        };
        let num = |key: &str, v: Option<&str>| -> Result<Option<f64>> {
            v.map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::param(format!("`{key}` is not a number: `{v}`")))
            })
            .transpose()
        };
        let int = |v: Option<&str>| -> Result<Option<usize>> {
            v.map(|v| v.parse::<usize>().map_err(|_| Error::param(format!("`k` is not an integer: `{v}`"))))
                .transpose()
        };
        let spec = match kind {
            "gaussian" => FilterSpec::Gaussian {
                k: int(take("k"))?.unwrap_or(3),
                sigma: num("sigma", take("sigma"))?.unwrap_or(0.8),
            },
            "box" => FilterSpec::Box { k: int(take("k"))?.unwrap_or(3) },
            "median" => FilterSpec::Median { k: int(take("k"))?.unwrap_or(3) },
            "bilateral" => FilterSpec::Bilateral {
                k: int(take("k"))?.unwrap_or(3),
                sigma_spatial: num("sigma_s", take("sigma_s"))?.unwrap_or(BILATERAL_SIGMA_SPATIAL),
                sigma_range: num("sigma_r", take("sigma_r"))?.unwrap_or(BILATERAL_SIGMA_RANGE),
            },
            "dct" => FilterSpec::DctNull {
                cutoff: num("f", take("f"))?.unwrap_or(DCT_NYQUIST_CUTOFF),
            },
            "identity" => FilterSpec::Identity,
            other => return Err(Error::param(format!("unknown filter kind `{other}`"))),
        };
        if let Some((key, _)) = fields.first() {
            return Err(Error::param(format!("unexpected parameter `{key}` for filter `{kind}`")));
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl From<FilterSpec> for String {
    fn from(spec: FilterSpec) -> String {
        spec.to_string()
    }
}

impl TryFrom<String> for FilterSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Normalized 1-D Gaussian taps for offsets `-(k-1)/2 ..= (k-1)/2`.
pub fn gaussian_kernel_1d(k: usize, sigma: f64) -> Result<Vec<f64>> {
    FilterSpec::Gaussian { k, sigma }.validate()?;
    let r = (k / 2) as isize;
    let raw: Vec<f64> =
        (-r..=r).map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let n = n as isize;
    let period = 2 * (n - 1);
    let mut i = i.rem_euclid(period);
    if i >= n {
        i = period - i;
    }
    i as usize
}

/// Separable convolution of one plane with a symmetric 1-D kernel on both axes.
fn convolve_separable(plane: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let r = (taps.len() / 2) as isize;
    let mut tmp = vec![0.0; h * w];
    for y in 0..h {
        let row = &plane[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (j, &t) in taps.iter().enumerate() {
                acc += t * row[reflect(x as isize + j as isize - r, w)];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for (j, &t) in taps.iter().enumerate() {
            let src = reflect(y as isize + j as isize - r, h);
            let src_row = &tmp[src * w..(src + 1) * w];
            for (o, &s) in out[y * w..(y + 1) * w].iter_mut().zip(src_row) {
                *o += t * s;
            }
        }
    }
    out
}

fn median_plane(plane: &[f64], h: usize, w: usize, k: usize) -> Vec<f64> {
    let r = (k / 2) as isize;
    let mut window = Vec::with_capacity(k * k);
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            window.clear();
            for dy in -r..=r {
                let yy = reflect(y as isize + dy, h);
                for dx in -r..=r {
                    window.push(plane[yy * w + reflect(x as isize + dx, w)]);
                }
            }
            let mid = window.len() / 2;
            let (_, m, _) = window.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
            out[y * w + x] = *m;
        }
    }
    out
}

fn bilateral_plane(
    plane: &[f64],
    h: usize,
    w: usize,
    k: usize,
    sigma_spatial: f64,
    sigma_range: f64,
) -> Vec<f64> {
    let r = (k / 2) as isize;
    let spatial: Vec<f64> = (-r..=r)
        .flat_map(|dy| {
            (-r..=r).map(move |dx| {
                (-((dx * dx + dy * dy) as f64) / (2.0 * sigma_spatial * sigma_spatial)).exp()
            })
        })
        .collect();
    let range_denom = 2.0 * sigma_range * sigma_range;
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let center = plane[y * w + x];
            let (mut num, mut den) = (0.0, 0.0);
            let mut idx = 0;
            for dy in -r..=r {
                let yy = reflect(y as isize + dy, h);
                for dx in -r..=r {
                    let v = plane[yy * w + reflect(x as isize + dx, w)];
                    let d = v - center;
                    let wgt = spatial[idx] * (-(d * d) / range_denom).exp();
                    num += wgt * v;
                    den += wgt;
                    idx += 1;
                }
            }
            out[y * w + x] = num / den;
        }
    }
    out
}

fn per_plane(img: &ImageTensor, f: impl Fn(&[f64], usize, usize) -> Vec<f64>) -> ImageTensor {
    let (c, h, w) = img.dims();
    let mut samples = Vec::with_capacity(c * h * w);
    for ch in 0..c {
        samples.extend(f(img.plane(ch), h, w));
    }
    img.with_samples(samples)
}

/// Applies the low-pass filter `F` channel by channel.
pub fn apply_lowpass(img: &ImageTensor, spec: &FilterSpec) -> Result<ImageTensor> {
    spec.validate()?;
    Ok(match *spec {
        FilterSpec::Identity => img.clone(),
        FilterSpec::Gaussian { k, sigma } => {
            let taps = gaussian_kernel_1d(k, sigma)?;
            per_plane(img, |p, h, w| convolve_separable(p, h, w, &taps))
        }
        FilterSpec::Box { k } => {
            let taps = vec![1.0 / k as f64; k];
            per_plane(img, |p, h, w| convolve_separable(p, h, w, &taps))
        }
        FilterSpec::Median { k } => per_plane(img, |p, h, w| median_plane(p, h, w, k)),
        FilterSpec::Bilateral { k, sigma_spatial, sigma_range } => {
            per_plane(img, |p, h, w| bilateral_plane(p, h, w, k, sigma_spatial, sigma_range))
        }
        FilterSpec::DctNull { cutoff } => dct::dct_null(img, cutoff)?,
    })
}

/// `x − F(x)`; values are signed.
pub fn highpass_residual(img: &ImageTensor, spec: &FilterSpec) -> Result<ImageTensor> {
    let low = apply_lowpass(img, spec)?;
    img.zip_map(&low, |a, b| a - b)
}
