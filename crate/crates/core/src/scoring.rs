//! Score functions `U(x)`; larger means "more likely real".
//!
//! * AEROBLADE: `d(x, AE(x))`.
//! * HFI: `d(x, AE(x)) − d(F(x), AE(F(x)))`, the first-order estimate of the
//!   directional derivative of the reconstruction distance along `x − F(x)`.
//! * B-HFI: HFI of a pre-blurred input, `HFI(F_B(x))`.
//!
//! Every scorer has a min-ensemble over several autoencoders.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distance::{mse, DistanceKind, Distances};
use crate::error::{Error, Result};
use crate::filters::{apply_lowpass, highpass_residual, FilterSpec};
use crate::imaging::{fit_to_dim, ImageTensor};
use crate::reconstruct::Reconstructor;

/// Reconstructor id used for min-ensemble records.
pub const ENSEMBLE_ID: &str = "ensemble";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scorer {
    Aeroblade,
    Hfi,
    Bhfi,
}

impl fmt::Display for Scorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scorer::Aeroblade => "aeroblade",
            Scorer::Hfi => "hfi",
            Scorer::Bhfi => "bhfi",
        })
    }
}

impl FromStr for Scorer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aeroblade" => Ok(Scorer::Aeroblade),
            "hfi" => Ok(Scorer::Hfi),
            "bhfi" => Ok(Scorer::Bhfi),
            other => Err(Error::param(format!("unknown scorer `{other}`"))),
        }
    }
}

/// A fully specified score function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScorerConfig {
    pub scorer: Scorer,
    pub distance: DistanceKind,
    /// Low-pass `F` whose residual HFI probes. Unused by AEROBLADE.
    pub filter: FilterSpec,
    /// Pre-blur `F_B` applied by B-HFI.
    pub blur: FilterSpec,
}

impl ScorerConfig {
    pub fn new(scorer: Scorer, distance: DistanceKind) -> Self {
        Self { scorer, distance, filter: FilterSpec::default(), blur: FilterSpec::default() }
    }

    pub fn with_filter(mut self, filter: FilterSpec) -> Self {
        self.filter = filter;
        self
    }

    pub fn with_blur(mut self, blur: FilterSpec) -> Self {
        self.blur = blur;
        self
    }

    /// Text recorded in the `filter` column of score tables.
    pub fn filter_label(&self) -> String {
        match self.scorer {
            Scorer::Aeroblade => "none".into(),
            Scorer::Hfi => self.filter.to_string(),
            Scorer::Bhfi => format!("{}|blur={}", self.filter, self.blur),
        }
    }

    /// Stable name used as a key in reports, e.g. `hfi/mse/gaussian:k=3,sigma=0.8`.
    pub fn label(&self) -> String {
        format!("{}/{}/{}", self.scorer, self.distance, self.filter_label())
    }
}

/// One evaluated score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub image_id: String,
    pub reconstructor_id: String,
    pub scorer: Scorer,
    pub distance: DistanceKind,
    pub filter: String,
    pub value: f64,
}

/// `d(x, AE(x))`.
pub fn aeroblade_score(
    x: &ImageTensor,
    ae: &Reconstructor,
    distances: &Distances,
    d: DistanceKind,
) -> Result<f64> {
    let recon = ae.reconstruct(x)?;
    distances.distance(x, &recon, d)
}

/// `d(x, AE(x)) − d(F(x), AE(F(x)))`. The same autoencoder and distance are
/// used for both terms; filtering preserves geometry so no refit is needed.
pub fn hfi_score(
    x: &ImageTensor,
    ae: &Reconstructor,
    distances: &Distances,
    d: DistanceKind,
    filter: &FilterSpec,
) -> Result<f64> {
    let full = aeroblade_score(x, ae, distances, d)?;
    let low = apply_lowpass(x, filter)?;
    Ok(full - aeroblade_score(&low, ae, distances, d)?)
}

/// `HFI(F_B(x))`.
pub fn bhfi_score(
    x: &ImageTensor,
    ae: &Reconstructor,
    distances: &Distances,
    d: DistanceKind,
    filter: &FilterSpec,
    blur: &FilterSpec,
) -> Result<f64> {
    hfi_score(&apply_lowpass(x, blur)?, ae, distances, d, filter)
}

/// Dispatches on `cfg.scorer`.
pub fn score(x: &ImageTensor, ae: &Reconstructor, distances: &Distances, cfg: &ScorerConfig) -> Result<f64> {
    match cfg.scorer {
        Scorer::Aeroblade => aeroblade_score(x, ae, distances, cfg.distance),
        Scorer::Hfi => hfi_score(x, ae, distances, cfg.distance, &cfg.filter),
        Scorer::Bhfi => bhfi_score(x, ae, distances, cfg.distance, &cfg.filter, &cfg.blur),
    }
}

fn require_linear(ae: &Reconstructor, filter: &FilterSpec) -> Result<()> {
    if !ae.handle().is_linear() {
        return Err(Error::Contract(format!("`{}` is not a linear classical handle", ae.id())));
    }
    if !filter.is_linear() {
        return Err(Error::Contract(format!("filter `{filter}` is not linear")));
    }
    Ok(())
}

fn mse_reconstruction_error(ae: &Reconstructor, x: &ImageTensor) -> Result<f64> {
    mse(x, &ae.reconstruct_unclamped(x)?)
}

/// Finite-difference estimate of `⟨∂d(x, AE(x))/∂x, x − F(x)⟩` with `d = mse`:
/// `[d(x) − d(x − ε r)] / ε`, `r = x − F(x)`.
///
/// Verification only: requires a linear classical handle (evaluated without
/// the output clamp) and a linear filter.
pub fn hfi_directional(x: &ImageTensor, ae: &Reconstructor, filter: &FilterSpec, eps: f64) -> Result<f64> {
    require_linear(ae, filter)?;
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::param(format!("step must be positive, got {eps}")));
    }
    let r = highpass_residual(x, filter)?;
    let stepped = x.zip_map(&r, |a, b| a - eps * b)?;
    Ok((mse_reconstruction_error(ae, x)? - mse_reconstruction_error(ae, &stepped)?) / eps)
}

/// Closed-form directional derivative for a linear autoencoder `A` and
/// `d = mse`: `2 ((I − A)x)ᵀ (I − A) r / n`.
pub fn hfi_directional_analytic(x: &ImageTensor, ae: &Reconstructor, filter: &FilterSpec) -> Result<f64> {
    require_linear(ae, filter)?;
    let r = highpass_residual(x, filter)?;
    let ex = x.zip_map(&ae.reconstruct_unclamped(x)?, |a, b| a - b)?;
    let er = r.zip_map(&ae.reconstruct_unclamped(&r)?, |a, b| a - b)?;
    let dot: f64 = ex.samples().iter().zip(er.samples()).map(|(a, b)| a * b).sum();
    Ok(2.0 * dot / x.samples().len() as f64)
}

/// Per-handle records plus the min-ensemble record for one image.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleOutcome {
    pub per_handle: Vec<ScoreRecord>,
    pub ensemble: ScoreRecord,
    /// Side at which each handle's term was evaluated.
    pub sides: Vec<usize>,
}

/// Scores `x` with every autoencoder (after fitting it to each one's native
/// side) and keeps the minimum.
pub fn ensemble_score(
    image_id: &str,
    x: &ImageTensor,
    aes: &[Reconstructor],
    distances: &Distances,
    cfg: &ScorerConfig,
) -> Result<EnsembleOutcome> {
    if aes.is_empty() {
        return Err(Error::param("ensemble needs at least one reconstructor"));
    }
    let mut per_handle = Vec::with_capacity(aes.len());
    let mut sides = Vec::with_capacity(aes.len());
    for ae in aes {
        let fitted = fit_to_dim(x, ae.native_side())?;
        sides.push(fitted.height());
        per_handle.push(record(image_id, ae.id(), cfg, score(&fitted, ae, distances, cfg)?));
    }
    let value = per_handle.iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
    let ensemble = record(image_id, ENSEMBLE_ID, cfg, value);
    Ok(EnsembleOutcome { per_handle, ensemble, sides })
}

fn record(image_id: &str, reconstructor_id: &str, cfg: &ScorerConfig, value: f64) -> ScoreRecord {
    ScoreRecord {
        image_id: image_id.to_string(),
        reconstructor_id: reconstructor_id.to_string(),
        scorer: cfg.scorer,
        distance: cfg.distance,
        filter: cfg.filter_label(),
        value,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Real,
    Generated,
}

/// Decision threshold; a score strictly above `threshold` means real.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub threshold: f64,
}

pub fn classify(rec: &ScoreRecord, cfg: &ClassifierConfig) -> Verdict {
    if rec.value > cfg.threshold {
        Verdict::Real
    } else {
        Verdict::Generated
    }
}

pub const SCORE_CSV_HEADER: [&str; 6] =
    ["image_id", "reconstructor_id", "scorer", "distance", "filter", "value"];

/// Writes score records as CSV, values rounded to 6 decimals.
pub fn write_score_csv<W: Write>(records: &[ScoreRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCORE_CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.image_id.as_str(),
            r.reconstructor_id.as_str(),
            &r.scorer.to_string(),
            &r.distance.to_string(),
            r.filter.as_str(),
            &format!("{:.6}", r.value),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}
