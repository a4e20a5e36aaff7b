//! Benchmark drivers: detection tasks, corruption sweeps and attribution.

mod manifest;
mod report;

use std::collections::BTreeSet;
use std::time::Instant;

use rayon::prelude::*;

pub use manifest::{DatasetManifest, Label, LabeledImage, ManifestEntry, SkippedRow};
pub use report::{
    Conventions, CurvePoint, EvalReport, HistogramRow, ImageCounts, MetricRow, RankRow, TaskKind,
    Timing, REPORT_SCHEMA_VERSION,
};

use crate::distance::{DistanceKind, Distances};
use crate::error::{Error, Result};
use crate::filters::FilterSpec;
use crate::imaging::{corrupt, fit_to_dim, CorruptionSpec};
use crate::metrics::{aupr, auroc, average_rank, Histogram};
use crate::reconstruct::Reconstructor;
use crate::scoring::{ensemble_score, hfi_score, EnsembleOutcome, ScoreRecord, ScorerConfig, ENSEMBLE_ID};

/// Largest tolerated fraction of unreadable manifest rows.
pub const SKIP_BUDGET: f64 = 0.05;

#[derive(Clone, Copy, Debug)]
pub struct EvalOptions {
    pub workers: usize,
    pub histogram_bins: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { workers: 1, histogram_bins: 20 }
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::param(format!("cannot start {workers} workers: {e}")))
}

/// Ensemble outcomes for one image, one per scorer config.
#[derive(Clone, Debug)]
pub struct ImageScores {
    pub outcomes: Vec<EnsembleOutcome>,
}

impl ImageScores {
    /// Per-handle records followed by the ensemble record, for every config.
    pub fn records(&self) -> impl Iterator<Item = &ScoreRecord> {
        self.outcomes.iter().flat_map(|o| o.per_handle.iter().chain(std::iter::once(&o.ensemble)))
    }

    fn value(&self, config: usize, reconstructor: usize) -> f64 {
        let o = &self.outcomes[config];
        o.per_handle.get(reconstructor).unwrap_or(&o.ensemble).value
    }
}

/// Scores every image with every config, fanned out over `workers` threads.
/// Output order matches input order.
pub fn score_images(
    images: &[LabeledImage],
    aes: &[Reconstructor],
    distances: &Distances,
    configs: &[ScorerConfig],
    workers: usize,
) -> Result<Vec<ImageScores>> {
    if configs.is_empty() {
        return Err(Error::param("no scorer configs"));
    }
    pool(workers)?.install(|| {
        images
            .par_iter()
            .map(|img| {
                let outcomes = configs
                    .iter()
                    .map(|cfg| ensemble_score(&img.id, &img.image, aes, distances, cfg))
                    .collect::<Result<Vec<_>>>()?;
                Ok(ImageScores { outcomes })
            })
            .collect()
    })
}

fn check_skip_budget(total: usize, skipped: usize) -> Result<()> {
    if total > 0 && skipped as f64 / total as f64 > SKIP_BUDGET {
        return Err(Error::Task(format!(
            "{skipped} of {total} images unreadable (budget {:.0}%)",
            SKIP_BUDGET * 100.0
        )));
    }
    Ok(())
}

fn generated_tags(images: &[LabeledImage]) -> Vec<String> {
    images
        .iter()
        .filter(|i| i.label == Label::Generated)
        .map(|i| i.source_model.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

fn reconstructor_ids(aes: &[Reconstructor]) -> Vec<String> {
    aes.iter().map(|a| a.id().to_string()).chain([ENSEMBLE_ID.to_string()]).collect()
}

/// Task name for real vs one generator.
pub fn task_name(tag: &str) -> String {
    format!("real vs {tag}")
}

/// AUROC/AUPR of real vs each generator tag for every config and reconstructor.
fn detection_metrics(
    images: &[LabeledImage],
    scores: &[ImageScores],
    configs: &[ScorerConfig],
    recon_ids: &[String],
) -> Result<Vec<MetricRow>> {
    let tags = generated_tags(images);
    let mut rows = Vec::new();
    for (ci, cfg) in configs.iter().enumerate() {
        for (ri, rid) in recon_ids.iter().enumerate() {
            let values = |pred: &dyn Fn(&LabeledImage) -> bool| -> Vec<f64> {
                images.iter().zip(scores).filter(|(i, _)| pred(i)).map(|(_, s)| s.value(ci, ri)).collect()
            };
            let pos = values(&|i| i.label == Label::Real);
            for tag in &tags {
                let neg = values(&|i| i.label == Label::Generated && &i.source_model == tag);
                rows.push(MetricRow {
                    config: cfg.label(),
                    reconstructor: rid.clone(),
                    task: task_name(tag),
                    auroc: auroc(&pos, &neg)?,
                    aupr: aupr(&pos, &neg)?,
                    n_pos: pos.len(),
                    n_neg: neg.len(),
                });
            }
        }
    }
    Ok(rows)
}

fn rank_rows(metrics: &[MetricRow], configs: &[String], recon_ids: &[String]) -> Result<Vec<RankRow>> {
    let mut out = Vec::new();
    for rid in recon_ids {
        let tasks: Vec<&str> = metrics
            .iter()
            .filter(|m| &m.reconstructor == rid)
            .map(|m| m.task.as_str())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if tasks.is_empty() {
            continue;
        }
        let table = |pick: fn(&MetricRow) -> f64| -> Vec<Vec<f64>> {
            configs
                .iter()
                .map(|c| {
                    tasks
                        .iter()
                        .map(|t| {
                            metrics
                                .iter()
                                .find(|m| &m.config == c && &m.reconstructor == rid && m.task == *t)
                                .map_or(0.0, pick)
                        })
                        .collect()
                })
                .collect()
        };
        let auroc_ranks = average_rank(&table(|m| m.auroc))?;
        let aupr_ranks = average_rank(&table(|m| m.aupr))?;
        for (i, c) in configs.iter().enumerate() {
            out.push(RankRow {
                reconstructor: rid.clone(),
                config: c.clone(),
                auroc_rank: auroc_ranks[i],
                aupr_rank: aupr_ranks[i],
                tasks: tasks.len(),
            });
        }
    }
    Ok(out)
}

fn histograms(images: &[LabeledImage], scores: &[ImageScores], configs: &[ScorerConfig], bins: usize) -> Vec<HistogramRow> {
    let mut populations = vec![("real".to_string(), None)];
    populations.extend(generated_tags(images).into_iter().map(|t| (t.clone(), Some(t))));
    let mut rows = Vec::new();
    for (ci, cfg) in configs.iter().enumerate() {
        let ensemble_idx = usize::MAX;
        let all: Vec<f64> = scores.iter().map(|s| s.value(ci, ensemble_idx)).collect();
        let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (name, tag) in &populations {
            let values: Vec<f64> = images
                .iter()
                .zip(&all)
                .filter(|(i, _)| match tag {
                    None => i.label == Label::Real,
                    Some(t) => i.label == Label::Generated && &i.source_model == t,
                })
                .map(|(_, &v)| v)
                .collect();
            let h = Histogram::new(&values, bins, lo, hi);
            rows.push(HistogramRow {
                config: cfg.label(),
                reconstructor: ENSEMBLE_ID.into(),
                population: name.clone(),
                edges: h.edges,
                counts: h.counts,
            });
        }
    }
    rows
}

fn require_labels(images: &[LabeledImage]) -> Result<()> {
    let real = images.iter().any(|i| i.label == Label::Real);
    let generated = images.iter().any(|i| i.label == Label::Generated);
    if real && generated {
        Ok(())
    } else {
        Err(Error::Task("need at least one real and one generated image".into()))
    }
}

/// Output of a detection task: the report plus every score record.
#[derive(Clone, Debug)]
pub struct TaskOutput {
    pub report: EvalReport,
    pub records: Vec<ScoreRecord>,
}

/// Scores already-decoded images and computes per-generator metrics,
/// average ranks and score histograms.
pub fn run_task_images(
    task_id: &str,
    images: &[LabeledImage],
    skipped: Vec<SkippedRow>,
    aes: &[Reconstructor],
    distances: &Distances,
    configs: &[ScorerConfig],
    opts: &EvalOptions,
) -> Result<TaskOutput> {
    let total = images.len() + skipped.len();
    check_skip_budget(total, skipped.len())?;
    require_labels(images)?;
    let start = Instant::now();
    let scores = score_images(images, aes, distances, configs, opts.workers)?;
    let elapsed = start.elapsed().as_secs_f64();

    let recon_ids = reconstructor_ids(aes);
    let config_labels: Vec<String> = configs.iter().map(ScorerConfig::label).collect();
    let mut report = EvalReport::new(task_id, TaskKind::Detection);
    report.metrics = detection_metrics(images, &scores, configs, &recon_ids)?;
    report.ranks = rank_rows(&report.metrics, &config_labels, &recon_ids)?;
    report.histograms = histograms(images, &scores, configs, opts.histogram_bins);
    report.configs = config_labels;
    report.reconstructors = recon_ids;
    report.images = ImageCounts { total, scored: images.len(), skipped };
    report.timing = Timing {
        samples: images.len(),
        total_seconds: elapsed,
        seconds_per_sample: elapsed / images.len().max(1) as f64,
    };
    let records = scores.iter().flat_map(|s| s.records().cloned()).collect();
    Ok(TaskOutput { report, records })
}

/// Reads a manifest and runs [`run_task_images`].
pub fn run_task(
    task_id: &str,
    manifest: &DatasetManifest,
    aes: &[Reconstructor],
    distances: &Distances,
    configs: &[ScorerConfig],
    opts: &EvalOptions,
) -> Result<TaskOutput> {
    manifest.require_both_labels()?;
    let (images, skipped) = manifest.read_images();
    run_task_images(task_id, &images, skipped, aes, distances, configs, opts)
}

/// Corrupts real and generated images identically at each grid point and
/// records one metric curve per config, reconstructor and generator.
#[allow(clippy::too_many_arguments)]
pub fn run_corruption_sweep_images(
    task_id: &str,
    images: &[LabeledImage],
    skipped: Vec<SkippedRow>,
    grid: &[CorruptionSpec],
    aes: &[Reconstructor],
    distances: &Distances,
    configs: &[ScorerConfig],
    opts: &EvalOptions,
) -> Result<EvalReport> {
    if grid.is_empty() {
        return Err(Error::param("corruption grid is empty"));
    }
    for spec in grid {
        spec.validate()?;
    }
    let total = images.len() + skipped.len();
    check_skip_budget(total, skipped.len())?;
    require_labels(images)?;
    let recon_ids = reconstructor_ids(aes);
    let workers = pool(opts.workers)?;
    let start = Instant::now();
    let mut curves = Vec::new();
    for spec in grid {
        let corrupted = workers.install(|| {
            images
                .par_iter()
                .map(|i| Ok(LabeledImage { image: corrupt(&i.image, spec)?, ..i.clone() }))
                .collect::<Result<Vec<_>>>()
        })?;
        let scores = score_images(&corrupted, aes, distances, configs, opts.workers)?;
        for m in detection_metrics(&corrupted, &scores, configs, &recon_ids)? {
            curves.push(CurvePoint {
                corruption: spec.to_string(),
                parameter: spec.parameter(),
                config: m.config,
                reconstructor: m.reconstructor,
                task: m.task,
                auroc: m.auroc,
                aupr: m.aupr,
            });
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let mut report = EvalReport::new(task_id, TaskKind::Corruption);
    report.curves = curves;
    report.configs = configs.iter().map(ScorerConfig::label).collect();
    report.reconstructors = recon_ids;
    report.images = ImageCounts { total, scored: images.len(), skipped };
    let samples = images.len() * grid.len();
    report.timing = Timing { samples, total_seconds: elapsed, seconds_per_sample: elapsed / samples.max(1) as f64 };
    Ok(report)
}

/// Manifest form of [`run_corruption_sweep_images`].
#[allow(clippy::too_many_arguments)]
pub fn run_corruption_sweep(
    task_id: &str,
    manifest: &DatasetManifest,
    grid: &[CorruptionSpec],
    aes: &[Reconstructor],
    distances: &Distances,
    configs: &[ScorerConfig],
    opts: &EvalOptions,
) -> Result<EvalReport> {
    manifest.require_both_labels()?;
    let (images, skipped) = manifest.read_images();
    run_corruption_sweep_images(task_id, &images, skipped, grid, aes, distances, configs, opts)
}

/// Name of the single attribution task.
pub const ATTRIBUTION_TASK: &str = "belonging vs non-belonging";

/// Distinguishes images generated by the model behind `ae` (belonging) from
/// images of another generator using HFI on that single autoencoder.
/// Belonging images are the positive class, scored by `−HFI`.
#[allow(clippy::too_many_arguments)]
pub fn run_attribution_images(
    task_id: &str,
    belonging: &[LabeledImage],
    other: &[LabeledImage],
    skipped: Vec<SkippedRow>,
    ae: &Reconstructor,
    distances: &Distances,
    distance: DistanceKind,
    filter: &FilterSpec,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    if belonging.is_empty() || other.is_empty() {
        return Err(Error::Task("attribution needs belonging and non-belonging images".into()));
    }
    let total = belonging.len() + other.len() + skipped.len();
    check_skip_budget(total, skipped.len())?;
    let workers = pool(opts.workers)?;
    let score_set = |set: &[LabeledImage]| -> Result<Vec<f64>> {
        workers.install(|| {
            set.par_iter()
                .map(|i| {
                    let x = fit_to_dim(&i.image, ae.native_side())?;
                    Ok(-hfi_score(&x, ae, distances, distance, filter)?)
                })
                .collect()
        })
    };
    let start = Instant::now();
    let pos = score_set(belonging)?;
    let neg = score_set(other)?;
    let elapsed = start.elapsed().as_secs_f64();

    let cfg = ScorerConfig::new(crate::scoring::Scorer::Hfi, distance).with_filter(*filter);
    let mut report = EvalReport::new(task_id, TaskKind::Attribution);
    report.metrics.push(MetricRow {
        config: cfg.label(),
        reconstructor: ae.id().to_string(),
        task: ATTRIBUTION_TASK.into(),
        auroc: auroc(&pos, &neg)?,
        aupr: aupr(&pos, &neg)?,
        n_pos: pos.len(),
        n_neg: neg.len(),
    });
    let lo = pos.iter().chain(&neg).copied().fold(f64::INFINITY, f64::min);
    let hi = pos.iter().chain(&neg).copied().fold(f64::NEG_INFINITY, f64::max);
    for (name, values) in [("belonging", &pos), ("non-belonging", &neg)] {
        let h = Histogram::new(values, opts.histogram_bins, lo, hi);
        report.histograms.push(HistogramRow {
            config: cfg.label(),
            reconstructor: ae.id().to_string(),
            population: name.into(),
            edges: h.edges,
            counts: h.counts,
        });
    }
    report.configs = vec![cfg.label()];
    report.reconstructors = vec![ae.id().to_string()];
    let scored = belonging.len() + other.len();
    report.images = ImageCounts { total, scored, skipped };
    report.timing = Timing { samples: scored, total_seconds: elapsed, seconds_per_sample: elapsed / scored as f64 };
    Ok(report)
}

/// Manifest form of [`run_attribution_images`]; labels in the manifests are ignored.
#[allow(clippy::too_many_arguments)]
pub fn run_attribution(
    task_id: &str,
    belonging: &DatasetManifest,
    other: &DatasetManifest,
    ae: &Reconstructor,
    distances: &Distances,
    distance: DistanceKind,
    filter: &FilterSpec,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    let (b, mut skipped) = belonging.read_images();
    let (o, s2) = other.read_images();
    skipped.extend(s2);
    run_attribution_images(task_id, &b, &o, skipped, ae, distances, distance, filter, opts)
}
