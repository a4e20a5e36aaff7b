//! Real-vs-generated benchmark on a synthetic corpus: per-handle and
//! ensemble metrics for three scorers, average ranks and histograms.

use hfi::evaluate::{run_task_images, EvalOptions, Label, LabeledImage};
use hfi::scoring::Scorer;
use hfi::{synth, DistanceKind, Distances, Reconstructor, ReconstructorHandle, ScorerConfig};

fn main() -> hfi::Result<()> {
    let side = 64;
    let aes: Vec<Reconstructor> = ReconstructorHandle::classical_suite(side)
        .into_iter()
        .take(2)
        .map(Reconstructor::open)
        .collect::<hfi::Result<_>>()?;
    let mut images = Vec::new();
    for (i, x) in synth::textures(side, 40, 100).into_iter().enumerate() {
        for ae in &aes {
            images.push(LabeledImage { id: format!("{}-{i}", ae.id()), label: Label::Generated, source_model: ae.id().into(), image: ae.reconstruct(&x)? });
        }
        images.push(LabeledImage { id: format!("real-{i}"), label: Label::Real, source_model: "real".into(), image: x });
    }
    let configs: Vec<ScorerConfig> = [Scorer::Aeroblade, Scorer::Hfi, Scorer::Bhfi]
        .into_iter()
        .map(|s| ScorerConfig::new(s, DistanceKind::Mse))
        .collect();
    let opts = EvalOptions { workers: 4, ..EvalOptions::default() };
    let out = run_task_images("synthetic", &images, vec![], &aes, &Distances::pixel_only(), &configs, &opts)?;
    out.report.write_summary(std::io::stdout().lock()).unwrap();
    for r in &out.report.ranks {
        println!("{:<16} {:<40} AUROC rank {:.2}  AUPR rank {:.2}", r.reconstructor, r.config, r.auroc_rank, r.aupr_rank);
    }
    Ok(())
}
