//! Detection AUROC under JPEG compression and center cropping.

use hfi::evaluate::{run_corruption_sweep_images, EvalOptions, Label, LabeledImage};
use hfi::imaging::CorruptionKind;
use hfi::scoring::Scorer;
use hfi::{synth, DistanceKind, Distances, Reconstructor, ReconstructorHandle, ScorerConfig};

fn main() -> hfi::Result<()> {
    let ae = Reconstructor::open(ReconstructorHandle::classical_suite(64).remove(0))?;
    let mut images = Vec::new();
    for (i, x) in synth::textures(64, 24, 300).into_iter().enumerate() {
        images.push(LabeledImage { id: format!("g{i}"), label: Label::Generated, source_model: "classical-aa".into(), image: ae.reconstruct(&x)? });
        images.push(LabeledImage { id: format!("r{i}"), label: Label::Real, source_model: "real".into(), image: x });
    }
    let configs = [
        ScorerConfig::new(Scorer::Aeroblade, DistanceKind::Mse),
        ScorerConfig::new(Scorer::Hfi, DistanceKind::Mse),
    ];
    let opts = EvalOptions { workers: 4, ..EvalOptions::default() };
    for kind in [CorruptionKind::Jpeg, CorruptionKind::Crop] {
        let report = run_corruption_sweep_images("sweep", &images, vec![], &kind.default_grid(), std::slice::from_ref(&ae), &Distances::pixel_only(), &configs, &opts)?;
        for c in report.curves.iter().filter(|c| c.reconstructor == "ensemble") {
            println!("{:<12} {:<36} AUROC {:.4}", c.corruption, c.config, c.auroc);
        }
    }
    Ok(())
}
