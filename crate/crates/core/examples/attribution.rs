//! Attribution: images produced by one autoencoder against images of
//! another, scored by negated HFI under the first.

use hfi::evaluate::{run_attribution_images, EvalOptions, Label, LabeledImage};
use hfi::{synth, DistanceKind, Distances, FilterSpec, Reconstructor, ReconstructorHandle};

fn main() -> hfi::Result<()> {
    let suite = ReconstructorHandle::classical_suite(64);
    let own = Reconstructor::open(suite[0].clone())?;
    let other = Reconstructor::open(suite[1].clone())?;
    let make = |ae: &Reconstructor, seed| -> hfi::Result<Vec<LabeledImage>> {
        synth::textures(64, 30, seed)
            .iter()
            .enumerate()
            .map(|(i, x)| Ok(LabeledImage { id: format!("{}-{i}", ae.id()), label: Label::Generated, source_model: ae.id().into(), image: ae.reconstruct(x)? }))
            .collect()
    };
    let report = run_attribution_images(
        "attribution",
        &make(&own, 1)?,
        &make(&other, 500)?,
        vec![],
        &own,
        &Distances::pixel_only(),
        DistanceKind::Mse,
        &FilterSpec::default(),
        &EvalOptions::default(),
    )?;
    report.write_summary(std::io::stdout().lock()).unwrap();
    println!("{:.2e} s per sample", report.timing.seconds_per_sample);
    Ok(())
}
