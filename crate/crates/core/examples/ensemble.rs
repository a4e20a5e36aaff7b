//! Min-ensemble over autoencoders with different native sides.

use hfi::scoring::{ensemble_score, Scorer};
use hfi::{synth, DistanceKind, Distances, FilterSpec, Reconstructor, ReconstructorHandle, ScorerConfig, Upsample};

fn main() -> hfi::Result<()> {
    let aes = vec![
        Reconstructor::open(ReconstructorHandle::classical("aa-64", 64, 8, Some(FilterSpec::default()), Upsample::Bilinear)?)?,
        Reconstructor::open(ReconstructorHandle::classical("alias-48", 48, 8, None, Upsample::Bicubic)?)?,
        Reconstructor::open(ReconstructorHandle::classical("aa-32", 32, 4, Some(FilterSpec::Box { k: 3 }), Upsample::Nearest)?)?,
    ];
    let cfg = ScorerConfig::new(Scorer::Hfi, DistanceKind::Mse);
    let x = synth::texture(80, 11);
    let out = ensemble_score("texture-11", &x, &aes, &Distances::pixel_only(), &cfg)?;
    for (r, side) in out.per_handle.iter().zip(&out.sides) {
        println!("{:<10} side {side:>3}  HFI {:.6}", r.reconstructor_id, r.value);
    }
    println!("{:<10}            HFI {:.6}", out.ensemble.reconstructor_id, out.ensemble.value);
    Ok(())
}
