//! Scores one image with AEROBLADE, HFI and B-HFI under the classical suite.
//!
//! cargo run --example score_image [path.png]

use hfi::scoring::{score, Scorer};
use hfi::{synth, DistanceKind, Distances, ReconstructorHandle, Reconstructor, ScorerConfig};

fn main() -> hfi::Result<()> {
    let x = match std::env::args().nth(1) {
        Some(p) => hfi::imaging::read_image(p.as_ref())?,
        None => synth::texture(64, 7),
    };
    let d = Distances::pixel_only();
    for handle in ReconstructorHandle::classical_suite(64) {
        let ae = Reconstructor::open(handle)?;
        let x = hfi::imaging::fit_to_dim(&x, ae.native_side())?;
        let g = ae.reconstruct(&x)?;
        for scorer in [Scorer::Aeroblade, Scorer::Hfi, Scorer::Bhfi] {
            let cfg = ScorerConfig::new(scorer, DistanceKind::Mse);
            println!(
                "{:<20} {:<40} input {:>10.6}  its reconstruction {:>10.6}",
                ae.id(),
                cfg.label(),
                score(&x, &ae, &d, &cfg)?,
                score(&g, &ae, &d, &cfg)?
            );
        }
    }
    Ok(())
}
