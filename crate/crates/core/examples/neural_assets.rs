//! Loads a registry with ONNX assets, reconstructs through a neural
//! autoencoder and scores with per-stage LPIPS.
//!
//! cargo run --example neural_assets [registry.toml]

use hfi::scoring::hfi_score;
use hfi::{load_registry, synth, DistanceKind, Distances, FilterSpec, Lpips};

fn main() -> hfi::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/tiny_registry.toml").into());
    let registry = load_registry(path.as_ref())?;
    for check in registry.verify() {
        println!("{:<16} {:?}", check.id, check.status);
    }
    let lpips = Lpips::open(registry.distance_asset().expect("registry lists a distance asset"))?;
    let d = Distances::with_lpips(lpips);
    for ae in registry.open(&[])? {
        let x = synth::texture(ae.native_side(), 9);
        let g = ae.reconstruct(&x)?;
        let terms = d.lpips().unwrap().stage_terms(&x, &g)?;
        println!("{:<16} LPIPS stages {terms:.4?}", ae.id());
        for kind in [DistanceKind::LpipsLayer(2), DistanceKind::LpipsFull, DistanceKind::Mse] {
            println!("{:<16} HFI[{kind}] {:.6}", "", hfi_score(&x, &ae, &d, kind, &FilterSpec::default())?);
        }
    }
    Ok(())
}
