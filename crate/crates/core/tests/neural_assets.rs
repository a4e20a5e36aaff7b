//! Tiny ONNX stand-ins for a VAE and an LPIPS backbone, plus optional checks
//! against real exported assets when `HFI_GOLDEN` points at a golden index
//! and `HFI_REGISTRY` at a registry holding the matching assets.

mod common;

use std::path::PathBuf;

use hfi::distance::LPIPS_STAGES;
use hfi::filters::apply_lowpass;
use hfi::golden::GoldenIndex;
use hfi::scoring::hfi_score;
use hfi::{load_registry, synth, DistanceKind, Distances, FilterSpec, Lpips, Registry};

fn registry() -> Registry {
    load_registry(&common::tiny_registry()).unwrap()
}

fn golden() -> GoldenIndex {
    GoldenIndex::load(&common::fixtures().join("tiny_golden.json")).unwrap()
}

fn lpips(r: &Registry) -> Lpips {
    Lpips::open(r.distance_asset().unwrap()).unwrap()
}

#[test]
fn vae_is_deterministic_and_shape_preserving() {
    let ae = registry().open(&["tiny-vae".into()]).unwrap().remove(0);
    let x = synth::texture(32, 4);
    let a = ae.reconstruct(&x).unwrap();
    let b = ae.reconstruct(&x).unwrap();
    assert_eq!(a.dims(), x.dims());
    assert_eq!(a, b);
}

#[test]
fn vae_matches_reference_reconstruction() {
    let (r, g) = (registry(), golden());
    let ae = r.open(&["tiny-vae".into()]).unwrap().remove(0);
    for f in &g.fixtures {
        let x = g.image(f, "x").unwrap();
        let want = g.image(f, "reconstruction").unwrap();
        let got = ae.reconstruct(&x).unwrap();
        assert!(got.max_abs_diff(&want) <= 1e-3, "{}: {}", f.name, got.max_abs_diff(&want));
    }
}

#[test]
fn vae_rejects_off_native_geometry() {
    let ae = registry().open(&["tiny-vae".into()]).unwrap().remove(0);
    assert!(ae.reconstruct(&synth::texture(48, 1)).is_err());
}

#[test]
fn fixture_pair_is_our_gaussian_blur() {
    let g = golden();
    let f = &g.fixtures[0];
    let x = g.image(f, "x").unwrap();
    let y = g.image(f, "y").unwrap();
    let ours = apply_lowpass(&x, &FilterSpec::default()).unwrap();
    assert!(ours.max_abs_diff(&y) < 1e-5);
}

#[test]
fn lpips_matches_reference_values() {
    let (r, g) = (registry(), golden());
    let lp = lpips(&r);
    for f in &g.fixtures {
        let x = g.image(f, "x").unwrap();
        let y = g.image(f, "y").unwrap();
        let terms = lp.stage_terms(&x, &y).unwrap();
        let want = f.lpips_layers.as_ref().unwrap();
        for j in 0..LPIPS_STAGES {
            assert!((terms[j] - want[j]).abs() < 1e-4, "stage {}: {} vs {}", j + 1, terms[j], want[j]);
        }
        let d = Distances::with_lpips(lpips(&r));
        let full = d.distance(&x, &y, DistanceKind::LpipsFull).unwrap();
        assert!((full - f.lpips_full.unwrap()).abs() < 1e-4);
        let sum: f64 = (1..=5).map(|j| d.distance(&x, &y, DistanceKind::LpipsLayer(j)).unwrap()).sum();
        assert!((full - sum).abs() < 1e-6);
        assert_eq!(d.distance(&x, &x, DistanceKind::LpipsFull).unwrap(), 0.0);
    }
}

#[test]
fn lpips_channel_counts_match_index() {
    let (r, g) = (registry(), golden());
    let stack = lpips(&r).extract_features(&synth::texture(32, 2)).unwrap();
    assert_eq!(stack.channel_counts(), g.channels);
}

#[test]
fn hfi_with_lpips2_on_neural_handle() {
    let r = registry();
    let ae = r.open(&["tiny-vae".into()]).unwrap().remove(0);
    let d = Distances::with_lpips(lpips(&r));
    let flat = hfi::ImageTensor::filled(3, 32, 32, 0.4);
    let x = synth::texture(32, 8);
    let v = hfi_score(&x, &ae, &d, DistanceKind::LpipsLayer(2), &FilterSpec::default()).unwrap();
    assert!(v.is_finite());
    let id = FilterSpec::Identity;
    assert_eq!(hfi_score(&x, &ae, &d, DistanceKind::LpipsLayer(2), &id).unwrap(), 0.0);
    assert_eq!(hfi_score(&flat, &ae, &d, DistanceKind::LpipsFull, &FilterSpec::default()).unwrap(), 0.0);
}

#[test]
fn corrupted_golden_blob_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["tiny_golden.json", "tiny_golden_x.f32", "tiny_golden_y.f32", "tiny_golden_recon.f32"] {
        std::fs::copy(common::fixtures().join(name), dir.path().join(name)).unwrap();
    }
    let mut bytes = std::fs::read(dir.path().join("tiny_golden_x.f32")).unwrap();
    bytes[0] ^= 1;
    std::fs::write(dir.path().join("tiny_golden_x.f32"), bytes).unwrap();
    let g = GoldenIndex::load(&dir.path().join("tiny_golden.json")).unwrap();
    assert!(g.image(&g.fixtures[0], "x").is_err());
}

/// Real-asset check; skipped unless both env vars are set.
#[test]
fn real_assets_match_golden_fixtures() {
    let (Some(index), Some(reg)) = (std::env::var_os("HFI_GOLDEN"), std::env::var_os("HFI_REGISTRY")) else {
        eprintln!("HFI_GOLDEN / HFI_REGISTRY not set; skipping real-asset checks");
        return;
    };
    let g = GoldenIndex::load(&PathBuf::from(index)).unwrap();
    let r = load_registry(&PathBuf::from(reg)).unwrap();
    let lp = lpips(&r);
    for f in &g.fixtures {
        let x = g.image(f, "x").unwrap();
        if let (Some(_), Some(layers)) = (&f.y, &f.lpips_layers) {
            let y = g.image(f, "y").unwrap();
            let terms = lp.stage_terms(&x, &y).unwrap();
            for j in 0..LPIPS_STAGES {
                assert!((terms[j] - layers[j]).abs() < 1e-4, "{} stage {}", f.name, j + 1);
            }
            assert!((terms.iter().sum::<f64>() - f.lpips_full.unwrap()).abs() < 1e-4);
        }
        if f.reconstruction.is_some() {
            let want = g.image(f, "reconstruction").unwrap();
            let neural: Vec<_> = r.reconstructors.iter().filter(|h| !h.is_classical() && h.native_side == g.side).collect();
            for h in neural {
                let ae = hfi::Reconstructor::open(h.clone()).unwrap();
                let got = ae.reconstruct(&x).unwrap();
                if got.max_abs_diff(&want) <= 1e-3 {
                    return;
                }
            }
            panic!("no registered neural handle reproduces fixture `{}`", f.name);
        }
    }
}
