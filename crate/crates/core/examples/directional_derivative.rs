//! HFI as a directional derivative: finite differences along x − F(x)
//! converge linearly to the closed form for a linear autoencoder.

use hfi::scoring::{hfi_directional, hfi_directional_analytic, hfi_score};
use hfi::{synth, DistanceKind, Distances, FilterSpec, Reconstructor, ReconstructorHandle, Upsample};

fn main() -> hfi::Result<()> {
    let ae = Reconstructor::open(ReconstructorHandle::classical("lin", 32, 4, Some(FilterSpec::default()), Upsample::Bilinear)?)?;
    let f = FilterSpec::default();
    let x = synth::texture(32, 5);
    let exact = hfi_directional_analytic(&x, &ae, &f)?;
    println!("analytic {exact:.10}");
    for eps in [1.0, 1e-1, 1e-2, 1e-3, 1e-4] {
        let est = hfi_directional(&x, &ae, &f, eps)?;
        println!("eps {eps:<7} estimate {est:.10}  error {:.3e}", (est - exact).abs());
    }
    let hfi = hfi_score(&x, &ae, &Distances::pixel_only(), DistanceKind::Mse, &f)?;
    println!("HFI {hfi:.10} (equals the eps = 1 estimate)");
    Ok(())
}
