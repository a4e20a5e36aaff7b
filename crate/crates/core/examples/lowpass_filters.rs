//! The low-pass family and how much high-frequency energy each removes.

use hfi::filters::{apply_lowpass, highpass_residual};
use hfi::{synth, FilterSpec};

fn main() -> hfi::Result<()> {
    let x = synth::texture(64, 3);
    let energy = |img: &hfi::ImageTensor| img.samples().iter().map(|v| v * v).sum::<f64>();
    let mut filters = FilterSpec::ablation_set();
    filters.extend(FilterSpec::gaussian_grid());
    for f in filters {
        let low = apply_lowpass(&x, &f)?;
        let high = highpass_residual(&x, &f)?;
        println!("{:<36} linear={:<5} residual energy {:>10.4}  low-pass mean {:.4}", f, f.is_linear(), energy(&high), low.samples().iter().sum::<f64>() / low.samples().len() as f64);
    }
    let parsed: FilterSpec = "gaussian:k=5,sigma=1.1".parse()?;
    println!("parsed {parsed:?} back to `{parsed}`");
    Ok(())
}
