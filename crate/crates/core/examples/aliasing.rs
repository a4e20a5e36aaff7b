//! Decimation without a prefilter folds a checkerboard into a flat image;
//! a gaussian prefilter keeps fine detail from aliasing.

use hfi::{ImageTensor, Reconstructor, ReconstructorHandle, FilterSpec, Upsample};

fn main() -> hfi::Result<()> {
    let board = ImageTensor::from_fn(3, 16, 16, |_, y, x| ((x + y) % 2) as f64);
    for (name, prefilter) in [("no prefilter", None), ("gaussian prefilter", Some(FilterSpec::default()))] {
        for up in [Upsample::Nearest, Upsample::Bilinear, Upsample::Bicubic] {
            let ae = Reconstructor::open(ReconstructorHandle::classical("s2", 16, 2, prefilter, up)?)?;
            let out = ae.reconstruct(&board)?;
            let (lo, hi) = out.samples().iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
            println!("{name:<20} {up:<9} output range [{lo:.4}, {hi:.4}]");
        }
    }
    Ok(())
}
