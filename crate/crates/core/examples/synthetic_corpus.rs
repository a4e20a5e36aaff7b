//! Writes a labeled PNG corpus and manifest that `hfi eval` can read.
//!
//! cargo run --example synthetic_corpus <out-dir>

use hfi::{Reconstructor, ReconstructorHandle};

fn main() -> hfi::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "synthetic-corpus".into());
    let gens: Vec<Reconstructor> = ReconstructorHandle::classical_suite(64)
        .into_iter()
        .take(2)
        .map(Reconstructor::open)
        .collect::<hfi::Result<_>>()?;
    hfi::synth::write_corpus(dir.as_ref(), 64, 20, 42, &gens)?;
    println!("wrote {dir}/manifest.csv");
    Ok(())
}
