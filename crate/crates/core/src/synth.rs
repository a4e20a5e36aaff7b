//! Seeded synthetic texture corpus for desk-scale experiments.
//!
//! Each texture mixes a smooth multi-octave value-noise field, a few
//! hard-edged shapes and fine per-pixel grain, so it carries energy at every
//! scale, including above the Nyquist rate of an `8×` latent grid.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imaging::{pad_constant, ImageTensor};
use crate::reconstruct::Reconstructor;

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Value noise with lattice spacing `cell`, values in `[-1, 1]`.
fn value_noise(rng: &mut ChaCha8Rng, side: usize, cell: usize) -> Vec<f64> {
    let n = side / cell + 2;
    let lattice: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut out = Vec::with_capacity(side * side);
    for y in 0..side {
        let fy = y as f64 / cell as f64;
        let (iy, ty) = (fy.floor() as usize, smoothstep(fy.fract()));
        for x in 0..side {
            let fx = x as f64 / cell as f64;
            let (ix, tx) = (fx.floor() as usize, smoothstep(fx.fract()));
            let at = |j: usize, i: usize| lattice[j * n + i];
            let top = at(iy, ix) * (1.0 - tx) + at(iy, ix + 1) * tx;
            let bottom = at(iy + 1, ix) * (1.0 - tx) + at(iy + 1, ix + 1) * tx;
            out.push(top * (1.0 - ty) + bottom * ty);
        }
    }
    out
}

/// One `3 × side × side` texture, fully determined by `seed`.
pub fn texture(side: usize, seed: u64) -> ImageTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut planes = vec![vec![0.0; side * side]; 3];
    let base: Vec<f64> = (0..3).map(|_| rng.gen_range(0.25..0.75)).collect();
    for (p, b) in planes.iter_mut().zip(&base) {
        p.fill(*b);
    }

    // Multi-octave smooth structure, shared luminance plus a weaker tint.
    let mut cell = (side / 2).max(2);
    while cell >= 2 {
        let amp = rng.gen_range(0.02..0.12);
        let field = value_noise(&mut rng, side, cell);
        let tint: Vec<f64> = (0..3).map(|_| rng.gen_range(0.6..1.0)).collect();
        for (p, t) in planes.iter_mut().zip(&tint) {
            for (v, f) in p.iter_mut().zip(&field) {
                *v += amp * t * f;
            }
        }
        cell /= 2;
    }

    // Hard-edged discs and bars.
    for _ in 0..rng.gen_range(1..5) {
        let (cy, cx) = (rng.gen_range(0.0..side as f64), rng.gen_range(0.0..side as f64));
        let r = rng.gen_range(side as f64 / 10.0..side as f64 / 3.0);
        let shift: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.2..0.2)).collect();
        let disc = rng.gen_bool(0.5);
        for y in 0..side {
            for x in 0..side {
                let (dy, dx) = (y as f64 - cy, x as f64 - cx);
                let inside = if disc { dy * dy + dx * dx < r * r } else { dy.abs() < r / 3.0 && dx.abs() < r };
                if inside {
                    for (p, s) in planes.iter_mut().zip(&shift) {
                        p[y * side + x] += s;
                    }
                }
            }
        }
    }

    // Fine grain.
    let grain = rng.gen_range(0.03..0.12);
    for p in &mut planes {
        for v in p.iter_mut() {
            *v += grain * rng.gen_range(-1.0..1.0);
        }
    }

    let samples = planes.into_iter().flatten().map(|v: f64| v.clamp(0.0, 1.0)).collect();
    ImageTensor::new(3, side, side, samples).expect("texture geometry")
}

/// `count` textures with seeds `seed, seed + 1, …`.
pub fn textures(side: usize, count: usize, seed: u64) -> Vec<ImageTensor> {
    (0..count as u64).map(|i| texture(side, seed.wrapping_add(i))).collect()
}

/// Surrounds a texture with a flat border of `border` pixels whose gray level
/// is drawn from `seed`, simulating a simple background.
pub fn with_flat_background(img: &ImageTensor, border: usize, seed: u64) -> ImageTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    pad_constant(img, border, rng.gen_range(0.2..0.8))
}

/// Writes a labeled PNG corpus plus `manifest.csv` to `dir`: `count` real
/// textures and, for every autoencoder, their reconstructions tagged with
/// the autoencoder id as the generating model.
pub fn write_corpus(dir: &Path, side: usize, count: usize, seed: u64, generators: &[Reconstructor]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = csv::Writer::from_path(dir.join("manifest.csv"))?;
    manifest.write_record(["path", "label", "source_model"])?;
    for (i, x) in textures(side, count, seed).iter().enumerate() {
        let name = format!("real_{i:04}.png");
        std::fs::write(dir.join(&name), x.encode_png()?).map_err(|e| Error::io(dir.join(&name), e))?;
        manifest.write_record([name.as_str(), "real", "real"])?;
        for g in generators {
            let name = format!("{}_{i:04}.png", g.id());
            let y = g.reconstruct(x)?;
            std::fs::write(dir.join(&name), y.encode_png()?).map_err(|e| Error::io(dir.join(&name), e))?;
            manifest.write_record([name.as_str(), "generated", g.id()])?;
        }
    }
    manifest.flush().map_err(|e| Error::io(dir.join("manifest.csv"), e))?;
    Ok(())
}
