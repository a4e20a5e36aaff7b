#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn tiny_registry() -> PathBuf {
    fixtures().join("tiny_registry.toml")
}

/// All-pairs AUROC: a win counts 1, a tie ½.
pub fn auroc_oracle(pos: &[f64], neg: &[f64]) -> f64 {
    let mut u = 0.0;
    for &p in pos {
        for &n in neg {
            if p > n {
                u += 1.0;
            } else if p == n {
                u += 0.5;
            }
        }
    }
    u / (pos.len() as f64 * neg.len() as f64)
}

/// Average precision by enumerating every distinct score as a threshold,
/// counting from scratch at each one.
pub fn aupr_oracle(pos: &[f64], neg: &[f64]) -> f64 {
    let mut thresholds: Vec<f64> = pos.iter().chain(neg).copied().collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let mut ap = 0.0;
    let mut prev_tp = 0usize;
    for t in thresholds {
        let tp = pos.iter().filter(|&&s| s >= t).count();
        let fp = neg.iter().filter(|&&s| s >= t).count();
        if tp > prev_tp {
            ap += ((tp - prev_tp) as f64 / pos.len() as f64) * (tp as f64 / (tp + fp) as f64);
        }
        prev_tp = tp;
    }
    ap
}

/// Scores drawn from a small integer alphabet so duplicates are common.
pub fn random_lists(rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>) {
    let alphabet = rng.gen_range(2..12);
    let draw = |rng: &mut dyn rand::RngCore| {
        let n = rng.gen_range(1..=50);
        (0..n).map(|_| rng.gen_range(0..alphabet) as f64 * 0.25).collect::<Vec<f64>>()
    };
    let pos = draw(rng);
    let neg = draw(rng);
    (pos, neg)
}
