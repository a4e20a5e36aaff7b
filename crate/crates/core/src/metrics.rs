//! Threshold-free separability metrics and rank aggregation.
//!
//! Convention: `pos` holds scores of the positive class, which is expected to
//! score higher.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Area under the ROC curve in Mann–Whitney form: ties earn half credit.
pub fn auroc(pos: &[f64], neg: &[f64]) -> Result<f64> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::param("auroc needs non-empty positive and negative lists"));
    }
    let mut all: Vec<(f64, bool)> =
        pos.iter().map(|&s| (s, true)).chain(neg.iter().map(|&s| (s, false))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // U = Σ over positives of (#negatives below + ½ #negatives tied).
    let mut u = 0.0;
    let mut neg_below = 0usize;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let group = &all[i..j];
        let p = group.iter().filter(|e| e.1).count();
        let n = group.len() - p;
        u += p as f64 * neg_below as f64 + 0.5 * (p * n) as f64;
        neg_below += n;
        i = j;
    }
    Ok(u / (pos.len() as f64 * neg.len() as f64))
}

/// Non-interpolated average precision. Scores are swept from high to low;
/// equal scores form one threshold group.
pub fn aupr(pos: &[f64], neg: &[f64]) -> Result<f64> {
    if pos.is_empty() {
        return Err(Error::param("aupr needs at least one positive"));
    }
    let mut all: Vec<(f64, bool)> =
        pos.iter().map(|&s| (s, true)).chain(neg.iter().map(|&s| (s, false))).collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));
    let total = pos.len() as f64;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut ap = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        let before = tp;
        while j < all.len() && all[j].0 == all[i].0 {
            if all[j].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            j += 1;
        }
        let gained = tp - before;
        if gained > 0 {
            ap += (gained as f64 / total) * (tp as f64 / (tp + fp) as f64);
        }
        i = j;
    }
    Ok(ap)
}

/// Mean rank of each method across tasks. `values[m][t]` is method `m`'s
/// metric on task `t`; higher is better, rank 1 is best, ties share the mean
/// of the ranks they span.
#[allow(clippy::needless_range_loop)]
pub fn average_rank(values: &[Vec<f64>]) -> Result<Vec<f64>> {
    let methods = values.len();
    if methods == 0 {
        return Ok(Vec::new());
    }
    let tasks = values[0].len();
    if tasks == 0 || values.iter().any(|row| row.len() != tasks) {
        return Err(Error::param("every method needs a value for every task"));
    }
    let mut sums = vec![0.0; methods];
    for t in 0..tasks {
        let mut order: Vec<usize> = (0..methods).collect();
        order.sort_by(|&a, &b| values[b][t].total_cmp(&values[a][t]));
        let mut i = 0;
        while i < methods {
            let mut j = i;
            while j < methods && values[order[j]][t] == values[order[i]][t] {
                j += 1;
            }
            // Ranks i+1 ..= j share their mean.
            let rank = (i + 1 + j) as f64 / 2.0;
            for &m in &order[i..j] {
                sums[m] += rank;
            }
            i = j;
        }
    }
    Ok(sums.into_iter().map(|s| s / tasks as f64).collect())
}

/// Fixed-width histogram; `edges` has one more entry than `counts`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Bins `values` into `bins` equal-width bins spanning `[lo, hi]`; the
    /// last bin is closed on the right.
    pub fn new(values: &[f64], bins: usize, lo: f64, hi: f64) -> Self {
        let bins = bins.max(1);
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            if v < lo || v > hi {
                continue;
            }
            let idx = (((v - lo) / width) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        Self { edges, counts }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc(&[0.9, 0.8], &[0.1, 0.2]).unwrap(), 1.0);
        assert_eq!(auroc(&[0.5, 0.5], &[0.5]).unwrap(), 0.5);
        assert_eq!(auroc(&[3.0, 1.0], &[2.0, 0.0]).unwrap(), 0.75);
        assert!(auroc(&[], &[1.0]).is_err());
        assert!(auroc(&[1.0], &[]).is_err());
    }

    #[test]
    fn aupr_examples() {
        assert_eq!(aupr(&[0.9, 0.8], &[0.1]).unwrap(), 1.0);
        assert_eq!(aupr(&[0.9], &[0.95, 0.8]).unwrap(), 0.5);
        assert_eq!(aupr(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), 0.5);
        assert!(aupr(&[], &[1.0]).is_err());
    }

    #[test]
    fn average_rank_examples() {
        assert_eq!(average_rank(&[vec![0.3, 0.9]]).unwrap(), vec![1.0]);
        assert_eq!(average_rank(&[vec![0.9], vec![0.8]]).unwrap(), vec![1.0, 2.0]);
        assert_eq!(average_rank(&[vec![0.5, 0.9], vec![0.5, 0.8]]).unwrap(), vec![1.25, 1.75]);
        assert!(average_rank(&[vec![0.5, 0.9], vec![0.5]]).is_err());
    }

    #[test]
    fn histogram_binning() {
        let h = Histogram::new(&[0.0, 0.1, 0.5, 1.0, 2.0], 2, 0.0, 1.0);
        assert_eq!(h.edges, vec![0.0, 0.5, 1.0]);
        assert_eq!(h.counts, vec![2, 2]);
        let flat = Histogram::new(&[3.0, 3.0], 4, 3.0, 3.0);
        assert_eq!(flat.counts.iter().sum::<usize>(), 2);
    }
}
