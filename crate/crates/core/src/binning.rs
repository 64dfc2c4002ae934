//! Confidence-based partitions of a sample set.
//!
//! Equal-width bins split `[0, 1]` at `k / B` and back the classic ECE.
//! Equal-count bins sort samples by `(confidence, original index)` and cut the
//! sorted order into `B` runs whose sizes differ by at most one; they back the
//! per-bin temperature fit and the equal-count ECE. Equal-count partitions keep
//! midpoint boundaries so that unseen samples can be placed into the bins
//! learned on another split.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinMode {
    EqualWidth,
    EqualCount,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinPartition {
    pub mode: BinMode,
    pub num_bins: usize,
    /// Bin index of each sample, in input order.
    pub assignments: Vec<usize>,
    /// `num_bins - 1` non-decreasing interior thresholds.
    pub boundaries: Vec<f64>,
}

impl BinPartition {
    /// Sample indices of each bin, ascending within a bin.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_bins];
        for (i, &b) in self.assignments.iter().enumerate() {
            out[b].push(i);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.num_bins];
        for &b in &self.assignments {
            out[b] += 1;
        }
        out
    }
}

fn check_confidences(confidences: &[f64]) -> Result<()> {
    match confidences.iter().position(|c| !(0.0..=1.0).contains(c)) {
        Some(i) => Err(Error::InvalidInput(format!(
            "confidence {} at sample {i} is outside [0, 1]",
            confidences[i]
        ))),
        None => Ok(()),
    }
}

/// Lower edge of equal-width bin `k` out of `num_bins`.
pub fn equal_width_edge(k: usize, num_bins: usize) -> f64 {
    k as f64 / num_bins as f64
}

/// Bin of `p` among `num_bins` left-closed equal-width bins; `1.0` lands in the last.
pub fn equal_width_bin(p: f64, num_bins: usize) -> usize {
    let mut k = ((p * num_bins as f64).floor().max(0.0) as usize).min(num_bins - 1);
    // `p * B` may round across an edge; settle against the edges themselves.
    if k > 0 && p < equal_width_edge(k, num_bins) {
        k -= 1;
    } else if k + 1 < num_bins && p >= equal_width_edge(k + 1, num_bins) {
        k += 1;
    }
    k
}

pub fn equal_width_partition(confidences: &[f64], num_bins: usize) -> Result<BinPartition> {
    if num_bins == 0 {
        return Err(Error::invalid_argument("bins", "must be at least 1"));
    }
    check_confidences(confidences)?;
    Ok(BinPartition {
        mode: BinMode::EqualWidth,
        num_bins,
        assignments: confidences
            .iter()
            .map(|&p| equal_width_bin(p, num_bins))
            .collect(),
        boundaries: (1..num_bins)
            .map(|k| equal_width_edge(k, num_bins))
            .collect(),
    })
}

/// Sample indices ordered by `(confidence, index)`.
pub(crate) fn confidence_order(confidences: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..confidences.len()).collect();
    order.sort_by(|&a, &b| confidences[a].total_cmp(&confidences[b]).then(a.cmp(&b)));
    order
}

/// Sizes of `num_bins` equal-count bins over `n` samples: the first `n % B`
/// bins take one extra sample.
pub fn equal_count_sizes(n: usize, num_bins: usize) -> Vec<usize> {
    let (q, r) = (n / num_bins, n % num_bins);
    (0..num_bins).map(|b| q + usize::from(b < r)).collect()
}

/// A threshold strictly below `hi` and at least `lo` (for `lo < hi`).
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= hi {
        lo
    } else {
        mid
    }
}

pub fn equal_count_partition(confidences: &[f64], num_bins: usize) -> Result<BinPartition> {
    let n = confidences.len();
    if num_bins == 0 {
        return Err(Error::invalid_argument("bins", "must be at least 1"));
    }
    if num_bins > n {
        return Err(Error::invalid_argument(
            "bins",
            format!("{num_bins} equal-count bins need at least {num_bins} samples, got {n}"),
        ));
    }
    check_confidences(confidences)?;

    let order = confidence_order(confidences);
    let mut assignments = vec![0; n];
    let mut boundaries = Vec::with_capacity(num_bins - 1);
    let mut start = 0;
    for (b, size) in equal_count_sizes(n, num_bins).into_iter().enumerate() {
        for &i in &order[start..start + size] {
            assignments[i] = b;
        }
        start += size;
        if b + 1 < num_bins {
            let hi_of_bin = confidences[order[start - 1]];
            let lo_of_next = confidences[order[start]];
            boundaries.push(midpoint(hi_of_bin, lo_of_next));
        }
    }

    Ok(BinPartition {
        mode: BinMode::EqualCount,
        num_bins,
        assignments,
        boundaries,
    })
}

/// Place a confidence into the bins described by `boundaries`: the smallest
/// `k` with `confidence <= boundaries[k]`, otherwise the last bin.
pub fn assign_by_boundaries(boundaries: &[f64], confidence: f64) -> usize {
    boundaries.partition_point(|&b| b < confidence)
}
