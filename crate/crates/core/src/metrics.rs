//! Calibration metrics over a dataset and its (possibly calibrated) predictions.
//!
//! Both calibration errors are computed from [`ReliabilityRow`]s: the per-bin
//! rows are the single source of truth, and ECE is
//! `sum_b (count_b / N) * |acc_b - conf_b| * 100` over them. Equal-width bins
//! give the classic ECE; equal-count bins give the equal-count ECE, in which
//! every bin holds the same number of samples (within one).

use serde::{Deserialize, Serialize};

use crate::binning::{
    equal_count_partition, equal_width_edge, equal_width_partition, BinMode, BinPartition,
};
use crate::data::{imbalance_factor, LogitsDataset};
use crate::error::{Error, Result};
use crate::math::{nll_unchecked, softmax, LogitVector, ProbVector};

/// Default bin count for both calibration errors.
pub const DEFAULT_METRIC_BINS: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityRow {
    pub bin: usize,
    pub count: usize,
    #[serde(rename = "accuracy")]
    pub acc: f64,
    #[serde(rename = "confidence")]
    pub conf: f64,
    /// Bin edges for equal-width bins, min/max member confidence for equal-count bins.
    pub lo: f64,
    pub hi: f64,
}

fn check_len(ds: &LogitsDataset, n: usize, what: &str) -> Result<()> {
    if ds.len() != n {
        return Err(Error::InvalidInput(format!(
            "{n} {what} for a dataset of {} records",
            ds.len()
        )));
    }
    Ok(())
}

fn check_probs(ds: &LogitsDataset, probs: &[ProbVector]) -> Result<()> {
    check_len(ds, probs.len(), "probability vectors")?;
    if let Some(i) = probs.iter().position(|p| p.len() != ds.num_classes()) {
        return Err(Error::DimensionMismatch(format!(
            "probability vector {i} has {} entries, dataset has {} classes",
            probs[i].len(),
            ds.num_classes()
        )));
    }
    Ok(())
}

/// Fraction of records whose argmax (lowest index on ties) equals the label.
pub fn accuracy(ds: &LogitsDataset, probs: &[ProbVector]) -> Result<f64> {
    check_probs(ds, probs)?;
    let correct = ds
        .labels()
        .zip(probs)
        .filter(|(y, p)| p.prediction().predicted_class == *y)
        .count();
    Ok(correct as f64 / ds.len() as f64)
}

/// Mean negative log-likelihood in nats of the labels under `softmax(logits)`.
pub fn mean_nll(ds: &LogitsDataset, logits: &[LogitVector]) -> Result<f64> {
    check_len(ds, logits.len(), "logit vectors")?;
    let mut total = 0.0;
    for (r, z) in ds.records().iter().zip(logits) {
        if z.len() != ds.num_classes() {
            return Err(Error::DimensionMismatch(format!(
                "logit vector has {} entries, dataset has {} classes",
                z.len(),
                ds.num_classes()
            )));
        }
        total += nll_unchecked(z.as_slice(), r.label);
    }
    Ok(total / ds.len() as f64)
}

pub fn partition(confidences: &[f64], num_bins: usize, mode: BinMode) -> Result<BinPartition> {
    match mode {
        BinMode::EqualWidth => equal_width_partition(confidences, num_bins),
        BinMode::EqualCount => equal_count_partition(confidences, num_bins),
    }
}

/// Per-bin accuracy and confidence.
///
/// Equal-width mode yields one row per non-empty bin; equal-count mode yields
/// one row per bin. Rows are ordered by bin index and each bin's members are
/// accumulated in record order.
pub fn reliability_data(
    ds: &LogitsDataset,
    probs: &[ProbVector],
    num_bins: usize,
    mode: BinMode,
) -> Result<Vec<ReliabilityRow>> {
    check_probs(ds, probs)?;
    let predictions: Vec<_> = probs.iter().map(ProbVector::prediction).collect();
    let confidences: Vec<f64> = predictions.iter().map(|p| p.confidence).collect();
    let part = partition(&confidences, num_bins, mode)?;
    let labels: Vec<usize> = ds.labels().collect();

    let rows = part
        .members()
        .into_iter()
        .enumerate()
        .filter(|(_, members)| !members.is_empty())
        .map(|(bin, members)| {
            let count = members.len();
            let mut correct = 0usize;
            let mut conf_sum = 0.0;
            let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
            for &i in &members {
                correct += usize::from(predictions[i].predicted_class == labels[i]);
                let c = confidences[i];
                conf_sum += c;
                min = min.min(c);
                max = max.max(c);
            }
            let (lo, hi) = match mode {
                BinMode::EqualWidth => (
                    equal_width_edge(bin, num_bins),
                    equal_width_edge(bin + 1, num_bins),
                ),
                BinMode::EqualCount => (min, max),
            };
            ReliabilityRow {
                bin,
                count,
                acc: correct as f64 / count as f64,
                conf: conf_sum / count as f64,
                lo,
                hi,
            }
        })
        .collect();
    Ok(rows)
}

/// `sum_b (count_b / n) * |acc_b - conf_b| * 100`, clamped into `[0, 100]`.
pub fn calibration_gap(rows: &[ReliabilityRow], n: usize) -> f64 {
    let total: f64 = rows
        .iter()
        .map(|r| r.count as f64 / n as f64 * (r.acc - r.conf).abs())
        .sum();
    (total * 100.0).clamp(0.0, 100.0)
}

/// Expected calibration error over `num_bins` equal-width bins, in percent.
pub fn ece(ds: &LogitsDataset, probs: &[ProbVector], num_bins: usize) -> Result<f64> {
    let rows = reliability_data(ds, probs, num_bins, BinMode::EqualWidth)?;
    Ok(calibration_gap(&rows, ds.len()))
}

/// Expected calibration error over `num_bins` equal-count bins, in percent.
pub fn esbin_ece(ds: &LogitsDataset, probs: &[ProbVector], num_bins: usize) -> Result<f64> {
    let rows = reliability_data(ds, probs, num_bins, BinMode::EqualCount)?;
    Ok(calibration_gap(&rows, ds.len()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub n: usize,
    pub c: usize,
    /// Absent when some class has no records.
    pub imbalance_factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub acc: f64,
    /// Percent.
    pub ece: f64,
    /// Percent.
    pub esbin_ece: f64,
    pub nll: f64,
    pub b_metric: usize,
}

impl MetricSummary {
    /// `ACC / ECE / Esbin-ECE / NLL` with accuracy and both errors as
    /// two-decimal percentages and NLL to three decimals.
    pub fn summary_line(&self) -> String {
        format!(
            "{:.2} / {:.2} / {:.2} / {:.3}",
            self.acc * 100.0,
            self.ece,
            self.esbin_ece,
            self.nll
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilitySet {
    pub equal_width: Vec<ReliabilityRow>,
    pub equal_count: Vec<ReliabilityRow>,
}

/// Every metric for one (model, dataset) pair, plus the provenance needed to
/// reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    /// Free-form provenance: model description, seeds, bin counts, modes.
    pub config: serde_json::Value,
    pub dataset: DatasetInfo,
    pub metrics: MetricSummary,
    pub reliability: ReliabilitySet,
}

/// Evaluate calibrated logits (one row per record of `ds`) against the labels.
pub fn evaluate(
    ds: &LogitsDataset,
    calibrated: &[LogitVector],
    b_metric: usize,
    config: serde_json::Value,
) -> Result<CalibrationReport> {
    let probs: Vec<ProbVector> = calibrated.iter().map(softmax).collect();
    let equal_width = reliability_data(ds, &probs, b_metric, BinMode::EqualWidth)?;
    let equal_count = reliability_data(ds, &probs, b_metric, BinMode::EqualCount)?;
    let metrics = MetricSummary {
        acc: accuracy(ds, &probs)?,
        ece: calibration_gap(&equal_width, ds.len()),
        esbin_ece: calibration_gap(&equal_count, ds.len()),
        nll: mean_nll(ds, calibrated)?,
        b_metric,
    };
    Ok(CalibrationReport {
        config,
        dataset: DatasetInfo {
            name: ds.name().to_string(),
            n: ds.len(),
            c: ds.num_classes(),
            imbalance_factor: imbalance_factor(ds).ok(),
        },
        metrics,
        reliability: ReliabilitySet {
            equal_width,
            equal_count,
        },
    })
}

/// Reliability rows as CSV with header `bin,count,acc,conf,lo,hi`.
pub fn reliability_csv(rows: &[ReliabilityRow]) -> String {
    let mut out = String::from("bin,count,acc,conf,lo,hi\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.bin, r.count, r.acc, r.conf, r.lo, r.hi
        ));
    }
    out
}
