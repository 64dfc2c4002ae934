//! Labeled logit datasets and what can be asked of them before calibration.

mod io;
mod synth;

pub use io::{load_csv, save_csv, save_report};
pub use synth::{gen_synthetic, gen_synthetic_calibrated, SynthConfig};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{first_max_index, softmax_slice, LogitVector};

#[derive(Debug, Clone, PartialEq)]
pub struct LogitRecord {
    pub label: usize,
    pub logits: LogitVector,
}

/// A non-empty, ordered collection of records sharing one class count.
///
/// Record order is part of the value: the position of a record is used to
/// break ties whenever samples are sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitsDataset {
    name: String,
    num_classes: usize,
    records: Vec<LogitRecord>,
}

impl LogitsDataset {
    pub fn new(name: impl Into<String>, records: Vec<LogitRecord>) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| Error::InvalidInput("a dataset needs at least one record".into()))?;
        let num_classes = first.logits.len();
        for (i, r) in records.iter().enumerate() {
            if r.logits.len() != num_classes {
                return Err(Error::InvalidInput(format!(
                    "record {i} has {} logits, expected {num_classes}",
                    r.logits.len()
                )));
            }
            if r.label >= num_classes {
                return Err(Error::InvalidInput(format!(
                    "record {i} has label {} but there are only {num_classes} classes",
                    r.label
                )));
            }
        }
        Ok(LogitsDataset {
            name: name.into(),
            num_classes,
            records,
        })
    }

    /// Build from parallel label / logit-row vectors.
    pub fn from_rows(
        name: impl Into<String>,
        labels: &[usize],
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if labels.len() != rows.len() {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} logit rows",
                labels.len(),
                rows.len()
            )));
        }
        let records = labels
            .iter()
            .zip(rows)
            .map(|(&label, row)| {
                Ok(LogitRecord {
                    label,
                    logits: LogitVector::new(row)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(name, records)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    /// Always false; kept for API symmetry with collections.
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[LogitRecord] {
        &self.records
    }

    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.records.iter().map(|r| r.label)
    }

    pub fn logits(&self) -> impl Iterator<Item = &LogitVector> + '_ {
        self.records.iter().map(|r| &r.logits)
    }

    /// Max softmax probability of the raw logits, per record.
    pub fn confidences(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| {
                softmax_slice(r.logits.as_slice())
                    .into_iter()
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for r in &self.records {
            counts[r.label] += 1;
        }
        counts
    }

    /// Copy of the dataset with each logit row replaced by `f(row)`.
    pub fn map_logits<F>(&self, name: impl Into<String>, mut f: F) -> Result<Self>
    where
        F: FnMut(&LogitRecord) -> Vec<f64>,
    {
        let records = self
            .records
            .iter()
            .map(|r| {
                Ok(LogitRecord {
                    label: r.label,
                    logits: LogitVector::new(f(r))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(name, records)
    }

    /// The records at `indices`, in that order.
    pub fn subset(&self, name: impl Into<String>, indices: &[usize]) -> Result<Self> {
        let records = indices
            .iter()
            .map(|&i| {
                self.records
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::InvalidInput(format!("record index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(name, records)
    }
}

/// Per-class record counts of the fit side of a stratified split.
fn stratified_quota(counts: &[usize], fraction: f64, target: usize) -> Vec<usize> {
    let ideal: Vec<f64> = counts.iter().map(|&n| fraction * n as f64).collect();
    let mut quota: Vec<usize> = counts
        .iter()
        .zip(&ideal)
        .map(|(&n, &q)| {
            if n == 0 {
                0
            } else {
                (q.floor() as usize).clamp(1, n)
            }
        })
        .collect();
    let excess = |quota: &[usize], c: usize| quota[c] as f64 - ideal[c];

    let mut total: usize = quota.iter().sum();
    while total < target {
        // Largest shortfall first, lowest class index on ties.
        let Some(c) = (0..counts.len())
            .filter(|&c| quota[c] < counts[c])
            .min_by(|&a, &b| {
                excess(&quota, a)
                    .total_cmp(&excess(&quota, b))
                    .then(a.cmp(&b))
            })
        else {
            break;
        };
        quota[c] += 1;
        total += 1;
    }
    while total > target {
        let Some(c) = (0..counts.len())
            .filter(|&c| quota[c] > 1)
            .max_by(|&a, &b| {
                excess(&quota, a)
                    .total_cmp(&excess(&quota, b))
                    .then(b.cmp(&a))
            })
        else {
            break;
        };
        quota[c] -= 1;
        total -= 1;
    }
    quota
}

/// Seeded, class-stratified split into `(fit, eval)`.
///
/// The fit side receives `round(fraction * N)` records (adjusted when needed so
/// that every class present in the data has at least one fit record). Both
/// sides come out in the order of a seeded shuffle.
pub fn split(
    ds: &LogitsDataset,
    fraction: f64,
    seed: u64,
) -> Result<(LogitsDataset, LogitsDataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid_argument(
            "fraction",
            format!("must lie strictly between 0 and 1, got {fraction}"),
        ));
    }
    let n = ds.len();
    let target = (fraction * n as f64).round() as usize;
    let mut quota = stratified_quota(&ds.class_counts(), fraction, target);
    let fit_size: usize = quota.iter().sum();
    if fit_size == 0 || fit_size >= n {
        return Err(Error::invalid_argument(
            "fraction",
            format!("fraction {fraction} of {n} records leaves one side of the split empty"),
        ));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (mut fit, mut eval) = (
        Vec::with_capacity(fit_size),
        Vec::with_capacity(n - fit_size),
    );
    for i in order {
        let label = ds.records[i].label;
        if quota[label] > 0 {
            quota[label] -= 1;
            fit.push(i);
        } else {
            eval.push(i);
        }
    }
    Ok((
        ds.subset(format!("{}-fit", ds.name), &fit)?,
        ds.subset(format!("{}-eval", ds.name), &eval)?,
    ))
}

/// Largest class count over smallest.
pub fn imbalance_factor(ds: &LogitsDataset) -> Result<f64> {
    let counts = ds.class_counts();
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::InvalidInput(format!(
            "imbalance factor undefined: class {c} has no samples"
        )));
    }
    let max = *counts.iter().max().unwrap_or(&0);
    let min = *counts.iter().min().unwrap_or(&0);
    Ok(max as f64 / min as f64)
}

/// Which records a class's accuracy and confidence are averaged over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grouping {
    /// Records whose argmax is the class (the key used at calibration time).
    #[default]
    Predicted,
    /// Records whose label is the class.
    True,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassStat {
    pub class: usize,
    /// Records labeled with this class.
    pub count: usize,
    /// Records in this class's group under the chosen [`Grouping`].
    pub group_size: usize,
    /// Fraction of the group whose prediction equals its label.
    pub accuracy: Option<f64>,
    pub mean_confidence: Option<f64>,
    pub mean_max_logit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassStats {
    pub grouping: Grouping,
    pub classes: Vec<ClassStat>,
}

pub fn class_stats(ds: &LogitsDataset) -> ClassStats {
    class_stats_by(ds, Grouping::Predicted)
}

pub fn class_stats_by(ds: &LogitsDataset, grouping: Grouping) -> ClassStats {
    let c = ds.num_classes;
    let counts = ds.class_counts();
    let mut size = vec![0usize; c];
    let mut correct = vec![0usize; c];
    let mut conf = vec![0.0; c];
    let mut max_logit = vec![0.0; c];
    for r in &ds.records {
        let z = r.logits.as_slice();
        let p = softmax_slice(z);
        let pred = first_max_index(&p);
        let key = match grouping {
            Grouping::Predicted => pred,
            Grouping::True => r.label,
        };
        size[key] += 1;
        correct[key] += usize::from(pred == r.label);
        conf[key] += p[pred];
        max_logit[key] += r.logits.max();
    }
    let mean = |sum: f64, k: usize| (k > 0).then(|| sum / k as f64);
    let classes = (0..c)
        .map(|k| ClassStat {
            class: k,
            count: counts[k],
            group_size: size[k],
            accuracy: mean(correct[k] as f64, size[k]),
            mean_confidence: mean(conf[k], size[k]),
            mean_max_logit: mean(max_logit[k], size[k]),
        })
        .collect();
    ClassStats { grouping, classes }
}
