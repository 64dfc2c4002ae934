//! Post-hoc temperature-scaling calibration for long-tailed classifiers.
//!
//! The crate works on exported logits. It fits four calibrators (a single
//! temperature, per-class temperatures, per-confidence-bin temperatures over
//! equal-count bins, and a dual-branch fusion of the last two) and measures
//! calibration with equal-width ECE, equal-count ECE, NLL and accuracy.
//!
//! Module map:
//! - [`math`]: softmax, log-softmax, NLL, temperature scaling, argmax.
//! - [`data`]: datasets, CSV I/O, splits, per-class statistics, synthetic data.
//! - [`binning`]: equal-width and equal-count confidence partitions.
//! - [`metrics`]: accuracy, NLL, ECE, equal-count ECE, reliability rows, reports.
//! - [`optim`]: NLL objective over log-temperatures and an L-BFGS minimizer.
//! - [`calibrate`]: the temperature models, their fitting and application.

pub mod binning;
pub mod calibrate;
pub mod data;
pub mod error;
pub mod math;
pub mod metrics;
pub mod optim;

pub use binning::{BinMode, BinPartition};
pub use calibrate::{AssignmentMode, FusionMode, TemperatureModel};
pub use data::{LogitRecord, LogitsDataset, SynthConfig};
pub use error::{Error, Result};
pub use math::{LogitVector, ProbVector};
pub use metrics::CalibrationReport;
pub use optim::{FitOptions, FitOutcome};
