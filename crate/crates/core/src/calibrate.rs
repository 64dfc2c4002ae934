//! Temperature models: fitting on one split, application to another.
//!
//! Four variants are supported:
//!
//! * `Scalar`: every logit of every sample is divided by one temperature.
//! * `ClassWise`: logit `j` of every sample is divided by `T_j`. Because the
//!   divisors differ across classes, this variant can change the argmax.
//! * `BinWise`: samples are grouped into equal-count bins by their raw
//!   confidence and each bin has one temperature. Boundaries learned on the
//!   fit split place unseen samples (or the evaluation set is re-partitioned
//!   on its own, see [`AssignmentMode::Resort`]).
//! * `Dual`: both branches at once. Logit `j` of a sample in bin `b` is divided
//!   by `T_j^(1/alpha) * T_b^(1/(2 - alpha))` with `alpha` in `(0, 2)`.
//!
//! Temperatures are fitted in log space inside
//! [`MIN_TEMPERATURE`]`..=`[`MAX_TEMPERATURE`]. A temperature that ends on
//! either bound is reported as a warning in the [`FitReport`]. Because the
//! bound applies during the fit rather than afterwards, a scalar fit is always
//! a feasible class-wise fit, so class-wise NLL never exceeds scalar NLL.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binning::{assign_by_boundaries, equal_count_partition};
use crate::data::LogitsDataset;
use crate::error::{Error, Result};
use crate::math::{first_max_index, softmax, softmax_slice, LogitVector, ProbVector};
use crate::metrics::{self, CalibrationReport};
use crate::optim::{minimize_within, nll_objective, FitOptions, FitOutcome, Structure};

pub const MIN_TEMPERATURE: f64 = 0.05;
pub const MAX_TEMPERATURE: f64 = 50.0;
/// Equal-count bins used by the per-bin branch unless told otherwise.
pub const DEFAULT_FIT_BINS: usize = 15;
pub const DEFAULT_ALPHA: f64 = 1.0;

/// How the class branch enters a dual model's divisor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FusionMode {
    /// Every class logit gets its own class temperature.
    #[default]
    Elementwise,
    /// One divisor per sample, built from the temperature of the predicted class.
    PredictedClass,
}

/// How evaluation samples are placed into the bins of a per-bin model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssignmentMode {
    /// Use the thresholds learned on the fit split; each sample is placed
    /// independently of the others.
    #[default]
    Boundaries,
    /// Re-partition the evaluated set into equal-count bins of its own.
    Resort,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinTemperatures {
    pub temperatures: Vec<f64>,
    pub boundaries: Vec<f64>,
    pub assignment: AssignmentMode,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Variant {
    Scalar {
        temperature: f64,
    },
    ClassWise {
        temperatures: Vec<f64>,
    },
    BinWise(BinTemperatures),
    Dual {
        class_temperatures: Vec<f64>,
        bins: BinTemperatures,
        alpha: f64,
        fusion: FusionMode,
    },
}

/// A fitted temperature model for `num_classes`-way logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub struct TemperatureModel {
    num_classes: usize,
    variant: Variant,
}

fn check_temperatures(temps: &[f64]) -> Result<()> {
    match temps.iter().position(|t| !(t.is_finite() && *t > 0.0)) {
        Some(index) => Err(Error::InvalidTemperature {
            index,
            value: temps[index],
        }),
        None => Ok(()),
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::invalid_argument(
            "alpha",
            format!("must lie strictly between 0 and 2, got {alpha}"),
        ))
    }
}

fn check_classes(num_classes: usize) -> Result<()> {
    if num_classes < 2 {
        return Err(Error::invalid_argument(
            "C",
            format!("must be >= 2, got {num_classes}"),
        ));
    }
    Ok(())
}

impl BinTemperatures {
    fn validate(&self) -> Result<()> {
        if self.temperatures.is_empty() {
            return Err(Error::invalid_argument(
                "bin_temps",
                "at least one bin is required",
            ));
        }
        check_temperatures(&self.temperatures)?;
        if self.boundaries.len() + 1 != self.temperatures.len() {
            return Err(Error::invalid_argument(
                "boundaries",
                format!(
                    "{} bins need {} boundaries, got {}",
                    self.temperatures.len(),
                    self.temperatures.len() - 1,
                    self.boundaries.len()
                ),
            ));
        }
        if self.boundaries.iter().any(|b| !(0.0..=1.0).contains(b))
            || self.boundaries.windows(2).any(|w| w[0] > w[1])
        {
            return Err(Error::invalid_argument(
                "boundaries",
                "must be non-decreasing values in [0, 1]",
            ));
        }
        Ok(())
    }

    pub fn num_bins(&self) -> usize {
        self.temperatures.len()
    }
}

/// `t^(1/degree)`, exact when `degree` is 1.
fn root(t: f64, degree: f64) -> f64 {
    if degree == 1.0 {
        t
    } else {
        t.powf(1.0 / degree)
    }
}

impl TemperatureModel {
    pub fn scalar(num_classes: usize, temperature: f64) -> Result<Self> {
        check_classes(num_classes)?;
        check_temperatures(&[temperature])?;
        Ok(TemperatureModel {
            num_classes,
            variant: Variant::Scalar { temperature },
        })
    }

    pub fn class_wise(temperatures: Vec<f64>) -> Result<Self> {
        check_classes(temperatures.len())?;
        check_temperatures(&temperatures)?;
        Ok(TemperatureModel {
            num_classes: temperatures.len(),
            variant: Variant::ClassWise { temperatures },
        })
    }

    pub fn bin_wise(
        num_classes: usize,
        temperatures: Vec<f64>,
        boundaries: Vec<f64>,
        assignment: AssignmentMode,
    ) -> Result<Self> {
        check_classes(num_classes)?;
        let bins = BinTemperatures {
            temperatures,
            boundaries,
            assignment,
        };
        bins.validate()?;
        Ok(TemperatureModel {
            num_classes,
            variant: Variant::BinWise(bins),
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn variant(&self) -> &Variant {
        &self.variant
    }

    /// The variant tag used in model files.
    pub fn kind(&self) -> &'static str {
        match self.variant {
            Variant::Scalar { .. } => "Scalar",
            Variant::ClassWise { .. } => "ClassWise",
            Variant::BinWise(_) => "BinWise",
            Variant::Dual { .. } => "Dual",
        }
    }

    /// Same model with a different test-time bin assignment rule. No-op for
    /// variants without bins.
    pub fn with_assignment(mut self, mode: AssignmentMode) -> Self {
        match &mut self.variant {
            Variant::BinWise(bins) | Variant::Dual { bins, .. } => bins.assignment = mode,
            _ => {}
        }
        self
    }

    fn bins(&self) -> Option<&BinTemperatures> {
        match &self.variant {
            Variant::BinWise(bins) | Variant::Dual { bins, .. } => Some(bins),
            _ => None,
        }
    }

    fn check_dims(&self, c: usize) -> Result<()> {
        if c != self.num_classes {
            return Err(Error::DimensionMismatch(format!(
                "model expects {} classes, data has {c}",
                self.num_classes
            )));
        }
        Ok(())
    }

    /// Scale one logit vector given its bin (ignored by variants without bins).
    fn scale(&self, z: &LogitVector, bin: usize) -> Result<LogitVector> {
        let zs = z.as_slice();
        let scaled: Vec<f64> = match &self.variant {
            Variant::Scalar { temperature } => zs.iter().map(|v| v / temperature).collect(),
            Variant::ClassWise { temperatures } => {
                zs.iter().zip(temperatures).map(|(v, t)| v / t).collect()
            }
            Variant::BinWise(bins) => {
                let t = bins.temperatures[bin];
                zs.iter().map(|v| v / t).collect()
            }
            Variant::Dual {
                class_temperatures,
                bins,
                alpha,
                fusion,
            } => {
                let bin_factor = root(bins.temperatures[bin], 2.0 - alpha);
                match fusion {
                    FusionMode::Elementwise => zs
                        .iter()
                        .zip(class_temperatures)
                        .map(|(v, t)| v / (root(*t, *alpha) * bin_factor))
                        .collect(),
                    FusionMode::PredictedClass => {
                        let c = first_max_index(zs);
                        let divisor = root(class_temperatures[c], *alpha) * bin_factor;
                        zs.iter().map(|v| v / divisor).collect()
                    }
                }
            }
        };
        LogitVector::new(scaled)
    }

    fn boundary_bin(&self, z: &LogitVector) -> usize {
        match self.bins() {
            Some(bins) => {
                let conf = softmax_slice(z.as_slice()).into_iter().fold(0.0, f64::max);
                assign_by_boundaries(&bins.boundaries, conf)
            }
            None => 0,
        }
    }

    /// Calibrated logits of a single sample.
    ///
    /// Fails for models in [`AssignmentMode::Resort`], whose bins depend on the
    /// whole evaluated set; use [`calibrate_dataset`](Self::calibrate_dataset).
    pub fn calibrate_logits(&self, z: &LogitVector) -> Result<LogitVector> {
        self.check_dims(z.len())?;
        if self
            .bins()
            .is_some_and(|b| b.assignment == AssignmentMode::Resort)
        {
            return Err(Error::InvalidInput(
                "resort bin assignment needs the whole evaluation set".into(),
            ));
        }
        self.scale(z, self.boundary_bin(z))
    }

    /// Calibrated probabilities of a single sample.
    pub fn apply(&self, z: &LogitVector) -> Result<ProbVector> {
        Ok(softmax(&self.calibrate_logits(z)?))
    }

    /// Bin of every record of `ds` under the model's assignment rule.
    pub fn assign_bins(&self, ds: &LogitsDataset) -> Result<Vec<usize>> {
        self.check_dims(ds.num_classes())?;
        match self.bins() {
            None => Ok(vec![0; ds.len()]),
            Some(bins) => match bins.assignment {
                AssignmentMode::Boundaries => {
                    Ok(ds.logits().map(|z| self.boundary_bin(z)).collect())
                }
                AssignmentMode::Resort => {
                    Ok(equal_count_partition(&ds.confidences(), bins.num_bins())?.assignments)
                }
            },
        }
    }

    /// Calibrated logits of every record, in record order.
    pub fn calibrate_dataset(&self, ds: &LogitsDataset) -> Result<Vec<LogitVector>> {
        let bins = self.assign_bins(ds)?;
        ds.logits()
            .zip(bins)
            .map(|(z, b)| self.scale(z, b))
            .collect()
    }

    pub fn apply_dataset(&self, ds: &LogitsDataset) -> Result<Vec<ProbVector>> {
        Ok(self.calibrate_dataset(ds)?.iter().map(softmax).collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("model JSON: {e}")))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })
    }
}

/// Combine a class-wise model and a per-bin model into a dual model. No
/// refitting happens.
pub fn fuse_dual(
    class_branch: &TemperatureModel,
    bin_branch: &TemperatureModel,
    alpha: f64,
    fusion: FusionMode,
) -> Result<TemperatureModel> {
    check_alpha(alpha)?;
    let Variant::ClassWise { temperatures } = &class_branch.variant else {
        return Err(Error::InvalidInput(format!(
            "class branch must be a ClassWise model, got {}",
            class_branch.kind()
        )));
    };
    let Variant::BinWise(bins) = &bin_branch.variant else {
        return Err(Error::InvalidInput(format!(
            "bin branch must be a BinWise model, got {}",
            bin_branch.kind()
        )));
    };
    if class_branch.num_classes != bin_branch.num_classes {
        return Err(Error::DimensionMismatch(format!(
            "class branch has {} classes, bin branch {}",
            class_branch.num_classes, bin_branch.num_classes
        )));
    }
    Ok(TemperatureModel {
        num_classes: class_branch.num_classes,
        variant: Variant::Dual {
            class_temperatures: temperatures.clone(),
            bins: bins.clone(),
            alpha,
            fusion,
        },
    })
}

impl TemperatureModel {
    /// Split a dual model back into its class-wise and per-bin branches.
    pub fn branches(&self) -> Option<(TemperatureModel, TemperatureModel)> {
        match &self.variant {
            Variant::Dual {
                class_temperatures,
                bins,
                ..
            } => Some((
                TemperatureModel {
                    num_classes: self.num_classes,
                    variant: Variant::ClassWise {
                        temperatures: class_temperatures.clone(),
                    },
                },
                TemperatureModel {
                    num_classes: self.num_classes,
                    variant: Variant::BinWise(bins.clone()),
                },
            )),
            _ => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Model files

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum VariantTag {
    Scalar,
    ClassWise,
    BinWise,
    Dual,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    variant: VariantTag,
    #[serde(rename = "C")]
    num_classes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    class_temps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bin_temps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    boundaries: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fusion_mode: Option<FusionMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    assignment_mode: Option<AssignmentMode>,
}

impl From<TemperatureModel> for ModelFile {
    fn from(m: TemperatureModel) -> Self {
        let mut f = ModelFile {
            variant: VariantTag::Scalar,
            num_classes: m.num_classes,
            temperature: None,
            class_temps: None,
            bin_temps: None,
            boundaries: None,
            alpha: None,
            fusion_mode: None,
            assignment_mode: None,
        };
        let put_bins = |f: &mut ModelFile, bins: BinTemperatures| {
            f.bin_temps = Some(bins.temperatures);
            f.boundaries = Some(bins.boundaries);
            f.assignment_mode = Some(bins.assignment);
        };
        match m.variant {
            Variant::Scalar { temperature } => f.temperature = Some(temperature),
            Variant::ClassWise { temperatures } => {
                f.variant = VariantTag::ClassWise;
                f.class_temps = Some(temperatures);
            }
            Variant::BinWise(bins) => {
                f.variant = VariantTag::BinWise;
                put_bins(&mut f, bins);
            }
            Variant::Dual {
                class_temperatures,
                bins,
                alpha,
                fusion,
            } => {
                f.variant = VariantTag::Dual;
                f.class_temps = Some(class_temperatures);
                put_bins(&mut f, bins);
                f.alpha = Some(alpha);
                f.fusion_mode = Some(fusion);
            }
        }
        f
    }
}

impl TryFrom<ModelFile> for TemperatureModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        fn need<T>(v: Option<T>, name: &'static str) -> Result<T> {
            v.ok_or_else(|| Error::invalid_argument(name, "required for this variant"))
        }
        fn forbid<T>(v: &Option<T>, name: &'static str) -> Result<()> {
            match v {
                Some(_) => Err(Error::invalid_argument(name, "not used by this variant")),
                None => Ok(()),
            }
        }
        let check_class_len = |temps: &[f64]| {
            if temps.len() == f.num_classes {
                Ok(())
            } else {
                Err(Error::DimensionMismatch(format!(
                    "{} class temperatures for C = {}",
                    temps.len(),
                    f.num_classes
                )))
            }
        };
        match f.variant {
            VariantTag::Scalar => {
                for (v, name) in [
                    (&f.class_temps, "class_temps"),
                    (&f.bin_temps, "bin_temps"),
                    (&f.boundaries, "boundaries"),
                ] {
                    forbid(v, name)?;
                }
                forbid(&f.alpha, "alpha")?;
                forbid(&f.fusion_mode, "fusion_mode")?;
                forbid(&f.assignment_mode, "assignment_mode")?;
                TemperatureModel::scalar(f.num_classes, need(f.temperature, "temperature")?)
            }
            VariantTag::ClassWise => {
                forbid(&f.temperature, "temperature")?;
                forbid(&f.bin_temps, "bin_temps")?;
                forbid(&f.boundaries, "boundaries")?;
                forbid(&f.alpha, "alpha")?;
                forbid(&f.fusion_mode, "fusion_mode")?;
                forbid(&f.assignment_mode, "assignment_mode")?;
                let temps = need(f.class_temps.clone(), "class_temps")?;
                check_class_len(&temps)?;
                TemperatureModel::class_wise(temps)
            }
            VariantTag::BinWise => {
                forbid(&f.temperature, "temperature")?;
                forbid(&f.class_temps, "class_temps")?;
                forbid(&f.alpha, "alpha")?;
                forbid(&f.fusion_mode, "fusion_mode")?;
                TemperatureModel::bin_wise(
                    f.num_classes,
                    need(f.bin_temps, "bin_temps")?,
                    need(f.boundaries, "boundaries")?,
                    f.assignment_mode.unwrap_or_default(),
                )
            }
            VariantTag::Dual => {
                forbid(&f.temperature, "temperature")?;
                let temps = need(f.class_temps.clone(), "class_temps")?;
                check_class_len(&temps)?;
                let class_branch = TemperatureModel::class_wise(temps)?;
                let bin_branch = TemperatureModel::bin_wise(
                    f.num_classes,
                    need(f.bin_temps, "bin_temps")?,
                    need(f.boundaries, "boundaries")?,
                    f.assignment_mode.unwrap_or_default(),
                )?;
                fuse_dual(
                    &class_branch,
                    &bin_branch,
                    need(f.alpha, "alpha")?,
                    f.fusion_mode.unwrap_or_default(),
                )
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Fitting

/// Diagnostics of one fit, on the fit split.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub method: &'static str,
    /// Mean NLL of the raw logits (every temperature 1).
    pub nll_identity: f64,
    /// Mean NLL at the starting temperatures.
    pub nll_initial: f64,
    /// Mean NLL of the returned model.
    pub nll_fitted: f64,
    pub initial_temperatures: Vec<f64>,
    /// One outcome per optimizer run (one per bin for per-bin fits).
    pub outcomes: Vec<FitOutcome>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Fitted {
    pub model: TemperatureModel,
    pub report: FitReport,
}

fn objective<'a>(
    ds: &'a LogitsDataset,
    structure: Structure<'a>,
) -> impl FnMut(&[f64]) -> (f64, Vec<f64>) + 'a {
    move |theta: &[f64]| {
        nll_objective(theta, ds, structure)
            .unwrap_or_else(|_| (f64::NAN, vec![f64::NAN; theta.len()]))
    }
}

fn objective_value(ds: &LogitsDataset, structure: Structure<'_>, temps: &[f64]) -> Result<f64> {
    let theta: Vec<f64> = temps.iter().map(|t| t.ln()).collect();
    Ok(nll_objective(&theta, ds, structure)?.0)
}

fn bounded_minimize<F>(objective: F, theta0: &[f64], opts: &FitOptions) -> Result<FitOutcome>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    minimize_within(
        objective,
        theta0,
        MIN_TEMPERATURE.ln(),
        MAX_TEMPERATURE.ln(),
        opts,
    )
}

/// Temperature for a fitted log-temperature, warning when it sits on a bound.
fn to_temperature(theta: f64, what: &str, warnings: &mut Vec<String>) -> f64 {
    if theta <= MIN_TEMPERATURE.ln() {
        warnings.push(format!(
            "{what}: temperature clamped to the lower bound {MIN_TEMPERATURE}"
        ));
        MIN_TEMPERATURE
    } else if theta >= MAX_TEMPERATURE.ln() {
        warnings.push(format!(
            "{what}: temperature clamped to the upper bound {MAX_TEMPERATURE}"
        ));
        MAX_TEMPERATURE
    } else {
        theta.exp().clamp(MIN_TEMPERATURE, MAX_TEMPERATURE)
    }
}

fn non_convergence_warning(outcome: &FitOutcome, what: &str, warnings: &mut Vec<String>) {
    if !outcome.converged {
        warnings.push(format!(
            "{what}: optimizer stopped ({:?}) after {} iterations with gradient max-norm {:e}",
            outcome.termination, outcome.iterations, outcome.gradient_norm
        ));
    }
}

/// One shared temperature minimizing the mean NLL of `ds`.
pub fn fit_scalar(ds: &LogitsDataset, opts: &FitOptions) -> Result<Fitted> {
    opts.validate()?;
    let init = opts.initial_temperature;
    let outcome = bounded_minimize(objective(ds, Structure::Scalar), &[init.ln()], opts)?;
    let mut warnings = Vec::new();
    non_convergence_warning(&outcome, "scalar", &mut warnings);
    let t = to_temperature(outcome.theta[0], "scalar", &mut warnings);
    Ok(Fitted {
        model: TemperatureModel::scalar(ds.num_classes(), t)?,
        report: FitReport {
            method: "ts",
            nll_identity: objective_value(ds, Structure::Scalar, &[1.0])?,
            nll_initial: objective_value(ds, Structure::Scalar, &[init])?,
            nll_fitted: objective_value(ds, Structure::Scalar, &[t])?,
            initial_temperatures: vec![init],
            outcomes: vec![outcome],
            warnings,
        },
    })
}

/// One temperature per class, shared across samples.
///
/// Classes without a single record in `ds` are not optimized; they take the
/// scalar temperature fitted on the same data. The optimizer starts from
/// `opts.initial_temperature`; if it stops at a point worse than the scalar
/// fit broadcast to every class (possible on near-separable data, where the
/// gradient tolerance is loose relative to the tiny objective), it is
/// restarted from that broadcast point.
pub fn fit_class_adaptive(ds: &LogitsDataset, opts: &FitOptions) -> Result<Fitted> {
    opts.validate()?;
    let c = ds.num_classes();
    let counts = ds.class_counts();
    let free: Vec<usize> = (0..c).filter(|&j| counts[j] > 0).collect();
    let mut warnings = Vec::new();

    let scalar = fit_scalar(ds, opts)?;
    let Variant::Scalar {
        temperature: scalar_t,
    } = scalar.model.variant
    else {
        unreachable!("fit_scalar returns a scalar model")
    };
    let mut initial_temperatures = vec![opts.initial_temperature; c];
    for j in (0..c).filter(|j| counts[*j] == 0) {
        initial_temperatures[j] = scalar_t;
        warnings.push(format!(
            "class {j}: no fit samples, using the scalar temperature {scalar_t}"
        ));
    }

    let pinned: Vec<f64> = initial_temperatures.iter().map(|t| t.ln()).collect();
    let mut inner = objective(ds, Structure::ClassWise);
    let mut reduced = |theta: &[f64]| {
        let mut full = pinned.clone();
        for (&j, &t) in free.iter().zip(theta) {
            full[j] = t;
        }
        let (v, g) = inner(&full);
        (v, free.iter().map(|&j| g[j]).collect::<Vec<f64>>())
    };
    let theta0: Vec<f64> = free.iter().map(|&j| pinned[j]).collect();
    let mut outcomes = vec![bounded_minimize(&mut reduced, &theta0, opts)?];

    let broadcast = vec![scalar_t.ln(); free.len()];
    let (broadcast_value, _) = reduced(&broadcast);
    if outcomes[0].objective > broadcast_value {
        warnings.push(format!(
            "class-wise: run from the initial temperature ended above the scalar fit \
             ({:e} > {broadcast_value:e}); restarted from the scalar temperature",
            outcomes[0].objective
        ));
        outcomes.push(bounded_minimize(&mut reduced, &broadcast, opts)?);
    }
    let outcome = outcomes.last().expect("at least one run");
    non_convergence_warning(outcome, "class-wise", &mut warnings);
    let mut temps = initial_temperatures.clone();
    for (&j, &t) in free.iter().zip(&outcome.theta) {
        temps[j] = to_temperature(t, &format!("class {j}"), &mut warnings);
    }

    Ok(Fitted {
        report: FitReport {
            method: "ca-ts",
            nll_identity: objective_value(ds, Structure::Scalar, &[1.0])?,
            nll_initial: objective_value(ds, Structure::ClassWise, &initial_temperatures)?,
            nll_fitted: objective_value(ds, Structure::ClassWise, &temps)?,
            initial_temperatures,
            outcomes,
            warnings,
        },
        model: TemperatureModel::class_wise(temps)?,
    })
}

/// Equal-count bins by raw confidence, one temperature per bin, each fitted
/// independently on its own members.
pub fn fit_esbin(ds: &LogitsDataset, num_bins: usize, opts: &FitOptions) -> Result<Fitted> {
    opts.validate()?;
    let part = equal_count_partition(&ds.confidences(), num_bins)?;
    let members = part.members();
    let init = opts.initial_temperature;

    let outcomes = members
        .par_iter()
        .enumerate()
        .map(|(b, idx)| {
            bounded_minimize(objective(ds, Structure::Subset(idx)), &[init.ln()], opts)
                .map_err(|e| e.with_fit_context(format!("bin {b}")))
        })
        .collect::<Result<Vec<FitOutcome>>>()?;

    let mut warnings = Vec::new();
    let mut temps = Vec::with_capacity(num_bins);
    for (b, outcome) in outcomes.iter().enumerate() {
        let what = format!("bin {b}");
        non_convergence_warning(outcome, &what, &mut warnings);
        temps.push(to_temperature(outcome.theta[0], &what, &mut warnings));
    }

    let weighted = |t: &dyn Fn(usize) -> f64| -> Result<f64> {
        let mut total = 0.0;
        for (b, idx) in members.iter().enumerate() {
            total += idx.len() as f64 * objective_value(ds, Structure::Subset(idx), &[t(b)])?;
        }
        Ok(total / ds.len() as f64)
    };
    let report = FitReport {
        method: "esbin-ts",
        nll_identity: objective_value(ds, Structure::Scalar, &[1.0])?,
        nll_initial: weighted(&|_| init)?,
        nll_fitted: weighted(&|b| temps[b])?,
        initial_temperatures: vec![init; num_bins],
        outcomes,
        warnings,
    };
    Ok(Fitted {
        model: TemperatureModel::bin_wise(
            ds.num_classes(),
            temps,
            part.boundaries,
            AssignmentMode::Boundaries,
        )?,
        report,
    })
}

/// Fitted dual model together with its separately fitted branches.
#[derive(Debug, Clone)]
pub struct DualFit {
    pub model: TemperatureModel,
    pub class_branch: Fitted,
    pub bin_branch: Fitted,
}

/// Fit both branches independently on `ds`, then fuse them.
pub fn fit_dual(
    ds: &LogitsDataset,
    num_bins: usize,
    alpha: f64,
    fusion: FusionMode,
    opts: &FitOptions,
) -> Result<DualFit> {
    check_alpha(alpha)?;
    let class_branch = fit_class_adaptive(ds, opts)?;
    let bin_branch = fit_esbin(ds, num_bins, opts)?;
    let model = fuse_dual(&class_branch.model, &bin_branch.model, alpha, fusion)?;
    Ok(DualFit {
        model,
        class_branch,
        bin_branch,
    })
}

// ---------------------------------------------------------------------------
// Evaluation and alpha sweeps

/// Apply `model` to `ds` and compute every metric. `config` is stored as the
/// report's provenance; when it is a JSON object, the model is added under
/// the `"model"` key.
pub fn evaluate_model(
    model: &TemperatureModel,
    ds: &LogitsDataset,
    b_metric: usize,
    config: serde_json::Value,
) -> Result<CalibrationReport> {
    let calibrated = model.calibrate_dataset(ds)?;
    let config = match config {
        serde_json::Value::Object(mut map) => {
            map.insert(
                "model".into(),
                serde_json::to_value(model).expect("model serialization is infallible"),
            );
            serde_json::Value::Object(map)
        }
        other => other,
    };
    metrics::evaluate(ds, &calibrated, b_metric, config)
}

/// `0.1, 0.2, ..., 1.9`.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..=19).map(|k| k as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub ece: f64,
    pub esbin_ece: f64,
    pub acc: f64,
    pub nll: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Grid value with the lowest ECE (first one on ties).
    pub best_alpha: f64,
    pub best_ece: f64,
}

impl SweepTable {
    /// CSV with header `alpha,ece,esbin_ece,acc,nll`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,ece,esbin_ece,acc,nll\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.alpha, r.ece, r.esbin_ece, r.acc, r.nll
            ));
        }
        out
    }
}

/// Fuse the two branches at each `alpha` of `grid` and evaluate on `eval`.
pub fn sweep_alpha(
    class_branch: &TemperatureModel,
    bin_branch: &TemperatureModel,
    eval: &LogitsDataset,
    grid: &[f64],
    fusion: FusionMode,
    b_metric: usize,
) -> Result<SweepTable> {
    if grid.is_empty() {
        return Err(Error::invalid_argument("alpha grid", "must not be empty"));
    }
    for &a in grid {
        check_alpha(a)?;
    }
    let rows = grid
        .par_iter()
        .map(|&alpha| {
            let model = fuse_dual(class_branch, bin_branch, alpha, fusion)?;
            let report = evaluate_model(&model, eval, b_metric, serde_json::Value::Null)?;
            Ok(SweepRow {
                alpha,
                ece: report.metrics.ece,
                esbin_ece: report.metrics.esbin_ece,
                acc: report.metrics.acc,
                nll: report.metrics.nll,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = rows
        .iter()
        .fold(&rows[0], |best, r| if r.ece < best.ece { r } else { best });
    Ok(SweepTable {
        best_alpha: best.alpha,
        best_ece: best.ece,
        rows,
    })
}
