//! Numerically stable primitives on logit vectors.
//!
//! Every function here is pure. Softmax and log-softmax shift by the maximum
//! logit before exponentiating, so logits in the thousands are handled
//! without overflow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw classifier scores for one sample: at least two finite entries.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct LogitVector(Vec<f64>);

impl LogitVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a logit vector needs at least 2 classes, got {}",
                values.len()
            )));
        }
        if let Some((j, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "logit {j} is not finite ({v})"
            )));
        }
        Ok(LogitVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl<'de> Deserialize<'de> for LogitVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(d)?;
        LogitVector::new(values).map_err(serde::de::Error::custom)
    }
}

impl AsRef<[f64]> for LogitVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// A probability distribution over classes, as produced by [`softmax`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The maximum probability: the sample's confidence.
    pub fn confidence(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    pub fn prediction(&self) -> Prediction {
        let predicted_class = first_max_index(&self.0);
        Prediction {
            predicted_class,
            confidence: self.0[predicted_class],
        }
    }
}

impl AsRef<[f64]> for ProbVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Predicted class and its probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub predicted_class: usize,
    pub confidence: f64,
}

/// Per-class divisors applied to logits before softmax.
#[derive(Debug, Clone, Copy)]
pub enum Temperatures<'a> {
    /// One temperature broadcast to every class.
    Scalar(f64),
    /// One temperature per class.
    PerClass(&'a [f64]),
}

impl Temperatures<'_> {
    fn validate(&self, num_classes: usize) -> Result<()> {
        let check = |index: usize, value: f64| {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidTemperature { index, value })
            }
        };
        match *self {
            Temperatures::Scalar(t) => check(0, t),
            Temperatures::PerClass(ts) => {
                if ts.len() != num_classes {
                    return Err(Error::DimensionMismatch(format!(
                        "{} temperatures for {} classes",
                        ts.len(),
                        num_classes
                    )));
                }
                ts.iter().enumerate().try_for_each(|(i, &t)| check(i, t))
            }
        }
    }
}

pub fn softmax(z: &LogitVector) -> ProbVector {
    ProbVector(softmax_slice(z.as_slice()))
}

/// Softmax of a raw slice. Callers guarantee finite, non-empty input.
pub(crate) fn softmax_slice(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = z.iter().map(|&v| (v - m).exp()).collect();
    let total: f64 = out.iter().sum();
    for p in &mut out {
        *p /= total;
    }
    out
}

pub fn log_softmax(z: &LogitVector) -> Vec<f64> {
    let (m, tail) = shifted_log_norm(z.as_slice());
    z.as_slice().iter().map(|&v| (v - m) - tail).collect()
}

/// Returns `(m, l)` with `log Σ exp(z) = m + l`, `m = max(z)`.
///
/// `l` is computed as `ln_1p` of the non-maximal terms so that it keeps full
/// relative precision when one logit dominates.
fn shifted_log_norm(z: &[f64]) -> (f64, f64) {
    let top = first_max_index(z);
    let m = z[top];
    let rest: f64 = z
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != top)
        .map(|(_, &v)| (v - m).exp())
        .sum();
    (m, rest.ln_1p())
}

/// Negative log-likelihood of `label` under `softmax(z)`, in nats.
pub fn nll(z: &LogitVector, label: usize) -> Result<f64> {
    if label >= z.len() {
        return Err(Error::InvalidInput(format!(
            "label {label} out of range for {} classes",
            z.len()
        )));
    }
    Ok(nll_unchecked(z.as_slice(), label))
}

pub(crate) fn nll_unchecked(z: &[f64], label: usize) -> f64 {
    let (m, tail) = shifted_log_norm(z);
    (m - z[label]) + tail
}

/// Divide logits by temperatures (elementwise, or by a broadcast scalar).
pub fn scale_logits(z: &LogitVector, temps: Temperatures<'_>) -> Result<LogitVector> {
    temps.validate(z.len())?;
    let scaled = match temps {
        Temperatures::Scalar(t) => z.as_slice().iter().map(|&v| v / t).collect(),
        Temperatures::PerClass(ts) => z.as_slice().iter().zip(ts).map(|(&v, &t)| v / t).collect(),
    };
    LogitVector::new(scaled)
}

/// Index of the maximum entry; exact ties go to the lowest index.
pub fn argmax_tiebreak(v: &[f64]) -> Result<usize> {
    if v.is_empty() {
        return Err(Error::InvalidInput("argmax of an empty vector".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("argmax of a non-finite vector".into()));
    }
    Ok(first_max_index(v))
}

pub(crate) fn first_max_index(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lv(v: &[f64]) -> LogitVector {
        LogitVector::new(v.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax(&lv(&[0.0, 0.0])).as_slice(), &[0.5, 0.5]);
        let p = softmax(&lv(&[2f64.ln(), 0.0]));
        assert!(close(p.as_slice(), &[2.0 / 3.0, 1.0 / 3.0], 1e-15));
        let p = softmax(&lv(&[1000.0, 1000.0, 1000.0]));
        assert!(close(p.as_slice(), &[1.0 / 3.0; 3], 1e-15));
    }

    #[test]
    fn rejects_bad_logits() {
        assert!(LogitVector::new(vec![1.0]).is_err());
        assert!(LogitVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(LogitVector::new(vec![f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn log_softmax_examples() {
        let l = log_softmax(&lv(&[0.0, 0.0]));
        assert!(close(&l, &[-(2f64.ln()), -(2f64.ln())], 1e-15));
        let l = log_softmax(&lv(&[1000.0, 0.0]));
        assert!(l[0].abs() < 1e-300);
        assert!((l[1] + 1000.0).abs() < 1e-12);
    }

    #[test]
    fn log_softmax_matches_direct_softmax() {
        // Textbook softmax without any shift; inputs are small enough for it.
        let z: [f64; 5] = [0.3, -1.2, 2.5, 0.0, -0.7];
        let denom: f64 = z.iter().map(|v| v.exp()).sum();
        let direct: Vec<f64> = z.iter().map(|v| v.exp() / denom).collect();
        let via_log: Vec<f64> = log_softmax(&lv(&z)).iter().map(|v| v.exp()).collect();
        assert!(close(&via_log, &direct, 1e-12));
    }

    #[test]
    fn nll_examples() {
        assert!((nll(&lv(&[0.0, 0.0]), 0).unwrap() - 2f64.ln()).abs() < 1e-15);
        let near = nll(&lv(&[10.0, -10.0]), 0).unwrap();
        // ln(1 + e^-20), which differs from e^-20 in the tenth digit
        assert!((near - 2.061153620314381e-9).abs() < 1e-22);

        let z = [1.0f64, 2.0, 3.0];
        let denom: f64 = z.iter().map(|v| v.exp()).sum();
        let oracle = -(z[2].exp() / denom).ln();
        assert!((nll(&lv(&z), 2).unwrap() - oracle).abs() < 1e-14);

        assert!(matches!(
            nll(&lv(&[0.0, 0.0]), 2),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn scale_logits_examples() {
        let z = lv(&[2.0, 4.0]);
        assert_eq!(
            scale_logits(&z, Temperatures::Scalar(1.0))
                .unwrap()
                .as_slice(),
            &[2.0, 4.0]
        );
        assert_eq!(
            scale_logits(&z, Temperatures::Scalar(2.0))
                .unwrap()
                .as_slice(),
            &[1.0, 2.0]
        );
        assert_eq!(
            scale_logits(&z, Temperatures::PerClass(&[2.0, 4.0]))
                .unwrap()
                .as_slice(),
            &[1.0, 1.0]
        );
        assert!(matches!(
            scale_logits(&z, Temperatures::Scalar(0.0)),
            Err(Error::InvalidTemperature { .. })
        ));
        assert!(matches!(
            scale_logits(&z, Temperatures::PerClass(&[1.0, -1.0])),
            Err(Error::InvalidTemperature { index: 1, .. })
        ));
        assert!(matches!(
            scale_logits(&z, Temperatures::PerClass(&[1.0])),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn argmax_examples() {
        assert_eq!(argmax_tiebreak(&[1.0, 3.0, 2.0]).unwrap(), 1);
        assert_eq!(argmax_tiebreak(&[5.0, 5.0]).unwrap(), 0);
        assert_eq!(argmax_tiebreak(&[-1.0]).unwrap(), 0);
        assert!(argmax_tiebreak(&[]).is_err());
    }

    fn logits(max_abs: f64) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-max_abs..max_abs, 2..12)
    }

    proptest! {
        #[test]
        fn softmax_sums_to_one(z in logits(1e4)) {
            let s: f64 = softmax(&lv(&z)).as_slice().iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn softmax_shift_invariant(z in logits(1e3), c in -1e3f64..1e3) {
            let shifted: Vec<f64> = z.iter().map(|v| v + c).collect();
            let a = softmax(&lv(&z));
            let b = softmax(&lv(&shifted));
            prop_assert!(close(a.as_slice(), b.as_slice(), 1e-12));
        }

        #[test]
        fn scalar_temperature_preserves_argmax(z in logits(50.0), t in 1e-3f64..1e3) {
            let z = lv(&z);
            let scaled = scale_logits(&z, Temperatures::Scalar(t)).unwrap();
            prop_assert_eq!(
                argmax_tiebreak(z.as_slice()).unwrap(),
                argmax_tiebreak(scaled.as_slice()).unwrap()
            );
        }

        #[test]
        fn nll_non_negative(z in logits(1e3), pick in 0usize..12) {
            let label = pick % z.len();
            prop_assert!(nll(&lv(&z), label).unwrap() >= 0.0);
        }

        #[test]
        fn exp_log_softmax_is_softmax(z in logits(1e3)) {
            let z = lv(&z);
            let a: Vec<f64> = log_softmax(&z).iter().map(|v| v.exp()).collect();
            prop_assert!(close(&a, softmax(&z).as_slice(), 1e-10));
        }
    }

    #[test]
    fn nll_vanishes_with_margin() {
        let mut prev = f64::INFINITY;
        for margin in [1.0, 5.0, 20.0, 50.0, 200.0] {
            let v = nll(&lv(&[margin, 0.0, -1.0]), 0).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert!(prev > 0.0 && prev < 1e-80);
    }
}
