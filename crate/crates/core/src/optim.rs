//! Mean-NLL objective over log-temperatures and its minimizer.
//!
//! Temperatures are parameterized as `T = exp(theta)`, which keeps the
//! problem unconstrained. With scaled logits `u_j = z_j * exp(-theta_j)`, the
//! per-sample loss is `logsumexp(u) - u_y` and its gradient is
//! `d loss / d theta_j = -(p_j - [j = y]) * u_j`, where `p = softmax(u)`.
//!
//! The minimizer is limited-memory BFGS with a backtracking (Armijo) line
//! search. Every accepted iterate strictly decreases the objective. A
//! bounded variant projects iterates onto a box.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::data::LogitsDataset;
use crate::error::{Error, Result};
use crate::math::softmax_slice;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    pub initial_temperature: f64,
    /// Stop once the gradient max-norm is at or below this.
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
    /// Number of curvature pairs kept by L-BFGS.
    pub history_size: usize,
    /// Armijo constant of the backtracking line search.
    pub sufficient_decrease: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            initial_temperature: 1.5,
            gradient_tolerance: 1e-8,
            max_iterations: 500,
            history_size: 10,
            sufficient_decrease: 1e-4,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid_argument(
                    name,
                    format!("must be finite and > 0, got {v}"),
                ))
            }
        };
        positive("initial_temperature", self.initial_temperature)?;
        positive("gradient_tolerance", self.gradient_tolerance)?;
        if !(self.sufficient_decrease > 0.0 && self.sufficient_decrease < 1.0) {
            return Err(Error::invalid_argument(
                "sufficient_decrease",
                format!("must lie in (0, 1), got {}", self.sufficient_decrease),
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid_argument("max_iterations", "must be >= 1"));
        }
        if self.history_size == 0 {
            return Err(Error::invalid_argument("history_size", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// Gradient max-norm reached the tolerance.
    Converged,
    MaxIterations,
    /// No step along the search direction gave sufficient decrease.
    LineSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutcome {
    pub theta: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    pub termination: Termination,
}

/// How temperatures map onto the samples of a dataset.
#[derive(Debug, Clone, Copy)]
pub enum Structure<'a> {
    /// One temperature shared by every class; `theta` has length 1.
    Scalar,
    /// One temperature per class; `theta` has length C.
    ClassWise,
    /// One shared temperature over the listed records only.
    Subset(&'a [usize]),
}

/// Mean NLL and its gradient with respect to `theta`.
pub fn nll_objective(
    theta: &[f64],
    ds: &LogitsDataset,
    structure: Structure<'_>,
) -> Result<(f64, Vec<f64>)> {
    let c = ds.num_classes();
    let expected = match structure {
        Structure::ClassWise => c,
        Structure::Scalar | Structure::Subset(_) => 1,
    };
    if theta.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "{} parameters for a structure that needs {expected}",
            theta.len()
        )));
    }
    let inv_t: Vec<f64> = if theta.len() == 1 {
        vec![(-theta[0]).exp(); c]
    } else {
        theta.iter().map(|t| (-t).exp()).collect()
    };

    let mut value = CompensatedSum::default();
    let mut grad = vec![CompensatedSum::default(); c];
    let mut u = vec![0.0; c];
    let mut accumulate = |z: &[f64], label: usize| {
        for j in 0..c {
            u[j] = z[j] * inv_t[j];
        }
        value.add(crate::math::nll_unchecked(&u, label));
        let p = softmax_slice(&u);
        for j in 0..c {
            let residual = p[j] - if j == label { 1.0 } else { 0.0 };
            grad[j].add(-residual * u[j]);
        }
    };
    let n = match structure {
        Structure::Subset(indices) => {
            if indices.is_empty() {
                return Err(Error::InvalidInput("empty sample subset".into()));
            }
            for &i in indices {
                let r = ds
                    .records()
                    .get(i)
                    .ok_or_else(|| Error::InvalidInput(format!("subset index {i} out of range")))?;
                accumulate(r.logits.as_slice(), r.label);
            }
            indices.len()
        }
        Structure::Scalar | Structure::ClassWise => {
            for r in ds.records() {
                accumulate(r.logits.as_slice(), r.label);
            }
            ds.len()
        }
    };

    let scale = 1.0 / n as f64;
    let grad = if expected == 1 {
        let mut total = CompensatedSum::default();
        for g in &grad {
            total.add(g.value());
        }
        vec![total.value() * scale]
    } else {
        grad.iter().map(|g| g.value() * scale).collect()
    };
    Ok((value.value() * scale, grad))
}

/// Neumaier summation. Near the optimum the objective changes by far less
/// than the rounding error of a naive sum over many samples, which would
/// stall the line search.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct CurvaturePair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// `-H g` by the two-loop recursion.
fn search_direction(history: &VecDeque<CurvaturePair>, g: &[f64]) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for pair in history.iter().rev() {
        let a = pair.rho * dot(&pair.s, &q);
        for (qi, yi) in q.iter_mut().zip(&pair.y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some(last) = history.back() {
        let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        for qi in &mut q {
            *qi *= gamma;
        }
    }
    for (pair, a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = pair.rho * dot(&pair.y, &q);
        for (qi, si) in q.iter_mut().zip(&pair.s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

const MAX_BACKTRACKS: usize = 60;

/// Minimize a smooth objective from `theta0`.
///
/// `objective` returns the value and gradient at a point. Non-finite values
/// are treated as a failed trial step. Returns an error only when the very
/// first line search fails; later line-search failures and the iteration cap
/// end the run with `converged = false`.
pub fn minimize<F>(objective: F, theta0: &[f64], opts: &FitOptions) -> Result<FitOutcome>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    minimize_within(objective, theta0, f64::NEG_INFINITY, f64::INFINITY, opts)
}

/// [`minimize`] with every coordinate kept inside `[lower, upper]`.
///
/// Trial points are projected onto the box. Coordinates sitting on a bound
/// with the gradient pointing outward are held fixed, and convergence is
/// judged on the gradient of the remaining coordinates.
pub fn minimize_within<F>(
    mut objective: F,
    theta0: &[f64],
    lower: f64,
    upper: f64,
    opts: &FitOptions,
) -> Result<FitOutcome>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    opts.validate()?;
    if lower.is_nan() || upper.is_nan() || lower > upper {
        return Err(Error::invalid_argument(
            "bounds",
            format!("[{lower}, {upper}] is not an interval"),
        ));
    }
    let project = |v: f64| v.clamp(lower, upper);
    // Gradient with the components blocked by an active bound zeroed.
    let free_gradient = |x: &[f64], g: &[f64]| -> Vec<f64> {
        x.iter()
            .zip(g)
            .map(|(&xi, &gi)| {
                if (xi <= lower && gi > 0.0) || (xi >= upper && gi < 0.0) {
                    0.0
                } else {
                    gi
                }
            })
            .collect()
    };

    let mut x: Vec<f64> = theta0.iter().map(|&v| project(v)).collect();
    let (mut f, mut g) = objective(&x);
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit {
            context: None,
            reason: "objective is not finite at the starting point".into(),
            iterations: 0,
            objective: f,
            gradient_norm: max_norm(&g),
        });
    }

    let mut history: VecDeque<CurvaturePair> = VecDeque::with_capacity(opts.history_size);
    let mut iterations = 0;
    let termination = loop {
        let pg = free_gradient(&x, &g);
        let gnorm = max_norm(&pg);
        if gnorm <= opts.gradient_tolerance {
            break Termination::Converged;
        }
        if iterations >= opts.max_iterations {
            break Termination::MaxIterations;
        }

        let mut d = search_direction(&history, &pg);
        for (di, pgi) in d.iter_mut().zip(&pg) {
            if *pgi == 0.0 {
                *di = 0.0;
            }
        }
        let slope = dot(&pg, &d);
        if slope.is_nan() || slope >= 0.0 {
            history.clear();
            d = pg.iter().map(|v| -v).collect();
        }
        let mut step = if history.is_empty() {
            (1.0 / dot(&pg, &pg).sqrt()).min(1.0)
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = x
                .iter()
                .zip(&d)
                .map(|(xi, di)| project(xi + step * di))
                .collect();
            let moved: Vec<f64> = trial.iter().zip(&x).map(|(t, xi)| t - xi).collect();
            let (ft, gt) = objective(&trial);
            let finite = ft.is_finite() && gt.iter().all(|v| v.is_finite());
            // Strict decrease: a tie means the step is below what the
            // objective can resolve, and accepting it would loop forever.
            if finite && ft < f && ft <= f + opts.sufficient_decrease * dot(&g, &moved) {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            if iterations == 0 {
                return Err(Error::Fit {
                    context: None,
                    reason: "line search found no decrease from the starting point".into(),
                    iterations,
                    objective: f,
                    gradient_norm: gnorm,
                });
            }
            break Termination::LineSearch;
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > f64::EPSILON * dot(&y, &y) && sy > 0.0 {
            if history.len() == opts.history_size {
                history.pop_front();
            }
            history.push_back(CurvaturePair {
                s,
                y,
                rho: 1.0 / sy,
            });
        }
        x = x_new;
        f = f_new;
        g = g_new;
        iterations += 1;
    };

    let gradient_norm = max_norm(&free_gradient(&x, &g));
    Ok(FitOutcome {
        theta: x,
        objective: f,
        iterations,
        converged: gradient_norm <= opts.gradient_tolerance,
        gradient_norm,
        termination,
    })
}
