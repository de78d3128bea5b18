//! Levenberg-Marquardt with multiplicative damping.
//!
//! The problem is solved in normalized coordinates: x is shifted to the
//! center of the data and divided by the span, y is divided by its largest
//! magnitude. Models declare the kind of every parameter so the
//! transformation can be applied to them and undone afterwards.

use nalgebra::{DMatrix, DVector};

use super::{FitModel, ParamKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: String,
    pub params: Vec<f64>,
    /// One-sigma errors from the linearized covariance; infinite when the
    /// normal matrix is singular.
    pub param_errors: Vec<f64>,
    pub residual_rms: f64,
    pub initial_rms: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Infinity norm of the cost gradient at the returned point, in the
    /// normalized coordinates.
    pub gradient_norm: f64,
    /// Normalized cost after each accepted step, starting with the initial cost.
    pub cost_history: Vec<f64>,
    /// Some parameter is not identifiable from the data.
    pub degenerate: bool,
}

impl FitResult {
    pub fn param(&self, i: usize) -> f64 {
        self.params[i]
    }
}

#[derive(Debug, Clone, Copy)]
struct Scaling {
    x_shift: f64,
    x_scale: f64,
    y_scale: f64,
}

impl Scaling {
    fn from_data(xs: &[f64], ys: &[f64]) -> Self {
        let (lo, hi) = xs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        let span = hi - lo;
        let ymax = ys.iter().fold(0.0f64, |m, y| m.max(y.abs()));
        Self {
            x_shift: 0.5 * (lo + hi),
            x_scale: if span > 0.0 { span } else { 1.0 },
            y_scale: if ymax > 0.0 { ymax } else { 1.0 },
        }
    }

    fn to_internal(&self, kinds: &[ParamKind], p: &[f64]) -> Vec<f64> {
        kinds
            .iter()
            .zip(p)
            .map(|(k, &v)| match k {
                ParamKind::Position => (v - self.x_shift) / self.x_scale,
                ParamKind::Width => v / self.x_scale,
                ParamKind::Amplitude => v / self.y_scale,
            })
            .collect()
    }

    fn to_external(&self, kinds: &[ParamKind], p: &[f64]) -> Vec<f64> {
        kinds
            .iter()
            .zip(p)
            .map(|(k, &v)| match k {
                ParamKind::Position => v * self.x_scale + self.x_shift,
                ParamKind::Width => v * self.x_scale,
                ParamKind::Amplitude => v * self.y_scale,
            })
            .collect()
    }

    fn error_to_external(&self, kinds: &[ParamKind], e: &[f64]) -> Vec<f64> {
        kinds
            .iter()
            .zip(e)
            .map(|(k, &v)| match k {
                ParamKind::Position | ParamKind::Width => v * self.x_scale,
                ParamKind::Amplitude => v * self.y_scale,
            })
            .collect()
    }
}

struct Problem<'a, M: ?Sized> {
    model: &'a M,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl<M: FitModel + ?Sized> Problem<'_, M> {
    fn residuals(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.xs.len(),
            self.xs.iter().zip(&self.ys).map(|(&x, &y)| self.model.eval(p, x) - y),
        )
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let n = p.len();
        let mut j = DMatrix::zeros(self.xs.len(), n);
        let mut row = vec![0.0; n];
        for (i, &x) in self.xs.iter().enumerate() {
            self.model.gradient(p, x, &mut row);
            for (c, &d) in row.iter().enumerate() {
                j[(i, c)] = d;
            }
        }
        j
    }
}

fn cost_of(r: &DVector<f64>) -> f64 {
    0.5 * r.norm_squared()
}

const MAX_DAMPING: f64 = 1e16;

/// Minimizes the sum of squared residuals of `model` against `(xs, ys)`.
///
/// Damping is multiplied by 10 after a rejected step and divided by 10
/// after an accepted one. Iteration stops once the relative cost decrease
/// or the gradient infinity norm drops below `tol`. The best parameters
/// seen are returned; failure to make progress yields `converged = false`.
pub fn levenberg_marquardt<M: FitModel + ?Sized>(
    model: &M,
    xs: &[f64],
    ys: &[f64],
    init: &[f64],
    options: LmOptions,
) -> Result<FitResult> {
    let kinds = model.kinds();
    let n = kinds.len();
    if xs.len() != ys.len() {
        return Err(Error::invalid(format!(
            "{} x values but {} y values",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < n {
        return Err(Error::invalid(format!(
            "{} points cannot constrain {n} parameters of model `{}`",
            xs.len(),
            model.name()
        )));
    }
    if init.len() != n || init.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "initial parameters {init:?} are not {n} finite values"
        )));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::invalid("fit data contain non-finite values"));
    }

    let scaling = Scaling::from_data(xs, ys);
    let problem = Problem {
        model,
        xs: xs.iter().map(|&x| (x - scaling.x_shift) / scaling.x_scale).collect(),
        ys: ys.iter().map(|&y| y / scaling.y_scale).collect(),
    };

    let mut p = scaling.to_internal(kinds, init);
    let mut r = problem.residuals(&p);
    let mut cost = cost_of(&r);
    let initial_cost = cost;
    let mut history = vec![cost];
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    let mut jac = problem.jacobian(&p);
    let mut grad = jac.tr_mul(&r);

    while iterations < options.max_iter {
        if grad.amax() < options.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let jtj = jac.tr_mul(&jac);
        let diag_floor = jtj.diagonal().amax().max(f64::MIN_POSITIVE) * 1e-12;
        let mut accepted = false;
        while lambda <= MAX_DAMPING {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += lambda * jtj[(i, i)].max(diag_floor);
            }
            let step = a.cholesky().map(|c| c.solve(&-&grad));
            let Some(step) = step else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let r_trial = problem.residuals(&trial);
            let c_trial = cost_of(&r_trial);
            if c_trial.is_finite() && c_trial < cost {
                let rel = (cost - c_trial) / cost;
                p = trial;
                r = r_trial;
                cost = c_trial;
                history.push(cost);
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                jac = problem.jacobian(&p);
                grad = jac.tr_mul(&r);
                if rel < options.tol {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if converged {
            break;
        }
        if !accepted {
            // No damping produces a decrease: the point is stationary to
            // within rounding, or the normal equations are unusable.
            converged = grad.amax() < options.tol.sqrt();
            break;
        }
    }

    let jtj = jac.tr_mul(&jac);
    let dof = (xs.len() - n).max(1) as f64;
    let variance = 2.0 * cost / dof;
    let internal_errors: Vec<f64> = match jtj.clone().try_inverse() {
        Some(inv) if inv.iter().all(|v| v.is_finite()) => (0..n)
            .map(|i| {
                let d = inv[(i, i)];
                if d >= 0.0 {
                    (d * variance).sqrt()
                } else {
                    f64::INFINITY
                }
            })
            .collect(),
        _ => vec![f64::INFINITY; n],
    };
    // A parameter is unidentifiable if its column is numerically dependent.
    let svd = jtj.svd(false, false);
    let smax = svd.singular_values.amax();
    let smin = svd.singular_values.min();
    let degenerate = internal_errors.iter().any(|e| !e.is_finite()) || smin <= smax * 1e-14;

    Ok(FitResult {
        model: model.name().to_string(),
        params: scaling.to_external(kinds, &p),
        param_errors: scaling.error_to_external(kinds, &internal_errors),
        residual_rms: (2.0 * cost / xs.len() as f64).sqrt() * scaling.y_scale,
        initial_rms: (2.0 * initial_cost / xs.len() as f64).sqrt() * scaling.y_scale,
        converged,
        iterations,
        gradient_norm: grad.amax(),
        cost_history: history,
        degenerate,
    })
}
