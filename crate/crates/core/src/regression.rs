// SPDX-License-Identifier: MIT OR Apache-2.0

//! Least-squares residuals for testing stability of regression errors.

use std::sync::Arc;

use crate::eigen::symmetric_eigenvalues;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::series::Series;

/// Largest accepted condition number of the normal-equations matrix.
pub const MAX_CONDITION: f64 = 1e12;

/// Row-major `N × p` matrix of regressors.
#[derive(Clone, Debug, PartialEq)]
pub struct Design<T> {
    rows: usize,
    cols: usize,
    values: Vec<T>,
}

impl<T: Real> Design<T> {
    pub fn new(rows: usize, cols: usize, values: Vec<T>) -> Result<Self> {
        if cols == 0 || rows == 0 {
            return Err(Error::invalid(
                "design needs at least one row and one column",
            ));
        }
        if values.len() != rows * cols {
            return Err(Error::invalid(format!(
                "design has {} entries, expected {rows}x{cols}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("design entries must be finite"));
        }
        Ok(Self { rows, cols, values })
    }

    /// Builds a design from columns of equal length.
    pub fn from_columns(columns: &[Vec<T>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::invalid("design columns differ in length"));
        }
        let values = (0..rows)
            .flat_map(|i| columns.iter().map(move |c| c[i]))
            .collect();
        Self::new(rows, columns.len(), values)
    }

    pub fn intercept(rows: usize) -> Result<Self> {
        Self::new(rows, 1, vec![T::one(); rows])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }
}

/// Solves the SPD system `a x = b` in place by Cholesky; `a` is `p × p`.
fn cholesky_solve<T: Real>(a: &[T], b: &[T], p: usize) -> Result<Vec<T>> {
    let mut l = vec![T::zero(); p * p];
    for j in 0..p {
        let mut d = a[j * p + j];
        for k in 0..j {
            d -= l[j * p + k] * l[j * p + k];
        }
        if !(d > T::zero()) {
            return Err(Error::RankDeficient {
                condition: f64::INFINITY,
            });
        }
        let d = d.sqrt();
        l[j * p + j] = d;
        for i in j + 1..p {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            l[i * p + j] = s / d;
        }
    }
    let mut y = b.to_vec();
    for i in 0..p {
        for k in 0..i {
            let v = l[i * p + k] * y[k];
            y[i] -= v;
        }
        y[i] /= l[i * p + i];
    }
    for i in (0..p).rev() {
        for k in i + 1..p {
            let v = l[k * p + i] * y[k];
            y[i] -= v;
        }
        y[i] /= l[i * p + i];
    }
    Ok(y)
}

/// `JᵀJ` and `Jᵀr` for a row-major `n × p` matrix `j`.
fn normal_equations<T: Real>(j: &[T], r: &[T], p: usize) -> (Vec<T>, Vec<T>) {
    let mut ata = vec![T::zero(); p * p];
    let mut atb = vec![T::zero(); p];
    for (row, &ri) in j.chunks_exact(p).zip(r) {
        for a in 0..p {
            atb[a] += row[a] * ri;
            for b in 0..=a {
                ata[a * p + b] += row[a] * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            ata[b * p + a] = ata[a * p + b];
        }
    }
    (ata, atb)
}

fn condition_number<T: Real>(ata: &[T], p: usize) -> Result<f64> {
    let ev = symmetric_eigenvalues(ata, p)?;
    let (max, min) = (ev[0].as_f64(), ev[p - 1].as_f64());
    Ok(if min > 0.0 { max / min } else { f64::INFINITY })
}

/// OLS coefficients and residuals `X_i - x_iᵀβ̂`.
pub fn ols_fit<T: Real>(x: &Series<T>, design: &Design<T>) -> Result<(Vec<T>, Series<T>)> {
    if design.rows() != x.len() {
        return Err(Error::invalid(format!(
            "design has {} rows for {} observations",
            design.rows(),
            x.len()
        )));
    }
    let p = design.cols();
    let (ata, atb) = normal_equations(&design.values, x.values(), p);
    let condition = condition_number(&ata, p)?;
    if !(condition <= MAX_CONDITION) {
        return Err(Error::RankDeficient { condition });
    }
    let beta = cholesky_solve(&ata, &atb, p)?;
    let resid = x
        .values()
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            let fit: T = design.row(i).iter().zip(&beta).map(|(&d, &b)| d * b).sum();
            xi - fit
        })
        .collect();
    Ok((beta, Series::new(resid)?))
}

pub fn ols_residuals<T: Real>(x: &Series<T>, design: &Design<T>) -> Result<Series<T>> {
    ols_fit(x, design).map(|(_, r)| r)
}

/// Regression function `h(x, θ)` of a nonlinear model.
pub trait RegressionModel<T: Real>: Send + Sync {
    fn params(&self) -> usize;

    fn value(&self, x: &[T], theta: &[T]) -> T;

    /// Analytic `∂h/∂θ`; `None` selects central differences.
    fn gradient(&self, _x: &[T], _theta: &[T]) -> Option<Vec<T>> {
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NlsOptions {
    pub max_iterations: usize,
    pub step_tolerance: f64,
    pub relative_tolerance: f64,
    pub max_halvings: usize,
}

impl Default for NlsOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            step_tolerance: 1e-10,
            relative_tolerance: 1e-12,
            max_halvings: 30,
        }
    }
}

#[derive(Clone)]
pub enum RegressionSpec<T: Real> {
    Linear(Design<T>),
    Nonlinear {
        model: Arc<dyn RegressionModel<T>>,
        theta0: Vec<T>,
        options: NlsOptions,
    },
}

impl<T: Real> std::fmt::Debug for RegressionSpec<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Linear(d) => f.debug_tuple("Linear").field(d).finish(),
            Self::Nonlinear {
                theta0, options, ..
            } => f
                .debug_struct("Nonlinear")
                .field("theta0", theta0)
                .field("options", options)
                .finish_non_exhaustive(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NlsFit<T> {
    pub theta: Vec<T>,
    pub residuals: Series<T>,
    pub iterations: usize,
    pub objective: T,
}

fn objective<T: Real>(
    x: &Series<T>,
    model: &dyn RegressionModel<T>,
    cov: &Design<T>,
    theta: &[T],
) -> T {
    x.values()
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            let r = xi - model.value(cov.row(i), theta);
            r * r
        })
        .sum()
}

fn jacobian_row<T: Real>(model: &dyn RegressionModel<T>, ci: &[T], theta: &[T]) -> Vec<T> {
    if let Some(g) = model.gradient(ci, theta) {
        return g;
    }
    let step = T::epsilon().cbrt();
    let mut probe = theta.to_vec();
    (0..theta.len())
        .map(|k| {
            let h = step * theta[k].abs().max(T::one());
            probe[k] = theta[k] + h;
            let up = model.value(ci, &probe);
            probe[k] = theta[k] - h;
            let down = model.value(ci, &probe);
            probe[k] = theta[k];
            (up - down) / (h + h)
        })
        .collect()
}

fn non_convergence<T: Real>(iterations: usize, obj: T, theta: &[T]) -> Error {
    Error::NonConvergence {
        iterations,
        objective: obj.as_f64(),
        last: theta.iter().map(|t| t.as_f64()).collect(),
    }
}

/// Damped Gauss–Newton minimization of `Σ (X_i - h(x_i, θ))²`.
pub fn nls_fit<T: Real>(
    x: &Series<T>,
    model: &dyn RegressionModel<T>,
    theta0: &[T],
    covariates: &Design<T>,
    opts: &NlsOptions,
) -> Result<NlsFit<T>> {
    let p = model.params();
    if theta0.len() != p {
        return Err(Error::invalid(format!(
            "model has {p} parameters, initial guess has {}",
            theta0.len()
        )));
    }
    if theta0.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("initial guess must be finite"));
    }
    if covariates.rows() != x.len() {
        return Err(Error::invalid("covariates and series differ in length"));
    }
    let mut theta = theta0.to_vec();
    let mut obj = objective(x, model, covariates, &theta);
    if !obj.is_finite() {
        return Err(non_convergence(0, obj, &theta));
    }
    let mut iterations = 0;
    for iter in 1..=opts.max_iterations {
        iterations = iter;
        let mut jac = Vec::with_capacity(x.len() * p);
        let mut resid = Vec::with_capacity(x.len());
        for (i, &xi) in x.values().iter().enumerate() {
            let ci = covariates.row(i);
            jac.extend(jacobian_row(model, ci, &theta));
            resid.push(xi - model.value(ci, &theta));
        }
        let (jtj, jtr) = normal_equations(&jac, &resid, p);
        let delta = match cholesky_solve(&jtj, &jtr, p) {
            Ok(d) => d,
            Err(_) => return Err(non_convergence(iter, obj, &theta)),
        };
        let norm = delta.iter().map(|&d| d * d).sum::<T>().sqrt().as_f64();
        if norm < opts.step_tolerance {
            break;
        }
        let mut scale = T::one();
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<T> = theta
                .iter()
                .zip(&delta)
                .map(|(&t, &d)| t + scale * d)
                .collect();
            let trial_obj = objective(x, model, covariates, &trial);
            if trial_obj.is_finite() && trial_obj < obj {
                accepted = Some((trial, trial_obj));
                break;
            }
            scale *= T::lit(0.5);
        }
        let Some((next, next_obj)) = accepted else {
            // no descent along the Gauss-Newton direction: only acceptable at a zero residual
            if obj <= T::epsilon() * T::epsilon() {
                break;
            }
            return Err(non_convergence(iter, obj, &theta));
        };
        let rel = ((obj - next_obj) / obj).as_f64();
        theta = next;
        obj = next_obj;
        if rel < opts.relative_tolerance || obj == T::zero() {
            break;
        }
        if iter == opts.max_iterations {
            return Err(non_convergence(iter, obj, &theta));
        }
    }
    let residuals = x
        .values()
        .iter()
        .enumerate()
        .map(|(i, &xi)| xi - model.value(covariates.row(i), &theta))
        .collect();
    Ok(NlsFit {
        residuals: Series::new(residuals)?,
        objective: obj,
        iterations,
        theta,
    })
}

pub fn nls_residuals<T: Real>(
    x: &Series<T>,
    model: &dyn RegressionModel<T>,
    theta0: &[T],
    covariates: &Design<T>,
    opts: &NlsOptions,
) -> Result<Series<T>> {
    nls_fit(x, model, theta0, covariates, opts).map(|f| f.residuals)
}

/// Residuals of either regression variant.
pub fn residuals<T: Real>(
    x: &Series<T>,
    spec: &RegressionSpec<T>,
    covariates: &Design<T>,
) -> Result<Series<T>> {
    match spec {
        RegressionSpec::Linear(design) => ols_residuals(x, design),
        RegressionSpec::Nonlinear {
            model,
            theta0,
            options,
        } => nls_residuals(x, model.as_ref(), theta0, covariates, options),
    }
}
