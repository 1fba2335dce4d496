//! Nonlinear least squares (Levenberg-Marquardt) and small fitting helpers.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 500;

/// Converged least-squares solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub params: Vec<f64>,
    /// One-sigma errors from the covariance `s^2 (J^T J)^-1`, infinite when
    /// the problem is degenerate.
    pub errors: Vec<f64>,
    /// Residual sum of squares.
    pub rss: f64,
    pub converged: bool,
}

impl Solution {
    pub fn residual_norm(&self) -> f64 {
        self.rss.sqrt()
    }
}

fn residuals<F: Fn(f64, &[f64]) -> f64>(model: &F, x: &[f64], y: &[f64], p: &[f64]) -> DVector<f64> {
    DVector::from_iterator(x.len(), x.iter().zip(y).map(|(&xi, &yi)| yi - model(xi, p)))
}

fn jacobian<F: Fn(f64, &[f64]) -> f64>(model: &F, x: &[f64], p: &[f64]) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(x.len(), p.len());
    let mut q = p.to_vec();
    for k in 0..p.len() {
        let h = 1e-7 * p[k].abs().max(1e-6);
        q[k] = p[k] + h;
        let up: Vec<f64> = x.iter().map(|&xi| model(xi, &q)).collect();
        q[k] = p[k] - h;
        for (i, &xi) in x.iter().enumerate() {
            j[(i, k)] = (up[i] - model(xi, &q)) / (2.0 * h);
        }
        q[k] = p[k];
    }
    j
}

/// Minimize `sum (y - model(x, p))^2` starting from `p0`.
pub fn curve_fit<F: Fn(f64, &[f64]) -> f64>(model: F, x: &[f64], y: &[f64], p0: &[f64]) -> Result<Solution> {
    if x.len() != y.len() {
        return Err(Error::Fit(format!("{} x values but {} y values", x.len(), y.len())));
    }
    if x.len() < p0.len() {
        return Err(Error::Fit(format!("{} points cannot determine {} parameters", x.len(), p0.len())));
    }
    if y.iter().chain(x).any(|v| !v.is_finite()) {
        return Err(Error::Fit("data contain non-finite values".into()));
    }
    let mut p = p0.to_vec();
    let mut r = residuals(&model, x, y, &p);
    let mut rss = r.norm_squared();
    if !rss.is_finite() {
        return Err(Error::Fit("model is not finite at the initial guess".into()));
    }
    let mut lambda = 1e-3;
    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        let j = jacobian(&model, x, &p);
        let jt = j.transpose();
        let jtj = &jt * &j;
        let g = &jt * &r;
        let mut improved = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..p.len() {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-30);
            }
            let Some(step) = a.lu().solve(&g) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let tr = residuals(&model, x, y, &trial);
            let trss = tr.norm_squared();
            if trss.is_finite() && trss <= rss {
                let small_step = step.iter().zip(&p).all(|(s, v)| s.abs() <= 1e-10 * (v.abs() + 1e-10));
                let small_gain = rss - trss <= 1e-14 * rss.max(1e-300);
                p = trial;
                r = tr;
                rss = trss;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                converged = small_step || small_gain;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // no downhill step exists at any damping: a stationary point
            converged = true;
        }
        if converged {
            break;
        }
    }
    let errors = covariance_errors(&jacobian(&model, x, &p), rss, x.len());
    Ok(Solution { params: p, errors, rss, converged })
}

fn covariance_errors(j: &DMatrix<f64>, rss: f64, n: usize) -> Vec<f64> {
    let m = j.ncols();
    let dof = n.saturating_sub(m).max(1) as f64;
    let jtj = j.transpose() * j;
    match jtj.try_inverse() {
        Some(inv) => (0..m)
            .map(|k| {
                let v = inv[(k, k)] * rss / dof;
                if v >= 0.0 && v.is_finite() {
                    v.sqrt()
                } else {
                    f64::INFINITY
                }
            })
            .collect(),
        None => vec![f64::INFINITY; m],
    }
}

/// Run [`curve_fit`] from every starting point and keep the lowest residual.
pub fn best_fit<F: Fn(f64, &[f64]) -> f64>(
    model: F,
    x: &[f64],
    y: &[f64],
    starts: &[Vec<f64>],
) -> Result<Solution> {
    let mut best: Option<Solution> = None;
    let mut last_err = None;
    for p0 in starts {
        match curve_fit(&model, x, y, p0) {
            Ok(s) if best.as_ref().is_none_or(|b| s.rss < b.rss) => best = Some(s),
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::Fit("no starting point given".into())))
}

/// Ordinary least-squares line `y = a + b x`; returns `(a, b)`.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let n = x.len() as f64;
    if x.len() < 2 || x.len() != y.len() {
        return Err(Error::Fit("linear regression needs at least two paired points".into()));
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all x values are equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    Ok((my - b * mx, b))
}

pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![start],
        _ => (0..n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// `n` values spread geometrically between `start` and `stop`, rounded to
/// integers and deduplicated.
pub fn log_spaced_integers(start: u64, stop: u64, n: usize) -> Vec<u64> {
    let (a, b) = ((start.max(1) as f64).ln(), (stop.max(1) as f64).ln());
    let mut v: Vec<u64> = linspace(a, b, n).into_iter().map(|t| t.exp().round() as u64).collect();
    v.dedup();
    v
}

/// Value with one-sigma uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Outcome of a routine's fit.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FitResult {
    pub parameters: BTreeMap<String, Estimate>,
    pub residual_norm: f64,
    pub success: bool,
}

impl FitResult {
    pub fn from_solution(names: &[&str], s: &Solution) -> Self {
        let parameters = names
            .iter()
            .zip(s.params.iter().zip(&s.errors))
            .map(|(n, (&value, &error))| (n.to_string(), Estimate { value, error }))
            .collect();
        FitResult { parameters, residual_norm: s.residual_norm(), success: s.converged }
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.parameters.get(name).map(|e| e.value)
    }

    pub fn error(&self, name: &str) -> Option<f64> {
        self.parameters.get(name).map(|e| e.error)
    }

    pub fn set(&mut self, name: &str, value: f64, error: f64) {
        self.parameters.insert(name.to_string(), Estimate { value, error });
    }

    /// Require `|value| >= sigmas * error` for `name`.
    pub fn require_significant(&mut self, name: &str, sigmas: f64) {
        let ok = self.parameters.get(name).is_some_and(|e| e.error.is_finite() && e.value.abs() >= sigmas * e.error);
        self.success &= ok;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exponential() {
        let x = linspace(0.0, 5.0, 40);
        let y: Vec<f64> = x.iter().map(|t| 2.0 * (-t / 1.5_f64).exp() + 0.3).collect();
        let s = curve_fit(|t, p| p[0] * (-t / p[1]).exp() + p[2], &x, &y, &[1.0, 1.0, 0.0]).unwrap();
        assert!(s.converged);
        for (got, want) in s.params.iter().zip([2.0, 1.5, 0.3]) {
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
    }

    #[test]
    fn errors_match_linear_theory() {
        // for a linear model the covariance is exact: slope error = s / sqrt(Sxx)
        let x = linspace(0.0, 9.0, 10);
        let noise = [0.1, -0.2, 0.05, 0.0, 0.15, -0.1, -0.05, 0.2, -0.15, 0.0];
        let y: Vec<f64> = x.iter().zip(noise).map(|(t, e)| 1.0 + 2.0 * t + e).collect();
        let s = curve_fit(|t, p| p[0] + p[1] * t, &x, &y, &[0.0, 0.0]).unwrap();
        let (a, b) = linear_regression(&x, &y).unwrap();
        assert!((s.params[0] - a).abs() < 1e-8 && (s.params[1] - b).abs() < 1e-8);
        let sxx: f64 = x.iter().map(|t| (t - 4.5).powi(2)).sum();
        let expected = (s.rss / 8.0 / sxx).sqrt();
        assert!((s.errors[1] - expected).abs() < 1e-6 * expected);
    }

    #[test]
    fn best_fit_escapes_local_minimum() {
        let x = linspace(0.0, 1.0, 60);
        let y: Vec<f64> = x.iter().map(|t| (2.0 * std::f64::consts::PI * 3.0 * t).cos()).collect();
        let model = |t: f64, p: &[f64]| (2.0 * std::f64::consts::PI * p[0] * t).cos();
        let starts: Vec<Vec<f64>> = (1..8).map(|f| vec![f as f64 + 0.3]).collect();
        let s = best_fit(model, &x, &y, &starts).unwrap();
        assert!((s.params[0] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_underdetermined() {
        assert!(curve_fit(|t, p| p[0] + p[1] * t, &[1.0], &[1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn spacing_helpers() {
        assert_eq!(linspace(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        let d = log_spaced_integers(1, 512, 10);
        assert_eq!(d.first(), Some(&1));
        assert_eq!(d.last(), Some(&512));
        assert!(d.windows(2).all(|w| w[0] < w[1]));
    }
}
