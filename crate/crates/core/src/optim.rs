//! Levenberg-Marquardt least squares with a forward-difference Jacobian.

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when the relative decrease of the objective falls below this.
    pub ftol: f64,
    /// Stop when the relative step length falls below this.
    pub xtol: f64,
    pub initial_lambda: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            ftol: 1e-14,
            xtol: 1e-12,
            initial_lambda: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmResult {
    pub params: Vec<f64>,
    /// Sum of squared residuals at `params`.
    pub objective: f64,
    /// Objective after every accepted iteration, starting with the initial point.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Standard errors from `s²·(JᵀJ)⁻¹` with `s² = objective/(m-n)`; `None` when
    /// there are no spare degrees of freedom or `JᵀJ` is singular.
    pub std_errors: Option<Vec<f64>>,
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn jacobian(f: &impl Fn(&[f64]) -> Vec<f64>, x: &[f64], r0: &[f64]) -> Vec<Vec<f64>> {
    // Column-major: one residual vector per parameter.
    (0..x.len())
        .map(|k| {
            let h = 1e-7 * x[k].abs().max(1e-3);
            let mut xp = x.to_vec();
            xp[k] += h;
            let rp = f(&xp);
            rp.iter().zip(r0).map(|(a, b)| (a - b) / h).collect()
        })
        .collect()
}

fn normal_matrix(jac: &[Vec<f64>]) -> Vec<f64> {
    let n = jac.len();
    let mut a = vec![0.0; n * n];
    for p in 0..n {
        for q in 0..=p {
            let v: f64 = jac[p].iter().zip(&jac[q]).map(|(x, y)| x * y).sum();
            a[p * n + q] = v;
            a[q * n + p] = v;
        }
    }
    a
}

/// Minimizes `Σ f(x)_k²` starting from `x0`.
pub fn levenberg_marquardt(
    f: impl Fn(&[f64]) -> Vec<f64>,
    x0: &[f64],
    opts: LmOptions,
) -> Result<LmResult> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut r = f(&x);
    let m = r.len();
    if m < n {
        return Err(Error::IllConditioned(format!(
            "{m} residuals cannot determine {n} parameters"
        )));
    }
    let mut obj = sum_sq(&r);
    if !obj.is_finite() {
        return Err(Error::IllConditioned(
            "non-finite objective at start".into(),
        ));
    }
    let mut history = vec![obj];
    let mut lambda = opts.initial_lambda;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let jac = jacobian(&f, &x, &r);
        let a = normal_matrix(&jac);
        let grad: Vec<f64> = jac
            .iter()
            .map(|col| col.iter().zip(&r).map(|(j, rv)| j * rv).sum())
            .collect();
        if grad.iter().all(|g| g.abs() < 1e-300) || obj == 0.0 {
            converged = true;
            break;
        }
        let mut accepted = false;
        for _ in 0..40 {
            let mut damped = a.clone();
            for k in 0..n {
                damped[k * n + k] += lambda * a[k * n + k].max(1e-12);
            }
            let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
            let step = match linalg::solve(&damped, n, &rhs) {
                Ok(s) => s,
                Err(_) => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
            let rt = f(&trial);
            let ot = sum_sq(&rt);
            if ot.is_finite() && ot < obj {
                let rel_drop = (obj - ot) / obj.max(f64::MIN_POSITIVE);
                let step_norm = step.iter().map(|s| s * s).sum::<f64>().sqrt();
                let x_norm = x.iter().map(|s| s * s).sum::<f64>().sqrt();
                x = trial;
                r = rt;
                obj = ot;
                history.push(obj);
                lambda = (lambda / 3.0).max(1e-15);
                accepted = true;
                if rel_drop < opts.ftol || step_norm < opts.xtol * (x_norm + opts.xtol) {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            // No descent direction left at any damping: a stationary point.
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }

    let std_errors = if m > n {
        let jac = jacobian(&f, &x, &r);
        let a = normal_matrix(&jac);
        let s2 = obj / (m - n) as f64;
        let mut errs = Vec::with_capacity(n);
        let mut ok = true;
        for k in 0..n {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            match linalg::solve(&a, n, &e) {
                Ok(col) if col[k] >= 0.0 => errs.push((s2 * col[k]).sqrt()),
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        ok.then_some(errs)
    } else {
        None
    };

    Ok(LmResult {
        params: x,
        objective: obj,
        history,
        iterations,
        converged,
        std_errors,
    })
}
