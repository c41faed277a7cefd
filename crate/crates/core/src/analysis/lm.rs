//! Damped weighted least squares shared by the nonlinear fits.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 200;
const PARAM_TOLERANCE: f64 = 1e-8;
const CHI2_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone)]
pub(crate) struct LmFit {
    pub params: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub chi2: f64,
    pub dof: usize,
}

impl LmFit {
    pub fn chi2_reduced(&self) -> f64 {
        if self.dof == 0 {
            f64::NAN
        } else {
            self.chi2 / self.dof as f64
        }
    }

    pub fn sigma(&self, k: usize) -> f64 {
        self.covariance[(k, k)].max(0.0).sqrt()
    }
}

/// Minimizes `Σ ((y - f(x; p))/σ)²`.
///
/// `model(x, p, grad)` returns `f` and writes `∂f/∂p` into `grad`.
/// `project` maps a trial parameter vector back into the admissible region.
pub(crate) fn levenberg_marquardt<M, P>(
    xs: &[f64],
    ys: &[f64],
    sigmas: &[f64],
    initial: DVector<f64>,
    model: M,
    project: P,
) -> Result<LmFit>
where
    M: Fn(f64, &DVector<f64>, &mut [f64]) -> f64,
    P: Fn(&mut DVector<f64>),
{
    let (n, m) = (xs.len(), initial.len());
    if n < m {
        return Err(Error::InsufficientData(format!("{n} points for {m} parameters")));
    }
    let mut grad = vec![0.0; m];
    let evaluate = |p: &DVector<f64>, grad: &mut [f64]| {
        let mut jac = DMatrix::zeros(n, m);
        let mut res = DVector::zeros(n);
        for i in 0..n {
            let f = model(xs[i], p, grad);
            res[i] = (ys[i] - f) / sigmas[i];
            for k in 0..m {
                jac[(i, k)] = grad[k] / sigmas[i];
            }
        }
        (res, jac)
    };
    let mut params = initial;
    project(&mut params);
    let (mut res, mut jac) = evaluate(&params, &mut grad);
    let mut chi2 = res.norm_squared();
    if !chi2.is_finite() {
        return Err(Error::NonConvergence(format!("non-finite chi2 at the initial parameters {params:?}")));
    }
    let mut lambda = 1e-3;
    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &res;
        let mut step_taken = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..m {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(mut delta) = a.clone().lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = &params + &delta;
            project(&mut trial);
            // Freeze parameters sitting on a bound the step pushes against.
            let pinned: Vec<usize> = (0..m).filter(|&k| trial[k] != params[k] + delta[k] && trial[k] == params[k]).collect();
            if !pinned.is_empty() {
                let mut rhs = jtr.clone();
                for &k in &pinned {
                    a.row_mut(k).fill(0.0);
                    a.column_mut(k).fill(0.0);
                    a[(k, k)] = 1.0;
                    rhs[k] = 0.0;
                }
                let Some(reduced) = a.lu().solve(&rhs) else {
                    lambda *= 10.0;
                    continue;
                };
                delta = reduced;
                trial = &params + &delta;
                project(&mut trial);
            }
            let (trial_res, trial_jac) = evaluate(&trial, &mut grad);
            let trial_chi2 = trial_res.norm_squared();
            if trial_chi2.is_finite() && trial_chi2 <= chi2 {
                let small_step = (0..m).all(|k| {
                    (trial[k] - params[k]).abs() <= PARAM_TOLERANCE * (params[k].abs() + PARAM_TOLERANCE)
                });
                let stalled = chi2 - trial_chi2 <= CHI2_TOLERANCE * chi2.max(1e-300);
                params = trial;
                res = trial_res;
                jac = trial_jac;
                chi2 = trial_chi2;
                lambda = (lambda / 10.0).max(1e-12);
                step_taken = true;
                converged = small_step || stalled;
                break;
            }
            lambda *= 10.0;
        }
        if !step_taken {
            // No descent direction left at any damping: a minimum.
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence(format!(
            "no convergence after {MAX_ITERATIONS} iterations; chi2 = {chi2:.6e}, parameters = {:?}",
            params.as_slice()
        )));
    }
    let jtj = jac.transpose() * &jac;
    let covariance = match jtj.clone().cholesky() {
        Some(c) => c.inverse(),
        None => jtj.pseudo_inverse(1e-12).map_err(|e| Error::NonConvergence(e.to_string()))?,
    };
    Ok(LmFit { params, covariance, chi2, dof: n - m })
}
