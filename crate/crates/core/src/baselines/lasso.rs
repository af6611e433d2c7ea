//! l1-regularised least squares by proximal gradient (ISTA).

use ndarray::Array2;

use crate::linalg;
use crate::qubo::QuboProblem;
use crate::{CimError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct LassoResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// False when `max_iter` was exhausted before the step fell below `tol`.
    pub converged: bool,
    /// Objective after each iteration (without the constant `½‖y‖²` for the
    /// quadratic-form variant).
    pub objective: Vec<f64>,
}

#[inline]
fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn check_lambda(lam: f64) -> Result<()> {
    if !lam.is_finite() || lam < 0.0 {
        return Err(CimError::param("lambda", format!("must be finite and nonnegative, got {lam}")));
    }
    Ok(())
}

/// Core iteration on `½xᵀQx − bᵀx + lam‖x‖₁`; `grad` writes `Qx` and
/// returns the smooth part of the objective at `x`.
fn ista(
    b: &[f64],
    lam: f64,
    lipschitz: f64,
    tol: f64,
    max_iter: usize,
    mut quad: impl FnMut(&[f64], &mut [f64]) -> f64,
) -> LassoResult {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut qx = vec![0.0; n];
    let mut objective = Vec::new();
    if lipschitz <= 0.0 {
        return LassoResult { x, iterations: 0, converged: true, objective };
    }
    let step = 1.0 / lipschitz;
    let mut converged = false;
    let mut iterations = 0;
    quad(&x, &mut qx);
    while iterations < max_iter {
        let mut change = 0.0f64;
        for r in 0..n {
            let next = soft_threshold(x[r] - step * (qx[r] - b[r]), lam * step);
            change = change.max((next - x[r]).abs());
            x[r] = next;
        }
        iterations += 1;
        // one product per iteration: it serves this objective and the next step
        let smooth = quad(&x, &mut qx);
        objective.push(smooth + lam * x.iter().map(|v| v.abs()).sum::<f64>());
        if change < tol {
            converged = true;
            break;
        }
    }
    LassoResult { x, iterations, converged, objective }
}

/// Minimises `½‖y − Ax‖² + lam‖x‖₁` from `x = 0` with step `1/L`,
/// `L = λ_max(AᵀA)` by power iteration; stops when no entry moves by
/// `tol` or more.
pub fn lasso_ista(a: &Array2<f64>, y: &[f64], lam: f64, tol: f64, max_iter: usize) -> Result<LassoResult> {
    CimError::check_len("lasso: observation", a.nrows(), y.len())?;
    check_lambda(lam)?;
    let n = a.ncols();
    let lipschitz = linalg::power_iteration(
        n,
        |v, w| {
            let av = linalg::matvec(a, v);
            w.copy_from_slice(&linalg::matvec_t(a, &av));
        },
        500,
    ) * (1.0 + 1e-9);
    let b = linalg::matvec_t(a, y);
    let yy = linalg::dot(y, y);
    Ok(ista(&b, lam, lipschitz, tol, max_iter, |x, qx| {
        let ax = linalg::matvec(a, x);
        qx.copy_from_slice(&linalg::matvec_t(a, &ax));
        let resid: f64 = ax.iter().zip(y).map(|(p, q)| (q - p) * (q - p)).sum();
        0.5 * resid - 0.5 * yy
    }))
    .map(|mut res| {
        // report the plain ½‖y − Ax‖² + lam‖x‖₁
        res.objective.iter_mut().for_each(|o| *o += 0.5 * yy);
        res
    })
}

/// LASSO on the quadratic form of a QUBO: `½xᵀGx − zᵀx + lam‖x‖₁` with
/// `G = diag(col_norms) − J`. For problems built from `(A, y)` this equals
/// `½‖y − Ax‖² − ½‖y‖² + lam‖x‖₁`; for the MRI problem it includes the
/// smoothness terms.
pub fn lasso_ista_gram(problem: &QuboProblem, lam: f64, tol: f64, max_iter: usize) -> Result<LassoResult> {
    check_lambda(lam)?;
    let n = problem.n();
    let lipschitz = linalg::power_iteration(n, |v, w| problem.gram_apply_into(v, w), 500) * (1.0 + 1e-9);
    Ok(ista(&problem.zeeman, lam, lipschitz, tol, max_iter, |x, qx| {
        problem.gram_apply_into(x, qx);
        0.5 * linalg::dot(x, qx) - linalg::dot(&problem.zeeman, x)
    }))
}
