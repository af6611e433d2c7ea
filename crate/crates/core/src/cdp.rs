//! Signal estimation on a fixed support (the classical half of the loop).
//!
//! At fixed σ the stationary point satisfies
//! `R_r Σ_k (A_r^k)² = σ_r 𝕳_r` with
//! `𝕳_r = −Σ_{r'≠r} G_rr' R_r' σ_r' + z_r`, i.e. the normal equations
//! `A_σᵀA_σ R_σ = A_σᵀy` restricted to the support. Entries off the support
//! are exactly zero.

use crate::linalg;
use crate::qubo::QuboProblem;
use crate::{CimError, Result, Support};

#[derive(Clone, Debug, PartialEq)]
pub struct CdpResult {
    /// Estimated signal; exactly zero where σ is off.
    pub signal: Vec<f64>,
    /// Max-norm of `R_r ‖A_r‖² − 𝕳_r` over the support.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CdpSolver {
    Jacobi,
    Cgd,
}

impl CdpSolver {
    pub fn name(self) -> &'static str {
        match self {
            CdpSolver::Jacobi => "jacobi",
            CdpSolver::Cgd => "cgd",
        }
    }
}

impl std::str::FromStr for CdpSolver {
    type Err = CimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jacobi" => Ok(CdpSolver::Jacobi),
            "cgd" | "cg" => Ok(CdpSolver::Cgd),
            other => Err(CimError::param("cdp.solver", format!("unknown solver `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CdpSettings {
    pub solver: CdpSolver,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CdpSettings {
    fn default() -> Self {
        CdpSettings { solver: CdpSolver::Cgd, tol: 1e-10, max_iter: 1000 }
    }
}

/// Consecutive residual increases that count as divergence.
const DIVERGENCE_WINDOW: usize = 25;
/// Jacobi gives up once the relaxation weight drops below this.
const MIN_RELAXATION: f64 = 1.0 / 64.0;

pub fn solve_signal(problem: &QuboProblem, sigma: &Support, r0: &[f64], settings: &CdpSettings) -> Result<CdpResult> {
    match settings.solver {
        CdpSolver::Jacobi => solve_signal_jacobi(problem, sigma, r0, settings.tol, settings.max_iter),
        CdpSolver::Cgd => solve_signal_cgd(problem, sigma, r0, settings.tol, settings.max_iter),
    }
}

fn prepare(problem: &QuboProblem, sigma: &Support, r0: &[f64]) -> Result<Vec<f64>> {
    let n = problem.n();
    CimError::check_len("cdp: sigma", n, sigma.len())?;
    CimError::check_len("cdp: initial signal", n, r0.len())?;
    if !linalg::all_finite(r0) {
        return Err(CimError::NonFinite("cdp initial signal"));
    }
    for r in sigma.indices() {
        if problem.col_norms[r] <= 0.0 {
            return Err(CimError::ZeroColumn(r));
        }
    }
    Ok((0..n).map(|r| if sigma.get(r) { r0[r] } else { 0.0 }).collect())
}

/// Replaces `R_r` off the support by its single-coordinate fit
/// `𝕳_r / ‖A_r‖²`, where `𝕳 = z + J(R∘σ)`. `R∘σ` is unchanged, so energy
/// and error metrics are unaffected.
pub fn fill_off_support(problem: &QuboProblem, sigma: &Support, signal: &mut [f64]) -> Result<()> {
    let n = problem.n();
    CimError::check_len("cdp: sigma", n, sigma.len())?;
    CimError::check_len("cdp: signal", n, signal.len())?;
    let u: Vec<f64> = (0..n).map(|r| signal[r] * sigma.value(r)).collect();
    let mut field = vec![0.0; n];
    problem.couple_into(&u, &mut field);
    for r in 0..n {
        if !sigma.get(r) {
            let c = problem.col_norms[r];
            signal[r] = if c > 0.0 { (problem.zeeman[r] + field[r]) / c } else { 0.0 };
        }
    }
    Ok(())
}

/// `res_r = σ_r (z_r − (G x)_r)`; returns the max-norm.
fn residual_into(problem: &QuboProblem, sigma: &Support, x: &[f64], gx: &mut [f64], res: &mut [f64]) -> f64 {
    problem.gram_apply_into(x, gx);
    let mut worst = 0.0f64;
    for r in 0..x.len() {
        res[r] = if sigma.get(r) { problem.zeeman[r] - gx[r] } else { 0.0 };
        worst = worst.max(res[r].abs());
    }
    worst
}

fn empty_result(n: usize) -> CdpResult {
    CdpResult { signal: vec![0.0; n], residual: 0.0, iterations: 0, converged: true }
}

/// Jacobi iteration `R_r ← σ_r 𝕳_r(R) / ‖A_r‖²`, started from `σ∘r0`.
///
/// The support-restricted normal matrix is not diagonally dominant in
/// general, so the sweep is relaxed: `R ← R + ω (σ∘𝕳/‖A‖² − R)` with
/// ω = 1 first. After 25 consecutive residual increases the weight is halved
/// and the iteration restarts from `σ∘r0`; below ω = 1/64 the solve is
/// reported as not converged. `max_iter` bounds the total sweep count.
pub fn solve_signal_jacobi(
    problem: &QuboProblem,
    sigma: &Support,
    r0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<CdpResult> {
    let start = prepare(problem, sigma, r0)?;
    let n = start.len();
    if sigma.count() == 0 {
        return Ok(empty_result(n));
    }
    let mut x = start.clone();
    let mut gx = vec![0.0; n];
    let mut res = vec![0.0; n];
    let mut omega = 1.0;
    let mut rising = 0;
    let mut sweeps = 0;
    let mut residual = residual_into(problem, sigma, &x, &mut gx, &mut res);
    while residual > tol && sweeps < max_iter {
        for r in 0..n {
            if sigma.get(r) {
                x[r] += omega * res[r] / problem.col_norms[r];
            }
        }
        sweeps += 1;
        let next = residual_into(problem, sigma, &x, &mut gx, &mut res);
        rising = if next > residual { rising + 1 } else { 0 };
        residual = next;
        if rising >= DIVERGENCE_WINDOW || !residual.is_finite() {
            omega /= 2.0;
            if omega < MIN_RELAXATION {
                break;
            }
            x.copy_from_slice(&start);
            rising = 0;
            residual = residual_into(problem, sigma, &x, &mut gx, &mut res);
        }
    }
    let converged = residual <= tol;
    if !linalg::all_finite(&x) {
        x.copy_from_slice(&start);
        residual = residual_into(problem, sigma, &x, &mut gx, &mut res);
    }
    Ok(CdpResult { signal: x, residual, iterations: sweeps, converged })
}

/// Conjugate gradients on `A_σᵀA_σ R_σ = A_σᵀy`, started from `σ∘r0`.
///
/// The true residual is recomputed every 50 iterations and at exit.
pub fn solve_signal_cgd(
    problem: &QuboProblem,
    sigma: &Support,
    r0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<CdpResult> {
    let mut x = prepare(problem, sigma, r0)?;
    let n = x.len();
    if sigma.count() == 0 {
        return Ok(empty_result(n));
    }
    let mut gx = vec![0.0; n];
    let mut res = vec![0.0; n];
    let mut residual = residual_into(problem, sigma, &x, &mut gx, &mut res);
    let mut dir = res.clone();
    let mut adir = vec![0.0; n];
    let mut rr = linalg::dot(&res, &res);
    let mut iterations = 0;
    while residual > tol && iterations < max_iter {
        problem.gram_apply_into(&dir, &mut adir);
        for r in 0..n {
            if !sigma.get(r) {
                adir[r] = 0.0;
            }
        }
        let curvature = linalg::dot(&dir, &adir);
        if !(curvature > 0.0) {
            break;
        }
        let step = rr / curvature;
        for r in 0..n {
            x[r] += step * dir[r];
            res[r] -= step * adir[r];
        }
        iterations += 1;
        if iterations % 50 == 0 {
            residual_into(problem, sigma, &x, &mut gx, &mut res);
        }
        let rr_next = linalg::dot(&res, &res);
        residual = linalg::max_abs(&res);
        let beta = rr_next / rr;
        rr = rr_next;
        for r in 0..n {
            dir[r] = res[r] + beta * dir[r];
        }
    }
    let residual = residual_into(problem, sigma, &x, &mut gx, &mut res);
    Ok(CdpResult { converged: residual <= tol, signal: x, residual, iterations })
}

/// Threshold schedule `η_i = max(η_init (1 − i/velo), η_end)`.
pub fn eta_schedule(i: usize, eta_init: f64, eta_end: f64, velo: usize) -> f64 {
    let velo = velo.max(1) as f64;
    (eta_init * (1.0 - i as f64 / velo)).max(eta_end)
}
