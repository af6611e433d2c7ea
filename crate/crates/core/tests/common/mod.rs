//! Independent reference implementations and the deterministic kernel
//! checks shared by the kernel tests and the acceptance runner.

#![allow(dead_code)]

use cimcs::altmin::{run_alt_min_with, AltMinConfig, OffSupport, SignalInit, SupportEstimator};
use cimcs::baselines::sa::{sa_from, SaSchedule};
use cimcs::cdp::{eta_schedule, solve_signal_cgd, solve_signal_jacobi, CdpSettings};
use cimcs::instance::{direction_cosine, hamming_loss, rmse};
use cimcs::mri::dft::{fft2, ifft2};
use cimcs::mri::{haar_forward, haar_inverse};
use cimcs::qubo::{brute_force_ground_state, build_qubo, local_field_cac, local_field_ol};
use cimcs::rng::{self, streams, SimRng};
use cimcs::sde::{
    cim_support_estimation, pump_cac, pump_ol, step_positive_p, step_wigner_cac, step_wigner_ol, Model, PositivePState,
    SdeParams, WignerCacState, WignerOlState,
};
use cimcs::{gen_instance, Instance, InstanceParams, QuboProblem, Support};
use nalgebra::{DMatrix, DVector};
use ndarray::Array2;

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err(format!($($arg)*));
        }
    };
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

pub fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// M×N matrix of standard normals scaled by `1/√M`.
pub fn random_matrix(m: usize, n: usize, seed: u64) -> Array2<f64> {
    let mut g = rng::stream(seed, 99);
    Array2::from_shape_fn((m, n), |_| rng::normal(&mut g) / (m as f64).sqrt())
}

pub fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut g = rng::stream(seed, 98);
    (0..n).map(|_| rng::normal(&mut g)).collect()
}

pub fn random_support(n: usize, k: usize, seed: u64) -> Support {
    let mut g = rng::stream(seed, 97);
    let mut idx: Vec<usize> = (0..n).collect();
    use rand::seq::SliceRandom;
    idx.shuffle(&mut g);
    let mut s = Support::zeros(n);
    for &i in &idx[..k] {
        s.set(i, true);
    }
    s
}

/// `G = AᵀA` by explicit triple loop.
pub fn naive_gram(a: &Array2<f64>) -> Vec<Vec<f64>> {
    let (m, n) = a.dim();
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..m {
                g[i][j] += a[[k, i]] * a[[k, j]];
            }
        }
    }
    g
}

pub fn naive_zeeman(a: &Array2<f64>, y: &[f64]) -> Vec<f64> {
    let (m, n) = a.dim();
    (0..n).map(|i| (0..m).map(|k| a[[k, i]] * y[k]).sum()).collect()
}

/// `Σ_{r<r'} G R R σ σ − Σ z R σ + λ Σ σ`, term by term.
pub fn naive_energy(a: &Array2<f64>, y: &[f64], r: &[f64], sigma: &[bool], lambda: f64) -> f64 {
    let g = naive_gram(a);
    let z = naive_zeeman(a, y);
    let n = r.len();
    let s = |i: usize| if sigma[i] { 1.0 } else { 0.0 };
    let mut e = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            e += g[i][j] * r[i] * r[j] * s(i) * s(j);
        }
    }
    for i in 0..n {
        e -= z[i] * r[i] * s(i);
        e += lambda * s(i);
    }
    e
}

/// `h_r = −Σ_{r'≠r} G_rr' R_r' w_r' + scale z_r`.
fn naive_field(a: &Array2<f64>, y: &[f64], r: &[f64], w: &[f64], scale: f64) -> Vec<f64> {
    let g = naive_gram(a);
    let z = naive_zeeman(a, y);
    let n = r.len();
    (0..n)
        .map(|i| {
            let mut h = scale * z[i];
            for j in 0..n {
                if j != i {
                    h -= g[i][j] * r[j] * w[j];
                }
            }
            h
        })
        .collect()
}

pub fn naive_field_ol(a: &Array2<f64>, y: &[f64], r: &[f64], c: &[f64]) -> Vec<f64> {
    let w: Vec<f64> = c.iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }).collect();
    naive_field(a, y, r, &w, 1.0)
}

pub fn naive_field_cac(a: &Array2<f64>, y: &[f64], r: &[f64], mu: &[f64], tau: f64, g2: f64) -> Vec<f64> {
    let t = (tau / g2).sqrt();
    let w: Vec<f64> = mu.iter().map(|&m| 0.5 * (m + t)).collect();
    naive_field(a, y, r, &w, t)
}

/// Minimises `½‖y − A_σ R_σ‖²` by a dense Cholesky solve.
pub fn direct_solve(a: &Array2<f64>, y: &[f64], sigma: &Support) -> Vec<f64> {
    let idx = sigma.indices();
    let m = a.nrows();
    let sub = DMatrix::from_fn(m, idx.len(), |i, j| a[[i, idx[j]]]);
    let normal = sub.transpose() * &sub;
    let rhs = sub.transpose() * DVector::from_column_slice(y);
    let x = normal.cholesky().expect("full column rank").solve(&rhs);
    let mut out = vec![0.0; a.ncols()];
    for (j, &i) in idx.iter().enumerate() {
        out[i] = x[j];
    }
    out
}

fn sigmoid_pump(t: f64, p_thr: f64, d: f64) -> f64 {
    p_thr - d + 2.0 * d / (1.0 + (-(t - 4.0) / 2.0).exp())
}

fn quadratic_pump(t: f64) -> f64 {
    let t = t.clamp(0.0, 5.0);
    1.5 * t * t / 25.0
}

/// One open-loop step written out per pulse.
pub fn reference_step_ol(
    a: &Array2<f64>,
    y: &[f64],
    signal: &[f64],
    eta: f64,
    p: &SdeParams,
    c: &[f64],
    s: &[f64],
    t: f64,
    g: &mut SimRng,
) -> (Vec<f64>, Vec<f64>) {
    let n = c.len();
    let dt = p.t_end / p.steps as f64;
    let mut w = vec![(0.0, 0.0); n];
    if p.noise_on {
        for wi in w.iter_mut() {
            let w1 = rng::normal(g);
            let w2 = rng::normal(g);
            *wi = (w1, w2);
        }
    }
    let h = naive_field_ol(a, y, signal, c);
    let pump = quadratic_pump(t);
    let mut c2 = vec![0.0; n];
    let mut s2 = vec![0.0; n];
    for i in 0..n {
        let amp = c[i] * c[i] + s[i] * s[i];
        let diff = p.g2.sqrt() * (amp + 0.5).sqrt() * dt.sqrt();
        c2[i] = c[i] + dt * ((-1.0 + pump - amp) * c[i] + p.k * (h[i].abs() - eta)) + diff * w[i].0;
        s2[i] = s[i] + dt * ((-1.0 - pump - amp) * s[i]) + diff * w[i].1;
    }
    (c2, s2)
}

/// Measured amplitudes and the shared Gaussian draws of a CAC step.
fn measured(mu: &[f64], p: &SdeParams, g: &mut SimRng) -> (Vec<f64>, Vec<f64>) {
    let dt = p.t_end / p.steps as f64;
    let w: Vec<f64> = mu.iter().map(|_| if p.noise_on { rng::normal(g) } else { 0.0 }).collect();
    let mt = mu.iter().zip(&w).map(|(m, wi)| m + wi / (4.0 * p.j * dt).sqrt()).collect();
    (mt, w)
}

/// One amplitude-controlled Wigner step; returns (μ, V, e, μ̃).
#[allow(clippy::too_many_arguments)]
pub fn reference_step_cac(
    a: &Array2<f64>,
    y: &[f64],
    signal: &[f64],
    eta: f64,
    p: &SdeParams,
    mu: &[f64],
    v: &[f64],
    e: &[f64],
    t: f64,
    g: &mut SimRng,
) -> [Vec<f64>; 4] {
    let n = mu.len();
    let dt = p.t_end / p.steps as f64;
    let (mt, w) = measured(mu, p, g);
    let h = naive_field_cac(a, y, signal, &mt, p.tau, p.g2);
    let target = (p.tau / p.g2).sqrt();
    let pump = sigmoid_pump(t, p.p_thr, p.d);
    let (mut mu2, mut v2, mut e2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for i in 0..n {
        let inj = p.j * e[i] * (signal[i] * h[i] - eta * eta / 4.0 * target);
        let gm = p.g2 * mu[i] * mu[i];
        let dmu = -(1.0 - pump + p.j) * mu[i] - p.g2 * mu[i].powi(3) + p.k * inj;
        let dv = -2.0 * (1.0 - pump + p.j) * v[i] - 6.0 * gm * v[i] + 1.0 + p.j + 2.0 * gm
            - 2.0 * p.j * (v[i] - 0.5).powi(2);
        mu2[i] = mu[i] + dmu * dt + p.j.sqrt() * (v[i] - 0.5) * w[i] * dt.sqrt();
        v2[i] = v[i] + dv * dt;
        e2[i] = e[i] * (-p.beta * (p.g2 * mt[i] * mt[i] - p.tau) * dt).exp();
    }
    [mu2, v2, e2, mt]
}

/// One Positive-P step; returns (μ, n, m, e).
#[allow(clippy::too_many_arguments)]
pub fn reference_step_pp(
    a: &Array2<f64>,
    y: &[f64],
    signal: &[f64],
    eta: f64,
    p: &SdeParams,
    mu: &[f64],
    nn: &[f64],
    mm: &[f64],
    e: &[f64],
    t: f64,
    g: &mut SimRng,
) -> [Vec<f64>; 4] {
    let size = mu.len();
    let dt = p.t_end / p.steps as f64;
    let (mt, w) = measured(mu, p, g);
    let h = naive_field_cac(a, y, signal, &mt, p.tau, p.g2);
    let target = (p.tau / p.g2).sqrt();
    let pump = sigmoid_pump(t, p.p_thr, p.d);
    let mut out = [vec![0.0; size], vec![0.0; size], vec![0.0; size], vec![0.0; size]];
    for i in 0..size {
        let (u, n, m) = (mu[i], nn[i], mm[i]);
        let inj = p.j * e[i] * (signal[i] * h[i] - eta * eta / 4.0 * target);
        let gu = p.g2 * u * u;
        let du = -(1.0 - pump + p.j) * u - p.g2 * u * (u * u + 2.0 * n + m) + p.k * inj;
        let dn = -2.0 * (1.0 + p.j) * n + 2.0 * pump * m - 2.0 * gu * (2.0 * n + m) - p.j * (m + n).powi(2);
        let dm = -2.0 * (1.0 + p.j) * m + 2.0 * pump * n - 2.0 * gu * (2.0 * m + n) + pump - p.g2 * (u * u + m)
            - p.j * (m + n).powi(2);
        out[0][i] = u + du * dt + p.j.sqrt() * (m + n) * w[i] * dt.sqrt();
        out[1][i] = n + dn * dt;
        out[2][i] = m + dm * dt;
        out[3][i] = e[i] * (-p.beta * (p.g2 * mt[i] * mt[i] - p.tau) * dt).exp();
    }
    out
}

/// Fixed 3×4 problem for the single-step comparisons.
pub fn frozen_problem() -> (Array2<f64>, Vec<f64>, Vec<f64>) {
    let a = Array2::from_shape_vec(
        (3, 4),
        vec![0.5, -0.3, 0.8, 0.1, 0.2, 0.7, -0.4, 0.6, -0.6, 0.1, 0.3, 0.9],
    )
    .unwrap();
    let y = vec![0.4, -0.2, 0.7];
    let signal = vec![0.9, -0.5, 0.3, 1.2];
    (a, y, signal)
}

fn rel_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / (1.0 + y.abs())).fold(0.0, f64::max)
}

// ---- individual checks ----

pub fn check_qubo_couplings() -> Check {
    let a = random_matrix(8, 12, 1);
    let y = random_vec(8, 2);
    let q = build_qubo(&a, &y, 0.05).map_err(|e| e.to_string())?;
    let g = naive_gram(&a);
    for i in 0..12 {
        for j in 0..12 {
            let want = if i == j { 0.0 } else { -g[i][j] };
            ensure!((q.coupling[[i, j]] - want).abs() <= 1e-12, "J[{i},{j}] = {} vs {want}", q.coupling[[i, j]]);
        }
        ensure!((q.col_norms[i] - g[i][i]).abs() <= 1e-12, "col norm {i}");
    }
    ensure!(max_gap(&q.zeeman, &naive_zeeman(&a, &y)) <= 1e-12, "zeeman");
    ensure!(q.lambda() == 0.05 * 0.05 / 2.0, "lambda {}", q.lambda());
    Ok(())
}

pub fn check_qubo_trivial() -> Check {
    let a = Array2::eye(2);
    let q = build_qubo(&a, &[1.0, 2.0], 0.0).map_err(|e| e.to_string())?;
    ensure!(q.coupling.iter().all(|&v| v == 0.0), "identity couplings");
    ensure!(q.zeeman == vec![1.0, 2.0] && q.col_norms == vec![1.0, 1.0] && q.lambda() == 0.0, "identity fields");
    let mut q = build_qubo(&a, &[2.0, 0.0], 0.0).map_err(|e| e.to_string())?;
    q.set_lambda(0.1).map_err(|e| e.to_string())?;
    let e = q.energy(&[1.0, 1.0], &Support::from_bits(vec![true, false])).map_err(|e| e.to_string())?.energy;
    ensure!((e - -1.9).abs() < 1e-15, "single-spin energy {e}");
    let e0 = q.energy(&[1.0, 1.0], &Support::zeros(2)).map_err(|e| e.to_string())?.energy;
    ensure!(e0 == 0.0, "empty support energy {e0}");
    Ok(())
}

pub fn check_energy_oracle() -> Check {
    let a = random_matrix(7, 10, 3);
    let y = random_vec(7, 4);
    let r = random_vec(10, 5);
    let q = build_qubo(&a, &y, 0.3).map_err(|e| e.to_string())?;
    for code in [0u64, 1, 0b1011_0110_01, 0b11_1111_1111, 0b0101_0101_01] {
        let s = Support::from_code(code, 10);
        let got = q.energy(&r, &s).map_err(|e| e.to_string())?.energy;
        let want = naive_energy(&a, &y, &r, s.as_slice(), q.lambda());
        ensure!((got - want).abs() <= 1e-12 * (1.0 + want.abs()), "code {code}: {got} vs {want}");
    }
    Ok(())
}

pub fn check_local_fields() -> Check {
    let a = random_matrix(9, 12, 6);
    let y = random_vec(9, 7);
    let r = random_vec(12, 8);
    let c = random_vec(12, 9);
    let q = build_qubo(&a, &y, 0.1).map_err(|e| e.to_string())?;
    let h = local_field_ol(&q, &r, &c).map_err(|e| e.to_string())?;
    ensure!(max_gap(&h, &naive_field_ol(&a, &y, &r, &c)) <= 1e-12, "open-loop field");
    let (tau, g2) = (1.0, 1e-7);
    let mu: Vec<f64> = c.iter().map(|v| v * 3000.0).collect();
    let h = local_field_cac(&q, &r, &mu, tau, g2).map_err(|e| e.to_string())?;
    let want = naive_field_cac(&a, &y, &r, &mu, tau, g2);
    ensure!(rel_gap(&h, &want) <= 1e-10, "amplitude-controlled field");

    // trivial cases
    let neg = vec![-1.0; 12];
    ensure!(local_field_ol(&q, &r, &neg).unwrap() == q.zeeman, "c <= 0 gives h = z");
    let t = (tau / g2).sqrt();
    let h = local_field_cac(&q, &r, &vec![-t; 12], tau, g2).unwrap();
    ensure!(max_gap(&h, &q.zeeman.iter().map(|z| t * z).collect::<Vec<_>>()) <= 1e-9, "mu = -target");
    let id = build_qubo(&Array2::eye(3), &[1.0, -2.0, 3.0], 0.0).unwrap();
    ensure!(local_field_ol(&id, &[1.0; 3], &[1.0; 3]).unwrap() == vec![1.0, -2.0, 3.0], "identity open loop");
    let h = local_field_cac(&id, &[1.0; 3], &[t; 3], tau, g2).unwrap();
    ensure!(h == vec![t, -2.0 * t, 3.0 * t], "identity amplitude-controlled");
    Ok(())
}

pub fn check_brute_force() -> Check {
    let a = random_matrix(8, 12, 10);
    let y = random_vec(8, 11);
    let r = random_vec(12, 12);
    let q = build_qubo(&a, &y, 0.4).map_err(|e| e.to_string())?;
    let (best, e) = brute_force_ground_state(&q, &r).map_err(|e| e.to_string())?;
    let mut naive_best = f64::INFINITY;
    for code in 0..(1u64 << 12) {
        let s = Support::from_code(code, 12);
        naive_best = naive_best.min(naive_energy(&a, &y, &r, s.as_slice(), q.lambda()));
    }
    ensure!((e - naive_best).abs() <= 1e-12 * (1.0 + e.abs()), "ground {e} vs exhaustive {naive_best}");
    ensure!((q.energy(&r, &best).unwrap().energy - e).abs() <= 1e-12, "reported energy");
    let mut g = rng::stream(13, 0);
    use rand::Rng;
    for _ in 0..1000 {
        let s = Support::from_code(g.random_range(0..(1u64 << 12)), 12);
        ensure!(q.energy(&r, &s).unwrap().energy >= e - 1e-12, "sample below ground");
    }
    // N = 1: include iff the gain exceeds the penalty
    let one = build_qubo(&Array2::eye(1), &[0.5], 0.2).unwrap();
    let (s, _) = brute_force_ground_state(&one, &[1.0]).unwrap();
    ensure!(s.get(0), "N=1 gain 0.5 > 0.02");
    Ok(())
}

pub fn check_pumps() -> Check {
    ensure!(pump_cac(4.0, 1.0, 0.6) == 1.0, "pump_cac midpoint");
    ensure!((pump_cac(-1e6, 1.0, 0.6) - 0.4).abs() < 1e-15, "pump_cac limit");
    ensure!((pump_cac(20.0, 1.0, 0.4) - 1.4).abs() < 1e-3, "pump_cac(20)");
    ensure!(pump_ol(0.0) == 0.0 && pump_ol(5.0) == 1.5 && pump_ol(2.5) == 0.375, "pump_ol");
    Ok(())
}

pub fn check_eta_schedule() -> Check {
    ensure!(eta_schedule(0, 0.6, 0.18, 51) == 0.6, "i = 0");
    ensure!(eta_schedule(51, 0.6, 0.18, 51) == 0.18, "i = velo");
    ensure!(eta_schedule(51, 0.6, 0.0, 51) == 0.0, "i = velo, floor 0");
    let want = 0.6 * (26.0 / 51.0);
    ensure!((eta_schedule(25, 0.6, 0.18, 51) - want).abs() < 1e-15, "i = 25");
    Ok(())
}

fn sde_params(model: Model, seed: u64) -> SdeParams {
    let mut p = SdeParams::default_for(model).with_seed(seed);
    p.g2 = 1e-4;
    p
}

pub fn check_sde_reference_steps() -> Check {
    let (a, y, signal) = frozen_problem();
    let q = build_qubo(&a, &y, 0.3).unwrap();
    let eta = 0.3;

    let p = sde_params(Model::WignerOl, 21);
    let st = WignerOlState { c: vec![0.2, -0.4, 0.05, 0.7], s: vec![0.01, -0.02, 0.03, 0.0], t: 1.3, steps_taken: 13 };
    let next = step_wigner_ol(&st, &q, &signal, eta, &p, &mut rng::stream(p.seed, streams::SDE)).unwrap();
    let (c, s) = reference_step_ol(&a, &y, &signal, eta, &p, &st.c, &st.s, st.t, &mut rng::stream(p.seed, streams::SDE));
    ensure!(rel_gap(&next.c, &c) <= 1e-14 && rel_gap(&next.s, &s) <= 1e-14, "open-loop step");

    let p = sde_params(Model::WignerCac, 22);
    let st = WignerCacState {
        mu: vec![40.0, -25.0, 90.0, 3.0],
        v: vec![0.5, 0.6, 0.45, 0.52],
        e: vec![1.0, 1.3, 0.8, 2.0],
        mu_tilde: vec![0.0; 4],
        t: 3.0,
        steps_taken: 150,
    };
    let next = step_wigner_cac(&st, &q, &signal, eta, &p, &mut rng::stream(p.seed, streams::SDE)).unwrap();
    let want = reference_step_cac(&a, &y, &signal, eta, &p, &st.mu, &st.v, &st.e, st.t, &mut rng::stream(p.seed, streams::SDE));
    ensure!(rel_gap(&next.mu, &want[0]) <= 1e-14, "cac mu {:?} vs {:?}", next.mu, want[0]);
    ensure!(rel_gap(&next.v, &want[1]) <= 1e-14, "cac V");
    ensure!(rel_gap(&next.e, &want[2]) <= 1e-14, "cac e");
    ensure!(rel_gap(&next.mu_tilde, &want[3]) <= 1e-14, "cac measurement");

    let p = sde_params(Model::PositiveP, 23);
    let st = PositivePState {
        mu: vec![40.0, -25.0, 90.0, 3.0],
        n: vec![0.01, 0.02, -0.01, 0.0],
        m: vec![0.1, -0.05, 0.2, 0.3],
        e: vec![1.0, 1.3, 0.8, 2.0],
        mu_tilde: vec![0.0; 4],
        t: 3.0,
        steps_taken: 150,
    };
    let next = step_positive_p(&st, &q, &signal, eta, &p, &mut rng::stream(p.seed, streams::SDE)).unwrap();
    let want = reference_step_pp(
        &a, &y, &signal, eta, &p, &st.mu, &st.n, &st.m, &st.e, st.t, &mut rng::stream(p.seed, streams::SDE),
    );
    ensure!(rel_gap(&next.mu, &want[0]) <= 1e-14, "positive-p mu");
    ensure!(rel_gap(&next.n, &want[1]) <= 1e-14, "positive-p n");
    ensure!(rel_gap(&next.m, &want[2]) <= 1e-14, "positive-p m");
    ensure!(rel_gap(&next.e, &want[3]) <= 1e-14, "positive-p e");
    Ok(())
}

pub fn check_sde_fixed_points() -> Check {
    let (a, y, signal) = frozen_problem();
    let q = build_qubo(&a, &y, 0.2).unwrap();
    let mut g = rng::stream(0, streams::SDE);

    // open loop at the origin: dc/dt = K̃(|z| − η)
    let mut p = SdeParams::ol_default();
    p.noise_on = false;
    let dt = p.dt();
    let st = WignerOlState::new(4);
    let next = step_wigner_ol(&st, &q, &signal, 0.2, &p, &mut g).unwrap();
    for r in 0..4 {
        let want = dt * p.k * (q.zeeman[r].abs() - 0.2);
        ensure!((next.c[r] - want).abs() <= 1e-15, "origin drift pulse {r}");
        ensure!(next.s[r] == 0.0, "quadrature stays 0");
    }
    // no injection, early pump: c decays monotonically
    p.k = 0.0;
    let mut st = WignerOlState { c: vec![0.5, -0.8, 0.3, 1.0], s: vec![0.0; 4], t: 0.0, steps_taken: 0 };
    for _ in 0..10 {
        let next = step_wigner_ol(&st, &q, &signal, 0.2, &p, &mut g).unwrap();
        for r in 0..4 {
            ensure!(next.c[r].abs() < st.c[r].abs(), "decay pulse {r}");
        }
        st = next;
    }

    // CAC: V = 1/2 is fixed at zero amplitude, zero pump and no injection
    let mut p = SdeParams::cac_default();
    p.noise_on = false;
    p.p_thr = 0.0;
    p.d = 0.0;
    let zero = vec![0.0; 4];
    let next = step_wigner_cac(&WignerCacState::new(4), &q, &zero, 0.0, &p, &mut g).unwrap();
    ensure!(next.v == vec![0.5; 4] && next.mu == zero, "V = 1/2 fixed point");
    // e is constant when the measured amplitude sits on target
    let t = p.target_amplitude();
    let st = WignerCacState { mu: vec![t; 4], v: vec![0.5; 4], e: vec![1.7; 4], mu_tilde: zero.clone(), t: 0.0, steps_taken: 0 };
    let next = step_wigner_cac(&st, &q, &signal, 0.2, &p, &mut g).unwrap();
    ensure!(next.e == vec![1.7; 4], "e constant on target");

    // Positive-P vacuum, then the pump source term
    let next = step_positive_p(&PositivePState::new(4), &q, &zero, 0.0, &p, &mut g).unwrap();
    ensure!(next.mu == zero && next.n == zero && next.m == zero, "vacuum fixed point");
    p.p_thr = 1.0;
    let next = step_positive_p(&PositivePState::new(4), &q, &zero, 0.0, &p, &mut g).unwrap();
    ensure!(next.m.iter().all(|&m| (m - p.dt()).abs() < 1e-15), "dm/dt = p {:?}", next.m);
    ensure!(next.n == zero, "n stays 0");
    Ok(())
}

pub fn check_support_estimation_identity() -> Check {
    let n = 64;
    let inst = gen_instance(InstanceParams { n, alpha: 1.0, sparseness: 0.3, nu: 0.0, seed: 31 }).unwrap();
    let id = Instance::from_parts(Array2::eye(n), inst.signal.clone(), inst.support.clone(), 0).unwrap();
    let eta = 0.02;
    let q = build_qubo(&id.matrix, &id.observation, eta).unwrap();
    for model in [Model::WignerCac, Model::PositiveP] {
        for seed in 0..20 {
            let p = SdeParams::default_for(model).with_seed(seed);
            let est = cim_support_estimation(model, &q, &id.signal, eta, &p, None).unwrap();
            let agree = est.sigma.iter().zip(id.support.iter()).filter(|(a, b)| a == b).count();
            ensure!(agree as f64 >= 0.95 * n as f64, "{model} seed {seed}: {agree}/{n}");
        }
    }
    // y = 0 and R = 0: the penalty drives every pulse off
    let empty = Instance::from_parts(random_matrix(20, 30, 3), vec![0.0; 30], Support::zeros(30), 0).unwrap();
    let q = build_qubo(&empty.matrix, &empty.observation, 0.05).unwrap();
    for model in [Model::WignerCac, Model::PositiveP] {
        let mut ones = 0;
        for seed in 0..20 {
            let p = SdeParams::default_for(model).with_seed(seed);
            ones += cim_support_estimation(model, &q, &[0.0; 30], 0.05, &p, None).unwrap().sigma.count();
        }
        ensure!((ones as f64) < 0.1 * 600.0, "{model}: {ones} of 600 pulses on");
    }
    Ok(())
}

pub fn check_cdp_direct_solve() -> Check {
    let a = random_matrix(20, 30, 40);
    let y = random_vec(20, 41);
    let q = build_qubo(&a, &y, 0.1).unwrap();
    let sigma = random_support(30, 8, 42);
    let direct = direct_solve(&a, &y, &sigma);
    let jac = solve_signal_jacobi(&q, &sigma, &vec![0.0; 30], 1e-12, 100_000).unwrap();
    ensure!(jac.converged, "jacobi did not converge");
    ensure!(max_gap(&jac.signal, &direct) <= 1e-8, "jacobi vs direct {:e}", max_gap(&jac.signal, &direct));

    let a = random_matrix(40, 60, 43);
    let y = random_vec(40, 44);
    let q = build_qubo(&a, &y, 0.1).unwrap();
    let sigma = random_support(60, 15, 45);
    let direct = direct_solve(&a, &y, &sigma);
    let cg = solve_signal_cgd(&q, &sigma, &vec![0.0; 60], 1e-12, 1000).unwrap();
    let jac = solve_signal_jacobi(&q, &sigma, &vec![0.0; 60], 1e-12, 100_000).unwrap();
    ensure!(cg.converged, "cgd did not converge");
    ensure!(max_gap(&cg.signal, &direct) <= 1e-8, "cgd vs direct {:e}", max_gap(&cg.signal, &direct));
    ensure!(max_gap(&cg.signal, &jac.signal) <= 1e-6, "cgd vs jacobi");
    for r in 0..60 {
        ensure!(sigma.get(r) || cg.signal[r] == 0.0, "off-support entry {r}");
    }

    // trivial cases
    let empty = solve_signal_cgd(&q, &Support::zeros(60), &vec![1.0; 60], 1e-10, 10).unwrap();
    ensure!(empty.signal == vec![0.0; 60] && empty.iterations == 0 && empty.residual == 0.0, "empty support");
    let id = build_qubo(&Array2::eye(4), &[1.0, -2.0, 3.0, 4.0], 0.0).unwrap();
    let s = Support::from_bits(vec![true, true, false, true]);
    let jac = solve_signal_jacobi(&id, &s, &[0.0; 4], 1e-12, 10).unwrap();
    ensure!(jac.signal == vec![1.0, -2.0, 0.0, 4.0] && jac.iterations == 1, "identity jacobi {:?}", jac);
    let mut orth = random_matrix(6, 5, 46);
    for r in 0..6 {
        for c in 0..3 {
            orth[[r, c]] = if r == c { 1.0 } else { 0.0 };
        }
    }
    let yy = random_vec(6, 47);
    let q = build_qubo(&orth, &yy, 0.0).unwrap();
    let s = Support::from_bits(vec![true, true, true, false, false]);
    let cg = solve_signal_cgd(&q, &s, &[0.0; 5], 1e-12, 10).unwrap();
    ensure!(cg.iterations == 1, "orthonormal support took {} iterations", cg.iterations);
    for r in 0..3 {
        ensure!((cg.signal[r] - q.zeeman[r] / q.col_norms[r]).abs() < 1e-14, "orthonormal entry {r}");
    }
    Ok(())
}

struct Fixed(Support);

impl SupportEstimator for Fixed {
    fn estimate(&mut self, _: &QuboProblem, _: &[f64], _: f64, _: &SdeParams) -> cimcs::Result<Support> {
        Ok(self.0.clone())
    }
}

pub fn check_altmin_plumbing() -> Check {
    let inst = gen_instance(InstanceParams { n: 40, alpha: 0.7, sparseness: 0.3, nu: 0.01, seed: 50 }).unwrap();
    let mut cfg = AltMinConfig::synthetic(Model::WignerCac, 0.6, 0.18);
    cfg.iterations = 1;
    cfg.off_support = OffSupport::Zero;
    let r0 = random_vec(40, 51);
    let mut q = build_qubo(&inst.matrix, &inst.observation, 0.6).unwrap();
    let tr = run_alt_min_with(&mut q, r0.clone(), None, &cfg, &mut Fixed(inst.support.clone())).unwrap();
    let direct = solve_signal_cgd(&q, &inst.support, &r0, cfg.cdp.tol, cfg.cdp.max_iter).unwrap();
    ensure!(tr.records.len() == 1, "one iteration");
    ensure!(tr.signal == direct.signal, "one iteration is one signal solve");

    // identity observation, noiseless: exact recovery once η/2 < min |x|
    let n = 64;
    let g = gen_instance(InstanceParams { n, alpha: 1.0, sparseness: 0.2, nu: 0.0, seed: 52 }).unwrap();
    let id = Instance::from_parts(Array2::eye(n), g.signal.clone(), g.support.clone(), 0).unwrap();
    let min_x = id.support.indices().iter().map(|&r| id.signal[r].abs()).fold(f64::INFINITY, f64::min);
    let mut cfg = AltMinConfig::synthetic(Model::WignerCac, 0.6_f64.max(min_x), min_x);
    cfg.seed = 3;
    let tr = cimcs::altmin::run_alt_min(&id, &cfg).unwrap();
    let err = tr.last().metrics.unwrap().rmse;
    ensure!(err < 1e-6, "identity recovery rmse {err}");

    // y = 0: nothing turns on
    let zero = Instance::from_parts(random_matrix(20, 30, 53), vec![0.0; 30], Support::zeros(30), 0).unwrap();
    for model in Model::ALL {
        let mut cfg = AltMinConfig::synthetic(model, 0.6, 0.18);
        cfg.r_init = SignalInit::MatchedFilter;
        let tr = cimcs::altmin::run_alt_min(&zero, &cfg).unwrap();
        ensure!(tr.sigma.count() == 0, "{model}: support {}", tr.sigma.count());
        ensure!(tr.signal.iter().all(|&v| v == 0.0), "{model}: nonzero signal");
        ensure!(tr.last().energy == 0.0, "{model}: energy");
    }
    Ok(())
}

pub fn check_annealing() -> Check {
    let a = random_matrix(8, 12, 60);
    let y = random_vec(8, 61);
    let r = random_vec(12, 62);
    let q = build_qubo(&a, &y, 0.3).unwrap();
    let (ground, e) = brute_force_ground_state(&q, &r).unwrap();
    let res = sa_from(&q, &r, &SaSchedule::zero(50), 1, ground.clone()).map_err(|e| e.to_string())?;
    ensure!(res.sigma == ground, "left the ground state");
    ensure!(res.energy_trace.iter().all(|&t| (t - e).abs() < 1e-12), "energy moved");
    ensure!(res.max_drift <= 1e-10, "incremental drift {}", res.max_drift);
    Ok(())
}

pub fn check_metrics() -> Check {
    let xi = Support::from_bits(vec![true, true, false, false]);
    let dc = |s: Vec<bool>| direction_cosine(&xi, &Support::from_bits(s)).unwrap().0;
    ensure!(dc(vec![true, true, false, false]) == 1.0, "identical");
    ensure!(dc(vec![false, false, true, true]) == 0.0, "disjoint");
    ensure!(dc(vec![true, false, true, false]) == 0.5, "half overlap");
    ensure!(hamming_loss(&xi, &xi).unwrap() == 0.0, "hamming identical");
    ensure!(hamming_loss(&Support::from_bits(vec![true, false, false, false]), &xi).unwrap() == 0.25, "one mismatch");
    ensure!(hamming_loss(&xi.complement(), &xi).unwrap() == 1.0, "complement");
    let x = vec![1.0, 2.0, 3.0, 4.0];
    ensure!(rmse(&x, &xi, &x, &xi).unwrap() == 0.0, "exact recovery");
    let est = vec![2.0, 2.0, 0.0, 0.0];
    ensure!(rmse(&est, &xi, &x, &xi).unwrap() == 0.5, "sqrt(1/4)");

    let n = 100;
    let (est, x) = (random_vec(n, 70), random_vec(n, 71));
    let (s, t) = (random_support(n, 40, 72), random_support(n, 30, 73));
    let mut sum = 0.0;
    for r in 0..n {
        let d = est[r] * if s.get(r) { 1.0 } else { 0.0 } - x[r] * if t.get(r) { 1.0 } else { 0.0 };
        sum += d * d;
    }
    ensure!((rmse(&est, &s, &x, &t).unwrap() - (sum / n as f64).sqrt()).abs() <= 1e-12, "random rmse");
    Ok(())
}

pub fn check_instance_statistics() -> Check {
    let inst = gen_instance(InstanceParams { n: 500, alpha: 0.6, sparseness: 0.6, nu: 0.0, seed: 7 }).unwrap();
    ensure!(inst.m() == 300 && inst.support.count() == 300, "dims");
    let vals: Vec<f64> = inst.matrix.iter().copied().collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
    ensure!((var * 300.0 - 1.0).abs() < 0.1, "variance {var}");
    let full = gen_instance(InstanceParams { n: 10, alpha: 1.0, sparseness: 1.0, nu: 0.0, seed: 1 }).unwrap();
    ensure!(full.support.count() == 10, "full support");
    let ax = cimcs::linalg::matvec(&full.matrix, &full.signal);
    ensure!(ax == full.observation, "y = Ax exactly");
    let again = gen_instance(InstanceParams { n: 10, alpha: 1.0, sparseness: 1.0, nu: 0.0, seed: 1 }).unwrap();
    ensure!(again == full, "determinism");
    Ok(())
}

pub fn check_transform_round_trips() -> Check {
    let mut g = rng::stream(80, 0);
    let img = Array2::from_shape_fn((64, 64), |_| rng::normal(&mut g));
    let back = haar_inverse(&haar_forward(&img).unwrap()).unwrap();
    let gap = (&back - &img).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    ensure!(gap < 1e-10, "haar round trip {gap:e}");
    let img = Array2::from_shape_fn((32, 32), |_| rng::normal(&mut g));
    let k = fft2(&img).unwrap();
    let e_img: f64 = img.iter().map(|v| v * v).sum();
    let e_k: f64 = k.iter().map(|v| v.norm_sqr()).sum();
    ensure!((e_img - e_k).abs() < 1e-10 * e_img, "energy {e_img} vs {e_k}");
    let back = ifft2(&k).unwrap();
    let gap = back.iter().zip(img.iter()).map(|(b, a)| (b.re - a).abs().max(b.im.abs())).fold(0.0, f64::max);
    ensure!(gap < 1e-10, "fft round trip {gap:e}");
    let c = haar_forward(&Array2::from_elem((8, 8), 0.5)).unwrap();
    ensure!((c[[0, 0]] - 4.0).abs() < 1e-14 && c.iter().skip(1).all(|v| v.abs() < 1e-14), "constant image");
    Ok(())
}

/// Every deterministic check with its name.
pub fn kernel_checks() -> Vec<(&'static str, fn() -> Check)> {
    vec![
        ("qubo couplings vs triple loop", check_qubo_couplings),
        ("qubo closed forms", check_qubo_trivial),
        ("energy vs term-by-term sum", check_energy_oracle),
        ("local fields vs double loop", check_local_fields),
        ("ground state vs exhaustive enumeration", check_brute_force),
        ("pump schedules", check_pumps),
        ("threshold schedule", check_eta_schedule),
        ("sde steps vs scalar reference", check_sde_reference_steps),
        ("sde fixed points", check_sde_fixed_points),
        ("support estimation on identity and empty problems", check_support_estimation_identity),
        ("signal solvers vs direct solve", check_cdp_direct_solve),
        ("alternating loop plumbing", check_altmin_plumbing),
        ("annealing at zero temperature", check_annealing),
        ("figures of merit", check_metrics),
        ("instance statistics", check_instance_statistics),
        ("transform round trips", check_transform_round_trips),
    ]
}

/// `CdpSettings` with a tight tolerance for oracle comparisons.
pub fn tight_cdp() -> CdpSettings {
    CdpSettings { tol: 1e-12, ..CdpSettings::default() }
}
