use super::wigner_cac::{measure, update_error};
use super::{check_error_variable, check_finite, pump_cac, SdeParams, StepInputs, Workspace};
use crate::qubo::QuboProblem;
use crate::rng::SimRng;
use crate::Result;

/// Mean amplitude, fluctuation variances `n`, `m` and error variable of the
/// amplitude-controlled Positive-P model.
#[derive(Clone, Debug, PartialEq)]
pub struct PositivePState {
    pub mu: Vec<f64>,
    pub n: Vec<f64>,
    pub m: Vec<f64>,
    pub e: Vec<f64>,
    pub mu_tilde: Vec<f64>,
    pub t: f64,
    pub steps_taken: usize,
}

impl PositivePState {
    pub fn new(size: usize) -> Self {
        PositivePState {
            mu: vec![0.0; size],
            n: vec![0.0; size],
            m: vec![0.0; size],
            e: vec![1.0; size],
            mu_tilde: vec![0.0; size],
            t: 0.0,
            steps_taken: 0,
        }
    }

    pub fn advance(&mut self, inputs: &StepInputs<'_>, rng: &mut SimRng, ws: &mut Workspace) -> Result<()> {
        let params = inputs.params;
        let dt = params.dt();
        let sqrt_dt = dt.sqrt();
        let p = pump_cac(self.t, params.p_thr, params.d);
        let (g2, j) = (params.g2, params.j);
        let loss = 1.0 - p + j;

        measure(inputs, &self.mu, &mut self.mu_tilde, rng, ws);
        let threshold = inputs.eta * inputs.eta / 4.0 * params.target_amplitude();

        for r in 0..self.mu.len() {
            let (mu, n, m, e) = (self.mu[r], self.n[r], self.m[r], self.e[r]);
            let injection = j * e * (inputs.signal[r] * ws.field[r] - threshold);
            let mu2 = mu * mu;
            let g2mu2 = g2 * mu2;
            let sum2 = (m + n) * (m + n);
            let drift_mu = -loss * mu - g2 * mu * (mu2 + 2.0 * n + m) + params.k * injection;
            let drift_n = -2.0 * (1.0 + j) * n + 2.0 * p * m - 2.0 * g2mu2 * (2.0 * n + m) - j * sum2;
            let drift_m = -2.0 * (1.0 + j) * m + 2.0 * p * n - 2.0 * g2mu2 * (2.0 * m + n) + p
                - g2 * (mu2 + m)
                - j * sum2;
            self.mu[r] = mu + drift_mu * dt + j.sqrt() * (m + n) * ws.noise[r] * sqrt_dt;
            self.n[r] = n + drift_n * dt;
            self.m[r] = m + drift_m * dt;
            self.e[r] = update_error(e, self.mu_tilde[r], params, dt);
        }
        self.steps_taken += 1;
        self.t = self.steps_taken as f64 * dt;
        check_finite("positive-p", self.steps_taken, self.t, &self.mu)?;
        check_finite("positive-p", self.steps_taken, self.t, &self.n)?;
        check_finite("positive-p", self.steps_taken, self.t, &self.m)?;
        check_error_variable("positive-p", self.steps_taken, self.t, &self.e)
    }
}

pub fn step_positive_p(
    state: &PositivePState,
    problem: &QuboProblem,
    signal: &[f64],
    eta: f64,
    params: &SdeParams,
    rng: &mut SimRng,
) -> Result<PositivePState> {
    let inputs = StepInputs { problem, signal, eta, params };
    inputs.check()?;
    let mut next = state.clone();
    next.advance(&inputs, rng, &mut Workspace::new(state.mu.len()))?;
    Ok(next)
}
