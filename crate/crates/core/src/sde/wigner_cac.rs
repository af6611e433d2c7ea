use super::{check_error_variable, check_finite, pump_cac, SdeParams, StepInputs, Workspace};
use crate::qubo::{local_field_cac_into, QuboProblem};
use crate::rng::{self, SimRng};
use crate::Result;

/// Mean amplitude, variance and error variable of the amplitude-controlled
/// Wigner model.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerCacState {
    pub mu: Vec<f64>,
    pub v: Vec<f64>,
    pub e: Vec<f64>,
    /// Measured amplitude from the most recent step.
    pub mu_tilde: Vec<f64>,
    pub t: f64,
    pub steps_taken: usize,
}

impl WignerCacState {
    pub fn new(n: usize) -> Self {
        WignerCacState {
            mu: vec![0.0; n],
            v: vec![0.5; n],
            e: vec![1.0; n],
            mu_tilde: vec![0.0; n],
            t: 0.0,
            steps_taken: 0,
        }
    }

    pub fn advance(&mut self, inputs: &StepInputs<'_>, rng: &mut SimRng, ws: &mut Workspace) -> Result<()> {
        let StepInputs { params, .. } = *inputs;
        let dt = params.dt();
        let sqrt_dt = dt.sqrt();
        let p = pump_cac(self.t, params.p_thr, params.d);
        let (g2, j) = (params.g2, params.j);
        let loss = 1.0 - p + j;

        measure(inputs, &self.mu, &mut self.mu_tilde, rng, ws);
        let target = params.target_amplitude();
        let threshold = inputs.eta * inputs.eta / 4.0 * target;

        for r in 0..self.mu.len() {
            let (mu, v, e) = (self.mu[r], self.v[r], self.e[r]);
            let injection = j * e * (inputs.signal[r] * ws.field[r] - threshold);
            let drift_mu = -loss * mu - g2 * mu * mu * mu + params.k * injection;
            let g2mu2 = g2 * mu * mu;
            let drift_v = -2.0 * loss * v - 6.0 * g2mu2 * v + 1.0 + j + 2.0 * g2mu2
                - 2.0 * j * (v - 0.5) * (v - 0.5);
            self.mu[r] = mu + drift_mu * dt + j.sqrt() * (v - 0.5) * ws.noise[r] * sqrt_dt;
            self.v[r] = v + drift_v * dt;
            self.e[r] = update_error(e, self.mu_tilde[r], params, dt);
        }
        self.steps_taken += 1;
        self.t = self.steps_taken as f64 * dt;
        check_finite("wigner-cac", self.steps_taken, self.t, &self.mu)?;
        check_finite("wigner-cac", self.steps_taken, self.t, &self.v)?;
        check_error_variable("wigner-cac", self.steps_taken, self.t, &self.e)
    }
}

/// Draws one Gaussian per pulse into `ws.noise` (zeros when noise is off),
/// forms the measured amplitude `μ̃ = μ + ξ/√(4j dt)`, and evaluates the
/// amplitude-controlled local field into `ws.field`.
pub(super) fn measure(
    inputs: &StepInputs<'_>,
    mu: &[f64],
    mu_tilde: &mut [f64],
    rng: &mut SimRng,
    ws: &mut Workspace,
) {
    let params = inputs.params;
    let dt = params.dt();
    if params.noise_on {
        let scale = (1.0 / (4.0 * params.j * dt)).sqrt();
        for r in 0..mu.len() {
            let w = rng::normal(rng);
            ws.noise[r] = w;
            mu_tilde[r] = mu[r] + scale * w;
        }
    } else {
        ws.noise.iter_mut().for_each(|w| *w = 0.0);
        mu_tilde.copy_from_slice(mu);
    }
    local_field_cac_into(
        inputs.problem,
        inputs.signal,
        mu_tilde,
        params.target_amplitude(),
        &mut ws.scratch,
        &mut ws.field,
    );
}

/// `e ← e · exp(−β(g²μ̃² − τ) dt)`, the exact solution of the error
/// dynamics over one step with the rate frozen.
#[inline]
pub(super) fn update_error(e: f64, mu_tilde: f64, params: &SdeParams, dt: f64) -> f64 {
    e * (-params.beta * (params.g2 * mu_tilde * mu_tilde - params.tau) * dt).exp()
}

pub fn step_wigner_cac(
    state: &WignerCacState,
    problem: &QuboProblem,
    signal: &[f64],
    eta: f64,
    params: &SdeParams,
    rng: &mut SimRng,
) -> Result<WignerCacState> {
    let inputs = StepInputs { problem, signal, eta, params };
    inputs.check()?;
    let mut next = state.clone();
    next.advance(&inputs, rng, &mut Workspace::new(state.mu.len()))?;
    Ok(next)
}
