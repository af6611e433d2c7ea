use super::{check_finite, pump_ol, StepInputs, Workspace};
use crate::qubo::{local_field_ol_into, QuboProblem};
use crate::rng::{self, SimRng};
use super::SdeParams;
use crate::Result;

/// In-phase and quadrature amplitudes of the open-loop machine.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerOlState {
    pub c: Vec<f64>,
    pub s: Vec<f64>,
    pub t: f64,
    pub steps_taken: usize,
}

impl WignerOlState {
    pub fn new(n: usize) -> Self {
        WignerOlState { c: vec![0.0; n], s: vec![0.0; n], t: 0.0, steps_taken: 0 }
    }

    /// One Euler–Maruyama step.
    ///
    /// Noise is drawn as `(W₁, W₂)` per pulse in pulse order.
    pub fn advance(&mut self, inputs: &StepInputs<'_>, rng: &mut SimRng, ws: &mut Workspace) -> Result<()> {
        let StepInputs { problem, signal, eta, params } = *inputs;
        let dt = params.dt();
        let sqrt_dt = dt.sqrt();
        let g = params.g2.sqrt();
        let p = pump_ol(self.t);
        let n = self.c.len();

        if params.noise_on {
            for r in 0..n {
                ws.noise[r] = rng::normal(rng);
                ws.noise2[r] = rng::normal(rng);
            }
        }
        local_field_ol_into(problem, signal, &self.c, &mut ws.scratch, &mut ws.field);

        for r in 0..n {
            let (c, s) = (self.c[r], self.s[r]);
            let a2 = c * c + s * s;
            let drift_c = (-1.0 + p - a2) * c + params.k * (ws.field[r].abs() - eta);
            let drift_s = (-1.0 - p - a2) * s;
            let diffusion = g * (a2 + 0.5).sqrt() * sqrt_dt;
            let (w1, w2) = if params.noise_on { (ws.noise[r], ws.noise2[r]) } else { (0.0, 0.0) };
            self.c[r] = c + drift_c * dt + diffusion * w1;
            self.s[r] = s + drift_s * dt + diffusion * w2;
        }
        self.steps_taken += 1;
        self.t = self.steps_taken as f64 * dt;
        check_finite("wigner-ol", self.steps_taken, self.t, &self.c)?;
        check_finite("wigner-ol", self.steps_taken, self.t, &self.s)
    }
}

/// Returns the state after one step from `state`.
pub fn step_wigner_ol(
    state: &WignerOlState,
    problem: &QuboProblem,
    signal: &[f64],
    eta: f64,
    params: &SdeParams,
    rng: &mut SimRng,
) -> Result<WignerOlState> {
    let inputs = StepInputs { problem, signal, eta, params };
    inputs.check()?;
    let mut next = state.clone();
    next.advance(&inputs, rng, &mut Workspace::new(state.c.len()))?;
    Ok(next)
}
