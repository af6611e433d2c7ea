//! Stochastic models of the coherent Ising machine.
//!
//! Three models estimate the support vector at fixed signal `R`:
//!
//! * [`Model::WignerOl`]: open-loop truncated-Wigner equations for the
//!   in-phase and quadrature amplitudes `c`, `s`, driven by the injection
//!   `K̃(|h_r| − η)` with Heaviside-binarised amplitudes in the local field.
//! * [`Model::WignerCac`]: in-phase truncated-Wigner equations for the mean
//!   `μ` and variance `V`, with chaotic amplitude control through an error
//!   variable `e` that pushes `g²μ̃²` toward the target `τ`.
//! * [`Model::PositiveP`]: the Positive-P equations for `μ`, `n`, `m`
//!   with the same amplitude-control loop.
//!
//! All three are integrated by Euler–Maruyama with a fixed step. The CAC
//! models draw one Gaussian per pulse per step; it feeds both the diffusion
//! term (as `ξ√dt`) and the homodyne measurement `μ̃ = μ + ξ/√(4j dt)`.

mod positive_p;
mod trace;
mod wigner_cac;
mod wigner_ol;

use crate::qubo::QuboProblem;
use crate::rng::{self, streams, SimRng};
use crate::{CimError, Result, Support};

pub use positive_p::{step_positive_p, PositivePState};
pub use trace::{Trace, TraceOptions};
pub use wigner_cac::{step_wigner_cac, WignerCacState};
pub use wigner_ol::{step_wigner_ol, WignerOlState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Model {
    WignerOl,
    WignerCac,
    PositiveP,
}

impl Model {
    pub const ALL: [Model; 3] = [Model::WignerOl, Model::WignerCac, Model::PositiveP];

    pub fn name(self) -> &'static str {
        match self {
            Model::WignerOl => "wigner-ol",
            Model::WignerCac => "wigner-cac",
            Model::PositiveP => "positive-p",
        }
    }

    pub fn is_cac(self) -> bool {
        !matches!(self, Model::WignerOl)
    }
}

impl std::str::FromStr for Model {
    type Err = CimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wigner-ol" | "ol" => Ok(Model::WignerOl),
            "wigner-cac" | "wigner" => Ok(Model::WignerCac),
            "positive-p" | "pp" => Ok(Model::PositiveP),
            other => Err(CimError::param("model", format!("unknown model `{other}`"))),
        }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Integration and machine parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SdeParams {
    /// Saturation parameter g².
    pub g2: f64,
    /// Normalised out-coupling rate of the homodyne measurement.
    pub j: f64,
    /// Feedback strength (K for CAC, K̃ for open loop).
    pub k: f64,
    /// Error-variable rate β.
    pub beta: f64,
    /// Target squared amplitude τ.
    pub tau: f64,
    /// Pump threshold of the sigmoid schedule.
    pub p_thr: f64,
    /// Half-width of the sigmoid pump schedule.
    pub d: f64,
    /// Integration horizon in photon lifetimes.
    pub t_end: f64,
    pub steps: usize,
    pub seed: u64,
    pub noise_on: bool,
}

impl SdeParams {
    /// Amplitude-controlled defaults: g² = 1e-7, j = β = K = τ = 1,
    /// p_thr = 1, d = 0.6, 20 lifetimes in 1000 steps.
    pub fn cac_default() -> Self {
        SdeParams {
            g2: 1e-7,
            j: 1.0,
            k: 1.0,
            beta: 1.0,
            tau: 1.0,
            p_thr: 1.0,
            d: 0.6,
            t_end: 20.0,
            steps: 1000,
            seed: 0,
            noise_on: true,
        }
    }

    /// Open-loop defaults: g² = 1e-7, K̃ = 0.25, 5 lifetimes in 50 steps.
    pub fn ol_default() -> Self {
        SdeParams {
            k: 0.25,
            t_end: 5.0,
            steps: 50,
            ..Self::cac_default()
        }
    }

    pub fn default_for(model: Model) -> Self {
        match model {
            Model::WignerOl => Self::ol_default(),
            Model::WignerCac | Model::PositiveP => Self::cac_default(),
        }
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.steps as f64
    }

    /// `√(τ/g²)`, the amplitude the CAC loop stabilises.
    pub fn target_amplitude(&self) -> f64 {
        (self.tau / self.g2).sqrt()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("g2", self.g2),
            ("j", self.j),
            ("beta", self.beta),
            ("tau", self.tau),
            ("t_end", self.t_end),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(CimError::param(name, format!("must be finite and positive, got {v}")));
            }
        }
        for (name, v) in [("k", self.k), ("p_thr", self.p_thr), ("d", self.d)] {
            if !v.is_finite() {
                return Err(CimError::param(name, "must be finite"));
            }
        }
        if self.k < 0.0 {
            return Err(CimError::param("k", "must be nonnegative"));
        }
        if self.steps == 0 {
            return Err(CimError::param("steps", "must be at least 1"));
        }
        Ok(())
    }
}

/// Sigmoid pump ramp from `p_thr − d` to `p_thr + d`, centred at t = 4.
pub fn pump_cac(t: f64, p_thr: f64, d: f64) -> f64 {
    (p_thr - d) + 2.0 * d / (1.0 + (-(t - 4.0) / 2.0).exp())
}

/// Quadratic pump ramp reaching 1.5 at t = 5, held at 1.5 afterwards.
pub fn pump_ol(t: f64) -> f64 {
    let t = t.clamp(0.0, 5.0);
    1.5 * (t / 5.0).powi(2)
}

/// Inputs shared by every step of one trajectory.
#[derive(Clone, Copy)]
pub struct StepInputs<'a> {
    pub problem: &'a QuboProblem,
    pub signal: &'a [f64],
    pub eta: f64,
    pub params: &'a SdeParams,
}

impl StepInputs<'_> {
    fn check(&self) -> Result<()> {
        self.params.validate()?;
        CimError::check_len("sde: signal", self.problem.n(), self.signal.len())?;
        if !self.eta.is_finite() || self.eta < 0.0 {
            return Err(CimError::param("eta", format!("must be finite and nonnegative, got {}", self.eta)));
        }
        Ok(())
    }
}

/// Scratch buffers reused across steps.
#[derive(Clone, Debug, Default)]
pub struct Workspace {
    pub(crate) noise: Vec<f64>,
    pub(crate) noise2: Vec<f64>,
    pub(crate) scratch: Vec<f64>,
    pub(crate) field: Vec<f64>,
}

impl Workspace {
    pub fn new(n: usize) -> Self {
        Workspace {
            noise: vec![0.0; n],
            noise2: vec![0.0; n],
            scratch: vec![0.0; n],
            field: vec![0.0; n],
        }
    }
}

fn check_finite(model: &'static str, step: usize, t: f64, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(pulse) => Err(CimError::Integration { model, step, t, pulse, what: "non-finite" }),
    }
}

fn check_error_variable(model: &'static str, step: usize, t: f64, e: &[f64]) -> Result<()> {
    match e.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        None => Ok(()),
        Some(pulse) => Err(CimError::Integration {
            model,
            step,
            t,
            pulse,
            what: if e[pulse] == 0.0 { "an error variable that underflowed to 0" } else { "an error variable that overflowed" },
        }),
    }
}

/// State of any of the three models.
#[derive(Clone, Debug)]
pub enum MachineState {
    WignerOl(WignerOlState),
    WignerCac(WignerCacState),
    PositiveP(PositivePState),
}

impl MachineState {
    /// Initial condition: zero amplitudes; for CAC models `V = ½` or
    /// `n = m = 0`, and `e = 1`.
    pub fn initial(model: Model, n: usize) -> Self {
        match model {
            Model::WignerOl => MachineState::WignerOl(WignerOlState::new(n)),
            Model::WignerCac => MachineState::WignerCac(WignerCacState::new(n)),
            Model::PositiveP => MachineState::PositiveP(PositivePState::new(n)),
        }
    }

    pub fn advance(&mut self, inputs: &StepInputs<'_>, rng: &mut SimRng, ws: &mut Workspace) -> Result<()> {
        match self {
            MachineState::WignerOl(s) => s.advance(inputs, rng, ws),
            MachineState::WignerCac(s) => s.advance(inputs, rng, ws),
            MachineState::PositiveP(s) => s.advance(inputs, rng, ws),
        }
    }

    pub fn t(&self) -> f64 {
        match self {
            MachineState::WignerOl(s) => s.t,
            MachineState::WignerCac(s) => s.t,
            MachineState::PositiveP(s) => s.t,
        }
    }

    /// The amplitude binarised for the support readout: `c` or `μ̃`.
    pub fn readout_amplitude(&self) -> &[f64] {
        match self {
            MachineState::WignerOl(s) => &s.c,
            MachineState::WignerCac(s) => &s.mu_tilde,
            MachineState::PositiveP(s) => &s.mu_tilde,
        }
    }

    pub fn error_variable(&self) -> Option<&[f64]> {
        match self {
            MachineState::WignerOl(_) => None,
            MachineState::WignerCac(s) => Some(&s.e),
            MachineState::PositiveP(s) => Some(&s.e),
        }
    }

    /// `σ_r = H(amplitude_r)`.
    pub fn support(&self) -> Support {
        Support::from_amplitudes(self.readout_amplitude())
    }
}

/// Result of one support-estimation trajectory.
#[derive(Clone, Debug)]
pub struct SupportEstimate {
    pub sigma: Support,
    pub final_state: MachineState,
    pub trace: Option<Trace>,
}

/// Integrates one trajectory of `model` from its initial condition over
/// `params.t_end` lifetimes and binarises the final readout amplitude.
///
/// Noise comes from stream [`streams::SDE`] of `params.seed`.
pub fn cim_support_estimation(
    model: Model,
    problem: &QuboProblem,
    signal: &[f64],
    eta: f64,
    params: &SdeParams,
    trace: Option<&TraceOptions>,
) -> Result<SupportEstimate> {
    let inputs = StepInputs { problem, signal, eta, params };
    inputs.check()?;
    let n = problem.n();
    let mut state = MachineState::initial(model, n);
    let mut rng = rng::stream(params.seed, streams::SDE);
    let mut ws = Workspace::new(n);
    let mut recorder = trace.map(|opts| Trace::new(model, opts, params, n));
    if let Some(rec) = recorder.as_mut() {
        rec.record(0, &state);
    }
    for step in 1..=params.steps {
        state.advance(&inputs, &mut rng, &mut ws)?;
        if let Some(rec) = recorder.as_mut() {
            rec.record(step, &state);
        }
    }
    Ok(SupportEstimate {
        sigma: state.support(),
        final_state: state,
        trace: recorder,
    })
}
