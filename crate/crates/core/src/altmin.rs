//! Alternating minimisation: the machine estimates σ at fixed R, the
//! signal solver estimates R at fixed σ, and the threshold η follows its
//! schedule.

use std::io::Write;

use crate::baselines::lasso::lasso_ista;
use crate::cdp::{self, eta_schedule, CdpSettings, CdpSolver};
use crate::instance::{self, Instance, Metrics};
use crate::qubo::{build_qubo, QuboProblem};
use crate::rng::derive_seed;
use crate::sde::{cim_support_estimation, Model, SdeParams};
use crate::{CimError, Result, Support};

/// Initial signal estimate.
#[derive(Clone, Debug, PartialEq)]
pub enum SignalInit {
    Zeros,
    /// `R_r = z_r / ‖A_r‖²`, the per-column least-squares fit.
    MatchedFilter,
    Given(Vec<f64>),
    /// LASSO solution with the given l1 weight.
    Lasso { lambda: f64 },
}

/// What the signal solver leaves in `R` off the estimated support.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OffSupport {
    /// `R_r = 0`, the literal stationary point.
    Zero,
    /// `R_r = 𝕳_r / ‖A_r‖²`, so the machine sees a nonzero signal for every
    /// pulse and can re-enable entries.
    LocalFit,
}

impl OffSupport {
    pub fn name(self) -> &'static str {
        match self {
            OffSupport::Zero => "zero",
            OffSupport::LocalFit => "local-fit",
        }
    }
}

impl std::str::FromStr for OffSupport {
    type Err = CimError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(OffSupport::Zero),
            "local-fit" => Ok(OffSupport::LocalFit),
            other => Err(CimError::param("off_support", format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AltMinConfig {
    pub model: Model,
    pub iterations: usize,
    pub eta_init: f64,
    pub eta_end: f64,
    pub velo: usize,
    pub sde: SdeParams,
    pub cdp: CdpSettings,
    pub r_init: SignalInit,
    pub off_support: OffSupport,
    /// Master seed; iteration `i` integrates with `derive_seed(seed, [i])`.
    pub seed: u64,
}

impl AltMinConfig {
    /// Synthetic-data defaults for `model`: 52 iterations, velo 51.
    pub fn synthetic(model: Model, eta_init: f64, eta_end: f64) -> Self {
        AltMinConfig {
            model,
            iterations: 52,
            eta_init,
            eta_end,
            velo: 51,
            sde: SdeParams::default_for(model),
            cdp: CdpSettings::default(),
            r_init: SignalInit::MatchedFilter,
            off_support: OffSupport::LocalFit,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(CimError::param("iterations", "must be at least 1"));
        }
        if self.velo == 0 {
            return Err(CimError::param("velo", "must be at least 1"));
        }
        if !(self.eta_end >= 0.0 && self.eta_init >= self.eta_end && self.eta_init.is_finite()) {
            return Err(CimError::param(
                "eta",
                format!("need eta_init >= eta_end >= 0, got {} and {}", self.eta_init, self.eta_end),
            ));
        }
        if !(self.cdp.tol > 0.0) {
            return Err(CimError::param("cdp.tol", "must be positive"));
        }
        self.sde.validate()
    }
}

/// One row of the run trace.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub i: usize,
    pub eta: f64,
    pub sigma: Support,
    pub signal: Vec<f64>,
    pub energy: f64,
    pub metrics: Option<Metrics>,
    pub cdp_iterations: usize,
    pub cdp_residual: f64,
    pub cdp_converged: bool,
    /// Solver that produced `signal` (Jacobi falls back to CGD).
    pub cdp_solver: CdpSolver,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub records: Vec<IterationRecord>,
    pub sigma: Support,
    pub signal: Vec<f64>,
}

impl RunTrace {
    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("at least one iteration")
    }

    /// One row per iteration.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", IterationRecord::CSV_HEADER)?;
        for rec in &self.records {
            rec.write_csv_row(&mut out)?;
        }
        Ok(())
    }
}

impl IterationRecord {
    pub const CSV_HEADER: &'static str =
        "i,eta,support_size,energy,rmse,direction_cosine,hamming_loss,cdp_solver,cdp_iterations,cdp_residual,cdp_converged";

    pub fn write_csv_row<W: Write>(&self, mut out: W) -> Result<()> {
        let (rmse, dc, hl) = match self.metrics {
            Some(m) => (m.rmse.to_string(), m.direction_cosine.to_string(), m.hamming_loss.to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{:e},{}",
            self.i,
            self.eta,
            self.sigma.count(),
            self.energy,
            rmse,
            dc,
            hl,
            self.cdp_solver.name(),
            self.cdp_iterations,
            self.cdp_residual,
            self.cdp_converged
        )?;
        Ok(())
    }
}

/// Ground truth used to score each iteration.
#[derive(Clone, Copy, Debug)]
pub struct Truth<'a> {
    pub signal: &'a [f64],
    pub support: &'a Support,
}

/// Produces σ at fixed R; the machine models are one implementation.
pub trait SupportEstimator {
    fn estimate(&mut self, problem: &QuboProblem, signal: &[f64], eta: f64, params: &SdeParams) -> Result<Support>;
}

/// Integrates one trajectory of a machine model per call.
#[derive(Clone, Copy, Debug)]
pub struct Machine(pub Model);

impl SupportEstimator for Machine {
    fn estimate(&mut self, problem: &QuboProblem, signal: &[f64], eta: f64, params: &SdeParams) -> Result<Support> {
        Ok(cim_support_estimation(self.0, problem, signal, eta, params, None)?.sigma)
    }
}

/// Resolves the initial signal for `problem`.
pub fn initial_signal(
    init: &SignalInit,
    problem: &QuboProblem,
    lasso: impl FnOnce(f64) -> Result<Vec<f64>>,
) -> Result<Vec<f64>> {
    let n = problem.n();
    match init {
        SignalInit::Zeros => Ok(vec![0.0; n]),
        SignalInit::MatchedFilter => Ok(problem
            .zeeman
            .iter()
            .zip(&problem.col_norms)
            .map(|(&z, &c)| if c > 0.0 { z / c } else { 0.0 })
            .collect()),
        SignalInit::Given(r) => {
            CimError::check_len("r_init", n, r.len())?;
            Ok(r.clone())
        }
        SignalInit::Lasso { lambda } => lasso(*lambda),
    }
}

/// Runs the alternating loop on a synthetic instance.
pub fn run_alt_min(inst: &Instance, cfg: &AltMinConfig) -> Result<RunTrace> {
    run_alt_min_observed(inst, cfg, &mut |_| Ok(()))
}

/// As [`run_alt_min`], handing each record to `observer` as soon as it
/// exists so callers can stream a trace that survives a later failure.
pub fn run_alt_min_observed(
    inst: &Instance,
    cfg: &AltMinConfig,
    observer: &mut dyn FnMut(&IterationRecord) -> Result<()>,
) -> Result<RunTrace> {
    cfg.validate()?;
    let mut problem = build_qubo(&inst.matrix, &inst.observation, cfg.eta_init)?;
    let r0 = initial_signal(&cfg.r_init, &problem, |lam| {
        Ok(lasso_ista(&inst.matrix, &inst.observation, lam, 1e-10, 20_000)?.x)
    })?;
    let truth = Truth { signal: &inst.signal, support: &inst.support };
    run_alt_min_observed_with(&mut problem, r0, Some(truth), cfg, &mut Machine(cfg.model), observer)
}

/// The loop body shared by synthetic and MRI runs.
///
/// Each iteration re-initialises the machine, estimates σ with the current
/// R and η_i, solves for R at fixed σ (warm-started from the previous R),
/// then advances η. Nothing else persists between iterations.
pub fn run_alt_min_with(
    problem: &mut QuboProblem,
    r0: Vec<f64>,
    truth: Option<Truth<'_>>,
    cfg: &AltMinConfig,
    estimator: &mut dyn SupportEstimator,
) -> Result<RunTrace> {
    run_alt_min_observed_with(problem, r0, truth, cfg, estimator, &mut |_| Ok(()))
}

pub fn run_alt_min_observed_with(
    problem: &mut QuboProblem,
    r0: Vec<f64>,
    truth: Option<Truth<'_>>,
    cfg: &AltMinConfig,
    estimator: &mut dyn SupportEstimator,
    observer: &mut dyn FnMut(&IterationRecord) -> Result<()>,
) -> Result<RunTrace> {
    cfg.validate()?;
    CimError::check_len("r_init", problem.n(), r0.len())?;
    let mut signal = r0;
    let mut records = Vec::with_capacity(cfg.iterations);
    for i in 0..cfg.iterations {
        let wrap = |e: CimError| CimError::Iteration { iteration: i, source: Box::new(e) };
        let eta = eta_schedule(i, cfg.eta_init, cfg.eta_end, cfg.velo);
        problem.set_eta(eta).map_err(wrap)?;
        let params = cfg.sde.with_seed(derive_seed(cfg.seed, &[i as u64]));
        let sigma = estimator.estimate(problem, &signal, eta, &params).map_err(wrap)?;

        let mut solver = cfg.cdp.solver;
        let mut sol = cdp::solve_signal(problem, &sigma, &signal, &cfg.cdp).map_err(wrap)?;
        if !sol.converged && solver == CdpSolver::Jacobi {
            solver = CdpSolver::Cgd;
            sol = cdp::solve_signal_cgd(problem, &sigma, &signal, cfg.cdp.tol, cfg.cdp.max_iter).map_err(wrap)?;
        }
        signal = sol.signal;
        if cfg.off_support == OffSupport::LocalFit {
            cdp::fill_off_support(problem, &sigma, &mut signal).map_err(wrap)?;
        }
        let energy = problem.energy(&signal, &sigma).map_err(wrap)?.energy;
        let metrics = match truth {
            Some(t) => Some(Metrics::evaluate(&signal, &sigma, t.signal, t.support).map_err(wrap)?),
            None => None,
        };
        let rec = IterationRecord {
            i,
            eta,
            sigma,
            signal: signal.clone(),
            energy,
            metrics,
            cdp_iterations: sol.iterations,
            cdp_residual: sol.residual,
            cdp_converged: sol.converged,
            cdp_solver: solver,
        };
        observer(&rec)?;
        records.push(rec);
    }
    let sigma = records.last().expect("iterations >= 1").sigma.clone();
    Ok(RunTrace { records, sigma, signal })
}

/// Support estimation with `R` pinned to the true source `x ∘ ξ`.
///
/// Repetition `k` integrates with `derive_seed(params.seed, [k])`; returns
/// each final σ with its direction cosine against ξ.
pub fn run_support_only(
    inst: &Instance,
    model: Model,
    eta: f64,
    params: &SdeParams,
    repetitions: usize,
) -> Result<Vec<(Support, f64)>> {
    let problem = build_qubo(&inst.matrix, &inst.observation, eta)?;
    let source = inst.masked_signal();
    (0..repetitions)
        .map(|k| {
            let p = params.with_seed(derive_seed(params.seed, &[k as u64]));
            let est = cim_support_estimation(model, &problem, &source, eta, &p, None)?;
            let (dc, _) = instance::direction_cosine(&inst.support, &est.sigma)?;
            Ok((est.sigma, dc))
        })
        .collect()
}
