//! Reconstruction drivers: LASSO and alternating minimisation.

use ndarray::Array2;

use super::problem::{image_rmse, reconstruct_image, MriProblem, SparseImage};
use crate::altmin::{run_alt_min_with, AltMinConfig, Machine, OffSupport, RunTrace, SignalInit, Truth};
use crate::baselines::lasso::{lasso_ista_gram, LassoResult};
use crate::cdp::CdpSettings;
use crate::sde::{Model, SdeParams};
use crate::{CimError, Result, Support};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MriMethod {
    Lasso,
    Machine(Model),
}

impl MriMethod {
    pub const ALL: [MriMethod; 4] = [
        MriMethod::Lasso,
        MriMethod::Machine(Model::WignerOl),
        MriMethod::Machine(Model::WignerCac),
        MriMethod::Machine(Model::PositiveP),
    ];

    pub fn name(self) -> &'static str {
        match self {
            MriMethod::Lasso => "lasso",
            MriMethod::Machine(m) => m.name(),
        }
    }
}

impl std::str::FromStr for MriMethod {
    type Err = CimError;
    fn from_str(s: &str) -> Result<Self> {
        if s == "lasso" {
            Ok(MriMethod::Lasso)
        } else {
            Ok(MriMethod::Machine(s.parse()?))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MriSettings {
    /// Constant threshold for the machine.
    pub eta: f64,
    /// l1 weight of the LASSO baseline and of the machine's initial signal.
    pub lasso_lambda: f64,
    pub lasso_tol: f64,
    pub lasso_max_iter: usize,
    pub iterations: usize,
    pub velo: usize,
    pub sde: SdeParams,
    pub cdp: CdpSettings,
    pub off_support: OffSupport,
    pub seed: u64,
}

impl MriSettings {
    /// 64×64 defaults: CAC runs 12 iterations at η = 0.022 with K = 0.01 and
    /// pump half-width 0.4; open loop runs 32 iterations at η = 0.011; the
    /// l1 weight is 0.0003.
    pub fn for_method(method: MriMethod) -> Self {
        let base = MriSettings {
            eta: 0.022,
            lasso_lambda: 3e-4,
            lasso_tol: 1e-7,
            lasso_max_iter: 3000,
            iterations: 12,
            velo: 11,
            sde: SdeParams { k: 0.01, d: 0.4, ..SdeParams::cac_default() },
            cdp: CdpSettings::default(),
            off_support: OffSupport::LocalFit,
            seed: 0,
        };
        match method {
            MriMethod::Machine(Model::WignerOl) => {
                MriSettings { eta: 0.011, iterations: 32, velo: 31, sde: SdeParams::ol_default(), ..base }
            }
            _ => base,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MriOutcome {
    pub method: MriMethod,
    pub image: Array2<f64>,
    /// Estimated Haar coefficients `R∘σ`.
    pub coeffs: Vec<f64>,
    pub support: Support,
    /// Pixel RMSE against the sparse source.
    pub rmse: f64,
    /// Per-iteration record for machine runs.
    pub trace: Option<RunTrace>,
}

/// Reconstructs `source` from `problem`'s samples with `method`.
pub fn reconstruct(
    problem: &mut MriProblem,
    source: &SparseImage,
    method: MriMethod,
    settings: &MriSettings,
) -> Result<MriOutcome> {
    let lasso = lasso_ista_gram(&problem.qubo, settings.lasso_lambda, settings.lasso_tol, settings.lasso_max_iter)?;
    reconstruct_from(problem, source, method, settings, &lasso)
}

/// As [`reconstruct`], reusing a LASSO solution computed on the same
/// problem with `settings.lasso_lambda`.
pub fn reconstruct_from(
    problem: &mut MriProblem,
    source: &SparseImage,
    method: MriMethod,
    settings: &MriSettings,
    lasso: &LassoResult,
) -> Result<MriOutcome> {
    let side = problem.side;
    CimError::check_len("mri: source", problem.n(), source.coeffs.len())?;
    CimError::check_len("mri: lasso solution", problem.n(), lasso.x.len())?;
    let (signal, support, trace) = match method {
        MriMethod::Lasso => {
            let support = Support::from_bits(lasso.x.iter().map(|&v| v != 0.0).collect());
            (lasso.x.clone(), support, None)
        }
        MriMethod::Machine(model) => {
            let cfg = AltMinConfig {
                model,
                iterations: settings.iterations,
                eta_init: settings.eta,
                eta_end: settings.eta,
                velo: settings.velo,
                sde: settings.sde,
                cdp: settings.cdp,
                r_init: SignalInit::Given(lasso.x.clone()),
                off_support: settings.off_support,
                seed: settings.seed,
            };
            let truth_support = source.support();
            let truth = Truth { signal: &source.coeffs, support: &truth_support };
            let tr = run_alt_min_with(&mut problem.qubo, lasso.x.clone(), Some(truth), &cfg, &mut Machine(model))?;
            (tr.signal.clone(), tr.sigma.clone(), Some(tr))
        }
    };
    let image = reconstruct_image(side, &signal, &support)?;
    let rmse = image_rmse(&image, &source.pixels)?;
    let coeffs = signal.iter().zip(support.iter()).map(|(&r, on)| if on { r } else { 0.0 }).collect();
    Ok(MriOutcome { method, image, coeffs, support, rmse, trace })
}
