//! Experiment configuration: a strict TOML schema with explicit defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::altmin::{AltMinConfig, OffSupport, SignalInit};
use crate::baselines::sa::{SaSchedule, ScheduleKind};
use crate::cdp::{CdpSettings, CdpSolver};
use crate::mri::{MaskDensity, MriMethod, MriSettings};
use crate::sde::{Model, SdeParams};
use crate::{CimError, InstanceParams, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SupportOnly,
    Altmin,
    SaCompare,
    Mri,
    Sweep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub repetitions: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub instance: InstanceSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub sde: SdeSection,
    #[serde(default)]
    pub cdp: CdpSection,
    #[serde(default)]
    pub sa: SaSection,
    #[serde(default)]
    pub mri: MriSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InstanceSection {
    pub n: usize,
    pub alpha: f64,
    pub sparseness: f64,
    pub nu: f64,
}

impl Default for InstanceSection {
    fn default() -> Self {
        InstanceSection { n: 500, alpha: 0.6, sparseness: 0.6, nu: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub model: String,
    /// Threshold for support-only runs.
    pub eta: f64,
    /// Alternating-minimisation schedule; `None` picks 0.6 for CAC models
    /// and 0.8 for open loop.
    pub eta_init: Option<f64>,
    pub eta_end: f64,
    pub velo: usize,
    pub iterations: usize,
    /// `matched-filter`, `zeros` or `lasso`.
    pub r_init: String,
    pub lasso_lambda: f64,
    /// `local-fit` or `zero`.
    pub off_support: String,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            model: "wigner-cac".into(),
            eta: 0.05,
            eta_init: None,
            eta_end: 0.18,
            velo: 51,
            iterations: 52,
            r_init: "matched-filter".into(),
            lasso_lambda: 0.01,
            off_support: "local-fit".into(),
        }
    }
}

/// Overrides on the per-model integrator defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SdeSection {
    pub g2: Option<f64>,
    pub j: Option<f64>,
    pub k: Option<f64>,
    pub beta: Option<f64>,
    pub tau: Option<f64>,
    pub p_thr: Option<f64>,
    pub d: Option<f64>,
    pub t_end: Option<f64>,
    pub steps: Option<usize>,
    pub noise: Option<bool>,
}

impl SdeSection {
    pub fn apply(&self, mut p: SdeParams) -> SdeParams {
        macro_rules! set {
            ($($f:ident => $g:ident),*) => { $(if let Some(v) = self.$f { p.$g = v; })* };
        }
        set!(g2 => g2, j => j, k => k, beta => beta, tau => tau, p_thr => p_thr, d => d, t_end => t_end, steps => steps, noise => noise_on);
        p
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CdpSection {
    pub solver: String,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CdpSection {
    fn default() -> Self {
        let d = CdpSettings::default();
        CdpSection { solver: d.solver.name().into(), tol: d.tol, max_iter: d.max_iter }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SaSection {
    /// `exponential` or `zero`.
    pub schedule: String,
    pub t_start: f64,
    pub t_end: f64,
    /// Temperature stages; `None` calibrates to the wall-clock time of the
    /// machine run on the same instance.
    pub sweeps: Option<usize>,
}

impl Default for SaSection {
    fn default() -> Self {
        let d = SaSchedule::exponential(1);
        SaSection { schedule: "exponential".into(), t_start: d.t_start, t_end: d.t_end, sweeps: None }
    }
}

impl SaSection {
    pub fn schedule(&self, sweeps: usize) -> Result<SaSchedule> {
        let kind = match self.schedule.as_str() {
            "exponential" => ScheduleKind::Exponential,
            "zero" => ScheduleKind::Zero,
            other => return Err(CimError::Config(format!("sa.schedule: unknown schedule {other:?}"))),
        };
        let s = SaSchedule { kind, t_start: self.t_start, t_end: self.t_end, sweeps };
        s.validate().map_err(|e| CimError::Config(e.to_string()))?;
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MriSection {
    /// 8-bit binary PGM; the built-in smoothed phantom when absent.
    pub image: Option<PathBuf>,
    /// Phantom side when no image is given.
    pub side: usize,
    pub compression: f64,
    pub sparseness: f64,
    pub gamma: f64,
    /// `centered` or `uniform`.
    pub density: String,
    pub radius: f64,
    pub methods: Vec<String>,
    pub eta_ol: f64,
    pub eta_cac: f64,
    pub lasso_lambda: f64,
    pub iterations_ol: usize,
    pub iterations_cac: usize,
}

impl Default for MriSection {
    fn default() -> Self {
        let cac = MriSettings::for_method(MriMethod::Machine(Model::WignerCac));
        let ol = MriSettings::for_method(MriMethod::Machine(Model::WignerOl));
        MriSection {
            image: None,
            side: 64,
            compression: 0.4,
            sparseness: 0.212,
            gamma: crate::mri::problem::DEFAULT_GAMMA,
            density: "centered".into(),
            radius: 0.1,
            methods: MriMethod::ALL.iter().map(|m| m.name().to_string()).collect(),
            eta_ol: ol.eta,
            eta_cac: cac.eta,
            lasso_lambda: cac.lasso_lambda,
            iterations_ol: ol.iterations,
            iterations_cac: cac.iterations,
        }
    }
}

impl MriSection {
    pub fn density(&self) -> Result<MaskDensity> {
        match self.density.as_str() {
            "uniform" => Ok(MaskDensity::Uniform),
            "centered" => Ok(MaskDensity::Centered { radius: self.radius }),
            other => Err(CimError::Config(format!("mri.density: unknown density {other:?}"))),
        }
    }

    pub fn methods(&self) -> Result<Vec<MriMethod>> {
        if self.methods.is_empty() {
            return Err(CimError::Config("mri.methods: empty".into()));
        }
        self.methods.iter().map(|m| m.parse().map_err(|e: CimError| CimError::Config(e.to_string()))).collect()
    }

    /// Per-method settings: thresholds and iteration counts from this
    /// section, integrator overrides from `sde`, velo = iterations − 1.
    pub fn settings(&self, method: MriMethod, sde: &SdeSection, cdp: CdpSettings, seed: u64) -> MriSettings {
        let mut s = MriSettings::for_method(method);
        match method {
            MriMethod::Machine(Model::WignerOl) => {
                s.eta = self.eta_ol;
                s.iterations = self.iterations_ol;
            }
            _ => {
                s.eta = self.eta_cac;
                s.iterations = self.iterations_cac;
            }
        }
        s.velo = s.iterations.saturating_sub(1).max(1);
        s.lasso_lambda = self.lasso_lambda;
        s.sde = sde.apply(s.sde);
        s.cdp = cdp;
        s.seed = seed;
        s
    }
}

/// Cartesian product of parameter axes over a support-only or altmin base.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// `support-only` or `altmin`.
    pub base: ExperimentKind,
    /// Models to run at every point; defaults to `run.model`.
    #[serde(default)]
    pub models: Vec<String>,
    /// Axis name → values. Names: eta, eta_init, eta_end, sparseness,
    /// alpha, nu, tau, g2.
    pub axes: BTreeMap<String, Vec<f64>>,
}

pub const SWEEP_AXES: [&str; 8] = ["eta", "eta_init", "eta_end", "sparseness", "alpha", "nu", "tau", "g2"];

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CimError::Config(format!("cannot read {}: {e}", path.display())))?;
        Ok((Self::from_toml(&text)?, text))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Checks every field that can be checked without running anything.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CimError::Config(m));
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        self.model()?;
        self.instance_params(0).validate_params()?;
        self.cdp_settings()?;
        self.r_init()?;
        self.off_support()?;
        for m in Model::ALL {
            self.sde_params(m).validate().map_err(|e| CimError::Config(e.to_string()))?;
        }
        self.sa.schedule(1)?;
        if self.kind == ExperimentKind::Mri {
            self.mri.methods()?;
            self.mri.density()?;
            if !(self.mri.compression > 0.0 && self.mri.compression <= 1.0) {
                return bad(format!("mri.compression must lie in (0, 1], got {}", self.mri.compression));
            }
            if !(self.mri.sparseness > 0.0 && self.mri.sparseness <= 1.0) {
                return bad(format!("mri.sparseness must lie in (0, 1], got {}", self.mri.sparseness));
            }
        }
        if self.kind == ExperimentKind::Sweep {
            let Some(sw) = &self.sweep else {
                return bad("kind = \"sweep\" needs a [sweep] table".into());
            };
            if !matches!(sw.base, ExperimentKind::SupportOnly | ExperimentKind::Altmin) {
                return bad("sweep.base must be support-only or altmin".into());
            }
            if sw.axes.is_empty() {
                return bad("sweep.axes is empty".into());
            }
            for (name, values) in &sw.axes {
                if !SWEEP_AXES.contains(&name.as_str()) {
                    return bad(format!("sweep.axes: unknown axis {name:?}"));
                }
                if values.is_empty() {
                    return bad(format!("sweep.axes.{name} is empty"));
                }
            }
            for m in &sw.models {
                m.parse::<Model>().map_err(|e| CimError::Config(e.to_string()))?;
            }
        }
        Ok(())
    }

    pub fn model(&self) -> Result<Model> {
        self.run.model.parse().map_err(|e: CimError| CimError::Config(e.to_string()))
    }

    /// Instance parameters for repetition `rep`, seeded from the master seed.
    pub fn instance_params(&self, rep: usize) -> InstanceParams {
        InstanceParams {
            n: self.instance.n,
            alpha: self.instance.alpha,
            sparseness: self.instance.sparseness,
            nu: self.instance.nu,
            seed: instance_seed(self.seed, rep),
        }
    }

    pub fn sde_params(&self, model: Model) -> SdeParams {
        self.sde.apply(SdeParams::default_for(model))
    }

    pub fn cdp_settings(&self) -> Result<CdpSettings> {
        let solver: CdpSolver = self.cdp.solver.parse().map_err(|e: CimError| CimError::Config(e.to_string()))?;
        if !(self.cdp.tol > 0.0) || self.cdp.max_iter == 0 {
            return Err(CimError::Config("cdp.tol must be positive and cdp.max_iter at least 1".into()));
        }
        Ok(CdpSettings { solver, tol: self.cdp.tol, max_iter: self.cdp.max_iter })
    }

    pub fn r_init(&self) -> Result<SignalInit> {
        match self.run.r_init.as_str() {
            "matched-filter" => Ok(SignalInit::MatchedFilter),
            "zeros" => Ok(SignalInit::Zeros),
            "lasso" => Ok(SignalInit::Lasso { lambda: self.run.lasso_lambda }),
            other => Err(CimError::Config(format!("run.r_init: unknown initialisation {other:?}"))),
        }
    }

    pub fn off_support(&self) -> Result<OffSupport> {
        self.run.off_support.parse().map_err(|e: CimError| CimError::Config(e.to_string()))
    }

    pub fn altmin_config(&self, model: Model, seed: u64) -> Result<AltMinConfig> {
        let eta_init = self.run.eta_init.unwrap_or(if model.is_cac() { 0.6 } else { 0.8 });
        let cfg = AltMinConfig {
            model,
            iterations: self.run.iterations,
            eta_init,
            eta_end: self.run.eta_end,
            velo: self.run.velo,
            sde: self.sde_params(model),
            cdp: self.cdp_settings()?,
            r_init: self.r_init()?,
            off_support: self.off_support()?,
            seed,
        };
        cfg.validate().map_err(|e| CimError::Config(e.to_string()))?;
        Ok(cfg)
    }
}

trait ValidateParams {
    fn validate_params(&self) -> Result<()>;
}

impl ValidateParams for InstanceParams {
    fn validate_params(&self) -> Result<()> {
        let ok = self.n >= 2
            && self.alpha > 0.0
            && self.alpha <= 1.0
            && self.sparseness > 0.0
            && self.sparseness <= 1.0
            && self.nu >= 0.0
            && self.nu.is_finite();
        if ok {
            Ok(())
        } else {
            Err(CimError::Config(format!(
                "instance: need n >= 2, alpha and sparseness in (0, 1], nu >= 0; got n={} alpha={} sparseness={} nu={}",
                self.n, self.alpha, self.sparseness, self.nu
            )))
        }
    }
}

/// Seed of the `rep`-th instance; shared by every model and sweep point so
/// comparisons are paired.
pub fn instance_seed(master: u64, rep: usize) -> u64 {
    crate::rng::derive_seed(master, &[0x1457, rep as u64])
}

/// Seed of the integrator for sweep point `point`, repetition `rep`.
pub fn run_seed(master: u64, point: usize, rep: usize) -> u64 {
    crate::rng::derive_seed(master, &[0x5de, point as u64, rep as u64])
}

/// SHA-256 over `"blob <len>\0" + content`, as git hashes objects.
pub fn content_hash(content: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
