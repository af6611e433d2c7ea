//! The `gen`, `run`, `sweep`, `mri` and `oracle` commands.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::config::{content_hash, instance_seed, run_seed, ExperimentConfig, ExperimentKind};
use super::output::{create, csv_field, mean, Metadata, Quantiles};
use crate::altmin::{run_alt_min_observed, IterationRecord};
use crate::baselines::ks::ks_one_sided;
use crate::baselines::lasso::lasso_ista_gram;
use crate::baselines::sa::sa_support_estimation;
use crate::instance::{self, direction_cosine, hamming_loss};
use crate::mri::image::{read_pgm, smooth_phantom, write_index_list, write_pgm};
use crate::mri::{build_mri_problem, make_sparse_source, reconstruct_from, KMask};
use crate::qubo::{brute_force_ground_state, build_qubo, BRUTE_FORCE_LIMIT};
use crate::rng::derive_seed;
use crate::sde::{cim_support_estimation, Model};
use crate::{gen_instance, CimError, Instance, Result};

/// A loaded config plus the command-line overrides.
#[derive(Clone, Debug)]
pub struct Context {
    pub config: ExperimentConfig,
    /// Raw config text; its hash identifies the run.
    pub config_text: String,
    pub out: PathBuf,
    pub workers: usize,
}

impl Context {
    /// `seed`, `out` and `workers` override the config when given. The
    /// worker count falls back to the config, then to the logical core count.
    pub fn new(
        mut config: ExperimentConfig,
        config_text: String,
        seed: Option<u64>,
        out: Option<PathBuf>,
        workers: Option<usize>,
    ) -> Result<Self> {
        if let Some(s) = seed {
            config.seed = s;
        }
        let out = out.or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
        config.out = Some(out.clone());
        let workers = workers
            .or(config.workers)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        if workers == 0 {
            return Err(CimError::Config("workers must be at least 1".into()));
        }
        config.workers = Some(workers);
        config.validate()?;
        Ok(Context { config, config_text, out, workers })
    }

    pub fn from_toml(text: &str, out: &Path) -> Result<Self> {
        let cfg = ExperimentConfig::from_toml(text)?;
        Context::new(cfg, text.to_string(), None, Some(out.to_path_buf()), None)
    }

    fn metadata(&self, command: &str) -> Metadata {
        let mut md = Metadata {
            command: command.into(),
            config_hash: content_hash(self.config_text.as_bytes()),
            seed: self.config.seed,
            workers: self.workers,
            notes: Vec::new(),
            resolved: self.config.to_toml(),
        };
        for m in Model::ALL {
            md.note(&format!("sde_{}", m.name().replace('-', "_")), format!("{:?}", self.config.sde_params(m)));
        }
        md
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| CimError::Config(format!("cannot start {} workers: {e}", self.workers)))
    }
}

/// What a command wrote and a one-line summary for the terminal.
#[derive(Clone, Debug, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// Either a failed command (after its partial output was written) or a
/// config problem found before anything ran.
fn fail_after(report: &Report, errors: Vec<String>) -> Result<Report> {
    if errors.is_empty() {
        Ok(report.clone())
    } else {
        Err(CimError::RunsFailed { failed: errors.len(), first: errors[0].clone() })
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes one instance file per repetition and `manifest.csv`.
pub fn cmd_gen(ctx: &Context) -> Result<Report> {
    let cfg = &ctx.config;
    std::fs::create_dir_all(&ctx.out)?;
    let mut report = Report::default();
    let mut manifest = create(&ctx.out, "manifest.csv")?;
    writeln!(manifest, "file,n,m,alpha,sparseness,nu,seed,sha256")?;
    for rep in 0..cfg.repetitions {
        let inst = gen_instance(cfg.instance_params(rep))?;
        let name = format!("instance_{rep:04}.cimi");
        let bytes = instance::to_bytes(&inst);
        std::fs::write(ctx.out.join(&name), &bytes)?;
        writeln!(
            manifest,
            "{name},{},{},{},{},{},{},{}",
            inst.n(),
            inst.m(),
            inst.realised_alpha(),
            inst.realised_sparseness(),
            inst.params.nu,
            inst.params.seed,
            sha256_hex(&bytes)
        )?;
        report.files.push(ctx.out.join(name));
    }
    manifest.flush()?;
    report.files.push(ctx.out.join("manifest.csv"));
    report.files.push(ctx.metadata("gen").write(&ctx.out)?);
    report.summary = format!("{} instance(s) in {}", cfg.repetitions, ctx.out.display());
    Ok(report)
}

/// One support-estimation trajectory at the configured threshold with R
/// pinned to the masked source.
#[derive(Clone, Debug)]
struct SupportRow {
    support_size: usize,
    true_size: usize,
    direction_cosine: f64,
    hamming_loss: f64,
    objective: f64,
}

fn support_only_once(cfg: &ExperimentConfig, model: Model, inst: &Instance, seed: u64) -> Result<SupportRow> {
    let problem = build_qubo(&inst.matrix, &inst.observation, cfg.run.eta)?;
    let source = inst.masked_signal();
    let params = cfg.sde_params(model).with_seed(seed);
    let est = cim_support_estimation(model, &problem, &source, cfg.run.eta, &params, None)?;
    Ok(SupportRow {
        support_size: est.sigma.count(),
        true_size: inst.support.count(),
        direction_cosine: direction_cosine(&inst.support, &est.sigma)?.0,
        hamming_loss: hamming_loss(&est.sigma, &inst.support)?,
        objective: problem.energy(&source, &est.sigma)?.objective(),
    })
}

/// Executes a `support-only`, `altmin` or `sa-compare` config.
pub fn cmd_run(ctx: &Context) -> Result<Report> {
    match ctx.config.kind {
        ExperimentKind::SupportOnly => run_support_only_cmd(ctx),
        ExperimentKind::Altmin => run_altmin_cmd(ctx),
        ExperimentKind::SaCompare => run_sa_compare_cmd(ctx),
        ExperimentKind::Mri => Err(CimError::Config("kind = \"mri\" runs under the `mri` command".into())),
        ExperimentKind::Sweep => Err(CimError::Config("kind = \"sweep\" runs under the `sweep` command".into())),
    }
}

fn run_support_only_cmd(ctx: &Context) -> Result<Report> {
    let cfg = &ctx.config;
    let model = cfg.model()?;
    let started = Instant::now();
    let results: Vec<Result<SupportRow>> = ctx.pool()?.install(|| {
        (0..cfg.repetitions)
            .into_par_iter()
            .map(|rep| {
                let inst = gen_instance(cfg.instance_params(rep))?;
                support_only_once(cfg, model, &inst, run_seed(cfg.seed, 0, rep))
            })
            .collect()
    });
    let wall = started.elapsed().as_secs_f64();

    let mut report = Report::default();
    let mut out = create(&ctx.out, "support_only.csv")?;
    writeln!(out, "rep,instance_seed,run_seed,model,eta,status,support_size,true_support_size,direction_cosine,hamming_loss,objective")?;
    let mut errors = Vec::new();
    let mut dcs = Vec::new();
    for (rep, res) in results.iter().enumerate() {
        let lead = format!("{rep},{},{},{model},{}", instance_seed(cfg.seed, rep), run_seed(cfg.seed, 0, rep), cfg.run.eta);
        match res {
            Ok(r) => {
                dcs.push(r.direction_cosine);
                writeln!(
                    out,
                    "{lead},ok,{},{},{},{},{}",
                    r.support_size, r.true_size, r.direction_cosine, r.hamming_loss, r.objective
                )?;
            }
            Err(e) => {
                errors.push(format!("rep {rep}: {e}"));
                writeln!(out, "{lead},{},,,,,", csv_field(&format!("error: {e}")))?;
            }
        }
    }
    out.flush()?;
    report.files.push(ctx.out.join("support_only.csv"));

    let mut summary = create(&ctx.out, "summary.csv")?;
    writeln!(summary, "model,runs,failed,mean_direction_cosine,min,q25,median,q75,max,wall_s")?;
    let q = Quantiles::of(&dcs);
    let qs = q.map_or(",,,,".to_string(), |q| format!("{},{},{},{},{}", q.min, q.q25, q.median, q.q75, q.max));
    let m = if dcs.is_empty() { f64::NAN } else { mean(&dcs) };
    writeln!(summary, "{model},{},{},{m},{qs},{wall:.3}", cfg.repetitions, errors.len())?;
    summary.flush()?;
    report.files.push(ctx.out.join("summary.csv"));
    report.files.push(ctx.metadata("run").write(&ctx.out)?);
    report.summary = format!("{model}: mean direction cosine {m:.4} over {} run(s)", dcs.len());
    fail_after(&report, errors)
}

struct AltminRow {
    iterations: usize,
    rmse: f64,
    direction_cosine: f64,
    hamming_loss: f64,
    support_size: usize,
    wall: f64,
}

fn run_altmin_cmd(ctx: &Context) -> Result<Report> {
    let cfg = &ctx.config;
    let model = cfg.model()?;
    std::fs::create_dir_all(&ctx.out)?;
    let results: Vec<Result<AltminRow>> = ctx.pool()?.install(|| {
        (0..cfg.repetitions)
            .into_par_iter()
            .map(|rep| {
                let started = Instant::now();
                let inst = gen_instance(cfg.instance_params(rep))?;
                let am = cfg.altmin_config(model, run_seed(cfg.seed, 0, rep))?;
                let mut trace = create(&ctx.out, &format!("trace_{rep:04}.csv"))?;
                writeln!(trace, "{}", IterationRecord::CSV_HEADER)?;
                let res = run_alt_min_observed(&inst, &am, &mut |rec| {
                    rec.write_csv_row(&mut trace)?;
                    trace.flush()?;
                    Ok(())
                });
                trace.flush()?;
                let tr = res?;
                let last = tr.last();
                let m = last.metrics.expect("synthetic runs carry the truth");
                Ok(AltminRow {
                    iterations: tr.records.len(),
                    rmse: m.rmse,
                    direction_cosine: m.direction_cosine,
                    hamming_loss: m.hamming_loss,
                    support_size: last.sigma.count(),
                    wall: started.elapsed().as_secs_f64(),
                })
            })
            .collect()
    });

    let mut report = Report::default();
    let mut summary = create(&ctx.out, "summary.csv")?;
    writeln!(summary, "rep,instance_seed,run_seed,model,status,iterations,rmse,direction_cosine,hamming_loss,support_size,wall_s")?;
    let mut errors = Vec::new();
    let mut rmses = Vec::new();
    for (rep, res) in results.iter().enumerate() {
        report.files.push(ctx.out.join(format!("trace_{rep:04}.csv")));
        let lead = format!("{rep},{},{},{model}", instance_seed(cfg.seed, rep), run_seed(cfg.seed, 0, rep));
        match res {
            Ok(r) => {
                rmses.push(r.rmse);
                writeln!(
                    summary,
                    "{lead},ok,{},{},{},{},{},{:.3}",
                    r.iterations, r.rmse, r.direction_cosine, r.hamming_loss, r.support_size, r.wall
                )?;
            }
            Err(e) => {
                errors.push(format!("rep {rep}: {e}"));
                writeln!(summary, "{lead},{},,,,,,", csv_field(&format!("error: {e}")))?;
            }
        }
    }
    summary.flush()?;
    report.files.push(ctx.out.join("summary.csv"));
    report.files.push(ctx.metadata("run").write(&ctx.out)?);
    let m = if rmses.is_empty() { f64::NAN } else { mean(&rmses) };
    report.summary = format!("{model}: mean final RMSE {m:.5} over {} run(s)", rmses.len());
    fail_after(&report, errors)
}

struct CompareRow {
    machine: SupportRow,
    machine_wall: f64,
    sa_sweeps: usize,
    sa_direction_cosine: f64,
    sa_objective: f64,
    sa_wall: f64,
    sa_trace: Vec<f64>,
}

/// Stages of annealing that take about `budget` seconds on this problem.
fn calibrate_sweeps(problem: &crate::QuboProblem, signal: &[f64], cfg: &ExperimentConfig, budget: f64) -> Result<usize> {
    const PILOT: usize = 20;
    let started = Instant::now();
    sa_support_estimation(problem, signal, &cfg.sa.schedule(PILOT)?, 0)?;
    let per_stage = started.elapsed().as_secs_f64() / PILOT as f64;
    Ok(((budget / per_stage.max(1e-9)).round() as usize).max(1))
}

fn run_sa_compare_cmd(ctx: &Context) -> Result<Report> {
    let cfg = &ctx.config;
    let model = cfg.model()?;
    // timings feed the calibration, so runs go one at a time
    let results: Vec<Result<CompareRow>> = (0..cfg.repetitions)
        .map(|rep| {
            let inst = gen_instance(cfg.instance_params(rep))?;
            let started = Instant::now();
            let machine = support_only_once(cfg, model, &inst, run_seed(cfg.seed, 0, rep))?;
            let machine_wall = started.elapsed().as_secs_f64();

            let problem = build_qubo(&inst.matrix, &inst.observation, cfg.run.eta)?;
            let source = inst.masked_signal();
            let sweeps = match cfg.sa.sweeps {
                Some(s) => s,
                None => calibrate_sweeps(&problem, &source, cfg, machine_wall)?,
            };
            let started = Instant::now();
            let sa = sa_support_estimation(&problem, &source, &cfg.sa.schedule(sweeps)?, run_seed(cfg.seed, 1, rep))?;
            Ok(CompareRow {
                machine,
                machine_wall,
                sa_sweeps: sweeps,
                sa_direction_cosine: direction_cosine(&inst.support, &sa.sigma)?.0,
                sa_objective: problem.energy(&source, &sa.sigma)?.objective(),
                sa_wall: started.elapsed().as_secs_f64(),
                sa_trace: sa.energy_trace,
            })
        })
        .collect();

    let mut report = Report::default();
    let mut rows = create(&ctx.out, "compare.csv")?;
    writeln!(rows, "rep,method,status,sweeps,direction_cosine,objective,wall_s")?;
    let mut trace = create(&ctx.out, "sa_energy.csv")?;
    writeln!(trace, "rep,stage,energy")?;
    let (mut dc_machine, mut dc_sa, mut errors) = (Vec::new(), Vec::new(), Vec::new());
    for (rep, res) in results.iter().enumerate() {
        match res {
            Ok(r) => {
                dc_machine.push(r.machine.direction_cosine);
                dc_sa.push(r.sa_direction_cosine);
                writeln!(rows, "{rep},{model},ok,,{},{},{:.3}", r.machine.direction_cosine, r.machine.objective, r.machine_wall)?;
                writeln!(rows, "{rep},sa,ok,{},{},{},{:.3}", r.sa_sweeps, r.sa_direction_cosine, r.sa_objective, r.sa_wall)?;
                for (k, e) in r.sa_trace.iter().enumerate() {
                    writeln!(trace, "{rep},{k},{e}")?;
                }
            }
            Err(e) => {
                errors.push(format!("rep {rep}: {e}"));
                writeln!(rows, "{rep},,{},,,,", csv_field(&format!("error: {e}")))?;
            }
        }
    }
    rows.flush()?;
    trace.flush()?;
    report.files.push(ctx.out.join("compare.csv"));
    report.files.push(ctx.out.join("sa_energy.csv"));

    let mut ks = create(&ctx.out, "ks.csv")?;
    writeln!(ks, "larger,other,n_larger,n_other,mean_larger,mean_other,statistic,p_value")?;
    if !dc_machine.is_empty() {
        let t = ks_one_sided(&dc_machine, &dc_sa)?;
        writeln!(
            ks,
            "{model},sa,{},{},{},{},{},{}",
            dc_machine.len(),
            dc_sa.len(),
            mean(&dc_machine),
            mean(&dc_sa),
            t.statistic,
            t.p_value
        )?;
        report.summary = format!(
            "mean direction cosine {model} {:.4} vs sa {:.4}; one-sided KS p = {:.3e}",
            mean(&dc_machine),
            mean(&dc_sa),
            t.p_value
        );
    }
    ks.flush()?;
    report.files.push(ctx.out.join("ks.csv"));
    report.files.push(ctx.metadata("run").write(&ctx.out)?);
    fail_after(&report, errors)
}

/// One cell of a sweep grid.
#[derive(Clone, Debug)]
struct SweepPoint {
    model: Model,
    values: Vec<(String, f64)>,
    config: ExperimentConfig,
}

fn apply_axis(cfg: &mut ExperimentConfig, name: &str, v: f64) -> Result<()> {
    match name {
        "eta" => cfg.run.eta = v,
        "eta_init" => cfg.run.eta_init = Some(v),
        "eta_end" => cfg.run.eta_end = v,
        "sparseness" => cfg.instance.sparseness = v,
        "alpha" => cfg.instance.alpha = v,
        "nu" => cfg.instance.nu = v,
        "tau" => cfg.sde.tau = Some(v),
        "g2" => cfg.sde.g2 = Some(v),
        other => return Err(CimError::Config(format!("sweep.axes: unknown axis {other:?}"))),
    }
    Ok(())
}

/// Cartesian product of the axes (last axis fastest) for each model.
fn sweep_points(cfg: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    let sw = cfg.sweep.as_ref().ok_or_else(|| CimError::Config("missing [sweep] table".into()))?;
    let models: Vec<Model> = if sw.models.is_empty() {
        vec![cfg.model()?]
    } else {
        sw.models.iter().map(|m| m.parse()).collect::<Result<_>>().map_err(|e| CimError::Config(e.to_string()))?
    };
    let axes: Vec<(&String, &Vec<f64>)> = sw.axes.iter().collect();
    let mut combos: Vec<Vec<(String, f64)>> = vec![Vec::new()];
    for (name, values) in &axes {
        if values.is_empty() {
            return Err(CimError::Config(format!("sweep.axes.{name} is empty")));
        }
        combos = combos
            .into_iter()
            .flat_map(|c| {
                values.iter().map(move |&v| {
                    let mut c = c.clone();
                    c.push(((*name).clone(), v));
                    c
                })
            })
            .collect();
    }
    let mut points = Vec::new();
    for &model in &models {
        for values in &combos {
            let mut c = cfg.clone();
            c.kind = sw.base;
            c.sweep = None;
            c.run.model = model.name().into();
            for (name, v) in values {
                apply_axis(&mut c, name, *v)?;
            }
            c.validate().map_err(|e| {
                CimError::Config(format!("sweep point {values:?}: {}", e.to_string().trim_start_matches("config error: ")))
            })?;
            if sw.base == ExperimentKind::Altmin {
                c.altmin_config(model, 0)?;
            }
            points.push(SweepPoint { model, values: values.clone(), config: c });
        }
    }
    Ok(points)
}

#[derive(Clone, Debug)]
struct SweepRun {
    rmse: Option<f64>,
    direction_cosine: f64,
    hamming_loss: f64,
    support_size: usize,
}

fn sweep_once(point: &SweepPoint, base: ExperimentKind, rep: usize, seed: u64) -> Result<SweepRun> {
    let cfg = &point.config;
    let inst = gen_instance(cfg.instance_params(rep))?;
    match base {
        ExperimentKind::Altmin => {
            let tr = run_alt_min_observed(&inst, &cfg.altmin_config(point.model, seed)?, &mut |_| Ok(()))?;
            let m = tr.last().metrics.expect("synthetic runs carry the truth");
            Ok(SweepRun {
                rmse: Some(m.rmse),
                direction_cosine: m.direction_cosine,
                hamming_loss: m.hamming_loss,
                support_size: tr.sigma.count(),
            })
        }
        _ => {
            let r = support_only_once(cfg, point.model, &inst, seed)?;
            Ok(SweepRun {
                rmse: None,
                direction_cosine: r.direction_cosine,
                hamming_loss: r.hamming_loss,
                support_size: r.support_size,
            })
        }
    }
}

/// Runs every grid point × repetition in parallel; instances are shared
/// across points with the same repetition index.
pub fn cmd_sweep(ctx: &Context) -> Result<Report> {
    let cfg = &ctx.config;
    let sw = cfg.sweep.as_ref().ok_or_else(|| CimError::Config("kind = \"sweep\" needs a [sweep] table".into()))?;
    let base = sw.base;
    let points = sweep_points(cfg)?;
    let tasks: Vec<(usize, usize)> =
        (0..points.len()).flat_map(|p| (0..cfg.repetitions).map(move |r| (p, r))).collect();
    let started = Instant::now();
    let results: Vec<Result<SweepRun>> = ctx.pool()?.install(|| {
        tasks
            .par_iter()
            .map(|&(p, rep)| sweep_once(&points[p], base, rep, run_seed(cfg.seed, p, rep)))
            .collect()
    });
    let wall = started.elapsed().as_secs_f64();

    let axis_names: Vec<&String> = sw.axes.keys().collect();
    let axis_header: String = axis_names.iter().map(|n| format!(",{n}")).collect();
    let axis_values = |p: &SweepPoint| -> String { p.values.iter().map(|(_, v)| format!(",{v}")).collect() };
    let metric = if base == ExperimentKind::Altmin { "rmse" } else { "direction_cosine" };

    let mut runs = create(&ctx.out, "runs.csv")?;
    writeln!(runs, "point,model{axis_header},rep,instance_seed,run_seed,status,rmse,direction_cosine,hamming_loss,support_size")?;
    let mut per_point: Vec<(Vec<f64>, usize)> = vec![(Vec::new(), 0); points.len()];
    let mut failures = 0;
    for (&(p, rep), res) in tasks.iter().zip(&results) {
        let pt = &points[p];
        let lead = format!(
            "{p},{}{},{rep},{},{}",
            pt.model,
            axis_values(pt),
            instance_seed(cfg.seed, rep),
            run_seed(cfg.seed, p, rep)
        );
        match res {
            Ok(r) => {
                let rmse = r.rmse.map_or(String::new(), |v| v.to_string());
                writeln!(runs, "{lead},ok,{rmse},{},{},{}", r.direction_cosine, r.hamming_loss, r.support_size)?;
                per_point[p].0.push(r.rmse.unwrap_or(r.direction_cosine));
            }
            Err(e) => {
                failures += 1;
                per_point[p].1 += 1;
                writeln!(runs, "{lead},{},,,,", csv_field(&format!("error: {e}")))?;
            }
        }
    }
    runs.flush()?;

    let mut summary = create(&ctx.out, "summary.csv")?;
    writeln!(summary, "point,model{axis_header},metric,runs,failed,mean,min,q25,median,q75,max")?;
    for (p, pt) in points.iter().enumerate() {
        let (vals, failed) = &per_point[p];
        let stats = match Quantiles::of(vals) {
            Some(q) => format!("{},{},{},{},{},{}", mean(vals), q.min, q.q25, q.median, q.q75, q.max),
            None => ",,,,,".into(),
        };
        writeln!(summary, "{p},{}{},{metric},{},{failed},{stats}", pt.model, axis_values(pt), vals.len())?;
    }
    summary.flush()?;

    let mut md = ctx.metadata("sweep");
    md.note("points", points.len());
    md.note("failed_runs", failures);
    md.note("wall_s", format!("{wall:.3}"));
    let report = Report {
        files: vec![ctx.out.join("runs.csv"), ctx.out.join("summary.csv"), md.write(&ctx.out)?],
        summary: format!("{} point(s) × {} rep(s), {failures} failed", points.len(), cfg.repetitions),
    };
    // a sweep survives individual failures
    Ok(report)
}

/// Reconstructs one image with every requested method.
pub fn cmd_mri(ctx: &Context) -> Result<Report> {
    let cfg = &ctx.config;
    let ms = &cfg.mri;
    let methods = ms.methods()?;
    let image = match &ms.image {
        Some(path) => read_pgm(path)?,
        None => smooth_phantom(ms.side, 2),
    };
    let (h, w) = image.dim();
    if h != w || !h.is_power_of_two() || h < 2 {
        return Err(CimError::Config(format!("mri image must be square with a power-of-two side, got {h}x{w}")));
    }
    let side = h;
    let source = make_sparse_source(&image, ms.sparseness)?;
    let mask = KMask::random_with(side, ms.compression, ms.density()?, cfg.seed)?;
    let cdp = cfg.cdp_settings()?;
    let machine_seed = derive_seed(cfg.seed, &[0x3e1]);
    let first = ms.settings(methods[0], &cfg.sde, cdp, machine_seed);
    let mut problem = build_mri_problem(&source, mask.clone(), ms.gamma, first.eta)?;

    let mut report = Report::default();
    std::fs::create_dir_all(&ctx.out)?;
    write_pgm(&ctx.out.join("original.pgm"), &image)?;
    write_pgm(&ctx.out.join("sparse_source.pgm"), &source.pixels)?;
    write_index_list(&ctx.out.join("mask.txt"), mask.indices())?;
    report.files.extend(["original.pgm", "sparse_source.pgm", "mask.txt"].map(|f| ctx.out.join(f)));

    let started = Instant::now();
    let lasso = lasso_ista_gram(&problem.qubo, first.lasso_lambda, first.lasso_tol, first.lasso_max_iter)?;
    let lasso_wall = started.elapsed().as_secs_f64();

    let mut table = create(&ctx.out, "comparison.csv")?;
    writeln!(table, "method,status,rmse,support_size,wall_s")?;
    let mut errors = Vec::new();
    let mut lines = Vec::new();
    for &method in &methods {
        let settings = ms.settings(method, &cfg.sde, cdp, machine_seed);
        let started = Instant::now();
        match reconstruct_from(&mut problem, &source, method, &settings, &lasso) {
            Ok(o) => {
                let wall = started.elapsed().as_secs_f64() + lasso_wall;
                let name = method.name();
                write_pgm(&ctx.out.join(format!("recon_{name}.pgm")), &o.image)?;
                let mut coeffs = create(&ctx.out, &format!("coeffs_{name}.csv"))?;
                writeln!(coeffs, "index,value")?;
                for (i, c) in o.coeffs.iter().enumerate() {
                    writeln!(coeffs, "{i},{c:e}")?;
                }
                coeffs.flush()?;
                report.files.push(ctx.out.join(format!("recon_{name}.pgm")));
                report.files.push(ctx.out.join(format!("coeffs_{name}.csv")));
                if let Some(tr) = &o.trace {
                    tr.write_csv(create(&ctx.out, &format!("trace_{name}.csv"))?)?;
                    report.files.push(ctx.out.join(format!("trace_{name}.csv")));
                }
                writeln!(table, "{name},ok,{},{},{wall:.3}", o.rmse, o.support.count())?;
                lines.push(format!("{name} {:.5}", o.rmse));
            }
            Err(e) => {
                errors.push(format!("{}: {e}", method.name()));
                writeln!(table, "{},{},,,", method.name(), csv_field(&format!("error: {e}")))?;
            }
        }
    }
    table.flush()?;
    report.files.push(ctx.out.join("comparison.csv"));

    let mut md = ctx.metadata("mri");
    md.note("side", side);
    md.note("mask_seed", cfg.seed);
    md.note("machine_seed", machine_seed);
    md.note("mask_samples", mask.len());
    md.note("realised_compression", mask.compression());
    md.note("realised_sparseness", source.sparseness);
    md.note(
        "embedding",
        "mask closed under k -> -k; real and imaginary parts of each sampled frequency are separate real rows",
    );
    md.note("boundary", "periodic second differences");
    md.note("lasso_iterations", lasso.iterations);
    md.note("lasso_converged", lasso.converged);
    report.files.push(md.write(&ctx.out)?);
    report.summary = format!("RMSE: {}", lines.join(", "));
    fail_after(&report, errors)
}

/// Threshold handed to `model` so its effective l0 penalty matches the
/// QUBO's `λ = η²/2`. The amplitude-controlled injection subtracts
/// `η²/4 · τ`, so it needs `√2 η`.
pub fn matched_machine_eta(model: Model, eta: f64) -> f64 {
    if model.is_cac() {
        std::f64::consts::SQRT_2 * eta
    } else {
        eta
    }
}

/// Exhaustive ground state against annealing and every machine model on
/// small instances.
pub fn cmd_oracle(ctx: &Context) -> Result<Report> {
    let cfg = &ctx.config;
    if cfg.instance.n > BRUTE_FORCE_LIMIT {
        return Err(CimError::Config(format!(
            "oracle needs instance.n <= {BRUTE_FORCE_LIMIT}, got {}",
            cfg.instance.n
        )));
    }
    let eta = cfg.run.eta;
    let sweeps = cfg.sa.sweeps.unwrap_or(10_000);
    let schedule = cfg.sa.schedule(sweeps)?;
    let methods: Vec<String> = std::iter::once("sa".to_string()).chain(Model::ALL.iter().map(|m| m.name().to_string())).collect();

    let results: Vec<Result<(f64, Vec<f64>)>> = ctx.pool()?.install(|| {
        (0..cfg.repetitions)
            .into_par_iter()
            .map(|rep| {
                let inst = gen_instance(cfg.instance_params(rep))?;
                let problem = build_qubo(&inst.matrix, &inst.observation, eta)?;
                let source = inst.masked_signal();
                let (_, ground) = brute_force_ground_state(&problem, &source)?;
                let mut energies = vec![sa_support_estimation(&problem, &source, &schedule, run_seed(cfg.seed, 0, rep))?.energy];
                for (i, &model) in Model::ALL.iter().enumerate() {
                    let params = cfg.sde_params(model).with_seed(run_seed(cfg.seed, i + 1, rep));
                    let est = cim_support_estimation(model, &problem, &source, matched_machine_eta(model, eta), &params, None)?;
                    energies.push(problem.energy(&source, &est.sigma)?.energy);
                }
                Ok((ground, energies))
            })
            .collect()
    });

    let mut out = create(&ctx.out, "oracle.csv")?;
    writeln!(out, "rep,method,status,energy,ground_energy,gap,hit")?;
    let mut hits = vec![0usize; methods.len()];
    let mut done = 0;
    let mut errors = Vec::new();
    for (rep, res) in results.iter().enumerate() {
        match res {
            Ok((ground, energies)) => {
                done += 1;
                for (k, e) in energies.iter().enumerate() {
                    let gap = e - ground;
                    let hit = gap <= 1e-9;
                    hits[k] += hit as usize;
                    writeln!(out, "{rep},{},ok,{e},{ground},{gap:e},{}", methods[k], hit as u8)?;
                }
            }
            Err(e) => {
                errors.push(format!("rep {rep}: {e}"));
                writeln!(out, "{rep},,{},,,,", csv_field(&format!("error: {e}")))?;
            }
        }
    }
    out.flush()?;
    let mut summary = create(&ctx.out, "summary.csv")?;
    writeln!(summary, "method,instances,ground_hits,hit_fraction")?;
    let mut parts = Vec::new();
    for (k, m) in methods.iter().enumerate() {
        let frac = hits[k] as f64 / done.max(1) as f64;
        writeln!(summary, "{m},{done},{},{frac}", hits[k])?;
        parts.push(format!("{m} {frac:.2}"));
    }
    summary.flush()?;
    let mut md = ctx.metadata("oracle");
    md.note("sa_sweeps", sweeps);
    md.note("machine_eta_cac", matched_machine_eta(Model::WignerCac, eta));
    let report = Report {
        files: vec![ctx.out.join("oracle.csv"), ctx.out.join("summary.csv"), md.write(&ctx.out)?],
        summary: format!("ground-state hit fraction: {}", parts.join(", ")),
    };
    fail_after(&report, errors)
}
