use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::spec::{serialize_spec, DataSource, DiagnosticSpec, ExperimentSpec, ScheduleSpec, TargetSpec};
use crate::diagnostics::{
    acceptance_stats, binning_floor, energy_error_scaling, grid_truth, histogram, hitting_time, tv_distance,
    PhaseDistribution,
};
use crate::error::{invalid, Error, Result};
use crate::regularity::{regularity_report, ProbeOptions};
use crate::rng;
use crate::samplers::{run_chain, theorem1_step_size, write_trace, ChainConfig, ChainTrace};
use crate::targets::{
    annulus, empirical_zero_one, make_gaussian, make_logistic_regression, make_sigmoid_regression,
    make_smoothed_zero_one, precondition, recommended_schedule, sample_sphere_dataset, ConstraintSet, Dataset,
    TargetModel,
};
use crate::vector::{angle, scaled};

/// Environment variable naming the default output root.
pub const OUT_DIR_ENV: &str = "MALA_OUT_DIR";

const INIT_STREAM: u64 = 1 << 62;
const RISK_STREAM: u64 = (1 << 62) + (1 << 40);

/// A target ready for sampling plus what the diagnostics need to interpret it.
pub struct BuiltTarget {
    pub model: TargetModel,
    pub dataset: Option<Dataset>,
    pub theta_star: Option<Vec<f64>>,
    pub q0: Option<f64>,
    /// Sampler coordinates times `scale` are the original parameters.
    pub scale: f64,
    pub constraint: Option<ConstraintSet>,
}

fn e1(d: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[0] = 1.0;
    e
}

fn load_data(src: &DataSource) -> Result<(Dataset, Option<Vec<f64>>, Option<f64>)> {
    match src {
        DataSource::File(path) => {
            let data = Dataset::load_csv(path)?;
            let theta = data.theta_star().map(<[_]>::to_vec);
            let q0 = Some(data.meta().q0);
            Ok((data, theta, q0))
        }
        DataSource::Generate { d, r, q0, seed } => {
            let theta = e1(*d);
            Ok((sample_sphere_dataset(*d, *r, &theta, *q0, *seed)?, Some(theta), Some(*q0)))
        }
    }
}

pub fn build_target(spec: &ExperimentSpec) -> Result<BuiltTarget> {
    let annulus_from_sampler = spec.sampler.annulus.map(|(a, b)| annulus(a, b)).transpose()?;
    Ok(match &spec.target {
        TargetSpec::Gaussian { d, precision } => BuiltTarget {
            model: make_gaussian(*d, precision)?,
            dataset: None,
            theta_star: None,
            q0: None,
            scale: 1.0,
            constraint: annulus_from_sampler,
        },
        TargetSpec::Logistic { data, prior } | TargetSpec::Sigmoid { data, prior } => {
            let (dataset, theta_star, q0) = load_data(data)?;
            let model = if matches!(spec.target, TargetSpec::Logistic { .. }) {
                make_logistic_regression(dataset.clone(), *prior)?
            } else {
                make_sigmoid_regression(dataset.clone(), *prior)?
            };
            BuiltTarget { model, dataset: Some(dataset), theta_star, q0, scale: 1.0, constraint: annulus_from_sampler }
        }
        TargetSpec::ZeroOne { d, r, q0, epsilon, c1, data_seed } => {
            let theta = e1(*d);
            let data = sample_sphere_dataset(*d, *r, &theta, *q0, *data_seed)?;
            let sched = recommended_schedule(*q0, *epsilon, *d, *c1)?;
            let inner = make_smoothed_zero_one(data.clone(), sched.inverse_temperature, sched.lambda)?;
            let scale = sched.annulus_scale();
            BuiltTarget {
                model: precondition(inner, scale)?,
                dataset: Some(data),
                theta_star: Some(theta),
                q0: Some(*q0),
                scale,
                constraint: Some(annulus_from_sampler.unwrap_or(annulus(0.5, 1.0)?)),
            }
        }
    })
}

/// Step sizes the spec asks for; the theorem-1 schedule reads the target's regularity constants.
pub fn resolve_etas(spec: &ExperimentSpec, target: &BuiltTarget) -> Result<Vec<f64>> {
    match &spec.schedule {
        ScheduleSpec::Fixed { eta } => Ok(vec![*eta]),
        ScheduleSpec::Sweep { etas } => Ok(etas.clone()),
        ScheduleSpec::Theorem1 { safety } => {
            let t = target.model.as_ref();
            let (c3, c4, m, a) = match t.known_constants() {
                Some(k) => (k.c3, k.c4, k.m, k.tail_rate),
                None => {
                    let rep = regularity_report(t, target.dataset.as_ref(), &ProbeOptions::new(50, 20, spec.seed))?;
                    let m = rep.lipschitz_estimate.unwrap_or(rep.gradient_bound_estimate);
                    (rep.c3_estimate.value, rep.c4_estimate.value, m, None)
                }
            };
            Ok(vec![theorem1_step_size(c3, c4, m, t.dim(), a, *safety)?])
        }
    }
}

/// Initial state for one replica: explicit, a random point at mid-annulus radius, or the origin.
pub fn replica_init(spec: &ExperimentSpec, target: &BuiltTarget, replica: usize) -> Vec<f64> {
    if let Some(init) = &spec.sampler.init {
        return init.clone();
    }
    let d = target.model.dim();
    match target.constraint.as_ref().and_then(ConstraintSet::annulus_radii) {
        Some((a, b)) => {
            let mut rng = rng::stream(spec.seed, INIT_STREAM + replica as u64);
            let mut z = rng::standard_normal_vec(&mut rng, d);
            while crate::vector::norm(&z) < 1e-12 {
                z = rng::standard_normal_vec(&mut rng, d);
            }
            let n = crate::vector::norm(&z);
            scaled(&z, 0.5 * (a + b) / n)
        }
        None => vec![0.0; d],
    }
}

pub struct ReplicaRun {
    pub eta_index: usize,
    pub eta: f64,
    pub replica: usize,
    pub trace: std::result::Result<ChainTrace, String>,
}

/// Runs every `(eta, replica)` chain in parallel; results come back in job order.
pub fn run_replicas(spec: &ExperimentSpec, target: &BuiltTarget, etas: &[f64]) -> Vec<ReplicaRun> {
    let jobs: Vec<(usize, usize)> = (0..etas.len()).flat_map(|e| (0..spec.replicas).map(move |r| (e, r))).collect();
    jobs.par_iter()
        .map(|&(e, r)| {
            let mut cfg = ChainConfig::new(etas[e], spec.iterations, spec.seed)
                .stream(((e as u64) << 32) | r as u64)
                .lazy(spec.sampler.lazy)
                .record_every(spec.record_every);
            if let Some(c) = &target.constraint {
                cfg = cfg.with_constraint(c.clone());
            }
            let init = replica_init(spec, target, r);
            let trace = run_chain(spec.sampler.kind, target.model.as_ref(), &cfg, &init).map_err(|e| e.to_string());
            ReplicaRun { eta_index: e, eta: etas[e], replica: r, trace }
        })
        .collect()
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ReplicaSummary {
    pub eta_index: usize,
    pub eta: f64,
    pub replica: usize,
    pub status: String,
    pub error: Option<String>,
    pub accepted_fraction: Option<f64>,
    pub mean_accept: Option<f64>,
    pub best_potential: Option<f64>,
    pub argmin_index: Option<usize>,
    pub gradient_evals: u64,
    pub function_evals: u64,
    pub angle: Option<f64>,
    pub risk_gap: Option<f64>,
    pub hitting_iteration: Option<usize>,
    pub trace_csv: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticResult {
    pub name: String,
    pub eta_index: Option<usize>,
    pub values: BTreeMap<String, f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub name: String,
    pub version: String,
    pub spec: String,
    pub seed: u64,
    pub etas: Vec<f64>,
    pub replicas: Vec<ReplicaSummary>,
    pub diagnostics: Vec<DiagnosticResult>,
    pub gradient_evals: u64,
    pub function_evals: u64,
    pub wall_time_secs: f64,
    pub out_dir: String,
    pub files: Vec<String>,
}

fn diag(name: &str, eta_index: Option<usize>, r: Result<BTreeMap<String, f64>>) -> DiagnosticResult {
    match r {
        Ok(values) => DiagnosticResult { name: name.into(), eta_index, values, error: None },
        Err(e) => {
            DiagnosticResult { name: name.into(), eta_index, values: BTreeMap::new(), error: Some(e.to_string()) }
        }
    }
}

fn tv_values(
    target: &BuiltTarget,
    traces: &[&ChainTrace],
    lower: &[f64],
    upper: &[f64],
    bins: &[usize],
    burn_in: usize,
    seed: u64,
) -> Result<BTreeMap<String, f64>> {
    let truth = grid_truth(target.model.as_ref(), lower, upper, bins, target.constraint.as_ref())?;
    let states = traces.iter().flat_map(|t| t.records.iter().filter(|r| r.index >= burn_in).map(|r| &r.state));
    let h = histogram(states, lower, upper, bins)?;
    let tv = tv_distance(&h.distribution, &truth)?;
    let floor = binning_floor(&truth, h.in_bounds, seed)?;
    Ok(BTreeMap::from([
        ("tv".to_string(), tv),
        ("binning_floor".to_string(), floor),
        ("in_bounds".to_string(), h.in_bounds as f64),
        ("out_of_bounds".to_string(), h.out_of_bounds as f64),
    ]))
}

/// Samples, traces and diagnostics of one experiment, without touching the filesystem.
pub struct Execution {
    pub etas: Vec<f64>,
    pub runs: Vec<ReplicaRun>,
    pub replicas: Vec<ReplicaSummary>,
    pub diagnostics: Vec<DiagnosticResult>,
}

pub fn execute(spec: &ExperimentSpec) -> Result<Execution> {
    let target = build_target(spec)?;
    let etas = resolve_etas(spec, &target)?;
    log::info!("{}: {} step size(s), {} replica(s) each", spec.name, etas.len(), spec.replicas);
    let runs = run_replicas(spec, &target, &etas);
    if runs.iter().all(|r| r.trace.is_err()) {
        let first = runs.first().and_then(|r| r.trace.as_ref().err()).cloned().unwrap_or_default();
        return Err(Error::EstimationFailed(format!("every replica failed; first error: {first}")));
    }

    let mut replicas: Vec<ReplicaSummary> = runs
        .iter()
        .map(|run| {
            let mut s =
                ReplicaSummary { eta_index: run.eta_index, eta: run.eta, replica: run.replica, ..Default::default() };
            match &run.trace {
                Ok(t) => {
                    s.status = "ok".into();
                    s.best_potential = Some(t.best_potential);
                    s.argmin_index = Some(t.argmin_index);
                    s.gradient_evals = t.gradient_evals;
                    s.function_evals = t.function_evals;
                    if let Ok(a) = acceptance_stats(t) {
                        s.accepted_fraction = Some(a.accepted_fraction);
                        s.mean_accept = Some(a.mean);
                    }
                }
                Err(e) => {
                    s.status = "failed".into();
                    s.error = Some(e.clone());
                }
            }
            s
        })
        .collect();

    let mut diagnostics = Vec::new();
    for d in &spec.diagnostics {
        match d {
            DiagnosticSpec::AcceptanceStats => {
                for (e, _) in etas.iter().enumerate() {
                    let r = (|| {
                        let mut values = BTreeMap::new();
                        for run in runs.iter().filter(|r| r.eta_index == e) {
                            if let Ok(t) = &run.trace {
                                let a = acceptance_stats(t)?;
                                let p = format!("replica{}.", run.replica);
                                values.insert(format!("{p}mean"), a.mean);
                                values.insert(format!("{p}q05"), a.q05);
                                values.insert(format!("{p}q50"), a.q50);
                                values.insert(format!("{p}q95"), a.q95);
                                values.insert(format!("{p}accepted_fraction"), a.accepted_fraction);
                            }
                        }
                        Ok(values)
                    })();
                    diagnostics.push(diag(d.name(), Some(e), r));
                }
            }
            DiagnosticSpec::TvVsTruth { lower, upper, bins, burn_in } => {
                for (e, _) in etas.iter().enumerate() {
                    let traces: Vec<&ChainTrace> =
                        runs.iter().filter(|r| r.eta_index == e).filter_map(|r| r.trace.as_ref().ok()).collect();
                    let r = tv_values(&target, &traces, lower, upper, bins, *burn_in, spec.seed);
                    diagnostics.push(diag(d.name(), Some(e), r));
                }
            }
            DiagnosticSpec::EnergyScaling { etas: scan, samples } => {
                let t = target.model.as_ref();
                let r = PhaseDistribution::stationary(t)
                    .or_else(|_| Ok::<_, Error>(PhaseDistribution::isotropic(replica_init(spec, &target, 0), 1.0)))
                    .and_then(|ph| energy_error_scaling(t, &ph, scan, *samples, spec.seed))
                    .map(|fit| {
                        BTreeMap::from([
                            ("slope".to_string(), fit.slope),
                            ("intercept".to_string(), fit.intercept),
                            ("r_squared".to_string(), fit.r_squared),
                        ])
                    });
                diagnostics.push(diag(d.name(), None, r));
            }
            DiagnosticSpec::Regularity { points, dirs } => {
                let r = regularity_report(
                    target.model.as_ref(),
                    target.dataset.as_ref(),
                    &ProbeOptions::new(*points, *dirs, spec.seed),
                )
                .map(|rep| {
                    let mut v = BTreeMap::from([
                        ("c3_estimate".to_string(), rep.c3_estimate.value),
                        ("c4_estimate".to_string(), rep.c4_estimate.value),
                        ("gradient_bound_estimate".to_string(), rep.gradient_bound_estimate),
                    ]);
                    for (k, x) in
                        [("incoherence", rep.incoherence), ("c3_bound", rep.c3_bound), ("c4_bound", rep.c4_bound)]
                    {
                        if let Some(x) = x {
                            v.insert(k.to_string(), x);
                        }
                    }
                    v
                });
                diagnostics.push(diag(d.name(), None, r));
            }
            DiagnosticSpec::Minimizer { draws } => {
                let r = (|| {
                    let theta =
                        target.theta_star.as_ref().ok_or_else(|| invalid("minimizer diagnostic needs a known θ*"))?;
                    let q0 = target.q0.unwrap_or(1.0);
                    let fresh =
                        sample_sphere_dataset(theta.len(), *draws, theta, q0, spec.seed.wrapping_add(RISK_STREAM))?;
                    let base = empirical_zero_one(&fresh, theta);
                    let mut angles = Vec::new();
                    for (s, run) in replicas.iter_mut().zip(&runs) {
                        if let Ok(t) = &run.trace {
                            let x = scaled(&t.best_state, target.scale);
                            s.angle = Some(angle(&x, theta));
                            s.risk_gap = Some(empirical_zero_one(&fresh, &x) - base);
                            angles.push(s.angle.unwrap());
                        }
                    }
                    let n = angles.len() as f64;
                    Ok(BTreeMap::from([
                        ("risk_theta_star".to_string(), base),
                        ("mean_angle".to_string(), angles.iter().sum::<f64>() / n),
                        ("draws".to_string(), *draws as f64),
                    ]))
                })();
                diagnostics.push(diag(d.name(), None, r));
            }
            DiagnosticSpec::HittingTime { angle: max_angle, center, radius } => {
                let r = (|| {
                    let set = match (max_angle, center, radius) {
                        (Some(a), _, _) => {
                            let theta = target
                                .theta_star
                                .as_ref()
                                .ok_or_else(|| invalid("angle-based hitting needs a known θ*"))?;
                            ConstraintSet::cone(theta, *a)?
                        }
                        (None, Some(c), Some(r)) => ConstraintSet::ball(c.clone(), *r)?,
                        _ => return Err(invalid("hitting_time needs angle or center and radius")),
                    };
                    let mut hits = 0usize;
                    for (s, run) in replicas.iter_mut().zip(&runs) {
                        if let Ok(t) = &run.trace {
                            s.hitting_iteration = hitting_time(t, &set);
                            hits += usize::from(s.hitting_iteration.is_some());
                        }
                    }
                    Ok(BTreeMap::from([("replicas_hit".to_string(), hits as f64)]))
                })();
                diagnostics.push(diag(d.name(), None, r));
            }
        }
    }
    Ok(Execution { etas, runs, replicas, diagnostics })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn optf(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

/// Per-replica summary table; contains no timing so repeated runs match byte for byte.
pub fn write_summary_csv<W: Write>(replicas: &[ReplicaSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "eta_index",
        "eta",
        "replica",
        "status",
        "accepted_fraction",
        "mean_accept",
        "best_potential",
        "argmin_index",
        "gradient_evals",
        "function_evals",
        "angle",
        "risk_gap",
        "hitting_iteration",
    ])?;
    for s in replicas {
        w.write_record([
            s.eta_index.to_string(),
            format!("{:?}", s.eta),
            s.replica.to_string(),
            s.status.clone(),
            optf(s.accepted_fraction),
            optf(s.mean_accept),
            optf(s.best_potential),
            opt(s.argmin_index),
            s.gradient_evals.to_string(),
            s.function_evals.to_string(),
            optf(s.angle),
            optf(s.risk_gap),
            opt(s.hitting_iteration),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_diagnostics_csv<W: Write>(diags: &[DiagnosticResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["diagnostic", "eta_index", "key", "value"])?;
    for d in diags {
        if let Some(e) = &d.error {
            w.write_record([d.name.clone(), opt(d.eta_index), "error".into(), e.clone()])?;
        }
        for (k, v) in &d.values {
            w.write_record([d.name.clone(), opt(d.eta_index), k.clone(), format!("{v:?}")])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Output directory: explicit argument, then the spec, then `$MALA_OUT_DIR/<name>`, then `mala-out/<name>`.
pub fn resolve_out_dir(spec: &ExperimentSpec, explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    if let Some(p) = &spec.output {
        return p.clone();
    }
    let root = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("mala-out"));
    root.join(&spec.name)
}

/// Runs the experiment and writes `summary.csv`, `diagnostics.csv`,
/// `report.json` and one trace CSV/JSON pair per successful replica.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: Option<&Path>) -> Result<RunReport> {
    let start = Instant::now();
    let dir = resolve_out_dir(spec, out_dir);
    std::fs::create_dir_all(dir.join("traces"))?;
    let mut exec = execute(spec)?;
    let wall = start.elapsed().as_secs_f64();

    let mut files = Vec::new();
    for (s, run) in exec.replicas.iter_mut().zip(&exec.runs) {
        if let Ok(t) = &run.trace {
            let path = dir.join("traces").join(format!("trace_e{}_r{}.csv", run.eta_index, run.replica));
            write_trace(t, &path, None)?;
            s.trace_csv = Some(path.display().to_string());
            files.push(path.display().to_string());
            files.push(path.with_extension("json").display().to_string());
        }
    }
    let summary = dir.join("summary.csv");
    write_summary_csv(&exec.replicas, std::fs::File::create(&summary)?)?;
    let diagnostics = dir.join("diagnostics.csv");
    write_diagnostics_csv(&exec.diagnostics, std::fs::File::create(&diagnostics)?)?;
    let report_path = dir.join("report.json");
    files.extend([summary, diagnostics, report_path.clone()].iter().map(|p| p.display().to_string()));

    let report = RunReport {
        name: spec.name.clone(),
        version: format!("mala-core {}", env!("CARGO_PKG_VERSION")),
        spec: serialize_spec(spec),
        seed: spec.seed,
        etas: exec.etas.clone(),
        gradient_evals: exec.replicas.iter().map(|r| r.gradient_evals).sum(),
        function_evals: exec.replicas.iter().map(|r| r.function_evals).sum(),
        replicas: exec.replicas,
        diagnostics: exec.diagnostics,
        wall_time_secs: wall,
        out_dir: dir.display().to_string(),
        files,
    };
    std::fs::write(&report_path, serde_json::to_string_pretty(&report)?)?;
    log::info!("{}: wrote {}", spec.name, dir.display());
    Ok(report)
}
