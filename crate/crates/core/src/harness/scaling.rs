use std::io::Write;

use serde::Serialize;

use super::run::{build_target, execute, replica_init};
use super::spec::{DataSource, ExperimentSpec, ScheduleSpec, TargetSpec};
use crate::diagnostics::{mixing_time_estimate, ols_fit, InitDistribution, MixingSetup, ScalingFit};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Axis {
    Eta,
    Dimension,
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eta" => Ok(Axis::Eta),
            "dimension" | "d" => Ok(Axis::Dimension),
            other => Err(Error::Validation(vec![format!("axis: unknown axis '{other}' (expected eta, dimension)")])),
        }
    }
}

/// Replica-based mixing settings; the grid spans `[lower, upper]` with `bins` cells per axis.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingOptions {
    pub tv_threshold: f64,
    pub replicas: usize,
    pub check_every: usize,
    pub max_iterations: usize,
    pub lower: f64,
    pub upper: f64,
    pub bins: usize,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        Self {
            tv_threshold: 0.05,
            replicas: 2000,
            check_every: 2,
            max_iterations: 5000,
            lower: -6.0,
            upper: 6.0,
            bins: 40,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingRow {
    pub value: f64,
    pub mixing: Option<usize>,
    pub acceptance_mean: Option<f64>,
    pub gradient_evals: Option<u64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingTable {
    pub axis: Axis,
    pub seed: u64,
    pub rows: Vec<ScalingRow>,
    /// OLS of log mixing time on log axis value over rows with a mixing estimate.
    pub fit: Option<ScalingFit>,
}

impl ScalingTable {
    pub fn slope(&self) -> Option<f64> {
        self.fit.as_ref().map(|f| f.slope)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["value", "mixing", "acceptance_mean", "gradient_evals", "error"])?;
        for r in &self.rows {
            w.write_record([
                format!("{:?}", r.value),
                r.mixing.map(|m| m.to_string()).unwrap_or_default(),
                r.acceptance_mean.map(|a| format!("{a:?}")).unwrap_or_default(),
                r.gradient_evals.map(|g| g.to_string()).unwrap_or_default(),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn with_value(template: &ExperimentSpec, axis: Axis, value: f64) -> Result<ExperimentSpec> {
    let mut spec = template.clone();
    match axis {
        Axis::Eta => spec.schedule = ScheduleSpec::Fixed { eta: value },
        Axis::Dimension => {
            if value < 1.0 || value.fract() != 0.0 {
                return Err(Error::Validation(vec![format!("values: dimension {value} is not a positive integer")]));
            }
            let d = value as usize;
            spec.sampler.init = spec.sampler.init.as_ref().map(|i| vec![i.first().copied().unwrap_or(0.0); d]);
            match &mut spec.target {
                TargetSpec::Gaussian { d: dd, precision } => {
                    let lam = precision.first().copied().unwrap_or(1.0);
                    *dd = d;
                    *precision = vec![lam; d];
                }
                TargetSpec::ZeroOne { d: dd, .. } => *dd = d,
                TargetSpec::Logistic { data: DataSource::Generate { d: dd, .. }, .. }
                | TargetSpec::Sigmoid { data: DataSource::Generate { d: dd, .. }, .. } => *dd = d,
                _ => return Err(Error::Validation(vec!["target: dimension axis needs a generated target".into()])),
            }
        }
    }
    Ok(spec)
}

fn run_cell(spec: &ExperimentSpec, opts: &ScalingOptions) -> Result<ScalingRow> {
    let exec = execute(spec)?;
    let accepts: Vec<f64> = exec.replicas.iter().filter_map(|r| r.mean_accept).collect();
    let acceptance_mean = (!accepts.is_empty()).then(|| accepts.iter().sum::<f64>() / accepts.len() as f64);
    let gradient_evals = Some(exec.replicas.iter().map(|r| r.gradient_evals).sum());
    let target = build_target(spec)?;
    let d = target.model.dim();
    let mixing = if d <= 2 {
        let est = mixing_time_estimate(&MixingSetup {
            target: target.model.as_ref(),
            kind: spec.sampler.kind,
            eta: exec.etas[0],
            init: InitDistribution::Point(replica_init(spec, &target, 0)),
            tv_threshold: opts.tv_threshold,
            replicas: opts.replicas,
            check_every: opts.check_every,
            max_iterations: opts.max_iterations,
            seed: spec.seed,
            lower: vec![opts.lower; d],
            upper: vec![opts.upper; d],
            bins: vec![opts.bins; d],
            constraint: target.constraint.clone(),
            lazy: spec.sampler.lazy,
        })?;
        est.iteration
    } else {
        None
    };
    Ok(ScalingRow { value: 0.0, mixing, acceptance_mean, gradient_evals, error: None })
}

/// One run per axis value with the template's master seed. Failed cells are
/// kept as rows with an error; the slope uses the surviving mixing estimates.
pub fn scaling_study(
    template: &ExperimentSpec,
    axis: Axis,
    values: &[f64],
    opts: &ScalingOptions,
) -> Result<ScalingTable> {
    if values.len() < 3 {
        return Err(Error::Validation(vec![format!("values: need at least 3 axis values, got {}", values.len())]));
    }
    if let Some(bad) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::Validation(vec![format!("values: every value must be positive, got {bad}")]));
    }
    let mut rows = Vec::with_capacity(values.len());
    for &v in values {
        let spec = with_value(template, axis, v)?;
        log::info!("scaling {axis:?} = {v}");
        let row = run_cell(&spec, opts).map(|r| ScalingRow { value: v, ..r }).unwrap_or_else(|e| ScalingRow {
            value: v,
            mixing: None,
            acceptance_mean: None,
            gradient_evals: None,
            error: Some(e.to_string()),
        });
        rows.push(row);
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        rows.iter().filter_map(|r| r.mixing.filter(|m| *m > 0).map(|m| (r.value.ln(), (m as f64).ln()))).unzip();
    let fit = if xs.len() >= 2 { ols_fit(&xs, &ys).ok() } else { None };
    Ok(ScalingTable { axis, seed: template.seed, rows, fit })
}
