use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::integrator::{leapfrog_step, PhaseState};
use crate::rng;
use crate::targets::Target;

/// Least-squares line through `(log η, log value)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub log_etas: Vec<f64>,
    pub log_values: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl ScalingFit {
    pub fn predict(&self, log_eta: f64) -> f64 {
        self.intercept + self.slope * log_eta
    }
}

/// Ordinary least squares of `ys` on `xs`.
pub fn ols_fit(xs: &[f64], ys: &[f64]) -> Result<ScalingFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::FitFailed("need at least two paired points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::FitFailed("regressor values are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(ScalingFit { log_etas: xs.to_vec(), log_values: ys.to_vec(), slope, intercept, r_squared })
}

/// Product distribution for `(x, v)`: `x = center + scale ∘ N(0, I)`, `v ~ N(0, I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDistribution {
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
}

impl PhaseDistribution {
    pub fn isotropic(center: Vec<f64>, sd: f64) -> Self {
        let scale = vec![sd; center.len()];
        Self { center, scale }
    }

    /// The exact stationary position law of a quadratic target.
    pub fn stationary(target: &dyn Target) -> Result<Self> {
        let lam = target
            .quadratic_precision()
            .ok_or_else(|| Error::UnsupportedTarget(format!("{} is not quadratic", target.label())))?;
        if lam.iter().any(|l| !(*l > 0.0)) {
            return Err(invalid("stationary phase law needs positive precisions"));
        }
        Ok(Self { center: vec![0.0; lam.len()], scale: lam.iter().map(|l| 1.0 / l.sqrt()).collect() })
    }
}

/// Mean `|ΔH|` of one leapfrog step per `η`, over common phase-space draws,
/// fitted in log-log.
pub fn energy_error_scaling(
    target: &dyn Target,
    phase: &PhaseDistribution,
    etas: &[f64],
    samples_per_eta: usize,
    seed: u64,
) -> Result<ScalingFit> {
    let d = target.dim();
    if phase.center.len() != d || phase.scale.len() != d {
        return Err(invalid("phase distribution dimension does not match the target"));
    }
    if etas.len() < 3 || etas.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
        return Err(invalid("need at least three positive step sizes"));
    }
    let (lo, hi) = etas.iter().fold((f64::INFINITY, 0.0f64), |(a, b), e| (a.min(*e), b.max(*e)));
    if hi / lo < 10.0 * (1.0 - 1e-12) {
        return Err(invalid("step sizes must span at least one decade"));
    }
    if let Some(m) = target.known_constants().map(|k| k.m) {
        if hi * hi * m >= 2.0 {
            return Err(invalid(format!("η = {hi} violates η²M < 2 for M = {m}")));
        }
    }
    if samples_per_eta == 0 {
        return Err(invalid("samples_per_eta must be positive"));
    }
    let mut rng = rng::stream(seed, 0);
    let draws: Vec<PhaseState> = (0..samples_per_eta)
        .map(|_| {
            let z = rng::standard_normal_vec(&mut rng, d);
            let position = (0..d).map(|j| phase.center[j] + phase.scale[j] * z[j]).collect();
            PhaseState { position, velocity: rng::standard_normal_vec(&mut rng, d) }
        })
        .collect();

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &eta in etas {
        let errors: Vec<f64> = draws
            .par_iter()
            .map(|s| leapfrog_step(target, s, eta).map(|r| r.energy_error.abs()).unwrap_or(f64::NAN))
            .collect();
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        if !mean.is_finite() || mean <= 0.0 {
            log::warn!("dropping η = {eta}: mean |ΔH| = {mean}");
            continue;
        }
        xs.push(eta.ln());
        ys.push(mean.ln());
    }
    if xs.len() < 3 {
        return Err(Error::FitFailed(format!("only {} step sizes produced finite errors", xs.len())));
    }
    ols_fit(&xs, &ys)
}
