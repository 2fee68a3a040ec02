use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{incoherence, theorem3_bounds};
use crate::error::{invalid, Error, Result};
use crate::rng;
use crate::targets::{Dataset, Target};
use crate::vector::{axpy, dist, identity_columns, norm, projection_norms, scaled};

const MIN_DENOMINATOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DerivativeMode {
    /// Exact directional derivatives when the target provides them.
    Auto,
    FiniteDifference,
}

/// Probe points `x = center + spread · N(0, I)`; `dirs` direction draws per point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeOptions {
    pub points: usize,
    pub dirs: usize,
    pub seed: u64,
    pub center: Option<Vec<f64>>,
    pub spread: f64,
    pub mode: DerivativeMode,
}

impl ProbeOptions {
    pub fn new(points: usize, dirs: usize, seed: u64) -> Self {
        Self { points, dirs, seed, center: None, spread: 1.0, mode: DerivativeMode::Auto }
    }

    pub fn mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        self
    }

    fn validate(&self, d: usize) -> Result<()> {
        if self.points == 0 || self.dirs == 0 {
            return Err(invalid("probe counts must be at least 1"));
        }
        if self.center.as_ref().is_some_and(|c| c.len() != d) {
            return Err(invalid("probe center dimension does not match the target"));
        }
        if !(self.spread >= 0.0) {
            return Err(invalid("probe spread must be nonnegative"));
        }
        Ok(())
    }
}

/// A probe-based lower bound on a regularity constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeEstimate {
    pub value: f64,
    pub probes: usize,
    pub skipped: usize,
    pub exact_derivatives: bool,
}

fn directions(target: &dyn Target) -> Vec<Vec<f64>> {
    target.bad_directions().map(<[_]>::to_vec).unwrap_or_else(|| identity_columns(target.dim()))
}

/// Runs `probe(point_rng, x)` for each probe point and keeps the running maximum.
fn probe_max<F>(target: &dyn Target, opts: &ProbeOptions, probe: F) -> Result<ProbeEstimate>
where
    F: Fn(&mut rng::ChainRng, &[f64]) -> (f64, usize) + Sync,
{
    let d = target.dim();
    opts.validate(d)?;
    let center = opts.center.clone().unwrap_or_else(|| vec![0.0; d]);
    let per_point: Vec<(f64, usize)> = (0..opts.points)
        .into_par_iter()
        .map(|p| {
            let mut rng = rng::stream(opts.seed, p as u64);
            let z = rng::standard_normal_vec(&mut rng, d);
            let x = axpy(&center, opts.spread, &z);
            probe(&mut rng, &x)
        })
        .collect();
    let value = per_point.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let skipped = per_point.iter().map(|r| r.1).sum();
    if skipped == opts.points * opts.dirs {
        return Err(Error::EstimationFailed("every probe had a degenerate denominator".into()));
    }
    Ok(ProbeEstimate { value, probes: opts.points * opts.dirs, skipped, exact_derivatives: false })
}

fn third_fd(target: &dyn Target, x: &[f64], u: &[f64], v: &[f64], w: &[f64]) -> f64 {
    let h = 1e-3 * (1.0 + norm(x));
    let at = |su: f64, sv: f64| {
        let p: Vec<f64> = (0..x.len()).map(|j| x[j] + su * h * u[j] + sv * h * v[j]).collect();
        crate::vector::dot(&target.gradient(&p), w)
    };
    (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h * h)
}

fn fourth_fd(target: &dyn Target, x: &[f64], u: &[f64]) -> f64 {
    let h = 3e-3 * (1.0 + norm(x));
    let at = |s: f64| target.potential(&axpy(x, s * h, u));
    (at(2.0) - 4.0 * at(1.0) + 6.0 * at(0.0) - 4.0 * at(-1.0) + at(-2.0)) / h.powi(4)
}

/// Largest observed `|∇³U(x)[u,v,w]| / (‖Xᵀu‖∞ ‖Xᵀv‖∞ ‖w‖₂)`: a lower bound on `C3`.
pub fn estimate_c3(target: &dyn Target, opts: &ProbeOptions) -> Result<ProbeEstimate> {
    let cols = directions(target);
    let d = target.dim();
    let exact = opts.mode == DerivativeMode::Auto && {
        let z = vec![0.0; d];
        target.third_directional(&z, &z, &z, &z).is_some()
    };
    let mut est = probe_max(target, opts, |rng, x| {
        let mut best = f64::NEG_INFINITY;
        let mut skipped = 0;
        for _ in 0..opts.dirs {
            let u = rng::standard_normal_vec(rng, d);
            let v = rng::standard_normal_vec(rng, d);
            let w = rng::standard_normal_vec(rng, d);
            let (pu, pv, pw) = (projection_norms(&cols, &u).0, projection_norms(&cols, &v).0, norm(&w));
            if pu * pv * pw < MIN_DENOMINATOR {
                skipped += 1;
                continue;
            }
            // the ratio is invariant under rescaling each direction; unit
            // projections keep the difference stencil well conditioned
            let (u, v, w) = (scaled(&u, 1.0 / pu), scaled(&v, 1.0 / pv), scaled(&w, 1.0 / pw));
            let num = match (exact, target.third_directional(x, &u, &v, &w)) {
                (true, Some(t)) => t,
                _ => third_fd(target, x, &u, &v, &w),
            };
            best = best.max(num.abs());
        }
        (best, skipped)
    })?;
    est.exact_derivatives = exact;
    Ok(est)
}

/// Largest observed `|∇⁴U(x)[u,u,u,u]| / ‖Xᵀu‖∞⁴`: a lower bound on `C4`.
pub fn estimate_c4(target: &dyn Target, opts: &ProbeOptions) -> Result<ProbeEstimate> {
    let cols = directions(target);
    let d = target.dim();
    let exact = opts.mode == DerivativeMode::Auto && target.fourth_directional(&vec![0.0; d], &vec![0.0; d]).is_some();
    let mut est = probe_max(target, opts, |rng, x| {
        let mut best = f64::NEG_INFINITY;
        let mut skipped = 0;
        for _ in 0..opts.dirs {
            let u = rng::standard_normal_vec(rng, d);
            let pu = projection_norms(&cols, &u).0;
            if pu.powi(4) < MIN_DENOMINATOR {
                skipped += 1;
                continue;
            }
            let u = scaled(&u, 1.0 / pu);
            let num = match (exact, target.fourth_directional(x, &u)) {
                (true, Some(t)) => t,
                _ => fourth_fd(target, x, &u),
            };
            best = best.max(num.abs());
        }
        (best, skipped)
    })?;
    est.exact_derivatives = exact;
    Ok(est)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientBoundEstimate {
    /// `max ‖∇U(x)‖₂` over the samples.
    pub max_gradient_norm: f64,
    /// `max ‖∇U(x) − ∇U(y)‖ / ‖x − y‖` over distinct sample pairs.
    pub lipschitz: Option<f64>,
}

pub fn estimate_gradient_bound(target: &dyn Target, samples: &[Vec<f64>]) -> Result<GradientBoundEstimate> {
    if samples.is_empty() {
        return Err(invalid("need at least one sample"));
    }
    if samples.iter().any(|s| s.len() != target.dim()) {
        return Err(invalid("sample dimension does not match the target"));
    }
    let grads: Vec<Vec<f64>> = samples.par_iter().map(|x| target.gradient(x)).collect();
    let max_gradient_norm = grads.iter().map(|g| norm(g)).fold(0.0, f64::max);
    let mut lipschitz: Option<f64> = None;
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let dx = dist(&samples[i], &samples[j]);
            if dx > 0.0 {
                let ratio = dist(&grads[i], &grads[j]) / dx;
                lipschitz = Some(lipschitz.map_or(ratio, |l| l.max(ratio)));
            }
        }
    }
    Ok(GradientBoundEstimate { max_gradient_norm, lipschitz })
}

/// Closed-form bounds (when built from a dataset) next to probe estimates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegularityReport {
    pub target: String,
    pub incoherence: Option<f64>,
    pub c3_bound: Option<f64>,
    pub c4_bound: Option<f64>,
    pub c3_estimate: ProbeEstimate,
    pub c4_estimate: ProbeEstimate,
    pub gradient_bound_estimate: f64,
    pub lipschitz_estimate: Option<f64>,
    pub tail_rate_estimate: Option<f64>,
    pub probe_count: usize,
    pub seed: u64,
}

impl RegularityReport {
    /// Estimates within `(1 + tol)` of the closed-form bounds, when bounds exist.
    pub fn consistent(&self, tol: f64) -> bool {
        self.c3_bound.is_none_or(|b| self.c3_estimate.value <= b * (1.0 + tol))
            && self.c4_bound.is_none_or(|b| self.c4_estimate.value <= b * (1.0 + tol))
    }

    /// Rows of `(quantity, bound, estimate, pass)`.
    pub fn table(&self, tol: f64) -> String {
        let fmt = |b: Option<f64>| b.map_or("-".to_string(), |v| format!("{v:.6}"));
        let pass = |b: Option<f64>, e: f64| b.is_none_or(|b| e <= b * (1.0 + tol));
        let mut s = format!("{:<12} {:>14} {:>14} {:>6}\n", "quantity", "bound", "estimate", "pass");
        for (name, b, e) in
            [("C3", self.c3_bound, self.c3_estimate.value), ("C4", self.c4_bound, self.c4_estimate.value)]
        {
            s += &format!("{:<12} {:>14} {:>14.6} {:>6}\n", name, fmt(b), e, pass(b, e));
        }
        s += &format!("{:<12} {:>14} {:>14} {:>6}\n", "incoherence", fmt(self.incoherence), "-", "-");
        s += &format!("{:<12} {:>14} {:>14.6} {:>6}\n", "M (grad)", "-", self.gradient_bound_estimate, "-");
        s
    }
}

pub fn regularity_report(target: &dyn Target, data: Option<&Dataset>, opts: &ProbeOptions) -> Result<RegularityReport> {
    let (phi, c3_bound, c4_bound) = match data.filter(|d| !d.is_empty()) {
        Some(d) => {
            let phi = incoherence(d.features());
            let (c3, c4) = theorem3_bounds(d.len(), phi)?;
            (Some(phi), Some(c3), Some(c4))
        }
        None => (None, None, None),
    };
    let c3_estimate = estimate_c3(target, opts)?;
    let c4_estimate = estimate_c4(target, opts)?;
    let center = opts.center.clone().unwrap_or_else(|| vec![0.0; target.dim()]);
    let samples: Vec<Vec<f64>> = (0..opts.points)
        .map(|p| {
            let mut rng = rng::stream(opts.seed, p as u64);
            axpy(&center, opts.spread, &rng::standard_normal_vec(&mut rng, target.dim()))
        })
        .collect();
    let grad = estimate_gradient_bound(target, &samples)?;
    Ok(RegularityReport {
        target: target.label(),
        incoherence: phi,
        c3_bound,
        c4_bound,
        c3_estimate,
        c4_estimate,
        gradient_bound_estimate: grad.max_gradient_norm,
        lipschitz_estimate: grad.lipschitz,
        tail_rate_estimate: None,
        probe_count: opts.points * opts.dirs,
        seed: opts.seed,
    })
}
