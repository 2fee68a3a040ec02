use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::integrator::{leapfrog_step, PhaseState};
use crate::rng;
use crate::targets::{ConstraintSet, Target};
use crate::vector::{dist, identity_columns, norm, projection_norms};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub s: f64,
    pub empirical: f64,
    pub bound: f64,
    pub std_error: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailDecayReport {
    pub rows: Vec<TailRow>,
    pub holds: bool,
    pub samples: usize,
}

fn sorted_distances(samples: &[Vec<f64>], x_star: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(invalid("need at least one sample"));
    }
    if samples.iter().any(|s| s.len() != x_star.len()) {
        return Err(invalid("sample dimension does not match x*"));
    }
    let mut dists: Vec<f64> = samples.iter().map(|s| dist(s, x_star)).collect();
    dists.sort_by(f64::total_cmp);
    Ok(dists)
}

fn decile(sorted: &[f64], k: usize) -> f64 {
    let h = (sorted.len() - 1) as f64 * k as f64 / 10.0;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn survival(sorted: &[f64], s: f64) -> f64 {
    let at_most = sorted.partition_point(|v| *v <= s);
    (sorted.len() - at_most) as f64 / sorted.len() as f64
}

/// Empirical `P(‖X − x*‖ > s)` against `e^{-a s/√d}` at the deciles of the observed distances.
pub fn tail_decay_check(samples: &[Vec<f64>], x_star: &[f64], a: f64, d: usize) -> Result<TailDecayReport> {
    if !(a > 0.0) {
        return Err(invalid("tail rate must be positive"));
    }
    if d == 0 {
        return Err(invalid("dimension must be positive"));
    }
    let dists = sorted_distances(samples, x_star)?;
    let n = dists.len() as f64;
    let rows: Vec<TailRow> = (1..=9)
        .map(|k| {
            let s = decile(&dists, k);
            let empirical = survival(&dists, s);
            let bound = (-a * s / (d as f64).sqrt()).exp();
            let std_error = (empirical * (1.0 - empirical) / n).sqrt();
            TailRow { s, empirical, bound, std_error, holds: empirical <= bound * (1.0 + 3.0 * std_error) }
        })
        .collect();
    let holds = rows.iter().all(|r| r.holds);
    Ok(TailDecayReport { rows, holds, samples: dists.len() })
}

/// Largest `a` for which the exponential tail bound holds at every decile with positive survival.
pub fn estimate_tail_rate(samples: &[Vec<f64>], x_star: &[f64], d: usize) -> Result<Option<f64>> {
    let dists = sorted_distances(samples, x_star)?;
    let sd = (d as f64).sqrt();
    let rate = (1..=9)
        .filter_map(|k| {
            let s = decile(&dists, k);
            let p = survival(&dists, s);
            (s > 0.0 && p > 0.0).then(|| -sd * p.ln() / s)
        })
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))));
    Ok(rate)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodSetParams {
    pub alpha: f64,
    pub radius: f64,
    pub grad_bound: f64,
    pub horizon: f64,
    pub substeps: usize,
    pub center: Vec<f64>,
}

impl GoodSetParams {
    /// Horizon defaults to one step size.
    pub fn new(alpha: f64, radius: f64, grad_bound: f64, eta: f64, center: Vec<f64>) -> Self {
        Self { alpha, radius, grad_bound, horizon: eta, substeps: 30, center }
    }

    fn validate(&self, d: usize) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.alpha > std::f64::consts::SQRT_2) {
            errs.push(format!("alpha must exceed √2, got {}", self.alpha));
        }
        if !(self.radius > 0.0) {
            errs.push("radius must be positive".to_string());
        }
        if !(self.grad_bound > 0.0) {
            errs.push("grad_bound must be positive".to_string());
        }
        if !(self.horizon >= 0.0) {
            errs.push("horizon must be nonnegative".to_string());
        }
        if self.substeps == 0 {
            errs.push("substeps must be positive".to_string());
        }
        if self.center.len() != d {
            errs.push("center dimension does not match the target".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(invalid(errs.join("; ")))
        }
    }

    pub fn position_radius(&self) -> f64 {
        3.0 / std::f64::consts::SQRT_2 * self.radius / self.grad_bound.sqrt()
    }
}

/// Follows the Hamiltonian trajectory from `state` over `[0, horizon]` with
/// `substeps` leapfrog micro-steps and checks `‖Xᵀp_t‖∞ ≤ α`,
/// `‖q_t − x*‖ ≤ (3/√2) R/√M` at every micro-step, and `‖v‖ ≤ R`.
pub fn good_set_check(target: &dyn Target, state: &PhaseState, params: &GoodSetParams) -> Result<bool> {
    params.validate(target.dim())?;
    if state.dim() != target.dim() {
        return Err(invalid("state dimension does not match the target"));
    }
    if norm(&state.velocity) > params.radius {
        return Ok(false);
    }
    let cols = target.bad_directions().map(<[_]>::to_vec).unwrap_or_else(|| identity_columns(target.dim()));
    let q_radius = params.position_radius();
    let inside = |s: &PhaseState| {
        projection_norms(&cols, &s.velocity).0 <= params.alpha && dist(&s.position, &params.center) <= q_radius
    };
    let mut s = state.clone();
    if !inside(&s) {
        return Ok(false);
    }
    let dt = params.horizon / params.substeps as f64;
    if dt == 0.0 {
        return Ok(true);
    }
    for _ in 0..params.substeps {
        s = leapfrog_step(target, &s, dt)?.proposal;
        if !inside(&s) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Lower bound `1 − N r e^{−(α²−1)/8} − e^{−(R²−d)/8} − N e^{−a R/(√d √M)}`
/// with `N = 50⌈(R+1)√M η⌉`, clamped to `[0, 1]`. The last term is dropped when no tail rate is known.
pub fn good_set_probability_bound(params: &GoodSetParams, d: usize, r: usize, eta: f64, tail_rate: Option<f64>) -> f64 {
    let sqrt_m = params.grad_bound.sqrt();
    let n = 50.0 * ((params.radius + 1.0) * sqrt_m * eta).ceil();
    let alpha_sq = params.alpha * params.alpha;
    let mut b = 1.0
        - n * r as f64 * (-(alpha_sq - 1.0) / 8.0).exp()
        - (-(params.radius * params.radius - d as f64) / 8.0).exp();
    if let Some(a) = tail_rate {
        b -= n * (-a * params.radius / ((d as f64).sqrt() * sqrt_m)).exp();
    }
    b.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitEstimate {
    pub probability: f64,
    pub std_error: f64,
    pub n: usize,
}

/// Monte Carlo `P(z + ηv − ½η²∇U(z) ∈ S)` for `v ~ N(0, I)`.
pub fn constraint_exit_estimate(
    target: &dyn Target,
    set: &ConstraintSet,
    eta: f64,
    z: &[f64],
    n: usize,
    seed: u64,
) -> Result<ExitEstimate> {
    if n == 0 {
        return Err(invalid("need at least one draw"));
    }
    if !set.contains(z) {
        return Err(invalid(format!("z is outside {}", set.description())));
    }
    if z.len() != target.dim() {
        return Err(invalid("z dimension does not match the target"));
    }
    let g = target.gradient(z);
    let mean: Vec<f64> = z.iter().zip(&g).map(|(x, gi)| x - 0.5 * eta * eta * gi).collect();
    let mut rng = rng::stream(seed, 0);
    let mut hits = 0usize;
    let mut y = vec![0.0; z.len()];
    for _ in 0..n {
        for (yi, m) in y.iter_mut().zip(&mean) {
            *yi = m + eta * rng.sample::<f64, _>(rand_distr::StandardNormal);
        }
        if set.contains(&y) {
            hits += 1;
        }
    }
    let p = hits as f64 / n as f64;
    Ok(ExitEstimate { probability: p, std_error: (p * (1.0 - p) / n as f64).sqrt(), n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{annulus, Constant, Gaussian};

    #[test]
    fn tail_examples() {
        let at_star = vec![vec![1.0, 2.0]; 50];
        assert!(tail_decay_check(&at_star, &[1.0, 2.0], 3.0, 2).unwrap().holds);
        let mut rng = rng::stream(1, 0);
        let gauss: Vec<Vec<f64>> = (0..20_000).map(|_| rng::standard_normal_vec(&mut rng, 1)).collect();
        assert!(tail_decay_check(&gauss, &[0.0], 0.5, 1).unwrap().holds);
        let cauchy: Vec<Vec<f64>> =
            (0..20_000).map(|_| vec![(std::f64::consts::PI * (rng.random::<f64>() - 0.5)).tan()]).collect();
        let rep = tail_decay_check(&cauchy, &[0.0], 1.0, 1).unwrap();
        assert!(!rep.holds && !rep.rows[8].holds);
    }

    #[test]
    fn good_set_examples() {
        let g = Gaussian::standard(3);
        let p = GoodSetParams::new(2.0, 2.0, 1.0, 0.3, vec![0.0; 3]);
        let rest = PhaseState::new(vec![0.0; 3], vec![0.0; 3]).unwrap();
        assert!(good_set_check(&g, &rest, &p).unwrap());
        let fast = PhaseState::new(vec![0.0; 3], vec![1.5, 1.5, 0.0]).unwrap();
        assert!(!good_set_check(&g, &fast, &p).unwrap());
        let bad = GoodSetParams { alpha: 1.0, ..p };
        assert!(good_set_check(&g, &rest, &bad).is_err());
    }

    #[test]
    fn exit_examples() {
        let flat = Constant::zero(2);
        let all = constraint_exit_estimate(&flat, &ConstraintSet::everywhere(), 0.5, &[0.0, 0.0], 100, 1).unwrap();
        assert_eq!(all.probability, 1.0);
        let ann = annulus(0.5, 1.0).unwrap();
        let tiny = constraint_exit_estimate(&flat, &ann, 1e-6, &[0.75, 0.0], 1000, 1).unwrap();
        assert_eq!(tiny.probability, 1.0);
        let e = constraint_exit_estimate(&flat, &ann, 0.1, &[0.75, 0.0], 20_000, 1).unwrap();
        assert!(e.probability >= 0.9);
        assert!(constraint_exit_estimate(&flat, &ann, 0.1, &[0.0, 0.0], 10, 1).is_err());
    }
}
