use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::rng;
use crate::samplers::{ChainTrace, StepRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AcceptanceStats {
    pub mean: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
    pub accepted_fraction: f64,
    pub proposals: usize,
}

/// Type-7 (linear interpolation) quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Statistics of `exp(log_accept_prob)` over the recorded proposals; the
/// initial record and lazy holds are excluded.
pub fn acceptance_stats(trace: &ChainTrace) -> Result<AcceptanceStats> {
    acceptance_stats_of(&trace.records)
}

/// [`acceptance_stats`] over bare records, e.g. read back from a trace file.
pub fn acceptance_stats_of(records: &[StepRecord]) -> Result<AcceptanceStats> {
    let recs: Vec<_> = records.iter().filter(|r| r.is_proposal()).collect();
    if recs.is_empty() {
        return Err(invalid("trace has no recorded proposals"));
    }
    let mut probs: Vec<f64> = recs.iter().map(|r| r.log_accept_prob.exp().min(1.0)).collect();
    let n = probs.len() as f64;
    let mean = probs.iter().sum::<f64>() / n;
    let accepted = recs.iter().filter(|r| r.accepted).count() as f64;
    probs.sort_by(f64::total_cmp);
    Ok(AcceptanceStats {
        mean,
        q05: quantile(&probs, 0.05),
        q50: quantile(&probs, 0.5),
        q95: quantile(&probs, 0.95),
        accepted_fraction: accepted / n,
        proposals: probs.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HansonWrightReport {
    pub d: usize,
    pub xi: f64,
    pub n: usize,
    pub seed: u64,
    pub empirical: f64,
    pub bound: f64,
    pub std_error: f64,
    pub holds: bool,
}

const CHUNK: usize = 1 << 16;

/// Empirical `P[‖Z‖₂ > ξ]` for `Z ~ N(0, I_d)` against `e^{-(ξ² − d)/8}`.
pub fn hanson_wright_check(d: usize, xi: f64, n: usize, seed: u64) -> Result<HansonWrightReport> {
    if d == 0 {
        return Err(invalid("dimension must be positive"));
    }
    if !(xi > (2.0 * d as f64).sqrt()) {
        return Err(invalid(format!("the tail bound needs ξ > √(2d) = {}", (2.0 * d as f64).sqrt())));
    }
    if n < 10_000 {
        return Err(invalid("need at least 10⁴ draws"));
    }
    let xi_sq = xi * xi;
    let chunks = n.div_ceil(CHUNK);
    let exceed: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(seed, c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            let mut z = vec![0.0; d];
            let mut count = 0u64;
            for _ in 0..len {
                rng::fill_standard_normal(&mut rng, &mut z);
                if z.iter().map(|v| v * v).sum::<f64>() > xi_sq {
                    count += 1;
                }
            }
            count
        })
        .sum();
    let empirical = exceed as f64 / n as f64;
    let bound = (-(xi_sq - d as f64) / 8.0).exp();
    let std_error = (empirical * (1.0 - empirical) / n as f64).sqrt();
    Ok(HansonWrightReport { d, xi, n, seed, empirical, bound, std_error, holds: empirical <= bound + 3.0 * std_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::{run_mala, ChainConfig};
    use crate::targets::Constant;

    #[test]
    fn quantiles_type7() {
        let s = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&s, 0.5), 3.0);
        assert!((quantile(&s, 0.05) - 1.2).abs() < 1e-12);
        assert!((quantile(&s, 0.95) - 4.8).abs() < 1e-12);
    }

    #[test]
    fn flat_target_accepts_all() {
        let trace = run_mala(&Constant::zero(2), &ChainConfig::new(0.7, 200, 9), &[0.0, 0.0]).unwrap();
        let s = acceptance_stats(&trace).unwrap();
        assert_eq!((s.mean, s.accepted_fraction, s.proposals), (1.0, 1.0, 200));
    }

    #[test]
    fn hanson_wright_examples() {
        let r = hanson_wright_check(1, 2.0, 200_000, 5).unwrap();
        assert!((r.bound - (-3.0f64 / 8.0).exp()).abs() < 1e-15);
        assert!(r.holds && (r.empirical - 0.0455).abs() < 0.003);
        assert!(hanson_wright_check(10, 20f64.sqrt(), 10_000, 5).is_err());
        assert!(hanson_wright_check(10, 4.5, 100, 5).is_err());
        let far = hanson_wright_check(3, 50.0, 10_000, 5).unwrap();
        assert_eq!(far.empirical, 0.0);
    }
}
