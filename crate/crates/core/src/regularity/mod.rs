//! Regularity constants of targets: incoherence, closed-form bounds, probe
//! estimates, and the tail, good-set and exit-probability checks.

mod checks;
mod probes;

pub use checks::{
    constraint_exit_estimate, estimate_tail_rate, good_set_check, good_set_probability_bound, tail_decay_check,
    ExitEstimate, GoodSetParams, TailDecayReport, TailRow,
};
pub use probes::{
    estimate_c3, estimate_c4, estimate_gradient_bound, regularity_report, DerivativeMode, GradientBoundEstimate,
    ProbeEstimate, ProbeOptions, RegularityReport,
};

use crate::error::{invalid, Result};
use crate::vector::dot;

/// `max_i Σ_j |X_iᵀ X_j|`, diagonal included.
pub fn incoherence(columns: &[Vec<f64>]) -> f64 {
    columns.iter().map(|a| columns.iter().map(|b| dot(a, b).abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Closed-form `(C3, C4) = (√(rΦ), r)` for empirical targets with unit columns.
pub fn theorem3_bounds(r: usize, phi: f64) -> Result<(f64, f64)> {
    if r == 0 {
        return Err(invalid("need at least one datum"));
    }
    if !(phi >= 1.0) {
        return Err(invalid(format!("incoherence of unit columns is at least 1, got {phi}")));
    }
    Ok(((r as f64 * phi).sqrt(), r as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::identity_columns;

    #[test]
    fn incoherence_examples() {
        assert_eq!(incoherence(&identity_columns(5)), 1.0);
        let c = vec![vec![0.6, 0.8], vec![0.6, 0.8]];
        assert!((incoherence(&c) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn bounds_examples() {
        assert_eq!(theorem3_bounds(1, 1.0).unwrap(), (1.0, 1.0));
        assert_eq!(theorem3_bounds(100, 4.0).unwrap(), (20.0, 100.0));
        assert!(theorem3_bounds(0, 1.0).is_err());
        assert!(theorem3_bounds(3, 0.5).is_err());
    }
}
