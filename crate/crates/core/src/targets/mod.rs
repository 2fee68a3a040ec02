//! Target distributions `pi(x) ∝ exp(-U(x))`, synthetic datasets and
//! constraint sets.

mod constraint;
mod dataset;
mod empirical;
mod gaussian;
mod precondition;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use constraint::{annulus, ConstraintSet};
pub use dataset::{sample_sphere_dataset, Dataset, DatasetMeta};
pub use empirical::{
    empirical_zero_one, make_logistic_regression, make_sigmoid_regression, make_smoothed_zero_one,
    recommended_schedule, EmpiricalTarget, Loss, ZeroOneSchedule,
};
pub use gaussian::{make_gaussian, Constant, Gaussian};
pub use precondition::{precondition, Preconditioned};

/// Regularity constants a target can vouch for analytically.
///
/// `m` is carried in its smoothness role (`‖∇U(x) − ∇U(y)‖ ≤ m‖x − y‖`);
/// `gradient_norm_bound` is the separate `‖∇U‖ ≤ M` reading, when finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnownConstants {
    pub m: f64,
    pub gradient_norm_bound: Option<f64>,
    pub c3: f64,
    pub c4: f64,
    pub tail_rate: Option<f64>,
}

/// A potential `U` with its gradient and optional structure.
pub trait Target: Send + Sync {
    fn dim(&self) -> usize;

    fn potential(&self, x: &[f64]) -> f64;

    fn gradient_into(&self, x: &[f64], grad: &mut [f64]);

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.gradient_into(x, &mut g);
        g
    }

    /// Short identifier used in reports and trace metadata.
    fn label(&self) -> String;

    /// Unit columns of the bad-directions matrix.
    fn bad_directions(&self) -> Option<&[Vec<f64>]> {
        None
    }

    fn known_constants(&self) -> Option<KnownConstants> {
        None
    }

    /// Diagonal precision when `U(x) = ½ Σ λ_i x_i²`; enables the exact flow.
    fn quadratic_precision(&self) -> Option<Vec<f64>> {
        None
    }

    /// `log ∫ exp(-U)`, when known in closed form.
    fn log_normalizer(&self) -> Option<f64> {
        None
    }

    fn is_nonconvex(&self) -> bool {
        false
    }

    /// Exact `∇³U(x)[u, v, w]` when available.
    fn third_directional(&self, _x: &[f64], _u: &[f64], _v: &[f64], _w: &[f64]) -> Option<f64> {
        None
    }

    /// Exact `∇⁴U(x)[u, u, u, u]` when available.
    fn fourth_directional(&self, _x: &[f64], _u: &[f64]) -> Option<f64> {
        None
    }
}

/// Shared, immutable handle to a target.
pub type TargetModel = Arc<dyn Target>;
