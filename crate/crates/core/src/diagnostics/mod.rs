//! Desk-scale ground truth and measurement on 1D/2D grids.

mod conductance;
mod energy;
mod grid;
mod mixing;
mod stats;

pub use conductance::{
    cheeger_1d, conductance, detailed_balance_violation, normalized_density_1d, restricted_cheeger_1d,
    restricted_conductance_1d, transition_matrix_1d, ConductanceOptions, ConductanceReport, DetailedBalanceReport,
    TransitionMatrix,
};
pub use energy::{energy_error_scaling, ols_fit, PhaseDistribution, ScalingFit};
pub use grid::{grid_truth, histogram, tv_distance, GridDistribution, Histogram};
pub use mixing::{binning_floor, hitting_time, mixing_time_estimate, InitDistribution, MixingEstimate, MixingSetup};
pub use stats::{acceptance_stats, acceptance_stats_of, hanson_wright_check, AcceptanceStats, HansonWrightReport};
