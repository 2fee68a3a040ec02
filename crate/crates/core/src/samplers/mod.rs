//! MALA sampling, constrained MALA optimization and random walk Metropolis.

mod chain;
mod schedule;
mod trace_io;

pub(crate) use chain::advance;
pub use chain::{
    extract_minimizer, mala_step, mala_transition_log_density, run_chain, run_constrained_mala, run_mala, run_rwm,
    rwm_step, rwm_transition_log_density, ChainConfig, ChainTrace, SamplerKind, StepRecord,
};
pub use schedule::{section7_step_size, theorem1_step_size, warmness_on_grid};
pub use trace_io::{read_trace_csv, write_trace, TraceMeta};
