//! Declarative experiments, scaling studies and the command line.

mod cli;
mod run;
mod scaling;
mod spec;

pub use cli::cli_entry;
pub use run::{
    build_target, execute, replica_init, resolve_etas, resolve_out_dir, run_experiment, write_diagnostics_csv,
    write_summary_csv, BuiltTarget, DiagnosticResult, Execution, ReplicaRun, ReplicaSummary, RunReport, OUT_DIR_ENV,
};
pub use scaling::{scaling_study, Axis, ScalingOptions, ScalingRow, ScalingTable};
pub use spec::{
    load_spec, parse_spec, serialize_spec, DataSource, DiagnosticSpec, ExperimentSpec, SamplerSpec, ScheduleSpec,
    TargetSpec, SPEC_VERSION,
};
