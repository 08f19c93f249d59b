//! Simulated tutoring experiments: schedule, ground-truth students, the
//! per-session estimate/optimise/instruct loop, metrics and run outputs.

pub mod config;
pub mod metrics;
pub mod output;
pub mod runner;
pub mod schedule;
pub mod student;

pub use config::{EstimationConfig, ExperimentConfig, TutorKind};
pub use metrics::{aggregate_seeds, session_means, Event, RunMetrics, SeedAggregate, SessionDiagnostics};
pub use output::{compare_runs, emit_outputs, plot_curves, read_curve_csv, read_events_csv, run_dir, ComparisonRow, Curve};
pub use runner::{prior_mean_params, run_experiment};
pub use schedule::SessionSchedule;
pub use student::GroundTruthStudent;
