//! Experiment orchestration: configuration, metrics, heatmaps, storage and
//! parameter accounting, and the gradient-check sweep.

pub mod accounting;
pub mod config;
pub mod gradcheck;
pub mod heatmap;
pub mod metrics;
pub mod presets;
pub mod runner;

pub use accounting::{
    memory_report, parameter_report, render_memory_report, render_parameter_report, MemoryReport,
    ParameterReport,
};
pub use config::{ExperimentConfig, ExperimentKind, NetConfig};
pub use gradcheck::{render_gradcheck, run_gradcheck, GradCheckReport};
pub use heatmap::{decision_heatmap, read_heatmap_csv, write_heatmap_csv, write_heatmap_pgm};
pub use metrics::{
    average_accuracy_curve, metrics_to_csv, parse_metrics, strip_wallclock, write_metrics,
    MetricsRow, METRICS_HEADER,
};
pub use runner::{run_experiment, CellOutcome, RunReport};
