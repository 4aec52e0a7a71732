//! Experiment harness for the modal compliance library: shape-set
//! generation, convergence and ablation studies, the tendon segment
//! scenario and CSV/JSON reporting.

pub mod config;
pub mod report;
pub mod segment;
pub mod shapes;
pub mod study;
pub mod units;

pub use config::{ConfigError, ExperimentConfig, OutputFormat};
pub use report::{emit_report, Aggregate, ReportError, Row, Status, StudyReport};
pub use segment::{check_config_compliance, run_segment_scenario};
pub use shapes::{generate_shape_set, Shape};
pub use study::{
    evaluate_study, prepare_ground_truth, run_ablation_study, run_convergence_study, ComplianceMode, StudyError,
};
