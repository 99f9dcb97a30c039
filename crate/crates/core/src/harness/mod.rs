//! Experiment orchestration: synthetic data, the train/predict/reconstruct
//! protocol with CSV output, and the oracle audits.

pub mod audit;
pub mod experiment;
pub mod synthetic;

pub use audit::{run_audit, AuditConfig, AuditReport};
pub use experiment::{
    evaluate_model, evaluate_one_against_all, evaluate_persisted, records_to_csv, run_experiment,
    write_records_csv, DataSource, ExperimentOutput, RunConfig,
};
pub use synthetic::{generate_synthetic, LabelSampling, SyntheticSpec};
