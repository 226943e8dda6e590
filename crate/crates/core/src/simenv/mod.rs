//! Synthetic ground truth: oracle, workloads, labelled datasets and policy comparison.

pub mod dataset;
pub mod oracle;
pub mod policy;
pub mod report;
pub mod workload;

pub use dataset::{generate_dataset, read_dataset_csv, write_dataset_csv, Dataset, DatasetConfig, DatasetRow, Split};
pub use oracle::{oracle_slowdown, OracleParams};
pub use policy::{naive_split, run_policy, write_policy_csv, Policy, PolicyOutcome, SetRecord};
pub use report::{estimation_error_report, model_metrics, ErrorReport, ModelMetrics};
pub use workload::{generate_workload, Archetype, SyntheticJobSpec};
