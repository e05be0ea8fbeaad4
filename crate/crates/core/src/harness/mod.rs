//! Simulation study: replication loop, accuracy indices, selection heatmaps
//! and output files.

pub mod config;
pub mod oracle_check;
pub mod output;
pub mod procedures;
pub mod report;
pub mod run;

pub use config::{load_config, ConfigFile, ExperimentConfig};
pub use output::{emit_outputs, read_cor, read_records, Manifest};
pub use procedures::{parse_procedures, PenaltyProc, Procedure, DEFAULT_C_OV};
pub use report::{check_invariants, compute_cor, cor_report, record_rows, selection_heatmap, CorEntry, Heatmap, RecordRow};
pub use run::{run_experiment, ReplicationRecord, Selection};
