//! Measure synthesis, persistence and config-driven experiment runs.

pub mod config;
pub mod io;
pub mod run;
pub mod suite;
pub mod synth;

pub use config::{ExperimentConfig, ExperimentKind, OracleConfig, ScheduleConfig, SCHEMA_VERSION};
pub use io::{
    decode_field, decode_measure, decode_set, encode_field, encode_measure, encode_set, load_complex, load_field,
    load_measure, load_set, store_complex, store_field, store_measure, store_set, Layout,
};
pub use run::{config_hash, execute, manifest, run_experiment, Artifact, RunError, RunOutcome, RunOutput};
pub use suite::{oracle_suite, CheckTally};
pub use synth::{synth_complex, synth_measure, Family, MeasureSpec, SimilarityMap};
