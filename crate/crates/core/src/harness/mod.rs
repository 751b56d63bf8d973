//! Scenario files, benchmark schemes, parameter sweeps and CSV output.

pub mod analysis;
pub mod csv_out;
pub mod experiment;
pub mod scheme;
pub mod sweep;

pub use analysis::power_gap_db;
pub use csv_out::{format_float, write_tables, FailureRow, MeanRow, SweepRow, HEADER};
pub use experiment::ExperimentConfig;
pub use scheme::{run_scheme, SchemeId, SchemeOutcome, DEFAULT_REALIZATIONS};
pub use sweep::{run_sweep, SweepAxis, SweepResult, SweepSpec, THREADS_ENV};
