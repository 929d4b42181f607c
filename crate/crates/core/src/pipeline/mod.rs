//! Configuration, detuning sweeps and CSV output.

pub mod config;
pub mod csv;
pub mod sweep;

pub use config::{parse_config, parse_config_str, Corrections, ExperimentConfig, MotionConfig};
pub use csv::{emit_csv, read_sweep_csv, sweep_csv_string, write_sweep_csv, SweepCsvRecord, SWEEP_CSV_HEADER};
pub use sweep::{derive_seed, simulate_sweep, theory_curve, RowFlags, SweepRow};
