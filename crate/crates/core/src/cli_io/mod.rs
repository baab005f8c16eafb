//! Command-line layer: file formats, configuration and the four commands.

pub mod commands;
pub mod config;
pub mod fs;
pub mod report;
pub mod sweep_csv;
pub mod timestamps;

pub use commands::{exit_code, resolve_seed, run, Cli, Command, Outcome};
pub use config::RunConfig;
pub use fs::{output_dir, write_atomic, OUTPUT_DIR_ENV};
pub use report::{fit_table, format_uncertain, params_csv, read_params_csv, residuals_csv, summary_csv};
pub use sweep_csv::{read_sweep_csv, read_sweep_file, sweep_csv_string, write_sweep_csv, write_sweep_file, SWEEP_HEADER};
pub use timestamps::{decode_timestamps, encode_timestamps, read_timestamps, write_timestamps};
