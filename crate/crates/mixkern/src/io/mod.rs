//! Configuration files, CSV tables and PGM images.

mod config;
mod pgm;
mod table;

pub use config::{
    parse_config, parse_config_for, parse_config_str, ExperimentConfig, ExperimentKind,
};
pub use pgm::{parse_pgm, pgm_bytes, read_pgm, write_pgm};
pub use table::{
    csv_bytes, format_float, read_csv_dataset, write_csv, write_csv_dataset, Cell, Schema,
};
