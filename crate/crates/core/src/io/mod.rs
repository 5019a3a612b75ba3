//! Configuration files, subcommands and on-disk outputs.

mod commands;
mod config;
mod output;

pub use commands::{
    cmd_convergence, cmd_oracle, cmd_poisson_check, cmd_predict, cmd_run, convergence_grids, convergence_study,
    family_profile, manufactured_omega, observed_orders, oracle_blowup_run, oracle_setup, output_dir, poisson_study,
    riccati_residual_below, run_report, ConvergenceRow, Outcome, PoissonRow,
};
pub use config::{
    parse_config, parse_config_str, Config, ConvergenceConfig, GridConfig, OracleConfig, OracleProfile, OutputConfig,
    PoissonConfig, ToleranceConfig,
};
pub use output::{
    decode_snapshot, encode_snapshot, fmt_real, read_snapshot, series_csv, series_rows, series_values, snapshot_path, write_series,
    write_snapshots, Report, Snapshot, SERIES_COLUMNS,
};
