//! Configuration files, CSV ingestion, and the command implementations
//! behind the `schatten` binary.

pub mod commands;
pub mod config;
pub mod tabular;

pub use commands::{
    cmd_basin, cmd_cv_bench, cmd_real_data, cmd_rff_bench, cmd_simulate, cmd_theory_curve,
    simulate_curves, write_rendered, Rendered, SimulationRow,
};
pub use config::{ExperimentConfig, Format};
pub use tabular::TabularDataset;
