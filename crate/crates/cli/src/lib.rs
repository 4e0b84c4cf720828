//! Benchmark harness: test-set generation, optimum certification, baseline
//! and evolutionary runs, and table rendering.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod optima;
pub mod results;

pub use commands::{
    cmd_baselines, cmd_evolve, cmd_gen, cmd_report, cmd_solve, manifest_path, EvolveMode,
    EvolveOptions,
};
pub use config::HarnessConfig;
pub use manifest::Manifest;
pub use results::{Fragment, ResultRow, ResultTable};
