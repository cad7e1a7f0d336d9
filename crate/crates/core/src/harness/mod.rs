//! Instance generation, single runs and grid sweeps.

pub mod bench;
pub mod generate;
pub mod report;

pub use bench::{bench_sweep, write_csv, BenchGrid, BenchRow};
pub use generate::{generate, perturbed_prediction, GenConfig, Mode, Style};
pub use report::{solve, Algorithm, SolveOptions, SolveReport};
