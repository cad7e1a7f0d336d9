use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::centroid::{
    diameter_bound, feasible_volume_fraction, gradient_bound, suggested_iterations, CentroidConfig, SamplerConfig,
};
use crate::error::{invalid, Error, Result};
use crate::harness::generate::{generate, perturbed_prediction, GenConfig, Mode, Style};
use crate::harness::report::{solve, Algorithm, SolveOptions};
use crate::landscape::Instance;
use crate::reference::solve_reference;

/// Fraction of the reference value the centroid method may fall short by.
pub const CENTROID_EPS_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchGrid {
    pub platforms: Vec<usize>,
    pub bids: Vec<usize>,
    /// Prediction error levels; only `bmom` cells fan out over these.
    pub etas: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    pub mode: Mode,
}

impl BenchGrid {
    /// Parses `m=1,2;n=8,32;eta=0,4;algo=mom,bmom;mode=strict`. `eta` and `mode` are optional.
    pub fn parse(spec: &str, trials: usize) -> Result<Self> {
        let mut grid = BenchGrid {
            platforms: vec![],
            bids: vec![],
            etas: vec![0.0],
            algorithms: vec![],
            trials,
            mode: Mode::Strict,
        };
        for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, vals) = part.split_once('=').ok_or_else(|| invalid(format!("grid term '{part}' lacks '='")))?;
            let items = || vals.split(',').map(str::trim).filter(|s| !s.is_empty());
            let bad = |v: &str| invalid(format!("bad value '{v}' for grid key '{key}'"));
            match key.trim() {
                "m" => grid.platforms = items().map(|v| v.parse().map_err(|_| bad(v))).collect::<Result<_>>()?,
                "n" => grid.bids = items().map(|v| v.parse().map_err(|_| bad(v))).collect::<Result<_>>()?,
                "eta" => grid.etas = items().map(|v| v.parse().map_err(|_| bad(v))).collect::<Result<_>>()?,
                "algo" => grid.algorithms = items().map(str::parse).collect::<Result<_>>()?,
                "mode" => {
                    grid.mode = match vals.trim() {
                        "strict" => Mode::Strict,
                        "smooth" => Mode::Smooth,
                        v => return Err(bad(v)),
                    }
                }
                other => return Err(invalid(format!("unknown grid key '{other}'"))),
            }
        }
        if grid.platforms.is_empty() || grid.bids.is_empty() || grid.algorithms.is_empty() {
            return Err(invalid("grid needs m=, n= and algo= terms"));
        }
        if grid.platforms.contains(&0) || grid.bids.contains(&0) {
            return Err(invalid("grid sizes must be positive"));
        }
        if grid.etas.is_empty() || grid.etas.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(invalid("eta levels must be finite and non-negative"));
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub m: usize,
    pub n: usize,
    pub eta: Option<f64>,
    pub algorithm: Algorithm,
    pub trial: usize,
    pub distinct_queries: usize,
    pub total_queries: usize,
    pub matched_reference: bool,
}

/// SplitMix64 over a base seed and cell coordinates.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut z = base;
    for &p in parts {
        z = z.wrapping_add(p).wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

/// Instance for one `(m, n, trial)` cell. Even trials bind ROS, odd trials bind the budget.
pub fn cell_instance(m: usize, n: usize, trial: usize, mode: Mode, seed: u64) -> Result<Instance> {
    let (budget, ros) =
        if trial.is_multiple_of(2) { (Style::Slack, Style::Binding) } else { (Style::Binding, Style::Slack) };
    let cfg = GenConfig {
        platforms: m,
        bids: n,
        seed: derive_seed(seed, &[m as u64, n as u64, trial as u64]),
        mode,
        budget_style: budget,
        ros_style: ros,
    };
    generate(&cfg)
}

/// Centroid iteration count `3m ln(4 G r / (gamma eps))` with `G`, `r`, `gamma` measured on the instance.
pub fn sized_centroid_config(instance: &Instance, reference_value: f64, seed: u64) -> CentroidConfig {
    let eps = (CENTROID_EPS_FRACTION * reference_value).max(1e-9);
    let gamma = feasible_volume_fraction(instance, 4096, seed ^ 0x5eed).max(1.0 / 4096.0);
    let iterations =
        suggested_iterations(instance.num_platforms(), gradient_bound(instance), diameter_bound(instance), gamma, eps);
    CentroidConfig { iterations, sampler: SamplerConfig::default(), seed }
}

struct Cell {
    m: usize,
    n: usize,
    eta: Option<f64>,
    algorithm: Algorithm,
    trial: usize,
}

/// Runs every grid cell on its own instance and oracle; rows come back in cell order.
pub fn bench_sweep(grid: &BenchGrid, seed: u64) -> Result<Vec<BenchRow>> {
    let mut cells = Vec::new();
    for &m in &grid.platforms {
        for &n in &grid.bids {
            for &algorithm in &grid.algorithms {
                let etas: Vec<Option<f64>> = if algorithm == Algorithm::Bmom {
                    grid.etas.iter().copied().map(Some).collect()
                } else {
                    vec![None]
                };
                for eta in etas {
                    for trial in 0..grid.trials {
                        cells.push(Cell { m, n, eta, algorithm, trial });
                    }
                }
            }
        }
    }

    cells
        .par_iter()
        .map(|cell| {
            let cell_seed = derive_seed(seed, &[cell.m as u64, cell.n as u64, cell.trial as u64]);
            let instance = cell_instance(cell.m, cell.n, cell.trial, grid.mode, seed)?;
            let reference = solve_reference(&instance);
            let mut options = SolveOptions::default();
            if let Some(eta) = cell.eta {
                options.eta = Some(eta);
                options.prediction = Some(perturbed_prediction(
                    &reference.optimum,
                    eta,
                    cell.n,
                    derive_seed(cell_seed, &[eta.to_bits()]),
                ));
            }
            if cell.algorithm == Algorithm::Centroid {
                options.centroid = sized_centroid_config(&instance, reference.value, cell_seed);
            }
            let (report, _) = solve(&instance, cell.algorithm, &options)?;
            let matched = if cell.algorithm.is_exact() {
                report.optimum.max_abs_diff(&reference.optimum) <= 1e-9
                    && (report.value - reference.value).abs() <= 1e-9 * reference.value.abs().max(1.0)
            } else {
                report.value >= reference.value * (1.0 - CENTROID_EPS_FRACTION)
            };
            if cell.algorithm.is_exact() && !matched {
                return Err(Error::Invariant(format!(
                    "{} missed the reference optimum on m={} n={} trial={} (instance seed {})",
                    cell.algorithm, cell.m, cell.n, cell.trial, cell_seed
                )));
            }
            Ok(BenchRow {
                m: cell.m,
                n: cell.n,
                eta: cell.eta,
                algorithm: cell.algorithm,
                trial: cell.trial,
                distinct_queries: report.distinct_queries,
                total_queries: report.total_queries,
                matched_reference: matched,
            })
        })
        .collect()
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = BenchGrid::parse("m=1,2; n=8 ;algo=mom,bmom;eta=0,2.5;mode=smooth", 3).unwrap();
        assert_eq!(g.platforms, vec![1, 2]);
        assert_eq!(g.bids, vec![8]);
        assert_eq!(g.etas, vec![0.0, 2.5]);
        assert_eq!(g.algorithms, vec![Algorithm::Mom, Algorithm::Bmom]);
        assert_eq!(g.mode, Mode::Smooth);
        assert_eq!(g.trials, 3);
        assert!(BenchGrid::parse("m=1;n=8", 1).is_err());
        assert!(BenchGrid::parse("m=1;n=8;algo=lp", 1).is_err());
        assert!(BenchGrid::parse("m=0;n=8;algo=mom", 1).is_err());
        assert!(BenchGrid::parse("m=1;n=8;algo=mom;q=3", 1).is_err());
    }

    #[test]
    fn small_mom_sweep_matches() {
        let g = BenchGrid::parse("m=2;n=8;algo=mom", 5).unwrap();
        let rows = bench_sweep(&g, 11).unwrap();
        assert_eq!(rows.len(), 5);
        assert!(rows.iter().all(|r| r.matched_reference));
    }

    #[test]
    fn exact_predictions_cost_two_m() {
        let g = BenchGrid::parse("m=1,3;n=8,32;algo=bmom;eta=0", 4).unwrap();
        for r in bench_sweep(&g, 5).unwrap() {
            assert!(r.distinct_queries <= 2 * r.m, "{r:?}");
        }
    }

    #[test]
    fn csv_is_reproducible() {
        let g = BenchGrid::parse("m=2;n=8;algo=mom,bmom;eta=0,3", 3).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_csv(&bench_sweep(&g, 99).unwrap(), &mut a).unwrap();
        write_csv(&bench_sweep(&g, 99).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("m,n,eta,algorithm,trial,distinct_queries,total_queries,matched_reference\n"));
    }
}
