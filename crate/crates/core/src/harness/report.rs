use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::augmented::{branch_out_mom, Prediction};
use crate::centroid::{centroid_method, CentroidConfig, SamplerConfig};
use crate::error::{domain, Result};
use crate::landscape::{BidVector, Instance, FEASIBILITY_TOL};
use crate::oracle::{CountingOracle, QueryLedger};
use crate::reference::{solve_reference, Binding};
use crate::search::median_of_medians;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Mom,
    Bmom,
    Centroid,
    Reference,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Mom => "mom",
            Algorithm::Bmom => "bmom",
            Algorithm::Centroid => "centroid",
            Algorithm::Reference => "reference",
        }
    }

    pub fn is_exact(self) -> bool {
        self != Algorithm::Centroid
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mom" => Ok(Algorithm::Mom),
            "bmom" => Ok(Algorithm::Bmom),
            "centroid" => Ok(Algorithm::Centroid),
            "reference" => Ok(Algorithm::Reference),
            other => Err(domain(format!("unknown algorithm '{other}' (expected mom, bmom, centroid, reference)"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub algorithm: Algorithm,
    pub optimum: BidVector,
    pub value: f64,
    pub cost: f64,
    pub binding: Binding,
    pub distinct_queries: usize,
    pub total_queries: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    /// Informational only.
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Required for `bmom`.
    pub prediction: Option<Prediction>,
    /// Nominal error level that produced `prediction`, echoed into the report.
    pub eta: Option<f64>,
    pub centroid: CentroidConfig,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            prediction: None,
            eta: None,
            centroid: CentroidConfig { iterations: 100, sampler: SamplerConfig::default(), seed: 0 },
        }
    }
}

/// Which constraint is tight at `strategy` (ROS checked first).
pub fn classify_binding(instance: &Instance, value: f64, cost: f64) -> Binding {
    let tol = FEASIBILITY_TOL * cost.abs().max(1.0);
    if (cost - instance.target_ros() * value).abs() <= tol {
        Binding::Ros
    } else if (cost - instance.budget()).abs() <= tol {
        Binding::Budget
    } else {
        Binding::None
    }
}

/// Runs one algorithm on a fresh oracle.
pub fn solve(instance: &Instance, algorithm: Algorithm, options: &SolveOptions) -> Result<(SolveReport, QueryLedger)> {
    if !instance.is_strict() && algorithm.is_exact() && algorithm != Algorithm::Reference {
        log::warn!(
            "instance has tied marginal costs within a platform; exact search is only guaranteed on strict instances"
        );
    }
    let start = Instant::now();
    let mut oracle = CountingOracle::new(instance);
    let mut iterations = None;
    let optimum = match algorithm {
        Algorithm::Mom => median_of_medians(&mut oracle)?,
        Algorithm::Bmom => {
            let p = options.prediction.as_ref().ok_or_else(|| domain("bmom needs a prediction"))?;
            branch_out_mom(&mut oracle, p)?
        }
        Algorithm::Centroid => {
            iterations = Some(options.centroid.iterations);
            centroid_method(&mut oracle, &options.centroid)?
        }
        Algorithm::Reference => solve_reference(instance).optimum,
    };
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    let (value, cost) = instance.evaluate(&optimum)?;
    let (total, distinct) = oracle.snapshot_counts();
    let report = SolveReport {
        algorithm,
        binding: classify_binding(instance, value, cost),
        optimum,
        value,
        cost,
        distinct_queries: distinct,
        total_queries: total,
        eta: if algorithm == Algorithm::Bmom { options.eta } else { None },
        iterations,
        wall_time_ms,
    };
    Ok((report, oracle.into_ledger()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::generate::{generate, GenConfig};

    #[test]
    fn algorithm_names_round_trip() {
        for a in [Algorithm::Mom, Algorithm::Bmom, Algorithm::Centroid, Algorithm::Reference] {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("simplex".parse::<Algorithm>().is_err());
    }

    #[test]
    fn report_counts_match_ledger() {
        let inst = generate(&GenConfig::new(3, 16, 9)).unwrap();
        let (report, ledger) = solve(&inst, Algorithm::Mom, &SolveOptions::default()).unwrap();
        assert_eq!(report.total_queries, ledger.total());
        assert_eq!(report.distinct_queries, ledger.distinct());
        assert_eq!(report.binding, solve_reference(&inst).binding);
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["algorithm"], "mom");
        assert!(json.get("eta").is_none());
    }

    #[test]
    fn bmom_requires_prediction() {
        let inst = generate(&GenConfig::new(2, 4, 1)).unwrap();
        assert!(solve(&inst, Algorithm::Bmom, &SolveOptions::default()).is_err());
    }
}
