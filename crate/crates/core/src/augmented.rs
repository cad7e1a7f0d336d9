//! Search seeded by an untrusted prediction of the optimum.
//!
//! The floored prediction is checked first; a correct one costs at most `2m`
//! distinct queries. Otherwise the median-of-medians search runs inside
//! windows `floor(prediction) +/- 2^(2^i)`, squaring the radius each round
//! until the optimum is found or the windows cover every bid.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::landscape::BidVector;
use crate::oracle::CountingOracle;
use crate::search::{matching_mc, not_mu_k_error, opt_check, round_up, OptCheckVerdict, Pivot, SearchRanges};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Prediction {
    pub strategy: BidVector,
}

impl Prediction {
    pub fn new(strategy: BidVector) -> Self {
        Self { strategy }
    }
}

/// `l_inf` distance between a prediction and the true optimum.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PredictionError {
    pub eta: f64,
}

pub fn prediction_error(reference_opt: &BidVector, prediction: &Prediction) -> Result<PredictionError> {
    if reference_opt.len() != prediction.strategy.len() {
        return Err(domain(format!(
            "prediction has {} entries, optimum has {}",
            prediction.strategy.len(),
            reference_opt.len()
        )));
    }
    Ok(PredictionError { eta: reference_opt.max_abs_diff(&prediction.strategy) })
}

/// Window radius `2^(2^round)`, saturating.
pub fn window_radius(round: u32) -> usize {
    let exp = 1u64.checked_shl(round).unwrap_or(u64::MAX);
    if exp >= usize::BITS as u64 {
        usize::MAX
    } else {
        1usize << exp
    }
}

struct Windows {
    ranges: SearchRanges,
    /// Platforms whose window excludes bid 0 and so get the left-edge check.
    checked: Vec<bool>,
    covers_all: bool,
}

fn windows(center: &[usize], radius: usize, n: usize) -> Windows {
    let m = center.len();
    let mut ranges = SearchRanges::full(m, n);
    let mut checked = vec![false; m];
    let mut covers_all = true;
    for (j, &c) in center.iter().enumerate() {
        let lower = c.saturating_sub(radius);
        checked[j] = c > radius;
        ranges.lo[j] = lower.max(1);
        ranges.hi[j] = c.saturating_add(radius).min(n);
        covers_all &= !checked[j] && ranges.hi[j] == n;
    }
    Windows { ranges, checked, covers_all }
}

/// Exact fractional optimum, spending few queries when the prediction is close.
pub fn branch_out_mom(oracle: &mut CountingOracle<'_>, prediction: &Prediction) -> Result<BidVector> {
    branch_out_mom_observed(oracle, prediction, |_, _| {})
}

/// [`branch_out_mom`] reporting `(round, window)` each time a window round starts.
pub fn branch_out_mom_observed(
    oracle: &mut CountingOracle<'_>,
    prediction: &Prediction,
    mut observe: impl FnMut(u32, &SearchRanges),
) -> Result<BidVector> {
    let (m, n) = (oracle.num_platforms(), oracle.bids());
    prediction.strategy.validate(m, n)?;
    let center = prediction.strategy.floor();

    if opt_check(oracle, &center)? == OptCheckVerdict::AlmostOptimal {
        return round_up(oracle, &center);
    }

    for round in 0.. {
        let win = windows(&center, window_radius(round), n);
        observe(round, &win.ranges);
        let mut ranges = win.ranges.clone();
        while let Some(pivot) = Pivot::select(oracle, &ranges)? {
            let mut too_small = false;
            for j in (0..m).filter(|&j| win.checked[j]) {
                if oracle.query(j, win.ranges.lo[j])?.mc() > pivot.k {
                    too_small = true;
                    break;
                }
            }
            if too_small {
                pivot.cut_lower(&mut ranges);
                continue;
            }
            let mu = matching_mc(oracle, &win.ranges, pivot.k)?;
            match opt_check(oracle, &mu)? {
                OptCheckVerdict::NotMuK | OptCheckVerdict::Infeasible => pivot.cut_upper(&mut ranges),
                OptCheckVerdict::NotOptimal => pivot.cut_lower(&mut ranges),
                OptCheckVerdict::AlmostOptimal => return round_up(oracle, &mu),
            }
        }
        if win.covers_all {
            // Unrestricted search found no feasible threshold: start from non-participation.
            return round_up(oracle, &vec![0; m]);
        }
    }
    Err(not_mu_k_error())
}
