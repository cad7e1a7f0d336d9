//! Exact query-efficient search for the fractional optimum.
//!
//! The optimum is the water-filled extension of the largest feasible member
//! of the threshold family `mu^k`. The driver searches the space of candidate
//! thresholds (every marginal cost) median-of-medians style: each platform
//! keeps an index range of still-possible critical marginals, the per-platform
//! midpoints are ranked by marginal cost, and the pivot that splits the
//! remaining range mass most evenly decides which side is discarded.

use crate::error::{domain, Error, Result};
use crate::landscape::BidVector;
use crate::oracle::CountingOracle;

/// Inclusive per-platform bid ranges; `lo > hi` marks an exhausted platform.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchRanges {
    pub lo: Vec<usize>,
    pub hi: Vec<usize>,
}

impl SearchRanges {
    /// `[1, n]` on all `m` platforms.
    pub fn full(m: usize, n: usize) -> Self {
        Self { lo: vec![1; m], hi: vec![n; m] }
    }

    pub fn is_exhausted(&self, j: usize) -> bool {
        self.lo[j] > self.hi[j]
    }

    /// Number of bid indices still in range, summed over platforms.
    pub fn mass(&self) -> usize {
        self.lo.iter().zip(&self.hi).map(|(&l, &h)| (h + 1).saturating_sub(l)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptCheckVerdict {
    Infeasible,
    /// The profile is not the threshold strategy of its own largest marginal.
    NotMuK,
    /// Feasible threshold strategy, but the next threshold is feasible too.
    NotOptimal,
    AlmostOptimal,
}

/// Converts a bid vector to integer bids, rejecting fractional entries.
pub fn integral_bids(strategy: &BidVector) -> Result<Vec<usize>> {
    strategy
        .as_slice()
        .iter()
        .map(|&b| {
            if b >= 0.0 && b.fract() == 0.0 {
                Ok(b as usize)
            } else {
                Err(domain(format!("bid {b} is not a non-negative integer")))
            }
        })
        .collect()
}

/// Threshold strategy `mu^k` restricted to `ranges`, by binary search per platform.
///
/// The left edge is probed first; when its marginal already exceeds `k` the
/// result is `lo - 1`, so a full range `[1, n]` can yield bid `0`.
pub fn matching_mc(oracle: &mut CountingOracle<'_>, ranges: &SearchRanges, k: f64) -> Result<Vec<usize>> {
    let m = oracle.num_platforms();
    let mut mu = Vec::with_capacity(m);
    for j in 0..m {
        let (lo, hi) = (ranges.lo[j], ranges.hi[j]);
        if lo == 0 || lo > hi || hi > oracle.bids() {
            return Err(domain(format!("invalid search range [{lo}, {hi}] on platform {j}")));
        }
        if oracle.query(j, lo)?.mc() > k {
            mu.push(lo - 1);
            continue;
        }
        // Invariant: MC(l) <= k, answer in [l, r]. Ceiling midpoints so l always moves.
        let (mut l, mut r) = (lo, hi);
        while l < r {
            let mid = l + (r - l).div_ceil(2);
            if oracle.query(j, mid)?.mc() <= k {
                l = mid;
            } else {
                r = mid - 1;
            }
        }
        mu.push(l);
    }
    Ok(mu)
}

/// Classifies an integral profile using at most `2m` distinct queries.
pub fn opt_check(oracle: &mut CountingOracle<'_>, mu: &[usize]) -> Result<OptCheckVerdict> {
    let m = oracle.num_platforms();
    if mu.len() != m {
        return Err(domain(format!("profile has {} entries, expected {m}", mu.len())));
    }
    if let Some(b) = mu.iter().find(|&&b| b > oracle.bids()) {
        return Err(domain(format!("bid {b} exceeds n = {}", oracle.bids())));
    }

    let (mut value, mut cost) = (0.0, 0.0);
    let mut k = 0.0;
    let mut top = 0;
    for (j, &b) in mu.iter().enumerate() {
        let a = oracle.query(j, b)?;
        value += a.value;
        cost += a.cost;
        if b >= 1 && a.mc() > k {
            k = a.mc();
            top = j;
        }
    }
    if !oracle.feasible_totals(value, cost) {
        return Ok(OptCheckVerdict::Infeasible);
    }

    let mut next = Vec::with_capacity(m);
    for (j, &b) in mu.iter().enumerate() {
        next.push(oracle.query(j, b + 1)?);
    }
    if next.iter().enumerate().any(|(j, a)| j != top && a.mc() <= k) {
        return Ok(OptCheckVerdict::NotMuK);
    }

    // Lowest index wins ties.
    let (cheapest, step) = next.iter().enumerate().min_by(|(_, a), (_, b)| a.mc().total_cmp(&b.mc())).expect("m >= 1");
    if step.is_beyond_top() {
        return Ok(OptCheckVerdict::AlmostOptimal);
    }
    let here = oracle.query(cheapest, mu[cheapest])?;
    let value = value - here.value + step.value;
    let cost = cost - here.cost + step.cost;
    Ok(if oracle.feasible_totals(value, cost) { OptCheckVerdict::NotOptimal } else { OptCheckVerdict::AlmostOptimal })
}

/// Extends an almost-optimal integral profile to the fractional optimum.
///
/// Unit steps `mu_j -> mu_j + 1` are taken in ascending marginal cost (lower
/// platform index first on ties) while both constraints hold; the first step
/// that would overshoot is taken fractionally so the binding constraint is tight.
pub fn round_up(oracle: &mut CountingOracle<'_>, mu: &[usize]) -> Result<BidVector> {
    let m = oracle.num_platforms();
    if mu.len() != m {
        return Err(domain(format!("profile has {} entries, expected {m}", mu.len())));
    }
    let (mut value, mut cost) = (0.0, 0.0);
    let mut steps = Vec::with_capacity(m);
    for (j, &b) in mu.iter().enumerate() {
        let here = oracle.query(j, b)?;
        value += here.value;
        cost += here.cost;
        let next = oracle.query(j, b + 1)?;
        if !next.is_beyond_top() {
            steps.push((j, next.mc(), next.value - here.value, next.cost - here.cost));
        }
    }
    debug_assert!(oracle.feasible_totals(value, cost), "round_up input must be feasible");
    steps.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

    let t = oracle.target_ros();
    let budget = oracle.budget();
    let mut out: Vec<f64> = mu.iter().map(|&b| b as f64).collect();
    for (j, _, dv, dc) in steps {
        if oracle.feasible_totals(value + dv, cost + dc) {
            out[j] += 1.0;
            value += dv;
            cost += dc;
            continue;
        }
        let ros_room = t * value - cost;
        let ros_rate = dc - t * dv;
        let x_ros = if ros_rate > 0.0 { ros_room / ros_rate } else { f64::INFINITY };
        let x_budget = (budget - cost) / dc;
        out[j] += x_ros.min(x_budget).clamp(0.0, 1.0);
        break;
    }
    Ok(BidVector::new(out))
}

/// Platforms ranked by midpoint marginal cost plus the pivot position that splits range mass evenly.
pub(crate) struct Pivot {
    order: Vec<usize>,
    pos: usize,
    mids: Vec<usize>,
    pub(crate) k: f64,
}

impl Pivot {
    /// Ranges with nothing left to rank yield `None`.
    pub(crate) fn select(oracle: &mut CountingOracle<'_>, ranges: &SearchRanges) -> Result<Option<Self>> {
        let m = oracle.num_platforms();
        let mut mids = vec![0; m];
        let mut ranked = Vec::new();
        for j in (0..m).filter(|&j| !ranges.is_exhausted(j)) {
            mids[j] = (ranges.lo[j] + ranges.hi[j]) / 2;
            ranked.push((j, oracle.query(j, mids[j])?.mc()));
        }
        if ranked.is_empty() {
            return Ok(None);
        }
        ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

        let widths: Vec<usize> = ranked.iter().map(|&(j, _)| ranges.hi[j] - ranges.lo[j]).collect();
        let total: usize = widths.iter().sum();
        let mut below = 0;
        let mut best = (usize::MAX, 0);
        for (pos, w) in widths.iter().enumerate() {
            // Both sides include the pivot itself.
            let left = below + w;
            let right = total - below;
            let gap = left.abs_diff(right);
            if gap < best.0 {
                best = (gap, pos);
            }
            below += w;
        }
        let pos = best.1;
        Ok(Some(Self { k: ranked[pos].1, order: ranked.into_iter().map(|(j, _)| j).collect(), pos, mids }))
    }

    /// Discard midpoints and above on the pivot and every platform ranked after it.
    pub(crate) fn cut_upper(&self, ranges: &mut SearchRanges) {
        for &j in &self.order[self.pos..] {
            ranges.hi[j] = self.mids[j] - 1;
        }
    }

    /// Discard midpoints and below on the pivot and every platform ranked before it.
    pub(crate) fn cut_lower(&self, ranges: &mut SearchRanges) {
        for &j in &self.order[..=self.pos] {
            ranges.lo[j] = self.mids[j] + 1;
        }
    }
}

pub(crate) fn not_mu_k_error() -> Error {
    Error::Invariant("threshold strategy from matching_mc failed the threshold-form check".into())
}

/// Exact fractional optimum through counted queries alone.
pub fn median_of_medians(oracle: &mut CountingOracle<'_>) -> Result<BidVector> {
    median_of_medians_observed(oracle, |_| {})
}

/// [`median_of_medians`] with a callback receiving the ranges at the top of every iteration.
pub fn median_of_medians_observed(
    oracle: &mut CountingOracle<'_>,
    mut observe: impl FnMut(&SearchRanges),
) -> Result<BidVector> {
    let (m, n) = (oracle.num_platforms(), oracle.bids());
    let full = SearchRanges::full(m, n);
    let mut ranges = full.clone();
    loop {
        observe(&ranges);
        let Some(pivot) = Pivot::select(oracle, &ranges)? else {
            // No candidate threshold is feasible: the optimum starts from non-participation.
            return round_up(oracle, &vec![0; m]);
        };
        let mu = matching_mc(oracle, &full, pivot.k)?;
        match opt_check(oracle, &mu)? {
            OptCheckVerdict::Infeasible => pivot.cut_upper(&mut ranges),
            OptCheckVerdict::NotOptimal => pivot.cut_lower(&mut ranges),
            OptCheckVerdict::AlmostOptimal => return round_up(oracle, &mu),
            OptCheckVerdict::NotMuK => return Err(not_mu_k_error()),
        }
    }
}
