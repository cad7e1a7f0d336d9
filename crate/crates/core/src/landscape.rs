//! Platform landscapes and the closed-form arithmetic over them.
//!
//! A landscape tabulates value and cost at bid indices `1..=n`; bid `0` is
//! non-participation with `v(0) = c(0) = 0`. Fractional bids interpolate
//! linearly between adjacent indices.

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};

/// Absolute slack on both feasibility constraints.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Relative slack when comparing adjacent marginal costs.
const MC_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLandscape", into = "RawLandscape")]
pub struct PlatformLandscape {
    values: Vec<f64>,
    costs: Vec<f64>,
    marginals: Vec<f64>,
    strict: bool,
}

#[derive(Serialize, Deserialize)]
struct RawLandscape {
    values: Vec<f64>,
    costs: Vec<f64>,
}

impl TryFrom<RawLandscape> for PlatformLandscape {
    type Error = Error;

    fn try_from(raw: RawLandscape) -> Result<Self> {
        PlatformLandscape::new(raw.values, raw.costs)
    }
}

impl From<PlatformLandscape> for RawLandscape {
    fn from(l: PlatformLandscape) -> Self {
        RawLandscape { values: l.values, costs: l.costs }
    }
}

impl PlatformLandscape {
    /// Builds a landscape from value and cost tables for bids `1..=n`.
    ///
    /// Rejects tables that are empty, of unequal length, non-positive,
    /// not strictly increasing, or whose marginal costs decrease.
    pub fn new(values: Vec<f64>, costs: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("landscape must have at least one bid"));
        }
        if values.len() != costs.len() {
            return Err(invalid(format!("values and costs differ in length ({} vs {})", values.len(), costs.len())));
        }
        if let Some(x) = values.iter().chain(&costs).find(|x| !x.is_finite() || **x <= 0.0) {
            return Err(invalid(format!("values and costs must be positive and finite, found {x}")));
        }
        for i in 1..values.len() {
            if values[i] <= values[i - 1] {
                return Err(invalid(format!("values not strictly increasing at bid {}", i + 1)));
            }
            if costs[i] <= costs[i - 1] {
                return Err(invalid(format!("costs not strictly increasing at bid {}", i + 1)));
            }
        }

        let mut marginals = Vec::with_capacity(values.len());
        let (mut pv, mut pc) = (0.0, 0.0);
        for (&v, &c) in values.iter().zip(&costs) {
            marginals.push((c - pc) / (v - pv));
            pv = v;
            pc = c;
        }
        let mut strict = true;
        for (i, w) in marginals.windows(2).enumerate() {
            if w[1] < w[0] * (1.0 - MC_REL_TOL) {
                return Err(invalid(format!(
                    "marginal costs decrease between bids {} and {} ({} > {})",
                    i + 1,
                    i + 2,
                    w[0],
                    w[1]
                )));
            }
            if w[1] <= w[0] * (1.0 + MC_REL_TOL) {
                strict = false;
            }
        }

        Ok(Self { values, costs, marginals, strict })
    }

    /// Like [`new`](Self::new) but additionally requires strictly increasing marginal costs.
    pub fn new_strict(values: Vec<f64>, costs: Vec<f64>) -> Result<Self> {
        let l = Self::new(values, costs)?;
        if !l.strict {
            return Err(invalid("marginal costs are not strictly increasing"));
        }
        Ok(l)
    }

    /// Number of bid indices `n`.
    pub fn bids(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    /// True when marginal costs strictly increase with the bid index.
    pub fn is_strict(&self) -> bool {
        self.strict
    }

    /// Value at an integer bid, `0` included.
    pub fn value_at(&self, bid: usize) -> Result<f64> {
        match bid {
            0 => Ok(0.0),
            b if b <= self.bids() => Ok(self.values[b - 1]),
            b => Err(domain(format!("bid {b} outside 0..={}", self.bids()))),
        }
    }

    /// Cost at an integer bid, `0` included.
    pub fn cost_at(&self, bid: usize) -> Result<f64> {
        match bid {
            0 => Ok(0.0),
            b if b <= self.bids() => Ok(self.costs[b - 1]),
            b => Err(domain(format!("bid {b} outside 0..={}", self.bids()))),
        }
    }

    /// Cost per unit of value for the step from `bid - 1` to `bid`.
    pub fn marginal_cost(&self, bid: usize) -> Result<f64> {
        if bid == 0 || bid > self.bids() {
            return Err(domain(format!("marginal cost undefined at bid {bid} (valid: 1..={})", self.bids())));
        }
        Ok(self.marginals[bid - 1])
    }

    /// Marginal cost at a fractional bid: the step `ceil(bid)` it lies in.
    pub fn marginal_cost_fractional(&self, bid: f64) -> Result<f64> {
        if !(bid > 0.0 && bid <= self.bids() as f64) {
            return Err(domain(format!("fractional marginal cost undefined at bid {bid}")));
        }
        self.marginal_cost(bid.ceil() as usize)
    }

    /// Linearly interpolated `(value, cost)` at a fractional bid in `[0, n]`.
    pub fn interpolate(&self, bid: f64) -> Result<(f64, f64)> {
        let n = self.bids() as f64;
        if !(0.0..=n).contains(&bid) {
            return Err(domain(format!("bid {bid} outside [0, {n}]")));
        }
        let lo = bid.floor();
        let frac = bid - lo;
        let lo = lo as usize;
        let (v0, c0) = (self.value_at(lo)?, self.cost_at(lo)?);
        if frac == 0.0 {
            return Ok((v0, c0));
        }
        let (v1, c1) = (self.value_at(lo + 1)?, self.cost_at(lo + 1)?);
        Ok(((1.0 - frac) * v0 + frac * v1, (1.0 - frac) * c0 + frac * c1))
    }

    /// Slopes `(dv/dbid, dc/dbid)` of the segment `(seg - 1, seg)`, `seg` in `1..=n`.
    pub fn segment_slopes(&self, seg: usize) -> Result<(f64, f64)> {
        if seg == 0 || seg > self.bids() {
            return Err(domain(format!("segment {seg} outside 1..={}", self.bids())));
        }
        Ok((self.value_at(seg)? - self.value_at(seg - 1)?, self.cost_at(seg)? - self.cost_at(seg - 1)?))
    }
}

/// The whole problem: landscapes sharing one bid count, a budget and a target ROS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct Instance {
    platforms: Vec<PlatformLandscape>,
    budget: f64,
    target_ros: f64,
}

#[derive(Serialize, Deserialize)]
struct RawInstance {
    budget: f64,
    target_ros: f64,
    platforms: Vec<PlatformLandscape>,
}

impl TryFrom<RawInstance> for Instance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        Instance::new(raw.platforms, raw.budget, raw.target_ros)
    }
}

impl From<Instance> for RawInstance {
    fn from(i: Instance) -> Self {
        RawInstance { budget: i.budget, target_ros: i.target_ros, platforms: i.platforms }
    }
}

impl Instance {
    pub fn new(platforms: Vec<PlatformLandscape>, budget: f64, target_ros: f64) -> Result<Self> {
        let first = platforms.first().ok_or_else(|| invalid("instance needs at least one platform"))?;
        let n = first.bids();
        if let Some((j, p)) = platforms.iter().enumerate().find(|(_, p)| p.bids() != n) {
            return Err(invalid(format!("platform {j} has {} bids, expected {n}", p.bids())));
        }
        if !(budget.is_finite() && budget >= 0.0) {
            return Err(invalid(format!("budget must be finite and non-negative, got {budget}")));
        }
        if !(target_ros.is_finite() && target_ros > 0.0) {
            return Err(invalid(format!("target ROS must be finite and positive, got {target_ros}")));
        }
        Ok(Self { platforms, budget, target_ros })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn platforms(&self) -> &[PlatformLandscape] {
        &self.platforms
    }

    pub fn platform(&self, j: usize) -> Result<&PlatformLandscape> {
        self.platforms.get(j).ok_or_else(|| domain(format!("platform {j} out of range (m = {})", self.platforms.len())))
    }

    /// Number of platforms `m`.
    pub fn num_platforms(&self) -> usize {
        self.platforms.len()
    }

    /// Shared number of bid indices `n`.
    pub fn bids(&self) -> usize {
        self.platforms[0].bids()
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn target_ros(&self) -> f64 {
        self.target_ros
    }

    pub fn is_strict(&self) -> bool {
        self.platforms.iter().all(PlatformLandscape::is_strict)
    }

    /// Total `(value, cost)` of a strategy.
    pub fn evaluate(&self, strategy: &BidVector) -> Result<(f64, f64)> {
        self.check_len(strategy)?;
        let mut total = (0.0, 0.0);
        for (p, &b) in self.platforms.iter().zip(strategy.as_slice()) {
            let (v, c) = p.interpolate(b)?;
            total.0 += v;
            total.1 += c;
        }
        Ok(total)
    }

    /// Both the ROS and budget constraints hold (within [`FEASIBILITY_TOL`]).
    pub fn feasible(&self, strategy: &BidVector) -> Result<bool> {
        let (value, cost) = self.evaluate(strategy)?;
        Ok(self.feasible_totals(value, cost))
    }

    pub fn feasible_totals(&self, value: f64, cost: f64) -> bool {
        cost <= self.target_ros * value + FEASIBILITY_TOL && cost <= self.budget + FEASIBILITY_TOL
    }

    pub(crate) fn check_len(&self, strategy: &BidVector) -> Result<()> {
        if strategy.len() != self.num_platforms() {
            return Err(domain(format!(
                "strategy has {} entries, instance has {} platforms",
                strategy.len(),
                self.num_platforms()
            )));
        }
        Ok(())
    }
}

/// A fractional bid per platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BidVector(Vec<f64>);

impl BidVector {
    pub fn new(bids: Vec<f64>) -> Self {
        Self(bids)
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![0.0; m])
    }

    pub fn from_integral(bids: &[usize]) -> Self {
        Self(bids.iter().map(|&b| b as f64).collect())
    }

    /// Checks length and the `[0, n]` box.
    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        if self.0.len() != m {
            return Err(domain(format!("expected {m} bids, got {}", self.0.len())));
        }
        if let Some(b) = self.0.iter().find(|b| !(0.0..=n as f64).contains(*b)) {
            return Err(domain(format!("bid {b} outside [0, {n}]")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Componentwise floor as integer bids.
    pub fn floor(&self) -> Vec<usize> {
        self.0.iter().map(|b| b.max(0.0).floor() as usize).collect()
    }

    /// Largest componentwise absolute difference.
    pub fn max_abs_diff(&self, other: &BidVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

impl From<Vec<f64>> for BidVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}
