//! Ground-truth solver with unrestricted landscape access.
//!
//! Sorts every marginal cost, sweeps the threshold family `mu_of_k` for the
//! largest feasible threshold, then water-fills one unit step at a time in
//! ascending marginal-cost order until a constraint is exactly tight. It
//! never goes through the query oracle and exists to check the search
//! algorithms.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::landscape::{BidVector, Instance};

/// One unit step: raising `platform` from `bid - 1` to `bid` costs `mc` per unit of value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalItem {
    pub platform: usize,
    pub bid: usize,
    pub mc: f64,
}

/// Which constraint stops the water-filling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Binding {
    #[serde(rename = "ROS")]
    Ros,
    Budget,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSolution {
    /// Fractional optimum.
    pub optimum: BidVector,
    /// Largest feasible member of the threshold family.
    pub almost_optimal: Vec<usize>,
    /// Threshold producing `almost_optimal`; `0` when no marginal is affordable.
    pub k_star: f64,
    pub value: f64,
    pub cost: f64,
    pub binding: Binding,
}

fn by_mc_then_index(a: &MarginalItem, b: &MarginalItem) -> Ordering {
    a.mc.total_cmp(&b.mc).then(a.platform.cmp(&b.platform)).then(a.bid.cmp(&b.bid))
}

/// All `m * n` marginal items, ascending by `(mc, platform, bid)`.
pub fn marginal_items(instance: &Instance) -> Vec<MarginalItem> {
    let mut items: Vec<MarginalItem> = instance
        .platforms()
        .iter()
        .enumerate()
        .flat_map(|(platform, p)| {
            (1..=p.bids()).map(move |bid| MarginalItem {
                platform,
                bid,
                mc: p.marginal_cost(bid).expect("bid in range"),
            })
        })
        .collect();
    items.sort_by(by_mc_then_index);
    items
}

/// Per platform, the largest bid whose marginal cost is at most `k` (0 if none).
pub fn mu_of_k(instance: &Instance, k: f64) -> Vec<usize> {
    instance
        .platforms()
        .iter()
        .map(|p| (1..=p.bids()).filter(|&b| p.marginal_cost(b).expect("bid in range") <= k).max().unwrap_or(0))
        .collect()
}

/// Feasibility of `mu_of_k` at every candidate threshold, in ascending order.
pub fn feasibility_threshold_scan(instance: &Instance) -> Vec<(f64, bool)> {
    marginal_items(instance)
        .into_iter()
        .map(|item| {
            let mu = BidVector::from_integral(&mu_of_k(instance, item.mc));
            (item.mc, instance.feasible(&mu).expect("strategy sized to instance"))
        })
        .collect()
}

pub fn solve_reference(instance: &Instance) -> ReferenceSolution {
    let scan = feasibility_threshold_scan(instance);
    let k_star = scan.iter().rev().find(|(_, ok)| *ok).map_or(0.0, |(k, _)| *k);
    let almost_optimal = mu_of_k(instance, k_star);

    let mut bids: Vec<f64> = almost_optimal.iter().map(|&b| b as f64).collect();
    let (mut value, mut cost) = instance.evaluate(&BidVector::new(bids.clone())).expect("strategy sized to instance");
    let t = instance.target_ros();
    let budget = instance.budget();
    let mut binding = Binding::None;

    let remaining = marginal_items(instance).into_iter().filter(|it| it.bid > almost_optimal[it.platform]);
    for item in remaining {
        let p = &instance.platforms()[item.platform];
        let dv = p.value_at(item.bid).unwrap() - p.value_at(item.bid - 1).unwrap();
        let dc = p.cost_at(item.bid).unwrap() - p.cost_at(item.bid - 1).unwrap();
        if instance.feasible_totals(value + dv, cost + dc) {
            bids[item.platform] = item.bid as f64;
            value += dv;
            cost += dc;
            continue;
        }
        // Largest step fraction keeping cost <= T * value and cost <= B.
        let ros_slope = dc - t * dv;
        let x_ros = if ros_slope > 0.0 { (t * value - cost) / ros_slope } else { f64::INFINITY };
        let x_budget = (budget - cost) / dc;
        binding = if x_ros <= x_budget { Binding::Ros } else { Binding::Budget };
        let x = x_ros.min(x_budget).clamp(0.0, 1.0);
        bids[item.platform] = (item.bid - 1) as f64 + x;
        break;
    }

    let optimum = BidVector::new(bids);
    let (value, cost) = instance.evaluate(&optimum).expect("strategy sized to instance");
    ReferenceSolution { optimum, almost_optimal, k_star, value, cost, binding }
}
