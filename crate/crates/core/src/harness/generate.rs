use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::augmented::Prediction;
use crate::error::{invalid, Result};
use crate::landscape::{BidVector, Instance, PlatformLandscape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Strictly increasing marginal costs.
    Strict,
    /// Strictly concave values and strictly convex costs (hence strict marginals too).
    Smooth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    /// The constraint is set far out of reach.
    Slack,
    /// The constraint is set to bite partway through the water-filling order.
    Binding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenConfig {
    pub platforms: usize,
    pub bids: usize,
    pub seed: u64,
    pub mode: Mode,
    pub budget_style: Style,
    pub ros_style: Style,
}

impl GenConfig {
    pub fn new(platforms: usize, bids: usize, seed: u64) -> Self {
        Self { platforms, bids, seed, mode: Mode::Strict, budget_style: Style::Slack, ros_style: Style::Binding }
    }

    pub fn mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn styles(mut self, budget: Style, ros: Style) -> Self {
        self.budget_style = budget;
        self.ros_style = ros;
        self
    }
}

fn strict_landscape(rng: &mut impl Rng, n: usize) -> PlatformLandscape {
    let start: f64 = rng.gen_range(0.1..1.0);
    let step = rng.gen_range(1.0..4.0) / n as f64;
    let mut mc = start;
    let (mut v, mut c) = (0.0, 0.0);
    let mut values = Vec::with_capacity(n);
    let mut costs = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            mc += step * rng.gen_range(0.2..1.8);
        }
        let dv: f64 = rng.gen_range(0.5..1.5);
        v += dv;
        c += mc * dv;
        values.push(v);
        costs.push(c);
    }
    PlatformLandscape::new_strict(values, costs).expect("generator emits strict landscapes")
}

fn smooth_landscape(rng: &mut impl Rng, n: usize) -> PlatformLandscape {
    let scale = (16.0 / n as f64).min(1.0);
    let mut dv: f64 = rng.gen_range(1.0..2.0);
    let mut dc: f64 = dv * rng.gen_range(0.1..0.5);
    let (mut v, mut c) = (0.0, 0.0);
    let mut values = Vec::with_capacity(n);
    let mut costs = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            dv *= 1.0 - scale * rng.gen_range(0.01..0.08);
            dc *= 1.0 + scale * rng.gen_range(0.02..0.2);
        }
        v += dv;
        c += dc;
        values.push(v);
        costs.push(c);
    }
    PlatformLandscape::new_strict(values, costs).expect("generator emits strict landscapes")
}

/// A point partway along the unconstrained water-filling walk: `(value, cost)`.
fn walk_point(rng: &mut impl Rng, platforms: &[PlatformLandscape]) -> (f64, f64) {
    let mut steps: Vec<(f64, f64, f64)> = platforms
        .iter()
        .flat_map(|p| {
            (1..=p.bids()).map(move |b| {
                let (dv, dc) = p.segment_slopes(b).unwrap();
                (p.marginal_cost(b).unwrap(), dv, dc)
            })
        })
        .collect();
    steps.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total = steps.len();
    let lo = (total / 4).max(1).min(total - 1);
    let hi = (3 * total / 4).clamp(lo, total - 1);
    let stop = rng.gen_range(lo..=hi);
    let frac = rng.gen_range(0.1..0.9);
    let (mut v, mut c) = (0.0, 0.0);
    for &(_, dv, dc) in &steps[..stop] {
        v += dv;
        c += dc;
    }
    let (_, dv, dc) = steps[stop];
    (v + frac * dv, c + frac * dc)
}

/// Deterministic random instance for `config`.
///
/// With one constraint binding and the other slack, the binding one is what
/// stops the optimum. With both binding, whichever bites first does.
pub fn generate(config: &GenConfig) -> Result<Instance> {
    if config.platforms == 0 || config.bids == 0 {
        return Err(invalid("generator needs at least one platform and one bid"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.bids;
    let platforms: Vec<PlatformLandscape> = (0..config.platforms)
        .map(|_| match config.mode {
            Mode::Strict => strict_landscape(&mut rng, n),
            Mode::Smooth => smooth_landscape(&mut rng, n),
        })
        .collect();

    let max_mc = platforms.iter().map(|p| p.marginal_cost(n).unwrap()).fold(0.0, f64::max);
    let top_cost: f64 = platforms.iter().map(|p| p.cost_at(n).unwrap()).sum();

    let target_ros = match config.ros_style {
        Style::Slack => 2.0 * max_mc,
        Style::Binding if config.platforms * n == 1 => platforms[0].marginal_cost(1).unwrap() * rng.gen_range(0.2..0.8),
        Style::Binding => {
            let (v, c) = walk_point(&mut rng, &platforms);
            c / v
        }
    };
    let budget = match config.budget_style {
        Style::Slack => 2.0 * top_cost + 1.0,
        Style::Binding if config.platforms * n == 1 => top_cost * rng.gen_range(0.2..0.8),
        Style::Binding => walk_point(&mut rng, &platforms).1,
    };
    Instance::new(platforms, budget, target_ros)
}

/// Perturbs `optimum` by independent offsets uniform in `[-eta, eta]`, clamped to `[0, n]`.
pub fn perturbed_prediction(optimum: &BidVector, eta: f64, n: usize, seed: u64) -> Prediction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bids = optimum
        .as_slice()
        .iter()
        .map(|&b| {
            let offset = if eta > 0.0 { rng.gen_range(-eta..=eta) } else { 0.0 };
            (b + offset).clamp(0.0, n as f64)
        })
        .collect();
    Prediction::new(BidVector::new(bids))
}
