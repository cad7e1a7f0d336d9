//! Approximate optimization by centroid cutting planes.
//!
//! The search body starts as the box `[0, n]^m`. Each iteration estimates the
//! body's centroid with a hit-and-run walk and asks the separation oracle
//! about it. Infeasible centroids are cut off with a constraint subgradient;
//! feasible ones are recorded and cut with the objective supergradient so the
//! body keeps only points at least as good to first order. Any cut through the
//! centroid removes between `1/e` and `1 - 1/e` of the volume.
//!
//! Both constraints are convex and the objective is concave only on smooth
//! instances (concave values, convex costs in the bid index).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Error, Result};
use crate::landscape::{BidVector, Instance, FEASIBILITY_TOL};
use crate::oracle::CountingOracle;

/// Closed halfspace `{x : <normal, x - anchor> <= 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    normal: Vec<f64>,
    anchor: Vec<f64>,
    offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, anchor: Vec<f64>) -> Result<Self> {
        if normal.len() != anchor.len() {
            return Err(domain("halfspace normal and anchor differ in dimension"));
        }
        if normal.iter().all(|a| *a == 0.0) || normal.iter().any(|a| !a.is_finite()) {
            return Err(domain("halfspace normal must be finite and nonzero"));
        }
        let offset = dot(&normal, &anchor);
        Ok(Self { normal, anchor, offset })
    }

    /// `{x : <direction, x - anchor> >= 0}` in normalized form.
    pub fn at_least(direction: &[f64], anchor: Vec<f64>) -> Result<Self> {
        Self::new(direction.iter().map(|a| -a).collect(), anchor)
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    /// `<normal, x - anchor>`; non-positive on the kept side.
    pub fn signed_excess(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) - self.offset
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.signed_excess(x) <= 0.0
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The box `[0, upper]^dim` intersected with accumulated cuts, plus a known interior point.
#[derive(Debug, Clone)]
pub struct Polytope {
    upper: f64,
    cuts: Vec<Halfspace>,
    interior: Vec<f64>,
}

impl Polytope {
    pub fn new_box(dim: usize, upper: f64) -> Self {
        Self { upper, cuts: Vec::new(), interior: vec![upper / 2.0; dim] }
    }

    /// A box with cuts; `interior` must lie strictly inside all of them.
    pub fn with_cuts(dim: usize, upper: f64, cuts: Vec<Halfspace>, interior: Vec<f64>) -> Result<Self> {
        if interior.len() != dim || cuts.iter().any(|h| h.normal.len() != dim) {
            return Err(domain("polytope dimension mismatch"));
        }
        let p = Self { upper, cuts, interior };
        if !p.strictly_contains(&p.interior) {
            return Err(Error::DegenerateBody("supplied interior point is not strictly inside".into()));
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.interior.len()
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn cuts(&self) -> &[Halfspace] {
        &self.cuts
    }

    pub fn interior(&self) -> &[f64] {
        &self.interior
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().all(|&c| (0.0..=self.upper).contains(&c)) && self.cuts.iter().all(|h| h.contains(x))
    }

    fn strictly_contains(&self, x: &[f64]) -> bool {
        x.iter().all(|&c| c > 0.0 && c < self.upper) && self.cuts.iter().all(|h| h.signed_excess(x) < 0.0)
    }

    /// Appends a cut. The interior point moves to the mean of those `witnesses`
    /// strictly inside the new body.
    pub fn cut(&mut self, h: Halfspace, witnesses: &[Vec<f64>]) -> Result<()> {
        if h.normal.len() != self.dim() {
            return Err(domain("cut dimension mismatch"));
        }
        self.cuts.push(h);
        let h = self.cuts.last().expect("just pushed");
        let kept: Vec<&Vec<f64>> = witnesses.iter().filter(|w| h.signed_excess(w) < 0.0).collect();
        if !kept.is_empty() {
            let mut mean = vec![0.0; self.dim()];
            for w in &kept {
                for (m, x) in mean.iter_mut().zip(w.iter()) {
                    *m += x;
                }
            }
            mean.iter_mut().for_each(|m| *m /= kept.len() as f64);
            if self.strictly_contains(&mean) {
                self.interior = mean;
                return Ok(());
            }
        }
        if self.strictly_contains(&self.interior) {
            return Ok(());
        }
        Err(Error::DegenerateBody(format!("no interior point left after {} cuts", self.cuts.len())))
    }

    /// Parameter interval `[t0, t1]` of the line `x + t d` inside the body.
    fn chord(&self, x: &[f64], d: &[f64]) -> (f64, f64) {
        let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
        let mut clip = |rate: f64, room: f64| {
            // rate * t <= room
            if rate > 0.0 {
                t1 = t1.min(room / rate);
            } else if rate < 0.0 {
                t0 = t0.max(room / rate);
            }
        };
        for (&xi, &di) in x.iter().zip(d) {
            clip(di, self.upper - xi);
            clip(-di, xi);
        }
        for h in &self.cuts {
            clip(dot(&h.normal, d), -h.signed_excess(x));
        }
        (t0, t1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerConfig {
    /// Retained samples averaged into the estimate.
    pub samples: usize,
    /// Walk steps discarded before retention starts.
    pub burn_in: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { samples: 512, burn_in: 256 }
    }
}

#[derive(Debug, Clone)]
pub struct CentroidEstimate {
    pub point: Vec<f64>,
    pub samples_used: usize,
    /// Retained walk positions; the next interior point is drawn from these.
    pub samples: Vec<Vec<f64>>,
}

/// Mean of a hit-and-run walk started at the body's interior point.
pub fn estimate_centroid(polytope: &Polytope, config: SamplerConfig, rng: &mut impl Rng) -> Result<CentroidEstimate> {
    let dim = polytope.dim();
    let mut x = polytope.interior.clone();
    let mut d = vec![0.0; dim];
    let mut samples = Vec::with_capacity(config.samples);
    for step in 0..config.burn_in + config.samples {
        random_direction(rng, &mut d);
        let (t0, t1) = polytope.chord(&x, &d);
        if t0 >= t1 || !t0.is_finite() || !t1.is_finite() {
            return Err(Error::DegenerateBody(format!("empty chord at walk step {step}")));
        }
        let t = rng.gen_range(t0..t1);
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += t * di;
        }
        if step >= config.burn_in {
            samples.push(x.clone());
        }
    }
    let mut point = vec![0.0; dim];
    for s in &samples {
        for (p, v) in point.iter_mut().zip(s) {
            *p += v;
        }
    }
    let count = samples.len().max(1) as f64;
    point.iter_mut().for_each(|p| *p /= count);
    Ok(CentroidEstimate { point, samples_used: samples.len(), samples })
}

fn random_direction(rng: &mut impl Rng, d: &mut [f64]) {
    loop {
        // Box-Muller pairs give isotropic Gaussian directions.
        for chunk in d.chunks_mut(2) {
            let u1: f64 = 1.0 - rng.gen::<f64>();
            let u2: f64 = rng.gen();
            let r = (-2.0 * u1.ln()).sqrt();
            let th = std::f64::consts::TAU * u2;
            chunk[0] = r * th.cos();
            if chunk.len() > 1 {
                chunk[1] = r * th.sin();
            }
        }
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            d.iter_mut().for_each(|v| *v /= norm);
            return;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Separation {
    Feasible { value: f64, cost: f64 },
    Violated(Halfspace),
}

/// Per-coordinate interpolation data gathered through queries.
struct Probe {
    value: f64,
    cost: f64,
    /// `(dv, dc)` slopes of the segment used for subgradients.
    slopes: Vec<(f64, f64)>,
}

fn probe(oracle: &mut CountingOracle<'_>, point: &[f64], right_at_integers: bool) -> Result<Probe> {
    let n = oracle.bids();
    if point.len() != oracle.num_platforms() {
        return Err(domain("point dimension differs from platform count"));
    }
    let (mut value, mut cost) = (0.0, 0.0);
    let mut slopes = Vec::with_capacity(point.len());
    for (j, &x) in point.iter().enumerate() {
        if !(0.0..=n as f64).contains(&x) {
            return Err(domain(format!("coordinate {x} outside [0, {n}]")));
        }
        let lo = x.floor() as usize;
        let frac = x - lo as f64;
        let a = oracle.query(j, lo)?;
        let (v, c) = if frac > 0.0 {
            let b = oracle.query(j, lo + 1)?;
            ((1.0 - frac) * a.value + frac * b.value, (1.0 - frac) * a.cost + frac * b.cost)
        } else {
            (a.value, a.cost)
        };
        value += v;
        cost += c;

        let seg = if frac > 0.0 || right_at_integers { lo + 1 } else { lo }.clamp(1, n);
        let s0 = oracle.query(j, seg - 1)?;
        let s1 = oracle.query(j, seg)?;
        slopes.push((s1.value - s0.value, s1.cost - s0.cost));
    }
    Ok(Probe { value, cost, slopes })
}

/// Certifies feasibility of `point` or returns a cut through it containing the feasible set.
///
/// Infeasible points get the subgradient cut of the more violated constraint,
/// `cost - T * value` (ROS) or `cost - B` (budget).
pub fn separation_oracle(oracle: &mut CountingOracle<'_>, point: &[f64]) -> Result<Separation> {
    let p = probe(oracle, point, false)?;
    let t = oracle.target_ros();
    let ros_excess = p.cost - t * p.value;
    let budget_excess = p.cost - oracle.budget();
    if ros_excess <= FEASIBILITY_TOL && budget_excess <= FEASIBILITY_TOL {
        return Ok(Separation::Feasible { value: p.value, cost: p.cost });
    }
    let normal: Vec<f64> = if ros_excess >= budget_excess {
        p.slopes.iter().map(|(dv, dc)| dc - t * dv).collect()
    } else {
        p.slopes.iter().map(|(_, dc)| *dc).collect()
    };
    Ok(Separation::Violated(Halfspace::new(normal, point.to_vec())?))
}

/// Objective supergradient: right-segment value slopes at integer coordinates.
pub fn value_gradient(oracle: &mut CountingOracle<'_>, point: &[f64]) -> Result<Vec<f64>> {
    Ok(probe(oracle, point, true)?.slopes.into_iter().map(|(dv, _)| dv).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CentroidConfig {
    pub iterations: usize,
    pub sampler: SamplerConfig,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepKind {
    Feasible { value: f64, gradient: Vec<f64> },
    Separated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentroidStep {
    pub centroid: Vec<f64>,
    pub kind: StepKind,
    pub cut: Halfspace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentroidTrace {
    pub best: BidVector,
    pub best_value: f64,
    pub steps: Vec<CentroidStep>,
    /// Set when the walk lost the body's interior and the run stopped early.
    pub degenerate: bool,
}

/// Best feasible centroid found in `config.iterations` cutting-plane steps (zero vector if none).
pub fn centroid_method(oracle: &mut CountingOracle<'_>, config: &CentroidConfig) -> Result<BidVector> {
    Ok(centroid_method_traced(oracle, config)?.best)
}

pub fn centroid_method_traced(oracle: &mut CountingOracle<'_>, config: &CentroidConfig) -> Result<CentroidTrace> {
    let (m, n) = (oracle.num_platforms(), oracle.bids());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut body = Polytope::new_box(m, n as f64);
    let mut trace = CentroidTrace { best: BidVector::zeros(m), best_value: 0.0, steps: Vec::new(), degenerate: false };

    for _ in 0..config.iterations {
        let est = match estimate_centroid(&body, config.sampler, &mut rng) {
            Ok(e) => e,
            Err(Error::DegenerateBody(msg)) => {
                log::debug!("centroid method stopping early: {msg}");
                trace.degenerate = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let c = est.point.clone();
        let (cut, kind) = match separation_oracle(oracle, &c)? {
            Separation::Violated(h) => (h, StepKind::Separated),
            Separation::Feasible { value, .. } => {
                if value > trace.best_value {
                    trace.best_value = value;
                    trace.best = BidVector::new(c.clone());
                }
                let gradient = value_gradient(oracle, &c)?;
                (Halfspace::at_least(&gradient, c.clone())?, StepKind::Feasible { value, gradient })
            }
        };
        trace.steps.push(CentroidStep { centroid: c, kind, cut: cut.clone() });
        if let Err(e) = body.cut(cut, &est.samples) {
            log::debug!("centroid method stopping early: {e}");
            trace.degenerate = true;
            break;
        }
    }
    Ok(trace)
}

/// `ceil(3 m ln(4 G r / (gamma eps)))`, at least 1.
pub fn suggested_iterations(m: usize, gradient_bound: f64, diameter: f64, gamma: f64, eps: f64) -> usize {
    let arg = 4.0 * gradient_bound * diameter / (gamma * eps);
    (3.0 * m as f64 * arg.ln().max(0.0)).ceil().max(1.0) as usize
}

/// Largest objective gradient norm over the box: first-segment slopes on concave values.
pub fn gradient_bound(instance: &Instance) -> f64 {
    instance
        .platforms()
        .iter()
        .map(|p| (1..=p.bids()).map(|s| p.segment_slopes(s).unwrap().0).fold(0.0, f64::max).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Diameter bound `sqrt(m) * n` of the box.
pub fn diameter_bound(instance: &Instance) -> f64 {
    (instance.num_platforms() as f64).sqrt() * instance.bids() as f64
}

/// Fraction of uniform box samples that are feasible.
pub fn feasible_volume_fraction(instance: &Instance, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = instance.bids() as f64;
    let m = instance.num_platforms();
    let hits = (0..samples)
        .filter(|_| {
            let x = BidVector::new((0..m).map(|_| rng.gen_range(0.0..=n)).collect());
            instance.feasible(&x).unwrap()
        })
        .count();
    hits as f64 / samples.max(1) as f64
}
