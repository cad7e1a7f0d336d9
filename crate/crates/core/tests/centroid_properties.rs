use proptest::prelude::*;

use multibid_core::centroid::{
    centroid_method_traced, separation_oracle, CentroidConfig, SamplerConfig, Separation, StepKind,
};
use multibid_core::harness::generate::{generate, GenConfig, Mode, Style};
use multibid_core::oracle::CountingOracle;
use multibid_core::reference::solve_reference;
use multibid_core::{BidVector, Instance};

fn smooth_instance() -> impl Strategy<Value = Instance> {
    (2usize..=3, 2usize..=8, any::<u64>(), any::<bool>()).prop_map(|(m, n, seed, ros)| {
        let (b, r) = if ros { (Style::Slack, Style::Binding) } else { (Style::Binding, Style::Slack) };
        generate(&GenConfig::new(m, n, seed).mode(Mode::Smooth).styles(b, r)).unwrap()
    })
}

/// Feasible points of the grid `[0, n]^m` at step `1/4`.
fn feasible_grid(inst: &Instance) -> Vec<Vec<f64>> {
    let (m, n) = (inst.num_platforms(), inst.bids());
    let points = 4 * n + 1;
    let mut out = Vec::new();
    let mut idx = vec![0usize; m];
    loop {
        let x: Vec<f64> = idx.iter().map(|&i| i as f64 / 4.0).collect();
        if inst.feasible(&BidVector::new(x.clone())).unwrap() {
            out.push(x);
        }
        let mut j = 0;
        while j < m {
            idx[j] += 1;
            if idx[j] < points {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == m {
            return out;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn separating_cuts_keep_every_feasible_grid_point(inst in smooth_instance(), probes in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 3), 8)) {
        let (m, n) = (inst.num_platforms(), inst.bids() as f64);
        let grid = feasible_grid(&inst);
        let mut o = CountingOracle::new(&inst);
        for p in &probes {
            let x: Vec<f64> = p[..m].iter().map(|u| u * n).collect();
            if let Separation::Violated(h) = separation_oracle(&mut o, &x).unwrap() {
                prop_assert!(h.signed_excess(&x) <= 1e-12);
                for y in &grid {
                    prop_assert!(h.signed_excess(y) <= 1e-9, "cut at {:?} drops feasible {:?}", x, y);
                }
            }
        }
    }

    #[test]
    fn objective_cuts_keep_the_optimum_and_body_shrinks(inst in smooth_instance(), seed in any::<u64>()) {
        let opt = solve_reference(&inst).optimum;
        let config = CentroidConfig { iterations: 24, sampler: SamplerConfig { samples: 128, burn_in: 64 }, seed };
        let mut o = CountingOracle::new(&inst);
        let trace = centroid_method_traced(&mut o, &config).unwrap();
        for (t, step) in trace.steps.iter().enumerate() {
            if let StepKind::Feasible { gradient, .. } = &step.kind {
                let gain: f64 = gradient.iter().zip(opt.as_slice()).zip(&step.centroid).map(|((g, y), c)| g * (y - c)).sum();
                prop_assert!(gain >= -1e-6, "step {}: objective cut removes the optimum ({})", t, gain);
            }
            // Each centroid lies in the body left by all earlier cuts.
            for earlier in &trace.steps[..t] {
                prop_assert!(earlier.cut.signed_excess(&step.centroid) <= 1e-9);
            }
        }
        if trace.best_value > 0.0 {
            prop_assert!(inst.feasible(&trace.best).unwrap());
        }
    }
}
