use multibid_core::harness::bench::{bench_sweep, write_csv, BenchGrid, BenchRow};
use multibid_core::harness::report::Algorithm;

fn mean_queries(rows: &[BenchRow], n: usize) -> f64 {
    let cell: Vec<&BenchRow> = rows.iter().filter(|r| r.n == n).collect();
    cell.iter().map(|r| r.distinct_queries as f64).sum::<f64>() / cell.len() as f64
}

#[test]
fn n_doubling_grows_no_faster_than_the_log_product() {
    let m = 4.0f64;
    let ns = [8usize, 16, 32, 64, 128, 256];
    let grid = BenchGrid::parse("m=4;n=8,16,32,64,128,256;algo=mom", 40).unwrap();
    let rows = bench_sweep(&grid, 77).unwrap();
    assert!(rows.iter().all(|r| r.matched_reference));
    let f = |n: f64| (2.0 * m * n).log2() * (2.0 * n).log2();
    for w in ns.windows(2) {
        let (a, b) = (w[0], w[1]);
        let growth = mean_queries(&rows, b) / mean_queries(&rows, a);
        let allowed = f(b as f64) / f(a as f64) * 1.25;
        assert!(growth <= allowed, "n {a} -> {b}: queries grew {growth:.3}x, allowed {allowed:.3}x");
    }
}

#[test]
fn exact_rows_always_match_and_bmom_rows_carry_eta() {
    let grid = BenchGrid::parse("m=1,2,5;n=3,17;algo=mom,bmom,reference;eta=0,1.5,40", 4).unwrap();
    let rows = bench_sweep(&grid, 3).unwrap();
    assert_eq!(rows.len(), 3 * 2 * (1 + 3 + 1) * 4);
    for r in &rows {
        assert!(r.matched_reference, "{r:?}");
        assert_eq!(r.eta.is_some(), r.algorithm == Algorithm::Bmom);
        if r.algorithm == Algorithm::Reference {
            assert_eq!(r.distinct_queries, 0);
        }
    }
}

#[test]
fn csv_bytes_depend_only_on_seed() {
    let grid = BenchGrid::parse("m=2,3;n=8,16;algo=mom,bmom,centroid;eta=0,4;mode=smooth", 2).unwrap();
    let csv = |seed| {
        let mut out = Vec::new();
        write_csv(&bench_sweep(&grid, seed).unwrap(), &mut out).unwrap();
        out
    };
    let a = csv(5);
    assert_eq!(a, csv(5));
    assert_ne!(a, csv(6));
}
