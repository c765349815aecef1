use motensor::oracle::{dense_eval, h_eigen_scan_2d, psd_scan, PsdScanOptions, ScanOptions};
use motensor::{kkt_residual, RankOneSum, RankOneTerm};
use proptest::prelude::*;

fn structured(n: usize, m: usize) -> impl Strategy<Value = RankOneSum> {
    let term = (-2.0f64..2.0, prop::collection::vec(-1.5f64..1.5, n))
        .prop_map(|(weight, vector)| RankOneTerm { weight, vector });
    prop::collection::vec(term, 1..=6).prop_map(move |terms| RankOneSum::new(m, n, terms).unwrap())
}

fn nonnegative(n: usize, m: usize) -> impl Strategy<Value = RankOneSum> {
    let term = (0.0f64..2.0, prop::collection::vec(0.0f64..1.5, n))
        .prop_map(|(weight, vector)| RankOneTerm { weight, vector });
    prop::collection::vec(term, 1..=6).prop_map(move |terms| RankOneSum::new(m, n, terms).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn dense_eval_matches_structured(
        (t, x) in (1usize..=5, 2usize..=6).prop_flat_map(|(n, m)| {
            (structured(n, m), prop::collection::vec(-1.0f64..1.0, n))
        })
    ) {
        let d = t.materialize().unwrap();
        let a = dense_eval(&d, &x).unwrap();
        let b = t.eval_poly(&x).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn cp_forms_scan_nonnegative(
        t in (1usize..=4, prop::sample::select(vec![2usize, 4])).prop_flat_map(|(n, m)| nonnegative(n, m))
    ) {
        let r = psd_scan(&t, &PsdScanOptions { samples: 2000, grid: 90, ..PsdScanOptions::default() }).unwrap();
        prop_assert!(r.min_value >= -1e-10);
    }

    #[test]
    fn scanned_pairs_satisfy_kkt(t in prop::sample::select(vec![2usize, 4, 6]).prop_flat_map(|m| structured(2, m))) {
        let report = h_eigen_scan_2d(&t.materialize().unwrap(), &ScanOptions::default()).unwrap();
        for p in &report.pairs {
            prop_assert!(p.kkt_residual <= report.refined_tolerance);
            prop_assert!(kkt_residual(&t, p.lambda, &p.x).unwrap() <= 1e-10 * t.terms().len() as f64 * 4.0);
        }
        prop_assert!(report.pairs.windows(2).all(|w| w[0].lambda <= w[1].lambda));
    }
}
