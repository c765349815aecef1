use motensor::{
    entry, essential_mo, mo_tensor, moler_factor, moler_matrix, n_tensor, sub_mo_witness_value,
    FamilySpec, DEFAULT_DENSE_BUDGET,
};
use proptest::prelude::*;

const B: u64 = DEFAULT_DENSE_BUDGET;

#[test]
fn rank_one_form_matches_entries() {
    for n in 1..=6 {
        for m in [2, 3, 4, 6] {
            for alpha in [-0.5, 0.0, 0.37, 1.0, 1.1429, 2.0] {
                let spec = FamilySpec::mo(n, m, alpha);
                let ours = mo_tensor(n, m, alpha).unwrap().materialize().unwrap();
                for (idx, v) in ours.iter_sorted() {
                    let one_based: Vec<usize> = idx.iter().map(|i| i + 1).collect();
                    let want = entry(&spec, &one_based).unwrap();
                    assert!((v - want).abs() <= 1e-12, "{spec:?} at {one_based:?}");
                }
                if alpha.fract() == 0.0 {
                    let exact = mo_tensor(n, m, alpha)
                        .unwrap()
                        .materialize_exact(B)
                        .unwrap();
                    assert_eq!(exact, spec.dense_exact(B).unwrap());
                }
            }
        }
    }
}

#[test]
fn moler_factorization_is_exact() {
    for n in 1..=30 {
        let l = moler_factor(n).unwrap();
        assert_eq!(
            &l * l.transpose(),
            moler_matrix(n).unwrap().to_matrix().unwrap()
        );
    }
}

#[test]
fn essential_certificate_is_zero_one() {
    for n in 1..=8 {
        for m in [2, 3, 4, 6] {
            let c = essential_mo(n, m, B).unwrap().certificate;
            assert_eq!(c.terms.len(), 2 * n - 1);
            for t in &c.terms {
                assert!(t.weight == 0.0 || t.weight == 1.0);
                assert!(t.vector.iter().all(|&v| v == 0.0 || v == 1.0));
            }
        }
    }
}

#[test]
fn order_two_members_shift_moler_by_n() {
    for n in 1..=6 {
        let moler = moler_matrix(n)
            .unwrap()
            .to_matrix()
            .unwrap()
            .map(|v| v as f64);
        let nn = n_tensor(n, 2)
            .unwrap()
            .materialize()
            .unwrap()
            .to_matrix()
            .unwrap();
        for alpha in [-1.0, 0.0, 0.5, 1.0, 2.0, 3.25] {
            let mo = mo_tensor(n, 2, alpha)
                .unwrap()
                .materialize()
                .unwrap()
                .to_matrix()
                .unwrap();
            let want = &moler + (2.0 - alpha) * &nn;
            assert!((mo - want).abs().max() <= 1e-12, "n={n} alpha={alpha}");
        }
    }
}

proptest! {
    #[test]
    fn witness_value_is_affine(
        alpha in -1.0f64..=1.0,
        n in prop::sample::select(vec![2usize, 5]),
        m in prop::sample::select(vec![4usize, 6]),
    ) {
        let v = sub_mo_witness_value(n, m, alpha).unwrap();
        prop_assert!((v - (1.0 + 2.0 * alpha)).abs() <= 1e-12);
    }
}
