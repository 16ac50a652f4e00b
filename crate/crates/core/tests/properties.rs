use proptest::prelude::*;

use rulecheck_core::analytics::{
    bin_census, cohen_kappa, cosine, fleiss_kappa, regularized_incomplete_beta, set_overlap, spearman,
    t_two_sided_p, word_overlap, BinSpec, Normalizer, PassThrough, RatingMatrix,
};
use rulecheck_core::ingest::scrub_pii;
use rulecheck_core::{engagement_score, EngagementCounts};

fn pii_text() -> impl Strategy<Value = String> {
    let piece = prop_oneof![
        "[a-z]{1,8}",
        "@[a-z]{1,6}",
        "@[a-z]{1,6}@[a-z]{1,6}\\.[a-z]{2,3}",
        "[a-z.]{1,6}@[a-z]{1,6}\\.[a-z]{2,3}",
        "https?://[a-z]{1,8}\\.[a-z]{2,3}(/[a-z0-9?=&]{0,8})?",
        "www\\.[a-z]{1,8}\\.org",
        "[ \\n\\t.,!?()\\[\\]]{1,3}",
        "\\PC{1,4}",
    ];
    prop::collection::vec(piece, 0..12).prop_map(|v| v.concat())
}

fn matrix(rows: Vec<Vec<u8>>) -> RatingMatrix {
    let raters = rows[0].len();
    RatingMatrix::new(
        (0..rows.len()).map(|i| format!("p{i}")).collect(),
        (0..raters).map(|i| format!("r{i}")).collect(),
        rows.into_iter().map(|r| r.into_iter().map(Some).collect()).collect(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn scrubbing_is_idempotent(text in pii_text()) {
        let once = scrub_pii(&text);
        prop_assert_eq!(scrub_pii(&once), once.clone());
    }
}

proptest! {
    #[test]
    fn kappas_lie_in_range(rows in prop::collection::vec(prop::collection::vec(0u8..6, 6), 2..40)) {
        let m = matrix(rows.clone());
        let k = fleiss_kappa(&m).unwrap();
        prop_assert!((-1.0..=1.0).contains(&k), "{}", k);
        let a: Vec<u8> = rows.iter().map(|r| r[0]).collect();
        let b: Vec<u8> = rows.iter().map(|r| r[1]).collect();
        let c = cohen_kappa(&a, &b).unwrap();
        prop_assert!((-1.0..=1.0).contains(&c), "{}", c);
        prop_assert_eq!(c, cohen_kappa(&b, &a).unwrap());
    }

    #[test]
    fn word_overlap_is_symmetric(a in "[a-e ]{0,30}", b in "[a-e ]{0,30}") {
        let n = Normalizer::new(PassThrough);
        let ab = word_overlap(&a, &b, &n);
        prop_assert_eq!(ab, word_overlap(&b, &a, &n));
        prop_assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn subset_overlap_is_one(a in prop::collection::btree_set(0u8..50, 1..20), extra in prop::collection::btree_set(0u8..50, 0..20)) {
        let b: std::collections::BTreeSet<u8> = a.union(&extra).copied().collect();
        prop_assert_eq!(set_overlap(&a, &b), 1.0);
    }

    #[test]
    fn spearman_ignores_monotone_transforms(pairs in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 5..60)) {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let Ok(base) = spearman(&x, &y) else { return Ok(()); };
        let tx: Vec<f64> = x.iter().map(|v| (v / 10.0).exp()).collect();
        let ty: Vec<f64> = y.iter().map(|v| 3.0 * v - 7.0).collect();
        let moved = spearman(&tx, &ty).unwrap();
        prop_assert!((base.coefficient - moved.coefficient).abs() < 1e-9);
    }

    #[test]
    fn cosine_ignores_positive_scaling(
        v in prop::collection::vec(-10.0f64..10.0, 8),
        w in prop::collection::vec(-10.0f64..10.0, 8),
        s in 0.01f64..100.0,
    ) {
        prop_assume!(v.iter().any(|x| x.abs() > 1e-3) && w.iter().any(|x| x.abs() > 1e-3));
        let scaled: Vec<f64> = v.iter().map(|x| x * s).collect();
        let c = cosine(&v, &w).unwrap();
        prop_assert!((c - cosine(&scaled, &w).unwrap()).abs() < 1e-9);
        prop_assert!((-1.0..=1.0).contains(&c));
    }

    #[test]
    fn bins_partition_the_scale(avgs in prop::collection::vec(0.0f64..=5.0, 0..200)) {
        let spec = BinSpec::default();
        let map = avgs.iter().enumerate().map(|(i, a)| (format!("p{i}"), *a)).collect();
        let census = bin_census(&map, &spec).unwrap();
        prop_assert_eq!(census.counts.iter().sum::<usize>(), avgs.len());
        for a in &avgs {
            let bin = spec.assign(*a).unwrap();
            let edges = spec.edges();
            prop_assert!(*a <= edges[bin] && (*a > edges[bin + 1] || bin == spec.len() - 1));
        }
    }

    #[test]
    fn engagement_is_linear(a in (0u64..1_000_000, 0u64..1_000_000, 0u64..1_000_000), b in (0u64..1_000_000, 0u64..1_000_000, 0u64..1_000_000)) {
        let c = |(replies, reblogs, favorites): (u64, u64, u64)| EngagementCounts { replies, reblogs, favorites };
        let sum = (a.0 + b.0, a.1 + b.1, a.2 + b.2);
        prop_assert_eq!(engagement_score(&c(sum)), engagement_score(&c(a)) + engagement_score(&c(b)));
    }
}

#[test]
fn p_values_match_statrs() {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    for df in [1.0, 3.0, 8.0, 28.0, 198.0, 1000.0] {
        let dist = StudentsT::new(0.0, 1.0, df).unwrap();
        for t in [0.0, 0.3, 1.0, 2.1, 4.7, -3.3] {
            let expected = 2.0 * (1.0 - dist.cdf(f64::abs(t)));
            assert!((t_two_sided_p(t, df) - expected).abs() < 1e-9, "t={t} df={df}");
        }
    }
    for (a, b, x) in [(0.5, 0.5, 0.3), (2.0, 5.0, 0.1), (10.0, 0.5, 0.97), (100.0, 3.0, 0.9)] {
        let expected = statrs::function::beta::beta_reg(a, b, x);
        assert!((regularized_incomplete_beta(a, b, x) - expected).abs() < 1e-10);
    }
}
