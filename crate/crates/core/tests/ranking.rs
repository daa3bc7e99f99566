use proptest::prelude::*;

use sp_copula::oracle::order_stats_triple_sample;
use sp_copula::precedence::eta_copula;
use sp_copula::tba::{rank_prospects, Prospect, RowKind};
use sp_copula::{CopulaSpec, Distribution};

#[test]
fn counterexample_prospects_rank_by_joint_law() {
    let triples = order_stats_triple_sample(200_000, 3, &Distribution::standard_uniform());
    let near: Vec<(f64, f64)> = triples.iter().map(|t| (t.0, t.1)).collect();
    let far: Vec<(f64, f64)> = triples.iter().map(|t| (t.0, t.2)).collect();
    let target = Distribution::standard_uniform();
    let table = rank_prospects(
        &target,
        &[Prospect::sampled("X''", far), Prospect::sampled("X'", near)],
        0,
        0,
        1e-9,
    )
    .unwrap();
    assert_eq!(table.rows[0].name, "X'");
    assert_eq!(table.rows[0].eta_or_bound, 1.0);
    assert!((table.rows[1].eta_or_bound - 0.9).abs() < 0.005);
}

fn copula() -> impl Strategy<Value = CopulaSpec> {
    prop_oneof![
        Just(CopulaSpec::Independence),
        Just(CopulaSpec::OrderStatistics),
        (-0.9f64..0.9).prop_map(|r| CopulaSpec::gaussian(r).unwrap()),
        (0.05f64..1.0).prop_map(|g| CopulaSpec::shuffle(g).unwrap()),
        (0.1f64..0.9, 0.1f64..0.9).prop_map(|(a, b)| CopulaSpec::mo_survival(a, b).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn st_ordered_prospects_keep_their_order(c in copula(), m in -1.0f64..1.0, d in 0.0f64..1.5, seed in 0u64..1000) {
        let target = Distribution::normal(0.0, 1.0).unwrap();
        let lo = Distribution::normal(m, 1.0).unwrap();
        let hi = Distribution::normal(m + d, 1.0).unwrap();
        let t = rank_prospects(&target, &[Prospect::copula("lo", lo, c.clone()), Prospect::copula("hi", hi, c)], 50_000, seed, 1e-8).unwrap();
        let get = |n: &str| t.rows.iter().find(|r| r.name == n).unwrap().clone();
        let (a, b) = (get("lo"), get("hi"));
        prop_assert!(a.eta_or_bound <= b.eta_or_bound + 3.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt() + 1e-7);
    }

    #[test]
    fn bound_rows_never_exceed_the_matching_exact_row(c in copula(), seed in 0u64..1000) {
        let target = Distribution::normal(0.0, 1.0).unwrap();
        let gamma = eta_copula(&c).0;
        let t = rank_prospects(
            &target,
            &[Prospect::copula("exact", target.clone(), c), Prospect::gamma_bound("bound", target.clone(), gamma)],
            50_000,
            seed,
            1e-8,
        )
        .unwrap();
        let exact = t.rows.iter().find(|r| r.kind != RowKind::LowerBound).unwrap();
        let bound = t.rows.iter().find(|r| r.kind == RowKind::LowerBound).unwrap();
        prop_assert!(bound.eta_or_bound <= exact.eta_or_bound + 3.0 * exact.stderr + 1e-9);
    }
}
