use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sp_copula::copula::{copula_sample, Copula};
use sp_copula::dist::check_order;
use sp_copula::oracle::{grid_eta_oracle, verify_all};
use sp_copula::precedence::{eta_best, eta_copula, eta_mc, eta_quadrature};
use sp_copula::{CopulaSpec, Distribution, Relation};

fn families() -> Vec<CopulaSpec> {
    vec![
        CopulaSpec::Independence,
        CopulaSpec::Comonotone,
        CopulaSpec::Countermonotone,
        CopulaSpec::shuffle(0.3).unwrap(),
        CopulaSpec::gaussian(0.6).unwrap(),
        CopulaSpec::gaussian(-0.4).unwrap(),
        CopulaSpec::mo_survival(0.4, 0.2).unwrap(),
        CopulaSpec::mo_connecting(0.3, 0.7).unwrap(),
        CopulaSpec::OrderStatistics,
        CopulaSpec::OrderStatistics.survival_of(),
    ]
}

#[test]
fn empirical_copula_within_dkw_band() {
    let n = 40_000;
    let band = 4.0 / (n as f64).sqrt();
    let grid: Vec<f64> = (1..20).map(|k| k as f64 / 20.0).collect();
    for (k, spec) in families().into_iter().enumerate() {
        let draws = copula_sample(&spec, 900 + k as u64, n);
        let mut worst: f64 = 0.0;
        for &u in &grid {
            for &v in &grid {
                let emp = draws.iter().filter(|s| s.u <= u && s.v <= v).count() as f64 / n as f64;
                worst = worst.max((emp - spec.cdf(u, v)).abs());
            }
        }
        assert!(worst <= band, "{spec}: sup gap {worst} > {band}");
    }
}

#[test]
fn order_hierarchy_over_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let draw = |rng: &mut ChaCha8Rng| -> Distribution {
        match rng.random_range(0..3) {
            0 => Distribution::normal(rng.random_range(-2.0..2.0), rng.random_range(0.3..2.0)).unwrap(),
            1 => Distribution::exponential(rng.random_range(0.2..4.0)).unwrap(),
            _ => {
                let a = rng.random_range(-2.0..2.0);
                Distribution::uniform(a, a + rng.random_range(0.2..3.0)).unwrap()
            }
        }
    };
    let (mut lr, mut hr, mut st) = (0, 0, 0);
    for _ in 0..1000 {
        let (g, h) = (draw(&mut rng), draw(&mut rng));
        let check = |r| check_order(r, &g, &h, 256).unwrap().holds;
        let (l, r, s) = (check(Relation::Lr), check(Relation::Hr), check(Relation::St));
        assert!(!l || r, "lr without hr: {g} vs {h}");
        assert!(!r || s, "hr without st: {g} vs {h}");
        lr += l as usize;
        hr += r as usize;
        st += s as usize;
    }
    assert!(lr > 50 && hr > lr && st > hr, "degenerate sample: lr {lr}, hr {hr}, st {st}");
}

#[test]
fn same_family_orders_match_parameters() {
    let e = |r| Distribution::exponential(r).unwrap();
    for rel in [Relation::St, Relation::Hr, Relation::Lr] {
        assert!(check_order(rel, &e(2.0), &e(1.0), 512).unwrap().holds);
        let bad = check_order(rel, &e(1.0), &e(2.0), 512).unwrap();
        assert!(!bad.holds && bad.confirms_violation(&e(1.0), &e(2.0)));
    }
    // equal means, unequal spreads: no st order in either direction
    let (a, b) = (Distribution::normal(0.0, 1.0).unwrap(), Distribution::normal(0.0, 2.0).unwrap());
    assert!(!check_order(Relation::St, &a, &b, 512).unwrap().holds);
    assert!(!check_order(Relation::St, &b, &a, 512).unwrap().holds);
}

#[test]
fn quadrature_agrees_with_monte_carlo() {
    let g1 = Distribution::normal(0.0, 1.0).unwrap();
    let g2 = Distribution::exponential(1.5).unwrap();
    for (k, spec) in [
        CopulaSpec::OrderStatistics,
        CopulaSpec::gaussian(0.4).unwrap(),
        CopulaSpec::OrderStatistics.transpose(),
    ]
    .into_iter()
    .enumerate()
    {
        let q = eta_quadrature(&spec, &g1, &g2, 1e-9).unwrap();
        let m = eta_mc(&spec, &g1, &g2, 400_000, 40 + k as u64).unwrap();
        assert!((q.eta - m.eta).abs() <= 3.0 * m.stderr_eta + 1e-9, "{spec}: {} vs {}", q.eta, m.eta);
    }
}

#[test]
fn grid_brackets_contain_best_estimates() {
    let g1 = Distribution::normal(0.0, 1.0).unwrap();
    let g2 = Distribution::normal(0.7, 1.3).unwrap();
    for spec in [CopulaSpec::gaussian(0.3).unwrap(), CopulaSpec::OrderStatistics, CopulaSpec::Independence] {
        let r = eta_best(&spec, &g1, &g2, 100_000, 1, 1e-10).unwrap();
        let b = grid_eta_oracle(&spec, &g1, &g2, 256).unwrap();
        assert!(b.contains(r.eta), "{spec}: {} outside {b:?}", r.eta);
        assert!(r.eta >= eta_copula(&spec).0 - 1e-12);
    }
}

#[test]
fn oracle_checks() {
    let checks = verify_all(300_000, 5).unwrap();
    for c in &checks {
        if c.name == "load_sharing.st_excess_in_stderr_units" {
            // the load-sharing survival function lies above e^(-λx) near zero
            assert!(!c.passed, "expected the dominance claim to be refuted");
        } else {
            assert!(c.passed, "{c:?}");
        }
    }
    assert!(checks.len() >= 14);
}

#[test]
fn load_sharing_survival_crosses_exponential_bound() {
    let m = sp_copula::oracle::LoadSharingModel::new(2.0, 2.5).unwrap();
    let gap = |x: f64| m.survival(x) - (-m.lambda() * x).exp();
    assert!(gap(0.5) > 0.0 && gap(1.0) > 0.0);
    let cross = 2.0 * 3f64.ln();
    assert!(gap(cross - 1e-6) > 0.0 && gap(cross + 1e-6) < 0.0);
}
