//! Invariants over random all-positive tables.

use dcopula::bernoulli::{bernoulli_copula, odds_ratio, reconstruct, ExtendedOddsRatio};
use dcopula::dependence::{odds_ratio_matrix, yule_upsilon};
use dcopula::pmf::{JointPmf, MarginPair};
use dcopula::scaling::{
    apply_marginal_distortion, copula_pmf, couple, ipf_fit, ipf_fit_traced, same_nucleus, IpfOptions, SweepOrder,
};
use ndarray::Array2;
use proptest::prelude::*;

fn positive_pmf() -> impl Strategy<Value = JointPmf> {
    (2usize..=6, 2usize..=6).prop_flat_map(|(r, s)| {
        prop::collection::vec(0.02f64..1.0, r * s).prop_map(move |w| {
            JointPmf::from_weights(Array2::from_shape_vec((r, s), w).unwrap()).unwrap()
        })
    })
}

fn factors(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.1f64..10.0, n)
}

fn margins(r: usize, s: usize) -> impl Strategy<Value = MarginPair> {
    (factors(r), factors(s)).prop_map(|(a, b)| MarginPair::normalized(a, b).unwrap())
}

fn pmf_with_targets() -> impl Strategy<Value = (JointPmf, MarginPair)> {
    positive_pmf().prop_flat_map(|p| {
        let (r, s) = p.shape();
        (Just(p), margins(r, s))
    })
}

fn pmf_with_factors() -> impl Strategy<Value = (JointPmf, Vec<f64>, Vec<f64>)> {
    positive_pmf().prop_flat_map(|p| {
        let (r, s) = p.shape();
        (Just(p), factors(r), factors(s))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn distortion_keeps_odds_ratios((p, a, b) in pmf_with_factors()) {
        let q = apply_marginal_distortion(&p, &a, &b).unwrap();
        let (same, waived) = odds_ratio_matrix(&p).approx_eq(&odds_ratio_matrix(&q), 1e-9).unwrap();
        prop_assert!(same);
        prop_assert_eq!(waived, 0);
        prop_assert!(same_nucleus(&p, &q, 1e-9).unwrap());
    }

    #[test]
    fn fitted_margins_hit_targets((p, t) in pmf_with_targets()) {
        let (q, d) = ipf_fit(&p, &t, &IpfOptions::default()).unwrap();
        let dev = q.row_sums().iter().zip(t.rows()).chain(q.col_sums().iter().zip(t.cols()))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        prop_assert!(dev <= 1e-12, "deviation {:e}", dev);
        prop_assert!(d.margin_error <= 1e-12);
        let (same, _) = odds_ratio_matrix(&p).approx_eq(&odds_ratio_matrix(&q), 1e-9).unwrap();
        prop_assert!(same);
    }

    #[test]
    fn copula_is_idempotent(p in positive_pmf()) {
        let opts = IpfOptions::default();
        let (c1, _) = copula_pmf(&p, &opts).unwrap();
        let (c2, _) = copula_pmf(&c1, &opts).unwrap();
        prop_assert!(c1.max_abs_diff(&c2).unwrap() <= 1e-12);
    }

    #[test]
    fn copula_then_couple_round_trips(p in positive_pmf()) {
        let opts = IpfOptions::default();
        let (cop, _) = copula_pmf(&p, &opts).unwrap();
        let (back, _) = couple(&cop, &p.margins(), &opts).unwrap();
        prop_assert!(back.max_abs_diff(&p).unwrap() <= 1e-9);
    }

    #[test]
    fn upsilon_is_bounded(p in positive_pmf()) {
        let (cop, _) = copula_pmf(&p, &IpfOptions::default()).unwrap();
        let u = yule_upsilon(&cop).unwrap();
        prop_assert!(u > -1.0 && u < 1.0);
        let (copt, _) = copula_pmf(&p.transpose(), &IpfOptions::default()).unwrap();
        // two independent fits, each accurate to the margin tolerance
        prop_assert!((yule_upsilon(&copt).unwrap() - u).abs() < 1e-10);
    }

    #[test]
    fn reconstruct_has_requested_odds(lw in -8.0f64..8.0, px in 0.01f64..0.99, py in 0.01f64..0.99) {
        let w = ExtendedOddsRatio::new(lw.exp()).unwrap();
        let p = reconstruct(w, px, py).unwrap();
        prop_assert!((p.row_sums()[1] - px).abs() < 1e-12);
        prop_assert!((p.col_sums()[1] - py).abs() < 1e-12);
        let got = odds_ratio(&p).unwrap().value();
        prop_assert!((got / w.value() - 1.0).abs() < 1e-8, "{} vs {}", got, w.value());
        let (cop, _) = copula_pmf(&p, &IpfOptions::default()).unwrap();
        prop_assert!(cop.max_abs_diff(&bernoulli_copula(w)).unwrap() < 1e-10);
    }

    #[test]
    fn summed_error_never_grows((p, t) in pmf_with_targets()) {
        let (_, _, trace) = ipf_fit_traced(&p, &t, &IpfOptions::default()).unwrap();
        for w in trace.l1.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-15, "{:e} -> {:e}", w[0], w[1]);
        }
    }

    #[test]
    fn sweep_order_does_not_matter((p, t) in pmf_with_targets()) {
        let rows = IpfOptions::default();
        let cols = IpfOptions { order: SweepOrder::ColumnsFirst, ..IpfOptions::default() };
        let (a, _) = ipf_fit(&p, &t, &rows).unwrap();
        let (b, _) = ipf_fit(&p, &t, &cols).unwrap();
        prop_assert!(a.max_abs_diff(&b).unwrap() <= 2.0 * rows.tol);
    }

    #[test]
    fn refitting_takes_one_sweep((p, t) in pmf_with_targets()) {
        let opts = IpfOptions::default();
        let (a, _) = ipf_fit(&p, &t, &opts).unwrap();
        let (b, d) = ipf_fit(&a, &t, &opts).unwrap();
        prop_assert!(d.iterations <= 1);
        prop_assert!(a.max_abs_diff(&b).unwrap() <= opts.tol);
    }

    #[test]
    fn distortions_compose((p, a, b) in pmf_with_factors(), seed in 0.5f64..2.0) {
        let a2: Vec<f64> = a.iter().map(|v| v * seed).collect();
        let b2: Vec<f64> = b.iter().rev().copied().collect();
        let twice = apply_marginal_distortion(&apply_marginal_distortion(&p, &a, &b).unwrap(), &a2, &b2).unwrap();
        let prod_a: Vec<f64> = a.iter().zip(&a2).map(|(x, y)| x * y).collect();
        let prod_b: Vec<f64> = b.iter().zip(&b2).map(|(x, y)| x * y).collect();
        let once = apply_marginal_distortion(&p, &prod_a, &prod_b).unwrap();
        prop_assert!(twice.max_abs_diff(&once).unwrap() <= 1e-14);
    }

    #[test]
    fn independence_couples_to_product(t in (2usize..=6, 2usize..=6).prop_flat_map(|(r, s)| margins(r, s))) {
        let (r, s) = t.shape();
        let (p, _) = couple(&JointPmf::uniform(r, s).unwrap(), &t, &IpfOptions::default()).unwrap();
        prop_assert!(p.max_abs_diff(&JointPmf::independent(&t)).unwrap() <= 1e-12);
    }
}
