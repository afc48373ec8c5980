//! Property tests for the regime classifier and the 2-D tail predictions.

use proptest::prelude::*;
use potentia::asymptotics::{
    classify_regime, predict_2d_product, predict_comonotone, predict_potential,
    predict_prop_reinsurance, strong_subexp_check, ComonotoneCase, ProductCase, Regime,
    RegimeClass, RegimeProbe,
};
use potentia::heavytail::{ClaimModel, TailModel};
use potentia::simulator::PayoffFn;

fn pareto11() -> TailModel {
    TailModel::pareto(1.0, 1.0, 1.0).unwrap()
}

fn classify_scaled_or_tail(scale: f64) -> RegimeClass {
    let claims = ClaimModel::univariate(pareto11());
    let cm = claims.clone();
    let payoff = PayoffFn::custom(scale, move |x: &[f64]| scale * cm.or_tail(x)).unwrap();
    classify_regime(&payoff, 1.0, &claims, &[1.0], &RegimeProbe::default())
        .unwrap()
        .class
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Scaling the payoff by c scales a finite ratio limit B linearly.
    #[test]
    fn finite_ratio_limit_scales_linearly(c in 0.25f64..8.0, k in 0.5f64..4.0) {
        let b_base = match classify_scaled_or_tail(k) {
            RegimeClass::Finite { b } => b,
            other => panic!("expected Finite, got {other:?}"),
        };
        let b_scaled = match classify_scaled_or_tail(c * k) {
            RegimeClass::Finite { b } => b,
            other => panic!("expected Finite, got {other:?}"),
        };
        prop_assert!((b_scaled - c * b_base).abs() <= 1e-9 * b_scaled.abs().max(1e-300));
    }

    // Zero and Infinite classifications are invariant under positive scaling.
    #[test]
    fn zero_and_infinite_classes_ignore_payoff_scale(c in 0.25f64..8.0) {
        let claims = ClaimModel::univariate(pareto11());

        let grows = PayoffFn::custom(c, move |x: &[f64]| {
            if x.iter().all(|v| *v >= 0.5) { c } else { 0.0 }
        })
        .unwrap();
        let regime =
            classify_regime(&grows, 1.0, &claims, &[1.0], &RegimeProbe::default()).unwrap();
        prop_assert_eq!(regime.class, RegimeClass::Infinite);

        let decays = PayoffFn::custom(c, move |x: &[f64]| c * (-x[0] / 2.0).exp()).unwrap();
        let regime =
            classify_regime(&decays, 1.0, &claims, &[1.0], &RegimeProbe::default()).unwrap();
        prop_assert_eq!(regime.class, RegimeClass::Zero);
    }

    // The evidence ladder is exactly the probe's geometric grid, whatever the
    // geometry, and a claim-tail payoff always classifies as Finite{λ}.
    #[test]
    fn evidence_follows_the_declared_ladder(
        t0 in 1.0f64..50.0,
        factor in 1.5f64..3.0,
        rungs in 6usize..12,
        lambda in 0.5f64..5.0,
    ) {
        let claims = ClaimModel::univariate(pareto11());
        let probe = RegimeProbe { t0, factor, rungs, ..RegimeProbe::default() };
        let regime =
            classify_regime(&PayoffFn::ClaimTail, lambda, &claims, &[1.0], &probe).unwrap();
        prop_assert_eq!(regime.evidence.len(), rungs);
        for (i, &(t, ratio)) in regime.evidence.iter().enumerate() {
            let expected = t0 * factor.powi(i as i32);
            prop_assert!((t - expected).abs() <= 1e-12 * expected);
            prop_assert!((ratio - lambda).abs() <= 1e-12 * lambda);
        }
        match regime.class {
            RegimeClass::Finite { b } => {
                prop_assert!((b - lambda).abs() <= 1e-12 * lambda)
            }
            other => prop_assert!(false, "expected Finite, got {other:?}"),
        }
    }

    // Quantitative predictions carry a strictly positive prefactor.
    #[test]
    fn prediction_prefactor_is_positive(rho in 0.01f64..0.99, b in 0.01f64..100.0) {
        let finite = Regime { class: RegimeClass::Finite { b }, evidence: Vec::new() };
        prop_assert!(predict_potential(&finite, rho).unwrap().prefactor > 0.0);
        let infinite = Regime { class: RegimeClass::Infinite, evidence: Vec::new() };
        prop_assert!(predict_potential(&infinite, rho).unwrap().prefactor > 0.0);
    }

    // Swapping the marginals and mirroring the path mirrors the product case.
    #[test]
    fn product_case_mirrors_under_swap(
        alpha1 in 1.3f64..2.5,
        alpha2 in 0.2f64..1.2,
        square_root_leg in proptest::bool::ANY,
    ) {
        let f1 = TailModel::pareto(1.0, alpha1, 1.0).unwrap();
        let f2 = TailModel::pareto(1.0, alpha2, 1.0).unwrap();
        let probe = RegimeProbe { rungs: 16, ..RegimeProbe::default() };

        if square_root_leg {
            // Path (t, √t): ζ = t^{(1+α₁) − (1+α₂)/2}, exponent ≥ 1.2 with
            // the ranges above, so the second marginal dominates; the swap
            // sees the reciprocal ladder and must pick the first.
            let forward = |t: f64| [t, t.sqrt()];
            let swapped = |t: f64| [t.sqrt(), t];
            let case_f = predict_2d_product(&f1, &f2, &forward, &probe).unwrap().case;
            let case_s = predict_2d_product(&f2, &f1, &swapped, &probe).unwrap().case;
            prop_assert_eq!(case_f, ProductCase::SecondDominates);
            prop_assert_eq!(case_s, ProductCase::FirstDominates);
        } else {
            // Identical marginals on the diagonal: ζ ≡ 1 exactly, Comparable
            // from either side.
            let diag = |t: f64| [t, t];
            let same = TailModel::pareto(1.0, alpha1, 1.0).unwrap();
            let case_f = predict_2d_product(&same, &same, &diag, &probe).unwrap().case;
            let case_s = predict_2d_product(&same, &same, &diag, &probe).unwrap().case;
            prop_assert_eq!(case_f, ProductCase::Comparable);
            prop_assert_eq!(case_s, ProductCase::Comparable);
        }
    }

    // The comonotone piecewise prediction agrees with the exact or-tail of
    // the comonotone claim model at every probed scale, whichever case the
    // ladder selects.
    #[test]
    fn comonotone_prediction_matches_exact_or_tail(
        varrho in 0.1f64..0.9,
        kappa in 0.25f64..4.0,
        t in 8.0f64..4096.0,
    ) {
        let driver = pareto11();
        let path = move |s: f64| [s, kappa * s];
        let pred =
            predict_comonotone(&driver, varrho, &path, &RegimeProbe::default()).unwrap();
        let pair =
            ClaimModel::comonotone_split(driver.clone(), vec![varrho, 1.0 - varrho]).unwrap();
        let x = path(t);
        let exact = pair.or_tail(&x);
        let predicted = pred.or_tail_at(&x);
        prop_assert!(
            (predicted - exact).abs() <= 1e-12 * exact,
            "case {:?}: predicted {} vs exact {}",
            pred.case,
            predicted,
            exact
        );
        // The selected case must match the closed-form ratio test.
        let r = (1.0 - varrho) / (kappa * varrho);
        if (r - 1.0).abs() > 1e-9 {
            let expected = if r < 1.0 {
                ComonotoneCase::FirstBinds
            } else {
                ComonotoneCase::SecondBinds
            };
            prop_assert_eq!(pred.case, expected);
        }
    }

    // Raising both reserves lowers the reinsured first-passage value.
    #[test]
    fn reinsurance_value_monotone_in_reserves(
        a1 in 3.0f64..6.0,
        margin in 0.5f64..1.5,
        beta in 0.3f64..0.7,
        x1 in 0.5f64..5.0,
        gap in 0.5f64..5.0,
        shift in 0.5f64..3.0,
    ) {
        let z = pareto11();
        let a2 = a1 - margin;
        let x2 = x1 + gap;
        let near = predict_prop_reinsurance(&z, a1, a2, 1.0, beta, [x1, x2])
            .unwrap()
            .value;
        let far = predict_prop_reinsurance(&z, a1, a2, 1.0, beta, [x1 + shift, x2 + shift])
            .unwrap()
            .value;
        prop_assert!(near > 0.0 && far > 0.0);
        prop_assert!(far <= near + 1e-9, "value must not grow with reserves: {near} -> {far}");
    }

    // Certificate rows line up one-to-one with the requested probes and are
    // internally consistent.
    #[test]
    fn strong_subexp_rows_align_with_probes(
        start in 20.0f64..100.0,
        step1 in 10.0f64..80.0,
        step2 in 10.0f64..80.0,
    ) {
        let z = pareto11();
        let probes = [start, start + step1, start + step1 + step2];
        let rows = strong_subexp_check(&z, &probes).unwrap();
        prop_assert_eq!(rows.len(), 3);
        let mu = 2.0; // E[Z] for the α = 1, δ = 1, c = 1 power law
        for (row, &b) in rows.iter().zip(&probes) {
            prop_assert_eq!(row.b, b);
            prop_assert!(row.convolution_integral > 0.0);
            let reference = 2.0 * mu * z.tail(b);
            prop_assert!((row.reference - reference).abs() <= 1e-12 * reference);
            prop_assert!(
                (row.ratio - row.convolution_integral / row.reference).abs()
                    <= 1e-12 * row.ratio
            );
        }
    }
}
