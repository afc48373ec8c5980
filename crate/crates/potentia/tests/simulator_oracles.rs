//! Oracle tests for the event-driven Monte Carlo estimators: Poisson event
//! statistics, closed-form Cramér–Lundberg ruin values, exponential-clock
//! potentials with known means, duality with the random-walk maximum,
//! compensation identities, and bit-exact determinism.

use potentia::heavytail::{ClaimModel, TailModel};
use potentia::kernels::{build_kernel, KillingSpec, QuadratureSpec, SmallComponent};
use potentia::renewal::{solve_fixed_point, Grid, RenewalProblem};
use potentia::simulator::{
    drift_only_position, estimate_gerber_shiu, estimate_potential_expkill,
    estimate_quadrant_ruin, estimate_ruin_1d, estimate_ruin_dual, estimate_ruin_ladder,
    sample_skeleton, McOptions, PayoffFn, PenaltyFn, RiskProcessSpec,
};

fn exp_claims() -> ClaimModel {
    ClaimModel::univariate(TailModel::exponential(1.0, 0.0).unwrap())
}

fn pareto_claims() -> ClaimModel {
    ClaimModel::univariate(TailModel::pareto(1.0, 1.0, 1.0).unwrap())
}

fn drift(a: f64) -> SmallComponent {
    SmallComponent::DriftOnly { a: vec![a] }
}

/// Classical 1-D ruin spec: X_t = x + a·t − Σ U_k, ruin at first passage
/// below zero.
fn ruin_spec(x: f64, a: f64, claims: ClaimModel) -> RiskProcessSpec {
    let d = claims.dimension();
    RiskProcessSpec::new(
        vec![x; d],
        1.0,
        claims,
        SmallComponent::DriftOnly { a: vec![a; d] },
        KillingSpec::FirstPassageRuin,
        PayoffFn::ClaimTail,
    )
    .unwrap()
}

#[test]
fn skeleton_event_count_matches_poisson_mean() {
    let spec = RiskProcessSpec::new(
        vec![5.0],
        1.0,
        exp_claims(),
        drift(2.0),
        KillingSpec::ExpKill { mu: 0.5 },
        PayoffFn::ClaimTail,
    )
    .unwrap();
    let horizon = 100.0;
    let n = 10_000u64;
    let counts: Vec<f64> = (0..n)
        .map(|i| sample_skeleton(&spec, 31, i, horizon).epochs.len() as f64)
        .collect();
    let mean = counts.iter().sum::<f64>() / n as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let stderr = (var / n as f64).sqrt();
    let target = 1.0 * horizon;
    assert!(
        (mean - target).abs() < 3.0 * stderr,
        "mean count {mean} vs λ·horizon {target} (stderr {stderr})"
    );
    // Poisson: variance should be near the mean too (loose 10% sanity band).
    assert!((var - target).abs() < 0.1 * target, "count variance {var}");
}

#[test]
fn skeleton_without_events_is_pure_drift() {
    let spec = RiskProcessSpec::new(
        vec![3.0],
        1.0,
        exp_claims(),
        drift(2.0),
        KillingSpec::ExpKill { mu: 0.5 },
        PayoffFn::ClaimTail,
    )
    .unwrap();
    // Find a path whose first event lands beyond the horizon.
    let mut checked = false;
    for i in 0..200 {
        let skel = sample_skeleton(&spec, 7, i, 0.5);
        if skel.epochs.is_empty() {
            let pos = drift_only_position(&spec, &skel, 0.3).unwrap();
            assert_eq!(pos, vec![3.0 + 2.0 * 0.3]);
            checked = true;
            break;
        }
    }
    assert!(checked, "no event-free path among 200 at λ·horizon = 0.5");
}

#[test]
fn skeleton_is_deterministic_and_stream_separated() {
    let spec = RiskProcessSpec::new(
        vec![3.0],
        1.0,
        pareto_claims(),
        drift(2.0),
        KillingSpec::ExpKill { mu: 0.5 },
        PayoffFn::ClaimTail,
    )
    .unwrap();
    let a = sample_skeleton(&spec, 42, 7, 50.0);
    let b = sample_skeleton(&spec, 42, 7, 50.0);
    assert_eq!(a.epochs, b.epochs);
    assert_eq!(a.claims, b.claims);
    let c = sample_skeleton(&spec, 42, 8, 50.0);
    assert_ne!(a.epochs, c.epochs, "distinct paths share a stream");
    let d = sample_skeleton(&spec, 43, 7, 50.0);
    assert_ne!(a.epochs, d.epochs, "distinct seeds share a stream");
}

/// ℓ ≡ c makes the potential c·E[T] = c/μ regardless of the rest of the
/// dynamics — the sharpest test of the exponential clock and the segment
/// integral plumbing.
#[test]
fn expkill_constant_payoff_integrates_to_inverse_rate() {
    let payoff = PayoffFn::custom(0.7, |_: &[f64]| 0.7).unwrap();
    let spec = RiskProcessSpec::new(
        vec![2.0],
        1.0,
        pareto_claims(),
        drift(1.0),
        KillingSpec::ExpKill { mu: 0.5 },
        payoff,
    )
    .unwrap();
    let opts = McOptions {
        n_paths: 50_000,
        seed: 11,
        ..McOptions::default()
    };
    let est = estimate_potential_expkill(&spec, &opts).unwrap();
    let truth = 0.7 / 0.5;
    assert!(
        (est.estimate - truth).abs() < 3.0 * est.stderr,
        "u = {} ± {} vs {truth}",
        est.estimate,
        est.stderr
    );
    assert!(est.horizon.is_infinite());
    assert_eq!(est.late_fraction, 0.0);
}

/// Same oracle through the Brownian segment sampler: the payoff is constant,
/// so only the clock arithmetic of the trapezoid path integration is tested.
#[test]
fn expkill_brownian_constant_payoff_matches() {
    let payoff = PayoffFn::custom(1.0, |_: &[f64]| 1.0).unwrap();
    let spec = RiskProcessSpec::new(
        vec![2.0],
        1.0,
        exp_claims(),
        SmallComponent::DriftBrownian {
            a: vec![0.5],
            sigma: 1.0,
        },
        KillingSpec::ExpKill { mu: 1.0 },
        payoff,
    )
    .unwrap();
    let opts = McOptions {
        n_paths: 30_000,
        seed: 12,
        ..McOptions::default()
    };
    let est = estimate_potential_expkill(&spec, &opts).unwrap();
    assert!(
        (est.estimate - 1.0).abs() < 3.0 * est.stderr,
        "u = {} ± {}",
        est.estimate,
        est.stderr
    );
}

/// Deep in the quadrant the λ-scaled indicator payoff accumulates until the
/// clock rings: u(x) → λ/μ.
#[test]
fn expkill_quadrant_indicator_approaches_rate_ratio() {
    let spec = RiskProcessSpec::new(
        vec![128.0],
        1.0,
        pareto_claims(),
        drift(1.0),
        KillingSpec::ExpKill { mu: 0.5 },
        PayoffFn::IndicatorQuadrant { r: 1.0 },
    )
    .unwrap();
    let opts = McOptions {
        n_paths: 100_000,
        seed: 1313,
        ..McOptions::default()
    };
    let est = estimate_potential_expkill(&spec, &opts).unwrap();
    let target = 1.0 / 0.5;
    assert!(
        (est.estimate - target).abs() < 0.05 * target,
        "u(128) = {} vs λ/μ = {target}",
        est.estimate
    );
    // Universal bound: u ≤ sup ℓ / μ (+ MC noise).
    assert!(est.estimate <= target + 3.0 * est.stderr);
}

/// Compactly supported payoff against a heavy claim tail: u(x)/F̄(x) → 0,
/// checked as strict decrease along a common-random-numbers ladder.
#[test]
fn expkill_ball_indicator_ratio_decreases() {
    let claim = TailModel::pareto(1.0, 1.0, 1.0).unwrap();
    let rungs = [8.0, 12.0, 18.0, 27.0];
    let mut ratios = Vec::new();
    for &x in &rungs {
        let spec = RiskProcessSpec::new(
            vec![x],
            1.0,
            ClaimModel::univariate(claim.clone()),
            drift(1.0),
            KillingSpec::ExpKill { mu: 0.5 },
            PayoffFn::IndicatorBall { r: 1.0 },
        )
        .unwrap();
        let opts = McOptions {
            n_paths: 400_000,
            seed: 99,
            ..McOptions::default()
        };
        let est = estimate_potential_expkill(&spec, &opts).unwrap();
        ratios.push(est.estimate / claim.tail(x));
    }
    for w in ratios.windows(2) {
        assert!(
            w[1] < w[0],
            "u/F̄ failed to decrease along the ladder: {ratios:?}"
        );
    }
}

/// Cramér–Lundberg with Exp(1) claims, a = 2, λ = 1 (ρ = 1/2):
/// ψ(x) = e^{−x/2}/2 exactly.
#[test]
fn ruin_matches_cramer_lundberg_closed_form() {
    let spec = ruin_spec(0.0, 2.0, exp_claims());
    let rungs = [0.0, 0.5, 1.0, 2.0, 4.0];
    let opts = McOptions {
        n_paths: 200_000,
        seed: 4242,
        horizon: Some(100.0),
        ..McOptions::default()
    };
    let ests = estimate_ruin_ladder(&spec, &rungs, &opts).unwrap();
    for (x, est) in rungs.iter().zip(&ests) {
        let truth = 0.5 * (-0.5 * x).exp();
        assert!(
            (est.estimate - truth).abs() < 3.0 * est.stderr + 1e-3,
            "ψ({x}) = {} ± {} vs {truth}",
            est.estimate,
            est.stderr
        );
        assert!(est.late_fraction <= 0.02, "late ruin mass {}", est.late_fraction);
    }
    // Common random numbers make the ladder exactly monotone.
    for w in ests.windows(2) {
        assert!(w[1].estimate <= w[0].estimate);
    }
}

#[test]
fn ruin_single_start_agrees_with_ladder_entry() {
    let spec = ruin_spec(1.0, 2.0, exp_claims());
    let opts = McOptions {
        n_paths: 50_000,
        seed: 3,
        horizon: Some(80.0),
        ..McOptions::default()
    };
    let single = estimate_ruin_1d(&spec, &opts).unwrap();
    let ladder = estimate_ruin_ladder(&spec, &[1.0], &opts).unwrap();
    assert_eq!(single.estimate.to_bits(), ladder[0].estimate.to_bits());
    assert_eq!(single.stderr.to_bits(), ladder[0].stderr.to_bits());
}

#[test]
fn ruin_adaptive_horizon_meets_late_fraction_rule() {
    let spec = ruin_spec(1.0, 2.0, exp_claims());
    let opts = McOptions {
        n_paths: 20_000,
        seed: 5,
        horizon: None,
        ..McOptions::default()
    };
    let est = estimate_ruin_1d(&spec, &opts).unwrap();
    assert!(est.horizon.is_finite() && est.horizon > 0.0);
    assert!(
        est.late_fraction <= 0.02,
        "adaptive horizon stopped at late fraction {}",
        est.late_fraction
    );
    let truth = 0.5 * (-0.5f64).exp();
    assert!((est.estimate - truth).abs() < 3.0 * est.stderr + 2e-3);
}

#[test]
fn ruin_is_bit_deterministic_across_thread_counts() {
    let spec = ruin_spec(1.0, 2.0, exp_claims());
    let opts = McOptions {
        n_paths: 20_000,
        seed: 8,
        horizon: Some(50.0),
        ..McOptions::default()
    };
    let wide = estimate_ruin_1d(&spec, &opts).unwrap();
    let narrow_pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let narrow = narrow_pool.install(|| estimate_ruin_1d(&spec, &opts).unwrap());
    assert_eq!(wide.estimate.to_bits(), narrow.estimate.to_bits());
    assert_eq!(wide.stderr.to_bits(), narrow.stderr.to_bits());

    let expkill = RiskProcessSpec::new(
        vec![2.0],
        1.0,
        pareto_claims(),
        drift(1.0),
        KillingSpec::ExpKill { mu: 0.5 },
        PayoffFn::IndicatorQuadrant { r: 1.0 },
    )
    .unwrap();
    let opts2 = McOptions {
        n_paths: 20_000,
        seed: 9,
        ..McOptions::default()
    };
    let w2 = estimate_potential_expkill(&expkill, &opts2).unwrap();
    let n2 = narrow_pool.install(|| estimate_potential_expkill(&expkill, &opts2).unwrap());
    assert_eq!(w2.estimate.to_bits(), n2.estimate.to_bits());
    assert_eq!(w2.stderr.to_bits(), n2.stderr.to_bits());
}

/// The dual random-walk maximum: S = Σ_{i≤K} L_i with K ~ Geom(ρ) and
/// L ~ integrated claim tail; ψ(x) = P(S > x) with no horizon bias at all.
#[test]
fn dual_walk_matches_closed_form_and_direct() {
    let spec = ruin_spec(0.0, 2.0, exp_claims());
    let rungs = [0.0, 1.0, 2.0];
    let opts = McOptions {
        n_paths: 200_000,
        seed: 21,
        horizon: Some(100.0),
        ..McOptions::default()
    };
    let dual = estimate_ruin_dual(&spec, &rungs, &opts).unwrap();
    let direct = estimate_ruin_ladder(&spec, &rungs, &opts).unwrap();
    for ((x, d), dir) in rungs.iter().zip(&dual).zip(&direct) {
        let truth = 0.5 * (-0.5 * x).exp();
        assert!(
            (d.estimate - truth).abs() < 3.0 * d.stderr,
            "dual ψ({x}) = {} ± {} vs {truth}",
            d.estimate,
            d.stderr
        );
        let combined = (d.stderr.powi(2) + dir.stderr.powi(2)).sqrt();
        assert!(
            (d.estimate - dir.estimate).abs() < 3.0 * combined + 1e-3,
            "duality gap at x = {x}: dual {} vs direct {}",
            d.estimate,
            dir.estimate
        );
        assert_eq!(d.late_fraction, 0.0);
    }
}

/// Direct indicator and compensation estimators target the same
/// P(quadrant exit ≤ horizon); the paired difference must vanish
/// within its own CI.
#[test]
fn quadrant_direct_and_compensation_agree() {
    let claims = ClaimModel::comonotone_split(
        TailModel::pareto(1.0, 1.0, 1.0).unwrap(),
        vec![0.4, 0.6],
    )
    .unwrap();
    let spec = RiskProcessSpec::new(
        vec![8.0, 12.0],
        1.0,
        claims,
        SmallComponent::DriftOnly {
            a: vec![1.2, 1.6],
        },
        KillingSpec::QuadrantExit,
        PayoffFn::ClaimTail,
    )
    .unwrap();
    let opts = McOptions {
        n_paths: 30_000,
        seed: 555,
        horizon: Some(300.0),
        ..McOptions::default()
    };
    let est = estimate_quadrant_ruin(&spec, &opts).unwrap();
    assert!(
        est.paired_diff.estimate.abs() < 3.0 * est.paired_diff.stderr + 1e-4,
        "direct {} vs compensation {} (paired diff {} ± {})",
        est.direct.estimate,
        est.compensation.estimate,
        est.paired_diff.estimate,
        est.paired_diff.stderr
    );
    assert!(est.direct.estimate > 0.0, "no exits observed at all");
    assert_eq!(est.direct.n_paths, 30_000);
}

/// Sending one coordinate to infinity reduces quadrant exit to the 1-D ruin
/// of the remaining coordinate.
#[test]
fn quadrant_with_huge_coordinate_reduces_to_one_dimensional_ruin() {
    let claims = ClaimModel::independent_product(vec![
        TailModel::exponential(1.0, 0.0).unwrap(),
        TailModel::pareto(1.0, 1.0, 1.0).unwrap(),
    ])
    .unwrap();
    let spec = RiskProcessSpec::new(
        vec![2.0, 1.0e6],
        1.0,
        claims,
        SmallComponent::DriftOnly { a: vec![2.0, 3.0] },
        KillingSpec::QuadrantExit,
        PayoffFn::ClaimTail,
    )
    .unwrap();
    let opts = McOptions {
        n_paths: 100_000,
        seed: 14,
        horizon: Some(100.0),
        ..McOptions::default()
    };
    let est = estimate_quadrant_ruin(&spec, &opts).unwrap();
    let truth = 0.5 * (-1.0f64).exp();
    assert!(
        (est.direct.estimate - truth).abs() < 3.0 * est.direct.stderr + 1.5e-3,
        "2-D exit {} ± {} vs 1-D ψ(2) = {truth}",
        est.direct.estimate,
        est.direct.stderr
    );
}

/// From the corner, quadrant exit dominates each coordinate's own ruin.
#[test]
fn quadrant_from_origin_dominates_marginal_ruin() {
    let claims = ClaimModel::independent_product(vec![
        TailModel::exponential(1.0, 0.0).unwrap(),
        TailModel::pareto(1.0, 1.0, 1.0).unwrap(),
    ])
    .unwrap();
    let spec = RiskProcessSpec::new(
        vec![0.0, 0.0],
        1.0,
        claims,
        SmallComponent::DriftOnly { a: vec![2.0, 3.0] },
        KillingSpec::QuadrantExit,
        PayoffFn::ClaimTail,
    )
    .unwrap();
    let opts = McOptions {
        n_paths: 50_000,
        seed: 15,
        horizon: Some(60.0),
        ..McOptions::default()
    };
    let est = estimate_quadrant_ruin(&spec, &opts).unwrap();
    // Coordinate 1 alone ruins with ψ₁(0) = 1/2.
    assert!(
        est.direct.estimate >= 0.5 - 3.0 * est.direct.stderr,
        "corner exit {} cannot undercut marginal ψ(0) = 0.5",
        est.direct.estimate
    );
}

#[test]
fn gerber_shiu_unit_penalty_zero_discount_is_ruin_probability() {
    let spec = ruin_spec(1.0, 2.0, exp_claims());
    let opts = McOptions {
        n_paths: 100_000,
        seed: 17,
        horizon: Some(100.0),
        ..McOptions::default()
    };
    let gs = estimate_gerber_shiu(&spec, &PenaltyFn::constant_one(), 0.0, &opts).unwrap();
    let ruin = estimate_ruin_1d(&spec, &opts).unwrap();
    let truth = 0.5 * (-0.5f64).exp();
    assert!(
        (gs.estimate - truth).abs() < 3.0 * gs.stderr + 1e-3,
        "GS(w≡1, q=0) = {} ± {} vs ψ(1) = {truth}",
        gs.estimate,
        gs.stderr
    );
    let combined = (gs.stderr.powi(2) + ruin.stderr.powi(2)).sqrt();
    assert!((gs.estimate - ruin.estimate).abs() < 3.0 * combined + 1e-3);
}

/// Discounted ruin (w ≡ 1, q > 0) solves the renewal equation whose kernel
/// is the exponentially-killed increment law at killing rate q; with Exp(1)
/// claims the continuum solution is (1−s)e^{−sx} where s is the positive
/// root of (λ + q + s a)(β − s) = λβ. Monte Carlo, lattice solver, and the
/// closed form must all land on one value.
#[test]
fn gerber_shiu_discounted_matches_solver_and_closed_form() {
    let (lambda, a, q) = (1.0, 2.0, 0.25);
    // 2s² − 0.75s − 0.25 = 0 → s = (0.75 + √2.5625)/4.
    let s = (0.75 + 2.5625f64.sqrt()) / 4.0;
    let closed_u0 = 1.0 - s;

    let claim = TailModel::exponential(1.0, 0.0).unwrap();
    let kernel_grid = Grid::two_sided(0.01, -30.0, 40.0).unwrap();
    let kernel = build_kernel(
        lambda,
        &claim,
        &drift(a),
        &KillingSpec::ExpKill { mu: q },
        &kernel_grid,
        QuadratureSpec::default(),
    )
    .unwrap();
    let solve_grid = Grid::new(0.01, 40.0).unwrap();
    let h: Vec<f64> = (0..solve_grid.len())
        .map(|i| lambda * (-solve_grid.point(i)).exp() / (lambda + q + a))
        .collect();
    let problem = RenewalProblem::new(solve_grid, h, kernel.measure.clone(), "discounted-ruin")
        .unwrap();
    let solution = solve_fixed_point(&problem, 1e-8).unwrap();
    let solver_u0 = solution.value_at(0.0).unwrap();
    assert!(
        (solver_u0 - closed_u0).abs() < 3e-3,
        "solver u(0) = {solver_u0} vs closed form {closed_u0}"
    );

    let spec = ruin_spec(0.0, a, exp_claims());
    let opts = McOptions {
        n_paths: 200_000,
        seed: 19,
        horizon: Some(60.0),
        ..McOptions::default()
    };
    let gs = estimate_gerber_shiu(&spec, &PenaltyFn::constant_one(), q, &opts).unwrap();
    assert!(
        (gs.estimate - closed_u0).abs() < 3.0 * gs.stderr + 3e-3,
        "MC {} ± {} vs closed form {closed_u0}",
        gs.estimate,
        gs.stderr
    );
    assert!(
        (gs.estimate - solver_u0).abs() < 3.0 * gs.stderr + 5e-3,
        "MC {} vs solver {solver_u0}",
        gs.estimate
    );
}

/// Raising the deficit threshold can only shrink the penalty — with shared
/// seeds the estimates are monotone exactly, not just statistically.
#[test]
fn gerber_shiu_deficit_indicator_is_monotone_in_threshold() {
    let spec = ruin_spec(1.0, 2.0, exp_claims());
    let opts = McOptions {
        n_paths: 30_000,
        seed: 23,
        horizon: Some(80.0),
        ..McOptions::default()
    };
    let mut prev = f64::INFINITY;
    for y in [0.0, 0.5, 1.0, 2.0] {
        let est =
            estimate_gerber_shiu(&spec, &PenaltyFn::deficit_indicator(y), 0.0, &opts).unwrap();
        assert!(
            est.estimate <= prev,
            "deficit indicator not monotone at y = {y}"
        );
        prev = est.estimate;
    }
}

/// ExpKill estimates are capped by sup ℓ · E[T] = sup ℓ / μ.
#[test]
fn expkill_estimates_respect_uniform_bound() {
    let payoffs = [
        PayoffFn::ClaimTail,
        PayoffFn::IndicatorBall { r: 2.0 },
        PayoffFn::IndicatorQuadrant { r: 0.5 },
        PayoffFn::PowerUtility {
            alpha: 0.5,
            pi: vec![1.0],
            varpi: 0.8,
        },
    ];
    for payoff in payoffs {
        let spec = RiskProcessSpec::new(
            vec![1.0],
            1.0,
            pareto_claims(),
            drift(1.0),
            KillingSpec::ExpKill { mu: 0.5 },
            payoff,
        )
        .unwrap();
        let bound = spec.payoff_bound() / 0.5;
        let opts = McOptions {
            n_paths: 20_000,
            seed: 29,
            ..McOptions::default()
        };
        let est = estimate_potential_expkill(&spec, &opts).unwrap();
        assert!(
            est.estimate <= bound + 3.0 * est.stderr,
            "estimate {} exceeds sup ℓ/μ = {bound}",
            est.estimate
        );
    }
}

#[test]
fn spec_construction_rejects_invalid_configurations() {
    // Net-profit violation: a = 1 < λ·E[U] = 2.
    let err = RiskProcessSpec::new(
        vec![1.0],
        1.0,
        pareto_claims(),
        drift(1.0),
        KillingSpec::FirstPassageRuin,
        PayoffFn::ClaimTail,
    )
    .unwrap_err();
    assert!(
        matches!(
            err,
            potentia::Error::NetProfitViolation { coordinate: 0, .. }
        ),
        "{err}"
    );

    // Infinite-mean claims cannot satisfy net profit at any premium.
    let err = RiskProcessSpec::new(
        vec![1.0],
        1.0,
        ClaimModel::univariate(TailModel::pareto(1.0, 0.0, 1.0).unwrap()),
        drift(100.0),
        KillingSpec::FirstPassageRuin,
        PayoffFn::ClaimTail,
    )
    .unwrap_err();
    assert!(matches!(err, potentia::Error::InfiniteMean(_)), "{err}");

    // Dimension mismatch between start and claims.
    let err = RiskProcessSpec::new(
        vec![1.0, 2.0],
        1.0,
        exp_claims(),
        drift(2.0),
        KillingSpec::ExpKill { mu: 1.0 },
        PayoffFn::ClaimTail,
    )
    .unwrap_err();
    assert!(matches!(err, potentia::Error::InvalidParameter(_)), "{err}");

    // First-passage ruin is one-dimensional.
    let err = RiskProcessSpec::new(
        vec![1.0, 1.0],
        1.0,
        ClaimModel::independent_product(vec![
            TailModel::exponential(1.0, 0.0).unwrap(),
            TailModel::exponential(1.0, 0.0).unwrap(),
        ])
        .unwrap(),
        SmallComponent::DriftOnly { a: vec![3.0, 3.0] },
        KillingSpec::FirstPassageRuin,
        PayoffFn::ClaimTail,
    )
    .unwrap_err();
    assert!(matches!(err, potentia::Error::InvalidParameter(_)), "{err}");

    // ExpKill needs a positive rate.
    let err = RiskProcessSpec::new(
        vec![1.0],
        1.0,
        exp_claims(),
        drift(2.0),
        KillingSpec::ExpKill { mu: 0.0 },
        PayoffFn::ClaimTail,
    )
    .unwrap_err();
    assert!(matches!(err, potentia::Error::InvalidParameter(_)), "{err}");
}

#[test]
fn ruin_estimators_demand_barrier_capable_dynamics() {
    // Mean-reverting components have no exact barrier-crossing detection, so
    // the ruin estimators refuse them instead of returning a biased answer.
    let spec = RiskProcessSpec::new(
        vec![8.0],
        1.0,
        pareto_claims(),
        SmallComponent::OrnsteinUhlenbeck {
            a: vec![4.0],
            theta: -0.5,
            rate: 1.0,
            magnitude: 0.5,
        },
        KillingSpec::FirstPassageRuin,
        PayoffFn::ClaimTail,
    )
    .unwrap();
    let opts = McOptions {
        n_paths: 100,
        seed: 1,
        horizon: Some(10.0),
        ..McOptions::default()
    };
    let err = estimate_ruin_1d(&spec, &opts).unwrap_err();
    assert!(
        matches!(err, potentia::Error::UnsupportedComponent(_)),
        "{err}"
    );
}

/// Ruin probability of the Brownian-perturbed compound-Poisson surplus with
/// premium rate 2, unit-rate Exp(1) claims, and σ = 1. Substituting a mixture
/// of exponentials into the ruin integro-differential equation
///
///   (σ²/2)·ψ'' + a·ψ' − λ·ψ + λ∫₀ˣ ψ(x−y)βe^{−βy} dy + λe^{−βx} = 0
///
/// forces the decay rates to solve R² − 5R + 2 = 0 and the two boundary
/// conditions ψ(0) = 1 (diffusion from the barrier crosses immediately) and
/// cancellation of the e^{−βx} forcing term fix the mixture weights.
fn perturbed_ruin_closed_form(x: f64) -> f64 {
    let root = 17.0f64.sqrt();
    let r1 = (5.0 - root) / 2.0;
    let r2 = (5.0 + root) / 2.0;
    // c1/(1−r1) + c2/(1−r2) = 1 and c1 + c2 = 1.
    let c1 = (1.0 + 1.0 / (r2 - 1.0)) / (1.0 / (1.0 - r1) + 1.0 / (r2 - 1.0));
    let c2 = 1.0 - c1;
    c1 * (-r1 * x).exp() + c2 * (-r2 * x).exp()
}

#[test]
fn brownian_ruin_matches_perturbed_closed_form() {
    let spec = RiskProcessSpec::new(
        vec![1.0],
        1.0,
        exp_claims(),
        SmallComponent::DriftBrownian {
            a: vec![2.0],
            sigma: 1.0,
        },
        KillingSpec::FirstPassageRuin,
        PayoffFn::ClaimTail,
    )
    .unwrap();
    let opts = McOptions {
        n_paths: 100_000,
        seed: 4711,
        horizon: Some(100.0),
        ..McOptions::default()
    };
    let est = estimate_ruin_1d(&spec, &opts).unwrap();
    let truth = perturbed_ruin_closed_form(1.0);
    assert!(
        (est.estimate - truth).abs() < 3.0 * est.stderr + 1.5e-3,
        "bridge-detected ruin {} vs closed form {truth} (stderr {})",
        est.estimate,
        est.stderr
    );
    // From the barrier itself the diffusion crosses immediately.
    let at_zero = RiskProcessSpec::new(
        vec![0.0],
        1.0,
        exp_claims(),
        SmallComponent::DriftBrownian {
            a: vec![2.0],
            sigma: 1.0,
        },
        KillingSpec::FirstPassageRuin,
        PayoffFn::ClaimTail,
    )
    .unwrap();
    let est0 = estimate_ruin_1d(&at_zero, &opts).unwrap();
    assert!(
        est0.estimate > 0.99,
        "ruin from the barrier should be near-certain, got {}",
        est0.estimate
    );
}
