//! Oracle tests for the renewal-equation solvers: every numerical claim is
//! checked against an independent closed form (Gamma tails, the classical
//! exponential-claim ruin probability, geometric-series identities) or a
//! brute-force alternative implementation.

use potentia::heavytail::TailModel;
use potentia::renewal::{
    kesten_check, neumann_sum, series_terms_for_tol, solve_fixed_point, solve_pk_series,
    solve_state_dependent, Grid, GridMeasure, RenewalProblem,
};
use potentia::Error;

/// Survival function of Gamma(2, 1): P(X1 + X2 > x) for two unit exponentials.
fn gamma2_tail(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        (-x).exp() * (1.0 + x)
    }
}

/// Survival function of Gamma(3, 1).
fn gamma3_tail(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        (-x).exp() * (1.0 + x + 0.5 * x * x)
    }
}

#[test]
fn delta_is_convolution_identity() {
    let grid = Grid::new(0.05, 20.0).unwrap();
    let exp = TailModel::exponential(1.0, 0.0).unwrap();
    let b = GridMeasure::from_distribution(&grid, &exp).unwrap();
    let delta = GridMeasure::delta0(&grid).unwrap();
    let c = delta.convolve(&b).unwrap();
    assert_eq!(b.weights().len(), c.weights().len());
    for (wb, wc) in b.weights().iter().zip(c.weights()) {
        assert!((wb - wc).abs() < 1e-15, "{wb} vs {wc}");
    }
    assert!((c.total_mass() - b.total_mass()).abs() < 1e-12);
    assert!((c.lost_hi() - b.lost_hi()).abs() < 1e-15);
}

#[test]
fn unit_atoms_convolve_to_sum_of_locations() {
    let grid = Grid::new(0.5, 5.0).unwrap();
    let a = GridMeasure::atom(&grid, 1.0, 1.0).unwrap();
    let b = GridMeasure::atom(&grid, 2.0, 1.0).unwrap();
    let c = a.convolve(&b).unwrap();
    let atoms = c.atom_list();
    assert_eq!(atoms.len(), 1);
    assert!((atoms[0].0 - 3.0).abs() < 1e-12);
    assert!((atoms[0].1 - 1.0).abs() < 1e-12);
    assert!(c.weights().iter().all(|&w| w == 0.0));
    assert!((c.total_mass() - 1.0).abs() < 1e-12);
}

#[test]
fn atom_off_lattice_is_rejected() {
    let grid = Grid::new(0.5, 5.0).unwrap();
    let err = GridMeasure::atom(&grid, 1.23, 1.0).unwrap_err();
    assert!(matches!(err, Error::GridMismatch(_)), "{err}");
}

#[test]
fn exponential_selfconvolution_matches_gamma_closed_form() {
    let step = 0.01;
    let grid = Grid::new(step, 30.0).unwrap();
    let exp = TailModel::exponential(1.0, 0.0).unwrap();
    let a = GridMeasure::from_distribution(&grid, &exp).unwrap();
    let c = a.convolve(&a).unwrap();

    // Mass identity: total mass (including clipped overflow) is the product.
    assert!(
        (c.total_mass() - a.total_mass() * a.total_mass()).abs() < 1e-8,
        "mass {} vs product {}",
        c.total_mass(),
        a.total_mass() * a.total_mass()
    );

    // Cell masses against the Gamma(2,1) law. The origin cell is half-clipped
    // (the lattice cell [-h/2, h/2) intersected with the support) and the
    // Gamma density vanishes at 0, so a density comparison is only meaningful
    // from the first full cell onwards; the origin cell gets a mass gate.
    let w = c.weights();
    let g0 = 1.0 - gamma2_tail(0.5 * step);
    assert!((w[0] - g0).abs() < 3e-5, "origin cell {} vs {}", w[0], g0);
    for (k, &wk) in w.iter().enumerate().skip(1) {
        let p = grid.point(k);
        let truth = gamma2_tail(p - 0.5 * step) - gamma2_tail(p + 0.5 * step);
        assert!(
            (wk - truth).abs() < 1e-3 * step,
            "cell {k} (x = {p}): {wk} vs {truth}"
        );
    }

    // Tail probe away from the boundary cells.
    let t = c.tail(5.0);
    let truth = gamma2_tail(5.0 + 0.5 * step);
    assert!((t - truth).abs() < 2e-5, "tail {t} vs {truth}");
}

#[test]
fn convolution_power_base_cases() {
    let grid = Grid::new(0.05, 20.0).unwrap();
    let exp = TailModel::exponential(1.0, 0.0).unwrap();
    let m = GridMeasure::from_distribution(&grid, &exp).unwrap();

    let p0 = m.convolution_power(0).unwrap();
    let atoms = p0.atom_list();
    assert_eq!(atoms.len(), 1);
    assert!((atoms[0].0).abs() < 1e-12 && (atoms[0].1 - 1.0).abs() < 1e-12);

    let p1 = m.convolution_power(1).unwrap();
    for (a, b) in m.weights().iter().zip(p1.weights()) {
        assert!((a - b).abs() < 1e-15);
    }

    let p2 = m.convolution_power(2).unwrap();
    assert!((p2.total_mass() - m.total_mass().powi(2)).abs() < 1e-10);
}

#[test]
fn convolution_is_deterministic_across_runs() {
    let grid = Grid::new(0.02, 40.0).unwrap();
    let pareto = TailModel::pareto(1.0, 1.0, 1.0).unwrap();
    let m = GridMeasure::from_distribution(&grid, &pareto).unwrap();
    let c1 = m.convolve(&m).unwrap();
    let c2 = m.convolve(&m).unwrap();
    assert_eq!(c1.weights(), c2.weights(), "parallel convolution must be bit-stable");
    assert!(c1.lost_hi() == c2.lost_hi());
}

/// Convolution powers of the normalized integrated Pareto tail stay
/// tail-equivalent with n times the single tail: the defining property of a
/// subexponential law, checked at desk scale.
#[test]
fn pareto_ladder_tail_ratio_approaches_n() {
    let grid = Grid::new(0.1, 400.0).unwrap();
    let pareto = TailModel::pareto(1.0, 1.0, 1.0).unwrap();
    let f_i = pareto.integrated_tail().unwrap();
    // Mass 1: the normalized ladder-height law itself.
    let g1 = GridMeasure::from_integrated_tail(&grid, &f_i, 1.0).unwrap();
    assert!((g1.total_mass() - 1.0).abs() < 1e-10);

    let x = 350.0;
    let reference = f_i.tail_i(x);
    let mut power = g1.clone();
    for n in 1..=3usize {
        let ratio = power.tail(x) / reference;
        assert!(
            (ratio - n as f64).abs() < 0.15 * n as f64,
            "n = {n}: ratio {ratio}"
        );
        if n < 3 {
            power = power.convolve(&g1).unwrap();
        }
    }
}

#[test]
fn neumann_sum_tail_matches_geometric_limit() {
    let grid = Grid::new(0.1, 400.0).unwrap();
    let pareto = TailModel::pareto(1.0, 1.0, 1.0).unwrap();
    let f_i = pareto.integrated_tail().unwrap();
    let rho = 0.5;
    let kernel = GridMeasure::from_integrated_tail(&grid, &f_i, rho).unwrap();

    let n_terms = 20;
    let ns = neumann_sum(&kernel, n_terms).unwrap();
    // Total mass of the geometric compound: (1-ρ)Σ_{k≤n} ρ^k = 1 − ρ^{n+1},
    // conserved exactly because clipped mass is tracked, never dropped.
    let expect_mass = 1.0 - rho.powi(n_terms as i32 + 1);
    assert!(
        (ns.measure.total_mass() - expect_mass).abs() < 1e-9,
        "mass {}",
        ns.measure.total_mass()
    );
    assert!((1.0 - ns.measure.total_mass()) <= ns.truncation_bound + 1e-12);
    assert!((ns.truncation_bound - rho.powi(n_terms as i32 + 1) / (1.0 - rho)).abs() < 1e-12);

    // Tail limit: tail(𝒢)(x)/F̄_I(x) → ρ/(1−ρ) = 1 for ρ = 1/2.
    let x = 200.0;
    let ratio = ns.measure.tail(x) / f_i.tail_i(x);
    assert!((ratio - 1.0).abs() < 0.10, "ratio {ratio}");
}

#[test]
fn neumann_sum_zero_terms_is_scaled_delta() {
    let grid = Grid::new(0.1, 400.0).unwrap();
    let pareto = TailModel::pareto(1.0, 1.0, 1.0).unwrap();
    let f_i = pareto.integrated_tail().unwrap();
    let rho = 0.5;
    let kernel = GridMeasure::from_integrated_tail(&grid, &f_i, rho).unwrap();
    let ns = neumann_sum(&kernel, 0).unwrap();
    let atoms = ns.measure.atom_list();
    assert_eq!(atoms.len(), 1);
    assert!((atoms[0].0).abs() < 1e-12);
    assert!((atoms[0].1 - (1.0 - rho)).abs() < 1e-12);
    assert!((ns.truncation_bound - rho / (1.0 - rho)).abs() < 1e-12);
}

#[test]
fn neumann_sum_rejects_supercritical_mass() {
    let grid = Grid::new(0.1, 50.0).unwrap();
    let exp = TailModel::exponential(1.0, 0.0).unwrap();
    let kernel = GridMeasure::from_distribution(&grid, &exp).unwrap();
    let err = neumann_sum(&kernel, 5).unwrap_err();
    assert!(matches!(err, Error::NotContractive { .. }), "{err}");
}

/// The classical exponential-claim ruin probability: premium rate 2, unit
/// Poisson claim arrivals, Exp(1) claims, so the safety-loaded solution is
/// u(x) = 0.5·e^{-x/2} exactly. Both solvers must reproduce it.
fn classical_ruin_problem(step: f64, x_max: f64) -> (Grid, RenewalProblem) {
    let grid = Grid::new(step, x_max).unwrap();
    let exp = TailModel::exponential(1.0, 0.0).unwrap();
    let f_i = exp.integrated_tail().unwrap();
    let rho = 0.5;
    let kernel = GridMeasure::from_integrated_tail(&grid, &f_i, rho).unwrap();
    let h: Vec<f64> = (0..grid.len())
        .map(|i| rho * f_i.tail_i(grid.point(i)))
        .collect();
    let problem = RenewalProblem::new(grid.clone(), h, kernel, "classical-ruin").unwrap();
    (grid, problem)
}

#[test]
fn classical_ruin_fixed_point_matches_closed_form() {
    let (grid, problem) = classical_ruin_problem(0.01, 40.0);
    let sol = solve_fixed_point(&problem, 1e-6).unwrap();

    // Interior probes: second-order accurate midpoint discretization.
    for x in [0.5f64, 1.0, 2.0, 4.0, 8.0] {
        let truth = 0.5 * (-0.5 * x).exp();
        let got = sol.value_at(x).unwrap();
        assert!((got - truth).abs() < 1e-3, "x = {x}: {got} vs {truth}");
    }
    let got2 = sol.value_at(2.0).unwrap();
    assert!((got2 - 0.18394).abs() < 1e-3, "u(2) = {got2}");

    // At the origin the discretization is first-order (half-width boundary
    // cell), so the gate is a few multiples of the step.
    let got0 = sol.value_at(0.0).unwrap();
    assert!((got0 - 0.5).abs() < 3e-3, "u(0) = {got0}");

    // Residual honesty and the a-priori bound sup u ≤ sup h/(1−ρ) + tol.
    assert!(sol.residual_sup() <= 1e-6, "residual {}", sol.residual_sup());
    let bound = 0.5 / (1.0 - 0.5) + 1e-6;
    assert!(sol.u().iter().all(|&v| v >= 0.0 && v <= bound));

    // Iteration economy: the geometric contraction cap.
    let cap = ((1e-6f64 * 0.5 / 0.5).ln() / 0.5f64.ln()).ceil() as usize + 50;
    assert!(sol.iterations() <= cap, "{} iterations", sol.iterations());

    let _ = grid;
}

#[test]
fn contraction_trace_decays_geometrically() {
    let (_, problem) = classical_ruin_problem(0.01, 40.0);
    let sol = solve_fixed_point(&problem, 1e-6).unwrap();
    let trace = sol.contraction_trace();
    assert!(trace.len() >= 3);
    let rho = 0.5;
    for k in 1..trace.len() {
        assert!(
            trace[k] <= rho * trace[k - 1] * (1.0 + 1e-6),
            "step {k}: {} after {}",
            trace[k],
            trace[k - 1]
        );
    }
    // Cumulative form: d_k ≤ ρ^k · d_0 · (1 + 1e-6).
    for (k, d) in trace.iter().enumerate() {
        assert!(*d <= rho.powi(k as i32) * trace[0] * (1.0 + 1e-6));
    }
}

#[test]
fn zero_forcing_gives_zero_solution() {
    let grid = Grid::new(0.05, 10.0).unwrap();
    let exp = TailModel::exponential(1.0, 0.0).unwrap();
    let f_i = exp.integrated_tail().unwrap();
    let kernel = GridMeasure::from_integrated_tail(&grid, &f_i, 0.5).unwrap();
    let h = vec![0.0; grid.len()];
    let problem = RenewalProblem::new(grid, h, kernel, "zero-forcing").unwrap();
    let sol = solve_fixed_point(&problem, 1e-12).unwrap();
    assert!(sol.u().iter().all(|&v| v == 0.0));
    assert_eq!(sol.residual_sup(), 0.0);
}

#[test]
fn solvers_cross_validate() {
    let (_, problem) = classical_ruin_problem(0.01, 40.0);
    let tol = 1e-6;
    let fixed = solve_fixed_point(&problem, tol).unwrap();
    let n = series_terms_for_tol(0.5, 0.5, tol);
    let series = solve_pk_series(&problem, n).unwrap();
    let sup_diff = fixed
        .u()
        .iter()
        .zip(series.u())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    assert!(sup_diff < 2.0 * tol, "solver disagreement {sup_diff}");
    assert!(series.residual_sup() <= tol, "series residual {}", series.residual_sup());
}

#[test]
fn pk_series_zero_terms_returns_forcing() {
    let (_, problem) = classical_ruin_problem(0.05, 20.0);
    let sol = solve_pk_series(&problem, 0).unwrap();
    for (u, h) in sol.u().iter().zip(problem.h()) {
        assert!((u - h).abs() < 1e-15);
    }
}

#[test]
fn pk_series_truncation_bound_is_honest_at_high_mass() {
    // ρ = 0.9: slow geometric decay, so the term count matters.
    let grid = Grid::new(0.02, 60.0).unwrap();
    let exp = TailModel::exponential(1.0, 0.0).unwrap();
    let f_i = exp.integrated_tail().unwrap();
    let rho = 0.9;
    let kernel = GridMeasure::from_integrated_tail(&grid, &f_i, rho).unwrap();
    let h: Vec<f64> = (0..grid.len())
        .map(|i| rho * f_i.tail_i(grid.point(i)))
        .collect();
    let sup_h = h.iter().fold(0.0f64, |a, &b| a.max(b));
    let problem = RenewalProblem::new(grid, h, kernel, "high-mass").unwrap();

    let tol = 1e-4;
    let n = series_terms_for_tol(rho, sup_h, tol);
    // A-priori geometric bound met by construction…
    assert!(sup_h * rho.powi(n as i32 + 1) / (1.0 - rho) <= tol);
    // …and the computed residual honours it.
    let sol = solve_pk_series(&problem, n).unwrap();
    assert!(sol.residual_sup() <= tol, "residual {}", sol.residual_sup());
}

#[test]
fn non_contractive_problem_is_rejected() {
    let grid = Grid::new(0.05, 20.0).unwrap();
    let exp = TailModel::exponential(1.0, 0.0).unwrap();
    let f_i = exp.integrated_tail().unwrap();
    let kernel = GridMeasure::from_integrated_tail(&grid, &f_i, 1.0).unwrap();
    let h = vec![1.0; grid.len()];
    let err = RenewalProblem::new(grid, h, kernel, "critical").unwrap_err();
    assert!(matches!(err, Error::NotContractive { .. }), "{err}");
}

#[test]
fn grid_refinement_is_at_worst_first_order() {
    let (_, coarse_p) = classical_ruin_problem(0.02, 40.0);
    let (_, fine_p) = classical_ruin_problem(0.01, 40.0);
    let coarse = solve_fixed_point(&coarse_p, 1e-8).unwrap();
    let fine = solve_fixed_point(&fine_p, 1e-8).unwrap();
    for x in [0.0, 1.0, 2.0, 4.0, 10.0] {
        let d = (coarse.value_at(x).unwrap() - fine.value_at(x).unwrap()).abs();
        assert!(d < 4.0 * 0.02, "x = {x}: refinement jump {d}");
        assert!(d < 5e-3, "x = {x}: refinement jump {d} suspiciously large");
    }
}

#[test]
fn kesten_bound_holds_for_pareto_ladder() {
    let grid = Grid::new(0.1, 400.0).unwrap();
    let pareto = TailModel::pareto(1.0, 1.0, 1.0).unwrap();
    let f_i = pareto.integrated_tail().unwrap();
    let kernel = GridMeasure::from_integrated_tail(&grid, &f_i, 1.0).unwrap();
    let probes = [50.0, 100.0, 200.0, 300.0];
    let reference = |x: f64| f_i.tail_i(x);
    let report = kesten_check(&kernel, &reference, 5, 0.2, &probes).unwrap();
    assert!(report.flag.is_none(), "unexpected flag: {:?}", report.flag);
    assert!(report.c_min.is_finite() && report.c_min < 10.0, "C = {}", report.c_min);
    // n = 1 forces C ≥ sup Ḡ(x)/F̄(x) / (1+ε).
    let r1_sup = probes
        .iter()
        .map(|&x| kernel.tail(x) / f_i.tail_i(x))
        .fold(0.0f64, f64::max);
    assert!(report.c_min >= r1_sup / 1.2 - 1e-12);
}

#[test]
fn kesten_check_flags_light_tails() {
    let grid = Grid::new(0.01, 60.0).unwrap();
    let exp = TailModel::exponential(1.0, 0.0).unwrap();
    let kernel = GridMeasure::from_distribution(&grid, &exp).unwrap();
    let probes = [10.0, 20.0, 30.0];
    let reference = |x: f64| (-x).exp();
    let report = kesten_check(&kernel, &reference, 3, 0.2, &probes).unwrap();
    let flag = report.flag.expect("light tail must be flagged");
    assert_eq!(flag, "light-tail: bound not applicable");

    // Oracle for the ratio row itself: the 3-fold convolution of Exp(1) is
    // Gamma(3,1), whose tail against e^{-x} gives 1 + x + x²/2.
    for (i, &x) in probes.iter().enumerate() {
        let grid_ratio = report.ratios[2][i];
        let closed = gamma3_tail(x) / (-x).exp();
        assert!(
            (grid_ratio / closed - 1.0).abs() < 0.02,
            "x = {x}: {grid_ratio} vs {closed}"
        );
    }
}

#[test]
fn state_dependent_solver_reduces_to_translation_invariant() {
    let grid = Grid::new(0.1, 10.0).unwrap();
    let exp = TailModel::exponential(1.0, 0.0).unwrap();
    let f_i = exp.integrated_tail().unwrap();
    let kernel = GridMeasure::from_integrated_tail(&grid, &f_i, 0.5).unwrap();
    let h: Vec<f64> = (0..grid.len())
        .map(|i| 0.5 * f_i.tail_i(grid.point(i)))
        .collect();

    let rows: Vec<GridMeasure> = (0..grid.len()).map(|_| kernel.clone()).collect();
    let dense = solve_state_dependent(&grid, &h, &rows, 1e-10).unwrap();

    let problem = RenewalProblem::new(grid.clone(), h, kernel, "ti-check").unwrap();
    let fast = solve_fixed_point(&problem, 1e-10).unwrap();

    let sup_diff = dense
        .u()
        .iter()
        .zip(fast.u())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    assert!(sup_diff < 1e-9, "state-dependent mismatch {sup_diff}");
}

#[test]
fn state_dependent_solver_handles_varying_mass() {
    let grid = Grid::new(0.1, 10.0).unwrap();
    let exp = TailModel::exponential(1.0, 0.0).unwrap();
    let f_i = exp.integrated_tail().unwrap();
    let base = GridMeasure::from_integrated_tail(&grid, &f_i, 1.0).unwrap();
    let n = grid.len();
    let rows: Vec<GridMeasure> = (0..n)
        .map(|i| base.scaled(0.3 + 0.4 * i as f64 / (n - 1) as f64))
        .collect();
    let h = vec![1.0; n];
    let sol = solve_state_dependent(&grid, &h, &rows, 1e-9).unwrap();
    assert!(sol.residual_sup() <= 1e-9);
    // Bounded by the worst-row geometric series.
    let ceiling = 1.0 / (1.0 - 0.7) + 1e-6;
    assert!(sol.u().iter().all(|&v| (1.0 - 1e-12..=ceiling).contains(&v)));
}

#[test]
fn solution_exports_csv() {
    let (_, problem) = classical_ruin_problem(0.5, 5.0);
    let sol = solve_fixed_point(&problem, 1e-8).unwrap();
    let csv = sol.csv_string();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,u,h,residual_contribution"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 11);
    let first: Vec<&str> = rows[0].split(',').collect();
    assert_eq!(first.len(), 4);
    let x: f64 = first[0].parse().unwrap();
    assert_eq!(x, 0.0);
    let u: f64 = first[1].parse().unwrap();
    assert!((u - sol.u()[0]).abs() < 1e-12);
}

#[test]
fn clipped_convolution_reports_lost_mass() {
    let grid = Grid::new(0.1, 4.0).unwrap();
    let exp = TailModel::exponential(1.0, 0.0).unwrap();
    let a = GridMeasure::from_distribution(&grid, &exp).unwrap();
    assert!(a.lost_hi() > 0.01, "narrow window must overflow");
    let c = a.convolve(&a).unwrap();
    assert!(c.lost_hi() > a.lost_hi());
    assert!((c.total_mass() - a.total_mass() * a.total_mass()).abs() < 1e-8);
    // The tail still sees the clipped mass: it lies beyond every probe.
    assert!(c.tail(3.0) >= c.lost_hi());
}

#[test]
fn grid_mismatch_is_rejected() {
    let g1 = Grid::new(0.1, 4.0).unwrap();
    let g2 = Grid::new(0.2, 4.0).unwrap();
    let exp = TailModel::exponential(1.0, 0.0).unwrap();
    let a = GridMeasure::from_distribution(&g1, &exp).unwrap();
    let b = GridMeasure::from_distribution(&g2, &exp).unwrap();
    let err = a.convolve(&b).unwrap_err();
    assert!(matches!(err, Error::GridMismatch(_)), "{err}");
}

#[test]
fn two_sided_grid_places_negative_support() {
    let grid = Grid::two_sided(0.1, -5.0, 5.0).unwrap();
    assert_eq!(grid.len(), 101);
    assert!((grid.point(0) + 5.0).abs() < 1e-12);
    assert!((grid.point(100) - 5.0).abs() < 1e-12);
    let m = GridMeasure::atom(&grid, -2.0, 0.25).unwrap();
    assert!(m.tail(-3.0) > 0.2 && m.tail(-1.0) == 0.0);
}
