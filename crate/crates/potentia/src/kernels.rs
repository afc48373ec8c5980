//! Construction of the renewal kernel for exponentially killed risk
//! processes, together with the resolvent density of the small component.
//!
//! Between claims the risk process moves by its small component
//! `Y_t = a·t (+ σB_t)`. Killing at rate μ competes with the next claim
//! arrival at rate λ, so the time of the next *surviving* claim carries the
//! defective density `λ e^{−(λ+μ)t}` with total mass `ρ = λ/(λ+μ)`. The
//! renewal kernel `G` is the law of the net increment at that epoch,
//!
//! ```text
//!     G = law of ( U − W ),        W = a·T + σ B_T,
//!     Ḡ(z) = ∫ q(w) F̄(z + w) dw,   ∫ q(w) dw = ρ = λ/(λ+μ),
//! ```
//!
//! where `q` is the (defective) density of the displacement `W` and `F̄` is
//! the claim tail. `q` is available in closed form for the supported small
//! components:
//!
//! * pure drift `a ≠ 0`: mass on the ray `{a·t : t ≥ 0}`,
//!   `q(w) = (λ/|a|) e^{−(λ+μ) w/a}` for `w/a ≥ 0`;
//! * drift plus Brownian motion: with `Δ = √(a² + 2(λ+μ)σ²)`,
//!   `q(w) = (λ/Δ) exp( (a·w − |w|Δ)/σ² )`, a tilted two-sided exponential.
//!
//! Both densities integrate to `λ/(λ+μ)` exactly, which gives the builder a
//! free consistency check: the quadrature mass must reproduce the killing
//! split to `1e-6` or construction is refused. Small-jump and
//! Ornstein–Uhlenbeck components have no closed resolvent and are handled by
//! the simulator only.
//!
//! Kernels are discretised by *boundary integrals*: the weight of the lattice
//! cell `[b_i, b_{i+1})` is `Ḡ(b_i) − Ḡ(b_{i+1})`, so cell masses are exact
//! up to quadrature error and the clipped mass beyond the window is tracked
//! explicitly (`lost_lo`, `lost_hi`) rather than silently dropped.

use crate::error::{Error, Result};
use crate::heavytail::TailModel;
use crate::renewal::{Grid, GridMeasure};
use rayon::prelude::*;

/// Tolerance for the kernel-mass consistency check: the quadrature total must
/// match the killing split λ/(λ+μ) this closely or the builder errors out.
pub const KERNEL_MASS_TOL: f64 = 1e-6;

/// Small (non-claim) component of the risk process. The drift vector `a` has
/// one entry per coordinate; kernel construction is one-dimensional and
/// requires `a.len() == 1`, while the simulator accepts any dimension.
#[derive(Debug, Clone, PartialEq)]
pub enum SmallComponent {
    /// Deterministic drift `Y_t = a·t`.
    DriftOnly { a: Vec<f64> },
    /// Drift plus Brownian motion, `Y_t = a·t + σ B_t` (same σ per
    /// coordinate, independent coordinates).
    DriftBrownian { a: Vec<f64>, sigma: f64 },
    /// Drift plus a compound Poisson stream of small two-sided jumps,
    /// uniform on (−magnitude, magnitude). Simulation only.
    DriftSmallJumps {
        a: Vec<f64>,
        rate: f64,
        magnitude: f64,
    },
    /// Mean-reverting modulation `dV = θV dt + small upward jumps`
    /// (θ < 0) added to the drift. Simulation only.
    OrnsteinUhlenbeck {
        a: Vec<f64>,
        theta: f64,
        rate: f64,
        magnitude: f64,
    },
}

impl SmallComponent {
    /// Number of coordinates the component moves.
    pub fn dimension(&self) -> usize {
        match self {
            SmallComponent::DriftOnly { a }
            | SmallComponent::DriftBrownian { a, .. }
            | SmallComponent::DriftSmallJumps { a, .. }
            | SmallComponent::OrnsteinUhlenbeck { a, .. } => a.len(),
        }
    }

    /// Drift vector.
    pub fn drift(&self) -> &[f64] {
        match self {
            SmallComponent::DriftOnly { a }
            | SmallComponent::DriftBrownian { a, .. }
            | SmallComponent::DriftSmallJumps { a, .. }
            | SmallComponent::OrnsteinUhlenbeck { a, .. } => a,
        }
    }

    /// Validates parameters. `claim_floor` is the lower bound δ of the claim
    /// law: jump-type small components must keep their jumps strictly below
    /// it, otherwise "small" and claim jumps would be indistinguishable.
    pub fn validate(&self, claim_floor: f64) -> Result<()> {
        let a = self.drift();
        if a.is_empty() {
            return Err(Error::InvalidParameter(
                "small component needs at least one drift coordinate".into(),
            ));
        }
        if a.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "drift coordinates must be finite, got {a:?}"
            )));
        }
        match self {
            SmallComponent::DriftOnly { .. } => Ok(()),
            SmallComponent::DriftBrownian { sigma, .. } => {
                if !sigma.is_finite() || *sigma <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "Brownian volatility must be positive and finite, got {sigma}"
                    )));
                }
                Ok(())
            }
            SmallComponent::DriftSmallJumps {
                rate, magnitude, ..
            }
            | SmallComponent::OrnsteinUhlenbeck {
                rate, magnitude, ..
            } => {
                if !rate.is_finite() || *rate <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "small-jump rate must be positive and finite, got {rate}"
                    )));
                }
                if !magnitude.is_finite() || *magnitude <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "small-jump magnitude must be positive and finite, got {magnitude}"
                    )));
                }
                if *magnitude >= claim_floor {
                    return Err(Error::InvalidParameter(format!(
                        "small-jump magnitude {magnitude} must stay below the claim floor {claim_floor}"
                    )));
                }
                if let SmallComponent::OrnsteinUhlenbeck { theta, .. } = self {
                    if !theta.is_finite() || *theta >= 0.0 {
                        return Err(Error::InvalidParameter(format!(
                            "mean-reversion coefficient must be negative, got {theta}"
                        )));
                    }
                }
                Ok(())
            }
        }
    }
}

/// How the process is killed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KillingSpec {
    /// Independent exponential clock at rate μ > 0.
    ExpKill { mu: f64 },
    /// First passage of the (one-dimensional) process below 0.
    FirstPassageRuin,
    /// First exit of the multivariate process from the positive quadrant.
    QuadrantExit,
}

/// Quadrature controls for kernel construction. `panels` is the number of
/// composite-Simpson panels per smooth piece; `t_max_factor` sets the
/// truncation of the defective time/displacement integral in units of its
/// decay scale, so the truncated mass is ≈ e^{−t_max_factor}. The defaults
/// (4096 panels, factor 40) put both quadrature and truncation error far
/// below the 1e-6 mass gate for every supported component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub panels: usize,
    pub t_max_factor: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            panels: 4096,
            t_max_factor: 40.0,
        }
    }
}

impl QuadratureSpec {
    fn validate(&self) -> Result<()> {
        if self.panels < 2 || self.panels % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "Simpson quadrature needs an even panel count >= 2, got {}",
                self.panels
            )));
        }
        if !self.t_max_factor.is_finite() || self.t_max_factor <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "truncation factor must be positive and finite, got {}",
                self.t_max_factor
            )));
        }
        Ok(())
    }
}

/// A discretised renewal kernel: the lattice measure, its total mass
/// ρ = λ/(λ+μ), and a provenance record of how it was built.
#[derive(Debug, Clone)]
pub struct KernelG {
    /// Cell-mass discretisation of the increment law, clipped mass included.
    pub measure: GridMeasure,
    /// Total kernel mass λ/(λ+μ) (the contraction factor of the renewal
    /// equation). Equals `measure.total_mass()` exactly.
    pub rho: f64,
    /// JSON-formatted build record: rates, claim family, component, grid and
    /// quadrature parameters, mass accounting.
    pub provenance: String,
}

impl KernelG {
    /// Serialises the kernel as CSV: one `# {provenance}` header line, a
    /// `z,weight` column header, then one row per lattice cell.
    pub fn csv_string(&self) -> String {
        let grid = self.measure.grid();
        let mut out = String::with_capacity(32 * grid.len() + self.provenance.len() + 16);
        out.push_str("# ");
        out.push_str(&self.provenance);
        out.push('\n');
        out.push_str("z,weight\n");
        for (i, w) in self.measure.weights().iter().enumerate() {
            out.push_str(&format!("{:.6},{:.12e}\n", grid.point(i), w));
        }
        out
    }
}

/// Composite Simpson rule with `panels` (even) panels on `[a, b]`.
pub(crate) fn simpson(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    debug_assert!(panels >= 2 && panels % 2 == 0);
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for k in 1..panels {
        let weight = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += weight * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Simpson integration of `f` over `[lo, hi]` split at every interior kink,
/// with `panels` panels per smooth piece. Integrands here are piecewise
/// smooth with derivative kinks (|w| in the resolvent density, the claim
/// floor in F̄); a kink in mid-panel would degrade Simpson to O(h²), so each
/// kink becomes a piece boundary instead.
pub(crate) fn simpson_piecewise(
    f: &mut dyn FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    kinks: &[f64],
    panels: usize,
) -> f64 {
    let mut cuts = vec![lo];
    for &k in kinks {
        if k > lo && k < hi {
            cuts.push(k);
        }
    }
    cuts.push(hi);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut acc = 0.0;
    for ab in cuts.windows(2) {
        if ab[1] > ab[0] {
            acc += simpson(&mut *f, ab[0], ab[1], panels);
        }
    }
    acc
}

/// Builds the renewal kernel `G` for an exponentially killed risk process on
/// the given lattice.
///
/// Cell weights come from boundary integrals of the continuum tail
/// `Ḡ(b) = ∫ q(w) F̄(b+w) dw`, so the discretisation satisfies
/// `tail(b) = Ḡ(b)` exactly at every cell boundary `b` (up to quadrature
/// error). Mass escaping the lattice window is recorded in the measure's
/// `lost_lo`/`lost_hi` ledger and still counts toward `rho`.
///
/// Errors: non-exponential killing and multi-dimensional drifts are
/// `InvalidParameter`; small-jump and Ornstein–Uhlenbeck components are
/// `UnsupportedComponent`; a quadrature total further than
/// [`KERNEL_MASS_TOL`] from λ/(λ+μ) is `InvalidParameter` (refine `panels`
/// or enlarge `t_max_factor`).
pub fn build_kernel(
    lambda: f64,
    claim: &TailModel,
    small: &SmallComponent,
    kill: &KillingSpec,
    grid: &Grid,
    quad: QuadratureSpec,
) -> Result<KernelG> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "claim arrival rate must be positive and finite, got {lambda}"
        )));
    }
    let mu = match kill {
        KillingSpec::ExpKill { mu } => {
            if !mu.is_finite() || *mu <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "killing rate must be positive and finite, got {mu}"
                )));
            }
            *mu
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "renewal kernels are translation invariant and exist only under \
                 exponential killing; got {other:?}"
            )));
        }
    };
    quad.validate()?;

    // Resolve the component into a tail evaluator Ḡ(b) and a label.
    enum Resolved {
        Drift { a: f64 },
        Brownian { a: f64, sigma: f64 },
    }
    let resolved = match small {
        SmallComponent::DriftOnly { a } => {
            require_one_dimensional(a)?;
            Resolved::Drift { a: a[0] }
        }
        SmallComponent::DriftBrownian { a, sigma } => {
            require_one_dimensional(a)?;
            if !sigma.is_finite() || *sigma <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "Brownian volatility must be positive and finite, got {sigma}"
                )));
            }
            Resolved::Brownian { a: a[0], sigma: *sigma }
        }
        SmallComponent::DriftSmallJumps { .. } => {
            return Err(Error::UnsupportedComponent(
                "small-jump increments have no closed resolvent density; \
                 use the simulator"
                    .into(),
            ));
        }
        SmallComponent::OrnsteinUhlenbeck { .. } => {
            return Err(Error::UnsupportedComponent(
                "Ornstein-Uhlenbeck modulation breaks translation invariance; \
                 use the simulator"
                    .into(),
            ));
        }
    };

    let rate = lambda + mu;
    let floor = claim.delta();
    // Ḡ at one boundary, and the same quadrature with F̄ ≡ 1 (the mass).
    let g_tail: Box<dyn Fn(f64) -> f64 + Sync>;
    let quadrature_mass: f64;
    match &resolved {
        Resolved::Drift { a } => {
            let a = *a;
            let t_max = quad.t_max_factor / rate;
            let density = move |t: f64| lambda * (-rate * t).exp();
            quadrature_mass = simpson(&mut |t| density(t), 0.0, t_max, quad.panels);
            g_tail = Box::new(move |b: f64| {
                // F̄(b + a·t) kinks where the argument crosses the claim
                // floor: t = (δ − b)/a.
                let kinks = if a != 0.0 { vec![(floor - b) / a] } else { vec![] };
                simpson_piecewise(
                    &mut |t: f64| density(t) * claim.tail(b + a * t),
                    0.0,
                    t_max,
                    &kinks,
                    quad.panels,
                )
            });
        }
        Resolved::Brownian { a, sigma } => {
            let (a, sigma) = (*a, *sigma);
            let delta = (a * a + 2.0 * rate * sigma * sigma).sqrt();
            // Slowest decay rate of q is (Δ−|a|)/σ²; size the window to it.
            let w_max = quad.t_max_factor * sigma * sigma / (delta - a.abs());
            let q = move |w: f64| (lambda / delta) * ((a * w - w.abs() * delta) / (sigma * sigma)).exp();
            // q kinks at 0; F̄(b + w) kinks at w = δ − b.
            quadrature_mass = simpson_piecewise(&mut |w| q(w), -w_max, w_max, &[0.0], quad.panels);
            g_tail = Box::new(move |b: f64| {
                simpson_piecewise(
                    &mut |w: f64| q(w) * claim.tail(b + w),
                    -w_max,
                    w_max,
                    &[0.0, floor - b],
                    quad.panels,
                )
            });
        }
    }

    let target = lambda / rate;
    if (quadrature_mass - target).abs() > KERNEL_MASS_TOL {
        return Err(Error::InvalidParameter(format!(
            "quadrature mass {quadrature_mass:.9} deviates from the killing split \
             {target:.9} by more than {KERNEL_MASS_TOL:e}; increase panels or the \
             truncation factor"
        )));
    }

    // Tail at every cell boundary b_i = point(i) − h/2, i = 0..=len.
    let half = grid.step() / 2.0;
    let boundary_tails: Vec<f64> = (0..=grid.len())
        .into_par_iter()
        .map(|i| {
            let b = if i < grid.len() {
                grid.point(i) - half
            } else {
                grid.point(grid.len() - 1) + half
            };
            g_tail(b)
        })
        .collect();

    // Differences of a pointwise-dominated quadrature are nonnegative in
    // exact arithmetic; clamp the odd ulp from floating-point summation.
    let weights: Vec<f64> = (0..grid.len())
        .map(|i| (boundary_tails[i] - boundary_tails[i + 1]).max(0.0))
        .collect();
    let lost_hi = boundary_tails[grid.len()].max(0.0);
    let lost_lo = (quadrature_mass - boundary_tails[0]).max(0.0);

    let measure = GridMeasure::from_weights(grid.clone(), weights, lost_lo, lost_hi)?;
    let rho = measure.total_mass();

    let component_label = match &resolved {
        Resolved::Drift { a } => format!("{{\"kind\":\"drift\",\"a\":{a}}}"),
        Resolved::Brownian { a, sigma } => {
            format!("{{\"kind\":\"drift_brownian\",\"a\":{a},\"sigma\":{sigma}}}")
        }
    };
    let provenance = format!(
        "{{\"kernel\":\"expkill\",\"lambda\":{lambda},\"mu\":{mu},\
         \"claim\":\"{:?}\",\"small\":{component_label},\
         \"grid\":{{\"step\":{},\"z_min\":{},\"z_max\":{}}},\
         \"quadrature\":{{\"panels\":{},\"t_max_factor\":{}}},\
         \"mass\":{rho},\"lost_lo\":{},\"lost_hi\":{}}}",
        claim.family(),
        grid.step(),
        grid.x_min(),
        grid.x_max(),
        quad.panels,
        quad.t_max_factor,
        measure.lost_lo(),
        measure.lost_hi(),
    );

    Ok(KernelG {
        measure,
        rho,
        provenance,
    })
}

fn require_one_dimensional(a: &[f64]) -> Result<()> {
    if a.len() != 1 {
        return Err(Error::InvalidParameter(format!(
            "kernel construction is one-dimensional; got {} drift coordinates",
            a.len()
        )));
    }
    if !a[0].is_finite() {
        return Err(Error::InvalidParameter(format!(
            "drift must be finite, got {}",
            a[0]
        )));
    }
    Ok(())
}

/// Closed-form resolvent density `q(w)` of the small component under
/// exponential killing: the defective density of the displacement
/// `W = a·T + σB_T` at the first surviving claim epoch, with
/// `∫ q = λ/(λ+μ)`.
///
/// Pure drift needs `a ≠ 0` (the driftless displacement is an atom at 0, not
/// a density); small-jump and Ornstein–Uhlenbeck components are unsupported.
pub fn q_function(
    lambda: f64,
    small: &SmallComponent,
    kill: &KillingSpec,
    w: f64,
) -> Result<f64> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "claim arrival rate must be positive and finite, got {lambda}"
        )));
    }
    let mu = match kill {
        KillingSpec::ExpKill { mu } if *mu > 0.0 && mu.is_finite() => *mu,
        KillingSpec::ExpKill { mu } => {
            return Err(Error::InvalidParameter(format!(
                "killing rate must be positive and finite, got {mu}"
            )));
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "resolvent density is defined under exponential killing only; \
                 got {other:?}"
            )));
        }
    };
    let rate = lambda + mu;
    match small {
        SmallComponent::DriftOnly { a } => {
            require_one_dimensional(a)?;
            let a = a[0];
            if a == 0.0 {
                return Err(Error::InvalidParameter(
                    "driftless displacement is an atom at zero, not a density; \
                     q is undefined"
                        .into(),
                ));
            }
            // Mass on the ray {a·t : t ≥ 0}: change of variables w = a·t.
            let t = w / a;
            if t < 0.0 {
                Ok(0.0)
            } else {
                Ok(lambda / a.abs() * (-rate * t).exp())
            }
        }
        SmallComponent::DriftBrownian { a, sigma } => {
            require_one_dimensional(a)?;
            if !sigma.is_finite() || *sigma <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "Brownian volatility must be positive and finite, got {sigma}"
                )));
            }
            let a = a[0];
            let delta = (a * a + 2.0 * rate * sigma * sigma).sqrt();
            Ok(lambda / delta * ((a * w - w.abs() * delta) / (sigma * sigma)).exp())
        }
        SmallComponent::DriftSmallJumps { .. } => Err(Error::UnsupportedComponent(
            "small-jump increments have no closed resolvent density".into(),
        )),
        SmallComponent::OrnsteinUhlenbeck { .. } => Err(Error::UnsupportedComponent(
            "Ornstein-Uhlenbeck modulation has no translation-invariant resolvent".into(),
        )),
    }
}

/// Least-squares exponential decay rate of sampled density values: fits
/// `−ln q(w) ≈ c + θ·w` and returns θ.
///
/// Needs at least 10 strictly positive samples. Constant samples (no decay)
/// and non-decaying fits are rejected as `DegenerateFit`.
pub fn decay_rate_fit(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 10 {
        return Err(Error::InvalidParameter(format!(
            "decay-rate fit needs at least 10 samples, got {}",
            points.len()
        )));
    }
    for &(w, q) in points {
        if !w.is_finite() || !q.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "decay-rate samples must be finite, got ({w}, {q})"
            )));
        }
        if q <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "decay-rate fit needs positive density values, got q({w}) = {q}"
            )));
        }
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|&(w, _)| w).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, q)| -q.ln()).collect();
    let x_bar = xs.iter().sum::<f64>() / n;
    let y_bar = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..points.len() {
        let dx = xs[i] - x_bar;
        let dy = ys[i] - y_bar;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx / n < 1e-12 {
        return Err(Error::DegenerateFit(
            "abscissae are (numerically) identical; slope is undetermined".into(),
        ));
    }
    if syy / n < 1e-12 {
        return Err(Error::DegenerateFit(
            "density samples are constant; there is no decay to fit".into(),
        ));
    }
    let theta = sxy / sxx;
    if theta.is_nan() || theta <= 0.0 {
        return Err(Error::DegenerateFit(format!(
            "fitted rate {theta:.3e} is not a decay"
        )));
    }
    Ok(theta)
}

/// Reference exponential-decay rate of the resolvent density as implied by
/// parameters alone: the jump-support rate `θ_ν`, capped by the
/// drift/arrival bound `λ/(2|a|)` when the drift is nonzero.
pub fn theta_q_reference(theta_nu: f64, lambda: f64, a: f64) -> f64 {
    if a == 0.0 {
        theta_nu
    } else {
        theta_nu.min(lambda / (2.0 * a.abs()))
    }
}
