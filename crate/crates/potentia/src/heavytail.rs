//! One-dimensional heavy-tailed claim laws, integrated tails, multivariate
//! claim constructions, and numeric subexponentiality diagnostics.
//!
//! All laws are described through their survival function ("tail")
//! `F̄(z) = P(U > z)`, right-continuous, with a support floor `δ ≥ 0`
//! (`F̄(z) = 1` for `z < δ`). The parametric families:
//!
//! ```text
//!   Pareto(c, α):      F̄(z) = c·z^{−(1+α)}          for z ≥ δ   (δ > 0)
//!   Exponential(β):    F̄(z) = exp(−β(z−δ))          for z ≥ δ
//!   Weibull(τ, s):     F̄(z) = exp(−((z−δ)/s)^τ)     for z ≥ δ, τ ∈ (0,1)
//!   Lognormal(m, σ):   F̄(z) = Φ̄((ln(z−δ) − m)/σ)    for z > δ
//!   Empirical:         F̄(z) = #{samples > z}/n
//! ```
//!
//! Pareto admits `α ∈ (−1, 0]` at construction (the tail exponent `1+α`
//! stays positive, so `F̄` is a valid tail), but any operation that needs a
//! finite mean — integrated tails in particular — rejects such models with an
//! "infinite mean" error rather than truncating.
//!
//! The *integrated tail* of a finite-mean `F` is the law `F_I` with density
//! `F̄(y)/μ` on `[0, ∞)`; it governs heavy-tailed first-passage asymptotics
//! and is used as the ladder-height law by the solvers and the dual
//! simulator. Closed forms are used for every family (regularised incomplete
//! gamma for Weibull, a call-price form for lognormal, suffix sums for
//! empirical).
//!
//! Subexponentiality is diagnosed numerically: `F` is subexponential when
//! `F̄^{∗2}(x)/F̄(x) → 2`, i.e. a sum of two independent claims is large
//! essentially only when one of them is ("single big jump"). The ratio is
//! evaluated on a grid in log-domain, so probes far beyond the smallest
//! positive `f64` tail value remain exact; only a genuinely vanishing tail
//! (possible for the empirical family) raises an error.

use crate::error::{Error, Result};
use rand::Rng;
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma, gamma_ur};

/// ln(2π)/2, used by the normal log-density in quantile refinement.
const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_7;

/// Parametric family of a one-dimensional claim law.
#[derive(Clone, Debug)]
pub enum TailFamily {
    /// Power tail `F̄(z) = c·z^{−(1+α)}` on `z ≥ δ`. Requires
    /// `c·δ^{−(1+α)} ≤ 1`; when the inequality is strict the law has an atom
    /// of mass `1 − c·δ^{−(1+α)}` at the floor.
    Pareto { c: f64, alpha: f64 },
    /// Shifted exponential with rate `β`.
    Exponential { beta: f64 },
    /// Stretched exponential with shape `τ ∈ (0, 1)` (heavy-tailed range)
    /// and the given scale.
    Weibull { shape: f64, scale: f64 },
    /// `δ + exp(m + σ·N)` for a standard normal `N`.
    Lognormal { mu_ln: f64, sigma_ln: f64 },
    /// Uniform draw from a fixed sample set (kept sorted ascending). The
    /// tail is a right-continuous step function; beyond the largest sample
    /// it is exactly zero, with no tail extension — extrapolating an
    /// empirical tail is a diagnostic footgun, so probes out there must be
    /// handled by the caller (see [`TailModel::truncation_point`]).
    Empirical { samples: Vec<f64> },
}

/// A one-dimensional claim-size law: a [`TailFamily`] plus the support floor
/// `δ` and the (possibly infinite) mean, precomputed at construction.
#[derive(Clone, Debug)]
pub struct TailModel {
    family: TailFamily,
    delta: f64,
    mean: f64,
}

impl TailModel {
    /// Power-tailed claims. `alpha > −1` keeps the tail exponent positive;
    /// `alpha ≤ 0` yields an infinite mean (accepted here, rejected by
    /// mean-requiring operations). Requires `delta > 0` and
    /// `c·delta^{−(1+alpha)} ≤ 1` so the tail is a valid survival function.
    pub fn pareto(c: f64, alpha: f64, delta: f64) -> Result<Self> {
        if !c.is_finite() || c <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "Pareto scale coefficient c must be positive and finite, got {c}"
            )));
        }
        if !alpha.is_finite() || alpha <= -1.0 {
            return Err(Error::InvalidParameter(format!(
                "Pareto tail index alpha must exceed -1, got {alpha}"
            )));
        }
        if !delta.is_finite() || delta <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "Pareto support floor delta must be positive, got {delta}"
            )));
        }
        let tail_at_floor = c * delta.powf(-(1.0 + alpha));
        if tail_at_floor > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "Pareto tail at the floor is c·delta^(-(1+alpha)) = {tail_at_floor:.6} > 1; \
                 choose c so the tail starts at or below 1"
            )));
        }
        let mean = if alpha > 0.0 {
            // ∫₀^δ 1 dz + ∫_δ^∞ c·z^{−(1+α)} dz = δ + c·δ^{−α}/α.
            delta + c * delta.powf(-alpha) / alpha
        } else {
            f64::INFINITY
        };
        Ok(Self {
            family: TailFamily::Pareto { c, alpha },
            delta,
            mean,
        })
    }

    /// Exponential claims with rate `beta`, shifted to start at `delta`.
    pub fn exponential(beta: f64, delta: f64) -> Result<Self> {
        if !beta.is_finite() || beta <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "Exponential rate beta must be positive, got {beta}"
            )));
        }
        Self::check_floor(delta)?;
        Ok(Self {
            family: TailFamily::Exponential { beta },
            delta,
            mean: delta + 1.0 / beta,
        })
    }

    /// Stretched-exponential (Weibull) claims with `shape ∈ (0, 1)` — the
    /// heavy-tailed range; `shape ≥ 1` would be light-tailed and is outside
    /// this crate's scope.
    pub fn weibull(shape: f64, scale: f64, delta: f64) -> Result<Self> {
        if !(shape > 0.0 && shape < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Weibull shape must lie in (0, 1) for a heavy tail, got {shape}"
            )));
        }
        if !scale.is_finite() || scale <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "Weibull scale must be positive, got {scale}"
            )));
        }
        Self::check_floor(delta)?;
        // E[U − δ] = scale·Γ(1 + 1/τ).
        let mean = delta + scale * gamma(1.0 + 1.0 / shape);
        Ok(Self {
            family: TailFamily::Weibull { shape, scale },
            delta,
            mean,
        })
    }

    /// Lognormal claims: `U = delta + exp(mu_ln + sigma_ln·N)`.
    pub fn lognormal(mu_ln: f64, sigma_ln: f64, delta: f64) -> Result<Self> {
        if !sigma_ln.is_finite() || sigma_ln <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "Lognormal sigma must be positive, got {sigma_ln}"
            )));
        }
        if !mu_ln.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Lognormal mu must be finite, got {mu_ln}"
            )));
        }
        Self::check_floor(delta)?;
        let mean = delta + (mu_ln + 0.5 * sigma_ln * sigma_ln).exp();
        Ok(Self {
            family: TailFamily::Lognormal { mu_ln, sigma_ln },
            delta,
            mean,
        })
    }

    /// Empirical claims: uniform resampling from the given observations.
    /// The support floor is the smallest observation.
    pub fn empirical(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidParameter(
                "empirical model needs at least one sample".into(),
            ));
        }
        if samples.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::InvalidParameter(
                "empirical samples must be finite and nonnegative".into(),
            ));
        }
        samples.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
        let delta = samples[0];
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        Ok(Self {
            family: TailFamily::Empirical { samples },
            delta,
            mean,
        })
    }

    fn check_floor(delta: f64) -> Result<()> {
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "support floor delta must be finite and >= 0, got {delta}"
            )));
        }
        Ok(())
    }

    /// The parametric family.
    pub fn family(&self) -> &TailFamily {
        &self.family
    }

    /// Support floor `δ`: all claims are ≥ δ almost surely.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Expected claim size; `+∞` for Pareto with `alpha ≤ 0`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// The mean, or an error when it diverges.
    pub fn finite_mean(&self) -> Result<f64> {
        if self.mean.is_finite() {
            Ok(self.mean)
        } else {
            Err(Error::InfiniteMean(format!(
                "model {:?} has a divergent mean",
                self.family_name()
            )))
        }
    }

    fn family_name(&self) -> &'static str {
        match self.family {
            TailFamily::Pareto { .. } => "Pareto",
            TailFamily::Exponential { .. } => "Exponential",
            TailFamily::Weibull { .. } => "Weibull",
            TailFamily::Lognormal { .. } => "Lognormal",
            TailFamily::Empirical { .. } => "Empirical",
        }
    }

    /// Survival function `F̄(z) = P(U > z)`, right-continuous, in `[0, 1]`,
    /// equal to 1 below the support floor.
    pub fn tail(&self, z: f64) -> f64 {
        if z < self.delta {
            return 1.0;
        }
        match &self.family {
            TailFamily::Pareto { c, alpha } => c * z.powf(-(1.0 + alpha)),
            TailFamily::Exponential { beta } => (-beta * (z - self.delta)).exp(),
            TailFamily::Weibull { shape, scale } => {
                (-((z - self.delta) / scale).powf(*shape)).exp()
            }
            TailFamily::Lognormal { mu_ln, sigma_ln } => {
                if z <= self.delta {
                    1.0
                } else {
                    let y = ((z - self.delta).ln() - mu_ln) / sigma_ln;
                    normal_tail(y)
                }
            }
            TailFamily::Empirical { samples } => {
                let n_gt = samples.len() - samples.partition_point(|s| *s <= z);
                n_gt as f64 / samples.len() as f64
            }
        }
    }

    /// Natural log of the tail; `−∞` exactly where the tail vanishes.
    /// Stays finite far beyond the underflow point of [`Self::tail`], which
    /// is what makes deep-tail ratio diagnostics possible.
    pub fn log_tail(&self, z: f64) -> f64 {
        if z < self.delta {
            return 0.0;
        }
        match &self.family {
            TailFamily::Pareto { c, alpha } => c.ln() - (1.0 + alpha) * z.ln(),
            TailFamily::Exponential { beta } => -beta * (z - self.delta),
            TailFamily::Weibull { shape, scale } => -((z - self.delta) / scale).powf(*shape),
            TailFamily::Lognormal { mu_ln, sigma_ln } => {
                if z <= self.delta {
                    0.0
                } else {
                    let y = ((z - self.delta).ln() - mu_ln) / sigma_ln;
                    log_normal_tail(y)
                }
            }
            TailFamily::Empirical { .. } => {
                let t = self.tail(z);
                if t > 0.0 {
                    t.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Upper quantile: the smallest `z` with `F̄(z) ≤ p`, for `p ∈ (0, 1]`.
    /// Inverse of [`Self::tail`] wherever the tail is continuous and
    /// strictly decreasing; lands on the atom location (Pareto floor atom,
    /// empirical steps) otherwise.
    ///
    /// # Panics
    /// Debug-panics when `p` is outside `(0, 1]`.
    pub fn quantile(&self, p: f64) -> f64 {
        debug_assert!(p > 0.0 && p <= 1.0, "quantile needs p in (0,1], got {p}");
        match &self.family {
            TailFamily::Pareto { c, alpha } => {
                let tail_at_floor = c * self.delta.powf(-(1.0 + alpha));
                if p >= tail_at_floor {
                    self.delta
                } else {
                    (c / p).powf(1.0 / (1.0 + alpha))
                }
            }
            TailFamily::Exponential { beta } => self.delta - p.ln() / beta,
            TailFamily::Weibull { shape, scale } => {
                self.delta + scale * (-p.ln()).powf(1.0 / shape)
            }
            TailFamily::Lognormal { mu_ln, sigma_ln } => {
                self.delta + (mu_ln + sigma_ln * normal_tail_inverse(p)).exp()
            }
            TailFamily::Empirical { samples } => {
                // Smallest sample s with #{samples > s}/n ≤ p, i.e. the
                // order statistic at index ⌈n(1−p)⌉ − 1 (0-based), clamped.
                let n = samples.len();
                let k = (n as f64 * (1.0 - p)).ceil() as usize;
                samples[k.min(n - 1)]
            }
        }
    }

    /// One inverse-transform draw: `quantile(1 − u)` for `u` uniform on
    /// `[0, 1)`, so the argument lies in `(0, 1]` and the draw is ≥ δ.
    /// Empirical models draw a uniform index instead (same law, cheaper).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        match &self.family {
            TailFamily::Empirical { samples } => {
                let idx = ((u * samples.len() as f64) as usize).min(samples.len() - 1);
                samples[idx]
            }
            _ => self.quantile(1.0 - u),
        }
    }

    /// For the empirical family, the largest observation — the point beyond
    /// which the tail is exactly zero by construction (no extrapolation).
    /// `None` for parametric families, whose tails are positive everywhere.
    pub fn truncation_point(&self) -> Option<f64> {
        match &self.family {
            TailFamily::Empirical { samples } => samples.last().copied(),
            _ => None,
        }
    }

    /// Partial first moment `m(x) = ∫ₓ^∞ F̄(y) dy`, in closed form per
    /// family. `m(0)` equals the mean; `m` is convex, decreasing, and
    /// continuous even when the law has atoms.
    fn partial_mean_above(&self, x: f64) -> Result<f64> {
        let mu = self.finite_mean()?;
        if x <= 0.0 {
            return Ok(mu - x); // F̄ ≡ 1 on [x, 0) for x < 0.
        }
        if x <= self.delta {
            // F̄ ≡ 1 on [x, δ): m(x) = (δ − x) + m(δ).
            return Ok(self.delta - x + self.partial_mean_from_floor()?);
        }
        Ok(match &self.family {
            TailFamily::Pareto { c, alpha } => c * x.powf(-alpha) / alpha,
            TailFamily::Exponential { beta } => (-beta * (x - self.delta)).exp() / beta,
            TailFamily::Weibull { shape, scale } => {
                // Substituting v = ((y−δ)/s)^τ turns ∫ₓ^∞ e^{−((y−δ)/s)^τ} dy
                // into (s/τ)·Γ(1/τ)·Q(1/τ, ((x−δ)/s)^τ) with Q the
                // regularised upper incomplete gamma.
                let a = 1.0 / shape;
                let w = ((x - self.delta) / scale).powf(*shape);
                (scale / shape) * gamma(a) * gamma_ur(a, w)
            }
            TailFamily::Lognormal { mu_ln, sigma_ln } => {
                // m(x) = E[(V − k)⁺] for V lognormal, k = x − δ:
                // e^{m+σ²/2}·Φ(d₁) − k·Φ(d₂), d₁ = (m+σ² − ln k)/σ, d₂ = d₁ − σ.
                let k = x - self.delta;
                let d1 = (mu_ln + sigma_ln * sigma_ln - k.ln()) / sigma_ln;
                let d2 = d1 - sigma_ln;
                let ev = (mu_ln + 0.5 * sigma_ln * sigma_ln).exp();
                (ev * normal_cdf(d1) - k * normal_cdf(d2)).max(0.0)
            }
            TailFamily::Empirical { samples } => {
                // (1/n)·Σ max(0, s_i − x), via the sorted suffix.
                let i = samples.partition_point(|s| *s <= x);
                let suffix: f64 = samples[i..].iter().sum();
                (suffix - x * (samples.len() - i) as f64) / samples.len() as f64
            }
        })
    }

    fn partial_mean_from_floor(&self) -> Result<f64> {
        Ok(self.finite_mean()? - self.delta)
    }

    /// The integrated-tail law `F_I` of this model (density `F̄(y)/μ` on
    /// `[0, ∞)`). Errors with an "infinite mean" message when the mean
    /// diverges — truncating instead would silently corrupt every
    /// first-passage asymptotic computed from the result.
    pub fn integrated_tail(&self) -> Result<IntegratedTail> {
        let mean = self.finite_mean().map_err(|_| {
            Error::InfiniteMean(format!(
                "infinite mean: integrated tail of a {} model with divergent first moment \
                 is undefined",
                self.family_name()
            ))
        })?;
        Ok(IntegratedTail {
            source: self.clone(),
            mean,
        })
    }

    /// Numeric subexponentiality probe: `F̄^{∗2}(x)/F̄(x)`, the ratio of the
    /// two-claim-sum tail to the single-claim tail, evaluated by midpoint
    /// cell masses on a grid of the given step. Subexponential laws approach
    /// 2; light tails diverge (≈ `1 + βx` for the exponential family).
    ///
    /// All arithmetic runs in log-domain, so the probe stays exact far past
    /// the point where `F̄(x)` underflows as an `f64`. The only error is a
    /// genuinely vanishing tail (`log F̄(x) = −∞`, possible for empirical
    /// models beyond their largest sample).
    pub fn subexp_ratio(&self, x: f64, step: f64) -> Result<f64> {
        if step.is_nan() || step <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "subexp_ratio needs a positive grid step, got {step}"
            )));
        }
        subexp_ratio_of(&|z| self.log_tail(z), self.delta, x, step)
    }

    /// Long-tail probe `F̄(x − a)/F̄(x)`, computed through log-tails; → 1 for
    /// long-tailed laws as `x → ∞`.
    pub fn long_tail_ratio(&self, x: f64, a: f64) -> f64 {
        (self.log_tail(x - a) - self.log_tail(x)).exp()
    }

    /// Assemble the three diagnostic curves on the given probe points:
    /// the convolution-ratio curve (→ 2 iff subexponential), the long-tail
    /// curve `F̄(x−a)/F̄(x)` (→ 1), and the heavy-tail witness
    /// `F̄(x)·e^{ςx}` (→ ∞ for heavy tails, every ς > 0).
    pub fn diagnostics(
        &self,
        probes: &[f64],
        step: f64,
        shift_a: f64,
        varsigma: f64,
    ) -> Result<TailDiagnostics> {
        let mut subexp_curve = Vec::with_capacity(probes.len());
        let mut long_tail_curve = Vec::with_capacity(probes.len());
        let mut heavy_witness = Vec::with_capacity(probes.len());
        for &x in probes {
            subexp_curve.push((x, self.subexp_ratio(x, step)?));
            long_tail_curve.push((x, self.long_tail_ratio(x, shift_a)));
            heavy_witness.push((x, (self.log_tail(x) + varsigma * x).exp()));
        }
        Ok(TailDiagnostics {
            subexp_curve,
            long_tail_curve,
            heavy_witness,
        })
    }
}

/// Generic log-domain evaluation of `F̄^{∗2}(x)/F̄(x)` for any law given by
/// its log-tail and support floor. Shared by [`TailModel::subexp_ratio`] and
/// the integrated-tail diagnostic in the asymptotics module.
///
/// Uses the identity `F̄^{∗2}(x) = F̄(x) + ∫_{[δ,x]} F̄(x−y) F(dy)` with the
/// integral discretised as exact cell masses `F̄(l) − F̄(r)` (differences of
/// the analytic tail, so no mass is invented or lost) times the tail at the
/// cell midpoint.
pub fn subexp_ratio_of(
    log_tail: &dyn Fn(f64) -> f64,
    floor: f64,
    x: f64,
    step: f64,
) -> Result<f64> {
    let log_tail_x = log_tail(x);
    if log_tail_x == f64::NEG_INFINITY {
        return Err(Error::TailUnderflow);
    }
    if x <= floor {
        return Ok((-log_tail_x).exp());
    }
    let n_cells = ((x - floor) / step).ceil() as usize;
    let mut sum = 0.0_f64;
    let mut compensation = 0.0_f64;
    // Left boundary of the first cell carries the whole mass below and at
    // the floor: log F̄(δ−) = 0.
    let mut log_tail_left = 0.0_f64;
    for k in 0..n_cells {
        let l = floor + k as f64 * step;
        let r = (l + step).min(x);
        let log_tail_right = log_tail(r);
        // Cell mass F̄(l) − F̄(r) in log-domain:
        // log mass = log F̄(l) + log(1 − exp(log F̄(r) − log F̄(l))).
        let diff = log_tail_right - log_tail_left;
        if diff < 0.0 {
            let log_mass = log_tail_left + (-diff.exp()).ln_1p();
            let mid = 0.5 * (l + r);
            let term = (log_mass + log_tail(x - mid) - log_tail_x).exp();
            // Kahan compensation: the sum can mix O(1) and O(1e-12) terms.
            let y = term - compensation;
            let t = sum + y;
            compensation = (t - sum) - y;
            sum = t;
        }
        log_tail_left = log_tail_right;
    }
    Ok(1.0 + sum)
}

/// The integrated-tail law `F_I(dx) = (F̄(x)/μ) dx` of a finite-mean claim
/// law: `tail_I(x) = (1/μ)∫ₓ^∞ F̄(y) dy`, continuous with `tail_I(0) = 1`.
#[derive(Clone, Debug)]
pub struct IntegratedTail {
    source: TailModel,
    mean: f64,
}

impl IntegratedTail {
    /// The claim law this integrated tail was built from.
    pub fn source(&self) -> &TailModel {
        &self.source
    }

    /// Mean of the source law (the normalising constant `μ`).
    pub fn source_mean(&self) -> f64 {
        self.mean
    }

    /// Survival function of `F_I`: `(1/μ)∫ₓ^∞ F̄(y) dy` for `x ≥ 0`, one
    /// below. Continuous and nonincreasing even when the source has atoms.
    pub fn tail_i(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        self.source
            .partial_mean_above(x)
            .expect("finite mean enforced at construction")
            / self.mean
    }

    /// Distribution function `1 − tail_i`.
    pub fn cdf_i(&self, x: f64) -> f64 {
        1.0 - self.tail_i(x)
    }

    /// Density `F̄(x)/μ` of the absolutely continuous law `F_I`.
    pub fn density(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            self.source.tail(x) / self.mean
        }
    }

    /// Upper quantile of `F_I`: the `z ≥ 0` with `tail_i(z) = p`. Closed
    /// form for Pareto and exponential sources; bisection to ~1e-14
    /// relative for the rest (the tail is strictly decreasing and
    /// continuous, so bisection cannot stall).
    pub fn quantile(&self, p: f64) -> f64 {
        debug_assert!(p > 0.0 && p <= 1.0, "quantile needs p in (0,1], got {p}");
        let delta = self.source.delta();
        let tail_at_floor = if delta > 0.0 { self.tail_i(delta) } else { 1.0 };
        if p >= tail_at_floor {
            // Linear branch below the floor: tail_i(x) = ((δ−x) + m(δ))/μ
            // solves to x = μ(1 − p).
            return self.mean * (1.0 - p);
        }
        match self.source.family() {
            TailFamily::Pareto { c, alpha } => {
                // (c/α)·x^{−α} = μp  ⇒  x = (c/(α μ p))^{1/α}.
                (c / (alpha * self.mean * p)).powf(1.0 / alpha)
            }
            TailFamily::Exponential { beta } => {
                // e^{−β(x−δ)}/β = μp  ⇒  x = δ − ln(β μ p)/β.
                delta - (beta * self.mean * p).ln() / beta
            }
            _ => {
                // Bracket [δ, hi] by doubling, then bisect. 100 halvings
                // reduce the bracket below f64 resolution at any scale.
                let mut lo = delta;
                let mut hi = (2.0 * self.mean).max(delta + 1.0);
                while self.tail_i(hi) > p {
                    hi *= 2.0;
                }
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if self.tail_i(mid) > p {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= f64::EPSILON * hi.abs() {
                        break;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }

    /// One inverse-transform draw from `F_I`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.quantile(1.0 - u)
    }
}

/// Multivariate claim structure: a single law, an independent product, or a
/// comonotone proportional split of one driver.
#[derive(Clone, Debug)]
pub enum ClaimStructure {
    /// One-dimensional claims.
    Univariate(TailModel),
    /// Independent coordinates, one law per coordinate.
    IndependentProduct(Vec<TailModel>),
    /// `U = (ϱ₁·Ξ, …, ϱ_d·Ξ)` for a single driver `Ξ` and positive
    /// proportions summing to one — every claim hits all coordinates in
    /// fixed ratio.
    ComonotoneSplit { xi: TailModel, proportions: Vec<f64> },
}

/// Claim-size law in `d ≥ 1` dimensions.
#[derive(Clone, Debug)]
pub struct ClaimModel {
    structure: ClaimStructure,
}

impl ClaimModel {
    /// One-dimensional claims.
    pub fn univariate(model: TailModel) -> Self {
        Self {
            structure: ClaimStructure::Univariate(model),
        }
    }

    /// Independent coordinates. Needs at least one factor.
    pub fn independent_product(factors: Vec<TailModel>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidParameter(
                "independent product needs at least one factor".into(),
            ));
        }
        Ok(Self {
            structure: ClaimStructure::IndependentProduct(factors),
        })
    }

    /// Comonotone proportional split of the driver `xi`. Proportions must be
    /// strictly positive and sum to 1 (within 1e-9).
    pub fn comonotone_split(xi: TailModel, proportions: Vec<f64>) -> Result<Self> {
        if proportions.len() < 2 {
            return Err(Error::InvalidParameter(
                "comonotone split needs at least two proportions".into(),
            ));
        }
        if proportions.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(Error::InvalidParameter(
                "comonotone proportions must be finite and strictly positive".into(),
            ));
        }
        let total: f64 = proportions.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "comonotone proportions must sum to 1, got {total}"
            )));
        }
        Ok(Self {
            structure: ClaimStructure::ComonotoneSplit { xi, proportions },
        })
    }

    /// The underlying structure.
    pub fn structure(&self) -> &ClaimStructure {
        &self.structure
    }

    /// Number of coordinates.
    pub fn dimension(&self) -> usize {
        match &self.structure {
            ClaimStructure::Univariate(_) => 1,
            ClaimStructure::IndependentProduct(fs) => fs.len(),
            ClaimStructure::ComonotoneSplit { proportions, .. } => proportions.len(),
        }
    }

    /// Joint survival of the rectangle: for the independent product,
    /// `P(U_i > x_i for every i) = ∏ F̄_i(x_i)`; for the comonotone split,
    /// `H̄(min_i x_i/ϱ_i)` (all coordinates move together, so the binding
    /// constraint is the smallest rescaled threshold).
    pub fn joint_tail(&self, x: &[f64]) -> f64 {
        self.check_dim(x);
        match &self.structure {
            ClaimStructure::Univariate(m) => m.tail(x[0]),
            ClaimStructure::IndependentProduct(fs) => fs
                .iter()
                .zip(x)
                .map(|(f, xi)| f.tail(*xi))
                .product(),
            ClaimStructure::ComonotoneSplit { xi, proportions } => {
                xi.tail(Self::comonotone_pinch(x, proportions))
            }
        }
    }

    /// Exceedance tail `P(U_i > x_i for SOME i) = 1 − P(U ≤ x)` — the
    /// multivariate survivor that drives ruinous-claim rates and the
    /// heavy-tail limit comparisons. Coincides with [`Self::joint_tail`] for
    /// univariate and comonotone claims; differs for products, where
    /// `1 − ∏ F_i(x_i) ≈ Σ F̄_i(x_i)` at large `x`.
    pub fn or_tail(&self, x: &[f64]) -> f64 {
        self.check_dim(x);
        match &self.structure {
            ClaimStructure::Univariate(m) => m.tail(x[0]),
            ClaimStructure::IndependentProduct(fs) => {
                let cdf_prod: f64 = fs
                    .iter()
                    .zip(x)
                    .map(|(f, xi)| 1.0 - f.tail(*xi))
                    .product();
                1.0 - cdf_prod
            }
            ClaimStructure::ComonotoneSplit { xi, proportions } => {
                xi.tail(Self::comonotone_pinch(x, proportions))
            }
        }
    }

    fn comonotone_pinch(x: &[f64], proportions: &[f64]) -> f64 {
        x.iter()
            .zip(proportions)
            .map(|(xi, p)| xi / p)
            .fold(f64::INFINITY, f64::min)
    }

    /// One multivariate draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        out.clear();
        match &self.structure {
            ClaimStructure::Univariate(m) => out.push(m.sample(rng)),
            ClaimStructure::IndependentProduct(fs) => {
                out.extend(fs.iter().map(|f| f.sample(rng)));
            }
            ClaimStructure::ComonotoneSplit { xi, proportions } => {
                let draw = xi.sample(rng);
                out.extend(proportions.iter().map(|p| p * draw));
            }
        }
    }

    /// Per-coordinate expected claim sizes (used by net-profit checks).
    pub fn coordinate_means(&self) -> Vec<f64> {
        match &self.structure {
            ClaimStructure::Univariate(m) => vec![m.mean()],
            ClaimStructure::IndependentProduct(fs) => fs.iter().map(TailModel::mean).collect(),
            ClaimStructure::ComonotoneSplit { xi, proportions } => {
                proportions.iter().map(|p| p * xi.mean()).collect()
            }
        }
    }

    /// The law of coordinate `i` alone. Every family is closed under
    /// positive scaling, so the comonotone marginal `ϱ_i·Ξ` stays inside the
    /// parametric catalogue (e.g. a scaled Pareto(c, α, δ) is
    /// Pareto(c·ϱ^{1+α}, α, ϱ·δ)).
    pub fn marginal(&self, i: usize) -> Result<TailModel> {
        match &self.structure {
            ClaimStructure::Univariate(m) => {
                if i == 0 {
                    Ok(m.clone())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "marginal index {i} out of range for dimension 1"
                    )))
                }
            }
            ClaimStructure::IndependentProduct(fs) => fs.get(i).cloned().ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "marginal index {i} out of range for dimension {}",
                    fs.len()
                ))
            }),
            ClaimStructure::ComonotoneSplit { xi, proportions } => {
                let rho = *proportions.get(i).ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "marginal index {i} out of range for dimension {}",
                        proportions.len()
                    ))
                })?;
                scale_model(xi, rho)
            }
        }
    }

    fn check_dim(&self, x: &[f64]) {
        assert_eq!(
            x.len(),
            self.dimension(),
            "claim-model argument dimension mismatch"
        );
    }
}

/// The law of `s·U` for `s > 0` — exact within the parametric catalogue.
fn scale_model(model: &TailModel, s: f64) -> Result<TailModel> {
    debug_assert!(s > 0.0);
    let delta = model.delta();
    match model.family() {
        TailFamily::Pareto { c, alpha } => {
            // P(sU > z) = c·(z/s)^{−(1+α)} = (c·s^{1+α})·z^{−(1+α)}.
            TailModel::pareto(c * s.powf(1.0 + alpha), *alpha, s * delta)
        }
        TailFamily::Exponential { beta } => TailModel::exponential(beta / s, s * delta),
        TailFamily::Weibull { shape, scale } => TailModel::weibull(*shape, scale * s, s * delta),
        TailFamily::Lognormal { mu_ln, sigma_ln } => {
            TailModel::lognormal(mu_ln + s.ln(), *sigma_ln, s * delta)
        }
        TailFamily::Empirical { samples } => {
            TailModel::empirical(samples.iter().map(|v| v * s).collect())
        }
    }
}

/// Diagnostic curves for heavy-tail classification of a single law.
#[derive(Clone, Debug)]
pub struct TailDiagnostics {
    /// `(x, F̄^{∗2}(x)/F̄(x))` — approaches 2 iff subexponential.
    pub subexp_curve: Vec<(f64, f64)>,
    /// `(x, F̄(x−a)/F̄(x))` — approaches 1 iff long-tailed.
    pub long_tail_curve: Vec<(f64, f64)>,
    /// `(x, F̄(x)·e^{ςx})` — diverges for heavy tails, for every ς > 0.
    pub heavy_witness: Vec<(f64, f64)>,
}

/// Standard normal survival `Φ̄(y) = erfc(y/√2)/2`.
pub(crate) fn normal_cdf(y: f64) -> f64 {
    0.5 * erfc(-y / std::f64::consts::SQRT_2)
}

/// Standard normal survival function.
pub(crate) fn normal_tail(y: f64) -> f64 {
    0.5 * erfc(y / std::f64::consts::SQRT_2)
}

/// log Φ̄(y), finite far into the right tail where `Φ̄` underflows.
/// For y ≤ 25 the direct formula is exact enough; beyond that the
/// asymptotic expansion Φ̄(y) = φ(y)/y · (1 − 1/y² + 3/y⁴ − …) is used
/// (relative error < 1e-9 already at y = 25).
pub(crate) fn log_normal_tail(y: f64) -> f64 {
    if y <= 25.0 {
        normal_tail(y).ln()
    } else {
        let y2 = y * y;
        -0.5 * y2 - HALF_LN_TWO_PI - y.ln() + (1.0 - 1.0 / y2 + 3.0 / (y2 * y2)).ln()
    }
}

/// Inverse of the standard normal survival function, Newton-polished to
/// near machine precision (the seed comes from the library inverse CDF; two
/// Newton steps on Φ̄(y) − p remove its residual error).
pub(crate) fn normal_tail_inverse(p: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    let n = Normal::new(0.0, 1.0).expect("unit normal");
    let mut y = -n.inverse_cdf(p);
    for _ in 0..2 {
        let phi = (-0.5 * y * y).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if phi <= f64::MIN_POSITIVE {
            break;
        }
        y += (normal_tail(y) - p) / phi;
    }
    y
}
