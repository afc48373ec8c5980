//! Event-driven Monte Carlo estimators for killed risk processes.
//!
//! The simulated object is the surplus-type process
//!
//! ```text
//!     X_t = x + a·t + Y_t − Σ_{k ≤ N_t} U_k,
//! ```
//!
//! with a Poisson(λ) claim stream, claim vectors `U_k` from a [`ClaimModel`],
//! and a small component `Y` (nothing, Brownian, bounded small jumps, or a
//! mean-reverting jump component). The estimators integrate a bounded payoff
//! `ℓ` along the path until the process is killed:
//!
//! ```text
//!     u(x) = E^x ∫₀^T ℓ(X_s) ds,
//! ```
//!
//! where `T` is an independent exponential clock, the first passage of a
//! one-dimensional surplus below zero, or the first exit of a multivariate
//! surplus from the positive quadrant. Ruin-type quantities are recovered
//! with indicator-style payoffs or estimated directly from event times.
//!
//! # Exactness
//!
//! Between claim epochs the path is deterministic drift (plus exactly
//! sampled Gaussian increments for the Brownian component, and exactly
//! sampled shot-noise epochs for the small-jump component), so:
//!
//! * indicator payoffs over drift segments are integrated in closed form as
//!   interval measures (no time-discretisation bias at all);
//! * smooth payoffs use kink-aware Simpson quadrature on each segment;
//! * Brownian segments use trapezoidal integration on exactly distributed
//!   increments at spacing `McOptions::step`;
//! * ruin detection is exact at claim epochs for pure-drift dynamics and
//!   uses the Brownian-bridge crossing probability
//!   `exp(−2·y₀·y₁/(σ²·Δt))` between epochs for drift–Brownian dynamics;
//! * only the Ornstein–Uhlenbeck component falls back to an Euler scheme,
//!   and estimates made with it are labelled `"expkill-approximate"`.
//!
//! # Determinism
//!
//! Every path `i` draws from `ChaCha8` seeded with the run seed and moved to
//! stream `i`, so path `i` is identical no matter how work is scheduled.
//! Bernoulli-type estimators aggregate integer counts (exactly associative),
//! and continuous estimators collect per-path values in path order and
//! reduce them sequentially with compensated summation — estimates and
//! standard errors are bit-identical across thread counts and repeat runs.
//!
//! Within a path, draws are consumed in chronological order: the killing
//! time first where one exists, then per claim segment the interarrival
//! time, any segment noise (Gaussian increments, small-jump epochs and
//! sizes, or one normal and one uniform for the bridge test), then the claim
//! coordinates.
//!
//! # Horizons
//!
//! Barrier-killed estimators truncate at a time horizon and report the
//! fraction of detected events that landed in the second half of the window
//! (`late_fraction`) as an honest truncation diagnostic. With
//! `McOptions::horizon = None` the horizon starts at `16/λ + 2·x_max/margin`
//! (margin = premium rate minus expected claim outflow) and doubles until
//! the late fraction falls to 2% for every rung, a doubling cap is hit, or
//! no events are seen at all. The dual random-walk estimator and the
//! exponential-clock estimators have no horizon: their reported horizon is
//! infinite and their late fraction zero.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::heavytail::ClaimModel;
use crate::kernels::{simpson_piecewise, KillingSpec, SmallComponent};

/// Largest ladder size: per-path ruin flags are packed into one 64-bit mask.
pub const MAX_LADDER_RUNGS: usize = 64;

/// Acceptable fraction of detected events in the second half of the window;
/// adaptive horizons double until they meet it.
const LATE_RUIN_BUDGET: f64 = 0.02;

/// Cap on adaptive horizon doublings.
const MAX_HORIZON_DOUBLINGS: usize = 16;

/// Per-smooth-piece panel cap for segment quadrature.
const MAX_SEGMENT_PANELS: usize = 64;

/// Shared handle to a user-supplied state payoff `ℓ(x)`.
pub type StatePayoff = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Bounded payoff `ℓ` integrated along the killed path. All built-in payoffs
/// that play the role of an event rate carry the claim intensity λ as a
/// factor, so their potentials are directly comparable to probabilities of
/// claim-driven events.
#[derive(Clone)]
pub enum PayoffFn {
    /// `ℓ(x) = λ·P(some claim coordinate exceeds x)·1{x ≥ 0}` — the rate of
    /// a ruinous claim at surplus `x`, the forcing term of the ruin-type
    /// renewal equations.
    ClaimTail,
    /// `ℓ(x) = λ·1{‖x‖₂ ≤ r}` — compactly supported occupation payoff.
    IndicatorBall { r: f64 },
    /// `ℓ(x) = λ·1{x_i ≥ r for every i}` — deep-quadrant occupation payoff.
    IndicatorQuadrant { r: f64 },
    /// `ℓ(x) = (ϖ·Σ_i π_i e^{−x_i})^α`, capped at its value on the quadrant
    /// boundary `(ϖ·Σ_i π_i)^α` so the payoff stays bounded when a
    /// coordinate dips below zero. Requires `α ∈ (0,1)`, positive weights of
    /// matching dimension, and `ϖ > 0`.
    PowerUtility { alpha: f64, pi: Vec<f64>, varpi: f64 },
    /// User-supplied payoff with a declared uniform bound.
    Custom { bound: f64, f: StatePayoff },
}

impl fmt::Debug for PayoffFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PayoffFn::ClaimTail => write!(f, "ClaimTail"),
            PayoffFn::IndicatorBall { r } => write!(f, "IndicatorBall {{ r: {r} }}"),
            PayoffFn::IndicatorQuadrant { r } => write!(f, "IndicatorQuadrant {{ r: {r} }}"),
            PayoffFn::PowerUtility { alpha, pi, varpi } => {
                write!(f, "PowerUtility {{ alpha: {alpha}, pi: {pi:?}, varpi: {varpi} }}")
            }
            PayoffFn::Custom { bound, .. } => write!(f, "Custom {{ bound: {bound} }}"),
        }
    }
}

impl PayoffFn {
    /// Wraps a user payoff with its declared uniform bound `sup |ℓ| ≤ bound`.
    pub fn custom<F>(bound: f64, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if !bound.is_finite() || bound <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "custom payoff bound must be positive and finite, got {bound}"
            )));
        }
        Ok(PayoffFn::Custom {
            bound,
            f: Arc::new(f),
        })
    }

    /// Pointwise payoff value `ℓ(x)` for a process with claim rate `lambda`
    /// and claim law `claims`.
    pub fn value(&self, lambda: f64, claims: &ClaimModel, x: &[f64]) -> f64 {
        match self {
            PayoffFn::ClaimTail => {
                if x.iter().all(|v| *v >= 0.0) {
                    lambda * claims.or_tail(x)
                } else {
                    0.0
                }
            }
            PayoffFn::IndicatorBall { r } => {
                let norm2: f64 = x.iter().map(|v| v * v).sum();
                if norm2 <= r * r {
                    lambda
                } else {
                    0.0
                }
            }
            PayoffFn::IndicatorQuadrant { r } => {
                if x.iter().all(|v| *v >= *r) {
                    lambda
                } else {
                    0.0
                }
            }
            PayoffFn::PowerUtility { alpha, pi, varpi } => {
                let mut s = 0.0;
                let mut cap = 0.0;
                for (p, v) in pi.iter().zip(x) {
                    s += p * (-v).exp();
                    cap += p;
                }
                (varpi * s.min(cap)).powf(*alpha)
            }
            PayoffFn::Custom { f, .. } => f(x),
        }
    }

    fn validate(&self, dimension: usize) -> Result<()> {
        match self {
            PayoffFn::ClaimTail | PayoffFn::Custom { .. } => Ok(()),
            PayoffFn::IndicatorBall { r } => {
                if !r.is_finite() || *r <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "ball radius must be positive and finite, got {r}"
                    )));
                }
                Ok(())
            }
            PayoffFn::IndicatorQuadrant { r } => {
                if !r.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "quadrant threshold must be finite, got {r}"
                    )));
                }
                Ok(())
            }
            PayoffFn::PowerUtility { alpha, pi, varpi } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "power-utility exponent must lie in (0,1), got {alpha}"
                    )));
                }
                if pi.len() != dimension {
                    return Err(Error::InvalidParameter(format!(
                        "power-utility weights have dimension {}, state has {dimension}",
                        pi.len()
                    )));
                }
                if pi.iter().any(|p| !p.is_finite() || *p <= 0.0) {
                    return Err(Error::InvalidParameter(
                        "power-utility weights must be positive and finite".into(),
                    ));
                }
                if !varpi.is_finite() || *varpi <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "power-utility scale must be positive and finite, got {varpi}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Penalty `w(surplus prior to ruin, deficit at ruin)` for discounted
/// penalty estimation; bounded by construction.
#[derive(Clone)]
pub struct PenaltyFn {
    bound: f64,
    f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for PenaltyFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PenaltyFn {{ bound: {} }}", self.bound)
    }
}

impl PenaltyFn {
    /// `w ≡ 1`: the discounted penalty reduces to `E[e^{−qτ}; τ < ∞]`, and
    /// to the ruin probability at discount rate zero.
    pub fn constant_one() -> Self {
        PenaltyFn {
            bound: 1.0,
            f: Arc::new(|_, _| 1.0),
        }
    }

    /// `w(prior, deficit) = 1{deficit > y}`: probability of ruin with a
    /// deficit worse than `y`.
    pub fn deficit_indicator(y: f64) -> Self {
        PenaltyFn {
            bound: 1.0,
            f: Arc::new(move |_, deficit| if deficit > y { 1.0 } else { 0.0 }),
        }
    }

    /// User-supplied penalty with a declared uniform bound.
    pub fn custom<F>(bound: f64, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        if !bound.is_finite() || bound <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "penalty bound must be positive and finite, got {bound}"
            )));
        }
        Ok(PenaltyFn {
            bound,
            f: Arc::new(f),
        })
    }

    /// Declared uniform bound `sup w`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Evaluates `w(surplus prior to ruin, deficit at ruin)`.
    pub fn evaluate(&self, prior: f64, deficit: f64) -> f64 {
        (self.f)(prior, deficit)
    }
}

/// A fully validated risk process: start point, claim stream, small
/// component, killing mechanism, and payoff.
///
/// Construction enforces every precondition the estimators rely on:
/// matching dimensions, a positive claim rate, positive exponential killing,
/// one-dimensional first-passage ruin from a nonnegative start, and — for
/// barrier killings — the net-profit condition `a_i > λ·E[U_i]` in every
/// coordinate (with a finite claim mean, otherwise no premium suffices).
#[derive(Clone, Debug)]
pub struct RiskProcessSpec {
    start: Vec<f64>,
    lambda: f64,
    claims: ClaimModel,
    small: SmallComponent,
    kill: KillingSpec,
    payoff: PayoffFn,
    claim_floors: Vec<f64>,
}

impl RiskProcessSpec {
    pub fn new(
        start: Vec<f64>,
        lambda: f64,
        claims: ClaimModel,
        small: SmallComponent,
        kill: KillingSpec,
        payoff: PayoffFn,
    ) -> Result<Self> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "claim rate must be positive and finite, got {lambda}"
            )));
        }
        if start.is_empty() || start.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "start point must be nonempty and finite, got {start:?}"
            )));
        }
        let d = start.len();
        if claims.dimension() != d {
            return Err(Error::InvalidParameter(format!(
                "start point has dimension {d} but the claim model has dimension {}",
                claims.dimension()
            )));
        }
        if small.dimension() != d {
            return Err(Error::InvalidParameter(format!(
                "start point has dimension {d} but the small component has dimension {}",
                small.dimension()
            )));
        }
        let mut claim_floors = Vec::with_capacity(d);
        for i in 0..d {
            claim_floors.push(claims.marginal(i)?.delta());
        }
        let min_floor = claim_floors.iter().cloned().fold(f64::INFINITY, f64::min);
        small.validate(min_floor)?;
        payoff.validate(d)?;
        match kill {
            KillingSpec::ExpKill { mu } => {
                if !mu.is_finite() || mu <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "exponential killing rate must be positive and finite, got {mu}"
                    )));
                }
            }
            KillingSpec::FirstPassageRuin => {
                if d != 1 {
                    return Err(Error::InvalidParameter(format!(
                        "first-passage ruin is one-dimensional, got dimension {d}"
                    )));
                }
                check_barrier_start(&start)?;
                check_net_profit(lambda, &claims, &small)?;
            }
            KillingSpec::QuadrantExit => {
                check_barrier_start(&start)?;
                check_net_profit(lambda, &claims, &small)?;
            }
        }
        Ok(RiskProcessSpec {
            start,
            lambda,
            claims,
            small,
            kill,
            payoff,
            claim_floors,
        })
    }

    pub fn start(&self) -> &[f64] {
        &self.start
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn claims(&self) -> &ClaimModel {
        &self.claims
    }

    pub fn small(&self) -> &SmallComponent {
        &self.small
    }

    pub fn kill(&self) -> &KillingSpec {
        &self.kill
    }

    pub fn payoff(&self) -> &PayoffFn {
        &self.payoff
    }

    pub fn dimension(&self) -> usize {
        self.start.len()
    }

    /// Uniform bound `sup ℓ`; the exponential-clock potential can never
    /// exceed `payoff_bound()/μ`.
    pub fn payoff_bound(&self) -> f64 {
        match &self.payoff {
            PayoffFn::ClaimTail
            | PayoffFn::IndicatorBall { .. }
            | PayoffFn::IndicatorQuadrant { .. } => self.lambda,
            PayoffFn::PowerUtility { alpha, pi, varpi } => {
                let cap: f64 = pi.iter().sum();
                (varpi * cap).powf(*alpha)
            }
            PayoffFn::Custom { bound, .. } => *bound,
        }
    }

    /// Pointwise payoff value `ℓ(x)`.
    pub fn payoff_at(&self, x: &[f64]) -> f64 {
        self.payoff.value(self.lambda, &self.claims, x)
    }
}

fn check_barrier_start(start: &[f64]) -> Result<()> {
    if start.iter().any(|x| *x < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "barrier-killed processes must start inside the positive quadrant, got {start:?}"
        )));
    }
    Ok(())
}

fn check_net_profit(lambda: f64, claims: &ClaimModel, small: &SmallComponent) -> Result<()> {
    let drift = small.drift();
    for (i, mean) in claims.coordinate_means().into_iter().enumerate() {
        if !mean.is_finite() {
            return Err(Error::InfiniteMean(format!(
                "claim coordinate {i} has a divergent mean; no premium rate can \
                 satisfy the net-profit condition"
            )));
        }
        let drain = lambda * mean;
        if drift[i] <= drain {
            return Err(Error::NetProfitViolation {
                coordinate: i,
                premium: drift[i],
                claim_drain: drain,
            });
        }
    }
    Ok(())
}

/// Monte Carlo run options.
///
/// `horizon = None` activates the adaptive rule for barrier-killed
/// estimators (see the module docs); exponential-clock and dual estimators
/// ignore the horizon entirely. `step` is the time spacing of Brownian/Euler
/// sub-sampling and the quadrature resolution for smooth payoffs.
#[derive(Clone, Debug)]
pub struct McOptions {
    pub n_paths: usize,
    pub seed: u64,
    pub horizon: Option<f64>,
    pub step: f64,
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions {
            n_paths: 100_000,
            seed: 0,
            horizon: None,
            step: 0.05,
        }
    }
}

fn validate_options(opts: &McOptions) -> Result<()> {
    if opts.n_paths < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least two paths for a standard error, got {}",
            opts.n_paths
        )));
    }
    if !opts.step.is_finite() || opts.step <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "step must be positive and finite, got {}",
            opts.step
        )));
    }
    if let Some(h) = opts.horizon {
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "horizon must be positive and finite, got {h}"
            )));
        }
    }
    Ok(())
}

/// A point estimate with its Monte Carlo standard error and the run
/// metadata needed to reproduce and audit it. `stderr` is the sample
/// standard deviation divided by √n. `late_fraction` is the share of
/// detected events in the second half of the horizon window (zero for
/// horizon-free estimators, whose `horizon` is infinite).
#[derive(Clone, Debug)]
pub struct EstimateCI {
    pub estimate: f64,
    pub stderr: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub horizon: f64,
    pub late_fraction: f64,
    pub kind: &'static str,
}

/// The two quadrant-exit estimators and their per-path paired difference.
/// Direct and compensation target the same exit probability at the same
/// horizon, so `paired_diff` has mean zero up to Monte Carlo noise.
#[derive(Clone, Debug)]
pub struct QuadrantRuinEstimate {
    pub direct: EstimateCI,
    pub compensation: EstimateCI,
    pub paired_diff: EstimateCI,
}

/// Claim epochs and claim vectors of one path, before any killing.
#[derive(Clone, Debug)]
pub struct PathSkeleton {
    pub epochs: Vec<f64>,
    pub claims: Vec<Vec<f64>>,
}

/// Samples the claim skeleton (epochs and claim vectors) of path
/// `path_index` up to `horizon`. The generator is `ChaCha8` on stream
/// `path_index`, so the skeleton is reproducible path by path.
///
/// Panics on a non-finite horizon — an infinite skeleton has no
/// representation.
pub fn sample_skeleton(
    spec: &RiskProcessSpec,
    seed: u64,
    path_index: u64,
    horizon: f64,
) -> PathSkeleton {
    assert!(horizon.is_finite(), "skeleton horizon must be finite");
    let mut rng = path_rng(seed, path_index);
    let mut epochs = Vec::new();
    let mut claims = Vec::new();
    let mut buf = Vec::with_capacity(spec.dimension());
    let mut t = 0.0;
    loop {
        t += draw_exp(&mut rng, spec.lambda);
        if t > horizon {
            break;
        }
        spec.claims.sample(&mut rng, &mut buf);
        epochs.push(t);
        claims.push(buf.clone());
    }
    PathSkeleton { epochs, claims }
}

/// Reconstructs the pure-drift position at time `t` from a skeleton:
/// `x + a·t − Σ_{epochs ≤ t} U_k`. Only meaningful for the drift-only small
/// component; other components carry path noise the skeleton does not
/// record.
pub fn drift_only_position(
    spec: &RiskProcessSpec,
    skeleton: &PathSkeleton,
    t: f64,
) -> Result<Vec<f64>> {
    let a = match &spec.small {
        SmallComponent::DriftOnly { a } => a,
        other => {
            return Err(Error::UnsupportedComponent(format!(
                "positions can be reconstructed from the claim skeleton only under \
                 pure drift, not under the {} component",
                component_name(other)
            )));
        }
    };
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "evaluation time must be finite and nonnegative, got {t}"
        )));
    }
    let mut pos: Vec<f64> = spec.start.iter().zip(a).map(|(x, c)| x + c * t).collect();
    for (epoch, claim) in skeleton.epochs.iter().zip(&skeleton.claims) {
        if *epoch <= t {
            for (p, u) in pos.iter_mut().zip(claim) {
                *p -= u;
            }
        }
    }
    Ok(pos)
}

fn component_name(c: &SmallComponent) -> &'static str {
    match c {
        SmallComponent::DriftOnly { .. } => "pure-drift",
        SmallComponent::DriftBrownian { .. } => "drift-Brownian",
        SmallComponent::DriftSmallJumps { .. } => "small-jump",
        SmallComponent::OrnsteinUhlenbeck { .. } => "Ornstein-Uhlenbeck",
    }
}

// ---------------------------------------------------------------------------
// RNG and statistics plumbing
// ---------------------------------------------------------------------------

/// Per-path generator: one seed, one stream per path index.
fn path_rng(seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

/// Inverse-transform exponential: `u ∈ (0,1]` keeps the draw finite.
fn draw_exp<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let u = 1.0 - rng.random::<f64>();
    -u.ln() / rate
}

/// Two-pass compensated mean and standard error of an ordered sample.
fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    debug_assert!(n >= 2);
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    let mean = sum / n as f64;
    let mut ss = 0.0f64;
    comp = 0.0;
    for &v in values {
        let d = (v - mean) * (v - mean);
        let y = d - comp;
        let t = ss + y;
        comp = (t - ss) - y;
        ss = t;
    }
    let var = ss / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Estimate and standard error of a Bernoulli proportion from an exact
/// success count: `p̂ ± √(p̂(1−p̂)/(n−1))`, matching the sample-variance
/// convention of [`mean_stderr`] on 0/1 values.
fn bernoulli_estimate(successes: u64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let p = successes as f64 / nf;
    let var = (p * (1.0 - p) / (nf - 1.0)).max(0.0);
    (p, var.sqrt())
}

// ---------------------------------------------------------------------------
// Segment integrals
// ---------------------------------------------------------------------------

/// Even panel count scaled to the segment length, clamped to
/// `[2, MAX_SEGMENT_PANELS]`.
fn segment_panels(len: f64, step: f64) -> usize {
    let mut p = (len / step).ceil() as usize;
    p = p.clamp(2, MAX_SEGMENT_PANELS);
    if p % 2 == 1 {
        p += 1;
    }
    p
}

/// `{s ∈ [0, seg] : pos_i + a_i·s ≥ r for all i}` as an interval (possibly
/// empty, returned with `hi ≤ lo`).
fn quadrant_window(pos: &[f64], a: &[f64], r: f64, seg: f64) -> (f64, f64) {
    let mut lo = 0.0f64;
    let mut hi = seg;
    for (p, c) in pos.iter().zip(a) {
        if *c > 0.0 {
            lo = lo.max((r - p) / c);
        } else if *c < 0.0 {
            hi = hi.min((r - p) / c);
        } else if *p < r {
            return (0.0, 0.0);
        }
    }
    (lo, hi)
}

/// Lebesgue measure of `{s ∈ [0, seg] : ‖pos + a·s‖₂ ≤ r}` — the root
/// interval of a quadratic clipped to the segment.
fn ball_time(pos: &[f64], a: &[f64], r: f64, seg: f64) -> f64 {
    let a2: f64 = a.iter().map(|c| c * c).sum();
    let b: f64 = 2.0 * pos.iter().zip(a).map(|(p, c)| p * c).sum::<f64>();
    let c: f64 = pos.iter().map(|p| p * p).sum::<f64>() - r * r;
    if a2 == 0.0 {
        return if c <= 0.0 { seg } else { 0.0 };
    }
    let disc = b * b - 4.0 * a2 * c;
    if disc <= 0.0 {
        return 0.0;
    }
    let sq = disc.sqrt();
    let lo = ((-b - sq) / (2.0 * a2)).max(0.0);
    let hi = ((-b + sq) / (2.0 * a2)).min(seg);
    (hi - lo).max(0.0)
}

/// `∫₀^seg ℓ(pos + a·s) ds` for a deterministic drift segment: exact
/// interval measures for the indicator payoffs, kink-aware Simpson for the
/// rest.
fn drift_segment_integral(
    spec: &RiskProcessSpec,
    pos: &[f64],
    a: &[f64],
    seg: f64,
    step: f64,
) -> f64 {
    if seg <= 0.0 {
        return 0.0;
    }
    match &spec.payoff {
        PayoffFn::IndicatorQuadrant { r } => {
            let (lo, hi) = quadrant_window(pos, a, *r, seg);
            spec.lambda * (hi - lo).max(0.0)
        }
        PayoffFn::IndicatorBall { r } => spec.lambda * ball_time(pos, a, *r, seg),
        PayoffFn::ClaimTail => {
            let (lo, hi) = quadrant_window(pos, a, 0.0, seg);
            if hi <= lo {
                return 0.0;
            }
            or_tail_line_integral(spec, pos, a, lo, hi, step)
        }
        PayoffFn::PowerUtility { .. } | PayoffFn::Custom { .. } => {
            let mut x = vec![0.0; pos.len()];
            simpson_piecewise(
                &mut |s: f64| {
                    for (xi, (p, c)) in x.iter_mut().zip(pos.iter().zip(a)) {
                        *xi = p + c * s;
                    }
                    spec.payoff_at(&x)
                },
                0.0,
                seg,
                &[],
                segment_panels(seg, step),
            )
        }
    }
}

/// `∫_lo^hi λ·or_tail(pos + a·s) ds` with Simpson pieces split where a
/// coordinate crosses its claim floor (the survivor functions are flat at 1
/// below the floor, so the integrand has derivative kinks there).
fn or_tail_line_integral(
    spec: &RiskProcessSpec,
    pos: &[f64],
    a: &[f64],
    lo: f64,
    hi: f64,
    step: f64,
) -> f64 {
    let mut kinks = Vec::new();
    for k in 0..pos.len() {
        if a[k] != 0.0 {
            kinks.push((spec.claim_floors[k] - pos[k]) / a[k]);
        }
    }
    let mut x = vec![0.0; pos.len()];
    let lambda = spec.lambda;
    let claims = &spec.claims;
    simpson_piecewise(
        &mut |s: f64| {
            for (xi, (p, c)) in x.iter_mut().zip(pos.iter().zip(a)) {
                *xi = p + c * s;
            }
            lambda * claims.or_tail(&x)
        },
        lo,
        hi,
        &kinks,
        segment_panels(hi - lo, step),
    )
}

/// Advances `pos` by `a·seg` in place.
fn advance_linear(pos: &mut [f64], a: &[f64], seg: f64) {
    for (p, c) in pos.iter_mut().zip(a) {
        *p += c * seg;
    }
}

/// Trapezoidal payoff integral over one Brownian segment, advancing `pos`
/// through exactly distributed Gaussian increments at spacing ≤ `step`.
fn brownian_segment_integral<R: Rng + ?Sized>(
    spec: &RiskProcessSpec,
    pos: &mut [f64],
    a: &[f64],
    sigma: f64,
    seg: f64,
    step: f64,
    rng: &mut R,
) -> f64 {
    if seg <= 0.0 {
        return 0.0;
    }
    let m = (seg / step).ceil().max(1.0) as usize;
    let delta = seg / m as f64;
    let sq = delta.sqrt();
    let mut acc = 0.0;
    let mut prev = spec.payoff_at(pos);
    for _ in 0..m {
        for (p, c) in pos.iter_mut().zip(a) {
            let z: f64 = rng.sample(StandardNormal);
            *p += c * delta + sigma * sq * z;
        }
        let cur = spec.payoff_at(pos);
        acc += 0.5 * (prev + cur) * delta;
        prev = cur;
    }
    acc
}

// ---------------------------------------------------------------------------
// Exponential-clock potential
// ---------------------------------------------------------------------------

/// Estimates `u(x) = E^x ∫₀^T ℓ(X_s) ds` with `T ~ Exp(μ)` independent of
/// the path. Unbiased for all components except Ornstein–Uhlenbeck, whose
/// Euler scheme is first-order in `step` (its estimate is labelled
/// `"expkill-approximate"`). The estimate can never exceed
/// `payoff_bound()/μ` beyond Monte Carlo noise.
pub fn estimate_potential_expkill(spec: &RiskProcessSpec, opts: &McOptions) -> Result<EstimateCI> {
    let mu = match &spec.kill {
        KillingSpec::ExpKill { mu } => *mu,
        _ => {
            return Err(Error::InvalidParameter(
                "exponential-clock potential requires exponential killing".into(),
            ));
        }
    };
    validate_options(opts)?;
    let kind = match &spec.small {
        SmallComponent::OrnsteinUhlenbeck { .. } => "expkill-approximate",
        _ => "expkill",
    };
    let values: Vec<f64> = (0..opts.n_paths as u64)
        .into_par_iter()
        .map(|i| expkill_path_value(spec, mu, opts.step, opts.seed, i))
        .collect();
    let (estimate, stderr) = mean_stderr(&values);
    Ok(EstimateCI {
        estimate,
        stderr,
        n_paths: opts.n_paths,
        seed: opts.seed,
        horizon: f64::INFINITY,
        late_fraction: 0.0,
        kind,
    })
}

fn expkill_path_value(
    spec: &RiskProcessSpec,
    mu: f64,
    step: f64,
    seed: u64,
    index: u64,
) -> f64 {
    let mut rng = path_rng(seed, index);
    let t_kill = draw_exp(&mut rng, mu);
    let mut pos = spec.start.clone();
    let mut claim = Vec::with_capacity(spec.dimension());
    let mut acc = 0.0;
    let mut remaining = t_kill;
    match &spec.small {
        SmallComponent::DriftOnly { a } => loop {
            let dt = draw_exp(&mut rng, spec.lambda);
            let seg = dt.min(remaining);
            acc += drift_segment_integral(spec, &pos, a, seg, step);
            advance_linear(&mut pos, a, seg);
            if dt >= remaining {
                break;
            }
            remaining -= dt;
            spec.claims.sample(&mut rng, &mut claim);
            for (p, u) in pos.iter_mut().zip(&claim) {
                *p -= u;
            }
        },
        SmallComponent::DriftBrownian { a, sigma } => loop {
            let dt = draw_exp(&mut rng, spec.lambda);
            let seg = dt.min(remaining);
            acc += brownian_segment_integral(spec, &mut pos, a, *sigma, seg, step, &mut rng);
            if dt >= remaining {
                break;
            }
            remaining -= dt;
            spec.claims.sample(&mut rng, &mut claim);
            for (p, u) in pos.iter_mut().zip(&claim) {
                *p -= u;
            }
        },
        SmallComponent::DriftSmallJumps { a, rate, magnitude } => loop {
            let dt = draw_exp(&mut rng, spec.lambda);
            let seg = dt.min(remaining);
            // Exact shot-noise epochs inside the segment: drift pieces
            // between small jumps, each integrated in closed form.
            let mut left = seg;
            loop {
                let tau = draw_exp(&mut rng, *rate);
                let piece = tau.min(left);
                acc += drift_segment_integral(spec, &pos, a, piece, step);
                advance_linear(&mut pos, a, piece);
                if tau >= left {
                    break;
                }
                left -= tau;
                for p in pos.iter_mut() {
                    *p += magnitude * (2.0 * rng.random::<f64>() - 1.0);
                }
            }
            if dt >= remaining {
                break;
            }
            remaining -= dt;
            spec.claims.sample(&mut rng, &mut claim);
            for (p, u) in pos.iter_mut().zip(&claim) {
                *p -= u;
            }
        },
        SmallComponent::OrnsteinUhlenbeck {
            a,
            theta,
            rate,
            magnitude,
        } => {
            // Euler scheme on the mean-reverting component y:
            // y ← y + θ·y·δ (+ a jump with probability rate·δ).
            let d = pos.len();
            let mut y = vec![0.0f64; d];
            loop {
                let dt = draw_exp(&mut rng, spec.lambda);
                let seg = dt.min(remaining);
                let m = (seg / step).ceil().max(1.0) as usize;
                let delta = seg / m as f64;
                let mut prev = spec.payoff_at(&pos);
                for _ in 0..m {
                    for k in 0..d {
                        let y_old = y[k];
                        y[k] += theta * y[k] * delta;
                        if rng.random::<f64>() < (rate * delta).min(1.0) {
                            y[k] += magnitude * (2.0 * rng.random::<f64>() - 1.0);
                        }
                        pos[k] += a[k] * delta + (y[k] - y_old);
                    }
                    let cur = spec.payoff_at(&pos);
                    acc += 0.5 * (prev + cur) * delta;
                    prev = cur;
                }
                if dt >= remaining {
                    break;
                }
                remaining -= dt;
                spec.claims.sample(&mut rng, &mut claim);
                for (p, u) in pos.iter_mut().zip(&claim) {
                    *p -= u;
                }
            }
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// First-passage ruin
// ---------------------------------------------------------------------------

struct LadderCounts {
    ruined: Vec<u64>,
    late: Vec<u64>,
    horizon: f64,
}

/// Estimates `ψ(x) = P(first passage below 0 ≤ horizon)` for the spec's own
/// start point. Bit-identical to the matching entry of
/// [`estimate_ruin_ladder`] with a single rung.
pub fn estimate_ruin_1d(spec: &RiskProcessSpec, opts: &McOptions) -> Result<EstimateCI> {
    let mut ladder = estimate_ruin_ladder(spec, &[spec.start[0]], opts)?;
    Ok(ladder.pop().expect("single-rung ladder"))
}

/// Estimates the ruin probability at every rung of `xs` with common random
/// numbers: each path is simulated once and tested against all rungs, so
/// the ladder is exactly monotone in the start level. Supports pure-drift
/// dynamics (ruin detected exactly at claim epochs) and drift–Brownian
/// dynamics (Brownian-bridge crossing probabilities between epochs, one
/// shared uniform per segment — the coupling preserves monotonicity).
pub fn estimate_ruin_ladder(
    spec: &RiskProcessSpec,
    xs: &[f64],
    opts: &McOptions,
) -> Result<Vec<EstimateCI>> {
    require_ruin_kill(spec)?;
    validate_options(opts)?;
    validate_rungs(xs)?;
    let (a, sigma) = match &spec.small {
        SmallComponent::DriftOnly { a } => (a[0], None),
        SmallComponent::DriftBrownian { a, sigma } => (a[0], Some(*sigma)),
        other => {
            return Err(Error::UnsupportedComponent(format!(
                "barrier detection is exact for pure-drift and drift-Brownian \
                 dynamics only; the {} component has no unbiased crossing test",
                component_name(other)
            )));
        }
    };
    let xs_sorted = sorted_rungs(xs);
    let counts = run_ladder_rounds(spec, &xs_sorted, opts, a, sigma);
    Ok(ladder_output(&xs_sorted, &counts, opts, "ruin-direct"))
}

fn require_ruin_kill(spec: &RiskProcessSpec) -> Result<()> {
    match spec.kill {
        KillingSpec::FirstPassageRuin => Ok(()),
        _ => Err(Error::InvalidParameter(
            "ruin estimation requires first-passage killing".into(),
        )),
    }
}

fn validate_rungs(xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::InvalidParameter("ladder needs at least one rung".into()));
    }
    if xs.len() > MAX_LADDER_RUNGS {
        return Err(Error::InvalidParameter(format!(
            "at most {MAX_LADDER_RUNGS} ladder rungs are supported, got {}",
            xs.len()
        )));
    }
    if xs.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ladder rungs must be finite and nonnegative, got {xs:?}"
        )));
    }
    Ok(())
}

fn sorted_rungs(xs: &[f64]) -> Vec<(f64, usize)> {
    let mut xs_sorted: Vec<(f64, usize)> = xs.iter().cloned().zip(0..).collect();
    xs_sorted.sort_by(|p, q| p.0.partial_cmp(&q.0).expect("finite rungs"));
    xs_sorted
}

/// Initial horizon for the adaptive rule: a few mean interarrival times plus
/// twice the mean first-passage scale `x/margin`.
fn initial_horizon(lambda: f64, x_max: f64, margin: f64) -> f64 {
    16.0 / lambda + 2.0 * x_max / margin
}

/// Runs rounds of the ladder simulation, doubling the horizon under the
/// adaptive rule until every rung with detected ruins has late fraction at
/// most the budget (or a doubling cap is reached). `sigma = None` selects
/// exact epoch detection; `Some(σ)` the Brownian-bridge test.
fn run_ladder_rounds(
    spec: &RiskProcessSpec,
    xs_sorted: &[(f64, usize)],
    opts: &McOptions,
    a: f64,
    sigma: Option<f64>,
) -> LadderCounts {
    let r = xs_sorted.len();
    let mean = spec.claims.coordinate_means()[0];
    let margin = a - spec.lambda * mean;
    let x_max = xs_sorted.last().expect("nonempty").0;
    let (mut h, adaptive) = match opts.horizon {
        Some(h) => (h, false),
        None => (initial_horizon(spec.lambda, x_max, margin), true),
    };
    let mut doublings = 0;
    loop {
        let path_fn = |i: u64| match sigma {
            None => drift_ruin_path(spec, xs_sorted, a, opts.seed, i, h),
            Some(sig) => bridge_ruin_path(spec, xs_sorted, a, sig, opts.seed, i, h),
        };
        let (ruined, late) = (0..opts.n_paths as u64)
            .into_par_iter()
            .fold(
                || (vec![0u64; r], vec![0u64; r]),
                |mut acc, i| {
                    let (mask, late_mask) = path_fn(i);
                    for j in 0..r {
                        acc.0[j] += (mask >> j) & 1;
                        acc.1[j] += (late_mask >> j) & 1;
                    }
                    acc
                },
            )
            .reduce(
                || (vec![0u64; r], vec![0u64; r]),
                |mut x, y| {
                    for j in 0..r {
                        x.0[j] += y.0[j];
                        x.1[j] += y.1[j];
                    }
                    x
                },
            );
        let late_excess = (0..r).any(|j| {
            ruined[j] > 0 && late[j] as f64 > LATE_RUIN_BUDGET * ruined[j] as f64
        });
        if !adaptive || !late_excess || doublings >= MAX_HORIZON_DOUBLINGS {
            return LadderCounts {
                ruined,
                late,
                horizon: h,
            };
        }
        h *= 2.0;
        doublings += 1;
    }
}

fn ladder_output(
    xs_sorted: &[(f64, usize)],
    counts: &LadderCounts,
    opts: &McOptions,
    kind: &'static str,
) -> Vec<EstimateCI> {
    let mut out: Vec<Option<EstimateCI>> = vec![None; xs_sorted.len()];
    for (j, &(_, orig)) in xs_sorted.iter().enumerate() {
        let (estimate, stderr) = bernoulli_estimate(counts.ruined[j], opts.n_paths);
        let late_fraction = if counts.ruined[j] > 0 {
            counts.late[j] as f64 / counts.ruined[j] as f64
        } else {
            0.0
        };
        out[orig] = Some(EstimateCI {
            estimate,
            stderr,
            n_paths: opts.n_paths,
            seed: opts.seed,
            horizon: counts.horizon,
            late_fraction,
            kind,
        });
    }
    out.into_iter().map(|e| e.expect("every rung filled")).collect()
}

/// One pure-drift path against a sorted ladder: ruin can only happen at
/// claim epochs, where the running loss `Σ U − a·t` is compared against the
/// not-yet-ruined rungs (ascending, so a single pointer suffices).
fn drift_ruin_path(
    spec: &RiskProcessSpec,
    xs_sorted: &[(f64, usize)],
    a: f64,
    seed: u64,
    index: u64,
    h: f64,
) -> (u64, u64) {
    let mut rng = path_rng(seed, index);
    let mut claim = Vec::with_capacity(1);
    let r = xs_sorted.len();
    let mut t = 0.0;
    let mut sum_claims = 0.0;
    let mut j = 0;
    let mut mask = 0u64;
    let mut late = 0u64;
    while j < r {
        let dt = draw_exp(&mut rng, spec.lambda);
        t += dt;
        if t > h {
            break;
        }
        spec.claims.sample(&mut rng, &mut claim);
        sum_claims += claim[0];
        let drop = sum_claims - a * t;
        while j < r && drop > xs_sorted[j].0 {
            mask |= 1 << j;
            if t > 0.5 * h {
                late |= 1 << j;
            }
            j += 1;
        }
    }
    (mask, late)
}

/// One drift–Brownian path against a sorted ladder. Per segment the
/// endpoint is sampled exactly and a single shared uniform decides the
/// bridge-crossing test `u < exp(−2·y₀·y₁/(σ²·Δt))` for every alive rung —
/// the crossing probability decreases in the start level, so the shared
/// uniform keeps ruin sets nested across rungs.
fn bridge_ruin_path(
    spec: &RiskProcessSpec,
    xs_sorted: &[(f64, usize)],
    a: f64,
    sigma: f64,
    seed: u64,
    index: u64,
    h: f64,
) -> (u64, u64) {
    let mut rng = path_rng(seed, index);
    let mut claim = Vec::with_capacity(1);
    let r = xs_sorted.len();
    let sig2 = sigma * sigma;
    let mut t = 0.0;
    let mut w = 0.0; // displacement a·t + σB_t − Σ U
    let mut j = 0;
    let mut mask = 0u64;
    let mut late = 0u64;
    loop {
        if j >= r {
            break;
        }
        let dt = draw_exp(&mut rng, spec.lambda);
        let horizon_hit = t + dt >= h;
        let seg = if horizon_hit { h - t } else { dt };
        let z: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.random::<f64>();
        let w_end = w + a * seg + sigma * seg.sqrt() * z;
        let t_end = t + seg;
        while j < r {
            let x = xs_sorted[j].0;
            let y0 = x + w;
            let y1 = x + w_end;
            let crossed = y1 <= 0.0 || {
                let p = (-2.0 * y0.max(0.0) * y1 / (sig2 * seg)).exp();
                u < p
            };
            if !crossed {
                break;
            }
            mask |= 1 << j;
            if t_end > 0.5 * h {
                late |= 1 << j;
            }
            j += 1;
        }
        if j >= r || horizon_hit {
            break;
        }
        t += dt;
        w = w_end;
        spec.claims.sample(&mut rng, &mut claim);
        w -= claim[0];
        while j < r && xs_sorted[j].0 + w < 0.0 {
            mask |= 1 << j;
            if t > 0.5 * h {
                late |= 1 << j;
            }
            j += 1;
        }
    }
    (mask, late)
}

/// Horizon-free dual estimator: under the net-profit condition the all-time
/// ruin probability equals `P(S > x)` for the geometric compound
/// `S = Σ_{i ≤ K} L_i`, `K ~ Geometric(ρ)`, `L ~ integrated claim tail`,
/// `ρ = λ·E[U]/a`. One uniform decides `K = ⌊ln u / ln ρ⌋`; rungs share the
/// same `S`, so the ladder is exactly monotone. Pure-drift dynamics only —
/// the ladder-height factorisation is specific to the compound-Poisson
/// surplus.
pub fn estimate_ruin_dual(
    spec: &RiskProcessSpec,
    xs: &[f64],
    opts: &McOptions,
) -> Result<Vec<EstimateCI>> {
    require_ruin_kill(spec)?;
    validate_options(opts)?;
    validate_rungs(xs)?;
    let a = match &spec.small {
        SmallComponent::DriftOnly { a } => a[0],
        other => {
            return Err(Error::UnsupportedComponent(format!(
                "the random-walk dual applies to the pure-drift surplus only, \
                 not to the {} component",
                component_name(other)
            )));
        }
    };
    let marginal = spec.claims.marginal(0)?;
    let integrated = marginal.integrated_tail()?;
    let rho = spec.lambda * integrated.source_mean() / a;
    debug_assert!(rho < 1.0, "net-profit condition enforced at construction");
    let ln_rho = rho.ln();
    let xs_sorted = sorted_rungs(xs);
    let r = xs_sorted.len();
    let ruined = (0..opts.n_paths as u64)
        .into_par_iter()
        .fold(
            || vec![0u64; r],
            |mut acc, i| {
                let mut rng = path_rng(opts.seed, i);
                let u = 1.0 - rng.random::<f64>();
                let k = (u.ln() / ln_rho).floor() as u64;
                let mut s = 0.0;
                for _ in 0..k {
                    s += integrated.sample(&mut rng);
                }
                let mut j = 0;
                while j < r && s > xs_sorted[j].0 {
                    acc[j] += 1;
                    j += 1;
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; r],
            |mut x, y| {
                for j in 0..r {
                    x[j] += y[j];
                }
                x
            },
        );
    let counts = LadderCounts {
        ruined,
        late: vec![0u64; r],
        horizon: f64::INFINITY,
    };
    Ok(ladder_output(&xs_sorted, &counts, opts, "ruin-dual"))
}

// ---------------------------------------------------------------------------
// Quadrant exit
// ---------------------------------------------------------------------------

/// Estimates `P(quadrant exit ≤ horizon)` two independent ways on the same
/// paths: the direct exit indicator, and the compensation integral
/// `∫₀^{τ∧H} λ·or_tail(X_s) ds` (the compensator of the exit indicator, so
/// both target the same probability at every horizon). The paired per-path
/// difference is returned with its own standard error as a consistency
/// certificate. Pure-drift dynamics only.
pub fn estimate_quadrant_ruin(
    spec: &RiskProcessSpec,
    opts: &McOptions,
) -> Result<QuadrantRuinEstimate> {
    match spec.kill {
        KillingSpec::QuadrantExit => {}
        _ => {
            return Err(Error::InvalidParameter(
                "quadrant-exit estimation requires quadrant-exit killing".into(),
            ));
        }
    }
    let a = match &spec.small {
        SmallComponent::DriftOnly { a } => a.clone(),
        other => {
            return Err(Error::UnsupportedComponent(format!(
                "quadrant-exit detection is exact for pure drift only, not for \
                 the {} component",
                component_name(other)
            )));
        }
    };
    validate_options(opts)?;
    let means = spec.claims.coordinate_means();
    let margin = a
        .iter()
        .zip(&means)
        .map(|(ai, mi)| ai - spec.lambda * mi)
        .fold(f64::INFINITY, f64::min);
    let x_max = spec.start.iter().cloned().fold(0.0f64, f64::max);
    let (mut h, adaptive) = match opts.horizon {
        Some(h) => (h, false),
        None => (initial_horizon(spec.lambda, x_max, margin), true),
    };
    let mut doublings = 0;
    let data: Vec<(f64, u8)> = loop {
        let round: Vec<(f64, u8)> = (0..opts.n_paths as u64)
            .into_par_iter()
            .map(|i| quadrant_path(spec, &a, opts, h, i))
            .collect();
        let exits: u64 = round.iter().map(|(_, f)| (f & 1) as u64).sum();
        let lates: u64 = round.iter().map(|(_, f)| ((f >> 1) & 1) as u64).sum();
        let late_excess = exits > 0 && lates as f64 > LATE_RUIN_BUDGET * exits as f64;
        if !adaptive || !late_excess || doublings >= MAX_HORIZON_DOUBLINGS {
            break round;
        }
        h *= 2.0;
        doublings += 1;
    };
    let n = opts.n_paths;
    let exits: u64 = data.iter().map(|(_, f)| (f & 1) as u64).sum();
    let lates: u64 = data.iter().map(|(_, f)| ((f >> 1) & 1) as u64).sum();
    let (direct_est, direct_se) = bernoulli_estimate(exits, n);
    let comps: Vec<f64> = data.iter().map(|(c, _)| *c).collect();
    let (comp_est, comp_se) = mean_stderr(&comps);
    let diffs: Vec<f64> = data.iter().map(|(c, f)| (f & 1) as f64 - c).collect();
    let (diff_est, diff_se) = mean_stderr(&diffs);
    let late_fraction = if exits > 0 {
        lates as f64 / exits as f64
    } else {
        0.0
    };
    let base = EstimateCI {
        estimate: direct_est,
        stderr: direct_se,
        n_paths: n,
        seed: opts.seed,
        horizon: h,
        late_fraction,
        kind: "quadrant-direct",
    };
    Ok(QuadrantRuinEstimate {
        direct: base.clone(),
        compensation: EstimateCI {
            estimate: comp_est,
            stderr: comp_se,
            late_fraction: 0.0,
            kind: "quadrant-compensation",
            ..base.clone()
        },
        paired_diff: EstimateCI {
            estimate: diff_est,
            stderr: diff_se,
            late_fraction: 0.0,
            kind: "quadrant-paired-diff",
            ..base
        },
    })
}

/// One quadrant path: accumulates the compensation integral along drift
/// segments and flags the first claim that pushes any coordinate strictly
/// below zero. Returns (compensation value, bit 0 = exited, bit 1 = late).
fn quadrant_path(
    spec: &RiskProcessSpec,
    a: &[f64],
    opts: &McOptions,
    h: f64,
    index: u64,
) -> (f64, u8) {
    let mut rng = path_rng(opts.seed, index);
    let mut pos = spec.start.clone();
    let mut claim = Vec::with_capacity(spec.dimension());
    let mut t = 0.0;
    let mut comp = 0.0;
    loop {
        let dt = draw_exp(&mut rng, spec.lambda);
        let seg = dt.min(h - t);
        comp += or_tail_line_integral(spec, &pos, a, 0.0, seg, opts.step);
        if t + dt > h {
            return (comp, 0);
        }
        t += dt;
        advance_linear(&mut pos, a, dt);
        spec.claims.sample(&mut rng, &mut claim);
        for (p, u) in pos.iter_mut().zip(&claim) {
            *p -= u;
        }
        if pos.iter().any(|v| *v < 0.0) {
            let late = if t > 0.5 * h { 2u8 } else { 0u8 };
            return (comp, 1 | late);
        }
    }
}

// ---------------------------------------------------------------------------
// Discounted penalty (Gerber–Shiu)
// ---------------------------------------------------------------------------

/// Estimates the discounted penalty
/// `E^x [ e^{−q·τ} · w(X_{τ−}, |X_τ|) ; τ ≤ horizon ]` for the 1-D
/// pure-drift surplus: the surplus prior to the ruining claim and the
/// deficit at ruin are read off exactly at the ruin epoch. With `w ≡ 1` and
/// `q = 0` this is the ruin probability.
pub fn estimate_gerber_shiu(
    spec: &RiskProcessSpec,
    penalty: &PenaltyFn,
    q: f64,
    opts: &McOptions,
) -> Result<EstimateCI> {
    require_ruin_kill(spec)?;
    validate_options(opts)?;
    if !q.is_finite() || q < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "discount rate must be finite and nonnegative, got {q}"
        )));
    }
    let a = match &spec.small {
        SmallComponent::DriftOnly { a } => a[0],
        other => {
            return Err(Error::UnsupportedComponent(format!(
                "penalty estimation needs the exact ruin epoch and deficit, \
                 available under pure drift only, not under the {} component",
                component_name(other)
            )));
        }
    };
    let x = spec.start[0];
    let mean = spec.claims.coordinate_means()[0];
    let margin = a - spec.lambda * mean;
    let (mut h, adaptive) = match opts.horizon {
        Some(h) => (h, false),
        None => (initial_horizon(spec.lambda, x, margin), true),
    };
    let mut doublings = 0;
    let (values, ruins, lates, horizon) = loop {
        let round: Vec<(f64, u8)> = (0..opts.n_paths as u64)
            .into_par_iter()
            .map(|i| gerber_shiu_path(spec, penalty, q, a, x, opts.seed, i, h))
            .collect();
        let ruins: u64 = round.iter().map(|(_, f)| (f & 1) as u64).sum();
        let lates: u64 = round.iter().map(|(_, f)| ((f >> 1) & 1) as u64).sum();
        let late_excess = ruins > 0 && lates as f64 > LATE_RUIN_BUDGET * ruins as f64;
        if !adaptive || !late_excess || doublings >= MAX_HORIZON_DOUBLINGS {
            let values: Vec<f64> = round.iter().map(|(v, _)| *v).collect();
            break (values, ruins, lates, h);
        }
        h *= 2.0;
        doublings += 1;
    };
    let (estimate, stderr) = mean_stderr(&values);
    let late_fraction = if ruins > 0 {
        lates as f64 / ruins as f64
    } else {
        0.0
    };
    Ok(EstimateCI {
        estimate,
        stderr,
        n_paths: opts.n_paths,
        seed: opts.seed,
        horizon,
        late_fraction,
        kind: "gerber-shiu",
    })
}

#[allow(clippy::too_many_arguments)]
fn gerber_shiu_path(
    spec: &RiskProcessSpec,
    penalty: &PenaltyFn,
    q: f64,
    a: f64,
    x: f64,
    seed: u64,
    index: u64,
    h: f64,
) -> (f64, u8) {
    let mut rng = path_rng(seed, index);
    let mut claim = Vec::with_capacity(1);
    let mut t = 0.0;
    let mut sum_claims = 0.0;
    loop {
        let dt = draw_exp(&mut rng, spec.lambda);
        t += dt;
        if t > h {
            return (0.0, 0);
        }
        spec.claims.sample(&mut rng, &mut claim);
        let prior = x + a * t - sum_claims;
        sum_claims += claim[0];
        if sum_claims > x + a * t {
            let deficit = sum_claims - (x + a * t);
            let value = (-q * t).exp() * penalty.evaluate(prior, deficit);
            let late = if t > 0.5 * h { 2u8 } else { 0u8 };
            return (value, 1 | late);
        }
    }
}
