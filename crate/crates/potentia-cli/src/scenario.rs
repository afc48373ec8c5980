//! From a validated configuration to runnable pieces.
//!
//! Every scenario carries three computation paths: Monte Carlo on the full
//! process, a one-dimensional lattice solve, and a far-field prediction.
//! Multivariate scenarios reduce to one dimension for the lattice path by
//! selecting a marginal coordinate: exact for comonotone claims with equal
//! drifts and a common start ray (the coordinates then order themselves
//! pathwise), and a tail-equivalent comparison otherwise — the gates say
//! which reading a scenario uses.

use potentia::heavytail::{ClaimModel, TailFamily, TailModel};
use potentia::kernels::{KillingSpec, SmallComponent};
use potentia::renewal::Grid;
use potentia::simulator::{PayoffFn, RiskProcessSpec};

use crate::config::{ClaimsConfig, KillConfig, PayoffConfig, ScenarioConfig};

/// Which orchestration a scenario runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PipelineKind {
    /// One-dimensional first-passage ruin.
    Ruin,
    /// Exponential-clock potential (any dimension).
    ExpKill,
    /// Two-dimensional quadrant exit.
    Quadrant,
}

/// One-dimensional payoff as seen by the lattice solver.
#[derive(Clone, Debug)]
pub enum ReducedPayoff {
    /// λ·F̄(y)·1{y ≥ 0} for the reduced claim law.
    ClaimTail,
    /// λ·1{lo ≤ y ≤ hi}.
    Interval { lo: f64, hi: f64 },
    /// λ·1{y ≥ level}.
    HalfLine { level: f64 },
    /// k·e^{−alpha·max(y,0)} — exponential payoff capped below zero.
    PowerCapped { alpha: f64, k: f64 },
}

/// The one-dimensional reduction the lattice solver runs on.
#[derive(Clone, Debug)]
pub struct SolverView {
    pub lambda: f64,
    /// Exponential killing rate; 0 for first-passage pipelines (which never
    /// evaluate the clock-killed forcing).
    pub mu: f64,
    /// Drift of the reduced coordinate.
    pub a: f64,
    /// Reduced claim law.
    pub claim: TailModel,
    pub payoff: ReducedPayoff,
}

impl SolverView {
    /// Reduced payoff value at a scalar state.
    pub fn payoff_at(&self, y: f64) -> f64 {
        match &self.payoff {
            ReducedPayoff::ClaimTail => {
                if y >= 0.0 {
                    self.lambda * self.claim.tail(y)
                } else {
                    0.0
                }
            }
            ReducedPayoff::Interval { lo, hi } => {
                if y >= *lo && y <= *hi {
                    self.lambda
                } else {
                    0.0
                }
            }
            ReducedPayoff::HalfLine { level } => {
                if y >= *level {
                    self.lambda
                } else {
                    0.0
                }
            }
            ReducedPayoff::PowerCapped { alpha, k } => k * (-alpha * y.max(0.0)).exp(),
        }
    }

    /// Forcing term of the clock-killed renewal equation on a lattice:
    ///
    /// ```text
    ///     h(x) = ∫₀^∞ e^{−(λ+μ)t}·ℓ(x + a·t) dt,
    /// ```
    ///
    /// the expected payoff harvested along the drift segment before the
    /// first claim or the kill clock, whichever rings first. Indicator and
    /// capped-exponential payoffs integrate in closed form; the claim-tail
    /// payoff is accumulated by one backward sweep of per-cell Simpson rules
    /// with the exponential weight carried exactly across cells.
    pub fn forcing_on_grid(&self, grid: &Grid) -> Vec<f64> {
        let q = self.lambda + self.mu;
        let a = self.a;
        match &self.payoff {
            ReducedPayoff::Interval { lo, hi } => (0..grid.len())
                .map(|i| {
                    let x = grid.point(i);
                    let t_in = ((lo - x) / a).max(0.0);
                    let t_out = ((hi - x) / a).max(0.0);
                    self.lambda * ((-q * t_in).exp() - (-q * t_out).exp()) / q
                })
                .collect(),
            ReducedPayoff::HalfLine { level } => (0..grid.len())
                .map(|i| {
                    let x = grid.point(i);
                    let t_in = ((level - x) / a).max(0.0);
                    self.lambda * (-q * t_in).exp() / q
                })
                .collect(),
            ReducedPayoff::PowerCapped { alpha, k } => (0..grid.len())
                .map(|i| {
                    let x = grid.point(i);
                    if x >= 0.0 {
                        k * (-alpha * x).exp() / (q + alpha * a)
                    } else {
                        let hold = (-q * (-x / a)).exp();
                        k * (1.0 - hold) / q + hold * k / (q + alpha * a)
                    }
                })
                .collect(),
            ReducedPayoff::ClaimTail => {
                // I(x_i) = ∫_{x_i}^∞ e^{−q(z−x_i)/a}·F̄⁺(z) dz by backward
                // recurrence: the cell integral uses composite Simpson and
                // the remainder re-weights by one cell's exponential decay.
                // Beyond the window the tail is frozen at its edge value,
                // an overestimate that itself decays like e^{−q(M−x)/a}.
                let n = grid.len();
                let step = grid.step();
                let decay = (-q * step / a).exp();
                let tail_plus = |z: f64| if z >= 0.0 { self.claim.tail(z) } else { 0.0 };
                let top = grid.x_max();
                let mut acc = tail_plus(top) * a / q;
                let mut h = vec![0.0; n];
                h[n - 1] = self.lambda / a * acc;
                for i in (0..n - 1).rev() {
                    let x = grid.point(i);
                    let sub = 8usize;
                    let w = step / sub as f64;
                    let mut cell = 0.0;
                    for j in 0..sub {
                        let z0 = x + j as f64 * w;
                        let f0 = (-q * (z0 - x) / a).exp() * tail_plus(z0);
                        let fm = (-q * (z0 + 0.5 * w - x) / a).exp() * tail_plus(z0 + 0.5 * w);
                        let f1 = (-q * (z0 + w - x) / a).exp() * tail_plus(z0 + w);
                        cell += w / 6.0 * (f0 + 4.0 * fm + f1);
                    }
                    acc = cell + decay * acc;
                    h[i] = self.lambda / a * acc;
                }
                h
            }
        }
    }

    /// Forcing of the classical ruin equation: the defective tail of the
    /// ladder-height kernel, ρ·F̄_I(x).
    pub fn ruin_forcing_on_grid(&self, grid: &Grid) -> Result<Vec<f64>, String> {
        let f_i = self
            .claim
            .integrated_tail()
            .map_err(|e| format!("ruin forcing needs a finite claim mean: {e}"))?;
        let rho = self.ruin_mass()?;
        Ok((0..grid.len())
            .map(|i| rho * f_i.tail_i(grid.point(i)))
            .collect())
    }

    /// Ladder-height kernel mass ρ = λ·E[U]/a of the ruin equation.
    pub fn ruin_mass(&self) -> Result<f64, String> {
        let mean = self
            .claim
            .finite_mean()
            .map_err(|e| format!("ruin mass needs a finite claim mean: {e}"))?;
        let rho = self.lambda * mean / self.a;
        if !(rho > 0.0 && rho < 1.0) {
            return Err(format!(
                "ladder mass {rho} is not inside (0,1); the reduced coordinate violates the \
                 net profit condition"
            ));
        }
        Ok(rho)
    }
}

/// A configuration resolved into library objects.
pub struct Assembled {
    pub cfg: ScenarioConfig,
    pub kind: PipelineKind,
    pub claims: ClaimModel,
    pub payoff: PayoffFn,
    pub small: SmallComponent,
    pub kill: KillingSpec,
    pub view: SolverView,
}

impl Assembled {
    /// A full process specification with the start placed at one ladder
    /// rung.
    pub fn spec_at(&self, point: f64) -> Result<RiskProcessSpec, String> {
        RiskProcessSpec::new(
            self.cfg.start_at(point),
            self.cfg.process.lambda,
            self.claims.clone(),
            self.small.clone(),
            self.kill.clone(),
            self.payoff.clone(),
        )
        .map_err(|e| format!("process specification rejected: {e}"))
    }

    /// Start coordinate seen by the lattice solver at one ladder rung.
    pub fn reduced_start(&self, point: f64) -> f64 {
        point * self.cfg.direction()[self.cfg.solver.marginal]
    }
}

/// Resolve a validated configuration into library objects. Errors are
/// configuration errors: they name what the file asked for that cannot be
/// built.
pub fn assemble(cfg: &ScenarioConfig) -> Result<Assembled, String> {
    let claims = cfg.claims.build()?;
    let payoff = cfg.process.payoff();
    let small = cfg.process.small_component();
    let kill = cfg.process.killing();
    let kind = match cfg.process.kill {
        KillConfig::Ruin => PipelineKind::Ruin,
        KillConfig::Exp { .. } => PipelineKind::ExpKill,
        KillConfig::Quadrant => PipelineKind::Quadrant,
    };
    if cfg.process.drift.iter().any(|a| !a.is_finite() || *a <= 0.0) {
        return Err("key `process.drift`: premium rates must be positive and finite".to_string());
    }
    if cfg.process.lambda <= 0.0 || !cfg.process.lambda.is_finite() {
        return Err("key `process.lambda`: claim rate must be positive and finite".to_string());
    }
    if let KillConfig::Exp { rate } = cfg.process.kill {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err("key `process.kill.rate`: killing rate must be positive".to_string());
        }
    }

    let marginal = cfg.solver.marginal;
    let claim_1d = reduced_claim(&cfg.claims, marginal)?;
    let payoff_1d = reduced_payoff(&cfg.process.payoff, marginal)?;
    let mu = match cfg.process.kill {
        KillConfig::Exp { rate } => rate,
        _ => 0.0,
    };
    let view = SolverView {
        lambda: cfg.process.lambda,
        mu,
        a: cfg.process.drift[marginal],
        claim: claim_1d,
        payoff: payoff_1d,
    };
    Ok(Assembled {
        cfg: cfg.clone(),
        kind,
        claims,
        payoff,
        small,
        kill,
        view,
    })
}

/// Marginal claim law of one coordinate.
fn reduced_claim(claims: &ClaimsConfig, marginal: usize) -> Result<TailModel, String> {
    match claims {
        ClaimsConfig::Univariate { factor } => factor.build(),
        ClaimsConfig::Independent { factors } => factors[marginal].build(),
        ClaimsConfig::Comonotone {
            driver,
            proportions,
        } => scale_claim(&driver.build()?, proportions[marginal]),
    }
}

/// One-dimensional payoff along the marginal coordinate. Indicator payoffs
/// restrict exactly; the power-utility payoff couples coordinates through
/// its cap, so it only reduces in one dimension.
fn reduced_payoff(payoff: &PayoffConfig, marginal: usize) -> Result<ReducedPayoff, String> {
    match payoff {
        PayoffConfig::ClaimTail => Ok(ReducedPayoff::ClaimTail),
        PayoffConfig::Ball { radius } => Ok(ReducedPayoff::Interval {
            lo: -radius,
            hi: *radius,
        }),
        PayoffConfig::Quadrant { level } => Ok(ReducedPayoff::HalfLine { level: *level }),
        PayoffConfig::PowerUtility {
            alpha,
            weights,
            scale,
        } => {
            if weights.len() != 1 {
                return Err(
                    "key `process.payoff`: the power-utility payoff has no one-dimensional \
                     reduction in two dimensions; use a one-dimensional scenario"
                        .to_string(),
                );
            }
            Ok(ReducedPayoff::PowerCapped {
                alpha: *alpha,
                k: (scale * weights[marginal]).powf(*alpha),
            })
        }
    }
}

/// The law of s·Z for a claim law Z — every supported family is closed
/// under positive scaling.
pub fn scale_claim(model: &TailModel, s: f64) -> Result<TailModel, String> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(format!("claim scale must be positive and finite, got {s}"));
    }
    let delta = model.delta();
    let scaled = match model.family() {
        TailFamily::Pareto { c, alpha } => {
            TailModel::pareto(c * s.powf(1.0 + alpha), *alpha, s * delta)
        }
        TailFamily::Exponential { beta } => TailModel::exponential(beta / s, s * delta),
        TailFamily::Weibull { shape, scale } => TailModel::weibull(*shape, s * scale, s * delta),
        TailFamily::Lognormal { mu_ln, sigma_ln } => {
            TailModel::lognormal(mu_ln + s.ln(), *sigma_ln, s * delta)
        }
        TailFamily::Empirical { samples } => {
            TailModel::empirical(samples.iter().map(|u| s * u).collect())
        }
    };
    scaled.map_err(|e| format!("scaled claim law rejected: {e}"))
}

/// Share-normalized view of a two-coordinate comonotone quadrant scenario,
/// as consumed by the proportional-reinsurance prediction: reserves are
/// divided by their shares (a claim then enters each line at full size) and
/// premium rates are restated so the per-claim drift of the normalized line
/// matches the simulated one. Coordinates are ordered by normalized reserve;
/// the prediction requires them strictly ordered.
pub struct ReinsuranceInputs {
    pub a1: f64,
    pub a2: f64,
    pub beta: f64,
    pub x: [f64; 2],
}

pub fn reinsurance_inputs(
    drift: &[f64],
    shares: &[f64],
    lambda: f64,
    claim_mean: f64,
    start: &[f64],
) -> Result<ReinsuranceInputs, String> {
    if drift.len() != 2 || shares.len() != 2 || start.len() != 2 {
        return Err("the reinsurance view needs exactly two coordinates".to_string());
    }
    let norm = |i: usize| -> (f64, f64) {
        let x = start[i] / shares[i];
        let a = drift[i] / shares[i] - lambda * claim_mean * (1.0 - shares[i]);
        (x, a)
    };
    let (x_first, a_first) = norm(0);
    let (x_second, a_second) = norm(1);
    let ((x1, a1, s1), (x2, a2)) = if x_first < x_second {
        ((x_first, a_first, shares[0]), (x_second, a_second))
    } else if x_second < x_first {
        ((x_second, a_second, shares[1]), (x_first, a_first))
    } else {
        return Err(
            "normalized reserves coincide; the single-claim prediction needs them strictly \
             ordered"
                .to_string(),
        );
    };
    Ok(ReinsuranceInputs {
        a1,
        a2,
        beta: s1,
        x: [x1, x2],
    })
}
