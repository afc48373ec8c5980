//! Declarative scenario configuration.
//!
//! One TOML file describes one scenario end to end: the risk process, the
//! claim law, the lattice solver, the Monte Carlo budget, the ladder of
//! starting points, and the tolerance gates the run is judged against.
//! Every field that influences a number lives here; the command line can
//! override only the seed, the path count, and the output directory, so a
//! report is reproducible from its embedded configuration alone.
//!
//! Unknown keys are rejected at parse time (`deny_unknown_fields`), and the
//! resulting TOML error names the offending key — a misspelled field fails
//! the run before any computation starts.

use serde::{Deserialize, Serialize};

use potentia::heavytail::{ClaimModel, TailModel};
use potentia::kernels::{KillingSpec, QuadratureSpec, SmallComponent};
use potentia::simulator::{McOptions, PayoffFn};

/// Parse and semantically validate a scenario file.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, String> {
    let cfg: ScenarioConfig =
        toml::from_str(text).map_err(|e| format!("configuration rejected: {e}"))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Full description of one scenario run.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Scenario identifier; used as the artifact filename stem.
    pub id: String,
    /// One-line human description printed by `list`.
    pub description: String,
    pub process: ProcessConfig,
    pub claims: ClaimsConfig,
    pub solver: SolverConfig,
    pub mc: McConfig,
    pub ladder: LadderConfig,
    #[serde(default)]
    pub asymptotics: AsymptoticsConfig,
    #[serde(default)]
    pub probe: Option<ProbeConfig>,
    #[serde(default)]
    pub gates: GatesConfig,
    #[serde(default)]
    pub validity: ValidityConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// The risk process: claim arrivals, drift, optional Brownian component,
/// killing mechanism, and the payoff integrated along the path.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessConfig {
    /// Poisson claim arrival rate λ.
    pub lambda: f64,
    /// Premium income rate per coordinate; its length fixes the dimension.
    pub drift: Vec<f64>,
    /// Brownian volatility shared by all coordinates (0 = pure drift).
    #[serde(default)]
    pub sigma: f64,
    pub kill: KillConfig,
    pub payoff: PayoffConfig,
}

/// Killing mechanism.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum KillConfig {
    /// Absorb at the first passage below zero (one-dimensional ruin).
    Ruin,
    /// Independent exponential clock with the given rate.
    Exp { rate: f64 },
    /// Absorb when any coordinate leaves the positive quadrant.
    Quadrant,
}

/// Payoff ℓ integrated along the killed path.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum PayoffConfig {
    /// ℓ(x) = λ·P(claim exceeds some coordinate of x)·1{x ≥ 0}.
    ClaimTail,
    /// ℓ(x) = λ·1{‖x‖₂ ≤ radius}.
    Ball { radius: f64 },
    /// ℓ(x) = λ·1{every coordinate ≥ level}.
    Quadrant { level: f64 },
    /// ℓ(x) = (scale·Σᵢ weightsᵢ·e^{−xᵢ})^alpha, capped at the quadrant
    /// boundary value.
    PowerUtility {
        alpha: f64,
        weights: Vec<f64>,
        scale: f64,
    },
}

/// Claim-size model: one law, an independent product, or a comonotone split
/// of a single driver.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum ClaimsConfig {
    Univariate {
        factor: TailConfig,
    },
    Independent {
        factors: Vec<TailConfig>,
    },
    Comonotone {
        driver: TailConfig,
        proportions: Vec<f64>,
    },
}

/// One claim-size law.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "family", rename_all = "snake_case")]
pub enum TailConfig {
    /// Survival c·z^{−(1+alpha)} above the floor.
    Pareto { c: f64, alpha: f64, floor: f64 },
    /// Survival e^{−rate·(z−floor)} above the floor.
    Exponential { rate: f64, floor: f64 },
    Weibull { shape: f64, scale: f64, floor: f64 },
    Lognormal {
        mu_ln: f64,
        sigma_ln: f64,
        floor: f64,
    },
}

/// Lattice solver controls: grid geometry, stopping tolerance, and the
/// quadrature used to build kernels and forcing terms.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Lattice spacing.
    pub step: f64,
    /// Upper edge of the solution window.
    pub extent: f64,
    /// Depth of the window below zero (0 = one-sided; exponential-clock
    /// solutions need room below because the process survives there).
    #[serde(default)]
    pub lower_extent: f64,
    /// Fixed-point stopping tolerance (distance to the exact lattice
    /// solution); the series solver is budgeted to match it.
    pub tolerance: f64,
    /// Simpson panels per smooth piece in kernel/forcing quadrature.
    #[serde(default = "default_panels")]
    pub panels: usize,
    /// Time-integration window in units of 1/(λ+μ) for kernel quadrature.
    #[serde(default = "default_t_max_factor")]
    pub t_max_factor: f64,
    /// Which coordinate's one-dimensional reduction the lattice solver runs
    /// on when the process is multivariate.
    #[serde(default)]
    pub marginal: usize,
}

fn default_panels() -> usize {
    QuadratureSpec::default().panels
}

fn default_t_max_factor() -> f64 {
    QuadratureSpec::default().t_max_factor
}

/// Monte Carlo budget.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub n_paths: usize,
    pub seed: u64,
    /// Simulation horizon for barrier-killed estimators; absent means the
    /// horizon doubles until the late-event fraction falls under 2%.
    #[serde(default)]
    pub horizon: Option<f64>,
}

/// Ladder of starting points: the run reports one row per point, with the
/// start placed at `point·direction`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    pub points: Vec<f64>,
    /// Per-coordinate multiplier; defaults to all ones at the process
    /// dimension.
    #[serde(default)]
    pub direction: Option<Vec<f64>>,
}

/// Far-field classification controls and declared expectations.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticsConfig {
    /// First probe rung (default 8).
    #[serde(default)]
    pub t0: Option<f64>,
    /// Geometric rung spacing (default 2).
    #[serde(default)]
    pub factor: Option<f64>,
    /// Number of rungs (default 8).
    #[serde(default)]
    pub rungs: Option<usize>,
    /// Declared regime the classifier must reproduce
    /// ("zero" | "finite" | "infinite").
    #[serde(default)]
    pub expected_regime: Option<String>,
    /// Declared dominance case for two-dimensional claim models
    /// ("first" | "second" | "comparable" | "boundary").
    #[serde(default)]
    pub expected_case: Option<String>,
}

/// Kernel decay probe: sample the upward-increment density on a window and
/// fit its exponential decay rate.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub w_min: f64,
    pub w_max: f64,
    pub count: usize,
    /// Relative mismatch allowed between the fitted rate and the closed-form
    /// rate implied by the process parameters.
    pub rel_tol: f64,
}

/// Tolerance gates (exit code 1 on failure).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatesConfig {
    /// `|MC − lattice| ≤ mc_sigma·stderr + mc_abs_slack` per rung.
    #[serde(default = "default_mc_sigma")]
    pub mc_sigma: f64,
    /// Absolute slack added to the MC gate (covers lattice discretization).
    #[serde(default = "default_mc_abs_slack")]
    pub mc_abs_slack: f64,
    /// Band for lattice/asymptotic ratios, when the prediction is
    /// quantitative.
    #[serde(default)]
    pub ratio_band: Option<[f64; 2]>,
    /// First ladder index the ratio band applies from (earlier rungs sit
    /// too far from the limit regime to gate).
    #[serde(default)]
    pub ratio_band_from: usize,
    /// Require |ratio − 1| nonincreasing over the last k rungs (0 = off).
    #[serde(default)]
    pub ratio_monotone_tail: usize,
    /// Quadrant runs: `|direct − compensation| ≤ pair_sigma·stderr_pair`.
    #[serde(default)]
    pub pair_sigma: Option<f64>,
    /// Require the lattice tail ratio u/F̄ to decrease strictly along the
    /// ladder (compact payoffs against heavy tails).
    #[serde(default)]
    pub tail_ratio_decreasing: bool,
    /// Gate the last rung's lattice and MC values against the deep-field
    /// level λ/μ within this relative tolerance.
    #[serde(default)]
    pub level_rel_tol: Option<f64>,
}

fn default_mc_sigma() -> f64 {
    3.0
}

fn default_mc_abs_slack() -> f64 {
    1e-3
}

impl Default for GatesConfig {
    fn default() -> Self {
        GatesConfig {
            mc_sigma: default_mc_sigma(),
            mc_abs_slack: default_mc_abs_slack(),
            ratio_band: None,
            ratio_band_from: 0,
            ratio_monotone_tail: 0,
            pair_sigma: None,
            tail_ratio_decreasing: false,
            level_rel_tol: None,
        }
    }
}

/// Numerical-validity gates (exit code 3 on failure): when one of these
/// fails the numbers themselves are suspect, so validity failures take
/// precedence over tolerance failures.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidityConfig {
    /// Maximum share of detected events in the second half of the horizon
    /// window (truncation-bias proxy).
    #[serde(default = "default_bias_proxy_max")]
    pub bias_proxy_max: f64,
    /// Maximum absolute sup-residual of the lattice solution.
    #[serde(default = "default_residual_max")]
    pub residual_max: f64,
    /// Maximum kernel mass lost outside the lattice window.
    #[serde(default = "default_lost_mass_max")]
    pub lost_mass_max: f64,
}

fn default_bias_proxy_max() -> f64 {
    0.02
}

fn default_residual_max() -> f64 {
    1e-6
}

fn default_lost_mass_max() -> f64 {
    1e-6
}

impl Default for ValidityConfig {
    fn default() -> Self {
        ValidityConfig {
            bias_proxy_max: default_bias_proxy_max(),
            residual_max: default_residual_max(),
            lost_mass_max: default_lost_mass_max(),
        }
    }
}

/// Artifact destination. The directory is runtime plumbing: it is recorded
/// here, but overriding it on the command line does not change a single
/// byte of the files written into it.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: String,
}

fn default_out_dir() -> String {
    "potentia-out".to_string()
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_out_dir(),
        }
    }
}

impl ScenarioConfig {
    /// Cross-field checks that the type structure cannot express. Library
    /// constructors re-validate their own inputs; this catches the mistakes
    /// that would otherwise surface as confusing mid-run errors.
    pub fn validate(&self) -> Result<(), String> {
        if self.id.is_empty()
            || !self
                .id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(format!(
                "key `id`: must be a nonempty filename-safe token, got {:?}",
                self.id
            ));
        }
        let dim = self.process.drift.len();
        if dim == 0 || dim > 2 {
            return Err(format!(
                "key `process.drift`: scenarios are one- or two-dimensional, got dimension {dim}"
            ));
        }
        let claim_dim = match &self.claims {
            ClaimsConfig::Univariate { .. } => 1,
            ClaimsConfig::Independent { factors } => factors.len(),
            ClaimsConfig::Comonotone { proportions, .. } => proportions.len(),
        };
        if claim_dim != dim {
            return Err(format!(
                "key `claims`: claim dimension {claim_dim} does not match process dimension {dim}"
            ));
        }
        if let Some(direction) = &self.ladder.direction {
            if direction.len() != dim {
                return Err(format!(
                    "key `ladder.direction`: length {} does not match process dimension {dim}",
                    direction.len()
                ));
            }
            if direction.iter().any(|d| !d.is_finite() || *d <= 0.0) {
                return Err(
                    "key `ladder.direction`: entries must be positive and finite".to_string()
                );
            }
        }
        if self.ladder.points.is_empty() {
            return Err("key `ladder.points`: at least one starting point is required".to_string());
        }
        if self
            .ladder
            .points
            .windows(2)
            .any(|w| w[1] <= w[0])
        {
            return Err("key `ladder.points`: points must be strictly increasing".to_string());
        }
        if self.ladder.points.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err("key `ladder.points`: points must be finite and nonnegative".to_string());
        }
        match &self.process.kill {
            KillConfig::Ruin if dim != 1 => {
                return Err("key `process.kill`: first-passage ruin is one-dimensional".to_string())
            }
            KillConfig::Quadrant if dim != 2 => {
                return Err(
                    "key `process.kill`: quadrant exit scenarios are two-dimensional".to_string(),
                )
            }
            _ => {}
        }
        if self.solver.marginal >= dim {
            return Err(format!(
                "key `solver.marginal`: coordinate {} out of range for dimension {dim}",
                self.solver.marginal
            ));
        }
        if !self.solver.step.is_finite() || self.solver.step <= 0.0 {
            return Err("key `solver.step`: must be positive and finite".to_string());
        }
        if self.solver.extent <= 0.0 || self.solver.lower_extent < 0.0 {
            return Err(
                "key `solver.extent`/`solver.lower_extent`: window must be nonempty with a \
                 nonnegative lower depth"
                    .to_string(),
            );
        }
        let top = self.ladder.points.last().copied().unwrap_or(0.0)
            * self
                .ladder
                .direction
                .as_ref()
                .map(|d| d[self.solver.marginal])
                .unwrap_or(1.0);
        if top > self.solver.extent {
            return Err(format!(
                "key `solver.extent`: the largest ladder start {top} lies outside the lattice \
                 window (extent {})",
                self.solver.extent
            ));
        }
        if let Some(regime) = &self.asymptotics.expected_regime {
            if !matches!(regime.as_str(), "zero" | "finite" | "infinite") {
                return Err(format!(
                    "key `asymptotics.expected_regime`: expected \"zero\", \"finite\", or \
                     \"infinite\", got {regime:?}"
                ));
            }
        }
        if let Some(case) = &self.asymptotics.expected_case {
            if !matches!(
                case.as_str(),
                "first" | "second" | "comparable" | "boundary"
            ) {
                return Err(format!(
                    "key `asymptotics.expected_case`: expected \"first\", \"second\", \
                     \"comparable\", or \"boundary\", got {case:?}"
                ));
            }
        }
        if let Some(probe) = &self.probe {
            if probe.count < 10 {
                return Err(
                    "key `probe.count`: the decay fit needs at least 10 samples".to_string()
                );
            }
            if !(probe.w_min < probe.w_max) || probe.w_min <= 0.0 {
                return Err("key `probe.w_min`/`probe.w_max`: need 0 < w_min < w_max".to_string());
            }
        }
        if let Some([lo, hi]) = self.gates.ratio_band {
            if !(lo < hi) || lo <= 0.0 {
                return Err("key `gates.ratio_band`: need 0 < lo < hi".to_string());
            }
        }
        Ok(())
    }

    /// Process dimension.
    pub fn dimension(&self) -> usize {
        self.process.drift.len()
    }

    /// Ladder direction, defaulted to all ones.
    pub fn direction(&self) -> Vec<f64> {
        self.ladder
            .direction
            .clone()
            .unwrap_or_else(|| vec![1.0; self.dimension()])
    }

    /// Starting point for one ladder rung.
    pub fn start_at(&self, point: f64) -> Vec<f64> {
        self.direction().iter().map(|d| d * point).collect()
    }

    /// The scenario's Monte Carlo options.
    pub fn mc_options(&self) -> McOptions {
        McOptions {
            n_paths: self.mc.n_paths,
            seed: self.mc.seed,
            horizon: self.mc.horizon,
            ..McOptions::default()
        }
    }

    /// The scenario's quadrature controls.
    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec {
            panels: self.solver.panels,
            t_max_factor: self.solver.t_max_factor,
        }
    }

    /// Serialized form embedded in every artifact header: the full resolved
    /// configuration (after seed/path-count overrides) minus the output
    /// table, which cannot influence a number.
    pub fn provenance_toml(&self) -> String {
        let mut echo = self.clone();
        echo.output = OutputConfig::default();
        toml::to_string(&echo).expect("scenario configs serialize")
    }
}

impl TailConfig {
    /// Build the claim-size law this entry describes.
    pub fn build(&self) -> Result<TailModel, String> {
        let model = match *self {
            TailConfig::Pareto { c, alpha, floor } => TailModel::pareto(c, alpha, floor),
            TailConfig::Exponential { rate, floor } => TailModel::exponential(rate, floor),
            TailConfig::Weibull {
                shape,
                scale,
                floor,
            } => TailModel::weibull(shape, scale, floor),
            TailConfig::Lognormal {
                mu_ln,
                sigma_ln,
                floor,
            } => TailModel::lognormal(mu_ln, sigma_ln, floor),
        };
        model.map_err(|e| format!("key `claims`: {e}"))
    }
}

impl ClaimsConfig {
    /// Build the full claim model.
    pub fn build(&self) -> Result<ClaimModel, String> {
        match self {
            ClaimsConfig::Univariate { factor } => Ok(ClaimModel::univariate(factor.build()?)),
            ClaimsConfig::Independent { factors } => {
                let laws: Result<Vec<_>, _> = factors.iter().map(TailConfig::build).collect();
                ClaimModel::independent_product(laws?).map_err(|e| format!("key `claims`: {e}"))
            }
            ClaimsConfig::Comonotone {
                driver,
                proportions,
            } => ClaimModel::comonotone_split(driver.build()?, proportions.clone())
                .map_err(|e| format!("key `claims`: {e}")),
        }
    }
}

impl ProcessConfig {
    /// The drift/Brownian component.
    pub fn small_component(&self) -> SmallComponent {
        if self.sigma > 0.0 {
            SmallComponent::DriftBrownian {
                a: self.drift.clone(),
                sigma: self.sigma,
            }
        } else {
            SmallComponent::DriftOnly {
                a: self.drift.clone(),
            }
        }
    }

    /// The killing specification.
    pub fn killing(&self) -> KillingSpec {
        match self.kill {
            KillConfig::Ruin => KillingSpec::FirstPassageRuin,
            KillConfig::Exp { rate } => KillingSpec::ExpKill { mu: rate },
            KillConfig::Quadrant => KillingSpec::QuadrantExit,
        }
    }

    /// The payoff function.
    pub fn payoff(&self) -> PayoffFn {
        match &self.payoff {
            PayoffConfig::ClaimTail => PayoffFn::ClaimTail,
            PayoffConfig::Ball { radius } => PayoffFn::IndicatorBall { r: *radius },
            PayoffConfig::Quadrant { level } => PayoffFn::IndicatorQuadrant { r: *level },
            PayoffConfig::PowerUtility {
                alpha,
                weights,
                scale,
            } => PayoffFn::PowerUtility {
                alpha: *alpha,
                pi: weights.clone(),
                varpi: *scale,
            },
        }
    }
}
