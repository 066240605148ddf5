//! Experiment configuration: a single TOML file with nested sections.
//! Every field has a documented default; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use otca_core::flow::{GaussianMixture, MixtureMode, NoiseSchedule, NoiseShape};
use otca_core::grpo::{ClipRule, OtcaConfig};
use otca_core::rewards::RewardSpec;

use crate::error::{HarnessError, Result};

/// Ablation variants mapping to the credit-assignment bypass flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Uniform broadcast of the mean advantage (no temporal or objective
    /// credit).
    Baseline,
    /// Temporal credit only (uniform objective coefficients).
    Tcd,
    /// Objective credit only (uniform broadcast over timesteps).
    Moca,
    /// Both components plus the exploration bias.
    Full,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Baseline, Variant::Tcd, Variant::Moca, Variant::Full];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::Tcd => "tcd",
            Variant::Moca => "moca",
            Variant::Full => "full",
        }
    }

    pub fn parse(s: &str) -> Result<Variant> {
        match s {
            "baseline" => Ok(Variant::Baseline),
            "tcd" => Ok(Variant::Tcd),
            "moca" => Ok(Variant::Moca),
            "full" => Ok(Variant::Full),
            other => Err(HarnessError::Config(format!(
                "unknown variant '{other}' (expected baseline|tcd|moca|full)"
            ))),
        }
    }

    fn flags(&self) -> (bool, bool, bool) {
        // (uniform_w, uniform_c, exploration)
        match self {
            Variant::Baseline => (true, true, false),
            Variant::Tcd => (false, true, false),
            Variant::Moca => (true, false, true),
            Variant::Full => (false, false, true),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ModeConfig {
    pub mean: Vec<f64>,
    pub std: f64,
    pub weight: f64,
    pub label: usize,
}

impl Default for ModeConfig {
    fn default() -> Self {
        Self {
            mean: vec![0.0, 0.0],
            std: 0.25,
            weight: 1.0,
            label: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// Mixture components; empty selects the built-in default geometry
    /// (four labels, each a pair of opposite modes on a ring of the given
    /// radius).
    pub modes: Vec<ModeConfig>,
    /// Ring radius of the default geometry (ignored when modes are given).
    pub radius: f64,
    /// Mode scatter of the default geometry.
    pub mode_std: f64,
    /// Number of pretraining samples drawn from the mixture.
    pub samples: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            modes: Vec::new(),
            radius: 5.0,
            mode_std: 0.25,
            samples: 8192,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    pub hidden: Vec<usize>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self { hidden: vec![32, 32] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    /// Stochasticity level of the sampling SDE.
    pub eta: f64,
    /// Sampling steps per trajectory (T).
    pub steps: usize,
    /// Noise magnitude profile: "scaled" or "constant".
    pub noise_shape: String,
    /// Endpoint guard of the scaled profile.
    pub noise_delta: f64,
    /// Cap of the scaled profile.
    pub noise_cap: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            eta: 0.3,
            steps: 16,
            noise_shape: "scaled".into(),
            noise_delta: 1e-3,
            noise_cap: 0.35,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct PretrainSection {
    pub steps: usize,
    pub batch: usize,
    pub lr: f64,
}

impl Default for PretrainSection {
    fn default() -> Self {
        Self {
            steps: 4000,
            batch: 64,
            lr: 3e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    /// Policy learning rate (Adam).
    pub lr: f64,
    /// Gradient steps per rollout batch; past the first, the importance
    /// ratio drifts off 1 and the clip bounds the per-iteration movement.
    pub inner_epochs: usize,
    /// Clip half-width of the importance ratio.
    pub clip_eps: f64,
    /// Optional hard floor on the raw importance ratio (the alternative
    /// reading of the clipping constant); 0 disables it.
    pub rho_floor: f64,
    /// Share one initial noise draw across the group.
    pub shared_init_noise: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            lr: 2e-4,
            inner_epochs: 4,
            clip_eps: 0.1,
            rho_floor: 0.0,
            shared_init_noise: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OtcaSection {
    /// Smoothing constant of the temporal weights.
    pub tcd_eps: f64,
    /// Closed-form solver tolerance.
    pub moca_tol: f64,
    /// Divide-guard of the exploration signal and lambda.
    pub explore_eps: f64,
    /// Optional temporal weight floor (0 disables).
    pub w_min: f64,
    pub uniform_w: bool,
    pub uniform_c: bool,
    pub exploration: bool,
}

impl Default for OtcaSection {
    fn default() -> Self {
        Self {
            tcd_eps: 1e-4,
            moca_tol: 1e-8,
            explore_eps: 1e-6,
            w_min: 0.9,
            uniform_w: false,
            uniform_c: false,
            exploration: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    pub name: String,
    pub kind: String,
    pub target: Vec<f64>,
    pub axis: Vec<f64>,
    pub scale: f64,
    pub radius: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            name: String::new(),
            kind: String::new(),
            target: Vec::new(),
            axis: Vec::new(),
            scale: 1.0,
            radius: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ProxySection {
    /// Trajectories sampled for one proxy-validation report.
    pub trajectories: usize,
    /// Aggregation of per-objective reward deltas: "mean" or an objective
    /// index.
    pub aggregate: String,
}

impl Default for ProxySection {
    fn default() -> Self {
        Self {
            trajectories: 128,
            aggregate: "mean".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct AblationSection {
    pub seeds: Vec<u64>,
    pub variants: Vec<Variant>,
}

impl Default for AblationSection {
    fn default() -> Self {
        Self {
            seeds: vec![1, 2, 3, 4, 5],
            variants: Variant::ALL.to_vec(),
        }
    }
}

/// Top-level experiment configuration.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Latent dimension.
    pub d: usize,
    /// Policy-gradient iterations.
    pub iterations: usize,
    /// Samples per group (G).
    pub group_size: usize,
    /// Groups (conditions) per iteration.
    pub groups_per_iter: usize,
    pub data: DataConfig,
    pub network: NetworkConfig,
    pub schedule: ScheduleConfig,
    pub pretrain: PretrainSection,
    pub train: TrainSection,
    pub otca: OtcaSection,
    /// Reward suite; empty selects the built-in default (two opposing
    /// attraction points at ±1.5·radius plus a ring penalty at the radius).
    pub rewards: Vec<RewardConfig>,
    pub proxy: ProxySection,
    pub ablation: AblationSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            d: 2,
            iterations: 200,
            group_size: 12,
            groups_per_iter: 4,
            data: DataConfig::default(),
            network: NetworkConfig::default(),
            schedule: ScheduleConfig::default(),
            pretrain: PretrainSection::default(),
            train: TrainSection::default(),
            otca: OtcaSection::default(),
            rewards: Vec::new(),
            proxy: ProxySection::default(),
            ablation: AblationSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(HarnessError::Config(msg));
        if self.d == 0 {
            return fail("d must be at least 1".into());
        }
        if self.schedule.steps < 2 {
            return fail("schedule.steps must be at least 2".into());
        }
        if self.group_size < 2 {
            return fail("group_size must be at least 2".into());
        }
        if self.groups_per_iter == 0 {
            return fail("groups_per_iter must be at least 1".into());
        }
        if self.schedule.eta.is_nan() || self.schedule.eta < 0.0 {
            return fail(format!("schedule.eta must be nonnegative, got {}", self.schedule.eta));
        }
        if self.schedule.noise_shape != "scaled" && self.schedule.noise_shape != "constant" {
            return fail(format!(
                "schedule.noise_shape must be 'scaled' or 'constant', got '{}'",
                self.schedule.noise_shape
            ));
        }
        if self.train.clip_eps.is_nan() || self.train.clip_eps <= 0.0 {
            return fail("train.clip_eps must be positive".into());
        }
        if self.train.inner_epochs == 0 {
            return fail("train.inner_epochs must be at least 1".into());
        }
        if self.train.rho_floor < 0.0 {
            return fail("train.rho_floor must be nonnegative".into());
        }
        for (what, eps) in [
            ("otca.tcd_eps", self.otca.tcd_eps),
            ("otca.moca_tol", self.otca.moca_tol),
            ("otca.explore_eps", self.otca.explore_eps),
        ] {
            if eps.is_nan() || eps <= 0.0 {
                return fail(format!("{what} must be positive, got {eps}"));
            }
        }
        if self.otca.w_min < 0.0 || self.otca.w_min > 1.0 {
            return fail(format!("otca.w_min must lie in [0, 1], got {}", self.otca.w_min));
        }
        if self.proxy.aggregate != "mean" && self.proxy.aggregate.parse::<usize>().is_err() {
            return fail(format!(
                "proxy.aggregate must be 'mean' or an objective index, got '{}'",
                self.proxy.aggregate
            ));
        }
        if self.ablation.seeds.is_empty() {
            return fail("ablation.seeds must not be empty".into());
        }
        if self.ablation.variants.is_empty() {
            return fail("ablation.variants must not be empty".into());
        }
        // Building the derived objects surfaces the remaining problems
        // (mixture shape, reward parameters) with core error messages.
        self.mixture().map_err(|e| HarnessError::Config(e.to_string()))?;
        let suite = self.reward_suite().map_err(|e| HarnessError::Config(e.to_string()))?;
        if suite.is_empty() {
            return fail("reward suite must not be empty".into());
        }
        Ok(())
    }

    /// Apply an ablation variant's bypass flags.
    pub fn with_variant(mut self, variant: Variant) -> Self {
        let (uniform_w, uniform_c, exploration) = variant.flags();
        self.otca.uniform_w = uniform_w;
        self.otca.uniform_c = uniform_c;
        self.otca.exploration = exploration;
        self
    }

    /// Variant implied by the current bypass flags, if it matches one.
    pub fn variant(&self) -> Option<Variant> {
        Variant::ALL.into_iter().find(|v| {
            let (w, c, e) = v.flags();
            self.otca.uniform_w == w && self.otca.uniform_c == c && self.otca.exploration == e
        })
    }

    /// Label used in artifact file names: `<variant>-<seed>`.
    pub fn run_label(&self) -> String {
        let variant = self
            .variant()
            .map(|v| v.name().to_string())
            .unwrap_or_else(|| "custom".into());
        format!("{variant}-{}", self.seed)
    }

    /// The mixture described by `data`, or the default paired-ring geometry.
    pub fn mixture(&self) -> otca_core::Result<GaussianMixture> {
        if !self.data.modes.is_empty() {
            return GaussianMixture::new(
                self.data
                    .modes
                    .iter()
                    .map(|m| MixtureMode {
                        mean: m.mean.clone(),
                        std: m.std,
                        weight: m.weight,
                        label: m.label,
                    })
                    .collect(),
            );
        }
        // Default: four labels, each a pair of opposite modes on the ring.
        // Early clean predictions then sit at the reward-poor centroid and
        // commit outward as the trajectory locks in.
        let angles = [0f64, 15.0, 345.0, 30.0];
        let mut modes = Vec::new();
        for (label, a) in angles.iter().enumerate() {
            let r = a.to_radians();
            for sign in [1.0, -1.0f64] {
                let mut mean = vec![0.0; self.d];
                mean[0] = sign * self.data.radius * r.cos();
                if self.d > 1 {
                    mean[1] = sign * self.data.radius * r.sin();
                }
                modes.push(MixtureMode {
                    mean,
                    std: self.data.mode_std,
                    weight: 1.0,
                    label,
                });
            }
        }
        GaussianMixture::new(modes)
    }

    /// The reward suite described by `rewards`, or the built-in default.
    pub fn reward_suite(&self) -> otca_core::Result<Vec<RewardSpec>> {
        if self.rewards.is_empty() {
            let r = self.data.radius;
            let mut right = vec![0.0; self.d];
            right[0] = 1.5 * r;
            let mut left = vec![0.0; self.d];
            left[0] = -1.5 * r;
            return Ok(vec![
                RewardSpec::mode_proximity("near_right", right, 1.0)?,
                RewardSpec::mode_proximity("near_left", left, 1.0)?,
                RewardSpec::norm_penalty("ring", r)?,
            ]);
        }
        self.rewards
            .iter()
            .map(|c| match c.kind.as_str() {
                "mode_proximity" => RewardSpec::mode_proximity(&c.name, c.target.clone(), c.scale),
                "direction_alignment" => RewardSpec::direction_alignment(&c.name, c.axis.clone()),
                "norm_penalty" => RewardSpec::norm_penalty(&c.name, c.radius),
                other => Err(otca_core::Error::InvalidParameter(format!(
                    "unknown reward kind '{other}'"
                ))),
            })
            .collect()
    }

    pub fn reward_names(&self) -> Vec<String> {
        self.reward_suite()
            .map(|suite| suite.into_iter().map(|s| s.name).collect())
            .unwrap_or_default()
    }

    pub fn noise_schedule(&self) -> NoiseSchedule {
        let shape = match self.schedule.noise_shape.as_str() {
            "constant" => NoiseShape::Constant,
            _ => NoiseShape::Scaled {
                delta: self.schedule.noise_delta,
                cap: self.schedule.noise_cap,
            },
        };
        NoiseSchedule {
            eta: self.schedule.eta,
            shape,
        }
    }

    pub fn otca_config(&self) -> OtcaConfig {
        OtcaConfig {
            tcd_eps: self.otca.tcd_eps,
            moca_tol: self.otca.moca_tol,
            explore_eps: self.otca.explore_eps,
            w_min: self.otca.w_min,
            uniform_w: self.otca.uniform_w,
            uniform_c: self.otca.uniform_c,
            exploration: self.otca.exploration,
        }
    }

    pub fn clip_rule(&self) -> Result<ClipRule> {
        let mut rule = ClipRule::half_width(self.train.clip_eps)?;
        if self.train.rho_floor > 0.0 {
            rule = rule.with_floor(self.train.rho_floor)?;
        }
        Ok(rule)
    }

    /// A copy with the fields a variant/seed sweep may vary reset to fixed
    /// values; used to check that ablation configs share a base.
    pub fn normalized_base(&self) -> ExperimentConfig {
        let mut base = self.clone();
        base.seed = 0;
        base.otca.uniform_w = false;
        base.otca.uniform_c = false;
        base.otca.exploration = true;
        base
    }
}
