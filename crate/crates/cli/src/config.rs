//! Experiment configuration (JSON).

use std::f64::consts::PI;
use std::path::Path;

use etdms_core::adaptive::{AdaptiveConfig, Estimator, RegularizationStep};
use serde::{Deserialize, Serialize};

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Converge,
    Coarsen,
    Adaptive,
    StepDebug,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    /// Domain edge length `L`.
    #[serde(default = "default_length")]
    pub length: f64,
}

fn default_length() -> f64 {
    4.0 * PI
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub dt0: f64,
    pub end: f64,
    /// Relative node perturbation; 0 gives a uniform mesh.
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartupKind {
    /// ETD1 sub-stepping for the first `k − 1` steps.
    Etd1,
    /// Seed the history from the manufactured solution.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    /// `sin(x)cos(y)` (the manufactured solution at `t = 0`).
    Manufactured,
    /// `sin(x)cos(y)` (if `base`) plus uniform noise of the given amplitude, dealiased.
    Random {
        amplitude: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default = "yes")]
        base: bool,
    },
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveSpec {
    #[serde(default = "AdaptiveSpec::d_rho")]
    pub rho: f64,
    #[serde(default = "AdaptiveSpec::d_tol")]
    pub tol: f64,
    #[serde(default = "AdaptiveSpec::d_rate")]
    pub rate: f64,
    #[serde(default = "AdaptiveSpec::d_tau_min")]
    pub tau_min: f64,
    #[serde(default = "AdaptiveSpec::d_tau_max")]
    pub tau_max: f64,
    #[serde(default = "AdaptiveSpec::d_retries")]
    pub max_retries: usize,
    /// `null` disables the growth cap.
    #[serde(default = "AdaptiveSpec::d_cap")]
    pub growth_cap: Option<f64>,
    #[serde(default)]
    pub estimator: EstimatorKind,
    #[serde(default)]
    pub regularization_step: RegStepKind,
    pub end: f64,
}

/// Step that enters `Aτ^k` in the adaptive run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegStepKind {
    /// The attempted step.
    #[default]
    Local,
    /// `τ_max` throughout.
    Fixed,
}

/// First-order partner of the error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    /// ETD1 of the unregularized equation.
    #[default]
    Plain,
    /// ETD1 sharing the scheme's regularization.
    Stabilized,
}

impl AdaptiveSpec {
    fn d_rho() -> f64 {
        AdaptiveConfig::default().rho
    }
    fn d_tol() -> f64 {
        AdaptiveConfig::default().tol
    }
    fn d_rate() -> f64 {
        AdaptiveConfig::default().rate
    }
    fn d_tau_min() -> f64 {
        AdaptiveConfig::default().tau_min
    }
    fn d_tau_max() -> f64 {
        AdaptiveConfig::default().tau_max
    }
    fn d_retries() -> usize {
        AdaptiveConfig::default().max_retries
    }
    fn d_cap() -> Option<f64> {
        AdaptiveConfig::default().growth_cap
    }

    pub fn controller(&self) -> AdaptiveConfig {
        AdaptiveConfig {
            rho: self.rho,
            tol: self.tol,
            rate: self.rate,
            tau_min: self.tau_min,
            tau_max: self.tau_max,
            max_retries: self.max_retries,
            growth_cap: self.growth_cap,
            estimator: match self.estimator {
                EstimatorKind::Stabilized => Estimator::Stabilized,
                EstimatorKind::Plain => Estimator::Plain,
            },
            regularization_step: match self.regularization_step {
                RegStepKind::Fixed => RegularizationStep::Fixed,
                RegStepKind::Local => RegularizationStep::Local,
            },
        }
    }
}

/// Fit windows for the coarsening laws; `t` ranges start at the given time and run to the end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSpec {
    #[serde(default = "FitSpec::d_energy")]
    pub energy_from: f64,
    #[serde(default = "FitSpec::d_power")]
    pub power_from: f64,
}

impl FitSpec {
    fn d_energy() -> f64 {
        100.0
    }
    fn d_power() -> f64 {
        10.0
    }
}

impl Default for FitSpec {
    fn default() -> Self {
        Self { energy_from: Self::d_energy(), power_from: Self::d_power() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional in the file; the CLI subcommand fills it in.
    #[serde(default)]
    pub kind: Option<Kind>,
    pub grid: GridSpec,
    pub epsilon: f64,
    #[serde(default = "default_order")]
    pub order: usize,
    /// Replaces the computed regularization coefficient `A`.
    #[serde(default)]
    pub a_override: Option<f64>,
    /// Replaces the measured step-ratio bound used in the constant chain.
    #[serde(default)]
    pub r_c: Option<f64>,
    #[serde(default)]
    pub mesh: Option<MeshSpec>,
    /// Number of refinement levels `N_T = 1, 2, 4, …` in a convergence study.
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_startup")]
    pub startup: StartupKind,
    #[serde(default)]
    pub adaptive: Option<AdaptiveSpec>,
    #[serde(default = "default_initial")]
    pub initial: InitialSpec,
    #[serde(default)]
    pub snapshots: Vec<f64>,
    #[serde(default)]
    pub fits: FitSpec,
    /// Write every `stride`-th diagnostics row (the last step is always written).
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_order() -> usize {
    2
}
fn default_levels() -> usize {
    7
}
fn default_startup() -> StartupKind {
    StartupKind::Etd1
}
fn default_initial() -> InitialSpec {
    InitialSpec::Manufactured
}
fn default_stride() -> usize {
    1
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.kind.is_some() {
            cfg.validate()?;
        }
        Ok(cfg)
    }

    /// Pins the experiment kind; a conflicting kind in the file is an error.
    pub fn for_kind(mut self, kind: Kind) -> Result<Self, Error> {
        match self.kind {
            Some(k) if k != kind => {
                return Err(Error::Config(format!("config is for {k:?}, not {kind:?}")));
            }
            _ => self.kind = Some(kind),
        }
        self.validate()?;
        Ok(self)
    }

    pub fn kind(&self) -> Option<Kind> {
        self.kind
    }

    /// Applies a `--seed` override to the mesh and the initial data.
    pub fn with_seed(mut self, seed: u64) -> Self {
        if let Some(m) = self.mesh.as_mut() {
            m.seed = seed;
        }
        if let InitialSpec::Random { seed: s, .. } = &mut self.initial {
            *s = seed;
        }
        self
    }

    /// The seed that drives the run's randomness.
    pub fn seed(&self) -> u64 {
        match (&self.initial, &self.mesh) {
            (InitialSpec::Random { seed, .. }, _) => *seed,
            (_, Some(m)) => m.seed,
            _ => 0,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(1..=6).contains(&self.order) {
            return bad("order must lie in 1..=6");
        }
        if self.stride == 0 {
            return bad("stride must be at least 1");
        }
        let Some(kind) = self.kind else {
            return bad("experiment kind is not set");
        };
        match kind {
            Kind::Converge | Kind::Coarsen | Kind::StepDebug => {
                if self.mesh.is_none() {
                    return bad("this experiment needs a `mesh` section");
                }
            }
            Kind::Adaptive => {
                if self.adaptive.is_none() {
                    return bad("the adaptive experiment needs an `adaptive` section");
                }
                if self.order != 2 {
                    return bad("the adaptive controller uses the second-order scheme");
                }
            }
        }
        if kind == Kind::Converge && self.levels == 0 {
            return bad("levels must be at least 1");
        }
        Ok(())
    }
}
