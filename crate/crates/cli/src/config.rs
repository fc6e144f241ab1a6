//! Run configuration: one JSON document drives every subcommand.
//!
//! The document validates structurally on load (unknown fields are errors,
//! line/column diagnostics come from the parser); the machine-readable
//! schema ships at `crates/cli/schema/runconfig.schema.json`. A manifest
//! written by a previous run embeds its resolved configuration and is
//! accepted anywhere a configuration is, which makes every artifact
//! replayable from its manifest alone.

use serde::{Deserialize, Serialize};

use sgs_core::diagnostics::{EnsembleConfig, FracNormSpec, InitSpec};
use sgs_core::model::AbstractModel;
use sgs_core::models::{
    BrokenModel, Ns2dModel, Ns2dSpec, Pe3dModel, Pe3dSpec, SyntheticModel, SyntheticSpec,
};
use sgs_core::solver::SolverConfig;

/// Model selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Synthetic(SyntheticSpec),
    Ns2d(Ns2dSpec),
    Pe3d(Pe3dSpec),
    /// Negative-control fixture with a non-cancelling bilinear term.
    Broken { dim: usize },
}

/// Instantiated model behind the dynamic interface.
pub enum ModelHandle {
    Synthetic(SyntheticModel<f64>),
    Ns2d(Ns2dModel<f64>),
    Pe3d(Pe3dModel<f64>),
    Broken(BrokenModel<f64>),
}

impl ModelHandle {
    pub fn as_dyn(&self) -> &dyn AbstractModel<f64> {
        match self {
            ModelHandle::Synthetic(m) => m,
            ModelHandle::Ns2d(m) => m,
            ModelHandle::Pe3d(m) => m,
            ModelHandle::Broken(m) => m,
        }
    }
}

impl ModelConfig {
    pub fn build(&self) -> sgs_core::Result<ModelHandle> {
        Ok(match self {
            ModelConfig::Synthetic(spec) => {
                ModelHandle::Synthetic(SyntheticModel::generate(spec.clone())?)
            }
            ModelConfig::Ns2d(spec) => ModelHandle::Ns2d(Ns2dModel::new(spec.clone())?),
            ModelConfig::Pe3d(spec) => ModelHandle::Pe3d(Pe3dModel::new(spec.clone())?),
            ModelConfig::Broken { dim } => ModelHandle::Broken(BrokenModel::new(*dim)?),
        })
    }
}

/// Contract-verification parameters (`check-model`, and the `c₀` estimate
/// every solver-bearing command needs for the cutoff admissibility rule).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    #[serde(default = "CheckConfig::default_samples")]
    pub samples: usize,
    #[serde(default = "CheckConfig::default_beta")]
    pub beta: f64,
    #[serde(default = "CheckConfig::default_t_max")]
    pub t_max: f64,
    #[serde(default = "CheckConfig::default_noise_modes")]
    pub noise_modes: usize,
    /// Also estimate Lipschitz constants (required before uniqueness runs).
    #[serde(default = "CheckConfig::default_lipschitz")]
    pub lipschitz: bool,
    /// Sampling dimension; defaults to the model's full dimension.
    #[serde(default)]
    pub dimension: Option<usize>,
}

impl CheckConfig {
    fn default_samples() -> usize {
        1000
    }
    fn default_beta() -> f64 {
        1.0
    }
    fn default_t_max() -> f64 {
        1.0
    }
    fn default_noise_modes() -> usize {
        16
    }
    fn default_lipschitz() -> bool {
        true
    }
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            samples: Self::default_samples(),
            beta: Self::default_beta(),
            t_max: Self::default_t_max(),
            noise_modes: Self::default_noise_modes(),
            lipschitz: Self::default_lipschitz(),
            dimension: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub init: InitSpec,
    /// Compare the trajectory against the analytic linear flow (meaningful
    /// for zero models); a mismatch fails the run.
    #[serde(default)]
    pub self_test_linear: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleBlock {
    pub dims: Vec<usize>,
    pub p_list: Vec<f64>,
    pub trials: usize,
    pub init: InitSpec,
    pub frac: FracNormSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceBlock {
    pub pairs: Vec<(usize, usize)>,
    pub trials: usize,
    pub init: InitSpec,
    pub frac: FracNormSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniquenessBlock {
    pub trials: usize,
    /// Fraction of trials whose paired runs share initial data.
    pub agreement_fraction: f64,
    /// Leading-mode offset of the distinct initial data on the complement.
    pub alt_amplitude: f64,
    pub init: InitSpec,
    pub frac: FracNormSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegralBlock {
    /// Number of noise modes / integrand columns.
    pub k_modes: usize,
    /// Dimension of the state space the columns live in.
    pub basis_dim: usize,
    /// Target columns `G_k = amplitude · k^{-decay} Φ_k`.
    pub target_amplitude: f64,
    pub target_decay: f64,
    /// Perturbation direction columns `P_k = amplitude · k^{-decay} Φ_{k+1}`.
    pub perturb_amplitude: f64,
    pub perturb_decay: f64,
    pub deltas: Vec<f64>,
    pub levels: Vec<u32>,
    pub trials: usize,
    pub steps: usize,
    pub dt: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default)]
    pub check: CheckConfig,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub ensemble: Option<EnsembleBlock>,
    #[serde(default)]
    pub convergence: Option<ConvergenceBlock>,
    #[serde(default)]
    pub uniqueness: Option<UniquenessBlock>,
    #[serde(default)]
    pub integral: Option<IntegralBlock>,
}

/// The full run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub solver: SolverConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default = "RunConfig::default_out")]
    pub output_dir: String,
    pub master_seed: u64,
}

impl RunConfig {
    fn default_out() -> String {
        "out".into()
    }

    /// Parses a configuration, accepting either a bare `RunConfig` document
    /// or a manifest embedding one under `"config"`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| format!("invalid JSON at line {}, column {}: {e}", e.line(), e.column()))?;
        let config_value = if value.get("config").is_some() && value.get("model").is_none() {
            value.get("config").unwrap().clone()
        } else {
            value
        };
        serde_json::from_value(config_value).map_err(|e| format!("config schema violation: {e}"))
    }

    pub fn ensemble_config(&self, init: InitSpec, frac: FracNormSpec, trials: usize) -> EnsembleConfig {
        EnsembleConfig {
            trials,
            master_seed: self.master_seed,
            init,
            frac,
        }
    }
}
