//! Run configuration: budget sweep, confidence level, sampler and solver
//! settings. Loadable from a JSON file; every field has a default so
//! partial configs work.

use serde::{Deserialize, Serialize};

use crate::CliError;

fn default_budgets() -> Vec<f64> {
    (1..=10).map(|i| 100.0 * i as f64).collect()
}
fn default_alpha() -> f64 {
    0.95
}
fn default_iterations() -> usize {
    50_000
}
fn default_burn_in() -> usize {
    10_000
}
fn default_thinning() -> usize {
    10
}
fn default_epsilon() -> f64 {
    1e-6
}
fn default_t() -> usize {
    1_000
}
fn default_t_eval() -> usize {
    10_000
}
fn default_node_limit() -> u64 {
    1_000_000
}
fn default_bound_tolerance() -> f64 {
    1e-6
}
fn default_tau() -> f64 {
    0.01
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Budget sweep, ascending.
    #[serde(default = "default_budgets")]
    pub budgets: Vec<f64>,
    /// Chance-constraint confidence level.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_iterations")]
    pub gibbs_iterations: usize,
    #[serde(default = "default_burn_in")]
    pub gibbs_burn_in: usize,
    #[serde(default = "default_thinning")]
    pub gibbs_thinning: usize,
    /// Boundary clamp for the log/logit transforms.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Scenario count the solver optimizes over.
    #[serde(default = "default_t")]
    pub t: usize,
    /// Fresh scenario count for out-of-sample evaluation.
    #[serde(default = "default_t_eval")]
    pub t_eval: usize,
    #[serde(default = "default_node_limit")]
    pub node_limit: u64,
    #[serde(default = "default_bound_tolerance")]
    pub bound_tolerance: f64,
    /// Competitiveness coefficient for BASE3.
    #[serde(default = "default_tau")]
    pub tau: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl RunConfig {
    pub fn load(path: Option<&std::path::Path>) -> Result<RunConfig, CliError> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read config {path:?}: {e}")))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::validation(format!("invalid config {path:?}: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.budgets.is_empty() {
            return Err(CliError::validation("budgets must be non-empty"));
        }
        if self.budgets.iter().any(|b| !(*b > 0.0)) {
            return Err(CliError::validation("budget must be positive"));
        }
        if self.budgets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::validation("budgets must be strictly ascending"));
        }
        if !(self.alpha > 0.5 && self.alpha < 1.0) {
            return Err(CliError::validation("alpha must lie in (0.5, 1)"));
        }
        if self.gibbs_burn_in >= self.gibbs_iterations {
            return Err(CliError::validation("gibbs_burn_in must be below gibbs_iterations"));
        }
        if self.gibbs_thinning == 0 {
            return Err(CliError::validation("gibbs_thinning must be at least 1"));
        }
        if self.t == 0 || self.t_eval == 0 {
            return Err(CliError::validation("scenario counts must be positive"));
        }
        Ok(())
    }
}
