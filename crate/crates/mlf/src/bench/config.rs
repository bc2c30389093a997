//! Experiment configuration: one strict JSON document per experiment.

use crate::error::{Error, Result};
use crate::mls::{MonitorParams, MonitorWeighting};
use crate::mlt::{RunConfig, RunPlan};
use crate::pde::problems::builtin_problem;
use crate::pde::LossWeights;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemChoice {
    pub name: String,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub hidden: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestSetSpec {
    /// n points per axis, endpoints included.
    Grid { n: usize },
    /// n uniform points on a dedicated stream.
    Random { n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointsSection {
    pub interior: usize,
    pub boundary: usize,
    pub test: TestSetSpec,
}

fn default_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSection {
    #[serde(default = "default_weight")]
    pub residual_weight: f64,
    #[serde(default = "default_weight")]
    pub boundary_weight: f64,
}

impl Default for LossSection {
    fn default() -> Self {
        LossSection {
            residual_weight: 1.0,
            boundary_weight: 1.0,
        }
    }
}

fn default_gradient_scale() -> f64 {
    1.0
}
fn default_history_weight() -> f64 {
    0.5
}
fn default_pool_factor() -> usize {
    20
}
fn default_weighting() -> MonitorWeighting {
    MonitorWeighting::OldestHeaviest
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    #[serde(default = "default_gradient_scale")]
    pub gradient_scale: f64,
    #[serde(default = "default_history_weight")]
    pub history_weight: f64,
    #[serde(default = "default_pool_factor")]
    pub pool_factor: usize,
    #[serde(default = "default_weighting")]
    pub weighting: MonitorWeighting,
}

impl Default for SamplingSection {
    fn default() -> Self {
        SamplingSection {
            gradient_scale: 1.0,
            history_weight: 0.5,
            pool_factor: 20,
            weighting: MonitorWeighting::OldestHeaviest,
        }
    }
}

fn default_seed() -> u64 {
    100
}

/// The one experiment document. Unknown keys anywhere are hard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub format_version: u32,
    pub problem: ProblemChoice,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub network: NetworkSection,
    pub points: PointsSection,
    #[serde(default)]
    pub loss: LossSection,
    #[serde(default)]
    pub sampling: SamplingSection,
    pub plan: RunPlan,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::config(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::config(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        builtin_problem(&self.problem.name, self.problem.dim)?;
        if self.points.interior == 0 || self.points.boundary == 0 {
            return Err(Error::config("points.interior and points.boundary must be >= 1"));
        }
        match self.points.test {
            TestSetSpec::Grid { n } => {
                if n < 2 {
                    return Err(Error::config("points.test.n must be >= 2 for grids"));
                }
            }
            TestSetSpec::Random { n } => {
                if n == 0 {
                    return Err(Error::config("points.test.n must be >= 1"));
                }
            }
        }
        if !(self.loss.residual_weight > 0.0 && self.loss.boundary_weight > 0.0) {
            return Err(Error::config("loss weights must be positive"));
        }
        if self.sampling.pool_factor == 0 {
            return Err(Error::config("sampling.pool_factor must be >= 1"));
        }
        if !(self.sampling.gradient_scale >= 0.0) || !(self.sampling.history_weight >= 0.0) {
            return Err(Error::config("sampling constants must be nonnegative"));
        }
        if self.network.hidden.is_empty() || self.network.hidden.iter().any(|&h| h == 0) {
            return Err(Error::config("network.hidden must be nonempty positive sizes"));
        }
        self.plan.validate()?;
        Ok(())
    }

    /// Assembles the orchestrator input (problem wiring included).
    pub fn to_run_config(&self) -> Result<RunConfig> {
        Ok(RunConfig {
            problem: builtin_problem(&self.problem.name, self.problem.dim)?,
            hidden: self.network.hidden.clone(),
            seed: self.seed,
            n_interior: self.points.interior,
            n_boundary: self.points.boundary,
            weights: LossWeights {
                residual: self.loss.residual_weight,
                boundary: self.loss.boundary_weight,
            },
            monitor: MonitorParams {
                gradient_scale: self.sampling.gradient_scale,
                history_weight: self.sampling.history_weight,
                weighting: self.sampling.weighting,
            },
            pool_factor: self.sampling.pool_factor,
            plan: self.plan.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"{
        "format_version": 1,
        "problem": {"name": "poisson_peak2d", "dim": 2},
        "network": {"hidden": [8, 8]},
        "points": {"interior": 64, "boundary": 16, "test": {"kind": "grid", "n": 20}},
        "plan": {
            "levels": [
                {"phases": [{"optimizer": "adam", "epochs": 10, "lr": 0.01}]}
            ]
        }
    }"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.seed, 100);
        assert_eq!(cfg.loss.residual_weight, 1.0);
        assert_eq!(cfg.sampling.pool_factor, 20);
        assert_eq!(cfg.plan.loss_tol, 1e-10);
        assert_eq!(cfg.plan.improvement_tol, 0.05);
        cfg.to_run_config().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected_with_paths() {
        let bad = MINIMAL.replace(
            "\"network\": {\"hidden\": [8, 8]}",
            "\"network\": {\"hidden\": [8, 8], \"activation\": \"relu\"}",
        );
        let err = ExperimentConfig::from_json(&bad).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("activation"), "{msg}");

        let bad = MINIMAL.replace("\"seed\": 100, ", "");
        // missing required key
        let noplan = bad.replace(
            r#""plan": {
            "levels": [
                {"phases": [{"optimizer": "adam", "epochs": 10, "lr": 0.01}]}
            ]
        }"#,
            r#""plan": {"levels": []}"#,
        );
        assert!(ExperimentConfig::from_json(&noplan).is_err());
    }

    #[test]
    fn invalid_problem_and_counts_are_config_errors() {
        let bad = MINIMAL.replace("poisson_peak2d", "unknown_problem");
        assert!(ExperimentConfig::from_json(&bad).is_err());

        let bad = MINIMAL.replace("\"interior\": 64", "\"interior\": 0");
        assert!(ExperimentConfig::from_json(&bad).is_err());
    }

    #[test]
    fn optimizer_phase_round_trip() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(cfg, back);
    }
}
