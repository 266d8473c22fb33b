use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Every numeric knob of the design, validation and inference pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Application-proposal rounds per seed shape.
    pub k_a: usize,
    /// Candidate implementations requested per function.
    pub k_i: usize,
    /// Per-pair corner distance cutoff, unit-sphere coordinates.
    pub tau_match: f64,
    /// Minimum spacing between kept float parameter values.
    pub float_gap: f64,
    pub max_combos: usize,
    pub dof_weight: f64,
    pub geo_weight: f64,
    /// Distinct seed shapes an implementation must validate on.
    pub min_validations: usize,
    pub voxel_res: usize,
    pub n_points: usize,
    pub fscore_tau: f64,
    pub noise_sigma: f64,
    pub infer_samples: usize,
    pub infer_timeout_s: f64,
    /// Reserved for neural sampling back ends.
    pub top_p: f64,
    pub feedback_rounds: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k_a: 5,
            k_i: 4,
            tau_match: 0.25,
            float_gap: 0.025,
            max_combos: 10_000,
            dof_weight: 1.0,
            geo_weight: 10.0,
            min_validations: 2,
            voxel_res: 64,
            n_points: 2048,
            fscore_tau: 0.03,
            noise_sigma: 0.05,
            infer_samples: 1000,
            infer_timeout_s: 4.0,
            top_p: 0.9,
            feedback_rounds: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid config: {field} {problem}")]
pub struct ConfigError {
    pub field: &'static str,
    pub problem: &'static str,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |field, problem| Err(ConfigError { field, problem });
        let counts = [
            ("k_a", self.k_a),
            ("k_i", self.k_i),
            ("max_combos", self.max_combos),
            ("min_validations", self.min_validations),
            ("voxel_res", self.voxel_res),
            ("n_points", self.n_points),
            ("infer_samples", self.infer_samples),
        ];
        for (field, v) in counts {
            if v == 0 {
                return err(field, "must be at least 1");
            }
        }
        let reals = [
            ("tau_match", self.tau_match),
            ("float_gap", self.float_gap),
            ("dof_weight", self.dof_weight),
            ("geo_weight", self.geo_weight),
            ("fscore_tau", self.fscore_tau),
            ("infer_timeout_s", self.infer_timeout_s),
        ];
        for (field, v) in reals {
            if v.is_nan() || v <= 0.0 {
                return err(field, "must be positive");
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return err("noise_sigma", "must be finite and nonnegative");
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return err("top_p", "must lie in (0, 1]");
        }
        Ok(())
    }
}
