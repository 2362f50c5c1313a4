//! Hyperparameters and the depth-dependent split gates.
//!
//! The two gates are
//!
//! * `alpha(d) = ceil(alpha_base * alpha_growth^d)`: both candidate children
//!   must have seen at least this many estimation points before a split at
//!   depth `d` is allowed.
//! * `beta(d) = ceil(beta_multiplier * alpha(d))`: once a leaf has seen this
//!   many estimation points it is split on the next structure point even if
//!   no candidate clears the information-gain threshold.
//!
//! `alpha_growth > 1` makes `alpha` grow without bound while `d / alpha(d)`
//! goes to zero, and `beta_multiplier >= 1` keeps `beta(d) >= alpha(d)`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{OrfError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    /// Number of trees in the forest.
    pub num_trees: usize,
    /// Poisson rate for the number of extra candidate dimensions per leaf.
    pub lambda: f64,
    /// Candidate split points collected per candidate dimension.
    pub m: usize,
    /// Minimum information gain (bits) for an optional split.
    pub tau: f64,
    pub p_structure: f64,
    pub p_skip: f64,
    pub alpha_base: f64,
    pub alpha_growth: f64,
    pub beta_multiplier: f64,
    /// Maximum number of active leaves per tree; `None` is unbounded.
    pub fringe_capacity: Option<usize>,
    pub master_seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            num_trees: 10,
            lambda: 1.0,
            m: 10,
            tau: 0.001,
            p_structure: 0.5,
            p_skip: 0.0,
            alpha_base: 1.0,
            alpha_growth: 1.1,
            beta_multiplier: 1000.0,
            fringe_capacity: None,
            master_seed: 0,
        }
    }
}

/// Ceiling to a positive count, saturating at `u64::MAX`.
fn ceil_count(v: f64) -> u64 {
    if !v.is_finite() || v >= u64::MAX as f64 {
        u64::MAX
    } else {
        (v.ceil() as u64).max(1)
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(OrfError::Config(msg));
        if self.num_trees == 0 {
            return fail("num_trees must be positive".into());
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return fail(format!(
                "lambda must be a nonnegative real, got {}",
                self.lambda
            ));
        }
        if self.m == 0 {
            return fail("m must be positive".into());
        }
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return fail(format!("tau must be a nonnegative real, got {}", self.tau));
        }
        if !(self.p_structure > 0.0 && self.p_structure < 1.0) {
            return fail(format!(
                "p_structure must lie in (0, 1), got {}",
                self.p_structure
            ));
        }
        if !(self.p_skip >= 0.0 && self.p_skip < 1.0) {
            return fail(format!("p_skip must lie in [0, 1), got {}", self.p_skip));
        }
        if self.p_structure + self.p_skip >= 1.0 {
            return fail(format!(
                "p_structure + p_skip must be < 1, got {}",
                self.p_structure + self.p_skip
            ));
        }
        if !(self.alpha_base.is_finite() && self.alpha_base > 0.0) {
            return fail(format!(
                "alpha_base must be positive, got {}",
                self.alpha_base
            ));
        }
        if !(self.alpha_growth.is_finite() && self.alpha_growth > 1.0) {
            return fail(format!(
                "alpha_growth must be > 1, got {}",
                self.alpha_growth
            ));
        }
        if !(self.beta_multiplier.is_finite() && self.beta_multiplier >= 1.0) {
            return fail(format!(
                "beta_multiplier must be >= 1, got {}",
                self.beta_multiplier
            ));
        }
        if self.fringe_capacity == Some(0) {
            return fail("fringe_capacity must be positive (or null for unbounded)".into());
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let params: HyperParams =
            serde_json::from_str(text).map_err(|e| OrfError::Config(e.to_string()))?;
        params.validate()?;
        Ok(params)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| OrfError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("hyperparameters always serialize")
    }

    /// Minimum estimation count per candidate child for a split at `depth`.
    pub fn alpha(&self, depth: usize) -> u64 {
        ceil_count(self.alpha_base * self.alpha_growth.powf(depth as f64))
    }

    /// Estimation count at which a leaf at `depth` is forced to split.
    pub fn beta(&self, depth: usize) -> u64 {
        let alpha = self.alpha(depth);
        if alpha == u64::MAX {
            return u64::MAX;
        }
        ceil_count(self.beta_multiplier * alpha as f64)
    }
}
