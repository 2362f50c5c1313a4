//! Mixtures of axis-aligned Gaussians with an exact Bayes classifier.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{OrfError, Result};
use crate::point::LabeledPoint;
use crate::rng::RngStream;

/// Variance floor used when evaluating densities.
const MIN_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub weight: f64,
    pub mean: Vec<f64>,
    /// Per-dimension variances.
    pub variance: Vec<f64>,
    pub class: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureOfGaussians {
    pub classes: usize,
    pub components: Vec<Component>,
}

impl MixtureOfGaussians {
    /// Validate and normalize the weights.
    pub fn new(classes: usize, mut components: Vec<Component>) -> Result<Self> {
        let fail = |m: String| Err(OrfError::Config(m));
        if classes == 0 || components.is_empty() {
            return fail("mixture needs at least one class and one component".into());
        }
        let dims = components[0].mean.len();
        if dims == 0 {
            return fail("mixture components need at least one dimension".into());
        }
        for (i, c) in components.iter().enumerate() {
            if c.mean.len() != dims || c.variance.len() != dims {
                return fail(format!("component {i} has mismatched dimensions"));
            }
            if !(c.weight.is_finite() && c.weight >= 0.0) {
                return fail(format!("component {i} weight must be nonnegative"));
            }
            if c.variance.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return fail(format!("component {i} variances must be nonnegative"));
            }
            if c.mean.iter().any(|v| !v.is_finite()) {
                return fail(format!("component {i} mean must be finite"));
            }
            if c.class >= classes {
                return fail(format!("component {i} class {} >= {classes}", c.class));
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if total <= 0.0 {
            return fail("mixture weights sum to zero".into());
        }
        for c in &mut components {
            c.weight /= total;
        }
        Ok(MixtureOfGaussians {
            classes,
            components,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: MixtureOfGaussians =
            serde_json::from_str(text).map_err(|e| OrfError::Config(e.to_string()))?;
        Self::new(raw.classes, raw.components)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| OrfError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn dims(&self) -> usize {
        self.components[0].mean.len()
    }

    /// Component by weight, then each coordinate from its Gaussian.
    pub fn sample_one(&self, rng: &mut RngStream) -> LabeledPoint {
        let weights: Vec<f64> = self.components.iter().map(|c| c.weight).collect();
        let c = &self.components[rng.categorical(&weights)];
        let x = c
            .mean
            .iter()
            .zip(&c.variance)
            .map(|(&mu, &var)| mu + var.sqrt() * rng.standard_normal())
            .collect();
        LabeledPoint { x, y: c.class }
    }

    pub fn sample(&self, rng: &mut RngStream, n: usize) -> Vec<LabeledPoint> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }

    /// `log(w_c * N(x; mean_c, diag(var_c)))`.
    fn log_weighted_density(c: &Component, x: &[f64]) -> f64 {
        let mut log_p = c.weight.ln();
        for ((&xi, &mu), &var) in x.iter().zip(&c.mean).zip(&c.variance) {
            let var = var.max(MIN_VARIANCE);
            log_p += -0.5 * ((xi - mu).powi(2) / var + (2.0 * PI * var).ln());
        }
        log_p
    }

    /// Unnormalized log joint `log p(x, y = k)` per class.
    pub fn class_log_joint(&self, x: &[f64]) -> Vec<f64> {
        let mut per_class: Vec<Vec<f64>> = vec![Vec::new(); self.classes];
        for c in &self.components {
            if c.weight > 0.0 {
                per_class[c.class].push(Self::log_weighted_density(c, x));
            }
        }
        per_class
            .into_iter()
            .map(|terms| {
                let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if max == f64::NEG_INFINITY {
                    return f64::NEG_INFINITY;
                }
                max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
            })
            .collect()
    }

    /// Bayes classifier: most probable class given `x`, smallest on ties.
    pub fn bayes_predict(&self, x: &[f64]) -> usize {
        let joint = self.class_log_joint(x);
        let mut best = 0;
        for (k, &v) in joint.iter().enumerate() {
            if v > joint[best] {
                best = k;
            }
        }
        best
    }

    /// Fraction of `points` the Bayes classifier labels correctly.
    pub fn bayes_accuracy(&self, points: &[LabeledPoint]) -> f64 {
        let hits = points
            .iter()
            .filter(|p| self.bayes_predict(&p.x) == p.y)
            .count();
        hits as f64 / points.len().max(1) as f64
    }
}
