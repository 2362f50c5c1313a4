use serde::{Deserialize, Serialize};

use crate::error::{OrfError, Result};
use crate::params::HyperParams;
use crate::rng::RngStream;

/// One stream element: a dense feature vector and a class index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub x: Vec<f64>,
    pub y: usize,
}

impl LabeledPoint {
    pub fn new(x: Vec<f64>, y: usize) -> Self {
        LabeledPoint { x, y }
    }

    pub fn check(&self, dims: usize, classes: usize) -> Result<()> {
        check_features(&self.x, dims)?;
        if self.y >= classes {
            return Err(OrfError::Input(format!(
                "label {} out of range for {classes} classes",
                self.y
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_features(x: &[f64], dims: usize) -> Result<()> {
    if x.len() != dims {
        return Err(OrfError::Input(format!(
            "expected {dims} features, got {}",
            x.len()
        )));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(OrfError::Input(format!(
            "feature {i} is not finite ({})",
            x[i]
        )));
    }
    Ok(())
}

/// Which of a tree's streams a point is routed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StreamAssignment {
    Structure,
    Estimation,
    Skip,
}

/// Draws one uniform variate: `[0, p_structure)` is structure,
/// `[p_structure, p_structure + p_skip)` skip, the rest estimation.
pub fn assign_stream(rng: &mut RngStream, params: &HyperParams) -> StreamAssignment {
    let u = rng.uniform();
    if u < params.p_structure {
        StreamAssignment::Structure
    } else if u < params.p_structure + params.p_skip {
        StreamAssignment::Skip
    } else {
        StreamAssignment::Estimation
    }
}
