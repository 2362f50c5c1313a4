//! Candidate splits and the rules that decide between them.

use serde::{Deserialize, Serialize};

use crate::histogram::ClassHistogram;

/// Gains below this are reported as exactly zero. Proportional splits would
/// otherwise come out as +/- a few ulps and pass a `> 0` threshold.
pub const GAIN_EPSILON: f64 = 1e-12;

/// An axis-aligned candidate `x[dim] <= threshold` with per-child statistics
/// from both streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSplit {
    pub dim: usize,
    pub threshold: f64,
    pub left_struct: ClassHistogram,
    pub right_struct: ClassHistogram,
    pub left_est: ClassHistogram,
    pub right_est: ClassHistogram,
    pub creation_order: u64,
}

impl CandidateSplit {
    pub fn new(dim: usize, threshold: f64, classes: usize, creation_order: u64) -> Self {
        CandidateSplit {
            dim,
            threshold,
            left_struct: ClassHistogram::new(classes),
            right_struct: ClassHistogram::new(classes),
            left_est: ClassHistogram::new(classes),
            right_est: ClassHistogram::new(classes),
            creation_order,
        }
    }

    #[inline]
    pub fn goes_left(&self, x: &[f64]) -> bool {
        x[self.dim] <= self.threshold
    }

    pub fn record_structure(&mut self, x: &[f64], y: usize) {
        if self.goes_left(x) {
            self.left_struct.add(y);
        } else {
            self.right_struct.add(y);
        }
    }

    pub fn record_estimation(&mut self, x: &[f64], y: usize) {
        if self.goes_left(x) {
            self.left_est.add(y);
        } else {
            self.right_est.add(y);
        }
    }

    /// Entropy reduction of the structure-stream labels, in bits.
    pub fn information_gain(&self) -> f64 {
        information_gain(&self.left_struct, &self.right_struct)
    }

    /// Both candidate children hold at least `alpha` estimation points.
    pub fn is_valid(&self, alpha: u64) -> bool {
        self.left_est.total() >= alpha && self.right_est.total() >= alpha
    }
}

/// `H(A) - |A'|/|A| H(A') - |A''|/|A| H(A'')` with `A = A' + A''`. Zero when
/// both sides are empty.
pub fn information_gain(left: &ClassHistogram, right: &ClassHistogram) -> f64 {
    let parent = left.merged(right);
    if parent.is_empty() {
        return 0.0;
    }
    let n = parent.total() as f64;
    let gain = parent.entropy()
        - left.total() as f64 / n * left.entropy()
        - right.total() as f64 / n * right.entropy();
    if gain < GAIN_EPSILON {
        return 0.0;
    }
    let ceiling = (parent.classes() as f64).log2();
    gain.min(ceiling)
}

pub fn can_split(candidates: &[CandidateSplit], alpha: u64) -> bool {
    candidates.iter().any(|s| s.is_valid(alpha))
}

/// Some valid candidate has gain strictly above `tau`.
pub fn should_split(candidates: &[CandidateSplit], alpha: u64, tau: f64) -> bool {
    candidates
        .iter()
        .any(|s| s.is_valid(alpha) && s.information_gain() > tau)
}

pub fn must_split(leaf_estimation_total: u64, beta: u64) -> bool {
    leaf_estimation_total >= beta
}

/// Index of the valid candidate with maximal gain; earliest-created wins ties.
pub fn best_split(candidates: &[CandidateSplit], alpha: u64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in candidates.iter().enumerate() {
        if !s.is_valid(alpha) {
            continue;
        }
        let gain = s.information_gain();
        let better = match best {
            None => true,
            Some((j, g)) => {
                gain > g || (gain == g && s.creation_order < candidates[j].creation_order)
            }
        };
        if better {
            best = Some((i, gain));
        }
    }
    best.map(|(i, _)| i)
}
