//! Holdout evaluation and the measurable side of the consistency argument:
//! cell diameters, leaf estimation counts and split-count bounds.

pub mod log;
mod report;

pub use log::{ActivationRow, Checkpoint, RunLog, SplitRow, TreeStat};
pub use report::{consistency_report, ConsistencyReport, ReportRow};

use rayon::prelude::*;

use crate::error::{OrfError, Result};
use crate::forest::OnlineForest;
use crate::point::{check_features, LabeledPoint};
use crate::rng::RngStream;
use crate::tree::OnlineTree;

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub forest_accuracy: f64,
    pub tree_accuracies: Vec<f64>,
}

impl Evaluation {
    pub fn mean_tree_accuracy(&self) -> f64 {
        self.tree_accuracies.iter().sum::<f64>() / self.tree_accuracies.len() as f64
    }

    /// Population standard deviation of the tree accuracies.
    pub fn std_tree_accuracy(&self) -> f64 {
        let mean = self.mean_tree_accuracy();
        let var = self
            .tree_accuracies
            .iter()
            .map(|a| (a - mean).powi(2))
            .sum::<f64>()
            / self.tree_accuracies.len() as f64;
        var.sqrt()
    }
}

/// Holdout accuracy of the forest vote and of every tree.
pub fn evaluate(forest: &OnlineForest, test: &[LabeledPoint]) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(OrfError::Input("empty test set".into()));
    }
    for p in test {
        p.check(forest.dims(), forest.classes())?;
    }
    let n = test.len() as f64;
    let forest_hits = test
        .par_iter()
        .filter(|p| forest.predict_unchecked(&p.x) == p.y)
        .count();
    let tree_accuracies = forest
        .trees()
        .par_iter()
        .map(|tree| {
            let hits = test
                .iter()
                .filter(|p| tree.predict_class_unchecked(&p.x) == p.y)
                .count();
            hits as f64 / n
        })
        .collect();
    Ok(Evaluation {
        forest_accuracy: forest_hits as f64 / n,
        tree_accuracies,
    })
}

/// Axis-aligned box that unbounded cells are clipped to.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ClipBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len()
            || lo
                .iter()
                .zip(&hi)
                .any(|(l, h)| !(l.is_finite() && h.is_finite() && l <= h))
        {
            return Err(OrfError::Input(
                "clip box must be bounded with lo <= hi".into(),
            ));
        }
        Ok(ClipBox { lo, hi })
    }

    /// Bounding box of `points`, each side widened so the total width grows
    /// by the fraction `expand`.
    pub fn around(points: &[LabeledPoint], expand: f64) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| OrfError::Input("clip box needs at least one point".into()))?;
        let mut lo = first.x.clone();
        let mut hi = first.x.clone();
        for p in points {
            for (d, &v) in p.x.iter().enumerate() {
                lo[d] = lo[d].min(v);
                hi[d] = hi[d].max(v);
            }
        }
        for d in 0..lo.len() {
            let pad = 0.5 * expand * (hi[d] - lo[d]);
            lo[d] -= pad;
            hi[d] += pad;
        }
        ClipBox::new(lo, hi)
    }

    pub fn diagonal(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (h - l).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Euclidean diameter of the cell containing `x`, intersected with `clip`.
pub fn leaf_diameter(tree: &OnlineTree, x: &[f64], clip: &ClipBox) -> Result<f64> {
    check_features(x, tree.dims())?;
    if clip.lo.len() != tree.dims() {
        return Err(OrfError::Input("clip box dimension mismatch".into()));
    }
    Ok(leaf_diameter_unchecked(tree, x, clip))
}

pub(crate) fn leaf_diameter_unchecked(tree: &OnlineTree, x: &[f64], clip: &ClipBox) -> f64 {
    let leaf = tree
        .leaf(tree.route_unchecked(x))
        .expect("route ends at a leaf");
    leaf.extent
        .iter()
        .enumerate()
        .map(|(d, iv)| iv.clipped_width(clip.lo[d], clip.hi[d]).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Monte-Carlo estimate of `E[max(max U_i, 1 - min U_i)]` for `m` uniforms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShrinkEstimate {
    pub m: usize,
    pub trials: usize,
    pub mean: f64,
    pub std_error: f64,
}

impl ShrinkEstimate {
    /// Closed form `(2m + 1) / (2m + 2)`.
    pub fn expected(&self) -> f64 {
        expected_shrink_factor(self.m)
    }

    /// Distance from the closed form in standard errors.
    pub fn z_score(&self) -> f64 {
        (self.mean - self.expected()) / self.std_error
    }
}

pub fn expected_shrink_factor(m: usize) -> f64 {
    (2 * m + 1) as f64 / (2 * m + 2) as f64
}

pub fn shrink_factor_check(m: usize, trials: usize, rng: &mut RngStream) -> ShrinkEstimate {
    assert!(m >= 1 && trials >= 1, "need m >= 1 and trials >= 1");
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..trials {
        let (mut lo, mut hi) = (1.0f64, 0.0f64);
        for _ in 0..m {
            let u = rng.uniform();
            lo = lo.min(u);
            hi = hi.max(u);
        }
        let v = hi.max(1.0 - lo);
        sum += v;
        sum_sq += v * v;
    }
    let n = trials as f64;
    let mean = sum / n;
    let var = if trials > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    ShrinkEstimate {
        m,
        trials,
        mean,
        std_error: (var / n).sqrt(),
    }
}

/// Median of a non-empty sample (mean of the two middle values when even).
pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty sample");
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
