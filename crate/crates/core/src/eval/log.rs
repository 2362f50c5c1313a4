//! Per-run logs and their CSV files.
//!
//! | file              | one row per                         |
//! |-------------------|-------------------------------------|
//! | `curves.csv`      | checkpoint (forest-wide aggregates)  |
//! | `tree_stats.csv`  | (checkpoint, tree)                  |
//! | `splits.csv`      | split                               |
//! | `activations.csv` | fringe activation                   |
//!
//! `curves.csv` drops the `bayes_accuracy` column when no Bayes oracle is
//! available for the data source.

use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{OrfError, Result};
use crate::fringe::ActivationRecord;
use crate::params::HyperParams;
use crate::tree::{SplitKind, SplitRecord};

pub const CURVES_FILE: &str = "curves.csv";
pub const TREE_STATS_FILE: &str = "tree_stats.csv";
pub const SPLITS_FILE: &str = "splits.csv";
pub const ACTIVATIONS_FILE: &str = "activations.csv";
pub const FOREST_FILE: &str = "forest.json";

const CURVES_HEADER: [&str; 11] = [
    "t",
    "forest_accuracy",
    "mean_tree_accuracy",
    "std_tree_accuracy",
    "bayes_accuracy",
    "split_count",
    "active_leaves",
    "inactive_leaves",
    "median_diameter",
    "min_est_count",
    "median_est_count",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: u64,
    pub forest_accuracy: f64,
    pub mean_tree_accuracy: f64,
    pub std_tree_accuracy: f64,
    #[serde(default)]
    pub bayes_accuracy: Option<f64>,
    /// Splits summed over trees.
    pub split_count: u64,
    pub active_leaves: u64,
    pub inactive_leaves: u64,
    /// Median over (tree, probe) pairs of the clipped cell diameter.
    pub median_diameter: f64,
    pub min_est_count: u64,
    /// Median over (tree, probe) pairs of the leaf estimation count.
    pub median_est_count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeStat {
    pub t: u64,
    pub tree: usize,
    pub split_count: u64,
    pub est_total: u64,
    pub leaves: u64,
    pub active_leaves: u64,
    pub inactive_leaves: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRow {
    pub t: u64,
    pub tree: usize,
    pub leaf: usize,
    pub depth: usize,
    pub dim: usize,
    pub threshold: f64,
    pub info_gain: f64,
    pub left_est: u64,
    pub right_est: u64,
    pub leaf_est: u64,
    pub alpha: u64,
    pub kind: SplitKind,
}

impl SplitRow {
    pub fn new(tree: usize, r: &SplitRecord) -> Self {
        SplitRow {
            t: r.t,
            tree,
            leaf: r.leaf.0,
            depth: r.depth,
            dim: r.dim,
            threshold: r.threshold,
            info_gain: r.info_gain,
            left_est: r.left_est,
            right_est: r.right_est,
            leaf_est: r.leaf_est,
            alpha: r.alpha,
            kind: r.kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationRow {
    pub t: u64,
    pub tree: usize,
    pub leaf: usize,
    pub s_hat: f64,
    pub p_hat: f64,
    pub e_hat: f64,
    pub runner_up_s_hat: Option<f64>,
}

impl ActivationRow {
    pub fn new(tree: usize, a: &ActivationRecord) -> Self {
        ActivationRow {
            t: a.t,
            tree,
            leaf: a.leaf.0,
            s_hat: a.s_hat,
            p_hat: a.p_hat,
            e_hat: a.e_hat,
            runner_up_s_hat: a.runner_up_s_hat,
        }
    }
}

/// Everything a diagnosis needs from one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub params: HyperParams,
    pub checkpoints: Vec<Checkpoint>,
    pub tree_stats: Vec<TreeStat>,
    pub splits: Vec<SplitRow>,
    pub activations: Vec<ActivationRow>,
}

#[derive(Deserialize)]
struct ParamsOnly {
    params: HyperParams,
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record(header)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| OrfError::io(path, e))
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| OrfError::io(path, e))?;
    csv::Reader::from_reader(file)
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| OrfError::Document(format!("{}: {e}", path.display())))
}

fn fmt_f64(v: f64) -> String {
    v.to_string()
}

impl RunLog {
    pub fn has_bayes(&self) -> bool {
        self.checkpoints.iter().any(|c| c.bayes_accuracy.is_some())
    }

    /// Write the four CSV files into `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| OrfError::io(dir, e))?;
        self.write_curves(&dir.join(CURVES_FILE))?;
        write_rows(
            &dir.join(TREE_STATS_FILE),
            &self.tree_stats,
            &[
                "t",
                "tree",
                "split_count",
                "est_total",
                "leaves",
                "active_leaves",
                "inactive_leaves",
            ],
        )?;
        write_rows(
            &dir.join(SPLITS_FILE),
            &self.splits,
            &[
                "t",
                "tree",
                "leaf",
                "depth",
                "dim",
                "threshold",
                "info_gain",
                "left_est",
                "right_est",
                "leaf_est",
                "alpha",
                "kind",
            ],
        )?;
        write_rows(
            &dir.join(ACTIVATIONS_FILE),
            &self.activations,
            &[
                "t",
                "tree",
                "leaf",
                "s_hat",
                "p_hat",
                "e_hat",
                "runner_up_s_hat",
            ],
        )
    }

    fn write_curves(&self, path: &Path) -> Result<()> {
        let bayes = self.has_bayes();
        let mut w = csv::Writer::from_path(path)?;
        let header: Vec<&str> = CURVES_HEADER
            .iter()
            .copied()
            .filter(|h| bayes || *h != "bayes_accuracy")
            .collect();
        w.write_record(&header)?;
        for c in &self.checkpoints {
            let mut rec = vec![
                c.t.to_string(),
                fmt_f64(c.forest_accuracy),
                fmt_f64(c.mean_tree_accuracy),
                fmt_f64(c.std_tree_accuracy),
            ];
            if bayes {
                rec.push(c.bayes_accuracy.map(fmt_f64).unwrap_or_default());
            }
            rec.extend([
                c.split_count.to_string(),
                c.active_leaves.to_string(),
                c.inactive_leaves.to_string(),
                fmt_f64(c.median_diameter),
                c.min_est_count.to_string(),
                fmt_f64(c.median_est_count),
            ]);
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| OrfError::io(path, e))
    }

    /// Load a run directory written by [`RunLog::write_csv`] next to a
    /// serialized forest (which supplies the hyperparameters).
    pub fn read_dir(dir: &Path) -> Result<Self> {
        let forest_path = dir.join(FOREST_FILE);
        let text = fs::read_to_string(&forest_path).map_err(|e| OrfError::io(&forest_path, e))?;
        let params = serde_json::from_str::<ParamsOnly>(&text)?.params;
        Ok(RunLog {
            params,
            checkpoints: read_rows(&dir.join(CURVES_FILE))?,
            tree_stats: read_rows(&dir.join(TREE_STATS_FILE))?,
            splits: read_rows(&dir.join(SPLITS_FILE))?,
            activations: read_rows(&dir.join(ACTIVATIONS_FILE))?,
        })
    }
}

/// Write `text` to `path`, creating parent directories.
pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| OrfError::io(parent, e))?;
    }
    let mut f = File::create(path).map_err(|e| OrfError::io(path, e))?;
    f.write_all(text.as_bytes())
        .map_err(|e| OrfError::io(path, e))
}
