use std::collections::BTreeMap;
use std::fmt;

use super::log::RunLog;
use crate::error::{OrfError, Result};

/// Slack allowed on checkpoint-to-checkpoint diameter increases.
const DIAMETER_NOISE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub t: u64,
    pub split_count: u64,
    pub median_diameter: f64,
    pub median_est_count: f64,
}

/// Trend checks are informational; the hard checks decide pass/fail.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub rows: Vec<ReportRow>,
    /// Median diameter never rises by more than the noise allowance.
    pub diameter_non_increasing: bool,
    /// Final median diameter is below the first.
    pub diameter_shrank: bool,
    pub est_count_non_decreasing: bool,
    pub split_count_monotone: bool,
    /// Per tree and checkpoint: `K <= N_e / (2 alpha(1)) + 1`.
    pub k_bound_ok: bool,
    /// Every logged split had both children at `alpha(depth)` or more.
    pub validity_gate_ok: bool,
    pub fringe_capacity_ok: bool,
    /// Every activation outranked the best leaf left inactive.
    pub activation_argmax_ok: bool,
    pub violations: Vec<String>,
}

impl ConsistencyReport {
    pub fn hard_invariants_hold(&self) -> bool {
        self.split_count_monotone
            && self.k_bound_ok
            && self.validity_gate_ok
            && self.fringe_capacity_ok
            && self.activation_argmax_ok
    }
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

impl fmt::Display for ConsistencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>10} {:>8} {:>16} {:>16}",
            "t", "K", "median_diam", "median_est"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>10} {:>8} {:>16.6} {:>16.2}",
                r.t, r.split_count, r.median_diameter, r.median_est_count
            )?;
        }
        writeln!(
            f,
            "diameter non-increasing (trend): {}",
            mark(self.diameter_non_increasing)
        )?;
        writeln!(
            f,
            "diameter shrank (trend):         {}",
            mark(self.diameter_shrank)
        )?;
        writeln!(
            f,
            "estimation count growing (trend): {}",
            mark(self.est_count_non_decreasing)
        )?;
        writeln!(
            f,
            "split count monotone:            {}",
            mark(self.split_count_monotone)
        )?;
        writeln!(
            f,
            "split-count bound:               {}",
            mark(self.k_bound_ok)
        )?;
        writeln!(
            f,
            "split validity gate:             {}",
            mark(self.validity_gate_ok)
        )?;
        writeln!(
            f,
            "fringe capacity:                 {}",
            mark(self.fringe_capacity_ok)
        )?;
        writeln!(
            f,
            "activation argmax:               {}",
            mark(self.activation_argmax_ok)
        )?;
        for v in &self.violations {
            writeln!(f, "  violation: {v}")?;
        }
        Ok(())
    }
}

pub fn consistency_report(log: &RunLog) -> Result<ConsistencyReport> {
    if log.checkpoints.len() < 2 {
        return Err(OrfError::Input(format!(
            "consistency report needs at least 2 checkpoints, got {}",
            log.checkpoints.len()
        )));
    }
    let mut violations = Vec::new();
    let rows: Vec<ReportRow> = log
        .checkpoints
        .iter()
        .map(|c| ReportRow {
            t: c.t,
            split_count: c.split_count,
            median_diameter: c.median_diameter,
            median_est_count: c.median_est_count,
        })
        .collect();

    let pairs = || rows.windows(2).map(|w| (&w[0], &w[1]));
    let diameter_non_increasing =
        pairs().all(|(a, b)| b.median_diameter <= a.median_diameter * (1.0 + DIAMETER_NOISE));
    let diameter_shrank = rows.last().unwrap().median_diameter < rows[0].median_diameter
        || rows[0].median_diameter == 0.0;
    let est_count_non_decreasing = pairs().all(|(a, b)| b.median_est_count >= a.median_est_count);

    let mut split_count_monotone = pairs().all(|(a, b)| b.split_count >= a.split_count);
    if !split_count_monotone {
        violations.push("forest split count decreased between checkpoints".into());
    }

    let alpha1 = log.params.alpha(1);
    let mut k_bound_ok = true;
    let mut last_k: BTreeMap<usize, u64> = BTreeMap::new();
    for s in &log.tree_stats {
        // K <= N / (2 alpha1) + 1, in integers
        let bound_ok =
            (s.split_count.saturating_sub(1) as u128) * 2 * alpha1 as u128 <= s.est_total as u128;
        if !bound_ok {
            k_bound_ok = false;
            violations.push(format!(
                "tree {} at t={}: K={} exceeds N_e/(2 alpha(1)) + 1 with N_e={}, alpha(1)={alpha1}",
                s.tree, s.t, s.split_count, s.est_total
            ));
        }
        if let Some(prev) = last_k.insert(s.tree, s.split_count) {
            if s.split_count < prev {
                split_count_monotone = false;
                violations.push(format!(
                    "tree {} split count decreased at t={}",
                    s.tree, s.t
                ));
            }
        }
    }

    let mut validity_gate_ok = true;
    for s in &log.splits {
        let alpha = log.params.alpha(s.depth);
        if s.left_est < alpha || s.right_est < alpha {
            validity_gate_ok = false;
            violations.push(format!(
                "tree {} split at t={} depth {} has child estimation counts ({}, {}) < alpha = {alpha}",
                s.tree, s.t, s.depth, s.left_est, s.right_est
            ));
        }
    }

    let mut fringe_capacity_ok = true;
    if let Some(cap) = log.params.fringe_capacity {
        for s in &log.tree_stats {
            if s.active_leaves > cap as u64 {
                fringe_capacity_ok = false;
                violations.push(format!(
                    "tree {} at t={} has {} active leaves > capacity {cap}",
                    s.tree, s.t, s.active_leaves
                ));
            }
        }
    }

    let mut activation_argmax_ok = true;
    for a in &log.activations {
        if a.runner_up_s_hat.is_some_and(|r| r > a.s_hat) {
            activation_argmax_ok = false;
            violations.push(format!(
                "tree {} at t={} activated leaf {} with s_hat {} below runner-up {:?}",
                a.tree, a.t, a.leaf, a.s_hat, a.runner_up_s_hat
            ));
        }
    }

    Ok(ConsistencyReport {
        rows,
        diameter_non_increasing,
        diameter_shrank,
        est_count_non_decreasing,
        split_count_monotone,
        k_bound_ok,
        validity_gate_ok,
        fringe_capacity_ok,
        activation_argmax_ok,
        violations,
    })
}
