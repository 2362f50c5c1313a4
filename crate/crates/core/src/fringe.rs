//! Bounded fringe of active leaves.
//!
//! Only active leaves collect candidate splits. Every other leaf is inactive
//! and carries just enough to rank it: how many estimation points it has
//! received, how many of those its majority class got wrong, and how many
//! estimation points the whole tree received over the same lifetime. When an
//! active leaf splits, freed slots go to the inactive leaves with the largest
//! `s_hat = p_hat * e_hat`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::tree::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InactiveLeafStats {
    pub n_est_in_leaf: u64,
    pub n_errors: u64,
    pub n_est_in_tree_during_lifetime: u64,
}

impl InactiveLeafStats {
    /// Estimated probability mass of the leaf's cell.
    pub fn p_hat(&self) -> f64 {
        self.n_est_in_leaf as f64 / self.n_est_in_tree_during_lifetime.max(1) as f64
    }

    /// Estimated error rate of the leaf's majority vote.
    pub fn e_hat(&self) -> f64 {
        self.n_errors as f64 / self.n_est_in_leaf.max(1) as f64
    }

    pub fn s_hat(&self) -> f64 {
        if self.n_est_in_leaf == 0 {
            return 0.0;
        }
        self.p_hat() * self.e_hat()
    }
}

/// Per-inactive-leaf counters. The tree-wide lifetime count is kept as the
/// tree's estimation total at creation, so arrivals cost O(1).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafTracker {
    pub created_at: u64,
    pub tree_est_at_creation: u64,
    pub n_est_in_leaf: u64,
    pub n_errors: u64,
}

impl LeafTracker {
    pub fn stats(&self, tree_est_total: u64) -> InactiveLeafStats {
        InactiveLeafStats {
            n_est_in_leaf: self.n_est_in_leaf,
            n_errors: self.n_errors,
            n_est_in_tree_during_lifetime: tree_est_total - self.tree_est_at_creation,
        }
    }
}

/// One promotion of an inactive leaf into the fringe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationRecord {
    pub t: u64,
    pub leaf: NodeId,
    pub s_hat: f64,
    pub p_hat: f64,
    pub e_hat: f64,
    /// Largest `s_hat` among the leaves left inactive, if any.
    pub runner_up_s_hat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeState {
    capacity: Option<usize>,
    active: BTreeSet<NodeId>,
    inactive: BTreeMap<NodeId, LeafTracker>,
    retired: u64,
}

impl FringeState {
    /// Fringe holding only the root, which starts active.
    pub fn new(capacity: Option<usize>, root: NodeId) -> Self {
        FringeState {
            capacity,
            active: BTreeSet::from([root]),
            inactive: BTreeMap::new(),
            retired: 0,
        }
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    pub fn is_bounded(&self) -> bool {
        self.capacity.is_some()
    }

    pub fn is_active(&self, leaf: NodeId) -> bool {
        self.active.contains(&leaf)
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    pub fn inactive_count(&self) -> usize {
        self.inactive.len()
    }

    pub fn retired_count(&self) -> u64 {
        self.retired
    }

    pub fn active_leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.active.iter().copied()
    }

    pub fn tracker(&self, leaf: NodeId) -> Option<&LeafTracker> {
        self.inactive.get(&leaf)
    }

    /// Snapshot of every inactive leaf's ranking statistics.
    pub fn inactive_stats(&self, tree_est_total: u64) -> Vec<(NodeId, u64, InactiveLeafStats)> {
        self.inactive
            .iter()
            .map(|(&id, t)| (id, t.created_at, t.stats(tree_est_total)))
            .collect()
    }

    /// Count an estimation point arriving in an inactive leaf. `majority` is
    /// the leaf's majority class before the point is added. The tree-wide
    /// lifetime counters of all inactive leaves advance implicitly through
    /// the tree's estimation total.
    pub fn record_estimation_arrival(&mut self, leaf: NodeId, majority: usize, y: usize) {
        if let Some(t) = self.inactive.get_mut(&leaf) {
            t.n_est_in_leaf += 1;
            if y != majority {
                t.n_errors += 1;
            }
        }
    }

    /// Retire `parent`, register the new children and refill the fringe.
    /// Unbounded fringes activate children directly.
    pub fn on_split(
        &mut self,
        parent: NodeId,
        children: [NodeId; 2],
        t: u64,
        tree_est_total: u64,
    ) -> Vec<ActivationRecord> {
        self.active.remove(&parent);
        self.inactive.remove(&parent);
        self.retired += 1;
        if self.capacity.is_none() {
            self.active.extend(children);
            return Vec::new();
        }
        for child in children {
            self.inactive.insert(
                child,
                LeafTracker {
                    created_at: t,
                    tree_est_at_creation: tree_est_total,
                    n_est_in_leaf: 0,
                    n_errors: 0,
                },
            );
        }
        let mut events = Vec::new();
        while self.has_free_slot() {
            match self.on_split_activate(t, tree_est_total) {
                Some(e) => events.push(e),
                None => break,
            }
        }
        events
    }

    fn has_free_slot(&self) -> bool {
        self.capacity.is_none_or(|c| self.active.len() < c)
    }

    /// Move the inactive leaf with the largest `s_hat` into the fringe. Ties
    /// go to the earliest-created leaf, then the smallest id.
    pub fn on_split_activate(&mut self, t: u64, tree_est_total: u64) -> Option<ActivationRecord> {
        let ranked = rank_inactive(self.inactive_stats(tree_est_total));
        let (&(leaf, _, stats), rest) = ranked.split_first()?;
        self.inactive.remove(&leaf);
        self.active.insert(leaf);
        Some(ActivationRecord {
            t,
            leaf,
            s_hat: stats.s_hat(),
            p_hat: stats.p_hat(),
            e_hat: stats.e_hat(),
            runner_up_s_hat: rest.first().map(|(_, _, s)| s.s_hat()),
        })
    }
}

/// Sort by activation priority: highest `s_hat`, then oldest, then lowest id.
pub fn rank_inactive(
    mut leaves: Vec<(NodeId, u64, InactiveLeafStats)>,
) -> Vec<(NodeId, u64, InactiveLeafStats)> {
    leaves.sort_by(|a, b| {
        b.2.s_hat()
            .total_cmp(&a.2.s_hat())
            .then(a.1.cmp(&b.1))
            .then(a.0.cmp(&b.0))
    });
    leaves
}
