//! Online decision tree grown from a partitioned stream.
//!
//! Structure points place candidate splits and accumulate the label
//! histograms used to rank them. Estimation points fill the leaf histograms
//! used for prediction and the per-candidate counts that gate splitting.
//! Neither stream sees the other's statistics.
//!
//! A structure point arriving in an active leaf at depth `d`:
//!
//! 1. becomes a candidate split point (one candidate per candidate dimension)
//!    if fewer than `m` have been collected;
//! 2. updates the structure histograms of every candidate child containing it;
//! 3. splits the leaf at the best valid candidate if some valid candidate has
//!    gain above `tau`, or if the leaf has reached `beta(d)` estimation points
//!    and any candidate is valid. Valid means both candidate children have at
//!    least `alpha(d)` estimation points.

use serde::{Deserialize, Serialize};

use crate::error::{OrfError, Result};
use crate::fringe::{ActivationRecord, FringeState};
use crate::histogram::ClassHistogram;
use crate::params::HyperParams;
use crate::point::{assign_stream, check_features, LabeledPoint, StreamAssignment};
use crate::rng::RngStream;
use crate::split::{best_split, can_split, must_split, should_split, CandidateSplit};

pub const TREE_FORMAT: &str = "orf-tree";
pub const TREE_FORMAT_VERSION: u32 = 1;

/// Index of a node in the tree arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Half-open cell side `(lo, hi]`; `None` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl Interval {
    /// Length of the side after clipping to `[clip_lo, clip_hi]`.
    pub fn clipped_width(&self, clip_lo: f64, clip_hi: f64) -> f64 {
        let lo = self.lo.map_or(clip_lo, |v| v.max(clip_lo));
        let hi = self.hi.map_or(clip_hi, |v| v.min(clip_hi));
        (hi - lo).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    pub depth: usize,
    pub est_hist: ClassHistogram,
    pub candidate_dims: Vec<usize>,
    pub candidate_splits: Vec<CandidateSplit>,
    pub n_split_points_seen: usize,
    pub extent: Vec<Interval>,
    pub created_at: u64,
}

impl Leaf {
    /// One candidate per candidate dimension at the projection of `x`.
    pub fn create_candidate_splits(&mut self, x: &[f64], next_order: &mut u64) {
        let classes = self.est_hist.classes();
        for &d in &self.candidate_dims {
            self.candidate_splits
                .push(CandidateSplit::new(d, x[d], classes, *next_order));
            *next_order += 1;
        }
        self.n_split_points_seen += 1;
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.extent
            .iter()
            .zip(x)
            .all(|(iv, &v)| iv.lo.is_none_or(|lo| v > lo) && iv.hi.is_none_or(|hi| v <= hi))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InternalNode {
    pub dim: usize,
    pub threshold: f64,
    pub depth: usize,
    pub left: NodeId,
    pub right: NodeId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Internal(InternalNode),
    Leaf(Leaf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    /// A valid candidate cleared the gain threshold.
    Should,
    /// Forced by the leaf's estimation count reaching `beta(d)`.
    Must,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub t: u64,
    pub leaf: NodeId,
    pub depth: usize,
    pub dim: usize,
    pub threshold: f64,
    pub info_gain: f64,
    pub left_est: u64,
    pub right_est: u64,
    pub leaf_est: u64,
    pub alpha: u64,
    pub kind: SplitKind,
    pub left: NodeId,
    pub right: NodeId,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct UpdateOutcome {
    pub split: Option<SplitRecord>,
    pub activations: Vec<ActivationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineTree {
    params: HyperParams,
    dims: usize,
    classes: usize,
    nodes: Vec<Node>,
    rng: RngStream,
    split_count: u64,
    est_total: u64,
    structure_total: u64,
    next_candidate_order: u64,
    fringe: FringeState,
}

#[derive(Serialize)]
pub(crate) struct TreeDocumentRef<'a> {
    format: &'a str,
    version: u32,
    tree: &'a OnlineTree,
}

impl<'a> TreeDocumentRef<'a> {
    pub(crate) fn new(tree: &'a OnlineTree) -> Self {
        TreeDocumentRef {
            format: TREE_FORMAT,
            version: TREE_FORMAT_VERSION,
            tree,
        }
    }
}

#[derive(Deserialize)]
pub(crate) struct TreeDocument {
    format: String,
    version: u32,
    tree: OnlineTree,
}

impl TreeDocument {
    pub(crate) fn into_tree(self) -> Result<OnlineTree> {
        if self.format != TREE_FORMAT || self.version != TREE_FORMAT_VERSION {
            return Err(OrfError::Document(format!(
                "unsupported tree document {} v{}",
                self.format, self.version
            )));
        }
        self.tree.check_consistency()?;
        Ok(self.tree)
    }
}

impl OnlineTree {
    pub fn new(params: HyperParams, dims: usize, classes: usize, rng: RngStream) -> Result<Self> {
        params.validate()?;
        if dims == 0 || classes == 0 {
            return Err(OrfError::Config(format!(
                "need at least one feature and one class, got D={dims}, C={classes}"
            )));
        }
        let mut tree = OnlineTree {
            fringe: FringeState::new(params.fringe_capacity, NodeId(0)),
            params,
            dims,
            classes,
            nodes: Vec::new(),
            rng,
            split_count: 0,
            est_total: 0,
            structure_total: 0,
            next_candidate_order: 0,
        };
        let root = tree.new_leaf(
            0,
            ClassHistogram::new(classes),
            vec![Interval::default(); dims],
            0,
        );
        tree.nodes.push(Node::Leaf(root));
        Ok(tree)
    }

    fn new_leaf(
        &mut self,
        depth: usize,
        est_hist: ClassHistogram,
        extent: Vec<Interval>,
        created_at: u64,
    ) -> Leaf {
        let k = (1 + self.rng.poisson(self.params.lambda)).min(self.dims as u64) as usize;
        let candidate_dims = self.rng.distinct(self.dims, k);
        Leaf {
            depth,
            est_hist,
            candidate_dims,
            candidate_splits: Vec::new(),
            n_split_points_seen: 0,
            extent,
            created_at,
        }
    }

    pub fn params(&self) -> &HyperParams {
        &self.params
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn fringe(&self) -> &FringeState {
        &self.fringe
    }

    /// Number of splits performed so far.
    pub fn split_count(&self) -> u64 {
        self.split_count
    }

    /// Estimation points received over the tree's lifetime.
    pub fn estimation_total(&self) -> u64 {
        self.est_total
    }

    pub fn structure_total(&self) -> u64 {
        self.structure_total
    }

    pub fn leaf(&self, id: NodeId) -> Option<&Leaf> {
        match self.nodes.get(id.0)? {
            Node::Leaf(l) => Some(l),
            Node::Internal(_) => None,
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = (NodeId, &Leaf)> {
        self.nodes.iter().enumerate().filter_map(|(i, n)| match n {
            Node::Leaf(l) => Some((NodeId(i), l)),
            Node::Internal(_) => None,
        })
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().count()
    }

    pub fn is_active(&self, id: NodeId) -> bool {
        self.fringe.is_active(id)
    }

    /// Internal nodes in arena order. Two trees with equal partitions built
    /// by the same process return equal vectors.
    pub fn partition(&self) -> Vec<&InternalNode> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Internal(i) => Some(i),
                Node::Leaf(_) => None,
            })
            .collect()
    }

    /// Leaf containing `x`.
    pub fn route(&self, x: &[f64]) -> Result<NodeId> {
        check_features(x, self.dims)?;
        Ok(self.route_unchecked(x))
    }

    pub(crate) fn route_unchecked(&self, x: &[f64]) -> NodeId {
        let mut id = NodeId(0);
        loop {
            match &self.nodes[id.0] {
                Node::Leaf(_) => return id,
                Node::Internal(n) => {
                    id = if x[n.dim] <= n.threshold {
                        n.left
                    } else {
                        n.right
                    };
                }
            }
        }
    }

    fn leaf_at(&self, id: NodeId) -> &Leaf {
        match &self.nodes[id.0] {
            Node::Leaf(l) => l,
            Node::Internal(_) => unreachable!("node {id} is not a leaf"),
        }
    }

    fn leaf_at_mut(&mut self, id: NodeId) -> &mut Leaf {
        match &mut self.nodes[id.0] {
            Node::Leaf(l) => l,
            Node::Internal(_) => unreachable!("node {id} is not a leaf"),
        }
    }

    /// Class posterior of the leaf containing `x`; uniform for an empty leaf.
    pub fn predict_posterior(&self, x: &[f64]) -> Result<Vec<f64>> {
        let id = self.route(x)?;
        Ok(self.leaf_at(id).est_hist.posterior())
    }

    /// Argmax of the posterior, smallest class on ties.
    pub fn predict_class(&self, x: &[f64]) -> Result<usize> {
        check_features(x, self.dims)?;
        Ok(self.predict_class_unchecked(x))
    }

    pub(crate) fn predict_class_unchecked(&self, x: &[f64]) -> usize {
        self.leaf_at(self.route_unchecked(x)).est_hist.majority()
    }

    /// Draw this point's stream from the tree's own randomness.
    pub fn assign(&mut self) -> StreamAssignment {
        assign_stream(&mut self.rng, &self.params)
    }

    /// Assign `point` to a stream and apply it.
    pub fn learn(&mut self, t: u64, point: &LabeledPoint) -> UpdateOutcome {
        let assignment = self.assign();
        self.update(t, point, assignment)
    }

    /// Apply one stream element at stream time `t`. The point must already be
    /// validated against the tree's shape.
    pub fn update(
        &mut self,
        t: u64,
        point: &LabeledPoint,
        assignment: StreamAssignment,
    ) -> UpdateOutcome {
        debug_assert!(point.check(self.dims, self.classes).is_ok());
        match assignment {
            StreamAssignment::Skip => UpdateOutcome::default(),
            StreamAssignment::Estimation => {
                self.update_estimation(point);
                UpdateOutcome::default()
            }
            StreamAssignment::Structure => self.update_structure(t, point),
        }
    }

    fn update_estimation(&mut self, point: &LabeledPoint) {
        let (x, y) = (point.x.as_slice(), point.y);
        let id = self.route_unchecked(x);
        self.est_total += 1;
        let majority = self.leaf_at(id).est_hist.majority();
        self.fringe.record_estimation_arrival(id, majority, y);
        let leaf = self.leaf_at_mut(id);
        leaf.est_hist.add(y);
        for s in &mut leaf.candidate_splits {
            s.record_estimation(x, y);
        }
    }

    fn update_structure(&mut self, t: u64, point: &LabeledPoint) -> UpdateOutcome {
        let (x, y) = (point.x.as_slice(), point.y);
        self.structure_total += 1;
        let id = self.route_unchecked(x);
        if !self.fringe.is_active(id) {
            return UpdateOutcome::default();
        }
        let m = self.params.m;
        let mut next_order = self.next_candidate_order;
        let leaf = match &mut self.nodes[id.0] {
            Node::Leaf(l) => l,
            Node::Internal(_) => unreachable!(),
        };
        if leaf.n_split_points_seen < m {
            leaf.create_candidate_splits(x, &mut next_order);
        }
        for s in &mut leaf.candidate_splits {
            s.record_structure(x, y);
        }
        self.next_candidate_order = next_order;

        let leaf = self.leaf_at(id);
        let alpha = self.params.alpha(leaf.depth);
        if !can_split(&leaf.candidate_splits, alpha) {
            return UpdateOutcome::default();
        }
        let kind = if should_split(&leaf.candidate_splits, alpha, self.params.tau) {
            SplitKind::Should
        } else if must_split(leaf.est_hist.total(), self.params.beta(leaf.depth)) {
            SplitKind::Must
        } else {
            return UpdateOutcome::default();
        };
        let best = best_split(&leaf.candidate_splits, alpha).expect("can_split checked");
        let (record, activations) = self.split(t, id, best, kind);
        UpdateOutcome {
            split: Some(record),
            activations,
        }
    }

    /// Replace leaf `id` by an internal node at its candidate `best`.
    fn split(
        &mut self,
        t: u64,
        id: NodeId,
        best: usize,
        kind: SplitKind,
    ) -> (SplitRecord, Vec<ActivationRecord>) {
        let left_id = NodeId(self.nodes.len());
        let right_id = NodeId(self.nodes.len() + 1);
        let Node::Leaf(mut parent) = std::mem::replace(
            &mut self.nodes[id.0],
            Node::Internal(InternalNode {
                dim: 0,
                threshold: 0.0,
                depth: 0,
                left: left_id,
                right: right_id,
            }),
        ) else {
            unreachable!("split target must be a leaf");
        };
        let chosen = parent.candidate_splits.swap_remove(best);
        let depth = parent.depth;
        let record = SplitRecord {
            t,
            leaf: id,
            depth,
            dim: chosen.dim,
            threshold: chosen.threshold,
            info_gain: chosen.information_gain(),
            left_est: chosen.left_est.total(),
            right_est: chosen.right_est.total(),
            leaf_est: parent.est_hist.total(),
            alpha: self.params.alpha(depth),
            kind,
            left: left_id,
            right: right_id,
        };

        let mut left_extent = std::mem::take(&mut parent.extent);
        let mut right_extent = left_extent.clone();
        let side = left_extent[chosen.dim];
        left_extent[chosen.dim].hi = Some(
            side.hi
                .map_or(chosen.threshold, |h| h.min(chosen.threshold)),
        );
        right_extent[chosen.dim].lo = Some(
            side.lo
                .map_or(chosen.threshold, |l| l.max(chosen.threshold)),
        );

        let left = self.new_leaf(depth + 1, chosen.left_est, left_extent, t);
        let right = self.new_leaf(depth + 1, chosen.right_est, right_extent, t);
        self.nodes.push(Node::Leaf(left));
        self.nodes.push(Node::Leaf(right));
        self.nodes[id.0] = Node::Internal(InternalNode {
            dim: chosen.dim,
            threshold: chosen.threshold,
            depth,
            left: left_id,
            right: right_id,
        });
        self.split_count += 1;
        let activations = self
            .fringe
            .on_split(id, [left_id, right_id], t, self.est_total);
        (record, activations)
    }

    /// Structural checks used when loading a document and by tests.
    pub fn check_consistency(&self) -> Result<()> {
        let fail = |m: String| Err(OrfError::Invariant(m));
        let n = self.nodes.len();
        let leaves = self.leaf_count();
        if n == 0 {
            return fail("tree has no root".into());
        }
        if (n - leaves) as u64 != self.split_count {
            return fail(format!(
                "split count {} != internal nodes {}",
                self.split_count,
                n - leaves
            ));
        }
        let tracked = self.fringe.active_count() + self.fringe.inactive_count();
        if tracked != leaves || self.fringe.retired_count() != self.split_count {
            return fail(format!(
                "fringe conservation: active {} + inactive {} + retired {} vs {} nodes",
                self.fringe.active_count(),
                self.fringe.inactive_count(),
                self.fringe.retired_count(),
                n
            ));
        }
        if let Some(cap) = self.fringe.capacity() {
            if self.fringe.active_count() > cap {
                return fail(format!(
                    "fringe capacity: {} active leaves > {cap}",
                    self.fringe.active_count()
                ));
            }
        }
        for node in &self.nodes {
            match node {
                Node::Internal(i) => {
                    if i.left.0 >= n || i.right.0 >= n || i.dim >= self.dims {
                        return fail("internal node with dangling link".into());
                    }
                }
                Node::Leaf(l) => {
                    let k = l.candidate_dims.len();
                    let mut dims = l.candidate_dims.clone();
                    dims.sort_unstable();
                    dims.dedup();
                    if k == 0 || k > self.dims || dims.len() != k || dims[k - 1] >= self.dims {
                        return fail(format!("leaf candidate dimensions {:?}", l.candidate_dims));
                    }
                    if l.n_split_points_seen > self.params.m
                        || l.candidate_splits.len() > self.params.m * k
                    {
                        return fail("leaf exceeds its candidate budget".into());
                    }
                    if l.est_hist.classes() != self.classes || l.extent.len() != self.dims {
                        return fail("leaf shape does not match tree".into());
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&TreeDocumentRef::new(self)).expect("tree always serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TreeDocument = serde_json::from_str(text)?;
        doc.into_tree()
    }
}
