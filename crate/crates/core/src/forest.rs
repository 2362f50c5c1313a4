use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{OrfError, Result};
use crate::fringe::ActivationRecord;
use crate::params::HyperParams;
use crate::point::{check_features, LabeledPoint};
use crate::rng::RngStream;
use crate::tree::{OnlineTree, SplitRecord, TreeDocument, TreeDocumentRef};

pub const FOREST_FORMAT: &str = "orf-forest";
pub const FOREST_FORMAT_VERSION: u32 = 1;

/// Events emitted by one tree while it consumed a batch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TreeEvents {
    pub splits: Vec<SplitRecord>,
    pub activations: Vec<ActivationRecord>,
}

/// `M` independent online trees voting by majority. Every tree sees every
/// point and draws its own stream assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineForest {
    params: HyperParams,
    dims: usize,
    classes: usize,
    time: u64,
    trees: Vec<OnlineTree>,
}

impl OnlineForest {
    /// Tree `i` is seeded with child `i` of `params.master_seed`.
    pub fn new(params: HyperParams, dims: usize, classes: usize) -> Result<Self> {
        params.validate()?;
        let master = RngStream::new(params.master_seed);
        let trees = (0..params.num_trees)
            .map(|i| OnlineTree::new(params.clone(), dims, classes, master.child(i as u64)))
            .collect::<Result<Vec<_>>>()?;
        Ok(OnlineForest {
            params,
            dims,
            classes,
            time: 0,
            trees,
        })
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

    /// Points consumed so far.
    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn trees(&self) -> &[OnlineTree] {
        &self.trees
    }

    /// Feed one point to every tree.
    pub fn update(&mut self, point: &LabeledPoint) -> Result<Vec<TreeEvents>> {
        point.check(self.dims, self.classes)?;
        self.time += 1;
        let t = self.time;
        Ok(self
            .trees
            .iter_mut()
            .map(|tree| {
                let out = tree.learn(t, point);
                TreeEvents {
                    splits: out.split.into_iter().collect(),
                    activations: out.activations,
                }
            })
            .collect())
    }

    /// Feed a batch to every tree, trees in parallel on the current rayon
    /// pool. The result does not depend on the pool size.
    pub fn train_batch(&mut self, points: &[LabeledPoint]) -> Result<Vec<TreeEvents>> {
        for p in points {
            p.check(self.dims, self.classes)?;
        }
        let start = self.time;
        let events = self
            .trees
            .par_iter_mut()
            .map(|tree| {
                let mut ev = TreeEvents::default();
                for (i, p) in points.iter().enumerate() {
                    let out = tree.learn(start + i as u64 + 1, p);
                    ev.splits.extend(out.split);
                    ev.activations.extend(out.activations);
                }
                ev
            })
            .collect();
        self.time += points.len() as u64;
        Ok(events)
    }

    /// Per-class vote counts; sums to the number of trees.
    pub fn votes(&self, x: &[f64]) -> Result<Vec<usize>> {
        check_features(x, self.dims)?;
        Ok(self.votes_unchecked(x))
    }

    fn votes_unchecked(&self, x: &[f64]) -> Vec<usize> {
        let mut votes = vec![0; self.classes];
        for tree in &self.trees {
            votes[tree.predict_class_unchecked(x)] += 1;
        }
        votes
    }

    /// Majority vote, smallest class on ties.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        check_features(x, self.dims)?;
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> usize {
        argmax_first(&self.votes_unchecked(x))
    }

    pub fn to_json(&self) -> String {
        let doc = ForestDocumentRef {
            format: FOREST_FORMAT,
            version: FOREST_FORMAT_VERSION,
            params: &self.params,
            dims: self.dims,
            classes: self.classes,
            time: self.time,
            trees: self.trees.iter().map(TreeDocumentRef::new).collect(),
        };
        serde_json::to_string(&doc).expect("forest always serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ForestDocument = serde_json::from_str(text)?;
        if doc.format != FOREST_FORMAT || doc.version != FOREST_FORMAT_VERSION {
            return Err(OrfError::Document(format!(
                "unsupported forest document {} v{}",
                doc.format, doc.version
            )));
        }
        doc.params.validate()?;
        let trees = doc
            .trees
            .into_iter()
            .map(TreeDocument::into_tree)
            .collect::<Result<Vec<_>>>()?;
        if trees.len() != doc.params.num_trees
            || trees
                .iter()
                .any(|t| t.dims() != doc.dims || t.classes() != doc.classes)
        {
            return Err(OrfError::Document(
                "trees do not match forest header".into(),
            ));
        }
        Ok(OnlineForest {
            params: doc.params,
            dims: doc.dims,
            classes: doc.classes,
            time: doc.time,
            trees,
        })
    }
}

#[derive(Serialize)]
struct ForestDocumentRef<'a> {
    format: &'a str,
    version: u32,
    params: &'a HyperParams,
    dims: usize,
    classes: usize,
    time: u64,
    trees: Vec<TreeDocumentRef<'a>>,
}

#[derive(Deserialize)]
struct ForestDocument {
    format: String,
    version: u32,
    params: HyperParams,
    dims: usize,
    classes: usize,
    time: u64,
    trees: Vec<TreeDocument>,
}

/// Index of the largest count, smallest index on ties.
pub fn argmax_first(counts: &[usize]) -> usize {
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best
}
