#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use orf::fringe::InactiveLeafStats;
use orf::point::assign_stream;
use orf::tree::{Node, NodeId};
use orf::{HyperParams, LabeledPoint, OnlineTree, RngStream, StreamAssignment};
use serde::Deserialize;

pub fn workspace_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn configs_dir() -> PathBuf {
    workspace_dir().join("configs")
}

/// `y` follows the first coordinate's band, replaced by a uniform class 20%
/// of the time.
pub fn noisy_stream(seed: u64, n: usize, dims: usize, classes: usize) -> Vec<LabeledPoint> {
    let mut rng = RngStream::new(seed);
    (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..dims).map(|_| rng.uniform()).collect();
            let y = if rng.uniform() < 0.2 {
                rng.below(classes)
            } else {
                ((x[0] * classes as f64) as usize).min(classes - 1)
            };
            LabeledPoint::new(x, y)
        })
        .collect()
}

/// Internal nodes as exact bit patterns.
pub fn partition_bits(tree: &OnlineTree) -> Vec<(usize, u64, usize, usize, usize)> {
    tree.partition()
        .iter()
        .map(|n| (n.dim, n.threshold.to_bits(), n.depth, n.left.0, n.right.0))
        .collect()
}

/// Root-to-node paths as strings of `L`/`R`.
pub fn node_paths(tree: &OnlineTree) -> HashMap<usize, String> {
    let mut paths = HashMap::new();
    let mut stack = vec![(NodeId(0), String::new())];
    while let Some((id, path)) = stack.pop() {
        if let Node::Internal(n) = &tree.nodes()[id.0] {
            stack.push((n.left, format!("{path}L")));
            stack.push((n.right, format!("{path}R")));
        }
        paths.insert(id.0, path);
    }
    paths
}

/// Leaves left to right as `(path, depth, estimation histogram)`.
pub fn leaves_in_order(tree: &OnlineTree) -> Vec<(String, usize, Vec<u64>)> {
    fn walk(tree: &OnlineTree, id: NodeId, path: String, out: &mut Vec<(String, usize, Vec<u64>)>) {
        match &tree.nodes()[id.0] {
            Node::Internal(n) => {
                walk(tree, n.left, format!("{path}L"), out);
                walk(tree, n.right, format!("{path}R"), out);
            }
            Node::Leaf(l) => out.push((path, l.depth, l.est_hist.counts().to_vec())),
        }
    }
    let mut out = Vec::new();
    walk(tree, NodeId(0), String::new(), &mut out);
    out
}

#[derive(Deserialize)]
struct TraceParams {
    lambda: f64,
    m: usize,
    tau: f64,
    alpha_base: f64,
    alpha_growth: f64,
    beta_multiplier: f64,
    num_classes: usize,
}

#[derive(Deserialize)]
struct TracePoint {
    x: Vec<f64>,
    y: usize,
    stream: String,
}

#[derive(Deserialize, Debug, PartialEq)]
struct TraceSplit {
    t: u64,
    path: String,
    depth: usize,
    dim: usize,
    threshold: f64,
    left_est: Vec<u64>,
    right_est: Vec<u64>,
    kind: String,
}

#[derive(Deserialize, Debug, PartialEq)]
struct TraceLeaf {
    path: String,
    depth: usize,
    est_hist: Vec<u64>,
}

#[derive(Deserialize)]
struct Trace {
    params: TraceParams,
    points: Vec<TracePoint>,
    splits: Vec<TraceSplit>,
    leaves: Vec<TraceLeaf>,
}

pub struct TraceReplay {
    pub splits: usize,
    pub leaves: usize,
}

/// Replay the 40-point fixture and compare every split and final leaf with
/// the hand simulation.
pub fn replay_trace40() -> Result<TraceReplay, String> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/trace40.json");
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let trace: Trace = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let p = &trace.params;
    let params = HyperParams {
        num_trees: 1,
        lambda: p.lambda,
        m: p.m,
        tau: p.tau,
        alpha_base: p.alpha_base,
        alpha_growth: p.alpha_growth,
        beta_multiplier: p.beta_multiplier,
        fringe_capacity: None,
        ..HyperParams::default()
    };
    let dims = trace.points[0].x.len();
    let mut tree = OnlineTree::new(params, dims, p.num_classes, RngStream::new(0))
        .map_err(|e| e.to_string())?;

    let mut got = Vec::new();
    for (i, tp) in trace.points.iter().enumerate() {
        let assignment = match tp.stream.as_str() {
            "structure" => StreamAssignment::Structure,
            "estimation" => StreamAssignment::Estimation,
            other => return Err(format!("unknown stream tag {other:?}")),
        };
        let t = i as u64 + 1;
        let out = tree.update(t, &LabeledPoint::new(tp.x.clone(), tp.y), assignment);
        if let Some(rec) = out.split {
            let paths = node_paths(&tree);
            let hist = |id: NodeId| tree.leaf(id).unwrap().est_hist.counts().to_vec();
            got.push(TraceSplit {
                t: rec.t,
                path: paths[&rec.leaf.0].clone(),
                depth: rec.depth,
                dim: rec.dim,
                threshold: rec.threshold,
                left_est: hist(rec.left),
                right_est: hist(rec.right),
                kind: serde_json::to_value(rec.kind)
                    .unwrap()
                    .as_str()
                    .unwrap()
                    .to_string(),
            });
        }
    }
    if got != trace.splits {
        return Err(format!(
            "splits differ:\n  got      {got:?}\n  expected {:?}",
            trace.splits
        ));
    }
    let leaves: Vec<TraceLeaf> = leaves_in_order(&tree)
        .into_iter()
        .map(|(path, depth, est_hist)| TraceLeaf {
            path,
            depth,
            est_hist,
        })
        .collect();
    if leaves != trace.leaves {
        return Err(format!(
            "leaves differ:\n  got      {leaves:?}\n  expected {:?}",
            trace.leaves
        ));
    }
    Ok(TraceReplay {
        splits: got.len(),
        leaves: leaves.len(),
    })
}

fn small_params() -> HyperParams {
    HyperParams {
        num_trees: 1,
        lambda: 1.0,
        m: 5,
        tau: 0.02,
        alpha_base: 1.0,
        alpha_growth: 1.2,
        beta_multiplier: 6.0,
        ..HyperParams::default()
    }
}

/// Shuffle the labels among estimation points and check the partition does
/// not move. Returns the number of splits compared.
pub fn label_permutation_run(seed: u64) -> Result<u64, String> {
    let params = small_params();
    let stream = noisy_stream(seed, 3000, 3, 3);
    let mut rng = RngStream::new(seed.wrapping_add(1_000));
    let assignments: Vec<_> = stream
        .iter()
        .map(|_| assign_stream(&mut rng, &params))
        .collect();
    let est: Vec<usize> = (0..stream.len())
        .filter(|&i| assignments[i] == StreamAssignment::Estimation)
        .collect();
    let mut labels: Vec<usize> = est.iter().map(|&i| stream[i].y).collect();
    rng.shuffle(&mut labels);
    let mut permuted = stream.clone();
    for (&i, &y) in est.iter().zip(&labels) {
        permuted[i].y = y;
    }
    let run = |points: &[LabeledPoint]| {
        let mut tree = OnlineTree::new(params.clone(), 3, 3, RngStream::new(seed)).unwrap();
        for (i, p) in points.iter().enumerate() {
            tree.update(i as u64 + 1, p, assignments[i]);
        }
        tree
    };
    let (a, b) = (run(&stream), run(&permuted));
    if a.split_count() == 0 {
        return Err(format!("seed {seed}: no splits, comparison is vacuous"));
    }
    if partition_bits(&a) != partition_bits(&b) {
        return Err(format!(
            "seed {seed}: partition changed under label permutation"
        ));
    }
    Ok(a.split_count())
}

/// Every split a forest logs keeps both children at `alpha(depth)` or more.
/// Returns the number of splits checked.
pub fn validity_gate_run(seed: u64, fringe_capacity: Option<usize>) -> Result<usize, String> {
    let mut rng = RngStream::new(seed);
    let params = HyperParams {
        num_trees: 3,
        lambda: rng.uniform() * 3.0,
        m: 1 + rng.below(10),
        tau: rng.uniform() * 0.1,
        alpha_base: 1.0 + rng.uniform() * 3.0,
        alpha_growth: 1.05 + rng.uniform() * 0.3,
        beta_multiplier: 1.0 + rng.uniform() * 20.0,
        fringe_capacity,
        master_seed: seed,
        ..HyperParams::default()
    };
    let mut forest = orf::OnlineForest::new(params.clone(), 2, 3).unwrap();
    let events = forest.train_batch(&noisy_stream(seed, 3000, 2, 3)).unwrap();
    let mut checked = 0;
    for (tree, ev) in events.iter().enumerate() {
        for s in &ev.splits {
            let alpha = params.alpha(s.depth);
            if s.left_est < alpha || s.right_est < alpha {
                return Err(format!(
                    "seed {seed} tree {tree} t={}: children ({}, {}) < alpha({}) = {alpha}",
                    s.t, s.left_est, s.right_est, s.depth
                ));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

fn outranks(a: &(NodeId, u64, InactiveLeafStats), b: &(NodeId, u64, InactiveLeafStats)) -> bool {
    let (sa, sb) = (a.2.s_hat(), b.2.s_hat());
    sa > sb || (sa == sb && (a.1 < b.1 || (a.1 == b.1 && a.0 < b.0)))
}

/// Train one bounded-fringe tree, checking the capacity after every point
/// and recomputing every refill from a snapshot taken before the update.
/// Returns the number of activations checked.
pub fn fringe_run(seed: u64, capacity: usize) -> Result<usize, String> {
    let params = HyperParams {
        fringe_capacity: Some(capacity),
        ..small_params()
    };
    let mut tree = OnlineTree::new(params, 2, 3, RngStream::new(seed)).unwrap();
    let mut checked = 0;
    for (i, p) in noisy_stream(seed, 4000, 2, 3).iter().enumerate() {
        let t = i as u64 + 1;
        let before = tree.fringe().inactive_stats(tree.estimation_total());
        let active_before = tree.fringe().active_count();
        let assignment = tree.assign();
        let out = tree.update(t, p, assignment);
        if tree.fringe().active_count() > capacity {
            return Err(format!(
                "seed {seed} t={t}: {} active > {capacity}",
                tree.fringe().active_count()
            ));
        }
        let Some(rec) = out.split else {
            if !out.activations.is_empty() {
                return Err(format!("seed {seed} t={t}: activation without a split"));
            }
            continue;
        };
        let fresh = InactiveLeafStats {
            n_est_in_leaf: 0,
            n_errors: 0,
            n_est_in_tree_during_lifetime: 0,
        };
        let mut pool = before;
        pool.push((rec.left, t, fresh));
        pool.push((rec.right, t, fresh));
        let mut expected = Vec::new();
        for _ in 0..capacity - (active_before - 1) {
            if pool.is_empty() {
                break;
            }
            let mut best = 0;
            for j in 1..pool.len() {
                if outranks(&pool[j], &pool[best]) {
                    best = j;
                }
            }
            expected.push(pool.swap_remove(best).0);
        }
        let got: Vec<NodeId> = out.activations.iter().map(|a| a.leaf).collect();
        if got != expected {
            return Err(format!(
                "seed {seed} t={t}: activated {got:?}, argmax order is {expected:?}"
            ));
        }
        checked += got.len();
    }
    Ok(checked)
}

/// A bounded fringe with unlimited capacity grows the same tree as the
/// unbounded fringe.
pub fn unbounded_equivalence_run(seed: u64) -> Result<u64, String> {
    let grow = |capacity| {
        let params = HyperParams {
            fringe_capacity: capacity,
            ..small_params()
        };
        let mut tree = OnlineTree::new(params, 2, 3, RngStream::new(seed)).unwrap();
        for (i, p) in noisy_stream(seed, 3000, 2, 3).iter().enumerate() {
            tree.learn(i as u64 + 1, p);
        }
        tree
    };
    let (a, b) = (grow(Some(usize::MAX)), grow(None));
    if a.nodes() != b.nodes() || a.split_count() != b.split_count() {
        return Err(format!("seed {seed}: trees differ"));
    }
    Ok(a.split_count())
}
