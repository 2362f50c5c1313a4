//! Seeded experiment runs: config, data wiring, checkpoints and artifacts.
//!
//! Each run `r` derives its randomness from child `r` of the master seed:
//!
//! | child | used for                    |
//! |-------|-----------------------------|
//! | 0     | forest seed                 |
//! | 1     | training stream (MoG)       |
//! | 2     | test set (MoG)              |
//! | 3     | probe points                |
//! | 4     | pass shuffling (LIBSVM)     |

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{parse_libsvm_file, Dataset, LibsvmOptions, MixtureOfGaussians, PassSchedule};
use crate::error::{OrfError, Result};
use crate::eval::log::{write_text, FOREST_FILE};
use crate::eval::{
    consistency_report, evaluate, leaf_diameter_unchecked, median, ActivationRow, Checkpoint,
    ClipBox, ConsistencyReport, RunLog, SplitRow, TreeStat,
};
use crate::forest::OnlineForest;
use crate::params::HyperParams;
use crate::point::LabeledPoint;
use crate::rng::RngStream;

pub const CONFIG_FILE: &str = "config.json";

fn default_one() -> usize {
    1
}

fn default_probe_points() -> usize {
    256
}

fn default_clip_points() -> usize {
    1000
}

fn default_clip_expand() -> f64 {
    0.1
}

fn default_test_points() -> usize {
    5000
}

/// A mixture given inline or as a path to a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MogSource {
    Path(PathBuf),
    Inline(MixtureOfGaussians),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DataSource {
    /// Fresh samples; the stream runs to the last checkpoint.
    Mog {
        spec: MogSource,
        #[serde(default = "default_test_points")]
        test_points: usize,
    },
    /// Train file streamed for `passes` shuffled passes, scored on `test`.
    Libsvm { train: PathBuf, test: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub hyperparams: HyperParams,
    pub data: DataSource,
    #[serde(default = "default_one")]
    pub passes: usize,
    /// Stream positions (1-based) at which the forest is evaluated.
    pub checkpoints: Vec<u64>,
    #[serde(default = "default_one")]
    pub runs: usize,
    pub output_dir: PathBuf,
    #[serde(default = "default_probe_points")]
    pub probe_points: usize,
    /// Leading stream points whose bounding box defines the clip box.
    #[serde(default = "default_clip_points")]
    pub clip_points: usize,
    /// Fractional widening of the clip box.
    #[serde(default = "default_clip_expand")]
    pub clip_expand: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(OrfError::Config(m.into()));
        self.hyperparams.validate()?;
        if self.checkpoints.is_empty() {
            return fail("checkpoints must not be empty");
        }
        if self.checkpoints[0] == 0 {
            return fail("checkpoints are 1-based stream positions");
        }
        if self.checkpoints.windows(2).any(|w| w[1] <= w[0]) {
            return fail("checkpoints must be strictly increasing");
        }
        if self.runs == 0 {
            return fail("runs must be at least 1");
        }
        if self.passes == 0 {
            return fail("passes must be at least 1");
        }
        if self.probe_points == 0 || self.clip_points == 0 {
            return fail("probe_points and clip_points must be positive");
        }
        if !(self.clip_expand.is_finite() && self.clip_expand >= 0.0) {
            return fail("clip_expand must be a nonnegative number");
        }
        if let DataSource::Mog { test_points: 0, .. } = self.data {
            return fail("test_points must be positive");
        }
        if let DataSource::Mog {
            spec: MogSource::Inline(g),
            ..
        } = &self.data
        {
            MixtureOfGaussians::new(g.classes, g.components.clone())?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| OrfError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse and validate; relative data paths resolve against the config
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| OrfError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.data {
            DataSource::Mog {
                spec: MogSource::Path(p),
                ..
            } => fix(p),
            DataSource::Mog { .. } => {}
            DataSource::Libsvm { train, test } => {
                fix(train);
                fix(test);
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Data shared by every run, loaded once.
enum LoadedData {
    Mog(MixtureOfGaussians),
    Libsvm { train: Dataset, test: Dataset },
}

impl LoadedData {
    fn load(cfg: &ExperimentConfig) -> Result<Self> {
        match &cfg.data {
            DataSource::Mog {
                spec: MogSource::Path(p),
                ..
            } => Ok(LoadedData::Mog(MixtureOfGaussians::load(p)?)),
            DataSource::Mog {
                spec: MogSource::Inline(g),
                ..
            } => Ok(LoadedData::Mog(MixtureOfGaussians::new(
                g.classes,
                g.components.clone(),
            )?)),
            DataSource::Libsvm { train, test } => {
                let train = parse_libsvm_file(train, &LibsvmOptions::default())?;
                let opts = LibsvmOptions {
                    min_dims: train.dims,
                    label_map: Some(train.label_map.clone()),
                };
                let test_path = test;
                let test = parse_libsvm_file(test_path, &opts)?;
                if test.dims != train.dims {
                    return Err(OrfError::Input(format!(
                        "{}: {} features, training data has {}",
                        test_path.display(),
                        test.dims,
                        train.dims
                    )));
                }
                Ok(LoadedData::Libsvm { train, test })
            }
        }
    }

    fn dims(&self) -> usize {
        match self {
            LoadedData::Mog(g) => g.dims(),
            LoadedData::Libsvm { train, .. } => train.dims,
        }
    }

    fn classes(&self) -> usize {
        match self {
            LoadedData::Mog(g) => g.classes,
            LoadedData::Libsvm { train, .. } => train.classes,
        }
    }

    fn stream_len(&self, cfg: &ExperimentConfig) -> u64 {
        match self {
            LoadedData::Mog(_) => *cfg.checkpoints.last().unwrap(),
            LoadedData::Libsvm { train, .. } => (train.len() * cfg.passes) as u64,
        }
    }
}

/// Outcome of one seeded run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub run: usize,
    pub log: RunLog,
    pub forest: OnlineForest,
    /// Present when the run has at least two checkpoints.
    pub report: Option<ConsistencyReport>,
}

impl RunResult {
    pub fn write(&self, dir: &Path) -> Result<()> {
        self.log.write_csv(dir)?;
        write_text(&dir.join(FOREST_FILE), &self.forest.to_json())
    }
}

pub fn run_dir(out: &Path, run: usize) -> PathBuf {
    out.join(format!("run_{run:03}"))
}

/// Execute all runs, on a dedicated pool of `threads` workers if given.
/// Runs whose hard invariants fail turn into an invariant error.
pub fn run_experiment(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Vec<RunResult>> {
    cfg.validate()?;
    let data = LoadedData::load(cfg)?;
    let stream_len = data.stream_len(cfg);
    let last = *cfg.checkpoints.last().unwrap();
    if last > stream_len {
        return Err(OrfError::Config(format!(
            "last checkpoint {last} is beyond the stream length {stream_len}"
        )));
    }
    let go = || {
        (0..cfg.runs)
            .into_par_iter()
            .map(|r| single_run(cfg, &data, r))
            .collect::<Result<Vec<_>>>()
    };
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| OrfError::Config(format!("thread pool: {e}")))?
            .install(go),
        None => go(),
    }
}

/// Run the experiment and write `config.json` plus one directory per run.
pub fn train_to_dir(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Vec<RunResult>> {
    let results = run_experiment(cfg, threads)?;
    let out = &cfg.output_dir;
    write_text(&out.join(CONFIG_FILE), &cfg.to_json())?;
    for r in &results {
        r.write(&run_dir(out, r.run))?;
    }
    Ok(results)
}

fn single_run(cfg: &ExperimentConfig, data: &LoadedData, run: usize) -> Result<RunResult> {
    let base = RngStream::new(cfg.hyperparams.master_seed).child(run as u64);
    let params = HyperParams {
        master_seed: base.child(0).next_u64(),
        ..cfg.hyperparams.clone()
    };
    let mut forest = OnlineForest::new(params.clone(), data.dims(), data.classes())?;
    let mut probe_rng = base.child(3);

    let (test, probes, bayes, mut stream): (
        Vec<LabeledPoint>,
        _,
        _,
        Box<dyn Iterator<Item = LabeledPoint> + '_>,
    ) = match data {
        LoadedData::Mog(g) => {
            let test = g.sample(&mut base.child(2), test_point_count(cfg));
            let probes = g.sample(&mut probe_rng, cfg.probe_points);
            let bayes = Some(g.bayes_accuracy(&test));
            let mut rng = base.child(1);
            let len = data.stream_len(cfg);
            let stream = (0..len).map(move |_| g.sample_one(&mut rng));
            (test, probes, bayes, Box::new(stream))
        }
        LoadedData::Libsvm { train, test } => {
            let k = cfg.probe_points.min(train.len());
            let probes = probe_rng
                .distinct(train.len(), k)
                .into_iter()
                .map(|i| train.points[i].clone())
                .collect();
            let schedule = PassSchedule::shuffled(train, cfg.passes, base.child(4));
            (
                test.points.clone(),
                probes,
                None,
                Box::new(schedule.cloned()),
            )
        }
    };

    let head: Vec<LabeledPoint> = stream.by_ref().take(cfg.clip_points).collect();
    let clip = ClipBox::around(&head, cfg.clip_expand)?;
    let mut stream = head.into_iter().chain(stream);

    let mut log = RunLog {
        params: params.clone(),
        checkpoints: Vec::with_capacity(cfg.checkpoints.len()),
        tree_stats: Vec::new(),
        splits: Vec::new(),
        activations: Vec::new(),
    };
    for &cp in &cfg.checkpoints {
        let chunk: Vec<LabeledPoint> = stream
            .by_ref()
            .take((cp - forest.time()) as usize)
            .collect();
        let events = forest.train_batch(&chunk)?;
        let mut splits = Vec::new();
        let mut activations = Vec::new();
        for (i, ev) in events.iter().enumerate() {
            splits.extend(ev.splits.iter().map(|s| SplitRow::new(i, s)));
            activations.extend(ev.activations.iter().map(|a| ActivationRow::new(i, a)));
        }
        splits.sort_by_key(|s| (s.t, s.tree));
        activations.sort_by_key(|a| (a.t, a.tree));
        log.splits.extend(splits);
        log.activations.extend(activations);

        for tree in forest.trees() {
            tree.check_consistency()?;
        }
        let (checkpoint, stats) = measure(&forest, &test, &probes, &clip, bayes)?;
        log.checkpoints.push(checkpoint);
        log.tree_stats.extend(stats);
    }

    let report = if log.checkpoints.len() >= 2 {
        let report = consistency_report(&log)?;
        if !report.hard_invariants_hold() {
            return Err(OrfError::Invariant(format!(
                "run {run}: {}",
                report.violations.join("; ")
            )));
        }
        Some(report)
    } else {
        None
    };
    Ok(RunResult {
        run,
        log,
        forest,
        report,
    })
}

fn test_point_count(cfg: &ExperimentConfig) -> usize {
    match cfg.data {
        DataSource::Mog { test_points, .. } => test_points,
        DataSource::Libsvm { .. } => 0,
    }
}

fn measure(
    forest: &OnlineForest,
    test: &[LabeledPoint],
    probes: &[LabeledPoint],
    clip: &ClipBox,
    bayes: Option<f64>,
) -> Result<(Checkpoint, Vec<TreeStat>)> {
    let t = forest.time();
    let eval = evaluate(forest, test)?;
    let mut diameters = Vec::with_capacity(forest.trees().len() * probes.len());
    let mut counts = Vec::with_capacity(diameters.capacity());
    let mut stats = Vec::with_capacity(forest.trees().len());
    for (i, tree) in forest.trees().iter().enumerate() {
        for p in probes {
            diameters.push(leaf_diameter_unchecked(tree, &p.x, clip));
            let leaf = tree
                .leaf(tree.route_unchecked(&p.x))
                .expect("route ends at a leaf");
            counts.push(leaf.est_hist.total());
        }
        let fringe = tree.fringe();
        stats.push(TreeStat {
            t,
            tree: i,
            split_count: tree.split_count(),
            est_total: tree.estimation_total(),
            leaves: tree.leaf_count() as u64,
            active_leaves: fringe.active_count() as u64,
            inactive_leaves: fringe.inactive_count() as u64,
        });
    }
    let min_est_count = counts.iter().copied().min().unwrap_or(0);
    let mut counts_f: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let checkpoint = Checkpoint {
        t,
        forest_accuracy: eval.forest_accuracy,
        mean_tree_accuracy: eval.mean_tree_accuracy(),
        std_tree_accuracy: eval.std_tree_accuracy(),
        bayes_accuracy: bayes,
        split_count: stats.iter().map(|s| s.split_count).sum(),
        active_leaves: stats.iter().map(|s| s.active_leaves).sum(),
        inactive_leaves: stats.iter().map(|s| s.inactive_leaves).sum(),
        median_diameter: median(&mut diameters),
        min_est_count,
        median_est_count: median(&mut counts_f),
    };
    Ok((checkpoint, stats))
}
