//! Sample-size sweeps with per-cell weight resets.
//!
//! CSV layout: `#` provenance lines (preset, seeds, test-set size, training
//! settings), then the columns in [`CSV_COLUMNS`]. Rows are ordered by arch
//! (preset order), samples per class, trial and fold. `fold` is 0 in holdout
//! mode; `wall_seconds` is `NA` unless the preset enables timing.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use log::info;

use super::preset::{EvalMode, ExperimentPreset};
use super::LabeledImages;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::models::{ArchId, FreezePolicy, Model};
use crate::rng::child_seed;
use crate::split::{stratified_kfold, stratified_split, SplitSpec};
use crate::train::{evaluate, train_model, Evaluation, TrainConfig, TrainReport};
use crate::transfer::{
    backbone_fingerprint, extract_features, train_head_on_features, FeatureCache, LoadMode, WeightFile,
};

pub const CSV_COLUMNS: [&str; 10] = [
    "arch",
    "samples_per_class",
    "trial",
    "seed",
    "fold",
    "epochs_ran",
    "stopped_early",
    "test_accuracy",
    "test_loss",
    "wall_seconds",
];

const ARCH_SALT: u64 = 0xA5C4;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub arch: ArchId,
    pub samples_per_class: usize,
    pub trial: usize,
    pub seed: u64,
    pub fold: usize,
    pub epochs_ran: usize,
    pub stopped_early: bool,
    pub test_accuracy: f64,
    pub test_loss: f64,
    pub wall_seconds: Option<f64>,
}

/// Results of the reset/freeze verification done around every cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ResetChecks {
    pub cells: usize,
    /// Cells whose restored weights were bitwise equal to the initial snapshot.
    pub restores_exact: usize,
    pub frozen_cells: usize,
    /// Frozen-arch cells whose backbone was bitwise unchanged by training.
    pub frozen_backbone_exact: usize,
}

impl ResetChecks {
    pub fn all_passed(&self) -> bool {
        self.restores_exact == self.cells && self.frozen_backbone_exact == self.frozen_cells
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub provenance: Vec<String>,
    pub rows: Vec<SweepRow>,
    pub checks: ResetChecks,
    pub test_per_class: usize,
}

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub report: TrainReport,
    pub test: Evaluation,
}

pub fn cell_seed(seed: u64, arch_index: usize, trial: usize, n: usize, fold: usize) -> u64 {
    let t = child_seed(seed, trial as u64);
    child_seed(child_seed(child_seed(t, arch_index as u64 + 1), n as u64), fold as u64)
}

fn arch_init_seed(seed: u64, arch_index: usize) -> u64 {
    child_seed(seed, ARCH_SALT + arch_index as u64)
}

/// Train on `train`, early-stop on `val`, evaluate on `test`. With `on_features`
/// the datasets hold pooled features and only the head is trained.
pub fn train_cell(
    model: &mut Model<f32>,
    train: &Dataset<f32>,
    val: Option<&Dataset<f32>>,
    test: &Dataset<f32>,
    cfg: &TrainConfig,
    on_features: bool,
) -> Result<CellOutcome> {
    if on_features {
        let report = train_head_on_features(model, train, val, cfg)?;
        let test = evaluate(&model.head()?, test)?;
        Ok(CellOutcome { report, test })
    } else {
        let report = train_model(model, train, val, cfg)?;
        let test = evaluate(model, test)?;
        Ok(CellOutcome { report, test })
    }
}

/// Build `arch`, import the backbone for frozen variants, and freeze.
fn prepare(preset: &ExperimentPreset, arch: ArchId, index: usize, outputs: usize, backbone: Option<&WeightFile>) -> Result<Model<f32>> {
    let spec = preset.arch_spec(arch, outputs);
    let mut model = Model::build(&spec, arch_init_seed(preset.seed, index))?;
    if arch.is_frozen() {
        let file = backbone.ok_or_else(|| Error::invalid(format!("{arch} needs pre-trained backbone weights")))?;
        let report = file.apply(&mut model, LoadMode::ByName)?;
        let gap = model.gap_index().expect("frozen archs have GAP");
        let head: Vec<String> = model.layers[gap + 1..]
            .iter()
            .flat_map(|l| l.params().into_iter().map(move |p| format!("{}.{}", l.name, p.name)))
            .collect();
        if report.unmatched != head {
            return Err(Error::data(format!(
                "backbone file does not cover {arch}: unmatched {:?}",
                report.unmatched
            )));
        }
        model.freeze(&FreezePolicy::AllButLastDense)?;
    }
    Ok(model)
}

struct CellData {
    train: Vec<usize>,
    val: Vec<usize>,
    test: Vec<usize>,
    fold: usize,
}

fn cells_for(
    preset: &ExperimentPreset,
    pool: &LabeledImages,
    n: usize,
    trial: usize,
    test_per_class: usize,
) -> Result<Vec<CellData>> {
    let tseed = child_seed(preset.seed, trial as u64);
    let k = pool.num_classes();
    match preset.eval {
        EvalMode::Holdout => {
            let spec = SplitSpec {
                train_per_class: n,
                val_fraction: preset.val_fraction,
                val_min_per_class: preset.val_min_per_class,
                test_per_class,
            };
            let s = stratified_split(&pool.labels, k, &spec, tseed)?;
            Ok(vec![CellData {
                train: s.train,
                val: s.val,
                test: s.test,
                fold: 0,
            }])
        }
        EvalMode::KFold(folds) => {
            let spec = SplitSpec {
                train_per_class: n,
                val_fraction: 0.0,
                val_min_per_class: 0,
                test_per_class: 0,
            };
            let sample = stratified_split(&pool.labels, k, &spec, tseed)?.train;
            let parts = stratified_kfold(&pool.labels, &sample, k, folds, child_seed(tseed, n as u64))?;
            Ok((0..folds)
                .map(|f| {
                    let mut train: Vec<usize> = parts
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != f)
                        .flat_map(|(_, p)| p.iter().copied())
                        .collect();
                    train.sort_unstable();
                    CellData {
                        train,
                        val: parts[f].clone(),
                        test: parts[f].clone(),
                        fold: f,
                    }
                })
                .collect())
        }
    }
}

/// Test images per class the pool can spare after the largest cell.
fn test_size(preset: &ExperimentPreset, pool: &LabeledImages, grid: &[usize]) -> Result<usize> {
    let avail = pool.class_counts().into_iter().min().unwrap_or(0);
    let max_n = *grid.last().expect("validated grid");
    match preset.eval {
        EvalMode::Holdout => {
            let val = SplitSpec {
                train_per_class: max_n,
                val_fraction: preset.val_fraction,
                val_min_per_class: preset.val_min_per_class,
                test_per_class: 0,
            }
            .val_per_class();
            if avail <= max_n + val {
                return Err(Error::data(format!(
                    "smallest class has {avail} images; {max_n} train + {val} val + at least 1 test needed"
                )));
            }
            Ok(preset.test_per_class.min(avail - max_n - val))
        }
        EvalMode::KFold(k) => {
            if avail < max_n {
                return Err(Error::data(format!("smallest class has {avail} images, grid needs {max_n}")));
            }
            if grid[0] < k {
                return Err(Error::data(format!("{} samples per class cannot fill {k} folds", grid[0])));
            }
            Ok(0)
        }
    }
}

/// Run every (arch, samples-per-class, trial[, fold]) cell of `preset` on
/// `pool`. Each arch is built once; every cell starts from that snapshot.
pub fn run_sweep(
    preset: &ExperimentPreset,
    pool: &LabeledImages,
    backbone: Option<&WeightFile>,
    cache_dir: Option<&Path>,
) -> Result<SweepResult> {
    preset.validate()?;
    let grid = preset.grid_values()?;
    let classes = pool.num_classes();
    if classes < 2 {
        return Err(Error::data("need at least two classes"));
    }
    let outputs = if classes == 2 { 1 } else { classes };
    let test_per_class = test_size(preset, pool, &grid)?;
    let mut rows = Vec::new();
    let mut checks = ResetChecks::default();

    for (ai, &arch) in preset.archs.iter().enumerate() {
        let mut model = prepare(preset, arch, ai, outputs, backbone)?;
        let snapshot = model.snapshot();
        let frozen = arch.is_frozen();
        let features = if frozen {
            let fp = backbone_fingerprint(&model);
            let dim = model
                .feature_dim()
                .ok_or_else(|| Error::invalid("frozen head has no dense layer"))?;
            let mut cache = match cache_dir {
                Some(dir) => FeatureCache::open(dir, fp, dim)?,
                None => FeatureCache::in_memory(fp, dim),
            };
            let f = extract_features(&model, &pool.images, &mut cache)?;
            cache.persist()?;
            Some(Dataset::new(f, pool.labels.clone(), classes)?)
        } else {
            None
        };
        let input = model.spec.input;
        let data = |idx: &[usize]| match &features {
            Some(f) => f.subset(idx),
            None => pool.dataset(idx, input),
        };

        for trial in 0..preset.trials {
            for &n in &grid {
                for cell in cells_for(preset, pool, n, trial, test_per_class)? {
                    let start = Instant::now();
                    let seed = cell_seed(preset.seed, ai, trial, n, cell.fold);
                    model.restore(&snapshot)?;
                    checks.cells += 1;
                    if model.snapshot().bitwise_eq(&snapshot) {
                        checks.restores_exact += 1;
                    }
                    let cfg = TrainConfig {
                        seed,
                        ..preset.train_config(arch)
                    };
                    let train = data(&cell.train)?;
                    let val = if cell.val.is_empty() { None } else { Some(data(&cell.val)?) };
                    let test = data(&cell.test)?;
                    let out = train_cell(&mut model, &train, val.as_ref(), &test, &cfg, frozen)?;
                    if frozen {
                        checks.frozen_cells += 1;
                        if backbone_unchanged(&model, &snapshot) {
                            checks.frozen_backbone_exact += 1;
                        }
                    }
                    info!(
                        "{arch} n={n} trial={trial} fold={}: acc {:.3} after {} epochs",
                        cell.fold, out.test.accuracy, out.report.epochs_ran
                    );
                    rows.push(SweepRow {
                        arch,
                        samples_per_class: n,
                        trial,
                        seed,
                        fold: cell.fold,
                        epochs_ran: out.report.epochs_ran,
                        stopped_early: out.report.stopped_early,
                        test_accuracy: out.test.accuracy,
                        test_loss: out.test.loss,
                        wall_seconds: preset.timing.then(|| start.elapsed().as_secs_f64()),
                    });
                }
            }
        }
        model.restore(&snapshot)?;
    }
    let arch_pos = |a: ArchId| preset.archs.iter().position(|&x| x == a).unwrap();
    rows.sort_by_key(|r| (arch_pos(r.arch), r.samples_per_class, r.trial, r.fold));

    let provenance = provenance(preset, pool, backbone, &grid, test_per_class, rows.len());
    Ok(SweepResult {
        provenance,
        rows,
        checks,
        test_per_class,
    })
}

/// Frozen layers (everything up to GAP) still bitwise equal to the snapshot.
fn backbone_unchanged(model: &Model<f32>, snapshot: &crate::models::Snapshot<f32>) -> bool {
    let gap = model.gap_index().unwrap_or(model.layers.len());
    let names: Vec<&str> = model.layers[..gap].iter().map(|l| l.name.as_str()).collect();
    let now = model.snapshot();
    now.entries
        .iter()
        .zip(&snapshot.entries)
        .filter(|((name, _), _)| names.contains(&name.as_str()))
        .all(|((na, a), (nb, b))| na == nb && a.iter().zip(b).all(|(x, y)| x.bitwise_eq(y)))
}

fn provenance(
    preset: &ExperimentPreset,
    pool: &LabeledImages,
    backbone: Option<&WeightFile>,
    grid: &[usize],
    test_per_class: usize,
    rows: usize,
) -> Vec<String> {
    let join = |v: Vec<String>| v.join(";");
    let mut lines = vec![
        format!(
            "preset={} seed={} trials={} grid={} archs={} eval={} rows={}",
            preset.name,
            preset.seed,
            preset.trials,
            join(grid.iter().map(|n| n.to_string()).collect()),
            join(preset.archs.iter().map(|a| a.to_string()).collect()),
            preset.eval,
            rows
        ),
        format!(
            "test_per_class={} val_fraction={} val_min_per_class={} canvas={}x{} channels={} width_mult={}",
            test_per_class,
            preset.val_fraction,
            preset.val_min_per_class,
            preset.canvas.0,
            preset.canvas.1,
            preset.channels,
            preset.width_mult
        ),
        format!(
            "data kind={} seed={} images={} classes={}",
            pool.manifest.kind,
            pool.manifest.seed,
            pool.len(),
            pool.manifest.classes.join(";")
        ),
        format!(
            "backbone={}",
            backbone.map_or("none".to_string(), |b| format!("{:016x}", crate::transfer::fingerprint(&b.payload)))
        ),
        format!("train={}", serde_json::to_string(&preset.train).expect("config serializes")),
    ];
    for (arch, cfg) in &preset.train_overrides {
        lines.push(format!(
            "train[{arch}]={}",
            serde_json::to_string(cfg).expect("config serializes")
        ));
    }
    lines
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for p in &self.provenance {
            let _ = writeln!(s, "# {p}");
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_COLUMNS).expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.arch.to_string(),
                r.samples_per_class.to_string(),
                r.trial.to_string(),
                r.seed.to_string(),
                r.fold.to_string(),
                r.epochs_ran.to_string(),
                r.stopped_early.to_string(),
                format!("{:.6}", r.test_accuracy),
                format!("{:.6}", r.test_loss),
                r.wall_seconds.map_or("NA".to_string(), |t| format!("{t:.3}")),
            ])
            .expect("in-memory write");
        }
        s.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf8"));
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Mean test accuracy of `arch` at `n` samples per class.
    pub fn mean_accuracy(&self, arch: ArchId, n: usize) -> Option<f64> {
        let v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.arch == arch && r.samples_per_class == n)
            .map(|r| r.test_accuracy)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}
