use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use translab::cam::{cam_for_image, render_heatmap_overlay, DEFAULT_ALPHA};
use translab::experiment::{
    expand_grid, plot_csv, pretrain, run_sweep, train_cell, EvalMode, ExperimentPreset, GridSpec, LabeledImages,
    PretrainConfig,
};
use translab::imageio::{bilinear_resize, read_pnm, to_input_tensor};
use translab::models::{ArchId, ArchSpec, Model, WidthMult};
use translab::split::{stratified_split, SplitSpec};
use translab::synth::{gen_dataset, DatasetKind};
use translab::train::TrainConfig;
use translab::transfer::{
    backbone_fingerprint, extract_features, fingerprint, read_weight_file, save_weights, FeatureCache, LoadMode,
    WeightFile,
};
use translab::data::Dataset;

/// A bad flag combination caught after parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Parser)]
#[command(name = "translab", version, about = "Transfer-learning experiments on synthetic UML diagrams")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset (PGM images + manifest.csv).
    Gen(GenArgs),
    /// Pre-train a backbone on a source corpus and save it without its head.
    Pretrain(PretrainArgs),
    /// Train one model on a dataset and save its weights.
    Train(TrainArgs),
    /// Run a samples-per-class sweep and write the results CSV.
    Sweep(SweepArgs),
    /// Render a class activation map next to the input image.
    Cam(CamArgs),
    /// Plot a sweep CSV as an SVG learning curve.
    Plot(PlotArgs),
    /// Print a weight file's tensor table or an architecture's layers and parameter counts.
    Inspect(InspectArgs),
}

fn parse_canvas(s: &str) -> std::result::Result<(usize, usize), String> {
    let (w, h) = s.split_once('x').ok_or("expected WxH, e.g. 64x64")?;
    let w: usize = w.parse().map_err(|_| format!("bad width {w:?}"))?;
    let h: usize = h.parse().map_err(|_| format!("bad height {h:?}"))?;
    if w == 0 || h == 0 {
        return Err("canvas extents must be positive".into());
    }
    Ok((w, h))
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// uml or source
    #[arg(long, default_value = "uml")]
    kind: DatasetKind,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "64x64", value_parser = parse_canvas)]
    canvas: (usize, usize),
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PretrainArgs {
    /// Source corpus directory (from `gen --kind source`).
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// TOML file with pre-training settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    arch: ArchId,
    #[arg(long)]
    samples_per_class: usize,
    /// Backbone weights (required for frozen archs).
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// TOML file with training settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Width multiplier (defaults to the arch's; taken from --weights when given).
    #[arg(long)]
    width_mult: Option<WidthMult>,
    #[arg(long, default_value_t = 500)]
    test_per_class: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Built-in preset: mini, paper-a or paper-b.
    #[arg(long, default_value = "mini")]
    preset: String,
    /// TOML preset file (replaces --preset); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: PathBuf,
    /// Pre-trained backbone for frozen archs.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Grid as start:end:step or a preset name.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated arch ids.
    #[arg(long, value_delimiter = ',')]
    archs: Option<Vec<ArchId>>,
    /// holdout or kfold[:k]
    #[arg(long)]
    eval: Option<EvalMode>,
    #[arg(long)]
    test_per_class: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
    /// Record wall-clock seconds per row.
    #[arg(long)]
    timing: bool,
    /// Keep backbone features on disk between runs.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CamArgs {
    /// Full model weights (from `train`).
    #[arg(long)]
    weights: PathBuf,
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Class to explain (default: the predicted class).
    #[arg(long)]
    class: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long, conflicts_with = "arch")]
    weights: Option<PathBuf>,
    #[arg(long)]
    arch: Option<ArchId>,
    #[arg(long, default_value_t = 1)]
    outputs: usize,
    #[arg(long)]
    width_mult: Option<WidthMult>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Pretrain(a) => cmd_pretrain(a),
        Command::Train(a) => train(a),
        Command::Sweep(a) => sweep(a),
        Command::Cam(a) => cam(a),
        Command::Plot(a) => {
            plot_csv(&a.csv, &a.out).with_context(|| format!("plotting {}", a.csv.display()))?;
            println!("wrote {}", a.out.display());
            Ok(())
        }
        Command::Inspect(a) => inspect(a),
    }
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn gen(a: GenArgs) -> Result<()> {
    let m = gen_dataset(a.kind, a.count, a.seed, &a.out, a.canvas)?;
    println!("wrote {} images to {}", m.rows.len(), a.out.display());
    Ok(())
}

fn cmd_pretrain(a: PretrainArgs) -> Result<()> {
    let mut cfg: PretrainConfig = match &a.config {
        Some(p) => read_toml(p)?,
        None => PretrainConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(m) = a.max_epochs {
        cfg.train.max_epochs = m;
        cfg.train.min_epochs = cfg.train.min_epochs.min(m);
    }
    let pool = LabeledImages::load(&a.data).with_context(|| format!("loading source corpus {}", a.data.display()))?;
    let out = pretrain(&cfg, &pool)?;
    let file = out.save(&a.out)?;
    println!(
        "source val accuracy {:.4} after {} epochs (best epoch {})",
        out.val_accuracy, out.report.epochs_ran, out.report.best_epoch
    );
    println!("backbone {:016x} -> {}", fingerprint(&file.payload), a.out.display());
    Ok(())
}

fn load_backbone(path: Option<&PathBuf>) -> Result<Option<WeightFile>> {
    path.map(|p| read_weight_file(p).with_context(|| format!("reading {}", p.display())))
        .transpose()
}

fn train(a: TrainArgs) -> Result<()> {
    let mut cfg: TrainConfig = match &a.config {
        Some(p) => read_toml(p)?,
        // Desk-scale archs default to the settings the mini sweep uses.
        None if matches!(a.arch, ArchId::Mini | ArchId::MiniFrozen) => ExperimentPreset::named("mini")?.train_config(a.arch),
        None => TrainConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let pool = LabeledImages::load(&a.data).with_context(|| format!("loading {}", a.data.display()))?;
    let classes = pool.num_classes();
    let probe = pool.images.first().ok_or_else(|| usage("dataset is empty"))?;
    let backbone = load_backbone(a.weights.as_ref())?;
    let mut spec = ArchSpec::new(a.arch, if classes == 2 { 1 } else { classes });
    spec.input = [spec.input[0], probe.height, probe.width];
    if let Some(w) = a.width_mult {
        spec.width_mult = w;
    }
    if let Some(file) = &backbone {
        spec.input = file.header.arch.input;
        spec.width_mult = file.header.arch.width_mult;
    }
    let mut model = Model::<f32>::build(&spec, cfg.seed)?;
    let frozen = a.arch.is_frozen();
    if frozen {
        let file = backbone.ok_or_else(|| usage(format!("{} needs --weights", a.arch)))?;
        let rep = file.apply(&mut model, LoadMode::ByName)?;
        println!("loaded {} tensors; left at init: {:?}", rep.loaded.len(), rep.unmatched);
    }
    let split_spec = SplitSpec {
        train_per_class: a.samples_per_class,
        val_fraction: 0.2,
        val_min_per_class: 2,
        test_per_class: 0,
    };
    let avail = pool.class_counts().into_iter().min().unwrap_or(0);
    let spare = avail.saturating_sub(a.samples_per_class + split_spec.val_per_class());
    let split_spec = SplitSpec {
        test_per_class: a.test_per_class.min(spare),
        ..split_spec
    };
    if split_spec.test_per_class == 0 {
        bail!(translab::Error::Data(format!("{avail} images per class leave no test set")));
    }
    let split = stratified_split(&pool.labels, classes, &split_spec, cfg.seed)?;
    let (train, val, test) = if frozen {
        let dim = model.feature_dim().expect("frozen archs pool globally");
        let mut cache = FeatureCache::in_memory(backbone_fingerprint(&model), dim);
        let feats = extract_features(&model, &pool.images, &mut cache)?;
        let all = Dataset::new(feats, pool.labels.clone(), classes)?;
        (all.subset(&split.train)?, all.subset(&split.val)?, all.subset(&split.test)?)
    } else {
        (
            pool.dataset(&split.train, spec.input)?,
            pool.dataset(&split.val, spec.input)?,
            pool.dataset(&split.test, spec.input)?,
        )
    };
    let out = train_cell(&mut model, &train, Some(&val), &test, &cfg, frozen)?;
    save_weights(&model, &a.out)?;
    println!(
        "{}: {} epochs (best {}), test accuracy {:.4}, test loss {:.4} on {} images",
        a.arch,
        out.report.epochs_ran,
        out.report.best_epoch,
        out.test.accuracy,
        out.test.loss,
        split.test.len()
    );
    println!("weights -> {}", a.out.display());
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let mut preset = match &a.config {
        Some(p) => read_toml::<ExperimentPreset>(p)?,
        None => ExperimentPreset::named(&a.preset).map_err(|e| usage(e.to_string()))?,
    };
    if let Some(g) = &a.grid {
        expand_grid(g).map_err(|e| usage(e.to_string()))?;
        preset.grid = GridSpec::Expr(g.clone());
    }
    if let Some(t) = a.trials {
        preset.trials = t;
    }
    if let Some(s) = a.seed {
        preset.seed = s;
    }
    if let Some(archs) = a.archs {
        preset
            .train_overrides
            .retain(|k, _| k.parse::<ArchId>().is_ok_and(|id| archs.contains(&id)));
        preset.archs = archs;
    }
    if let Some(e) = a.eval {
        preset.eval = e;
    }
    if let Some(t) = a.test_per_class {
        preset.test_per_class = t;
    }
    if let Some(m) = a.max_epochs {
        for cfg in std::iter::once(&mut preset.train).chain(preset.train_overrides.values_mut()) {
            cfg.max_epochs = m;
            cfg.min_epochs = cfg.min_epochs.min(m);
        }
    }
    preset.timing |= a.timing;
    preset.validate().map_err(|e| usage(e.to_string()))?;
    let backbone = load_backbone(a.weights.as_ref())?;
    let pool = LabeledImages::load(&a.data).with_context(|| format!("loading {}", a.data.display()))?;
    let result = run_sweep(&preset, &pool, backbone.as_ref(), a.cache_dir.as_deref())?;
    result.write_csv(&a.out)?;
    if !result.checks.all_passed() {
        bail!(translab::Error::Data(format!("reset checks failed: {:?}", result.checks)));
    }
    for arch in &preset.archs {
        let line: Vec<String> = preset
            .grid_values()?
            .iter()
            .filter_map(|&n| result.mean_accuracy(*arch, n).map(|m| format!("{n}:{m:.3}")))
            .collect();
        println!("{arch:<14} {}", line.join("  "));
    }
    println!("{} rows -> {}", result.rows.len(), a.out.display());
    Ok(())
}

fn cam(a: CamArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&a.alpha) {
        return Err(usage(format!("--alpha {} outside [0, 1]", a.alpha)));
    }
    let file = read_weight_file(&a.weights).with_context(|| format!("reading {}", a.weights.display()))?;
    if file.header.backbone_only {
        return Err(usage("cam needs full model weights (from `train`), not a backbone-only file"));
    }
    let model = file.to_model(0)?;
    let image = read_pnm(&a.image).with_context(|| format!("reading {}", a.image.display()))?;
    let [c, h, w] = model.spec.input;
    let x = to_input_tensor::<f32>(&bilinear_resize(&image, w, h)?, c)?;
    let logits = model.predict(&x)?;
    let predicted = model.loss.predict(&logits)[0];
    let class = a.class.unwrap_or(predicted);
    let (_, heat) = cam_for_image(&model, &image, class)?;
    let out = render_heatmap_overlay(&heat, &image, a.alpha, &a.out)?;
    println!(
        "predicted class {predicted}, explaining class {class}; {}x{} overlay -> {}",
        out.width,
        out.height,
        a.out.display()
    );
    Ok(())
}

fn inspect(a: InspectArgs) -> Result<()> {
    if let Some(path) = &a.weights {
        let file = read_weight_file(path).with_context(|| format!("reading {}", path.display()))?;
        let h = &file.header;
        println!(
            "arch {}  input {:?}  width {}  outputs {}  backbone_only {}",
            h.arch.arch, h.arch.input, h.arch.width_mult, h.arch.outputs, h.backbone_only
        );
        for (k, v) in &h.metadata {
            println!("meta {k} = {v}");
        }
        println!("{:<24} {:<20} {:>12}", "tensor", "shape", "offset");
        let mut total = 0;
        for t in &h.tensors {
            println!("{:<24} {:<20} {:>12}", t.name, format!("{:?}", t.shape), t.offset);
            total += t.shape.iter().product::<usize>();
        }
        println!("{} tensors, {total} parameters, fingerprint {:016x}", h.tensors.len(), fingerprint(&file.payload));
        return Ok(());
    }
    let arch = a.arch.ok_or_else(|| usage("inspect needs --weights or --arch"))?;
    let mut spec = ArchSpec::new(arch, a.outputs);
    if let Some(w) = a.width_mult {
        spec = spec.with_width(w);
    }
    let model = Model::<f32>::build(&spec, 0)?;
    print!("{}", model.summary());
    println!("backbone parameters {}", model.backbone_param_count());
    Ok(())
}
