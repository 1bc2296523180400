//! Experiment harness: labelled image pools, sample-size sweeps with weight
//! resets, source-task pre-training, and learning-curve plots.

mod grid;
mod plot;
mod preset;
mod pretrain;
mod sweep;

use std::path::Path;

pub use grid::{expand_grid, validate_grid, PRESET_GRIDS};
pub use plot::{plot_csv, render_svg, summarize, CurvePoint};
pub use preset::{adam_config, EvalMode, ExperimentPreset, GridSpec};
pub use pretrain::{pretrain, PretrainConfig, PretrainOutcome};
pub use sweep::{cell_seed, run_sweep, train_cell, CellOutcome, ResetChecks, SweepResult, SweepRow, CSV_COLUMNS};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::imageio::{ingest_directory, load_images, Image};
use crate::manifest::{DatasetManifest, MANIFEST_FILE};
use crate::synth::{render_dataset, DatasetKind};
use crate::transfer::images_to_tensor;

/// Decoded images with label indices into `manifest.classes`.
#[derive(Debug, Clone)]
pub struct LabeledImages {
    pub manifest: DatasetManifest,
    pub images: Vec<Image>,
    pub labels: Vec<usize>,
}

impl LabeledImages {
    pub fn new(manifest: DatasetManifest, images: Vec<Image>) -> Result<Self> {
        if images.len() != manifest.rows.len() {
            return Err(Error::data(format!(
                "{} images for {} manifest rows",
                images.len(),
                manifest.rows.len()
            )));
        }
        let labels = manifest.label_indices()?;
        Ok(LabeledImages {
            manifest,
            images,
            labels,
        })
    }

    /// Generate a synthetic pool in memory.
    pub fn synthetic(kind: DatasetKind, count: usize, seed: u64, canvas: (usize, usize)) -> Result<Self> {
        let (manifest, images) = render_dataset(kind, count, seed, canvas)?;
        Self::new(manifest, images)
    }

    /// Load `dir` through its `manifest.csv`, or ingest `dir/<label>/*` when
    /// there is none.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        if !dir.is_dir() {
            return Err(Error::data(format!("{} is not a directory", dir.display())));
        }
        let manifest = if dir.join(MANIFEST_FILE).exists() {
            DatasetManifest::read(dir)?
        } else {
            ingest_directory(dir)?.manifest
        };
        let images = load_images(dir, &manifest)?;
        Self::new(manifest, images)
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.manifest.classes.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.num_classes()];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }

    /// Model-ready dataset of the chosen rows (`input` = [c, h, w]).
    pub fn dataset(&self, indices: &[usize], input: [usize; 3]) -> Result<Dataset<f32>> {
        let imgs: Vec<Image> = indices.iter().map(|&i| self.images[i].clone()).collect();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        if imgs.is_empty() {
            return Err(Error::data("no samples selected"));
        }
        Dataset::new(images_to_tensor(&imgs, input)?, labels, self.num_classes())
    }
}
