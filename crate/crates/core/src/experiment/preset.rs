//! Experiment presets, loadable from TOML.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::grid::{expand_grid, validate_grid};
use crate::error::{Error, Result};
use crate::models::{ArchId, ArchSpec, WidthMult};
use crate::optim::OptimizerConfig;
use crate::train::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Fixed stratified test set per trial.
    Holdout,
    /// k folds over each cell's training sample; each fold is held out once.
    KFold(usize),
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalMode::Holdout => f.write_str("holdout"),
            EvalMode::KFold(k) => write!(f, "kfold:{k}"),
        }
    }
}

impl FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "holdout" => Ok(EvalMode::Holdout),
            "kfold" => Ok(EvalMode::KFold(5)),
            _ => s
                .strip_prefix("kfold:")
                .and_then(|k| k.parse().ok())
                .filter(|&k: &usize| k >= 2)
                .map(EvalMode::KFold)
                .ok_or_else(|| Error::invalid(format!("eval mode {s:?} (holdout | kfold | kfold:<k>)"))),
        }
    }
}

impl Serialize for EvalMode {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EvalMode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Either an explicit list or a `start:end:step` / preset-name string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<usize>),
    Expr(String),
}

impl GridSpec {
    pub fn expand(&self) -> Result<Vec<usize>> {
        let g = match self {
            GridSpec::List(v) => v.clone(),
            GridSpec::Expr(s) => expand_grid(s)?,
        };
        validate_grid(&g)?;
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPreset {
    pub name: String,
    pub grid: GridSpec,
    pub trials: usize,
    pub archs: Vec<ArchId>,
    pub eval: EvalMode,
    /// (width, height) of the images fed to every arch.
    pub canvas: (usize, usize),
    pub channels: usize,
    pub width_mult: WidthMult,
    pub seed: u64,
    /// Test images per class; capped at whatever the largest cell leaves over.
    pub test_per_class: usize,
    pub val_fraction: f64,
    pub val_min_per_class: usize,
    pub train: TrainConfig,
    /// Per-arch replacements for `train`, keyed by arch id.
    #[serde(default)]
    pub train_overrides: BTreeMap<String, TrainConfig>,
    /// Record wall-clock seconds per cell (makes the CSV non-reproducible).
    #[serde(default)]
    pub timing: bool,
}

impl ExperimentPreset {
    pub fn named(name: &str) -> Result<Self> {
        let grid = GridSpec::Expr(name.into());
        let full = |grid| ExperimentPreset {
            name: name.into(),
            grid,
            trials: 5,
            archs: vec![ArchId::SmallCnn, ArchId::Vgg16, ArchId::Vgg16Frozen],
            eval: EvalMode::Holdout,
            canvas: (250, 250),
            channels: 3,
            width_mult: WidthMult::ONE,
            seed: 2019,
            test_per_class: 500,
            val_fraction: 0.2,
            val_min_per_class: 2,
            train: TrainConfig::default(),
            train_overrides: BTreeMap::new(),
            timing: false,
        };
        match name {
            "paper-a" | "paper-b" => Ok(full(grid)),
            "mini" => Ok(ExperimentPreset {
                archs: vec![ArchId::MiniFrozen, ArchId::SmallCnn, ArchId::Mini],
                canvas: (64, 64),
                channels: 1,
                width_mult: WidthMult::EIGHTH,
                // Few samples per class leave a handful of steps per epoch at
                // batch 32; the linear head on frozen features needs a larger step.
                train: TrainConfig {
                    batch_size: 8,
                    ..TrainConfig::default()
                },
                train_overrides: BTreeMap::from([(
                    ArchId::MiniFrozen.as_str().to_string(),
                    TrainConfig {
                        batch_size: 8,
                        optimizer: OptimizerConfig::adam(3e-2),
                        ..TrainConfig::default()
                    },
                )]),
                ..full(grid)
            }),
            _ => Err(Error::invalid(format!("unknown preset {name:?} (paper-a | paper-b | mini)"))),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let p: ExperimentPreset = toml::from_str(text).map_err(|e| Error::format("preset", e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.expand()?;
        if self.trials < 1 {
            return Err(Error::invalid("trials must be >= 1"));
        }
        if self.archs.is_empty() {
            return Err(Error::invalid("no archs"));
        }
        if self.channels != 1 && self.channels != 3 {
            return Err(Error::invalid("channels must be 1 or 3"));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::invalid("val_fraction must be in [0, 1)"));
        }
        // Overrides for archs outside the sweep are allowed and simply unused.
        for key in self.train_overrides.keys() {
            key.parse::<ArchId>()?;
        }
        self.train.validate()?;
        self.train_overrides.values().try_for_each(TrainConfig::validate)
    }

    pub fn grid_values(&self) -> Result<Vec<usize>> {
        self.grid.expand()
    }

    pub fn folds(&self) -> usize {
        match self.eval {
            EvalMode::Holdout => 1,
            EvalMode::KFold(k) => k,
        }
    }

    /// Rows a sweep produces.
    pub fn row_count(&self) -> Result<usize> {
        Ok(self.grid_values()?.len() * self.trials * self.archs.len() * self.folds())
    }

    pub fn arch_spec(&self, arch: ArchId, outputs: usize) -> ArchSpec {
        ArchSpec::new(arch, outputs)
            .with_input([self.channels, self.canvas.1, self.canvas.0])
            .with_width(self.width_mult)
    }

    pub fn train_config(&self, arch: ArchId) -> TrainConfig {
        self.train_overrides
            .get(arch.as_str())
            .cloned()
            .unwrap_or_else(|| self.train.clone())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("preset serializes")
    }
}

/// Adam with the given learning rate, otherwise default training settings.
pub fn adam_config(lr: f64) -> TrainConfig {
    TrainConfig {
        optimizer: OptimizerConfig::adam(lr),
        ..TrainConfig::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_and_row_counts() {
        let b = ExperimentPreset::named("paper-b").unwrap();
        assert_eq!(b.grid_values().unwrap(), vec![5, 10, 15, 20, 25, 30, 35, 40, 45, 50]);
        assert_eq!(b.row_count().unwrap(), 150);
        let a = ExperimentPreset::named("paper-a").unwrap();
        assert_eq!(a.row_count().unwrap(), 8 * 5 * 3);
        let m = ExperimentPreset::named("mini").unwrap();
        assert_eq!(m.grid_values().unwrap(), vec![5, 10, 25, 50, 100]);
        let k = ExperimentPreset {
            eval: EvalMode::KFold(5),
            ..m
        };
        assert_eq!(k.row_count().unwrap(), 5 * 5 * 3 * 5);
    }

    #[test]
    fn toml_roundtrip() {
        let m = ExperimentPreset::named("mini").unwrap();
        let back = ExperimentPreset::from_toml(&m.to_toml()).unwrap();
        assert_eq!(back, m);
        let text = m.to_toml().replace("grid = \"mini\"", "grid = [3, 6]");
        assert_eq!(ExperimentPreset::from_toml(&text).unwrap().grid_values().unwrap(), vec![3, 6]);
        let bad = m.to_toml().replace("grid = \"mini\"", "grid = [6, 3]");
        assert!(ExperimentPreset::from_toml(&bad).is_err());
    }

    #[test]
    fn eval_modes() {
        assert_eq!("kfold".parse::<EvalMode>().unwrap(), EvalMode::KFold(5));
        assert_eq!("kfold:3".parse::<EvalMode>().unwrap(), EvalMode::KFold(3));
        assert!("kfold:1".parse::<EvalMode>().is_err());
    }
}
