//! Mini-batch training with early stopping, and evaluation.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::models::Model;
use crate::nn::Mode;
use crate::optim::{Optimizer, OptimizerConfig};
use crate::rng::SeededRng;
use crate::tensor::Scalar;

const EVAL_BATCH: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub optimizer: OptimizerConfig,
    pub batch_size: usize,
    pub min_epochs: usize,
    pub patience: usize,
    pub max_epochs: usize,
    pub restore_best: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerConfig::default(),
            batch_size: 32,
            min_epochs: 5,
            patience: 5,
            max_epochs: 100,
            restore_best: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_epochs < 1 || self.patience < 1 || self.batch_size < 1 {
            return Err(Error::invalid("min_epochs, patience and batch_size must be >= 1"));
        }
        if self.max_epochs < self.min_epochs {
            return Err(Error::invalid("max_epochs below min_epochs"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRecord {
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub epochs_ran: usize,
    /// 1-based.
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub wall_seconds: f64,
}

impl TrainReport {
    /// Equality ignoring wall time.
    pub fn same_trajectory(&self, other: &Self) -> bool {
        self.epochs == other.epochs
            && self.epochs_ran == other.epochs_ran
            && self.best_epoch == other.best_epoch
            && self.stopped_early == other.stopped_early
    }

    pub fn best_val_accuracy(&self) -> f64 {
        self.epochs[self.best_epoch - 1].val_accuracy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Stop,
}

/// 1-based epoch of the first maximum; later ties do not move it.
pub fn best_epoch(history: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in history.iter().enumerate() {
        if v > history[best] {
            best = i;
        }
    }
    best + 1
}

/// Decide after epoch `e = history.len()`: stop iff `e >= min_epochs` and
/// `e - best_epoch >= patience`, or the epoch cap is reached.
pub fn early_stop_decision(history: &[f64], cfg: &TrainConfig) -> StopDecision {
    let e = history.len();
    if e == 0 {
        return StopDecision::Continue;
    }
    if e >= cfg.max_epochs || (e >= cfg.min_epochs && e - best_epoch(history) >= cfg.patience) {
        StopDecision::Stop
    } else {
        StopDecision::Continue
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub loss: f64,
}

/// Accuracy and mean loss in eval mode.
pub fn evaluate<T: Scalar>(model: &Model<T>, data: &Dataset<T>) -> Result<Evaluation> {
    if data.is_empty() {
        return Err(Error::data("cannot evaluate on an empty dataset"));
    }
    let idx: Vec<usize> = (0..data.len()).collect();
    let (mut correct, mut loss_sum) = (0usize, 0.0f64);
    for chunk in idx.chunks(EVAL_BATCH) {
        let (x, y) = data.batch(chunk)?;
        let logits = model.predict(&x)?;
        logits.ensure_finite("evaluation logits")?;
        let (loss, _) = model.loss.loss(&logits, &y)?;
        loss_sum += loss.as_f64() * chunk.len() as f64;
        correct += model.loss.predict(&logits).iter().zip(&y).filter(|(p, t)| p == t).count();
    }
    Ok(Evaluation {
        accuracy: correct as f64 / data.len() as f64,
        loss: loss_sum / data.len() as f64,
    })
}

/// Train with shuffled mini-batches (order and dropout drawn from
/// `cfg.seed`), monitoring validation accuracy for early stopping. Without
/// a validation set, training accuracy is monitored instead.
pub fn train_model<T: Scalar>(
    model: &mut Model<T>,
    train: &Dataset<T>,
    val: Option<&Dataset<T>>,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::data("empty training set"));
    }
    let start = Instant::now();
    let mut rng = SeededRng::new(cfg.seed);
    let mut opt = Optimizer::new(cfg.optimizer);
    let batch = cfg.batch_size.min(train.len());
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epochs = Vec::new();
    let mut history = Vec::new();
    let mut best = (f64::NEG_INFINITY, model.snapshot());

    let stopped_early = loop {
        rng.shuffle(&mut order);
        let (mut loss_sum, mut correct) = (0.0f64, 0usize);
        for chunk in order.chunks(batch) {
            let (x, y) = train.batch(chunk)?;
            let logits = model.forward(&x, Mode::Train, &mut rng)?;
            let (loss, dlogits) = model.loss.loss(&logits, &y)?;
            if !loss.is_finite() || !logits.is_finite() {
                return Err(Error::NonFinite(format!("training loss at epoch {}", epochs.len() + 1)));
            }
            loss_sum += loss.as_f64() * chunk.len() as f64;
            correct += model.loss.predict(&logits).iter().zip(&y).filter(|(p, t)| p == t).count();
            model.backward(&dlogits)?;
            opt.step(model)?;
        }
        model.clear_caches();
        let train_accuracy = correct as f64 / train.len() as f64;
        let val_accuracy = match val {
            Some(v) => evaluate(model, v)?.accuracy,
            None => train_accuracy,
        };
        epochs.push(EpochRecord {
            train_loss: loss_sum / train.len() as f64,
            train_accuracy,
            val_accuracy,
        });
        history.push(val_accuracy);
        if val_accuracy > best.0 {
            best = (val_accuracy, model.snapshot());
        }
        if early_stop_decision(&history, cfg) == StopDecision::Stop {
            break history.len() < cfg.max_epochs;
        }
    };
    if cfg.restore_best {
        model.restore(&best.1)?;
    }
    Ok(TrainReport {
        epochs_ran: epochs.len(),
        best_epoch: best_epoch(&history),
        epochs,
        stopped_early,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> TrainConfig {
        TrainConfig::default()
    }

    fn run(history: &[f64], cfg: &TrainConfig) -> usize {
        for e in 1..=history.len() {
            if early_stop_decision(&history[..e], cfg) == StopDecision::Stop {
                return e;
            }
        }
        usize::MAX
    }

    #[test]
    fn plateau_after_improvement() {
        let h = [0.6, 0.7, 0.7, 0.7, 0.7, 0.7, 0.7];
        assert_eq!(best_epoch(&h), 2);
        assert_eq!(run(&h, &cfg()), 7);
    }

    #[test]
    fn flat_history_stops_at_six() {
        let h = [0.5; 10];
        assert_eq!(early_stop_decision(&h[..5], &cfg()), StopDecision::Continue);
        assert_eq!(run(&h, &cfg()), 6);
    }

    #[test]
    fn increasing_history_runs_to_cap() {
        let h: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        assert_eq!(run(&h[..99], &cfg()), usize::MAX);
        assert_eq!(run(&h, &cfg()), 100);
    }

    #[test]
    fn never_before_min_epochs() {
        let c = TrainConfig { min_epochs: 8, patience: 1, ..cfg() };
        assert_eq!(run(&[0.9, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1], &c), 8);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig { patience: 0, ..cfg() }.validate().is_err());
        assert!(TrainConfig { batch_size: 0, ..cfg() }.validate().is_err());
        assert!(TrainConfig { max_epochs: 2, ..cfg() }.validate().is_err());
    }
}
