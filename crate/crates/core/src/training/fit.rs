//! Mini-batch training loop, evaluation and checkpoint files.

use super::metrics::{classification_report, MetricsReport};
use super::model::{cross_entropy, forward, grad_adjoint, softmax, ModelGrads, ModelParams};
use super::optim::{cosine_lr, AdamW};
use crate::circuit::{CircuitSpec, EncodedSample};
use crate::error::{DaqcError, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub early_stop_patience: usize,
    /// Seeds parameter initialization and the per-epoch shuffles.
    pub init_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.005,
            weight_decay: 1e-4,
            epochs: 250,
            batch_size: 64,
            early_stop_patience: 20,
            init_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(DaqcError::Config(m));
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad(format!("learning_rate {} must be finite and >= 0", self.learning_rate));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return bad(format!("weight_decay {} must be finite and >= 0", self.weight_decay));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.early_stop_patience == 0 {
            return bad("epochs, batch_size and early_stop_patience must be positive".into());
        }
        if self.early_stop_patience > self.epochs {
            return bad(format!(
                "patience {} exceeds epochs {}",
                self.early_stop_patience, self.epochs
            ));
        }
        Ok(())
    }
}

/// One row of the training trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_auc: f64,
    pub val_acc: f64,
    /// Mean over this epoch's optimizer steps of the L2 norm of the
    /// circuit-parameter gradient.
    pub grad_l2: f64,
    pub learning_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the highest validation AUC.
    pub params: ModelParams,
    pub best_epoch: usize,
    pub best_val_auc: f64,
    pub stopped_early: bool,
    pub trace: Vec<EpochRecord>,
}

fn check_split(name: &str, split: &[EncodedSample], spec: &CircuitSpec, n_classes: usize) -> Result<()> {
    if split.is_empty() {
        return Err(DaqcError::Data(format!("{name} split is empty")));
    }
    for s in split {
        if s.angles.len() != spec.n_features() {
            return Err(DaqcError::Shape(format!(
                "{name} sample has {} angles, circuit expects {}",
                s.angles.len(),
                spec.n_features()
            )));
        }
        if s.label >= n_classes {
            return Err(DaqcError::Label(format!(
                "{name} label {} outside {n_classes} classes",
                s.label
            )));
        }
    }
    Ok(())
}

/// Class probabilities and mean cross-entropy over a split.
pub fn predict(
    spec: &CircuitSpec,
    params: &ModelParams,
    split: &[EncodedSample],
) -> Result<(Vec<Vec<f64>>, f64)> {
    let rows = split
        .par_iter()
        .map(|s| {
            let (logits, _) = forward(spec, s, params)?;
            Ok((softmax(&logits), cross_entropy(&logits, s.label)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut loss = 0.0;
    let mut probs = Vec::with_capacity(rows.len());
    for (p, l) in rows {
        loss += l;
        probs.push(p);
    }
    Ok((probs, loss / split.len().max(1) as f64))
}

/// Metrics of `params` on a split.
pub fn evaluate(spec: &CircuitSpec, params: &ModelParams, split: &[EncodedSample]) -> Result<MetricsReport> {
    if split.is_empty() {
        return Err(DaqcError::Data("cannot evaluate an empty split".into()));
    }
    let (probs, _) = predict(spec, params, split)?;
    let labels: Vec<usize> = split.iter().map(|s| s.label).collect();
    classification_report(&probs, &labels, params.n_classes)
}

/// Mean loss and gradient over a batch. Per-sample work may run in parallel;
/// the reduction always runs in batch order.
pub fn batch_gradient(
    spec: &CircuitSpec,
    params: &ModelParams,
    batch: &[&EncodedSample],
) -> Result<(f64, ModelGrads)> {
    let per_sample = batch
        .par_iter()
        .map(|s| grad_adjoint(spec, s, params))
        .collect::<Result<Vec<_>>>()?;
    let scale = 1.0 / batch.len() as f64;
    let mut total = ModelGrads::zeros_like(params);
    let mut loss = 0.0;
    for (l, g) in &per_sample {
        loss += l;
        total.add_scaled(g, scale);
    }
    Ok((loss * scale, total))
}

/// Train from a seeded initialization.
pub fn train(
    spec: &CircuitSpec,
    train_split: &[EncodedSample],
    val_split: &[EncodedSample],
    n_classes: usize,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let init = ModelParams::init(spec, n_classes, config.init_seed)?;
    train_from(spec, train_split, val_split, init, config, |_| {})
}

/// Train from explicit starting parameters, calling `on_epoch` after every epoch.
pub fn train_from(
    spec: &CircuitSpec,
    train_split: &[EncodedSample],
    val_split: &[EncodedSample],
    init: ModelParams,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    config.validate()?;
    init.check(spec)?;
    let n_classes = init.n_classes;
    check_split("train", train_split, spec, n_classes)?;
    check_split("validation", val_split, spec, n_classes)?;

    let mut params = init;
    let mut opt = AdamW::new(params.n_trainable(), config.weight_decay);
    // stream 0 of this seed feeds initialization; shuffles use stream 1
    let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..train_split.len()).collect();

    let mut best: Option<(f64, usize, ModelParams)> = None;
    let mut trace = Vec::new();
    let mut stopped_early = false;
    for epoch in 0..config.epochs {
        let lr = cosine_lr(config.learning_rate, epoch, config.epochs);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut norm_sum = 0.0;
        let mut steps = 0usize;
        for idx in order.chunks(config.batch_size) {
            let batch: Vec<&EncodedSample> = idx.iter().map(|&i| &train_split[i]).collect();
            let (loss, g) = batch_gradient(spec, &params, &batch)?;
            loss_sum += loss * batch.len() as f64;
            norm_sum += g.theta_norm();
            steps += 1;
            let flat_grads = g
                .theta
                .iter()
                .chain(&g.readout_w)
                .chain(&g.readout_b)
                .copied();
            let flat_params = params
                .theta
                .iter_mut()
                .chain(params.readout_w.iter_mut())
                .chain(params.readout_b.iter_mut());
            opt.step(lr, flat_params, flat_grads);
        }
        if params.theta.iter().chain(&params.readout_w).any(|x| !x.is_finite()) {
            return Err(DaqcError::Numeric(format!("parameters diverged in epoch {}", epoch + 1)));
        }
        let (probs, val_loss) = predict(spec, &params, val_split)?;
        let labels: Vec<usize> = val_split.iter().map(|s| s.label).collect();
        let report = classification_report(&probs, &labels, n_classes)?;
        let val_auc = report.auc;
        let record = EpochRecord {
            epoch: epoch + 1,
            train_loss: loss_sum / train_split.len() as f64,
            val_loss,
            val_auc,
            val_acc: report.acc,
            grad_l2: norm_sum / steps as f64,
            learning_rate: lr,
        };
        on_epoch(&record);
        trace.push(record);
        if best.as_ref().is_none_or(|(auc, _, _)| val_auc > *auc) {
            best = Some((val_auc, epoch + 1, params.clone()));
        }
        let best_epoch = best.as_ref().map(|b| b.1).unwrap_or(0);
        if epoch + 1 - best_epoch >= config.early_stop_patience {
            stopped_early = epoch + 1 < config.epochs;
            break;
        }
    }
    let (best_val_auc, best_epoch, params) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        params,
        best_epoch,
        best_val_auc,
        stopped_early,
        trace,
    })
}

pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to rebuild and rerun a trained model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub circuit: CircuitSpec,
    pub train_config: TrainConfig,
    pub params: ModelParams,
    pub best_epoch: usize,
    pub trace: Vec<EpochRecord>,
}

impl Checkpoint {
    pub fn new(spec: &CircuitSpec, train_config: &TrainConfig, outcome: &TrainOutcome) -> Self {
        Self {
            format_version: CHECKPOINT_VERSION,
            circuit: spec.clone(),
            train_config: train_config.clone(),
            params: outcome.params.clone(),
            best_epoch: outcome.best_epoch,
            trace: outcome.trace.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint =
            serde_json::from_str(text).map_err(|e| DaqcError::Format(format!("checkpoint: {e}")))?;
        if ck.format_version != CHECKPOINT_VERSION {
            return Err(DaqcError::Format(format!(
                "checkpoint version {} (expected {CHECKPOINT_VERSION})",
                ck.format_version
            )));
        }
        ck.params.check(&ck.circuit)?;
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| DaqcError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| DaqcError::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Trace as CSV with header `epoch,train_loss,val_loss,val_auc,val_acc,grad_l2,learning_rate`.
pub fn trace_csv(trace: &[EpochRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in trace {
        w.serialize(r).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_circuit, DaqcConfig};

    fn toy_spec() -> CircuitSpec {
        build_circuit(&DaqcConfig {
            n_qubits: 4,
            pooled_rows: 2,
            pooled_cols: 2,
            window_rows: 2,
            window_cols: 2,
            entangle_period: 1,
            entangle: true,
            axis_seed: 3,
        })
        .unwrap()
    }

    /// Class decides which half of the angles is bright.
    fn toy_data(n: usize) -> Vec<EncodedSample> {
        (0..n)
            .map(|i| {
                let label = i % 2;
                let jitter = 0.1 * ((i * 7919) % 13) as f64 / 13.0;
                let angles = if label == 0 {
                    vec![3.0 - jitter, 2.8, 0.1 + jitter, 0.0]
                } else {
                    vec![0.0, 0.2 + jitter, 2.9, 3.1 - jitter]
                };
                EncodedSample { angles, label }
            })
            .collect()
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let mut c = TrainConfig::default();
        c.early_stop_patience = 300;
        assert!(matches!(c.validate(), Err(DaqcError::Config(_))));
        c = TrainConfig {
            learning_rate: -1.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn empty_split_is_a_data_error() {
        let spec = toy_spec();
        let r = train(&spec, &[], &toy_data(4), 2, &TrainConfig::default());
        assert!(matches!(r, Err(DaqcError::Data(_))));
    }

    #[test]
    fn zero_learning_rate_keeps_initialization() {
        let spec = toy_spec();
        let cfg = TrainConfig {
            learning_rate: 0.0,
            epochs: 3,
            batch_size: 4,
            early_stop_patience: 3,
            ..Default::default()
        };
        let out = train(&spec, &toy_data(8), &toy_data(4), 2, &cfg).unwrap();
        assert_eq!(out.params, ModelParams::init(&spec, 2, cfg.init_seed).unwrap());
    }

    #[test]
    fn separable_toy_set_is_learned() {
        let spec = toy_spec();
        let cfg = TrainConfig {
            learning_rate: 0.05,
            epochs: 50,
            batch_size: 8,
            early_stop_patience: 50,
            init_seed: 1,
            ..Default::default()
        };
        let data = toy_data(32);
        // validating on the training set makes val_acc the train accuracy
        let out = train(&spec, &data, &data, 2, &cfg).unwrap();
        assert!(out.trace.iter().any(|r| r.val_acc == 1.0));
        assert!(out.trace.last().unwrap().train_loss < out.trace[0].train_loss);
    }

    #[test]
    fn best_epoch_parameters_are_returned() {
        let spec = toy_spec();
        let cfg = TrainConfig {
            learning_rate: 0.05,
            epochs: 6,
            batch_size: 8,
            early_stop_patience: 6,
            init_seed: 4,
            ..Default::default()
        };
        let data = toy_data(16);
        let out = train(&spec, &data, &data, 2, &cfg).unwrap();
        let max = out.trace.iter().map(|r| r.val_auc).fold(f64::MIN, f64::max);
        assert_eq!(out.best_val_auc, max);
        assert_eq!(out.trace[out.best_epoch - 1].val_auc, max);
        let (probs, _) = predict(&spec, &out.params, &data).unwrap();
        let labels: Vec<usize> = data.iter().map(|s| s.label).collect();
        assert_eq!(classification_report(&probs, &labels, 2).unwrap().auc, max);
    }

    #[test]
    fn training_is_reproducible() {
        let spec = toy_spec();
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 3,
            early_stop_patience: 3,
            init_seed: 8,
            ..Default::default()
        };
        let a = train(&spec, &toy_data(10), &toy_data(6), 2, &cfg).unwrap();
        let b = train(&spec, &toy_data(10), &toy_data(6), 2, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn checkpoint_round_trip() {
        let spec = toy_spec();
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 4,
            early_stop_patience: 2,
            ..Default::default()
        };
        let out = train(&spec, &toy_data(8), &toy_data(4), 2, &cfg).unwrap();
        let ck = Checkpoint::new(&spec, &cfg, &out);
        let back = Checkpoint::from_json(&ck.to_json()).unwrap();
        assert_eq!(back, ck);
        let csv = trace_csv(&out.trace);
        assert!(csv.starts_with("epoch,train_loss,val_loss,val_auc,val_acc,grad_l2,learning_rate\n"));
        assert_eq!(csv.lines().count(), out.trace.len() + 1);
        let mut bad = ck.clone();
        bad.format_version = 99;
        assert!(matches!(
            Checkpoint::from_json(&bad.to_json()),
            Err(DaqcError::Format(_))
        ));
    }
}
