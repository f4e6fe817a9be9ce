use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use crate::data::{load_batch, DatasetManifest, SampleRecord, Split};
use crate::error::{Error, Result};
use crate::network::{argmax_rows, Network, Topology};
use crate::seed::{indexed, substream};
use crate::tensor::ops::{self, Mode};
use crate::tensor::{Scalar, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience_epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            batch_size: 32,
            max_epochs: 200,
            patience_epochs: 30,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// A learning rate of exactly zero is accepted; it freezes the weights
    /// while batch-norm statistics keep updating.
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Config(format!("learning rate {} must be finite and non-negative", self.learning_rate)));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::Config("batch size and max epochs must be positive".into()));
        }
        if self.patience_epochs > self.max_epochs {
            return Err(Error::Config(format!(
                "patience {} exceeds max epochs {}",
                self.patience_epochs, self.max_epochs
            )));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || self.epsilon <= 0.0 {
            return Err(Error::Config("Adam betas must lie in [0, 1) and epsilon be positive".into()));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

/// Images and labels held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub images: Tensor<T>,
    pub labels: Vec<usize>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(images: Tensor<T>, labels: Vec<usize>) -> Result<Self> {
        let n = images.shape().first().copied().unwrap_or(0);
        if n != labels.len() {
            return Err(Error::shape("Dataset::new", "one label per image", images.shape(), &[labels.len()]));
        }
        Ok(Dataset { images, labels })
    }

    pub fn load(manifest: &DatasetManifest, records: &[SampleRecord], size: usize) -> Result<Self> {
        let (images, labels) = load_batch(manifest, records, size)?;
        Dataset::new(images, labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> (Tensor<T>, Vec<usize>) {
        (self.images.select_rows(indices), indices.iter().map(|&i| self.labels[i]).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitData<T> {
    pub train: Dataset<T>,
    pub val: Dataset<T>,
    pub test: Dataset<T>,
}

impl<T: Scalar> SplitData<T> {
    pub fn load(manifest: &DatasetManifest, split: &Split, size: usize) -> Result<Self> {
        Ok(SplitData {
            train: Dataset::load(manifest, &split.train, size)?,
            val: Dataset::load(manifest, &split.val, size)?,
            test: Dataset::load(manifest, &split.test, size)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    /// Kept out of the serialized form so metric logs are reproducible.
    #[serde(skip)]
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome<T> {
    /// Weights of the epoch with the highest validation accuracy.
    pub network: Network<T>,
    pub history: Vec<EpochMetrics>,
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    pub test_accuracy: f64,
    pub test_predictions: Vec<usize>,
    pub wall_time_s: f64,
}

impl<T> FitOutcome<T> {
    pub fn epochs_run(&self) -> usize {
        self.history.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
    pub predictions: Vec<usize>,
}

const EVAL_BATCH: usize = 128;

/// Inference-mode loss (cross-entropy plus L2) and accuracy over `data`.
pub fn evaluate<T: Scalar>(network: &Network<T>, data: &Dataset<T>) -> Result<Evaluation> {
    if data.is_empty() {
        return Ok(Evaluation { loss: f64::NAN, accuracy: f64::NAN, predictions: vec![] });
    }
    let mut loss = 0.0;
    let mut predictions = Vec::with_capacity(data.len());
    let idx: Vec<usize> = (0..data.len()).collect();
    for chunk in idx.chunks(EVAL_BATCH) {
        let (x, y) = data.subset(chunk);
        let logits = network.logits(&x, Mode::Infer)?;
        loss += ops::scce_loss(&logits, &y)?.as_f64() * chunk.len() as f64;
        predictions.extend(argmax_rows(&logits));
    }
    let decayed = network.params.iter().filter(|p| p.decay).map(|p| &p.tensor);
    let penalty = ops::l2_penalty(decayed, network.topology.l2_lambda).as_f64();
    let correct = predictions.iter().zip(&data.labels).filter(|(p, l)| p == l).count();
    Ok(Evaluation {
        loss: loss / data.len() as f64 + penalty,
        accuracy: correct as f64 / data.len() as f64,
        predictions,
    })
}

/// Trains `network` with Adam until `max_epochs` or until `patience_epochs`
/// epochs pass without a strictly higher validation accuracy, then restores
/// the best epoch's weights and scores them on the test set.
///
/// `on_epoch` sees each epoch's metrics as soon as they are computed.
pub fn fit<T: Scalar>(
    mut network: Network<T>,
    data: &SplitData<T>,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<FitOutcome<T>> {
    config.validate()?;
    let classes = network.topology.classes();
    let mut present = vec![false; classes];
    for &l in &data.train.labels {
        if l >= classes {
            return Err(Error::Data(format!("label {l} outside the {classes} network classes")));
        }
        present[l] = true;
    }
    if let Some(missing) = present.iter().position(|p| !p) {
        return Err(Error::Config(format!("class {missing} has no training images")));
    }
    let started = Instant::now();
    let adam = config.adam();
    let mut state = AdamState::new(&network.params);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(substream(config.seed, "shuffle"));
    let dropout_seed = substream(config.seed, "dropout");
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut history = Vec::new();
    let mut best: Option<(usize, f64, Network<T>)> = None;
    let mut step = 0u64;

    for epoch in 0..config.max_epochs {
        let epoch_start = Instant::now();
        order.shuffle(&mut shuffle_rng);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for batch in batches(&order, config.batch_size) {
            let (x, y) = data.train.subset(batch);
            let out = network.loss_and_grads(&x, &y, indexed(dropout_seed, step))?;
            step += 1;
            loss_sum += out.loss.as_f64() * batch.len() as f64;
            correct += argmax_rows(&out.logits).iter().zip(&y).filter(|(p, l)| p == l).count();
            network.commit_running(&out.running)?;
            adam_step(&mut network.params, &out.grads, &mut state, &adam)?;
        }
        let val = evaluate(&network, &data.val)?;
        let metrics = EpochMetrics {
            epoch,
            train_loss: loss_sum / data.train.len() as f64,
            train_accuracy: correct as f64 / data.train.len() as f64,
            val_loss: val.loss,
            val_accuracy: val.accuracy,
            wall_time_s: epoch_start.elapsed().as_secs_f64(),
        };
        on_epoch(&metrics);
        history.push(metrics);
        let improved = match &best {
            None => true,
            Some((_, acc, _)) => val.accuracy > *acc,
        };
        if improved {
            best = Some((epoch, val.accuracy, network.clone()));
        }
        let best_epoch = best.as_ref().map(|b| b.0).unwrap_or(0);
        if epoch - best_epoch >= config.patience_epochs {
            break;
        }
    }
    let (best_epoch, best_val_accuracy, network) = best.expect("at least one epoch runs");
    let test = evaluate(&network, &data.test)?;
    Ok(FitOutcome {
        network,
        history,
        best_epoch,
        best_val_accuracy,
        test_accuracy: test.accuracy,
        test_predictions: test.predictions,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Consecutive mini-batches of `order`; a trailing batch of one sample is
/// folded into its predecessor because batch statistics need two samples.
fn batches(order: &[usize], size: usize) -> Vec<&[usize]> {
    let mut out: Vec<&[usize]> = order.chunks(size).collect();
    if out.len() >= 2 && out[out.len() - 1].len() == 1 {
        let start = (out.len() - 2) * size;
        out.truncate(out.len() - 2);
        out.push(&order[start..]);
    }
    out
}

/// Seed-level summary of one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_acc: f64,
    pub test_acc: f64,
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl RunSummary {
    pub fn of<T>(seed: u64, outcome: &FitOutcome<T>) -> Self {
        RunSummary {
            seed,
            epochs_run: outcome.epochs_run(),
            best_epoch: outcome.best_epoch,
            best_val_acc: outcome.best_val_accuracy,
            test_acc: outcome.test_accuracy,
            wall_time_s: outcome.wall_time_s,
        }
    }
}

/// Weights of run `seed` are initialised from the `"init"` substream.
pub fn init_network<T: Scalar>(topology: &Topology, seed: u64) -> Result<Network<T>> {
    Network::new(topology.clone(), substream(seed, "init"))
}

/// `runs` independent fits with seeds `base_seed + i`, returned in seed
/// order whether or not they run concurrently.
pub fn repeated_runs<T: Scalar>(
    topology: &Topology,
    data: &SplitData<T>,
    config: &TrainConfig,
    runs: usize,
    base_seed: u64,
    parallel: bool,
) -> Result<Vec<(RunSummary, Vec<usize>)>> {
    let one = |i: usize| -> Result<(RunSummary, Vec<usize>)> {
        let seed = base_seed.wrapping_add(i as u64);
        let cfg = TrainConfig { seed, ..config.clone() };
        let outcome = fit(init_network(topology, seed)?, data, &cfg, |_| {})?;
        Ok((RunSummary::of(seed, &outcome), outcome.test_predictions))
    };
    if parallel {
        (0..runs).into_par_iter().map(one).collect()
    } else {
        (0..runs).map(one).collect()
    }
}
