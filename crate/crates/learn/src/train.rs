use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::mlp::{argmax, AdamState, MlpModel};
use crate::LearnError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: vec![25, 10],
            epochs: 100,
            batch_size: 200,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(LearnError::Config(
                "epochs and batch_size must be positive".into(),
            ));
        }
        let positive = |x: f64| x > 0.0;
        if !positive(self.lr)
            || !positive(self.eps)
            || !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
        {
            return Err(LearnError::Config(
                "optimizer hyperparameters out of range".into(),
            ));
        }
        if self.hidden.contains(&0) {
            return Err(LearnError::Config(
                "hidden layer widths must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean of the minibatch losses seen during the epoch.
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
}

/// Labelled rows borrowed from a larger table.
pub struct DataView<'a> {
    pub rows: Vec<&'a [f64]>,
    pub labels: Vec<usize>,
}

impl<'a> DataView<'a> {
    pub fn new(rows: Vec<&'a [f64]>, labels: Vec<usize>) -> Result<Self, LearnError> {
        if rows.len() != labels.len() {
            return Err(LearnError::Dimension {
                expected: rows.len(),
                got: labels.len(),
            });
        }
        Ok(DataView { rows, labels })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Loss and accuracy of `model` on `data`.
pub fn evaluate_loss(model: &MlpModel, data: &DataView) -> Result<(f64, f64), LearnError> {
    if data.is_empty() {
        return Err(LearnError::EmptyInput);
    }
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (x, &y) in data.rows.iter().zip(&data.labels) {
        let p = model.forward(x)?;
        loss += crate::mlp::loss(&p, y);
        if argmax(&p) == y {
            correct += 1;
        }
    }
    let n = data.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Minibatch Adam training. Deterministic for a given seed.
pub fn train(
    train_data: &DataView,
    val_data: &DataView,
    n_classes: usize,
    cfg: &TrainConfig,
) -> Result<(MlpModel, TrainReport), LearnError> {
    cfg.validate()?;
    let first = train_data.rows.first().ok_or(LearnError::EmptyInput)?;
    let mut dims = vec![first.len()];
    dims.extend(&cfg.hidden);
    dims.push(n_classes);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = MlpModel::new(&dims, &mut rng)?;
    let mut adam = AdamState::for_model(&model);
    adam.lr = cfg.lr;
    adam.beta1 = cfg.beta1;
    adam.beta2 = cfg.beta2;
    adam.eps = cfg.eps;

    let mut order: Vec<usize> = (0..train_data.len()).collect();
    let mut epochs = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut batch_losses = 0.0;
        let mut n_batches = 0usize;
        let mut correct = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let xs: Vec<&[f64]> = chunk.iter().map(|&i| train_data.rows[i]).collect();
            let ys: Vec<usize> = chunk.iter().map(|&i| train_data.labels[i]).collect();
            for (x, &y) in xs.iter().zip(&ys) {
                if model.predict(x)? == y {
                    correct += 1;
                }
            }
            let (loss, grads) = model.backward(&xs, &ys)?;
            adam.apply(&mut model, &grads);
            batch_losses += loss;
            n_batches += 1;
        }
        let (val_loss, val_accuracy) = if val_data.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            evaluate_loss(&model, val_data)?
        };
        epochs.push(EpochStats {
            epoch: epoch + 1,
            train_loss: batch_losses / n_batches as f64,
            train_accuracy: correct as f64 / train_data.len() as f64,
            val_loss,
            val_accuracy,
        });
    }
    Ok((model, TrainReport { epochs }))
}
