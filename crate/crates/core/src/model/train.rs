use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{ModelConfig, ModelError, Optimizer, ReconstructionModel, TrainConfig};
use crate::dataset::split_indices;
use crate::image::{BinaryMask, ImageTensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    /// 1-based
    pub epoch: usize,
    /// Mean per-sample loss over the epoch's mini-batches, before each step.
    pub train_loss: f64,
    /// Mean validation loss after the epoch. Equals `train_loss` when there
    /// is no validation split.
    pub val_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainingSummary {
    pub history: Vec<EpochMetrics>,
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
    /// Mean training-set loss of the returned (best) parameters.
    pub final_train_loss: f64,
}

/// Mini-batch training that keeps the parameters with the lowest validation
/// loss. Fully deterministic given the seeds in `mc` and `tc`.
pub fn train(
    dataset: &[(ImageTensor, BinaryMask)],
    mc: &ModelConfig,
    tc: &TrainConfig,
) -> Result<(ReconstructionModel, TrainingSummary), ModelError> {
    train_with_observer(dataset, mc, tc, |_| {})
}

pub fn train_with_observer<F: FnMut(&EpochMetrics)>(
    dataset: &[(ImageTensor, BinaryMask)],
    mc: &ModelConfig,
    tc: &TrainConfig,
    mut observe: F,
) -> Result<(ReconstructionModel, TrainingSummary), ModelError> {
    tc.validate()?;
    mc.validate()?;
    let first = dataset.first().ok_or(ModelError::EmptyDataset)?;
    let channels = first.0.channels();
    let (w, h) = (tc.input_width, tc.input_height);

    let samples: Vec<(ImageTensor, BinaryMask)> = dataset
        .iter()
        .map(|(x, m)| {
            if x.channels() != channels {
                return Err(ModelError::DimensionMismatch("images differ in channel count".into()));
            }
            if (x.width(), x.height()) != m.dims() {
                return Err(ModelError::DimensionMismatch(format!(
                    "image {}x{} vs mask {}x{}",
                    x.width(),
                    x.height(),
                    m.width(),
                    m.height()
                )));
            }
            Ok((x.resize(w, h), m.resize(w, h)))
        })
        .collect::<Result<_, _>>()?;
    if samples.iter().all(|(_, m)| m.is_empty()) {
        return Err(ModelError::AllMasksEmpty);
    }

    let mut model = ReconstructionModel::new(mc, tc, channels)?;
    let (mut train_idx, val_idx) = split_indices(samples.len(), tc.split, tc.seed);
    let selection_on_train = val_idx.is_empty();
    let mut optimizer = Optimizer::new(tc.optimizer, tc.learning_rate, model.param_count());
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed ^ 0x5e_ed0f_ba7c);

    let mut best_params = model.params().to_vec();
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0;
    let mut history = Vec::with_capacity(tc.epochs);

    for epoch in 1..=tc.epochs {
        train_idx.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in train_idx.chunks(tc.batch_size) {
            let results: Vec<(f64, Vec<f64>)> = batch
                .par_iter()
                .map(|&i| {
                    let (x, m) = &samples[i];
                    model.loss_and_gradient(x, m)
                })
                .collect::<Result<_, _>>()?;
            let mut grad = vec![0.0; model.param_count()];
            for (loss, g) in &results {
                loss_sum += loss;
                for (a, b) in grad.iter_mut().zip(g) {
                    *a += b;
                }
            }
            let inv = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= inv);
            optimizer.step(model.params_mut(), &grad);
        }
        let train_loss = loss_sum / train_idx.len() as f64;
        let val_loss = if selection_on_train { train_loss } else { mean_loss(&model, &samples, &val_idx)? };
        let metrics = EpochMetrics { epoch, train_loss, val_loss };
        observe(&metrics);
        history.push(metrics);
        if val_loss < best_loss {
            best_loss = val_loss;
            best_epoch = epoch;
            best_params.copy_from_slice(model.params());
        }
    }

    model.params_mut().copy_from_slice(&best_params);
    model.best_val_loss = best_loss;
    model.best_epoch = best_epoch;
    model.epochs_run = tc.epochs;
    let mut sorted_train = train_idx;
    sorted_train.sort_unstable();
    let final_train_loss = mean_loss(&model, &samples, &sorted_train)?;
    Ok((model, TrainingSummary { history, train_indices: sorted_train, val_indices: val_idx, final_train_loss }))
}

fn mean_loss(model: &ReconstructionModel, samples: &[(ImageTensor, BinaryMask)], idx: &[usize]) -> Result<f64, ModelError> {
    let losses: Vec<f64> = idx
        .par_iter()
        .map(|&i| model.loss(&samples[i].0, &samples[i].1))
        .collect::<Result<_, _>>()?;
    Ok(losses.iter().sum::<f64>() / idx.len().max(1) as f64)
}
