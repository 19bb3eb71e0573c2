//! Dataset splitting, stratified batch construction, the joint training loop,
//! early stopping, and grid search.

use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::context::Example;
use crate::error::{Error, Result};
use crate::evaluator::f1_score;
use crate::losses::{
    alpha_schedule, ce_grad_logits, ce_loss, pseudo_label_loss, scl_grad, scl_loss,
    supervised_loss, total_loss,
};
use crate::model::{EmbeddingBackend, ModelConfig, ModelInput, TripletClassifier};
use crate::nn::{Adam, ParamSet};

/// Train/validation/test partition of a labeled pool.
#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Vec<Example>,
    pub val: Vec<Example>,
    pub test: Vec<Example>,
}

/// Index partition of a labeled pool, for callers that need to keep the
/// original records aligned with the split.
#[derive(Debug, Clone)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Partitions `0..labels.len()` 7:3 into train/test, then carves a random
/// 20% of the train portion into validation. Deterministic per seed; the
/// final train portion must contain both classes.
pub fn split_indices(labels: &[Option<u8>], seed: u64) -> Result<SplitIndices> {
    if labels.is_empty() {
        return Err(Error::Train("empty labeled pool".into()));
    }
    if labels.iter().any(|l| l.is_none()) {
        return Err(Error::Train("unlabeled example in the labeled pool".into()));
    }
    let mut indices: Vec<usize> = (0..labels.len()).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let train_total = ((labels.len() as f64) * 0.7).round() as usize;
    let (train_idx, test_idx) = indices.split_at(train_total);
    let val_count = ((train_idx.len() as f64) * 0.2).round() as usize;
    let (val_idx, train_idx) = train_idx.split_at(val_count);
    let has_both = train_idx.iter().any(|&i| labels[i] == Some(1))
        && train_idx.iter().any(|&i| labels[i] == Some(0));
    if !has_both {
        return Err(Error::Train(
            "train split does not contain both classes; pool too small or one-sided".into(),
        ));
    }
    Ok(SplitIndices {
        train: train_idx.to_vec(),
        val: val_idx.to_vec(),
        test: test_idx.to_vec(),
    })
}

/// Splits a labeled pool of examples 7:3 into train/test, then carves a
/// random 20% of the train portion into a validation set.
pub fn split_dataset(pool: &[Example], seed: u64) -> Result<Splits> {
    let labels: Vec<Option<u8>> = pool.iter().map(|e| e.label).collect();
    let idx = split_indices(&labels, seed)?;
    let collect = |idx: &[usize]| idx.iter().map(|&i| pool[i].clone()).collect::<Vec<_>>();
    Ok(Splits {
        train: collect(&idx.train),
        val: collect(&idx.val),
        test: collect(&idx.test),
    })
}

/// Builds one epoch of stratified batches over example indices: every batch
/// contains at least one positive and one negative. When one class has fewer
/// members than the natural batch count, the number of batches shrinks so
/// the guarantee still holds.
pub fn stratified_batches(
    labels: &[u8],
    batch_size: usize,
    rng: &mut ChaCha20Rng,
) -> Result<Vec<Vec<usize>>> {
    if batch_size < 2 {
        return Err(Error::Train("batch size must be at least 2".into()));
    }
    let mut positives: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let mut negatives: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::Train(
            "stratified batching needs both classes present".into(),
        ));
    }
    positives.shuffle(rng);
    negatives.shuffle(rng);
    let natural = labels.len().div_ceil(batch_size);
    let num_batches = natural.min(positives.len()).min(negatives.len()).max(1);
    let mut batches: Vec<Vec<usize>> = vec![Vec::new(); num_batches];
    // Seed each batch with one of each class, then deal the rest round-robin.
    for (b, batch) in batches.iter_mut().enumerate() {
        batch.push(positives[b]);
        batch.push(negatives[b]);
    }
    let rest = positives[num_batches..]
        .iter()
        .chain(negatives[num_batches..].iter());
    for (i, &idx) in rest.enumerate() {
        batches[i % num_batches].push(idx);
    }
    Ok(batches)
}

/// Cycles through a shuffled unlabeled pool, reshuffling on every wrap.
pub struct UnlabeledCycler {
    order: Vec<usize>,
    pos: usize,
    rng: ChaCha20Rng,
}

impl UnlabeledCycler {
    pub fn new(pool_len: usize, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..pool_len).collect();
        order.shuffle(&mut rng);
        UnlabeledCycler { order, pos: 0, rng }
    }

    pub fn next_batch(&mut self, size: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(size);
        for _ in 0..size {
            if self.pos >= self.order.len() {
                self.order.shuffle(&mut self.rng);
                self.pos = 0;
            }
            out.push(self.order[self.pos]);
            self.pos += 1;
        }
        out
    }
}

/// One training-log line, emitted per batch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainLogRecord {
    pub epoch: usize,
    pub batch: usize,
    pub l_ce: f64,
    pub l_scl: f64,
    pub l_u: f64,
    pub alpha: f64,
    pub l: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            batch_size: 16,
            max_epochs: 50,
            patience: 5,
        }
    }
}

pub struct TrainOutcome {
    pub model: TripletClassifier,
    pub log: Vec<TrainLogRecord>,
    pub best_val_f1: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
}

fn featurize_all(
    model: &TripletClassifier,
    examples: &[Example],
    embedder: &dyn EmbeddingBackend,
) -> Result<Vec<ModelInput>> {
    examples
        .iter()
        .map(|e| model.featurize(e, embedder))
        .collect()
}

fn predict_labels(model: &TripletClassifier, inputs: &[ModelInput]) -> Vec<u8> {
    inputs
        .iter()
        .map(|input| model.forward(input).0.predicted_label())
        .collect()
}

/// Trains the classifier with the joint objective: supervised cross-entropy
/// and contrastive terms on labeled batches, plus the α-weighted pseudo-label
/// term on unlabeled batches. Adam updates; early stopping on validation F1.
/// Returns the best-validation-F1 parameters.
pub fn train(
    config: &ModelConfig,
    splits: &Splits,
    unlabeled: &[Example],
    embedder: &dyn EmbeddingBackend,
    options: &TrainOptions,
) -> Result<TrainOutcome> {
    config.validate()?;
    if splits.train.is_empty() || splits.val.is_empty() {
        return Err(Error::Train("train and validation sets must be non-empty".into()));
    }
    if config.use_ssl && unlabeled.is_empty() {
        return Err(Error::Train(
            "semi-supervised mode requires a non-empty unlabeled pool".into(),
        ));
    }
    let labels: Vec<u8> = splits
        .train
        .iter()
        .map(|e| e.label.ok_or_else(|| Error::Train("unlabeled train example".into())))
        .collect::<Result<_>>()?;

    let mut model = TripletClassifier::new(config.clone())?;
    let train_inputs = featurize_all(&model, &splits.train, embedder)?;
    let val_inputs = featurize_all(&model, &splits.val, embedder)?;
    let unlabeled_inputs = featurize_all(&model, unlabeled, embedder)?;
    let val_labels: Vec<u8> = splits.val.iter().map(|e| e.label.unwrap()).collect();

    let mut adam = Adam::new(config.learning_rate, model.param_count());
    let mut batch_rng = ChaCha20Rng::seed_from_u64(config.seed ^ 0x5eed_ba7c);
    let mut cycler = UnlabeledCycler::new(unlabeled_inputs.len(), config.seed ^ 0x0c1c_1e5d);

    let lambda_eff = if config.use_scl { config.lambda } else { 0.0 };
    let mut log = Vec::new();
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut stall = 0usize;
    let mut epochs_run = 0usize;

    for epoch in 0..options.max_epochs {
        epochs_run = epoch + 1;
        let batches = stratified_batches(&labels, options.batch_size, &mut batch_rng)?;
        let total_batches = batches.len();
        for (batch_ordinal, batch) in batches.iter().enumerate() {
            let b = batch_ordinal + 1;
            let alpha = if config.use_ssl {
                alpha_schedule(b, epoch, total_batches, config.c1, config.c2, config.gamma)
            } else {
                0.0
            };

            // Labeled forward.
            let mut traces = Vec::with_capacity(batch.len());
            let mut y_pred = Vec::with_capacity(batch.len());
            let mut h_scl = Vec::with_capacity(batch.len());
            for &idx in batch {
                let (out, trace) = model.forward(&train_inputs[idx]);
                y_pred.push(out.y_pred);
                h_scl.push(out.h_scl);
                traces.push(trace);
            }
            let batch_labels: Vec<u8> = batch.iter().map(|&i| labels[i]).collect();
            let probs_pos: Vec<f64> = y_pred.iter().map(|p| p[1]).collect();
            let l_ce = ce_loss(&probs_pos, &batch_labels)?;
            let (l_scl, scl_grads) = if lambda_eff > 0.0 {
                (
                    scl_loss(&h_scl, &batch_labels, config.tau)?,
                    Some(scl_grad(&h_scl, &batch_labels, config.tau)?),
                )
            } else {
                // Preserve the metric in the log even when the term is off.
                (scl_loss(&h_scl, &batch_labels, config.tau).unwrap_or(0.0), None)
            };
            let l_s = supervised_loss(l_ce, if config.use_scl { l_scl } else { 0.0 }, lambda_eff);

            // Labeled backward.
            let ce_grads = ce_grad_logits(&y_pred, &batch_labels);
            for (i, &idx) in batch.iter().enumerate() {
                let dlogits = &ce_grads[i] * (1.0 - lambda_eff);
                let dscl: Option<Array1<f64>> =
                    scl_grads.as_ref().map(|g| &g[i] * lambda_eff);
                model.backward(
                    &train_inputs[idx],
                    &traces[i],
                    &dlogits,
                    dscl.as_ref(),
                );
            }

            // Unlabeled pseudo-label pass.
            let mut l_u = 0.0;
            if config.use_ssl && alpha > 0.0 {
                let u_batch = cycler.next_batch(batch.len());
                let mut u_traces = Vec::with_capacity(u_batch.len());
                let mut u_pred = Vec::with_capacity(u_batch.len());
                for &idx in &u_batch {
                    let (out, trace) = model.forward(&unlabeled_inputs[idx]);
                    u_pred.push(out.y_pred);
                    u_traces.push(trace);
                }
                let (loss_u, hard_labels) = pseudo_label_loss(&u_pred)?;
                l_u = loss_u;
                let u_grads = ce_grad_logits(&u_pred, &hard_labels);
                for (i, &idx) in u_batch.iter().enumerate() {
                    let dlogits = &u_grads[i] * alpha;
                    model.backward(&unlabeled_inputs[idx], &u_traces[i], &dlogits, None);
                }
            }

            let l = total_loss(l_s, l_u, alpha);
            if !l.is_finite() {
                return Err(Error::Train(format!(
                    "non-finite loss {l} at epoch {epoch} batch {b}; aborting"
                )));
            }
            adam.step(&mut model);
            log.push(TrainLogRecord {
                epoch,
                batch: b,
                l_ce,
                l_scl: if config.use_scl { l_scl } else { 0.0 },
                l_u,
                alpha,
                l,
            });
        }

        // Early stopping on validation F1.
        let val_preds = predict_labels(&model, &val_inputs);
        let val_f1 = f1_score(&val_preds, &val_labels);
        let improved = best.as_ref().is_none_or(|(f, _, _)| val_f1 > *f);
        if improved {
            best = Some((val_f1, epoch, model.flatten_params()));
            stall = 0;
        } else {
            stall += 1;
            if stall >= options.patience {
                log::info!(
                    "early stop at epoch {epoch}: no F1 improvement for {} epochs",
                    options.patience
                );
                break;
            }
        }
    }

    let (best_val_f1, best_epoch, params) =
        best.ok_or_else(|| Error::Train("no epoch completed".into()))?;
    model.load_params(&params)?;
    Ok(TrainOutcome {
        model,
        log,
        best_val_f1,
        best_epoch,
        epochs_run,
    })
}

/// Hyperparameter grid over (λ, τ, γ).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamGrid {
    pub lambdas: Vec<f64>,
    pub taus: Vec<f64>,
    pub gammas: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSearchRun {
    pub lambda: f64,
    pub tau: f64,
    pub gamma: f64,
    pub val_f1: f64,
}

pub struct GridSearchOutcome {
    pub best_config: ModelConfig,
    pub best: GridSearchRun,
    pub runs: Vec<GridSearchRun>,
}

/// Exhaustive search over the grid; the best validation F1 wins, with ties
/// broken in grid order (lambdas outermost, gammas innermost).
pub fn grid_search(
    base: &ModelConfig,
    grid: &ParamGrid,
    splits: &Splits,
    unlabeled: &[Example],
    embedder: &dyn EmbeddingBackend,
    options: &TrainOptions,
) -> Result<GridSearchOutcome> {
    if grid.lambdas.is_empty() || grid.taus.is_empty() || grid.gammas.is_empty() {
        return Err(Error::Train("empty grid axis".into()));
    }
    let mut runs = Vec::new();
    let mut best: Option<(GridSearchRun, ModelConfig)> = None;
    for &lambda in &grid.lambdas {
        for &tau in &grid.taus {
            for &gamma in &grid.gammas {
                let mut config = base.clone();
                config.lambda = lambda;
                config.tau = tau;
                config.gamma = gamma;
                let outcome = train(&config, splits, unlabeled, embedder, options)?;
                let run = GridSearchRun {
                    lambda,
                    tau,
                    gamma,
                    val_f1: outcome.best_val_f1,
                };
                log::info!(
                    "grid point lambda={lambda} tau={tau} gamma={gamma}: val F1 {:.4}",
                    run.val_f1
                );
                if best.as_ref().is_none_or(|(b, _)| run.val_f1 > b.val_f1) {
                    best = Some((run.clone(), config));
                }
                runs.push(run);
            }
        }
    }
    let (best, best_config) = best.expect("non-empty grid");
    Ok(GridSearchOutcome {
        best_config,
        best,
        runs,
    })
}
