//! Pairwise logistic training and the pairwise accuracy metric.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

use super::data::RankingTask;
use super::model::{dot, Embedding, ModelSpec, ScoringModel};

/// An ordered training pair: `user` ranks `preferred` above `other`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairExample {
    pub user: usize,
    pub preferred: usize,
    pub other: usize,
}

/// Every ordered pair `(i, j)` with `rank_i > rank_j`, for every user.
pub fn ordered_pairs(task: &RankingTask<'_>) -> Vec<PairExample> {
    let mut pairs = Vec::new();
    for (user, r) in task.rankings.iter().enumerate() {
        for i in 0..r.m() {
            for j in 0..r.m() {
                if r.rank_of(i) > r.rank_of(j) {
                    pairs.push(PairExample {
                        user,
                        preferred: i,
                        other: j,
                    });
                }
            }
        }
    }
    pairs
}

/// `log(1 + exp(-x))` without overflow.
pub fn logistic_loss(x: f64) -> f64 {
    (-x).max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `d/dx log(1 + exp(-x)) = -1 / (1 + exp(x))`.
fn logistic_slope(x: f64) -> f64 {
    if x >= 0.0 {
        let e = (-x).exp();
        -e / (1.0 + e)
    } else {
        -1.0 / (1.0 + x.exp())
    }
}

/// Mean logistic pairwise loss plus `ridge * |params|^2`, and its exact gradient.
pub fn pairwise_loss_and_gradient(
    model: &ScoringModel,
    task: &RankingTask<'_>,
    pairs: &[PairExample],
    ridge: f64,
) -> Result<(f64, Vec<f64>)> {
    let params = model.params();
    let mut grad = vec![0.0; params.len()];
    let penalty: f64 = ridge * params.iter().map(|p| p * p).sum::<f64>();
    if ridge != 0.0 {
        grad.iter_mut().zip(&params).for_each(|(g, p)| *g = 2.0 * ridge * p);
    }
    if pairs.is_empty() {
        return Ok((penalty, grad));
    }

    let mut user_slot: Vec<Option<usize>> = vec![None; task.user_features.len()];
    let mut users: Vec<(usize, Embedding, Vec<f64>)> = Vec::new();
    let mut item_slot: Vec<Option<usize>> = vec![None; task.item_features.len()];
    let mut items: Vec<(usize, Embedding, Vec<f64>)> = Vec::new();

    let scale = 1.0 / pairs.len() as f64;
    let mut loss = 0.0;
    for pair in pairs {
        let u = *user_slot[pair.user].get_or_insert_with(|| {
            let e = model.embed_user(&task.user_features[pair.user]);
            let dim = e.vector.len();
            users.push((pair.user, e, vec![0.0; dim]));
            users.len() - 1
        });
        let mut slot_of = |item: usize| {
            *item_slot[item].get_or_insert_with(|| {
                let e = model.embed_item(&task.item_features[item]);
                let dim = e.vector.len();
                items.push((item, e, vec![0.0; dim]));
                items.len() - 1
            })
        };
        let i = slot_of(pair.preferred);
        let j = slot_of(pair.other);

        let ue = &users[u].1.vector;
        let (hi, hj) = (&items[i].1.vector, &items[j].1.vector);
        let margin = dot(ue, hi) - dot(ue, hj);
        loss += logistic_loss(margin);
        let c = logistic_slope(margin) * scale;

        let du: Vec<f64> = hi.iter().zip(hj).map(|(a, b)| c * (a - b)).collect();
        let cu: Vec<f64> = ue.iter().map(|v| c * v).collect();
        users[u].2.iter_mut().zip(&du).for_each(|(g, d)| *g += d);
        items[i].2.iter_mut().zip(&cu).for_each(|(g, d)| *g += d);
        items[j].2.iter_mut().zip(&cu).for_each(|(g, d)| *g -= d);
    }
    let loss = loss * scale + penalty;
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    for (user, emb, g) in &users {
        model.backprop_user(&task.user_features[*user], emb, g, &mut grad);
    }
    for (item, emb, g) in &items {
        model.backprop_item(&task.item_features[*item], emb, g, &mut grad);
    }
    Ok((loss, grad))
}

/// Optimizer and early-stopping settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Number of (user, pair) examples per gradient step.
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Fraction of users held out for early stopping when no explicit
    /// validation set is given.
    pub validation_fraction: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub ridge: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            batch_size: 256,
            max_epochs: 100,
            validation_fraction: 0.0,
            patience: 10,
            ridge: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::InvalidConfig("validation_fraction must be in [0, 1)".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be positive".into()));
        }
        if !(self.ridge >= 0.0) {
            return Err(Error::InvalidConfig("ridge must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// The model with the best validation accuracy (or the last one without validation).
    pub model: ScoringModel,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub loss_history: Vec<f64>,
    pub validation_history: Vec<f64>,
}

/// Trains on `train`, holding out `validation_fraction` of its users for early stopping.
pub fn train(spec: &ModelSpec, train: &RankingTask<'_>, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let n = train.rankings.len();
    let held = (config.validation_fraction * n as f64).ceil() as usize;
    if held == 0 {
        return train_with_validation(spec, train, None, config);
    }
    if held >= n {
        return Err(Error::InvalidConfig("validation split leaves no training users".into()));
    }
    let cut = n - held;
    let fit = RankingTask {
        user_features: &train.user_features[..cut],
        item_features: train.item_features,
        rankings: &train.rankings[..cut],
    };
    let val = RankingTask {
        user_features: &train.user_features[cut..],
        item_features: train.item_features,
        rankings: &train.rankings[cut..],
    };
    train_with_validation(spec, &fit, Some(&val), config)
}

/// Mini-batch gradient descent with a fixed step. Each epoch visits the pairs
/// in an order shuffled by the run generator; with a validation set, the best
/// symmetric validation accuracy decides which parameters are returned.
pub fn train_with_validation(
    spec: &ModelSpec,
    train: &RankingTask<'_>,
    validation: Option<&RankingTask<'_>>,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    let user_dim = train
        .user_features
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::BadDimensions("no training users".into()))?;
    let item_dim = train
        .item_features
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::BadDimensions("no items".into()))?;
    let mut rng = rng_from_seed(config.seed);
    let mut model = ScoringModel::init(spec, user_dim, item_dim, &mut rng)?;
    let mut pairs = ordered_pairs(train);

    let mut best = model.clone();
    let mut best_val = match validation {
        Some(v) => pairwise_accuracy(&model, v)?.symmetric,
        None => f64::NEG_INFINITY,
    };
    let mut best_epoch = 0;
    let mut loss_history = Vec::new();
    let mut validation_history = Vec::new();
    let mut epochs_run = 0;
    let mut params = model.params();

    for epoch in 1..=config.max_epochs {
        pairs.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in pairs.chunks(config.batch_size) {
            let (loss, grad) = pairwise_loss_and_gradient(&model, train, batch, config.ridge)
                .map_err(|_| Error::Diverged(epoch))?;
            epoch_loss += loss * batch.len() as f64;
            params.iter_mut().zip(&grad).for_each(|(p, g)| *p -= config.learning_rate * g);
            model.set_params(&params)?;
            if !model.params_finite() {
                return Err(Error::Diverged(epoch));
            }
        }
        epochs_run = epoch;
        loss_history.push(epoch_loss / pairs.len().max(1) as f64);

        match validation {
            Some(v) => {
                let acc = pairwise_accuracy(&model, v)?.symmetric;
                validation_history.push(acc);
                if acc > best_val {
                    best_val = acc;
                    best = model.clone();
                    best_epoch = epoch;
                } else if epoch - best_epoch >= config.patience {
                    break;
                }
            }
            None => {
                best = model.clone();
                best_epoch = epoch;
            }
        }
    }
    Ok(TrainOutcome {
        model: best,
        epochs_run,
        best_epoch,
        loss_history,
        validation_history,
    })
}

/// Pairwise ranking accuracy.
///
/// `literal` sums `I(rank_ui > rank_uj) I(f_ui > f_uj)` over ordered pairs and
/// divides by `N m (m - 1)`, so a perfect model scores 0.5. `symmetric` is
/// `2 * literal`, the fraction of correctly ordered pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseAccuracy {
    pub literal: f64,
    pub symmetric: f64,
}

pub fn pairwise_accuracy(model: &ScoringModel, task: &RankingTask<'_>) -> Result<PairwiseAccuracy> {
    if task.rankings.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    if task.rankings.len() != task.user_features.len() {
        return Err(Error::BadDimensions("rankings and users differ in count".into()));
    }
    let m = task.item_features.len();
    let items: Vec<Vec<f64>> = task
        .item_features
        .iter()
        .map(|y| model.embed_item(y).vector)
        .collect();
    let mut agree = 0u64;
    for (x, r) in task.user_features.iter().zip(task.rankings) {
        if r.m() != m {
            return Err(Error::SizeMismatch { expected: m, actual: r.m() });
        }
        let u = model.embed_user(x).vector;
        let f: Vec<f64> = items.iter().map(|h| dot(&u, h)).collect();
        for i in 0..m {
            for j in 0..m {
                if r.rank_of(i) > r.rank_of(j) && f[i] > f[j] {
                    agree += 1;
                }
            }
        }
    }
    let literal = agree as f64 / (task.rankings.len() * m * (m - 1)) as f64;
    Ok(PairwiseAccuracy {
        literal,
        symmetric: 2.0 * literal,
    })
}
