//! Minibatch training with Adam.
//!
//! Determinism: initialization, the train/validation split, per-epoch
//! shuffles and reparameterization noise each come from their own ChaCha
//! stream of `seed`. Batch gradients are computed over fixed-size chunks
//! (possibly in parallel) and reduced in chunk order, so results do not
//! depend on the thread count.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{draw_noise, example_terms, ArchConfig, ElboGradients, ElboLoss, VaeModel};
use crate::corpus::{compute_standardization_of, Corpus, PoseFrame};
use crate::error::{Error, Result};
use crate::nn::{AdamConfig, AdamState};

const CHUNK: usize = 16;

const STREAM_INIT: u64 = 0;
const STREAM_SPLIT: u64 = 1;
const STREAM_SHUFFLE: u64 = 2;
const STREAM_NOISE: u64 = 3;
const STREAM_VALIDATION: u64 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// KL weight.
    pub beta: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub validation_fraction: f64,
    pub architecture: ArchConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            learning_rate: 1e-3,
            batch_size: 64,
            epochs: 30,
            seed: 0,
            validation_fraction: 0.1,
            architecture: ArchConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "beta must be ≥ 0, got {}",
                self.beta
            )));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be ≥ 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be ≥ 1".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::InvalidConfig(format!(
                "validation_fraction must be in [0, 1), got {}",
                self.validation_fraction
            )));
        }
        if self.architecture.latent_dim == 0 {
            return Err(Error::InvalidConfig("latent_dim must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub reconstruction: f64,
    pub kl: f64,
    pub total: f64,
}

impl From<ElboLoss> for LossRecord {
    fn from(l: ElboLoss) -> Self {
        Self {
            reconstruction: l.reconstruction,
            kl: l.kl,
            total: l.total,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train: LossRecord,
    pub validation: Option<LossRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were returned.
    pub best_epoch: Option<usize>,
    pub train_indices: Vec<usize>,
    pub validation_indices: Vec<usize>,
}

fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Sums of reconstruction and KL over `indices`, plus unscaled gradients
/// when requested. Chunks are reduced in order.
fn batch_terms(
    model: &VaeModel,
    data: &[Vec<f64>],
    indices: &[usize],
    noise: &[Vec<f64>],
    beta: f64,
    with_grads: bool,
) -> Result<(f64, f64, Option<ElboGradients>)> {
    let parts: Vec<Result<(f64, f64, Option<ElboGradients>)>> = indices
        .par_chunks(CHUNK)
        .zip(noise.par_chunks(CHUNK))
        .map(|(idx, eps)| {
            let mut grads = with_grads.then(|| ElboGradients::zeros_like(model));
            let (mut rec, mut kl) = (0.0, 0.0);
            for (&i, e) in idx.iter().zip(eps) {
                let (r, k) = example_terms(model, &data[i], e, beta, grads.as_mut())?;
                rec += r;
                kl += k;
            }
            Ok((rec, kl, grads))
        })
        .collect();
    let (mut rec, mut kl) = (0.0, 0.0);
    let mut total: Option<ElboGradients> = None;
    for part in parts {
        let (r, k, g) = part?;
        rec += r;
        kl += k;
        if let Some(g) = g {
            match total.as_mut() {
                Some(t) => t.add_assign(&g),
                None => total = Some(g),
            }
        }
    }
    Ok((rec, kl, total))
}

fn loss_record(rec: f64, kl: f64, n: usize, beta: f64) -> LossRecord {
    let n = n as f64;
    LossRecord {
        reconstruction: rec / n,
        kl: kl / n,
        total: (rec + beta * kl) / n,
    }
}

fn is_finite(r: &LossRecord) -> bool {
    r.total.is_finite() && r.reconstruction.is_finite() && r.kl.is_finite()
}

/// Trains a VAE on `corpus`; returns the parameters with the lowest
/// validation loss (the final ones when there is no validation split).
pub fn train(corpus: &Corpus, config: &TrainConfig) -> Result<(VaeModel, TrainHistory)> {
    config.validate()?;
    let n = corpus.len();
    if n == 0 {
        return Err(Error::EmptyCorpus);
    }
    if n < config.batch_size {
        return Err(Error::CorpusTooSmall {
            frames: n,
            needed: config.batch_size,
        });
    }
    let input_dim = corpus.dim().unwrap_or(0);
    if input_dim != config.architecture.input_dim {
        return Err(Error::DimensionMismatch {
            context: "training corpus",
            expected: config.architecture.input_dim,
            got: input_dim,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(config.seed, STREAM_SPLIT));
    let n_val = (n as f64 * config.validation_fraction).floor() as usize;
    let mut validation_indices = order[..n_val].to_vec();
    let mut train_indices = order[n_val..].to_vec();
    validation_indices.sort_unstable();
    train_indices.sort_unstable();
    if train_indices.is_empty() {
        return Err(Error::CorpusTooSmall {
            frames: n,
            needed: 1,
        });
    }

    let frames = corpus.frames();
    let standardization =
        compute_standardization_of(train_indices.iter().map(|&i| frames[i].values()))?;
    let data: Vec<Vec<f64>> = frames
        .iter()
        .map(|f: &PoseFrame| standardization.standardize(f.values()))
        .collect::<Result<_>>()?;

    let mut model = VaeModel::init(
        &config.architecture,
        standardization,
        &mut stream(config.seed, STREAM_INIT),
    )?;
    let mut params = model.params();
    let mut adam = AdamState::new(
        params.len(),
        AdamConfig {
            lr: config.learning_rate,
            ..AdamConfig::default()
        },
    );
    let mut shuffle_rng = stream(config.seed, STREAM_SHUFFLE);
    let mut noise_rng = stream(config.seed, STREAM_NOISE);
    let latent_dim = model.latent_dim();

    let mut history = TrainHistory {
        train_indices: train_indices.clone(),
        validation_indices: validation_indices.clone(),
        ..Default::default()
    };
    let mut best: Option<(f64, VaeModel)> = None;
    let mut epoch_order = train_indices.clone();

    for epoch in 0..config.epochs {
        epoch_order.shuffle(&mut shuffle_rng);
        let (mut rec_sum, mut kl_sum) = (0.0, 0.0);
        for batch in epoch_order.chunks(config.batch_size) {
            let noise = draw_noise(&mut noise_rng, batch.len(), latent_dim);
            let step = batch_terms(&model, &data, batch, &noise, config.beta, true);
            let (rec, kl, grads) = match step {
                Ok(v) => v,
                Err(Error::NonFinite(_)) => return Err(diverged(epoch, history)),
                Err(e) => return Err(e),
            };
            rec_sum += rec;
            kl_sum += kl;
            let mut grads = grads.expect("gradients requested");
            grads.scale(1.0 / batch.len() as f64);
            let flat = grads.flatten();
            if flat.iter().any(|g| !g.is_finite()) {
                return Err(diverged(epoch, history));
            }
            adam.step(&mut params, &flat)?;
            model = match model.with_params(&params) {
                Ok(m) => m,
                Err(Error::NonFinite(_)) => return Err(diverged(epoch, history)),
                Err(e) => return Err(e),
            };
        }
        let train = loss_record(rec_sum, kl_sum, epoch_order.len(), config.beta);

        let validation = if validation_indices.is_empty() {
            None
        } else {
            let mut rng = stream(config.seed, STREAM_VALIDATION);
            let noise = draw_noise(&mut rng, validation_indices.len(), latent_dim);
            match batch_terms(
                &model,
                &data,
                &validation_indices,
                &noise,
                config.beta,
                false,
            ) {
                Ok((rec, kl, _)) => {
                    Some(loss_record(rec, kl, validation_indices.len(), config.beta))
                }
                Err(Error::NonFinite(_)) => return Err(diverged(epoch, history)),
                Err(e) => return Err(e),
            }
        };

        history.epochs.push(EpochRecord {
            epoch,
            train,
            validation,
        });
        if !is_finite(&train) || validation.as_ref().is_some_and(|v| !is_finite(v)) {
            return Err(diverged(epoch, history));
        }
        log::info!(
            "epoch {epoch}: train total {:.4} (rec {:.4}, kl {:.4}){}",
            train.total,
            train.reconstruction,
            train.kl,
            validation
                .map(|v| format!(", validation total {:.4}", v.total))
                .unwrap_or_default()
        );

        let score = validation.map_or(train.total, |v| v.total);
        if validation.is_none() || best.as_ref().is_none_or(|(b, _)| score < *b) {
            best = Some((score, model.clone()));
            history.best_epoch = Some(epoch);
        }
    }

    let model = best.map_or(model, |(_, m)| m);
    Ok((model, history))
}

fn diverged(epoch: usize, history: TrainHistory) -> Error {
    Error::Diverged {
        epoch,
        history: Box::new(history),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, SynthConfig};
    use crate::nn::Activation;

    fn small_config() -> TrainConfig {
        TrainConfig {
            epochs: 3,
            batch_size: 32,
            architecture: ArchConfig {
                hidden: vec![16],
                latent_dim: 4,
                hidden_activation: Activation::Relu,
                ..ArchConfig::default()
            },
            ..TrainConfig::default()
        }
    }

    fn corpus(seconds: f64) -> Corpus {
        generate_synthetic(&SynthConfig {
            duration_s: seconds,
            ..SynthConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn training_is_deterministic() {
        let c = corpus(20.0);
        let (a, ha) = train(&c, &small_config()).unwrap();
        let (b, hb) = train(&c, &small_config()).unwrap();
        assert_eq!(ha, hb);
        assert_eq!(a.params(), b.params());
        assert_eq!(ha.epochs.len(), 3);
        assert_eq!(
            ha.train_indices.len() + ha.validation_indices.len(),
            c.len()
        );
    }

    #[test]
    fn corpus_smaller_than_batch_is_rejected() {
        let c = corpus(1.0);
        let cfg = TrainConfig {
            batch_size: 64,
            ..small_config()
        };
        assert!(matches!(
            train(&c, &cfg),
            Err(Error::CorpusTooSmall { frames: 30, .. })
        ));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let c = corpus(5.0);
        for cfg in [
            TrainConfig {
                beta: -1.0,
                ..small_config()
            },
            TrainConfig {
                batch_size: 0,
                ..small_config()
            },
            TrainConfig {
                validation_fraction: 1.0,
                ..small_config()
            },
            TrainConfig {
                epochs: 0,
                ..small_config()
            },
        ] {
            assert!(matches!(train(&c, &cfg), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn huge_learning_rate_diverges_with_history() {
        let c = corpus(20.0);
        let cfg = TrainConfig {
            learning_rate: 1e200,
            epochs: 5,
            ..small_config()
        };
        match train(&c, &cfg) {
            Err(Error::Diverged { history, .. }) => {
                assert_eq!(
                    history.train_indices.len() + history.validation_indices.len(),
                    c.len()
                )
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn no_validation_split_returns_last_epoch() {
        let c = corpus(10.0);
        let cfg = TrainConfig {
            validation_fraction: 0.0,
            ..small_config()
        };
        let (_, h) = train(&c, &cfg).unwrap();
        assert!(h.validation_indices.is_empty());
        assert!(h.epochs.iter().all(|e| e.validation.is_none()));
        assert_eq!(h.best_epoch, Some(2));
    }
}
