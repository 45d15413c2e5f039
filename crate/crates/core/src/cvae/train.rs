use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{backward, Activation, Adam, CvaeModel, Example};
use crate::error::{Error, Result};
use crate::geometry::RasterMask;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReconLoss {
    /// Summed binary cross-entropy.
    #[default]
    Bce,
    /// Summed squared error on probabilities.
    Mse,
}

/// Training hyperparameters. The seed drives initialisation, shuffling and noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub width: usize,
    pub height: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    #[serde(default = "default_beta1")]
    pub adam_beta1: f64,
    #[serde(default = "default_beta2")]
    pub adam_beta2: f64,
    #[serde(default = "default_adam_eps")]
    pub adam_epsilon: f64,
    pub latent_dim: usize,
    pub encoder_hidden: Vec<usize>,
    pub decoder_hidden: Vec<usize>,
    #[serde(default = "default_kl_weight")]
    pub kl_weight: f64,
    pub seed: u64,
    #[serde(default)]
    pub recon_loss: ReconLoss,
    #[serde(default)]
    pub activation: Activation,
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_adam_eps() -> f64 {
    1e-8
}
fn default_kl_weight() -> f64 {
    1.0
}

impl TrainConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: TrainConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let positive_ints = [
            ("width", self.width),
            ("height", self.height),
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("latent_dim", self.latent_dim),
        ];
        for (name, v) in positive_ints {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.encoder_hidden.iter().chain(&self.decoder_hidden).any(|&w| w == 0) {
            return Err(Error::Config("hidden widths must be positive".into()));
        }
        let positive_reals = [
            ("learning_rate", self.learning_rate),
            ("adam_beta1", self.adam_beta1),
            ("adam_beta2", self.adam_beta2),
            ("adam_epsilon", self.adam_epsilon),
        ];
        for (name, v) in positive_reals {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.adam_beta1 >= 1.0 || self.adam_beta2 >= 1.0 {
            return Err(Error::Config("Adam betas must be below 1".into()));
        }
        if !(self.kl_weight >= 0.0 && self.kl_weight.is_finite()) {
            return Err(Error::Config("kl_weight must be >= 0".into()));
        }
        Ok(())
    }
}

/// Mean per-example losses over one epoch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub recon: f64,
    pub kl: f64,
    pub total: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutput<T> {
    pub model: CvaeModel<T>,
    pub trace: Vec<EpochLoss>,
}

impl<T: Scalar> TrainOutput<T> {
    pub fn best_total(&self) -> f64 {
        self.trace.iter().map(|e| e.total).fold(f64::INFINITY, f64::min)
    }
}

/// Order used for training: by time, ties broken by mask contents. Makes
/// the result independent of the order the caller passed the data in.
pub fn canonical_order<T: Scalar>(dataset: &[(RasterMask<T>, T)]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dataset.len()).collect();
    idx.sort_by(|&a, &b| {
        dataset[a]
            .1
            .partial_cmp(&dataset[b].1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| dataset[a].0.cells().cmp(dataset[b].0.cells()))
    });
    idx
}

/// Trains a model from scratch on `(mask, t_norm)` pairs.
pub fn train<T: Scalar>(dataset: &[(RasterMask<T>, T)], config: &TrainConfig) -> Result<TrainOutput<T>> {
    config.validate()?;
    if dataset.len() < 2 {
        return Err(Error::InvalidParameter("training needs at least 2 samples".into()));
    }
    for (mask, t) in dataset {
        if mask.dims() != (config.width, config.height) {
            return Err(Error::DimensionMismatch {
                left: mask.dims(),
                right: (config.width, config.height),
            });
        }
        if !(*t >= T::zero() && *t <= T::one()) {
            return Err(Error::InvalidParameter(format!("t_norm {t} outside [0, 1]")));
        }
    }

    let examples: Vec<Example<T>> = canonical_order(dataset)
        .into_iter()
        .map(|i| Example::from_mask(&dataset[i].0, dataset[i].1))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = CvaeModel::new(config, *dataset[0].0.transform(), &mut rng)?;
    let mut adam = Adam::new(
        T::lit(config.learning_rate),
        T::lit(config.adam_beta1),
        T::lit(config.adam_beta2),
        T::lit(config.adam_epsilon),
    );
    let beta = T::lit(config.kl_weight);
    let n = examples.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut trace = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let (mut recon, mut kl, mut total) = (0.0, 0.0, 0.0);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<Example<T>> = chunk.iter().map(|&i| examples[i].clone()).collect();
            let (grads, parts) = match backward(&model, &batch, &mut rng, beta, config.recon_loss) {
                Ok(v) => v,
                Err(Error::NonFiniteActivation { .. } | Error::NonFiniteGradient { .. }) => {
                    return Err(Error::Divergence { epoch, trace });
                }
                Err(e) => return Err(e),
            };
            let w = chunk.len() as f64;
            recon += parts.recon.as_f64() * w;
            kl += parts.kl.as_f64() * w;
            total += parts.total.as_f64() * w;
            adam.step(&mut model, &grads);
        }
        let nf = n as f64;
        let entry = EpochLoss {
            epoch,
            recon: recon / nf,
            kl: kl / nf,
            total: total / nf,
        };
        trace.push(entry);
        if !entry.total.is_finite() {
            return Err(Error::Divergence { epoch, trace });
        }
        if epoch == 1 || epoch % 100 == 0 {
            log::debug!(
                "epoch {epoch}: total {:.4} (recon {:.4}, kl {:.4})",
                entry.total,
                entry.recon,
                entry.kl
            );
        }
    }
    Ok(TrainOutput { model, trace })
}

/// CSV with header `epoch,recon,kl,total`.
pub fn write_loss_trace(path: &Path, trace: &[EpochLoss]) -> Result<()> {
    let mut out = String::from("epoch,recon,kl,total\n");
    for e in trace {
        out.push_str(&format!("{},{},{},{}\n", e.epoch, e.recon, e.kl, e.total));
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}
