//! Conditional variational autoencoder over flattened raster masks.
//!
//! The encoder sees the mask plus the normalized time `y` and predicts the
//! mean and log-variance of a Gaussian posterior over the latent code. The
//! decoder sees a latent code plus `y` and predicts per-pixel Bernoulli
//! probabilities. Training minimizes reconstruction loss plus `beta` times
//! the analytic KL divergence to a standard normal prior.

mod adam;
mod network;
mod train;

pub use adam::Adam;
pub use network::{Activation, Dense, Mlp};
pub use train::{canonical_order, train, write_loss_trace, EpochLoss, ReconLoss, TrainConfig, TrainOutput};

use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Affine, RasterMask};
use crate::scalar::Scalar;

/// Probabilities are kept inside `[PROB_CLAMP, 1 - PROB_CLAMP]`.
pub const PROB_CLAMP: f64 = 1e-7;

pub const CHECKPOINT_FORMAT: &str = "movreg-cvae";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvaeModel<T> {
    pub format: String,
    pub version: u32,
    pub width: usize,
    pub height: usize,
    pub latent_dim: usize,
    /// Raster geometry of the training masks; generated masks reuse it.
    pub transform: Affine<T>,
    /// `(D + 1) -> hidden... -> 2 * latent_dim` (means, then log-variances).
    pub encoder: Mlp<T>,
    /// `(latent_dim + 1) -> hidden... -> D` logits.
    pub decoder: Mlp<T>,
    pub config: TrainConfig,
}

impl<T: Scalar> CvaeModel<T> {
    /// Randomly initialised model for `config`; draws from `rng`.
    pub fn new(config: &TrainConfig, transform: Affine<T>, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let pixels = config.width * config.height;
        let mut enc_sizes = vec![pixels + 1];
        enc_sizes.extend(&config.encoder_hidden);
        enc_sizes.push(2 * config.latent_dim);
        let mut dec_sizes = vec![config.latent_dim + 1];
        dec_sizes.extend(&config.decoder_hidden);
        dec_sizes.push(pixels);
        Ok(CvaeModel {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            width: config.width,
            height: config.height,
            latent_dim: config.latent_dim,
            transform,
            encoder: Mlp::new(&enc_sizes, config.activation, rng),
            decoder: Mlp::new(&dec_sizes, config.activation, rng),
            config: config.clone(),
        })
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn parameter_count(&self) -> usize {
        self.encoder.parameter_count() + self.decoder.parameter_count()
    }

    /// Checks that every shape agrees and every parameter is finite.
    pub fn check(&self) -> Result<()> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::InvalidModel(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        self.encoder.check_shapes("encoder")?;
        self.decoder.check_shapes("decoder")?;
        let d = self.latent_dim;
        let ok = d > 0
            && self.encoder.input_len() == self.pixels() + 1
            && self.encoder.output_len() == 2 * d
            && self.decoder.input_len() == d + 1
            && self.decoder.output_len() == self.pixels();
        if !ok {
            return Err(Error::InvalidModel("encoder/decoder shapes disagree with dims".into()));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: Self = serde_json::from_str(&text)?;
        model.check()?;
        Ok(model)
    }
}

/// Encoder pass: returns `(mu, logvar)`.
pub fn encode<T: Scalar>(model: &CvaeModel<T>, x: &[T], y: T) -> Result<(Vec<T>, Vec<T>)> {
    if x.len() != model.pixels() {
        return Err(Error::ShapeMismatch(format!(
            "expected {} pixels, got {}",
            model.pixels(),
            x.len()
        )));
    }
    let mut input = x.to_vec();
    input.push(y);
    let mut out = model.encoder.forward(&input, "encoder")?;
    let logvar = out.split_off(model.latent_dim);
    Ok((out, logvar))
}

/// Decoder pass: per-pixel probabilities, clamped away from 0 and 1.
pub fn decode<T: Scalar>(model: &CvaeModel<T>, z: &[T], y: T) -> Result<Vec<T>> {
    if z.len() != model.latent_dim {
        return Err(Error::ShapeMismatch(format!(
            "expected latent of length {}, got {}",
            model.latent_dim,
            z.len()
        )));
    }
    let mut input = z.to_vec();
    input.push(y);
    let logits = model.decoder.forward(&input, "decoder")?;
    Ok(logits.into_iter().map(|l| clamp_prob(sigmoid(l))).collect())
}

fn sigmoid<T: Scalar>(v: T) -> T {
    T::one() / (T::one() + (-v).exp())
}

fn clamp_prob<T: Scalar>(p: T) -> T {
    let eps = T::lit(PROB_CLAMP);
    p.max(eps).min(T::one() - eps)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatentSample<T> {
    pub mu: Vec<T>,
    pub logvar: Vec<T>,
    pub z: Vec<T>,
    pub epsilon: Vec<T>,
}

impl<T: Scalar> LatentSample<T> {
    /// `z = mu + exp(logvar / 2) * epsilon`.
    pub fn with_noise(mu: Vec<T>, logvar: Vec<T>, epsilon: Vec<T>) -> Self {
        let z = mu
            .iter()
            .zip(&logvar)
            .zip(&epsilon)
            .map(|((&m, &lv), &e)| m + (lv * T::half()).exp() * e)
            .collect();
        LatentSample { mu, logvar, z, epsilon }
    }
}

pub fn standard_normal<T: Scalar>(rng: &mut impl Rng, n: usize) -> Vec<T> {
    (0..n).map(|_| T::lit(rng.sample::<f64, _>(StandardNormal))).collect()
}

/// Draws `epsilon ~ N(0, I)` and applies the reparameterization.
pub fn reparameterize<T: Scalar>(mu: &[T], logvar: &[T], rng: &mut impl Rng) -> LatentSample<T> {
    let eps = standard_normal(rng, mu.len());
    LatentSample::with_noise(mu.to_vec(), logvar.to_vec(), eps)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossParts<T> {
    pub recon: T,
    pub kl: T,
    pub total: T,
}

/// `-1/2 * sum(1 + logvar - mu^2 - exp(logvar))`.
pub fn kl_divergence<T: Scalar>(mu: &[T], logvar: &[T]) -> T {
    let s: T = mu
        .iter()
        .zip(logvar)
        .map(|(&m, &lv)| T::one() + lv - m * m - lv.exp())
        .sum();
    -T::half() * s
}

/// Reconstruction (`kind`) plus `beta` times KL.
pub fn loss<T: Scalar>(x: &[T], probs: &[T], mu: &[T], logvar: &[T], beta: T, kind: ReconLoss) -> LossParts<T> {
    let recon: T = x
        .iter()
        .zip(probs)
        .map(|(&xi, &p)| {
            let p = clamp_prob(p);
            match kind {
                ReconLoss::Bce => -(xi * p.ln() + (T::one() - xi) * (T::one() - p).ln()),
                ReconLoss::Mse => (p - xi) * (p - xi),
            }
        })
        .sum();
    let kl = kl_divergence(mu, logvar);
    LossParts {
        recon,
        kl,
        total: recon + beta * kl,
    }
}

/// Parameter gradients, shaped like the model's networks.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub encoder: Mlp<T>,
    pub decoder: Mlp<T>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(model: &CvaeModel<T>) -> Self {
        Gradients {
            encoder: model.encoder.zeros_like(),
            decoder: model.decoder.zeros_like(),
        }
    }

    /// Flattened view in the same order as the model's parameters.
    pub fn params(&self) -> impl Iterator<Item = &[T]> {
        self.encoder.params().chain(self.decoder.params())
    }

    fn check_finite(&self) -> Result<()> {
        let names = self
            .encoder
            .param_names("encoder")
            .into_iter()
            .chain(self.decoder.param_names("decoder"));
        for (name, values) in names.zip(self.params()) {
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteGradient { param: name });
            }
        }
        Ok(())
    }
}

/// A training example: flattened mask and its normalized time.
#[derive(Clone, Debug, PartialEq)]
pub struct Example<T> {
    pub x: Vec<T>,
    pub y: T,
}

impl<T: Scalar> Example<T> {
    pub fn from_mask(mask: &RasterMask<T>, t_norm: T) -> Self {
        Example {
            x: mask
                .cells()
                .iter()
                .map(|&c| if c { T::one() } else { T::zero() })
                .collect(),
            y: t_norm,
        }
    }
}

/// Batch loss (mean over examples) for fixed noise, without gradients.
pub fn batch_loss_with_noise<T: Scalar>(
    model: &CvaeModel<T>,
    batch: &[Example<T>],
    noise: &[Vec<T>],
    beta: T,
    kind: ReconLoss,
) -> Result<LossParts<T>> {
    let mut sum = LossParts {
        recon: T::zero(),
        kl: T::zero(),
        total: T::zero(),
    };
    for (ex, eps) in batch.iter().zip(noise) {
        let (mu, logvar) = encode(model, &ex.x, ex.y)?;
        let s = LatentSample::with_noise(mu, logvar, eps.clone());
        let probs = decode(model, &s.z, ex.y)?;
        let l = loss(&ex.x, &probs, &s.mu, &s.logvar, beta, kind);
        sum.recon = sum.recon + l.recon;
        sum.kl = sum.kl + l.kl;
        sum.total = sum.total + l.total;
    }
    let n = T::from_usize_lossy(batch.len());
    Ok(LossParts {
        recon: sum.recon / n,
        kl: sum.kl / n,
        total: sum.total / n,
    })
}

/// Exact gradients of the mean batch loss with the noise held fixed.
pub fn backward_with_noise<T: Scalar>(
    model: &CvaeModel<T>,
    batch: &[Example<T>],
    noise: &[Vec<T>],
    beta: T,
    kind: ReconLoss,
) -> Result<(Gradients<T>, LossParts<T>)> {
    if batch.is_empty() || noise.len() != batch.len() {
        return Err(Error::ShapeMismatch(
            "one noise vector per non-empty batch entry".into(),
        ));
    }
    let mut grads = Gradients::zeros_like(model);
    let scale = T::one() / T::from_usize_lossy(batch.len());
    let d = model.latent_dim;
    let eps_clamp = T::lit(PROB_CLAMP);
    let mut sum = LossParts {
        recon: T::zero(),
        kl: T::zero(),
        total: T::zero(),
    };

    for (ex, eps) in batch.iter().zip(noise) {
        if ex.x.len() != model.pixels() || eps.len() != d {
            return Err(Error::ShapeMismatch("example or noise has the wrong length".into()));
        }
        let mut enc_in = ex.x.clone();
        enc_in.push(ex.y);
        let (enc_out, enc_trace) = model.encoder.forward_trace(&enc_in, "encoder")?;
        let (mu, logvar) = enc_out.split_at(d);
        let sample = LatentSample::with_noise(mu.to_vec(), logvar.to_vec(), eps.clone());

        let mut dec_in = sample.z.clone();
        dec_in.push(ex.y);
        let (logits, dec_trace) = model.decoder.forward_trace(&dec_in, "decoder")?;
        let raw: Vec<T> = logits.iter().map(|&l| sigmoid(l)).collect();
        let probs: Vec<T> = raw.iter().map(|&p| clamp_prob(p)).collect();
        let l = loss(&ex.x, &probs, mu, logvar, beta, kind);
        sum.recon = sum.recon + l.recon;
        sum.kl = sum.kl + l.kl;
        sum.total = sum.total + l.total;

        // dL/dlogit; zero where the clamp is active.
        let grad_logits: Vec<T> = raw
            .iter()
            .zip(&ex.x)
            .map(|(&p, &xi)| {
                if p <= eps_clamp || p >= T::one() - eps_clamp {
                    return T::zero();
                }
                let g = match kind {
                    ReconLoss::Bce => p - xi,
                    ReconLoss::Mse => T::two() * (p - xi) * p * (T::one() - p),
                };
                g * scale
            })
            .collect();
        let grad_dec_in = model.decoder.backward(&dec_trace, &grad_logits, &mut grads.decoder);

        let mut grad_enc_out = vec![T::zero(); 2 * d];
        for j in 0..d {
            let gz = grad_dec_in[j];
            let sigma = (logvar[j] * T::half()).exp();
            grad_enc_out[j] = gz + scale * beta * mu[j];
            grad_enc_out[d + j] =
                gz * T::half() * sigma * eps[j] + scale * beta * T::half() * (logvar[j].exp() - T::one());
        }
        model.encoder.backward(&enc_trace, &grad_enc_out, &mut grads.encoder);
    }
    grads.check_finite()?;
    Ok((
        grads,
        LossParts {
            recon: sum.recon * scale,
            kl: sum.kl * scale,
            total: sum.total * scale,
        },
    ))
}

/// Draws one noise vector per example from `rng`, then runs [`backward_with_noise`].
pub fn backward<T: Scalar>(
    model: &CvaeModel<T>,
    batch: &[Example<T>],
    rng: &mut impl Rng,
    beta: T,
    kind: ReconLoss,
) -> Result<(Gradients<T>, LossParts<T>)> {
    let noise: Vec<Vec<T>> = batch.iter().map(|_| standard_normal(rng, model.latent_dim)).collect();
    backward_with_noise(model, batch, &noise, beta, kind)
}

/// How the latent code is chosen at generation time.
#[derive(Clone, Copy, Debug)]
pub enum GenerateMode<'a, T> {
    /// `z = 0`, the prior mean.
    PriorMean,
    /// `z = mu` from encoding a support mask at its own time.
    Posterior { support: &'a RasterMask<T>, t_norm: T },
    /// `z ~ N(0, I)` from a seeded generator.
    PriorSample { seed: u64 },
}

/// Decoded probabilities at `t_norm`.
pub fn generate_probabilities<T: Scalar>(model: &CvaeModel<T>, t_norm: T, mode: GenerateMode<'_, T>) -> Result<Vec<T>> {
    model.check()?;
    let z = match mode {
        GenerateMode::PriorMean => vec![T::zero(); model.latent_dim],
        GenerateMode::Posterior { support, t_norm: ts } => {
            if support.dims() != (model.width, model.height) {
                return Err(Error::DimensionMismatch {
                    left: support.dims(),
                    right: (model.width, model.height),
                });
            }
            encode(model, &Example::from_mask(support, ts).x, ts)?.0
        }
        GenerateMode::PriorSample { seed } => standard_normal(&mut ChaCha8Rng::seed_from_u64(seed), model.latent_dim),
    };
    decode(model, &z, t_norm)
}

/// Generated mask: pixel foreground iff its probability is `>= 0.5`.
pub fn generate<T: Scalar>(model: &CvaeModel<T>, t_norm: T, mode: GenerateMode<'_, T>) -> Result<RasterMask<T>> {
    let probs = generate_probabilities(model, t_norm, mode)?;
    let cells = probs.iter().map(|&p| p >= T::half()).collect();
    RasterMask::from_cells(model.width, model.height, cells, model.transform)
}
