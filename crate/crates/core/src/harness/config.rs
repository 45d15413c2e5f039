use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::synth::SynthSpec;
use crate::cvae::{Activation, ReconLoss, TrainConfig};
use crate::error::{Error, Result};
use crate::metrics::HdMode;

pub const CONFIG_VERSION: u32 = 1;

/// Experiment configuration, read from TOML. Relative paths resolve against
/// the directory of the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    pub data: DataConfig,
    #[serde(default)]
    pub raster: RasterConfig,
    pub compression: CompressionConfig,
    #[serde(default = "default_interpolators")]
    pub interpolators: Vec<Method>,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub cvae: CvaeOptions,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub manifest: Option<PathBuf>,
    pub synthetic: Option<SynthSpec>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RasterConfig {
    /// Defaults to the synthetic field size.
    pub width: Option<usize>,
    pub height: Option<usize>,
    #[serde(default)]
    pub transform: TransformSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransformSpec {
    Identity,
    /// Uniform scale fitted to the bounds of every snapshot.
    Fit {
        margin: f64,
    },
    Explicit {
        scale_x: f64,
        scale_y: f64,
        offset_x: f64,
        offset_y: f64,
    },
}

impl Default for TransformSpec {
    fn default() -> Self {
        TransformSpec::Fit { margin: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum CompressionConfig {
    Periodic {
        d: usize,
        #[serde(default = "yes")]
        append_last: bool,
        /// Index of the first kept snapshot.
        #[serde(default)]
        offset: usize,
    },
    Distance {
        alpha: f64,
        max_len: Option<usize>,
        #[serde(default = "yes")]
        append_last: bool,
    },
}

fn yes() -> bool {
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Shape,
    Cvae,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Shape => "shape",
            Method::Cvae => "cvae",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shape" => Ok(Method::Shape),
            "cvae" => Ok(Method::Cvae),
            _ => Err(Error::InvalidParameter(format!("unknown interpolator `{s}`"))),
        }
    }
}

fn default_interpolators() -> Vec<Method> {
    vec![Method::Shape, Method::Cvae]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    #[serde(default)]
    pub hd_mode: HdMode,
    /// Multiplier applied to pixel-space Hausdorff distances.
    #[serde(default = "one")]
    pub hd_scale: f64,
    #[serde(default = "one_usize")]
    pub tc_a: usize,
    #[serde(default = "ten")]
    pub tc_r: usize,
    #[serde(default = "five")]
    pub tc_count: usize,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn ten() -> usize {
    10
}
fn five() -> usize {
    5
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            hd_mode: HdMode::default(),
            hd_scale: 1.0,
            tc_a: 1,
            tc_r: 10,
            tc_count: 5,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatentChoice {
    #[default]
    PriorMean,
    PriorSample,
}

/// C-VAE hyperparameters; grid size comes from the raster section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvaeOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub latent_dim: usize,
    pub encoder_hidden: Vec<usize>,
    pub decoder_hidden: Vec<usize>,
    pub kl_weight: f64,
    #[serde(default)]
    pub recon_loss: ReconLoss,
    #[serde(default)]
    pub activation: Activation,
    /// Defaults to the run seed.
    pub seed: Option<u64>,
    #[serde(default)]
    pub latent: LatentChoice,
}

impl Default for CvaeOptions {
    fn default() -> Self {
        CvaeOptions {
            epochs: 400,
            batch_size: 4,
            learning_rate: 2e-3,
            latent_dim: 2,
            encoder_hidden: vec![64],
            decoder_hidden: vec![64],
            kl_weight: 1.0,
            recon_loss: ReconLoss::Bce,
            activation: Activation::Tanh,
            seed: None,
            latent: LatentChoice::PriorMean,
        }
    }
}

impl CvaeOptions {
    pub fn train_config(&self, width: usize, height: usize, run_seed: u64) -> TrainConfig {
        TrainConfig {
            width,
            height,
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            latent_dim: self.latent_dim,
            encoder_hidden: self.encoder_hidden.clone(),
            decoder_hidden: self.decoder_hidden.clone(),
            kl_weight: self.kl_weight,
            seed: self.seed.unwrap_or(run_seed),
            recon_loss: self.recon_loss,
            activation: self.activation,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses the file and resolves relative paths against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig = toml::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        if let Some(m) = cfg.data.manifest.as_mut() {
            if m.is_relative() {
                *m = base.join(&*m);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        match (&self.data.manifest, &self.data.synthetic) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(Error::Config(
                    "data needs exactly one of `manifest` or `synthetic`".into(),
                ))
            }
            (Some(m), None) if !m.is_file() => {
                return Err(Error::Config(format!("manifest {} does not exist", m.display())))
            }
            (Some(_), None) if self.raster.width.is_none() || self.raster.height.is_none() => {
                return Err(Error::Config(
                    "raster width and height are required with a manifest".into(),
                ))
            }
            _ => {}
        }
        if self.raster.width == Some(0) || self.raster.height == Some(0) {
            return Err(Error::Config("raster dims must be positive".into()));
        }
        match &self.compression {
            CompressionConfig::Periodic { d: 0, .. } => return Err(Error::Config("compression.d must be >= 1".into())),
            CompressionConfig::Distance { alpha, max_len, .. } => {
                if !(*alpha >= 0.0 && alpha.is_finite()) {
                    return Err(Error::Config("compression.alpha must be >= 0".into()));
                }
                if *max_len == Some(0) {
                    return Err(Error::Config("compression.max_len must be >= 1".into()));
                }
            }
            _ => {}
        }
        if self.interpolators.is_empty() {
            return Err(Error::Config("no interpolators selected".into()));
        }
        let m = &self.metrics;
        if !(m.hd_scale > 0.0 && m.hd_scale.is_finite()) || m.tc_a == 0 || m.tc_r == 0 || m.tc_count == 0 {
            return Err(Error::Config("metric options must be positive".into()));
        }
        if self.interpolators.contains(&Method::Cvae) {
            self.cvae.train_config(1, 1, self.seed).validate()?;
        }
        Ok(())
    }

    /// Grid dimensions from the raster section, falling back to the synthetic field.
    pub fn dims(&self) -> (usize, usize) {
        let synth = self.data.synthetic.as_ref();
        (
            self.raster.width.or(synth.map(|s| s.width)).unwrap_or(0),
            self.raster.height.or(synth.map(|s| s.height)).unwrap_or(0),
        )
    }
}
