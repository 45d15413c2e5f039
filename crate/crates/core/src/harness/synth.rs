//! Synthetic moving-region sequences with known ground truth.
//!
//! Coordinates are in pixel units of a `width x height` field, so the
//! identity transform rasterizes them directly.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::manifest::with_t_norm;
use crate::error::{Error, Result};
use crate::geometry::{Point2D, Region, Ring, Snapshot};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Concentric disk with linearly growing radius.
    Disk,
    /// Lobed blob that translates for the first half, then grows in place.
    Blob,
    /// Star-shaped region whose per-vertex radius grows by random increments.
    Noisy,
}

impl std::str::FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "disk" => Ok(Scenario::Disk),
            "blob" => Ok(Scenario::Blob),
            "noisy" => Ok(Scenario::Noisy),
            _ => Err(Error::InvalidParameter(format!("unknown scenario `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub scenario: Scenario,
    pub frames: usize,
    #[serde(default = "default_width")]
    pub width: usize,
    #[serde(default = "default_height")]
    pub height: usize,
    #[serde(default = "default_vertices")]
    pub vertices: usize,
    #[serde(default)]
    pub seed: u64,
    /// Initial and final radius in pixels; scenario defaults when absent.
    #[serde(default)]
    pub start_radius: Option<f64>,
    #[serde(default)]
    pub end_radius: Option<f64>,
}

fn default_width() -> usize {
    64
}
fn default_height() -> usize {
    32
}
fn default_vertices() -> usize {
    96
}

impl SynthSpec {
    pub fn new(scenario: Scenario, frames: usize) -> Self {
        SynthSpec {
            scenario,
            frames,
            width: default_width(),
            height: default_height(),
            vertices: default_vertices(),
            seed: 0,
            start_radius: None,
            end_radius: None,
        }
    }
}

/// Frames `0..frames` of the requested scenario.
pub fn generate<T: Scalar>(spec: &SynthSpec) -> Result<Vec<Snapshot<T>>> {
    if spec.frames < 2 {
        return Err(Error::InvalidParameter("need at least 2 frames".into()));
    }
    if spec.width < 8 || spec.height < 8 {
        return Err(Error::InvalidParameter("field must be at least 8x8".into()));
    }
    if spec.vertices < 8 {
        return Err(Error::InvalidParameter("need at least 8 vertices".into()));
    }
    let radius_ok = |r: Option<f64>| r.is_none_or(|r| r > 0.0 && r.is_finite());
    if !radius_ok(spec.start_radius) || !radius_ok(spec.end_radius) {
        return Err(Error::InvalidParameter("radii must be positive".into()));
    }
    let (w, h) = (spec.width as f64, spec.height as f64);
    let short = w.min(h);
    let (cx, cy) = (w / 2.0, h / 2.0);
    let last = (spec.frames - 1) as f64;
    let n = spec.vertices;
    let angles: Vec<f64> = (0..n).map(|k| std::f64::consts::TAU * k as f64 / n as f64).collect();

    let range = |lo: f64, hi: f64| {
        (
            spec.start_radius.unwrap_or(lo * short),
            spec.end_radius.unwrap_or(hi * short),
        )
    };
    let radii: Vec<Vec<f64>> = match spec.scenario {
        Scenario::Disk => {
            let (r0, r1) = range(0.25, 0.47);
            (0..spec.frames)
                .map(|f| vec![r0 + (r1 - r0) * f as f64 / last; n])
                .collect()
        }
        Scenario::Blob => {
            let (r0, r1) = range(0.2, 0.4);
            (0..spec.frames)
                .map(|f| {
                    let grow = (2.0 * f as f64 / last - 1.0).max(0.0);
                    let r = r0 + (r1 - r0) * grow;
                    angles.iter().map(|a| r * (1.0 + 0.15 * (3.0 * a).sin())).collect()
                })
                .collect()
        }
        Scenario::Noisy => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let (r0, r1) = range(0.15, 0.42);
            let step = (r1 - r0) / last;
            let mut current = vec![r0; n];
            let mut out = Vec::with_capacity(spec.frames);
            for _ in 0..spec.frames {
                out.push(current.clone());
                for r in current.iter_mut() {
                    *r += step * rng.random_range(0.0..2.0);
                }
            }
            out
        }
    };

    let frames = radii
        .into_iter()
        .enumerate()
        .map(|(f, rs)| {
            let shift = match spec.scenario {
                Scenario::Blob => {
                    let travel = 0.5 * (w - 0.85 * short);
                    let progress = (2.0 * f as f64 / last).min(1.0);
                    travel * (progress - 1.0)
                }
                _ => 0.0,
            };
            let pts: Vec<Point2D<T>> = angles
                .iter()
                .zip(&rs)
                .map(|(a, r)| Point2D::new(T::lit(cx + shift + r * a.cos()), T::lit(cy + r * a.sin())))
                .collect();
            Ok((f as u64, Region::new(Ring::from_open(pts, 0)?, vec![])))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(with_t_norm(frames))
}
