//! End-to-end runs: ingest, compress, interpolate, score, report.

mod config;
pub mod manifest;
pub mod synth;

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{
    CompressionConfig, CvaeOptions, DataConfig, LatentChoice, Method, MetricsConfig, RasterConfig, RunConfig,
    TransformSpec, CONFIG_VERSION,
};
pub use manifest::{ingest, ingest_dir, write_manifest};
pub use synth::{Scenario, SynthSpec};

use crate::cvae::{generate, train, write_loss_trace, CvaeModel, GenerateMode};
use crate::error::{Error, Result};
use crate::geometry::{vectorize_with_warnings, Affine, Point2D, RasterGrid, RasterMask, Region, Snapshot};
use crate::interp::ShapeInterpolator;
use crate::metrics::{
    jaccard_index, mask_hausdorff, tc_sweep_detailed, vertex_hausdorff, FrameScore, HdMode, SimilarityReport, TcReport,
};
use crate::sampling::{distance_based_indices, periodic_indices, CompressionResult, SamplingMethod};
use crate::scalar::Scalar;

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const REPORT_SCHEMA: &str = include_str!("../../schema/report.schema.json");

/// One generated frame: the emitted region and its rasterization.
#[derive(Clone, Debug)]
pub struct Prediction<T> {
    pub frame: u64,
    pub region: Option<Region<T>>,
    pub mask: RasterMask<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompressionSummary {
    pub method: SamplingMethod,
    pub kept_frames: Vec<u64>,
    pub dropped_count: usize,
    pub forced_last: bool,
    pub pairwise_distances: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub total_frames: usize,
    pub support_frames: usize,
    /// Frames scored against ground truth.
    pub evaluated_frames: usize,
    /// Frames outside the support range, which cannot be interpolated.
    pub out_of_range_frames: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub epochs: usize,
    pub parameters: usize,
    pub first_total: f64,
    pub final_total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolatorReport<T> {
    pub method: Method,
    pub similarity: SimilarityReport<T>,
    pub tc: TcReport<T>,
    /// Generated frames with no foreground.
    pub empty_frames: usize,
    pub training: Option<TrainingSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaRow<T> {
    pub frame: u64,
    pub truth: T,
    pub shape: Option<T>,
    pub cvae: Option<T>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub ingest_ms: f64,
    pub compress_ms: f64,
    pub train_ms: f64,
    pub interpolate_ms: f64,
    pub score_ms: f64,
    pub total_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridInfo<T> {
    pub width: usize,
    pub height: usize,
    pub transform: Affine<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport<T> {
    pub schema_version: u32,
    pub config: RunConfig,
    pub grid: GridInfo<T>,
    pub compression: CompressionSummary,
    pub evaluation: EvaluationSummary,
    pub interpolators: Vec<InterpolatorReport<T>>,
    /// Temporal consistency of the ground-truth sequence itself.
    pub truth_tc: Option<TcReport<T>>,
    pub area_curve: Vec<AreaRow<T>>,
    pub timings: Timings,
}

impl<T: Scalar> RunReport<T> {
    pub fn interpolator(&self, method: Method) -> Option<&InterpolatorReport<T>> {
        self.interpolators.iter().find(|r| r.method == method)
    }
}

/// Loads the snapshot sequence named by the config.
pub fn load_data<T: Scalar>(config: &RunConfig) -> Result<Vec<Snapshot<T>>> {
    match (&config.data.manifest, &config.data.synthetic) {
        (Some(path), _) => ingest(path),
        (None, Some(spec)) => synth::generate(spec),
        (None, None) => Err(Error::Config("no data source".into())),
    }
}

/// Resolves the raster grid for a sequence.
pub fn resolve_grid<T: Scalar>(
    width: usize,
    height: usize,
    spec: &TransformSpec,
    snapshots: &[Snapshot<T>],
) -> Result<RasterGrid<T>> {
    let transform = match *spec {
        TransformSpec::Identity => Affine::identity(),
        TransformSpec::Explicit {
            scale_x,
            scale_y,
            offset_x,
            offset_y,
        } => Affine::new(T::lit(scale_x), T::lit(scale_y), T::lit(offset_x), T::lit(offset_y))?,
        TransformSpec::Fit { margin } => {
            let (mut lo, mut hi) = (
                Point2D::new(T::infinity(), T::infinity()),
                Point2D::new(T::neg_infinity(), T::neg_infinity()),
            );
            for s in snapshots {
                let (a, b) = s.region.bounds();
                lo = Point2D::new(lo.x.min(a.x), lo.y.min(a.y));
                hi = Point2D::new(hi.x.max(b.x), hi.y.max(b.y));
            }
            if snapshots.is_empty() {
                return Err(Error::InvalidParameter("cannot fit a transform to no snapshots".into()));
            }
            Affine::fit(lo, hi, width, height, T::lit(margin))?
        }
    };
    RasterGrid::new(width, height, transform)
}

/// Applies the configured sampling rule to a sequence and its masks.
pub fn compress<T: Scalar>(
    seq: &[Snapshot<T>],
    masks: &[RasterMask<T>],
    config: &CompressionConfig,
) -> Result<CompressionResult<T>> {
    if seq.len() != masks.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} snapshots vs {} masks",
            seq.len(),
            masks.len()
        )));
    }
    let (idx, dists, forced_last, method) = match *config {
        CompressionConfig::Periodic { d, append_last, offset } => {
            if offset >= seq.len() {
                return Err(Error::InvalidParameter(format!(
                    "offset {offset} beyond sequence of {}",
                    seq.len()
                )));
            }
            let idx: Vec<usize> = periodic_indices(seq.len() - offset, d, append_last)?
                .into_iter()
                .map(|i| i + offset)
                .collect();
            let forced = append_last && !(seq.len() - 1 - offset).is_multiple_of(d);
            (idx, Vec::new(), forced, SamplingMethod::Periodic { d })
        }
        CompressionConfig::Distance {
            alpha,
            max_len,
            append_last,
        } => {
            let (idx, dists, forced) = distance_based_indices(masks, T::lit(alpha), max_len, append_last)?;
            let method = SamplingMethod::Distance {
                alpha,
                max_len,
                metric: "jaccard".into(),
            };
            (idx, dists, forced, method)
        }
    };
    Ok(CompressionResult {
        kept: idx.iter().map(|&i| seq[i].clone()).collect(),
        dropped_count: seq.len() - idx.len(),
        kept_indices: idx,
        method,
        pairwise_distances: dists,
        forced_last,
    })
}

fn predict_from_mask<T: Scalar>(frame: u64, raw: &RasterMask<T>) -> Result<Prediction<T>> {
    let region = match vectorize_with_warnings(raw) {
        Ok((region, warnings)) => {
            for w in warnings {
                log::debug!("frame {frame}: {w:?}");
            }
            Some(region)
        }
        Err(Error::NoForeground) => None,
        Err(e) => return Err(e),
    };
    let mask = match &region {
        Some(r) => crate::geometry::rasterize(r, raw.width(), raw.height(), *raw.transform())?,
        None => RasterMask::new(raw.width(), raw.height(), *raw.transform())?,
    };
    Ok(Prediction { frame, region, mask })
}

/// Shape-based predictions at `frames` from rasterized supports.
pub fn interpolate_shape<T: Scalar>(supports: &[(u64, RasterMask<T>)], frames: &[u64]) -> Result<Vec<Prediction<T>>> {
    let it = ShapeInterpolator::new(supports.to_vec())?;
    frames
        .par_iter()
        .map(|&f| predict_from_mask(f, &it.mask_at(f)?))
        .collect()
}

/// Generates C-VAE predictions at `(frame, t_norm)` pairs.
pub fn interpolate_cvae<T: Scalar>(
    model: &CvaeModel<T>,
    frames: &[(u64, T)],
    latent: LatentChoice,
    seed: u64,
) -> Result<Vec<Prediction<T>>> {
    frames
        .par_iter()
        .map(|&(f, t)| {
            let mode = match latent {
                LatentChoice::PriorMean => GenerateMode::PriorMean,
                LatentChoice::PriorSample => GenerateMode::PriorSample { seed: seed ^ f },
            };
            predict_from_mask(f, &generate(model, t, mode)?)
        })
        .collect()
}

/// Trains a C-VAE on the support masks.
pub fn train_cvae<T: Scalar>(
    supports: &[(RasterMask<T>, T)],
    options: &CvaeOptions,
    run_seed: u64,
) -> Result<crate::cvae::TrainOutput<T>> {
    let (w, h) = supports
        .first()
        .map(|s| s.0.dims())
        .ok_or_else(|| Error::InvalidParameter("no support masks".into()))?;
    train(supports, &options.train_config(w, h, run_seed))
}

/// JI and HD of every predicted frame against the truth at the same frame.
pub fn score<T: Scalar>(
    predictions: &[&Prediction<T>],
    truth: &[&RasterMask<T>],
    truth_regions: &[&Region<T>],
    metrics: &MetricsConfig,
) -> Result<SimilarityReport<T>> {
    if predictions.len() != truth.len() || truth.len() != truth_regions.len() {
        return Err(Error::ShapeMismatch("predictions and truth differ in length".into()));
    }
    let scale = T::lit(metrics.hd_scale);
    let scores = (0..predictions.len())
        .into_par_iter()
        .map(|i| {
            let p = predictions[i];
            let ji = jaccard_index(&p.mask, truth[i])?;
            let hd = match metrics.hd_mode {
                HdMode::BoundaryPixels => match mask_hausdorff(&p.mask, truth[i], scale) {
                    Ok(v) => Some(v),
                    Err(Error::EmptySet) => None,
                    Err(e) => return Err(e),
                },
                HdMode::PolygonVertices => match &p.region {
                    Some(r) => Some(vertex_hausdorff(r, truth_regions[i], truth[i].transform(), scale)?),
                    None => None,
                },
            };
            Ok(FrameScore { frame: p.frame, ji, hd })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimilarityReport::from_scores(scores))
}

/// One row per frame: foreground pixel count times world pixel area.
pub fn emit_area_curve<T: Scalar>(masks: &[(u64, &RasterMask<T>)]) -> Vec<(u64, T)> {
    masks.iter().map(|&(f, m)| (f, m.area())).collect()
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn timed<R>(slot: &mut f64, stage: &'static str, f: impl FnOnce() -> Result<R>) -> Result<R> {
    let start = Instant::now();
    let out = f().map_err(|e| e.in_stage(stage));
    *slot += ms(start);
    out
}

/// Runs the full protocol and writes every artifact into `config.output_dir`.
pub fn run<T: Scalar>(config: &RunConfig) -> Result<RunReport<T>> {
    config.validate()?;
    let started = Instant::now();
    let mut timings = Timings::default();

    let (seq, grid, truth) = timed(&mut timings.ingest_ms, "ingest", || {
        let seq: Vec<Snapshot<T>> = load_data(config)?;
        let (w, h) = config.dims();
        let grid = resolve_grid(w, h, &config.raster.transform, &seq)?;
        let truth = seq
            .par_iter()
            .map(|s| grid.rasterize(&s.region))
            .collect::<Result<Vec<_>>>()?;
        Ok((seq, grid, truth))
    })?;

    let compressed = timed(&mut timings.compress_ms, "compress", || {
        compress(&seq, &truth, &config.compression)
    })?;
    let kept: BTreeSet<usize> = compressed.kept_indices.iter().copied().collect();
    let (first, last) = (
        *compressed.kept_indices.first().expect("at least one kept"),
        *compressed.kept_indices.last().expect("at least one kept"),
    );
    let in_range: Vec<usize> = (first..=last).collect();
    let evaluated: Vec<usize> = in_range.iter().copied().filter(|i| !kept.contains(i)).collect();
    let frames: Vec<u64> = in_range.iter().map(|&i| seq[i].frame).collect();
    log::info!(
        "kept {} of {} frames; scoring {}",
        kept.len(),
        seq.len(),
        evaluated.len()
    );

    let out_dir = &config.output_dir;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut reports = Vec::new();
    let mut predictions: Vec<(Method, Vec<Prediction<T>>)> = Vec::new();
    let mut methods = config.interpolators.clone();
    methods.sort();
    methods.dedup();
    for &method in &methods {
        let mut training = None;
        let preds = match method {
            Method::Shape => timed(&mut timings.interpolate_ms, "shape interpolation", || {
                let supports: Vec<(u64, RasterMask<T>)> = compressed
                    .kept_indices
                    .iter()
                    .map(|&i| (seq[i].frame, truth[i].clone()))
                    .collect();
                interpolate_shape(&supports, &frames)
            })?,
            Method::Cvae => {
                let output = timed(&mut timings.train_ms, "cvae training", || {
                    let supports: Vec<(RasterMask<T>, T)> = compressed
                        .kept_indices
                        .iter()
                        .map(|&i| (truth[i].clone(), seq[i].t_norm))
                        .collect();
                    train_cvae(&supports, &config.cvae, config.seed)
                })?;
                output.model.save(&out_dir.join("cvae_model.json"))?;
                write_loss_trace(&out_dir.join("cvae_loss.csv"), &output.trace)?;
                training = Some(TrainingSummary {
                    epochs: output.trace.len(),
                    parameters: output.model.parameter_count(),
                    first_total: output.trace.first().map_or(f64::NAN, |e| e.total),
                    final_total: output.trace.last().map_or(f64::NAN, |e| e.total),
                });
                timed(&mut timings.interpolate_ms, "cvae interpolation", || {
                    let at: Vec<(u64, T)> = in_range.iter().map(|&i| (seq[i].frame, seq[i].t_norm)).collect();
                    interpolate_cvae(&output.model, &at, config.cvae.latent, config.seed)
                })?
            }
        };

        let report = timed(&mut timings.score_ms, "score", || {
            let pos = |i: usize| i - first;
            let p: Vec<&Prediction<T>> = evaluated.iter().map(|&i| &preds[pos(i)]).collect();
            let t: Vec<&RasterMask<T>> = evaluated.iter().map(|&i| &truth[i]).collect();
            let r: Vec<&Region<T>> = evaluated.iter().map(|&i| &seq[i].region).collect();
            let similarity = score(&p, &t, &r, &config.metrics)?;
            let masks: Vec<RasterMask<T>> = preds.iter().map(|p| p.mask.clone()).collect();
            let m = &config.metrics;
            let (tc, _) = tc_sweep_detailed(&masks, m.tc_a, m.tc_r, m.tc_count)?;
            Ok(InterpolatorReport {
                method,
                similarity,
                tc,
                empty_frames: preds.iter().filter(|p| p.region.is_none()).count(),
                training,
            })
        })?;
        reports.push(report);
        predictions.push((method, preds));
    }

    let m = &config.metrics;
    let truth_range: Vec<RasterMask<T>> = in_range.iter().map(|&i| truth[i].clone()).collect();
    let truth_tc = tc_sweep_detailed(&truth_range, m.tc_a, m.tc_r, m.tc_count)
        .ok()
        .map(|r| r.0);

    let area_of = |method: Method, i: usize| -> Option<T> {
        if i < first || i > last {
            return None;
        }
        predictions
            .iter()
            .find(|(m, _)| *m == method)
            .map(|(_, p)| p[i - first].mask.area())
    };
    let truth_curve = emit_area_curve(&seq.iter().map(|s| s.frame).zip(truth.iter()).collect::<Vec<_>>());
    let area_curve: Vec<AreaRow<T>> = truth_curve
        .into_iter()
        .enumerate()
        .map(|(i, (frame, area))| AreaRow {
            frame,
            truth: area,
            shape: area_of(Method::Shape, i),
            cvae: area_of(Method::Cvae, i),
        })
        .collect();

    timings.total_ms = ms(started);
    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: config.clone(),
        grid: GridInfo {
            width: grid.width,
            height: grid.height,
            transform: grid.transform,
        },
        compression: CompressionSummary {
            method: compressed.method.clone(),
            kept_frames: compressed.kept_frames(),
            dropped_count: compressed.dropped_count,
            forced_last: compressed.forced_last,
            pairwise_distances: compressed.pairwise_distances.iter().map(|d| d.as_f64()).collect(),
        },
        evaluation: EvaluationSummary {
            total_frames: seq.len(),
            support_frames: kept.len(),
            evaluated_frames: evaluated.len(),
            out_of_range_frames: seq.len() - in_range.len(),
        },
        interpolators: reports,
        truth_tc,
        area_curve,
        timings,
    };

    write_artifacts(out_dir, &report, &predictions, &truth_range)?;
    Ok(report)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn opt<T: Scalar>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes `report.json`, `similarity.csv`, `tc.csv`, `area_curve.csv` and
/// one `<method>_regions.csv` manifest per interpolator.
fn write_artifacts<T: Scalar>(
    dir: &Path,
    report: &RunReport<T>,
    predictions: &[(Method, Vec<Prediction<T>>)],
    truth: &[RasterMask<T>],
) -> Result<()> {
    write_text(&dir.join("report.json"), &serde_json::to_string_pretty(report)?)?;

    let mut sim = String::from("method,frame,ji,hd\n");
    for r in &report.interpolators {
        for s in &r.similarity.per_frame {
            sim.push_str(&format!("{},{},{},{}\n", r.method.name(), s.frame, s.ji, opt(s.hd)));
        }
    }
    write_text(&dir.join("similarity.csv"), &sim)?;

    let m = &report.config.metrics;
    let mut tc = String::from("method,stride,t,tc\n");
    let mut sequences: Vec<(&str, Vec<RasterMask<T>>)> = vec![("truth", truth.to_vec())];
    for (method, preds) in predictions {
        sequences.push((method.name(), preds.iter().map(|p| p.mask.clone()).collect()));
    }
    for (name, masks) in &sequences {
        let Ok((sweep, raw)) = tc_sweep_detailed(masks, m.tc_a, m.tc_r, m.tc_count) else {
            continue;
        };
        for (stride, values) in sweep.strides.iter().zip(&raw) {
            for (t, v) in values.iter().enumerate() {
                tc.push_str(&format!("{name},{stride},{t},{}\n", opt(*v)));
            }
        }
    }
    write_text(&dir.join("tc.csv"), &tc)?;

    let mut area = String::from("frame,truth,shape,cvae\n");
    for row in &report.area_curve {
        area.push_str(&format!(
            "{},{},{},{}\n",
            row.frame,
            row.truth,
            opt(row.shape),
            opt(row.cvae)
        ));
    }
    write_text(&dir.join("area_curve.csv"), &area)?;

    for (method, preds) in predictions {
        let rows: Vec<(u64, &Region<T>)> = preds
            .iter()
            .filter_map(|p| p.region.as_ref().map(|r| (p.frame, r)))
            .collect();
        write_manifest(&dir.join(format!("{}_regions.csv", method.name())), &rows)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests;
