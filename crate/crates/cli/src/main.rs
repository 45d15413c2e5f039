use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use movreg::geometry::{RasterGrid, RasterMask, Region, Snapshot};
use movreg::harness::{
    self, compress, ingest, ingest_dir, interpolate_cvae, interpolate_shape, resolve_grid, score, train_cvae,
    write_manifest, CompressionConfig, CvaeOptions, LatentChoice, MetricsConfig, Prediction, RunConfig, Scenario,
    SynthSpec, TransformSpec,
};
use movreg::metrics::HdMode;

#[derive(Parser)]
#[command(
    name = "movreg",
    version,
    about = "Moving-region compression, interpolation and scoring"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CompressMethod {
    Periodic,
    Distance,
}

#[derive(Clone, Copy, ValueEnum)]
enum InterpMethod {
    Shape,
    Cvae,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Disk,
    Blob,
    Noisy,
}

#[derive(Clone, Copy, ValueEnum)]
enum HdArg {
    BoundaryPixels,
    PolygonVertices,
}

/// Raster grid options shared by the file-based subcommands.
#[derive(clap::Args)]
struct GridArgs {
    #[arg(long)]
    width: usize,
    #[arg(long)]
    height: usize,
    /// World-to-pixel transform `scale_x,scale_y,offset_x,offset_y` (identity when omitted).
    #[arg(long, value_parser = parse_transform, conflicts_with = "fit_margin")]
    transform: Option<[f64; 4]>,
    /// Fit a uniform transform to the input bounds with this pixel margin.
    #[arg(long)]
    fit_margin: Option<f64>,
}

fn parse_transform(s: &str) -> std::result::Result<[f64; 4], String> {
    let values = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    values
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected 4 comma-separated numbers, got {}", v.len()))
}

impl GridArgs {
    fn spec(&self) -> TransformSpec {
        match (&self.transform, self.fit_margin) {
            (Some(t), _) => TransformSpec::Explicit {
                scale_x: t[0],
                scale_y: t[1],
                offset_x: t[2],
                offset_y: t[3],
            },
            (None, Some(margin)) => TransformSpec::Fit { margin },
            (None, None) => TransformSpec::Identity,
        }
    }

    fn grid(&self, snapshots: &[Snapshot<f64>]) -> Result<RasterGrid<f64>> {
        Ok(resolve_grid(self.width, self.height, &self.spec(), snapshots)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a full experiment from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Select support snapshots from a manifest.
    Compress {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        method: CompressMethod,
        #[arg(long, required_if_eq("method", "periodic"))]
        d: Option<usize>,
        #[arg(long, required_if_eq("method", "distance"))]
        alpha: Option<f64>,
        #[arg(long)]
        max_len: Option<usize>,
        #[arg(long, default_value_t = 0)]
        offset: usize,
        /// Do not force the final snapshot into the support set.
        #[arg(long)]
        no_append_last: bool,
        #[command(flatten)]
        grid: GridArgs,
        /// Output manifest of kept snapshots.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate in-between regions from a support manifest.
    Interpolate {
        #[arg(long, value_enum)]
        method: InterpMethod,
        #[arg(long)]
        support: PathBuf,
        /// Manifest whose frames are generated; every integer frame in the support range when omitted.
        #[arg(long)]
        frames_from: Option<PathBuf>,
        /// C-VAE options as TOML (the `[cvae]` table of a run config, without the header).
        #[arg(long)]
        cvae_config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        grid: GridArgs,
        /// Output directory; receives `manifest.csv` (and the model for `cvae`).
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predicted regions against a ground-truth manifest.
    Score {
        /// Directory with `manifest.csv` or `<frame>.wkt` files.
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, value_enum, default_value = "boundary-pixels")]
        hd_mode: HdArg,
        #[arg(long, default_value_t = 1.0)]
        hd_scale: f64,
        #[command(flatten)]
        grid: GridArgs,
        /// Write per-frame scores as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic ground-truth manifest.
    Synth {
        #[arg(long, value_enum)]
        scenario: ScenarioArg,
        #[arg(long)]
        frames: usize,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 32)]
        height: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run { config, output_dir } => cmd_run(&config, output_dir),
        Command::Compress {
            input,
            method,
            d,
            alpha,
            max_len,
            offset,
            no_append_last,
            grid,
            out,
        } => {
            let append_last = !no_append_last;
            let cfg = match method {
                CompressMethod::Periodic => CompressionConfig::Periodic {
                    d: d.context("--d is required")?,
                    append_last,
                    offset,
                },
                CompressMethod::Distance => CompressionConfig::Distance {
                    alpha: alpha.context("--alpha is required")?,
                    max_len,
                    append_last,
                },
            };
            cmd_compress(&input, &cfg, &grid, &out)
        }
        Command::Interpolate {
            method,
            support,
            frames_from,
            cvae_config,
            seed,
            grid,
            out,
        } => cmd_interpolate(
            method,
            &support,
            frames_from.as_deref(),
            cvae_config.as_deref(),
            seed,
            &grid,
            &out,
        ),
        Command::Score {
            pred,
            truth,
            hd_mode,
            hd_scale,
            grid,
            out,
        } => {
            let metrics = MetricsConfig {
                hd_mode: match hd_mode {
                    HdArg::BoundaryPixels => HdMode::BoundaryPixels,
                    HdArg::PolygonVertices => HdMode::PolygonVertices,
                },
                hd_scale,
                ..MetricsConfig::default()
            };
            cmd_score(&pred, &truth, &metrics, &grid, out.as_deref())
        }
        Command::Synth {
            scenario,
            frames,
            width,
            height,
            seed,
            out,
        } => {
            let scenario = match scenario {
                ScenarioArg::Disk => Scenario::Disk,
                ScenarioArg::Blob => Scenario::Blob,
                ScenarioArg::Noisy => Scenario::Noisy,
            };
            let spec = SynthSpec {
                width,
                height,
                seed,
                ..SynthSpec::new(scenario, frames)
            };
            let snaps: Vec<Snapshot<f64>> = harness::synth::generate(&spec)?;
            let rows: Vec<(u64, &Region<f64>)> = snaps.iter().map(|s| (s.frame, &s.region)).collect();
            write_manifest(&out, &rows)?;
            println!("wrote {} frames to {}", rows.len(), out.display());
            Ok(())
        }
    }
}

fn cmd_run(config: &Path, output_dir: Option<PathBuf>) -> Result<()> {
    let mut cfg = RunConfig::from_file(config).with_context(|| format!("loading {}", config.display()))?;
    if let Some(dir) = output_dir {
        cfg.output_dir = dir;
    }
    let report = harness::run::<f64>(&cfg)?;
    let e = &report.evaluation;
    println!(
        "frames {} | support {} | evaluated {} | out of range {}",
        e.total_frames, e.support_frames, e.evaluated_frames, e.out_of_range_frames
    );
    for r in &report.interpolators {
        let ji = r.similarity.ji.as_ref().map_or(f64::NAN, |s| s.mean);
        let hd = r.similarity.hd.as_ref().map_or(f64::NAN, |s| s.mean);
        println!(
            "{:<6} JI {:.4}  HD {:.3}  TC {:.4}",
            r.method.name(),
            ji,
            hd,
            r.tc.overall_mean
        );
    }
    println!("artifacts in {}", cfg.output_dir.display());
    Ok(())
}

fn rasterize_all(grid: &RasterGrid<f64>, snaps: &[Snapshot<f64>]) -> Result<Vec<RasterMask<f64>>> {
    Ok(snaps
        .iter()
        .map(|s| grid.rasterize(&s.region))
        .collect::<Result<_, _>>()?)
}

fn cmd_compress(input: &Path, cfg: &CompressionConfig, grid: &GridArgs, out: &Path) -> Result<()> {
    let seq: Vec<Snapshot<f64>> = ingest(input)?;
    let grid = grid.grid(&seq)?;
    let masks = rasterize_all(&grid, &seq)?;
    let result = compress(&seq, &masks, cfg)?;
    let rows: Vec<(u64, &Region<f64>)> = result.kept.iter().map(|s| (s.frame, &s.region)).collect();
    write_manifest(out, &rows)?;
    println!(
        "kept {} of {} snapshots{}",
        result.kept.len(),
        seq.len(),
        if result.forced_last {
            " (last frame appended)"
        } else {
            ""
        }
    );
    Ok(())
}

fn cmd_interpolate(
    method: InterpMethod,
    support: &Path,
    frames_from: Option<&Path>,
    cvae_config: Option<&Path>,
    seed: u64,
    grid: &GridArgs,
    out: &Path,
) -> Result<()> {
    let supports: Vec<Snapshot<f64>> = ingest(support)?;
    let (first, last) = (supports[0].frame, supports[supports.len() - 1].frame);
    let frames: Vec<u64> = match frames_from {
        Some(p) => ingest::<f64>(p)?.into_iter().map(|s| s.frame).collect(),
        None => (first..=last).collect(),
    };
    if let Some(&f) = frames.iter().find(|&&f| f < first || f > last) {
        bail!("frame {f} is outside the support range [{first}, {last}]");
    }
    let grid = grid.grid(&supports)?;
    let masks = rasterize_all(&grid, &supports)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let preds: Vec<Prediction<f64>> = match method {
        InterpMethod::Shape => {
            let pairs: Vec<(u64, RasterMask<f64>)> = supports.iter().map(|s| s.frame).zip(masks).collect();
            interpolate_shape(&pairs, &frames)?
        }
        InterpMethod::Cvae => {
            let options: CvaeOptions = match cvae_config {
                Some(p) => {
                    let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                    toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
                }
                None => CvaeOptions::default(),
            };
            let data: Vec<(RasterMask<f64>, f64)> = masks.into_iter().zip(supports.iter().map(|s| s.t_norm)).collect();
            let trained = train_cvae(&data, &options, seed)?;
            trained.model.save(&out.join("cvae_model.json"))?;
            movreg::cvae::write_loss_trace(&out.join("cvae_loss.csv"), &trained.trace)?;
            let at: Vec<(u64, f64)> = frames
                .iter()
                .map(|&f| (f, harness::manifest::normalized_time(f, first, last)))
                .collect();
            interpolate_cvae(&trained.model, &at, LatentChoice::PriorMean, seed)?
        }
    };
    let rows: Vec<(u64, &Region<f64>)> = preds
        .iter()
        .filter_map(|p| p.region.as_ref().map(|r| (p.frame, r)))
        .collect();
    write_manifest(&out.join("manifest.csv"), &rows)?;
    println!(
        "generated {} frames ({} empty) into {}",
        preds.len(),
        preds.len() - rows.len(),
        out.display()
    );
    Ok(())
}

fn cmd_score(pred: &Path, truth: &Path, metrics: &MetricsConfig, grid: &GridArgs, out: Option<&Path>) -> Result<()> {
    let truth_seq: Vec<Snapshot<f64>> = ingest(truth)?;
    let pred_seq: Vec<Snapshot<f64>> = ingest_dir(pred)?;
    let grid = grid.grid(&truth_seq)?;
    let mut preds = Vec::new();
    let mut truth_masks = Vec::new();
    let mut truth_regions = Vec::new();
    let mut missing = 0;
    for t in &truth_seq {
        match pred_seq.iter().find(|p| p.frame == t.frame) {
            Some(p) => {
                preds.push(Prediction {
                    frame: p.frame,
                    mask: grid.rasterize(&p.region)?,
                    region: Some(p.region.clone()),
                });
                truth_masks.push(grid.rasterize(&t.region)?);
                truth_regions.push(&t.region);
            }
            None => missing += 1,
        }
    }
    if preds.is_empty() {
        bail!("no predicted frame matches a ground-truth frame");
    }
    let report = score(
        &preds.iter().collect::<Vec<_>>(),
        &truth_masks.iter().collect::<Vec<_>>(),
        &truth_regions,
        metrics,
    )?;
    if let Some(path) = out {
        let mut text = String::from("frame,ji,hd\n");
        for s in &report.per_frame {
            text.push_str(&format!(
                "{},{},{}\n",
                s.frame,
                s.ji,
                s.hd.map(|v| v.to_string()).unwrap_or_default()
            ));
        }
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    let summary = serde_json::json!({
        "scored_frames": report.per_frame.len(),
        "missing_frames": missing,
        "ji": report.ji,
        "hd": report.hd,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
