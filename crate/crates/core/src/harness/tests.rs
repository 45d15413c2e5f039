use super::*;
use crate::metrics::tc_sweep;

fn synth_config(dir: &Path, frames: usize, d: usize, methods: Vec<Method>) -> RunConfig {
    RunConfig {
        version: CONFIG_VERSION,
        seed: 5,
        output_dir: dir.to_path_buf(),
        data: DataConfig {
            manifest: None,
            synthetic: Some(SynthSpec::new(Scenario::Disk, frames)),
        },
        raster: RasterConfig {
            width: None,
            height: None,
            transform: TransformSpec::Identity,
        },
        compression: CompressionConfig::Periodic {
            d,
            append_last: true,
            offset: 0,
        },
        interpolators: methods,
        metrics: MetricsConfig::default(),
        cvae: CvaeOptions {
            epochs: 40,
            encoder_hidden: vec![16],
            decoder_hidden: vec![16],
            ..CvaeOptions::default()
        },
    }
}

#[test]
fn shape_run_excludes_supports_and_scores_well() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth_config(dir.path(), 200, 20, vec![Method::Shape]);
    let report: RunReport<f64> = run(&cfg).unwrap();
    assert_eq!(report.compression.kept_frames.len(), 11);
    assert_eq!(report.compression.kept_frames[10], 199);
    let e = &report.evaluation;
    assert_eq!((e.total_frames, e.support_frames, e.evaluated_frames), (200, 11, 189));
    assert_eq!(e.evaluated_frames, e.total_frames - e.support_frames);
    let shape = report.interpolator(Method::Shape).unwrap();
    assert_eq!(shape.similarity.per_frame.len(), 189);
    assert!(shape
        .similarity
        .per_frame
        .iter()
        .all(|s| s.frame % 20 != 0 && s.frame != 199));
    assert!(shape.similarity.ji.as_ref().unwrap().mean >= 0.95);
    assert!(shape.tc.overall_mean >= 0.99);
    for name in [
        "report.json",
        "similarity.csv",
        "tc.csv",
        "area_curve.csv",
        "shape_regions.csv",
    ] {
        assert!(dir.path().join(name).is_file(), "{name}");
    }
}

#[test]
fn area_curve_matches_recount_and_grows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth_config(dir.path(), 30, 5, vec![Method::Shape]);
    let report: RunReport<f64> = run(&cfg).unwrap();
    let seq: Vec<Snapshot<f64>> = load_data(&cfg).unwrap();
    let grid = resolve_grid(64, 32, &TransformSpec::Identity, &seq).unwrap();
    for (row, snap) in report.area_curve.iter().zip(&seq) {
        assert_eq!(row.frame, snap.frame);
        assert_eq!(row.truth, grid.rasterize(&snap.region).unwrap().count() as f64);
    }
    for pair in report.area_curve.windows(2) {
        assert!(pair[1].truth >= pair[0].truth);
        assert!(pair[1].shape.unwrap() >= pair[0].shape.unwrap());
    }
    let csv = std::fs::read_to_string(dir.path().join("area_curve.csv")).unwrap();
    assert_eq!(csv.lines().count(), 31);
    assert!(csv.starts_with("frame,truth,shape,cvae\n0,"));
}

#[test]
fn constant_sequence_gives_constant_area() {
    let m = RasterMask::<f64>::from_fn(6, 6, Affine::identity(), |x, y| x + y < 5).unwrap();
    let curve = emit_area_curve(&[(0, &m), (1, &m), (2, &m)]);
    assert!(curve.iter().all(|&(_, a)| a == m.count() as f64));
    let scaled = RasterMask::<f64>::from_fn(4, 4, Affine::new(2.0, 2.0, 0.0, 0.0).unwrap(), |_, _| true).unwrap();
    assert_eq!(emit_area_curve(&[(7, &scaled)]), vec![(7, 4.0)]);
}

#[test]
fn runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut ca = synth_config(a.path(), 21, 5, vec![Method::Shape, Method::Cvae]);
    ca.cvae.epochs = 10;
    let mut cb = ca.clone();
    cb.output_dir = b.path().to_path_buf();
    run::<f64>(&ca).unwrap();
    run::<f64>(&cb).unwrap();
    for name in [
        "similarity.csv",
        "tc.csv",
        "area_curve.csv",
        "cvae_model.json",
        "cvae_loss.csv",
        "cvae_regions.csv",
    ] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn report_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = synth_config(dir.path(), 21, 5, vec![Method::Shape, Method::Cvae]);
    cfg.cvae.epochs = 5;
    run::<f64>(&cfg).unwrap();
    let schema: serde_json::Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let errors: Vec<String> = validator.iter_errors(&report).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:#?}");

    let mut broken = report.clone();
    broken["evaluation"]["evaluated_frames"] = serde_json::json!(-1);
    assert!(!validator.is_valid(&broken));
    broken = report;
    broken.as_object_mut().unwrap().remove("timings");
    assert!(!validator.is_valid(&broken));
}

#[test]
fn periodic_offset_and_distance_compression() {
    let spec = SynthSpec::new(Scenario::Disk, 25);
    let seq: Vec<Snapshot<f64>> = synth::generate(&spec).unwrap();
    let grid = resolve_grid(64, 32, &TransformSpec::Identity, &seq).unwrap();
    let masks: Vec<_> = seq.iter().map(|s| grid.rasterize(&s.region).unwrap()).collect();
    let c = compress(
        &seq,
        &masks,
        &CompressionConfig::Periodic {
            d: 10,
            append_last: true,
            offset: 3,
        },
    )
    .unwrap();
    assert_eq!(c.kept_indices, vec![3, 13, 23, 24]);
    assert!(c.forced_last);
    let c = compress(
        &seq,
        &masks,
        &CompressionConfig::Periodic {
            d: 10,
            append_last: false,
            offset: 3,
        },
    )
    .unwrap();
    assert_eq!(c.kept_indices, vec![3, 13, 23]);
    assert!(compress(
        &seq,
        &masks,
        &CompressionConfig::Periodic {
            d: 1,
            append_last: true,
            offset: 25
        }
    )
    .is_err());

    let c = compress(
        &seq,
        &masks,
        &CompressionConfig::Distance {
            alpha: 0.1,
            max_len: None,
            append_last: false,
        },
    )
    .unwrap();
    assert!(c.pairwise_distances.iter().all(|&d| d > 0.1));
    assert_eq!(c.dropped_count, 25 - c.kept.len());
}

#[test]
fn offset_leaves_frames_out_of_range() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = synth_config(dir.path(), 30, 10, vec![Method::Shape]);
    cfg.compression = CompressionConfig::Periodic {
        d: 10,
        append_last: false,
        offset: 4,
    };
    let report: RunReport<f64> = run(&cfg).unwrap();
    assert_eq!(report.compression.kept_frames, vec![4, 14, 24]);
    let e = &report.evaluation;
    assert_eq!((e.evaluated_frames, e.out_of_range_frames), (18, 9));
    assert!(report.area_curve[0].shape.is_none());
    assert!(report.area_curve[4].shape.is_some());
}

#[test]
fn manifest_run_with_fitted_transform() {
    let dir = tempfile::tempdir().unwrap();
    let seq: Vec<Snapshot<f64>> = synth::generate(&SynthSpec::new(Scenario::Blob, 12)).unwrap();
    // Move into a world frame far from the pixel grid.
    let world: Vec<(u64, Region<f64>)> = seq
        .iter()
        .map(|s| {
            (
                s.frame,
                s.region.map(|p| Point2D::new(p.x * 10.0 + 5e5, p.y * 10.0 - 3e4)),
            )
        })
        .collect();
    let manifest = dir.path().join("m.csv");
    write_manifest(&manifest, &world.iter().map(|(f, r)| (*f, r)).collect::<Vec<_>>()).unwrap();
    let mut cfg = synth_config(&dir.path().join("out"), 12, 3, vec![Method::Shape]);
    cfg.data = DataConfig {
        manifest: Some(manifest),
        synthetic: None,
    };
    cfg.raster = RasterConfig {
        width: Some(48),
        height: Some(24),
        transform: TransformSpec::Fit { margin: 1.0 },
    };
    let report: RunReport<f64> = run(&cfg).unwrap();
    assert_eq!(report.evaluation.total_frames, 12);
    assert!(
        report
            .interpolator(Method::Shape)
            .unwrap()
            .similarity
            .ji
            .as_ref()
            .unwrap()
            .mean
            > 0.8
    );
    let back: Vec<Snapshot<f64>> = ingest(&dir.path().join("out/shape_regions.csv")).unwrap();
    assert_eq!(back.len(), 12);
    assert!(back[0].region.bounds().0.x > 4e5);
}

#[test]
fn errors_carry_stage() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = synth_config(dir.path(), 10, 3, vec![Method::Shape]);
    cfg.compression = CompressionConfig::Periodic {
        d: 3,
        append_last: true,
        offset: 20,
    };
    match run::<f64>(&cfg) {
        Err(Error::Stage { stage: "compress", .. }) => {}
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn generated_tc_matches_direct_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth_config(dir.path(), 30, 6, vec![Method::Shape]);
    let report: RunReport<f64> = run(&cfg).unwrap();
    let regions: Vec<Snapshot<f64>> = ingest(&dir.path().join("shape_regions.csv")).unwrap();
    let grid = resolve_grid(64, 32, &TransformSpec::Identity, &regions).unwrap();
    let masks: Vec<_> = regions.iter().map(|s| grid.rasterize(&s.region).unwrap()).collect();
    let direct = tc_sweep(&masks, 1, 10, 5).unwrap();
    assert_eq!(report.interpolator(Method::Shape).unwrap().tc, direct);
}
