use std::path::Path;

use assert_cmd::Command;

fn movreg() -> Command {
    Command::cargo_bin("movreg").unwrap()
}

fn write_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(
        &path,
        r#"
version = 1
seed = 2
output_dir = "out"
interpolators = ["shape", "cvae"]

[data.synthetic]
scenario = "disk"
frames = 30

[raster.transform]
kind = "identity"

[compression]
method = "periodic"
d = 10

[cvae]
epochs = 20
batch_size = 2
learning_rate = 2e-3
latent_dim = 2
encoder_hidden = [16]
decoder_hidden = [16]
kl_weight = 1.0
"#,
    )
    .unwrap();
    path
}

#[test]
fn run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = movreg().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("evaluated 26"), "{stdout}");
    for name in [
        "report.json",
        "similarity.csv",
        "tc.csv",
        "area_curve.csv",
        "cvae_model.json",
        "cvae_loss.csv",
    ] {
        assert!(dir.path().join("out").join(name).is_file(), "{name}");
    }
}

#[test]
fn synth_compress_interpolate_score_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    let grid = ["--width", "64", "--height", "32"];

    movreg()
        .args(["synth", "--scenario", "noisy", "--frames", "41", "--seed", "3", "--out"])
        .arg(p("truth.csv"))
        .assert()
        .success();
    movreg()
        .args(["compress", "--method", "periodic", "--d", "10", "--input"])
        .arg(p("truth.csv"))
        .args(grid)
        .arg("--out")
        .arg(p("support.csv"))
        .assert()
        .success();
    let support = std::fs::read_to_string(p("support.csv")).unwrap();
    assert_eq!(support.lines().count(), 1 + 5);

    movreg()
        .args(["interpolate", "--method", "shape", "--support"])
        .arg(p("support.csv"))
        .args(grid)
        .arg("--out")
        .arg(p("pred"))
        .assert()
        .success();
    let out = movreg()
        .args(["score", "--pred"])
        .arg(p("pred"))
        .arg("--truth")
        .arg(p("truth.csv"))
        .args(grid)
        .arg("--out")
        .arg(p("scores.csv"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["scored_frames"], 41);
    assert!(summary["ji"]["mean"].as_f64().unwrap() > 0.9);
    assert_eq!(std::fs::read_to_string(p("scores.csv")).unwrap().lines().count(), 42);
}

#[test]
fn distance_compression_and_cvae_interpolation() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    movreg()
        .args(["synth", "--scenario", "blob", "--frames", "20", "--out"])
        .arg(p("truth.csv"))
        .assert()
        .success();
    movreg()
        .args([
            "compress", "--method", "distance", "--alpha", "0.1", "--width", "64", "--height", "32", "--input",
        ])
        .arg(p("truth.csv"))
        .arg("--out")
        .arg(p("support.csv"))
        .assert()
        .success();
    std::fs::write(
        p("cvae.toml"),
        "epochs = 10\nbatch_size = 2\nlearning_rate = 1e-3\nlatent_dim = 2\nencoder_hidden = [8]\ndecoder_hidden = [8]\nkl_weight = 1.0\n",
    )
    .unwrap();
    movreg()
        .args([
            "interpolate",
            "--method",
            "cvae",
            "--width",
            "64",
            "--height",
            "32",
            "--support",
        ])
        .arg(p("support.csv"))
        .arg("--frames-from")
        .arg(p("truth.csv"))
        .arg("--cvae-config")
        .arg(p("cvae.toml"))
        .arg("--out")
        .arg(p("pred"))
        .assert()
        .success();
    assert!(p("pred/cvae_model.json").is_file());
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(
        &bad,
        "frame,wkt\n3,\"POLYGON((0 0,1 0,1 1,0 1,0 0))\"\n1,\"POLYGON((0 0,1 0,1 1,0 1,0 0))\"\n",
    )
    .unwrap();
    let out = movreg()
        .args([
            "compress", "--method", "periodic", "--d", "2", "--width", "8", "--height", "8", "--input",
        ])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("k.csv"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("row 2") && stderr.contains("row 3"), "{stderr}");
    movreg().args(["run", "--config", "missing.toml"]).assert().failure();
}
