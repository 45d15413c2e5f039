//! Snapshot manifests: CSV with header `frame,wkt` or `frame,path`.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::{parse_wkt, serialize_wkt, validate_region, Region, Snapshot};
use crate::scalar::Scalar;

/// Reads, validates and frame-checks a manifest. `path` entries resolve
/// relative to the manifest's directory. Row numbers in errors are file
/// line numbers (the header is line 1).
pub fn ingest<T: Scalar>(manifest: &Path) -> Result<Vec<Snapshot<T>>> {
    let text = std::fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
    let base = manifest.parent().map(Path::to_path_buf).unwrap_or_default();
    ingest_str(&text, &base)
}

pub fn ingest_str<T: Scalar>(text: &str, base: &Path) -> Result<Vec<Snapshot<T>>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let frame_col = column("frame").ok_or_else(|| Error::Manifest {
        row: 1,
        message: "missing `frame` column".into(),
    })?;
    let (geom_col, inline) = match (column("wkt"), column("path")) {
        (Some(c), _) => (c, true),
        (None, Some(c)) => (c, false),
        (None, None) => {
            return Err(Error::Manifest {
                row: 1,
                message: "expected a `wkt` or `path` column".into(),
            })
        }
    };

    let mut rows: Vec<(usize, u64, Region<T>)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        let bad = |message: String| Error::Manifest { row, message };
        let frame: u64 = record
            .get(frame_col)
            .ok_or_else(|| bad("missing frame".into()))?
            .parse()
            .map_err(|e| bad(format!("frame: {e}")))?;
        let field = record.get(geom_col).ok_or_else(|| bad("missing geometry".into()))?;
        let wkt = if inline {
            field.to_string()
        } else {
            let p = base.join(field);
            std::fs::read_to_string(&p).map_err(|e| bad(format!("{}: {e}", p.display())))?
        };
        let region: Region<T> = parse_wkt(&wkt).map_err(|e| bad(e.to_string()))?;
        let report = validate_region(&region);
        if !report.is_valid() {
            return Err(Error::InvalidRegion {
                row,
                violations: report.violations,
            });
        }
        if let Some(&(previous_row, previous, _)) = rows.last() {
            if frame <= previous {
                return Err(Error::FrameOrder {
                    previous_row,
                    previous,
                    row,
                    frame,
                });
            }
        }
        rows.push((row, frame, region));
    }
    if rows.is_empty() {
        return Err(Error::Manifest {
            row: 1,
            message: "no snapshots".into(),
        });
    }
    Ok(with_t_norm(rows.into_iter().map(|(_, f, r)| (f, r)).collect()))
}

/// Assigns `t_norm = (frame - first) / (last - first)`, or 0 for a single frame.
pub fn with_t_norm<T: Scalar>(frames: Vec<(u64, Region<T>)>) -> Vec<Snapshot<T>> {
    let first = frames.first().map_or(0, |f| f.0);
    let last = frames.last().map_or(0, |f| f.0);
    frames
        .into_iter()
        .map(|(frame, region)| Snapshot {
            frame,
            t_norm: normalized_time(frame, first, last),
            region,
        })
        .collect()
}

pub fn normalized_time<T: Scalar>(frame: u64, first: u64, last: u64) -> T {
    if last == first {
        return T::zero();
    }
    T::lit((frame - first) as f64 / (last - first) as f64)
}

/// Writes an inline `frame,wkt` manifest.
pub fn write_manifest<T: Scalar>(path: &Path, frames: &[(u64, &Region<T>)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["frame", "wkt"])?;
    for (frame, region) in frames {
        w.write_record([frame.to_string(), serialize_wkt(region)])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Frames and WKT files of a prediction directory: `manifest.csv` when
/// present, otherwise every `<frame>.wkt` file.
pub fn ingest_dir<T: Scalar>(dir: &Path) -> Result<Vec<Snapshot<T>>> {
    let manifest = dir.join("manifest.csv");
    if manifest.is_file() {
        return ingest(&manifest);
    }
    let mut files: Vec<(u64, PathBuf)> = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "wkt") {
            if let Some(frame) = path.file_stem().and_then(|s| s.to_str()).and_then(|s| s.parse().ok()) {
                files.push((frame, path));
            }
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::Manifest {
            row: 0,
            message: format!("no manifest.csv or <frame>.wkt files in {}", dir.display()),
        });
    }
    let mut frames = Vec::with_capacity(files.len());
    for (i, (frame, path)) in files.into_iter().enumerate() {
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let region = parse_wkt(&text).map_err(|e| Error::Manifest {
            row: i + 1,
            message: format!("{}: {e}", path.display()),
        })?;
        frames.push((frame, region));
    }
    Ok(with_t_norm(frames))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQ: &str = "\"POLYGON((0 0,4 0,4 4,0 4,0 0))\"";

    #[test]
    fn three_rows_get_normalized_times() {
        let text = format!("frame,wkt\n0,{SQ}\n5,{SQ}\n10,{SQ}\n");
        let snaps: Vec<Snapshot<f64>> = ingest_str(&text, Path::new(".")).unwrap();
        let t: Vec<f64> = snaps.iter().map(|s| s.t_norm).collect();
        assert_eq!(t, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn duplicate_and_out_of_order_frames_fail() {
        let text = format!("frame,wkt\n0,{SQ}\n0,{SQ}\n");
        let err = ingest_str::<f64>(&text, Path::new(".")).unwrap_err();
        assert!(
            matches!(
                err,
                Error::FrameOrder {
                    previous_row: 2,
                    row: 3,
                    ..
                }
            ),
            "{err}"
        );
        let text = format!("frame,wkt\n0,{SQ}\n7,{SQ}\n3,{SQ}\n");
        let err = ingest_str::<f64>(&text, Path::new(".")).unwrap_err();
        assert!(
            matches!(
                err,
                Error::FrameOrder {
                    previous_row: 3,
                    previous: 7,
                    row: 4,
                    frame: 3
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn bad_rows_report_line() {
        let text = format!("frame,wkt\n0,{SQ}\n1,\"POLYGON((0 0,1 x))\"\n");
        assert!(matches!(
            ingest_str::<f64>(&text, Path::new(".")),
            Err(Error::Manifest { row: 3, .. })
        ));
        let bowtie = "\"POLYGON((0 0,4 4,4 0,0 4,0 0))\"";
        let text = format!("frame,wkt\n0,{bowtie}\n");
        assert!(matches!(
            ingest_str::<f64>(&text, Path::new(".")),
            Err(Error::InvalidRegion { row: 2, .. })
        ));
        assert!(matches!(
            ingest_str::<f64>("frame,geom\n", Path::new(".")),
            Err(Error::Manifest { row: 1, .. })
        ));
    }

    #[test]
    fn path_manifest_and_directory() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.wkt"), "POLYGON((0 0,2 0,2 2,0 2,0 0))").unwrap();
        std::fs::write(dir.path().join("m.csv"), "frame,path\n3,a.wkt\n").unwrap();
        let snaps: Vec<Snapshot<f64>> = ingest(&dir.path().join("m.csv")).unwrap();
        assert_eq!(snaps[0].frame, 3);
        assert_eq!(snaps[0].region.area(), 4.0);

        std::fs::write(dir.path().join("12.wkt"), "POLYGON((0 0,2 0,2 2,0 2,0 0))").unwrap();
        std::fs::write(dir.path().join("4.wkt"), "POLYGON((0 0,1 0,1 1,0 1,0 0))").unwrap();
        let snaps: Vec<Snapshot<f64>> = ingest_dir(dir.path()).unwrap();
        assert_eq!(snaps.iter().map(|s| s.frame).collect::<Vec<_>>(), vec![4, 12]);
    }

    #[test]
    fn write_then_ingest_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let r: Region<f64> = parse_wkt("POLYGON((0.5 0,4 0,4 4.25,0 4,0.5 0))").unwrap();
        let path = dir.path().join("m.csv");
        write_manifest(&path, &[(2, &r), (9, &r)]).unwrap();
        let snaps: Vec<Snapshot<f64>> = ingest(&path).unwrap();
        assert_eq!(snaps.len(), 2);
        assert_eq!(snaps[1].region, r);
    }
}
