//! Overlap, Hausdorff and temporal-consistency metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Affine, Point2D, RasterMask, Region};
use crate::scalar::Scalar;

/// `|A ∩ B| / |A ∪ B|` by pixel counting; 1.0 when both masks are empty.
pub fn jaccard_index<T: Scalar>(a: &RasterMask<T>, b: &RasterMask<T>) -> Result<T> {
    a.same_dims(b)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&p, &q) in a.cells().iter().zip(b.cells()) {
        inter += (p && q) as usize;
        union += (p || q) as usize;
    }
    if union == 0 {
        return Ok(T::one());
    }
    Ok(T::from_usize_lossy(inter) / T::from_usize_lossy(union))
}

/// `max_{a in A} min_{b in B} |a - b|`, exact over the finite sets.
///
/// The inner scan stops as soon as a point of `B` closer than the running
/// maximum is found, since such an `a` cannot raise the maximum.
pub fn directed_hausdorff<T: Scalar>(a: &[Point2D<T>], b: &[Point2D<T>]) -> Result<T> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut cmax = T::zero();
    for p in a {
        let mut cmin = T::infinity();
        for q in b {
            let (dx, dy) = (p.x - q.x, p.y - q.y);
            let d = dx * dx + dy * dy;
            if d < cmax {
                cmin = d;
                break;
            }
            if d < cmin {
                cmin = d;
            }
        }
        if cmin > cmax {
            cmax = cmin;
        }
    }
    Ok(cmax.sqrt())
}

/// Symmetric Hausdorff distance.
pub fn hausdorff<T: Scalar>(a: &[Point2D<T>], b: &[Point2D<T>]) -> Result<T> {
    Ok(directed_hausdorff(a, b)?.max(directed_hausdorff(b, a)?))
}

/// Foreground pixels with a 4-neighbour in the background (or off-grid),
/// as pixel-index coordinates. The result is an 8-connected outline.
pub fn boundary_pixels<T: Scalar>(mask: &RasterMask<T>) -> Vec<Point2D<T>> {
    let (w, h) = mask.dims();
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            let (xi, yi) = (x as isize, y as isize);
            let edge = !mask.get_signed(xi - 1, yi)
                || !mask.get_signed(xi + 1, yi)
                || !mask.get_signed(xi, yi - 1)
                || !mask.get_signed(xi, yi + 1);
            if edge {
                out.push(Point2D::new(T::from_usize_lossy(x), T::from_usize_lossy(y)));
            }
        }
    }
    out
}

/// Which point sets the Hausdorff distance is measured on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HdMode {
    /// Boundary pixels of the rasterized regions.
    #[default]
    BoundaryPixels,
    /// Polygon vertices mapped into pixel space.
    PolygonVertices,
}

/// Hausdorff distance between mask outlines, in pixels times `scale`.
pub fn mask_hausdorff<T: Scalar>(a: &RasterMask<T>, b: &RasterMask<T>, scale: T) -> Result<T> {
    a.same_dims(b)?;
    Ok(hausdorff(&boundary_pixels(a), &boundary_pixels(b))? * scale)
}

/// Hausdorff distance between all ring vertices, in pixel space times `scale`.
pub fn vertex_hausdorff<T: Scalar>(a: &Region<T>, b: &Region<T>, transform: &Affine<T>, scale: T) -> Result<T> {
    let pts = |r: &Region<T>| -> Vec<Point2D<T>> {
        r.rings()
            .flat_map(|ring| ring.points().iter().map(|&p| transform.to_pixel(p)))
            .collect()
    };
    Ok(hausdorff(&pts(a), &pts(b))? * scale)
}

/// `TC_t = 1 - |A_t \ A_{t+stride}| / |A_{t+stride}|` for each `t`.
/// `None` marks samples where `A_{t+stride}` is empty.
pub fn temporal_consistency<T: Scalar>(seq: &[RasterMask<T>], stride: usize) -> Result<Vec<Option<T>>> {
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be positive".into()));
    }
    if stride >= seq.len() {
        return Err(Error::InvalidParameter(format!(
            "stride {stride} not below sequence length {}",
            seq.len()
        )));
    }
    (0..seq.len() - stride)
        .map(|t| {
            let (now, later) = (&seq[t], &seq[t + stride]);
            now.same_dims(later)?;
            let later_area = later.count();
            if later_area == 0 {
                return Ok(None);
            }
            let lost = now.cells().iter().zip(later.cells()).filter(|(&p, &q)| p && !q).count();
            Ok(Some(
                T::one() - T::from_usize_lossy(lost) / T::from_usize_lossy(later_area),
            ))
        })
        .collect()
}

/// `a * r^(n-1)` for `n = 1..=count`.
pub fn stride_progression(a: usize, r: usize, count: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(count);
    let mut s = a;
    for _ in 0..count {
        out.push(s);
        s = s.saturating_mul(r);
    }
    out
}

/// Mean, population standard deviation and range of a sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary<T> {
    pub count: usize,
    pub mean: T,
    pub sd: T,
    pub min: T,
    pub max: T,
}

impl<T: Scalar> Summary<T> {
    pub fn of(values: &[T]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = T::from_usize_lossy(values.len());
        let mean = values.iter().copied().sum::<T>() / n;
        let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
        let (min, max) = values.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
        Some(Summary {
            count: values.len(),
            mean,
            sd: var.sqrt(),
            min,
            max,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrideStats<T> {
    pub stride: usize,
    pub stats: Summary<T>,
    /// Samples dropped because the later region was empty.
    pub undefined: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TcReport<T> {
    pub strides: Vec<usize>,
    pub per_stride_mean: Vec<T>,
    pub per_stride_sd: Vec<T>,
    pub per_stride: Vec<StrideStats<T>>,
    /// Strides that were requested but could not be evaluated.
    pub skipped_strides: Vec<usize>,
    /// Mean of the per-stride means.
    pub overall_mean: T,
}

/// Temporal consistency over the strides `a * r^(n-1)`, `n = 1..=count`.
pub fn tc_sweep<T: Scalar>(seq: &[RasterMask<T>], a: usize, r: usize, count: usize) -> Result<TcReport<T>> {
    tc_sweep_detailed(seq, a, r, count).map(|(report, _)| report)
}

/// Like [`tc_sweep`] but also returns the raw per-`t` values of each evaluated stride.
pub fn tc_sweep_detailed<T: Scalar>(
    seq: &[RasterMask<T>],
    a: usize,
    r: usize,
    count: usize,
) -> Result<(TcReport<T>, Vec<Vec<Option<T>>>)> {
    let mut per_stride = Vec::new();
    let mut raw = Vec::new();
    let mut skipped = Vec::new();
    for stride in stride_progression(a, r, count) {
        if stride == 0 || stride >= seq.len() {
            log::warn!("tc_sweep: stride {stride} skipped (sequence length {})", seq.len());
            skipped.push(stride);
            continue;
        }
        let values = temporal_consistency(seq, stride)?;
        let defined: Vec<T> = values.iter().flatten().copied().collect();
        match Summary::of(&defined) {
            Some(stats) => {
                per_stride.push(StrideStats {
                    stride,
                    stats,
                    undefined: values.len() - defined.len(),
                });
                raw.push(values);
            }
            None => {
                log::warn!("tc_sweep: stride {stride} has no defined samples");
                skipped.push(stride);
            }
        }
    }
    if per_stride.is_empty() {
        return Err(Error::NoValidStride { len: seq.len() });
    }
    let means: Vec<T> = per_stride.iter().map(|s| s.stats.mean).collect();
    let overall_mean = means.iter().copied().sum::<T>() / T::from_usize_lossy(means.len());
    Ok((
        TcReport {
            strides: per_stride.iter().map(|s| s.stride).collect(),
            per_stride_mean: means,
            per_stride_sd: per_stride.iter().map(|s| s.stats.sd).collect(),
            per_stride,
            skipped_strides: skipped,
            overall_mean,
        },
        raw,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameScore<T> {
    pub frame: u64,
    pub ji: T,
    /// `None` when either outline is empty.
    pub hd: Option<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport<T> {
    pub per_frame: Vec<FrameScore<T>>,
    pub ji: Option<Summary<T>>,
    pub hd: Option<Summary<T>>,
}

impl<T: Scalar> SimilarityReport<T> {
    pub fn from_scores(per_frame: Vec<FrameScore<T>>) -> Self {
        let ji: Vec<T> = per_frame.iter().map(|s| s.ji).collect();
        let hd: Vec<T> = per_frame.iter().filter_map(|s| s.hd).collect();
        SimilarityReport {
            ji: Summary::of(&ji),
            hd: Summary::of(&hd),
            per_frame,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rect(w: usize, h: usize, x0: usize, x1: usize, y0: usize, y1: usize) -> RasterMask<f64> {
        RasterMask::from_fn(w, h, Affine::identity(), |x, y| {
            (x0..x1).contains(&x) && (y0..y1).contains(&y)
        })
        .unwrap()
    }

    #[test]
    fn jaccard_cases() {
        let full = rect(10, 10, 0, 10, 0, 10);
        let left = rect(10, 10, 0, 5, 0, 10);
        let right = rect(10, 10, 5, 10, 0, 10);
        assert_eq!(jaccard_index(&full, &full).unwrap(), 1.0);
        assert_eq!(jaccard_index(&left, &right).unwrap(), 0.0);
        assert_eq!(jaccard_index(&full, &left).unwrap(), 0.5);
        let empty = rect(10, 10, 0, 0, 0, 0);
        assert_eq!(jaccard_index(&empty, &empty).unwrap(), 1.0);
        assert_eq!(jaccard_index(&empty, &left).unwrap(), 0.0);
        let other = rect(5, 10, 0, 5, 0, 10);
        assert!(matches!(
            jaccard_index(&full, &other),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn hausdorff_cases() {
        let p = |x: f64, y: f64| Point2D::new(x, y);
        assert_eq!(directed_hausdorff(&[p(0.0, 0.0)], &[p(3.0, 4.0)]).unwrap(), 5.0);
        let a = vec![p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0)];
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        let mut b = a.clone();
        b.push(p(0.0, 10.0));
        assert_eq!(hausdorff(&a, &b).unwrap(), 9.0);
        assert_eq!(directed_hausdorff(&a, &b).unwrap(), 0.0);
        assert!(matches!(hausdorff(&[], &a), Err(Error::EmptySet)));
    }

    #[test]
    fn offset_square_outlines() {
        let a = rect(20, 12, 2, 6, 4, 8);
        let b = rect(20, 12, 5, 9, 4, 8);
        assert_eq!(mask_hausdorff(&a, &b, 1.0).unwrap(), 3.0);
        assert_eq!(mask_hausdorff(&a, &b, 2.5).unwrap(), 7.5);
    }

    #[test]
    fn boundary_of_filled_rect() {
        let a = rect(10, 10, 2, 7, 2, 6);
        // 5x4 rectangle: 5*4 - 3*2 interior pixels.
        assert_eq!(boundary_pixels(&a).len(), 14);
    }

    #[test]
    fn tc_cases() {
        let full = rect(10, 10, 0, 10, 0, 10);
        let left = rect(10, 10, 0, 5, 0, 10);
        let empty = rect(10, 10, 0, 0, 0, 0);
        assert_eq!(
            temporal_consistency(&[left.clone(), full.clone()], 1).unwrap(),
            vec![Some(1.0)]
        );
        assert_eq!(
            temporal_consistency(&[full.clone(), left.clone()], 1).unwrap(),
            vec![Some(0.0)]
        );
        assert_eq!(temporal_consistency(&[full.clone(), empty], 1).unwrap(), vec![None]);
        assert!(temporal_consistency(&[full.clone(), left], 2).is_err());
        assert!(temporal_consistency(&[full], 0).is_err());
    }

    #[test]
    fn default_stride_set() {
        assert_eq!(stride_progression(1, 10, 5), vec![1, 10, 100, 1000, 10000]);
    }

    #[test]
    fn sweep_nested_and_skips() {
        let seq: Vec<_> = (1..=12).map(|k| rect(12, 12, 0, k, 0, 12)).collect();
        let rep = tc_sweep(&seq, 1, 10, 3).unwrap();
        assert_eq!(rep.strides, vec![1, 10]);
        assert_eq!(rep.skipped_strides, vec![100]);
        assert_eq!(rep.overall_mean, 1.0);
        assert!(matches!(
            tc_sweep(&seq, 20, 2, 2),
            Err(Error::NoValidStride { len: 12 })
        ));
    }

    #[test]
    fn summary_population_sd() {
        let s = Summary::of(&[1.0, 3.0]).unwrap();
        assert_eq!((s.mean, s.sd, s.min, s.max), (2.0, 1.0, 1.0, 3.0));
        assert!(Summary::<f64>::of(&[]).is_none());
    }

    fn brute_directed(a: &[Point2D<f64>], b: &[Point2D<f64>]) -> f64 {
        a.iter()
            .map(|p| {
                b.iter()
                    .map(|q| ((p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y)).sqrt())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }

    fn points(n: usize) -> impl Strategy<Value = Vec<Point2D<f64>>> {
        prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..n)
            .prop_map(|v| v.into_iter().map(|(x, y)| Point2D::new(x, y)).collect())
    }

    fn mask(w: usize, h: usize) -> impl Strategy<Value = RasterMask<f64>> {
        prop::collection::vec(any::<bool>(), w * h)
            .prop_map(move |c| RasterMask::from_cells(w, h, c, Affine::identity()).unwrap())
    }

    proptest! {
        #[test]
        fn directed_matches_brute(a in points(200), b in points(200)) {
            prop_assert_eq!(directed_hausdorff(&a, &b).unwrap(), brute_directed(&a, &b));
            prop_assert_eq!(hausdorff(&a, &b).unwrap(), hausdorff(&b, &a).unwrap());
        }

        #[test]
        fn jaccard_symmetric_and_bounded(a in mask(8, 8), b in mask(8, 8)) {
            let j = jaccard_index(&a, &b).unwrap();
            prop_assert_eq!(j, jaccard_index(&b, &a).unwrap());
            prop_assert!((0.0..=1.0).contains(&j));
        }

        #[test]
        fn jaccard_distance_triangle(a in mask(6, 6), b in mask(6, 6), c in mask(6, 6)) {
            let d = |x: &RasterMask<f64>, y: &RasterMask<f64>| 1.0 - jaccard_index(x, y).unwrap();
            prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
        }

        #[test]
        fn tc_bounds(seq in prop::collection::vec(mask(6, 6), 3..8)) {
            let tc = temporal_consistency(&seq, 1).unwrap();
            for (t, v) in tc.iter().enumerate() {
                if let Some(v) = v {
                    let lower = 1.0 - seq[t].count() as f64 / seq[t + 1].count() as f64;
                    prop_assert!(*v <= 1.0 && *v >= lower - 1e-12);
                }
            }
        }
    }
}
