//! Shape-based interpolation: blend signed distance maps of two support
//! masks linearly in time and keep the non-negative set.

use rayon::prelude::*;

use crate::distance::{signed_distance, SignedDistanceMap};
use crate::error::{Error, Result};
use crate::geometry::{vectorize_with_warnings, RasterGrid, RasterMask, RasterWarning, Region, Snapshot};
use crate::scalar::Scalar;

/// Pixel-wise `(1 - w) * z1 + w * z2`.
pub fn blend_sdm<T: Scalar>(
    z1: &SignedDistanceMap<T>,
    z2: &SignedDistanceMap<T>,
    w: T,
) -> Result<SignedDistanceMap<T>> {
    if z1.dims() != z2.dims() {
        return Err(Error::DimensionMismatch {
            left: z1.dims(),
            right: z2.dims(),
        });
    }
    if !(w >= T::zero() && w <= T::one()) {
        return Err(Error::InvalidParameter(format!("blend weight {w} outside [0, 1]")));
    }
    let values = z1
        .values()
        .iter()
        .zip(z2.values())
        .map(|(&a, &b)| (T::one() - w) * a + w * b)
        .collect();
    SignedDistanceMap::from_values(z1.width(), z1.height(), values, *z1.transform())
}

/// Foreground wherever the map is `>= 0`.
pub fn zero_crossing_mask<T: Scalar>(z: &SignedDistanceMap<T>) -> RasterMask<T> {
    let cells = z.values().iter().map(|&v| v >= T::zero()).collect();
    RasterMask::from_cells(z.width(), z.height(), cells, *z.transform())
        .expect("distance map dims come from a valid mask")
}

/// One generated frame.
#[derive(Clone, Debug, PartialEq)]
pub struct InterpolatedFrame<T> {
    pub frame: u64,
    /// Zero-crossing mask before vectorization.
    pub mask: RasterMask<T>,
    /// Vectorized region; `None` when the mask came out empty.
    pub region: Option<Region<T>>,
    pub warnings: Vec<RasterWarning>,
}

impl<T: Scalar> InterpolatedFrame<T> {
    pub(crate) fn from_mask(frame: u64, mask: RasterMask<T>) -> Result<Self> {
        if mask.is_empty() {
            log::warn!("frame {frame}: empty interpolated region");
            return Ok(InterpolatedFrame {
                frame,
                mask,
                region: None,
                warnings: vec![],
            });
        }
        let (region, warnings) = vectorize_with_warnings(&mask)?;
        Ok(InterpolatedFrame {
            frame,
            mask,
            region: Some(region),
            warnings,
        })
    }
}

/// Support masks with their signed distance maps computed once.
pub struct ShapeInterpolator<T> {
    frames: Vec<u64>,
    masks: Vec<RasterMask<T>>,
    maps: Vec<SignedDistanceMap<T>>,
}

impl<T: Scalar> ShapeInterpolator<T> {
    /// `supports` must be sorted by strictly increasing frame and share one raster geometry.
    pub fn new(supports: Vec<(u64, RasterMask<T>)>) -> Result<Self> {
        if supports.is_empty() {
            return Err(Error::InvalidParameter("no support snapshots".into()));
        }
        for pair in supports.windows(2) {
            if pair[0].0 >= pair[1].0 {
                return Err(Error::InvalidParameter(format!(
                    "support frames not strictly increasing ({} then {})",
                    pair[0].0, pair[1].0
                )));
            }
            pair[0].1.same_dims(&pair[1].1)?;
        }
        let maps = supports
            .par_iter()
            .map(|(_, m)| signed_distance(m))
            .collect::<Result<Vec<_>>>()?;
        let (frames, masks) = supports.into_iter().unzip();
        Ok(ShapeInterpolator { frames, masks, maps })
    }

    pub fn support_frames(&self) -> &[u64] {
        &self.frames
    }

    /// Zero-crossing mask at `frame`; support frames return their own mask.
    pub fn mask_at(&self, frame: u64) -> Result<RasterMask<T>> {
        let first = self.frames[0];
        let last = *self.frames.last().expect("non-empty");
        if frame < first || frame > last {
            return Err(Error::Extrapolation { frame, first, last });
        }
        match self.frames.binary_search(&frame) {
            Ok(i) => Ok(self.masks[i].clone()),
            Err(i) => {
                let (f1, f2) = (self.frames[i - 1], self.frames[i]);
                let w = T::from_u64(frame - f1).expect("frame fits scalar")
                    / T::from_u64(f2 - f1).expect("frame fits scalar");
                let blended = blend_sdm(&self.maps[i - 1], &self.maps[i], w)?;
                Ok(zero_crossing_mask(&blended))
            }
        }
    }

    pub fn frame(&self, frame: u64) -> Result<InterpolatedFrame<T>> {
        InterpolatedFrame::from_mask(frame, self.mask_at(frame)?)
    }

    /// Generates every requested frame; output order follows `frames`.
    pub fn sequence(&self, frames: &[u64]) -> Result<Vec<InterpolatedFrame<T>>> {
        frames.par_iter().map(|&f| self.frame(f)).collect()
    }
}

/// Rasterizes the support snapshots on `grid` and interpolates every frame in `all_frames`.
pub fn shape_based_sequence<T: Scalar>(
    snapshots: &[Snapshot<T>],
    all_frames: &[u64],
    grid: &RasterGrid<T>,
) -> Result<Vec<InterpolatedFrame<T>>> {
    let supports = snapshots
        .iter()
        .map(|s| Ok((s.frame, grid.rasterize(&s.region)?)))
        .collect::<Result<Vec<_>>>()?;
    ShapeInterpolator::new(supports)?.sequence(all_frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{parse_wkt, Affine};
    use crate::metrics::jaccard_index;
    use proptest::prelude::*;

    fn disk(n: usize, r: f64) -> RasterMask<f64> {
        let c = n as f64 / 2.0;
        RasterMask::from_fn(n, n, Affine::identity(), |x, y| {
            (x as f64 + 0.5 - c).hypot(y as f64 + 0.5 - c) <= r
        })
        .unwrap()
    }

    fn map(values: Vec<f64>) -> SignedDistanceMap<f64> {
        SignedDistanceMap::from_values(values.len(), 1, values, Affine::identity()).unwrap()
    }

    #[test]
    fn blend_endpoints_and_midpoint() {
        let z1 = map(vec![2.0, -1.5, 3.25]);
        let z2 = map(vec![-2.0, 4.0, -0.5]);
        assert_eq!(blend_sdm(&z1, &z2, 0.0).unwrap(), z1);
        assert_eq!(blend_sdm(&z1, &z2, 1.0).unwrap(), z2);
        assert_eq!(blend_sdm(&z1, &z2, 0.5).unwrap().values()[0], 0.0);
        let z3 = map(vec![1.0, 1.0]);
        assert!(matches!(blend_sdm(&z1, &z3, 0.5), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn zero_crossing_inverts_signed_distance() {
        let m = disk(20, 6.0);
        assert_eq!(zero_crossing_mask(&signed_distance(&m).unwrap()), m);
        let neg = map(vec![-1.0; 4]);
        let neg = SignedDistanceMap::from_values(2, 2, neg.values().to_vec(), Affine::identity()).unwrap();
        assert!(zero_crossing_mask(&neg).is_empty());
    }

    #[test]
    fn concentric_disks_blend_to_mid_radius() {
        let z1 = signed_distance(&disk(64, 10.0)).unwrap();
        let z2 = signed_distance(&disk(64, 20.0)).unwrap();
        let mid = zero_crossing_mask(&blend_sdm(&z1, &z2, 0.5).unwrap());
        let lo = std::f64::consts::PI * 14.0 * 14.0;
        let hi = std::f64::consts::PI * 16.0 * 16.0;
        let n = mid.count() as f64;
        assert!(n > lo && n < hi, "count {n}");
    }

    #[test]
    fn squares_blend_to_mid_side() {
        let grid = RasterGrid::new(40, 40, Affine::identity()).unwrap();
        let snaps = vec![
            Snapshot {
                frame: 0,
                t_norm: 0.0,
                region: parse_wkt("POLYGON((15 15,25 15,25 25,15 25,15 15))").unwrap(),
            },
            Snapshot {
                frame: 10,
                t_norm: 1.0,
                region: parse_wkt("POLYGON((9 9,31 9,31 31,9 31,9 9))").unwrap(),
            },
        ];
        let out = shape_based_sequence(&snaps, &[0, 5, 10], &grid).unwrap();
        let truth = grid
            .rasterize(&parse_wkt("POLYGON((12 12,28 12,28 28,12 28,12 12))").unwrap())
            .unwrap();
        let got = grid.rasterize(out[1].region.as_ref().unwrap()).unwrap();
        assert!(jaccard_index(&got, &truth).unwrap() >= 0.95);
        for (f, s) in [(0, &snaps[0]), (2, &snaps[1])] {
            let support = grid.rasterize(&s.region).unwrap();
            let emitted = grid.rasterize(out[f].region.as_ref().unwrap()).unwrap();
            assert_eq!(jaccard_index(&emitted, &support).unwrap(), 1.0);
        }
    }

    #[test]
    fn extrapolation_rejected() {
        let it = ShapeInterpolator::new(vec![(5, disk(16, 3.0)), (9, disk(16, 5.0))]).unwrap();
        assert!(matches!(
            it.mask_at(4),
            Err(Error::Extrapolation {
                frame: 4,
                first: 5,
                last: 9
            })
        ));
        assert!(matches!(it.mask_at(10), Err(Error::Extrapolation { .. })));
    }

    #[test]
    fn nested_sequence_area_is_monotone() {
        let it = ShapeInterpolator::new(vec![(0, disk(48, 4.0)), (10, disk(48, 9.0)), (30, disk(48, 20.0))]).unwrap();
        let frames: Vec<u64> = (0..=30).collect();
        let areas: Vec<usize> = it.sequence(&frames).unwrap().iter().map(|f| f.mask.count()).collect();
        assert!(areas.windows(2).all(|w| w[0] <= w[1]), "{areas:?}");
    }

    #[test]
    fn empty_blend_is_passed_through() {
        // Two single pixels far apart: the midpoint blend is empty.
        let a = RasterMask::<f64>::from_fn(20, 3, Affine::identity(), |x, y| x == 1 && y == 1).unwrap();
        let b = RasterMask::<f64>::from_fn(20, 3, Affine::identity(), |x, y| x == 18 && y == 1).unwrap();
        let it = ShapeInterpolator::new(vec![(0, a), (2, b)]).unwrap();
        let f = it.frame(1).unwrap();
        assert!(f.region.is_none() && f.mask.is_empty());
    }

    fn nested_pair() -> impl Strategy<Value = (RasterMask<f64>, RasterMask<f64>)> {
        (
            prop::collection::vec(any::<bool>(), 144),
            prop::collection::vec(any::<bool>(), 144),
        )
            .prop_map(|(a, b)| {
                let inner: Vec<bool> = a.iter().zip(&b).map(|(x, y)| *x && *y).collect();
                let m1 = RasterMask::from_cells(12, 12, inner, Affine::identity()).unwrap();
                let m2 = RasterMask::from_cells(12, 12, a, Affine::identity()).unwrap();
                (m1, m2)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn blend_respects_nesting((small, big) in nested_pair(), w1 in 0.0f64..1.0, w2 in 0.0f64..1.0) {
            let n = 144;
            prop_assume!(small.count() > 0 && big.count() < n);
            let z1 = signed_distance(&small).unwrap();
            let z2 = signed_distance(&big).unwrap();
            let (lo, hi) = if w1 <= w2 { (w1, w2) } else { (w2, w1) };
            let a = zero_crossing_mask(&blend_sdm(&z1, &z2, lo).unwrap());
            let b = zero_crossing_mask(&blend_sdm(&z1, &z2, hi).unwrap());
            prop_assert!(a.is_subset_of(&b));
            prop_assert_eq!(zero_crossing_mask(&blend_sdm(&z1, &z2, 0.0).unwrap()), small);
            prop_assert_eq!(zero_crossing_mask(&blend_sdm(&z1, &z2, 1.0).unwrap()), big);
        }
    }
}
