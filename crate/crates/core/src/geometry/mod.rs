//! Vector regions, raster masks and the conversions between them.

mod contour;
mod raster;
mod validate;
mod wkt;

pub use contour::{vectorize, vectorize_with_warnings};
pub use raster::{rasterize, rasterize_with_warnings};
pub use validate::{validate_region, ValidationReport, Violation};
pub use wkt::{parse_wkt, serialize_wkt};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point2D<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point2D<T> {
    pub fn new(x: T, y: T) -> Self {
        Point2D { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Closed sequence of points; the last point repeats the first.
#[derive(Clone, Debug, PartialEq)]
pub struct Ring<T> {
    points: Vec<Point2D<T>>,
}

impl<T: Scalar> Ring<T> {
    /// Builds a ring, checking closure, the 4-point minimum and finiteness.
    /// `ring` is only used for error reporting.
    pub fn new(points: Vec<Point2D<T>>, ring: usize) -> Result<Self> {
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFiniteCoordinate { ring });
        }
        if points.len() < 4 || points.first() != points.last() {
            return Err(Error::UnclosedRing {
                ring,
                points: points.len(),
            });
        }
        Ok(Ring { points })
    }

    /// Builds a ring without any checks. Use [`validate_region`] to inspect it.
    pub fn from_points_unchecked(points: Vec<Point2D<T>>) -> Self {
        Ring { points }
    }

    /// Closes an open vertex loop by repeating its first vertex.
    pub fn from_open(mut points: Vec<Point2D<T>>, ring: usize) -> Result<Self> {
        if let Some(&first) = points.first() {
            points.push(first);
        }
        Ring::new(points, ring)
    }

    pub fn points(&self) -> &[Point2D<T>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Segments between consecutive points.
    pub fn segments(&self) -> impl Iterator<Item = (Point2D<T>, Point2D<T>)> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }

    /// Shoelace signed area (positive for counter-clockwise in a y-up frame).
    pub fn signed_area(&self) -> T {
        let twice: T = self.segments().map(|(a, b)| a.x * b.y - b.x * a.y).sum();
        twice * T::half()
    }

    pub fn perimeter(&self) -> T {
        self.segments().map(|(a, b)| a.distance(&b)).sum()
    }

    pub fn map(&self, f: impl Fn(Point2D<T>) -> Point2D<T>) -> Self {
        Ring {
            points: self.points.iter().copied().map(f).collect(),
        }
    }
}

/// Polygon with one exterior ring and zero or more holes.
#[derive(Clone, Debug, PartialEq)]
pub struct Region<T> {
    pub exterior: Ring<T>,
    pub holes: Vec<Ring<T>>,
}

impl<T: Scalar> Region<T> {
    pub fn new(exterior: Ring<T>, holes: Vec<Ring<T>>) -> Self {
        Region { exterior, holes }
    }

    pub fn rings(&self) -> impl Iterator<Item = &Ring<T>> {
        std::iter::once(&self.exterior).chain(self.holes.iter())
    }

    /// Exterior area minus hole areas.
    pub fn area(&self) -> T {
        let holes: T = self.holes.iter().map(|h| h.signed_area().abs()).sum();
        self.exterior.signed_area().abs() - holes
    }

    pub fn perimeter(&self) -> T {
        self.rings().map(Ring::perimeter).sum()
    }

    /// Axis-aligned bounding box `(min, max)` of the exterior.
    pub fn bounds(&self) -> (Point2D<T>, Point2D<T>) {
        let mut lo = Point2D::new(T::infinity(), T::infinity());
        let mut hi = Point2D::new(T::neg_infinity(), T::neg_infinity());
        for p in self.exterior.points() {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    pub fn map(&self, f: impl Fn(Point2D<T>) -> Point2D<T> + Copy) -> Self {
        Region {
            exterior: self.exterior.map(f),
            holes: self.holes.iter().map(|h| h.map(f)).collect(),
        }
    }
}

/// World-to-pixel map: `px = scale_x * x + offset_x`, `py = scale_y * y + offset_y`.
///
/// Pixel `(i, j)` covers `[i, i+1) x [j, j+1)` in pixel space; its center is at
/// `(i + 0.5, j + 0.5)`. A negative `scale_y` gives a y-up world frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Affine<T> {
    pub scale_x: T,
    pub scale_y: T,
    pub offset_x: T,
    pub offset_y: T,
}

impl<T: Scalar> Affine<T> {
    pub fn identity() -> Self {
        Affine {
            scale_x: T::one(),
            scale_y: T::one(),
            offset_x: T::zero(),
            offset_y: T::zero(),
        }
    }

    pub fn new(scale_x: T, scale_y: T, offset_x: T, offset_y: T) -> Result<Self> {
        let t = Affine {
            scale_x,
            scale_y,
            offset_x,
            offset_y,
        };
        t.check()?;
        Ok(t)
    }

    pub fn check(&self) -> Result<()> {
        let all_finite = [self.scale_x, self.scale_y, self.offset_x, self.offset_y]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite || self.scale_x == T::zero() || self.scale_y == T::zero() {
            return Err(Error::DegenerateTransform);
        }
        Ok(())
    }

    /// Uniform-scale transform that places the box `[lo, hi]` inside a
    /// `width x height` grid with `margin` pixels free on every side.
    pub fn fit(lo: Point2D<T>, hi: Point2D<T>, width: usize, height: usize, margin: T) -> Result<Self> {
        let avail_w = T::from_usize_lossy(width) - T::two() * margin;
        let avail_h = T::from_usize_lossy(height) - T::two() * margin;
        if avail_w <= T::zero() || avail_h <= T::zero() {
            return Err(Error::InvalidParameter(format!(
                "margin {margin} leaves no room in a {width}x{height} grid"
            )));
        }
        let span_x = (hi.x - lo.x).max(T::epsilon());
        let span_y = (hi.y - lo.y).max(T::epsilon());
        let scale = (avail_w / span_x).min(avail_h / span_y);
        let cx = (lo.x + hi.x) * T::half();
        let cy = (lo.y + hi.y) * T::half();
        Affine::new(
            scale,
            scale,
            T::from_usize_lossy(width) * T::half() - scale * cx,
            T::from_usize_lossy(height) * T::half() - scale * cy,
        )
    }

    pub fn to_pixel(&self, p: Point2D<T>) -> Point2D<T> {
        Point2D::new(self.scale_x * p.x + self.offset_x, self.scale_y * p.y + self.offset_y)
    }

    pub fn to_world(&self, p: Point2D<T>) -> Point2D<T> {
        Point2D::new(
            (p.x - self.offset_x) / self.scale_x,
            (p.y - self.offset_y) / self.scale_y,
        )
    }

    /// World area covered by one pixel.
    pub fn pixel_area(&self) -> T {
        T::one() / (self.scale_x * self.scale_y).abs()
    }
}

/// Binary occupancy grid, row-major, `true` = foreground.
#[derive(Clone, Debug, PartialEq)]
pub struct RasterMask<T> {
    width: usize,
    height: usize,
    cells: Vec<bool>,
    transform: Affine<T>,
}

impl<T: Scalar> RasterMask<T> {
    /// All-background mask.
    pub fn new(width: usize, height: usize, transform: Affine<T>) -> Result<Self> {
        Self::from_cells(width, height, vec![false; width * height], transform)
    }

    pub fn from_cells(width: usize, height: usize, cells: Vec<bool>, transform: Affine<T>) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::RasterTooSmall { width, height });
        }
        if cells.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} cells for a {width}x{height} grid",
                cells.len()
            )));
        }
        transform.check()?;
        Ok(RasterMask {
            width,
            height,
            cells,
            transform,
        })
    }

    /// Builds a mask from a predicate on pixel coordinates `(x, y)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        transform: Affine<T>,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        let mut cells = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                cells.push(f(x, y));
            }
        }
        Self::from_cells(width, height, cells, transform)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn transform(&self) -> &Affine<T> {
        &self.transform
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.cells[y * self.width + x]
    }

    /// Like [`get`](Self::get) but out-of-grid coordinates read as background.
    #[inline]
    pub fn get_signed(&self, x: isize, y: isize) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.cells[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.cells[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|&c| c)
    }

    /// Foreground area in world units.
    pub fn area(&self) -> T {
        T::from_usize_lossy(self.count()) * self.transform.pixel_area()
    }

    pub fn same_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                left: self.dims(),
                right: other.dims(),
            });
        }
        Ok(())
    }

    /// Pixel-wise complement, keeping dims and transform.
    pub fn complement(&self) -> Self {
        RasterMask {
            cells: self.cells.iter().map(|c| !c).collect(),
            ..self.clone()
        }
    }

    /// `true` if every foreground pixel of `self` is also foreground in `other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.dims() == other.dims() && self.cells.iter().zip(&other.cells).all(|(&a, &b)| !a || b)
    }
}

/// A region observed at one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot<T> {
    pub frame: u64,
    /// Frame time normalized to `[0, 1]` over the sequence span.
    pub t_norm: T,
    pub region: Region<T>,
}

/// Non-fatal conditions reported by raster conversions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RasterWarning {
    /// The region does not overlap the grid at all.
    OutsideGrid,
    /// Part of the region falls outside the grid.
    Clipped,
    /// Foreground components other than the largest were discarded.
    DroppedComponents { count: usize, pixels: usize },
}

/// Fixed raster geometry shared by every mask of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RasterGrid<T> {
    pub width: usize,
    pub height: usize,
    pub transform: Affine<T>,
}

impl<T: Scalar> RasterGrid<T> {
    pub fn new(width: usize, height: usize, transform: Affine<T>) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::RasterTooSmall { width, height });
        }
        transform.check()?;
        Ok(RasterGrid {
            width,
            height,
            transform,
        })
    }

    pub fn rasterize(&self, region: &Region<T>) -> Result<RasterMask<T>> {
        rasterize(region, self.width, self.height, self.transform)
    }

    pub fn empty_mask(&self) -> RasterMask<T> {
        RasterMask::new(self.width, self.height, self.transform).expect("grid dims validated")
    }
}
