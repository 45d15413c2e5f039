use super::{Affine, RasterMask, RasterWarning, Region};
use crate::error::Result;
use crate::scalar::Scalar;

/// Scanline rasterization with the even-odd rule sampled at pixel centers.
///
/// A pixel is foreground iff its center lies inside the exterior and outside
/// every hole. Regions outside the grid produce an all-background mask; see
/// [`rasterize_with_warnings`] to observe that case.
pub fn rasterize<T: Scalar>(
    region: &Region<T>,
    width: usize,
    height: usize,
    transform: Affine<T>,
) -> Result<RasterMask<T>> {
    let (mask, warnings) = rasterize_with_warnings(region, width, height, transform)?;
    for w in &warnings {
        log::warn!("rasterize: {w:?}");
    }
    Ok(mask)
}

pub fn rasterize_with_warnings<T: Scalar>(
    region: &Region<T>,
    width: usize,
    height: usize,
    transform: Affine<T>,
) -> Result<(RasterMask<T>, Vec<RasterWarning>)> {
    let mut mask = RasterMask::new(width, height, transform)?;

    let edges: Vec<_> = region
        .rings()
        .flat_map(|ring| ring.segments())
        .map(|(a, b)| (transform.to_pixel(a), transform.to_pixel(b)))
        .filter(|(a, b)| a.y != b.y)
        .collect();

    let mut warnings = Vec::new();
    let (lo, hi) = region.bounds();
    let (plo, phi) = (transform.to_pixel(lo), transform.to_pixel(hi));
    let (min_x, max_x) = (plo.x.min(phi.x), plo.x.max(phi.x));
    let (min_y, max_y) = (plo.y.min(phi.y), plo.y.max(phi.y));
    let w = T::from_usize_lossy(width);
    let h = T::from_usize_lossy(height);
    if max_x <= T::zero() || max_y <= T::zero() || min_x >= w || min_y >= h {
        warnings.push(RasterWarning::OutsideGrid);
        return Ok((mask, warnings));
    }
    if min_x < T::zero() || min_y < T::zero() || max_x > w || max_y > h {
        warnings.push(RasterWarning::Clipped);
    }

    let mut crossings: Vec<T> = Vec::new();
    for row in 0..height {
        let yc = T::from_usize_lossy(row) + T::half();
        crossings.clear();
        for (a, b) in &edges {
            // Half-open in y so a vertex on the scanline is counted once.
            if (a.y > yc) != (b.y > yc) {
                crossings.push(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
        crossings.sort_by(|p, q| p.partial_cmp(q).unwrap_or(std::cmp::Ordering::Equal));
        for span in crossings.chunks_exact(2) {
            let first = first_center_at_or_after(span[0], width);
            let end = first_center_at_or_after(span[1], width);
            for col in first..end {
                mask.set(col, row, true);
            }
        }
    }
    Ok((mask, warnings))
}

/// Index of the first column whose center `i + 0.5` is `>= x`, clamped to `[0, width]`.
fn first_center_at_or_after<T: Scalar>(x: T, width: usize) -> usize {
    let i = (x - T::half()).ceil();
    if i <= T::zero() {
        0
    } else {
        i.to_usize().unwrap_or(width).min(width)
    }
}
