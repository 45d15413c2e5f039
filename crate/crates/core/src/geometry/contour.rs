//! Marching squares over pixel corners.
//!
//! Every lattice vertex looks at its 2x2 pixel neighbourhood. Contour segments
//! run along pixel edges, so re-rasterizing the output at pixel centers gives
//! back the traced component exactly. At saddle vertices (two diagonal
//! foreground pixels) the average of the four corners is exactly 0.5, which
//! is treated as foreground: the diagonal pixels stay connected and the
//! contour cuts the corner with two half-pixel chamfers instead of pinching.

use std::collections::VecDeque;

use super::{Point2D, RasterMask, RasterWarning, Region, Ring};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Extracts the largest foreground component as a region. Background
/// components enclosed by it become holes.
pub fn vectorize<T: Scalar>(mask: &RasterMask<T>) -> Result<Region<T>> {
    let (region, warnings) = vectorize_with_warnings(mask)?;
    for w in &warnings {
        log::warn!("vectorize: {w:?}");
    }
    Ok(region)
}

pub fn vectorize_with_warnings<T: Scalar>(mask: &RasterMask<T>) -> Result<(Region<T>, Vec<RasterWarning>)> {
    let (width, height) = mask.dims();
    let (labels, sizes) = label_components(mask);
    let Some(largest) = (0..sizes.len()).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a))) else {
        return Err(Error::NoForeground);
    };

    let mut warnings = Vec::new();
    if sizes.len() > 1 {
        warnings.push(RasterWarning::DroppedComponents {
            count: sizes.len() - 1,
            pixels: sizes.iter().sum::<usize>() - sizes[largest],
        });
    }

    let keep: Vec<bool> = labels.iter().map(|&l| l == Some(largest)).collect();
    let inside = |x: isize, y: isize| {
        x >= 0 && y >= 0 && (x as usize) < width && (y as usize) < height && keep[y as usize * width + x as usize]
    };

    let loops = trace_loops(width, height, &inside);
    let transform = *mask.transform();
    let mut exterior = None;
    let mut holes = Vec::new();
    for pts in loops {
        let twice_area: T = pts
            .iter()
            .zip(pts.iter().cycle().skip(1))
            .map(|(a, b)| a.x * b.y - b.x * a.y)
            .sum();
        let world: Vec<_> = pts.into_iter().map(|p| transform.to_world(p)).collect();
        let ring = Ring::from_open(world, holes.len() + 1)?;
        // Outer boundaries run clockwise on screen (positive in y-down pixel space).
        if twice_area > T::zero() {
            debug_assert!(exterior.is_none(), "single component has one outer loop");
            exterior = Some(ring);
        } else {
            holes.push(ring);
        }
    }
    let exterior = exterior.expect("non-empty component has an outer loop");
    Ok((Region::new(exterior, holes), warnings))
}

/// 8-connected foreground labelling; returns per-pixel labels and component sizes.
fn label_components<T: Scalar>(mask: &RasterMask<T>) -> (Vec<Option<usize>>, Vec<usize>) {
    let (width, height) = mask.dims();
    let mut labels = vec![None; width * height];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..width * height {
        if !mask.cells()[start] || labels[start].is_some() {
            continue;
        }
        let label = sizes.len();
        labels[start] = Some(label);
        queue.push_back(start);
        let mut size = 0;
        while let Some(idx) = queue.pop_front() {
            size += 1;
            let (x, y) = ((idx % width) as isize, (idx / width) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if mask.get_signed(nx, ny) {
                        let n = ny as usize * width + nx as usize;
                        if labels[n].is_none() {
                            labels[n] = Some(label);
                            queue.push_back(n);
                        }
                    }
                }
            }
        }
        sizes.push(size);
    }
    (labels, sizes)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Dir(i8, i8);

impl Dir {
    /// Left turn in y-down screen coordinates.
    fn left(self) -> Dir {
        Dir(self.1, -self.0)
    }
}

/// Traces every boundary loop of the foreground given by `inside`, keeping
/// foreground on the right of travel. Loops are returned open, in pixel
/// coordinates, with collinear vertices removed.
fn trace_loops<T: Scalar>(width: usize, height: usize, inside: &impl Fn(isize, isize) -> bool) -> Vec<Vec<Point2D<T>>> {
    let stride = width + 1;
    let vertex = |x: isize, y: isize| y as usize * stride + x as usize;

    // Up to two outgoing edges per lattice vertex (two only at saddles).
    let mut out: Vec<[Option<Dir>; 2]> = vec![[None, None]; stride * (height + 1)];
    let mut push = |v: usize, d: Dir| {
        let slot = if out[v][0].is_none() { 0 } else { 1 };
        out[v][slot] = Some(d);
    };
    let mut edge_count = 0usize;
    for y in 0..height as isize {
        for x in 0..width as isize {
            if !inside(x, y) {
                continue;
            }
            if !inside(x, y - 1) {
                push(vertex(x, y), Dir(1, 0));
                edge_count += 1;
            }
            if !inside(x + 1, y) {
                push(vertex(x + 1, y), Dir(0, 1));
                edge_count += 1;
            }
            if !inside(x, y + 1) {
                push(vertex(x + 1, y + 1), Dir(-1, 0));
                edge_count += 1;
            }
            if !inside(x - 1, y) {
                push(vertex(x, y + 1), Dir(0, -1));
                edge_count += 1;
            }
        }
    }

    let half = T::half();
    let coord = |v: isize| T::from_isize(v).expect("grid coordinate fits scalar");
    let mut used: Vec<[bool; 2]> = vec![[false, false]; out.len()];
    let mut loops = Vec::new();
    let mut consumed = 0usize;
    for start in 0..out.len() {
        for slot in 0..2 {
            if out[start][slot].is_none() || used[start][slot] {
                continue;
            }
            let mut pts: Vec<Point2D<T>> = Vec::new();
            let (mut x, mut y) = ((start % stride) as isize, (start / stride) as isize);
            let mut v = start;
            let mut s = slot;
            loop {
                used[v][s] = true;
                consumed += 1;
                let d = out[v][s].expect("edge exists");
                x += d.0 as isize;
                y += d.1 as isize;
                v = vertex(x, y);
                let (px, py) = (coord(x), coord(y));
                match out[v] {
                    [Some(a), Some(_)] => {
                        // Saddle: take the left turn and chamfer the corner.
                        let next = d.left();
                        s = if a == next { 0 } else { 1 };
                        debug_assert_eq!(out[v][s], Some(next));
                        pts.push(Point2D::new(
                            px - coord(d.0 as isize) * half,
                            py - coord(d.1 as isize) * half,
                        ));
                        pts.push(Point2D::new(
                            px + coord(next.0 as isize) * half,
                            py + coord(next.1 as isize) * half,
                        ));
                    }
                    _ => {
                        s = 0;
                        pts.push(Point2D::new(px, py));
                    }
                }
                if used[v][s] {
                    break;
                }
            }
            let mut pts = drop_collinear(pts);
            // Start at the top-left vertex.
            if let Some(first) = (0..pts.len()).min_by(|&a, &b| {
                let (p, q) = (pts[a], pts[b]);
                p.y.partial_cmp(&q.y).unwrap().then(p.x.partial_cmp(&q.x).unwrap())
            }) {
                pts.rotate_left(first);
            }
            loops.push(pts);
        }
    }
    debug_assert_eq!(consumed, edge_count);
    loops
}

fn drop_collinear<T: Scalar>(pts: Vec<Point2D<T>>) -> Vec<Point2D<T>> {
    let mut kept: Vec<Point2D<T>> = Vec::with_capacity(pts.len());
    for p in pts {
        while kept.len() >= 2 && collinear(kept[kept.len() - 2], kept[kept.len() - 1], p) {
            kept.pop();
        }
        kept.push(p);
    }
    // Wrap-around: the seam between last and first.
    loop {
        let n = kept.len();
        if n >= 3 && collinear(kept[n - 2], kept[n - 1], kept[0]) {
            kept.pop();
        } else if n >= 3 && collinear(kept[n - 1], kept[0], kept[1]) {
            kept.remove(0);
        } else {
            break;
        }
    }
    kept
}

fn collinear<T: Scalar>(a: Point2D<T>, b: Point2D<T>, c: Point2D<T>) -> bool {
    (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x) == T::zero()
}
