//! Exact Euclidean distance transforms on pixel grids.
//!
//! Uses the separable lower-envelope-of-parabolas algorithm: a 1D pass along
//! rows, then along columns, on squared distances. Squared distances are
//! integers, so results are exact and only the final square root rounds.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::geometry::{Affine, RasterMask};
use crate::scalar::Scalar;

/// Per-pixel signed distance to the nearest opposite-class pixel center, in
/// pixel units: positive on foreground, negative on background.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedDistanceMap<T> {
    width: usize,
    height: usize,
    values: Vec<T>,
    transform: Affine<T>,
}

impl<T: Scalar> SignedDistanceMap<T> {
    pub fn from_values(width: usize, height: usize, values: Vec<T>, transform: Affine<T>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {width}x{height} grid",
                values.len()
            )));
        }
        Ok(SignedDistanceMap {
            width,
            height,
            values,
            transform,
        })
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

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> T {
        self.values[y * self.width + x]
    }

    pub fn transform(&self) -> &Affine<T> {
        &self.transform
    }

    /// Text dump: `width height` on the first line, then one row per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.width, self.height);
        for row in self.values.chunks(self.width) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(" ")).expect("write to String");
        }
        out
    }
}

/// Distance from every pixel to the nearest foreground pixel (row-major).
pub fn edt<T: Scalar>(mask: &RasterMask<T>) -> Result<Vec<T>> {
    if mask.is_empty() {
        return Err(Error::NoForeground);
    }
    let (w, h) = mask.dims();
    let sq = squared_edt(w, h, |i| mask.cells()[i]);
    Ok(sq.into_iter().map(|v: T| v.sqrt()).collect())
}

/// Signed distance map; pixels beyond the grid count as background.
pub fn signed_distance<T: Scalar>(mask: &RasterMask<T>) -> Result<SignedDistanceMap<T>> {
    let (w, h) = mask.dims();
    let fg = mask.count();
    if fg == 0 || fg == w * h {
        return Err(Error::DegenerateMask);
    }
    let to_fg: Vec<T> = squared_edt(w, h, |i| mask.cells()[i]);

    // Distance to background on a grid padded by one background pixel.
    let (pw, ph) = (w + 2, h + 2);
    let padded_bg = |i: usize| {
        let (x, y) = (i % pw, i / pw);
        x == 0 || y == 0 || x == pw - 1 || y == ph - 1 || !mask.get(x - 1, y - 1)
    };
    let to_bg: Vec<T> = squared_edt(pw, ph, padded_bg);

    let mut values = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let v = if mask.get(x, y) {
                to_bg[(y + 1) * pw + x + 1].sqrt()
            } else {
                -to_fg[y * w + x].sqrt()
            };
            values.push(v);
        }
    }
    SignedDistanceMap::from_values(w, h, values, *mask.transform())
}

/// Squared distance to the nearest pixel with `is_site(index)`; infinity if none.
fn squared_edt<T: Scalar>(width: usize, height: usize, is_site: impl Fn(usize) -> bool) -> Vec<T> {
    let mut grid: Vec<T> = (0..width * height)
        .map(|i| if is_site(i) { T::zero() } else { T::infinity() })
        .collect();
    let n = width.max(height);
    let mut scratch = Envelope::with_capacity(n);
    let mut line = vec![T::zero(); n];
    let mut out = vec![T::zero(); n];

    for y in 0..height {
        let row = &mut grid[y * width..(y + 1) * width];
        line[..width].copy_from_slice(row);
        scratch.transform(&line[..width], &mut out[..width]);
        row.copy_from_slice(&out[..width]);
    }
    for x in 0..width {
        for y in 0..height {
            line[y] = grid[y * width + x];
        }
        scratch.transform(&line[..height], &mut out[..height]);
        for y in 0..height {
            grid[y * width + x] = out[y];
        }
    }
    grid
}

/// Lower envelope of parabolas `f(q) + (p - q)^2` over finite sites `q`.
struct Envelope<T> {
    sites: Vec<usize>,
    bounds: Vec<T>,
}

impl<T: Scalar> Envelope<T> {
    fn with_capacity(n: usize) -> Self {
        Envelope {
            sites: Vec::with_capacity(n),
            bounds: Vec::with_capacity(n + 1),
        }
    }

    fn transform(&mut self, f: &[T], out: &mut [T]) {
        self.sites.clear();
        self.bounds.clear();
        let pos = |q: usize| T::from_usize_lossy(q);
        for q in 0..f.len() {
            if !f[q].is_finite() {
                continue;
            }
            loop {
                let Some(&k) = self.sites.last() else {
                    self.sites.push(q);
                    self.bounds.push(T::neg_infinity());
                    break;
                };
                // Abscissa where parabola q overtakes parabola k.
                let s = ((f[q] + pos(q) * pos(q)) - (f[k] + pos(k) * pos(k))) / (T::two() * (pos(q) - pos(k)));
                if s <= *self.bounds.last().expect("bound per site") {
                    self.sites.pop();
                    self.bounds.pop();
                } else {
                    self.sites.push(q);
                    self.bounds.push(s);
                    break;
                }
            }
        }
        if self.sites.is_empty() {
            out.fill(T::infinity());
            return;
        }
        let mut k = 0;
        for (p, o) in out.iter_mut().enumerate() {
            let pp = pos(p);
            while k + 1 < self.sites.len() && self.bounds[k + 1] < pp {
                k += 1;
            }
            let d = pp - pos(self.sites[k]);
            *o = f[self.sites[k]] + d * d;
        }
    }
}
