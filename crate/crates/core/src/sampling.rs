//! Snapshot-sequence compression: periodic and distance-based sampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{RasterGrid, RasterMask, Snapshot};
use crate::metrics::jaccard_index;
use crate::scalar::Scalar;

/// `1 - JI(a, b)`.
pub fn jaccard_distance<T: Scalar>(a: &RasterMask<T>, b: &RasterMask<T>) -> Result<T> {
    Ok(T::one() - jaccard_index(a, b)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplingMethod {
    Periodic {
        d: usize,
    },
    Distance {
        alpha: f64,
        max_len: Option<usize>,
        metric: String,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompressionResult<T> {
    pub kept: Vec<Snapshot<T>>,
    /// Positions of `kept` in the input sequence.
    pub kept_indices: Vec<usize>,
    pub dropped_count: usize,
    pub method: SamplingMethod,
    /// Distances between consecutive kept snapshots; empty for periodic sampling.
    pub pairwise_distances: Vec<T>,
    /// The final snapshot was appended regardless of the selection rule.
    pub forced_last: bool,
}

impl<T: Scalar> CompressionResult<T> {
    pub fn kept_frames(&self) -> Vec<u64> {
        self.kept.iter().map(|s| s.frame).collect()
    }
}

/// Indices `{0, d, 2d, ...} < n`, plus `n - 1` when `append_last` and missing.
pub fn periodic_indices(n: usize, d: usize, append_last: bool) -> Result<Vec<usize>> {
    if d == 0 {
        return Err(Error::InvalidParameter("downsampling factor d must be >= 1".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("empty sequence".into()));
    }
    let mut idx: Vec<usize> = (0..n).step_by(d).collect();
    if append_last && idx.last() != Some(&(n - 1)) {
        idx.push(n - 1);
    }
    Ok(idx)
}

pub fn periodic_sample<T: Scalar>(seq: &[Snapshot<T>], d: usize, append_last: bool) -> Result<CompressionResult<T>> {
    let idx = periodic_indices(seq.len(), d, append_last)?;
    let forced_last = append_last && !(seq.len() - 1).is_multiple_of(d);
    Ok(CompressionResult {
        kept: idx.iter().map(|&i| seq[i].clone()).collect(),
        dropped_count: seq.len() - idx.len(),
        kept_indices: idx,
        method: SamplingMethod::Periodic { d },
        pairwise_distances: Vec::new(),
        forced_last,
    })
}

/// Greedy selection on precomputed masks: keep `masks[i]` iff its Jaccard
/// distance to the last kept mask is strictly greater than `alpha`.
///
/// Returns kept indices, their consecutive distances and whether the last
/// index was force-appended. With `append_last` and `max_len`, one slot is
/// reserved for the final mask.
pub fn distance_based_indices<T: Scalar>(
    masks: &[RasterMask<T>],
    alpha: T,
    max_len: Option<usize>,
    append_last: bool,
) -> Result<(Vec<usize>, Vec<T>, bool)> {
    if masks.is_empty() {
        return Err(Error::InvalidParameter("empty sequence".into()));
    }
    if !(alpha >= T::zero()) {
        return Err(Error::InvalidParameter(format!("alpha must be >= 0, got {alpha}")));
    }
    if max_len == Some(0) {
        return Err(Error::InvalidParameter("max_len must be >= 1".into()));
    }
    let last = masks.len() - 1;
    let cap = match max_len {
        Some(m) if append_last && m >= 2 => m - 1,
        Some(m) => m,
        None => usize::MAX,
    };
    let mut kept = vec![0];
    let mut dists = Vec::new();
    for i in 1..masks.len() {
        if kept.len() >= cap {
            break;
        }
        let d = jaccard_distance(&masks[i], &masks[*kept.last().expect("non-empty")])?;
        if d > alpha {
            kept.push(i);
            dists.push(d);
        }
    }
    let mut forced = false;
    let room = max_len.is_none_or(|m| kept.len() < m);
    if append_last && room && *kept.last().expect("non-empty") != last {
        let d = jaccard_distance(&masks[last], &masks[*kept.last().expect("non-empty")])?;
        kept.push(last);
        dists.push(d);
        forced = true;
    }
    Ok((kept, dists, forced))
}

/// Distance-based sampling with Jaccard distance on masks rasterized at `grid`.
pub fn distance_based_sample<T: Scalar>(
    seq: &[Snapshot<T>],
    alpha: T,
    max_len: Option<usize>,
    grid: &RasterGrid<T>,
    append_last: bool,
) -> Result<CompressionResult<T>> {
    let masks = seq
        .iter()
        .map(|s| grid.rasterize(&s.region))
        .collect::<Result<Vec<_>>>()?;
    let (idx, dists, forced_last) = distance_based_indices(&masks, alpha, max_len, append_last)?;
    Ok(CompressionResult {
        kept: idx.iter().map(|&i| seq[i].clone()).collect(),
        dropped_count: seq.len() - idx.len(),
        kept_indices: idx,
        method: SamplingMethod::Distance {
            alpha: alpha.as_f64(),
            max_len,
            metric: "jaccard".into(),
        },
        pairwise_distances: dists,
        forced_last,
    })
}
