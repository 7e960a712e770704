//! Minkowski distances and the distance sets built from them.
//!
//! `d_p(x, y) = (Σ |xᵢ − yᵢ|^p)^(1/p)` for any `p > 0`. For `p < 1` this is
//! not a metric (the triangle inequality fails) but is still symmetric,
//! non-negative and zero on the diagonal.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::store::{DatasetSlice, EmbeddingRecord, Label};
use crate::{CellKey, Error, Norm, Result};

/// Pair counts above this are computed in parallel.
pub const PARALLEL_PAIR_THRESHOLD: usize = 4096;

impl AsRef<[f64]> for EmbeddingRecord {
    fn as_ref(&self) -> &[f64] {
        &self.vector
    }
}

#[inline]
fn minkowski_raw(x: &[f64], y: &[f64], p: f64) -> f64 {
    let diffs = x.iter().zip(y).map(|(a, b)| (a - b).abs());
    if p == 1.0 {
        diffs.sum()
    } else if p == 2.0 {
        diffs.map(|d| d * d).sum::<f64>().sqrt()
    } else if p == 0.5 {
        let s: f64 = diffs.map(f64::sqrt).sum();
        s * s
    } else {
        diffs.map(|d| d.powf(p)).sum::<f64>().powf(p.recip())
    }
}

/// Minkowski distance of order `p` between two equal-length vectors.
///
/// Fails on length mismatch, on non-finite components, and when the result
/// overflows to infinity.
pub fn minkowski(x: &[f64], y: &[f64], p: Norm) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    finite(minkowski_raw(x, y, p.get()))
}

fn finite(d: f64) -> Result<f64> {
    if d.is_finite() {
        Ok(d)
    } else {
        Err(Error::Overflow)
    }
}

fn check_points<V: AsRef<[f64]>>(points: &[V]) -> Result<usize> {
    let dim = points.first().map_or(0, |v| v.as_ref().len());
    for v in points {
        let v = v.as_ref();
        if v.len() != dim {
            return Err(Error::LengthMismatch(dim, v.len()));
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
    }
    Ok(dim)
}

/// `C(m, 2)`.
pub fn pair_count(m: usize) -> usize {
    m * m.saturating_sub(1) / 2
}

/// All `C(m, 2)` distances among `points`, ordered lexicographically by
/// `(i, j)` with `i < j`. The order, and every value, is independent of the
/// number of worker threads.
pub fn pairwise_intra<V: AsRef<[f64]> + Sync>(points: &[V], p: Norm) -> Result<Vec<f64>> {
    let m = points.len();
    if m < 2 {
        return Err(Error::TooFew {
            needed: 2,
            found: m,
        });
    }
    check_points(points)?;
    let p = p.get();
    let total = pair_count(m);
    let mut values = vec![0.0; total];

    // Split the output into one row per i (holding j = i+1..m).
    let mut rows = Vec::with_capacity(m - 1);
    let mut rest = values.as_mut_slice();
    for i in 0..m - 1 {
        let (row, tail) = rest.split_at_mut(m - 1 - i);
        rows.push((i, row));
        rest = tail;
    }
    let fill = |(i, row): (usize, &mut [f64])| {
        let x = points[i].as_ref();
        for (out, y) in row.iter_mut().zip(&points[i + 1..]) {
            *out = minkowski_raw(x, y.as_ref(), p);
        }
    };
    if total > PARALLEL_PAIR_THRESHOLD {
        rows.into_par_iter().for_each(fill);
    } else {
        rows.into_iter().for_each(fill);
    }

    if values.iter().any(|d| !d.is_finite()) {
        return Err(Error::Overflow);
    }
    Ok(values)
}

/// Distances from one point to every training point, in training order.
pub fn cross_distances<V: AsRef<[f64]>>(point: &[f64], train: &[V], p: Norm) -> Result<Vec<f64>> {
    if train.is_empty() {
        return Err(Error::TooFew {
            needed: 1,
            found: 0,
        });
    }
    let dim = check_points(train)?;
    if point.len() != dim {
        return Err(Error::LengthMismatch(point.len(), dim));
    }
    if point.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite);
    }
    train
        .iter()
        .map(|y| finite(minkowski_raw(point, y.as_ref(), p.get())))
        .collect()
}

/// Intra-class distances of one class in one grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSample {
    pub label: Label,
    pub cell: CellKey,
    /// Class population size `m`; `values.len() == C(m, 2)`.
    pub population: usize,
    pub values: Vec<f64>,
}

impl DistanceSample {
    /// Intra-class distances of `label` within a training slice under norm
    /// `p`. The slice supplies `r` and `n` of the cell key.
    pub fn intra(slice: &DatasetSlice, label: Label, p: Norm) -> Result<Self> {
        let records = slice.class(label);
        Ok(DistanceSample {
            label,
            cell: CellKey::new(slice.config.r, slice.config.n, p),
            population: records.len(),
            values: pairwise_intra(records, p)?,
        })
    }

    pub fn pair_count(&self) -> usize {
        self.values.len()
    }

    /// `(i, j, distance)` in contract order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let m = self.population;
        (0..m)
            .flat_map(move |i| (i + 1..m).map(move |j| (i, j)))
            .zip(&self.values)
            .map(|((i, j), &d)| (i, j, d))
    }

    /// CSV with header `i,j,distance`, one row per pair.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "i,j,distance")?;
        for (i, j, d) in self.pairs() {
            writeln!(out, "{i},{j},{d:?}")?;
        }
        out.flush()
    }
}
