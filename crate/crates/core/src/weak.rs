//! The weak decoder: per-candidate median of bucket sums, then keep the
//! largest estimates.

use std::cmp::Ordering;

use crate::config::{Constants, WeakParams};
use crate::error::{Error, Result};
use crate::measure::WeakLayer;
use crate::vector::SparseVector;

/// One weak layer's rows of `μ`.
#[derive(Debug, Clone, Copy)]
pub struct WeakLayerView<'a> {
    pub layer: &'a WeakLayer,
    pub mu: &'a [f64],
}

impl<'a> WeakLayerView<'a> {
    pub fn new(layer: &'a WeakLayer, mu: &'a [f64]) -> Result<Self> {
        if layer.offset() + layer.rows() > mu.len() {
            return Err(Error::LengthMismatch {
                expected: layer.offset() + layer.rows(),
                actual: mu.len(),
            });
        }
        Ok(WeakLayerView { layer, mu })
    }

    /// Bucket sums seen by candidate `c`, one per repetition.
    #[inline]
    fn gather(&self, c: usize, out: &mut [f64]) {
        for (u, slot) in out.iter_mut().enumerate() {
            *slot = self.mu[self.layer.row(u, c)];
        }
    }
}

/// Estimates every candidate and keeps the `ceil(c_top · s)` largest.
///
/// Candidates must be strictly increasing and inside the layer domain. The
/// result is indexed over the layer domain.
pub fn weak_decode(
    view: &WeakLayerView<'_>,
    candidates: &[usize],
    params: &WeakParams,
    constants: &Constants,
) -> Result<SparseVector> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter(
            "weak decoding needs a non-empty candidate set".into(),
        ));
    }
    let t = view.layer.repetitions();
    if t == 0 {
        return Err(Error::InvalidParameter(
            "weak layer has no repetitions".into(),
        ));
    }
    let domain = view.layer.domain();
    if candidates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "candidates must be strictly increasing".into(),
        ));
    }
    if let Some(&last) = candidates.last() {
        if last >= domain {
            return Err(Error::IndexOutOfRange {
                index: last,
                len: domain,
            });
        }
    }

    let mid = (t - 1) / 2;
    let mut buf = vec![0.0; t];
    let mut estimates = Vec::with_capacity(candidates.len());
    for &c in candidates {
        view.gather(c, &mut buf);
        let (_, m, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
        if *m != 0.0 {
            estimates.push((c, *m));
        }
    }
    Ok(top_select_unchecked(
        domain,
        estimates,
        params.output_size(constants),
    ))
}

/// Lower median: the element at index `⌊(t−1)/2⌋` of the sorted values.
pub fn lower_median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("median of an empty list".into()));
    }
    let mut v = values.to_vec();
    let mid = (v.len() - 1) / 2;
    let (_, m, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    Ok(*m)
}

/// Larger magnitude first, then smaller index.
fn rank(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0))
}

/// Keeps the `count` entries of largest magnitude, ties broken by smaller
/// index; exact zeros are never kept.
pub fn top_select(len: usize, estimates: &[(usize, f64)], count: usize) -> Result<SparseVector> {
    let mut kept: Vec<(usize, f64)> = estimates.iter().copied().filter(|e| e.1 != 0.0).collect();
    for &(i, v) in &kept {
        if i >= len {
            return Err(Error::IndexOutOfRange { index: i, len });
        }
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "estimate for {i} is not finite"
            )));
        }
    }
    kept.sort_by_key(|e| e.0);
    if kept.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidParameter(
            "duplicate index among estimates".into(),
        ));
    }
    Ok(top_select_unchecked(len, kept, count))
}

fn top_select_unchecked(len: usize, mut kept: Vec<(usize, f64)>, count: usize) -> SparseVector {
    if count == 0 {
        return SparseVector::empty(len);
    }
    if kept.len() > count {
        kept.select_nth_unstable_by(count - 1, rank);
        kept.truncate(count);
    }
    kept.sort_unstable_by_key(|e| e.0);
    let (indices, values) = kept.into_iter().unzip();
    SparseVector::from_sorted_unchecked(len, indices, values)
}
