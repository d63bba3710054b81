//! Dense and sparse signal containers.

use crate::error::{Error, Result};

/// A length-`N` signal with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSignal {
    values: Vec<f64>,
}

impl DenseSignal {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSignal(
                "signal length must be at least 1".into(),
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSignal(format!("entry {i} is not finite")));
        }
        Ok(DenseSignal { values })
    }

    pub fn zeros(len: usize) -> Result<Self> {
        Self::new(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    /// Nonzero entries in ascending index order.
    pub fn to_sparse(&self) -> SparseVector {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (i, &v) in self.values.iter().enumerate() {
            if v != 0.0 {
                indices.push(i);
                values.push(v);
            }
        }
        SparseVector {
            len: self.values.len(),
            indices,
            values,
        }
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v * c).collect())
    }
}

/// Index/value pairs over a length-`N` domain.
///
/// Indices are strictly increasing and every stored value is finite and
/// nonzero, so `nnz()` is the support size.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    len: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn empty(len: usize) -> Self {
        SparseVector {
            len,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a vector from entries that must already be sorted by index.
    pub fn from_entries(
        len: usize,
        entries: impl IntoIterator<Item = (usize, f64)>,
    ) -> Result<Self> {
        let mut out = SparseVector::empty(len);
        for (i, v) in entries {
            if i >= len {
                return Err(Error::IndexOutOfRange { index: i, len });
            }
            if let Some(&last) = out.indices.last() {
                if i <= last {
                    return Err(Error::InvalidSignal(format!(
                        "indices must be strictly increasing ({last} then {i})"
                    )));
                }
            }
            if !v.is_finite() || v == 0.0 {
                return Err(Error::InvalidSignal(format!("entry {i} has value {v}")));
            }
            out.indices.push(i);
            out.values.push(v);
        }
        Ok(out)
    }

    /// Builds a vector from unordered entries; duplicate indices are summed and
    /// exact zeros dropped.
    pub fn from_unsorted(len: usize, mut entries: Vec<(usize, f64)>) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        Self::from_entries(len, merged.into_iter().filter(|e| e.1 != 0.0))
    }

    pub(crate) fn from_sorted_unchecked(len: usize, indices: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(values.iter().all(|v| *v != 0.0 && v.is_finite()));
        SparseVector {
            len,
            indices,
            values,
        }
    }

    /// Domain length `N`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Support size.
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    pub fn get(&self, i: usize) -> f64 {
        match self.indices.binary_search(&i) {
            Ok(pos) => self.values[pos],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    pub fn scaled(&self, c: f64) -> SparseVector {
        let mut out = SparseVector::empty(self.len);
        for (i, v) in self.iter() {
            let w = v * c;
            if w != 0.0 {
                out.indices.push(i);
                out.values.push(w);
            }
        }
        out
    }

    /// Merging sum; entries that cancel to exactly zero are dropped.
    pub fn add(&self, other: &SparseVector) -> Result<SparseVector> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                actual: other.len,
            });
        }
        let mut out = SparseVector::empty(self.len);
        let (mut a, mut b) = (0, 0);
        let mut push = |i: usize, v: f64| {
            if v != 0.0 {
                out.indices.push(i);
                out.values.push(v);
            }
        };
        while a < self.nnz() || b < other.nnz() {
            let ia = self.indices.get(a).copied().unwrap_or(usize::MAX);
            let ib = other.indices.get(b).copied().unwrap_or(usize::MAX);
            if ia < ib {
                push(ia, self.values[a]);
                a += 1;
            } else if ib < ia {
                push(ib, other.values[b]);
                b += 1;
            } else {
                push(ia, self.values[a] + other.values[b]);
                a += 1;
                b += 1;
            }
        }
        Ok(out)
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    /// `‖self − x‖₁` without densifying `self`.
    pub fn l1_distance(&self, x: &DenseSignal) -> Result<f64> {
        if self.len != x.len() {
            return Err(Error::LengthMismatch {
                expected: x.len(),
                actual: self.len,
            });
        }
        let xs = x.values();
        let mut total = x.l1_norm();
        for (i, v) in self.iter() {
            total += (v - xs[i]).abs() - xs[i].abs();
        }
        // Cancellation in the correction above can leave a tiny negative value.
        Ok(total.max(0.0))
    }
}
