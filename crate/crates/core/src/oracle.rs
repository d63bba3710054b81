//! Brute-force references for testing: best k-term approximation, an
//! explicit copy of Φ, and a weak decoder that sums buckets straight from `x`.

use crate::config::{Constants, WeakParams};
use crate::error::{Error, Result};
use crate::filtration::FiltrationMaps;
use crate::measure::{MeasurementLayout, WeakLayer};
use crate::vector::{DenseSignal, SparseVector};

pub const DEFAULT_MATRIX_CAP: usize = 1 << 24;

/// The `k` largest-magnitude entries of `x` (ties to the smaller index) and
/// the ℓ1 mass of everything dropped.
pub fn best_k_term(x: &DenseSignal, k: usize) -> Result<(SparseVector, f64)> {
    if k > x.len() {
        return Err(Error::InvalidParameter(format!(
            "k = {k} exceeds N = {}",
            x.len()
        )));
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    let xs = x.values();
    order.sort_by(|&a, &b| xs[b].abs().total_cmp(&xs[a].abs()).then(a.cmp(&b)));
    let mut keep: Vec<usize> = order[..k]
        .iter()
        .copied()
        .filter(|&i| xs[i] != 0.0)
        .collect();
    keep.sort_unstable();
    let err = order[k..].iter().map(|&i| xs[i].abs()).sum();
    let approx = SparseVector::from_entries(x.len(), keep.into_iter().map(|i| (i, xs[i])))?;
    Ok((approx, err))
}

/// `‖x̂ − x‖₁ / ‖x − x_k‖₁`. With an exactly k-sparse `x` the ratio is 0 when
/// `x̂` matches to within `1e-9·‖x‖₁`, and infinite otherwise.
pub fn error_ratio(x: &DenseSignal, xhat: &SparseVector, k: usize) -> Result<f64> {
    if xhat.len() != x.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: xhat.len(),
        });
    }
    let (_, denom) = best_k_term(x, k)?;
    let num: f64 = xhat
        .to_dense()
        .iter()
        .zip(x.values())
        .map(|(a, b)| (a - b).abs())
        .sum();
    if denom == 0.0 {
        return Ok(if num <= 1e-9 * x.l1_norm() {
            0.0
        } else {
            f64::INFINITY
        });
    }
    Ok(num / denom)
}

/// Weak decoding with every bucket sum recomputed from `x` by a double loop
/// over (repetition, index). `level` selects a filtration level layer; `None`
/// means the layer hashes original indices.
pub fn naive_weak(
    x: &DenseSignal,
    layer: &WeakLayer,
    level: Option<(&FiltrationMaps, usize)>,
    candidates: &[usize],
    params: &WeakParams,
    constants: &Constants,
) -> Result<SparseVector> {
    let xs = x.values();
    let column_domain = |i: usize| -> Result<usize> {
        match level {
            Some((maps, q)) => maps.level_of(i, q),
            None => Ok(i),
        }
    };
    let mut sums = Vec::with_capacity(layer.repetitions());
    for h in layer.hashes() {
        let mut s = vec![0.0; layer.buckets()];
        for (i, &v) in xs.iter().enumerate() {
            s[h.eval(column_domain(i)?)] += v;
        }
        sums.push(s);
    }
    let mut estimates = Vec::new();
    for &c in candidates {
        if c >= layer.domain() {
            return Err(Error::IndexOutOfRange {
                index: c,
                len: layer.domain(),
            });
        }
        let mut vals: Vec<f64> = layer
            .hashes()
            .iter()
            .zip(&sums)
            .map(|(h, s)| s[h.eval(c)])
            .collect();
        vals.sort_by(f64::total_cmp);
        let m = vals[(vals.len() - 1) / 2];
        if m != 0.0 {
            estimates.push((c, m));
        }
    }
    estimates.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
    estimates.truncate(params.output_size(constants));
    SparseVector::from_unsorted(layer.domain(), estimates)
}

/// Dense 0/1 copy of Φ, row-major.
#[derive(Debug, Clone)]
pub struct ExplicitMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

impl ExplicitMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.cols + col]
    }

    pub fn row_sum(&self, row: usize) -> usize {
        self.data[row * self.cols..(row + 1) * self.cols]
            .iter()
            .map(|&v| v as usize)
            .sum()
    }

    pub fn column_sum(&self, col: usize) -> usize {
        (0..self.rows).map(|r| self.get(r, col) as usize).sum()
    }

    /// Row-by-row product, summing columns in ascending order.
    pub fn multiply(&self, x: &DenseSignal) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::LengthMismatch {
                expected: self.cols,
                actual: x.len(),
            });
        }
        Ok((0..self.rows)
            .map(|r| {
                let row = &self.data[r * self.cols..(r + 1) * self.cols];
                let mut acc = 0.0;
                for (&bit, &v) in row.iter().zip(x.values()) {
                    if bit == 1 {
                        acc += v;
                    }
                }
                acc
            })
            .collect())
    }
}

/// Writes out Φ from the layout's public hash and filtration maps.
pub fn materialize_matrix(layout: &MeasurementLayout, cap: usize) -> Result<ExplicitMatrix> {
    let (rows, cols) = (layout.m(), layout.n());
    if rows.saturating_mul(cols) > cap {
        return Err(Error::CapExceeded { rows, cols, cap });
    }
    let mut data = vec![0u8; rows * cols];
    let mut fill = |layer: &WeakLayer, level: Option<(&FiltrationMaps, usize)>| -> Result<()> {
        for (u, h) in layer.hashes().iter().enumerate() {
            for i in 0..cols {
                let c = match level {
                    Some((maps, q)) => maps.level_of(i, q)?,
                    None => i,
                };
                let row = layer.offset() + u * layer.buckets() + h.eval(c);
                data[row * cols + i] = 1;
            }
        }
        Ok(())
    };
    for plan in layout.plans() {
        for rep in &plan.outer {
            for (qi, layer) in rep.levels.iter().enumerate() {
                fill(layer, Some((&rep.filtration, qi + 1)))?;
            }
        }
        fill(&plan.final_layer, None)?;
    }
    Ok(ExplicitMatrix { rows, cols, data })
}
