//! Sublinear weak decoding by tracking heavy buckets down a filtration.
//!
//! For each outer repetition the coarsest filtration level is scanned in full;
//! each later level only examines the children of buckets the previous weak
//! call kept. The surviving original indices of all repetitions form the
//! candidate set of one final weak call over `[N]`.

use crate::config::Constants;
use crate::error::{Error, Result};
use crate::measure::FastWeakPlan;
use crate::vector::SparseVector;
use crate::weak::{weak_decode, WeakLayerView};

/// Candidate-set sizes observed during one fast weak call.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FastWeakTrace {
    /// `level_candidates[r][q - 1] = |I_{q,r}|` for `q = 1..=ℓ`.
    pub level_candidates: Vec<Vec<usize>>,
    /// Sum of the sizes of the kept buckets at level `ℓ − 1`, per repetition.
    pub kept_bucket_mass: Vec<usize>,
    /// `|I|`, the union over repetitions.
    pub final_candidates: usize,
}

pub fn fast_weak_decode(
    mu: &[f64],
    plan: &FastWeakPlan,
    constants: &Constants,
) -> Result<SparseVector> {
    decode(mu, plan, constants, None)
}

pub fn fast_weak_decode_traced(
    mu: &[f64],
    plan: &FastWeakPlan,
    constants: &Constants,
) -> Result<(SparseVector, FastWeakTrace)> {
    let mut trace = FastWeakTrace::default();
    let out = decode(mu, plan, constants, Some(&mut trace))?;
    Ok((out, trace))
}

fn decode(
    mu: &[f64],
    plan: &FastWeakPlan,
    constants: &Constants,
    mut trace: Option<&mut FastWeakTrace>,
) -> Result<SparseVector> {
    let fin = &plan.final_layer;
    if fin.offset() + fin.rows() > mu.len() {
        return Err(Error::LengthMismatch {
            expected: fin.offset() + fin.rows(),
            actual: mu.len(),
        });
    }
    let n = fin.domain();
    let ell = plan.ell;

    let candidates: Vec<usize> = if ell == 1 {
        (0..n).collect()
    } else {
        let mut union: Vec<usize> = Vec::new();
        for rep in &plan.outer {
            let maps = &rep.filtration;
            let mut current: Vec<usize> = (0..maps.level_size(1)).collect();
            let mut sizes = Vec::with_capacity(ell);
            let mut kept_mass = 0;
            for q in 1..ell {
                sizes.push(current.len());
                if current.is_empty() {
                    continue;
                }
                let layer = &rep.levels[q - 1];
                let view = WeakLayerView::new(layer, mu)?;
                let kept = weak_decode(&view, &current, layer.params(), constants)?;
                let mut next = Vec::new();
                for &b in kept.indices() {
                    maps.extend_split(b, q, &mut next);
                }
                if q + 1 == ell {
                    kept_mass = next.len();
                    next.sort_unstable();
                }
                current = next;
            }
            sizes.push(current.len());
            union.extend_from_slice(&current);
            if let Some(t) = trace.as_deref_mut() {
                t.level_candidates.push(sizes);
                t.kept_bucket_mass.push(kept_mass);
            }
        }
        union.sort_unstable();
        union.dedup();
        union
    };

    if let Some(t) = trace {
        t.final_candidates = candidates.len();
    }
    if candidates.is_empty() {
        return Ok(SparseVector::empty(n));
    }
    let view = WeakLayerView::new(fin, mu)?;
    weak_decode(&view, &candidates, fin.params(), constants)
}
