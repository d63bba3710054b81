//! The iterative recovery loop: one fast weak call per iteration with
//! halving sparsity and a geometrically shrinking noise budget, subtracting
//! each partial answer from the residual measurements.

use crate::error::Result;
use crate::fastweak::{fast_weak_decode_traced, FastWeakTrace};
use crate::measure::{MeasurementLayout, MeasurementVector};
use crate::vector::SparseVector;

/// What happened in one iteration of [`recover_traced`].
#[derive(Debug, Clone)]
pub struct IterationTrace {
    pub iteration: usize,
    pub sparsity: usize,
    pub alpha: f64,
    /// The partial answer `x′` of this iteration.
    pub found: SparseVector,
    /// `|supp(x̂)|` after this iteration.
    pub support_after: usize,
    pub fast_weak: FastWeakTrace,
    /// Residual measurements after this iteration, when requested.
    pub residual: Option<MeasurementVector>,
}

#[derive(Debug, Clone, Default)]
pub struct RecoveryTrace {
    pub iterations: Vec<IterationTrace>,
}

/// Recovers `x̂` from `μ = Φx`.
pub fn recover(mu: &MeasurementVector, layout: &MeasurementLayout) -> Result<SparseVector> {
    run(mu, layout, None, false)
}

/// [`recover`], recording per-iteration candidate sizes and, if
/// `keep_residuals` is set, a copy of the residual after every iteration.
pub fn recover_traced(
    mu: &MeasurementVector,
    layout: &MeasurementLayout,
    keep_residuals: bool,
) -> Result<(SparseVector, RecoveryTrace)> {
    let mut trace = RecoveryTrace::default();
    let xhat = run(mu, layout, Some(&mut trace), keep_residuals)?;
    Ok((xhat, trace))
}

/// `μ − Φx′`.
pub fn residual_update(
    mu: &MeasurementVector,
    found: &SparseVector,
    layout: &MeasurementLayout,
) -> Result<MeasurementVector> {
    layout.residual_update(mu, found)
}

fn run(
    mu: &MeasurementVector,
    layout: &MeasurementLayout,
    mut trace: Option<&mut RecoveryTrace>,
    keep_residuals: bool,
) -> Result<SparseVector> {
    layout.check(mu)?;
    let constants = &layout.config().constants;
    let mut residual = mu.clone();
    let mut xhat = SparseVector::empty(layout.n());
    for plan in layout.plans() {
        let (found, fw) = fast_weak_decode_traced(residual.values(), plan, constants)?;
        xhat = xhat.add(&found)?;
        layout.subtract_sparse(&mut residual, &found)?;
        if let Some(t) = trace.as_deref_mut() {
            t.iterations.push(IterationTrace {
                iteration: plan.iteration,
                sparsity: plan.sparsity,
                alpha: plan.alpha,
                support_after: xhat.nnz(),
                found,
                fast_weak: fw,
                residual: keep_residuals.then(|| residual.clone()),
            });
        }
    }
    Ok(xhat)
}
