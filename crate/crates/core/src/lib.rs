//! Sublinear-time sparse recovery with an ℓ1/ℓ1 guarantee.
//!
//! A signal `x ∈ ℝᴺ` is measured once with a fixed, non-adaptive 0/1 matrix
//! Φ built from seeded hashes ([`MeasurementLayout`]). [`recover`] returns an
//! `O(k)`-sparse `x̂` from `μ = Φx` alone, in time sublinear in `N` when the
//! filtration depth `ℓ` is at least 2.
//!
//! ```
//! use sparse_recovery::{recover, MeasurementLayout, RecoveryConfig};
//! use sparse_recovery::signals::{gen_signal, SignalSpec};
//!
//! let config = RecoveryConfig::new(4096, 4, 0.5, 2, 7).unwrap();
//! let layout = MeasurementLayout::plan(&config).unwrap();
//! let (x, truth) = gen_signal(&SignalSpec::exact_sparse(4096, 4, 1)).unwrap();
//! let mu = layout.measure(&x).unwrap();
//! let xhat = recover(&mu, &layout).unwrap();
//! assert_eq!(xhat, truth);
//! ```

pub mod bench;
pub mod config;
pub mod error;
pub mod fastweak;
pub mod filtration;
pub mod hashing;
pub mod measure;
pub mod oracle;
pub mod signals;
pub mod toplevel;
pub mod vector;
pub mod weak;

pub use config::{derive_seed, Constants, RecoveryConfig, WeakParams};
pub use error::{Error, Result};
pub use measure::{MeasurementLayout, MeasurementVector};
pub use toplevel::{recover, recover_traced};
pub use vector::{DenseSignal, SparseVector};
