//! Multi-level signal filtrations: a coarse random hash of `[N]` followed by
//! deterministic refinements down to singletons.
//!
//! Level 1 buckets are the preimages of a hash `[N] → [N⁽¹⁾]`. Every bucket at
//! level `q < ℓ − 1` is split into at most `ceil((N/s)^(1/ℓ))` contiguous
//! chunks of its sorted preimage list, and level `ℓ − 1` buckets are split
//! into singletons, so level `ℓ` is the identity partition. Because all splits
//! are contiguous in the table's thread array, every level is a partition of
//! that array into consecutive position ranges.

use crate::error::{Error, Result};
use crate::hashing::{HashFunction, PreimageTable};
use crate::vector::DenseSignal;

#[derive(Debug, Clone)]
pub struct FiltrationMaps {
    n: usize,
    ell: usize,
    fanout: usize,
    nominal_sizes: Vec<usize>,
    level_sizes: Vec<usize>,
    base_hash: Option<HashFunction>,
    table: PreimageTable,
    // Levels 2..ℓ-1, indexed by q - 2.
    inner_bounds: Vec<Vec<u32>>,
    inner_ids: Vec<Vec<u32>>,
    // Levels 1..ℓ-2, indexed by q - 1.
    child_start: Vec<Vec<u32>>,
    warnings: Vec<String>,
}

/// `ceil((s/ξ)·(N/s)^(q/ℓ))` for `q < ℓ`, and `N` for `q = ℓ`.
pub fn nominal_level_size(n: usize, s: usize, ell: usize, xi: f64, q: usize) -> f64 {
    if q >= ell {
        return n as f64;
    }
    let ratio = n as f64 / s as f64;
    ((s as f64 / xi) * ratio.powf(q as f64 / ell as f64)).ceil()
}

/// Maximum number of children of a split above the last level.
pub fn split_fanout(n: usize, s: usize, ell: usize) -> usize {
    ((n as f64 / s as f64).powf(1.0 / ell as f64).ceil() as usize).max(1)
}

impl FiltrationMaps {
    pub fn build(seed: u64, n: usize, s: usize, ell: usize, xi: f64) -> Result<Self> {
        if n == 0 || s == 0 || s > n {
            return Err(Error::InvalidParameter(format!(
                "filtration needs 1 <= s <= N (s = {s}, N = {n})"
            )));
        }
        if ell == 0 {
            return Err(Error::InvalidParameter(
                "filtration depth must be at least 1".into(),
            ));
        }
        if !(xi.is_finite() && xi > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "xi must be positive, got {xi}"
            )));
        }
        if n > u32::MAX as usize {
            return Err(Error::InvalidParameter(format!("N = {n} is too large")));
        }

        let mut warnings = Vec::new();
        let mut nominal_sizes = Vec::with_capacity(ell);
        for q in 1..=ell {
            let raw = nominal_level_size(n, s, ell, xi, q);
            let size = if raw < 1.0 {
                warnings.push(format!("level {q} size computed as {raw}; clamped to 1"));
                1
            } else if raw > n as f64 {
                warnings.push(format!(
                    "level {q} size {raw} exceeds N = {n}; clamped to N"
                ));
                n
            } else {
                raw as usize
            };
            nominal_sizes.push(size);
        }
        let fanout = split_fanout(n, s, ell);

        if ell == 1 {
            return Ok(FiltrationMaps {
                n,
                ell,
                fanout,
                nominal_sizes,
                level_sizes: vec![n],
                base_hash: None,
                table: PreimageTable::identity(n),
                inner_bounds: Vec::new(),
                inner_ids: Vec::new(),
                child_start: Vec::new(),
                warnings,
            });
        }

        let h = HashFunction::new(seed, n, nominal_sizes[0])?;
        let table = PreimageTable::build(&h);
        let mut level_sizes = vec![h.range()];
        let mut inner_bounds: Vec<Vec<u32>> = Vec::new();
        let mut inner_ids: Vec<Vec<u32>> = Vec::new();
        let mut child_start: Vec<Vec<u32>> = Vec::new();

        // Refine levels 1..ℓ-2 into levels 2..ℓ-1.
        for q in 1..ell.saturating_sub(1) {
            let parent_count = level_sizes[q - 1];
            let mut bounds: Vec<u32> = Vec::new();
            let mut starts = Vec::with_capacity(parent_count + 1);
            for b in 0..parent_count {
                starts.push(bounds.len() as u32);
                let (lo, hi) = if q == 1 {
                    table.span(b)
                } else {
                    let prev = &inner_bounds[q - 2];
                    (prev[b] as usize, prev[b + 1] as usize)
                };
                let len = hi - lo;
                let chunks = len.min(fanout);
                for u in 0..chunks {
                    bounds.push((lo + u * len / chunks) as u32);
                }
            }
            starts.push(bounds.len() as u32);
            let count = bounds.len();
            bounds.push(n as u32);
            let mut ids = vec![0u32; n];
            for c in 0..count {
                for slot in &mut ids[bounds[c] as usize..bounds[c + 1] as usize] {
                    *slot = c as u32;
                }
            }
            level_sizes.push(count);
            inner_bounds.push(bounds);
            inner_ids.push(ids);
            child_start.push(starts);
        }
        level_sizes.push(n);

        Ok(FiltrationMaps {
            n,
            ell,
            fanout,
            nominal_sizes,
            level_sizes,
            base_hash: Some(h),
            table,
            inner_bounds,
            inner_ids,
            child_start,
            warnings,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn fanout(&self) -> usize {
        self.fanout
    }

    /// Bucket counts per level `1..=ℓ` as built. Level 1 equals its nominal
    /// size; deeper levels hold one bucket per nonempty split chunk.
    pub fn level_sizes(&self) -> &[usize] {
        &self.level_sizes
    }

    pub fn level_size(&self, q: usize) -> usize {
        self.level_sizes[q - 1]
    }

    /// Level sizes from the closed-form formula, after clamping to `[1, N]`.
    pub fn nominal_sizes(&self) -> &[usize] {
        &self.nominal_sizes
    }

    pub fn base_hash(&self) -> Option<&HashFunction> {
        self.base_hash.as_ref()
    }

    pub fn table(&self) -> &PreimageTable {
        &self.table
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    fn check_level(&self, q: usize) -> Result<()> {
        if q == 0 || q > self.ell {
            return Err(Error::InvalidParameter(format!(
                "level {q} outside 1..={}",
                self.ell
            )));
        }
        Ok(())
    }

    /// Level-`q` bucket containing original index `i`.
    pub fn level_of(&self, i: usize, q: usize) -> Result<usize> {
        self.check_level(q)?;
        if i >= self.n {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.n,
            });
        }
        Ok(self.level_of_unchecked(i, q))
    }

    #[inline]
    pub(crate) fn level_of_unchecked(&self, i: usize, q: usize) -> usize {
        if q == self.ell {
            i
        } else if q == 1 {
            self.table.bucket_of(i)
        } else {
            self.inner_ids[q - 2][self.table.position_of(i)] as usize
        }
    }

    /// Thread-array position range of level-`q` bucket `b`.
    fn span(&self, q: usize, b: usize) -> (usize, usize) {
        if q == self.ell {
            let p = self.table.position_of(b);
            (p, p + 1)
        } else if q == 1 {
            self.table.span(b)
        } else {
            let bounds = &self.inner_bounds[q - 2];
            (bounds[b] as usize, bounds[b + 1] as usize)
        }
    }

    fn check_bucket(&self, q: usize, b: usize) -> Result<()> {
        self.check_level(q)?;
        let size = self.level_size(q);
        if b >= size {
            return Err(Error::IndexOutOfRange {
                index: b,
                len: size,
            });
        }
        Ok(())
    }

    /// Original indices in level-`q` bucket `b`, ascending.
    pub fn members(&self, q: usize, b: usize) -> Result<&[u32]> {
        self.check_bucket(q, b)?;
        let (lo, hi) = self.span(q, b);
        Ok(&self.table.thread()[lo..hi])
    }

    /// Level-`(q+1)` children of level-`q` bucket `b`.
    pub fn split(&self, b: usize, q: usize) -> Result<Vec<usize>> {
        self.check_bucket(q, b)?;
        if q == self.ell {
            return Err(Error::InvalidParameter(format!(
                "level {q} buckets are singletons and have no split"
            )));
        }
        let mut out = Vec::new();
        self.extend_split(b, q, &mut out);
        Ok(out)
    }

    /// Appends the children of `b` to `out`. For `q + 1 = ℓ` the children are
    /// original indices in ascending order; otherwise a consecutive id range.
    pub(crate) fn extend_split(&self, b: usize, q: usize, out: &mut Vec<usize>) {
        if q + 1 == self.ell {
            let (lo, hi) = self.span(q, b);
            out.extend(self.table.thread()[lo..hi].iter().map(|&i| i as usize));
        } else {
            let starts = &self.child_start[q - 1];
            out.extend(starts[b] as usize..starts[b + 1] as usize);
        }
    }

    /// Exact sum of `x` over the members of level-`q` bucket `b`, accumulated
    /// in ascending index order. Reference use only.
    pub fn filtered_value(&self, x: &DenseSignal, q: usize, b: usize) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                actual: x.len(),
            });
        }
        let xs = x.values();
        Ok(self.members(q, b)?.iter().map(|&i| xs[i as usize]).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn check_invariants(maps: &FiltrationMaps) {
        let n = maps.n();
        let ell = maps.ell();
        for q in 1..=ell {
            let mut seen = vec![false; n];
            for b in 0..maps.level_size(q) {
                for &i in maps.members(q, b).unwrap() {
                    assert!(!seen[i as usize], "index {i} in two level-{q} buckets");
                    seen[i as usize] = true;
                    assert_eq!(maps.level_of(i as usize, q).unwrap(), b);
                }
            }
            assert!(seen.iter().all(|&v| v), "level {q} does not cover [N]");
        }
        for i in 0..n {
            assert_eq!(maps.level_of(i, ell).unwrap(), i);
        }
        for q in 1..ell {
            for b in 0..maps.level_size(q) {
                let children = maps.split(b, q).unwrap();
                if q + 1 < ell {
                    assert!(children.len() <= maps.fanout());
                }
                let mut union: Vec<u32> = Vec::new();
                for &c in &children {
                    union.extend_from_slice(maps.members(q + 1, c).unwrap());
                    // Refinement: the child's members all lie in the parent.
                    for &i in maps.members(q + 1, c).unwrap() {
                        assert_eq!(maps.level_of(i as usize, q).unwrap(), b);
                    }
                }
                union.sort_unstable();
                assert_eq!(union.as_slice(), maps.members(q, b).unwrap());
            }
        }
    }

    #[test]
    fn single_level_is_identity() {
        let maps = FiltrationMaps::build(5, 8, 1, 1, 1.0).unwrap();
        assert_eq!(maps.level_sizes(), &[8]);
        for i in 0..8 {
            assert_eq!(maps.level_of(i, 1).unwrap(), i);
        }
        assert!(maps.split(0, 1).is_err());
        check_invariants(&maps);
    }

    #[test]
    fn two_level_instance_against_table() {
        let maps = FiltrationMaps::build(0, 64, 4, 2, 1.0).unwrap();
        // ceil(4 * 16^(1/2)) = 16
        assert_eq!(maps.level_size(1), 16);
        assert_eq!(maps.level_size(2), 64);
        let h = *maps.base_hash().unwrap();
        assert_eq!(h.range(), 16);
        let table = PreimageTable::build(&h);
        for i in 0..64 {
            assert_eq!(maps.level_of(i, 1).unwrap(), h.eval(i));
        }
        for b in 0..16 {
            let split: Vec<u32> = maps
                .split(b, 1)
                .unwrap()
                .iter()
                .map(|&i| i as u32)
                .collect();
            assert_eq!(split.as_slice(), table.enumerate(b).unwrap());
        }
        check_invariants(&maps);
    }

    #[test]
    fn three_level_fanout_bound() {
        let maps = FiltrationMaps::build(11, 4096, 4, 3, 0.5).unwrap();
        let fanout = split_fanout(4096, 4, 3);
        assert_eq!(maps.fanout(), fanout);
        for b in 0..maps.level_size(1) {
            assert!(maps.split(b, 1).unwrap().len() <= fanout);
        }
        check_invariants(&maps);
    }

    #[test]
    fn singleton_bucket_has_one_child() {
        let maps = FiltrationMaps::build(3, 256, 4, 3, 1.0).unwrap();
        for q in 1..3 {
            for b in 0..maps.level_size(q) {
                if maps.members(q, b).unwrap().len() == 1 {
                    assert_eq!(maps.split(b, q).unwrap().len(), 1);
                }
            }
        }
    }

    #[test]
    fn filtered_value_examples() {
        let maps = FiltrationMaps::build(0, 64, 4, 2, 1.0).unwrap();
        let zero = DenseSignal::zeros(64).unwrap();
        for b in 0..16 {
            assert_eq!(maps.filtered_value(&zero, 1, b).unwrap(), 0.0);
        }
        let x = DenseSignal::new((0..64).map(|i| ((i * 37 % 11) as f64) - 5.0).collect()).unwrap();
        for i in 0..64 {
            assert_eq!(maps.filtered_value(&x, 2, i).unwrap(), x.values()[i]);
        }
        let table = PreimageTable::build(maps.base_hash().unwrap());
        for b in 0..16 {
            let mut brute = 0.0;
            for &i in table.enumerate(b).unwrap() {
                brute += x.values()[i as usize];
            }
            assert_eq!(maps.filtered_value(&x, 1, b).unwrap(), brute);
        }
    }

    #[test]
    fn tiny_instance_clamps_with_warning() {
        let maps = FiltrationMaps::build(1, 16, 8, 2, 0.5).unwrap();
        assert_eq!(maps.level_size(1), 16);
        assert!(!maps.warnings().is_empty());
        check_invariants(&maps);
    }

    #[test]
    fn argument_errors() {
        let maps = FiltrationMaps::build(0, 64, 4, 2, 1.0).unwrap();
        assert!(maps.level_of(64, 1).is_err());
        assert!(maps.level_of(0, 3).is_err());
        assert!(maps.level_of(0, 0).is_err());
        assert!(maps.split(16, 1).is_err());
        assert!(maps.split(0, 2).is_err());
        assert!(FiltrationMaps::build(0, 64, 0, 2, 1.0).is_err());
        assert!(FiltrationMaps::build(0, 64, 65, 2, 1.0).is_err());
        assert!(FiltrationMaps::build(0, 64, 4, 0, 1.0).is_err());
        assert!(FiltrationMaps::build(0, 64, 4, 2, 0.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn invariants_hold(seed in any::<u64>(), n in 1usize..700, s_frac in 0.0f64..1.0,
                           ell in 1usize..5, xi in 0.1f64..2.0) {
            let s = 1 + ((n - 1) as f64 * s_frac * 0.2) as usize;
            let maps = FiltrationMaps::build(seed, n, s, ell, xi).unwrap();
            check_invariants(&maps);
        }

        #[test]
        fn filtered_value_additive_over_split(seed in any::<u64>(), ell in 2usize..5,
                                              vals in proptest::collection::vec(-8i32..8, 200)) {
            let x = DenseSignal::new(vals.iter().map(|&v| v as f64).collect()).unwrap();
            let maps = FiltrationMaps::build(seed, 200, 3, ell, 0.7).unwrap();
            for q in 1..ell {
                for b in 0..maps.level_size(q) {
                    let parent = maps.filtered_value(&x, q, b).unwrap();
                    let children: f64 = maps.split(b, q).unwrap().iter()
                        .map(|&c| maps.filtered_value(&x, q + 1, c).unwrap()).sum();
                    // Integer-valued entries keep both sums exact.
                    prop_assert_eq!(parent, children);
                }
            }
        }
    }
}
