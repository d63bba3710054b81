//! Seeded hash family and the preimage table used to enumerate buckets.

use crate::config::mix64;
use crate::error::{Error, Result};

/// A seeded map `[0, domain) → [0, range)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashFunction {
    seed: u64,
    key: u64,
    domain: usize,
    range: usize,
}

impl HashFunction {
    pub fn new(seed: u64, domain: usize, range: usize) -> Result<Self> {
        if range == 0 || range > domain {
            return Err(Error::InvalidParameter(format!(
                "hash range must satisfy 1 <= R <= D (R = {range}, D = {domain})"
            )));
        }
        Ok(HashFunction {
            seed,
            key: mix64(seed ^ 0x5851_f42d_4c95_7f2d),
            domain,
            range,
        })
    }

    #[inline]
    pub fn eval(&self, i: usize) -> usize {
        debug_assert!(i < self.domain);
        (mix64((i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ self.key) % self.range as u64)
            as usize
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn domain(&self) -> usize {
        self.domain
    }

    pub fn range(&self) -> usize {
        self.range
    }
}

/// Bucket threads plus per-index backpointers for a hash over `[0, D)`.
///
/// All members of bucket `b` sit contiguously, in ascending order, in
/// `order[starts[b]..starts[b + 1]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreimageTable {
    starts: Vec<u32>,
    order: Vec<u32>,
    bucket_of: Vec<u32>,
    position_of: Vec<u32>,
}

impl PreimageTable {
    pub fn build(h: &HashFunction) -> Self {
        let d = h.domain();
        let bucket_of: Vec<u32> = (0..d).map(|i| h.eval(i) as u32).collect();
        Self::from_assignment(h.range(), bucket_of)
    }

    /// The table of the identity partition of `[0, d)`.
    pub fn identity(d: usize) -> Self {
        Self::from_assignment(d, (0..d as u32).collect())
    }

    fn from_assignment(range: usize, bucket_of: Vec<u32>) -> Self {
        let mut starts = vec![0u32; range + 1];
        for &b in &bucket_of {
            starts[b as usize + 1] += 1;
        }
        for b in 0..range {
            starts[b + 1] += starts[b];
        }
        let mut cursor: Vec<u32> = starts[..range].to_vec();
        let mut order = vec![0u32; bucket_of.len()];
        let mut position_of = vec![0u32; bucket_of.len()];
        for (i, &b) in bucket_of.iter().enumerate() {
            let pos = cursor[b as usize];
            order[pos as usize] = i as u32;
            position_of[i] = pos;
            cursor[b as usize] += 1;
        }
        PreimageTable {
            starts,
            order,
            bucket_of,
            position_of,
        }
    }

    pub fn domain(&self) -> usize {
        self.order.len()
    }

    pub fn range(&self) -> usize {
        self.starts.len() - 1
    }

    /// Indices hashing to `b`, ascending.
    pub fn enumerate(&self, b: usize) -> Result<&[u32]> {
        if b >= self.range() {
            return Err(Error::IndexOutOfRange {
                index: b,
                len: self.range(),
            });
        }
        Ok(self.members(b))
    }

    #[inline]
    pub(crate) fn members(&self, b: usize) -> &[u32] {
        &self.order[self.starts[b] as usize..self.starts[b + 1] as usize]
    }

    /// Position range of bucket `b` within the thread array.
    #[inline]
    pub(crate) fn span(&self, b: usize) -> (usize, usize) {
        (self.starts[b] as usize, self.starts[b + 1] as usize)
    }

    /// Bucket backpointer of index `i`.
    #[inline]
    pub fn bucket_of(&self, i: usize) -> usize {
        self.bucket_of[i] as usize
    }

    /// Position backpointer of index `i` within the thread array.
    #[inline]
    pub fn position_of(&self, i: usize) -> usize {
        self.position_of[i] as usize
    }

    /// The concatenation of all bucket threads.
    pub fn thread(&self) -> &[u32] {
        &self.order
    }

    pub fn occupancy(&self, b: usize) -> usize {
        (self.starts[b + 1] - self.starts[b]) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_ranges() {
        assert!(HashFunction::new(0, 4, 0).is_err());
        assert!(HashFunction::new(0, 4, 5).is_err());
        assert!(HashFunction::new(0, 4, 4).is_ok());
    }

    #[test]
    fn single_bucket_and_determinism() {
        let h = HashFunction::new(99, 50, 1).unwrap();
        assert!((0..50).all(|i| h.eval(i) == 0));
        let g = HashFunction::new(99, 50, 7).unwrap();
        let g2 = HashFunction::new(99, 50, 7).unwrap();
        assert!((0..50).all(|i| g.eval(i) == g2.eval(i) && g.eval(i) < 7));
    }

    #[test]
    fn histogram_matches_exhaustive_recount() {
        let h = HashFunction::new(0, 16, 4).unwrap();
        let table = PreimageTable::build(&h);
        let mut hist = [0usize; 4];
        for i in 0..16 {
            hist[h.eval(i)] += 1;
        }
        for (b, &count) in hist.iter().enumerate() {
            assert_eq!(table.occupancy(b), count);
        }
        assert_eq!(hist.iter().sum::<usize>(), 16);
    }

    #[test]
    fn enumerate_matches_brute_force_scan() {
        let h = HashFunction::new(0, 16, 4).unwrap();
        let table = PreimageTable::build(&h);
        for b in 0..4 {
            let scan: Vec<u32> = (0..16u32).filter(|&i| h.eval(i as usize) == b).collect();
            assert_eq!(table.enumerate(b).unwrap(), scan.as_slice());
        }
        assert!(table.enumerate(4).is_err());
    }

    #[test]
    fn one_bucket_table() {
        let h = HashFunction::new(3, 4, 1).unwrap();
        let table = PreimageTable::build(&h);
        assert_eq!(table.enumerate(0).unwrap(), &[0, 1, 2, 3]);
    }

    proptest! {
        #[test]
        fn partition_and_backpointers(seed in any::<u64>(), d in 1usize..600, r_frac in 0.0f64..1.0) {
            let r = 1 + ((d - 1) as f64 * r_frac) as usize;
            let h = HashFunction::new(seed, d, r).unwrap();
            let table = PreimageTable::build(&h);
            let mut all: Vec<u32> = Vec::with_capacity(d);
            for b in 0..r {
                let members = table.enumerate(b).unwrap();
                prop_assert!(members.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(members.iter().all(|&i| h.eval(i as usize) == b));
                all.extend_from_slice(members);
            }
            all.sort_unstable();
            prop_assert_eq!(all, (0..d as u32).collect::<Vec<_>>());
            for i in 0..d {
                let b = table.bucket_of(i);
                prop_assert_eq!(b, h.eval(i));
                let (lo, hi) = table.span(b);
                let pos = table.position_of(i);
                prop_assert!(lo <= pos && pos < hi);
                prop_assert_eq!(table.thread()[pos] as usize, i);
            }
        }
    }
}
