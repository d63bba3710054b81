//! The static measurement layout and its application to signals.
//!
//! The matrix Φ is never stored. Each row belongs to one block: a single
//! repetition of one weak layer, whose rows are the buckets of a hash over the
//! layer's domain. For a level-`q` layer the domain is the set of level-`q`
//! filtration buckets, so column `i` hits row `hash(level_of(i, q))`; for the
//! final layer of an iteration the domain is `[N]` itself.

use std::io::{BufRead, Read, Write};
use std::path::Path;

use crate::config::{derive_seed, RecoveryConfig, WeakParams};
use crate::error::{Error, Result};
use crate::filtration::FiltrationMaps;
use crate::hashing::HashFunction;
use crate::vector::{DenseSignal, SparseVector};

// Seed path tags.
const TAG_FILTRATION: u64 = 1;
const TAG_LEVEL: u64 = 2;
const TAG_FINAL: u64 = 3;

/// One weak layer: `t` hashes of the layer domain into `R` buckets, occupying
/// rows `offset .. offset + t·R`.
#[derive(Debug, Clone)]
pub struct WeakLayer {
    domain: usize,
    params: WeakParams,
    buckets: usize,
    hashes: Vec<HashFunction>,
    offset: usize,
}

impl WeakLayer {
    /// Builds a layer whose `u`-th hash is seeded with `seed_for(u)`.
    pub fn new(
        domain: usize,
        params: WeakParams,
        buckets: usize,
        repetitions: usize,
        offset: usize,
        seed_for: impl Fn(usize) -> u64,
    ) -> Result<Self> {
        if repetitions == 0 {
            return Err(Error::InvalidParameter(
                "a weak layer needs at least one repetition".into(),
            ));
        }
        let hashes = (0..repetitions)
            .map(|u| HashFunction::new(seed_for(u), domain, buckets))
            .collect::<Result<Vec<_>>>()?;
        Ok(WeakLayer {
            domain,
            params,
            buckets,
            hashes,
            offset,
        })
    }

    pub fn domain(&self) -> usize {
        self.domain
    }

    pub fn params(&self) -> &WeakParams {
        &self.params
    }

    pub fn buckets(&self) -> usize {
        self.buckets
    }

    pub fn repetitions(&self) -> usize {
        self.hashes.len()
    }

    pub fn hashes(&self) -> &[HashFunction] {
        &self.hashes
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn rows(&self) -> usize {
        self.buckets * self.hashes.len()
    }

    /// Row of domain element `c` in repetition `u`.
    #[inline]
    pub fn row(&self, u: usize, c: usize) -> usize {
        self.offset + u * self.buckets + self.hashes[u].eval(c)
    }
}

/// One outer repetition of a fast weak call: a filtration plus one weak layer
/// per level `1..ℓ`.
#[derive(Debug, Clone)]
pub struct OuterRepetition {
    pub filtration: FiltrationMaps,
    /// `levels[q - 1]` measures filtration level `q`.
    pub levels: Vec<WeakLayer>,
}

/// Everything measured for one toplevel iteration.
#[derive(Debug, Clone)]
pub struct FastWeakPlan {
    pub iteration: usize,
    pub sparsity: usize,
    pub alpha: f64,
    pub xi: f64,
    pub ell: usize,
    pub outer: Vec<OuterRepetition>,
    pub final_layer: WeakLayer,
}

impl FastWeakPlan {
    pub fn rows(&self) -> usize {
        self.outer
            .iter()
            .flat_map(|r| r.levels.iter())
            .map(WeakLayer::rows)
            .sum::<usize>()
            + self.final_layer.rows()
    }

    /// Number of rows each column of Φ touches within this plan.
    pub fn blocks_per_column(&self) -> usize {
        self.outer
            .iter()
            .flat_map(|r| r.levels.iter())
            .map(WeakLayer::repetitions)
            .sum::<usize>()
            + self.final_layer.repetitions()
    }

    #[inline]
    fn for_each_row(&self, i: usize, f: &mut impl FnMut(usize)) {
        for rep in &self.outer {
            for (qi, layer) in rep.levels.iter().enumerate() {
                let c = rep.filtration.level_of_unchecked(i, qi + 1);
                for u in 0..layer.repetitions() {
                    f(layer.row(u, c));
                }
            }
        }
        for u in 0..self.final_layer.repetitions() {
            f(self.final_layer.row(u, i));
        }
    }
}

/// Which blocks of the layout to visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockFilter {
    All,
    /// Only the blocks of toplevel iteration `j` (1-based).
    Iteration(usize),
}

/// Location of one contiguous block of rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowBlock {
    pub iteration: usize,
    /// Outer repetition and filtration level, or `None` for the final layer.
    pub level: Option<(usize, usize)>,
    pub inner: usize,
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone)]
pub struct MeasurementLayout {
    config: RecoveryConfig,
    plans: Vec<FastWeakPlan>,
    m: usize,
    warnings: Vec<String>,
}

impl MeasurementLayout {
    /// Plans every iteration's hashes and filtrations from the configuration
    /// alone; no signal is read.
    pub fn plan(config: &RecoveryConfig) -> Result<Self> {
        config.validate()?;
        let n = config.n;
        let ell = config.ell;
        let consts = &config.constants;
        let mut warnings = Vec::new();
        let mut offset = 0usize;
        let mut plans = Vec::new();

        for j in 1..=config.iterations() {
            let s = config.sparsity(j);
            let alpha = config.alpha(j);
            let xi = alpha;
            let ju = j as u64;
            let mut outer = Vec::new();
            if ell > 1 {
                let level_params = WeakParams::new(s, alpha / ell as f64, 1.0 / ell as f64)?;
                for r in 0..config.outer_repetitions(j) {
                    let ru = r as u64;
                    let filtration = FiltrationMaps::build(
                        derive_seed(config.seed, &[TAG_FILTRATION, ju, ru]),
                        n,
                        s,
                        ell,
                        xi,
                    )?;
                    if r == 0 {
                        for w in filtration.warnings() {
                            warnings.push(format!("iteration {j}: {w}"));
                        }
                    }
                    let mut levels = Vec::with_capacity(ell - 1);
                    for q in 1..ell {
                        let domain = level_capacity(&filtration, q);
                        let raw = level_params.raw_bucket_count(consts);
                        let buckets = level_params.bucket_count(consts, domain);
                        if r == 0 && raw > buckets {
                            warnings.push(format!(
                                "iteration {j} level {q}: {raw} buckets clamped to the domain size {domain}"
                            ));
                        }
                        let t = level_params.repetitions(consts, domain);
                        let qu = q as u64;
                        let layer =
                            WeakLayer::new(domain, level_params, buckets, t, offset, |u| {
                                derive_seed(config.seed, &[TAG_LEVEL, ju, ru, qu, u as u64])
                            })?;
                        offset += layer.rows();
                        levels.push(layer);
                    }
                    outer.push(OuterRepetition { filtration, levels });
                }
            }
            let final_params = WeakParams::new(s, consts.c_final_eta * alpha, consts.final_zeta)?;
            let raw = final_params.raw_bucket_count(consts);
            let buckets = final_params.bucket_count(consts, n);
            if raw > buckets {
                warnings.push(format!(
                    "iteration {j} final layer: {raw} buckets clamped to N = {n}"
                ));
            }
            let t = final_params.repetitions(consts, n);
            let final_layer = WeakLayer::new(n, final_params, buckets, t, offset, |u| {
                derive_seed(config.seed, &[TAG_FINAL, ju, u as u64])
            })?;
            offset += final_layer.rows();
            plans.push(FastWeakPlan {
                iteration: j,
                sparsity: s,
                alpha,
                xi,
                ell,
                outer,
                final_layer,
            });
        }
        for w in &warnings {
            log::warn!("{w}");
        }
        Ok(MeasurementLayout {
            config: config.clone(),
            plans,
            m: offset,
            warnings,
        })
    }

    pub fn config(&self) -> &RecoveryConfig {
        &self.config
    }

    pub fn n(&self) -> usize {
        self.config.n
    }

    /// Total number of measurements.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn plans(&self) -> &[FastWeakPlan] {
        &self.plans
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn blocks_per_column(&self) -> usize {
        self.plans.iter().map(FastWeakPlan::blocks_per_column).sum()
    }

    /// Every row block in row order.
    pub fn blocks(&self) -> Vec<RowBlock> {
        let mut out = Vec::new();
        for plan in &self.plans {
            let mut push = |level, layer: &WeakLayer| {
                for u in 0..layer.repetitions() {
                    out.push(RowBlock {
                        iteration: plan.iteration,
                        level,
                        inner: u,
                        start: layer.offset() + u * layer.buckets(),
                        len: layer.buckets(),
                    });
                }
            };
            for (r, rep) in plan.outer.iter().enumerate() {
                for (qi, layer) in rep.levels.iter().enumerate() {
                    push(Some((r, qi + 1)), layer);
                }
            }
            push(None, &plan.final_layer);
        }
        out
    }

    #[inline]
    pub(crate) fn for_each_row(&self, i: usize, filter: BlockFilter, mut f: impl FnMut(usize)) {
        match filter {
            BlockFilter::All => self.plans.iter().for_each(|p| p.for_each_row(i, &mut f)),
            BlockFilter::Iteration(j) => {
                if let Some(p) = self.plans.get(j.wrapping_sub(1)) {
                    p.for_each_row(i, &mut f)
                }
            }
        }
    }

    /// Rows of Φ with a one in column `i`; every coefficient is 1.
    pub fn rows_for_column(&self, i: usize, filter: BlockFilter) -> Result<Vec<(usize, f64)>> {
        if i >= self.n() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.n(),
            });
        }
        let mut rows = Vec::new();
        self.for_each_row(i, filter, |row| rows.push((row, 1.0)));
        Ok(rows)
    }

    /// `Φx`. Each row is accumulated in ascending column order, so the result
    /// is bit-reproducible.
    pub fn measure(&self, x: &DenseSignal) -> Result<MeasurementVector> {
        if x.len() != self.n() {
            return Err(Error::LengthMismatch {
                expected: self.n(),
                actual: x.len(),
            });
        }
        let mut mu = vec![0.0; self.m];
        for (i, &v) in x.values().iter().enumerate() {
            if v != 0.0 {
                self.for_each_row(i, BlockFilter::All, |row| mu[row] += v);
            }
        }
        Ok(MeasurementVector { values: mu })
    }

    /// `Φx′` for sparse `x′`, touching only its support.
    pub fn measure_sparse(&self, x: &SparseVector) -> Result<MeasurementVector> {
        let mut mu = vec![0.0; self.m];
        for (row, sum) in self.sparse_row_sums(x)? {
            mu[row] = sum;
        }
        Ok(MeasurementVector { values: mu })
    }

    /// Nonzero-pattern rows of `Φx′` with their sums, ordered by row. Sums run
    /// in ascending column order, matching [`Self::measure`].
    pub fn sparse_row_sums(&self, x: &SparseVector) -> Result<Vec<(usize, f64)>> {
        if x.len() != self.n() {
            return Err(Error::LengthMismatch {
                expected: self.n(),
                actual: x.len(),
            });
        }
        let mut hits: Vec<(usize, f64)> = Vec::with_capacity(x.nnz() * self.blocks_per_column());
        for (i, v) in x.iter() {
            self.for_each_row(i, BlockFilter::All, |row| hits.push((row, v)));
        }
        // Stable: entries of one row stay in ascending column order.
        hits.sort_by_key(|h| h.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(hits.len());
        for (row, v) in hits {
            match out.last_mut() {
                Some(last) if last.0 == row => last.1 += v,
                _ => out.push((row, 0.0 + v)),
            }
        }
        Ok(out)
    }

    /// `μ − Φx′`.
    pub fn residual_update(
        &self,
        mu: &MeasurementVector,
        x: &SparseVector,
    ) -> Result<MeasurementVector> {
        let mut out = mu.clone();
        self.subtract_sparse(&mut out, x)?;
        Ok(out)
    }

    /// In-place `μ ← μ − Φx′`; cost proportional to `|supp(x′)|`.
    pub fn subtract_sparse(&self, mu: &mut MeasurementVector, x: &SparseVector) -> Result<()> {
        self.check(mu)?;
        for (row, sum) in self.sparse_row_sums(x)? {
            mu.values[row] -= sum;
        }
        Ok(())
    }

    pub fn check(&self, mu: &MeasurementVector) -> Result<()> {
        if mu.len() != self.m {
            return Err(Error::LengthMismatch {
                expected: self.m,
                actual: mu.len(),
            });
        }
        Ok(())
    }

    /// Human-readable summary of the layout.
    pub fn describe(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::new();
        let c = &self.config;
        let _ = writeln!(
            s,
            "N={} k={} eps={} ell={} seed={} m={}",
            c.n, c.k, c.eps, c.ell, c.seed, self.m
        );
        for p in &self.plans {
            let _ = write!(
                s,
                "iteration {}: s={} alpha={:.4} outer={} rows={}",
                p.iteration,
                p.sparsity,
                p.alpha,
                p.outer.len(),
                p.rows()
            );
            if let Some(rep) = p.outer.first() {
                for (qi, layer) in rep.levels.iter().enumerate() {
                    let _ = write!(
                        s,
                        " | level {} D={} R={} t={}",
                        qi + 1,
                        layer.domain(),
                        layer.buckets(),
                        layer.repetitions()
                    );
                }
            }
            let _ = writeln!(
                s,
                " | final R={} t={}",
                p.final_layer.buckets(),
                p.final_layer.repetitions()
            );
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }
}

/// Hash domain of the level-`q` layer: an upper bound on the number of
/// level-`q` buckets that depends only on the dimensions, so the row count is
/// seed-independent.
fn level_capacity(maps: &FiltrationMaps, q: usize) -> usize {
    let mut cap = maps.level_size(1);
    for _ in 1..q {
        cap = cap.saturating_mul(maps.fanout()).min(maps.n());
    }
    cap.max(maps.level_size(q))
}

/// `μ = Φx`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementVector {
    values: Vec<f64>,
}

const MU_MAGIC: &[u8; 4] = b"SRMV";
const MU_VERSION: u32 = 1;

impl MeasurementVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "measurement {i} is not finite"
            )));
        }
        Ok(MeasurementVector { values })
    }

    pub fn zeros(m: usize) -> Self {
        MeasurementVector {
            values: vec![0.0; m],
        }
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

    pub fn scaled(&self, c: f64) -> MeasurementVector {
        MeasurementVector {
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Binary layout: `SRMV`, u32 version, u64 length, then little-endian f64s.
    pub fn write_binary(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MU_MAGIC)?;
        w.write_all(&MU_VERSION.to_le_bytes())?;
        w.write_all(&(self.values.len() as u64).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(mut r: impl Read) -> Result<Self> {
        let values = crate::signals::read_f64_block(&mut r, MU_MAGIC, MU_VERSION)?;
        Self::new(values)
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "row,value")?;
        for (row, v) in self.values.iter().enumerate() {
            writeln!(w, "{row},{v}")?;
        }
        Ok(())
    }

    /// Reads the `row,value` format; rows must be `0, 1, 2, …` in order.
    pub fn read_csv(r: impl BufRead) -> Result<Self> {
        let mut values = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (n == 0 && line == "row,value") {
                continue;
            }
            let bad = || {
                Error::Parse(format!(
                    "line {}: expected `row,value`, got `{line}`",
                    n + 1
                ))
            };
            let (row, value) = line.split_once(',').ok_or_else(bad)?;
            let row: usize = row.trim().parse().map_err(|_| bad())?;
            if row != values.len() {
                return Err(Error::Parse(format!(
                    "line {}: row {row} out of order",
                    n + 1
                )));
            }
            values.push(value.trim().parse::<f64>().map_err(|_| bad())?);
        }
        Self::new(values)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        if path.extension().is_some_and(|e| e == "csv") {
            self.write_csv(file)
        } else {
            self.write_binary(file)
        }
    }

    /// Loads either format, telling them apart by the binary magic.
    pub fn load(path: &Path) -> Result<Self> {
        let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
        if r.fill_buf()?.starts_with(MU_MAGIC) {
            Self::read_binary(r)
        } else {
            Self::read_csv(r)
        }
    }
}
