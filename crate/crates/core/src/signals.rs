//! Synthetic test signals (planted spikes plus an optional tail) and the
//! signal file formats.

use std::io::{BufRead, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::vector::{DenseSignal, SparseVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    None,
    /// `support` entries of `mass / support` each.
    Flat {
        mass: f64,
        support: usize,
    },
    /// `support` entries proportional to `ratio^u`, normalized to total `mass`.
    Geometric {
        mass: f64,
        ratio: f64,
        support: usize,
    },
}

impl Tail {
    pub fn support(&self) -> usize {
        match *self {
            Tail::None => 0,
            Tail::Flat { support, .. } | Tail::Geometric { support, .. } => support,
        }
    }

    pub fn mass(&self) -> f64 {
        match *self {
            Tail::None => 0.0,
            Tail::Flat { mass, .. } | Tail::Geometric { mass, .. } => mass,
        }
    }

    fn values(&self) -> Vec<f64> {
        match *self {
            Tail::None => Vec::new(),
            Tail::Flat { mass, support } => vec![mass / support as f64; support],
            Tail::Geometric {
                mass,
                ratio,
                support,
            } => {
                let weights: Vec<f64> = (0..support).map(|u| ratio.powi(u as i32)).collect();
                let total: f64 = weights.iter().sum();
                weights.into_iter().map(|w| mass * w / total).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignMode {
    #[default]
    Positive,
    /// Each spike independently gets a random sign.
    Mixed,
}

impl FromStr for SignMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" => Ok(SignMode::Positive),
            "mixed" => Ok(SignMode::Mixed),
            _ => Err(Error::Parse(format!(
                "unknown sign mode {s:?} (expected positive|mixed)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub n: usize,
    pub k: usize,
    pub spike_low: f64,
    pub spike_high: f64,
    pub tail: Tail,
    pub sign: SignMode,
    pub seed: u64,
}

impl SignalSpec {
    pub fn exact_sparse(n: usize, k: usize, seed: u64) -> Self {
        SignalSpec {
            n,
            k,
            spike_low: 1.0,
            spike_high: 10.0,
            tail: Tail::None,
            sign: SignMode::Positive,
            seed,
        }
    }

    pub fn with_tail(mut self, tail: Tail) -> Self {
        self.tail = tail;
        self
    }
}

/// Draws `k` spikes with magnitudes uniform in `[spike_low, spike_high]` at
/// distinct random positions, plus the tail on further disjoint positions.
/// Returns the signal and the spikes as ground truth.
pub fn gen_signal(spec: &SignalSpec) -> Result<(DenseSignal, SparseVector)> {
    let SignalSpec {
        n,
        k,
        spike_low,
        spike_high,
        tail,
        sign,
        seed,
    } = *spec;
    if !(spike_low > 0.0 && spike_low <= spike_high && spike_high.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "spike magnitudes need 0 < low <= high (got {spike_low}, {spike_high})"
        )));
    }
    match tail {
        Tail::None => {}
        Tail::Flat { mass, support } | Tail::Geometric { mass, support, .. } => {
            if !(mass >= 0.0 && mass.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "tail mass must be non-negative, got {mass}"
                )));
            }
            if support == 0 && mass > 0.0 {
                return Err(Error::InvalidParameter(
                    "a tail with positive mass needs support".into(),
                ));
            }
        }
    }
    if let Tail::Geometric { ratio, .. } = tail {
        if !(ratio > 0.0 && ratio.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "geometric ratio must be positive, got {ratio}"
            )));
        }
    }
    if k > n {
        return Err(Error::InvalidParameter(format!("k exceeds N ({k} > {n})")));
    }
    let tail_support = tail.support();
    if k + tail_support > n {
        return Err(Error::InvalidParameter(format!(
            "k plus tail support exceeds N ({k} + {tail_support} > {n})"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions = sample(&mut rng, n, k + tail_support).into_vec();
    let mut x = vec![0.0; n];
    let mut truth = Vec::with_capacity(k);
    for &i in &positions[..k] {
        let mut v = if spike_low == spike_high {
            spike_low
        } else {
            rng.random_range(spike_low..=spike_high)
        };
        if sign == SignMode::Mixed && rng.random_bool(0.5) {
            v = -v;
        }
        x[i] = v;
        truth.push((i, v));
    }
    for (&i, v) in positions[k..].iter().zip(tail.values()) {
        x[i] = v;
    }
    Ok((DenseSignal::new(x)?, SparseVector::from_unsorted(n, truth)?))
}

const SIGNAL_MAGIC: &[u8; 4] = b"SRSG";
const SIGNAL_VERSION: u32 = 1;

/// Binary layout: `SRSG`, u32 version, u64 length, then little-endian f64s.
pub fn write_signal_binary(x: &DenseSignal, mut w: impl Write) -> Result<()> {
    w.write_all(SIGNAL_MAGIC)?;
    w.write_all(&SIGNAL_VERSION.to_le_bytes())?;
    w.write_all(&(x.len() as u64).to_le_bytes())?;
    for v in x.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_signal_binary(mut r: impl Read) -> Result<DenseSignal> {
    DenseSignal::new(read_f64_block(&mut r, SIGNAL_MAGIC, SIGNAL_VERSION)?)
}

pub(crate) fn read_f64_block(r: &mut impl Read, magic: &[u8; 4], version: u32) -> Result<Vec<f64>> {
    let mut head = [0u8; 16];
    r.read_exact(&mut head)
        .map_err(|_| Error::Parse("truncated header".into()))?;
    if &head[..4] != magic {
        return Err(Error::Parse(format!("bad magic {:?}", &head[..4])));
    }
    let found = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if found != version {
        return Err(Error::Parse(format!("unsupported version {found}")));
    }
    let len = u64::from_le_bytes(head[8..16].try_into().unwrap()) as usize;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != len * 8 {
        return Err(Error::Parse(format!(
            "expected {len} values, found {} bytes",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Text layout: a header line `N=<n>`, then one `index value` line per entry.
pub fn write_sparse_text(x: &SparseVector, mut w: impl Write) -> Result<()> {
    writeln!(w, "N={}", x.len())?;
    for (i, v) in x.iter() {
        writeln!(w, "{i} {v}")?;
    }
    Ok(())
}

pub fn read_sparse_text(r: impl BufRead) -> Result<SparseVector> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty sparse file".into()))??;
    let n: usize = header
        .trim()
        .strip_prefix("N=")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| Error::Parse(format!("bad header {header:?}, expected N=<n>")))?;
    let mut entries = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let parsed = match (parts.next(), parts.next(), parts.next()) {
            (Some(i), Some(v), None) => i.parse::<usize>().ok().zip(v.parse::<f64>().ok()),
            _ => None,
        };
        let entry = parsed
            .ok_or_else(|| Error::Parse(format!("line {}: expected `index value`", lineno + 2)))?;
        entries.push(entry);
    }
    SparseVector::from_entries(n, entries)
}

/// Loads a signal, choosing the format from the file contents.
pub fn load_signal(path: &Path) -> Result<DenseSignal> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(SIGNAL_MAGIC) {
        read_signal_binary(bytes.as_slice())
    } else {
        let sparse = read_sparse_text(bytes.as_slice())?;
        DenseSignal::new(sparse.to_dense())
    }
}

pub fn save_signal_binary(x: &DenseSignal, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_signal_binary(x, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn save_sparse_text(x: &SparseVector, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_sparse_text(x, &mut w)?;
    w.flush()?;
    Ok(())
}
