//! Recovery configuration, the pinned constants behind every asymptotic
//! bound, and deterministic seed derivation.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Multipliers for every quantity that is only specified up to a constant.
///
/// These are recorded in every CSV row the CLI emits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    /// Weak bucket multiplier: `R = c_buckets · η⁻¹ζ⁻² · B`.
    pub c_buckets: f64,
    /// Weak repetition multiplier: `t = c_reps · η⁻¹ζ⁻² · log2(D/s) / log2(B/s)`.
    pub c_reps: f64,
    /// A weak call keeps the `ceil(c_top · s)` largest estimates.
    pub c_top: f64,
    /// Outer filtration repetitions per iteration: `ceil(c_outer · ℓ / α)`.
    pub c_outer: f64,
    /// Noise schedule `α_j = c_alpha · ε · decay^j`.
    pub c_alpha: f64,
    /// Noise of the final weak call of each iteration: `η = c_final_eta · α`.
    pub c_final_eta: f64,
    pub decay: f64,
    /// Omission parameter of the final weak call.
    pub final_zeta: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            c_buckets: 0.5,
            c_reps: 0.1,
            c_top: 2.0,
            c_outer: 2.0,
            c_alpha: 1.0,
            c_final_eta: 1.0,
            decay: 0.9,
            final_zeta: 1.0 / 6.0,
        }
    }
}

impl Constants {
    /// `(name, value)` pairs in the order used for file and CSV output.
    pub fn named(&self) -> [(&'static str, f64); 8] {
        [
            ("c_buckets", self.c_buckets),
            ("c_reps", self.c_reps),
            ("c_top", self.c_top),
            ("c_outer", self.c_outer),
            ("c_alpha", self.c_alpha),
            ("c_final_eta", self.c_final_eta),
            ("decay", self.decay),
            ("final_zeta", self.final_zeta),
        ]
    }

    /// Sets the constant called `key`; false if there is no such constant.
    pub fn set(&mut self, key: &str, value: f64) -> bool {
        let slot = match key {
            "c_buckets" => &mut self.c_buckets,
            "c_reps" => &mut self.c_reps,
            "c_top" => &mut self.c_top,
            "c_outer" => &mut self.c_outer,
            "c_alpha" => &mut self.c_alpha,
            "c_final_eta" => &mut self.c_final_eta,
            "decay" => &mut self.decay,
            "final_zeta" => &mut self.final_zeta,
            _ => return false,
        };
        *slot = value;
        true
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.named() {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.decay >= 1.0 {
            return Err(Error::InvalidConfig(format!(
                "decay must lie in (0,1), got {}",
                self.decay
            )));
        }
        if self.final_zeta > 1.0 {
            return Err(Error::InvalidConfig(format!(
                "final_zeta must lie in (0,1], got {}",
                self.final_zeta
            )));
        }
        Ok(())
    }
}

/// Problem dimensions, accuracy target, filtration depth and master seed.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryConfig {
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub ell: usize,
    pub seed: u64,
    pub constants: Constants,
}

impl RecoveryConfig {
    pub fn new(n: usize, k: usize, eps: f64, ell: usize, seed: u64) -> Result<Self> {
        let cfg = RecoveryConfig {
            n,
            k,
            eps,
            ell,
            seed,
            constants: Constants::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_constants(mut self, constants: Constants) -> Result<Self> {
        self.constants = constants;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("N must be at least 1".into()));
        }
        if self.n > u32::MAX as usize {
            return Err(Error::InvalidConfig(format!(
                "N = {} exceeds the supported maximum",
                self.n
            )));
        }
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.k > self.n {
            return Err(Error::InvalidConfig(format!(
                "k exceeds N ({} > {})",
                self.k, self.n
            )));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "eps must lie in (0,1], got {}",
                self.eps
            )));
        }
        if self.ell == 0 {
            return Err(Error::InvalidConfig("ell must be at least 1".into()));
        }
        self.constants.validate()
    }

    /// Number of toplevel iterations, `ceil(log2 k) + 1`; the last one runs
    /// with sparsity 1.
    pub fn iterations(&self) -> usize {
        let mut j = 1;
        while self.sparsity(j) > 1 {
            j += 1;
        }
        j
    }

    /// Sparsity entering iteration `j` (1-based): `max(1, ceil(k / 2^(j-1)))`.
    pub fn sparsity(&self, j: usize) -> usize {
        let shift = (j - 1).min(63) as u32;
        let denom = 1usize.checked_shl(shift).unwrap_or(usize::MAX);
        self.k.div_ceil(denom).max(1)
    }

    /// Noise budget of iteration `j`: `c_alpha · ε · decay^j`.
    pub fn alpha(&self, j: usize) -> f64 {
        self.constants.c_alpha * self.eps * self.constants.decay.powi(j as i32)
    }

    /// Outer filtration repetitions for iteration `j`.
    pub fn outer_repetitions(&self, j: usize) -> usize {
        ((self.constants.c_outer * self.ell as f64 / self.alpha(j)).ceil() as usize).max(1)
    }

    /// Parses the line-based `key=value` format. Blank lines and `#` comments
    /// are ignored; unknown keys are errors. `n` and `k` are required.
    pub fn parse(text: &str) -> Result<Self> {
        let (mut n, mut k) = (None, None);
        let mut eps = 0.5;
        let mut ell = 2;
        let mut seed = 0u64;
        let mut constants = Constants::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| {
                Error::Parse(format!("line {}: bad {what} value {value:?}", lineno + 1))
            };
            match key {
                "n" | "N" => n = Some(value.parse::<usize>().map_err(|_| bad("n"))?),
                "k" => k = Some(value.parse::<usize>().map_err(|_| bad("k"))?),
                "eps" => eps = value.parse().map_err(|_| bad("eps"))?,
                "ell" => ell = value.parse().map_err(|_| bad("ell"))?,
                "seed" => seed = value.parse().map_err(|_| bad("seed"))?,
                _ => {
                    let v: f64 = value.parse().map_err(|_| bad(key))?;
                    if !constants.set(key, v) {
                        return Err(Error::Parse(format!(
                            "line {}: unknown key {key:?}",
                            lineno + 1
                        )));
                    }
                }
            }
        }
        let n = n.ok_or_else(|| Error::Parse("missing key n".into()))?;
        let k = k.ok_or_else(|| Error::Parse("missing key k".into()))?;
        RecoveryConfig::new(n, k, eps, ell, seed)?.with_constants(constants)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "n={}\nk={}\neps={}\nell={}\nseed={}",
            self.n, self.k, self.eps, self.ell, self.seed
        );
        for (name, v) in self.constants.named() {
            let _ = writeln!(s, "{name}={v}");
        }
        s
    }
}

/// Parameters of one weak call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakParams {
    pub s: usize,
    /// Hash parameter, always `2s`.
    pub b: usize,
    pub eta: f64,
    pub zeta: f64,
}

impl WeakParams {
    pub fn new(s: usize, eta: f64, zeta: f64) -> Result<Self> {
        if s == 0 {
            return Err(Error::InvalidParameter(
                "sparsity must be at least 1".into(),
            ));
        }
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eta must be positive, got {eta}"
            )));
        }
        if !(zeta > 0.0 && zeta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "zeta must lie in (0,1], got {zeta}"
            )));
        }
        Ok(WeakParams {
            s,
            b: 2 * s,
            eta,
            zeta,
        })
    }

    fn cost_factor(&self) -> f64 {
        1.0 / (self.eta * self.zeta * self.zeta)
    }

    /// Unclamped bucket count `ceil(c_buckets · η⁻¹ζ⁻² · B)`.
    pub fn raw_bucket_count(&self, c: &Constants) -> usize {
        ((c.c_buckets * self.cost_factor() * self.b as f64).ceil() as usize).max(1)
    }

    /// Bucket count for a layer over `domain` indices, clamped to the domain.
    pub fn bucket_count(&self, c: &Constants, domain: usize) -> usize {
        self.raw_bucket_count(c).min(domain.max(1))
    }

    /// Repetitions `max(1, ceil(c_reps · η⁻¹ζ⁻² · log2(D/s) / max(1, log2(B/s))))`
    /// for a layer over `domain` indices.
    pub fn repetitions(&self, c: &Constants, domain: usize) -> usize {
        let log_domain = (domain as f64 / self.s as f64).log2();
        let log_b = (self.b as f64 / self.s as f64).log2().max(1.0);
        let t = (c.c_reps * self.cost_factor() * log_domain / log_b).ceil();
        if t.is_finite() && t >= 1.0 {
            t as usize
        } else {
            1
        }
    }

    /// Number of estimates a weak call keeps.
    pub fn output_size(&self, c: &Constants) -> usize {
        (c.c_top * self.s as f64).ceil() as usize
    }
}

/// splitmix64 finalizer: a bijective 64-bit mixer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const PATH_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Derives a child seed from `master` along `path`; the empty path is the
/// identity.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(master, |acc, &p| {
        mix64(acc.rotate_left(17) ^ mix64(p.wrapping_add(PATH_SALT)))
    })
}
