//! Timed end-to-end trials, scaling grids and their CSV rows.

use std::time::Instant;

use crate::config::{Constants, RecoveryConfig};
use crate::error::Result;
use crate::measure::MeasurementLayout;
use crate::oracle::{best_k_term, error_ratio};
use crate::signals::{gen_signal, SignalSpec, Tail};
use crate::toplevel::recover;
use crate::vector::DenseSignal;

/// Bumped whenever a column is added, removed or reordered.
pub const CSV_SCHEMA_VERSION: u32 = 1;

/// Per-entry tolerance for calling a recovery exact.
pub const EXACT_TOLERANCE: f64 = 1e-9;

/// Outcome of measuring and decoding one signal.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub decode_ms: f64,
    pub l1_err: f64,
    pub err_ratio: f64,
    pub support_size: usize,
    /// Largest per-entry deviation `max_i |x̂_i − x_i|`.
    pub max_abs_err: f64,
}

/// Measures `x` with `layout` and times the decode alone.
pub fn run_trial(layout: &MeasurementLayout, x: &DenseSignal) -> Result<TrialOutcome> {
    let mu = layout.measure(x)?;
    let start = Instant::now();
    let xhat = recover(&mu, layout)?;
    let decode_ms = start.elapsed().as_secs_f64() * 1e3;
    let dense = xhat.to_dense();
    let max_abs_err = dense
        .iter()
        .zip(x.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(TrialOutcome {
        decode_ms,
        l1_err: xhat.l1_distance(x)?,
        err_ratio: error_ratio(x, &xhat, layout.config().k)?,
        support_size: xhat.nnz(),
        max_abs_err,
    })
}

fn constants_header() -> String {
    Constants::default()
        .named()
        .iter()
        .map(|(n, _)| *n)
        .collect::<Vec<_>>()
        .join(",")
}

fn constants_values(c: &Constants) -> String {
    c.named()
        .iter()
        .map(|(_, v)| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// One `run` row.
#[derive(Debug, Clone)]
pub struct RunRow {
    pub config: RecoveryConfig,
    pub m: usize,
    pub plan_ms: f64,
    pub outcome: TrialOutcome,
}

impl RunRow {
    pub fn csv_header() -> String {
        format!(
            "schema_version,N,k,eps,ell,seed,m,decode_ms,plan_ms,l1_err,err_ratio,support_size,{}",
            constants_header()
        )
    }

    pub fn to_csv(&self) -> String {
        let c = &self.config;
        let o = &self.outcome;
        format!(
            "{CSV_SCHEMA_VERSION},{},{},{},{},{},{},{:.4},{:.4},{},{},{},{}",
            c.n,
            c.k,
            c.eps,
            c.ell,
            c.seed,
            self.m,
            o.decode_ms,
            self.plan_ms,
            o.l1_err,
            o.err_ratio,
            o.support_size,
            constants_values(&c.constants)
        )
    }
}

/// Plans a layout and decodes `x` with it.
pub fn run_once(config: &RecoveryConfig, x: &DenseSignal) -> Result<RunRow> {
    let start = Instant::now();
    let layout = MeasurementLayout::plan(config)?;
    let plan_ms = start.elapsed().as_secs_f64() * 1e3;
    let outcome = run_trial(&layout, x)?;
    Ok(RunRow {
        config: config.clone(),
        m: layout.m(),
        plan_ms,
        outcome,
    })
}

/// A scaling grid.
#[derive(Debug, Clone)]
pub struct BenchSpec {
    pub n_list: Vec<usize>,
    pub k_list: Vec<usize>,
    pub eps: f64,
    pub ell: usize,
    pub trials: usize,
    pub seed: u64,
    pub tail: Tail,
    pub constants: Constants,
    /// Also time the single-level full-scan decoder on every cell.
    pub baseline: bool,
    pub threads: usize,
}

impl BenchSpec {
    pub fn new(
        n_list: Vec<usize>,
        k_list: Vec<usize>,
        eps: f64,
        ell: usize,
        trials: usize,
    ) -> Self {
        BenchSpec {
            n_list,
            k_list,
            eps,
            ell,
            trials,
            seed: 0,
            tail: Tail::None,
            constants: Constants::default(),
            baseline: true,
            threads: 1,
        }
    }
}

/// Summary of one `(N, k)` cell.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub ell: usize,
    pub trials: usize,
    pub m: usize,
    pub median_decode_ms: f64,
    pub success_rate: f64,
    pub median_err_ratio: f64,
    pub baseline_m: Option<usize>,
    pub baseline_median_decode_ms: Option<f64>,
    pub baseline_success_rate: Option<f64>,
    pub constants: Constants,
}

impl BenchRow {
    pub fn csv_header() -> String {
        format!(
            "schema_version,N,k,eps,ell,trials,m,median_decode_ms,success_rate,median_err_ratio,\
             baseline_m,baseline_median_decode_ms,baseline_success_rate,{}",
            constants_header()
        )
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_default();
        format!(
            "{CSV_SCHEMA_VERSION},{},{},{},{},{},{},{:.4},{},{},{},{},{},{}",
            self.n,
            self.k,
            self.eps,
            self.ell,
            self.trials,
            self.m,
            self.median_decode_ms,
            self.success_rate,
            self.median_err_ratio,
            opt(self.baseline_m.map(|v| v.to_string())),
            opt(self.baseline_median_decode_ms.map(|v| format!("{v:.4}"))),
            opt(self.baseline_success_rate.map(|v| v.to_string())),
            constants_values(&self.constants)
        )
    }

    /// `m / (k · log2(N/k))`.
    pub fn measurement_ratio(&self) -> f64 {
        self.m as f64 / (self.k as f64 * (self.n as f64 / self.k as f64).log2())
    }
}

/// A trial succeeds when `err_ratio ≤ 1 + ε` (exact-sparse signals need an
/// exact answer).
fn success(o: &TrialOutcome, eps: f64) -> bool {
    o.err_ratio <= 1.0 + eps
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Signals of trial `t` in a cell; shared by the main and baseline decoders.
fn trial_signal(spec: &BenchSpec, n: usize, k: usize, t: usize) -> Result<DenseSignal> {
    let seed = crate::config::derive_seed(spec.seed, &[n as u64, k as u64, t as u64]);
    let tail = match spec.tail {
        Tail::Flat { mass, support } => Tail::Flat {
            mass,
            support: support.min(n - k),
        },
        Tail::Geometric {
            mass,
            ratio,
            support,
        } => Tail::Geometric {
            mass,
            ratio,
            support: support.min(n - k),
        },
        Tail::None => Tail::None,
    };
    Ok(gen_signal(&SignalSpec::exact_sparse(n, k, seed).with_tail(tail))?.0)
}

fn run_cell_trials(
    layout: &MeasurementLayout,
    signals: &[DenseSignal],
    threads: usize,
) -> Result<Vec<TrialOutcome>> {
    if threads <= 1 || signals.len() <= 1 {
        return signals.iter().map(|x| run_trial(layout, x)).collect();
    }
    let chunk = signals.len().div_ceil(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = signals
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|x| run_trial(layout, x))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        let mut out = Vec::with_capacity(signals.len());
        for h in handles {
            out.extend(h.join().expect("bench worker panicked")?);
        }
        Ok(out)
    })
}

/// Runs every cell of the grid, calling `on_row` as each finishes.
pub fn run_bench(spec: &BenchSpec, mut on_row: impl FnMut(&BenchRow)) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &n in &spec.n_list {
        for &k in &spec.k_list {
            let config = RecoveryConfig::new(n, k, spec.eps, spec.ell, spec.seed)?
                .with_constants(spec.constants)?;
            let signals = (0..spec.trials)
                .map(|t| trial_signal(spec, n, k, t))
                .collect::<Result<Vec<_>>>()?;
            let summarize = |config: &RecoveryConfig| -> Result<(usize, f64, f64, f64)> {
                let layout = MeasurementLayout::plan(config)?;
                let outcomes = run_cell_trials(&layout, &signals, spec.threads)?;
                let times: Vec<f64> = outcomes.iter().map(|o| o.decode_ms).collect();
                let ratios: Vec<f64> = outcomes.iter().map(|o| o.err_ratio).collect();
                let ok = outcomes.iter().filter(|o| success(o, spec.eps)).count();
                Ok((
                    layout.m(),
                    median(&times),
                    ok as f64 / outcomes.len().max(1) as f64,
                    median(&ratios),
                ))
            };
            let (m, med_ms, rate, med_ratio) = summarize(&config)?;
            let baseline = if spec.baseline {
                let mut flat = config.clone();
                flat.ell = 1;
                Some(summarize(&flat)?)
            } else {
                None
            };
            let row = BenchRow {
                n,
                k,
                eps: spec.eps,
                ell: spec.ell,
                trials: spec.trials,
                m,
                median_decode_ms: med_ms,
                success_rate: rate,
                median_err_ratio: med_ratio,
                baseline_m: baseline.map(|b| b.0),
                baseline_median_decode_ms: baseline.map(|b| b.1),
                baseline_success_rate: baseline.map(|b| b.2),
                constants: spec.constants,
            };
            on_row(&row);
            rows.push(row);
        }
    }
    Ok(rows)
}

/// `‖x − x_k‖₁` of a signal, for reporting.
pub fn tail_mass(x: &DenseSignal, k: usize) -> Result<f64> {
    Ok(best_k_term(x, k)?.1)
}
