//! Statistical acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Run with
//! `cargo test -p sparse-recovery --test acceptance`.

mod common;

use std::time::Instant;

use common::*;
use sparse_recovery::bench::{loglog_slope, median, run_bench, BenchSpec, EXACT_TOLERANCE};
use sparse_recovery::fastweak::fast_weak_decode;
use sparse_recovery::filtration::FiltrationMaps;
use sparse_recovery::oracle::error_ratio;
use sparse_recovery::signals::{gen_signal, SignalSpec};
use sparse_recovery::{derive_seed, recover, recover_traced, MeasurementLayout, RecoveryConfig};

const SEEDS: u64 = 100;

struct Outcome {
    pass: bool,
    detail: String,
}

fn layout(n: usize, k: usize, seed: u64) -> MeasurementLayout {
    MeasurementLayout::plan(&RecoveryConfig::new(n, k, 0.5, 2, seed).unwrap()).unwrap()
}

/// Layout seed and signal seed of trial `t` of criterion `c`.
fn seeds(c: u64, t: u64) -> (u64, u64) {
    (derive_seed(c, &[t, 0]), derive_seed(c, &[t, 1]))
}

fn exact_sparse() -> Outcome {
    let mut exact = 0;
    for t in 0..SEEDS {
        let (ls, ss) = seeds(1, t);
        let layout = layout(4096, 8, ls);
        let (x, _) = gen_signal(&SignalSpec::exact_sparse(4096, 8, ss)).unwrap();
        let xhat = recover(&layout.measure(&x).unwrap(), &layout)
            .unwrap()
            .to_dense();
        if xhat
            .iter()
            .zip(x.values())
            .all(|(a, b)| (a - b).abs() <= EXACT_TOLERANCE)
        {
            exact += 1;
        }
    }
    Outcome {
        pass: exact >= 95,
        detail: format!("{exact}/{SEEDS} exact within 1e-9 (need >= 95)"),
    }
}

fn noisy_tail() -> Outcome {
    let mut ratios = Vec::new();
    for t in 0..SEEDS {
        let (ls, ss) = seeds(2, t);
        let layout = layout(4096, 8, ls);
        let (x, _) = flat_tail(4096, 8, ss);
        let xhat = recover(&layout.measure(&x).unwrap(), &layout).unwrap();
        ratios.push(error_ratio(&x, &xhat, 8).unwrap());
    }
    let ok = ratios.iter().filter(|&&r| r <= 2.0).count();
    let med = median(&ratios);
    Outcome {
        pass: ok >= 90 && med <= 1.5,
        detail: format!(
            "err_ratio <= 2 in {ok}/{SEEDS} (need >= 90), median {med:.4} (need <= 1.5)"
        ),
    }
}

fn measurement_scaling() -> Outcome {
    let mut ratios = Vec::new();
    let mut seed_stable = true;
    for lg in 12..=18u32 {
        let n = 1usize << lg;
        for k in [8usize, 16, 32] {
            let m = layout(n, k, 1).m();
            seed_stable &= (2..4).all(|s| layout(n, k, s).m() == m);
            ratios.push(m as f64 / (k as f64 * (n as f64 / k as f64).log2()));
        }
    }
    let med = median(&ratios);
    let spread = ratios
        .iter()
        .map(|r| (r / med).max(med / r))
        .fold(1.0, f64::max);
    Outcome {
        pass: spread <= 3.0 && seed_stable,
        detail: format!(
            "max factor from grid median {spread:.3} (need <= 3), m seed-independent: {seed_stable}, \
             m/(k log2(N/k)) in [{:.0}, {:.0}]",
            ratios.iter().cloned().fold(f64::INFINITY, f64::min),
            ratios.iter().cloned().fold(0.0, f64::max)
        ),
    }
}

fn decode_time() -> Outcome {
    let mut spec = BenchSpec::new(
        vec![1 << 14, 1 << 16, 1 << 18, 1 << 20],
        vec![16],
        0.5,
        2,
        10,
    );
    spec.seed = 4;
    let rows = run_bench(&spec, |_| {}).unwrap();
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let fast: Vec<f64> = rows.iter().map(|r| r.median_decode_ms).collect();
    let base: Vec<f64> = rows
        .iter()
        .map(|r| r.baseline_median_decode_ms.unwrap())
        .collect();
    let (s, b) = (loglog_slope(&ns, &fast), loglog_slope(&ns, &base));
    let ms = |v: &[f64]| {
        v.iter()
            .map(|t| format!("{t:.1}"))
            .collect::<Vec<_>>()
            .join("/")
    };
    Outcome {
        pass: s <= 0.7 && b >= 0.9,
        detail: format!(
            "slope {s:.3} (need <= 0.7), l=1 baseline slope {b:.3} (need >= 0.9); median ms {} vs {}",
            ms(&fast),
            ms(&base)
        ),
    }
}

fn oracle_equivalence() -> Outcome {
    let mut r = rng(5);
    let mut failures = Vec::new();
    for case in 0..50 {
        let layout = random_small_layout(&mut r, 512);
        let x = noisy_signal(layout.n(), &mut r);
        if let Err(e) = check_oracles(&layout, &x, &mut r) {
            failures.push(format!("case {case}: {e}"));
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!(
            "{}/50 instances bit-identical; {}",
            50 - failures.len(),
            failures.join("; ")
        ),
    }
}

fn invariant_suite() -> Outcome {
    let mut failures = Vec::new();
    let mut checks = 0;
    let mut record = |name: &str, t: u64, c: Check| {
        checks += 1;
        if let Err(e) = c {
            failures.push(format!("{name} #{t}: {e}"));
        }
    };
    for t in 0..20u64 {
        let mut r = rng(derive_seed(6, &[t]));
        let n = 64 + (t as usize * 197) % 3000;
        let ell = 1 + (t as usize % 3);
        let x = noisy_signal(n, &mut r);
        let maps = FiltrationMaps::build(t, n, 1 + t as usize % 8, ell + 1, 0.5).unwrap();
        record("filtration", t, check_filtration(&maps, &x));
        let lay =
            MeasurementLayout::plan(&RecoveryConfig::new(n, 4, 0.5, ell, t).unwrap()).unwrap();
        let y = noisy_signal(n, &mut r);
        record("linearity", t, check_linearity(&lay, &x, &y, 1.5, -0.75));
        record(
            "weak scaling",
            t,
            check_weak_scale(&lay, &x, 0.37 + t as f64),
        );
        record(
            "recover scaling",
            t,
            check_recover_scale(&lay, &x, 2f64.powi(t as i32 - 10)),
        );
        record(
            "trace bounds (noisy)",
            t,
            check_recovery_trace(&lay, &x, false),
        );
        let sparse_layout = layout(4096, 1 + t as usize % 8, t);
        let z = mixed_sparse(4096, 1 + t as usize % 8, t + 1000);
        record(
            "trace bounds (sparse)",
            t,
            check_recovery_trace(&sparse_layout, &z, true),
        );
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!(
            "{}/{checks} checks green; {}",
            checks - failures.len(),
            failures.join("; ")
        ),
    }
}

fn weak_contract() -> Outcome {
    let (n, s) = (4096, 8);
    let mut found_half = 0;
    let mut halving = 0;
    for t in 0..SEEDS {
        let (ls, ss) = seeds(7, t);
        let layout = layout(n, s, ls);
        let spec = SignalSpec::exact_sparse(n, s, ss);
        let (x, truth) = gen_signal(&spec).unwrap();
        let mu = layout.measure(&x).unwrap();
        let plan = &layout.plans()[0];
        let y = fast_weak_decode(mu.values(), plan, &layout.config().constants).unwrap();
        let hits = truth.indices().iter().filter(|&&i| y.get(i) != 0.0).count();
        if hits >= s / 2 {
            found_half += 1;
        }
        let (_, trace) = recover_traced(&mu, &layout, false).unwrap();
        let mut acc = sparse_recovery::SparseVector::empty(n);
        let mut ok = true;
        for it in &trace.iterations {
            acc = acc.add(&it.found).unwrap();
            let unrecovered = truth
                .iter()
                .filter(|&(i, v)| (v - acc.get(i)).abs() > spec.spike_low / 2.0)
                .count();
            ok &= unrecovered <= s >> it.iteration;
        }
        if ok {
            halving += 1;
        }
    }
    Outcome {
        pass: found_half >= 95 && halving >= 90,
        detail: format!(
            "fast weak finds >= s/2 spikes in {found_half}/{SEEDS} (need >= 95); \
             unrecovered spikes halve every iteration in {halving}/{SEEDS} (need >= 90)"
        ),
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 7] = [
        ("exact-sparse recovery", exact_sparse),
        ("noisy l1 guarantee", noisy_tail),
        ("measurement scaling", measurement_scaling),
        ("sublinear decode time", decode_time),
        ("oracle equivalence", oracle_equivalence),
        ("invariant suite", invariant_suite),
        ("weak-system contract", weak_contract),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "[{verdict}] criterion {} {name}: {} ({:.1}s)",
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
