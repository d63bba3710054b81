//! Checks shared by the invariant, oracle and acceptance test targets. Each
//! returns `Err` with a description instead of panicking so the acceptance
//! suite can count failures.
#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sparse_recovery::config::WeakParams;
use sparse_recovery::filtration::FiltrationMaps;
use sparse_recovery::hashing::PreimageTable;
use sparse_recovery::oracle::{materialize_matrix, naive_weak};
use sparse_recovery::signals::{gen_signal, SignMode, SignalSpec, Tail};
use sparse_recovery::weak::{weak_decode, WeakLayerView};
use sparse_recovery::{
    recover, recover_traced, DenseSignal, MeasurementLayout, RecoveryConfig, SparseVector,
};

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense signal with a few spikes and small uniform noise everywhere.
pub fn noisy_signal(n: usize, rng: &mut impl Rng) -> DenseSignal {
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-0.01..0.01)).collect();
    for _ in 0..rng.random_range(1..=4usize.min(n)) {
        x[rng.random_range(0..n)] = rng.random_range(-10.0..10.0);
    }
    DenseSignal::new(x).unwrap()
}

pub fn mixed_sparse(n: usize, k: usize, seed: u64) -> DenseSignal {
    let spec = SignalSpec {
        sign: SignMode::Mixed,
        ..SignalSpec::exact_sparse(n, k, seed)
    };
    gen_signal(&spec).unwrap().0
}

pub fn flat_tail(n: usize, k: usize, seed: u64) -> (DenseSignal, SparseVector) {
    let spec = SignalSpec::exact_sparse(n, k, seed).with_tail(Tail::Flat {
        mass: 1.0,
        support: 512.min(n - k),
    });
    gen_signal(&spec).unwrap()
}

/// Every index lands in exactly one bucket, buckets list their members in
/// ascending order, and the backpointers agree with the lists.
pub fn check_table(t: &PreimageTable) -> Check {
    let mut seen = vec![false; t.domain()];
    for b in 0..t.range() {
        let members = t.enumerate(b).map_err(|e| e.to_string())?;
        ensure!(
            members.len() == t.occupancy(b),
            "occupancy of bucket {b} disagrees with its list"
        );
        ensure!(
            members.windows(2).all(|w| w[0] < w[1]),
            "bucket {b} not ascending"
        );
        for &i in members {
            let i = i as usize;
            ensure!(!seen[i], "index {i} listed twice");
            seen[i] = true;
            ensure!(t.bucket_of(i) == b, "bucket_of({i}) != {b}");
            ensure!(
                t.thread()[t.position_of(i)] as usize == i,
                "position_of({i}) does not point back"
            );
        }
    }
    ensure!(seen.iter().all(|&v| v), "table does not cover its domain");
    Ok(())
}

/// Each level partitions [N], each split lists exactly the children whose
/// members make up the parent, and filtered values add up across splits.
pub fn check_filtration(maps: &FiltrationMaps, x: &DenseSignal) -> Check {
    let (n, ell) = (maps.n(), maps.ell());
    check_table(maps.table())?;
    for q in 1..=ell {
        let mut count = 0;
        for b in 0..maps.level_size(q) {
            let members = maps.members(q, b).map_err(|e| e.to_string())?;
            count += members.len();
            for &i in members {
                ensure!(
                    maps.level_of(i as usize, q).unwrap() == b,
                    "level_of({i}, {q}) != {b}"
                );
            }
        }
        ensure!(count == n, "level {q} holds {count} indices, expected {n}");
    }
    for q in 1..ell {
        for b in 0..maps.level_size(q) {
            let children = maps.split(b, q).map_err(|e| e.to_string())?;
            if q + 1 < ell {
                ensure!(
                    children.len() <= maps.fanout(),
                    "bucket ({q},{b}) splits into {} > fanout",
                    children.len()
                );
            }
            let mut union: Vec<u32> = Vec::new();
            let mut child_sum = 0.0;
            for &c in &children {
                union.extend_from_slice(maps.members(q + 1, c).unwrap());
                child_sum += maps.filtered_value(x, q + 1, c).unwrap();
            }
            union.sort_unstable();
            ensure!(
                union == maps.members(q, b).unwrap(),
                "split of ({q},{b}) does not cover its members"
            );
            let parent = maps.filtered_value(x, q, b).unwrap();
            let scale: f64 = maps
                .members(q, b)
                .unwrap()
                .iter()
                .map(|&i| x.values()[i as usize].abs())
                .sum();
            ensure!(
                (parent - child_sum).abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE),
                "filtered value of ({q},{b}) is {parent}, children sum to {child_sum}"
            );
        }
    }
    Ok(())
}

/// `Φ(a·x + b·y) = a·Φx + b·Φy` to 1e-12 relative.
pub fn check_linearity(
    layout: &MeasurementLayout,
    x: &DenseSignal,
    y: &DenseSignal,
    a: f64,
    b: f64,
) -> Check {
    let combo: Vec<f64> = x
        .values()
        .iter()
        .zip(y.values())
        .map(|(u, v)| a * u + b * v)
        .collect();
    let lhs = layout.measure(&DenseSignal::new(combo).unwrap()).unwrap();
    let (mx, my) = (layout.measure(x).unwrap(), layout.measure(y).unwrap());
    let scale = a.abs() * x.l1_norm() + b.abs() * y.l1_norm();
    for (r, ((l, u), v)) in lhs
        .values()
        .iter()
        .zip(mx.values())
        .zip(my.values())
        .enumerate()
    {
        let rhs = a * u + b * v;
        ensure!(
            (l - rhs).abs() <= 1e-12 * scale.max(1e-300),
            "row {r}: {l} vs {rhs}"
        );
    }
    Ok(())
}

/// `weak_decode(c·μ) = c·weak_decode(μ)` bit for bit on every layer.
pub fn check_weak_scale(layout: &MeasurementLayout, x: &DenseSignal, c: f64) -> Check {
    let mu = layout.measure(x).unwrap();
    let scaled = mu.scaled(c);
    let constants = &layout.config().constants;
    let check = |layer, cands: Vec<usize>, params: &WeakParams| -> Check {
        let a = weak_decode(
            &WeakLayerView::new(layer, mu.values()).unwrap(),
            &cands,
            params,
            constants,
        )
        .unwrap();
        let b = weak_decode(
            &WeakLayerView::new(layer, scaled.values()).unwrap(),
            &cands,
            params,
            constants,
        )
        .unwrap();
        ensure!(
            b == a.scaled(c),
            "weak_decode is not scale-equivariant for c = {c}"
        );
        Ok(())
    };
    for plan in layout.plans() {
        for rep in &plan.outer {
            for (qi, layer) in rep.levels.iter().enumerate() {
                check(
                    layer,
                    (0..rep.filtration.level_size(qi + 1)).collect(),
                    layer.params(),
                )?;
            }
        }
        check(
            &plan.final_layer,
            (0..layout.n()).collect(),
            plan.final_layer.params(),
        )?;
    }
    Ok(())
}

/// `recover(c·μ) = c·recover(μ)` bit for bit.
pub fn check_recover_scale(layout: &MeasurementLayout, x: &DenseSignal, c: f64) -> Check {
    let mu = layout.measure(x).unwrap();
    let a = recover(&mu, layout).unwrap();
    let b = recover(&mu.scaled(c), layout).unwrap();
    ensure!(
        b == a.scaled(c),
        "recover is not scale-equivariant for c = {c}"
    );
    Ok(())
}

/// Support bounds per iteration and overall, candidate-set bounds inside each
/// fast weak call (the level-ℓ bound only when `strict_last_level`), and
/// residual consistency to 1e-10 relative.
pub fn check_recovery_trace(
    layout: &MeasurementLayout,
    x: &DenseSignal,
    strict_last_level: bool,
) -> Check {
    let config = layout.config();
    let c = &config.constants;
    let n = layout.n();
    let mu = layout.measure(x).unwrap();
    let (xhat, trace) = recover_traced(&mu, layout, true).unwrap();
    ensure!(
        trace.iterations.len() == config.iterations(),
        "iteration count"
    );
    let mut acc = SparseVector::empty(n);
    let mut bound_total = 0;
    let mu_scale = mu
        .values()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    for (it, plan) in trace.iterations.iter().zip(layout.plans()) {
        let s = it.sparsity;
        let cap = (c.c_top * s as f64).ceil() as usize;
        bound_total += cap;
        ensure!(
            it.found.nnz() <= cap,
            "iteration {}: |x'| = {} > {cap}",
            it.iteration,
            it.found.nnz()
        );
        acc = acc.add(&it.found).unwrap();
        ensure!(acc.nnz() == it.support_after, "support_after mismatch");
        ensure!(
            it.support_after <= bound_total,
            "|supp(x̂)| = {} > {bound_total}",
            it.support_after
        );

        let ell = plan.ell;
        if ell > 1 {
            let fanout = ((n as f64 / s as f64).powf(1.0 / ell as f64)).ceil() as usize;
            let per_level = cap * fanout;
            for sizes in &it.fast_weak.level_candidates {
                ensure!(sizes.len() == ell, "trace records {} levels", sizes.len());
                ensure!(
                    sizes[0] == plan.outer[0].filtration.level_size(1),
                    "level 1 is not scanned in full"
                );
                for (qi, &size) in sizes.iter().enumerate().skip(1) {
                    let q = qi + 1;
                    if q < ell || strict_last_level {
                        ensure!(
                            size <= per_level,
                            "|I_{q}| = {size} > {per_level} (iteration {})",
                            it.iteration
                        );
                    }
                }
            }
            if strict_last_level {
                let outer = plan.outer.len();
                let total = outer
                    * cap
                    * (plan.xi * (n as f64 / s as f64).powf(1.0 / ell as f64)).ceil() as usize;
                ensure!(
                    it.fast_weak.final_candidates <= total,
                    "|I| = {} > {total}",
                    it.fast_weak.final_candidates
                );
            }
        }

        let residual = it.residual.as_ref().unwrap();
        let expect = layout.measure_sparse(&acc).unwrap();
        for (r, ((res, m), e)) in residual
            .values()
            .iter()
            .zip(mu.values())
            .zip(expect.values())
            .enumerate()
        {
            ensure!(
                (res - (m - e)).abs() <= 1e-10 * mu_scale,
                "iteration {}: residual row {r} is {res}, expected {}",
                it.iteration,
                m - e
            );
        }
    }
    ensure!(
        acc == xhat,
        "accumulated answers differ from recover's output"
    );
    Ok(())
}

/// Fast-path weak decoding against the brute-force oracle on every layer,
/// with random candidate subsets, plus Φx against an explicit matrix.
pub fn check_oracles(layout: &MeasurementLayout, x: &DenseSignal, rng: &mut impl Rng) -> Check {
    let mu = layout.measure(x).unwrap();
    let constants = &layout.config().constants;
    let mut subset = |size: usize| -> Vec<usize> {
        let keep = rng.random_range(0.2..=1.0);
        let mut v: Vec<usize> = (0..size).filter(|_| rng.random_bool(keep)).collect();
        if v.is_empty() {
            v.push(0);
        }
        v
    };
    for plan in layout.plans() {
        for rep in &plan.outer {
            for (qi, layer) in rep.levels.iter().enumerate() {
                let q = qi + 1;
                let cands = subset(rep.filtration.level_size(q));
                let fast = weak_decode(
                    &WeakLayerView::new(layer, mu.values()).unwrap(),
                    &cands,
                    layer.params(),
                    constants,
                )
                .unwrap();
                let naive = naive_weak(
                    x,
                    layer,
                    Some((&rep.filtration, q)),
                    &cands,
                    layer.params(),
                    constants,
                )
                .unwrap();
                ensure!(
                    fast == naive,
                    "level {q} of iteration {}: fast {fast:?} vs naive {naive:?}",
                    plan.iteration
                );
            }
        }
        let layer = &plan.final_layer;
        let cands = subset(layout.n());
        let fast = weak_decode(
            &WeakLayerView::new(layer, mu.values()).unwrap(),
            &cands,
            layer.params(),
            constants,
        )
        .unwrap();
        let naive = naive_weak(x, layer, None, &cands, layer.params(), constants).unwrap();
        ensure!(
            fast == naive,
            "final layer of iteration {}: fast vs naive differ",
            plan.iteration
        );
    }
    let phi = materialize_matrix(layout, MATRIX_CAP).map_err(|e| e.to_string())?;
    let dense = phi.multiply(x).unwrap();
    let scale = x.l1_norm().max(1e-300);
    for (r, (a, b)) in dense.iter().zip(mu.values()).enumerate() {
        ensure!(
            (a - b).abs() <= 1e-12 * scale,
            "row {r}: matrix {a} vs measure {b}"
        );
    }
    Ok(())
}

/// Entry cap for explicit matrices in tests (one byte per entry).
pub const MATRIX_CAP: usize = 1 << 27;

/// Random layout with N ≤ `max_n` whose explicit matrix fits under
/// [`MATRIX_CAP`]; oversized draws are redrawn.
pub fn random_small_layout(rng: &mut impl Rng, max_n: usize) -> MeasurementLayout {
    loop {
        let layout = MeasurementLayout::plan(&random_config(rng, max_n)).unwrap();
        if layout.m() * layout.n() <= MATRIX_CAP {
            return layout;
        }
    }
}

/// Random configuration with N ≤ `max_n`.
pub fn random_config(rng: &mut impl Rng, max_n: usize) -> RecoveryConfig {
    let n = rng.random_range(16..=max_n);
    let k = rng.random_range(1..=8usize.min(n / 4));
    let eps = [0.5, 1.0][rng.random_range(0..2)];
    let ell = rng.random_range(1..=3);
    RecoveryConfig::new(n, k, eps, ell, rng.random()).unwrap()
}
