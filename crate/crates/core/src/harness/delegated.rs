//! Workloads that drive a library component instead of the heap.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::report::RunReport;
use super::{HarnessError, WorkloadSpec};
use crate::brex::{corpus, Pattern, BENCH_LENGTHS, CORPUS_NAMES};
use crate::dispatch::{self, Strategy, BENCH_HEADER};
use crate::structures::{
    comparison_bound, map_visit_bound, stable_sort_counted, vector_visit_bound, OrderedMap, PersistentVector,
    StepCounter,
};

const OPS_PER_CYCLE: usize = 1000;
const DISPATCH_TARGETS: &[usize] = &[1, 3, 4, 5, 32, 64, 65, 256, 1024];

/// Step counts of the adversarial corpora against `a` × n.
pub fn redos(spec: &WorkloadSpec) -> RunReport {
    let mut report = RunReport::new(spec);
    report.data.push("pattern,n,steps,bound,accepted".to_string());
    for name in CORPUS_NAMES {
        let mut within = true;
        let mut worst_exponent: f64 = 0.0;
        for p in corpus(name).expect("listed corpus") {
            let pattern = Pattern::new(p).expect("corpus patterns parse");
            let mut prev: Option<(usize, u64)> = None;
            for &n in BENCH_LENGTHS {
                let e = pattern.accepts_counted(&"a".repeat(n));
                let bound = pattern.step_bound(n);
                within &= e.steps <= bound;
                if let Some((pn, ps)) = prev {
                    let k = (e.steps as f64 / ps.max(1) as f64).ln() / (n as f64 / pn as f64).ln();
                    worst_exponent = worst_exponent.max(k);
                }
                prev = Some((n, e.steps));
                report.data.push(format!("\"{p}\",{n},{},{bound},{}", e.steps, e.result));
            }
        }
        report.verdict(
            &format!("brex_{name}_within_bound"),
            within,
            format!("growth_exponent_max={worst_exponent:.2}"),
        );
    }
    report
}

/// Random vector and map operations checked against plain collections,
/// plus stable sorts, with every operation's step count held to its bound.
pub fn structures(spec: &WorkloadSpec) -> RunReport {
    let mut report = RunReport::new(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let ops = spec.cycles as usize * OPS_PER_CYCLE;

    let mut vec = PersistentVector::new();
    let mut model: Vec<u64> = Vec::new();
    let (mut vec_ok, mut vec_max, mut vec_over) = (true, 0u64, 0usize);
    let mut steps = StepCounter::default();
    for _ in 0..ops {
        steps.reset();
        let n = model.len();
        match rng.gen_range(0..10) {
            0..=3 => {
                let v = rng.gen();
                vec = vec.push_counted(v, &mut steps);
                model.push(v);
            }
            4 | 5 if n > 0 => {
                let i = rng.gen_range(0..n);
                let v = rng.gen();
                vec = vec.set_counted(i, v, &mut steps).expect("in range");
                model[i] = v;
            }
            6 if n > 0 => {
                let (rest, v) = vec.pop_counted(&mut steps).expect("non-empty");
                vec_ok &= Some(v) == model.pop();
                vec = rest;
            }
            _ => {
                let i = rng.gen_range(0..n + 1);
                vec_ok &= vec.get_counted(i, &mut steps).ok() == model.get(i);
            }
        }
        let bound = vector_visit_bound(n.max(model.len()));
        vec_max = vec_max.max(steps.node_visits);
        vec_over += (steps.node_visits > bound) as usize;
    }
    vec_ok &= vec.len() == model.len() && vec.to_vec() == model;

    let mut map: OrderedMap<u32, u64> = OrderedMap::new();
    let mut oracle: BTreeMap<u32, u64> = BTreeMap::new();
    let (mut map_ok, mut map_max, mut map_over) = (true, 0u64, 0usize);
    let key_space = (ops as u32 / 2).max(16);
    for _ in 0..ops {
        steps.reset();
        let before = oracle.len();
        let k = rng.gen_range(0..key_space);
        match rng.gen_range(0..10) {
            0..=4 => {
                let v = rng.gen();
                map = map.insert_counted(k, v, &mut steps);
                oracle.insert(k, v);
            }
            5..=7 => {
                map = map.remove_counted(&k, &mut steps);
                oracle.remove(&k);
            }
            _ => map_ok &= map.find_counted(&k, &mut steps) == oracle.get(&k),
        }
        let bound = map_visit_bound(before.max(oracle.len()));
        map_max = map_max.max(steps.node_visits);
        map_over += (steps.node_visits as f64 > bound) as usize;
    }
    map_ok &= map.len() == oracle.len() && map.enumerate() == oracle.into_iter().collect::<Vec<_>>();

    let (mut sort_ok, mut sort_over) = (true, 0usize);
    for round in 0..spec.cycles.max(1) {
        let n = 1 + (round as usize * 97) % 2000;
        let items: Vec<(u8, usize)> = (0..n).map(|i| (rng.gen_range(0..8), i)).collect();
        steps.reset();
        let sorted = stable_sort_counted(&items, |a, b| a.0.cmp(&b.0), &mut steps);
        let mut expected = items.clone();
        expected.sort_by_key(|p| p.0);
        sort_ok &= sorted == expected;
        sort_over += (steps.comparisons > comparison_bound(n)) as usize;
    }

    report.data.push(format!(
        "structures ops={ops} vector_len={} vector_max_visits={vec_max} map_len={} map_max_visits={map_max}",
        vec.len(),
        map.len()
    ));
    report.verdict("vector_oracle", vec_ok, format!("ops={ops}"));
    report.verdict("vector_visit_bound", vec_over == 0, format!("over_bound={vec_over}"));
    report.verdict("map_oracle", map_ok, format!("ops={ops}"));
    report.verdict("map_visit_bound", map_over == 0, format!("over_bound={map_over}"));
    report.verdict("sort_stable", sort_ok, format!("rounds={}", spec.cycles.max(1)));
    report.verdict("sort_comparison_bound", sort_over == 0, format!("over_bound={sort_over}"));
    report
}

/// Untimed dispatch bench: `cycles` sites per target count.
pub fn dispatch(spec: &WorkloadSpec) -> Result<RunReport, HarnessError> {
    let mut report = RunReport::new(spec);
    report.data.push(BENCH_HEADER.to_string());
    let mut over = 0;
    for (i, &k) in DISPATCH_TARGETS.iter().enumerate() {
        let rows = dispatch::bench(spec.cycles as usize, k, spec.seed.wrapping_add(i as u64), false)
            .map_err(|e| HarnessError::BadSpec(e.to_string()))?;
        for row in rows {
            let bound = match row.strategy {
                Strategy::Monomorphic => 0,
                Strategy::InlineChain | Strategy::LinearTable => k as u32,
                Strategy::HashedTable => 2,
            };
            over += (row.probes_max > bound) as usize;
            report.data.push(row.csv());
        }
    }
    report.verdict("dispatch_probe_bound", over == 0, format!("sites_over_bound={over}"));
    Ok(report)
}
