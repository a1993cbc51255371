mod support;

use std::collections::BTreeMap;

use omega_rt::brex::{BrexError, Pattern, MAX_STRATUM};
use omega_rt::dispatch::{CallSiteSpec, DispatchTable, Strategy as Tier};
use omega_rt::harness::{check_bounds, run, RunReport, Workload, WorkloadSpec};
use omega_rt::memory::HeapConfig;
use omega_rt::structures::{
    comparison_bound, map_visit_bound, stable_sort_counted, vector_visit_bound, OrderedMap, PersistentVector,
    StepCounter,
};
use omega_rt::telemetry::{GcEvent, GcEventRing, LatencyHistogram};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use support::regex_gen::{random_string, stratified, stratum0};
use support::{automata, backtrack, heap_model};

#[derive(Debug, Clone)]
enum VecOp {
    Push(u16),
    Set(usize, u16),
    Pop,
    Get(usize),
}

fn vec_op() -> impl Strategy<Value = VecOp> {
    prop_oneof![
        3 => any::<u16>().prop_map(VecOp::Push),
        1 => (any::<usize>(), any::<u16>()).prop_map(|(i, v)| VecOp::Set(i, v)),
        1 => Just(VecOp::Pop),
        1 => any::<usize>().prop_map(VecOp::Get),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn heap_stays_consistent(seed in any::<u64>(), nursery_kib in 1usize..48, dec in 1usize..64, defrag in 0usize..256) {
        let config = HeapConfig {
            nursery_bytes: nursery_kib * 1024,
            dec_budget: dec,
            defrag_budget: defrag,
            ..HeapConfig::default()
        };
        let result = heap_model::run(config.clone(), seed, 1500, 250);
        prop_assert!(result.is_ok(), "{}", result.err().unwrap_or_default());
        let s = result.unwrap();
        prop_assert!(s.max_pause <= config.pause_bound());
        let st = s.heap.stats();
        prop_assert_eq!(
            s.heap.work_events(),
            st.objects_evacuated + st.increments_applied + st.decrements_processed + st.objects_released
        );
    }

    #[test]
    fn vector_matches_vec(ops in prop::collection::vec(vec_op(), 0..600)) {
        let mut v = PersistentVector::new();
        let mut model: Vec<u16> = Vec::new();
        let mut versions = Vec::new();
        let mut steps = StepCounter::default();
        for op in ops {
            steps.reset();
            let n = model.len();
            match op {
                VecOp::Push(x) => {
                    v = v.push_counted(x, &mut steps);
                    model.push(x);
                }
                VecOp::Set(i, x) if n > 0 => {
                    v = v.set_counted(i % n, x, &mut steps).unwrap();
                    model[i % n] = x;
                }
                VecOp::Set(i, x) => prop_assert!(v.set(i, x).is_err()),
                VecOp::Pop => match v.pop_counted(&mut steps) {
                    Ok((rest, x)) => {
                        prop_assert_eq!(Some(x), model.pop());
                        v = rest;
                    }
                    Err(_) => prop_assert!(model.is_empty()),
                },
                VecOp::Get(i) => {
                    let i = i % (n + 2);
                    prop_assert_eq!(v.get_counted(i, &mut steps).ok(), model.get(i));
                }
            }
            prop_assert!(steps.node_visits <= vector_visit_bound(n.max(model.len())));
            versions.push((v.clone(), model.clone()));
        }
        // Every old version is untouched by later updates.
        for (old, snapshot) in versions {
            prop_assert_eq!(old.to_vec(), snapshot);
        }
    }

    #[test]
    fn map_matches_btreemap(ops in prop::collection::vec((0u8..3, 0u16..300, any::<u32>()), 0..800)) {
        let mut m = OrderedMap::new();
        let mut oracle = BTreeMap::new();
        let mut steps = StepCounter::default();
        for (kind, k, v) in ops {
            steps.reset();
            let before = oracle.len();
            match kind {
                0 => {
                    m = m.insert_counted(k, v, &mut steps);
                    oracle.insert(k, v);
                }
                1 => {
                    m = m.remove_counted(&k, &mut steps);
                    oracle.remove(&k);
                }
                _ => prop_assert_eq!(m.find_counted(&k, &mut steps), oracle.get(&k)),
            }
            prop_assert!(steps.node_visits as f64 <= map_visit_bound(before.max(oracle.len())));
            prop_assert_eq!(m.len(), oracle.len());
        }
        prop_assert_eq!(m.enumerate(), oracle.into_iter().collect::<Vec<_>>());
    }

    #[test]
    fn sort_is_stable_and_bounded(keys in prop::collection::vec(0u8..6, 0..2000)) {
        let items: Vec<(u8, usize)> = keys.into_iter().enumerate().map(|(i, k)| (k, i)).collect();
        let mut steps = StepCounter::default();
        let sorted = stable_sort_counted(&items, |a, b| a.0.cmp(&b.0), &mut steps);
        let mut expected = items.clone();
        expected.sort_by_key(|p| p.0);
        prop_assert_eq!(sorted, expected);
        prop_assert!(steps.comparisons <= comparison_bound(items.len()));
    }

    #[test]
    fn brex_agrees_with_backtracking(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let abc = ['a', 'b', 'c'];
        let re = stratum0(&mut rng, 4, &abc);
        let text = re.render();
        let p = Pattern::new(&text).unwrap();
        for _ in 0..8 {
            let s = random_string(&mut rng, &abc, 10);
            let e = p.accepts_counted(&s);
            prop_assert!(e.steps <= p.step_bound(s.len()));
            if let Some(expected) = backtrack::full_match(&re, &s, 1_000_000).0 {
                prop_assert_eq!(e.result, expected, "`{}` on `{}`", text, s);
            }
        }
    }

    #[test]
    fn stratified_patterns_agree_with_automata(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ab = ['a', 'b'];
        let re = stratified(&mut rng, 3, &ab);
        let text = re.render();
        match Pattern::new(&text) {
            Ok(p) => {
                let dfa = automata::to_dfa(&re);
                for _ in 0..12 {
                    let s = random_string(&mut rng, &ab, 9);
                    let e = p.accepts_counted(&s);
                    prop_assert!(e.steps <= p.step_bound(s.len()));
                    prop_assert_eq!(e.result, dfa.accepts(&s), "`{}` on `{}`", text, s);
                }
            }
            Err(BrexError::Stratification { stratum }) => prop_assert!(stratum > MAX_STRATUM),
            Err(e) => prop_assert!(false, "`{}`: {}", text, e),
        }
    }

    #[test]
    fn parser_never_panics(text in "[ab().*+?|&!{}0-9,\\[\\]^\\\\-]{0,16}") {
        let _ = Pattern::new(&text);
    }

    #[test]
    fn dispatch_matches_linear_scan(ids in prop::collection::hash_set(any::<u32>(), 1..200), probe in any::<u32>()) {
        let pairs: Vec<(u32, u32)> = ids.iter().enumerate().map(|(i, &t)| (t, i as u32)).collect();
        let spec = CallSiteSpec::new(pairs.clone()).unwrap();
        let table = DispatchTable::build(&spec).unwrap();
        for &(t, imp) in &pairs {
            let (got, probes) = table.resolve_counted(t);
            prop_assert_eq!(got, Ok(imp));
            prop_assert!(probes <= table.worst_case_probes());
        }
        if table.strategy() != Tier::Monomorphic && !ids.contains(&probe) {
            prop_assert!(table.resolve(probe).is_err());
        }
    }

    #[test]
    fn histogram_quantiles_track_order_statistics(
        mut samples in prop::collection::vec(1u64..50_000_000, 1..3000),
        q in 0.0f64..=1.0,
    ) {
        let mut h = LatencyHistogram::default();
        samples.iter().for_each(|&s| h.record(s));
        samples.sort_unstable();
        let rank = ((q * samples.len() as f64).ceil() as usize).max(1);
        let exact = samples[rank - 1] as f64;
        let got = h.quantile(q).unwrap() as f64;
        prop_assert!((got - exact).abs() / exact <= h.relative_error(), "{} vs {}", got, exact);
    }

    #[test]
    fn ring_keeps_the_newest(cap in 1usize..64, n in 0u64..300) {
        let mut ring = GcEventRing::new(cap);
        let bytes = ring.memory_bytes();
        for seq in 0..n {
            ring.push(GcEvent { seq, ..GcEvent::default() });
        }
        let kept: Vec<u64> = ring.events().map(|e| e.seq).collect();
        let expected: Vec<u64> = (n.saturating_sub(cap as u64)..n).collect();
        prop_assert_eq!(kept, expected);
        prop_assert_eq!(ring.memory_bytes(), bytes);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn reports_are_reproducible_and_parse_back(seed in any::<u64>(), which in 0usize..3, cycles in 1u64..6) {
        let workload = [Workload::Churn, Workload::Promotion, Workload::Fragmentation][which];
        let spec = WorkloadSpec {
            seed,
            cycles,
            live_target: 1500,
            ..WorkloadSpec::new(workload)
        };
        let a = run(&spec).unwrap();
        let b = run(&spec).unwrap();
        let text = a.to_csv();
        prop_assert_eq!(&text, &b.to_csv());
        let back = RunReport::parse(&text).unwrap();
        prop_assert_eq!(&back, &a);
        let bounds = check_bounds(&back);
        prop_assert!(bounds.pause.pass && bounds.barrier && bounds.cost_identity && bounds.rows_consistent);
    }
}
