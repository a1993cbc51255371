//! The heap workloads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::check::{check_bounds, FitVerdict};
use super::report::{ReportRow, RunReport, Totals};
use super::{HarnessError, Workload, WorkloadSpec};
use crate::memory::{
    GcStats, Heap, HeapError, ObjectHandle, RootToken, TypeDescriptor, TypeId, Value, HEADER_BYTES, WORD_BYTES,
};
use crate::telemetry::{GcEvent, LatencyHistogram};

/// Virtual clock rates. Timestamps are derived from counted work so that
/// reports are reproducible.
const NS_PER_ALLOCATION: u64 = 20;
const NS_PER_WORK_UNIT: u64 = 10;

const FANOUT: usize = 30;
const MIN_TRIE_LEVELS: u32 = 3;
const MAX_GRAPH_DEPTH: u32 = 6;
const FRAG_COHORTS: usize = 3;
const FRAG_MIN_SPARSE_BLOCKS: usize = 10;
const FRAG_MAX_DRAIN: u64 = 100_000;

struct Driver {
    heap: Heap,
    workload: Workload,
    rng: ChaCha8Rng,
    rows: Vec<ReportRow>,
    pauses: LatencyHistogram,
    last: GcStats,
    last_allocs: u64,
    clock: u64,
    cycle: u64,
    live: u64,
}

impl Driver {
    fn new(spec: &WorkloadSpec) -> Result<Driver, HeapError> {
        Ok(Driver {
            heap: Heap::new(spec.heap.clone())?,
            workload: spec.workload,
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
            rows: Vec::new(),
            pauses: LatencyHistogram::new(0, 1 << 40).expect("valid range"),
            last: GcStats::default(),
            last_allocs: 0,
            clock: 0,
            cycle: 0,
            live: 0,
        })
    }

    fn register(&mut self, name: &str, slots: usize, refs: &[usize]) -> Result<TypeId, HeapError> {
        self.heap.register_type(TypeDescriptor::new(name, slots, refs))
    }

    fn alloc(&mut self, ty: TypeId, values: &[Value]) -> Result<ObjectHandle, HeapError> {
        let r = self.heap.alloc(ty, values);
        self.sync();
        r
    }

    fn collect(&mut self) -> Result<(), HeapError> {
        let r = self.heap.collect_minor();
        self.sync();
        r.map(|_| ())
    }

    /// Records a row for every collection since the last call, whether it
    /// was requested or triggered by a full nursery.
    fn sync(&mut self) {
        let now = self.heap.stats();
        if now.collections_count == self.last.collections_count {
            return;
        }
        let delta = now.since(&self.last);
        let allocs = self.heap.allocation_count();
        self.clock += (allocs - self.last_allocs) * NS_PER_ALLOCATION + delta.pause_work_units * NS_PER_WORK_UNIT;
        self.last = now;
        self.last_allocs = allocs;
        let footprint = self.heap.heap_report().footprint_bytes as u64;
        self.pauses.record(delta.pause_work_units);
        self.rows.push(ReportRow {
            event: GcEvent::from_stats(self.rows.len() as u64, self.clock, &delta, footprint),
            workload: self.workload,
            cycle: self.cycle,
            live_objects: self.live,
        });
    }

    fn nursery_fits(&self, bytes: usize) -> bool {
        self.heap.nursery_available() >= bytes
    }

    fn finish(self, spec: &WorkloadSpec, mut report: RunReport, error: Option<HeapError>) -> RunReport {
        let stats = match &error {
            Some(HeapError::HeapLimitExceeded { stats }) => *stats,
            _ => self.heap.stats(),
        };
        let barrier = self.heap.barrier_counters();
        report.spec = spec.clone();
        report.rows = self.rows;
        report.totals = Totals {
            allocations: self.heap.allocation_count(),
            collections: stats.collections_count,
            evacuations: stats.objects_evacuated,
            increments: stats.increments_applied,
            decrements: stats.decrements_processed,
            releases: stats.objects_released,
            pause_work_units: stats.pause_work_units,
            work_events: self.heap.work_events(),
            count_updates_outside: barrier.count_updates_outside,
            slot_rewrites_outside: barrier.slot_rewrites_outside,
        };
        report.error = error.map(|e| e.to_string());
        report.data.push(format!(
            "survival_ratio={:.4} pause_p50={} pause_p99={} pause_max={}",
            report.totals.survival_ratio(),
            self.pauses.quantile(0.5).unwrap_or(0),
            self.pauses.quantile(0.99).unwrap_or(0),
            self.pauses.quantile(1.0).unwrap_or(0),
        ));
        for line in self.pauses.export_csv().lines() {
            report.data.push(format!("pause_histogram {line}"));
        }
        let bounds = check_bounds(&report);
        let mut verdicts = vec![
            (
                "pause_bound".to_string(),
                bounds.pause.pass,
                format!("max={} bound={} violations={}", bounds.pause.max, bounds.pause.bound, bounds.pause.violations),
            ),
            (
                "footprint_fit".to_string(),
                !bounds.footprint.is_fail(),
                bounds.footprint.describe(),
            ),
            (
                "barrier".to_string(),
                bounds.barrier,
                format!(
                    "count_updates_outside={} slot_rewrites_outside={}",
                    report.totals.count_updates_outside, report.totals.slot_rewrites_outside
                ),
            ),
            (
                "cost_identity".to_string(),
                bounds.cost_identity,
                format!("work_events={}", report.totals.work_events),
            ),
        ];
        if matches!(bounds.footprint, FitVerdict::NotApplicable) {
            verdicts.retain(|v| v.0 != "footprint_fit");
        }
        verdicts.append(&mut report.verdicts);
        report.verdicts = verdicts;
        report
    }
}

pub fn run(spec: &WorkloadSpec) -> Result<RunReport, HarnessError> {
    let mut d = Driver::new(spec)?;
    let mut report = RunReport::new(spec);
    let outcome = match spec.workload {
        Workload::Churn => churn(&mut d, spec),
        Workload::Promotion => promotion(&mut d, spec, &mut report),
        Workload::Fragmentation => fragmentation(&mut d, spec, &mut report),
        _ => unreachable!("not a heap workload"),
    };
    let error = match outcome {
        Ok(()) => None,
        Err(e @ HeapError::HeapLimitExceeded { .. }) => Some(e),
        Err(e) => return Err(e.into()),
    };
    Ok(d.finish(spec, report, error))
}

/// Short-lived trees, dropped before the next collection.
fn churn(d: &mut Driver, spec: &WorkloadSpec) -> Result<(), HeapError> {
    let node = d.register("churn.node", 3, &[0, 1])?;
    let leaves = [
        (d.register("churn.leaf32", 2, &[])?, 2usize),
        (d.register("churn.leaf64", 6, &[])?, 6),
        (d.register("churn.leaf128", 14, &[])?, 14),
    ];
    let node_bytes = HEADER_BYTES + 3 * WORD_BYTES;
    let mut pending: Option<Vec<Option<usize>>> = None;
    for cycle in 1..=spec.cycles {
        d.cycle = cycle;
        loop {
            let shape = pending.take().unwrap_or_else(|| tree_shape(&mut d.rng, MAX_GRAPH_DEPTH));
            let bytes: usize = shape
                .iter()
                .map(|s| s.map_or(node_bytes, |k| HEADER_BYTES + leaves[k].1 * WORD_BYTES))
                .sum();
            if !d.nursery_fits(bytes) {
                pending = Some(shape);
                break;
            }
            // Post-order: leaves push, nodes pop two.
            let mut stack: Vec<ObjectHandle> = Vec::new();
            for s in shape {
                let h = match s {
                    Some(k) => {
                        let (ty, n) = leaves[k];
                        let vals: Vec<Value> = (0..n).map(|_| Value::Int(d.rng.gen())).collect();
                        d.alloc(ty, &vals)?
                    }
                    None => {
                        let r = stack.pop().expect("well-formed tree");
                        let l = stack.pop().expect("well-formed tree");
                        let tag = Value::Int(d.rng.gen());
                        d.alloc(node, &[Value::Ref(l), Value::Ref(r), tag])?
                    }
                };
                stack.push(h);
            }
        }
        d.collect()?;
    }
    Ok(())
}

/// Post-order shape of a random binary tree: `Some(size class)` for a
/// leaf, `None` for an inner node.
fn tree_shape(rng: &mut ChaCha8Rng, depth: u32) -> Vec<Option<usize>> {
    let mut out = Vec::new();
    fn go(rng: &mut ChaCha8Rng, depth: u32, out: &mut Vec<Option<usize>>) {
        if depth == 0 || rng.gen_bool(0.4) {
            let class = match rng.gen_range(0..8) {
                0..=4 => 0,
                5 | 6 => 1,
                _ => 2,
            };
            out.push(Some(class));
        } else {
            go(rng, depth - 1, out);
            go(rng, depth - 1, out);
            out.push(None);
        }
    }
    go(rng, depth, &mut out);
    out
}

/// Fixed-depth persistent trie of uniform elements living in the heap.
struct Trie {
    node: TypeId,
    elem: TypeId,
    elem_slots: usize,
    levels: u32,
    len: usize,
    root: RootToken,
}

impl Trie {
    fn digit(&self, leaf: usize, level: u32) -> usize {
        leaf / FANOUT.pow(self.levels - 1 - level) % FANOUT
    }

    fn leaf_len(&self, leaf: usize) -> usize {
        (self.len - leaf * FANOUT).min(FANOUT)
    }

    fn node_bytes() -> usize {
        HEADER_BYTES + FANOUT * WORD_BYTES
    }

    fn elem_bytes(&self) -> usize {
        HEADER_BYTES + self.elem_slots * WORD_BYTES
    }

    /// Live objects once the first `built` leaves exist.
    fn live_objects(&self, built: usize) -> u64 {
        let elems: usize = (0..built).map(|l| self.leaf_len(l)).sum();
        let mut nodes = built;
        let mut width = built;
        for _ in 0..self.levels {
            width = width.div_ceil(FANOUT).max(1);
            nodes += width;
        }
        (elems + nodes) as u64
    }

    /// Builds fresh elements for `leaf` and path-copies up to the root.
    fn replace_leaf(&self, d: &mut Driver, leaf: usize) -> Result<(), HeapError> {
        let count = self.leaf_len(leaf);
        let needed = count * self.elem_bytes() + (self.levels as usize + 1) * Self::node_bytes();
        if !d.nursery_fits(needed) {
            d.collect()?;
        }
        let mut path: Vec<Vec<Value>> = Vec::with_capacity(self.levels as usize);
        let mut at = Some(d.heap.root(&self.root)?);
        for level in 0..self.levels {
            let slots = match at {
                Some(h) => (0..FANOUT).map(|i| d.heap.read_field(&h, i)).collect::<Result<Vec<_>, _>>()?,
                None => vec![Value::Nil; FANOUT],
            };
            at = slots[self.digit(leaf, level)].as_ref();
            path.push(slots);
        }
        let mut fresh = Vec::with_capacity(FANOUT);
        for _ in 0..count {
            let vals: Vec<Value> = (0..self.elem_slots).map(|_| Value::Int(d.rng.gen())).collect();
            fresh.push(Value::Ref(d.alloc(self.elem, &vals)?));
        }
        fresh.resize(FANOUT, Value::Nil);
        let mut child = d.alloc(self.node, &fresh)?;
        for level in (0..self.levels).rev() {
            let mut slots = path.pop().expect("one entry per level");
            slots[self.digit(leaf, level)] = Value::Ref(child);
            child = d.alloc(self.node, &slots)?;
        }
        d.heap.set_root(&self.root, &child)
    }
}

/// A persistent trie of `live_target` elements; each cycle replaces a run
/// of consecutive leaves, then fills the nursery with garbage.
fn promotion(d: &mut Driver, spec: &WorkloadSpec, report: &mut RunReport) -> Result<(), HeapError> {
    let node_refs: Vec<usize> = (0..FANOUT).collect();
    let node = d.register("trie.node", FANOUT, &node_refs)?;
    let elem = d.register("trie.elem", spec.object_slots, &[])?;
    let filler = d.register("filler", 2, &[])?;
    let len = spec.live_target.max(1);
    let leaves = len.div_ceil(FANOUT);
    let mut levels = MIN_TRIE_LEVELS;
    while FANOUT.pow(levels) < leaves {
        levels += 1;
    }
    let empty = d.alloc(node, &vec![Value::Nil; FANOUT])?;
    let root = d.heap.push_root(&empty)?;
    let trie = Trie {
        node,
        elem,
        elem_slots: spec.object_slots,
        levels,
        len,
        root,
    };
    report.object_bytes = Some(trie.elem_bytes() as u64);

    d.cycle = 0;
    for leaf in 0..leaves {
        d.live = trie.live_objects(leaf);
        trie.replace_leaf(d, leaf)?;
    }
    d.live = trie.live_objects(leaves);
    d.collect()?;

    let batch = FANOUT * trie.elem_bytes() + Trie::node_bytes();
    let per_cycle = ((spec.survival * spec.heap.nursery_bytes as f64) as usize / batch).clamp(1, leaves);
    report.data.push(format!(
        "trie levels={levels} leaves={leaves} leaves_per_cycle={per_cycle} live_objects={}",
        d.live
    ));
    let filler_bytes = HEADER_BYTES + 2 * WORD_BYTES;
    let mut cursor = 0;
    for cycle in 1..=spec.cycles {
        d.cycle = cycle;
        for _ in 0..per_cycle {
            trie.replace_leaf(d, cursor)?;
            cursor = (cursor + 1) % leaves;
        }
        while d.nursery_fits(filler_bytes) {
            let v = Value::Int(d.rng.gen());
            d.alloc(filler, &[v, v])?;
        }
        d.collect()?;
    }
    Ok(())
}

/// Interleaved cohorts of mixed sizes with shared payloads; two of the
/// three cohorts are dropped and the heap is collected until the
/// defragmenter goes idle.
fn fragmentation(d: &mut Driver, spec: &WorkloadSpec, report: &mut RunReport) -> Result<(), HeapError> {
    let holder = d.register("frag.holder", 3, &[0, 1, 2])?;
    let payloads = [
        (d.register("frag.p32", 2, &[])?, 2usize),
        (d.register("frag.p64", 6, &[])?, 6),
        (d.register("frag.p128", 14, &[])?, 14),
    ];
    let threshold = spec.heap.frag_threshold;
    let mut tokens = Vec::new();
    for _ in 0..FRAG_COHORTS {
        let sentinel = d.alloc(holder, &[Value::Nil, Value::Nil, Value::Nil])?;
        tokens.push(d.heap.push_root(&sentinel)?);
    }
    let mut per_cohort = [1u64; FRAG_COHORTS];
    d.live = FRAG_COHORTS as u64;
    d.cycle = 0;
    for i in 0..spec.live_target * FRAG_COHORTS {
        let c = i % FRAG_COHORTS;
        let (ty, n) = payloads[d.rng.gen_range(0..payloads.len())];
        let vals: Vec<Value> = (0..n).map(|_| Value::Int(d.rng.gen())).collect();
        let payload = d.alloc(ty, &vals)?;
        let head = d.heap.root(&tokens[c])?;
        let shared = if (i / FRAG_COHORTS) % 4 == 3 {
            d.heap.read_field(&head, 1)?
        } else {
            Value::Nil
        };
        let h = d.alloc(holder, &[Value::Ref(head), Value::Ref(payload), shared])?;
        d.heap.set_root(&tokens[c], &h)?;
        per_cohort[c] += 2;
        d.live += 2;
    }
    d.collect()?;
    while d.heap.pending_decrements() > 0 {
        d.collect()?;
    }

    let sparse = |heap: &Heap| {
        heap.block_occupancies()
            .iter()
            .filter(|&&(occ, frontier)| !frontier && occ < threshold)
            .count()
    };
    while tokens.len() > 1 {
        let t = tokens.pop().expect("non-empty");
        d.heap.pop_root(t)?;
    }
    d.live = per_cohort[0];
    let before = d.heap.content_serialization();
    let blocks_before = d.heap.heap_report().block_count;

    let mut peak = sparse(&d.heap);
    let mut drained = 0;
    while drained < spec.cycles.max(1) || !(d.heap.defrag_idle() && d.heap.pending_decrements() == 0) {
        if drained == FRAG_MAX_DRAIN {
            break;
        }
        drained += 1;
        d.cycle = drained;
        d.collect()?;
        peak = peak.max(sparse(&d.heap));
    }
    let converged = d.heap.defrag_idle() && d.heap.pending_decrements() == 0;
    let after = d.heap.content_serialization();
    let occupancies = d.heap.block_occupancies();
    let low = occupancies
        .iter()
        .filter(|&&(occ, frontier)| !frontier && occ < threshold)
        .count();
    let min_occ = occupancies
        .iter()
        .filter(|o| !o.1)
        .map(|o| o.0)
        .fold(1.0f64, f64::min);
    let validation = d.heap.validate_heap();

    report.data.push(format!(
        "fragmentation blocks_before={blocks_before} blocks_after={} sparse_peak={peak} collections_to_idle={drained}",
        d.heap.heap_report().block_count
    ));
    report.verdict(
        "frag_sparse_peak",
        peak >= FRAG_MIN_SPARSE_BLOCKS,
        format!("sparse_blocks={peak} required={FRAG_MIN_SPARSE_BLOCKS}"),
    );
    report.verdict("frag_converged", converged, format!("collections={drained}"));
    report.verdict(
        "frag_occupancy",
        low == 0,
        format!("blocks_below_threshold={low} min_occupancy={min_occ:.3} threshold={threshold}"),
    );
    report.verdict(
        "frag_content_identical",
        before == after,
        format!("roots={}", before.lines().count()),
    );
    report.verdict(
        "heap_valid",
        validation.is_ok(),
        format!("objects_checked={} violations={}", validation.objects_checked, validation.violations.len()),
    );
    Ok(())
}
