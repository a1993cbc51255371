//! Closed-world call-site dispatch.
//!
//! Every call site knows its complete target set, so the lookup strategy is
//! fixed when the table is built and its worst-case probe count is a static
//! property of the table. Tiers by target count: a single target needs no
//! check at all, up to four are compared inline, up to sixty-four are
//! scanned in a sorted array, and anything larger goes into a two-choice
//! hashed layout where every entry sits in one of its two candidate slots.
//!
//! ```
//! use omega_rt::dispatch::{CallSiteSpec, DispatchTable, Strategy};
//!
//! let spec = CallSiteSpec::new((0..200).map(|t| (t * 7, t)).collect()).unwrap();
//! let table = DispatchTable::build(&spec).unwrap();
//! assert_eq!(table.strategy(), Strategy::HashedTable);
//! assert_eq!(table.worst_case_probes(), 2);
//! assert_eq!(table.resolve(14 * 7), Ok(14));
//! ```

use std::collections::HashSet;
use std::fmt;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub type TypeId = u32;
pub type ImplId = u32;

/// Seed attempts before giving up on a hashed layout.
pub const HASH_RETRY_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DispatchError {
    #[error("call site has no targets")]
    EmptySpec,
    #[error("type {0} appears twice in the call site")]
    DuplicateType(TypeId),
    #[error("no two-probe layout found within {HASH_RETRY_LIMIT} seeds")]
    HashLayoutFailure,
    #[error("type {0} is not a target of this call site")]
    UnknownType(TypeId),
}

/// The complete, statically known target set of one call site.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallSiteSpec {
    pairs: Vec<(TypeId, ImplId)>,
}

impl CallSiteSpec {
    pub fn new(pairs: Vec<(TypeId, ImplId)>) -> Result<Self, DispatchError> {
        if pairs.is_empty() {
            return Err(DispatchError::EmptySpec);
        }
        let mut seen = HashSet::new();
        for &(t, _) in &pairs {
            if !seen.insert(t) {
                return Err(DispatchError::DuplicateType(t));
            }
        }
        Ok(CallSiteSpec { pairs })
    }

    pub fn pairs(&self) -> &[(TypeId, ImplId)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Reference answer by scanning the spec.
    pub fn linear_lookup(&self, type_id: TypeId) -> Option<ImplId> {
        self.pairs.iter().find(|p| p.0 == type_id).map(|p| p.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Thresholds {
    pub inline_max: usize,
    pub linear_max: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            inline_max: 4,
            linear_max: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Monomorphic,
    InlineChain,
    LinearTable,
    HashedTable,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Strategy::Monomorphic => "monomorphic",
            Strategy::InlineChain => "inline_chain",
            Strategy::LinearTable => "linear_table",
            Strategy::HashedTable => "hashed_table",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Layout {
    /// The type check is elided: a closed-world violation at a
    /// monomorphic site goes undetected.
    Monomorphic(ImplId),
    InlineChain(Vec<(TypeId, ImplId)>),
    LinearTable { ids: Vec<TypeId>, impls: Vec<ImplId> },
    HashedTable {
        seed: u64,
        mask: u64,
        slots: Vec<Option<(TypeId, ImplId)>>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DispatchTable {
    layout: Layout,
    worst_case_probes: u32,
    targets: usize,
}

impl DispatchTable {
    pub fn build(spec: &CallSiteSpec) -> Result<Self, DispatchError> {
        Self::build_with(spec, Thresholds::default())
    }

    pub fn build_with(spec: &CallSiteSpec, thresholds: Thresholds) -> Result<Self, DispatchError> {
        let k = spec.len();
        let (layout, worst) = if k == 1 {
            (Layout::Monomorphic(spec.pairs[0].1), 0)
        } else if k <= thresholds.inline_max {
            (Layout::InlineChain(spec.pairs.clone()), k as u32)
        } else if k <= thresholds.linear_max {
            let mut sorted = spec.pairs.clone();
            sorted.sort_unstable();
            let (ids, impls) = sorted.into_iter().unzip();
            (Layout::LinearTable { ids, impls }, k as u32)
        } else {
            (hashed_layout(spec)?, 2)
        };
        Ok(DispatchTable {
            layout,
            worst_case_probes: worst,
            targets: k,
        })
    }

    pub fn strategy(&self) -> Strategy {
        match self.layout {
            Layout::Monomorphic(_) => Strategy::Monomorphic,
            Layout::InlineChain(_) => Strategy::InlineChain,
            Layout::LinearTable { .. } => Strategy::LinearTable,
            Layout::HashedTable { .. } => Strategy::HashedTable,
        }
    }

    pub fn worst_case_probes(&self) -> u32 {
        self.worst_case_probes
    }

    pub fn targets(&self) -> usize {
        self.targets
    }

    pub fn resolve(&self, type_id: TypeId) -> Result<ImplId, DispatchError> {
        self.resolve_counted(type_id).0
    }

    /// Resolution plus the number of type-id comparisons it took.
    pub fn resolve_counted(&self, type_id: TypeId) -> (Result<ImplId, DispatchError>, u32) {
        let mut probes = 0;
        let found = match &self.layout {
            Layout::Monomorphic(imp) => Some(*imp),
            Layout::InlineChain(pairs) => pairs.iter().find_map(|&(t, imp)| {
                probes += 1;
                (t == type_id).then_some(imp)
            }),
            Layout::LinearTable { ids, impls } => {
                let mut hit = None;
                for (i, &t) in ids.iter().enumerate() {
                    probes += 1;
                    if t >= type_id {
                        if t == type_id {
                            hit = Some(impls[i]);
                        }
                        break;
                    }
                }
                hit
            }
            Layout::HashedTable { seed, mask, slots } => {
                let (a, b) = candidates(type_id, *seed, *mask);
                [a, b].into_iter().find_map(|s| {
                    probes += 1;
                    match slots[s] {
                        Some((t, imp)) if t == type_id => Some(imp),
                        _ => None,
                    }
                })
            }
        };
        (found.ok_or(DispatchError::UnknownType(type_id)), probes)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn candidates(type_id: TypeId, seed: u64, mask: u64) -> (usize, usize) {
    let h = splitmix64(type_id as u64 ^ seed);
    ((h & mask) as usize, ((h >> 32) & mask) as usize)
}

/// Two-choice layout at load factor at most one half. Seeds are derived
/// from the spec contents, so equal specs give equal tables.
fn hashed_layout(spec: &CallSiteSpec) -> Result<Layout, DispatchError> {
    let size = (2 * spec.len()).next_power_of_two();
    let mask = size as u64 - 1;
    let base = spec
        .pairs
        .iter()
        .fold(0u64, |acc, &(t, i)| splitmix64(acc ^ ((t as u64) << 32 | i as u64)));
    for attempt in 0..HASH_RETRY_LIMIT {
        let seed = splitmix64(base.wrapping_add(attempt));
        if let Some(slots) = place_all(spec, seed, mask, size) {
            return Ok(Layout::HashedTable { seed, mask, slots });
        }
    }
    Err(DispatchError::HashLayoutFailure)
}

/// Cuckoo insertion; gives up on a seed after a bounded number of kicks.
fn place_all(spec: &CallSiteSpec, seed: u64, mask: u64, size: usize) -> Option<Vec<Option<(TypeId, ImplId)>>> {
    let mut slots: Vec<Option<(TypeId, ImplId)>> = vec![None; size];
    let max_kicks = 4 * size;
    for &pair in &spec.pairs {
        let mut item = pair;
        let mut slot = candidates(item.0, seed, mask).0;
        let mut placed = false;
        for _ in 0..max_kicks {
            match slots[slot].replace(item) {
                None => {
                    placed = true;
                    break;
                }
                Some(evicted) => {
                    item = evicted;
                    let (a, b) = candidates(item.0, seed, mask);
                    slot = if a == slot { b } else { a };
                }
            }
        }
        if !placed {
            return None;
        }
    }
    Some(slots)
}

/// One row of `dispatch bench`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub strategy: Strategy,
    pub targets: usize,
    pub probes_max: u32,
    pub probes_mean: f64,
    /// Wall-clock cost; `None` when timing is disabled.
    pub ns_per_resolve: Option<f64>,
}

pub const BENCH_HEADER: &str = "strategy,targets,probes_max,probes_mean,ns_per_resolve";

impl BenchRow {
    pub fn csv(&self) -> String {
        let ns = self
            .ns_per_resolve
            .map_or_else(|| "-".to_string(), |ns| format!("{ns:.2}"));
        format!(
            "{},{},{},{:.4},{}",
            self.strategy, self.targets, self.probes_max, self.probes_mean, ns
        )
    }
}

/// A seeded random spec: `k` distinct type ids from a sparse id space.
pub fn random_spec(rng: &mut impl Rng, k: usize) -> CallSiteSpec {
    let mut ids = HashSet::new();
    let mut pairs = Vec::with_capacity(k);
    while pairs.len() < k {
        let t: TypeId = rng.gen_range(0..1 << 24);
        if ids.insert(t) {
            pairs.push((t, pairs.len() as ImplId));
        }
    }
    CallSiteSpec::new(pairs).expect("distinct non-empty")
}

/// Builds `sites` random call sites with `targets` targets each and
/// resolves every member; panics if a resolution disagrees with the spec.
pub fn bench(sites: usize, targets: usize, seed: u64, timed: bool) -> Result<Vec<BenchRow>, DispatchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for _ in 0..sites {
        let spec = random_spec(&mut rng, targets);
        let table = DispatchTable::build(&spec)?;
        let mut max = 0;
        let mut total = 0u64;
        for &(t, imp) in spec.pairs() {
            let (got, probes) = table.resolve_counted(t);
            assert_eq!(got, Ok(imp), "dispatch disagrees with its spec");
            max = max.max(probes);
            total += probes as u64;
        }
        let ns = timed.then(|| {
            let mut queries: Vec<TypeId> = spec.pairs().iter().map(|p| p.0).collect();
            queries.shuffle(&mut rng);
            let rounds = (100_000 / targets).max(1);
            let start = Instant::now();
            let mut sink = 0u64;
            for _ in 0..rounds {
                for &q in &queries {
                    sink = sink.wrapping_add(std::hint::black_box(table.resolve(q)).unwrap_or(0) as u64);
                }
            }
            std::hint::black_box(sink);
            start.elapsed().as_nanos() as f64 / (rounds * queries.len()) as f64
        });
        rows.push(BenchRow {
            strategy: table.strategy(),
            targets,
            probes_max: max,
            probes_mean: total as f64 / targets as f64,
            ns_per_resolve: ns,
        });
    }
    Ok(rows)
}
