//! Immutable, acyclic object heap.
//!
//! New objects are bump-allocated in a fixed nursery. A minor collection
//! stops the mutator, evacuates every reachable nursery object into the
//! reference-counted old generation and then does a bounded amount of
//! count work: at most `dec_budget` queued decrements and one budgeted
//! defragmentation step. Old objects are never written by the mutator, so
//! neither allocation nor field reads carry any barrier.
//!
//! Object identity is not observable: handles have no equality, and the
//! defragmenter may leave two interchangeable copies of an object alive
//! while references migrate from one to the other.

mod collect;
mod defrag;
mod inspect;
pub(crate) mod layout;
pub(crate) mod old;

use std::collections::{HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

pub use defrag::DefragStats;
pub use inspect::{HeapValidation, Violation};
pub use layout::{ObjectState, TypeDescriptor, TypeId, HEADER_BYTES, WORD_BYTES};

use layout::{Addr, Header, TypeInfo, COUNT_SATURATED, HEADER_WORDS};
use old::{OldGeneration, BLOCK_META_BYTES};

/// Fixed bookkeeping charged to every heap regardless of contents.
pub const FIXED_METADATA_BYTES: usize = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HeapError {
    #[error("type `{0}` is already registered")]
    DuplicateType(String),
    #[error("reference slot {slot} out of range for {slot_count} slots")]
    SlotOutOfRange { slot: usize, slot_count: usize },
    #[error("reference slots must be strictly increasing")]
    UnsortedRefSlots,
    #[error("type size {size} invalid (minimum {min}, multiple of 8)")]
    BadTypeSize { size: usize, min: usize },
    #[error("unknown type id {0}")]
    UnknownType(u32),
    #[error("expected {expected} initial values, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("value kind does not match layout at slot {slot}")]
    KindMismatch { slot: usize },
    #[error("handle no longer refers to a live object")]
    StaleHandle,
    #[error("root stack is strictly LIFO")]
    RootStackViolation,
    #[error("old generation exceeded the configured maximum heap")]
    HeapLimitExceeded { stats: GcStats },
    #[error("invalid heap configuration: {0}")]
    BadConfig(String),
}

/// Heap sizing and collector budgets.
#[derive(Debug, Clone, PartialEq)]
pub struct HeapConfig {
    pub nursery_bytes: usize,
    pub block_bytes: usize,
    /// Maximum queued decrements processed per collection.
    pub dec_budget: usize,
    /// Work units granted to the defragmenter per collection.
    pub defrag_budget: usize,
    /// Blocks below this occupancy are evacuated.
    pub frag_threshold: f64,
    pub max_heap_bytes: usize,
}

impl Default for HeapConfig {
    fn default() -> Self {
        HeapConfig {
            nursery_bytes: 262_144,
            block_bytes: 65_536,
            dec_budget: 4096,
            defrag_budget: 1024,
            frag_threshold: 0.5,
            max_heap_bytes: 1 << 30,
        }
    }
}

impl HeapConfig {
    fn check(&self) -> Result<(), HeapError> {
        let bad = |m: &str| Err(HeapError::BadConfig(m.to_string()));
        if self.nursery_bytes < 64 || !self.nursery_bytes.is_multiple_of(WORD_BYTES) {
            return bad("nursery_bytes must be a multiple of 8 and at least 64");
        }
        if !self.block_bytes.is_power_of_two()
            || self.block_bytes < old::MAX_CLASS_BYTES
            || self.block_bytes / WORD_BYTES > layout::MAX_BLOCK_WORDS
        {
            return bad("block_bytes must be a power of two between 4 KiB and 128 MiB");
        }
        if !(self.frag_threshold > 0.0 && self.frag_threshold <= 1.0) {
            return bad("frag_threshold must lie in (0, 1]");
        }
        Ok(())
    }

    /// Upper bound on evacuation plus promotion-increment work in one
    /// collection: one unit per nursery word.
    pub fn nursery_object_capacity(&self) -> u64 {
        (self.nursery_bytes / WORD_BYTES) as u64
    }

    /// Per-collection bound on `pause_work_units`.
    pub fn pause_bound(&self) -> u64 {
        self.nursery_object_capacity() + self.dec_budget as u64 + self.defrag_budget as u64
    }
}

/// Collector counters. Cumulative on [`Heap::stats`]; per collection when
/// returned from [`Heap::collect_minor`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GcStats {
    pub objects_evacuated: u64,
    pub bytes_promoted: u64,
    pub increments_applied: u64,
    pub decrements_processed: u64,
    pub objects_released: u64,
    pub pause_work_units: u64,
    pub collections_count: u64,
}

impl GcStats {
    pub fn since(&self, earlier: &GcStats) -> GcStats {
        GcStats {
            objects_evacuated: self.objects_evacuated - earlier.objects_evacuated,
            bytes_promoted: self.bytes_promoted - earlier.bytes_promoted,
            increments_applied: self.increments_applied - earlier.increments_applied,
            decrements_processed: self.decrements_processed - earlier.decrements_processed,
            objects_released: self.objects_released - earlier.objects_released,
            pause_work_units: self.pause_work_units - earlier.pause_work_units,
            collections_count: self.collections_count - earlier.collections_count,
        }
    }
}

/// Mutator-side bookkeeping audit. Count updates and slot rewrites are only
/// legal inside the collector; the `outside` counters must stay zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BarrierCounters {
    pub count_updates: u64,
    pub slot_rewrites: u64,
    pub count_updates_outside: u64,
    pub slot_rewrites_outside: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeapReport {
    pub footprint_bytes: usize,
    pub live_objects: usize,
    pub nursery_capacity: usize,
    pub block_count: usize,
    /// Unused fraction of carved small-block storage.
    pub frag_ratio: f64,
}

/// Reference to an immutable heap object. Deliberately has no equality:
/// compare contents with [`Heap::content_eq`].
#[derive(Clone, Copy)]
pub struct ObjectHandle {
    addr: Addr,
    epoch: u64,
}

impl fmt::Debug for ObjectHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ObjectHandle { .. }")
    }
}

/// A slot value.
#[derive(Clone, Copy, Debug)]
pub enum Value {
    Int(u64),
    Ref(ObjectHandle),
    Nil,
}

impl Value {
    pub fn as_int(&self) -> Option<u64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_ref(&self) -> Option<ObjectHandle> {
        match self {
            Value::Ref(h) => Some(*h),
            _ => None,
        }
    }
}

/// Proof of a root push; must be popped in LIFO order.
#[derive(Debug)]
pub struct RootToken {
    index: usize,
    serial: u64,
}

#[derive(Debug, Default)]
struct RootRegistry {
    entries: Vec<Addr>,
    serials: Vec<u64>,
    next_serial: u64,
}

/// The heap.
pub struct Heap {
    config: HeapConfig,
    types: Vec<TypeInfo>,
    type_names: HashMap<String, TypeId>,
    nursery: Vec<u64>,
    cursor: usize,
    nursery_epoch: u64,
    nursery_objects: usize,
    old: OldGeneration,
    roots: RootRegistry,
    /// Old objects counted for roots at the last collection.
    epoch_roots: Vec<Addr>,
    dec_queue: VecDeque<Addr>,
    /// Whole-block objects allocated directly old, counted at the next collection.
    pending_large: Vec<Addr>,
    defrag: defrag::DefragState,
    stats: GcStats,
    allocations: u64,
    work_events: u64,
    barrier: BarrierCounters,
    in_collector: bool,
    poisoned: Option<GcStats>,
}

impl fmt::Debug for Heap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Heap")
            .field("config", &self.config)
            .field("stats", &self.stats)
            .finish_non_exhaustive()
    }
}

impl Heap {
    pub fn new(config: HeapConfig) -> Result<Heap, HeapError> {
        config.check()?;
        let old = OldGeneration::new(
            config.block_bytes,
            config.max_heap_bytes,
            config.frag_threshold,
        );
        Ok(Heap {
            nursery: vec![0; config.nursery_bytes / WORD_BYTES],
            config,
            types: Vec::new(),
            type_names: HashMap::new(),
            cursor: 0,
            nursery_epoch: 0,
            nursery_objects: 0,
            old,
            roots: RootRegistry::default(),
            epoch_roots: Vec::new(),
            dec_queue: VecDeque::new(),
            pending_large: Vec::new(),
            defrag: defrag::DefragState::default(),
            stats: GcStats::default(),
            allocations: 0,
            work_events: 0,
            barrier: BarrierCounters::default(),
            in_collector: false,
            poisoned: None,
        })
    }

    pub fn config(&self) -> &HeapConfig {
        &self.config
    }

    pub fn register_type(&mut self, descriptor: TypeDescriptor) -> Result<TypeId, HeapError> {
        if self.type_names.contains_key(&descriptor.name) {
            return Err(HeapError::DuplicateType(descriptor.name));
        }
        descriptor.check()?;
        let id = TypeId(self.types.len() as u32);
        self.types.push(TypeInfo::from_descriptor(&descriptor));
        self.type_names.insert(descriptor.name, id);
        Ok(id)
    }

    pub fn type_size(&self, ty: TypeId) -> Option<usize> {
        self.types.get(ty.0 as usize).map(TypeInfo::bytes)
    }

    /// Cumulative collector counters.
    pub fn stats(&self) -> GcStats {
        self.stats
    }

    pub fn allocation_count(&self) -> u64 {
        self.allocations
    }

    /// Independently tallied evacuations + increments + decrements + releases.
    pub fn work_events(&self) -> u64 {
        self.work_events
    }

    pub fn barrier_counters(&self) -> BarrierCounters {
        self.barrier
    }

    pub fn pending_decrements(&self) -> usize {
        self.dec_queue.len()
    }

    /// Bytes still free in the nursery before the next allocation collects.
    pub fn nursery_available(&self) -> usize {
        (self.nursery.len() - self.cursor) * WORD_BYTES
    }

    pub fn nursery_object_count(&self) -> usize {
        self.nursery_objects
    }

    pub fn old_object_count(&self) -> usize {
        self.old.live_objects
    }

    fn check_poisoned(&self) -> Result<(), HeapError> {
        match self.poisoned {
            Some(stats) => Err(HeapError::HeapLimitExceeded { stats }),
            None => Ok(()),
        }
    }

    /// Allocates an initialized immutable object.
    pub fn alloc(&mut self, ty: TypeId, values: &[Value]) -> Result<ObjectHandle, HeapError> {
        self.check_poisoned()?;
        let info = self
            .types
            .get(ty.0 as usize)
            .ok_or(HeapError::UnknownType(ty.0))?
            .clone();
        if values.len() != info.slot_count {
            return Err(HeapError::ArityMismatch {
                expected: info.slot_count,
                found: values.len(),
            });
        }
        let mut words = Vec::with_capacity(info.slot_count);
        let mut args = Vec::new();
        for (slot, v) in values.iter().enumerate() {
            match (*v, info.is_ref[slot]) {
                (Value::Int(x), false) => words.push(x),
                (Value::Nil, true) => words.push(0),
                (Value::Ref(h), true) => {
                    let a = self.check_handle(&h)?;
                    args.push((slot, a));
                    words.push(a.0);
                }
                _ => return Err(HeapError::KindMismatch { slot }),
            }
        }

        let large = info.bytes() > self.config.nursery_bytes / 4;
        let need_collect = if large {
            args.iter().any(|(_, a)| a.is_nursery())
        } else {
            self.cursor + info.words > self.nursery.len()
        };
        if need_collect {
            let mut extra: Vec<Addr> = args.iter().map(|&(_, a)| a).collect();
            self.collect_with(&mut extra)?;
            for (&(slot, _), a) in args.iter().zip(extra) {
                words[slot] = a.0;
            }
        }

        self.allocations += 1;
        if large {
            let addr = match self.old.alloc(info.words) {
                Ok(a) => a,
                Err(_) => return Err(HeapError::HeapLimitExceeded { stats: self.stats }),
            };
            let header = Header {
                type_id: ty.0,
                state: ObjectState::Shared,
                old: true,
                count: 0,
            };
            self.old.store(addr, header.encode());
            self.old.store(addr.add_words(1), 0);
            for (i, w) in words.iter().enumerate() {
                self.old.store(addr.slot(i), *w);
            }
            self.pending_large.push(addr);
            return Ok(ObjectHandle { addr, epoch: 0 });
        }

        let off = self.cursor;
        self.cursor += info.words;
        let header = Header {
            type_id: ty.0,
            state: ObjectState::Plain,
            old: false,
            count: 0,
        };
        self.nursery[off] = header.encode();
        self.nursery[off + 1] = 0;
        self.nursery[off + HEADER_WORDS..off + HEADER_WORDS + words.len()]
            .copy_from_slice(&words);
        for w in &mut self.nursery[off + HEADER_WORDS + words.len()..off + info.words] {
            *w = 0;
        }
        self.nursery_objects += 1;
        Ok(ObjectHandle {
            addr: Addr::nursery(off),
            epoch: self.nursery_epoch,
        })
    }

    pub fn read_field(&self, h: &ObjectHandle, slot: usize) -> Result<Value, HeapError> {
        let a = self.check_handle(h)?;
        let header = self.header(a);
        let info = &self.types[header.type_id as usize];
        if slot >= info.slot_count {
            return Err(HeapError::SlotOutOfRange {
                slot,
                slot_count: info.slot_count,
            });
        }
        let word = self.load(a.slot(slot));
        Ok(if !info.is_ref[slot] {
            Value::Int(word)
        } else if word == 0 {
            Value::Nil
        } else {
            Value::Ref(self.handle_for(Addr(word)))
        })
    }

    pub fn type_of(&self, h: &ObjectHandle) -> Result<TypeId, HeapError> {
        let a = self.check_handle(h)?;
        Ok(TypeId(self.header(a).type_id))
    }

    pub fn push_root(&mut self, h: &ObjectHandle) -> Result<RootToken, HeapError> {
        let a = self.check_handle(h)?;
        let serial = self.roots.next_serial;
        self.roots.next_serial += 1;
        self.roots.entries.push(a);
        self.roots.serials.push(serial);
        Ok(RootToken {
            index: self.roots.entries.len() - 1,
            serial,
        })
    }

    pub fn pop_root(&mut self, token: RootToken) -> Result<(), HeapError> {
        self.check_token(&token)?;
        if token.index + 1 != self.roots.entries.len() {
            return Err(HeapError::RootStackViolation);
        }
        self.roots.entries.pop();
        self.roots.serials.pop();
        Ok(())
    }

    /// Current value of a root; collections update roots in place.
    pub fn root(&self, token: &RootToken) -> Result<ObjectHandle, HeapError> {
        self.check_token(token)?;
        Ok(self.handle_for(self.roots.entries[token.index]))
    }

    pub fn set_root(&mut self, token: &RootToken, h: &ObjectHandle) -> Result<(), HeapError> {
        self.check_token(token)?;
        let a = self.check_handle(h)?;
        self.roots.entries[token.index] = a;
        Ok(())
    }

    pub fn root_count(&self) -> usize {
        self.roots.entries.len()
    }

    fn check_token(&self, token: &RootToken) -> Result<(), HeapError> {
        match self.roots.serials.get(token.index) {
            Some(&s) if s == token.serial => Ok(()),
            _ => Err(HeapError::RootStackViolation),
        }
    }

    pub fn heap_report(&self) -> HeapReport {
        let carved_small: usize = self
            .old
            .blocks
            .iter()
            .filter(|b| matches!(b.kind, old::BlockKind::Small { .. }))
            .count()
            * self.old.block_bytes();
        let live_small = self.old.live_cell_bytes()
            - self
                .old
                .blocks
                .iter()
                .filter(|b| b.kind == old::BlockKind::Large)
                .map(|b| b.words.len() * WORD_BYTES)
                .sum::<usize>();
        let frag_ratio = if carved_small == 0 {
            0.0
        } else {
            1.0 - live_small as f64 / carved_small as f64
        };
        HeapReport {
            footprint_bytes: self.config.nursery_bytes
                + self.old.in_use_bytes()
                + self.metadata_bytes(),
            live_objects: self.old.live_objects + self.nursery_objects,
            nursery_capacity: self.config.nursery_bytes,
            block_count: self.old.in_use_units(),
            frag_ratio,
        }
    }

    fn metadata_bytes(&self) -> usize {
        FIXED_METADATA_BYTES
            + self.old.in_use_blocks() * BLOCK_META_BYTES
            + self.roots.entries.len() * 16
            + self.dec_queue.len() * WORD_BYTES
    }

    /// Per-block occupancy of in-use small blocks: (occupancy, is_frontier).
    pub fn block_occupancies(&self) -> Vec<(f64, bool)> {
        self.old
            .blocks
            .iter()
            .enumerate()
            .filter(|(_, b)| matches!(b.kind, old::BlockKind::Small { .. }))
            .map(|(i, b)| (self.old.occupancy(i), b.is_frontier()))
            .collect()
    }

    /// Structural equality of two objects.
    pub fn content_eq(&self, a: &ObjectHandle, b: &ObjectHandle) -> Result<bool, HeapError> {
        let a = self.check_handle(a)?;
        let b = self.check_handle(b)?;
        let mut memo = HashMap::new();
        Ok(self.digest(a, &mut memo) == self.digest(b, &mut memo))
    }

    fn handle_for(&self, a: Addr) -> ObjectHandle {
        ObjectHandle {
            addr: a,
            epoch: self.nursery_epoch,
        }
    }

    fn check_handle(&self, h: &ObjectHandle) -> Result<Addr, HeapError> {
        let a = h.addr;
        if a.is_nursery() {
            let off = a.offset();
            if h.epoch != self.nursery_epoch
                || off >= self.cursor
                || Header::decode(self.nursery[off]).state != ObjectState::Plain
            {
                return Err(HeapError::StaleHandle);
            }
            Ok(a)
        } else if self.old.is_live_object(a) {
            Ok(a)
        } else {
            Err(HeapError::StaleHandle)
        }
    }

    #[inline]
    fn load(&self, a: Addr) -> u64 {
        if a.is_nursery() {
            self.nursery[a.offset()]
        } else {
            self.old.load(a)
        }
    }

    #[inline]
    fn header(&self, a: Addr) -> Header {
        Header::decode(self.load(a))
    }

    fn set_header(&mut self, a: Addr, h: Header) {
        if a.is_nursery() {
            self.nursery[a.offset()] = h.encode();
        } else {
            self.old.store(a, h.encode());
        }
    }

    fn meta(&self, a: Addr) -> Addr {
        Addr(self.load(a.add_words(1)))
    }

    fn set_meta(&mut self, a: Addr, m: Addr) {
        if a.is_nursery() {
            self.nursery[a.offset() + 1] = m.0;
        } else {
            self.old.store(a.add_words(1), m.0);
        }
    }

    fn info_of(&self, a: Addr) -> &TypeInfo {
        &self.types[self.header(a).type_id as usize]
    }

    fn note_count_update(&mut self) {
        self.barrier.count_updates += 1;
        if !self.in_collector {
            self.barrier.count_updates_outside += 1;
        }
    }

    /// Collector-side rewrite of an old-generation reference slot.
    fn rewrite_slot(&mut self, slot: Addr, target: Addr) {
        self.barrier.slot_rewrites += 1;
        if !self.in_collector {
            self.barrier.slot_rewrites_outside += 1;
        }
        self.old.store(slot, target.0);
    }

    /// Follows replica links to the newest copy.
    fn resolve_relocated(&self, mut a: Addr) -> Addr {
        while a.is_old() && self.old.header(a).state == ObjectState::Relocated {
            a = self.meta(a);
        }
        a
    }

    /// One reference to `target` appeared, from `from_slot` or from a root.
    fn apply_increment(&mut self, target: Addr, from_slot: Option<Addr>) {
        debug_assert!(target.is_old());
        self.note_count_update();
        self.stats.increments_applied += 1;
        self.work_events += 1;
        let mut h = self.old.header(target);
        match h.state {
            ObjectState::Shared if h.count == 0 => match from_slot {
                Some(slot) => {
                    h.state = ObjectState::UniqueParent;
                    h.count = 1;
                    self.set_meta(target, slot);
                }
                None => h.count = 1,
            },
            ObjectState::UniqueParent => {
                h.state = ObjectState::Shared;
                h.count = 2;
                self.set_meta(target, Addr::NIL);
            }
            ObjectState::Shared | ObjectState::Relocated => {
                if h.count != COUNT_SATURATED {
                    h.count += 1;
                }
            }
            s => unreachable!("increment on {s:?} object"),
        }
        self.old.store(target, h.encode());
    }

    /// Processes one queued decrement.
    fn apply_decrement(&mut self, target: Addr) {
        self.note_count_update();
        self.stats.decrements_processed += 1;
        self.work_events += 1;
        let mut h = self.old.header(target);
        match h.state {
            ObjectState::UniqueParent => self.release(target),
            ObjectState::Shared | ObjectState::Relocated => {
                if h.count == COUNT_SATURATED {
                    return;
                }
                debug_assert!(h.count > 0, "decrement below zero");
                h.count -= 1;
                if h.count == 0 {
                    self.release(target);
                } else {
                    self.old.store(target, h.encode());
                }
            }
            s => unreachable!("decrement on {s:?} object"),
        }
    }

    /// Frees a dead old object and queues decrements for what it referenced.
    fn release(&mut self, a: Addr) {
        self.stats.objects_released += 1;
        self.work_events += 1;
        let h = self.old.header(a);
        let refs = self.types[h.type_id as usize].ref_slots.clone();
        for s in refs {
            let t = Addr(self.old.load(a.slot(s)));
            if !t.is_nil() {
                self.dec_queue.push_back(t);
            }
        }
        if h.state == ObjectState::Relocated {
            self.dec_queue.push_back(self.meta(a));
            self.defrag.outstanding -= 1;
        }
        self.old.free(a);
    }

    fn poison(&mut self, stats: GcStats) -> HeapError {
        self.poisoned = Some(stats);
        self.in_collector = false;
        HeapError::HeapLimitExceeded { stats }
    }
}
