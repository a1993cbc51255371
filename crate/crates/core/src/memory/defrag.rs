//! Incremental, identity-free defragmentation of the old generation.
//!
//! Sparse blocks are withdrawn from allocation and their objects moved out.
//! An object with a single recorded parent slot is moved eagerly: copy,
//! rewrite that one slot, free the original. A shared object gets a replica
//! and its original is marked RELOCATED; a budgeted cyclic scan over
//! old-generation slots and root entries then migrates references one by
//! one. The original dies through the ordinary count path once the last
//! reference has moved. Both copies are interchangeable in the meantime.

use std::collections::VecDeque;

use super::layout::{Addr, Header, ObjectState};
use super::Heap;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DefragStats {
    pub objects_relocated: u64,
    pub slots_scanned: u64,
    pub blocks_freed: u64,
}

#[derive(Debug, Default)]
pub(super) struct DefragState {
    /// Live RELOCATED originals still awaiting reference migration.
    pub outstanding: usize,
    queue: VecDeque<usize>,
    evac: Option<(usize, usize)>,
    scan: ScanCursor,
}

#[derive(Debug, Default, Clone, Copy)]
struct ScanCursor {
    in_roots: bool,
    block: usize,
    offset: usize,
    slot: usize,
    root: usize,
}

enum Step {
    Done(usize),
    Skipped,
    OutOfSpace,
}

impl Heap {
    /// Runs one budgeted defragmentation step outside a collection.
    pub fn defrag_step(&mut self, budget_slots: usize) -> DefragStats {
        if self.poisoned.is_some() {
            return DefragStats::default();
        }
        self.in_collector = true;
        let stats = self.defrag_inner(budget_slots);
        self.in_collector = false;
        stats
    }

    /// True when no evacuation, reference migration or sparse block remains.
    pub fn defrag_idle(&self) -> bool {
        self.defrag.outstanding == 0
            && self.defrag.queue.is_empty()
            && self.defrag.evac.is_none()
            && self.old.sparse.is_empty()
            && self.old.sources.is_empty()
    }

    pub(super) fn defrag_inner(&mut self, budget: usize) -> DefragStats {
        let freed_before = self.old.blocks_freed;
        let mut budget = budget;
        let mut stats = DefragStats::default();

        if self.defrag.queue.is_empty() && self.defrag.evac.is_none() {
            while budget > 0 {
                let Some(&b) = self.old.sparse.first() else {
                    break;
                };
                self.old.make_source(b);
                self.defrag.queue.push_back(b);
                budget -= 1;
            }
        }

        while budget > 0 {
            let (b, off) = match self.defrag.evac {
                Some(c) => c,
                None => match self.defrag.queue.pop_front() {
                    Some(b) => (b, 0),
                    None => break,
                },
            };
            let blk = &self.old.blocks[b];
            if !blk.in_use() || !blk.source || off >= blk.bump {
                self.defrag.evac = None;
                continue;
            }
            self.defrag.evac = Some((b, off + blk.cell_words()));
            budget -= 1;
            let a = Addr::old(b, off);
            let step = match self.old.header(a).state {
                ObjectState::UniqueParent => self.relocate_unique(a),
                ObjectState::Shared => self.replicate(a),
                _ => Step::Skipped,
            };
            match step {
                Step::Done(cost) => {
                    stats.objects_relocated += 1;
                    budget = budget.saturating_sub(cost);
                }
                Step::Skipped => {}
                Step::OutOfSpace => {
                    // Retry this cell next time.
                    self.defrag.evac = Some((b, off));
                    break;
                }
            }
        }

        while budget > 0 && self.defrag.outstanding > 0 {
            budget -= 1;
            let mut cur = self.defrag.scan;
            if cur.in_roots {
                if cur.root >= self.roots.entries.len() {
                    cur = ScanCursor::default();
                } else {
                    let t = self.roots.entries[cur.root];
                    if t.is_old() {
                        self.roots.entries[cur.root] = self.resolve_relocated(t);
                    }
                    cur.root += 1;
                }
                self.defrag.scan = cur;
                continue;
            }
            if cur.block >= self.old.blocks.len() {
                cur.in_roots = true;
                cur.root = 0;
                self.defrag.scan = cur;
                continue;
            }
            let blk = &self.old.blocks[cur.block];
            if !blk.in_use() || cur.offset >= blk.bump {
                cur.block += 1;
                cur.offset = 0;
                cur.slot = 0;
                self.defrag.scan = cur;
                continue;
            }
            let cw = blk.cell_words();
            let a = Addr::old(cur.block, cur.offset);
            let h = self.old.header(a);
            let scannable = match h.state {
                ObjectState::UniqueParent => true,
                ObjectState::Shared => h.count > 0,
                _ => false,
            };
            if !scannable {
                cur.offset += cw;
                cur.slot = 0;
                self.defrag.scan = cur;
                continue;
            }
            let refs = self.types[h.type_id as usize].ref_slots.clone();
            while cur.slot < refs.len() && budget > 0 {
                budget -= 1;
                stats.slots_scanned += 1;
                let slot = a.slot(refs[cur.slot]);
                cur.slot += 1;
                let t = Addr(self.old.load(slot));
                if t.is_old() && self.old.header(t).state == ObjectState::Relocated {
                    let replica = self.resolve_relocated(t);
                    self.rewrite_slot(slot, replica);
                    self.apply_increment(replica, Some(slot));
                    self.dec_queue.push_back(t);
                }
            }
            if cur.slot >= refs.len() {
                cur.offset += cw;
                cur.slot = 0;
            }
            self.defrag.scan = cur;
        }

        stats.blocks_freed = self.old.blocks_freed - freed_before;
        stats
    }

    /// Eager move of an object whose only reference is its recorded parent slot.
    fn relocate_unique(&mut self, a: Addr) -> Step {
        let parent_slot = self.meta(a);
        let parent_ok = parent_slot.is_old()
            && self.old.containing_object(parent_slot).is_some()
            && self.old.load(parent_slot) == a.0;
        if !parent_ok {
            // Parent already released; the pending decrement will free `a`.
            return Step::Skipped;
        }
        let info = self.info_of(a).clone();
        let Ok(new) = self.old.alloc(info.words) else {
            return Step::OutOfSpace;
        };
        for i in 0..info.words {
            let w = self.old.load(a.add_words(i));
            self.old.store(new.add_words(i), w);
        }
        self.rewrite_slot(parent_slot, new);
        for &s in &info.ref_slots {
            let child = Addr(self.old.load(a.slot(s)));
            if child.is_old()
                && self.old.header(child).state == ObjectState::UniqueParent
                && self.meta(child) == a.slot(s)
            {
                self.set_meta(child, new.slot(s));
            }
        }
        self.old.free(a);
        Step::Done(info.ref_slots.len())
    }

    /// Copies a shared object and marks the original RELOCATED.
    fn replicate(&mut self, a: Addr) -> Step {
        let h = self.old.header(a);
        if h.count == 0 {
            // Whole-block object not yet counted; never in a small block.
            return Step::Skipped;
        }
        let info = self.info_of(a).clone();
        let Ok(new) = self.old.alloc(info.words) else {
            return Step::OutOfSpace;
        };
        for i in 2..info.words {
            let w = self.old.load(a.add_words(i));
            self.old.store(new.add_words(i), w);
        }
        let replica = Header {
            type_id: h.type_id,
            state: ObjectState::Shared,
            old: true,
            count: 1,
        };
        self.old.store(new, replica.encode());
        self.old.store(new.add_words(1), 0);
        for &s in &info.ref_slots {
            let child = Addr(self.old.load(new.slot(s)));
            if child.is_nil() {
                continue;
            }
            let target = self.resolve_relocated(child);
            self.old.store(new.slot(s), target.0);
            self.apply_increment(target, Some(new.slot(s)));
        }
        self.old.store(
            a,
            Header {
                state: ObjectState::Relocated,
                ..h
            }
            .encode(),
        );
        self.set_meta(a, new);
        self.defrag.outstanding += 1;
        Step::Done(info.ref_slots.len())
    }
}
