//! Stop-the-world minor collection.

use super::layout::{Addr, Header, ObjectState, HEADER_WORDS};
use super::{GcStats, Heap, HeapError};

impl Heap {
    /// Evacuates the nursery, reconciles root counts and spends the
    /// decrement and defragmentation budgets. Returns this collection's
    /// counters.
    pub fn collect_minor(&mut self) -> Result<GcStats, HeapError> {
        self.check_poisoned()?;
        self.collect_with(&mut [])
    }

    /// Collection with extra temporary roots (allocation arguments); `extra`
    /// is updated in place with forwarded addresses.
    pub(super) fn collect_with(&mut self, extra: &mut [Addr]) -> Result<GcStats, HeapError> {
        let before = self.stats;
        self.in_collector = true;

        // Evacuate everything reachable from roots, breadth first.
        let mut promoted: Vec<Addr> = Vec::new();
        for i in 0..self.roots.entries.len() {
            let a = self.roots.entries[i];
            if a.is_nursery() {
                let moved = self.evacuate(a, &mut promoted, &before)?;
                self.roots.entries[i] = moved;
            }
        }
        for a in extra.iter_mut() {
            if a.is_nursery() {
                *a = self.evacuate(*a, &mut promoted, &before)?;
            }
        }
        let mut scan = 0;
        while scan < promoted.len() {
            let obj = promoted[scan];
            scan += 1;
            let refs = self.info_of(obj).ref_slots.clone();
            for s in refs {
                let slot = obj.slot(s);
                let t = Addr(self.old.load(slot));
                if t.is_nil() {
                    continue;
                }
                let moved = if t.is_nursery() {
                    self.evacuate(t, &mut promoted, &before)?
                } else {
                    t
                };
                let target = self.resolve_relocated(moved);
                if target != t {
                    self.rewrite_slot(slot, target);
                }
                self.apply_increment(target, Some(slot));
            }
        }

        // Whole-block objects allocated since the last collection.
        let pending = std::mem::take(&mut self.pending_large);
        for &obj in &pending {
            let refs = self.info_of(obj).ref_slots.clone();
            for s in refs {
                let slot = obj.slot(s);
                let t = Addr(self.old.load(slot));
                if t.is_nil() {
                    continue;
                }
                let target = self.resolve_relocated(t);
                if target != t {
                    self.rewrite_slot(slot, target);
                }
                self.apply_increment(target, Some(slot));
            }
        }

        // Root epoch: count current roots, retire the previous epoch.
        let mut epoch = Vec::with_capacity(self.roots.entries.len() + extra.len());
        for i in 0..self.roots.entries.len() {
            let a = self.roots.entries[i];
            if a.is_old() {
                let t = self.resolve_relocated(a);
                self.roots.entries[i] = t;
                self.apply_increment(t, None);
                epoch.push(t);
            }
        }
        for a in extra.iter_mut() {
            if a.is_old() {
                let t = self.resolve_relocated(*a);
                *a = t;
                self.apply_increment(t, None);
                epoch.push(t);
            }
        }
        let retired = std::mem::replace(&mut self.epoch_roots, epoch);
        self.dec_queue.extend(retired);

        for obj in pending {
            let h = self.old.header(obj);
            if h.state == ObjectState::Shared && h.count == 0 {
                self.release(obj);
            }
        }

        let mut processed = 0;
        while processed < self.config.dec_budget {
            let Some(t) = self.dec_queue.pop_front() else {
                break;
            };
            self.apply_decrement(t);
            processed += 1;
        }

        let budget = self.config.defrag_budget;
        self.defrag_inner(budget);

        self.cursor = 0;
        self.nursery_objects = 0;
        self.nursery_epoch += 1;
        self.stats.collections_count += 1;
        let delta = self.stats.since(&before);
        self.stats.pause_work_units += delta.objects_evacuated
            + delta.increments_applied
            + delta.decrements_processed;
        self.in_collector = false;
        Ok(self.stats.since(&before))
    }

    /// Copies one nursery object into the old generation (or returns its
    /// forwarding address).
    fn evacuate(
        &mut self,
        a: Addr,
        promoted: &mut Vec<Addr>,
        before: &GcStats,
    ) -> Result<Addr, HeapError> {
        let h = self.header(a);
        if h.state == ObjectState::Forwarded {
            return Ok(self.meta(a));
        }
        debug_assert_eq!(h.state, ObjectState::Plain);
        let words = self.types[h.type_id as usize].words;
        let new = match self.old.alloc(words) {
            Ok(n) => n,
            Err(_) => {
                let mut partial = self.stats.since(before);
                partial.pause_work_units = partial.objects_evacuated
                    + partial.increments_applied
                    + partial.decrements_processed;
                return Err(self.poison(partial));
            }
        };
        let off = a.offset();
        for i in HEADER_WORDS..words {
            self.old.store(new.add_words(i), self.nursery[off + i]);
        }
        let promoted_header = Header {
            type_id: h.type_id,
            state: ObjectState::Shared,
            old: true,
            count: 0,
        };
        self.old.store(new, promoted_header.encode());
        self.old.store(new.add_words(1), 0);
        self.set_header(
            a,
            Header {
                state: ObjectState::Forwarded,
                ..h
            },
        );
        self.set_meta(a, new);
        self.stats.objects_evacuated += 1;
        self.stats.bytes_promoted += (words * super::WORD_BYTES) as u64;
        self.work_events += 1;
        promoted.push(new);
        Ok(new)
    }
}
