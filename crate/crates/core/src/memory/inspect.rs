//! Full-trace heap validation, debug dumps and content serialization.
//!
//! These walk the entire heap and are meant for tests and the harness, never
//! for the mutator's hot path.

use std::collections::HashMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use super::layout::{Addr, ObjectState, COUNT_SATURATED};
use super::Heap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    IllegalState { object: String, state: &'static str },
    CountMismatch { object: String, expected: u64, actual: u64 },
    BackReference { object: String },
    OldToNursery { object: String, slot: usize },
    Dangling { object: String, slot: usize },
    Cycle { object: String },
    Occupancy { block: usize, recorded: usize, actual: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HeapValidation {
    pub violations: Vec<Violation>,
    pub objects_checked: usize,
}

impl HeapValidation {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl Heap {
    /// Reachable objects in breadth-first trace order from the roots,
    /// following replica links. Ordinals in dumps and violations index this.
    fn trace_order(&self) -> (Vec<Addr>, HashMap<Addr, usize>) {
        let mut order = Vec::new();
        let mut ordinal = HashMap::new();
        let mut visit = |a: Addr, order: &mut Vec<Addr>| {
            if !a.is_nil() && !ordinal.contains_key(&a) {
                ordinal.insert(a, order.len());
                order.push(a);
            }
        };
        for &r in &self.roots.entries {
            visit(r, &mut order);
        }
        let mut i = 0;
        while i < order.len() {
            let a = order[i];
            i += 1;
            if !self.is_object(a) {
                continue;
            }
            let h = self.header(a);
            for &s in &self.types[h.type_id as usize].ref_slots {
                visit(Addr(self.load(a.slot(s))), &mut order);
            }
            if h.state == ObjectState::Relocated {
                visit(self.meta(a), &mut order);
            }
        }
        (order, ordinal)
    }

    fn is_object(&self, a: Addr) -> bool {
        if a.is_nursery() {
            a.offset() < self.cursor && self.header(a).state != ObjectState::Free
        } else {
            self.old.is_live_object(a)
        }
    }

    /// Debug oracle: full trace plus exact count reconciliation.
    pub fn validate_heap(&self) -> HeapValidation {
        let mut report = HeapValidation::default();
        let (order, ordinal) = self.trace_order();
        let name = |a: Addr| match ordinal.get(&a) {
            Some(o) => format!("#{o}"),
            None if a.is_nursery() => format!("unreachable@nursery:{}", a.offset()),
            None => format!("unreachable@{}:{}", a.block(), a.offset()),
        };

        // Every allocated old object, reachable or not.
        let mut objects = Vec::new();
        for (b, blk) in self.old.blocks.iter().enumerate() {
            if !blk.in_use() {
                continue;
            }
            let mut live = 0;
            for off in blk.cell_offsets() {
                let a = Addr::old(b, off);
                if self.old.header(a).state != ObjectState::Free {
                    objects.push(a);
                    live += 1;
                }
            }
            if live != blk.live_cells {
                report.violations.push(Violation::Occupancy {
                    block: b,
                    recorded: blk.live_cells,
                    actual: live,
                });
            }
        }
        report.objects_checked = objects.len();

        let pending: std::collections::HashSet<Addr> = self.pending_large.iter().copied().collect();
        let mut expected: HashMap<Addr, u64> = objects.iter().map(|&a| (a, 0)).collect();
        let mut last_slot: HashMap<Addr, Addr> = HashMap::new();
        let mut slot_refs: HashMap<Addr, u64> = HashMap::new();

        for &a in &objects {
            let h = self.old.header(a);
            match h.state {
                ObjectState::UniqueParent | ObjectState::Shared | ObjectState::Relocated => {}
                s => report.violations.push(Violation::IllegalState {
                    object: name(a),
                    state: s.tag(),
                }),
            }
            if pending.contains(&a) {
                continue;
            }
            for &s in &self.types[h.type_id as usize].ref_slots {
                let t = Addr(self.old.load(a.slot(s)));
                if t.is_nil() {
                    continue;
                }
                if t.is_nursery() {
                    report.violations.push(Violation::OldToNursery {
                        object: name(a),
                        slot: s,
                    });
                    continue;
                }
                match expected.get_mut(&t) {
                    Some(c) => {
                        *c += 1;
                        *slot_refs.entry(t).or_default() += 1;
                        last_slot.insert(t, a.slot(s));
                    }
                    None => report.violations.push(Violation::Dangling {
                        object: name(a),
                        slot: s,
                    }),
                }
            }
            if h.state == ObjectState::Relocated {
                let r = self.meta(a);
                match expected.get_mut(&r) {
                    Some(c) => *c += 1,
                    None => report.violations.push(Violation::Dangling {
                        object: name(a),
                        slot: usize::MAX,
                    }),
                }
            }
        }
        for t in self.epoch_roots.iter().chain(self.dec_queue.iter()) {
            match expected.get_mut(t) {
                Some(c) => *c += 1,
                None => report.violations.push(Violation::Dangling {
                    object: "root-epoch or decrement queue".to_string(),
                    slot: 0,
                }),
            }
        }

        for &a in &objects {
            let h = self.old.header(a);
            let want = expected[&a];
            let have = match h.state {
                ObjectState::UniqueParent => 1,
                _ => h.count as u64,
            };
            if h.count == COUNT_SATURATED && h.state != ObjectState::UniqueParent {
                continue;
            }
            if pending.contains(&a) {
                if have != 0 || want != 0 {
                    report.violations.push(Violation::CountMismatch {
                        object: name(a),
                        expected: 0,
                        actual: have,
                    });
                }
                continue;
            }
            if want != have {
                report.violations.push(Violation::CountMismatch {
                    object: name(a),
                    expected: want,
                    actual: have,
                });
            }
            if h.state == ObjectState::UniqueParent
                && slot_refs.get(&a) == Some(&1)
                && last_slot.get(&a) != Some(&self.meta(a))
            {
                report.violations.push(Violation::BackReference { object: name(a) });
            }
        }

        // Reachable nursery objects are PLAIN; nothing reachable dangles.
        for &a in &order {
            if !self.is_object(a) {
                report.violations.push(Violation::Dangling {
                    object: name(a),
                    slot: 0,
                });
                continue;
            }
            if a.is_nursery() && self.header(a).state != ObjectState::Plain {
                report.violations.push(Violation::IllegalState {
                    object: name(a),
                    state: self.header(a).state.tag(),
                });
            }
        }

        // Cycle check over everything allocated (iterative three-colour DFS).
        let mut colour: HashMap<Addr, u8> = HashMap::new();
        let starts: Vec<Addr> = order.iter().chain(objects.iter()).copied().collect();
        for start in starts {
            if colour.contains_key(&start) || !self.is_object(start) {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            colour.insert(start, 1);
            while let Some(&(a, next)) = stack.last() {
                let h = self.header(a);
                let refs = &self.types[h.type_id as usize].ref_slots;
                let mut children: Vec<Addr> = refs
                    .iter()
                    .map(|&s| Addr(self.load(a.slot(s))))
                    .collect();
                if h.state == ObjectState::Relocated {
                    children.push(self.meta(a));
                }
                if next >= children.len() {
                    colour.insert(a, 2);
                    stack.pop();
                    continue;
                }
                let c = children[next];
                if let Some(top) = stack.last_mut() {
                    top.1 += 1;
                }
                if c.is_nil() || !self.is_object(c) {
                    continue;
                }
                match colour.get(&c) {
                    Some(1) => report.violations.push(Violation::Cycle { object: name(c) }),
                    Some(_) => {}
                    None => {
                        colour.insert(c, 1);
                        stack.push((c, 0));
                    }
                }
            }
        }
        report
    }

    /// One line per reachable object in trace order:
    /// `obj <ordinal> type=<id> state=<tag> meta=<n> slots=[...]`.
    ///
    /// `meta` is the count for SHARED, the parent's ordinal for
    /// UNIQUE_PARENT and the target's ordinal for FORWARDED/RELOCATED.
    pub fn debug_dump(&self) -> String {
        let (order, ordinal) = self.trace_order();
        let ord = |a: Addr| {
            ordinal
                .get(&a)
                .map(|o| o.to_string())
                .unwrap_or_else(|| "?".to_string())
        };
        let mut out = String::new();
        for (i, &a) in order.iter().enumerate() {
            if !self.is_object(a) {
                let _ = writeln!(out, "obj {i} dangling");
                continue;
            }
            let h = self.header(a);
            let info = &self.types[h.type_id as usize];
            let meta = match h.state {
                ObjectState::Shared => h.count.to_string(),
                ObjectState::UniqueParent => self
                    .old
                    .containing_object(self.meta(a))
                    .map(ord)
                    .unwrap_or_else(|| "?".to_string()),
                ObjectState::Forwarded | ObjectState::Relocated => ord(self.meta(a)),
                _ => "0".to_string(),
            };
            let slots: Vec<String> = (0..info.slot_count)
                .map(|s| {
                    let w = self.load(a.slot(s));
                    if !info.is_ref[s] {
                        w.to_string()
                    } else if w == 0 {
                        "nil".to_string()
                    } else {
                        format!("@{}", ord(Addr(w)))
                    }
                })
                .collect();
            let _ = writeln!(
                out,
                "obj {i} type={} state={} meta={meta} slots=[{}]",
                h.type_id,
                h.state.tag(),
                slots.join(",")
            );
        }
        out
    }

    /// Structural digest of the object at `a`: type id, scalar payload and
    /// children's digests. Independent of addresses and of sharing.
    pub(super) fn digest(&self, a: Addr, memo: &mut HashMap<Addr, [u8; 32]>) -> [u8; 32] {
        let mut stack = vec![(a, false)];
        while let Some((x, expanded)) = stack.pop() {
            if memo.contains_key(&x) {
                continue;
            }
            let h = self.header(x);
            let info = &self.types[h.type_id as usize];
            if !expanded {
                stack.push((x, true));
                for &s in &info.ref_slots {
                    let c = Addr(self.load(x.slot(s)));
                    if !c.is_nil() && !memo.contains_key(&c) {
                        stack.push((c, false));
                    }
                }
                continue;
            }
            let mut hasher = Sha256::new();
            hasher.update(h.type_id.to_le_bytes());
            for s in 0..info.slot_count {
                let w = self.load(x.slot(s));
                if !info.is_ref[s] {
                    hasher.update([0u8]);
                    hasher.update(w.to_le_bytes());
                } else if w == 0 {
                    hasher.update([1u8]);
                } else {
                    hasher.update([2u8]);
                    hasher.update(memo[&Addr(w)]);
                }
            }
            memo.insert(x, hasher.finalize().into());
        }
        memo[&a]
    }

    /// Content serialization of everything reachable from the roots: one
    /// line per root entry with the hex digest of its object graph.
    /// Identical for any two heaps holding structurally equal data.
    pub fn content_serialization(&self) -> String {
        let mut memo = HashMap::new();
        let mut out = String::new();
        for (i, &r) in self.roots.entries.iter().enumerate() {
            if self.is_object(r) {
                let d = self.digest(r, &mut memo);
                let _ = writeln!(out, "root {i} {}", hex::encode(d));
            } else {
                let _ = writeln!(out, "root {i} dangling");
            }
        }
        out
    }
}
