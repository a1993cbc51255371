//! Object layout, header encoding and internal addresses.
//!
//! Every object is a run of 64-bit words: two header words followed by one
//! word per slot. Header word 0 packs the type id, the state tag, the region
//! bit and a 32-bit reference count; header word 1 is the meta word whose
//! meaning depends on the state tag.

use super::HeapError;

pub const WORD_BYTES: usize = 8;
pub const HEADER_WORDS: usize = 2;
pub const HEADER_BYTES: usize = HEADER_WORDS * WORD_BYTES;

/// Counts saturate here; a saturated object is immortal.
pub const COUNT_SATURATED: u32 = u32::MAX;

const TYPE_BITS: u64 = 24;
const TYPE_MASK: u64 = (1 << TYPE_BITS) - 1;
const STATE_SHIFT: u64 = 24;
const STATE_MASK: u64 = 0xF;
const REGION_OLD_BIT: u64 = 1 << 28;
const COUNT_SHIFT: u64 = 32;

/// Dense identifier assigned by [`Heap::register_type`](super::Heap::register_type).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeId(pub u32);

impl std::fmt::Display for TypeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Layout of one object type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeDescriptor {
    pub name: String,
    pub slot_count: usize,
    /// Slot indices holding object references, strictly increasing.
    pub ref_slots: Vec<usize>,
    /// Total size in bytes including the header.
    pub total_size: usize,
}

impl TypeDescriptor {
    pub fn new(name: impl Into<String>, slot_count: usize, ref_slots: &[usize]) -> Self {
        TypeDescriptor {
            name: name.into(),
            slot_count,
            ref_slots: ref_slots.to_vec(),
            total_size: HEADER_BYTES + slot_count * WORD_BYTES,
        }
    }

    /// Pads the object to `bytes` (header included).
    pub fn with_total_size(mut self, bytes: usize) -> Self {
        self.total_size = bytes;
        self
    }

    pub(crate) fn check(&self) -> Result<(), HeapError> {
        let min = HEADER_BYTES + self.slot_count * WORD_BYTES;
        if self.total_size < min || !self.total_size.is_multiple_of(WORD_BYTES) {
            return Err(HeapError::BadTypeSize {
                size: self.total_size,
                min,
            });
        }
        for (i, &slot) in self.ref_slots.iter().enumerate() {
            if slot >= self.slot_count {
                return Err(HeapError::SlotOutOfRange {
                    slot,
                    slot_count: self.slot_count,
                });
            }
            if i > 0 && self.ref_slots[i - 1] >= slot {
                return Err(HeapError::UnsortedRefSlots);
            }
        }
        Ok(())
    }
}

/// Frozen per-type layout used on hot paths.
#[derive(Clone, Debug)]
pub(crate) struct TypeInfo {
    pub words: usize,
    pub slot_count: usize,
    pub ref_slots: Vec<usize>,
    pub is_ref: Vec<bool>,
}

impl TypeInfo {
    pub fn from_descriptor(d: &TypeDescriptor) -> Self {
        let mut is_ref = vec![false; d.slot_count];
        for &s in &d.ref_slots {
            is_ref[s] = true;
        }
        TypeInfo {
            words: d.total_size / WORD_BYTES,
            slot_count: d.slot_count,
            ref_slots: d.ref_slots.clone(),
            is_ref,
        }
    }

    pub fn bytes(&self) -> usize {
        self.words * WORD_BYTES
    }
}

/// Header state tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectState {
    /// Unallocated cell (never visible through a handle).
    Free = 0,
    Plain = 1,
    Forwarded = 2,
    UniqueParent = 3,
    Shared = 4,
    Relocated = 5,
}

impl ObjectState {
    fn from_bits(bits: u64) -> ObjectState {
        match bits {
            1 => ObjectState::Plain,
            2 => ObjectState::Forwarded,
            3 => ObjectState::UniqueParent,
            4 => ObjectState::Shared,
            5 => ObjectState::Relocated,
            _ => ObjectState::Free,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            ObjectState::Free => "FREE",
            ObjectState::Plain => "PLAIN",
            ObjectState::Forwarded => "FORWARDED",
            ObjectState::UniqueParent => "UNIQUE_PARENT",
            ObjectState::Shared => "SHARED",
            ObjectState::Relocated => "RELOCATED",
        }
    }
}

/// Decoded header word 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Header {
    pub type_id: u32,
    pub state: ObjectState,
    pub old: bool,
    pub count: u32,
}

impl Header {
    pub fn decode(word: u64) -> Header {
        Header {
            type_id: (word & TYPE_MASK) as u32,
            state: ObjectState::from_bits((word >> STATE_SHIFT) & STATE_MASK),
            old: word & REGION_OLD_BIT != 0,
            count: (word >> COUNT_SHIFT) as u32,
        }
    }

    pub fn encode(self) -> u64 {
        (self.type_id as u64 & TYPE_MASK)
            | ((self.state as u64) << STATE_SHIFT)
            | if self.old { REGION_OLD_BIT } else { 0 }
            | ((self.count as u64) << COUNT_SHIFT)
    }
}

const NURSERY_BIT: u64 = 1 << 62;
const OFFSET_BITS: u64 = 24;
const OFFSET_MASK: u64 = (1 << OFFSET_BITS) - 1;

/// Internal word address. Zero is nil. Never handed to clients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct Addr(pub u64);

impl Addr {
    pub const NIL: Addr = Addr(0);

    pub fn nursery(offset: usize) -> Addr {
        Addr(NURSERY_BIT | offset as u64)
    }

    pub fn old(block: usize, offset: usize) -> Addr {
        debug_assert!((offset as u64) <= OFFSET_MASK);
        Addr((((block as u64) + 1) << OFFSET_BITS) | offset as u64)
    }

    pub fn is_nil(self) -> bool {
        self.0 == 0
    }

    pub fn is_nursery(self) -> bool {
        self.0 & NURSERY_BIT != 0
    }

    pub fn is_old(self) -> bool {
        !self.is_nil() && !self.is_nursery()
    }

    /// Word offset within the nursery or the block.
    pub fn offset(self) -> usize {
        if self.is_nursery() {
            (self.0 & !NURSERY_BIT) as usize
        } else {
            (self.0 & OFFSET_MASK) as usize
        }
    }

    pub fn block(self) -> usize {
        debug_assert!(self.is_old());
        ((self.0 >> OFFSET_BITS) - 1) as usize
    }

    /// Address of the word holding slot `slot` of the object at `self`.
    pub fn slot(self, slot: usize) -> Addr {
        Addr(self.0 + (HEADER_WORDS + slot) as u64)
    }

    pub fn add_words(self, words: usize) -> Addr {
        Addr(self.0 + words as u64)
    }
}

/// Maximum word offset addressable inside one block.
pub(crate) const MAX_BLOCK_WORDS: usize = 1 << OFFSET_BITS;
