//! Old generation: fixed-size blocks carved into power-of-two size classes.
//!
//! Each small block serves exactly one size class and keeps its own free-cell
//! list, so a block that drains can be returned to the pool without touching
//! any other block. Allocation always takes the lowest-numbered block of the
//! class that still has room, which keeps live data packed toward the front.

use std::collections::BTreeSet;

use super::layout::{Addr, Header, ObjectState, MAX_BLOCK_WORDS, WORD_BYTES};

pub const MIN_CLASS_BYTES: usize = 16;
pub const MAX_CLASS_BYTES: usize = 4096;
pub const CLASS_COUNT: usize = 9;

/// Per-block descriptor charged to the footprint.
pub const BLOCK_META_BYTES: usize = 64;

/// Size-class index for an object of `bytes`, or `None` for whole-block objects.
pub fn class_for(bytes: usize) -> Option<usize> {
    if bytes > MAX_CLASS_BYTES {
        return None;
    }
    let rounded = bytes.max(MIN_CLASS_BYTES).next_power_of_two();
    Some(rounded.trailing_zeros() as usize - MIN_CLASS_BYTES.trailing_zeros() as usize)
}

pub fn class_bytes(class: usize) -> usize {
    MIN_CLASS_BYTES << class
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    Free,
    Small { class: usize },
    Large,
}

#[derive(Debug)]
pub struct Block {
    pub words: Vec<u64>,
    pub kind: BlockKind,
    pub live_cells: usize,
    /// Words carved from the block so far.
    pub bump: usize,
    pub free_cells: Vec<usize>,
    /// Block-size units covered (1 for small blocks).
    pub units: usize,
    pub source: bool,
}

impl Block {
    fn empty() -> Block {
        Block {
            words: Vec::new(),
            kind: BlockKind::Free,
            live_cells: 0,
            bump: 0,
            free_cells: Vec::new(),
            units: 0,
            source: false,
        }
    }

    pub fn in_use(&self) -> bool {
        self.kind != BlockKind::Free
    }

    pub fn cell_words(&self) -> usize {
        match self.kind {
            BlockKind::Small { class } => class_bytes(class) / WORD_BYTES,
            BlockKind::Large => self.words.len(),
            BlockKind::Free => 0,
        }
    }

    /// Word offsets of every carved cell, live or free.
    pub fn cell_offsets(&self) -> impl Iterator<Item = usize> {
        let (end, step) = match self.kind {
            BlockKind::Small { class } => (self.bump, class_bytes(class) / WORD_BYTES),
            BlockKind::Large => (1, 1),
            BlockKind::Free => (0, 1),
        };
        (0..end).step_by(step)
    }

    /// Still has uncarved space; the allocation frontier of its class.
    pub fn is_frontier(&self) -> bool {
        match self.kind {
            BlockKind::Small { .. } => self.bump + self.cell_words() <= self.words.len(),
            _ => false,
        }
    }

    fn has_room(&self) -> bool {
        !self.free_cells.is_empty() || self.is_frontier()
    }
}

#[derive(Debug)]
pub struct HeapLimit;

#[derive(Debug)]
pub struct OldGeneration {
    pub block_words: usize,
    max_bytes: usize,
    threshold: f64,
    pub blocks: Vec<Block>,
    free_pool: BTreeSet<usize>,
    available: Vec<BTreeSet<usize>>,
    /// Non-frontier, non-source small blocks below the occupancy threshold.
    pub sparse: BTreeSet<usize>,
    /// Blocks being evacuated by the defragmenter.
    pub sources: BTreeSet<usize>,
    in_use_units: usize,
    pub live_objects: usize,
    pub blocks_freed: u64,
}

impl OldGeneration {
    pub fn new(block_bytes: usize, max_bytes: usize, threshold: f64) -> OldGeneration {
        OldGeneration {
            block_words: block_bytes / WORD_BYTES,
            max_bytes,
            threshold,
            blocks: Vec::new(),
            free_pool: BTreeSet::new(),
            available: (0..CLASS_COUNT).map(|_| BTreeSet::new()).collect(),
            sparse: BTreeSet::new(),
            sources: BTreeSet::new(),
            in_use_units: 0,
            live_objects: 0,
            blocks_freed: 0,
        }
    }

    pub fn block_bytes(&self) -> usize {
        self.block_words * WORD_BYTES
    }

    pub fn in_use_units(&self) -> usize {
        self.in_use_units
    }

    pub fn in_use_bytes(&self) -> usize {
        self.in_use_units * self.block_bytes()
    }

    pub fn in_use_blocks(&self) -> usize {
        self.blocks.iter().filter(|b| b.in_use()).count()
    }

    pub fn occupancy(&self, b: usize) -> f64 {
        let blk = &self.blocks[b];
        match blk.kind {
            BlockKind::Small { class } => {
                (blk.live_cells * class_bytes(class)) as f64 / self.block_bytes() as f64
            }
            BlockKind::Large => 1.0,
            BlockKind::Free => 0.0,
        }
    }

    pub fn live_cell_bytes(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| match b.kind {
                BlockKind::Small { class } => b.live_cells * class_bytes(class),
                BlockKind::Large => b.words.len() * WORD_BYTES,
                BlockKind::Free => 0,
            })
            .sum()
    }

    #[inline]
    pub fn load(&self, a: Addr) -> u64 {
        self.blocks[a.block()].words[a.offset()]
    }

    #[inline]
    pub fn store(&mut self, a: Addr, v: u64) {
        self.blocks[a.block()].words[a.offset()] = v;
    }

    pub fn header(&self, a: Addr) -> Header {
        Header::decode(self.load(a))
    }

    /// True when `a` names a live cell start in an in-use block.
    pub fn is_live_object(&self, a: Addr) -> bool {
        if !a.is_old() {
            return false;
        }
        let Some(blk) = self.blocks.get(a.block()) else {
            return false;
        };
        if !blk.in_use() {
            return false;
        }
        let off = a.offset();
        let cw = blk.cell_words();
        let aligned = match blk.kind {
            BlockKind::Large => off == 0,
            _ => off.is_multiple_of(cw) && off < blk.bump,
        };
        aligned && Header::decode(blk.words[off]).state != ObjectState::Free
    }

    /// Start address of the live object whose storage contains word `a`.
    pub fn containing_object(&self, a: Addr) -> Option<Addr> {
        let blk = self.blocks.get(a.block())?;
        if !blk.in_use() || a.offset() >= blk.words.len() {
            return None;
        }
        let start = match blk.kind {
            BlockKind::Large => 0,
            _ => a.offset() - a.offset() % blk.cell_words(),
        };
        let obj = Addr::old(a.block(), start);
        self.is_live_object(obj).then_some(obj)
    }

    pub fn alloc(&mut self, words: usize) -> Result<Addr, HeapLimit> {
        match class_for(words * WORD_BYTES) {
            None => self.alloc_large(words),
            Some(class) => self.alloc_small(class),
        }
    }

    fn alloc_small(&mut self, class: usize) -> Result<Addr, HeapLimit> {
        let b = match self.available[class].first() {
            Some(&b) => b,
            None => self.new_small_block(class)?,
        };
        let cw = class_bytes(class) / WORD_BYTES;
        let blk = &mut self.blocks[b];
        let off = match blk.free_cells.pop() {
            Some(off) => off,
            None => {
                let off = blk.bump;
                blk.bump += cw;
                off
            }
        };
        blk.live_cells += 1;
        if !blk.has_room() {
            self.available[class].remove(&b);
        }
        self.live_objects += 1;
        self.refresh_sparse(b);
        Ok(Addr::old(b, off))
    }

    fn take_block_index(&mut self) -> usize {
        match self.free_pool.pop_first() {
            Some(b) => b,
            None => {
                self.blocks.push(Block::empty());
                self.blocks.len() - 1
            }
        }
    }

    fn new_small_block(&mut self, class: usize) -> Result<usize, HeapLimit> {
        if (self.in_use_units + 1) * self.block_bytes() > self.max_bytes {
            return Err(HeapLimit);
        }
        let b = self.take_block_index();
        let blk = &mut self.blocks[b];
        blk.words = vec![0; self.block_words];
        blk.kind = BlockKind::Small { class };
        blk.units = 1;
        blk.bump = 0;
        blk.live_cells = 0;
        blk.free_cells.clear();
        blk.source = false;
        self.in_use_units += 1;
        self.available[class].insert(b);
        Ok(b)
    }

    fn alloc_large(&mut self, words: usize) -> Result<Addr, HeapLimit> {
        let units = words.div_ceil(self.block_words);
        if (self.in_use_units + units) * self.block_bytes() > self.max_bytes
            || units * self.block_words > MAX_BLOCK_WORDS
        {
            return Err(HeapLimit);
        }
        let b = self.take_block_index();
        let blk = &mut self.blocks[b];
        blk.words = vec![0; units * self.block_words];
        blk.kind = BlockKind::Large;
        blk.units = units;
        blk.bump = units * self.block_words;
        blk.live_cells = 1;
        blk.free_cells.clear();
        blk.source = false;
        self.in_use_units += units;
        self.live_objects += 1;
        Ok(Addr::old(b, 0))
    }

    /// Returns a cell to its block; drained blocks go back to the pool.
    pub fn free(&mut self, a: Addr) {
        let b = a.block();
        self.live_objects -= 1;
        if self.blocks[b].kind == BlockKind::Large {
            self.release_block(b);
            return;
        }
        let blk = &mut self.blocks[b];
        blk.words[a.offset()] = 0;
        blk.free_cells.push(a.offset());
        blk.live_cells -= 1;
        if blk.live_cells == 0 {
            self.release_block(b);
            return;
        }
        if !blk.source {
            if let BlockKind::Small { class } = blk.kind {
                self.available[class].insert(b);
            }
        }
        self.refresh_sparse(b);
    }

    fn release_block(&mut self, b: usize) {
        let blk = &mut self.blocks[b];
        if let BlockKind::Small { class } = blk.kind {
            self.available[class].remove(&b);
        }
        self.in_use_units -= blk.units;
        *blk = Block::empty();
        self.sparse.remove(&b);
        self.sources.remove(&b);
        self.free_pool.insert(b);
        self.blocks_freed += 1;
    }

    fn refresh_sparse(&mut self, b: usize) {
        let blk = &self.blocks[b];
        let sparse = matches!(blk.kind, BlockKind::Small { .. })
            && !blk.source
            && !blk.is_frontier()
            && blk.live_cells > 0
            && self.occupancy(b) < self.threshold;
        if sparse {
            self.sparse.insert(b);
        } else {
            self.sparse.remove(&b);
        }
    }

    /// Withdraws `b` from allocation so its objects can be moved out.
    pub fn make_source(&mut self, b: usize) {
        let blk = &mut self.blocks[b];
        blk.source = true;
        if let BlockKind::Small { class } = blk.kind {
            self.available[class].remove(&b);
        }
        self.sparse.remove(&b);
        self.sources.insert(b);
    }
}
