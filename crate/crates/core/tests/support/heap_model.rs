//! Random heap operations checked against a plain tree model.

use std::rc::Rc;

use omega_rt::memory::{Heap, HeapConfig, ObjectHandle, RootToken, TypeDescriptor, TypeId, Value, HEADER_BYTES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug)]
pub struct Model {
    pub value: u64,
    /// Leaf payload width, or `None` for an inner node.
    pub width: Option<usize>,
    pub children: Vec<Rc<Model>>,
    pub depth: u32,
}

enum Shape {
    Leaf(usize),
    Shared(usize),
    Node(Vec<Shape>),
}

const LEAF_WIDTHS: [usize; 3] = [1, 3, 7];
const MAX_DEPTH: u32 = 6;
const MAX_SHARED_DEPTH: u32 = 14;

pub struct Stress {
    pub heap: Heap,
    node: TypeId,
    leaves: [TypeId; 3],
    roots: Vec<(RootToken, Rc<Model>)>,
    rng: ChaCha8Rng,
    pub validations: u64,
    pub collections_forced: u64,
    pub max_pause: u64,
    pub max_roots: usize,
}

impl Stress {
    pub fn new(config: HeapConfig, seed: u64) -> Stress {
        let mut heap = Heap::new(config).expect("valid config");
        let node = heap.register_type(TypeDescriptor::new("node", 3, &[0, 1])).unwrap();
        let leaves = LEAF_WIDTHS.map(|w| heap.register_type(TypeDescriptor::new(format!("leaf{w}"), w, &[])).unwrap());
        Stress {
            heap,
            node,
            leaves,
            roots: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            validations: 0,
            collections_forced: 0,
            max_pause: 0,
            max_roots: 0,
        }
    }

    fn shape(&mut self, depth: u32) -> Shape {
        if depth == 0 || self.rng.gen_bool(0.35) {
            if !self.roots.is_empty() && self.rng.gen_bool(0.2) {
                let r = self.rng.gen_range(0..self.roots.len());
                if self.roots[r].1.depth < MAX_SHARED_DEPTH {
                    return Shape::Shared(r);
                }
            }
            return Shape::Leaf(self.rng.gen_range(0..LEAF_WIDTHS.len()));
        }
        let arity = self.rng.gen_range(1..=2);
        Shape::Node((0..arity).map(|_| self.shape(depth - 1)).collect())
    }

    fn bytes(shape: &Shape) -> usize {
        match shape {
            Shape::Leaf(k) => HEADER_BYTES + LEAF_WIDTHS[*k] * 8,
            Shape::Shared(_) => 0,
            Shape::Node(kids) => HEADER_BYTES + 24 + kids.iter().map(Self::bytes).sum::<usize>(),
        }
    }

    fn build(&mut self, shape: &Shape) -> Result<(ObjectHandle, Rc<Model>), String> {
        let e = |e: omega_rt::memory::HeapError| e.to_string();
        match shape {
            Shape::Leaf(k) => {
                let width = LEAF_WIDTHS[*k];
                let vals: Vec<u64> = (0..width).map(|_| self.rng.gen()).collect();
                let ints: Vec<Value> = vals.iter().map(|&v| Value::Int(v)).collect();
                let h = self.heap.alloc(self.leaves[*k], &ints).map_err(e)?;
                let value = vals.iter().fold(0u64, |a, &v| a.rotate_left(7) ^ v);
                Ok((
                    h,
                    Rc::new(Model {
                        value,
                        width: Some(width),
                        children: vec![],
                        depth: 0,
                    }),
                ))
            }
            Shape::Shared(r) => {
                let h = self.heap.root(&self.roots[*r].0).map_err(e)?;
                Ok((h, self.roots[*r].1.clone()))
            }
            Shape::Node(kids) => {
                // Built children stay rooted while their siblings allocate.
                let mut temps = Vec::new();
                let mut models = Vec::new();
                for k in kids {
                    let (h, m) = self.build(k)?;
                    temps.push(self.heap.push_root(&h).map_err(e)?);
                    models.push(m);
                }
                let mut handles = Vec::new();
                for t in &temps {
                    handles.push(Value::Ref(self.heap.root(t).map_err(e)?));
                }
                for t in temps.into_iter().rev() {
                    self.heap.pop_root(t).map_err(e)?;
                }
                handles.resize(2, Value::Nil);
                let value = self.rng.gen();
                handles.push(Value::Int(value));
                let h = self.heap.alloc(self.node, &handles).map_err(e)?;
                let depth = 1 + models.iter().map(|m| m.depth).max().unwrap_or(0);
                Ok((
                    h,
                    Rc::new(Model {
                        value,
                        width: None,
                        children: models,
                        depth,
                    }),
                ))
            }
        }
    }

    /// Allocates a random graph of depth ≤ 6, collecting first if the
    /// nursery cannot hold all of it.
    fn graph(&mut self) -> Result<(ObjectHandle, Rc<Model>), String> {
        let shape = self.shape(MAX_DEPTH);
        if self.heap.nursery_available() < Self::bytes(&shape) {
            self.collect()?;
        }
        self.build(&shape)
    }

    fn collect(&mut self) -> Result<(), String> {
        let s = self.heap.collect_minor().map_err(|e| e.to_string())?;
        self.max_pause = self.max_pause.max(s.pause_work_units);
        Ok(())
    }

    fn verify(&self, h: ObjectHandle, m: &Model) -> Result<(), String> {
        let rd = |slot| self.heap.read_field(&h, slot).map_err(|e| e.to_string());
        match m.width {
            Some(w) => {
                let mut acc = 0u64;
                for s in 0..w {
                    acc = acc.rotate_left(7) ^ rd(s)?.as_int().ok_or("leaf slot not an int")?;
                }
                if acc != m.value {
                    return Err("leaf payload differs from the model".into());
                }
            }
            None => {
                if rd(2)?.as_int() != Some(m.value) {
                    return Err("node value differs from the model".into());
                }
                for (i, c) in m.children.iter().enumerate() {
                    let child = rd(i)?.as_ref().ok_or("missing child")?;
                    self.verify(child, c)?;
                }
                if m.children.len() < 2 && rd(1)?.as_ref().is_some() {
                    return Err("unexpected child".into());
                }
            }
        }
        Ok(())
    }

    pub fn verify_all(&mut self) -> Result<(), String> {
        let v = self.heap.validate_heap();
        if !v.is_ok() {
            return Err(format!("validate_heap: {:?}", &v.violations[..v.violations.len().min(3)]));
        }
        self.validations += 1;
        for (t, m) in &self.roots {
            let h = self.heap.root(t).map_err(|e| e.to_string())?;
            self.verify(h, m)?;
        }
        Ok(())
    }

    pub fn step(&mut self) -> Result<(), String> {
        match self.rng.gen_range(0..100) {
            0..=44 => {
                let (h, m) = self.graph()?;
                match self.rng.gen_range(0..4) {
                    0 | 1 => {
                        let t = self.heap.push_root(&h).map_err(|e| e.to_string())?;
                        self.roots.push((t, m));
                        self.max_roots = self.max_roots.max(self.roots.len());
                    }
                    2 if !self.roots.is_empty() => {
                        let r = self.rng.gen_range(0..self.roots.len());
                        self.heap.set_root(&self.roots[r].0, &h).map_err(|e| e.to_string())?;
                        self.roots[r].1 = m;
                    }
                    _ => {}
                }
            }
            45..=61 => {
                if let Some((t, _)) = self.roots.pop() {
                    self.heap.pop_root(t).map_err(|e| e.to_string())?;
                }
            }
            62..=67 => {
                self.collect()?;
                self.collections_forced += 1;
            }
            68..=70 => {
                let budget = self.rng.gen_range(0..512);
                self.heap.defrag_step(budget);
            }
            _ => {
                if !self.roots.is_empty() {
                    let r = self.rng.gen_range(0..self.roots.len());
                    let h = self.heap.root(&self.roots[r].0).map_err(|e| e.to_string())?;
                    self.verify(h, &self.roots[r].1)?;
                }
            }
        }
        Ok(())
    }
}

/// `ops` random operations with a full check every `every`.
pub fn run(config: HeapConfig, seed: u64, ops: usize, every: usize) -> Result<Stress, String> {
    let mut s = Stress::new(config, seed);
    for i in 1..=ops {
        s.step().map_err(|e| format!("op {i}: {e}"))?;
        if i % every == 0 {
            s.verify_all().map_err(|e| format!("after op {i}: {e}"))?;
        }
    }
    Ok(s)
}
