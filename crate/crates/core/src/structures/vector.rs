//! 32-way bit-partitioned persistent vector.
//!
//! No tail buffer: every push, pop, get and set walks one root-to-leaf path
//! and copies at most one node per level.

use std::fmt;
use std::sync::Arc;

use super::{StepCounter, StructureError};

const BITS: usize = 5;
const WIDTH: usize = 1 << BITS;
const MASK: usize = WIDTH - 1;

enum Node<T> {
    Branch(Vec<Arc<Node<T>>>),
    Leaf(Vec<T>),
}

pub struct PersistentVector<T> {
    root: Option<Arc<Node<T>>>,
    /// Interior levels above the leaves.
    levels: usize,
    len: usize,
}

impl<T> Clone for PersistentVector<T> {
    fn clone(&self) -> Self {
        PersistentVector {
            root: self.root.clone(),
            levels: self.levels,
            len: self.len,
        }
    }
}

impl<T> Default for PersistentVector<T> {
    fn default() -> Self {
        PersistentVector {
            root: None,
            levels: 0,
            len: 0,
        }
    }
}

impl<T: Clone> PersistentVector<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Root-to-leaf path length in nodes.
    pub fn depth(&self) -> usize {
        if self.root.is_some() {
            self.levels + 1
        } else {
            0
        }
    }

    pub fn get(&self, index: usize) -> Result<&T, StructureError> {
        self.get_counted(index, &mut StepCounter::default())
    }

    pub fn get_counted(&self, index: usize, steps: &mut StepCounter) -> Result<&T, StructureError> {
        if index >= self.len {
            return Err(StructureError::IndexOutOfBounds {
                index,
                len: self.len,
            });
        }
        let mut node = self.root.as_deref().expect("non-empty vector has a root");
        let mut level = self.levels;
        loop {
            steps.node_visits += 1;
            match node {
                Node::Branch(children) => {
                    node = &children[(index >> (level * BITS)) & MASK];
                    level -= 1;
                }
                Node::Leaf(items) => return Ok(&items[index & MASK]),
            }
        }
    }

    pub fn push(&self, value: T) -> Self {
        self.push_counted(value, &mut StepCounter::default())
    }

    pub fn push_counted(&self, value: T, steps: &mut StepCounter) -> Self {
        let Some(root) = &self.root else {
            return PersistentVector {
                root: Some(Arc::new(Node::Leaf(vec![value]))),
                levels: 0,
                len: 1,
            };
        };
        let capacity = 1usize << ((self.levels + 1) * BITS);
        if self.len == capacity {
            let grown = Node::Branch(vec![root.clone(), fresh_path(self.levels, value)]);
            return PersistentVector {
                root: Some(Arc::new(grown)),
                levels: self.levels + 1,
                len: self.len + 1,
            };
        }
        PersistentVector {
            root: Some(push_path(root, self.levels, self.len, value, steps)),
            levels: self.levels,
            len: self.len + 1,
        }
    }

    pub fn pop(&self) -> Result<(Self, T), StructureError> {
        self.pop_counted(&mut StepCounter::default())
    }

    pub fn pop_counted(&self, steps: &mut StepCounter) -> Result<(Self, T), StructureError> {
        let Some(root) = &self.root else {
            return Err(StructureError::PopEmpty);
        };
        let (rest, value) = pop_path(root, self.levels, self.len - 1, steps);
        let mut out = PersistentVector {
            root: rest,
            levels: self.levels,
            len: self.len - 1,
        };
        // Collapse a root left with a single child.
        while out.levels > 0 {
            let only = match out.root.as_deref() {
                Some(Node::Branch(children)) if children.len() == 1 => children[0].clone(),
                _ => break,
            };
            out.root = Some(only);
            out.levels -= 1;
        }
        Ok((out, value))
    }

    pub fn set(&self, index: usize, value: T) -> Result<Self, StructureError> {
        self.set_counted(index, value, &mut StepCounter::default())
    }

    pub fn set_counted(
        &self,
        index: usize,
        value: T,
        steps: &mut StepCounter,
    ) -> Result<Self, StructureError> {
        if index >= self.len {
            return Err(StructureError::IndexOutOfBounds {
                index,
                len: self.len,
            });
        }
        let root = self.root.as_ref().expect("non-empty vector has a root");
        Ok(PersistentVector {
            root: Some(set_path(root, self.levels, index, value, steps)),
            levels: self.levels,
            len: self.len,
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> + '_ {
        let mut stack: Vec<(&Node<T>, usize)> = self.root.as_deref().map(|r| (r, 0)).into_iter().collect();
        std::iter::from_fn(move || loop {
            let (node, i) = stack.last_mut()?;
            match node {
                Node::Leaf(items) => {
                    if *i < items.len() {
                        *i += 1;
                        return Some(&items[*i - 1]);
                    }
                    stack.pop();
                }
                Node::Branch(children) => {
                    if *i < children.len() {
                        *i += 1;
                        let child: &Node<T> = &children[*i - 1];
                        stack.push((child, 0));
                    } else {
                        stack.pop();
                    }
                }
            }
        })
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.iter().cloned().collect()
    }
}

fn fresh_path<T>(levels: usize, value: T) -> Arc<Node<T>> {
    let mut node = Arc::new(Node::Leaf(vec![value]));
    for _ in 0..levels {
        node = Arc::new(Node::Branch(vec![node]));
    }
    node
}

fn push_path<T: Clone>(
    node: &Arc<Node<T>>,
    level: usize,
    index: usize,
    value: T,
    steps: &mut StepCounter,
) -> Arc<Node<T>> {
    steps.node_visits += 1;
    match node.as_ref() {
        Node::Leaf(items) => {
            let mut items = items.clone();
            items.push(value);
            Arc::new(Node::Leaf(items))
        }
        Node::Branch(children) => {
            let slot = (index >> (level * BITS)) & MASK;
            let mut children = children.clone();
            if slot < children.len() {
                children[slot] = push_path(&children[slot], level - 1, index, value, steps);
            } else {
                children.push(fresh_path(level - 1, value));
            }
            Arc::new(Node::Branch(children))
        }
    }
}

fn pop_path<T: Clone>(
    node: &Arc<Node<T>>,
    level: usize,
    index: usize,
    steps: &mut StepCounter,
) -> (Option<Arc<Node<T>>>, T) {
    steps.node_visits += 1;
    match node.as_ref() {
        Node::Leaf(items) => {
            let mut items = items.clone();
            let value = items.pop().expect("leaf on the pop path is non-empty");
            let rest = (!items.is_empty()).then(|| Arc::new(Node::Leaf(items)));
            (rest, value)
        }
        Node::Branch(children) => {
            let slot = (index >> (level * BITS)) & MASK;
            let (child, value) = pop_path(&children[slot], level - 1, index, steps);
            let mut children = children.clone();
            match child {
                Some(c) => children[slot] = c,
                None => {
                    children.pop();
                }
            }
            let rest = (!children.is_empty()).then(|| Arc::new(Node::Branch(children)));
            (rest, value)
        }
    }
}

fn set_path<T: Clone>(
    node: &Arc<Node<T>>,
    level: usize,
    index: usize,
    value: T,
    steps: &mut StepCounter,
) -> Arc<Node<T>> {
    steps.node_visits += 1;
    match node.as_ref() {
        Node::Leaf(items) => {
            let mut items = items.clone();
            items[index & MASK] = value;
            Arc::new(Node::Leaf(items))
        }
        Node::Branch(children) => {
            let slot = (index >> (level * BITS)) & MASK;
            let mut children = children.clone();
            children[slot] = set_path(&children[slot], level - 1, index, value, steps);
            Arc::new(Node::Branch(children))
        }
    }
}

impl<T: Clone> FromIterator<T> for PersistentVector<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        iter.into_iter().fold(PersistentVector::new(), |v, x| v.push(x))
    }
}

impl<T: Clone + fmt::Debug> fmt::Debug for PersistentVector<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.iter()).finish()
    }
}

impl<T: Clone + PartialEq> PartialEq for PersistentVector<T> {
    fn eq(&self, other: &Self) -> bool {
        self.len == other.len && self.iter().eq(other.iter())
    }
}

/// `ceil(log32 n) + 1`, the per-operation node-visit bound.
pub fn visit_bound(n: usize) -> u64 {
    let mut levels = 0;
    let mut cap = 1usize;
    while cap < n {
        cap <<= BITS;
        levels += 1;
    }
    levels + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_then_get() {
        let v: PersistentVector<u32> = (0..100).collect();
        assert_eq!(v.len(), 100);
        assert_eq!(*v.get(50).unwrap(), 50);
        assert_eq!(
            v.get(100),
            Err(StructureError::IndexOutOfBounds { index: 100, len: 100 })
        );
    }

    #[test]
    fn get_on_a_million_visits_five_nodes() {
        let v: PersistentVector<u32> = (0..1_000_000).collect();
        assert_eq!(visit_bound(1_000_000), 5);
        for i in [0, 1, 31, 32, 1023, 1024, 999_999, 524_288] {
            let mut steps = StepCounter::default();
            assert_eq!(*v.get_counted(i, &mut steps).unwrap(), i as u32);
            assert!(steps.node_visits <= 5, "{i}: {steps:?}");
        }
    }

    #[test]
    fn set_is_persistent() {
        let v: PersistentVector<u32> = (0..1000).collect();
        let w = v.set(500, 7).unwrap();
        assert_eq!(*v.get(500).unwrap(), 500);
        assert_eq!(*w.get(500).unwrap(), 7);
        assert_eq!(v.to_vec(), (0..1000).collect::<Vec<_>>());
    }

    #[test]
    fn pop_shrinks_levels() {
        let mut v: PersistentVector<u32> = (0..1025).collect();
        assert_eq!(v.depth(), 3);
        let (w, x) = v.pop().unwrap();
        assert_eq!(x, 1024);
        assert_eq!(w.depth(), 2);
        v = w;
        for expect in (0..1024).rev() {
            let (w, x) = v.pop().unwrap();
            assert_eq!(x, expect);
            v = w;
        }
        assert!(v.is_empty());
        assert_eq!(v.pop().unwrap_err(), StructureError::PopEmpty);
    }

    #[test]
    fn visit_bounds() {
        assert_eq!(visit_bound(1), 1);
        assert_eq!(visit_bound(32), 2);
        assert_eq!(visit_bound(33), 3);
        assert_eq!(visit_bound(1024), 3);
    }
}
