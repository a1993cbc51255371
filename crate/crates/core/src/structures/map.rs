//! Persistent AVL map.
//!
//! Nodes cache the heights of both children, so balance decisions never
//! read a sibling subtree; only an actual rotation does. Node visits count
//! reads of nodes that existed before the operation.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use super::StepCounter;

/// Total order on keys supplied at construction.
pub trait KeyOrder<K> {
    fn compare(&self, a: &K, b: &K) -> Ordering;
}

/// The key type's own `Ord`.
#[derive(Debug, Clone, Copy, Default)]
pub struct NaturalOrder;

impl<K: Ord> KeyOrder<K> for NaturalOrder {
    fn compare(&self, a: &K, b: &K) -> Ordering {
        a.cmp(b)
    }
}

/// A comparison closure.
#[derive(Clone, Copy)]
pub struct FnOrder<F>(pub F);

impl<K, F: Fn(&K, &K) -> Ordering> KeyOrder<K> for FnOrder<F> {
    fn compare(&self, a: &K, b: &K) -> Ordering {
        (self.0)(a, b)
    }
}

type Link<K, V> = Option<Arc<Node<K, V>>>;

struct Node<K, V> {
    key: K,
    value: V,
    lh: u8,
    rh: u8,
    left: Link<K, V>,
    right: Link<K, V>,
}

impl<K, V> Node<K, V> {
    fn height(&self) -> u8 {
        1 + self.lh.max(self.rh)
    }
}

fn height<K, V>(link: &Link<K, V>) -> u8 {
    link.as_ref().map_or(0, |n| n.height())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

pub struct OrderedMap<K, V, O = NaturalOrder> {
    root: Link<K, V>,
    len: usize,
    order: O,
}

impl<K, V, O: Clone> Clone for OrderedMap<K, V, O> {
    fn clone(&self) -> Self {
        OrderedMap {
            root: self.root.clone(),
            len: self.len,
            order: self.order.clone(),
        }
    }
}

impl<K: Ord + Clone, V: Clone> OrderedMap<K, V, NaturalOrder> {
    pub fn new() -> Self {
        Self::with_order(NaturalOrder)
    }
}

impl<K: Ord + Clone, V: Clone> Default for OrderedMap<K, V, NaturalOrder> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K: Clone, V: Clone, O: KeyOrder<K> + Clone> OrderedMap<K, V, O> {
    pub fn with_order(order: O) -> Self {
        OrderedMap {
            root: None,
            len: 0,
            order,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn height(&self) -> usize {
        height(&self.root) as usize
    }

    pub fn find(&self, key: &K) -> Option<&V> {
        self.find_counted(key, &mut StepCounter::default())
    }

    pub fn find_counted(&self, key: &K, steps: &mut StepCounter) -> Option<&V> {
        let mut cur = self.root.as_deref();
        while let Some(n) = cur {
            steps.node_visits += 1;
            steps.comparisons += 1;
            cur = match self.order.compare(key, &n.key) {
                Ordering::Less => n.left.as_deref(),
                Ordering::Greater => n.right.as_deref(),
                Ordering::Equal => return Some(&n.value),
            };
        }
        None
    }

    pub fn contains_key(&self, key: &K) -> bool {
        self.find(key).is_some()
    }

    /// Inserts or replaces; the receiver is unchanged.
    pub fn insert(&self, key: K, value: V) -> Self {
        self.insert_counted(key, value, &mut StepCounter::default())
    }

    pub fn insert_counted(&self, key: K, value: V, steps: &mut StepCounter) -> Self {
        let mut added = false;
        let root = self.ins(&self.root, key, value, &mut added, steps);
        OrderedMap {
            root: Some(root),
            len: self.len + added as usize,
            order: self.order.clone(),
        }
    }

    /// Removes `key` if present; the receiver is unchanged.
    pub fn remove(&self, key: &K) -> Self {
        self.remove_counted(key, &mut StepCounter::default())
    }

    pub fn remove_counted(&self, key: &K, steps: &mut StepCounter) -> Self {
        let mut removed = false;
        let root = self.del(&self.root, key, &mut removed, steps);
        if !removed {
            return self.clone();
        }
        OrderedMap {
            root,
            len: self.len - 1,
            order: self.order.clone(),
        }
    }

    /// Entries in strictly ascending key order.
    pub fn iter(&self) -> Iter<'_, K, V> {
        let mut it = Iter { stack: Vec::new() };
        it.descend(self.root.as_deref());
        it
    }

    pub fn enumerate(&self) -> Vec<(K, V)> {
        self.iter().map(|(k, v)| (k.clone(), v.clone())).collect()
    }

    pub fn keys(&self) -> Vec<K> {
        self.iter().map(|(k, _)| k.clone()).collect()
    }

    fn ins(
        &self,
        link: &Link<K, V>,
        key: K,
        value: V,
        added: &mut bool,
        steps: &mut StepCounter,
    ) -> Arc<Node<K, V>> {
        let Some(n) = link else {
            *added = true;
            return Arc::new(Node {
                key,
                value,
                lh: 0,
                rh: 0,
                left: None,
                right: None,
            });
        };
        steps.node_visits += 1;
        steps.comparisons += 1;
        match self.order.compare(&key, &n.key) {
            Ordering::Equal => Arc::new(Node {
                key,
                value,
                lh: n.lh,
                rh: n.rh,
                left: n.left.clone(),
                right: n.right.clone(),
            }),
            Ordering::Less => {
                let l = self.ins(&n.left, key, value, added, steps);
                balance(
                    n.key.clone(),
                    n.value.clone(),
                    Some(l),
                    n.right.clone(),
                    Side::Left,
                    steps,
                )
            }
            Ordering::Greater => {
                let r = self.ins(&n.right, key, value, added, steps);
                balance(
                    n.key.clone(),
                    n.value.clone(),
                    n.left.clone(),
                    Some(r),
                    Side::Right,
                    steps,
                )
            }
        }
    }

    fn del(
        &self,
        link: &Link<K, V>,
        key: &K,
        removed: &mut bool,
        steps: &mut StepCounter,
    ) -> Link<K, V> {
        let n = link.as_ref()?;
        steps.node_visits += 1;
        steps.comparisons += 1;
        match self.order.compare(key, &n.key) {
            Ordering::Less => {
                let l = self.del(&n.left, key, removed, steps);
                if !*removed {
                    return Some(n.clone());
                }
                Some(balance(
                    n.key.clone(),
                    n.value.clone(),
                    l,
                    n.right.clone(),
                    Side::Left,
                    steps,
                ))
            }
            Ordering::Greater => {
                let r = self.del(&n.right, key, removed, steps);
                if !*removed {
                    return Some(n.clone());
                }
                Some(balance(
                    n.key.clone(),
                    n.value.clone(),
                    n.left.clone(),
                    r,
                    Side::Right,
                    steps,
                ))
            }
            Ordering::Equal => {
                *removed = true;
                match (&n.left, &n.right) {
                    (None, r) => r.clone(),
                    (l, None) => l.clone(),
                    (l, Some(r)) => {
                        let (rest, k, v) = take_min(r, steps);
                        Some(balance(k, v, l.clone(), rest, Side::Right, steps))
                    }
                }
            }
        }
    }
}

/// Removes the leftmost node of a subtree, returning it.
fn take_min<K: Clone, V: Clone>(n: &Arc<Node<K, V>>, steps: &mut StepCounter) -> (Link<K, V>, K, V) {
    steps.node_visits += 1;
    match &n.left {
        None => (n.right.clone(), n.key.clone(), n.value.clone()),
        Some(l) => {
            let (rest, k, v) = take_min(l, steps);
            let node = balance(
                n.key.clone(),
                n.value.clone(),
                rest,
                n.right.clone(),
                Side::Left,
                steps,
            );
            (Some(node), k, v)
        }
    }
}

fn make<K, V>(key: K, value: V, left: Link<K, V>, right: Link<K, V>) -> Arc<Node<K, V>> {
    Arc::new(Node {
        key,
        value,
        lh: height(&left),
        rh: height(&right),
        left,
        right,
    })
}

/// Rebuilds a node and restores the height invariant with at most one
/// single or double rotation. `fresh` names the child rebuilt by this
/// operation; reading the other child is a visit.
fn balance<K: Clone, V: Clone>(
    key: K,
    value: V,
    left: Link<K, V>,
    right: Link<K, V>,
    fresh: Side,
    steps: &mut StepCounter,
) -> Arc<Node<K, V>> {
    let (lh, rh) = (height(&left), height(&right));
    if lh > rh + 1 {
        let l = left.expect("taller side is non-empty");
        if fresh != Side::Left {
            steps.node_visits += 1;
        }
        if l.lh >= l.rh {
            let new_right = make(key, value, l.right.clone(), right);
            make(l.key.clone(), l.value.clone(), l.left.clone(), Some(new_right))
        } else {
            let lr = l.right.as_ref().expect("inner grandchild is non-empty");
            if fresh != Side::Left {
                steps.node_visits += 1;
            }
            let new_left = make(l.key.clone(), l.value.clone(), l.left.clone(), lr.left.clone());
            let new_right = make(key, value, lr.right.clone(), right);
            make(lr.key.clone(), lr.value.clone(), Some(new_left), Some(new_right))
        }
    } else if rh > lh + 1 {
        let r = right.expect("taller side is non-empty");
        if fresh != Side::Right {
            steps.node_visits += 1;
        }
        if r.rh >= r.lh {
            let new_left = make(key, value, left, r.left.clone());
            make(r.key.clone(), r.value.clone(), Some(new_left), r.right.clone())
        } else {
            let rl = r.left.as_ref().expect("inner grandchild is non-empty");
            if fresh != Side::Right {
                steps.node_visits += 1;
            }
            let new_left = make(key, value, left, rl.left.clone());
            let new_right = make(r.key.clone(), r.value.clone(), rl.right.clone(), r.right.clone());
            make(rl.key.clone(), rl.value.clone(), Some(new_left), Some(new_right))
        }
    } else {
        make(key, value, left, right)
    }
}

/// In-order iterator with an explicit stack of at most `height` entries.
pub struct Iter<'a, K, V> {
    stack: Vec<&'a Node<K, V>>,
}

impl<'a, K, V> Iter<'a, K, V> {
    fn descend(&mut self, mut cur: Option<&'a Node<K, V>>) {
        while let Some(n) = cur {
            self.stack.push(n);
            cur = n.left.as_deref();
        }
    }
}

impl<'a, K, V> Iterator for Iter<'a, K, V> {
    type Item = (&'a K, &'a V);

    fn next(&mut self) -> Option<Self::Item> {
        let n = self.stack.pop()?;
        self.descend(n.right.as_deref());
        Some((&n.key, &n.value))
    }
}

impl<K: Clone + fmt::Debug, V: Clone + fmt::Debug, O: KeyOrder<K> + Clone> fmt::Debug
    for OrderedMap<K, V, O>
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.iter()).finish()
    }
}

impl<K: Ord + Clone, V: Clone> FromIterator<(K, V)> for OrderedMap<K, V, NaturalOrder> {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        iter.into_iter()
            .fold(OrderedMap::new(), |m, (k, v)| m.insert(k, v))
    }
}

/// `2 · 1.45 · log2(n + 2)`, the per-operation node-visit bound.
pub fn visit_bound(n: usize) -> f64 {
    2.0 * 1.45 * ((n + 2) as f64).log2()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_balanced<K, V>(link: &Link<K, V>) -> u8 {
        match link {
            None => 0,
            Some(n) => {
                let l = check_balanced(&n.left);
                let r = check_balanced(&n.right);
                assert_eq!((l, r), (n.lh, n.rh), "cached heights");
                assert!(l.abs_diff(r) <= 1, "balance");
                1 + l.max(r)
            }
        }
    }

    #[test]
    fn enumerates_in_key_order() {
        let m: OrderedMap<u32, &str> = [(3, "c"), (1, "a"), (2, "b")].into_iter().collect();
        assert_eq!(m.keys(), vec![1, 2, 3]);
    }

    #[test]
    fn insert_existing_replaces() {
        let m = OrderedMap::new().insert(5, 1).insert(5, 2);
        assert_eq!(m.len(), 1);
        assert_eq!(m.find(&5), Some(&2));
    }

    #[test]
    fn remove_absent_is_noop() {
        let m = OrderedMap::new().insert(1, ()).remove(&2);
        assert_eq!(m.len(), 1);
        assert_eq!(m.find(&2), None);
    }

    #[test]
    fn old_versions_are_unchanged() {
        let a: OrderedMap<u32, u32> = (0..100).map(|i| (i, i)).collect();
        let b = a.remove(&50).insert(7, 700);
        assert_eq!(a.find(&50), Some(&50));
        assert_eq!(a.find(&7), Some(&7));
        assert_eq!(b.find(&50), None);
        assert_eq!(b.find(&7), Some(&700));
    }

    #[test]
    fn custom_order() {
        let m = OrderedMap::with_order(FnOrder(|a: &i32, b: &i32| b.cmp(a)))
            .insert(1, ())
            .insert(3, ())
            .insert(2, ());
        assert_eq!(m.keys(), vec![3, 2, 1]);
    }

    #[test]
    fn sequential_inserts_stay_balanced_and_bounded() {
        let mut m = OrderedMap::new();
        for i in 0..5000u32 {
            let mut steps = StepCounter::default();
            m = m.insert_counted(i, i, &mut steps);
            assert!(steps.node_visits as f64 <= visit_bound(m.len()));
        }
        check_balanced(&m.root);
        assert!(m.height() as f64 <= 1.45 * ((m.len() + 2) as f64).log2());
        for i in (0..5000u32).step_by(3) {
            let mut steps = StepCounter::default();
            let before = m.height();
            m = m.remove_counted(&i, &mut steps);
            assert!(steps.node_visits as usize <= 2 * before, "{steps:?} height {before}");
        }
        check_balanced(&m.root);
    }

    /// Minimal AVL trees of height h: deleting from them triggers a
    /// rotation at every level on the way back up.
    fn fibonacci_tree(h: u32, next: &mut u32) -> OrderedMap<u32, ()> {
        fn build(h: u32, next: &mut u32) -> Link<u32, ()> {
            if h == 0 {
                return None;
            }
            let left = if h >= 2 { build(h - 2, next) } else { None };
            let key = *next;
            *next += 1;
            let right = build(h - 1, next);
            Some(make(key, (), left, right))
        }
        let root = build(h, next);
        let mut len = 0;
        let mut m = OrderedMap {
            root,
            len: 0,
            order: NaturalOrder,
        };
        len += m.iter().count();
        m.len = len;
        m
    }

    #[test]
    fn fibonacci_tree_deletions_respect_the_bound() {
        for h in 2..=16 {
            let mut next = 0;
            let m = fibonacci_tree(h, &mut next);
            check_balanced(&m.root);
            for k in 0..next {
                let mut steps = StepCounter::default();
                let after = m.remove_counted(&k, &mut steps);
                check_balanced(&after.root);
                assert!(
                    steps.node_visits as usize <= 2 * m.height(),
                    "h={h} key={k} visits={}",
                    steps.node_visits
                );
            }
        }
    }
}
