//! Complete DFAs over {a, b}: Thompson fragments, subset construction,
//! complement and product.

use std::collections::{BTreeSet, HashMap};

use super::regex_gen::Re;

pub const SIGMA: [char; 2] = ['a', 'b'];

#[derive(Debug, Clone)]
pub struct Dfa {
    pub trans: Vec<[usize; 2]>,
    pub accept: Vec<bool>,
    pub start: usize,
}

impl Dfa {
    pub fn accepts(&self, s: &str) -> bool {
        let mut q = self.start;
        for c in s.chars() {
            let x = SIGMA.iter().position(|&a| a == c).expect("input over {a, b}");
            q = self.trans[q][x];
        }
        self.accept[q]
    }

    fn complement(mut self) -> Dfa {
        self.accept.iter_mut().for_each(|a| *a = !*a);
        self
    }

    fn product(&self, other: &Dfa, both: bool) -> Dfa {
        let mut index = HashMap::new();
        let mut pairs = vec![(self.start, other.start)];
        index.insert(pairs[0], 0);
        let mut trans = Vec::new();
        let mut accept = Vec::new();
        let mut i = 0;
        while i < pairs.len() {
            let (p, q) = pairs[i];
            let mut row = [0; 2];
            for (x, slot) in row.iter_mut().enumerate() {
                let next = (self.trans[p][x], other.trans[q][x]);
                let len = pairs.len();
                *slot = *index.entry(next).or_insert_with(|| {
                    pairs.push(next);
                    len
                });
            }
            trans.push(row);
            accept.push(if both {
                self.accept[p] && other.accept[q]
            } else {
                self.accept[p] || other.accept[q]
            });
            i += 1;
        }
        Dfa { trans, accept, start: 0 }
    }
}

#[derive(Default)]
struct Nfa {
    eps: Vec<Vec<usize>>,
    sym: Vec<Vec<(usize, usize)>>,
}

impl Nfa {
    fn state(&mut self) -> usize {
        self.eps.push(Vec::new());
        self.sym.push(Vec::new());
        self.eps.len() - 1
    }

    fn frag(&mut self, re: &Re) -> (usize, usize) {
        let s = self.state();
        let e = self.state();
        match re {
            Re::Lit(_) | Re::Any | Re::Class(..) => {
                for (x, &c) in SIGMA.iter().enumerate() {
                    if re.matches_char(c) {
                        self.sym[s].push((x, e));
                    }
                }
            }
            Re::Cat(items) => {
                let mut at = s;
                for item in items {
                    let (a, b) = self.frag(item);
                    self.eps[at].push(a);
                    at = b;
                }
                self.eps[at].push(e);
            }
            Re::Alt(arms) => {
                for arm in arms {
                    let (a, b) = self.frag(arm);
                    self.eps[s].push(a);
                    self.eps[b].push(e);
                }
            }
            Re::Star(inner) | Re::Plus(inner) | Re::Opt(inner) => {
                let (a, b) = self.frag(inner);
                self.eps[s].push(a);
                self.eps[b].push(e);
                if !matches!(re, Re::Plus(_)) {
                    self.eps[s].push(e);
                }
                if !matches!(re, Re::Opt(_)) {
                    self.eps[b].push(a);
                }
            }
            Re::Rep(inner, m, n) => {
                let mut at = s;
                for i in 0..*n {
                    let (a, b) = self.frag(inner);
                    self.eps[at].push(a);
                    if i >= *m {
                        self.eps[at].push(e);
                    }
                    at = b;
                }
                self.eps[at].push(e);
            }
            Re::Neg(_) | Re::And(..) => {
                let d = to_dfa(re);
                let base = self.eps.len();
                for _ in 0..d.trans.len() {
                    self.state();
                }
                for (q, row) in d.trans.iter().enumerate() {
                    for (x, &t) in row.iter().enumerate() {
                        self.sym[base + q].push((x, base + t));
                    }
                    if d.accept[q] {
                        self.eps[base + q].push(e);
                    }
                }
                self.eps[s].push(base + d.start);
            }
        }
        (s, e)
    }

    fn closure(&self, set: &mut BTreeSet<usize>) {
        let mut stack: Vec<usize> = set.iter().copied().collect();
        while let Some(q) = stack.pop() {
            for &t in &self.eps[q] {
                if set.insert(t) {
                    stack.push(t);
                }
            }
        }
    }

    fn determinize(&self, start: usize, accept: usize) -> Dfa {
        let mut first = BTreeSet::from([start]);
        self.closure(&mut first);
        let mut index = HashMap::new();
        let mut sets = vec![first.clone()];
        index.insert(first, 0);
        let mut trans = Vec::new();
        let mut acc = Vec::new();
        let mut i = 0;
        while i < sets.len() {
            let cur = sets[i].clone();
            let mut row = [0; 2];
            for (x, slot) in row.iter_mut().enumerate() {
                let mut next = BTreeSet::new();
                for &q in &cur {
                    for &(y, t) in &self.sym[q] {
                        if y == x {
                            next.insert(t);
                        }
                    }
                }
                self.closure(&mut next);
                let len = sets.len();
                *slot = *index.entry(next.clone()).or_insert_with(|| {
                    sets.push(next);
                    len
                });
            }
            trans.push(row);
            acc.push(cur.contains(&accept));
            i += 1;
        }
        Dfa {
            trans,
            accept: acc,
            start: 0,
        }
    }
}

/// Language of `re` restricted to strings over {a, b}.
pub fn to_dfa(re: &Re) -> Dfa {
    match re {
        Re::Neg(e) => to_dfa(e).complement(),
        Re::And(a, b) => to_dfa(a).product(&to_dfa(b), true),
        _ => {
            let mut nfa = Nfa::default();
            let (s, e) = nfa.frag(re);
            nfa.determinize(s, e)
        }
    }
}

/// Union, for tests of the oracle itself.
pub fn union(a: &Dfa, b: &Dfa) -> Dfa {
    a.product(b, false)
}
