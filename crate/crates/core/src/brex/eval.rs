//! Span-table evaluation for higher strata.
//!
//! Every higher-stratum subpattern is answered for all spans `(i, j)` of the
//! input at once, as an upper-triangular bit matrix. Each table is computed
//! once per evaluation; operators combine their operands' tables.

use super::ast::{Ast, Node};
use super::nfa::NfaProgram;

/// Compiled operator skeleton. Maximal stratum-0 subtrees become programs.
#[derive(Debug, Clone)]
pub enum Plan {
    Program(NfaProgram),
    Concat(Vec<Plan>),
    Alt(Vec<Plan>),
    Star(Box<Plan>),
    Plus(Box<Plan>),
    Opt(Box<Plan>),
    Repeat(Box<Plan>, u32, u32),
    Conj(Box<Plan>, Box<Plan>),
    Neg(Box<Plan>),
    LookAhead(Box<Plan>, bool),
    LookBehind(Box<Plan>, bool),
}

impl Plan {
    pub fn compile(ast: &Ast) -> Plan {
        if ast.stratum == 0 {
            return Plan::Program(NfaProgram::compile(ast));
        }
        let b = |e: &Ast| Box::new(Plan::compile(e));
        match &ast.node {
            Node::Concat(items) => Plan::Concat(items.iter().map(Plan::compile).collect()),
            Node::Alt(arms) => Plan::Alt(arms.iter().map(Plan::compile).collect()),
            Node::Star(e) => Plan::Star(b(e)),
            Node::Plus(e) => Plan::Plus(b(e)),
            Node::Opt(e) => Plan::Opt(b(e)),
            Node::Repeat(e, m, n) => Plan::Repeat(b(e), *m, *n),
            Node::Conj(l, r) => Plan::Conj(b(l), b(r)),
            Node::Neg(e) => Plan::Neg(b(e)),
            Node::LookAhead(e, positive) => Plan::LookAhead(b(e), *positive),
            Node::LookBehind(e, positive) => Plan::LookBehind(b(e), *positive),
            Node::Empty | Node::Literal(_) | Node::Class(_) => {
                unreachable!("leaf nodes are stratum 0")
            }
        }
    }

    pub fn programs(&self) -> Vec<&NfaProgram> {
        let mut out = Vec::new();
        self.collect_programs(&mut out);
        out
    }

    fn collect_programs<'a>(&'a self, out: &mut Vec<&'a NfaProgram>) {
        match self {
            Plan::Program(p) => out.push(p),
            Plan::Concat(v) | Plan::Alt(v) => v.iter().for_each(|p| p.collect_programs(out)),
            Plan::Star(e)
            | Plan::Plus(e)
            | Plan::Opt(e)
            | Plan::Repeat(e, _, _)
            | Plan::Neg(e)
            | Plan::LookAhead(e, _)
            | Plan::LookBehind(e, _) => e.collect_programs(out),
            Plan::Conj(a, b) => {
                a.collect_programs(out);
                b.collect_programs(out);
            }
        }
    }
}

/// Membership of every span `(i, j)`, `i <= j <= n`.
#[derive(Clone, PartialEq, Eq)]
pub struct SpanTable {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl SpanTable {
    pub fn empty(n: usize) -> Self {
        let words = (n + 1).div_ceil(64);
        SpanTable {
            n,
            words,
            bits: vec![0; (n + 1) * words],
        }
    }

    fn identity(n: usize) -> Self {
        let mut t = SpanTable::empty(n);
        for i in 0..=n {
            t.set(i, i);
        }
        t
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.bits[i * self.words..(i + 1) * self.words]
    }

    /// Largest `j` with `(i, j)` in the table.
    pub fn last_in_row(&self, i: usize) -> Option<usize> {
        let row = self.row(i);
        (0..self.words)
            .rev()
            .find(|&w| row[w] != 0)
            .map(|w| w * 64 + 63 - row[w].leading_zeros() as usize)
    }

    fn zip(&self, other: &SpanTable, f: impl Fn(u64, u64) -> u64, steps: &mut u64) -> SpanTable {
        *steps += self.bits.len() as u64;
        SpanTable {
            n: self.n,
            words: self.words,
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Relational composition: `(i, j)` iff some `k` has `(i, k)` here and
    /// `(k, j)` in `other`.
    fn compose(&self, other: &SpanTable, steps: &mut u64) -> SpanTable {
        let mut out = SpanTable::empty(self.n);
        for i in 0..=self.n {
            for k in i..=self.n {
                *steps += 1;
                if self.get(i, k) {
                    *steps += self.words as u64;
                    let src = other.row(k).to_vec();
                    for (d, s) in out.row_mut(i).iter_mut().zip(src) {
                        *d |= s;
                    }
                }
            }
        }
        out
    }

    /// Reflexive-transitive closure over non-empty spans.
    fn closure(&self, steps: &mut u64) -> SpanTable {
        let mut out = SpanTable::identity(self.n);
        for i in (0..=self.n).rev() {
            for k in i + 1..=self.n {
                *steps += 1;
                if self.get(i, k) {
                    *steps += self.words as u64;
                    let src = out.row(k).to_vec();
                    for (d, s) in out.row_mut(i).iter_mut().zip(src) {
                        *d |= s;
                    }
                }
            }
        }
        out
    }

    fn complement(&self, steps: &mut u64) -> SpanTable {
        let mut out = SpanTable::empty(self.n);
        for i in 0..=self.n {
            *steps += self.words as u64;
            for w in 0..self.words {
                // Bits for j >= i only.
                let lo = w * 64;
                let mask = if i <= lo {
                    u64::MAX
                } else if i >= lo + 64 {
                    0
                } else {
                    u64::MAX << (i - lo)
                };
                out.bits[i * self.words + w] = !self.bits[i * self.words + w] & mask;
            }
            // Clear padding beyond n.
            let last = self.n % 64;
            if last != 63 {
                out.bits[i * self.words + self.words - 1] &= (1u64 << (last + 1)) - 1;
            }
        }
        out
    }
}

impl std::fmt::Debug for SpanTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let spans: Vec<(usize, usize)> = (0..=self.n)
            .flat_map(|i| (i..=self.n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.get(i, j))
            .collect();
        f.debug_struct("SpanTable").field("n", &self.n).field("spans", &spans).finish()
    }
}

pub fn table(plan: &Plan, input: &[char], steps: &mut u64) -> SpanTable {
    let n = input.len();
    match plan {
        Plan::Program(p) => {
            let mut t = SpanTable::empty(n);
            for i in 0..=n {
                p.run(input, i, steps, |j| t.set(i, j));
            }
            t
        }
        Plan::Concat(items) => {
            let mut acc = SpanTable::identity(n);
            for item in items {
                let t = table(item, input, steps);
                acc = acc.compose(&t, steps);
            }
            acc
        }
        Plan::Alt(arms) => {
            let mut acc = SpanTable::empty(n);
            for arm in arms {
                let t = table(arm, input, steps);
                acc = acc.zip(&t, |a, b| a | b, steps);
            }
            acc
        }
        Plan::Star(e) => table(e, input, steps).closure(steps),
        Plan::Plus(e) => {
            let t = table(e, input, steps);
            let c = t.closure(steps);
            t.compose(&c, steps)
        }
        Plan::Opt(e) => table(e, input, steps).zip(&SpanTable::identity(n), |a, b| a | b, steps),
        Plan::Repeat(e, m, k) => {
            let t = table(e, input, steps);
            let opt = t.zip(&SpanTable::identity(n), |a, b| a | b, steps);
            let mut acc = SpanTable::identity(n);
            for _ in 0..*m {
                acc = acc.compose(&t, steps);
            }
            for _ in *m..*k {
                acc = acc.compose(&opt, steps);
            }
            acc
        }
        Plan::Conj(a, b) => {
            let ta = table(a, input, steps);
            let tb = table(b, input, steps);
            ta.zip(&tb, |x, y| x & y, steps)
        }
        Plan::Neg(e) => table(e, input, steps).complement(steps),
        Plan::LookAhead(e, positive) => {
            let t = table(e, input, steps);
            let mut out = SpanTable::empty(n);
            for i in 0..=n {
                *steps += t.words as u64;
                if t.row(i).iter().any(|&w| w != 0) == *positive {
                    out.set(i, i);
                }
            }
            out
        }
        Plan::LookBehind(e, positive) => {
            let t = table(e, input, steps);
            let mut out = SpanTable::empty(n);
            for i in 0..=n {
                let mut found = false;
                for k in 0..=i {
                    *steps += 1;
                    if t.get(k, i) {
                        found = true;
                        break;
                    }
                }
                if found == *positive {
                    out.set(i, i);
                }
            }
            out
        }
    }
}
