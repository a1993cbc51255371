//! Thompson construction and active-state-set simulation for stratum-0
//! (classically regular) subpatterns.

use super::ast::{Ast, CharClass, Node};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Symbol {
    Char(char),
    Class(CharClass),
}

impl Symbol {
    fn matches(&self, c: char) -> bool {
        match self {
            Symbol::Char(x) => *x == c,
            Symbol::Class(class) => class.contains(c),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct State {
    pub symbol: Option<(Symbol, usize)>,
    pub epsilon: Vec<usize>,
}

/// One NFA with a single accept state that has no outgoing edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NfaProgram {
    pub states: Vec<State>,
    pub start: usize,
    pub accept: usize,
}

impl NfaProgram {
    /// Thompson construction. `{m,n}` is expanded into `m` copies followed
    /// by `n - m` optional copies.
    pub fn compile(ast: &Ast) -> NfaProgram {
        debug_assert_eq!(ast.stratum, 0);
        let mut b = Builder { states: Vec::new() };
        let (start, accept) = b.build(ast);
        NfaProgram {
            states: b.states,
            start,
            accept,
        }
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    /// Runs from `from` to the end of `input`, calling `on_accept(j)` for
    /// every `j` such that `input[from..j]` is accepted, in increasing `j`.
    pub fn run(&self, input: &[char], from: usize, steps: &mut u64, mut on_accept: impl FnMut(usize)) {
        let mut sim = Simulation::new(self.states.len());
        sim.add(self, self.start, steps);
        sim.settle();
        let mut j = from;
        loop {
            if sim.contains(self.accept) {
                on_accept(j);
            }
            if j == input.len() || sim.current.is_empty() {
                return;
            }
            sim.advance(self, input[j], steps);
            j += 1;
        }
    }
}

struct Simulation {
    current: Vec<usize>,
    next: Vec<usize>,
    mark: Vec<u32>,
    generation: u32,
    stack: Vec<usize>,
}

impl Simulation {
    fn new(m: usize) -> Self {
        Simulation {
            current: Vec::with_capacity(m),
            next: Vec::with_capacity(m),
            mark: vec![0; m],
            generation: 1,
            stack: Vec::new(),
        }
    }

    fn contains(&self, s: usize) -> bool {
        self.mark[s] == self.generation
    }

    /// Adds `s` and its epsilon closure to the set being built.
    fn add(&mut self, nfa: &NfaProgram, s: usize, steps: &mut u64) {
        self.stack.push(s);
        while let Some(s) = self.stack.pop() {
            *steps += 1;
            if self.mark[s] == self.generation {
                continue;
            }
            self.mark[s] = self.generation;
            self.next.push(s);
            self.stack.extend(nfa.states[s].epsilon.iter().copied());
        }
    }

    fn settle(&mut self) {
        std::mem::swap(&mut self.current, &mut self.next);
        self.next.clear();
    }

    fn advance(&mut self, nfa: &NfaProgram, c: char, steps: &mut u64) {
        self.generation += 1;
        let current = std::mem::take(&mut self.current);
        for &s in &current {
            *steps += 1;
            if let Some((sym, to)) = &nfa.states[s].symbol {
                if sym.matches(c) {
                    self.add(nfa, *to, steps);
                }
            }
        }
        self.current = current;
        self.settle();
    }
}

struct Builder {
    states: Vec<State>,
}

impl Builder {
    fn state(&mut self) -> usize {
        self.states.push(State::default());
        self.states.len() - 1
    }

    fn eps(&mut self, from: usize, to: usize) {
        self.states[from].epsilon.push(to);
    }

    fn edge(&mut self, symbol: Symbol) -> (usize, usize) {
        let s = self.state();
        let e = self.state();
        self.states[s].symbol = Some((symbol, e));
        (s, e)
    }

    fn optional(&mut self, ast: &Ast) -> (usize, usize) {
        let s = self.state();
        let (fs, fe) = self.build(ast);
        let e = self.state();
        self.eps(s, fs);
        self.eps(s, e);
        self.eps(fe, e);
        (s, e)
    }

    fn chain(&mut self, parts: Vec<(usize, usize)>) -> (usize, usize) {
        let mut iter = parts.into_iter();
        let Some((start, mut end)) = iter.next() else {
            let s = self.state();
            return (s, s);
        };
        for (s, e) in iter {
            self.eps(end, s);
            end = e;
        }
        (start, end)
    }

    fn build(&mut self, ast: &Ast) -> (usize, usize) {
        match &ast.node {
            Node::Empty => {
                let s = self.state();
                (s, s)
            }
            Node::Literal(c) => self.edge(Symbol::Char(*c)),
            Node::Class(class) => self.edge(Symbol::Class(class.clone())),
            Node::Concat(items) => {
                let parts = items.iter().map(|i| self.build(i)).collect();
                self.chain(parts)
            }
            Node::Alt(arms) => {
                let s = self.state();
                let e = self.state();
                for arm in arms {
                    let (fs, fe) = self.build(arm);
                    self.eps(s, fs);
                    self.eps(fe, e);
                }
                (s, e)
            }
            Node::Star(inner) => {
                let s = self.state();
                let (fs, fe) = self.build(inner);
                let e = self.state();
                self.eps(s, fs);
                self.eps(s, e);
                self.eps(fe, fs);
                self.eps(fe, e);
                (s, e)
            }
            Node::Plus(inner) => {
                let s = self.state();
                let (fs, fe) = self.build(inner);
                let e = self.state();
                self.eps(s, fs);
                self.eps(fe, fs);
                self.eps(fe, e);
                (s, e)
            }
            Node::Opt(inner) => self.optional(inner),
            Node::Repeat(inner, m, n) => {
                let mut parts = Vec::new();
                for _ in 0..*m {
                    parts.push(self.build(inner));
                }
                for _ in *m..*n {
                    parts.push(self.optional(inner));
                }
                self.chain(parts)
            }
            Node::Conj(..) | Node::Neg(_) | Node::LookAhead(..) | Node::LookBehind(..) => {
                unreachable!("higher-stratum node inside a stratum-0 program")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::ast::parse;
    use super::*;

    fn program(p: &str) -> NfaProgram {
        NfaProgram::compile(&parse(p).unwrap())
    }

    fn accepts(p: &str, s: &str) -> bool {
        let chars: Vec<char> = s.chars().collect();
        let mut hit = false;
        program(p).run(&chars, 0, &mut 0, |j| hit |= j == chars.len());
        hit
    }

    #[test]
    fn ab_is_a_four_state_chain() {
        let nfa = program("ab");
        assert_eq!(nfa.state_count(), 4);
        let (sym, mid) = nfa.states[nfa.start].symbol.clone().unwrap();
        assert_eq!(sym, Symbol::Char('a'));
        assert_eq!(nfa.states[mid].epsilon.len(), 1);
        let next = nfa.states[mid].epsilon[0];
        let (sym, end) = nfa.states[next].symbol.clone().unwrap();
        assert_eq!(sym, Symbol::Char('b'));
        assert_eq!(end, nfa.accept);
        assert!(nfa.states[nfa.accept].epsilon.is_empty());
    }

    #[test]
    fn alternation_fans_out_by_epsilon() {
        let nfa = program("a|b");
        let start = &nfa.states[nfa.start];
        assert!(start.symbol.is_none());
        assert_eq!(start.epsilon.len(), 2);
        let syms: Vec<Symbol> = start
            .epsilon
            .iter()
            .map(|&s| nfa.states[s].symbol.clone().unwrap().0)
            .collect();
        assert_eq!(syms, vec![Symbol::Char('a'), Symbol::Char('b')]);
    }

    #[test]
    fn repeat_expands_to_copies() {
        // Two required copies and one optional: 2·4 + (4 + 2) states.
        assert_eq!(program("(ab){2,3}").state_count(), 14);
        assert!(accepts("(ab){2,3}", "abab"));
        assert!(accepts("(ab){2,3}", "ababab"));
        assert!(!accepts("(ab){2,3}", "ab"));
        assert!(!accepts("(ab){2,3}", "abababab"));
        assert!(accepts("a{0}", ""));
    }

    #[test]
    fn state_count_is_linear_in_expanded_size() {
        for p in ["a*b", "(a|b)*abb", "(a+)+b", "[a-z]{3,7}", "((ab)?c){4}", "", "(a|)*"] {
            let ast = parse(p).unwrap();
            let nfa = NfaProgram::compile(&ast);
            assert!(nfa.state_count() <= 2 * ast.expanded_size() + 2, "{p}");
        }
    }

    #[test]
    fn basic_acceptance() {
        assert!(accepts("a*b", "aaab"));
        assert!(!accepts("a*b", "aaa"));
        assert!(accepts("(a|)*", "aaa"));
        assert!(accepts("", ""));
        assert!(!accepts("", "a"));
    }
}
