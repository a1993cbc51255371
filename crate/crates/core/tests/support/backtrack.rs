//! Continuation-passing backtracking matcher with a step budget, the
//! textbook exponential algorithm.

use super::regex_gen::Re;

pub struct Backtracker<'a> {
    input: &'a [char],
    pub steps: u64,
    cap: u64,
    pub exhausted: bool,
}

/// `Some(matched)`, or `None` when the step cap was hit.
pub fn full_match(re: &Re, input: &str, cap: u64) -> (Option<bool>, u64) {
    let chars: Vec<char> = input.chars().collect();
    let mut bt = Backtracker {
        input: &chars,
        steps: 0,
        cap,
        exhausted: false,
    };
    let n = chars.len();
    let hit = bt.m(re, 0, &mut |_, j| j == n);
    let out = if bt.exhausted { None } else { Some(hit) };
    (out, bt.steps)
}

/// Leftmost-longest span, by whole-match tests on every substring.
pub fn search(re: &Re, input: &str, cap: u64) -> Option<Option<(usize, usize)>> {
    let chars: Vec<char> = input.chars().collect();
    for i in 0..=chars.len() {
        for j in (i..=chars.len()).rev() {
            let sub: String = chars[i..j].iter().collect();
            match full_match(re, &sub, cap).0 {
                None => return None,
                Some(true) => return Some(Some((i, j))),
                Some(false) => {}
            }
        }
    }
    Some(None)
}

type K<'k> = dyn FnMut(&mut Backtracker<'_>, usize) -> bool + 'k;

impl Backtracker<'_> {
    fn tick(&mut self) -> bool {
        self.steps += 1;
        if self.steps > self.cap {
            self.exhausted = true;
        }
        !self.exhausted
    }

    fn m(&mut self, re: &Re, i: usize, k: &mut K<'_>) -> bool {
        if !self.tick() {
            return false;
        }
        match re {
            Re::Lit(_) | Re::Any | Re::Class(..) => {
                i < self.input.len() && re.matches_char(self.input[i]) && k(self, i + 1)
            }
            Re::Cat(items) => self.cat(items, i, k),
            Re::Alt(arms) => arms.iter().any(|a| !self.exhausted && self.m(a, i, k)),
            Re::Star(e) => self.star(e, i, k),
            Re::Plus(e) => self.m(e, i, &mut |bt: &mut Backtracker<'_>, j| bt.star(e, j, k)),
            Re::Opt(e) => self.m(e, i, k) || (!self.exhausted && k(self, i)),
            Re::Rep(e, m, n) => self.rep(e, *m, *n, i, k),
            Re::Neg(_) | Re::And(..) => panic!("backtracking oracle covers stratum 0 only"),
        }
    }

    fn cat(&mut self, items: &[Re], i: usize, k: &mut K<'_>) -> bool {
        match items.split_first() {
            None => k(self, i),
            Some((first, rest)) => self.m(first, i, &mut |bt: &mut Backtracker<'_>, j| bt.cat(rest, j, k)),
        }
    }

    /// Greedy; an iteration must consume input.
    fn star(&mut self, e: &Re, i: usize, k: &mut K<'_>) -> bool {
        self.m(e, i, &mut |bt: &mut Backtracker<'_>, j| j > i && bt.star(e, j, k)) || (!self.exhausted && k(self, i))
    }

    fn rep(&mut self, e: &Re, m: u32, n: u32, i: usize, k: &mut K<'_>) -> bool {
        if m > 0 {
            return self.m(e, i, &mut |bt: &mut Backtracker<'_>, j| bt.rep(e, m - 1, n - 1, j, k));
        }
        if n == 0 {
            return k(self, i);
        }
        self.m(e, i, &mut |bt: &mut Backtracker<'_>, j| bt.rep(e, 0, n - 1, j, k)) || (!self.exhausted && k(self, i))
    }
}
