//! A regex syntax tree independent of the library's, a renderer to pattern
//! text, and seeded generators.

use rand::Rng;

#[derive(Debug, Clone)]
pub enum Re {
    Lit(char),
    Any,
    Class(Vec<char>, bool),
    Cat(Vec<Re>),
    Alt(Vec<Re>),
    Star(Box<Re>),
    Plus(Box<Re>),
    Opt(Box<Re>),
    Rep(Box<Re>, u32, u32),
    Neg(Box<Re>),
    And(Box<Re>, Box<Re>),
}

impl Re {
    pub fn matches_char(&self, c: char) -> bool {
        match self {
            Re::Lit(l) => *l == c,
            Re::Any => true,
            Re::Class(set, negated) => set.contains(&c) != *negated,
            _ => unreachable!("not a single-character node"),
        }
    }

    pub fn render(&self) -> String {
        match self {
            Re::Lit(c) => c.to_string(),
            Re::Any => ".".to_string(),
            Re::Class(set, negated) => {
                let body: String = set.iter().collect();
                format!("[{}{body}]", if *negated { "^" } else { "" })
            }
            Re::Cat(items) => items.iter().map(|i| i.render_atom_in_cat()).collect(),
            Re::Alt(arms) => format!("({})", arms.iter().map(Re::render).collect::<Vec<_>>().join("|")),
            Re::Star(e) => format!("{}*", e.render_atom()),
            Re::Plus(e) => format!("{}+", e.render_atom()),
            Re::Opt(e) => format!("{}?", e.render_atom()),
            Re::Rep(e, m, n) => format!("{}{{{m},{n}}}", e.render_atom()),
            Re::Neg(e) => format!("!({})", e.render()),
            Re::And(a, b) => format!("({} & {})", a.render(), b.render()),
        }
    }

    fn render_atom(&self) -> String {
        match self {
            Re::Lit(_) | Re::Any | Re::Class(..) | Re::Alt(_) | Re::And(..) => self.render(),
            _ => format!("({})", self.render()),
        }
    }

    fn render_atom_in_cat(&self) -> String {
        match self {
            Re::Cat(_) | Re::Neg(_) => format!("({})", self.render()),
            _ => self.render(),
        }
    }
}

fn leaf(rng: &mut impl Rng, alphabet: &[char]) -> Re {
    match rng.gen_range(0..10) {
        0..=5 => Re::Lit(alphabet[rng.gen_range(0..alphabet.len())]),
        6 => Re::Any,
        _ => {
            let mut set: Vec<char> = alphabet.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
            if set.is_empty() {
                set.push(alphabet[0]);
            }
            Re::Class(set, rng.gen_bool(0.3))
        }
    }
}

/// Classical operators only.
pub fn stratum0(rng: &mut impl Rng, depth: u32, alphabet: &[char]) -> Re {
    if depth == 0 || rng.gen_bool(0.3) {
        return leaf(rng, alphabet);
    }
    let sub = |rng: &mut _| Box::new(stratum0(rng, depth - 1, alphabet));
    match rng.gen_range(0..8) {
        0 | 1 => Re::Cat((0..rng.gen_range(2..4)).map(|_| stratum0(rng, depth - 1, alphabet)).collect()),
        2 => Re::Alt((0..rng.gen_range(2..4)).map(|_| stratum0(rng, depth - 1, alphabet)).collect()),
        3 => Re::Star(sub(rng)),
        4 => Re::Plus(sub(rng)),
        5 => Re::Opt(sub(rng)),
        6 => {
            let m = rng.gen_range(0..3);
            Re::Rep(sub(rng), m, m + rng.gen_range(0..3))
        }
        _ => Re::Cat(vec![leaf(rng, alphabet), stratum0(rng, depth - 1, alphabet)]),
    }
}

/// Exactly one level of negation or conjunction over classical operands,
/// possibly combined further with classical operators.
pub fn stratum1(rng: &mut impl Rng, depth: u32, alphabet: &[char]) -> Re {
    let core = if rng.gen_bool(0.5) {
        Re::Neg(Box::new(stratum0(rng, depth, alphabet)))
    } else {
        let a = stratum0(rng, depth, alphabet);
        let b = stratum0(rng, depth, alphabet);
        Re::And(Box::new(a), Box::new(b))
    };
    match rng.gen_range(0..6) {
        0 => Re::Cat(vec![stratum0(rng, 1, alphabet), core]),
        1 => Re::Star(Box::new(core)),
        2 => Re::Alt(vec![core, stratum0(rng, 1, alphabet)]),
        3 => Re::Plus(Box::new(core)),
        _ => core,
    }
}

pub fn random_string(rng: &mut impl Rng, alphabet: &[char], max_len: usize) -> String {
    let n = rng.gen_range(0..=max_len);
    (0..n).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect()
}

/// Negation and conjunction nested to any depth.
pub fn stratified(rng: &mut impl Rng, depth: u32, alphabet: &[char]) -> Re {
    if depth == 0 || rng.gen_bool(0.3) {
        return stratum0(rng, 2, alphabet);
    }
    let sub = |rng: &mut _| Box::new(stratified(rng, depth - 1, alphabet));
    match rng.gen_range(0..6) {
        0 => Re::Neg(sub(rng)),
        1 => Re::And(sub(rng), sub(rng)),
        2 => Re::Cat(vec![*sub(rng), *sub(rng)]),
        3 => Re::Alt(vec![*sub(rng), *sub(rng)]),
        4 => Re::Star(sub(rng)),
        _ => Re::Opt(sub(rng)),
    }
}
