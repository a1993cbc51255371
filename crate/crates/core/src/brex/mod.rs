//! Regular expressions that cannot blow up.
//!
//! Classical operators plus stratified negation (`!e`), conjunction
//! (`e & f`) and lookaround (`(?=e) (?!e) (?<=e) (?<!e)`). Stratum-0
//! subpatterns run as Thompson NFAs by state-set simulation; higher strata
//! are evaluated over span tables. Every evaluation costs at most
//! [`STEP_CONSTANT`]` · |pattern| · n³` counted steps, whatever the input.
//!
//! ```
//! use omega_rt::brex::Pattern;
//!
//! let p = Pattern::new("!(a*) & [ab]*").unwrap();
//! assert!(p.accepts("ab"));
//! assert!(!p.accepts("aa"));
//! assert_eq!(Pattern::new("ab").unwrap().search("xxabab"), Some((2, 4)));
//! ```

mod ast;
mod eval;
mod nfa;

use thiserror::Error;

pub use ast::{parse, Ast, CharClass, Node, MAX_EXPANDED, MAX_REPEAT, MAX_STRATUM};
pub use eval::{Plan, SpanTable};
pub use nfa::{NfaProgram, State, Symbol};

/// The `C` in the `C · |pattern| · n³` step bound.
pub const STEP_CONSTANT: u64 = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BrexError {
    #[error("syntax error at {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("pattern reaches stratum {stratum}, above the maximum {MAX_STRATUM}")]
    Stratification { stratum: u8 },
    #[error("repeat too large: {detail}")]
    RepeatTooLarge { detail: String },
}

/// A parsed and compiled pattern. Immutable; evaluations keep their scratch
/// state private, so one pattern may be shared across threads.
#[derive(Debug, Clone)]
pub struct Pattern {
    ast: Ast,
    plan: Plan,
    size: usize,
}

/// Outcome of one counted evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Evaluation<T> {
    pub result: T,
    pub steps: u64,
}

pub fn compile(ast: &Ast) -> Pattern {
    Pattern {
        ast: ast.clone(),
        plan: Plan::compile(ast),
        size: ast.expanded_size(),
    }
}

impl Pattern {
    pub fn new(pattern: &str) -> Result<Pattern, BrexError> {
        Ok(compile(&parse(pattern)?))
    }

    pub fn ast(&self) -> &Ast {
        &self.ast
    }

    pub fn plan(&self) -> &Plan {
        &self.plan
    }

    pub fn stratum(&self) -> u8 {
        self.ast.stratum
    }

    /// Pattern size after repeat expansion, the `|pattern|` of the bound.
    pub fn size(&self) -> usize {
        self.size
    }

    /// `STEP_CONSTANT · |pattern| · max(n, 1)³`.
    pub fn step_bound(&self, n: usize) -> u64 {
        let n = n.max(1) as u64;
        STEP_CONSTANT * self.size as u64 * n * n * n
    }

    /// Whole-input match.
    pub fn accepts(&self, input: &str) -> bool {
        self.accepts_counted(input).result
    }

    pub fn accepts_counted(&self, input: &str) -> Evaluation<bool> {
        let chars: Vec<char> = input.chars().collect();
        let n = chars.len();
        let mut steps = 0;
        let result = match &self.plan {
            Plan::Program(p) => {
                let mut hit = false;
                p.run(&chars, 0, &mut steps, |j| hit |= j == n);
                hit
            }
            plan => eval::table(plan, &chars, &mut steps).get(0, n),
        };
        Evaluation { result, steps }
    }

    /// Leftmost-longest match as a byte range. Lookaround operands may
    /// inspect text outside the range but never extend it.
    pub fn search(&self, input: &str) -> Option<(usize, usize)> {
        self.search_counted(input).result
    }

    pub fn search_counted(&self, input: &str) -> Evaluation<Option<(usize, usize)>> {
        let chars: Vec<char> = input.chars().collect();
        let mut offsets: Vec<usize> = input.char_indices().map(|(b, _)| b).collect();
        offsets.push(input.len());
        let n = chars.len();
        let mut steps = 0;
        let span = match &self.plan {
            Plan::Program(p) => (0..=n).find_map(|i| {
                let mut last = None;
                p.run(&chars, i, &mut steps, |j| last = Some(j));
                last.map(|j| (i, j))
            }),
            plan => {
                let t = eval::table(plan, &chars, &mut steps);
                (0..=n).find_map(|i| {
                    steps += 1;
                    t.last_in_row(i).map(|j| (i, j))
                })
            }
        };
        Evaluation {
            result: span.map(|(i, j)| (offsets[i], offsets[j])),
            steps,
        }
    }

    /// Stratum-0 programs in the compiled plan, left to right.
    pub fn programs(&self) -> Vec<&NfaProgram> {
        self.plan.programs()
    }
}

/// Adversarial patterns for `brex bench`, each run against `a` × n.
pub fn corpus(name: &str) -> Option<&'static [&'static str]> {
    const REDOS: &[&str] = &[
        "(a+)+b",
        "(a|a)*b",
        "(a*)*b",
        "((a+)+)+b",
        "(a|aa)+b",
        "(a?){32}a{32}",
    ];
    const STRATA: &[&str] = &[
        "!(a*b)",
        "(a+)+ & !(a*b)",
        "(!(a+b))+",
        "(?<=a)a+(?!b)",
        "((a+)+ & (aa)*)+b",
    ];
    match name {
        "redos" => Some(REDOS),
        "strata" => Some(STRATA),
        _ => None,
    }
}

pub const CORPUS_NAMES: &[&str] = &["redos", "strata"];

/// Input lengths used by `brex bench`.
pub const BENCH_LENGTHS: &[usize] = &[8, 16, 32, 64];

/// `pattern,n,steps,accepted` rows for one corpus.
pub fn bench_csv(name: &str) -> Option<String> {
    let patterns = corpus(name)?;
    let mut out = String::from("pattern,n,steps,accepted\n");
    for p in patterns {
        let pattern = Pattern::new(p).expect("corpus patterns parse");
        for &n in BENCH_LENGTHS {
            let e = pattern.accepts_counted(&"a".repeat(n));
            out.push_str(&format!("\"{p}\",{n},{},{}\n", e.steps, e.result));
        }
    }
    Some(out)
}
