//! Pattern syntax tree and parser.

use super::BrexError;

/// Highest stratum a pattern may reach.
pub const MAX_STRATUM: u8 = 3;
/// Largest bound accepted in `{m}` and `{m,n}`.
pub const MAX_REPEAT: u32 = 1024;
/// Largest pattern size after repeat expansion.
pub const MAX_EXPANDED: usize = 1 << 17;

/// A set of characters: inclusive ranges, optionally complemented.
/// `.` parses to the complement of the empty set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharClass {
    pub ranges: Vec<(char, char)>,
    pub negated: bool,
}

impl CharClass {
    pub fn any() -> Self {
        CharClass {
            ranges: Vec::new(),
            negated: true,
        }
    }

    pub fn contains(&self, c: char) -> bool {
        self.ranges.iter().any(|&(lo, hi)| lo <= c && c <= hi) != self.negated
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Empty,
    Literal(char),
    Class(CharClass),
    Concat(Vec<Ast>),
    Alt(Vec<Ast>),
    Star(Box<Ast>),
    Plus(Box<Ast>),
    Opt(Box<Ast>),
    Repeat(Box<Ast>, u32, u32),
    Conj(Box<Ast>, Box<Ast>),
    Neg(Box<Ast>),
    LookAhead(Box<Ast>, bool),
    LookBehind(Box<Ast>, bool),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ast {
    pub node: Node,
    pub stratum: u8,
}

impl Ast {
    /// Builds a node and computes its stratum: one above the highest operand
    /// for negation, conjunction and lookaround, the operands' maximum
    /// otherwise.
    pub fn new(node: Node) -> Ast {
        let children = node_children(&node);
        let inner = children.iter().map(|c| c.stratum).max().unwrap_or(0);
        let stratum = match node {
            Node::Conj(..) | Node::Neg(_) | Node::LookAhead(..) | Node::LookBehind(..) => inner + 1,
            _ => inner,
        };
        Ast { node, stratum }
    }

    pub fn children(&self) -> Vec<&Ast> {
        node_children(&self.node)
    }

    /// Node count after rewriting `e{m,n}` as `m` copies of `e` followed by
    /// `n - m` copies of `e?`.
    pub fn expanded_size(&self) -> usize {
        let inner: usize = self.children().iter().map(|c| c.expanded_size()).sum();
        match self.node {
            Node::Repeat(_, m, n) => {
                let required = inner.saturating_mul(m as usize);
                let optional = (inner + 1).saturating_mul((n - m) as usize);
                1 + required.saturating_add(optional)
            }
            _ => 1 + inner,
        }
    }
}

fn node_children(node: &Node) -> Vec<&Ast> {
    match node {
        Node::Empty | Node::Literal(_) | Node::Class(_) => Vec::new(),
        Node::Concat(v) | Node::Alt(v) => v.iter().collect(),
        Node::Star(e)
        | Node::Plus(e)
        | Node::Opt(e)
        | Node::Repeat(e, _, _)
        | Node::Neg(e)
        | Node::LookAhead(e, _)
        | Node::LookBehind(e, _) => vec![e],
        Node::Conj(a, b) => vec![a, b],
    }
}

const ESCAPABLE: &str = "\\*+?()[]{}!&|.^- ";

pub fn parse(pattern: &str) -> Result<Ast, BrexError> {
    let mut p = Parser {
        chars: pattern.chars().collect(),
        pos: 0,
    };
    let ast = p.conj()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.error("unexpected character"));
    }
    check(&ast)?;
    Ok(ast)
}

fn check(ast: &Ast) -> Result<(), BrexError> {
    if ast.stratum > MAX_STRATUM {
        return Err(BrexError::Stratification {
            stratum: ast.stratum,
        });
    }
    let size = ast.expanded_size();
    if size > MAX_EXPANDED {
        return Err(BrexError::RepeatTooLarge {
            detail: format!("expanded size {size} exceeds {MAX_EXPANDED}"),
        });
    }
    Ok(())
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn error(&self, message: &str) -> BrexError {
        BrexError::Syntax {
            position: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), BrexError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected '{c}'")))
        }
    }

    fn conj(&mut self) -> Result<Ast, BrexError> {
        let mut left = self.alt()?;
        while self.eat('&') {
            let right = self.alt()?;
            left = Ast::new(Node::Conj(Box::new(left), Box::new(right)));
        }
        Ok(left)
    }

    fn alt(&mut self) -> Result<Ast, BrexError> {
        let mut arms = vec![self.concat()?];
        while self.eat('|') {
            arms.push(self.concat()?);
        }
        Ok(if arms.len() == 1 {
            arms.pop().unwrap()
        } else {
            Ast::new(Node::Alt(arms))
        })
    }

    fn concat(&mut self) -> Result<Ast, BrexError> {
        let mut items = Vec::new();
        while let Some(c) = self.peek() {
            if matches!(c, '|' | '&' | ')') {
                break;
            }
            items.push(self.unary()?);
        }
        Ok(match items.len() {
            0 => Ast::new(Node::Empty),
            1 => items.pop().unwrap(),
            _ => Ast::new(Node::Concat(items)),
        })
    }

    fn unary(&mut self) -> Result<Ast, BrexError> {
        if self.eat('!') {
            let inner = self.unary()?;
            return Ok(Ast::new(Node::Neg(Box::new(inner))));
        }
        let mut atom = self.atom()?;
        loop {
            atom = match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    Ast::new(Node::Star(Box::new(atom)))
                }
                Some('+') => {
                    self.pos += 1;
                    Ast::new(Node::Plus(Box::new(atom)))
                }
                Some('?') => {
                    self.pos += 1;
                    Ast::new(Node::Opt(Box::new(atom)))
                }
                Some('{') => {
                    let (m, n) = self.bounds()?;
                    Ast::new(Node::Repeat(Box::new(atom), m, n))
                }
                _ => return Ok(atom),
            };
        }
    }

    fn number(&mut self) -> Result<u32, BrexError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a number"));
        }
        let digits: String = self.chars[start..self.pos].iter().collect();
        // Anything too long for u32 is certainly over the limit.
        Ok(digits.parse().unwrap_or(u32::MAX))
    }

    fn bounds(&mut self) -> Result<(u32, u32), BrexError> {
        let open = self.pos;
        self.expect('{')?;
        let m = self.number()?;
        let n = if self.eat(',') {
            if self.peek() == Some('}') {
                return Err(BrexError::Syntax {
                    position: open,
                    message: "unbounded repeat {m,} is not supported".to_string(),
                });
            }
            self.number()?
        } else {
            m
        };
        self.expect('}')?;
        if n > MAX_REPEAT {
            return Err(BrexError::RepeatTooLarge {
                detail: format!("{{{m},{n}}} exceeds {MAX_REPEAT}"),
            });
        }
        if m > n {
            return Err(BrexError::Syntax {
                position: open,
                message: format!("repeat lower bound {m} exceeds upper bound {n}"),
            });
        }
        Ok((m, n))
    }

    fn atom(&mut self) -> Result<Ast, BrexError> {
        let Some(c) = self.peek() else {
            return Err(self.error("unexpected end of pattern"));
        };
        match c {
            '(' => {
                self.pos += 1;
                let look = if self.chars.get(self.pos) == Some(&'?') {
                    let kind: String = self.chars[self.pos..].iter().take(3).collect();
                    let (ahead, positive, len) = if kind.starts_with("?=") {
                        (true, true, 2)
                    } else if kind.starts_with("?!") {
                        (true, false, 2)
                    } else if kind == "?<=" {
                        (false, true, 3)
                    } else if kind == "?<!" {
                        (false, false, 3)
                    } else {
                        return Err(self.error("unknown group kind"));
                    };
                    self.pos += len;
                    Some((ahead, positive))
                } else {
                    None
                };
                let inner = self.conj()?;
                self.expect(')')?;
                Ok(match look {
                    None => inner,
                    Some((true, positive)) => Ast::new(Node::LookAhead(Box::new(inner), positive)),
                    Some((false, positive)) => Ast::new(Node::LookBehind(Box::new(inner), positive)),
                })
            }
            '[' => {
                self.pos += 1;
                self.class()
            }
            '.' => {
                self.pos += 1;
                Ok(Ast::new(Node::Class(CharClass::any())))
            }
            '\\' => {
                self.pos += 1;
                let c = self.escaped()?;
                Ok(Ast::new(Node::Literal(c)))
            }
            '*' | '+' | '?' | '{' | '}' | ']' | ')' => Err(self.error("unexpected metacharacter")),
            c => {
                self.pos += 1;
                Ok(Ast::new(Node::Literal(c)))
            }
        }
    }

    fn escaped(&mut self) -> Result<char, BrexError> {
        match self.chars.get(self.pos) {
            Some(&c) if ESCAPABLE.contains(c) => {
                self.pos += 1;
                Ok(c)
            }
            Some(_) => Err(self.error("unknown escape")),
            None => Err(self.error("dangling escape")),
        }
    }

    /// After `[`. Whitespace inside brackets is literal.
    fn class(&mut self) -> Result<Ast, BrexError> {
        let mut negated = false;
        if self.chars.get(self.pos) == Some(&'^') {
            negated = true;
            self.pos += 1;
        }
        let mut ranges = Vec::new();
        loop {
            let lo = match self.chars.get(self.pos) {
                None => return Err(self.error("unterminated class")),
                Some(']') => {
                    self.pos += 1;
                    break;
                }
                Some('\\') => {
                    self.pos += 1;
                    self.escaped()?
                }
                Some('[') => return Err(self.error("'[' inside a class must be escaped")),
                Some(&c) => {
                    self.pos += 1;
                    c
                }
            };
            let is_range = self.chars.get(self.pos) == Some(&'-')
                && !matches!(self.chars.get(self.pos + 1), Some(']') | None);
            if !is_range {
                ranges.push((lo, lo));
                continue;
            }
            self.pos += 1;
            let hi = match self.chars.get(self.pos) {
                Some('\\') => {
                    self.pos += 1;
                    self.escaped()?
                }
                Some(&c) => {
                    self.pos += 1;
                    c
                }
                None => return Err(self.error("unterminated class")),
            };
            if hi < lo {
                return Err(self.error("inverted range"));
            }
            ranges.push((lo, hi));
        }
        if ranges.is_empty() {
            return Err(self.error("empty class"));
        }
        Ok(Ast::new(Node::Class(CharClass { ranges, negated })))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(c: char) -> Ast {
        Ast::new(Node::Literal(c))
    }

    #[test]
    fn star_then_literal() {
        let ast = parse("a*b").unwrap();
        let want = Ast::new(Node::Concat(vec![
            Ast::new(Node::Star(Box::new(lit('a')))),
            lit('b'),
        ]));
        assert_eq!(ast, want);
        assert_eq!(ast.stratum, 0);
    }

    #[test]
    fn negation_and_conjunction_raise_the_stratum() {
        let ast = parse("!(a*)&[ab]*").unwrap();
        let Node::Conj(l, r) = &ast.node else {
            panic!("{ast:?}")
        };
        assert_eq!(ast.stratum, 2);
        assert_eq!(l.stratum, 1);
        assert!(matches!(l.node, Node::Neg(_)));
        assert_eq!(r.stratum, 0);
        let Node::Star(class) = &r.node else { panic!() };
        assert_eq!(
            class.node,
            Node::Class(CharClass {
                ranges: vec![('a', 'a'), ('b', 'b')],
                negated: false
            })
        );
        assert_eq!(parse("!(a*) & [ab]*").unwrap(), ast);
    }

    #[test]
    fn repeat_limits() {
        assert!(matches!(parse("a{2,1025}"), Err(BrexError::RepeatTooLarge { .. })));
        assert!(parse("a{2,1024}").is_ok());
        assert!(matches!(parse("a{2,}"), Err(BrexError::Syntax { position: 1, .. })));
        assert!(matches!(parse("a{3,2}"), Err(BrexError::Syntax { .. })));
        assert!(matches!(
            parse("((a{1000}){1000}){1000}"),
            Err(BrexError::RepeatTooLarge { .. })
        ));
    }

    #[test]
    fn strata_are_capped() {
        assert_eq!(parse("(?=(?=(?=a)))").unwrap().stratum, 3);
        assert!(matches!(
            parse("(?=(?=(?=(?=a))))"),
            Err(BrexError::Stratification { stratum: 4 })
        ));
        assert_eq!(parse("!a").unwrap().stratum, 1);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        assert!(matches!(parse("ab)"), Err(BrexError::Syntax { position: 2, .. })));
        assert!(matches!(parse("(ab"), Err(BrexError::Syntax { position: 3, .. })));
        assert!(matches!(parse("a\\q"), Err(BrexError::Syntax { position: 2, .. })));
        assert!(matches!(parse("*a"), Err(BrexError::Syntax { position: 0, .. })));
        assert!(matches!(parse("[]"), Err(BrexError::Syntax { .. })));
    }

    #[test]
    fn escapes_and_classes() {
        assert_eq!(parse("\\*").unwrap(), lit('*'));
        assert_eq!(parse("\\ ").unwrap(), lit(' '));
        let Node::Class(c) = parse("[^a-c\\]]").unwrap().node else {
            panic!()
        };
        assert!(c.negated);
        assert!(!c.contains('b') && !c.contains(']') && c.contains('z'));
        assert!(CharClass::any().contains('\n'));
    }

    #[test]
    fn empty_alternatives() {
        let ast = parse("a|").unwrap();
        assert_eq!(ast.node, Node::Alt(vec![lit('a'), Ast::new(Node::Empty)]));
        assert_eq!(parse("()").unwrap().node, Node::Empty);
    }
}
