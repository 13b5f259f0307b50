//! Provenance terms: the canonical names of cells.
//!
//! A cell is either a generator (a named leaf) or a filler synthesized by an
//! attachment, in which case its name records the level, the attachment
//! index, which fresh cell of the attachment it is (`part`), and the
//! configuration it was attached along. Identical configurations always
//! synthesize identical terms, which is what makes carriers comparable across
//! runs and budgets.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::Arc;

use thiserror::Error;

/// A provenance term. Cheap to clone; structurally compared with a cached hash.
#[derive(Clone)]
pub struct Term(Arc<TermNode>);

struct TermNode {
    kind: TermKind,
    hash: u64,
    depth: u32,
}

/// The two shapes of a provenance term.
#[derive(Clone, PartialEq, Eq)]
pub enum TermKind {
    /// A generator cell, named by the user or by a shape constructor.
    Gen(Arc<str>),
    /// A filler: fresh cell `part` of attachment `index` at `level`,
    /// attached along the configuration `args`.
    App {
        level: u32,
        index: u32,
        part: u32,
        args: Vec<Term>,
    },
}

impl Term {
    /// A generator leaf.
    pub fn gen(name: impl AsRef<str>) -> Term {
        let name: Arc<str> = Arc::from(name.as_ref());
        let mut h = DefaultHasher::new();
        0u8.hash(&mut h);
        name.hash(&mut h);
        Term(Arc::new(TermNode {
            hash: h.finish(),
            depth: 0,
            kind: TermKind::Gen(name),
        }))
    }

    /// A synthesized filler.
    pub fn app(level: u32, index: u32, part: u32, args: Vec<Term>) -> Term {
        let mut h = DefaultHasher::new();
        1u8.hash(&mut h);
        (level, index, part).hash(&mut h);
        for a in &args {
            a.0.hash.hash(&mut h);
        }
        let depth = 1 + args.iter().map(Term::depth).max().unwrap_or(0);
        Term(Arc::new(TermNode {
            hash: h.finish(),
            depth,
            kind: TermKind::App {
                level,
                index,
                part,
                args,
            },
        }))
    }

    pub fn kind(&self) -> &TermKind {
        &self.0.kind
    }

    pub fn is_gen(&self) -> bool {
        matches!(self.0.kind, TermKind::Gen(_))
    }

    /// The generator name, if this is a leaf.
    pub fn gen_name(&self) -> Option<&str> {
        match &self.0.kind {
            TermKind::Gen(n) => Some(n),
            TermKind::App { .. } => None,
        }
    }

    /// Nesting depth: 0 for generators, `1 + max(depth(args))` otherwise.
    pub fn depth(&self) -> u32 {
        self.0.depth
    }

    /// Highest attachment level occurring in the term (0 for generators).
    pub fn max_level(&self) -> u32 {
        match &self.0.kind {
            TermKind::Gen(_) => 0,
            TermKind::App { level, args, .. } => args
                .iter()
                .map(Term::max_level)
                .max()
                .unwrap_or(0)
                .max(*level),
        }
    }

    /// Replaces generator leaves through `f`; leaves for which `f` returns
    /// `None` are kept. Subterms without replaced leaves are shared.
    pub fn substitute(&self, f: &dyn Fn(&str) -> Option<Term>) -> Term {
        match &self.0.kind {
            TermKind::Gen(n) => f(n).unwrap_or_else(|| self.clone()),
            TermKind::App {
                level,
                index,
                part,
                args,
            } => {
                let new: Vec<Term> = args.iter().map(|a| a.substitute(f)).collect();
                if new.iter().zip(args).all(|(a, b)| Arc::ptr_eq(&a.0, &b.0)) {
                    self.clone()
                } else {
                    Term::app(*level, *index, *part, new)
                }
            }
        }
    }

    /// Parses the textual form produced by `Display`.
    pub fn parse(s: &str) -> Result<Term, TermParseError> {
        let mut p = Parser { s: s.as_bytes(), pos: 0 };
        let t = p.term()?;
        p.skip_ws();
        if p.pos != p.s.len() {
            return Err(p.err("trailing input"));
        }
        Ok(t)
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Term) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.hash == other.0.hash && self.0.kind == other.0.kind)
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl Ord for Term {
    fn cmp(&self, other: &Term) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        match (&self.0.kind, &other.0.kind) {
            (TermKind::Gen(a), TermKind::Gen(b)) => a.cmp(b),
            (TermKind::Gen(_), TermKind::App { .. }) => Ordering::Less,
            (TermKind::App { .. }, TermKind::Gen(_)) => Ordering::Greater,
            (
                TermKind::App {
                    level: l1,
                    index: i1,
                    part: p1,
                    args: a1,
                },
                TermKind::App {
                    level: l2,
                    index: i2,
                    part: p2,
                    args: a2,
                },
            ) => (l1, i1, p1).cmp(&(l2, i2, p2)).then_with(|| a1.cmp(a2)),
        }
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Term) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Term {
    /// Generators print as their name; fillers as `#level.index(args)`, with
    /// `/part` inserted before the arguments when the part is nonzero.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0.kind {
            TermKind::Gen(n) => f.write_str(n),
            TermKind::App {
                level,
                index,
                part,
                args,
            } => {
                write!(f, "#{level}.{index}")?;
                if *part != 0 {
                    write!(f, "/{part}")?;
                }
                f.write_str("(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl serde::Serialize for Term {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Term {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Term, D::Error> {
        let s = String::deserialize(d)?;
        Term::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Returns true if `name` can be used as a generator name in textual formats.
pub fn is_valid_gen_name(name: &str) -> bool {
    !name.is_empty()
        && !name.starts_with('#')
        && name
            .chars()
            .all(|c| !c.is_whitespace() && !matches!(c, '(' | ')' | ',' | '=' | '#'))
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("term syntax error at byte {pos}: {msg}")]
pub struct TermParseError {
    pub pos: usize,
    pub msg: String,
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> TermParseError {
        TermParseError {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn number(&mut self) -> Result<u32, TermParseError> {
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos])
            .ok()
            .and_then(|d| d.parse().ok())
            .ok_or_else(|| self.err("expected a number"))
    }

    fn expect(&mut self, c: u8) -> Result<(), TermParseError> {
        self.skip_ws();
        if self.s.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn term(&mut self) -> Result<Term, TermParseError> {
        self.skip_ws();
        if self.s.get(self.pos) == Some(&b'#') {
            self.pos += 1;
            let level = self.number()?;
            self.expect(b'.')?;
            let index = self.number()?;
            let part = if self.s.get(self.pos) == Some(&b'/') {
                self.pos += 1;
                self.number()?
            } else {
                0
            };
            self.expect(b'(')?;
            let mut args = Vec::new();
            self.skip_ws();
            if self.s.get(self.pos) == Some(&b')') {
                self.pos += 1;
            } else {
                loop {
                    args.push(self.term()?);
                    self.skip_ws();
                    match self.s.get(self.pos) {
                        Some(b',') => self.pos += 1,
                        Some(b')') => {
                            self.pos += 1;
                            break;
                        }
                        _ => return Err(self.err("expected ',' or ')'")),
                    }
                }
            }
            Ok(Term::app(level, index, part, args))
        } else {
            let start = self.pos;
            while self.pos < self.s.len() {
                let c = self.s[self.pos];
                if c.is_ascii_whitespace() || matches!(c, b'(' | b')' | b',' | b'=' | b'#') {
                    break;
                }
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.err("expected a term"));
            }
            let name = std::str::from_utf8(&self.s[start..self.pos]).map_err(|_| self.err("invalid UTF-8"))?;
            Ok(Term::gen(name))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_term() -> impl Strategy<Value = Term> {
        let leaf = "[a-z][a-z0-9]{0,3}".prop_map(Term::gen);
        leaf.prop_recursive(4, 32, 4, |inner| {
            (0u32..4, 0u32..5, 0u32..2, prop::collection::vec(inner, 0..4))
                .prop_map(|(l, i, p, a)| Term::app(l, i, p, a))
        })
    }

    #[test]
    fn display_and_depth() {
        let x = Term::gen("x");
        let m = Term::app(1, 0, 0, vec![x.clone(), x.clone()]);
        assert_eq!(m.to_string(), "#1.0(x,x)");
        assert_eq!(m.depth(), 1);
        let p = Term::app(2, 3, 1, vec![m.clone()]);
        assert_eq!(p.to_string(), "#2.3/1(#1.0(x,x))");
        assert_eq!(p.depth(), 2);
        assert_eq!(p.max_level(), 2);
    }

    #[test]
    fn generators_sort_before_fillers() {
        let a = Term::gen("z");
        let b = Term::app(0, 0, 0, vec![]);
        assert!(a < b);
    }

    #[test]
    fn substitute_replaces_leaves() {
        let t = Term::parse("#1.0(a,#1.1(b,a))").unwrap();
        let s = t.substitute(&|n| (n == "a").then(|| Term::gen("q")));
        assert_eq!(s.to_string(), "#1.0(q,#1.1(b,q))");
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(Term::parse("#1(").is_err());
        assert!(Term::parse("a b").is_err());
        assert!(Term::parse("").is_err());
    }

    proptest! {
        #[test]
        fn parse_roundtrips(t in arb_term()) {
            let back = Term::parse(&t.to_string()).unwrap();
            prop_assert_eq!(&back, &t);
            prop_assert_eq!(back.cmp(&t), Ordering::Equal);
        }

        #[test]
        fn equal_terms_hash_equal(t in arb_term()) {
            let copy = Term::parse(&t.to_string()).unwrap();
            let h = |x: &Term| { let mut h = DefaultHasher::new(); x.hash(&mut h); h.finish() };
            prop_assert_eq!(h(&copy), h(&t));
        }
    }
}
