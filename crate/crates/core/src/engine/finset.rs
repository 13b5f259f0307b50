//! The Set instance of [`ComputableBase`]: finite sets of named elements.
//!
//! Elements are cells of dimension 0. Used for finitary algebras, where
//! an `n`-ary operation is the attachment `n ↪ n + 1`.

use std::collections::HashMap;
use std::fmt;
use std::ops::ControlFlow;
use std::sync::Arc;

use super::{Adjoined, ComputableBase};
use crate::globset::Cell;
use crate::term::Term;

/// A finite set of distinctly named elements, in insertion order.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct FinSet {
    cells: Vec<Cell>,
    terms: Vec<Term>,
    index: HashMap<Term, usize>,
}

impl FinSet {
    pub fn new() -> FinSet {
        FinSet::default()
    }

    /// The set `{v1, …, vn}`.
    pub fn standard(n: usize) -> FinSet {
        FinSet::from_terms((1..=n).map(|i| Term::gen(format!("v{i}")))).expect("distinct names")
    }

    /// A set with the given elements; `None` on a repeated element.
    pub fn from_terms(terms: impl IntoIterator<Item = Term>) -> Option<FinSet> {
        let mut s = FinSet::new();
        for t in terms {
            s.insert(t)?;
        }
        Some(s)
    }

    /// Adds an element; `None` if it is already present.
    pub fn insert(&mut self, t: Term) -> Option<Cell> {
        if self.index.contains_key(&t) {
            return None;
        }
        let c = Cell::new(0, self.terms.len());
        self.index.insert(t.clone(), c.idx);
        self.terms.push(t);
        self.cells.push(c);
        Some(c)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn position(&self, t: &Term) -> Option<usize> {
        self.index.get(t).copied()
    }
}

impl fmt::Debug for FinSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.terms.iter().map(|t| t.to_string())).finish()
    }
}

/// A function between finite sets.
#[derive(Clone, Debug)]
pub struct FinMap {
    pub dom: Arc<FinSet>,
    pub cod: Arc<FinSet>,
    pub images: Vec<usize>,
}

impl FinMap {
    /// Validates that every image is in range.
    pub fn new(dom: Arc<FinSet>, cod: Arc<FinSet>, images: Vec<usize>) -> Option<FinMap> {
        (images.len() == dom.len() && images.iter().all(|&i| i < cod.len())).then_some(FinMap { dom, cod, images })
    }

    /// The standard inclusion `{v1..vm} ↪ {v1..vn}`, `m ≤ n`.
    pub fn standard_inclusion(m: usize, n: usize) -> FinMap {
        assert!(m <= n, "inclusion needs m ≤ n");
        FinMap::new(Arc::new(FinSet::standard(m)), Arc::new(FinSet::standard(n)), (0..m).collect())
            .expect("in range")
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = vec![false; self.cod.len()];
        self.images.iter().all(|&i| !std::mem::replace(&mut seen[i], true))
    }

    pub fn is_surjective(&self) -> bool {
        let mut seen = vec![false; self.cod.len()];
        for &i in &self.images {
            seen[i] = true;
        }
        seen.into_iter().all(|b| b)
    }
}

/// Finite sets and functions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FinSetBase;

impl ComputableBase for FinSetBase {
    type Object = FinSet;
    type Map = FinMap;

    fn empty_like(&self, _like: &FinSet) -> FinSet {
        FinSet::new()
    }

    fn cells<'a>(&self, x: &'a FinSet) -> &'a [Cell] {
        &x.cells
    }

    fn term<'a>(&self, x: &'a FinSet, c: Cell) -> &'a Term {
        &x.terms[c.idx]
    }

    fn contains(&self, x: &FinSet, c: Cell) -> bool {
        c.dim == 0 && c.idx < x.len()
    }

    fn find(&self, x: &FinSet, dim: usize, t: &Term) -> Option<Cell> {
        if dim != 0 {
            return None;
        }
        x.position(t).map(|i| Cell::new(0, i))
    }

    fn boundary(&self, _x: &FinSet, _c: Cell) -> Option<(Cell, Cell)> {
        None
    }

    /// All functions `a → x`, lexicographically (first element slowest).
    fn for_each_hom(
        &self,
        a: &FinSet,
        x: &FinSet,
        allow: &dyn Fn(Cell) -> bool,
        visit: &mut dyn FnMut(&[Cell]) -> ControlFlow<()>,
    ) {
        let allowed: Vec<Cell> = x.cells.iter().copied().filter(|&c| allow(c)).collect();
        let k = a.len();
        if k == 0 {
            let _ = visit(&[]);
            return;
        }
        if allowed.is_empty() {
            return;
        }
        let mut digits = vec![0usize; k];
        let mut buf = vec![allowed[0]; k];
        loop {
            for (slot, &d) in buf.iter_mut().zip(&digits) {
                *slot = allowed[d];
            }
            if visit(&buf).is_break() {
                return;
            }
            // Odometer increment, last position fastest.
            let mut pos = k;
            loop {
                if pos == 0 {
                    return;
                }
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < allowed.len() {
                    break;
                }
                digits[pos] = 0;
            }
        }
    }

    fn dom<'a>(&self, f: &'a FinMap) -> &'a FinSet {
        &f.dom
    }

    fn cod<'a>(&self, f: &'a FinMap) -> &'a FinSet {
        &f.cod
    }

    fn apply(&self, f: &FinMap, c: Cell) -> Cell {
        Cell::new(0, f.images[c.idx])
    }

    fn is_mono(&self, f: &FinMap) -> bool {
        f.is_injective()
    }

    fn map_from_images(&self, a: &FinSet, x: &FinSet, images: &[Cell]) -> Option<FinMap> {
        if images.iter().any(|c| c.dim != 0) {
            return None;
        }
        FinMap::new(Arc::new(a.clone()), Arc::new(x.clone()), images.iter().map(|c| c.idx).collect())
    }

    fn is_finitely_presentable(&self, _a: &FinSet) -> bool {
        true
    }

    fn adjoin(&self, x: &mut FinSet, alpha: &FinMap, _attach: &[Cell], name: &mut dyn FnMut(Cell) -> Term) -> Adjoined {
        let mut hit = vec![false; alpha.cod.len()];
        for &i in &alpha.images {
            hit[i] = true;
        }
        let mut out = Adjoined::default();
        for (i, h) in hit.into_iter().enumerate() {
            if h {
                continue;
            }
            let c = Cell::new(0, i);
            let new = x.insert(name(c)).expect("fresh fillers have fresh names");
            out.added.push((c, new));
        }
        out
    }

    fn coproduct(&self, a: &FinSet, b: &FinSet) -> (FinSet, FinMap, FinMap) {
        let mut sum = a.clone();
        let mut right = Vec::with_capacity(b.len());
        for t in &b.terms {
            let mut cur = t.clone();
            while sum.position(&cur).is_some() {
                cur = Term::gen(format!("{cur}'"));
            }
            right.push(sum.insert(cur).expect("primed until fresh").idx);
        }
        let s = Arc::new(sum.clone());
        let inl = FinMap::new(Arc::new(a.clone()), s.clone(), (0..a.len()).collect()).expect("in range");
        let inr = FinMap::new(Arc::new(b.clone()), s, right).expect("in range");
        (sum, inl, inr)
    }

    fn sub_object(&self, x: &FinSet, keep: &dyn Fn(Cell) -> bool) -> (FinSet, FinMap) {
        let kept: Vec<Cell> = x.cells.iter().copied().filter(|&c| keep(c)).collect();
        let sub = FinSet::from_terms(kept.iter().map(|c| x.terms[c.idx].clone())).expect("distinct");
        let inc = FinMap::new(Arc::new(sub.clone()), Arc::new(x.clone()), kept.iter().map(|c| c.idx).collect())
            .expect("in range");
        (sub, inc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hom_counts() {
        let base = FinSetBase;
        let mut n = 0;
        base.for_each_hom(&FinSet::standard(2), &FinSet::standard(3), &|_| true, &mut |_| {
            n += 1;
            ControlFlow::Continue(())
        });
        assert_eq!(n, 9);
        let mut n = 0;
        base.for_each_hom(&FinSet::standard(0), &FinSet::new(), &|_| true, &mut |_| {
            n += 1;
            ControlFlow::Continue(())
        });
        assert_eq!(n, 1);
    }

    #[test]
    fn homs_are_lexicographic() {
        let base = FinSetBase;
        let mut seen = Vec::new();
        base.for_each_hom(&FinSet::standard(2), &FinSet::standard(2), &|_| true, &mut |imgs| {
            seen.push((imgs[0].idx, imgs[1].idx));
            ControlFlow::Continue(())
        });
        assert_eq!(seen, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    }

    #[test]
    fn coproduct_primes_collisions() {
        let (sum, inl, inr) = FinSetBase.coproduct(&FinSet::standard(2), &FinSet::standard(1));
        assert_eq!(sum.len(), 3);
        assert!(inl.is_injective() && inr.is_injective());
        assert_eq!(sum.terms()[2].to_string(), "v1'");
    }
}
