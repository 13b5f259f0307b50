//! Maps of globular sets and finite hom-set enumeration.

use std::collections::HashMap;
use std::fmt;
use std::ops::ControlFlow;
use std::sync::Arc;

use thiserror::Error;

use crate::globset::{Cell, GlobularSet};
use crate::term::Term;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MapError {
    #[error("assignment shape does not match the domain")]
    Shape,
    #[error("domain has cells above the codomain's truncation bound")]
    Truncation,
    #[error("image of {cell} is out of range")]
    OutOfRange { cell: Term },
    #[error("map does not commute with {which} at {cell}")]
    NotGlobular { cell: Term, which: &'static str },
    #[error("maps are not composable")]
    NotComposable,
}

/// A morphism of globular sets, stored as per-dimension position tables.
#[derive(Clone)]
pub struct GlobularMap {
    dom: Arc<GlobularSet>,
    cod: Arc<GlobularSet>,
    assign: Vec<Vec<usize>>,
}

impl GlobularMap {
    /// Builds and validates a map. `assign[d][i]` is the position of the
    /// image of the `i`-th `d`-cell of `dom`.
    pub fn new(dom: Arc<GlobularSet>, cod: Arc<GlobularSet>, assign: Vec<Vec<usize>>) -> Result<GlobularMap, MapError> {
        let m = GlobularMap { dom, cod, assign };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<(), MapError> {
        let dom = &*self.dom;
        let cod = &*self.cod;
        if self.assign.len() != dom.max_dim() + 1 {
            return Err(MapError::Shape);
        }
        for (dim, row) in self.assign.iter().enumerate() {
            if row.len() != dom.len(dim) {
                return Err(MapError::Shape);
            }
            if dim > cod.max_dim() && !row.is_empty() {
                return Err(MapError::Truncation);
            }
            for (idx, &img) in row.iter().enumerate() {
                let c = Cell::new(dim, idx);
                if img >= cod.len(dim) {
                    return Err(MapError::OutOfRange { cell: dom.term(c).clone() });
                }
                if let Some((s, t)) = dom.boundary(c) {
                    let ic = Cell::new(dim, img);
                    if cod.src(ic).idx != self.assign[dim - 1][s.idx] {
                        return Err(MapError::NotGlobular {
                            cell: dom.term(c).clone(),
                            which: "source",
                        });
                    }
                    if cod.tgt(ic).idx != self.assign[dim - 1][t.idx] {
                        return Err(MapError::NotGlobular {
                            cell: dom.term(c).clone(),
                            which: "target",
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Builds a map from the images (in `cod`) of the cells of `dom`, listed
    /// in `dom`'s global order. Returns `None` if a term is missing from
    /// `cod` or the result is not a map.
    pub fn from_images(dom: Arc<GlobularSet>, cod: Arc<GlobularSet>, images: &[Term]) -> Option<GlobularMap> {
        if images.len() != dom.total() {
            return None;
        }
        let mut assign: Vec<Vec<usize>> = (0..=dom.max_dim()).map(|d| vec![0; dom.len(d)]).collect();
        for (c, t) in dom.cells().iter().zip(images) {
            assign[c.dim][c.idx] = cod.find(c.dim, t)?.idx;
        }
        GlobularMap::new(dom, cod, assign).ok()
    }

    pub fn identity(x: Arc<GlobularSet>) -> GlobularMap {
        let assign = (0..=x.max_dim()).map(|d| (0..x.len(d)).collect()).collect();
        GlobularMap {
            dom: x.clone(),
            cod: x,
            assign,
        }
    }

    pub fn dom(&self) -> &Arc<GlobularSet> {
        &self.dom
    }

    pub fn cod(&self) -> &Arc<GlobularSet> {
        &self.cod
    }

    pub fn assignment(&self) -> &[Vec<usize>] {
        &self.assign
    }

    pub fn apply(&self, c: Cell) -> Cell {
        Cell::new(c.dim, self.assign[c.dim][c.idx])
    }

    /// Images of the domain's cells in the domain's global order: the
    /// configuration encoding of the map.
    pub fn images(&self) -> Vec<Term> {
        self.dom
            .cells()
            .iter()
            .map(|&c| self.cod.term(self.apply(c)).clone())
            .collect()
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &GlobularMap) -> Result<GlobularMap, MapError> {
        if *self.cod != *other.dom {
            return Err(MapError::NotComposable);
        }
        let assign = self
            .assign
            .iter()
            .enumerate()
            .map(|(d, row)| row.iter().map(|&i| other.assign[d][i]).collect())
            .collect();
        Ok(GlobularMap {
            dom: self.dom.clone(),
            cod: other.cod.clone(),
            assign,
        })
    }

    /// Injective in every dimension.
    pub fn is_mono(&self) -> bool {
        self.assign.iter().all(|row| {
            let mut seen = row.clone();
            seen.sort_unstable();
            seen.windows(2).all(|w| w[0] != w[1])
        })
    }

    /// Surjective in every dimension of the codomain.
    pub fn is_epi(&self) -> bool {
        (0..=self.cod.max_dim()).all(|d| {
            let mut hit = vec![false; self.cod.len(d)];
            if let Some(row) = self.assign.get(d) {
                for &i in row {
                    hit[i] = true;
                }
            }
            hit.into_iter().all(|h| h)
        })
    }

    pub fn is_iso(&self) -> bool {
        self.is_mono() && self.is_epi()
    }

    /// A pair of distinct cells identified by the map, if any.
    pub fn collision(&self) -> Option<(Cell, Cell)> {
        for (d, row) in self.assign.iter().enumerate() {
            let mut first = std::collections::HashMap::new();
            for (i, &img) in row.iter().enumerate() {
                if let Some(&j) = first.get(&img) {
                    return Some((Cell::new(d, j), Cell::new(d, i)));
                }
                first.insert(img, i);
            }
        }
        None
    }
}

impl PartialEq for GlobularMap {
    fn eq(&self, other: &GlobularMap) -> bool {
        self.assign == other.assign && *self.dom == *other.dom && *self.cod == *other.cod
    }
}

impl Eq for GlobularMap {}

impl fmt::Debug for GlobularMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for GlobularMap {
    /// `[a↦x, b↦y, f↦g]` in the domain's global order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, &c) in self.dom.cells().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}↦{}", self.dom.term(c), self.cod.term(self.apply(c)))?;
        }
        f.write_str("]")
    }
}

/// Factors `r` through the mono `p` (same codomain): the unique `q` with
/// `p ∘ q = r`, present exactly when the image of `r` lies in the image of `p`.
pub fn factor_through(r: &GlobularMap, p: &GlobularMap) -> Option<GlobularMap> {
    if *r.cod != *p.cod || !p.is_mono() {
        return None;
    }
    let mut assign = Vec::with_capacity(r.assign.len());
    for (d, row) in r.assign.iter().enumerate() {
        let mut inverse = std::collections::HashMap::new();
        if let Some(prow) = p.assign.get(d) {
            for (i, &img) in prow.iter().enumerate() {
                inverse.insert(img, i);
            }
        }
        let mut out = Vec::with_capacity(row.len());
        for img in row {
            out.push(*inverse.get(img)?);
        }
        assign.push(out);
    }
    GlobularMap::new(r.dom.clone(), p.dom.clone(), assign).ok()
}

/// Calls `visit` with every map `a → x` (as a per-dimension position table)
/// whose images all satisfy `allow`, in canonical order: lexicographic in
/// the assignment, dimension by dimension, positions ascending. Stops early
/// if `visit` breaks.
pub fn for_each_map(
    a: &GlobularSet,
    x: &GlobularSet,
    allow: &dyn Fn(Cell) -> bool,
    visit: &mut dyn FnMut(&[Vec<usize>]) -> ControlFlow<()>,
) {
    if (x.max_dim() + 1..=a.max_dim()).any(|d| a.len(d) > 0) {
        return;
    }
    let slots: Vec<Cell> = (0..=a.max_dim()).flat_map(|d| a.cells_of_dim(d)).collect();
    // Forward checks: once both boundary cells of a higher cell are
    // assigned, some allowed cell of `x` must fit between their images.
    // This prunes without changing the enumeration order.
    let slot_of: HashMap<Cell, usize> = slots.iter().enumerate().map(|(k, &c)| (c, k)).collect();
    let mut checks: Vec<Vec<Cell>> = vec![Vec::new(); slots.len()];
    for &z in &slots {
        if let Some((s, t)) = a.boundary(z) {
            checks[slot_of[&s].max(slot_of[&t])].push(z);
        }
    }
    let mut assign: Vec<Vec<usize>> = (0..=a.max_dim()).map(|d| vec![usize::MAX; a.len(d)]).collect();
    let all_points: Vec<usize> = (0..x.len(0)).filter(|&i| allow(Cell::new(0, i))).collect();
    struct Search<'a> {
        slots: &'a [Cell],
        checks: &'a [Vec<Cell>],
        a: &'a GlobularSet,
        x: &'a GlobularSet,
        allow: &'a dyn Fn(Cell) -> bool,
        points: &'a [usize],
    }
    fn go(
        k: usize,
        s: &Search<'_>,
        assign: &mut Vec<Vec<usize>>,
        visit: &mut dyn FnMut(&[Vec<usize>]) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        let Some(&c) = s.slots.get(k) else {
            return visit(assign);
        };
        let candidates: &[usize] = match s.a.boundary(c) {
            None => s.points,
            Some((src, tgt)) => s.x.with_boundary(c.dim, assign[src.dim][src.idx], assign[tgt.dim][tgt.idx]),
        };
        for &cand in candidates {
            if c.dim > 0 && !(s.allow)(Cell::new(c.dim, cand)) {
                continue;
            }
            assign[c.dim][c.idx] = cand;
            let feasible = s.checks[k].iter().all(|&z| {
                let (src, tgt) = s.a.boundary(z).expect("checked cells have a boundary");
                s.x.with_boundary(z.dim, assign[src.dim][src.idx], assign[tgt.dim][tgt.idx])
                    .iter()
                    .any(|&w| (s.allow)(Cell::new(z.dim, w)))
            });
            if feasible {
                go(k + 1, s, assign, visit)?;
            }
        }
        ControlFlow::Continue(())
    }
    let search = Search {
        slots: &slots,
        checks: &checks,
        a,
        x,
        allow,
        points: &all_points,
    };
    let _ = go(0, &search, &mut assign, visit);
}

/// All maps `a → x` in canonical order.
pub fn enumerate_maps(a: &Arc<GlobularSet>, x: &Arc<GlobularSet>) -> Vec<GlobularMap> {
    let mut out = Vec::new();
    for_each_map(a, x, &|_| true, &mut |assign| {
        out.push(GlobularMap {
            dom: a.clone(),
            cod: x.clone(),
            assign: assign.to_vec(),
        });
        ControlFlow::Continue(())
    });
    out
}

/// Number of maps `a → x`, without materializing them.
pub fn count_maps(a: &GlobularSet, x: &GlobularSet) -> u64 {
    let mut n = 0u64;
    for_each_map(a, x, &|_| true, &mut |_| {
        n += 1;
        ControlFlow::Continue(())
    });
    n
}

/// An isomorphism `a → b`, if one exists (brute force).
pub fn find_isomorphism(a: &Arc<GlobularSet>, b: &Arc<GlobularSet>) -> Option<GlobularMap> {
    if a.census()[..] != b.census()[..] {
        return None;
    }
    let mut found = None;
    for_each_map(a, b, &|_| true, &mut |assign| {
        let m = GlobularMap {
            dom: a.clone(),
            cod: b.clone(),
            assign: assign.to_vec(),
        };
        if m.is_iso() {
            found = Some(m);
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::{boundary_inclusion, disk, sphere};

    #[test]
    fn disk_homs() {
        let y0 = Arc::new(disk(0));
        let y1 = Arc::new(disk(1));
        assert_eq!(enumerate_maps(&y0, &y1).len(), 2);
        assert_eq!(enumerate_maps(&y1, &y1).len(), 1);
        assert_eq!(enumerate_maps(&Arc::new(sphere(0)), &y1).len(), 4);
    }

    #[test]
    fn factor_through_identity_and_inclusion() {
        let y0 = Arc::new(disk(0));
        let y1 = Arc::new(disk(1));
        let sigma = enumerate_maps(&y0, &y1).remove(0);
        let id = GlobularMap::identity(y1.clone());
        assert_eq!(factor_through(&sigma, &id), Some(sigma.clone()));
        let j0 = boundary_inclusion(0);
        assert!(factor_through(&sigma, &j0).is_some());
        // The top cell of Y(1) is outside the image of j0.
        let id1 = GlobularMap::identity(y1);
        assert!(factor_through(&id1, &j0).is_none());
    }

    #[test]
    fn non_globular_assignment_rejected() {
        let y1 = Arc::new(disk(1));
        // Swap endpoints but keep the arrow: the arrow would go b → a.
        let bad = GlobularMap::new(y1.clone(), y1, vec![vec![1, 0], vec![0]]);
        assert!(matches!(bad, Err(MapError::NotGlobular { .. })));
    }

    #[test]
    fn images_roundtrip() {
        let y1 = Arc::new(disk(1));
        let y2 = Arc::new(disk(2));
        for m in enumerate_maps(&y1, &y2) {
            let back = GlobularMap::from_images(y1.clone(), y2.clone(), &m.images()).unwrap();
            assert_eq!(back, m);
        }
    }
}
