//! The globular instance of [`ComputableBase`].

use std::collections::HashMap;
use std::ops::ControlFlow;
use std::sync::Arc;

use super::{Adjoined, ComputableBase};
use crate::colimit::coproduct;
use crate::globset::{Cell, GlobularSet};
use crate::map::{for_each_map, GlobularMap};
use crate::term::Term;

/// Dimension-truncated finite globular sets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GlobBase;

impl ComputableBase for GlobBase {
    type Object = GlobularSet;
    type Map = GlobularMap;

    fn empty_like(&self, like: &GlobularSet) -> GlobularSet {
        GlobularSet::new(like.max_dim())
    }

    fn cells<'a>(&self, x: &'a GlobularSet) -> &'a [Cell] {
        x.cells()
    }

    fn term<'a>(&self, x: &'a GlobularSet, c: Cell) -> &'a Term {
        x.term(c)
    }

    fn contains(&self, x: &GlobularSet, c: Cell) -> bool {
        c.dim <= x.max_dim() && c.idx < x.len(c.dim)
    }

    fn find(&self, x: &GlobularSet, dim: usize, t: &Term) -> Option<Cell> {
        if dim > x.max_dim() {
            return None;
        }
        x.find(dim, t)
    }

    fn boundary(&self, x: &GlobularSet, c: Cell) -> Option<(Cell, Cell)> {
        x.boundary(c)
    }

    fn for_each_hom(
        &self,
        a: &GlobularSet,
        x: &GlobularSet,
        allow: &dyn Fn(Cell) -> bool,
        visit: &mut dyn FnMut(&[Cell]) -> ControlFlow<()>,
    ) {
        let order = a.cells();
        let mut buf: Vec<Cell> = Vec::with_capacity(order.len());
        for_each_map(a, x, allow, &mut |assign| {
            buf.clear();
            for c in order {
                buf.push(Cell::new(c.dim, assign[c.dim][c.idx]));
            }
            visit(&buf)
        });
    }

    fn dom<'a>(&self, f: &'a GlobularMap) -> &'a GlobularSet {
        f.dom()
    }

    fn cod<'a>(&self, f: &'a GlobularMap) -> &'a GlobularSet {
        f.cod()
    }

    fn apply(&self, f: &GlobularMap, c: Cell) -> Cell {
        f.apply(c)
    }

    fn is_mono(&self, f: &GlobularMap) -> bool {
        f.is_mono()
    }

    fn map_from_images(&self, a: &GlobularSet, x: &GlobularSet, images: &[Cell]) -> Option<GlobularMap> {
        if images.len() != a.total() {
            return None;
        }
        let mut assign: Vec<Vec<usize>> = (0..=a.max_dim()).map(|d| vec![0; a.len(d)]).collect();
        for (c, img) in a.cells().iter().zip(images) {
            if img.dim != c.dim {
                return None;
            }
            assign[c.dim][c.idx] = img.idx;
        }
        GlobularMap::new(Arc::new(a.clone()), Arc::new(x.clone()), assign).ok()
    }

    fn is_finitely_presentable(&self, _a: &GlobularSet) -> bool {
        true
    }

    fn adjoin(
        &self,
        x: &mut GlobularSet,
        alpha: &GlobularMap,
        attach: &[Cell],
        name: &mut dyn FnMut(Cell) -> Term,
    ) -> Adjoined {
        let d = alpha.dom();
        let e = alpha.cod();
        let mut place: HashMap<Cell, Cell> = HashMap::new();
        for (c, &img) in d.cells().iter().zip(attach) {
            place.insert(alpha.apply(*c), img);
        }
        let mut out = Adjoined::default();
        // Dimension by dimension so boundaries are placed first.
        for dim in 0..=e.max_dim() {
            for c in e.cells_of_dim(dim) {
                if place.contains_key(&c) {
                    continue;
                }
                let term = name(c);
                let boundary = match e.boundary(c) {
                    None => Some(None),
                    Some((s, t)) => match (place.get(&s), place.get(&t)) {
                        (Some(s), Some(t)) => Some(Some((s.idx, t.idx))),
                        _ => None,
                    },
                };
                match boundary {
                    Some(b) if dim <= x.max_dim() => {
                        let new = x.add_cell(dim, term, b).expect("fresh fillers have fresh names and valid boundaries");
                        place.insert(c, new);
                        out.added.push((c, new));
                    }
                    _ => out.skipped.push((dim, term)),
                }
            }
        }
        out
    }

    fn coproduct(&self, a: &GlobularSet, b: &GlobularSet) -> (GlobularSet, GlobularMap, GlobularMap) {
        let (sum, inl, inr) = coproduct(&Arc::new(a.clone()), &Arc::new(b.clone()));
        ((*sum).clone(), inl, inr)
    }

    fn sub_object(&self, x: &GlobularSet, keep: &dyn Fn(Cell) -> bool) -> (GlobularSet, GlobularMap) {
        let mut sub = GlobularSet::new(x.max_dim());
        let mut assign: Vec<Vec<usize>> = vec![Vec::new(); x.max_dim() + 1];
        let mut local: HashMap<Cell, usize> = HashMap::new();
        for (dim, slot) in assign.iter_mut().enumerate() {
            for c in x.cells_of_dim(dim) {
                if !keep(c) {
                    continue;
                }
                let b = x.boundary(c).map(|(s, t)| (local[&s], local[&t]));
                let new = sub.add_cell(dim, x.term(c).clone(), b).expect("kept cells are closed under boundaries");
                local.insert(c, new.idx);
                slot.push(c.idx);
            }
        }
        let order = x.cells().iter().filter(|c| keep(**c)).map(|c| Cell::new(c.dim, local[c])).collect();
        sub.set_order(order).expect("same cells");
        let sub_arc = Arc::new(sub.clone());
        let inc = GlobularMap::new(sub_arc, Arc::new(x.clone()), assign).expect("inclusion of a sub-object");
        (sub, inc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::{boundary_inclusion, disk};

    #[test]
    fn adjoin_top_cell_of_a_disk() {
        let base = GlobBase;
        let mut x = disk(1);
        let j = boundary_inclusion(0);
        // Glue a 1-cell from the source point to itself.
        let s = x.find(0, &Term::gen("s0")).unwrap();
        let out = base.adjoin(&mut x, &j, &[s, s], &mut |_| Term::gen("loop"));
        assert_eq!(out.added.len(), 1);
        assert_eq!(x.census(), vec![2, 2]);
        let loop_cell = x.find(1, &Term::gen("loop")).unwrap();
        assert_eq!(x.boundary(loop_cell), Some((s, s)));
    }

    #[test]
    fn adjoin_respects_truncation() {
        let base = GlobBase;
        let mut x = disk(1);
        let j = boundary_inclusion(1);
        let f = x.find(1, &Term::gen("top")).unwrap();
        let out = base.adjoin(&mut x, &j, &[Cell::new(0, 0), f, Cell::new(0, 1), f], &mut |_| Term::gen("id"));
        assert!(out.added.is_empty());
        assert_eq!(out.skipped, vec![(2, Term::gen("id"))]);
    }

    #[test]
    fn sub_object_keeps_order_and_names() {
        let base = GlobBase;
        let x = disk(2);
        let (sub, inc) = base.sub_object(&x, &|c| c.dim < 2);
        assert_eq!(sub.census(), vec![2, 2, 0]);
        assert!(inc.is_mono());
        let names: Vec<String> = sub.cells().iter().map(|&c| sub.term(c).to_string()).collect();
        assert_eq!(names, ["s0", "s1", "t0", "t1"]);
    }
}
