//! Pushouts along monomorphisms and coproducts of globular sets.

use std::sync::Arc;

use thiserror::Error;

use crate::globset::{Cell, GlobularSet};
use crate::map::GlobularMap;
use crate::term::{Term, TermKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ColimitError {
    #[error("the two legs of a span must share their domain")]
    DomainMismatch,
    #[error("pushouts are only computed when at least one leg is mono")]
    NeitherMono,
}

/// A pushout square `B → P ← C` under a span `B ← A → C`.
#[derive(Clone, Debug)]
pub struct Pushout {
    pub object: Arc<GlobularSet>,
    /// Coprojection from the codomain of the first leg.
    pub from_first: GlobularMap,
    /// Coprojection from the codomain of the second leg; `None` when
    /// truncation dropped cells of it (listed in `skipped`).
    pub from_second: Option<GlobularMap>,
    /// Fresh cells not created because they would exceed the truncation
    /// bound of the result (or sit on such cells).
    pub skipped: Vec<(usize, Term)>,
}

/// Pushout of `f: A → B` and `g: A → C` where one leg is mono, computed as
/// "keep the codomain of the other leg, adjoin fresh copies of the rest".
/// Fresh cells keep their names, primed on collision.
pub fn pushout(f: &GlobularMap, g: &GlobularMap) -> Result<Pushout, ColimitError> {
    if **f.dom() != **g.dom() {
        return Err(ColimitError::DomainMismatch);
    }
    if g.is_mono() {
        let target = f.cod().clone();
        Ok(glue(f, g, &mut |_, t| fresh_name(&target, t)))
    } else if f.is_mono() {
        let target = g.cod().clone();
        let swapped = glue(g, f, &mut |_, t| fresh_name(&target, t));
        // Present the square with the legs in the caller's order.
        match swapped.from_second {
            Some(from_b) if swapped.skipped.is_empty() => Ok(Pushout {
                object: swapped.object,
                from_first: from_b,
                from_second: Some(swapped.from_first),
                skipped: Vec::new(),
            }),
            _ => Ok(Pushout {
                object: swapped.object,
                from_first: swapped.from_first,
                from_second: None,
                skipped: swapped.skipped,
            }),
        }
    } else {
        Err(ColimitError::NeitherMono)
    }
}

/// Pushout of `f: A → B` along the mono `g: A → C` with caller-chosen names
/// for the fresh cells. The result keeps `B` verbatim (its cells first, in
/// order) and has `B`'s truncation bound.
pub fn pushout_named(
    f: &GlobularMap,
    g: &GlobularMap,
    name: &mut dyn FnMut(Cell, &Term) -> Term,
) -> Result<Pushout, ColimitError> {
    if **f.dom() != **g.dom() {
        return Err(ColimitError::DomainMismatch);
    }
    if !g.is_mono() {
        return Err(ColimitError::NeitherMono);
    }
    Ok(glue(f, g, name))
}

fn glue(f: &GlobularMap, g: &GlobularMap, name: &mut dyn FnMut(Cell, &Term) -> Term) -> Pushout {
    let b = f.cod();
    let c = g.cod();
    let mut p = (**b).clone();
    // Where each cell of C lands in P.
    let mut place: Vec<Vec<Option<usize>>> = (0..=c.max_dim()).map(|d| vec![None; c.len(d)]).collect();
    for &a in f.dom().cells() {
        let gc = g.apply(a);
        place[gc.dim][gc.idx] = Some(f.apply(a).idx);
    }
    let mut skipped = Vec::new();
    let mut is_fresh: Vec<Vec<bool>> = (0..=c.max_dim()).map(|d| vec![false; c.len(d)]).collect();
    let by_dim: Vec<Cell> = (0..=c.max_dim()).flat_map(|d| c.cells_of_dim(d)).collect();
    for cell in by_dim {
        if place[cell.dim][cell.idx].is_some() {
            continue;
        }
        let term = c.term(cell);
        let boundary = match c.boundary(cell) {
            None => Some(None),
            Some((s, t)) => match (place[s.dim][s.idx], place[t.dim][t.idx]) {
                (Some(s), Some(t)) => Some(Some((s, t))),
                _ => None,
            },
        };
        match boundary {
            Some(bd) if cell.dim <= p.max_dim() => {
                let fresh = name(cell, term);
                let added = p
                    .add_cell(cell.dim, fresh, bd)
                    .expect("fresh names are unique and boundaries valid");
                place[cell.dim][cell.idx] = Some(added.idx);
                is_fresh[cell.dim][cell.idx] = true;
            }
            _ => skipped.push((cell.dim, term.clone())),
        }
    }
    // Fresh cells follow B in C's own global order.
    let mut order: Vec<Cell> = b.cells().to_vec();
    order.extend(
        c.cells()
            .iter()
            .filter(|x| is_fresh[x.dim][x.idx])
            .map(|x| Cell::new(x.dim, place[x.dim][x.idx].expect("placed"))),
    );
    p.set_order(order).expect("every cell listed once");
    let p = Arc::new(p);
    let from_first = GlobularMap::new(
        b.clone(),
        p.clone(),
        (0..=b.max_dim()).map(|d| (0..b.len(d)).collect()).collect(),
    )
    .expect("B embeds in the pushout");
    let from_second = if skipped.is_empty() {
        let assign = place
            .into_iter()
            .map(|row| row.into_iter().map(|x| x.expect("every cell placed")).collect())
            .collect();
        Some(GlobularMap::new(c.clone(), p.clone(), assign).expect("coprojection commutes"))
    } else {
        None
    };
    Pushout {
        object: p,
        from_first,
        from_second,
        skipped,
    }
}

/// `t`, primed until it does not collide with a cell of `taken` in any dimension.
fn fresh_name(taken: &GlobularSet, t: &Term) -> Term {
    let collides = |x: &Term| (0..=taken.max_dim()).any(|d| taken.contains(d, x));
    let mut cur = t.clone();
    while collides(&cur) {
        cur = match cur.kind() {
            TermKind::Gen(n) => Term::gen(format!("{n}'")),
            TermKind::App { .. } => Term::gen(format!("{cur}'")),
        };
    }
    cur
}

/// Coproduct `A + B` with its two injections; cells of `B` are primed on
/// name collision.
pub fn coproduct(a: &Arc<GlobularSet>, b: &Arc<GlobularSet>) -> (Arc<GlobularSet>, GlobularMap, GlobularMap) {
    let d = a.max_dim().max(b.max_dim());
    let a_wide = Arc::new(a.renamed(d, |_, t| t.clone()).expect("copy of a valid set"));
    let empty = Arc::new(GlobularSet::new(0));
    let to_a = GlobularMap::new(empty.clone(), a_wide.clone(), vec![vec![]]).expect("empty map");
    let to_b = GlobularMap::new(empty, b.clone(), vec![vec![]]).expect("empty map");
    let po = pushout(&to_a, &to_b).expect("empty maps are mono");
    let inl = GlobularMap::new(a.clone(), po.object.clone(), {
        let mut rows: Vec<Vec<usize>> = po.from_first.assignment().to_vec();
        rows.truncate(a.max_dim() + 1);
        rows
    })
    .expect("left injection");
    let inr = po.from_second.expect("no truncation in coproducts");
    (po.object, inl, inr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{enumerate_maps, find_isomorphism};
    use crate::shapes::{boundary_inclusion, disk, sphere};

    #[test]
    fn sphere_is_two_disks_glued_along_their_boundary() {
        for n in 1..=3 {
            let j = boundary_inclusion(n - 1);
            let po = pushout(&j, &j).unwrap();
            assert!(po.skipped.is_empty());
            assert!(find_isomorphism(&po.object, &Arc::new(sphere(n))).is_some(), "n = {n}");
        }
    }

    #[test]
    fn pushout_along_identity() {
        let y2 = Arc::new(disk(2));
        let j = boundary_inclusion(1);
        let id = GlobularMap::identity(j.dom().clone());
        let po = pushout(&j, &id).unwrap();
        assert_eq!(*po.object, *y2);
        assert!(po.from_first.is_iso());
    }

    #[test]
    fn coproduct_of_disks() {
        let (sum, inl, inr) = coproduct(&Arc::new(disk(1)), &Arc::new(disk(2)));
        assert_eq!(sum.census(), vec![4, 3, 1]);
        assert!(inl.is_mono() && inr.is_mono());
    }

    #[test]
    fn neither_leg_mono_is_refused() {
        let y1 = Arc::new(disk(1));
        let s0 = Arc::new(sphere(0));
        let collapse = enumerate_maps(&s0, &y1).into_iter().find(|m| !m.is_mono()).unwrap();
        assert_eq!(pushout(&collapse, &collapse).unwrap_err(), ColimitError::NeitherMono);
    }

    #[test]
    fn truncation_drops_fresh_cells() {
        // Glue Y(2) onto Y(1) along its boundary... with the result truncated at 1.
        let j1 = boundary_inclusion(1);
        let y1 = Arc::new(disk(1));
        let s1 = j1.dom().clone();
        let collapse = enumerate_maps(&s1, &y1).remove(0);
        let po = pushout_named(&collapse, &j1, &mut |_, t| t.clone()).unwrap();
        assert_eq!(po.skipped.len(), 1);
        assert!(po.from_second.is_none());
    }
}
