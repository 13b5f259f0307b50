//! Disks, spheres, boundary inclusions, and the sphere classifier check.
//!
//! The disk `Y(n)` has one top cell in dimension `n` and, in each lower
//! dimension `k`, a negative cell `s{k}` and a positive cell `t{k}`; both
//! `s{k}` and `t{k}` run from `s{k-1}` to `t{k-1}`. The sphere `S(n)` is the
//! same without the top cell, with both cells kept in dimension `n`.

use std::collections::HashSet;
use std::ops::ControlFlow;
use std::sync::Arc;

use crate::contract::is_parallel;
use crate::globset::{Cell, GlobularSet};
use crate::map::{for_each_map, GlobularMap};
use crate::term::Term;

/// Name of the top cell of a disk.
pub const TOP: &str = "top";

fn polar_cells(g: &mut GlobularSet, upto: usize) {
    for k in 0..upto {
        for pol in ["s", "t"] {
            let b = (k > 0).then_some((0, 1));
            g.add_cell(k, Term::gen(format!("{pol}{k}")), b)
                .expect("disk cells are valid");
        }
    }
}

/// Rearranges the global order into the canonical traversal: negative
/// cells by ascending dimension, then positive ones, then the top cell.
fn polarity_order(g: &mut GlobularSet, upto: usize, top: Option<usize>) {
    let mut order: Vec<Cell> = (0..upto).map(|k| Cell::new(k, 0)).collect();
    order.extend((0..upto).map(|k| Cell::new(k, 1)));
    order.extend(top.map(|n| Cell::new(n, 0)));
    g.set_order(order).expect("a permutation of the cells");
}

/// The representable `Y(n)`, truncated at `n`: `2n + 1` cells.
pub fn disk(n: usize) -> GlobularSet {
    let mut g = GlobularSet::new(n);
    polar_cells(&mut g, n);
    let b = (n > 0).then_some((0, 1));
    g.add_cell(n, Term::gen(TOP), b).expect("top cell is valid");
    polarity_order(&mut g, n, Some(n));
    g
}

/// The sphere `S(n)`: two cells in each dimension `0..=n`.
pub fn sphere(n: usize) -> GlobularSet {
    let mut g = GlobularSet::new(n);
    polar_cells(&mut g, n + 1);
    polarity_order(&mut g, n + 1, None);
    g
}

/// The boundary inclusion `j_n: S(n) → Y(n+1)`, hitting every cell but the top.
pub fn boundary_inclusion(n: usize) -> GlobularMap {
    let s = Arc::new(sphere(n));
    let y = Arc::new(disk(n + 1));
    let assign = (0..=n).map(|_| vec![0, 1]).collect();
    GlobularMap::new(s, y, assign).expect("j_n is a map")
}

/// Outcome of comparing maps `S(n) → X` with parallel pairs of `n`-cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SphereProbe {
    pub maps: usize,
    pub parallel_pairs: usize,
    /// The map ↦ (image of `s{n}`, image of `t{n}`) assignment is a bijection.
    pub bijective: bool,
}

/// Checks on one probe that `S(n)` classifies ordered parallel pairs of
/// `n`-cells: sending a map to the images of its two top cells is a
/// bijection onto the parallel pairs. Both sides are enumerated
/// independently: maps by backtracking, pairs by `is_parallel`.
pub fn sphere_probe(n: usize, x: &GlobularSet) -> SphereProbe {
    let s = sphere(n);
    let mut images = Vec::new();
    if n <= x.max_dim() {
        for_each_map(&s, x, &|_| true, &mut |assign| {
            images.push((assign[n][0], assign[n][1]));
            ControlFlow::Continue(())
        });
    }
    let mut pairs = HashSet::new();
    for a in 0..x.len(n) {
        for b in 0..x.len(n) {
            if is_parallel(x, Cell::new(n, a), Cell::new(n, b)).unwrap_or(false) {
                pairs.insert((a, b));
            }
        }
    }
    let distinct: HashSet<(usize, usize)> = images.iter().copied().collect();
    SphereProbe {
        maps: images.len(),
        parallel_pairs: pairs.len(),
        bijective: distinct.len() == images.len() && distinct == pairs,
    }
}

/// The sphere classifier check over a family of probes: true iff every
/// probe yields a bijection.
pub fn coequalizer_check_sphere(n: usize, probes: &[GlobularSet]) -> bool {
    probes.iter().all(|x| sphere_probe(n, x).bijective)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_census() {
        assert_eq!(disk(0).census(), vec![1]);
        assert_eq!(disk(2).census(), vec![2, 2, 1]);
        for n in 0..=5 {
            let d = disk(n);
            assert_eq!(d.total(), 2 * n + 1);
            d.check_globularity().unwrap();
        }
    }

    #[test]
    fn sphere_census() {
        assert_eq!(sphere(0).census(), vec![2]);
        assert_eq!(sphere(2).census(), vec![2, 2, 2]);
        for n in 0..=5 {
            assert_eq!(sphere(n).total(), 2 * (n + 1));
            sphere(n).check_globularity().unwrap();
        }
    }

    #[test]
    fn boundary_inclusions_are_mono_and_miss_only_the_top() {
        for n in 0..=4 {
            let j = boundary_inclusion(n);
            assert!(j.is_mono());
            assert_eq!(j.dom().total(), disk(n + 1).total() - 1);
            assert!(!j.is_epi());
        }
    }

    #[test]
    fn sphere_probe_on_disk_two() {
        let p = sphere_probe(1, &disk(2));
        // Y(2) has two parallel 1-cells: four ordered pairs.
        assert_eq!(p.parallel_pairs, 4);
        assert!(p.bijective);
        let p2 = sphere_probe(2, &disk(2));
        assert_eq!((p2.maps, p2.parallel_pairs), (1, 1));
    }
}
