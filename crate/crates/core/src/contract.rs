//! Parallel pairs, liftings, and contractibility up to a dimension.

use std::fmt;

use thiserror::Error;

use crate::globset::{Cell, GlobularSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PairError {
    #[error("cells of dimensions {0} and {1} cannot form a pair")]
    DimensionMismatch(usize, usize),
    #[error("cells are not parallel")]
    NotParallel,
    #[error("liftings of {0}-cells need the carrier to reach dimension {1}")]
    NoRoomForLifting(usize, usize),
}

/// Two `dim`-cells of a carrier that share source and target (any two
/// 0-cells qualify).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParallelPair {
    pub dim: usize,
    pub left: usize,
    pub right: usize,
}

impl ParallelPair {
    /// Validates that `left` and `right` are parallel in `x`.
    pub fn new(x: &GlobularSet, left: Cell, right: Cell) -> Result<ParallelPair, PairError> {
        if is_parallel(x, left, right)? {
            Ok(ParallelPair {
                dim: left.dim,
                left: left.idx,
                right: right.idx,
            })
        } else {
            Err(PairError::NotParallel)
        }
    }

    pub fn left_cell(&self) -> Cell {
        Cell::new(self.dim, self.left)
    }

    pub fn right_cell(&self) -> Cell {
        Cell::new(self.dim, self.right)
    }

    /// `(left, right)` rendered with the carrier's cell names.
    pub fn display<'a>(&'a self, x: &'a GlobularSet) -> impl fmt::Display + 'a {
        PairDisplay { pair: self, x }
    }
}

struct PairDisplay<'a> {
    pair: &'a ParallelPair,
    x: &'a GlobularSet,
}

impl fmt::Display for PairDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}) in dim {}",
            self.x.term(self.pair.left_cell()),
            self.x.term(self.pair.right_cell()),
            self.pair.dim
        )
    }
}

/// True iff `a` and `b` are parallel: dimension 0, or equal sources and targets.
pub fn is_parallel(x: &GlobularSet, a: Cell, b: Cell) -> Result<bool, PairError> {
    if a.dim != b.dim {
        return Err(PairError::DimensionMismatch(a.dim, b.dim));
    }
    Ok(a.dim == 0 || x.boundary(a) == x.boundary(b))
}

/// All `(dim+1)`-cells from `left` to `right`, by position.
pub fn liftings_of(x: &GlobularSet, pair: &ParallelPair) -> Result<Vec<usize>, PairError> {
    if x.max_dim() < pair.dim + 1 {
        return Err(PairError::NoRoomForLifting(pair.dim, pair.dim + 1));
    }
    Ok(x.with_boundary(pair.dim + 1, pair.left, pair.right).to_vec())
}

/// Every parallel pair of dimension `< d` without a lifting, in canonical
/// order (by dimension, then left position, then right position). An
/// empty result means the set is contractible up to `d`.
pub fn unlifted_pairs(x: &GlobularSet, d: usize) -> Vec<ParallelPair> {
    let mut out = Vec::new();
    for dim in 0..d.min(x.max_dim() + 1) {
        let n = x.len(dim);
        for left in 0..n {
            for right in 0..n {
                if !is_parallel(x, Cell::new(dim, left), Cell::new(dim, right)).unwrap_or(false) {
                    continue;
                }
                if x.with_boundary(dim + 1, left, right).is_empty() {
                    out.push(ParallelPair { dim, left, right });
                }
            }
        }
    }
    out
}

/// Result of [`is_contractible_up_to`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractibilityReport {
    pub depth: usize,
    pub missing: Vec<ParallelPair>,
}

impl ContractibilityReport {
    pub fn is_contractible(&self) -> bool {
        self.missing.is_empty()
    }
}

/// Lists every parallel pair of dimension `< d` that has no lifting. Pairs
/// in the top dimension of a set truncated below `d` count as unlifted.
pub fn is_contractible_up_to(x: &GlobularSet, d: usize) -> ContractibilityReport {
    ContractibilityReport {
        depth: d,
        missing: unlifted_pairs(x, d),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::{disk, sphere};
    use crate::term::Term;

    fn terminal(d: usize) -> GlobularSet {
        let mut g = GlobularSet::new(d);
        for k in 0..=d {
            g.add_cell(k, Term::gen(format!("u{k}")), (k > 0).then_some((0, 0))).unwrap();
        }
        g
    }

    #[test]
    fn zero_cells_are_always_parallel() {
        let s = sphere(0);
        assert!(is_parallel(&s, Cell::new(0, 0), Cell::new(0, 1)).unwrap());
    }

    #[test]
    fn disk_one_cells_are_parallel() {
        let y2 = disk(2);
        assert!(is_parallel(&y2, Cell::new(1, 0), Cell::new(1, 1)).unwrap());
        assert!(is_parallel(&y2, Cell::new(1, 0), Cell::new(0, 0)).is_err());
    }

    #[test]
    fn liftings_in_small_shapes() {
        let y1 = disk(1);
        let p = ParallelPair::new(&y1, Cell::new(0, 0), Cell::new(0, 1)).unwrap();
        assert_eq!(liftings_of(&y1, &p).unwrap(), vec![0]);
        let s1 = sphere(1);
        let p = ParallelPair::new(&s1, Cell::new(0, 0), Cell::new(0, 1)).unwrap();
        assert_eq!(liftings_of(&s1, &p).unwrap(), vec![0, 1]);
        let y0 = disk(0);
        let p = ParallelPair::new(&y0, Cell::new(0, 0), Cell::new(0, 0)).unwrap();
        assert!(liftings_of(&y0, &p).is_err());
    }

    #[test]
    fn contractibility_examples() {
        assert!(is_contractible_up_to(&terminal(3), 3).is_contractible());
        let r = is_contractible_up_to(&disk(0), 1);
        assert_eq!(r.missing, vec![ParallelPair { dim: 0, left: 0, right: 0 }]);
        let r = is_contractible_up_to(&sphere(1), 1);
        assert_eq!(r.missing[0], ParallelPair { dim: 0, left: 0, right: 0 });
    }
}
