//! A generic algebraic-injectivity engine.
//!
//! Given a family of monos `α_i: D_i → E_i` (the *attachments*) over a
//! [`ComputableBase`], the engine builds semifinal lifting chains
//! `X₀ → X₁ → … → X_S`: stage `n + 1` is the pushout of one copy of `α_i`
//! for every lifting problem that is new at stage `n`. The fresh cells of
//! each copy are named by provenance terms `#level.index[/part](config)`,
//! so identical lifting problems synthesize identical cells across runs
//! and budgets.
//!
//! An attachment may separate the *shape* of its lifting problems from the
//! domain of `α_i`: a lifting problem is a map `shape → X`, and the
//! attaching map `D_i → X` is obtained by substituting the problem into
//! `attaching`, a list of terms over the shape's cells. With the shape
//! equal to `D_i` and identity terms this is the plain pushout of `α_i`.

mod chain;
mod extension;
mod finset;
mod glob;

use std::fmt;
use std::ops::ControlFlow;

use thiserror::Error;

use crate::globset::Cell;
use crate::term::Term;
use crate::theta::DimensionTable;

pub use chain::{
    free_injective, free_injective_bounded, pushout_free, semifinal_lift, semifinal_lift_bounded, AlgInj, Lifting, SemifinalChain, Sink, StageRecord,
};
pub use extension::{check_extension_property, Extension, ExtensionError, InjectiveStructure};
pub use finset::{FinMap, FinSet, FinSetBase};
pub use glob::GlobBase;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("attachment {level}.{index} is not a monomorphism")]
    NonMonoAttachment { level: u32, index: u32 },
    #[error("the sink member is not a monomorphism")]
    NonMonoSink,
    #[error("the arrow of a pushout of free maps is not a monomorphism")]
    NonMonoPushout,
    #[error("the sink member does not land in the object being lifted")]
    SinkMismatch,
    #[error("attachment {level}.{index} has a domain that is not finitely presentable")]
    NotFinitelyPresentable { level: u32, index: u32 },
    #[error("attachment {level}.{index} lists {got} attaching terms for {expected} domain cells")]
    AttachingArity {
        level: u32,
        index: u32,
        expected: usize,
        got: usize,
    },
    #[error("attaching term {term} of attachment {level}.{index} does not live over the shape")]
    AttachingTerm { level: u32, index: u32, term: Term },
    #[error("no attachment {level}.{index} in the family")]
    UnknownAttachment { level: u32, index: u32 },
    #[error("no cell {term} of dimension {dim} in the carrier")]
    UnknownCell { dim: usize, term: Term },
    #[error("configuration does not describe a map from the attachment's shape")]
    BadConfiguration,
    /// The chain needed more than `limit` units of work (configurations
    /// examined plus cells adjoined) before reaching its fuel.
    #[error("work limit of {limit} exceeded at stage {stage} ({cells} cells in the carrier)")]
    WorkLimit { limit: u64, stage: u32, cells: usize },
}

/// What the engine needs from a category: finite objects whose cells are
/// addressed by [`Cell`] and named by [`Term`], finite hom enumeration,
/// monos, factorization through monos, and pushouts of monos (as in-place
/// adjunction of fresh cells).
pub trait ComputableBase {
    type Object: Clone + fmt::Debug + PartialEq;
    type Map: Clone + fmt::Debug;

    /// An empty object with the same truncation as `like`.
    fn empty_like(&self, like: &Self::Object) -> Self::Object;
    /// All cells in the object's canonical traversal order.
    fn cells<'a>(&self, x: &'a Self::Object) -> &'a [Cell];
    fn term<'a>(&self, x: &'a Self::Object, c: Cell) -> &'a Term;
    fn find(&self, x: &Self::Object, dim: usize, t: &Term) -> Option<Cell>;
    /// True iff `c` addresses a cell of `x`.
    fn contains(&self, x: &Self::Object, c: Cell) -> bool;
    /// Source and target of a cell, when the base has boundaries.
    fn boundary(&self, x: &Self::Object, c: Cell) -> Option<(Cell, Cell)>;
    /// Calls `visit` with the images (listed in `a`'s traversal order) of
    /// every map `a → x` whose images satisfy `allow`, in canonical order.
    fn for_each_hom(
        &self,
        a: &Self::Object,
        x: &Self::Object,
        allow: &dyn Fn(Cell) -> bool,
        visit: &mut dyn FnMut(&[Cell]) -> ControlFlow<()>,
    );
    fn dom<'a>(&self, f: &'a Self::Map) -> &'a Self::Object;
    fn cod<'a>(&self, f: &'a Self::Map) -> &'a Self::Object;
    fn apply(&self, f: &Self::Map, c: Cell) -> Cell;
    fn is_mono(&self, f: &Self::Map) -> bool;
    /// The map `a → x` with the given images (in `a`'s traversal order),
    /// if it is one.
    fn map_from_images(&self, a: &Self::Object, x: &Self::Object, images: &[Cell]) -> Option<Self::Map>;
    /// Every finite object is finitely presentable in the bases provided;
    /// the hook exists so other bases can refuse.
    fn is_finitely_presentable(&self, a: &Self::Object) -> bool;
    /// Pushout of the mono `alpha: D → E` along the map `D → x` with images
    /// `attach` (in `D`'s traversal order), computed in place: the cells of
    /// `E` outside the image of `alpha` are added to `x` under the names
    /// chosen by `name`. Cells that cannot be added (truncation) are
    /// reported, together with every fresh cell depending on them.
    fn adjoin(
        &self,
        x: &mut Self::Object,
        alpha: &Self::Map,
        attach: &[Cell],
        name: &mut dyn FnMut(Cell) -> Term,
    ) -> Adjoined;
    /// Coproduct with its two injections (cells of `b` renamed on collision).
    fn coproduct(&self, a: &Self::Object, b: &Self::Object) -> (Self::Object, Self::Map, Self::Map);
    /// The sub-object of the cells satisfying `keep` (which must be closed
    /// under boundaries), in traversal order, with its inclusion.
    fn sub_object(&self, x: &Self::Object, keep: &dyn Fn(Cell) -> bool) -> (Self::Object, Self::Map);

    /// Unique factorization of a map (given by its images) through the
    /// mono `m` with the same codomain, by image membership.
    fn factor_through(&self, images: &[Cell], m: &Self::Map) -> Option<Vec<Cell>> {
        let dom = self.dom(m);
        let mut inverse = std::collections::HashMap::new();
        for &c in self.cells(dom) {
            inverse.insert(self.apply(m, c), c);
        }
        images.iter().map(|c| inverse.get(c).copied()).collect()
    }
}

/// Result of [`ComputableBase::adjoin`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Adjoined {
    /// `(cell of E, new cell of x)` for every fresh cell added.
    pub added: Vec<(Cell, Cell)>,
    /// Fresh cells not added, by dimension and intended name.
    pub skipped: Vec<(usize, Term)>,
}

/// The pair data behind a tower attachment: the fresh cell glues an
/// `(dim+1)`-cell from `left` to `right`, two parallel `dim`-cells of the
/// free model on the realization of `table`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct PairProvenance {
    pub table: DimensionTable,
    pub dim: usize,
    pub left: Term,
    pub right: Term,
}

/// One generating mono of an injectivity family.
#[derive(Clone, Debug)]
pub struct Attachment<B: ComputableBase> {
    pub level: u32,
    pub index: u32,
    /// Lifting problems are maps out of the shape.
    pub shape: B::Object,
    /// The mono whose pushouts adjoin the fillers.
    pub alpha: B::Map,
    /// For each cell of `dom(alpha)` in traversal order, its image as a
    /// term over the shape's cells.
    pub attaching: Vec<Term>,
    pub provenance: Option<PairProvenance>,
    /// Cells of `cod(alpha)` outside the image of `alpha`, in traversal order.
    fresh: Vec<Cell>,
    /// Dimension of each cell of `dom(alpha)` in traversal order.
    attaching_dims: Vec<usize>,
    /// The attaching terms are exactly the shape's cells, in order.
    identity_attaching: bool,
}

impl<B: ComputableBase> Attachment<B> {
    /// An attachment whose lifting problems are maps out of `dom(alpha)` itself.
    pub fn direct(base: &B, level: u32, index: u32, alpha: B::Map) -> Result<Attachment<B>, EngineError> {
        let shape = base.dom(&alpha).clone();
        let attaching = base.cells(&shape).iter().map(|&c| base.term(&shape, c).clone()).collect();
        Attachment::new(base, level, index, shape, alpha, attaching, None)
    }

    /// An attachment with a separate shape. Validates that `alpha` is mono,
    /// its domain finitely presentable, and that every attaching term has
    /// exactly the shape's cells as generator leaves.
    pub fn new(
        base: &B,
        level: u32,
        index: u32,
        shape: B::Object,
        alpha: B::Map,
        attaching: Vec<Term>,
        provenance: Option<PairProvenance>,
    ) -> Result<Attachment<B>, EngineError> {
        if !base.is_mono(&alpha) {
            return Err(EngineError::NonMonoAttachment { level, index });
        }
        let d = base.dom(&alpha);
        if !base.is_finitely_presentable(d) || !base.is_finitely_presentable(&shape) {
            return Err(EngineError::NotFinitelyPresentable { level, index });
        }
        let d_cells = base.cells(d);
        if d_cells.len() != attaching.len() {
            return Err(EngineError::AttachingArity {
                level,
                index,
                expected: d_cells.len(),
                got: attaching.len(),
            });
        }
        let shape_names: std::collections::HashSet<&Term> =
            base.cells(&shape).iter().map(|&c| base.term(&shape, c)).collect();
        for t in &attaching {
            if !leaves_within(t, &shape_names) {
                return Err(EngineError::AttachingTerm {
                    level,
                    index,
                    term: t.clone(),
                });
            }
        }
        let e = base.cod(&alpha);
        let hit: std::collections::HashSet<Cell> = d_cells.iter().map(|&c| base.apply(&alpha, c)).collect();
        let fresh = base.cells(e).iter().copied().filter(|c| !hit.contains(c)).collect();
        let attaching_dims: Vec<usize> = d_cells.iter().map(|c| c.dim).collect();
        let shape_cells = base.cells(&shape);
        let identity_attaching = shape_cells.len() == attaching.len()
            && shape_cells
                .iter()
                .zip(&attaching)
                .zip(&attaching_dims)
                .all(|((&c, t), &d)| c.dim == d && base.term(&shape, c) == t);
        Ok(Attachment {
            level,
            index,
            shape,
            alpha,
            attaching,
            provenance,
            fresh,
            attaching_dims,
            identity_attaching,
        })
    }

    /// Cells of `cod(alpha)` outside the image of `alpha`.
    pub fn fresh_cells(&self) -> &[Cell] {
        &self.fresh
    }

    pub fn attaching_dims(&self) -> &[usize] {
        &self.attaching_dims
    }

    /// The attaching map of the lifting problem `config` (images of the
    /// shape's cells in `x`): images in `x` of the cells of `dom(alpha)`,
    /// or `None` when one of them is not (yet) a cell of `x`.
    pub fn attaching_map(&self, base: &B, x: &B::Object, config: &[Cell]) -> Option<Vec<Cell>> {
        if self.identity_attaching {
            return Some(config.to_vec());
        }
        let shape_cells = base.cells(&self.shape);
        let table: std::collections::HashMap<&Term, &Term> = shape_cells
            .iter()
            .zip(config)
            .map(|(&c, &img)| (base.term(&self.shape, c), base.term(x, img)))
            .collect();
        self.attaching
            .iter()
            .zip(&self.attaching_dims)
            .map(|(t, &d)| base.find(x, d, &substitute_config(t, &table)))
            .collect()
    }

    /// True iff `config` (images in `x` of the shape's cells, in traversal
    /// order) is a map out of the shape.
    pub fn is_configuration(&self, base: &B, x: &B::Object, config: &[Cell]) -> bool {
        let cells = base.cells(&self.shape);
        if cells.len() != config.len() {
            return false;
        }
        let slot: std::collections::HashMap<Cell, usize> = cells.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        cells.iter().zip(config).all(|(&c, &img)| {
            img.dim == c.dim
                && base.contains(x, img)
                && match base.boundary(&self.shape, c) {
                    None => true,
                    Some((s, t)) => base.boundary(x, img) == Some((config[slot[&s]], config[slot[&t]])),
                }
        })
    }

    /// The provenance name of fresh cell number `part` attached along `config`.
    pub fn filler_name(&self, part: usize, config: &[Term]) -> Term {
        Term::app(self.level, self.index, part as u32, config.to_vec())
    }

    /// `level.index`, as used in ledger contexts.
    pub fn label(&self) -> String {
        format!("level {} attachment {}", self.level, self.index)
    }
}

fn leaves_within(t: &Term, names: &std::collections::HashSet<&Term>) -> bool {
    if names.contains(t) {
        return true;
    }
    match t.kind() {
        crate::term::TermKind::Gen(_) => false,
        crate::term::TermKind::App { args, .. } => args.iter().all(|a| leaves_within(a, names)),
    }
}

/// Replaces every occurrence of a shape cell name in `t` by its image.
pub(crate) fn substitute_config(t: &Term, table: &std::collections::HashMap<&Term, &Term>) -> Term {
    if let Some(img) = table.get(t) {
        return (*img).clone();
    }
    match t.kind() {
        crate::term::TermKind::Gen(_) => t.clone(),
        crate::term::TermKind::App {
            level,
            index,
            part,
            args,
        } => Term::app(
            *level,
            *index,
            *part,
            args.iter().map(|a| substitute_config(a, table)).collect(),
        ),
    }
}
