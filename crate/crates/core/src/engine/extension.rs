//! The universal property of semifinal liftings, checked stage by stage.

use std::collections::HashMap;

use thiserror::Error;

use super::{AlgInj, ComputableBase, Lifting};
use crate::globset::Cell;
use crate::term::{Term, TermKind};

/// Anything that answers lifting problems of a family: the targets of
/// structure-preserving maps.
pub trait InjectiveStructure<B: ComputableBase> {
    fn carrier(&self) -> &B::Object;
    /// The chosen lifting of problem `config` of attachment `i`: images of
    /// the attachment's fresh cells, or `None` when there is no entry.
    fn extension(&self, base: &B, i: usize, config: &[Cell]) -> Option<Vec<Cell>>;
}

impl<B: ComputableBase> InjectiveStructure<B> for AlgInj<B> {
    fn carrier(&self) -> &B::Object {
        AlgInj::carrier(self)
    }

    fn extension(&self, base: &B, i: usize, config: &[Cell]) -> Option<Vec<Cell>> {
        match self.lift(base, i, config).ok()? {
            Lifting::Filler(v) | Lifting::Transported(v) => Some(v),
            Lifting::Unresolved(_) => None,
        }
    }
}

/// The extension of `k` to the whole carrier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Extension {
    /// Image of every carrier cell, keyed by the cell.
    pub images: HashMap<Cell, Cell>,
    /// Highest birth stage extended over.
    pub stages: u32,
}

impl Extension {
    pub fn image(&self, c: Cell) -> Option<Cell> {
        self.images.get(&c).copied()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtensionError {
    /// The inputs do not satisfy the hypotheses of the universal property.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// The forced values do not assemble into a map at this stage.
    #[error("extension fails at stage {stage} on {cell}: {reason}")]
    Fails { stage: u32, cell: Term, reason: String },
}

/// Extends `k` (defined on the stage-0 cells of `inj`) to the unique map
/// `carrier(inj) → carrier(z)` that sends every filler to `z`'s lifting of
/// the image of its configuration. The value on each filler is forced, so
/// an extension, when it exists, is unique; the check is that the forced
/// values form a map of the base, and that the sink member (if any)
/// becomes structure-preserving after composing with `k`.
pub fn check_extension_property<B: ComputableBase>(
    base: &B,
    inj: &AlgInj<B>,
    z: &dyn InjectiveStructure<B>,
    k: &dyn Fn(Cell) -> Option<Cell>,
) -> Result<Extension, ExtensionError> {
    let carrier = inj.carrier();
    let target = z.carrier();
    let mut cells: Vec<(u32, usize, Cell)> = base
        .cells(carrier)
        .iter()
        .enumerate()
        .map(|(pos, &c)| (inj.birth_stage(c).unwrap_or(0), pos, c))
        .collect();
    cells.sort();
    let mut h: HashMap<Cell, Cell> = HashMap::new();
    let mut top = 0;
    for &(stage, _, c) in &cells {
        top = top.max(stage);
        let term = base.term(carrier, c);
        let image = if stage == 0 {
            k(c).ok_or_else(|| ExtensionError::Precondition(format!("k is undefined on {term}")))?
        } else {
            forced_image(base, inj, z, &|x| h.get(&x).copied(), term)?
        };
        if let Some((s, t)) = base.boundary(carrier, c) {
            if base.boundary(target, image) != Some((h[&s], h[&t])) {
                let err = format!("image {} does not have the boundary of the images", base.term(target, image));
                return Err(if stage == 0 {
                    ExtensionError::Precondition(format!("k is not a map: {err}"))
                } else {
                    ExtensionError::Fails {
                        stage,
                        cell: term.clone(),
                        reason: err,
                    }
                });
            }
        }
        h.insert(c, image);
    }
    if let Some(sink) = inj.sink() {
        let source = &sink.source;
        for &c in base.cells(source.carrier()) {
            if source.birth_stage(c).unwrap_or(0) == 0 {
                continue;
            }
            let term = base.term(source.carrier(), c);
            let forced = forced_image(base, source, z, &|x| h.get(&base.apply(&sink.member, x)).copied(), term)
                .map_err(|e| ExtensionError::Precondition(format!("sink member: {e}")))?;
            if h[&base.apply(&sink.member, c)] != forced {
                return Err(ExtensionError::Precondition(format!(
                    "the sink member composed with k does not preserve the lifting {term}"
                )));
            }
        }
    }
    Ok(Extension { images: h, stages: top })
}

/// The value forced on the filler `term`: `z`'s lifting of the image of its
/// configuration, at the filler's part.
fn forced_image<B: ComputableBase>(
    base: &B,
    inj: &AlgInj<B>,
    z: &dyn InjectiveStructure<B>,
    h: &dyn Fn(Cell) -> Option<Cell>,
    term: &Term,
) -> Result<Cell, ExtensionError> {
    let TermKind::App {
        level,
        index,
        part,
        args,
    } = term.kind()
    else {
        return Err(ExtensionError::Precondition(format!("{term} is not a filler")));
    };
    let (i, att) = inj
        .family()
        .iter()
        .enumerate()
        .find(|(_, a)| a.level == *level && a.index == *index)
        .ok_or_else(|| ExtensionError::Precondition(format!("no attachment {level}.{index}")))?;
    let shape_cells = base.cells(&att.shape);
    let mut config = Vec::with_capacity(args.len());
    for (a, sc) in args.iter().zip(shape_cells) {
        let c = base
            .find(inj.carrier(), sc.dim, a)
            .ok_or_else(|| ExtensionError::Precondition(format!("configuration cell {a} missing")))?;
        config.push(
            h(c)
                .ok_or_else(|| ExtensionError::Precondition(format!("configuration cell {a} not yet extended")))?,
        );
    }
    let lifted = z.extension(base, i, &config).ok_or_else(|| {
        ExtensionError::Precondition(format!("target has no lifting for {term} (attachment {level}.{index})"))
    })?;
    lifted
        .get(*part as usize)
        .copied()
        .ok_or_else(|| ExtensionError::Precondition(format!("target lifting too short for {term}")))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::engine::{free_injective, Attachment, FinMap, FinSet, FinSetBase};

    /// A finite magma on `{e0, …}` given by its multiplication table.
    struct Magma {
        carrier: FinSet,
        table: Vec<Vec<usize>>,
    }

    impl InjectiveStructure<FinSetBase> for Magma {
        fn carrier(&self) -> &FinSet {
            &self.carrier
        }
        fn extension(&self, _: &FinSetBase, _i: usize, config: &[Cell]) -> Option<Vec<Cell>> {
            Some(vec![Cell::new(0, self.table[config[0].idx][config[1].idx])])
        }
    }

    fn magma(table: Vec<Vec<usize>>) -> Magma {
        Magma {
            carrier: FinSet::from_terms((0..table.len()).map(|i| Term::gen(format!("e{i}")))).unwrap(),
            table,
        }
    }

    fn family() -> Arc<Vec<Attachment<FinSetBase>>> {
        Arc::new(vec![Attachment::direct(&FinSetBase, 1, 0, FinMap::standard_inclusion(2, 3)).unwrap()])
    }

    /// Independent evaluation of a binary tree term in a magma.
    fn eval(t: &Term, table: &[Vec<usize>], x: usize) -> usize {
        match t.kind() {
            TermKind::Gen(_) => x,
            TermKind::App { args, .. } => table[eval(&args[0], table, x)][eval(&args[1], table, x)],
        }
    }

    #[test]
    fn unique_extension_into_small_magmas_matches_tree_evaluation() {
        let x = FinSet::from_terms([Term::gen("x")]).unwrap();
        let (_, inj) = free_injective(&FinSetBase, family(), x, 3).unwrap();
        // A few magmas of size 2 and 3 (left projection, xor, a non-associative one).
        let tables = vec![
            vec![vec![0, 0], vec![1, 1]],
            vec![vec![0, 1], vec![1, 0]],
            vec![vec![1, 2, 0], vec![0, 0, 1], vec![2, 1, 2]],
        ];
        for table in tables {
            let z = magma(table.clone());
            for start in 0..table.len() {
                let ext = check_extension_property(&FinSetBase, &inj, &z, &|_| Some(Cell::new(0, start))).unwrap();
                for (i, t) in inj.carrier().terms().iter().enumerate() {
                    assert_eq!(ext.image(Cell::new(0, i)).unwrap().idx, eval(t, &table, start));
                }
            }
        }
    }

    #[test]
    fn extension_into_own_result_is_identity() {
        let x = FinSet::from_terms([Term::gen("x")]).unwrap();
        let (_, inj) = free_injective(&FinSetBase, family(), x, 2).unwrap();
        // Fillers of stage-2 cells are unresolved in inj itself, so only the
        // cells below the frontier extend; restrict to a chain of one stage less.
        let (_, small) = free_injective(&FinSetBase, family(), FinSet::from_terms([Term::gen("x")]).unwrap(), 1).unwrap();
        let ext = check_extension_property(&FinSetBase, &small, &inj, &|c| Some(c)).unwrap();
        for (c, img) in &ext.images {
            assert_eq!(small.carrier().terms()[c.idx], inj.carrier().terms()[img.idx]);
        }
    }

    #[test]
    fn missing_lifting_is_a_precondition_failure() {
        struct Empty(FinSet);
        impl InjectiveStructure<FinSetBase> for Empty {
            fn carrier(&self) -> &FinSet {
                &self.0
            }
            fn extension(&self, _: &FinSetBase, _: usize, _: &[Cell]) -> Option<Vec<Cell>> {
                None
            }
        }
        let x = FinSet::from_terms([Term::gen("x")]).unwrap();
        let (_, inj) = free_injective(&FinSetBase, family(), x.clone(), 1).unwrap();
        let err = check_extension_property(&FinSetBase, &inj, &Empty(x), &|c| Some(c)).unwrap_err();
        assert!(matches!(err, ExtensionError::Precondition(_)));
    }
}
