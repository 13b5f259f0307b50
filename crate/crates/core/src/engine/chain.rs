//! Semifinal lifting chains and the algebraic injectives they produce.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::ops::ControlFlow;
use std::sync::Arc;

use super::{Attachment, ComputableBase, EngineError};
use crate::globset::Cell;
use crate::ledger::{Ledger, SkipKind};
use crate::term::Term;

/// A one-member sink: a mono from the carrier of an algebraic injective
/// into the object being lifted. Lifting problems that factor through it
/// are solved by transporting the source's liftings.
#[derive(Clone, Debug)]
pub struct Sink<B: ComputableBase> {
    pub member: B::Map,
    pub source: Arc<AlgInj<B>>,
}

/// The cells born at one stage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageRecord {
    /// Birth stage of the cells listed (`n + 1` for the problems new at `n`).
    pub stage: u32,
    /// Number of lifting problems new at the previous stage that were filled.
    pub problems: u64,
    /// The new cells, by dimension and provenance term, in creation order.
    pub new_cells: Vec<(usize, Term)>,
}

/// The prefix `X₀ → … → X_S` of a semifinal lifting chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemifinalChain {
    pub fuel: u32,
    /// The cells of `X₀`, in traversal order.
    pub initial: Vec<(usize, Term)>,
    /// One record per stage that added cells, in stage order.
    pub stages: Vec<StageRecord>,
    /// The first `n` at which no lifting problem was new: from there on the
    /// chain is constant. `None` when that was not observed within the fuel.
    pub stabilized_at: Option<u32>,
    pub ledger: Ledger,
}

impl SemifinalChain {
    /// Birth stage of a cell (0 for cells of `X₀`).
    pub fn birth_stage(&self, dim: usize, term: &Term) -> Option<u32> {
        if self.initial.iter().any(|(d, t)| *d == dim && t == term) {
            return Some(0);
        }
        self.stages
            .iter()
            .find(|r| r.new_cells.iter().any(|(d, t)| *d == dim && t == term))
            .map(|r| r.stage)
    }

    /// Cumulative cell counts `|X₀|, |X₁|, …, |X_S|`.
    pub fn stage_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.fuel as usize + 1);
        let mut total = self.initial.len();
        sizes.push(total);
        for n in 1..=self.fuel {
            if let Some(r) = self.stages.iter().find(|r| r.stage == n) {
                total += r.new_cells.len();
            }
            sizes.push(total);
        }
        sizes
    }

    /// The chain dump: per stage, the new cells with their provenance terms,
    /// then the ledger. Stable ordering, one item per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "stage 0 cells={}", self.initial.len());
        for (d, t) in &self.initial {
            let _ = writeln!(out, "  {d} {t}");
        }
        for r in &self.stages {
            let _ = writeln!(out, "stage {} cells={} problems={}", r.stage, r.new_cells.len(), r.problems);
            for (d, t) in &r.new_cells {
                let _ = writeln!(out, "  {d} {t}");
            }
        }
        match self.stabilized_at {
            Some(n) => {
                let _ = writeln!(out, "stabilized at {n}");
            }
            None => {
                let _ = writeln!(out, "not stabilized within {} stages", self.fuel);
            }
        }
        out.push_str(&self.ledger.summary());
        out
    }
}

/// How a lifting problem is solved in an [`AlgInj`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Lifting {
    /// Images of the attachment's fresh cells: fillers adjoined by the chain
    /// (or already present under their provenance names).
    Filler(Vec<Cell>),
    /// The problem factors through the sink; the source's lifting, transported.
    Transported(Vec<Cell>),
    /// No lifting within the budgets; the kind says which budget.
    Unresolved(SkipKind),
}

impl Lifting {
    pub fn images(&self) -> Option<&[Cell]> {
        match self {
            Lifting::Filler(v) | Lifting::Transported(v) => Some(v),
            Lifting::Unresolved(_) => None,
        }
    }
}

/// A carrier with liftings for the attachments of a family: the colimit
/// (at the truncation) of a semifinal lifting chain.
#[derive(Clone, Debug)]
pub struct AlgInj<B: ComputableBase> {
    carrier: B::Object,
    family: Arc<Vec<Attachment<B>>>,
    stage: Vec<Vec<u32>>,
    fuel: u32,
    sink: Option<Sink<B>>,
    sink_image: HashSet<Cell>,
}

fn stage_of(stage: &[Vec<u32>], c: Cell) -> Option<u32> {
    stage.get(c.dim).and_then(|v| v.get(c.idx)).copied()
}

fn set_stage(stage: &mut Vec<Vec<u32>>, c: Cell, s: u32) {
    if stage.len() <= c.dim {
        stage.resize(c.dim + 1, Vec::new());
    }
    let row = &mut stage[c.dim];
    if row.len() <= c.idx {
        row.resize(c.idx + 1, u32::MAX);
    }
    row[c.idx] = s;
}

impl<B: ComputableBase> AlgInj<B> {
    /// `x` with every lifting problem answered by an existing cell named
    /// after it, or unresolved: the trivial injective structure of a carrier
    /// already closed under the family (e.g. an empty family).
    pub fn closed(base: &B, family: Arc<Vec<Attachment<B>>>, x: B::Object, fuel: u32) -> AlgInj<B> {
        let mut stage = Vec::new();
        for &c in base.cells(&x) {
            set_stage(&mut stage, c, 0);
        }
        AlgInj {
            carrier: x,
            family,
            stage,
            fuel,
            sink: None,
            sink_image: HashSet::new(),
        }
    }

    pub fn carrier(&self) -> &B::Object {
        &self.carrier
    }

    pub fn into_carrier(self) -> B::Object {
        self.carrier
    }

    pub fn family(&self) -> &Arc<Vec<Attachment<B>>> {
        &self.family
    }

    pub fn fuel(&self) -> u32 {
        self.fuel
    }

    pub fn sink(&self) -> Option<&Sink<B>> {
        self.sink.as_ref()
    }

    /// Birth stage of a carrier cell in the chain that built it.
    pub fn birth_stage(&self, c: Cell) -> Option<u32> {
        stage_of(&self.stage, c)
    }

    /// The provenance term of a cell: a generator leaf or
    /// `#level.index[/part](config)` over the provenance of the configuration.
    pub fn cell_provenance(&self, base: &B, dim: usize, term: &Term) -> Result<Term, EngineError> {
        base.find(&self.carrier, dim, term)
            .map(|c| base.term(&self.carrier, c).clone())
            .ok_or_else(|| EngineError::UnknownCell {
                dim,
                term: term.clone(),
            })
    }

    /// The unit `x → carrier`, for `x` the object the chain started from.
    pub fn unit(&self, base: &B, x: &B::Object) -> Option<B::Map> {
        let images: Option<Vec<Cell>> = base
            .cells(x)
            .iter()
            .map(|&c| base.find(&self.carrier, c.dim, base.term(x, c)))
            .collect();
        base.map_from_images(x, &self.carrier, &images?)
    }

    /// The stage `X_n` as a sub-object of the carrier, with its inclusion.
    pub fn stage_object(&self, base: &B, n: u32) -> (B::Object, B::Map) {
        base.sub_object(&self.carrier, &|c| stage_of(&self.stage, c).is_some_and(|s| s <= n))
    }

    /// The connecting map `X_n → X_{n+1}`.
    pub fn connecting_map(&self, base: &B, n: u32) -> Option<B::Map> {
        let (xn, _) = self.stage_object(base, n);
        let (xn1, _) = self.stage_object(base, n + 1);
        let images: Option<Vec<Cell>> = base
            .cells(&xn)
            .iter()
            .map(|&c| base.find(&xn1, c.dim, base.term(&xn, c)))
            .collect();
        base.map_from_images(&xn, &xn1, &images?)
    }

    /// The chosen lifting of problem `config` (images of the shape's cells
    /// of attachment `i`), per the two-case rule: transported from the sink
    /// when the problem factors through it, otherwise the filler adjoined
    /// at the problem's birth stage.
    pub fn lift(&self, base: &B, i: usize, config: &[Cell]) -> Result<Lifting, EngineError> {
        let att = self.family.get(i).ok_or(EngineError::UnknownAttachment {
            level: 0,
            index: i as u32,
        })?;
        if !att.is_configuration(base, &self.carrier, config) {
            return Err(EngineError::BadConfiguration);
        }
        if let Some(sink) = &self.sink {
            if config.iter().all(|c| self.sink_image.contains(c)) {
                let pre = base.factor_through(config, &sink.member).ok_or(EngineError::BadConfiguration)?;
                return Ok(match sink.source.lift(base, i, &pre)? {
                    Lifting::Filler(v) | Lifting::Transported(v) => {
                        Lifting::Transported(v.into_iter().map(|c| base.apply(&sink.member, c)).collect())
                    }
                    u @ Lifting::Unresolved(_) => u,
                });
            }
        }
        let Some(attach) = att.attaching_map(base, &self.carrier, config) else {
            return Ok(Lifting::Unresolved(SkipKind::Boundary));
        };
        let names = filler_names(base, att, &self.carrier, config);
        let found: Option<Vec<Cell>> = att
            .fresh_cells()
            .iter()
            .zip(&names)
            .map(|(c, t)| base.find(&self.carrier, c.dim, t))
            .collect();
        if let Some(v) = found {
            return Ok(Lifting::Filler(v));
        }
        let born = config
            .iter()
            .chain(&attach)
            .map(|&c| stage_of(&self.stage, c).unwrap_or(0))
            .max()
            .unwrap_or(0);
        Ok(Lifting::Unresolved(if born >= self.fuel {
            SkipKind::Stage
        } else {
            SkipKind::Dimension
        }))
    }

    /// Every lifting problem of every attachment in the carrier, with its
    /// lifting, in canonical order.
    pub fn lifting_table(&self, base: &B) -> Vec<(usize, Vec<Cell>, Lifting)> {
        let mut out = Vec::new();
        for (i, att) in self.family.iter().enumerate() {
            let mut configs = Vec::new();
            base.for_each_hom(&att.shape, &self.carrier, &|_| true, &mut |c| {
                configs.push(c.to_vec());
                ControlFlow::Continue(())
            });
            for c in configs {
                let l = self.lift(base, i, &c).expect("enumerated configurations are valid");
                out.push((i, c, l));
            }
        }
        out
    }
}

fn filler_names<B: ComputableBase>(base: &B, att: &Attachment<B>, x: &B::Object, config: &[Cell]) -> Vec<Term> {
    let terms: Vec<Term> = config.iter().map(|&c| base.term(x, c).clone()).collect();
    (0..att.fresh_cells().len()).map(|p| att.filler_name(p, &terms)).collect()
}

/// Builds `fuel` stages of the semifinal lifting of `x` against `family`,
/// relative to an optional one-member sink.
///
/// Stage `n + 1` adjoins, for every attachment and every lifting problem
/// first available at stage `n` (its configuration and attaching map live
/// in `X_n` but not in `X_{n-1}`), one filler — unless the problem factors
/// through the sink, or `X` already carries a filler under the same
/// provenance name. Problems first available at stage `fuel` are counted
/// in the ledger as unresolved.
pub fn semifinal_lift<B: ComputableBase>(
    base: &B,
    family: Arc<Vec<Attachment<B>>>,
    sink: Option<Sink<B>>,
    x: B::Object,
    fuel: u32,
) -> Result<(SemifinalChain, AlgInj<B>), EngineError> {
    semifinal_lift_bounded(base, family, sink, x, fuel, None)
}

/// As [`semifinal_lift`], giving up with [`EngineError::WorkLimit`] once
/// more than `work_limit` configurations have been examined and cells
/// adjoined in total.
pub fn semifinal_lift_bounded<B: ComputableBase>(
    base: &B,
    family: Arc<Vec<Attachment<B>>>,
    sink: Option<Sink<B>>,
    x: B::Object,
    fuel: u32,
    work_limit: Option<u64>,
) -> Result<(SemifinalChain, AlgInj<B>), EngineError> {
    let mut work = Work {
        done: 0,
        limit: work_limit.unwrap_or(u64::MAX),
    };
    for att in family.iter() {
        if !base.is_mono(&att.alpha) {
            return Err(EngineError::NonMonoAttachment {
                level: att.level,
                index: att.index,
            });
        }
    }
    let mut sink_image = HashSet::new();
    if let Some(s) = &sink {
        if !base.is_mono(&s.member) {
            return Err(EngineError::NonMonoSink);
        }
        if *base.cod(&s.member) != x || *base.dom(&s.member) != *s.source.carrier() {
            return Err(EngineError::SinkMismatch);
        }
        for &c in base.cells(base.dom(&s.member)) {
            sink_image.insert(base.apply(&s.member, c));
        }
    }
    let initial: Vec<(usize, Term)> = base.cells(&x).iter().map(|&c| (c.dim, base.term(&x, c).clone())).collect();
    let mut inj = AlgInj::closed(base, family.clone(), x, fuel);
    inj.sink_image = sink_image;
    inj.sink = sink;
    let mut ledger = Ledger::new();
    let mut stages = Vec::new();
    let mut stabilized_at = None;
    for n in 0..fuel {
        let mut record = StageRecord {
            stage: n + 1,
            problems: 0,
            new_cells: Vec::new(),
        };
        for att in family.iter() {
            for config in problems_at(base, att, &inj, n, &mut work)? {
                let ProblemStatus::Open(attach) = classify(base, att, &inj, &config, n, &mut ledger) else {
                    continue;
                };
                let names = filler_names(base, att, &inj.carrier, &config);
                let fresh = att.fresh_cells();
                let out = base.adjoin(&mut inj.carrier, &att.alpha, &attach, &mut |c| {
                    let part = fresh.iter().position(|f| *f == c).expect("only fresh cells are named");
                    names[part].clone()
                });
                record.problems += 1;
                work.spend(out.added.len() as u64, n, base.cells(&inj.carrier).len())?;
                for (_, new) in out.added {
                    set_stage(&mut inj.stage, new, n + 1);
                    record.new_cells.push((new.dim, base.term(&inj.carrier, new).clone()));
                }
                for (dim, t) in out.skipped {
                    ledger.record(SkipKind::Dimension, att.label(), format!("{t} in dim {dim}"));
                }
            }
        }
        if record.new_cells.is_empty() {
            stabilized_at = Some(n);
            break;
        }
        stages.push(record);
    }
    if stabilized_at.is_none() {
        for att in family.iter() {
            let mut count = 0u64;
            let mut sample = None;
            for config in problems_at(base, att, &inj, fuel, &mut work)? {
                if let ProblemStatus::Open(_) = classify(base, att, &inj, &config, fuel, &mut Ledger::new()) {
                    count += 1;
                    sample.get_or_insert_with(|| show_config(base, &inj.carrier, &config));
                }
            }
            if count > 0 {
                ledger.record_many(SkipKind::Stage, att.label(), count, sample.expect("counted"));
            }
        }
    }
    let chain = SemifinalChain {
        fuel,
        initial,
        stages,
        stabilized_at,
        ledger,
    };
    Ok((chain, inj))
}

/// Work accounting for bounded chains.
struct Work {
    done: u64,
    limit: u64,
}

impl Work {
    fn spend(&mut self, units: u64, stage: u32, cells: usize) -> Result<(), EngineError> {
        self.done = self.done.saturating_add(units);
        if self.done > self.limit {
            return Err(EngineError::WorkLimit {
                limit: self.limit,
                stage,
                cells,
            });
        }
        Ok(())
    }
}

/// Configurations of `att` with all images born by stage `n`.
fn problems_at<B: ComputableBase>(
    base: &B,
    att: &Attachment<B>,
    inj: &AlgInj<B>,
    n: u32,
    work: &mut Work,
) -> Result<Vec<Vec<Cell>>, EngineError> {
    let mut configs = Vec::new();
    let stage = &inj.stage;
    let cells = base.cells(&inj.carrier).len();
    let mut over = Ok(());
    base.for_each_hom(
        &att.shape,
        &inj.carrier,
        &|c| stage_of(stage, c).is_some_and(|s| s <= n),
        &mut |c| {
            over = work.spend(1, n, cells);
            if over.is_err() {
                return ControlFlow::Break(());
            }
            configs.push(c.to_vec());
            ControlFlow::Continue(())
        },
    );
    over.map(|()| configs)
}

enum ProblemStatus {
    /// New at this stage and unsolved: fill it along this attaching map.
    Open(Vec<Cell>),
    /// Not new at this stage, already solved, or not solvable yet.
    Settled,
}

fn classify<B: ComputableBase>(
    base: &B,
    att: &Attachment<B>,
    inj: &AlgInj<B>,
    config: &[Cell],
    n: u32,
    ledger: &mut Ledger,
) -> ProblemStatus {
    let born = |c: &Cell| stage_of(&inj.stage, *c).unwrap_or(0);
    let config_stage = config.iter().map(born).max().unwrap_or(0);
    let Some(attach) = att.attaching_map(base, &inj.carrier, config) else {
        if config_stage == n {
            ledger.record(SkipKind::Boundary, att.label(), show_config(base, &inj.carrier, config));
        }
        return ProblemStatus::Settled;
    };
    let problem_stage = attach.iter().map(born).max().unwrap_or(0).max(config_stage);
    if problem_stage != n {
        return ProblemStatus::Settled;
    }
    if inj.sink.is_some() && config.iter().all(|c| inj.sink_image.contains(c)) {
        return ProblemStatus::Settled;
    }
    if let Some(&first) = att.fresh_cells().first() {
        let name = filler_names(base, att, &inj.carrier, config).swap_remove(0);
        if base.find(&inj.carrier, first.dim, &name).is_some() {
            return ProblemStatus::Settled;
        }
    } else {
        return ProblemStatus::Settled;
    }
    ProblemStatus::Open(attach)
}

fn show_config<B: ComputableBase>(base: &B, x: &B::Object, config: &[Cell]) -> String {
    let parts: Vec<String> = config.iter().map(|&c| base.term(x, c).to_string()).collect();
    format!("({})", parts.join(","))
}

/// The free algebraic injective on `x`: the semifinal lifting with an
/// empty sink. Its unit is [`AlgInj::unit`].
pub fn free_injective<B: ComputableBase>(
    base: &B,
    family: Arc<Vec<Attachment<B>>>,
    x: B::Object,
    fuel: u32,
) -> Result<(SemifinalChain, AlgInj<B>), EngineError> {
    semifinal_lift(base, family, None, x, fuel)
}

/// As [`free_injective`], under a work limit (see [`semifinal_lift_bounded`]).
pub fn free_injective_bounded<B: ComputableBase>(
    base: &B,
    family: Arc<Vec<Attachment<B>>>,
    x: B::Object,
    fuel: u32,
    work_limit: Option<u64>,
) -> Result<(SemifinalChain, AlgInj<B>), EngineError> {
    semifinal_lift_bounded(base, family, None, x, fuel, work_limit)
}

/// Pushout of the free map on the mono `alpha: A → B` along the transposed
/// attaching map `u` (images of `A`'s cells in the carrier of `x`): the base
/// pushout of `alpha` along `u`, followed by the semifinal lifting of its
/// coprojection as a one-member sink. Returns the result, its chain, and
/// the composite coprojection from the carrier of `x`.
pub fn pushout_free<B: ComputableBase>(
    base: &B,
    alpha: &B::Map,
    u: &[Cell],
    x: Arc<AlgInj<B>>,
    fuel: u32,
) -> Result<(AlgInj<B>, SemifinalChain, B::Map), EngineError> {
    if !base.is_mono(alpha) {
        return Err(EngineError::NonMonoPushout);
    }
    let old = x.carrier();
    let mut p = old.clone();
    let cod = base.cod(alpha);
    let added = base.adjoin(&mut p, alpha, u, &mut |c| {
        let mut t = base.term(cod, c).clone();
        while base.find(old, c.dim, &t).is_some() {
            t = Term::gen(format!("{t}'"));
        }
        t
    });
    let member = base
        .map_from_images(old, &p, base.cells(old))
        .expect("the old carrier sits unchanged inside the pushout");
    let family = x.family().clone();
    let (mut chain, result) = semifinal_lift(
        base,
        family,
        Some(Sink {
            member,
            source: x.clone(),
        }),
        p,
        fuel,
    )?;
    for (dim, t) in added.skipped {
        chain
            .ledger
            .record(SkipKind::Dimension, "pushout of free map", format!("{t} in dim {dim}"));
    }
    let coprojection = base
        .map_from_images(x.carrier(), result.carrier(), base.cells(x.carrier()))
        .expect("cells keep their positions as the chain grows");
    Ok((result, chain, coprojection))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{FinMap, FinSet, FinSetBase, GlobBase};
    use crate::shapes::boundary_inclusion;
    use crate::theta::{realize, DimensionTable};

    fn magma() -> Arc<Vec<Attachment<FinSetBase>>> {
        let base = FinSetBase;
        Arc::new(vec![Attachment::direct(&base, 1, 0, FinMap::standard_inclusion(2, 3)).unwrap()])
    }

    fn one_point() -> FinSet {
        FinSet::from_terms([Term::gen("x")]).unwrap()
    }

    /// Number of binary trees of depth ≤ s over one leaf: t₀ = 1, t_{s+1} = 1 + t_s².
    fn tree_count(s: u32) -> usize {
        (0..s).fold(1, |t, _| 1 + t * t)
    }

    #[test]
    fn magma_stage_sizes_are_tree_counts() {
        let (chain, inj) = free_injective(&FinSetBase, magma(), one_point(), 3).unwrap();
        assert_eq!(chain.stage_sizes(), vec![1, 2, 5, 26]);
        assert_eq!(inj.carrier().len(), tree_count(3));
        assert_eq!(chain.ledger.total(SkipKind::Stage), (677 - 26) as u64);
        // Provenance depth equals birth stage.
        for (i, t) in inj.carrier().terms().iter().enumerate() {
            assert_eq!(inj.birth_stage(Cell::new(0, i)), Some(t.depth()));
        }
    }

    #[test]
    fn magma_provenance_of_the_square() {
        let (_, inj) = free_injective(&FinSetBase, magma(), one_point(), 1).unwrap();
        let x = Term::gen("x");
        let sq = Term::app(1, 0, 0, vec![x.clone(), x.clone()]);
        assert_eq!(inj.cell_provenance(&FinSetBase, 0, &sq).unwrap(), sq);
        assert_eq!(sq.to_string(), "#1.0(x,x)");
        assert!(inj.cell_provenance(&FinSetBase, 0, &Term::gen("y")).is_err());
    }

    #[test]
    fn empty_family_and_empty_object() {
        let (chain, inj) = free_injective(&FinSetBase, Arc::new(Vec::new()), one_point(), 4).unwrap();
        assert_eq!(chain.stabilized_at, Some(0));
        assert_eq!(inj.carrier().len(), 1);
        let (_, inj) = free_injective(&FinSetBase, magma(), FinSet::new(), 4).unwrap();
        assert!(inj.carrier().is_empty());
    }

    #[test]
    fn unit_and_connecting_maps_are_mono() {
        let base = FinSetBase;
        let (_, inj) = free_injective(&base, magma(), one_point(), 3).unwrap();
        assert!(base.is_mono(&inj.unit(&base, &one_point()).unwrap()));
        for n in 0..3 {
            assert!(base.is_mono(&inj.connecting_map(&base, n).unwrap()));
        }
    }

    #[test]
    fn lifting_table_below_the_frontier_is_total() {
        let base = FinSetBase;
        let (_, inj) = free_injective(&base, magma(), one_point(), 2).unwrap();
        for (_, config, l) in inj.lifting_table(&base) {
            let born = config.iter().map(|&c| inj.birth_stage(c).unwrap()).max().unwrap();
            if born < 2 {
                assert!(matches!(l, Lifting::Filler(_)));
            } else {
                assert_eq!(l, Lifting::Unresolved(SkipKind::Stage));
            }
        }
    }

    #[test]
    fn non_mono_attachment_is_refused() {
        let base = FinSetBase;
        let collapse = FinMap::new(Arc::new(FinSet::standard(2)), Arc::new(FinSet::standard(1)), vec![0, 0]).unwrap();
        assert!(matches!(
            Attachment::direct(&base, 1, 0, collapse),
            Err(EngineError::NonMonoAttachment { .. })
        ));
    }

    fn composite_family() -> Arc<Vec<Attachment<GlobBase>>> {
        let base = GlobBase;
        let shape = (*realize(&"(1,0,1)".parse::<DimensionTable>().unwrap(), 1).unwrap().carrier).clone();
        let j0 = boundary_inclusion(0);
        let att = Attachment::new(&base, 1, 0, shape, j0, vec![Term::gen("c0s0"), Term::gen("c1t0")], None).unwrap();
        Arc::new(vec![att])
    }

    #[test]
    fn binary_composite_stabilizes_with_three_arrows() {
        let base = GlobBase;
        let x = (*realize(&"(1,0,1)".parse::<DimensionTable>().unwrap(), 1).unwrap().carrier).clone();
        let (chain, inj) = free_injective(&base, composite_family(), x, 4).unwrap();
        assert_eq!(inj.carrier().census(), vec![3, 3]);
        assert_eq!(chain.stabilized_at, Some(1));
        assert!(chain.ledger.is_empty());
        let comp = &chain.stages[0].new_cells[0].1;
        assert_eq!(comp.to_string(), "#1.0(c0s0,c0t0,c0,c1t0,c1)");
    }

    #[test]
    fn pushout_along_identity_changes_nothing() {
        let base = FinSetBase;
        let (_, inj) = free_injective(&base, magma(), one_point(), 2).unwrap();
        let inj = Arc::new(inj);
        let id = FinMap::standard_inclusion(1, 1);
        let x = Cell::new(0, 0);
        let (result, _, map) = pushout_free(&base, &id, &[x], inj.clone(), 2).unwrap();
        assert_eq!(result.carrier(), inj.carrier());
        assert!(map.images.iter().enumerate().all(|(i, &j)| i == j));
    }

    #[test]
    fn pushout_adjoining_a_generator_recloses() {
        // Adjoin a new element y to the depth-1 free magma on x: the new
        // problems are those mentioning y.
        let base = FinSetBase;
        let (_, inj) = free_injective(&base, magma(), one_point(), 1).unwrap();
        let inj = Arc::new(inj);
        let alpha = FinMap::new(Arc::new(FinSet::new()), Arc::new(FinSet::from_terms([Term::gen("y")]).unwrap()), vec![])
            .unwrap();
        let (result, chain, map) = pushout_free(&base, &alpha, &[], inj.clone(), 1).unwrap();
        assert!(map.is_injective());
        // Carrier {x, xx} plus y, then one filler per pair involving y: 9 - 4 = 5.
        assert_eq!(result.carrier().len(), 3 + 5);
        assert_eq!(chain.stages[0].problems, 5);
        // The problem (x, x) is transported from the source.
        let lifted = result.lift(&base, 0, &[Cell::new(0, 0), Cell::new(0, 0)]).unwrap();
        assert_eq!(lifted, Lifting::Transported(vec![Cell::new(0, 1)]));
    }
}
