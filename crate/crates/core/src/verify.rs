//! Three-valued executable checks: monomorphy of units and connecting maps,
//! cellularity of chains, contractibility and faithfulness at truncation.
//!
//! A check *fails* only with a concrete counterexample and is
//! *inconclusive at budget* only with a ledger entry saying which budget
//! stopped it. The ledger cited by a report is carried in the report.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::contract::unlifted_pairs;
use crate::engine::{AlgInj, ComputableBase, GlobBase, SemifinalChain};
use crate::globset::{Cell, GlobularSet};
use crate::ledger::{Ledger, LedgerRef, SkipKind};
use crate::map::GlobularMap;
use crate::term::{Term, TermKind};
use crate::theta::DimensionTable;
use crate::tower::{embed, free_model_traced, theory_hom, Budgets, LevelSpec, Tower, TowerError};

/// At most this many witnesses of each kind are kept; counts are exact.
const MAX_WITNESSES: usize = 10;

/// The verdict of a check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Status {
    Pass,
    /// Undecided because a budget stopped the computation.
    Inconclusive,
    Fail,
}

impl Status {
    /// The command-line exit code: 0 pass, 1 fail, 2 inconclusive.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Inconclusive => 2,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive-at-budget",
        })
    }
}

/// Evidence attached to a verdict.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Witness {
    /// A concrete violation (cells, maps, configurations).
    Counterexample(String),
    /// An undecided item and the entry of the report's ledger explaining it.
    Budget { item: String, reference: LedgerRef },
}

/// The outcome of one check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub status: Status,
    /// Number of items examined.
    pub checked: u64,
    /// Number of violations found (witnesses list at most a few).
    pub failures: u64,
    /// Number of items left undecided by budgets.
    pub undecided: u64,
    pub witnesses: Vec<Witness>,
    /// The budget entries cited by [`Witness::Budget`].
    pub ledger: Ledger,
}

impl CheckReport {
    /// An empty passing report; findings are added with [`CheckReport::fail`]
    /// and [`CheckReport::undecided`].
    pub fn new(check: impl Into<String>) -> CheckReport {
        CheckReport {
            check: check.into(),
            status: Status::Pass,
            checked: 0,
            failures: 0,
            undecided: 0,
            witnesses: Vec::new(),
            ledger: Ledger::new(),
        }
    }

    /// Records a violation.
    pub fn fail(&mut self, witness: impl Into<String>) {
        self.failures += 1;
        self.status = Status::Fail;
        if self.count_witnesses(true) < MAX_WITNESSES {
            self.witnesses.push(Witness::Counterexample(witness.into()));
        }
    }

    /// Records an item a budget left undecided, citing `kind`/`context` in
    /// the report's ledger.
    pub fn undecided(&mut self, item: impl Into<String>, kind: SkipKind, context: impl Into<String>, sample: &str) {
        let item = item.into();
        self.undecided += 1;
        self.status = self.status.max(Status::Inconclusive);
        let reference = self.ledger.record(kind, context, sample);
        if self.count_witnesses(false) < MAX_WITNESSES {
            self.witnesses.push(Witness::Budget { item, reference });
        }
    }

    fn count_witnesses(&self, counterexamples: bool) -> usize {
        self.witnesses
            .iter()
            .filter(|w| matches!(w, Witness::Counterexample(_)) == counterexamples)
            .count()
    }

    /// Folds `other` into this report (worst status wins).
    pub fn absorb(&mut self, other: CheckReport) {
        self.checked += other.checked;
        self.failures += other.failures;
        self.undecided += other.undecided;
        self.status = self.status.max(other.status);
        for w in other.witnesses {
            match w {
                Witness::Counterexample(s) => {
                    if self.count_witnesses(true) < MAX_WITNESSES {
                        self.witnesses.push(Witness::Counterexample(format!("{}: {s}", other.check)));
                    }
                }
                Witness::Budget { item, reference } => {
                    let e = other.ledger.get(reference).expect("cited entries exist").clone();
                    let r = self.ledger.record_many(e.kind, e.context, e.count, e.sample);
                    if self.count_witnesses(false) < MAX_WITNESSES {
                        self.witnesses.push(Witness::Budget {
                            item: format!("{}: {item}", other.check),
                            reference: r,
                        });
                    }
                }
            }
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }

    /// The stable text form: one verdict line, then indented witnesses and
    /// cited ledger entries.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} {} checked={} failures={} undecided={}\n",
            self.status, self.check, self.checked, self.failures, self.undecided
        );
        for w in &self.witnesses {
            match w {
                Witness::Counterexample(s) => {
                    let _ = writeln!(out, "  witness: {s}");
                }
                Witness::Budget { item, reference } => {
                    let _ = writeln!(out, "  undecided: {item} [{reference}]");
                }
            }
        }
        for line in self.ledger.summary().lines() {
            let _ = writeln!(out, "  {line}");
        }
        out
    }
}

/// Checks that every map is injective in every dimension; a collision is
/// reported with the two merged cells.
pub fn verify_maps_mono(check: &str, maps: impl IntoIterator<Item = (String, GlobularMap)>) -> CheckReport {
    let mut report = CheckReport::new(check);
    for (label, map) in maps {
        report.checked += 1;
        if let Some((a, b)) = map.collision() {
            report.fail(format!(
                "{label}: {} and {} both map to {}",
                map.dom().term(a),
                map.dom().term(b),
                map.cod().term(map.apply(a))
            ));
        }
    }
    report
}

/// The maps the level-`n` free model on `x` is built from, plus the units
/// `x → FM_n(x)` and `FM_m(x) → FM_n(x)`: every connecting map and unit of
/// every chain the scheduler ran, labelled.
pub fn unit_maps(
    tower: &Tower,
    m: u32,
    n: u32,
    x: &GlobularSet,
    budgets: Budgets,
) -> Result<Vec<(String, GlobularMap)>, TowerError> {
    if m >= n || n > tower.height() {
        return Err(TowerError::Precondition(format!(
            "unit check needs m < n <= {}, got m={m}, n={n}",
            tower.height()
        )));
    }
    let mut maps = Vec::new();
    let fm_n = free_model_traced(tower, n, x, budgets, &mut |step| {
        let inj = step.result;
        let (x0, _) = inj.stage_object(&GlobBase, 0);
        if let Some(u) = inj.unit(&GlobBase, &x0) {
            maps.push((format!("round {} level {} chain unit", step.round, step.level), u));
        }
        for s in 0..step.chain.stages.len() as u32 {
            if let Some(c) = inj.connecting_map(&GlobBase, s) {
                maps.push((format!("round {} level {} connecting map {s}->{}", step.round, step.level, s + 1), c));
            }
        }
    })?;
    maps.push((
        format!("unit X -> FM_{n}"),
        fm_n.unit().ok_or_else(|| TowerError::Precondition("the input is not in its free model".into()))?,
    ));
    let fm_m = free_model_traced(tower, m, x, budgets, &mut |_| {})?;
    if let Some(e) = embed(&fm_m.carrier, &fm_n.carrier) {
        maps.push((format!("unit FM_{m} -> FM_{n}"), e));
    }
    Ok(maps)
}

/// The unit from level `m` to level `n` (`m < n <= L`) on `x`, and every
/// chain map the level-`n` model is built from, are levelwise injective.
pub fn verify_unit_mono(tower: &Tower, m: u32, n: u32, x: &GlobularSet, budgets: Budgets) -> Result<CheckReport, TowerError> {
    let maps = unit_maps(tower, m, n, x, budgets)?;
    let mut report = verify_maps_mono(&format!("mono units {m}->{n}"), maps);
    // The level-m model must embed by provenance: a missing cell is a
    // violation of the unit's existence, not of its injectivity.
    let fm_m = free_model_traced(tower, m, x, budgets, &mut |_| {})?;
    let fm_n = free_model_traced(tower, n, x, budgets, &mut |_| {})?;
    for &c in fm_m.carrier.cells() {
        if fm_n.carrier.find(c.dim, fm_m.carrier.term(c)).is_none() {
            report.fail(format!(
                "cell {} of the level-{m} model is missing from the level-{n} model",
                fm_m.carrier.term(c)
            ));
        }
    }
    Ok(report)
}

/// The level-`m` → level-`n` map on theory hom approximations
/// `T(k⃗, m⃗)` is injective, and sends configurations to configurations.
pub fn verify_faithfulness(
    tower: &Tower,
    m: u32,
    n: u32,
    k: &DimensionTable,
    mt: &DimensionTable,
    budgets: Budgets,
) -> Result<CheckReport, TowerError> {
    if m > n {
        return Err(TowerError::Precondition(format!("faithfulness needs m <= n, got m={m}, n={n}")));
    }
    let mut report = CheckReport::new(format!("faithful {m}->{n} {k} {mt}"));
    let low = theory_hom(tower, m, k, mt, budgets)?;
    if m == n {
        report.checked = low.len() as u64;
        return Ok(report);
    }
    let high_model = tower.model(n, mt, budgets)?;
    let high: HashSet<Vec<Term>> = theory_hom(tower, n, k, mt, budgets)?.into_iter().collect();
    let shape = crate::theta::realize(k, budgets.dim)?.carrier;
    let mut seen: HashMap<Vec<Cell>, &Vec<Term>> = HashMap::new();
    for config in &low {
        report.checked += 1;
        let image: Option<Vec<Cell>> = shape
            .cells()
            .iter()
            .zip(config)
            .map(|(c, t)| high_model.carrier.find(c.dim, t))
            .collect();
        let Some(image) = image else {
            report.fail(format!("configuration {} has no level-{n} image", show(config)));
            continue;
        };
        let terms: Vec<Term> = image.iter().map(|&c| high_model.carrier.term(c).clone()).collect();
        if !high.contains(&terms) {
            report.fail(format!("the image of {} is not a level-{n} configuration", show(config)));
        }
        if let Some(prev) = seen.insert(image, config) {
            report.fail(format!("{} and {} have the same level-{n} image", show(prev), show(config)));
        }
    }
    Ok(report)
}

fn show(terms: &[Term]) -> String {
    let parts: Vec<String> = terms.iter().map(|t| t.to_string()).collect();
    format!("({})", parts.join(","))
}

/// The level at which a pair was born: the highest level of an attachment
/// in the provenance of either cell (0 for cells of the input).
pub fn pair_level(left: &Term, right: &Term) -> u32 {
    left.max_level().max(right.max_level())
}

/// Contractibility up to `d` of the top-level free model on `realize(m⃗)`.
///
/// An unlifted pair born at level `r` is a failure when level `r + 1`
/// should have lifted it; it is undecided when a budget explains the
/// missing lifting: the lifting's dimension exceeds `D`, the pair is born
/// at the top level of a saturating tower (only a further level lifts it),
/// the saturation of level `r + 1` was cut at its cap, or the pair lies
/// beyond what the tower was saturated against.
pub fn verify_contractibility(
    tower: &Tower,
    mt: &DimensionTable,
    d: usize,
    budgets: Budgets,
) -> Result<CheckReport, TowerError> {
    let top = tower.height();
    let fm = tower.model(top, mt, budgets)?;
    let x = &fm.carrier;
    let mut report = CheckReport::new(format!("contractible {mt} d={d}"));
    let pairs = unlifted_pairs(x, d);
    report.checked = parallel_pair_count(x, d);
    for p in pairs {
        let (l, r) = (x.term(p.left_cell()), x.term(p.right_cell()));
        let level = pair_level(l, r);
        let item = format!("{}-pair ({l}, {r}) born at level {level}", p.dim);
        if p.dim + 1 > budgets.dim {
            report.undecided(&item, SkipKind::Dimension, format!("liftings above D={}", budgets.dim), &item);
            continue;
        }
        if level >= top {
            let saturating = matches!(tower.spec().levels.last(), Some(LevelSpec::Saturate { .. }));
            if saturating {
                report.undecided(&item, SkipKind::Frontier, format!("pairs born at the top level {top}"), &item);
            } else {
                report.fail(format!("{item}: no level above {top} lifts it"));
            }
            continue;
        }
        let next = level + 1;
        match &tower.spec().levels[level as usize] {
            LevelSpec::Pairs(_) => report.fail(format!("{item}: level {next} has no attachment lifting it")),
            LevelSpec::Saturate { dim: sd, .. } => {
                let listed = tower.level(next).expect("built").pairs.iter().any(|q| {
                    q.table == *mt && q.dim == p.dim && q.left == *l && q.right == *r
                });
                let in_universe = p.dim < *sd && mt.entries().iter().all(|&e| e <= *sd) && mt.entries().len() <= 2 * sd + 1;
                let built_from = tower.model(level, mt, tower.budgets())?;
                let known = built_from.carrier.find(p.dim, l).is_some() && built_from.carrier.find(p.dim, r).is_some();
                let context = format!("saturation level {next}");
                if listed {
                    report.fail(format!("{item}: level {next} lists it but the model has no lifting"));
                } else if !in_universe || !known {
                    report.undecided(
                        &item,
                        SkipKind::Stage,
                        format!("pairs outside the level-{next} saturation at {}", tower.budgets()),
                        &item,
                    );
                } else if let Some(r) = tower.ledger().find(SkipKind::Cap, &context) {
                    let e = tower.ledger().get(r).expect("found");
                    report.undecided(&item, SkipKind::Cap, context, &e.sample.clone());
                } else {
                    report.fail(format!("{item}: saturation of level {next} missed it"));
                }
            }
        }
    }
    Ok(report)
}

/// Number of parallel pairs of dimension `< d`.
fn parallel_pair_count(x: &GlobularSet, d: usize) -> u64 {
    let mut n = 0u64;
    for dim in 0..d.min(x.max_dim() + 1) {
        if dim == 0 {
            n += (x.len(0) * x.len(0)) as u64;
            continue;
        }
        let mut groups: HashMap<(Cell, Cell), u64> = HashMap::new();
        for c in x.cells_of_dim(dim) {
            *groups.entry(x.boundary(c).expect("positive dimension")).or_default() += 1;
        }
        n += groups.values().map(|k| k * k).sum::<u64>();
    }
    n
}

/// Every connecting map of the chain is mono, and every cell the chain
/// synthesized resolves to an instance of a family member: a filler named
/// after an attachment and a configuration of cells born earlier, with
/// exactly the boundary the pushout along that configuration gives it.
pub fn verify_cellular_ledger<B: ComputableBase>(base: &B, inj: &AlgInj<B>, chain: &SemifinalChain) -> CheckReport {
    let mut report = CheckReport::new("cellular ledger");
    let x = inj.carrier();
    for n in 0..chain.stages.len() as u32 {
        report.checked += 1;
        match inj.connecting_map(base, n) {
            Some(m) if base.is_mono(&m) => {}
            Some(_) => report.fail(format!("connecting map {n}->{} is not mono", n + 1)),
            None => report.fail(format!("connecting map {n}->{} does not exist", n + 1)),
        }
    }
    let mut born: HashMap<(usize, &Term), u32> = HashMap::new();
    for (d, t) in &chain.initial {
        born.insert((*d, t), 0);
    }
    for rec in &chain.stages {
        for (d, t) in &rec.new_cells {
            if born.insert((*d, t), rec.stage).is_some() {
                report.fail(format!("{t} is born twice"));
            }
        }
    }
    for &c in base.cells(x) {
        let t = base.term(x, c);
        if !born.contains_key(&(c.dim, t)) {
            report.fail(format!("carrier cell {t} is in no stage of the chain"));
        }
    }
    for rec in &chain.stages {
        for (d, t) in &rec.new_cells {
            report.checked += 1;
            if let Err(why) = resolve_filler(base, inj, &born, rec.stage, *d, t) {
                report.fail(format!("stage {} cell {t}: {why}", rec.stage));
            }
        }
    }
    report
}

/// Checks that `t`, born at `stage`, is a filler of an attachment instance.
fn resolve_filler<B: ComputableBase>(
    base: &B,
    inj: &AlgInj<B>,
    born: &HashMap<(usize, &Term), u32>,
    stage: u32,
    dim: usize,
    t: &Term,
) -> Result<(), String> {
    let x = inj.carrier();
    let TermKind::App {
        level,
        index,
        part,
        args,
    } = t.kind()
    else {
        return Err("not named after an attachment".into());
    };
    let att = inj
        .family()
        .iter()
        .find(|a| a.level == *level && a.index == *index)
        .ok_or_else(|| format!("no attachment {level}.{index} in the family"))?;
    let fresh = att.fresh_cells();
    let own = *fresh.get(*part as usize).ok_or("part out of range")?;
    if own.dim != dim {
        return Err(format!("dimension {dim}, the attachment's part has dimension {}", own.dim));
    }
    let shape_cells = base.cells(&att.shape);
    if shape_cells.len() != args.len() {
        return Err("configuration of the wrong length".into());
    }
    let mut config = Vec::with_capacity(args.len());
    for (sc, a) in shape_cells.iter().zip(args) {
        let c = base.find(x, sc.dim, a).ok_or_else(|| format!("configuration cell {a} is missing"))?;
        config.push(c);
    }
    if !att.is_configuration(base, x, &config) {
        return Err("its configuration is not a map out of the shape".into());
    }
    let attach = att.attaching_map(base, x, &config).ok_or("its attaching map is missing")?;
    let stage_of = |c: Cell| born.get(&(c.dim, base.term(x, c))).copied().unwrap_or(u32::MAX);
    let problem = config.iter().chain(&attach).map(|&c| stage_of(c)).max().unwrap_or(0);
    if problem >= stage {
        return Err(format!("its lifting problem is born at stage {problem}, not before"));
    }
    // The pushout places each cell of the attachment's codomain at the
    // attaching image (cells hit by alpha) or at its sibling filler.
    let e = base.cod(&att.alpha);
    let d = base.dom(&att.alpha);
    let mut place: HashMap<Cell, Cell> = HashMap::new();
    for (&dc, &img) in base.cells(d).iter().zip(&attach) {
        place.insert(base.apply(&att.alpha, dc), img);
    }
    let config_terms: Vec<Term> = config.iter().map(|&c| base.term(x, c).clone()).collect();
    for (p, &f) in fresh.iter().enumerate() {
        let name = att.filler_name(p, &config_terms);
        if let Some(c) = base.find(x, f.dim, &name) {
            place.insert(f, c);
        }
    }
    let me = base.find(x, dim, t).ok_or("not in the carrier")?;
    if let Some((s, tt)) = base.boundary(e, own) {
        let expect = (place.get(&s).copied(), place.get(&tt).copied());
        if expect != (Some(base.boundary(x, me).expect("same dimension").0), Some(base.boundary(x, me).expect("same dimension").1)) {
            return Err("its boundary is not the one the pushout gives".into());
        }
    }
    Ok(())
}

/// Checks the globe relations `ss = st`, `ts = tt` on every cell.
pub fn verify_globularity(name: &str, x: &GlobularSet) -> CheckReport {
    let mut report = CheckReport::new(format!("globular {name}"));
    report.checked = x.total() as u64;
    if let Err(e) = x.check_globularity() {
        report.fail(e.to_string());
    }
    report
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::engine::{free_injective, Attachment, FinMap, FinSetBase};
    use crate::engine::FinSet;
    use crate::tower::{build_coherator, TowerSpec};

    fn t(s: &str) -> DimensionTable {
        s.parse().unwrap()
    }

    fn composition_tower() -> Tower {
        Tower::build(
            TowerSpec::parse("budgets D=2 S=2 R=2\nlevel 1\npair table=(1,0,1) dim=0 left=c0s0 right=c1t0\n").unwrap(),
        )
        .unwrap()
    }

    fn empty_tower(b: Budgets) -> Tower {
        Tower::build(TowerSpec {
            levels: vec![],
            budgets: b,
        })
        .unwrap()
    }

    #[test]
    fn units_of_the_composition_tower_are_mono() {
        let tower = composition_tower();
        for table in ["(0)", "(1)", "(1,0,1)", "(1,0,1,0,1)"] {
            let x = crate::theta::realize(&t(table), 2).unwrap().carrier;
            let r = verify_unit_mono(&tower, 0, 1, &x, tower.budgets()).unwrap();
            assert_eq!(r.status, Status::Pass, "{}", r.to_text());
            assert!(r.checked > 0);
        }
    }

    #[test]
    fn a_merging_map_fails_with_its_witness() {
        let tower = composition_tower();
        let x = crate::shapes::sphere(0);
        let mut maps = unit_maps(&tower, 0, 1, &x, tower.budgets()).unwrap();
        assert_eq!(verify_maps_mono("clean", maps.clone()).status, Status::Pass);
        // Corrupt the last unit so that it merges the two points.
        let (label, good) = maps.pop().unwrap();
        let mut assign = good.assignment().to_vec();
        assign[0] = vec![0, 0];
        let bad = GlobularMap::new(good.dom().clone(), good.cod().clone(), assign).unwrap();
        maps.push((label, bad.clone()));
        let r = verify_maps_mono("injected", maps);
        assert_eq!((r.status, r.failures), (Status::Fail, 1));
        // Witness soundness: the reported map really merges two cells.
        assert!(bad.collision().is_some());
        assert!(matches!(&r.witnesses[0], Witness::Counterexample(w) if w.contains("both map to")));
    }

    #[test]
    fn faithfulness_on_the_composition_tower() {
        let tower = composition_tower();
        let r = verify_faithfulness(&tower, 0, 1, &t("(0)"), &t("(1,0,1)"), tower.budgets()).unwrap();
        assert_eq!((r.status, r.checked), (Status::Pass, 3));
        let same = verify_faithfulness(&tower, 1, 1, &t("(1)"), &t("(1,0,1)"), tower.budgets()).unwrap();
        assert_eq!((same.status, same.checked), (Status::Pass, 3));
    }

    #[test]
    fn contractibility_verdicts() {
        let b = Budgets::new(2, 1, 1).unwrap();
        let c = build_coherator(1, 2, b, 1000).unwrap();
        let r = verify_contractibility(&c, &t("(0)"), 1, b).unwrap();
        assert_eq!(r.status, Status::Pass, "{}", r.to_text());
        let none = empty_tower(b);
        let r = verify_contractibility(&none, &t("(0)"), 1, b).unwrap();
        assert_eq!(r.status, Status::Fail);
        assert!(matches!(&r.witnesses[0], Witness::Counterexample(w) if w.contains("(c0, c0)")));
        // At depth 2 the top level leaves its own 1-pairs to a level that
        // does not exist: undecided, citing the ledger.
        let r = verify_contractibility(&c, &t("(1)"), 2, b).unwrap();
        assert_eq!(r.status, Status::Inconclusive, "{}", r.to_text());
        assert!(r.witnesses.iter().all(|w| matches!(w, Witness::Budget { .. })));
        assert!(!r.ledger.is_empty());
    }

    #[test]
    fn capped_saturation_is_undecided_not_failed() {
        let b = Budgets::new(2, 1, 1).unwrap();
        let c = build_coherator(1, 2, b, 1).unwrap();
        let r = verify_contractibility(&c, &t("(1,0,1)"), 1, b).unwrap();
        assert_eq!(r.status, Status::Inconclusive, "{}", r.to_text());
        assert!(r.ledger.total(SkipKind::Cap) > 0);
    }

    #[test]
    fn cellular_ledger_of_engine_chains() {
        let tower = composition_tower();
        let x = crate::theta::realize(&t("(1,0,1,0,1)"), 2).unwrap().carrier;
        let family = tower.level(1).unwrap().family.clone();
        let (chain, inj) = free_injective(&GlobBase, family, (*x).clone(), 3).unwrap();
        let r = verify_cellular_ledger(&GlobBase, &inj, &chain);
        assert_eq!(r.status, Status::Pass, "{}", r.to_text());
        assert!(r.checked >= 3);

        let magma = Arc::new(vec![Attachment::direct(&FinSetBase, 1, 0, FinMap::standard_inclusion(2, 3)).unwrap()]);
        let (chain, inj) = free_injective(&FinSetBase, magma.clone(), FinSet::standard(1), 3).unwrap();
        assert_eq!(verify_cellular_ledger(&FinSetBase, &inj, &chain).status, Status::Pass);

        let (empty_chain, empty) = free_injective(&FinSetBase, magma, FinSet::new(), 3).unwrap();
        let r = verify_cellular_ledger(&FinSetBase, &empty, &empty_chain);
        assert_eq!((r.status, r.checked), (Status::Pass, 0));
    }

    #[test]
    fn an_orphan_cell_fails_the_cellular_ledger() {
        let magma = Arc::new(vec![Attachment::direct(&FinSetBase, 1, 0, FinMap::standard_inclusion(2, 3)).unwrap()]);
        let (mut chain, inj) = free_injective(&FinSetBase, magma, FinSet::standard(1), 2).unwrap();
        chain.stages[0].new_cells.push((0, Term::gen("orphan")));
        let r = verify_cellular_ledger(&FinSetBase, &inj, &chain);
        assert_eq!(r.status, Status::Fail);
        assert!(r.to_text().contains("orphan"));
    }

    #[test]
    fn report_text_is_stable() {
        let mut r = CheckReport::new("demo");
        r.checked = 2;
        r.undecided("pair (a, a)", SkipKind::Stage, "level 1", "pair (a, a)");
        assert_eq!(
            r.to_text(),
            "inconclusive-at-budget demo checked=2 failures=0 undecided=1\n  undecided: pair (a, a) [ledger#0]\n  ledger#0 stage x1 level 1 (first: pair (a, a))\n"
        );
        r.fail("boom");
        assert_eq!(r.exit_code(), 1);
    }
}
