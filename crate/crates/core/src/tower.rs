//! Towers of levels of liftings over globular sets.
//!
//! Level `k` of a tower is a family of attachments, one per parallel pair
//! `(u, v)` of `n`-cells of the level-`(k-1)` free model on the realization
//! of a table `m⃗`. Its lifting problems are configurations — maps
//! `realize(m⃗) → X` — and its filler is a fresh `(n+1)`-cell from the image
//! of `u` to the image of `v`, glued along the boundary inclusion
//! `S(n) → Y(n+1)`.
//!
//! Free models are computed by a round-based scheduler: each of `R` rounds
//! runs, for levels `1..=n` in order, `S` stages of the semifinal lifting
//! of the current carrier. Everything is truncated at dimension `D`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contract::{is_parallel, unlifted_pairs};
use crate::engine::{free_injective_bounded, AlgInj, SemifinalChain, Attachment, EngineError, GlobBase, Lifting, PairProvenance};
use crate::globset::{Cell, GlobularSet};
use crate::ledger::{Ledger, SkipKind};
use crate::map::{for_each_map, GlobularMap};
use crate::shapes::{boundary_inclusion, sphere};
use crate::term::Term;
use crate::theta::{realize, DimensionTable, TableError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TowerError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("budgets must be positive: {0}")]
    Budget(String),
    #[error("level {level}: no {dim}-cell {term} in the level-{below} free model on {table}")]
    CellNotFound {
        level: u32,
        below: u32,
        dim: usize,
        term: Term,
        table: DimensionTable,
    },
    #[error("level {level}: {left} and {right} are not parallel {dim}-cells on {table}")]
    NotParallel {
        level: u32,
        dim: usize,
        left: Term,
        right: Term,
        table: DimensionTable,
    },
    #[error("pair spec for level {found} listed under level {expected}")]
    LevelMismatch { expected: u32, found: u32 },
    #[error("the tower has {built} levels, level {asked} was requested")]
    UnknownLevel { asked: u32, built: u32 },
    #[error("input has cells above the truncation dimension {0}")]
    Truncation(usize),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// Truncation parameters: dimension `D`, stages per chain `S`, rounds `R`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Budgets {
    pub dim: usize,
    pub stages: u32,
    pub rounds: u32,
}

impl Budgets {
    pub fn new(dim: usize, stages: u32, rounds: u32) -> Result<Budgets, TowerError> {
        let b = Budgets { dim, stages, rounds };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), TowerError> {
        if self.dim == 0 || self.stages == 0 || self.rounds == 0 {
            return Err(TowerError::Budget(self.to_string()));
        }
        Ok(())
    }

    /// Applies overrides such as `S=4` or `D=3,R=2` (comma or space separated).
    pub fn with_overrides(&self, text: &str) -> Result<Budgets, TowerError> {
        let mut b = *self;
        for item in text.split([',', ' ']).filter(|w| !w.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| TowerError::Budget(format!("expected KEY=VALUE, got `{item}`")))?;
            let v: u64 = v
                .parse()
                .map_err(|_| TowerError::Budget(format!("`{v}` is not a number")))?;
            match k {
                "D" => b.dim = v as usize,
                "S" => b.stages = v as u32,
                "R" => b.rounds = v as u32,
                _ => return Err(TowerError::Budget(format!("unknown budget `{k}`"))),
            }
        }
        b.validate()?;
        Ok(b)
    }
}

impl Default for Budgets {
    fn default() -> Budgets {
        Budgets {
            dim: 3,
            stages: 3,
            rounds: 3,
        }
    }
}

impl fmt::Display for Budgets {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D={},S={},R={}", self.dim, self.stages, self.rounds)
    }
}

impl FromStr for Budgets {
    type Err = TowerError;

    /// Parses `D=3,S=3,R=3`; all three keys are required.
    fn from_str(s: &str) -> Result<Budgets, TowerError> {
        let mut seen = [false; 3];
        for item in s.split([',', ' ']).filter(|w| !w.is_empty()) {
            match item.split_once('=').map(|(k, _)| k) {
                Some("D") => seen[0] = true,
                Some("S") => seen[1] = true,
                Some("R") => seen[2] = true,
                _ => {}
            }
        }
        if seen != [true; 3] {
            return Err(TowerError::Budget(format!("`{s}` must set D, S and R")));
        }
        Budgets {
            dim: 1,
            stages: 1,
            rounds: 1,
        }
        .with_overrides(s)
    }
}

/// A parallel pair of cells of the level-`(level-1)` free model on the
/// realization of `table`, to be lifted at `level`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParallelPairSpec {
    pub level: u32,
    pub table: DimensionTable,
    pub dim: usize,
    pub left: Term,
    pub right: Term,
}

impl fmt::Display for ParallelPairSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "pair table={} dim={} left={} right={}",
            self.table, self.dim, self.left, self.right
        )
    }
}

/// How the pairs of one level are chosen.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LevelSpec {
    Pairs(Vec<ParallelPairSpec>),
    /// All unlifted pairs of dimension `< dim` in the free models of the
    /// level below on every table with entries `<= dim` and length
    /// `<= 2 dim + 1`, in canonical order, at most `cap` of them.
    Saturate { dim: usize, cap: usize },
}

/// A tower description: one [`LevelSpec`] per level, plus budgets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerSpec {
    pub levels: Vec<LevelSpec>,
    pub budgets: Budgets,
}

impl TowerSpec {
    /// Parses the tower file format:
    ///
    /// ```text
    /// budgets D=3 S=3 R=3
    /// level 1
    /// pair table=(1,0,1) dim=0 left=c0s0 right=c1t0
    /// level 2
    /// saturate dim=2 cap=50
    /// ```
    ///
    /// Blank lines and lines starting with `%` are ignored. Levels must
    /// appear in order starting at 1; a level may be empty.
    pub fn parse(text: &str) -> Result<TowerSpec, TowerError> {
        let mut levels: Vec<LevelSpec> = Vec::new();
        let mut budgets = None;
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let err = |msg: String| TowerError::Parse { line, msg };
            let text = raw.trim();
            if text.is_empty() || text.starts_with('%') {
                continue;
            }
            let (head, rest) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
            let fields = || -> Result<HashMap<&str, &str>, TowerError> {
                rest.split_whitespace()
                    .map(|w| w.split_once('=').ok_or_else(|| err(format!("expected key=value, got `{w}`"))))
                    .collect()
            };
            match head {
                "budgets" => {
                    if budgets.is_some() {
                        return Err(err("duplicate budgets line".into()));
                    }
                    budgets = Some(Budgets::from_str(rest).map_err(|e| err(e.to_string()))?);
                }
                "level" => {
                    let k: usize = rest.trim().parse().map_err(|_| err(format!("bad level number `{rest}`")))?;
                    if k != levels.len() + 1 {
                        return Err(err(format!("expected level {}, found level {k}", levels.len() + 1)));
                    }
                    levels.push(LevelSpec::Pairs(Vec::new()));
                }
                "pair" => {
                    let level = levels.len() as u32;
                    let Some(LevelSpec::Pairs(list)) = levels.last_mut() else {
                        return Err(err("`pair` outside a level block or after `saturate`".into()));
                    };
                    let f = fields()?;
                    let get = |k: &str| f.get(k).copied().ok_or_else(|| err(format!("missing `{k}=`")));
                    let table: DimensionTable = get("table")?.parse().map_err(|e: TableError| err(e.to_string()))?;
                    let dim: usize = get("dim")?.parse().map_err(|_| err("bad dim".into()))?;
                    let left = Term::parse(get("left")?).map_err(|e| err(e.to_string()))?;
                    let right = Term::parse(get("right")?).map_err(|e| err(e.to_string()))?;
                    if f.len() != 4 {
                        return Err(err("unexpected field in pair line".into()));
                    }
                    list.push(ParallelPairSpec {
                        level,
                        table,
                        dim,
                        left,
                        right,
                    });
                }
                "saturate" => {
                    let Some(last) = levels.last_mut() else {
                        return Err(err("`saturate` outside a level block".into()));
                    };
                    if !matches!(last, LevelSpec::Pairs(p) if p.is_empty()) {
                        return Err(err("`saturate` must be the only line of its level".into()));
                    }
                    let f = fields()?;
                    let get = |k: &str| {
                        f.get(k)
                            .and_then(|v| v.parse::<usize>().ok())
                            .ok_or_else(|| err(format!("missing or bad `{k}=`")))
                    };
                    *last = LevelSpec::Saturate {
                        dim: get("dim")?,
                        cap: get("cap")?,
                    };
                }
                other => return Err(err(format!("unknown directive `{other}`"))),
            }
        }
        let budgets = budgets.ok_or(TowerError::Parse {
            line: 0,
            msg: "no object: missing `budgets` line".into(),
        })?;
        Ok(TowerSpec { levels, budgets })
    }

    /// The file format accepted by [`TowerSpec::parse`].
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "budgets D={} S={} R={}\n",
            self.budgets.dim, self.budgets.stages, self.budgets.rounds
        );
        for (k, level) in self.levels.iter().enumerate() {
            out.push_str(&format!("level {}\n", k + 1));
            match level {
                LevelSpec::Pairs(list) => {
                    for p in list {
                        out.push_str(&format!("{p}\n"));
                    }
                }
                LevelSpec::Saturate { dim, cap } => out.push_str(&format!("saturate dim={dim} cap={cap}\n")),
            }
        }
        out
    }
}

/// Where and when a cell of a free model was born.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Birth {
    /// Scheduler round (0 for input cells).
    pub round: u32,
    /// Level whose chain adjoined the cell (0 for input cells).
    pub level: u32,
    /// Stage within that chain (0 for input cells).
    pub stage: u32,
}

/// A truncated free model: the input, the carrier grown from it, the birth
/// of every cell, and the ledger of what the budgets left open.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeModelApprox {
    pub level: u32,
    /// The table whose realization is the input, when it is one.
    pub table: Option<DimensionTable>,
    pub budgets: Budgets,
    pub input: GlobularSet,
    pub carrier: GlobularSet,
    /// `births[dim][idx]` for every carrier cell.
    pub births: Vec<Vec<Birth>>,
    pub ledger: Ledger,
}

impl FreeModelApprox {
    pub fn birth(&self, c: Cell) -> Birth {
        self.births[c.dim][c.idx]
    }

    /// The unit `input → carrier`.
    pub fn unit(&self) -> Option<GlobularMap> {
        embed(&self.input, &self.carrier)
    }

    /// The provenance-identical embedding of this carrier into `other`'s.
    pub fn embed_into(&self, other: &FreeModelApprox) -> Option<GlobularMap> {
        embed(&self.carrier, &other.carrier)
    }

    /// The carrier restricted to cells born by the end of `round`.
    pub fn by_round(&self, round: u32) -> GlobularSet {
        let (sub, _) = crate::engine::ComputableBase::sub_object(&GlobBase, &self.carrier, &|c| {
            self.birth(c).round <= round
        });
        sub
    }
}

/// The map sending each cell of `a` to the cell of `x` with the same name,
/// if that is a map.
pub fn embed(a: &GlobularSet, x: &GlobularSet) -> Option<GlobularMap> {
    let mut assign: Vec<Vec<usize>> = (0..=a.max_dim()).map(|d| vec![0; a.len(d)]).collect();
    for &c in a.cells() {
        if c.dim > x.max_dim() {
            return None;
        }
        assign[c.dim][c.idx] = x.find(c.dim, a.term(c))?.idx;
    }
    GlobularMap::new(Arc::new(a.clone()), Arc::new(x.clone()), assign).ok()
}

/// Persistent storage for free models of cardinals, keyed by level, table
/// and budgets (the tower is fixed by the store's owner).
pub trait ModelStore: Send + Sync {
    fn load(&self, level: u32, table: &DimensionTable, budgets: &Budgets) -> Option<FreeModelApprox>;
    fn save(&self, model: &FreeModelApprox);
}

/// One built level: its pairs and the attachments made from them.
#[derive(Clone, Debug)]
pub struct Level {
    pub pairs: Vec<ParallelPairSpec>,
    pub family: Arc<Vec<Attachment<GlobBase>>>,
}

/// Options for building a tower and computing its free models.
#[derive(Default)]
pub struct TowerOptions {
    /// Where free models on cardinals are persisted between runs.
    pub store: Option<Box<dyn ModelStore>>,
    /// Bound on the work of each semifinal chain (configurations examined
    /// plus cells adjoined); exceeding it is an error, never a truncation.
    pub work_limit: Option<u64>,
}

/// A built tower: resolved levels plus a memo of free models on cardinals.
pub struct Tower {
    spec: TowerSpec,
    levels: Vec<Level>,
    ledger: Ledger,
    memo: Mutex<HashMap<(u32, DimensionTable, Budgets), Arc<FreeModelApprox>>>,
    options: TowerOptions,
}

impl fmt::Debug for Tower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tower")
            .field("budgets", &self.spec.budgets)
            .field("levels", &self.levels.iter().map(|l| l.pairs.len()).collect::<Vec<_>>())
            .finish()
    }
}

impl Tower {
    /// Builds every level of `spec` in order.
    pub fn build(spec: TowerSpec) -> Result<Tower, TowerError> {
        Tower::build_with(spec, TowerOptions::default())
    }

    /// As [`Tower::build`], with a model store and work limit.
    pub fn build_with(spec: TowerSpec, options: TowerOptions) -> Result<Tower, TowerError> {
        spec.budgets.validate()?;
        let mut tower = Tower {
            spec,
            levels: Vec::new(),
            ledger: Ledger::new(),
            memo: Mutex::new(HashMap::new()),
            options,
        };
        for k in 1..=tower.spec.levels.len() as u32 {
            let level = build_level(&mut tower, k)?;
            tower.levels.push(level);
        }
        Ok(tower)
    }

    pub fn spec(&self) -> &TowerSpec {
        &self.spec
    }

    pub fn budgets(&self) -> Budgets {
        self.spec.budgets
    }

    /// Number of built levels.
    pub fn height(&self) -> u32 {
        self.levels.len() as u32
    }

    pub fn level(&self, k: u32) -> Option<&Level> {
        k.checked_sub(1).and_then(|i| self.levels.get(i as usize))
    }

    /// Skips made while building the levels (caps, truncated pairs).
    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    /// The spec with every level as an explicit pair list.
    pub fn resolved_spec(&self) -> TowerSpec {
        TowerSpec {
            levels: self.levels.iter().map(|l| LevelSpec::Pairs(l.pairs.clone())).collect(),
            budgets: self.spec.budgets,
        }
    }

    /// The level-`level` free model on the realization of `table`, memoized.
    pub fn model(&self, level: u32, table: &DimensionTable, budgets: Budgets) -> Result<Arc<FreeModelApprox>, TowerError> {
        let key = (level, table.clone(), budgets);
        if let Some(m) = self.memo.lock().expect("memo lock").get(&key) {
            return Ok(m.clone());
        }
        let loaded = self.options.store.as_ref().and_then(|s| s.load(level, table, &budgets));
        let model = match loaded {
            Some(m) if m.level == level && m.table.as_ref() == Some(table) && m.budgets == budgets => m,
            _ => {
                let x = realize(table, budgets.dim)?.carrier;
                let mut m = free_model(self, level, &x, budgets)?;
                m.table = Some(table.clone());
                if let Some(s) = &self.options.store {
                    s.save(&m);
                }
                m
            }
        };
        let model = Arc::new(model);
        self.memo.lock().expect("memo lock").insert(key, model.clone());
        Ok(model)
    }
}

/// Builds level `k` of `tower` (levels below must be built): resolves its
/// pairs against the level-`(k-1)` free models and makes one attachment
/// per pair whose lifting fits under the truncation.
pub fn build_level(tower: &mut Tower, k: u32) -> Result<Level, TowerError> {
    let budgets = tower.spec.budgets;
    let spec = tower
        .spec
        .levels
        .get(k as usize - 1)
        .cloned()
        .ok_or(TowerError::UnknownLevel {
            asked: k,
            built: tower.spec.levels.len() as u32,
        })?;
    let pairs = match spec {
        LevelSpec::Pairs(list) => {
            for p in &list {
                if p.level != k {
                    return Err(TowerError::LevelMismatch {
                        expected: k,
                        found: p.level,
                    });
                }
            }
            list
        }
        LevelSpec::Saturate { dim, cap } => {
            let mut out = Vec::new();
            let mut dropped = 0u64;
            let mut sample = None;
            for table in DimensionTable::universe(dim, 2 * dim + 1) {
                if table.dim() > budgets.dim {
                    continue;
                }
                let fm = tower.model(k - 1, &table, budgets)?;
                for p in saturate_parallel_pairs(&fm, dim, usize::MAX, &mut Ledger::new()) {
                    if out.len() < cap {
                        out.push(p);
                    } else {
                        dropped += 1;
                        sample.get_or_insert_with(|| p.to_string());
                    }
                }
            }
            if dropped > 0 {
                tower.ledger.record_many(
                    SkipKind::Cap,
                    format!("saturation level {k}"),
                    dropped,
                    sample.expect("counted"),
                );
            }
            out
        }
    };
    let mut family = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        let fm = tower.model(k - 1, &p.table, budgets)?;
        let attaching = pair_boundary(&fm, p)?;
        if p.dim + 1 > budgets.dim {
            tower
                .ledger
                .record(SkipKind::Dimension, format!("level {k} attachments"), p);
            continue;
        }
        let shape = (*realize(&p.table, budgets.dim)?.carrier).clone();
        let provenance = PairProvenance {
            table: p.table.clone(),
            dim: p.dim,
            left: p.left.clone(),
            right: p.right.clone(),
        };
        family.push(Attachment::new(
            &GlobBase,
            k,
            i as u32,
            shape,
            boundary_inclusion(p.dim),
            attaching,
            Some(provenance),
        )?);
    }
    Ok(Level {
        pairs,
        family: Arc::new(family),
    })
}

/// The attaching terms of a pair: the images of the cells of `S(n)` in
/// its traversal order — iterated sources and targets of `left` below
/// dimension `n`, then `left` and `right` themselves.
fn pair_boundary(fm: &FreeModelApprox, p: &ParallelPairSpec) -> Result<Vec<Term>, TowerError> {
    let x = &fm.carrier;
    let missing = |t: &Term| TowerError::CellNotFound {
        level: p.level,
        below: fm.level,
        dim: p.dim,
        term: t.clone(),
        table: p.table.clone(),
    };
    let find = |t: &Term| {
        if p.dim > x.max_dim() {
            return None;
        }
        x.find(p.dim, t)
    };
    let l = find(&p.left).ok_or_else(|| missing(&p.left))?;
    let r = find(&p.right).ok_or_else(|| missing(&p.right))?;
    if !is_parallel(x, l, r).unwrap_or(false) {
        return Err(TowerError::NotParallel {
            level: p.level,
            dim: p.dim,
            left: p.left.clone(),
            right: p.right.clone(),
            table: p.table.clone(),
        });
    }
    // sources[j] / targets[j]: the j-dimensional source / target of `left`.
    let mut sources = vec![l; p.dim + 1];
    let mut targets = vec![l; p.dim + 1];
    targets[p.dim] = r;
    for j in (0..p.dim).rev() {
        sources[j] = x.src(sources[j + 1]);
        targets[j] = x.tgt(if j + 1 == p.dim { l } else { targets[j + 1] });
    }
    let s = sphere(p.dim);
    Ok(s.cells()
        .iter()
        .map(|c| {
            let cell = if c.idx == 0 { sources[c.dim] } else { targets[c.dim] };
            x.term(cell).clone()
        })
        .collect())
}

/// The level-`level` free model on `x`: `R` rounds, each running `S`
/// stages of every level `1..=level` in order. Its ledger lists the lifting
/// problems still open in the final carrier.
pub fn free_model(tower: &Tower, level: u32, x: &GlobularSet, budgets: Budgets) -> Result<FreeModelApprox, TowerError> {
    free_model_traced(tower, level, x, budgets, &mut |_| {})
}

/// One chain run by the scheduler, as seen by [`free_model_traced`].
pub struct ChainStep<'a> {
    pub round: u32,
    pub level: u32,
    pub chain: &'a SemifinalChain,
    pub result: &'a AlgInj<GlobBase>,
}

/// As [`free_model`], showing every chain the scheduler runs to `observe`.
pub fn free_model_traced(
    tower: &Tower,
    level: u32,
    x: &GlobularSet,
    budgets: Budgets,
    observe: &mut dyn FnMut(ChainStep<'_>),
) -> Result<FreeModelApprox, TowerError> {
    budgets.validate()?;
    if level > tower.height() {
        return Err(TowerError::UnknownLevel {
            asked: level,
            built: tower.height(),
        });
    }
    let input = x
        .renamed(budgets.dim, |_, t| t.clone())
        .map_err(|_| TowerError::Truncation(budgets.dim))?;
    let mut carrier = input.clone();
    let mut births: Vec<Vec<Birth>> = (0..=budgets.dim)
        .map(|d| {
            vec![
                Birth {
                    round: 0,
                    level: 0,
                    stage: 0
                };
                carrier.len(d)
            ]
        })
        .collect();
    let families: Vec<&Arc<Vec<Attachment<GlobBase>>>> =
        (1..=level).map(|k| &tower.level(k).expect("checked height").family).collect();
    for round in 1..=budgets.rounds {
        let mut grew = false;
        for (k, family) in families.iter().enumerate() {
            if family.is_empty() {
                continue;
            }
            let (chain, inj) = free_injective_bounded(
                &GlobBase,
                (*family).clone(),
                carrier,
                budgets.stages,
                tower.options.work_limit,
            )?;
            observe(ChainStep {
                round,
                level: k as u32 + 1,
                chain: &chain,
                result: &inj,
            });
            carrier = inj.into_carrier();
            for rec in &chain.stages {
                for (dim, t) in &rec.new_cells {
                    let c = carrier.find(*dim, t).expect("new cells are in the carrier");
                    debug_assert_eq!(c.idx, births[*dim].len());
                    births[*dim].push(Birth {
                        round,
                        level: k as u32 + 1,
                        stage: rec.stage,
                    });
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }
    let mut ledger = Ledger::new();
    let mut work = tower.options.work_limit.unwrap_or(u64::MAX);
    for family in &families {
        record_open_problems(family, &carrier, &mut ledger, &mut work)?;
    }
    Ok(FreeModelApprox {
        level,
        table: None,
        budgets,
        input,
        carrier,
        births,
        ledger,
    })
}

/// Records, per attachment, the lifting problems of `x` without a filler,
/// spending one unit of `work` per configuration.
fn record_open_problems(
    family: &Arc<Vec<Attachment<GlobBase>>>,
    x: &GlobularSet,
    ledger: &mut Ledger,
    work: &mut u64,
) -> Result<(), TowerError> {
    let limit = *work;
    let inj = AlgInj::closed(&GlobBase, family.clone(), x.clone(), 0);
    for (i, att) in family.iter().enumerate() {
        let mut exhausted = false;
        let mut open = 0u64;
        let mut missing = 0u64;
        let mut sample_open = None;
        let mut sample_missing = None;
        crate::engine::ComputableBase::for_each_hom(&GlobBase, &att.shape, x, &|_| true, &mut |config| {
            let show = || {
                let parts: Vec<String> = config.iter().map(|&c| x.term(c).to_string()).collect();
                format!("({})", parts.join(","))
            };
            if *work == 0 {
                exhausted = true;
                return std::ops::ControlFlow::Break(());
            }
            *work -= 1;
            match inj.lift(&GlobBase, i, config) {
                Ok(Lifting::Unresolved(SkipKind::Boundary)) => {
                    missing += 1;
                    sample_missing.get_or_insert_with(show);
                }
                Ok(Lifting::Unresolved(_)) => {
                    open += 1;
                    sample_open.get_or_insert_with(show);
                }
                _ => {}
            }
            std::ops::ControlFlow::Continue(())
        });
        if exhausted {
            return Err(EngineError::WorkLimit {
                limit,
                stage: 0,
                cells: x.total(),
            }
            .into());
        }
        if open > 0 {
            ledger.record_many(SkipKind::Stage, att.label(), open, sample_open.expect("counted"));
        }
        if missing > 0 {
            ledger.record_many(SkipKind::Boundary, att.label(), missing, sample_missing.expect("counted"));
        }
    }
    Ok(())
}

/// The unlifted parallel pairs of dimension `< d` of a free model on a
/// table, as pair specs for the next level, in canonical order (dimension,
/// then carrier positions). At most `cap` are returned; the rest are
/// counted in `ledger`.
pub fn saturate_parallel_pairs(fm: &FreeModelApprox, d: usize, cap: usize, ledger: &mut Ledger) -> Vec<ParallelPairSpec> {
    let Some(table) = &fm.table else {
        return Vec::new();
    };
    let x = &fm.carrier;
    let all = unlifted_pairs(x, d);
    let mut out = Vec::new();
    for (n, p) in all.iter().enumerate() {
        if n == cap {
            ledger.record_many(
                SkipKind::Cap,
                format!("saturation of level {} on {table}", fm.level),
                (all.len() - cap) as u64,
                p.display(x),
            );
            break;
        }
        out.push(ParallelPairSpec {
            level: fm.level + 1,
            table: table.clone(),
            dim: p.dim,
            left: x.term(p.left_cell()).clone(),
            right: x.term(p.right_cell()).clone(),
        });
    }
    out
}

/// A coherator tower: `levels` levels, each saturating the unlifted pairs
/// of dimension `< d` of the level below, at most `cap` per level.
pub fn build_coherator(d: usize, levels: u32, budgets: Budgets, cap: usize) -> Result<Tower, TowerError> {
    Tower::build(coherator_spec(d, levels, budgets, cap))
}

/// As [`build_coherator`], with options.
pub fn build_coherator_with(
    d: usize,
    levels: u32,
    budgets: Budgets,
    cap: usize,
    options: TowerOptions,
) -> Result<Tower, TowerError> {
    Tower::build_with(coherator_spec(d, levels, budgets, cap), options)
}

/// The unresolved spec of a coherator tower.
pub fn coherator_spec(d: usize, levels: u32, budgets: Budgets, cap: usize) -> TowerSpec {
    TowerSpec {
        levels: (0..levels).map(|_| LevelSpec::Saturate { dim: d, cap }).collect(),
        budgets,
    }
}

/// Approximates `T_level(k⃗, m⃗)`: the maps `realize(k⃗) → carrier` of the
/// level-`level` free model on `realize(m⃗)`, as image terms in the
/// traversal order of `realize(k⃗)`, canonically ordered.
pub fn theory_hom(
    tower: &Tower,
    level: u32,
    k: &DimensionTable,
    m: &DimensionTable,
    budgets: Budgets,
) -> Result<Vec<Vec<Term>>, TowerError> {
    let fm = tower.model(level, m, budgets)?;
    let a = realize(k, budgets.dim)?.carrier;
    let x = &fm.carrier;
    let mut out = Vec::new();
    for_each_map(&a, x, &|_| true, &mut |assign| {
        out.push(a.cells().iter().map(|c| x.term(Cell::new(c.dim, assign[c.dim][c.idx])).clone()).collect());
        std::ops::ControlFlow::Continue(())
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> DimensionTable {
        s.parse().unwrap()
    }

    fn composition_tower(budgets: Budgets) -> Tower {
        let text = format!(
            "budgets D={} S={} R={}\nlevel 1\npair table=(1,0,1) dim=0 left=c0s0 right=c1t0\n",
            budgets.dim, budgets.stages, budgets.rounds
        );
        Tower::build(TowerSpec::parse(&text).unwrap()).unwrap()
    }

    #[test]
    fn budgets_parse_and_override() {
        let b: Budgets = "D=3,S=2,R=1".parse().unwrap();
        assert_eq!(b, Budgets::new(3, 2, 1).unwrap());
        assert_eq!(b.with_overrides("S=4").unwrap().stages, 4);
        assert!("D=3,S=2".parse::<Budgets>().is_err());
        assert!(Budgets::new(0, 1, 1).is_err());
        assert_eq!(b.to_string(), "D=3,S=2,R=1");
    }

    #[test]
    fn spec_roundtrip() {
        let text = "budgets D=2 S=2 R=1\nlevel 1\npair table=(1,0,1) dim=0 left=c0s0 right=c1t0\nlevel 2\nsaturate dim=1 cap=5\n";
        let spec = TowerSpec::parse(text).unwrap();
        assert_eq!(spec.to_text(), text);
        assert!(TowerSpec::parse("").is_err());
        assert!(matches!(
            TowerSpec::parse("budgets D=1 S=1 R=1\nlevel 2\n"),
            Err(TowerError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn composition_level_census() {
        let tower = composition_tower(Budgets::new(2, 2, 1).unwrap());
        let att = &tower.level(1).unwrap().family[0];
        assert_eq!(att.shape.census(), vec![3, 2, 0]);
        // Codomain of the attachment arrow: the shape with the composite glued in.
        let mut glued = att.shape.clone();
        let cfg: Vec<Cell> = glued.cells().to_vec();
        let attach = att.attaching_map(&GlobBase, &glued, &cfg).unwrap();
        crate::engine::ComputableBase::adjoin(&GlobBase, &mut glued, &att.alpha, &attach, &mut |_| Term::gen("comp"));
        assert_eq!(&glued.census()[..2], &[3, 3]);
    }

    #[test]
    fn identity_level_census() {
        let spec = TowerSpec::parse("budgets D=1 S=1 R=1\nlevel 1\npair table=(0) dim=0 left=c0 right=c0\n").unwrap();
        let tower = Tower::build(spec).unwrap();
        let fm = tower.model(1, &t("(0)"), tower.budgets()).unwrap();
        assert_eq!(fm.carrier.census(), vec![1, 1]);
    }

    #[test]
    fn non_parallel_pair_is_an_error() {
        let spec =
            TowerSpec::parse("budgets D=2 S=1 R=1\nlevel 1\npair table=(2,0,2) dim=1 left=c0s1 right=c1s1\n").unwrap();
        assert!(matches!(Tower::build(spec), Err(TowerError::NotParallel { .. })));
        let spec = TowerSpec::parse("budgets D=2 S=1 R=1\nlevel 1\npair table=(1) dim=0 left=c0s0 right=zz\n").unwrap();
        assert!(matches!(Tower::build(spec), Err(TowerError::CellNotFound { .. })));
    }

    #[test]
    fn composition_free_model_is_stable() {
        let tower = composition_tower(Budgets::new(2, 3, 3).unwrap());
        let fm = tower.model(1, &t("(1,0,1)"), tower.budgets()).unwrap();
        assert_eq!(fm.carrier.census(), vec![3, 3, 0]);
        assert!(fm.ledger.is_empty());
        let homs = theory_hom(&tower, 1, &t("(1)"), &t("(1,0,1)"), tower.budgets()).unwrap();
        assert_eq!(homs.len(), 3);
        let empty = free_model(&tower, 1, &GlobularSet::new(2), tower.budgets()).unwrap();
        assert_eq!(empty.carrier.total(), 0);
    }

    #[test]
    fn level_zero_homs_between_disks() {
        let tower = Tower::build(TowerSpec {
            levels: vec![],
            budgets: Budgets::new(1, 1, 1).unwrap(),
        })
        .unwrap();
        let homs = theory_hom(&tower, 0, &t("(0)"), &t("(1)"), tower.budgets()).unwrap();
        assert_eq!(homs.len(), 2);
        let own = theory_hom(&tower, 0, &t("(1,0,1)"), &t("(1,0,1)"), tower.budgets()).unwrap();
        let identity: Vec<Term> = realize(&t("(1,0,1)"), 1).unwrap().carrier.cells().iter().map(|&c| {
            realize(&t("(1,0,1)"), 1).unwrap().carrier.term(c).clone()
        }).collect();
        assert!(own.contains(&identity));
    }

    #[test]
    fn coherator_small_cases() {
        let b = Budgets::new(2, 1, 1).unwrap();
        let c0 = build_coherator(0, 2, b, 100).unwrap();
        assert!(c0.level(1).unwrap().pairs.is_empty() && c0.level(2).unwrap().pairs.is_empty());
        let c1 = build_coherator(1, 1, b, 100).unwrap();
        let pairs = &c1.level(1).unwrap().pairs;
        let has = |table: &str, l: &str, r: &str| {
            pairs
                .iter()
                .any(|p| p.table == t(table) && p.left == Term::gen(l) && p.right == Term::gen(r))
        };
        assert!(has("(0)", "c0", "c0"), "identity");
        assert!(has("(1,0,1)", "c0s0", "c1t0"), "composition");
        let again = build_coherator(1, 1, b, 100).unwrap();
        assert_eq!(again.resolved_spec(), c1.resolved_spec());
    }

    #[test]
    fn saturation_cap_is_recorded() {
        let tower = Tower::build(TowerSpec {
            levels: vec![],
            budgets: Budgets::new(1, 1, 1).unwrap(),
        })
        .unwrap();
        let fm = tower.model(0, &t("(1,0,1)"), tower.budgets()).unwrap();
        let mut ledger = Ledger::new();
        let all = saturate_parallel_pairs(&fm, 1, usize::MAX, &mut ledger);
        assert!(ledger.is_empty());
        let capped = saturate_parallel_pairs(&fm, 1, 2, &mut ledger);
        assert_eq!(capped.len(), 2);
        assert_eq!(ledger.total(SkipKind::Cap), (all.len() - 2) as u64);
        let y0 = tower.model(0, &t("(0)"), tower.budgets()).unwrap();
        let p = saturate_parallel_pairs(&y0, 1, 10, &mut ledger);
        assert_eq!((p.len(), p[0].left.to_string()), (1, "c0".to_string()));
    }

    #[test]
    fn model_serde_roundtrip() {
        let tower = composition_tower(Budgets::new(2, 2, 2).unwrap());
        let fm = tower.model(1, &t("(1,0,1,0,1)"), tower.budgets()).unwrap();
        let json = serde_json::to_string(&*fm).unwrap();
        let back: FreeModelApprox = serde_json::from_str(&json).unwrap();
        assert_eq!(back, *fm);
    }
}
