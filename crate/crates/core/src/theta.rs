//! Globular cardinals: tables of dimensions, their realizations as
//! globular sums of disks, and Θ₀ hom-sets.
//!
//! A table `(n₁, n₂, …, n_k)` has odd length and alternates peaks and
//! valleys: `n_{2i-1} > n_{2i} < n_{2i+1}`. Its realization glues the disks
//! `Y(n₁), Y(n₃), …` in a row, each consecutive pair sharing the disk of
//! the valley between them: the target face of the left disk is the source
//! face of the right one.
//!
//! Cells of a realization are named after the disk that introduces them:
//! `c{i}` is the top cell of disk `i`, `c{i}s{k}` / `c{i}t{k}` its
//! negative / positive `k`-cells. Their global order is the canonical
//! traversal: by disk, then polarity, then dimension.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::colimit::pushout_named;
use crate::globset::{Cell, GlobularSet};
use crate::map::{enumerate_maps, GlobularMap};
use crate::shapes::disk;
use crate::term::Term;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TableError {
    #[error("a table of dimensions must be nonempty")]
    Empty,
    #[error("even length {0}: a table of dimensions must have odd length")]
    EvenLength(usize),
    #[error("pattern violated at position {pos}: need {peak_left} > {valley} < {peak_right}")]
    Pattern {
        pos: usize,
        peak_left: usize,
        valley: usize,
        peak_right: usize,
    },
    #[error("truncation {d} is below the table's top dimension {top}")]
    Truncation { d: usize, top: usize },
    #[error("malformed table literal `{0}`")]
    Syntax(String),
    #[error("a globular sum needs one more disk than valleys")]
    Alternation,
}

/// A validated table of dimensions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct DimensionTable(Vec<usize>);

impl DimensionTable {
    /// Validates odd length and the peak/valley pattern.
    pub fn new(entries: Vec<usize>) -> Result<DimensionTable, TableError> {
        if entries.is_empty() {
            return Err(TableError::Empty);
        }
        if entries.len().is_multiple_of(2) {
            return Err(TableError::EvenLength(entries.len()));
        }
        for i in (1..entries.len()).step_by(2) {
            let (l, v, r) = (entries[i - 1], entries[i], entries[i + 1]);
            if !(l > v && v < r) {
                return Err(TableError::Pattern {
                    pos: i,
                    peak_left: l,
                    valley: v,
                    peak_right: r,
                });
            }
        }
        Ok(DimensionTable(entries))
    }

    /// The one-entry table `(n)`, realized by the disk `Y(n)`.
    pub fn disk(n: usize) -> DimensionTable {
        DimensionTable(vec![n])
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    /// Peak dimensions `n₁, n₃, …`.
    pub fn peaks(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().step_by(2).copied()
    }

    /// Valley dimensions `n₂, n₄, …`.
    pub fn valleys(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().skip(1).step_by(2).copied()
    }

    /// The largest entry: the dimension of the cardinal.
    pub fn dim(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// All tables with entries `<= max_entry` and length `<= max_len`,
    /// ordered by length, then lexicographically.
    pub fn universe(max_entry: usize, max_len: usize) -> Vec<DimensionTable> {
        let mut out = Vec::new();
        let mut len = 1;
        while len <= max_len {
            let mut cur = vec![0; len];
            loop {
                if let Ok(t) = DimensionTable::new(cur.clone()) {
                    out.push(t);
                }
                // Next tuple in lexicographic order.
                let mut i = len;
                loop {
                    if i == 0 {
                        break;
                    }
                    i -= 1;
                    if cur[i] < max_entry {
                        cur[i] += 1;
                        for c in cur.iter_mut().skip(i + 1) {
                            *c = 0;
                        }
                        break;
                    }
                    if i == 0 {
                        i = usize::MAX;
                        break;
                    }
                }
                if i == usize::MAX {
                    break;
                }
            }
            len += 2;
        }
        out
    }
}

impl TryFrom<Vec<usize>> for DimensionTable {
    type Error = TableError;
    fn try_from(v: Vec<usize>) -> Result<DimensionTable, TableError> {
        DimensionTable::new(v)
    }
}

impl From<DimensionTable> for Vec<usize> {
    fn from(t: DimensionTable) -> Vec<usize> {
        t.0
    }
}

impl fmt::Display for DimensionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl FromStr for DimensionTable {
    type Err = TableError;

    /// Parses a literal such as `(1,0,2,1,2)`; whitespace is allowed.
    fn from_str(s: &str) -> Result<DimensionTable, TableError> {
        let inner = s
            .trim()
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| TableError::Syntax(s.to_string()))?;
        let entries = inner
            .split(',')
            .map(|w| w.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| TableError::Syntax(s.to_string()))?;
        DimensionTable::new(entries)
    }
}

/// A table together with its realization.
#[derive(Clone, Debug)]
pub struct Realization {
    pub table: DimensionTable,
    pub carrier: Arc<GlobularSet>,
    /// For each peak, the inclusion of its disk.
    pub disk_inclusions: Vec<GlobularMap>,
}

/// Name of a realization cell: disk `i`, polarity `s`/`t` (or top), dimension `k`.
fn cell_name(disk_ix: usize, pol: Option<char>, k: usize) -> Term {
    match pol {
        Some(p) => Term::gen(format!("c{disk_ix}{p}{k}")),
        None => Term::gen(format!("c{disk_ix}")),
    }
}

/// Where the cells of `Y(n)` sit in `Y(n)`'s own storage: `(dim, idx)` of
/// `s_k` is `(k, 0)`, of `t_k` is `(k, 1)`, of the top `(n, 0)`.
fn disk_cell(pol: Option<char>, k: usize) -> Cell {
    match pol {
        Some('s') => Cell::new(k, 0),
        Some(_) => Cell::new(k, 1),
        None => Cell::new(k, 0),
    }
}

/// Realizes `t` truncated at `d`, gluing disks left to right.
pub fn realize(t: &DimensionTable, d: usize) -> Result<Realization, TableError> {
    if d < t.dim() {
        return Err(TableError::Truncation { d, top: t.dim() });
    }
    let peaks: Vec<usize> = t.peaks().collect();
    let valleys: Vec<usize> = t.valleys().collect();
    let mut carrier = GlobularSet::new(d);
    let mut traversal: Vec<Cell> = Vec::new();
    // incl[i][dim][idx] = carrier position of that cell of disk i.
    let mut incl: Vec<Vec<Vec<usize>>> = Vec::new();
    for (i, &n) in peaks.iter().enumerate() {
        let mut table: Vec<Vec<usize>> = (0..=n).map(|k| vec![usize::MAX; if k < n { 2 } else { 1 }]).collect();
        if i > 0 {
            // The source face at the valley dimension is the previous
            // disk's target face.
            let v = valleys[i - 1];
            let prev = &incl[i - 1];
            for k in 0..v {
                table[k][0] = prev[k][0];
                table[k][1] = prev[k][1];
            }
            table[v][0] = prev[v][1];
        }
        // New cells, dimension by dimension so boundaries exist.
        let mut added: Vec<(Option<char>, usize, Cell)> = Vec::new();
        for k in 0..=n {
            let slots: Vec<Option<char>> = if k < n { vec![Some('s'), Some('t')] } else { vec![None] };
            for pol in slots {
                let local = disk_cell(pol, k);
                if table[k][local.idx] != usize::MAX {
                    continue;
                }
                let boundary = (k > 0).then(|| (table[k - 1][0], table[k - 1][1]));
                let c = carrier
                    .add_cell(k, cell_name(i, pol, k), boundary)
                    .expect("realization cells are valid");
                table[k][local.idx] = c.idx;
                added.push((pol, k, c));
            }
        }
        // Canonical traversal of this disk's new cells.
        let rank = |pol: Option<char>| match pol {
            Some('s') => 0,
            Some(_) => 1,
            None => 2,
        };
        added.sort_by_key(|&(pol, k, _)| (rank(pol), k));
        traversal.extend(added.into_iter().map(|(_, _, c)| c));
        incl.push(table);
    }
    carrier.set_order(traversal).expect("every cell traversed once");
    let carrier = Arc::new(carrier);
    let disk_inclusions = peaks
        .iter()
        .zip(incl)
        .map(|(&n, table)| GlobularMap::new(Arc::new(disk(n)), carrier.clone(), table).expect("disk inclusion"))
        .collect();
    Ok(Realization {
        table: t.clone(),
        carrier,
        disk_inclusions,
    })
}

/// Θ₀(s, t): all maps between the realizations, in canonical order.
pub fn theta0_homs(s: &DimensionTable, t: &DimensionTable) -> Vec<GlobularMap> {
    let d = s.dim().max(t.dim());
    let a = realize(s, d).expect("truncation covers both tables").carrier;
    let x = realize(t, d).expect("truncation covers both tables").carrier;
    enumerate_maps(&a, &x)
}

/// The face `Y(v) → Y(n)` (`v < n`) onto the source (`positive = false`) or
/// target (`positive = true`) `v`-cell.
pub fn face(v: usize, n: usize, positive: bool) -> GlobularMap {
    assert!(v < n, "faces go into strictly higher disks");
    let mut assign: Vec<Vec<usize>> = (0..v).map(|_| vec![0, 1]).collect();
    assign.push(vec![usize::from(positive)]);
    GlobularMap::new(Arc::new(disk(v)), Arc::new(disk(n)), assign).expect("faces are maps")
}

/// The same colimit as [`realize`], assembled compositionally from
/// `disks[0] ⊕_{valleys[0]} disks[1] ⊕ …` by iterated pushouts of faces.
pub fn globular_sum(disks: &[usize], valleys: &[usize], d: usize) -> Result<Realization, TableError> {
    if disks.len() != valleys.len() + 1 {
        return Err(TableError::Alternation);
    }
    let mut entries = Vec::with_capacity(disks.len() * 2);
    for (i, &n) in disks.iter().enumerate() {
        entries.push(n);
        if let Some(&v) = valleys.get(i) {
            entries.push(v);
        }
    }
    let table = DimensionTable::new(entries)?;
    if d < table.dim() {
        return Err(TableError::Truncation { d, top: table.dim() });
    }
    let widen = |g: &GlobularSet, prefix: usize| {
        Arc::new(
            g.renamed(d, |_, t| Term::gen(format!("c{prefix}{t}")))
                .expect("copy of a disk"),
        )
    };
    let first = widen(&disk(disks[0]), 0);
    let mut acc = first.clone();
    // Inclusions of the widened disks into the accumulated sum.
    let mut inclusions = vec![GlobularMap::identity(first)];
    for (i, (&n, &v)) in disks[1..].iter().zip(valleys).enumerate() {
        let last = inclusions.last().expect("at least one disk");
        let tau = face(v, disks[i], true);
        let sigma = face(v, n, false);
        let new_disk = widen(&disk(n), i + 1);
        let tau_w = GlobularMap::new(tau.dom().clone(), last.dom().clone(), tau.assignment().to_vec())
            .expect("face into widened disk");
        let into_acc = tau_w.then(last).expect("composable");
        let sigma_w = GlobularMap::new(sigma.dom().clone(), new_disk, sigma.assignment().to_vec())
            .expect("face into widened disk");
        let po = pushout_named(&into_acc, &sigma_w, &mut |_, t| t.clone()).expect("faces are mono");
        for inc in &mut inclusions {
            *inc = inc.then(&po.from_first).expect("composable");
        }
        inclusions.push(po.from_second.expect("no truncation below d"));
        acc = po.object;
    }
    let disk_inclusions = disks
        .iter()
        .zip(inclusions)
        .map(|(&n, inc)| {
            let mut rows = inc.assignment().to_vec();
            rows.truncate(n + 1);
            GlobularMap::new(Arc::new(disk(n)), acc.clone(), rows).expect("disk inclusion")
        })
        .collect();
    Ok(Realization {
        table,
        carrier: acc,
        disk_inclusions,
    })
}
