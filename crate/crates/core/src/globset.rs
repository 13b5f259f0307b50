//! Finite, dimension-truncated globular sets.
//!
//! Cells live in dimensions `0..=max_dim`; every cell of dimension `n >= 1`
//! has a source and a target of dimension `n - 1`, and the globular
//! identities `ss = st`, `ts = tt` hold. Cells are named by provenance
//! [`Term`]s, unique within a dimension.
//!
//! Besides the per-dimension storage, a set remembers one global order of
//! all its cells (insertion order, or the canonical order after
//! [`GlobularSet::canonicalized`]). That order is the traversal used to
//! encode maps out of the set as tuples of images.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::term::{is_valid_gen_name, Term};

/// A cell reference: dimension plus position within that dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct Cell {
    pub dim: usize,
    pub idx: usize,
}

impl Cell {
    pub fn new(dim: usize, idx: usize) -> Cell {
        Cell { dim, idx }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GlobError {
    #[error("cell {term} of dimension {dim} exceeds the truncation bound {max_dim}")]
    AboveTruncation { term: Term, dim: usize, max_dim: usize },
    #[error("duplicate cell {term} in dimension {dim}")]
    Duplicate { term: Term, dim: usize },
    #[error("cell {term} of dimension {dim} needs a source and a target")]
    MissingBoundary { term: Term, dim: usize },
    #[error("0-cell {term} cannot have a boundary")]
    UnexpectedBoundary { term: Term },
    #[error("boundary index out of range for cell {term} of dimension {dim}")]
    BoundaryOutOfRange { term: Term, dim: usize },
    #[error("a cell order must list every cell exactly once")]
    InvalidOrder,
    #[error("globularity violated at {term}: {detail}")]
    NotGlobular { term: Term, detail: String },
}

/// Line-numbered diagnostic from the text format parser.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {msg}")]
pub struct GlobParseError {
    pub line: usize,
    pub msg: String,
}

/// A finite globular set truncated at `max_dim`.
#[derive(Clone)]
pub struct GlobularSet {
    max_dim: usize,
    terms: Vec<Vec<Term>>,
    src: Vec<Vec<usize>>,
    tgt: Vec<Vec<usize>>,
    order: Vec<Cell>,
    index: Vec<HashMap<Term, usize>>,
    by_boundary: Vec<HashMap<(usize, usize), Vec<usize>>>,
}

impl GlobularSet {
    /// The empty globular set truncated at `max_dim`.
    pub fn new(max_dim: usize) -> GlobularSet {
        let n = max_dim + 1;
        GlobularSet {
            max_dim,
            terms: vec![Vec::new(); n],
            src: vec![Vec::new(); n],
            tgt: vec![Vec::new(); n],
            order: Vec::new(),
            index: vec![HashMap::new(); n],
            by_boundary: vec![HashMap::new(); n],
        }
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    /// Adds a cell. `boundary` must be `None` for 0-cells and
    /// `Some((src, tgt))` (indices into dimension `dim - 1`) otherwise.
    pub fn add_cell(&mut self, dim: usize, term: Term, boundary: Option<(usize, usize)>) -> Result<Cell, GlobError> {
        if dim > self.max_dim {
            return Err(GlobError::AboveTruncation {
                term,
                dim,
                max_dim: self.max_dim,
            });
        }
        if self.index[dim].contains_key(&term) {
            return Err(GlobError::Duplicate { term, dim });
        }
        match (dim, boundary) {
            (0, None) => {}
            (0, Some(_)) => return Err(GlobError::UnexpectedBoundary { term }),
            (_, None) => return Err(GlobError::MissingBoundary { term, dim }),
            (_, Some((s, t))) => {
                let below = self.terms[dim - 1].len();
                if s >= below || t >= below {
                    return Err(GlobError::BoundaryOutOfRange { term, dim });
                }
                if dim >= 2 {
                    let (ss, st) = (self.src[dim - 1][s], self.src[dim - 1][t]);
                    let (ts, tt) = (self.tgt[dim - 1][s], self.tgt[dim - 1][t]);
                    if ss != st || ts != tt {
                        return Err(GlobError::NotGlobular {
                            term,
                            detail: "source and target are not parallel".into(),
                        });
                    }
                }
            }
        }
        let idx = self.terms[dim].len();
        self.index[dim].insert(term.clone(), idx);
        self.terms[dim].push(term);
        if let Some((s, t)) = boundary {
            self.src[dim].push(s);
            self.tgt[dim].push(t);
            self.by_boundary[dim].entry((s, t)).or_default().push(idx);
        }
        let cell = Cell { dim, idx };
        self.order.push(cell);
        Ok(cell)
    }

    /// Adds a cell whose boundary is given by terms of dimension `dim - 1`.
    pub fn add_cell_named(&mut self, dim: usize, term: Term, boundary: Option<(&Term, &Term)>) -> Result<Cell, GlobError> {
        let b = match boundary {
            None => None,
            Some((s, t)) => {
                let lookup = |x: &Term| {
                    dim.checked_sub(1)
                        .and_then(|d| self.find(d, x))
                        .map(|c| c.idx)
                };
                match (lookup(s), lookup(t)) {
                    (Some(s), Some(t)) => Some((s, t)),
                    _ => return Err(GlobError::BoundaryOutOfRange { term, dim }),
                }
            }
        };
        self.add_cell(dim, term, b)
    }

    /// Number of cells of dimension `dim` (0 above the truncation).
    pub fn len(&self, dim: usize) -> usize {
        self.terms.get(dim).map_or(0, Vec::len)
    }

    /// Total number of cells.
    pub fn total(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Cell counts per dimension `0..=max_dim`.
    pub fn census(&self) -> Vec<usize> {
        self.terms.iter().map(Vec::len).collect()
    }

    /// Census rendered as `{0:3, 1:4, 2:2}`, omitting trailing empty dimensions.
    pub fn census_string(&self) -> String {
        let c = self.census();
        let top = c.iter().rposition(|&n| n > 0).unwrap_or(0);
        let parts: Vec<String> = c[..=top].iter().enumerate().map(|(d, n)| format!("{d}:{n}")).collect();
        format!("{{{}}}", parts.join(", "))
    }

    pub fn term(&self, c: Cell) -> &Term {
        &self.terms[c.dim][c.idx]
    }

    /// Source of a cell of dimension >= 1.
    pub fn src(&self, c: Cell) -> Cell {
        Cell::new(c.dim - 1, self.src[c.dim][c.idx])
    }

    /// Target of a cell of dimension >= 1.
    pub fn tgt(&self, c: Cell) -> Cell {
        Cell::new(c.dim - 1, self.tgt[c.dim][c.idx])
    }

    /// `(src, tgt)` for positive-dimensional cells, `None` for 0-cells.
    pub fn boundary(&self, c: Cell) -> Option<(Cell, Cell)> {
        (c.dim > 0).then(|| (self.src(c), self.tgt(c)))
    }

    pub fn find(&self, dim: usize, term: &Term) -> Option<Cell> {
        self.index.get(dim)?.get(term).map(|&idx| Cell { dim, idx })
    }

    pub fn contains(&self, dim: usize, term: &Term) -> bool {
        self.find(dim, term).is_some()
    }

    /// All cells in the set's global order.
    pub fn cells(&self) -> &[Cell] {
        &self.order
    }

    /// Cells of one dimension, by position.
    pub fn cells_of_dim(&self, dim: usize) -> impl Iterator<Item = Cell> + '_ {
        (0..self.len(dim)).map(move |idx| Cell { dim, idx })
    }

    /// Indices of the `dim`-cells with the given source and target indices.
    pub fn with_boundary(&self, dim: usize, s: usize, t: usize) -> &[usize] {
        self.by_boundary
            .get(dim)
            .and_then(|m| m.get(&(s, t)))
            .map_or(&[], Vec::as_slice)
    }

    /// A copy with the truncation bound `max_dim` (which must cover every
    /// nonempty dimension) and every cell renamed through `rename`; the
    /// global order is preserved.
    pub fn renamed(&self, max_dim: usize, rename: impl Fn(Cell, &Term) -> Term) -> Result<GlobularSet, GlobError> {
        let mut out = GlobularSet::new(max_dim);
        for dim in 0..=self.max_dim {
            for c in self.cells_of_dim(dim) {
                out.add_cell(dim, rename(c, self.term(c)), self.boundary(c).map(|(s, t)| (s.idx, t.idx)))?;
            }
        }
        out.order = self.order.clone();
        Ok(out)
    }

    /// Replaces the global order by another listing of exactly the same cells.
    pub fn set_order(&mut self, order: Vec<Cell>) -> Result<(), GlobError> {
        let mut seen: Vec<Vec<bool>> = self.terms.iter().map(|v| vec![false; v.len()]).collect();
        for c in &order {
            match seen.get_mut(c.dim).and_then(|row| row.get_mut(c.idx)) {
                Some(slot) if !*slot => *slot = true,
                _ => return Err(GlobError::InvalidOrder),
            }
        }
        if order.len() != self.order.len() {
            return Err(GlobError::InvalidOrder);
        }
        self.order = order;
        Ok(())
    }

    /// Re-verifies every structural invariant from scratch.
    pub fn check_globularity(&self) -> Result<(), GlobError> {
        for dim in 1..=self.max_dim {
            for idx in 0..self.len(dim) {
                let c = Cell { dim, idx };
                let (s, t) = (self.src[dim][idx], self.tgt[dim][idx]);
                if s >= self.len(dim - 1) || t >= self.len(dim - 1) {
                    return Err(GlobError::BoundaryOutOfRange {
                        term: self.term(c).clone(),
                        dim,
                    });
                }
                if dim >= 2 {
                    let (sc, tc) = (self.src(c), self.tgt(c));
                    if self.src(sc) != self.src(tc) {
                        return Err(GlobError::NotGlobular {
                            term: self.term(c).clone(),
                            detail: "source of source differs from source of target".into(),
                        });
                    }
                    if self.tgt(sc) != self.tgt(tc) {
                        return Err(GlobError::NotGlobular {
                            term: self.term(c).clone(),
                            detail: "target of source differs from target of target".into(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// The same set with its global order rearranged canonically: cells for
    /// which `is_generator` holds first, in their current order, then all
    /// other cells sorted by term (ties broken by dimension). Per-dimension
    /// positions follow the new global order. Returns the set and, for every
    /// dimension, the old-position → new-position table.
    pub fn canonicalized(&self, is_generator: impl Fn(Cell) -> bool) -> (GlobularSet, Vec<Vec<usize>>) {
        let (gens, mut rest): (Vec<Cell>, Vec<Cell>) = self.order.iter().partition(|c| is_generator(**c));
        rest.sort_by(|a, b| self.term(*a).cmp(self.term(*b)).then(a.dim.cmp(&b.dim)));
        let mut remap: Vec<Vec<usize>> = self.terms.iter().map(|v| vec![usize::MAX; v.len()]).collect();
        let mut counts = vec![0usize; self.max_dim + 1];
        let mut sequence = Vec::with_capacity(self.order.len());
        for c in gens.into_iter().chain(rest) {
            remap[c.dim][c.idx] = counts[c.dim];
            counts[c.dim] += 1;
            sequence.push(c);
        }
        // Insert dimension by dimension so boundaries exist, then restore the
        // interleaved global order.
        let mut out = GlobularSet::new(self.max_dim);
        for dim in 0..=self.max_dim {
            let mut cells: Vec<Cell> = sequence.iter().copied().filter(|c| c.dim == dim).collect();
            cells.sort_by_key(|c| remap[dim][c.idx]);
            for c in cells {
                let b = self
                    .boundary(c)
                    .map(|(s, t)| (remap[dim - 1][s.idx], remap[dim - 1][t.idx]));
                out.add_cell(dim, self.term(c).clone(), b)
                    .expect("canonicalization preserves validity");
            }
        }
        out.order = sequence
            .iter()
            .map(|c| Cell::new(c.dim, remap[c.dim][c.idx]))
            .collect();
        (out, remap)
    }

    /// Parses the line-oriented text format:
    ///
    /// ```text
    /// globset maxdim=2
    /// cell 0 a
    /// cell 0 b
    /// cell 1 f src=a tgt=b
    /// ```
    ///
    /// Blank lines and lines starting with `%` are ignored.
    pub fn parse(text: &str) -> Result<GlobularSet, GlobParseError> {
        let mut set: Option<GlobularSet> = None;
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let err = |msg: String| GlobParseError { line: line_no, msg };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('%') {
                continue;
            }
            let mut words = line.split_whitespace();
            match words.next() {
                Some("globset") => {
                    if set.is_some() {
                        return Err(err("duplicate header".into()));
                    }
                    let d = words
                        .next()
                        .and_then(|w| w.strip_prefix("maxdim="))
                        .and_then(|v| v.parse::<usize>().ok())
                        .ok_or_else(|| err("expected `globset maxdim=<D>`".into()))?;
                    if words.next().is_some() {
                        return Err(err("unexpected text after header".into()));
                    }
                    set = Some(GlobularSet::new(d));
                }
                Some("cell") => {
                    let s = set
                        .as_mut()
                        .ok_or_else(|| err("cell before `globset` header".into()))?;
                    let dim: usize = words
                        .next()
                        .and_then(|w| w.parse().ok())
                        .ok_or_else(|| err("expected cell dimension".into()))?;
                    let id = words.next().ok_or_else(|| err("expected cell id".into()))?;
                    if !is_valid_gen_name(id) {
                        return Err(err(format!("invalid cell id `{id}`")));
                    }
                    let mut src = None;
                    let mut tgt = None;
                    for w in words {
                        if let Some(v) = w.strip_prefix("src=") {
                            src = Some(v);
                        } else if let Some(v) = w.strip_prefix("tgt=") {
                            tgt = Some(v);
                        } else {
                            return Err(err(format!("unexpected field `{w}`")));
                        }
                    }
                    let term = Term::gen(id);
                    let boundary = match (dim, src, tgt) {
                        (0, None, None) => None,
                        (0, _, _) => return Err(err("0-cells take no src/tgt".into())),
                        (_, Some(a), Some(b)) => {
                            let find = |x: &str| {
                                s.find(dim - 1, &Term::gen(x))
                                    .map(|c| c.idx)
                                    .ok_or_else(|| err(format!("unknown {}-cell `{x}`", dim - 1)))
                            };
                            Some((find(a)?, find(b)?))
                        }
                        _ => return Err(err(format!("{dim}-cell `{id}` needs src= and tgt="))),
                    };
                    s.add_cell(dim, term, boundary).map_err(|e| err(e.to_string()))?;
                }
                Some(w) => return Err(err(format!("unknown directive `{w}`"))),
                None => unreachable!(),
            }
        }
        set.ok_or(GlobParseError {
            line: 0,
            msg: "no object: missing `globset` header".into(),
        })
    }

    /// Renders the text format accepted by [`GlobularSet::parse`], in global order.
    pub fn to_text(&self) -> String {
        let mut out = format!("globset maxdim={}\n", self.max_dim);
        for &c in &self.order {
            match self.boundary(c) {
                None => out.push_str(&format!("cell 0 {}\n", self.term(c))),
                Some((s, t)) => out.push_str(&format!(
                    "cell {} {} src={} tgt={}\n",
                    c.dim,
                    self.term(c),
                    self.term(s),
                    self.term(t)
                )),
            }
        }
        out
    }
}

impl PartialEq for GlobularSet {
    /// Literal equality: same truncation, same cells in the same positions
    /// with the same boundaries, same global order.
    fn eq(&self, other: &GlobularSet) -> bool {
        self.max_dim == other.max_dim
            && self.terms == other.terms
            && self.src == other.src
            && self.tgt == other.tgt
            && self.order == other.order
    }
}

impl Eq for GlobularSet {}

/// Serialized form: cells in storage order (dimension by dimension) with
/// boundary positions, plus the global order. Unlike the text format it
/// carries arbitrary provenance terms.
/// A stored cell: its provenance term and boundary positions, if any.
type StoredCell = (Term, Option<(usize, usize)>);

#[derive(serde::Serialize, serde::Deserialize)]
struct StoredSet {
    max_dim: usize,
    cells: Vec<Vec<StoredCell>>,
    order: Vec<Cell>,
}

impl serde::Serialize for GlobularSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let cells = (0..=self.max_dim)
            .map(|d| {
                (0..self.len(d))
                    .map(|i| {
                        let c = Cell::new(d, i);
                        (self.term(c).clone(), self.boundary(c).map(|(a, b)| (a.idx, b.idx)))
                    })
                    .collect()
            })
            .collect();
        StoredSet {
            max_dim: self.max_dim,
            cells,
            order: self.order.clone(),
        }
        .serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for GlobularSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<GlobularSet, D::Error> {
        use serde::de::Error as _;
        let stored = StoredSet::deserialize(d)?;
        if stored.cells.len() != stored.max_dim + 1 {
            return Err(D::Error::custom("one cell list per dimension expected"));
        }
        let mut g = GlobularSet::new(stored.max_dim);
        for (dim, row) in stored.cells.into_iter().enumerate() {
            for (term, b) in row {
                g.add_cell(dim, term, b).map_err(D::Error::custom)?;
            }
        }
        g.set_order(stored.order).map_err(D::Error::custom)?;
        Ok(g)
    }
}

impl fmt::Debug for GlobularSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GlobularSet(maxdim={}, {})", self.max_dim, self.census_string())
    }
}
