//! The budget ledger: an honest record of everything truncation skipped.
//!
//! Every computation that stops short of the untruncated object (a cell
//! above the dimension bound, a lifting that would be born after the last
//! stage, a saturation list cut at its cap, ...) records why here. Checks
//! that cannot decide a question because of such a skip cite the entry.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Why something was skipped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SkipKind {
    /// A cell would have exceeded the truncation dimension `D`.
    Dimension,
    /// A lifting would have been born after the last chain stage `S`.
    Stage,
    /// The boundary a lifting needs does not exist in the carrier (yet).
    Boundary,
    /// A saturation list was truncated at its cap.
    Cap,
    /// Parallel pairs excluded from saturation because they touch the stage frontier.
    Frontier,
}

impl fmt::Display for SkipKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SkipKind::Dimension => "dimension",
            SkipKind::Stage => "stage",
            SkipKind::Boundary => "boundary",
            SkipKind::Cap => "cap",
            SkipKind::Frontier => "frontier",
        })
    }
}

/// One aggregated ledger line: all skips of one kind in one context.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub kind: SkipKind,
    /// Where the skip happened, e.g. `level 1 attachment 3`.
    pub context: String,
    pub count: u64,
    /// The first skipped item, for reproducibility.
    pub sample: String,
}

/// An append-only, deterministic collection of skip records.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Ledger {
    entries: Vec<LedgerEntry>,
    #[serde(skip)]
    lookup: HashMap<(SkipKind, String), usize>,
}

/// Reference to a ledger entry, as cited by inconclusive verdicts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LedgerRef(pub usize);

impl fmt::Display for LedgerRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ledger#{}", self.0)
    }
}

impl PartialEq for Ledger {
    fn eq(&self, other: &Ledger) -> bool {
        self.entries == other.entries
    }
}

impl Eq for Ledger {}

impl Ledger {
    pub fn new() -> Ledger {
        Ledger::default()
    }

    /// Records one skipped item, aggregating by `(kind, context)`.
    pub fn record(&mut self, kind: SkipKind, context: impl Into<String>, item: impl fmt::Display) -> LedgerRef {
        self.record_many(kind, context, 1, item)
    }

    /// Records `count` skipped items at once.
    pub fn record_many(
        &mut self,
        kind: SkipKind,
        context: impl Into<String>,
        count: u64,
        sample: impl fmt::Display,
    ) -> LedgerRef {
        let context = context.into();
        self.rebuild_lookup_if_needed();
        if let Some(&i) = self.lookup.get(&(kind, context.clone())) {
            self.entries[i].count += count;
            return LedgerRef(i);
        }
        let i = self.entries.len();
        self.entries.push(LedgerEntry {
            kind,
            context: context.clone(),
            count,
            sample: sample.to_string(),
        });
        self.lookup.insert((kind, context), i);
        LedgerRef(i)
    }

    /// Finds the entry for `(kind, context)` if anything was skipped there.
    pub fn find(&self, kind: SkipKind, context: &str) -> Option<LedgerRef> {
        self.entries
            .iter()
            .position(|e| e.kind == kind && e.context == context)
            .map(LedgerRef)
    }

    pub fn get(&self, r: LedgerRef) -> Option<&LedgerEntry> {
        self.entries.get(r.0)
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of skipped items of one kind.
    pub fn total(&self, kind: SkipKind) -> u64 {
        self.entries.iter().filter(|e| e.kind == kind).map(|e| e.count).sum()
    }

    /// Appends all entries of `other`, re-aggregating by context.
    pub fn merge(&mut self, other: &Ledger) {
        for e in &other.entries {
            self.record_many(e.kind, e.context.clone(), e.count, &e.sample);
        }
    }

    /// One line per entry, e.g. `ledger#0 stage x12 level 1 attachment 0 (first: ...)`.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for (i, e) in self.entries.iter().enumerate() {
            out.push_str(&format!(
                "ledger#{i} {} x{} {} (first: {})\n",
                e.kind, e.count, e.context, e.sample
            ));
        }
        out
    }

    fn rebuild_lookup_if_needed(&mut self) {
        if self.lookup.len() != self.entries.len() {
            self.lookup = self
                .entries
                .iter()
                .enumerate()
                .map(|(i, e)| ((e.kind, e.context.clone()), i))
                .collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregates_by_context() {
        let mut l = Ledger::new();
        let a = l.record(SkipKind::Stage, "level 1", "x");
        let b = l.record(SkipKind::Stage, "level 1", "y");
        let c = l.record(SkipKind::Dimension, "level 1", "z");
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(l.get(a).unwrap().count, 2);
        assert_eq!(l.get(a).unwrap().sample, "x");
        assert_eq!(l.total(SkipKind::Stage), 2);
        assert_eq!(l.find(SkipKind::Dimension, "level 1"), Some(c));
    }

    #[test]
    fn merge_keeps_counts() {
        let mut a = Ledger::new();
        a.record(SkipKind::Cap, "level 2", "p");
        let mut b = Ledger::new();
        b.record_many(SkipKind::Cap, "level 2", 4, "q");
        a.merge(&b);
        assert_eq!(a.total(SkipKind::Cap), 5);
        assert_eq!(a.entries().len(), 1);
    }
}
