//! Category-indicative index/ratio and removal of non-discriminative signal words.
//!
//! `cii(c, w) = f(c, w) / f(c)` where `f(c, w)` counts pseudo-labeled documents
//! of class `c` whose signal set contains `w`, and `f(c)` sums those counts
//! over all words. `cir(w)` is the largest CII of `w` over the second largest.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::jsonl;
use crate::pseudo::PseudoLabel;
use crate::signals::SignalSet;

#[derive(Debug, Clone, PartialEq)]
pub struct CiiTable {
    counts: Vec<BTreeMap<String, u64>>,
    totals: Vec<u64>,
}

impl CiiTable {
    pub fn num_classes(&self) -> usize {
        self.totals.len()
    }

    /// `f(c, w)`.
    pub fn count(&self, class: usize, word: &str) -> u64 {
        self.counts[class].get(word).copied().unwrap_or(0)
    }

    /// `f(c)`.
    pub fn total(&self, class: usize) -> u64 {
        self.totals[class]
    }

    pub fn is_empty_class(&self, class: usize) -> bool {
        self.totals[class] == 0
    }

    /// CII value; 0 for empty classes.
    pub fn cii(&self, class: usize, word: &str) -> f64 {
        let total = self.totals[class];
        if total == 0 {
            0.0
        } else {
            self.count(class, word) as f64 / total as f64
        }
    }

    /// Every word counted under at least one class.
    pub fn words(&self) -> BTreeSet<&str> {
        self.counts.iter().flat_map(|m| m.keys().map(String::as_str)).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.totals.iter().all(|&t| t == 0)
    }
}

pub fn compute_cii(
    signal_sets: &[SignalSet],
    pseudo_labels: &[PseudoLabel],
    num_classes: usize,
) -> Result<CiiTable> {
    let by_id: HashMap<&str, &SignalSet> = signal_sets.iter().map(|s| (s.doc_id.as_str(), s)).collect();
    let mut counts = vec![BTreeMap::new(); num_classes];
    let mut totals = vec![0u64; num_classes];
    for label in pseudo_labels {
        if label.class_index >= num_classes {
            return Err(Error::validation(format!(
                "pseudo label for {:?} has class {} but only {num_classes} classes exist",
                label.doc_id, label.class_index
            )));
        }
        let set = by_id.get(label.doc_id.as_str()).ok_or_else(|| {
            Error::Precondition(format!("pseudo-labeled document {:?} has no signal set", label.doc_id))
        })?;
        let mut seen = HashSet::new();
        for w in set.word_list() {
            if seen.insert(w) {
                *counts[label.class_index].entry(w.to_string()).or_insert(0) += 1;
                totals[label.class_index] += 1;
            }
        }
    }
    Ok(CiiTable { counts, totals })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cir {
    Finite(f64),
    Infinite,
}

impl Cir {
    /// Survives a threshold `t` (`cir >= t`); infinite always survives.
    pub fn passes(self, t: f64) -> bool {
        match self {
            Cir::Infinite => true,
            Cir::Finite(x) => x >= t,
        }
    }
}

impl fmt::Display for Cir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cir::Infinite => f.write_str("inf"),
            Cir::Finite(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for Cir {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cir::Infinite => s.serialize_str("inf"),
            Cir::Finite(x) => s.serialize_f64(*x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirEntry {
    pub cir: Cir,
    pub argmax_class: usize,
    pub runnerup_class: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CirTable {
    entries: BTreeMap<String, CirEntry>,
}

impl CirTable {
    pub fn from_entries(entries: BTreeMap<String, CirEntry>) -> Self {
        CirTable { entries }
    }

    pub fn get(&self, word: &str) -> Option<&CirEntry> {
        self.entries.get(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &CirEntry)> {
        self.entries.iter().map(|(w, e)| (w.as_str(), e))
    }

    /// A word is kept when it has an entry that passes `t`.
    pub fn keeps(&self, word: &str, t: f64) -> bool {
        self.entries.get(word).is_some_and(|e| e.cir.passes(t))
    }
}

/// Top two classes of `values` (lowest index wins ties) with their values.
fn top_two(values: &[f64]) -> ((usize, f64), (usize, f64)) {
    let mut first = (0, values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > first.1 {
            first = (i, v);
        }
    }
    let mut second: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if i == first.0 {
            continue;
        }
        if second.is_none_or(|(_, s)| v > s) {
            second = Some((i, v));
        }
    }
    (first, second.expect("at least two classes"))
}

pub fn compute_cir(cii: &CiiTable) -> CirTable {
    let mut entries = BTreeMap::new();
    if cii.num_classes() < 2 {
        return CirTable { entries };
    }
    for w in cii.words() {
        let values: Vec<f64> = (0..cii.num_classes()).map(|c| cii.cii(c, w)).collect();
        let ((argmax, max), (runnerup, second)) = top_two(&values);
        if max == 0.0 {
            continue;
        }
        let cir = if second == 0.0 {
            Cir::Infinite
        } else {
            Cir::Finite(max / second)
        };
        entries.insert(
            w.to_string(),
            CirEntry {
                cir,
                argmax_class: argmax,
                runnerup_class: runnerup,
            },
        );
    }
    CirTable { entries }
}

/// Drops every word whose CIR is below `t` (or which has no CIR entry). Order is preserved.
pub fn filter_signals(signal_sets: &[SignalSet], cir: &CirTable, t: f64) -> Result<Vec<SignalSet>> {
    if !(t >= 1.0) {
        return Err(Error::validation(format!("CIR threshold must be >= 1, got {t}")));
    }
    Ok(signal_sets
        .iter()
        .map(|s| SignalSet {
            doc_id: s.doc_id.clone(),
            source: s.source,
            words: s.words.iter().filter(|(w, _)| cir.keeps(w, t)).cloned().collect(),
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct CirReportRecord {
    pub word: String,
    pub cir: Cir,
    pub argmax_class: usize,
    pub kept: bool,
}

pub fn cir_report(cir: &CirTable, t: f64) -> Vec<CirReportRecord> {
    cir.iter()
        .map(|(w, e)| CirReportRecord {
            word: w.to_string(),
            cir: e.cir,
            argmax_class: e.argmax_class,
            kept: e.cir.passes(t),
        })
        .collect()
}

pub fn write_cir_report(path: &Path, cir: &CirTable, t: f64) -> Result<()> {
    jsonl::write_records(path, &cir_report(cir, t))
}
