//! Label-tagged fact storage shared by the plain table and the union
//! scheme's explicit list.

use rustc_hash::{FxHashMap, FxHashSet};

use crate::datalog::{Fact, PredId, SymId};
use crate::scheme::{DomainFilter, Label};

#[derive(Clone)]
pub(crate) struct FactRow {
    pub fact: Fact,
    pub label: Label,
    /// Reasoning round at which the fact entered Δ. Stands in for the
    /// pre-merge `I` slice that merging destroys: rows with a smaller round
    /// are "strictly older" than a given Δ batch.
    pub round: u64,
}

/// Append-only fact list with labels `Δₙ → Δ → I`, a full-tuple hash index,
/// and per-(predicate, position, value) postings for joins and scans.
///
/// No fact is ever stored twice, regardless of label.
#[derive(Default)]
pub struct LabelledFactStore {
    rows: Vec<FactRow>,
    index: FxHashMap<Fact, u32>,
    by_pred: FxHashMap<PredId, Vec<u32>>,
    postings: FxHashMap<(PredId, u8, SymId), Vec<u32>>,
    delta_new: Vec<u32>,
    delta: Vec<u32>,
}

impl LabelledFactStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn push_row(&mut self, fact: Fact, label: Label, round: u64) -> u32 {
        let idx = self.rows.len() as u32;
        self.by_pred.entry(fact.pred).or_default().push(idx);
        for (pos, &arg) in fact.args.iter().enumerate() {
            self.postings.entry((fact.pred, pos as u8, arg)).or_default().push(idx);
        }
        self.index.insert(fact.clone(), idx);
        self.rows.push(FactRow { fact, label, round });
        idx
    }

    /// Schedules a fresh fact as `Δₙ`. Returns false when the fact is
    /// already present under any label.
    pub fn insert_new(&mut self, fact: &Fact) -> bool {
        if self.index.contains_key(fact) {
            return false;
        }
        let idx = self.push_row(fact.clone(), Label::DeltaNew, 0);
        self.delta_new.push(idx);
        true
    }

    /// Appends a derived fact directly as `Δ` of the given round. Returns
    /// false when already present.
    pub fn insert_delta(&mut self, fact: &Fact, round: u64) -> bool {
        if self.index.contains_key(fact) {
            return false;
        }
        let idx = self.push_row(fact.clone(), Label::Delta, round);
        self.delta.push(idx);
        true
    }

    /// Used by snapshot loading only: restores a row with its exact label
    /// and round stamp.
    pub fn restore_row(&mut self, fact: Fact, label: Label, round: u64) {
        let idx = self.push_row(fact, label, round);
        match self.rows[idx as usize].label {
            Label::DeltaNew => self.delta_new.push(idx),
            Label::Delta => self.delta.push(idx),
            Label::OldI => {}
        }
    }

    /// `Δₙ → Δ`, stamping the given round. Called at the start of derive.
    pub fn promote_delta_new(&mut self, round: u64) {
        for &idx in &self.delta_new {
            let row = &mut self.rows[idx as usize];
            debug_assert!(matches!(row.label, Label::DeltaNew));
            row.label = Label::Delta;
            row.round = round;
        }
        self.delta.append(&mut self.delta_new.clone());
        self.delta_new.clear();
    }

    /// `Δ → I`; no fact is removed.
    pub fn merge(&mut self) {
        for &idx in &self.delta {
            self.rows[idx as usize].label = Label::OldI;
        }
        self.delta.clear();
    }

    pub fn delta_count(&self) -> u64 {
        self.delta.len() as u64
    }

    pub fn delta_facts(&self) -> impl Iterator<Item = &Fact> + '_ {
        self.delta.iter().map(|&i| &self.rows[i as usize].fact)
    }

    pub fn lookup(&self, fact: &Fact) -> Option<(Label, u64)> {
        self.index.get(fact).map(|&i| {
            let row = &self.rows[i as usize];
            (row.label, row.round)
        })
    }

    pub fn contains(&self, fact: &Fact, filter: DomainFilter) -> bool {
        match self.lookup(fact) {
            Some((label, _)) => filter.admits(label),
            None => false,
        }
    }

    pub(crate) fn row(&self, idx: u32) -> &FactRow {
        &self.rows[idx as usize]
    }

    /// Candidate row indexes for an atom with the given bound positions.
    /// Picks the shortest applicable posting list.
    pub(crate) fn candidates(&self, pred: PredId, bound: &[(u8, SymId)]) -> &[u32] {
        let mut best: Option<&Vec<u32>> = None;
        for &(pos, val) in bound {
            if let Some(list) = self.postings.get(&(pred, pos, val)) {
                if best.map_or(true, |b| list.len() < b.len()) {
                    best = Some(list);
                }
            } else {
                return &[];
            }
        }
        match best {
            Some(list) => list,
            None => self.by_pred.get(&pred).map_or(&[], |v| v.as_slice()),
        }
    }

    pub fn scan(&self, pred: PredId, bound: &[(u8, SymId)], filter: DomainFilter, f: &mut dyn FnMut(&Fact)) {
        for &idx in self.candidates(pred, bound) {
            let row = &self.rows[idx as usize];
            if !filter.admits(row.label) {
                continue;
            }
            if bound.iter().all(|&(pos, val)| row.fact.args[pos as usize] == val) {
                f(&row.fact);
            }
        }
    }

    pub fn count(&self, pred: PredId, filter: DomainFilter) -> u64 {
        self.by_pred.get(&pred).map_or(0, |rows| {
            rows.iter().filter(|&&i| filter.admits(self.rows[i as usize].label)).count() as u64
        })
    }

    pub fn counts_by_label(&self, pred: PredId) -> [u64; 3] {
        let mut out = [0u64; 3];
        if let Some(rows) = self.by_pred.get(&pred) {
            for &i in rows {
                out[self.rows[i as usize].label as usize] += 1;
            }
        }
        out
    }

    pub fn predicates(&self) -> impl Iterator<Item = PredId> + '_ {
        self.by_pred.keys().copied()
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = (&Fact, Label, u64)> + '_ {
        self.rows.iter().map(|r| (&r.fact, r.label, r.round))
    }

    pub fn approx_bytes(&self) -> usize {
        use std::mem::size_of;
        let row_heap: usize = self
            .rows
            .iter()
            .map(|r| if r.fact.args.spilled() { r.fact.args.len() * size_of::<SymId>() } else { 0 })
            .sum();
        let rows = self.rows.capacity() * size_of::<FactRow>() + row_heap;
        let index = self.index.capacity() * (size_of::<Fact>() + size_of::<u32>() + 8);
        let postings: usize = self
            .postings
            .values()
            .map(|v| v.capacity() * size_of::<u32>() + 32)
            .sum::<usize>()
            + self.by_pred.values().map(|v| v.capacity() * size_of::<u32>() + 16).sum::<usize>();
        let lists = (self.delta.capacity() + self.delta_new.capacity()) * size_of::<u32>();
        rows + index + postings + lists
    }
}

/// Per-round cache of scheduled body facts (the scheme's `C_T`).
#[derive(Default)]
pub struct FactCache {
    facts: Vec<Fact>,
    set: FxHashSet<Fact>,
    by_pred: FxHashMap<PredId, Vec<u32>>,
}

impl FactCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, fact: &Fact) -> bool {
        if self.set.contains(fact) {
            return false;
        }
        let idx = self.facts.len() as u32;
        self.by_pred.entry(fact.pred).or_default().push(idx);
        self.set.insert(fact.clone());
        self.facts.push(fact.clone());
        true
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.set.contains(fact)
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn fact(&self, idx: u32) -> &Fact {
        &self.facts[idx as usize]
    }

    pub fn of_pred(&self, pred: PredId) -> &[u32] {
        self.by_pred.get(&pred).map_or(&[], |v| v.as_slice())
    }

    pub fn clear(&mut self) {
        self.facts.clear();
        self.set.clear();
        self.by_pred.clear();
    }

    pub fn approx_bytes(&self) -> usize {
        use std::mem::size_of;
        self.facts.capacity() * size_of::<Fact>()
            + self.set.capacity() * (size_of::<Fact>() + 8)
            + self.by_pred.values().map(|v| v.capacity() * 4 + 16).sum::<usize>()
    }
}
