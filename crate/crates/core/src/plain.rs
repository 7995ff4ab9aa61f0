//! The plain table: label-tagged fact storage with generic seminaive rule
//! application for all rules whose head predicate it owns.

use std::cell::Cell;

use rustc_hash::{FxHashMap, FxHashSet};
use smallvec::SmallVec;

use crate::datalog::{
    apply_substitution, match_atom, Atom, Fact, PredId, Rule, Substitution, SymId, Term, VarId,
};
use crate::scheme::{DomainFilter, Pattern, Registry, ScheduleOutcome};
use crate::store::{FactCache, LabelledFactStore};

struct PlanRule {
    rule: Rule,
    /// All body predicates are plain-owned: the duplicate-free pivot
    /// discipline applies. Otherwise instances may be re-derived and the
    /// output filter removes duplicates.
    strict: bool,
    /// Compiled form for strict two-atom rules; the shape of transitive
    /// rules and most recursive joins, and by far the hottest path.
    compiled: Option<[PivotPlan; 2]>,
}

#[derive(Clone, Copy)]
enum HeadSrc {
    Const(SymId),
    Pivot(u8),
    Other(u8),
}

/// One pivot choice of a strict two-atom rule, flattened into positional
/// checks: no substitution structure survives to run time.
struct PivotPlan {
    head_pred: PredId,
    pivot_pred: PredId,
    other_pred: PredId,
    /// The other atom precedes the pivot, so its rows must be strictly
    /// older than the pivot's Δ batch.
    other_older: bool,
    pivot_const: Vec<(u8, SymId)>,
    pivot_self_eq: Vec<(u8, u8)>,
    other_self_eq: Vec<(u8, u8)>,
    other_const: Vec<(u8, SymId)>,
    /// other-atom position ← pivot-atom position, for join variables.
    bound_from_pivot: Vec<(u8, u8)>,
    head: Vec<HeadSrc>,
}

fn compile_two_atom(rule: &Rule) -> Option<[PivotPlan; 2]> {
    if rule.body.len() != 2 {
        return None;
    }
    let plan_for = |pivot: usize| -> PivotPlan {
        let other = 1 - pivot;
        let pa = &rule.body[pivot];
        let oa = &rule.body[other];
        let mut pivot_const = Vec::new();
        let mut pivot_self_eq = Vec::new();
        let mut other_const = Vec::new();
        let mut other_self_eq = Vec::new();
        let mut bound_from_pivot = Vec::new();
        let mut pivot_var: Vec<(VarId, u8)> = Vec::new();
        let mut other_var: Vec<(VarId, u8)> = Vec::new();
        for (i, t) in pa.terms.iter().enumerate() {
            match t {
                Term::Const(c) => pivot_const.push((i as u8, *c)),
                Term::Var(v) => match pivot_var.iter().find(|(w, _)| w == v) {
                    Some(&(_, first)) => pivot_self_eq.push((i as u8, first)),
                    None => pivot_var.push((*v, i as u8)),
                },
            }
        }
        for (i, t) in oa.terms.iter().enumerate() {
            match t {
                Term::Const(c) => other_const.push((i as u8, *c)),
                Term::Var(v) => {
                    if let Some(&(_, p)) = pivot_var.iter().find(|(w, _)| w == v) {
                        bound_from_pivot.push((i as u8, p));
                    } else if let Some(&(_, first)) = other_var.iter().find(|(w, _)| w == v) {
                        other_self_eq.push((i as u8, first));
                    } else {
                        other_var.push((*v, i as u8));
                    }
                }
            }
        }
        let head = rule
            .head
            .terms
            .iter()
            .map(|t| match t {
                Term::Const(c) => HeadSrc::Const(*c),
                Term::Var(v) => {
                    if let Some(&(_, p)) = pivot_var.iter().find(|(w, _)| w == v) {
                        HeadSrc::Pivot(p)
                    } else if let Some(&(_, p)) = other_var.iter().find(|(w, _)| w == v) {
                        HeadSrc::Other(p)
                    } else {
                        unreachable!("safety guarantees head variables are bound")
                    }
                }
            })
            .collect();
        PivotPlan {
            head_pred: rule.head.pred,
            pivot_pred: pa.pred,
            other_pred: oa.pred,
            other_older: other < pivot,
            pivot_const,
            pivot_self_eq,
            other_self_eq,
            other_const,
            bound_from_pivot,
            head,
        }
    };
    Some([plan_for(0), plan_for(1)])
}

pub struct PlainTable {
    store: LabelledFactStore,
    cache: FactCache,
    rules: Vec<PlanRule>,
    owned: FxHashSet<PredId>,
    support: FxHashSet<PredId>,
    /// Rule instances generated under the strict pivot discipline. Over a
    /// full run on an all-plain program each instance is counted exactly
    /// once; tests compare this against a brute-force instance count.
    instances: Cell<u64>,
}

impl PlainTable {
    pub fn new(rules: Vec<Rule>, owned: FxHashSet<PredId>, support: FxHashSet<PredId>) -> Self {
        let rules = rules
            .into_iter()
            .map(|rule| {
                let strict = rule.body.iter().all(|a| owned.contains(&a.pred));
                let compiled = if strict { compile_two_atom(&rule) } else { None };
                PlanRule { rule, strict, compiled }
            })
            .collect();
        PlainTable {
            store: LabelledFactStore::new(),
            cache: FactCache::new(),
            rules,
            owned,
            support,
            instances: Cell::new(0),
        }
    }

    pub fn owned_preds(&self) -> impl Iterator<Item = PredId> + '_ {
        self.owned.iter().copied()
    }

    pub fn rule_count(&self) -> usize {
        self.rules.len()
    }

    pub fn instances_generated(&self) -> u64 {
        self.instances.get()
    }

    pub(crate) fn store(&self) -> &LabelledFactStore {
        &self.store
    }

    pub(crate) fn store_mut(&mut self) -> &mut LabelledFactStore {
        &mut self.store
    }

    pub(crate) fn set_instances(&mut self, v: u64) {
        self.instances.set(v);
    }

    pub fn schedule(&mut self, fact: &Fact, is_owner: bool) -> ScheduleOutcome {
        let mut out = ScheduleOutcome::default();
        if is_owner {
            if self.store.insert_new(fact) {
                out.pending += 1;
            } else {
                out.duplicates += 1;
            }
        }
        if self.support.contains(&fact.pred) && self.cache.insert(fact) {
            out.cached += 1;
        }
        out
    }

    pub fn derive_prep(&mut self, round: u64) {
        self.store.promote_delta_new(round);
    }

    /// Applies `Π_T[I, C_T]`: every instance with at least one body atom in
    /// the cache and the rest matched per the pivot discipline. Returns the
    /// novel conclusions; the store is not touched.
    pub fn derive_match(&self, reg: &Registry, _round: u64) -> Vec<Fact> {
        if self.cache.is_empty() || self.rules.is_empty() {
            return Vec::new();
        }
        let mut novel: Vec<Fact> = Vec::new();
        let mut novel_set: FxHashSet<Fact> = FxHashSet::default();
        let mut sigma = Substitution::new();
        for plan in &self.rules {
            if let Some(compiled) = &plan.compiled {
                for p in compiled {
                    self.run_pivot_plan(p, &mut novel, &mut novel_set);
                }
                continue;
            }
            let body_len = plan.rule.body.len();
            for pivot in 0..body_len {
                let pivot_atom = &plan.rule.body[pivot];
                for &ci in self.cache.of_pred(pivot_atom.pred) {
                    let pf = self.cache.fact(ci);
                    debug_assert!(sigma.is_empty());
                    if !match_atom(pivot_atom, pf, &mut sigma) {
                        continue;
                    }
                    let pivot_round = if plan.strict {
                        match self.store.lookup(pf) {
                            Some((_, r)) => r,
                            // strict rules only see plain-owned predicates,
                            // so every cached fact is store-backed
                            None => {
                                debug_assert!(false, "strict pivot fact missing from store");
                                sigma.truncate(0);
                                continue;
                            }
                        }
                    } else {
                        0
                    };
                    let mut done = 1u32 << pivot;
                    self.join(
                        plan,
                        pivot,
                        pivot_round,
                        &mut done,
                        &mut sigma,
                        reg,
                        &mut |s: &Substitution| {
                            if plan.strict {
                                self.instances.set(self.instances.get() + 1);
                            }
                            let fact = apply_substitution(&plan.rule.head, s).to_fact();
                            if self.store.lookup(&fact).is_none() && !novel_set.contains(&fact) {
                                novel_set.insert(fact.clone());
                                novel.push(fact);
                            }
                        },
                    );
                    sigma.truncate(0);
                }
            }
        }
        novel
    }

    fn run_pivot_plan(&self, p: &PivotPlan, novel: &mut Vec<Fact>, novel_set: &mut FxHashSet<Fact>) {
        let head_pred = p.head_pred;
        let mut instances = self.instances.get();
        'pivots: for &ci in self.cache.of_pred(p.pivot_pred) {
            let pf = self.cache.fact(ci);
            for &(pos, c) in &p.pivot_const {
                if pf.args[pos as usize] != c {
                    continue 'pivots;
                }
            }
            for &(a, b) in &p.pivot_self_eq {
                if pf.args[a as usize] != pf.args[b as usize] {
                    continue 'pivots;
                }
            }
            let pivot_round = match self.store.lookup(pf) {
                Some((_, r)) => r,
                None => {
                    debug_assert!(false, "strict pivot fact missing from store");
                    continue 'pivots;
                }
            };
            let mut bound: SmallVec<[(u8, SymId); 2]> = p
                .bound_from_pivot
                .iter()
                .map(|&(op, pp)| (op, pf.args[pp as usize]))
                .collect();
            bound.extend(p.other_const.iter().copied());
            'rows: for &idx in self.store.candidates(p.other_pred, &bound) {
                let row = self.store.row(idx);
                if p.other_older && row.round >= pivot_round {
                    continue;
                }
                // the index probe covered one bound position; verify all
                for &(pos, v) in &bound {
                    if row.fact.args[pos as usize] != v {
                        continue 'rows;
                    }
                }
                for &(a, b) in &p.other_self_eq {
                    if row.fact.args[a as usize] != row.fact.args[b as usize] {
                        continue 'rows;
                    }
                }
                instances += 1;
                let args: crate::datalog::Args = p
                    .head
                    .iter()
                    .map(|src| match src {
                        HeadSrc::Const(c) => *c,
                        HeadSrc::Pivot(pos) => pf.args[*pos as usize],
                        HeadSrc::Other(pos) => row.fact.args[*pos as usize],
                    })
                    .collect();
                let fact = Fact { pred: head_pred, args };
                if self.store.lookup(&fact).is_none() && !novel_set.contains(&fact) {
                    novel_set.insert(fact.clone());
                    novel.push(fact);
                }
            }
        }
        self.instances.set(instances);
    }

    #[allow(clippy::too_many_arguments)]
    fn join(
        &self,
        plan: &PlanRule,
        pivot: usize,
        pivot_round: u64,
        done: &mut u32,
        sigma: &mut Substitution,
        reg: &Registry,
        emit: &mut dyn FnMut(&Substitution),
    ) {
        let body = &plan.rule.body;
        // greedy: next atom with the most bound arguments
        let mut next = usize::MAX;
        let mut best = -1i32;
        for (i, atom) in body.iter().enumerate() {
            if *done & (1 << i) != 0 {
                continue;
            }
            let bound = atom
                .terms
                .iter()
                .filter(|t| match t {
                    Term::Const(_) => true,
                    Term::Var(v) => sigma.get(*v).is_some(),
                })
                .count() as i32;
            if bound > best {
                best = bound;
                next = i;
            }
        }
        if next == usize::MAX {
            emit(sigma);
            return;
        }
        *done |= 1 << next;
        let atom = &body[next];
        let mark = sigma.len();

        let local = self.owned.contains(&atom.pred);
        if plan.strict || local {
            let bound: SmallVec<[(u8, SymId); 2]> = atom
                .terms
                .iter()
                .enumerate()
                .filter_map(|(i, t)| match t {
                    Term::Const(c) => Some((i as u8, *c)),
                    Term::Var(v) => sigma.get(*v).map(|c| (i as u8, c)),
                })
                .collect();
            for &idx in self.store.candidates(atom.pred, &bound) {
                let row = self.store.row(idx);
                if plan.strict && next < pivot && row.round >= pivot_round {
                    // atoms before the pivot must be strictly older than
                    // the pivot's Δ batch
                    continue;
                }
                if match_atom(atom, &row.fact, sigma) {
                    self.join(plan, pivot, pivot_round, done, sigma, reg, emit);
                    sigma.truncate(mark);
                }
            }
        } else {
            // foreign predicate: the merged I of its owning scheme plus
            // this round's cached arrivals
            let grounded = apply_substitution(atom, sigma);
            let pattern = Pattern::new(
                atom.pred,
                grounded.terms.iter().map(|t| match t {
                    Term::Const(c) => Some(*c),
                    Term::Var(_) => None,
                }),
            );
            // the callback re-runs match_atom to handle repeated variables
            let mut hits: Vec<Fact> = Vec::new();
            reg.scan(&pattern, DomainFilter::OldI, &mut |f| hits.push(f.clone()));
            for fact in &hits {
                if match_atom(atom, fact, sigma) {
                    self.join(plan, pivot, pivot_round, done, sigma, reg, emit);
                    sigma.truncate(mark);
                }
            }
            for &ci in self.cache.of_pred(atom.pred) {
                let fact = self.cache.fact(ci);
                if match_atom(atom, fact, sigma) {
                    self.join(plan, pivot, pivot_round, done, sigma, reg, emit);
                    sigma.truncate(mark);
                }
            }
        }
        *done &= !(1 << next);
    }

    pub fn derive_commit(
        &mut self,
        conclusions: Vec<Fact>,
        round: u64,
        want_facts: bool,
    ) -> crate::scheme::DeltaOut {
        for fact in &conclusions {
            let fresh = self.store.insert_delta(fact, round);
            debug_assert!(fresh, "conclusions were deduplicated during matching");
        }
        self.cache.clear();
        let count = self.store.delta_count();
        let facts = want_facts.then(|| self.store.delta_facts().cloned().collect());
        crate::scheme::DeltaOut { count, facts }
    }

    pub fn merge(&mut self) {
        self.store.merge();
    }

    pub fn contains(&self, fact: &Fact, filter: DomainFilter) -> bool {
        self.store.contains(fact, filter)
    }

    pub fn scan(&self, pattern: &Pattern, filter: DomainFilter, cb: &mut dyn FnMut(&Fact)) {
        self.store.scan(pattern.pred, &pattern.bound(), filter, cb)
    }

    pub fn count(&self, pred: PredId, filter: DomainFilter) -> u64 {
        self.store.count(pred, filter)
    }

    /// Per-predicate fact counts by label, for stats dumps.
    pub fn label_counts(&self) -> FxHashMap<PredId, [u64; 3]> {
        let mut out = FxHashMap::default();
        for pred in self.store.predicates() {
            out.insert(pred, self.store.counts_by_label(pred));
        }
        out
    }

    pub fn fact_count(&self) -> usize {
        self.store.len()
    }

    pub fn approx_bytes(&self) -> usize {
        self.store.approx_bytes() + self.cache.approx_bytes()
    }
}

/// Atom-level helpers shared with tests.
pub fn atom_pattern(atom: &Atom, sigma: &Substitution) -> Pattern {
    Pattern::new(
        atom.pred,
        atom.terms.iter().map(|t| match t {
            Term::Const(c) => Some(*c),
            Term::Var(v) => sigma.get(*v),
        }),
    )
}
