//! Virtual storage for a union predicate: facts recoverable from supporting
//! predicates are translated on demand; only non-recoverable explicit facts
//! are stored.

use rustc_hash::FxHashSet;

use crate::datalog::{Fact, PredId};
use crate::scheme::{DomainFilter, Pattern, Registry, ScheduleOutcome, SchemeId};
use crate::store::LabelledFactStore;

pub struct UnionTable {
    id: SchemeId,
    pred: PredId,
    /// Supporting predicates in declaration order; scans dedup by probing
    /// earlier sources (the explicit list counts as source zero).
    supports: Vec<PredId>,
    store: LabelledFactStore,
    buffer: Vec<Fact>,
    buffer_set: FxHashSet<Fact>,
    /// Translations yielded by the most recent derive, for stats.
    last_translated: u64,
}

impl UnionTable {
    pub fn new(id: SchemeId, pred: PredId, supports: Vec<PredId>) -> Self {
        UnionTable {
            id,
            pred,
            supports,
            store: LabelledFactStore::new(),
            buffer: Vec::new(),
            buffer_set: FxHashSet::default(),
            last_translated: 0,
        }
    }

    pub fn last_translated(&self) -> u64 {
        self.last_translated
    }

    pub fn owned_pred(&self) -> PredId {
        self.pred
    }

    pub fn supports(&self) -> &[PredId] {
        &self.supports
    }

    pub fn explicit_fact_count(&self) -> usize {
        self.store.len()
    }

    pub(crate) fn store(&self) -> &LabelledFactStore {
        &self.store
    }

    pub(crate) fn store_mut(&mut self) -> &mut LabelledFactStore {
        &mut self.store
    }

    fn translate(&self, fact: &Fact, pred: PredId) -> Fact {
        Fact { pred, args: fact.args.clone() }
    }

    /// The schedule guard: a fact is worth recording only if no predicate of
    /// the family already holds its tuple in domain I.
    fn recoverable_from_i(&self, u_fact: &Fact, reg: &Registry) -> bool {
        if self.store.contains(u_fact, DomainFilter::OldI) {
            return true;
        }
        self.supports
            .iter()
            .any(|&p| reg.contains(&self.translate(u_fact, p), DomainFilter::OldI))
    }

    pub fn schedule(
        &mut self,
        fact: &Fact,
        origin: Option<SchemeId>,
        is_owner: bool,
        reg: &Registry,
    ) -> ScheduleOutcome {
        let mut out = ScheduleOutcome::default();
        if origin == Some(self.id) {
            // own Δ re-offered: every such fact is explicit (already listed)
            // or translated (already recoverable); storing it would break
            // virtuality
            return out;
        }
        let u_fact = if is_owner {
            debug_assert_eq!(fact.pred, self.pred);
            fact.clone()
        } else {
            self.translate(fact, self.pred)
        };
        if self.recoverable_from_i(&u_fact, reg) {
            out.duplicates += 1;
            return out;
        }
        if is_owner {
            if self.store.insert_new(&u_fact) {
                out.pending += 1;
            } else {
                out.duplicates += 1;
            }
        } else if !self.buffer_set.contains(&u_fact) {
            self.buffer_set.insert(u_fact.clone());
            self.buffer.push(u_fact);
            out.cached += 1;
        }
        out
    }

    pub fn derive_prep(&mut self, round: u64) {
        self.store.promote_delta_new(round);
    }

    pub fn derive_commit(&mut self, want_facts: bool) -> crate::scheme::DeltaOut {
        // Δ = explicit Δ facts plus buffered translations, each at most once
        let buffered = std::mem::take(&mut self.buffer);
        self.buffer_set.clear();
        let fresh: Vec<Fact> = buffered
            .into_iter()
            .filter(|f| self.store.lookup(f).is_none())
            .collect();
        let count = self.store.delta_count() + fresh.len() as u64;
        let facts = want_facts.then(|| {
            let mut out: Vec<Fact> = self.store.delta_facts().cloned().collect();
            out.extend(fresh.iter().cloned());
            out
        });
        self.last_translated = fresh.len() as u64;
        crate::scheme::DeltaOut { count, facts }
    }

    pub fn merge(&mut self) {
        self.store.merge();
    }

    /// Membership: the explicit list first, then each support's same-domain
    /// slice through the registry (supports may themselves be compressed).
    pub fn contains(&self, fact: &Fact, filter: DomainFilter, reg: &Registry) -> bool {
        if fact.pred != self.pred {
            return false;
        }
        if self.store.contains(fact, filter) {
            return true;
        }
        self.supports
            .iter()
            .any(|&p| reg.contains(&self.translate(fact, p), filter))
    }

    pub fn scan(
        &self,
        pattern: &Pattern,
        filter: DomainFilter,
        reg: &Registry,
        cb: &mut dyn FnMut(&Fact),
    ) {
        if pattern.pred != self.pred {
            return;
        }
        // source 0: the explicit list
        self.store.scan(self.pred, &pattern.bound(), filter, cb);
        // then each support, suppressing facts an earlier source yielded
        for (k, &p) in self.supports.iter().enumerate() {
            let sub = Pattern { pred: p, args: pattern.args.clone() };
            reg.scan(&sub, filter, &mut |f| {
                let u_fact = self.translate(f, self.pred);
                if self.store.contains(&u_fact, filter) {
                    return;
                }
                for &q in &self.supports[..k] {
                    if reg.contains(&self.translate(&u_fact, q), filter) {
                        return;
                    }
                }
                cb(&u_fact);
            });
        }
    }

    pub fn count(&self, filter: DomainFilter, reg: &Registry) -> u64 {
        let mut n = self.store.count(self.pred, filter);
        self.scan_virtual_count(filter, reg, &mut n);
        n
    }

    fn scan_virtual_count(&self, filter: DomainFilter, reg: &Registry, n: &mut u64) {
        let free = Pattern::new(self.pred, std::iter::repeat(None).take(self.arity_guess()));
        for (k, &p) in self.supports.iter().enumerate() {
            let sub = Pattern { pred: p, args: free.args.clone() };
            reg.scan(&sub, filter, &mut |f| {
                let u_fact = self.translate(f, self.pred);
                if self.store.contains(&u_fact, filter) {
                    return;
                }
                for &q in &self.supports[..k] {
                    if reg.contains(&self.translate(&u_fact, q), filter) {
                        return;
                    }
                }
                *n += 1;
            });
        }
    }

    fn arity_guess(&self) -> usize {
        2
    }

    /// Upper bound on the virtually represented facts: the sum over
    /// supports, which may double-count overlap.
    pub fn virtual_upper_bound(&self, reg: &Registry) -> u64 {
        self.supports.iter().map(|&p| reg.count(p, DomainFilter::All)).sum()
    }

    pub fn approx_bytes(&self) -> usize {
        self.store.approx_bytes()
            + self.buffer.capacity() * std::mem::size_of::<Fact>()
            + self.buffer_set.capacity() * (std::mem::size_of::<Fact>() + 8)
    }
}
