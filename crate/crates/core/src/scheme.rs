//! The storage-scheme contract and the registry that assigns predicates and
//! rules to schemes.
//!
//! Each scheme owns a disjoint set of predicates (`P_T`), the rules whose
//! heads it owns (`Π_T`), and sees the body predicates of those rules
//! (`SP_T`). Schemes expose schedule / derive / merge plus domain-scoped
//! membership and scans; the reasoning loop in [`crate::engine`] drives them.

use std::cell::RefCell;

use rustc_hash::{FxHashMap, FxHashSet};
use smallvec::SmallVec;

use crate::datalog::{Fact, Interner, PredId, Program, Rule, SymId, Term};
use crate::plain::PlainTable;
use crate::tc::{TcConfig, TcScheme};
use crate::union_table::UnionTable;

/// Storage label of a fact. `DeltaNew` exists only between schedule and
/// derive; labels move `DeltaNew → Delta → OldI` and never back.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Label {
    DeltaNew = 0,
    Delta = 1,
    OldI = 2,
}

/// Domain selector for membership tests and scans.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DomainFilter {
    /// Facts merged in earlier rounds.
    OldI,
    /// Facts derived in the current round.
    Delta,
    /// `I ∪ Δ`.
    All,
}

impl DomainFilter {
    pub fn admits(self, label: Label) -> bool {
        match self {
            DomainFilter::OldI => matches!(label, Label::OldI),
            DomainFilter::Delta => matches!(label, Label::Delta),
            DomainFilter::All => matches!(label, Label::Delta | Label::OldI),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct SchemeId(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SchemeKind {
    Plain,
    Tc,
    Union,
}

/// A scan pattern: a predicate with each argument either bound or free.
#[derive(Clone, Debug)]
pub struct Pattern {
    pub pred: PredId,
    pub args: SmallVec<[Option<SymId>; 2]>,
}

impl Pattern {
    pub fn new(pred: PredId, args: impl IntoIterator<Item = Option<SymId>>) -> Self {
        Pattern { pred, args: args.into_iter().collect() }
    }

    pub fn bound(&self) -> SmallVec<[(u8, SymId); 2]> {
        self.args
            .iter()
            .enumerate()
            .filter_map(|(i, a)| a.map(|s| (i as u8, s)))
            .collect()
    }

    pub fn matches(&self, fact: &Fact) -> bool {
        fact.pred == self.pred
            && fact.args.len() == self.args.len()
            && self.args.iter().zip(fact.args.iter()).all(|(p, a)| p.map_or(true, |s| s == *a))
    }
}

/// Per-scheme counters reported by the global schedule pass.
#[derive(Default, Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScheduleOutcome {
    /// Facts recorded as pending `Δₙ` by their owning scheme.
    pub pending: u64,
    /// Facts cached into some scheme's `C_T`.
    pub cached: u64,
    /// Facts the owner already represented in `I ∪ Δ`.
    pub duplicates: u64,
}

impl ScheduleOutcome {
    fn absorb(&mut self, other: ScheduleOutcome) {
        self.pending += other.pending;
        self.cached += other.cached;
        self.duplicates += other.duplicates;
    }
}

/// What a scheme's derive produced this round. Enumeration of the facts is
/// optional: when no other scheme consumes this Δ, the engine only needs the
/// count for the termination test.
pub struct DeltaOut {
    pub count: u64,
    pub facts: Option<Vec<Fact>>,
}

pub enum SchemeBox {
    Plain(PlainTable),
    Tc(TcScheme),
    Union(UnionTable),
}

impl SchemeBox {
    pub fn kind(&self) -> SchemeKind {
        match self {
            SchemeBox::Plain(_) => SchemeKind::Plain,
            SchemeBox::Tc(_) => SchemeKind::Tc,
            SchemeBox::Union(_) => SchemeKind::Union,
        }
    }

    fn schedule(
        &mut self,
        fact: &Fact,
        origin: Option<SchemeId>,
        is_owner: bool,
        reg: &Registry,
    ) -> ScheduleOutcome {
        match self {
            SchemeBox::Plain(s) => s.schedule(fact, is_owner),
            SchemeBox::Tc(s) => s.schedule(fact, origin, is_owner),
            SchemeBox::Union(s) => s.schedule(fact, origin, is_owner, reg),
        }
    }

    fn derive_prep(&mut self, round: u64) {
        match self {
            SchemeBox::Plain(s) => s.derive_prep(round),
            SchemeBox::Tc(s) => s.derive_prep(round),
            SchemeBox::Union(s) => s.derive_prep(round),
        }
    }

    fn derive_match(&self, reg: &Registry, round: u64) -> Vec<Fact> {
        match self {
            SchemeBox::Plain(s) => s.derive_match(reg, round),
            SchemeBox::Tc(s) => s.derive_match(reg),
            SchemeBox::Union(_) => Vec::new(),
        }
    }

    fn derive_commit(&mut self, conclusions: Vec<Fact>, round: u64, want_facts: bool) -> DeltaOut {
        match self {
            SchemeBox::Plain(s) => s.derive_commit(conclusions, round, want_facts),
            SchemeBox::Tc(s) => s.derive_commit(conclusions, want_facts),
            SchemeBox::Union(s) => s.derive_commit(want_facts),
        }
    }

    fn merge(&mut self) {
        match self {
            SchemeBox::Plain(s) => s.merge(),
            SchemeBox::Tc(s) => s.merge(),
            SchemeBox::Union(s) => s.merge(),
        }
    }

    fn contains(&self, fact: &Fact, filter: DomainFilter, reg: &Registry) -> bool {
        match self {
            SchemeBox::Plain(s) => s.contains(fact, filter),
            SchemeBox::Tc(s) => s.contains(fact, filter),
            SchemeBox::Union(s) => s.contains(fact, filter, reg),
        }
    }

    fn scan(&self, pattern: &Pattern, filter: DomainFilter, reg: &Registry, cb: &mut dyn FnMut(&Fact)) {
        match self {
            SchemeBox::Plain(s) => s.scan(pattern, filter, cb),
            SchemeBox::Tc(s) => s.scan(pattern, filter, cb),
            SchemeBox::Union(s) => s.scan(pattern, filter, reg, cb),
        }
    }

    pub fn approx_bytes(&self) -> usize {
        match self {
            SchemeBox::Plain(s) => s.approx_bytes(),
            SchemeBox::Tc(s) => s.approx_bytes(),
            SchemeBox::Union(s) => s.approx_bytes(),
        }
    }
}

/// Scheme-selection flags; both optimised schemes default to on. Disabling
/// both reproduces the plain-tables-only baseline.
#[derive(Clone, Copy, Debug)]
pub struct SchemeFlags {
    pub enable_tc: bool,
    pub enable_union: bool,
}

impl Default for SchemeFlags {
    fn default() -> Self {
        SchemeFlags { enable_tc: true, enable_union: true }
    }
}

/// Predicate-to-scheme assignment plus the per-scheme rule partition.
pub struct Registry {
    cells: Vec<RefCell<SchemeBox>>,
    kinds: Vec<SchemeKind>,
    /// Predicate ownership; predicates first seen in data are adopted by the
    /// plain table on schedule.
    owner: RefCell<FxHashMap<PredId, SchemeId>>,
    /// Schemes whose `SP_T` contains the predicate (the plain table lists
    /// itself here; compressed schemes do not re-consume their own output).
    interested: FxHashMap<PredId, Vec<SchemeId>>,
    plain: SchemeId,
    /// Whether any other scheme consumes this scheme's Δ facts.
    delta_consumed: Vec<bool>,
    pub flags: SchemeFlags,
}

impl Registry {
    pub fn scheme_count(&self) -> usize {
        self.cells.len()
    }

    pub fn kind(&self, id: SchemeId) -> SchemeKind {
        self.kinds[id.0 as usize]
    }

    pub fn plain_id(&self) -> SchemeId {
        self.plain
    }

    pub(crate) fn cell(&self, id: SchemeId) -> &RefCell<SchemeBox> {
        &self.cells[id.0 as usize]
    }

    /// Read access to a scheme, for stats and tests.
    pub fn scheme_ref(&self, id: SchemeId) -> std::cell::Ref<'_, SchemeBox> {
        self.cells[id.0 as usize].borrow()
    }

    /// The scheme ids in derive order.
    pub fn scheme_ids(&self) -> impl Iterator<Item = SchemeId> {
        (0..self.cells.len() as u32).map(SchemeId)
    }

    pub fn owner_of(&self, pred: PredId) -> SchemeId {
        self.owner.borrow().get(&pred).copied().unwrap_or(self.plain)
    }

    fn adopt(&self, pred: PredId) -> SchemeId {
        *self.owner.borrow_mut().entry(pred).or_insert(self.plain)
    }

    pub fn delta_consumed(&self, id: SchemeId) -> bool {
        self.delta_consumed[id.0 as usize]
    }

    /// Offers every fact to its owner and to all schemes whose rule bodies
    /// mention its predicate. `origin` marks facts rescheduled out of a
    /// scheme's own Δ.
    pub fn schedule_batch<'a>(
        &self,
        facts: impl IntoIterator<Item = &'a Fact>,
        origin: Option<SchemeId>,
    ) -> ScheduleOutcome {
        let mut out = ScheduleOutcome::default();
        for fact in facts {
            let owner = self.adopt(fact.pred);
            let o = self.cells[owner.0 as usize]
                .borrow_mut()
                .schedule(fact, origin, true, self);
            out.absorb(o);
            if let Some(targets) = self.interested.get(&fact.pred) {
                for &t in targets {
                    if t == owner {
                        continue; // owner call above already saw both roles
                    }
                    let o = self.cells[t.0 as usize].borrow_mut().schedule(fact, origin, false, self);
                    out.absorb(o);
                }
            }
        }
        out
    }

    pub(crate) fn derive_prep(&self, id: SchemeId, round: u64) {
        self.cells[id.0 as usize].borrow_mut().derive_prep(round);
    }

    pub(crate) fn derive_match(&self, id: SchemeId, round: u64) -> Vec<Fact> {
        self.cells[id.0 as usize].borrow().derive_match(self, round)
    }

    pub(crate) fn derive_commit(&self, id: SchemeId, conclusions: Vec<Fact>, round: u64) -> DeltaOut {
        let want = self.delta_consumed[id.0 as usize];
        self.cells[id.0 as usize].borrow_mut().derive_commit(conclusions, round, want)
    }

    pub(crate) fn merge(&self, id: SchemeId) {
        self.cells[id.0 as usize].borrow_mut().merge();
    }

    /// Membership through the owning scheme.
    pub fn contains(&self, fact: &Fact, filter: DomainFilter) -> bool {
        let owner = self.owner_of(fact.pred);
        self.cells[owner.0 as usize].borrow().contains(fact, filter, self)
    }

    /// Pattern scan through the owning scheme.
    pub fn scan(&self, pattern: &Pattern, filter: DomainFilter, cb: &mut dyn FnMut(&Fact)) {
        let owner = self.owner_of(pattern.pred);
        self.cells[owner.0 as usize].borrow().scan(pattern, filter, self, cb)
    }

    /// Number of facts of `pred` in the given domain (represented counts for
    /// compressed schemes, computed without enumeration where possible).
    pub fn count(&self, pred: PredId, filter: DomainFilter) -> u64 {
        let owner = self.owner_of(pred);
        match &*self.cells[owner.0 as usize].borrow() {
            SchemeBox::Plain(s) => s.count(pred, filter),
            SchemeBox::Tc(s) => {
                if s.owned_pred() == pred {
                    s.count(filter)
                } else {
                    0
                }
            }
            SchemeBox::Union(s) => {
                if s.owned_pred() == pred {
                    s.count(filter, self)
                } else {
                    0
                }
            }
        }
    }

    pub fn total_bytes(&self) -> usize {
        self.cells.iter().map(|c| c.borrow().approx_bytes()).sum()
    }

    pub fn scheme_bytes(&self, id: SchemeId) -> usize {
        self.cells[id.0 as usize].borrow().approx_bytes()
    }
}

/// Recognises `R(x,z) :- R(x,y), R(y,z)` up to variable renaming and body
/// order; returns the transitive predicate.
pub fn transitive_predicate(rule: &Rule) -> Option<PredId> {
    if rule.body.len() != 2 || rule.head.terms.len() != 2 {
        return None;
    }
    let p = rule.head.pred;
    if rule.body[0].pred != p || rule.body[1].pred != p {
        return None;
    }
    let vars_of = |terms: &[Term]| -> Option<(u32, u32)> {
        match (terms.first()?, terms.get(1)?) {
            (Term::Var(a), Term::Var(b)) => Some((a.0, b.0)),
            _ => None,
        }
    };
    let (hx, hz) = vars_of(&rule.head.terms)?;
    let check = |b0: &[Term], b1: &[Term]| -> bool {
        match (vars_of(b0), vars_of(b1)) {
            (Some((x0, y0)), Some((y1, z1))) => {
                x0 == hx && z1 == hz && y0 == y1 && hx != hz && y0 != hx && y0 != hz
            }
            _ => false,
        }
    };
    if check(&rule.body[0].terms, &rule.body[1].terms)
        || check(&rule.body[1].terms, &rule.body[0].terms)
    {
        Some(p)
    } else {
        None
    }
}

/// Recognises a copy rule `p(x⃗) → U(x⃗)`: one body atom, identical argument
/// tuples of pairwise-distinct variables, and `p ≠ U`. Returns (U, p).
pub fn copy_rule(rule: &Rule) -> Option<(PredId, PredId)> {
    if rule.body.len() != 1 {
        return None;
    }
    let body = &rule.body[0];
    if body.pred == rule.head.pred || body.terms != rule.head.terms {
        return None;
    }
    let mut seen = SmallVec::<[u32; 4]>::new();
    for t in &rule.head.terms {
        match t {
            Term::Var(v) => {
                if seen.contains(&v.0) {
                    return None;
                }
                seen.push(v.0);
            }
            Term::Const(_) => return None,
        }
    }
    Some((rule.head.pred, body.pred))
}

/// Simple iterative Tarjan over a small digraph; returns a component id per
/// node. Used for copy-cycle detection (the TC scheme has its own
/// condensation over constants).
fn scc_ids(n: usize, adj: &[Vec<usize>]) -> Vec<usize> {
    const UNSET: usize = usize::MAX;
    let mut index = vec![UNSET; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp = vec![UNSET; n];
    let mut next_index = 0usize;
    let mut next_comp = 0usize;

    for root in 0..n {
        if index[root] != UNSET {
            continue;
        }
        // frames: (node, next child position)
        let mut frames = vec![(root, 0usize)];
        while let Some(&mut (v, ref mut ci)) = frames.last_mut() {
            if *ci == 0 {
                index[v] = next_index;
                low[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if let Some(&w) = adj[v].get(*ci) {
                *ci += 1;
                if index[w] == UNSET {
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
                frames.pop();
                if let Some(&mut (u, _)) = frames.last_mut() {
                    low[u] = low[u].min(low[v]);
                }
            }
        }
    }
    comp
}

/// Analyses the program and builds the scheme registry.
///
/// A predicate gets a TC scheme iff the program axiomatises it as transitive
/// and the TC flag is on; rules that derive it by other means stay with the
/// TC scheme and are evaluated generically, their conclusions entering the
/// graph as explicit edges. A predicate gets a union scheme iff every rule
/// deriving it is an eligible copy rule, it is not transitive, and it does
/// not sit on a copy-rule cycle. Everything else shares one plain table.
pub fn assign_schemes(
    program: &Program,
    interner: &Interner,
    flags: SchemeFlags,
    tc_config: TcConfig,
) -> Registry {
    let mut tc_preds: Vec<PredId> = Vec::new();
    if flags.enable_tc {
        for rule in &program.rules {
            if let Some(p) = transitive_predicate(rule) {
                if !tc_preds.contains(&p) {
                    tc_preds.push(p);
                }
            }
        }
    }

    // union candidates: all deriving rules are copy rules
    let mut union_preds: Vec<PredId> = Vec::new();
    if flags.enable_union {
        let mut copy_heads: FxHashMap<PredId, Vec<PredId>> = FxHashMap::default();
        let mut bad: FxHashSet<PredId> = FxHashSet::default();
        for rule in &program.rules {
            match copy_rule(rule) {
                Some((u, p)) => copy_heads.entry(u).or_default().push(p),
                None => {
                    bad.insert(rule.head.pred);
                }
            }
        }
        let mut candidates: Vec<PredId> = copy_heads
            .keys()
            .filter(|u| !bad.contains(u) && !tc_preds.contains(u))
            .copied()
            .collect();
        candidates.sort_unstable();

        // demote candidates on a copy-rule cycle; their whole component
        // falls back to the plain table
        let pos: FxHashMap<PredId, usize> =
            candidates.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let mut adj = vec![Vec::new(); candidates.len()];
        for (&u, bodies) in &copy_heads {
            if let Some(&ui) = pos.get(&u) {
                for b in bodies {
                    if let Some(&bi) = pos.get(b) {
                        adj[ui].push(bi);
                    }
                }
            }
        }
        let comp = scc_ids(candidates.len(), &adj);
        let mut comp_size = vec![0usize; candidates.len()];
        for &c in &comp {
            if c != usize::MAX {
                comp_size[c] += 1;
            }
        }
        for (i, &u) in candidates.iter().enumerate() {
            if comp_size[comp[i]] == 1 {
                union_preds.push(u);
            } else {
                log::debug!(
                    "predicate {} is on a copy-rule cycle; falling back to the plain table",
                    interner.pred_name(u)
                );
            }
        }
    }

    // rule partition
    let mut plain_rules: Vec<Rule> = Vec::new();
    let mut tc_extra: FxHashMap<PredId, Vec<Rule>> = FxHashMap::default();
    let mut tc_trans_count: FxHashMap<PredId, usize> = FxHashMap::default();
    let mut union_supports: FxHashMap<PredId, Vec<PredId>> = FxHashMap::default();
    for rule in &program.rules {
        let head = rule.head.pred;
        if tc_preds.contains(&head) {
            if transitive_predicate(rule) == Some(head) {
                *tc_trans_count.entry(head).or_default() += 1;
            } else {
                tc_extra.entry(head).or_default().push(rule.clone());
            }
        } else if union_preds.contains(&head) {
            let (_, body) = copy_rule(rule).expect("union predicate derived by non-copy rule");
            let supports = union_supports.entry(head).or_default();
            if !supports.contains(&body) {
                supports.push(body);
            }
        } else {
            plain_rules.push(rule.clone());
        }
    }

    // scheme order fixes derive order: plain first, then TC, then union
    let mut cells = Vec::new();
    let mut kinds = Vec::new();
    let mut owner: FxHashMap<PredId, SchemeId> = FxHashMap::default();

    let plain_id = SchemeId(0);
    let plain_support: FxHashSet<PredId> =
        plain_rules.iter().flat_map(|r| r.body.iter().map(|a| a.pred)).collect();
    let plain_owned: FxHashSet<PredId> = interner
        .predicates()
        .filter(|p| !tc_preds.contains(p) && !union_preds.contains(p))
        .collect();
    for &p in &plain_owned {
        owner.insert(p, plain_id);
    }
    cells.push(RefCell::new(SchemeBox::Plain(PlainTable::new(
        plain_rules,
        plain_owned,
        plain_support.clone(),
    ))));
    kinds.push(SchemeKind::Plain);

    let mut tc_ids = Vec::new();
    for &p in &tc_preds {
        let id = SchemeId(cells.len() as u32);
        owner.insert(p, id);
        let extra = tc_extra.remove(&p).unwrap_or_default();
        let scheme = TcScheme::new(
            id,
            p,
            tc_trans_count.get(&p).copied().unwrap_or(0),
            extra,
            tc_config,
        );
        cells.push(RefCell::new(SchemeBox::Tc(scheme)));
        kinds.push(SchemeKind::Tc);
        tc_ids.push(id);
    }

    for &u in &union_preds {
        let id = SchemeId(cells.len() as u32);
        owner.insert(u, id);
        let supports = union_supports.remove(&u).unwrap_or_default();
        cells.push(RefCell::new(SchemeBox::Union(UnionTable::new(id, u, supports))));
        kinds.push(SchemeKind::Union);
    }

    // SP_T membership: which schemes want to see facts of each predicate.
    // The plain table lists itself (its own Δ seeds the next round's
    // pivots); compressed schemes never re-consume their own facts.
    let mut interested: FxHashMap<PredId, Vec<SchemeId>> = FxHashMap::default();
    for &p in &plain_support {
        interested.entry(p).or_default().push(plain_id);
    }
    for (idx, cell) in cells.iter().enumerate() {
        let id = SchemeId(idx as u32);
        match &*cell.borrow() {
            SchemeBox::Plain(_) => {}
            SchemeBox::Tc(s) => {
                for p in s.support_preds() {
                    if p != s.owned_pred() {
                        interested.entry(p).or_default().push(id);
                    }
                }
            }
            SchemeBox::Union(s) => {
                for &p in s.supports() {
                    interested.entry(p).or_default().push(id);
                }
            }
        }
    }

    let delta_consumed: Vec<bool> = (0..cells.len())
        .map(|idx| {
            let id = SchemeId(idx as u32);
            let owned: Vec<PredId> = match &*cells[idx].borrow() {
                SchemeBox::Plain(s) => s.owned_preds().collect(),
                SchemeBox::Tc(s) => vec![s.owned_pred()],
                SchemeBox::Union(s) => vec![s.owned_pred()],
            };
            let _ = id;
            owned
                .iter()
                .any(|p| interested.get(p).map_or(false, |v| !v.is_empty()))
        })
        .collect();

    let _ = tc_ids;
    Registry {
        cells,
        kinds,
        owner: RefCell::new(owner),
        interested,
        plain: plain_id,
        delta_consumed,
        flags,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::parse_program;

    fn analyse(src: &str, flags: SchemeFlags) -> (Registry, Interner) {
        let mut it = Interner::new();
        let p = parse_program(src, &mut it).unwrap();
        let reg = assign_schemes(&p, &it, flags, TcConfig::default());
        (reg, it)
    }

    #[test]
    fn transitive_rule_detection() {
        let mut it = Interner::new();
        let p = parse_program("R(?x,?z) :- R(?x,?y), R(?y,?z).", &mut it).unwrap();
        assert!(transitive_predicate(&p.rules[0]).is_some());

        // reversed body order still counts
        let p2 = parse_program("R(?a,?c) :- R(?b,?c), R(?a,?b).", &mut it).unwrap();
        assert!(transitive_predicate(&p2.rules[0]).is_some());

        // symmetric rule is not transitivity
        let p3 = parse_program("R(?x,?y) :- R(?y,?x), R(?x,?x).", &mut it).unwrap();
        assert!(transitive_predicate(&p3.rules[0]).is_none());
    }

    #[test]
    fn copy_rule_detection() {
        let mut it = Interner::new();
        let p = parse_program("U(?x,?y) :- A(?x,?y).", &mut it).unwrap();
        assert!(copy_rule(&p.rules[0]).is_some());
        let p2 = parse_program("U(?x,?y) :- A(?y,?x).", &mut it).unwrap();
        assert!(copy_rule(&p2.rules[0]).is_none(), "permutation is not a copy rule");
        let p3 = parse_program("U(?x,?x) :- A(?x,?x).", &mut it).unwrap();
        assert!(copy_rule(&p3.rules[0]).is_none(), "repeated variables are excluded");
    }

    #[test]
    fn assignment_transitive_and_union() {
        let (reg, it) = analyse(
            "R(?x,?z) :- R(?x,?y), R(?y,?z).\nU(?x,?y) :- A(?x,?y).\nU(?x,?y) :- B(?x,?y).\n",
            SchemeFlags::default(),
        );
        let r = it.lookup_predicate("R").unwrap();
        let u = it.lookup_predicate("U").unwrap();
        let a = it.lookup_predicate("A").unwrap();
        assert_eq!(reg.kind(reg.owner_of(r)), SchemeKind::Tc);
        assert_eq!(reg.kind(reg.owner_of(u)), SchemeKind::Union);
        assert_eq!(reg.kind(reg.owner_of(a)), SchemeKind::Plain);
    }

    #[test]
    fn copy_cycle_falls_back_to_plain() {
        let (reg, it) = analyse(
            "U(?x,?y) :- A(?x,?y).\nA(?x,?y) :- U(?x,?y).\n",
            SchemeFlags::default(),
        );
        let u = it.lookup_predicate("U").unwrap();
        let a = it.lookup_predicate("A").unwrap();
        assert_eq!(reg.kind(reg.owner_of(u)), SchemeKind::Plain);
        assert_eq!(reg.kind(reg.owner_of(a)), SchemeKind::Plain);
    }

    #[test]
    fn flags_disable_schemes() {
        let (reg, it) = analyse(
            "R(?x,?z) :- R(?x,?y), R(?y,?z).\nU(?x,?y) :- A(?x,?y).\n",
            SchemeFlags { enable_tc: false, enable_union: false },
        );
        let r = it.lookup_predicate("R").unwrap();
        let u = it.lookup_predicate("U").unwrap();
        assert_eq!(reg.kind(reg.owner_of(r)), SchemeKind::Plain);
        assert_eq!(reg.kind(reg.owner_of(u)), SchemeKind::Plain);
        assert_eq!(reg.scheme_count(), 1);
    }

    #[test]
    fn predicate_derived_by_other_rules_stays_in_tc() {
        let (reg, it) = analyse(
            "R(?x,?z) :- R(?x,?y), R(?y,?z).\nR(?x,?y) :- S(?x,?y).\n",
            SchemeFlags::default(),
        );
        let r = it.lookup_predicate("R").unwrap();
        assert_eq!(reg.kind(reg.owner_of(r)), SchemeKind::Tc);
        // S feeds the TC scheme's generic rule, so its facts must be routed there
        let s = it.lookup_predicate("S").unwrap();
        assert!(reg.interested.get(&s).is_some());
    }
}
