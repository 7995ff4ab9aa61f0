//! The multi-scheme reasoning loop and the naive-materialisation oracle.
//!
//! One round: every scheme derives (seeding Δ from its pending facts and
//! its rules over the round's cache), then each scheme's Δ is scheduled
//! into all interested schemes and merged into its I. The loop stops when
//! no scheme produced anything. Δ snapshots are taken before any merge
//! runs, so no scheme observes another's half-merged state.

use std::time::Instant;

use rustc_hash::{FxHashMap, FxHashSet};
use thiserror::Error;

use crate::datalog::{
    apply_substitution, match_atom, Fact, Interner, PredId, Program, Rule, Substitution,
};
use crate::query::Query;
use crate::scheme::{
    assign_schemes, DomainFilter, Pattern, Registry, ScheduleOutcome, SchemeFlags, SchemeId,
};
use crate::tc::TcConfig;

#[derive(Error, Debug)]
pub enum EngineError {
    #[error("termination guard tripped after {rounds} rounds (bound {bound}); this indicates an internal invariant failure")]
    TerminationGuard { rounds: u64, bound: u64 },
    #[error("oracle guard exceeded: more than {guard} facts derived")]
    OracleOverflow { guard: u64 },
}

#[derive(Clone, Copy, Debug)]
pub struct EngineConfig {
    pub flags: SchemeFlags,
    pub tc: TcConfig,
    /// Hard cap on derived facts in the naive oracle.
    pub oracle_guard: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { flags: SchemeFlags::default(), tc: TcConfig::default(), oracle_guard: 1_000_000 }
    }
}

/// Outcome of one materialisation or incremental-addition call.
#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub rounds: u64,
    pub delta_per_round: Vec<u64>,
    pub schedule: ScheduleOutcome,
    pub wall: std::time::Duration,
    pub peak_bytes: usize,
}

pub struct Reasoner {
    pub interner: Interner,
    program: Program,
    registry: Registry,
    config: EngineConfig,
    round: u64,
    pub last_report: RunReport,
}

impl Reasoner {
    pub fn new(program: Program, interner: Interner, config: EngineConfig) -> Self {
        let registry = assign_schemes(&program, &interner, config.flags, config.tc);
        Reasoner { interner, program, registry, config, round: 0, last_report: RunReport::default() }
    }

    pub(crate) fn from_parts(
        program: Program,
        interner: Interner,
        config: EngineConfig,
        registry: Registry,
        round: u64,
    ) -> Self {
        Reasoner { interner, program, registry, config, round, last_report: RunReport::default() }
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn config(&self) -> EngineConfig {
        self.config
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// Materialises `facts` into the current state: the seminaive loop over
    /// all schemes. Works both for initial materialisation and incremental
    /// addition; already-represented facts are skipped at schedule time.
    pub fn insert(&mut self, facts: &[Fact]) -> Result<RunReport, EngineError> {
        let started = Instant::now();
        let mut report = RunReport {
            schedule: self.registry.schedule_batch(facts.iter(), None),
            ..RunReport::default()
        };
        let bound = self.round_bound();
        let scheme_ids: Vec<SchemeId> =
            (0..self.registry.scheme_count() as u32).map(SchemeId).collect();

        loop {
            let round = self.round + 1;
            let mut total = 0u64;
            let mut deltas: Vec<(SchemeId, Option<Vec<Fact>>, u64)> = Vec::new();
            for &sid in &scheme_ids {
                self.registry.derive_prep(sid, round);
                let conclusions = self.registry.derive_match(sid, round);
                let out = self.registry.derive_commit(sid, conclusions, round);
                total += out.count;
                deltas.push((sid, out.facts, out.count));
            }
            if total == 0 {
                break;
            }
            self.round = round;
            report.rounds += 1;
            report.delta_per_round.push(total);
            if log::log_enabled!(log::Level::Debug) {
                let per_scheme: Vec<String> =
                    deltas.iter().map(|(s, _, c)| format!("{}:{}", s.0, c)).collect();
                log::debug!(
                    "round={} delta_total={} per_scheme={}",
                    round,
                    total,
                    per_scheme.join(",")
                );
            }
            for (sid, batch, _) in deltas {
                if let Some(batch) = batch {
                    let out = self.registry.schedule_batch(batch.iter(), Some(sid));
                    report.schedule.pending += out.pending;
                    report.schedule.cached += out.cached;
                    report.schedule.duplicates += out.duplicates;
                }
                self.registry.merge(sid);
            }
            report.peak_bytes = report.peak_bytes.max(self.registry.total_bytes());
            if self.round > bound {
                return Err(EngineError::TerminationGuard { rounds: self.round, bound });
            }
        }
        report.peak_bytes = report.peak_bytes.max(self.registry.total_bytes());
        report.wall = started.elapsed();
        self.last_report = report.clone();
        Ok(report)
    }

    /// Upper bound on rounds: |constants|^max-arity · |predicates| plus
    /// slack. Valid runs never get near it.
    fn round_bound(&self) -> u64 {
        let consts = self.interner.const_count() as u128;
        let preds = self.interner.pred_count().max(1) as u128;
        let max_arity = self
            .interner
            .predicates()
            .filter_map(|p| self.interner.arity(p))
            .max()
            .unwrap_or(2) as u32;
        let bound = consts
            .saturating_pow(max_arity)
            .saturating_mul(preds)
            .min(u64::MAX as u128) as u64;
        bound.saturating_add(16)
    }

    pub fn contains(&self, fact: &Fact, filter: DomainFilter) -> bool {
        self.registry.contains(fact, filter)
    }

    pub fn scan(&self, pattern: &Pattern, filter: DomainFilter, cb: &mut dyn FnMut(&Fact)) {
        self.registry.scan(pattern, filter, cb)
    }

    pub fn count(&self, pred: PredId, filter: DomainFilter) -> u64 {
        self.registry.count(pred, filter)
    }

    /// Every represented fact of every known predicate, enumerated. Meant
    /// for tests and desk-scale dumps.
    pub fn all_facts(&self) -> FxHashSet<Fact> {
        let mut out = FxHashSet::default();
        for pred in self.interner.predicates() {
            let arity = self.interner.arity(pred).unwrap_or(0);
            if arity == 0 {
                continue;
            }
            let pattern = Pattern::new(pred, std::iter::repeat(None).take(arity));
            self.registry.scan(&pattern, DomainFilter::All, &mut |f| {
                out.insert(f.clone());
            });
        }
        out
    }

    pub fn evaluate(&self, query: &Query, filter: DomainFilter, cb: &mut dyn FnMut(&[crate::datalog::SymId])) -> u64 {
        crate::query::evaluate(&self.registry, query, filter, cb)
    }
}

/// Reference fixpoint by repeated full rule application; the oracle the
/// multi-scheme path is tested against. Independent of the scheme
/// machinery: plain hash sets and naive matching only.
pub fn naive_materialise(
    program: &Program,
    facts: &[Fact],
    guard: u64,
) -> Result<FxHashSet<Fact>, EngineError> {
    let mut db: FxHashMap<PredId, FxHashSet<Fact>> = FxHashMap::default();
    let mut total = 0u64;
    for f in facts {
        if db.entry(f.pred).or_default().insert(f.clone()) {
            total += 1;
        }
    }
    // the guard also caps join work, so hopeless inputs fail fast instead
    // of scanning quadratically first
    let mut budget: u64 = guard.saturating_mul(64).max(1 << 22);
    loop {
        let mut fresh: Vec<Fact> = Vec::new();
        for rule in &program.rules {
            let mut sigma = Substitution::new();
            naive_match(rule, 0, &db, &mut sigma, &mut budget, &mut |s| {
                let fact = apply_substitution(&rule.head, s).to_fact();
                if !db.get(&fact.pred).map_or(false, |set| set.contains(&fact)) {
                    fresh.push(fact);
                }
            })
            .map_err(|_| EngineError::OracleOverflow { guard })?;
        }
        let mut grew = false;
        for f in fresh {
            if db.entry(f.pred).or_default().insert(f) {
                grew = true;
                total += 1;
                if total > guard {
                    return Err(EngineError::OracleOverflow { guard });
                }
            }
        }
        if !grew {
            break;
        }
    }
    Ok(db.into_values().flatten().collect())
}

fn naive_match(
    rule: &Rule,
    pos: usize,
    db: &FxHashMap<PredId, FxHashSet<Fact>>,
    sigma: &mut Substitution,
    budget: &mut u64,
    emit: &mut dyn FnMut(&Substitution),
) -> Result<(), EngineError> {
    if pos == rule.body.len() {
        emit(sigma);
        return Ok(());
    }
    let atom = &rule.body[pos];
    let Some(set) = db.get(&atom.pred) else { return Ok(()) };
    let mark = sigma.len();
    for fact in set {
        if *budget == 0 {
            return Err(EngineError::OracleOverflow { guard: 0 });
        }
        *budget -= 1;
        if match_atom(atom, fact, sigma) {
            naive_match(rule, pos + 1, db, sigma, budget, emit)?;
            sigma.truncate(mark);
        }
    }
    Ok(())
}
