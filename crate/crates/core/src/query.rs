//! Query parsing and evaluation over materialised schemes.

use rustc_hash::FxHashSet;
use thiserror::Error;

use crate::datalog::{
    apply_substitution, match_atom, Atom, Fact, Interner, ParseError, Substitution, SymId, Term,
    VarId,
};
use crate::scheme::{DomainFilter, Pattern, Registry};

/// A conjunctive query of one to four atoms; answers are projections onto
/// the query variables in order of first occurrence.
#[derive(Clone, Debug)]
pub struct Query {
    pub atoms: Vec<Atom>,
    pub projection: Vec<VarId>,
}

#[derive(Error, Debug)]
pub enum QueryError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("queries must have between 1 and 4 atoms, found {0}")]
    AtomCount(usize),
    #[error("query atoms must be connected through shared variables")]
    Disconnected,
}

/// Parses `A1(...), A2(...).` into a [`Query`].
pub fn parse_query(text: &str, interner: &mut Interner) -> Result<Query, QueryError> {
    // reuse the rule grammar: a query is a rule body
    let src = format!("Q0query(dummy) :- {}", text.trim());
    let program = crate::datalog::parse_program(&src, interner)?;
    let atoms = program.rules.into_iter().next().map(|r| r.body).unwrap_or_default();
    if atoms.is_empty() || atoms.len() > 4 {
        return Err(QueryError::AtomCount(atoms.len()));
    }
    // connectivity over shared variables; ground atoms are point filters
    let with_vars: Vec<usize> = atoms
        .iter()
        .enumerate()
        .filter(|(_, a)| a.variables().next().is_some())
        .map(|(i, _)| i)
        .collect();
    if with_vars.len() > 1 {
        let mut reached: FxHashSet<usize> = FxHashSet::default();
        let mut vars: FxHashSet<VarId> = atoms[with_vars[0]].variables().collect();
        reached.insert(with_vars[0]);
        loop {
            let before = reached.len();
            for &i in &with_vars {
                if !reached.contains(&i) && atoms[i].variables().any(|v| vars.contains(&v)) {
                    reached.insert(i);
                    vars.extend(atoms[i].variables());
                }
            }
            if reached.len() == before {
                break;
            }
        }
        if reached.len() != with_vars.len() {
            return Err(QueryError::Disconnected);
        }
    }
    let mut projection = Vec::new();
    for atom in &atoms {
        for v in atom.variables() {
            if !projection.contains(&v) {
                projection.push(v);
            }
        }
    }
    Ok(Query { atoms, projection })
}

/// Left-to-right index nested-loop join over scheme scans. Calls `cb` once
/// per answer (the projected constant tuple) and returns the cardinality.
/// Answers are distinct tuples.
pub fn evaluate(
    registry: &Registry,
    query: &Query,
    filter: DomainFilter,
    cb: &mut dyn FnMut(&[SymId]),
) -> u64 {
    let all_vars: usize = query
        .atoms
        .iter()
        .flat_map(|a| a.variables())
        .collect::<FxHashSet<_>>()
        .len();
    let needs_dedup = query.projection.len() < all_vars;
    let mut seen: FxHashSet<Vec<SymId>> = FxHashSet::default();
    let mut count = 0u64;

    if query.atoms.len() == 1 {
        // stream straight off the scheme scan: single-atom answers can run
        // into the tens of millions and must not be buffered
        let atom = &query.atoms[0];
        let pattern = Pattern::new(
            atom.pred,
            atom.terms.iter().map(|t| match t {
                Term::Const(c) => Some(*c),
                Term::Var(_) => None,
            }),
        );
        let mut sigma = Substitution::new();
        let mut tuple: Vec<SymId> = Vec::with_capacity(query.projection.len());
        registry.scan(&pattern, filter, &mut |f| {
            if match_atom(atom, f, &mut sigma) {
                tuple.clear();
                tuple.extend(
                    query.projection.iter().map(|v| sigma.get(*v).expect("projection var unbound")),
                );
                if !needs_dedup || seen.insert(tuple.clone()) {
                    count += 1;
                    cb(&tuple);
                }
            }
            sigma.truncate(0);
        });
        return count;
    }

    let mut sigma = Substitution::new();
    let mut done = 0u32;
    join(registry, query, filter, &mut done, &mut sigma, &mut |s| {
        let tuple: Vec<SymId> =
            query.projection.iter().map(|v| s.get(*v).expect("projection var unbound")).collect();
        if needs_dedup && !seen.insert(tuple.clone()) {
            return;
        }
        count += 1;
        cb(&tuple);
    });
    count
}

fn join(
    registry: &Registry,
    query: &Query,
    filter: DomainFilter,
    done: &mut u32,
    sigma: &mut Substitution,
    emit: &mut dyn FnMut(&Substitution),
) {
    // next atom: most bound arguments first; fully ground atoms become
    // containment probes
    let mut next = usize::MAX;
    let mut best = -1i32;
    for (i, atom) in query.atoms.iter().enumerate() {
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
    let atom = &query.atoms[next];
    let grounded = apply_substitution(atom, sigma);
    if grounded.is_ground() {
        // point query: O(log segments) on compressed schemes
        if registry.contains(&grounded.to_fact(), filter) {
            join(registry, query, filter, done, sigma, emit);
        }
    } else {
        let pattern = Pattern::new(
            atom.pred,
            grounded.terms.iter().map(|t| match t {
                Term::Const(c) => Some(*c),
                Term::Var(_) => None,
            }),
        );
        let mark = sigma.len();
        // the recursion needs &mut sigma while the scan borrows it read-only
        // through match_atom; collect per-level hits first
        let mut hits: Vec<Fact> = Vec::new();
        registry.scan(&pattern, filter, &mut |f| hits.push(f.clone()));
        for fact in &hits {
            if match_atom(atom, fact, sigma) {
                join(registry, query, filter, done, sigma, emit);
                sigma.truncate(mark);
            }
        }
    }
    *done &= !(1 << next);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::{parse_facts, parse_program};
    use crate::engine::{EngineConfig, Reasoner};

    fn chain_reasoner(n: usize) -> Reasoner {
        let mut it = Interner::new();
        let program = parse_program("R(?x,?z) :- R(?x,?y), R(?y,?z).", &mut it).unwrap();
        let mut text = String::new();
        for i in 1..n {
            text.push_str(&format!("R(a{},a{}).\n", i + 1, i));
        }
        let facts = parse_facts(&text, &mut it).unwrap();
        let mut r = Reasoner::new(program, it, EngineConfig::default());
        r.insert(&facts).unwrap();
        r
    }

    #[test]
    fn chain_cardinalities() {
        let mut r = chain_reasoner(1000);
        let q = parse_query("R(?x,?y).", &mut r.interner).unwrap();
        let card = r.evaluate(&q, DomainFilter::All, &mut |_| {});
        assert_eq!(card, 499_500);

        let q2 = parse_query("R(a1000,?y).", &mut r.interner).unwrap();
        let card2 = r.evaluate(&q2, DomainFilter::All, &mut |_| {});
        assert_eq!(card2, 999);

        let q3 = parse_query("R(a1,?y).", &mut r.interner).unwrap();
        assert_eq!(r.evaluate(&q3, DomainFilter::All, &mut |_| {}), 0);
    }

    #[test]
    fn ground_query_is_boolean() {
        let mut r = chain_reasoner(10);
        let q = parse_query("R(a7,a2).", &mut r.interner).unwrap();
        assert_eq!(r.evaluate(&q, DomainFilter::All, &mut |_| {}), 1);
        let q2 = parse_query("R(a2,a7).", &mut r.interner).unwrap();
        assert_eq!(r.evaluate(&q2, DomainFilter::All, &mut |_| {}), 0);
    }

    #[test]
    fn two_atom_join() {
        let mut r = chain_reasoner(6);
        // pairs (x, z) connected through some y: same as closure pairs with
        // a path of length ≥ 2
        let q = parse_query("R(?x,?y), R(?y,?z).", &mut r.interner).unwrap();
        let mut seen = 0u64;
        let card = r.evaluate(&q, DomainFilter::All, &mut |_| seen += 1);
        assert_eq!(card, seen);
        // triples x > y > z over 6 elements
        assert_eq!(card, 20);
    }

    #[test]
    fn projection_dedup() {
        let mut r = chain_reasoner(6);
        // project only x: answers collapse to distinct x
        let mut it_q = parse_query("R(?x,?y).", &mut r.interner).unwrap();
        it_q.projection.truncate(1);
        let card = r.evaluate(&it_q, DomainFilter::All, &mut |_| {});
        assert_eq!(card, 5, "a2..a6 each reach something");
    }

    #[test]
    fn disconnected_query_rejected() {
        let mut r = chain_reasoner(4);
        match parse_query("R(?x,?y), R(?z,?w).", &mut r.interner) {
            Err(QueryError::Disconnected) => {}
            other => panic!("expected Disconnected, got {other:?}"),
        }
    }

    #[test]
    fn atom_count_validated() {
        let mut r = chain_reasoner(4);
        match parse_query(
            "R(?a,?b), R(?b,?c), R(?c,?d), R(?d,?e), R(?e,?f).",
            &mut r.interner,
        ) {
            Err(QueryError::AtomCount(5)) => {}
            other => panic!("expected AtomCount, got {other:?}"),
        }
    }
}
