//! Acceptance suite: end-to-end checks of the engine's headline behaviours,
//! one section per criterion, each printing a PASS/FAIL line. The sections
//! run sequentially inside one test so that timing assertions are not
//! disturbed by parallel test threads.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rustc_hash::{FxHashMap, FxHashSet};

use msdl_core::datalog::{parse_program, Fact, Interner, SymId};
use msdl_core::engine::{naive_materialise, EngineConfig, EngineError, Reasoner};
use msdl_core::generate::{edges_to_facts, gen_chain, gen_dag, gen_layered};
use msdl_core::query::parse_query;
use msdl_core::scheme::{DomainFilter, SchemeBox, SchemeFlags, SchemeId, SchemeKind};
use msdl_core::tc::{TcConfig, TcScheme};

const TRANSITIVE: &str = "R(?x,?z) :- R(?x,?y), R(?y,?z).\n";

fn reasoner(rules: &str, flags: SchemeFlags) -> (Reasoner, Interner) {
    let mut it = Interner::new();
    let program = parse_program(rules, &mut it).unwrap();
    let interner = it.clone();
    let config = EngineConfig { flags, ..EngineConfig::default() };
    (Reasoner::new(program, it, config), interner)
}

fn multischeme() -> SchemeFlags {
    SchemeFlags { enable_tc: true, enable_union: true }
}

fn standard() -> SchemeFlags {
    SchemeFlags { enable_tc: false, enable_union: false }
}

fn tc_scheme_id(r: &Reasoner) -> SchemeId {
    r.registry()
        .scheme_ids()
        .find(|&s| r.registry().kind(s) == SchemeKind::Tc)
        .expect("no TC scheme")
}

/// Brute-force transitive closure: pairs joined by a path of >= 1 edge.
fn closure(edges: &[(SymId, SymId)]) -> FxHashSet<(SymId, SymId)> {
    let mut nodes: Vec<SymId> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let pos: FxHashMap<SymId, usize> = nodes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut adj = vec![Vec::new(); nodes.len()];
    for &(a, b) in edges {
        adj[pos[&a]].push(pos[&b]);
    }
    let mut out = FxHashSet::default();
    for s in 0..nodes.len() {
        let mut seen = vec![false; nodes.len()];
        let mut queue: Vec<usize> = adj[s].clone();
        while let Some(v) = queue.pop() {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            out.insert((nodes[s], nodes[v]));
            queue.extend(adj[v].iter().copied());
        }
    }
    out
}

/// Independent SCC partition of the constants, for the member-map check.
fn scc_partition(edges: &[(SymId, SymId)]) -> FxHashSet<Vec<SymId>> {
    let mut nodes: Vec<SymId> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let reach = closure(edges);
    let mut out: FxHashSet<Vec<SymId>> = FxHashSet::default();
    for &n in &nodes {
        let mut class: Vec<SymId> = nodes
            .iter()
            .copied()
            .filter(|&m| m == n || (reach.contains(&(n, m)) && reach.contains(&(m, n))))
            .collect();
        class.sort_unstable();
        out.insert(class);
    }
    out
}

// -------------------------------------------------------------------
// criterion 1: chain compression
// -------------------------------------------------------------------
fn criterion_1() {
    // multischeme side: n = 10,000 chain
    let (mut r, _) = reasoner(TRANSITIVE, multischeme());
    let edges = gen_chain(10_000);
    let facts = edges_to_facts(&mut r.interner, "R", "a", &edges);
    let started = Instant::now();
    r.insert(&facts).unwrap();
    let build = started.elapsed();
    assert!(build.as_secs_f64() < 1.0, "multischeme build took {build:?}, bound is 1s");

    let q = parse_query("R(?x,?y).", &mut r.interner).unwrap();
    let card = r.evaluate(&q, DomainFilter::All, &mut |_| {});
    assert_eq!(card, 49_995_000, "chain closure cardinality by iteration");

    let sid = tc_scheme_id(&r);
    let (nodes, segments, tc_bytes) = match &*r.registry().scheme_ref(sid) {
        SchemeBox::Tc(s) => {
            let (a, b, c) = s.segment_counts();
            (s.live_node_count(), a + b + c, s.approx_bytes())
        }
        _ => unreachable!(),
    };
    assert_eq!(nodes, 10_000);
    assert!(segments <= 10_000, "total interval segments {segments} > 10000");

    // plain-table baseline at n = 2,000: the closure is O(n²) facts. The
    // baseline loads the closure directly; deriving it at this size is a
    // 1.3e9-instance seminaive run the storage figure does not depend on.
    // A real standard derivation is cross-checked at n = 400 below.
    let (mut plain_r, _) = reasoner("", standard());
    let pred = plain_r.interner.predicate("R");
    plain_r.interner.set_arity(pred, 2).unwrap();
    let consts: Vec<SymId> =
        (1..=2000).map(|i| plain_r.interner.constant(&format!("a{i}"))).collect();
    let mut closure_facts = Vec::with_capacity(1_999_000);
    for i in 0..2000usize {
        for j in 0..i {
            closure_facts.push(Fact::binary(pred, consts[i], consts[j]));
        }
    }
    plain_r.insert(&closure_facts).unwrap();
    let plain_bytes = plain_r.registry().scheme_bytes(plain_r.registry().plain_id());
    let ratio = plain_bytes as f64 / tc_bytes as f64;
    assert!(
        ratio >= 10.0,
        "memory ratio {ratio:.1} (plain {plain_bytes} / tc {tc_bytes}) below the 10x tolerance"
    );

    // standard derivation exercised for real at a feasible size
    let (mut std_r, _) = reasoner(TRANSITIVE, standard());
    let small = edges_to_facts(&mut std_r.interner, "R", "a", &gen_chain(400));
    std_r.insert(&small).unwrap();
    let rp = std_r.interner.lookup_predicate("R").unwrap();
    assert_eq!(std_r.count(rp, DomainFilter::All), 400 * 399 / 2);

    println!(
        "PASS criterion-1 chain-compression: card=49995000 nodes=10000 segments={segments} \
         build={:.3}s ratio={ratio:.0}x (plain@2000 {:.1}MB / tc@10000 {:.2}MB)",
        build.as_secs_f64(),
        plain_bytes as f64 / 1048576.0,
        tc_bytes as f64 / 1048576.0
    );
}

// -------------------------------------------------------------------
// criterion 2: equivalence with the naive oracle on random programs
// -------------------------------------------------------------------
fn criterion_2() {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    let started = Instant::now();
    let all_flags = [
        SchemeFlags { enable_tc: true, enable_union: true },
        SchemeFlags { enable_tc: true, enable_union: false },
        SchemeFlags { enable_tc: false, enable_union: true },
        SchemeFlags { enable_tc: false, enable_union: false },
    ];
    let heads = ["S", "T", "P", "A", "B"];
    let all_preds = ["R", "A", "B", "S", "T", "P", "U1", "U2"];
    let copy_heads = ["U1", "U2"];
    let copy_bodies = ["A", "B", "R", "S", "U1", "U2"];
    let vars = ["?x", "?y", "?z", "?w"];

    for trial in 0..500u64 {
        let mut rng = StdRng::seed_from_u64(0xACCE_0002 + trial);
        let mut rules = String::from(TRANSITIVE);
        for _ in 0..rng.gen_range(1..=5usize) {
            // two random body atoms; head variables drawn from the body
            let b: Vec<(usize, usize, usize)> = (0..2)
                .map(|_| {
                    (
                        rng.gen_range(0..all_preds.len()),
                        rng.gen_range(0..vars.len()),
                        rng.gen_range(0..vars.len()),
                    )
                })
                .collect();
            let bvars = [b[0].1, b[0].2, b[1].1, b[1].2];
            let h = (
                heads[rng.gen_range(0..heads.len())],
                vars[bvars[rng.gen_range(0..4)]],
                vars[bvars[rng.gen_range(0..4)]],
            );
            rules.push_str(&format!(
                "{}({},{}) :- {}({},{}), {}({},{}).\n",
                h.0,
                h.1,
                h.2,
                all_preds[b[0].0],
                vars[b[0].1],
                vars[b[0].2],
                all_preds[b[1].0],
                vars[b[1].1],
                vars[b[1].2],
            ));
        }
        for _ in 0..rng.gen_range(0..=2usize) {
            let u = copy_heads[rng.gen_range(0..copy_heads.len())];
            let mut p = copy_bodies[rng.gen_range(0..copy_bodies.len())];
            if p == u {
                p = "A";
            }
            rules.push_str(&format!("{u}(?x,?y) :- {p}(?x,?y).\n"));
        }

        let mut base = Interner::new();
        let program = parse_program(&rules, &mut base).unwrap();
        let n_facts = rng.gen_range(1..=300usize);
        let mut facts = Vec::with_capacity(n_facts);
        for _ in 0..n_facts {
            let p = base.predicate(all_preds[rng.gen_range(0..all_preds.len())]);
            base.set_arity(p, 2).unwrap();
            let a = base.constant(&format!("c{}", rng.gen_range(0..10)));
            let b = base.constant(&format!("c{}", rng.gen_range(0..10)));
            facts.push(Fact::binary(p, a, b));
        }

        let expected = naive_materialise(&program, &facts, 1_000_000)
            .expect("oracle fits comfortably at this scale");
        for flags in all_flags {
            let config = EngineConfig { flags, ..EngineConfig::default() };
            let mut r = Reasoner::new(program.clone(), base.clone(), config);
            r.insert(&facts).unwrap();
            let got = r.all_facts();
            assert_eq!(
                got, expected,
                "trial {trial} flags {flags:?}: multischeme diverged from the oracle\nrules:\n{rules}"
            );
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "criterion 2 took {elapsed:?}, bound is 2min");
    println!(
        "PASS criterion-2 oracle-equivalence: 500 random programs x 4 scheme-flag combinations \
         in {:.1}s",
        elapsed.as_secs_f64()
    );
}

// -------------------------------------------------------------------
// criterion 3: staged insertion equals from-scratch materialisation
// -------------------------------------------------------------------
fn criterion_3() {
    let started = Instant::now();
    let edges = gen_dag(2000, 6000, 11).unwrap();
    let stage_ends = [4200usize, 4800, 5400, 6000];

    let (mut inc, _) = reasoner(TRANSITIVE, multischeme());
    let all_facts_inc = edges_to_facts(&mut inc.interner, "R", "n", &edges);

    let mut done = 0usize;
    for (stage, &end) in stage_ends.iter().enumerate() {
        inc.insert(&all_facts_inc[done..end]).unwrap();
        done = end;

        let (mut full, _) = reasoner(TRANSITIVE, multischeme());
        let prefix_facts = edges_to_facts(&mut full.interner, "R", "n", &edges[..end]);
        full.insert(&prefix_facts).unwrap();

        let got = inc.all_facts();
        let want = full.all_facts();
        assert_eq!(
            got.len(),
            want.len(),
            "stage {stage}: incremental count {} vs from-scratch {}",
            got.len(),
            want.len()
        );
        assert_eq!(got, want, "stage {stage}: fact sets differ");
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "criterion 3 took {elapsed:?}, bound is 30s");
    println!(
        "PASS criterion-3 incremental-staging: 4 stages over 2000 nodes / 6000 edges, \
         final facts={} in {:.1}s",
        done_count(&inc),
        elapsed.as_secs_f64()
    );
}

fn done_count(r: &Reasoner) -> u64 {
    let pred = r.interner.lookup_predicate("R").unwrap();
    r.count(pred, DomainFilter::All)
}

// -------------------------------------------------------------------
// criterion 4: SCC merging under one-at-a-time insertion
// -------------------------------------------------------------------
fn criterion_4() {
    use rand::rngs::StdRng;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};

    let started = Instant::now();
    for trial in 0..200u64 {
        let mut rng = StdRng::seed_from_u64(0xACCE_0004 + trial);
        let nodes = rng.gen_range(8..=60u64);
        let layers = rng.gen_range(3..=6u64);
        let edges_n = (nodes * 2).min(nodes * (nodes - 1) / 3).max(4);
        let mut edges = gen_layered(nodes, layers, edges_n, 0.2, trial).unwrap();
        edges.shuffle(&mut rng);

        let mut it = Interner::new();
        let pred = it.predicate("R");
        it.set_arity(pred, 2).unwrap();
        let mut scheme = TcScheme::new(SchemeId(1), pred, 1, Vec::new(), TcConfig::default());

        let mut seen: Vec<(SymId, SymId)> = Vec::new();
        for &(a, b) in &edges {
            let fa = it.constant(&format!("n{a}"));
            let fb = it.constant(&format!("n{b}"));
            scheme.schedule(&Fact::binary(pred, fa, fb), None, true);
            scheme.derive_prep(0);
            scheme.derive_commit(Vec::new(), false);
            seen.push((fa, fb));

            let oracle = closure(&seen);
            let mut observed = FxHashSet::default();
            scheme.for_each_fact(DomainFilter::All, &mut |f| {
                observed.insert((f.args[0], f.args[1]));
            });
            assert_eq!(observed, oracle, "trial {trial}: I ∪ Δ diverged after an insertion");

            scheme.merge();
            assert_eq!(scheme.dropped_node_count(), 0, "dropped nodes must be deleted at merge");
        }

        // member maps are exactly the SCC classes of everything inserted
        let expected_partition = scc_partition(&seen);
        let mut got_partition: FxHashSet<Vec<SymId>> = FxHashSet::default();
        for &(a, b) in &seen {
            for c in [a, b] {
                let mut m = scheme.scc_members(c).expect("constant must be mapped");
                m.sort_unstable();
                got_partition.insert(m);
            }
        }
        assert_eq!(got_partition, expected_partition, "trial {trial}: member maps are not the SCC classes");
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "criterion 4 took {elapsed:?}, bound is 1min");
    println!(
        "PASS criterion-4 scc-merging: 200 layered-graph trials, edge-at-a-time, in {:.1}s",
        elapsed.as_secs_f64()
    );
}

// -------------------------------------------------------------------
// criterion 5: fresh nodes surface in Δ, never in I, until merged
// -------------------------------------------------------------------
fn criterion_5() {
    let mut it = Interner::new();
    let pred = it.predicate("R");
    it.set_arity(pred, 2).unwrap();
    let mut scheme = TcScheme::new(SchemeId(1), pred, 1, Vec::new(), TcConfig::default());

    // interior node d under root f, with siblings; mirrors the fresh-leaf
    // insertion scenario
    let mut c = |name: &str| it.constant(name);
    let (f, d, e, a, b, g, k) =
        (c("f"), c("d"), c("e"), c("a"), c("b"), c("g"), c("k"));
    for (x, y) in [(f, d), (f, e), (d, a), (d, b), (e, g)] {
        scheme.schedule(&Fact::binary(pred, x, y), None, true);
    }
    scheme.derive_prep(0);
    scheme.derive_commit(Vec::new(), false);
    scheme.merge();

    scheme.schedule(&Fact::binary(pred, d, k), None, true);
    scheme.derive_prep(0);
    scheme.derive_commit(Vec::new(), false);

    let dk = Fact::binary(pred, d, k);
    let fk = Fact::binary(pred, f, k);
    assert!(!scheme.contains(&dk, DomainFilter::OldI), "fresh fact leaked into I before merge");
    assert!(scheme.contains(&dk, DomainFilter::Delta));
    assert!(!scheme.contains(&fk, DomainFilter::OldI), "derived fresh fact leaked into I");
    assert!(scheme.contains(&fk, DomainFilter::Delta));

    scheme.merge();
    assert!(scheme.contains(&dk, DomainFilter::OldI));
    assert!(scheme.contains(&fk, DomainFilter::OldI));
    println!("PASS criterion-5 fresh-node-domains: Δ before merge, I after merge");
}

// -------------------------------------------------------------------
// criterion 6: union virtuality
// -------------------------------------------------------------------
fn criterion_6() {
    let started = Instant::now();
    let (mut r, _) = reasoner("U(?x,?y) :- A(?x,?y).\nU(?x,?y) :- B(?x,?y).\n", multischeme());
    let a_pred = r.interner.predicate("A");
    let b_pred = r.interner.predicate("B");
    let u_pred = r.interner.predicate("U");
    for p in [a_pred, b_pred, u_pred] {
        r.interner.set_arity(p, 2).unwrap();
    }
    let n = 100_000u64;
    let overlap = n / 2;
    let mut facts = Vec::with_capacity(2 * n as usize + 100);
    // tuple space 0 .. n + overlap; A covers [0, n), B covers [overlap, n + overlap)
    let tuple_syms: Vec<(SymId, SymId)> = (0..n + overlap)
        .map(|i| {
            (r.interner.constant(&format!("p{i}")), r.interner.constant(&format!("q{i}")))
        })
        .collect();
    for i in 0..n {
        let (x, y) = tuple_syms[i as usize];
        facts.push(Fact::binary(a_pred, x, y));
    }
    for i in overlap..n + overlap {
        let (x, y) = tuple_syms[i as usize];
        facts.push(Fact::binary(b_pred, x, y));
    }
    for j in 0..100 {
        let x = r.interner.constant(&format!("ux{j}"));
        let y = r.interner.constant(&format!("uy{j}"));
        facts.push(Fact::binary(u_pred, x, y));
    }
    r.insert(&facts).unwrap();

    let q = parse_query("U(?x,?y).", &mut r.interner).unwrap();
    let card = r.evaluate(&q, DomainFilter::All, &mut |_| {});
    assert_eq!(card, n + overlap + 100, "scan cardinality must be |A ∪ B| + explicit");

    let union_sid = r
        .registry()
        .scheme_ids()
        .find(|&s| r.registry().kind(s) == SchemeKind::Union)
        .expect("no union scheme");
    let explicit = match &*r.registry().scheme_ref(union_sid) {
        SchemeBox::Union(t) => t.explicit_fact_count(),
        _ => unreachable!(),
    };
    assert!(explicit <= 100, "union scheme stored {explicit} facts, expected <= 100");

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "criterion 6 took {elapsed:?}, bound is 5s");
    println!(
        "PASS criterion-6 union-virtuality: cardinality={card} explicit-stored={explicit} \
         in {:.2}s",
        elapsed.as_secs_f64()
    );
}

// -------------------------------------------------------------------
// criterion 7: point-query cost on the compressed chain
// -------------------------------------------------------------------
fn criterion_7() {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    let (mut r, _) = reasoner(TRANSITIVE, multischeme());
    let facts = {
        let edges = gen_chain(10_000);
        edges_to_facts(&mut r.interner, "R", "a", &edges)
    };
    r.insert(&facts).unwrap();
    let pred = r.interner.lookup_predicate("R").unwrap();
    let syms: Vec<SymId> =
        (1..=10_000).map(|i| r.interner.lookup_constant(&format!("a{i}")).unwrap()).collect();

    let sid = tc_scheme_id(&r);
    let max_segments = match &*r.registry().scheme_ref(sid) {
        SchemeBox::Tc(s) => s.max_node_segments(),
        _ => unreachable!(),
    };
    // probes touch In and (empty) D: the bound applies per interval set
    let per_set_bound = (max_segments.max(1) as f64).log2().ceil() as u64 + 1;
    let bound = per_set_bound * 2;

    let mut rng = StdRng::seed_from_u64(7);
    let probes: Vec<Fact> = (0..100_000)
        .map(|_| {
            let i = rng.gen_range(0..10_000usize);
            let j = rng.gen_range(0..10_000usize);
            Fact::binary(pred, syms[i], syms[j])
        })
        .collect();

    let started = Instant::now();
    let mut hits = 0u64;
    let mut worst = 0u64;
    for probe in &probes {
        let (before, hit, after) = match &*r.registry().scheme_ref(sid) {
            SchemeBox::Tc(s) => {
                let b = s.probe_cost();
                let h = s.contains(probe, DomainFilter::All);
                (b, h, s.probe_cost())
            }
            _ => unreachable!(),
        };
        let cost = after - before;
        worst = worst.max(cost);
        assert!(cost <= bound, "probe cost {cost} exceeds bound {bound}");
        hits += u64::from(hit);
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_millis() < 100, "1e5 probes took {elapsed:?}, bound is 100ms");
    println!(
        "PASS criterion-7 point-query-cost: 1e5 probes in {:.1}ms, worst {} comparisons \
         (bound {bound}, max segments/node {max_segments}, {hits} hits)",
        elapsed.as_secs_f64() * 1000.0,
        worst
    );
}

// -------------------------------------------------------------------
// criterion 8: DAG-scale trend check
// -------------------------------------------------------------------
fn criterion_8() {
    let started = Instant::now();
    let edges = gen_dag(10_000, 100_000, 21).unwrap();
    let (mut r, _) = reasoner(TRANSITIVE, multischeme());
    let facts = edges_to_facts(&mut r.interner, "R", "n", &edges);
    let report = r.insert(&facts).unwrap();
    let pred = r.interner.lookup_predicate("R").unwrap();
    let represented = r.count(pred, DomainFilter::All);

    let mut base = Interner::new();
    let program = parse_program(TRANSITIVE, &mut base).unwrap();
    let oracle_facts = edges_to_facts(&mut base, "R", "n", &edges);
    let verified = match naive_materialise(&program, &oracle_facts, 1_000_000) {
        Ok(set) => {
            assert_eq!(represented, set.len() as u64, "full-run count vs bounded oracle");
            format!("full oracle agreed at {represented}")
        }
        Err(EngineError::OracleOverflow { .. }) => {
            // closure too large for the bounded oracle: cross-check counts
            // exactly on a 1,000-edge subsample instead
            let sub = &edges[..1000];
            let (mut sub_r, _) = reasoner(TRANSITIVE, multischeme());
            let sub_facts = edges_to_facts(&mut sub_r.interner, "R", "n", sub);
            sub_r.insert(&sub_facts).unwrap();
            let sub_pred = sub_r.interner.lookup_predicate("R").unwrap();
            let sub_count = sub_r.count(sub_pred, DomainFilter::All);

            let mut it2 = Interner::new();
            let program2 = parse_program(TRANSITIVE, &mut it2).unwrap();
            let sub_oracle_facts = edges_to_facts(&mut it2, "R", "n", sub);
            let sub_expected =
                naive_materialise(&program2, &sub_oracle_facts, 4_000_000).unwrap();
            assert_eq!(
                sub_count,
                sub_expected.len() as u64,
                "subsample count disagrees with the oracle"
            );
            format!(
                "oracle guard tripped; 1000-edge subsample agreed at {sub_count}, \
                 full represented count {represented}"
            )
        }
        Err(other) => panic!("unexpected oracle error: {other}"),
    };
    let elapsed = started.elapsed();
    println!(
        "PASS criterion-8 dag-trend: 10k nodes / 100k edges materialised in {:.1}s \
         ({} rounds); {verified}; total {:.1}s",
        report.wall.as_secs_f64(),
        report.rounds,
        elapsed.as_secs_f64()
    );
}

#[test]
fn acceptance_criteria() {
    let criteria: Vec<(&str, fn())> = vec![
        ("criterion-1 chain-compression", criterion_1),
        ("criterion-2 oracle-equivalence", criterion_2),
        ("criterion-3 incremental-staging", criterion_3),
        ("criterion-4 scc-merging", criterion_4),
        ("criterion-5 fresh-node-domains", criterion_5),
        ("criterion-6 union-virtuality", criterion_6),
        ("criterion-7 point-query-cost", criterion_7),
        ("criterion-8 dag-trend", criterion_8),
    ];
    let mut failed = Vec::new();
    for (name, run) in criteria {
        if let Err(panic) = catch_unwind(AssertUnwindSafe(run)) {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            println!("FAIL {name}: {msg}");
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed acceptance criteria: {failed:?}");
}
