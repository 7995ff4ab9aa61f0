//! Benchmark fact generators: chains, random DAGs, and layered graphs with
//! back-edges. Deterministic under a seed.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashSet;
use thiserror::Error;

use crate::datalog::{Fact, Interner};

#[derive(Error, Debug)]
pub enum GenError {
    #[error("cannot place {edges} distinct edges over {nodes} nodes (max {max})")]
    Infeasible { nodes: u64, edges: u64, max: u64 },
    #[error("generators need at least {0}")]
    TooSmall(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Edges `(a_{i+1}, a_i)` for `1 ≤ i ≤ n-1`: node index pairs.
pub fn gen_chain(n: u64) -> Vec<(u64, u64)> {
    (1..n).map(|i| (i + 1, i)).collect()
}

/// `edges` distinct pairs oriented along a random topological order of
/// `nodes` vertices: always acyclic.
pub fn gen_dag(nodes: u64, edges: u64, seed: u64) -> Result<Vec<(u64, u64)>, GenError> {
    if nodes < 1 {
        return Err(GenError::TooSmall("one node"));
    }
    let max = nodes * nodes.saturating_sub(1) / 2;
    if edges > max {
        return Err(GenError::Infeasible { nodes, edges, max });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<u64> = (1..=nodes).collect();
    order.shuffle(&mut rng);
    let mut rank = vec![0u64; nodes as usize + 1];
    for (r, &v) in order.iter().enumerate() {
        rank[v as usize] = r as u64;
    }
    let mut seen: FxHashSet<(u64, u64)> = FxHashSet::default();
    let mut out = Vec::with_capacity(edges as usize);
    while (out.len() as u64) < edges {
        let a = rng.gen_range(1..=nodes);
        let b = rng.gen_range(1..=nodes);
        if a == b {
            continue;
        }
        let (src, dst) = if rank[a as usize] < rank[b as usize] { (a, b) } else { (b, a) };
        if seen.insert((src, dst)) {
            out.push((src, dst));
        }
    }
    Ok(out)
}

/// Nodes split into `layers` blocks; edges run from earlier to later
/// layers, except that each edge is reversed with probability `back_prob`,
/// which induces cycles.
pub fn gen_layered(
    nodes: u64,
    layers: u64,
    edges: u64,
    back_prob: f64,
    seed: u64,
) -> Result<Vec<(u64, u64)>, GenError> {
    if nodes < 2 || layers < 2 {
        return Err(GenError::TooSmall("two nodes in two layers"));
    }
    let layers = layers.min(nodes);
    let layer_of = |v: u64| (v - 1) * layers / nodes;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: FxHashSet<(u64, u64)> = FxHashSet::default();
    let mut out = Vec::with_capacity(edges as usize);
    let mut attempts = 0u64;
    let attempt_cap = edges.saturating_mul(200).max(10_000);
    while (out.len() as u64) < edges {
        attempts += 1;
        if attempts > attempt_cap {
            let max = out.len() as u64;
            return Err(GenError::Infeasible { nodes, edges, max });
        }
        let a = rng.gen_range(1..=nodes);
        let b = rng.gen_range(1..=nodes);
        if layer_of(a) == layer_of(b) {
            continue;
        }
        let (lo, hi) = if layer_of(a) < layer_of(b) { (a, b) } else { (b, a) };
        let pair = if rng.gen_bool(back_prob) { (hi, lo) } else { (lo, hi) };
        if seen.insert(pair) {
            out.push(pair);
        }
    }
    Ok(out)
}

pub fn node_name(prefix: &str, i: u64) -> String {
    format!("{prefix}{i}")
}

/// Interns the edges as binary facts `pred(prefix{a}, prefix{b})`.
pub fn edges_to_facts(
    interner: &mut Interner,
    pred_name: &str,
    prefix: &str,
    edges: &[(u64, u64)],
) -> Vec<Fact> {
    let pred = interner.predicate(pred_name);
    let _ = interner.set_arity(pred, 2);
    edges
        .iter()
        .map(|&(a, b)| {
            let a = interner.constant(&node_name(prefix, a));
            let b = interner.constant(&node_name(prefix, b));
            Fact::binary(pred, a, b)
        })
        .collect()
}

/// Writes a fact file; TSV mode when the path ends in `.tsv`.
pub fn write_fact_file(
    path: &Path,
    pred_name: &str,
    prefix: &str,
    edges: &[(u64, u64)],
) -> Result<(), GenError> {
    let tsv = path.extension().map_or(false, |e| e == "tsv");
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    for &(a, b) in edges {
        if tsv {
            writeln!(w, "{pred_name}\t{prefix}{a}\t{prefix}{b}")?;
        } else {
            writeln!(w, "{pred_name}({prefix}{a},{prefix}{b}).")?;
        }
    }
    w.flush()?;
    Ok(())
}
