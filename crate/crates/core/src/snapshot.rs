//! Durable reasoner state between CLI invocations.
//!
//! Format (versioned, all integers little-endian):
//!
//! ```text
//! magic   "MSDL1"                      5 bytes
//! version u32                          currently 1
//! config  enable_tc u8, enable_union u8, spacing u64, oracle_guard u64
//! round   u64
//! interner: constants, variables, predicates (len-prefixed UTF-8; each
//!           predicate carries its arity as u32)
//! program: rules as atom lists (atom = pred u32, term count u32, terms as
//!          tag u8 [0=var, 1=const] + id u32)
//! schemes: count u32, then per scheme a kind tag u8 (0 plain, 1 tc,
//!          2 union) and the scheme's state:
//!   plain  strict-instance counter u64, then fact rows
//!   tc     node arena (per node: id, tree-interval lower bound, the three
//!          interval sets as segment lists, status, member/frozen/adjacency
//!          lists, tree parent), constant map, allocated-id set, next root
//!          id, explicit edges, renumber counter
//!   union  fact rows
//! fact row: pred u32, arg count u32, args u32 each, label u8, round u64
//! ```
//!
//! Snapshots are taken between runs: all Δ buffers must be empty.

use std::path::Path;

use smallvec::SmallVec;
use thiserror::Error;

use crate::datalog::{Atom, Fact, Interner, PredId, Program, Rule, SymId, Term, VarId};
use crate::engine::{EngineConfig, Reasoner};
use crate::interval::IntervalSet;
use crate::scheme::{assign_schemes, Label, SchemeBox, SchemeFlags, SchemeId, SchemeKind};
use crate::store::LabelledFactStore;
use crate::tc::TcConfig;

pub const MAGIC: &[u8; 5] = b"MSDL1";
pub const VERSION: u32 = 1;

#[derive(Error, Debug)]
pub enum SnapshotError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a state snapshot (bad magic)")]
    BadMagic,
    #[error("unsupported snapshot version {0}")]
    BadVersion(u32),
    #[error("corrupt snapshot: {0}")]
    Corrupt(String),
}

fn corrupt(msg: impl Into<String>) -> SnapshotError {
    SnapshotError::Corrupt(msg.into())
}

// ---------------------------------------------------------------------
// primitive writers/readers
// ---------------------------------------------------------------------

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new() -> Self {
        let mut w = Writer { buf: Vec::new() };
        w.buf.extend_from_slice(MAGIC);
        w.u32(VERSION);
        w
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }

    fn opt_u32(&mut self, v: Option<u32>) {
        self.u32(v.unwrap_or(u32::MAX));
    }

    fn interval_set(&mut self, s: &IntervalSet) {
        self.u32(s.segment_count() as u32);
        for &(lo, hi) in s.segments() {
            self.u64(lo);
            self.u64(hi);
        }
    }

    fn fact_row(&mut self, fact: &Fact, label: Label, round: u64) {
        self.u32(fact.pred.0);
        self.u32(fact.args.len() as u32);
        for a in &fact.args {
            self.u32(a.0);
        }
        self.u8(label as u8);
        self.u64(round);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SnapshotError> {
        if self.pos + n > self.buf.len() {
            return Err(corrupt("unexpected end of snapshot"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, SnapshotError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, SnapshotError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, SnapshotError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn str(&mut self) -> Result<String, SnapshotError> {
        let n = self.u32()? as usize;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| corrupt("invalid UTF-8"))
    }

    fn opt_u32(&mut self) -> Result<Option<u32>, SnapshotError> {
        let v = self.u32()?;
        Ok(if v == u32::MAX { None } else { Some(v) })
    }

    fn interval_set(&mut self) -> Result<IntervalSet, SnapshotError> {
        let n = self.u32()? as usize;
        let mut pairs = Vec::with_capacity(n);
        for _ in 0..n {
            let lo = self.u64()?;
            let hi = self.u64()?;
            if lo > hi {
                return Err(corrupt("interval bounds out of order"));
            }
            pairs.push((lo, hi));
        }
        Ok(IntervalSet::from_pairs(pairs))
    }

    fn fact_row(&mut self) -> Result<(Fact, Label, u64), SnapshotError> {
        let pred = PredId(self.u32()?);
        let argc = self.u32()? as usize;
        if argc > 64 {
            return Err(corrupt("implausible fact arity"));
        }
        let mut args = SmallVec::with_capacity(argc);
        for _ in 0..argc {
            args.push(SymId(self.u32()?));
        }
        let label = match self.u8()? {
            0 => Label::DeltaNew,
            1 => Label::Delta,
            2 => Label::OldI,
            other => return Err(corrupt(format!("bad label {other}"))),
        };
        let round = self.u64()?;
        Ok((Fact { pred, args }, label, round))
    }
}

// ---------------------------------------------------------------------
// save
// ---------------------------------------------------------------------

fn write_atom(w: &mut Writer, atom: &Atom) {
    w.u32(atom.pred.0);
    w.u32(atom.terms.len() as u32);
    for t in &atom.terms {
        match t {
            Term::Var(v) => {
                w.u8(0);
                w.u32(v.0);
            }
            Term::Const(c) => {
                w.u8(1);
                w.u32(c.0);
            }
        }
    }
}

fn write_store(w: &mut Writer, store: &LabelledFactStore) {
    w.u64(store.len() as u64);
    for (fact, label, round) in store.rows_iter() {
        w.fact_row(fact, label, round);
    }
}

pub fn save_bytes(reasoner: &Reasoner) -> Result<Vec<u8>, SnapshotError> {
    let mut w = Writer::new();
    let config = reasoner.config();
    w.u8(config.flags.enable_tc as u8);
    w.u8(config.flags.enable_union as u8);
    w.u64(config.tc.spacing);
    w.u64(config.oracle_guard);
    w.u64(reasoner.round());

    let it = &reasoner.interner;
    let consts: Vec<(SymId, &str)> = it.consts_with_names().collect();
    w.u32(consts.len() as u32);
    for (_, name) in &consts {
        w.str(name);
    }
    let vars: Vec<(VarId, &str)> = it.vars_with_names().collect();
    w.u32(vars.len() as u32);
    for (_, name) in &vars {
        w.str(name);
    }
    let preds: Vec<(PredId, &str, usize)> = it.preds_with_names().collect();
    w.u32(preds.len() as u32);
    for (_, name, arity) in &preds {
        w.str(name);
        w.u32(*arity as u32);
    }

    let program = reasoner.program();
    w.u32(program.rules.len() as u32);
    for rule in &program.rules {
        write_atom(&mut w, &rule.head);
        w.u32(rule.body.len() as u32);
        for b in &rule.body {
            write_atom(&mut w, b);
        }
    }

    let reg = reasoner.registry();
    w.u32(reg.scheme_count() as u32);
    for idx in 0..reg.scheme_count() as u32 {
        match &*reg.cell(SchemeId(idx)).borrow() {
            SchemeBox::Plain(s) => {
                w.u8(0);
                w.u64(s.instances_generated());
                write_store(&mut w, s.store());
            }
            SchemeBox::Tc(s) => {
                if !s.buffers_empty() {
                    return Err(corrupt("snapshot taken mid-round: TC buffers not empty"));
                }
                w.u8(1);
                w.u32(s.nodes.len() as u32);
                for slot in &s.nodes {
                    match slot {
                        None => w.u8(0),
                        Some(n) => {
                            w.u8(1);
                            w.u64(n.id);
                            w.u64(n.tin_lo);
                            w.interval_set(&n.in_set);
                            w.interval_set(&n.d_set);
                            w.interval_set(&n.n_set);
                            w.u8(match n.status {
                                crate::tc::Status::Stable => 0,
                                crate::tc::Status::New => 1,
                                crate::tc::Status::Dropped => 2,
                            });
                            w.opt_u32(n.absorbed_into);
                            w.u32(n.members.len() as u32);
                            for m in &n.members {
                                w.u32(m.0);
                            }
                            w.u32(n.frozen.len() as u32);
                            for f in &n.frozen {
                                w.u32(*f);
                            }
                            let mut parents: Vec<u32> = n.parents.iter().copied().collect();
                            parents.sort_unstable();
                            w.u32(parents.len() as u32);
                            for p in parents {
                                w.u32(p);
                            }
                            let mut children: Vec<u32> = n.children.iter().copied().collect();
                            children.sort_unstable();
                            w.u32(children.len() as u32);
                            for c in children {
                                w.u32(c);
                            }
                            w.opt_u32(n.tree_parent);
                        }
                    }
                }
                w.u32(s.by_const.len() as u32);
                let mut pairs: Vec<(u32, u32)> =
                    s.by_const.iter().map(|(k, v)| (k.0, *v)).collect();
                pairs.sort_unstable();
                for (k, v) in pairs {
                    w.u32(k);
                    w.u32(v);
                }
                w.u64(s.allocated.len() as u64);
                for &id in &s.allocated {
                    w.u64(id);
                }
                w.u64(s.next_root);
                w.u64(s.edges.len() as u64);
                let mut edges: Vec<(u32, u32)> =
                    s.edges.iter().map(|&(a, b)| (a.0, b.0)).collect();
                edges.sort_unstable();
                for (a, b) in edges {
                    w.u32(a);
                    w.u32(b);
                }
                w.u8(s.tins_nested as u8);
                w.u64(s.renumbers);
            }
            SchemeBox::Union(s) => {
                w.u8(2);
                write_store(&mut w, s.store());
            }
        }
    }
    Ok(w.buf)
}

pub fn save(reasoner: &Reasoner, path: &Path) -> Result<(), SnapshotError> {
    let bytes = save_bytes(reasoner)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

// ---------------------------------------------------------------------
// load
// ---------------------------------------------------------------------

fn read_atom(r: &mut Reader) -> Result<Atom, SnapshotError> {
    let pred = PredId(r.u32()?);
    let n = r.u32()? as usize;
    if n > 64 {
        return Err(corrupt("implausible atom arity"));
    }
    let mut terms = SmallVec::with_capacity(n);
    for _ in 0..n {
        let tag = r.u8()?;
        let id = r.u32()?;
        terms.push(match tag {
            0 => Term::Var(VarId(id)),
            1 => Term::Const(SymId(id)),
            other => return Err(corrupt(format!("bad term tag {other}"))),
        });
    }
    Ok(Atom { pred, terms })
}

fn read_store(r: &mut Reader, store: &mut LabelledFactStore) -> Result<(), SnapshotError> {
    let n = r.u64()?;
    for _ in 0..n {
        let (fact, label, round) = r.fact_row()?;
        store.restore_row(fact, label, round);
    }
    Ok(())
}

pub fn load_bytes(bytes: &[u8]) -> Result<Reasoner, SnapshotError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(5)? != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(SnapshotError::BadVersion(version));
    }
    let flags = SchemeFlags { enable_tc: r.u8()? != 0, enable_union: r.u8()? != 0 };
    let spacing = r.u64()?;
    let oracle_guard = r.u64()?;
    let round = r.u64()?;
    let config = EngineConfig { flags, tc: TcConfig { spacing }, oracle_guard };

    let mut interner = Interner::new();
    let n_consts = r.u32()?;
    for i in 0..n_consts {
        let name = r.str()?;
        let id = interner.constant(&name);
        if id.0 != i {
            return Err(corrupt("constant table out of order"));
        }
    }
    let n_vars = r.u32()?;
    for i in 0..n_vars {
        let name = r.str()?;
        let id = interner.variable(&name);
        if id.0 != i {
            return Err(corrupt("variable table out of order"));
        }
    }
    let n_preds = r.u32()?;
    for i in 0..n_preds {
        let name = r.str()?;
        let arity = r.u32()? as usize;
        let id = interner.predicate(&name);
        if id.0 != i {
            return Err(corrupt("predicate table out of order"));
        }
        interner.set_arity(id, arity).map_err(|e| corrupt(e.to_string()))?;
    }

    let n_rules = r.u32()?;
    let mut rules = Vec::with_capacity(n_rules as usize);
    for _ in 0..n_rules {
        let head = read_atom(&mut r)?;
        let n_body = r.u32()? as usize;
        let mut body = Vec::with_capacity(n_body);
        for _ in 0..n_body {
            body.push(read_atom(&mut r)?);
        }
        rules.push(Rule { head, body });
    }
    let program = Program { rules };

    let registry = assign_schemes(&program, &interner, flags, config.tc);
    let n_schemes = r.u32()? as usize;
    if n_schemes != registry.scheme_count() {
        return Err(corrupt(format!(
            "scheme count mismatch: snapshot has {n_schemes}, program implies {}",
            registry.scheme_count()
        )));
    }
    for idx in 0..n_schemes as u32 {
        let kind = r.u8()?;
        let sid = SchemeId(idx);
        let expected = registry.kind(sid);
        let ok = matches!(
            (kind, expected),
            (0, SchemeKind::Plain) | (1, SchemeKind::Tc) | (2, SchemeKind::Union)
        );
        if !ok {
            return Err(corrupt(format!("scheme {idx} kind mismatch")));
        }
        match &mut *registry.cell(sid).borrow_mut() {
            SchemeBox::Plain(s) => {
                let instances = r.u64()?;
                s.set_instances(instances);
                read_store(&mut r, s.store_mut())?;
            }
            SchemeBox::Tc(s) => {
                let n_nodes = r.u32()? as usize;
                for _ in 0..n_nodes {
                    let present = r.u8()? != 0;
                    if !present {
                        s.nodes.push(None);
                        continue;
                    }
                    let id = r.u64()?;
                    let tin_lo = r.u64()?;
                    let in_set = r.interval_set()?;
                    let d_set = r.interval_set()?;
                    let n_set = r.interval_set()?;
                    let status = match r.u8()? {
                        0 => crate::tc::Status::Stable,
                        1 => crate::tc::Status::New,
                        2 => crate::tc::Status::Dropped,
                        other => return Err(corrupt(format!("bad node status {other}"))),
                    };
                    let absorbed_into = r.opt_u32()?;
                    let n_members = r.u32()? as usize;
                    let mut members = Vec::with_capacity(n_members);
                    for _ in 0..n_members {
                        members.push(SymId(r.u32()?));
                    }
                    let n_frozen = r.u32()? as usize;
                    let mut frozen = Vec::with_capacity(n_frozen);
                    for _ in 0..n_frozen {
                        frozen.push(r.u32()?);
                    }
                    let n_parents = r.u32()? as usize;
                    let mut parents = Vec::with_capacity(n_parents);
                    for _ in 0..n_parents {
                        parents.push(r.u32()?);
                    }
                    let n_children = r.u32()? as usize;
                    let mut children = Vec::with_capacity(n_children);
                    for _ in 0..n_children {
                        children.push(r.u32()?);
                    }
                    let tree_parent = r.opt_u32()?;
                    let node = crate::tc::SccNode {
                        id,
                        tin_lo,
                        in_set,
                        d_set,
                        n_set,
                        status,
                        members,
                        frozen,
                        absorbed_into,
                        parents,
                        children,
                        tree_parent,
                    };
                    let ix = s.nodes.len() as u32;
                    s.id_index.insert(node.id, ix);
                    s.nodes.push(Some(node));
                }
                let n_consts = r.u32()? as usize;
                for _ in 0..n_consts {
                    let sym = SymId(r.u32()?);
                    let ix = r.u32()?;
                    if ix as usize >= s.nodes.len() {
                        return Err(corrupt("constant maps to missing node"));
                    }
                    s.by_const.insert(sym, ix);
                }
                let n_alloc = r.u64()?;
                for _ in 0..n_alloc {
                    s.allocated.insert(r.u64()?);
                }
                s.next_root = r.u64()?;
                let n_edges = r.u64()?;
                for _ in 0..n_edges {
                    let a = SymId(r.u32()?);
                    let b = SymId(r.u32()?);
                    s.edges.insert((a, b));
                }
                s.tins_nested = r.u8()? != 0;
                s.renumbers = r.u64()?;
            }
            SchemeBox::Union(s) => {
                read_store(&mut r, s.store_mut())?;
            }
        }
    }
    if r.pos != r.buf.len() {
        return Err(corrupt("trailing bytes"));
    }
    Ok(Reasoner::from_parts(program, interner, config, registry, round))
}

pub fn load(path: &Path) -> Result<Reasoner, SnapshotError> {
    let bytes = std::fs::read(path)?;
    load_bytes(&bytes)
}
