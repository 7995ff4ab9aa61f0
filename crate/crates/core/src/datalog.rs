//! Datalog syntax: terms, atoms, facts, rules, programs, and the textual
//! grammar.
//!
//! All symbols are interned to dense integer ids at parse time; the rest of
//! the engine works on ids only. Variables and constants live in separate id
//! spaces. Grammar, one rule per line:
//!
//! ```text
//! Head :- Body1, ..., BodyN .     % comment
//! ```
//!
//! Variables start with `?`; constants are bare alphanumerics or
//! single-quoted strings. Fact files hold one fact per line (`P(c1,c2).`) or,
//! for files with a `.tsv` extension, `P<TAB>c1<TAB>c2`.

use std::collections::hash_map::Entry;
use std::fmt;

use rustc_hash::FxHashMap;
use smallvec::SmallVec;
use thiserror::Error;

/// Interned constant symbol.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct SymId(pub u32);

/// Interned variable name.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct VarId(pub u32);

/// Interned predicate symbol.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct PredId(pub u32);

/// Bidirectional interner for constants, variables and predicates.
///
/// Interning is injective: equal strings get equal ids and vice versa.
#[derive(Default, Clone)]
pub struct Interner {
    consts: Vec<String>,
    const_ids: FxHashMap<String, SymId>,
    vars: Vec<String>,
    var_ids: FxHashMap<String, VarId>,
    preds: Vec<String>,
    pred_ids: FxHashMap<String, PredId>,
    arities: FxHashMap<PredId, usize>,
}

impl Interner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(&mut self, name: &str) -> SymId {
        if let Some(&id) = self.const_ids.get(name) {
            return id;
        }
        let id = SymId(self.consts.len() as u32);
        self.consts.push(name.to_string());
        self.const_ids.insert(name.to_string(), id);
        id
    }

    pub fn variable(&mut self, name: &str) -> VarId {
        if let Some(&id) = self.var_ids.get(name) {
            return id;
        }
        let id = VarId(self.vars.len() as u32);
        self.vars.push(name.to_string());
        self.var_ids.insert(name.to_string(), id);
        id
    }

    pub fn predicate(&mut self, name: &str) -> PredId {
        if let Some(&id) = self.pred_ids.get(name) {
            return id;
        }
        let id = PredId(self.preds.len() as u32);
        self.preds.push(name.to_string());
        self.pred_ids.insert(name.to_string(), id);
        id
    }

    pub fn lookup_predicate(&self, name: &str) -> Option<PredId> {
        self.pred_ids.get(name).copied()
    }

    pub fn lookup_constant(&self, name: &str) -> Option<SymId> {
        self.const_ids.get(name).copied()
    }

    /// Records the arity of `pred`, failing if it conflicts with an earlier
    /// occurrence. Arity is inferred from first use and enforced globally.
    pub fn set_arity(&mut self, pred: PredId, arity: usize) -> Result<(), ParseError> {
        match self.arities.entry(pred) {
            Entry::Vacant(e) => {
                e.insert(arity);
                Ok(())
            }
            Entry::Occupied(e) if *e.get() == arity => Ok(()),
            Entry::Occupied(e) => Err(ParseError::ArityConflict {
                predicate: self.preds[pred.0 as usize].clone(),
                expected: *e.get(),
                found: arity,
            }),
        }
    }

    pub fn arity(&self, pred: PredId) -> Option<usize> {
        self.arities.get(&pred).copied()
    }

    pub fn const_name(&self, id: SymId) -> &str {
        &self.consts[id.0 as usize]
    }

    pub fn var_name(&self, id: VarId) -> &str {
        &self.vars[id.0 as usize]
    }

    pub fn pred_name(&self, id: PredId) -> &str {
        &self.preds[id.0 as usize]
    }

    pub fn const_count(&self) -> usize {
        self.consts.len()
    }

    pub fn pred_count(&self) -> usize {
        self.preds.len()
    }

    pub fn predicates(&self) -> impl Iterator<Item = PredId> + '_ {
        (0..self.preds.len() as u32).map(PredId)
    }

    pub(crate) fn consts_with_names(&self) -> impl Iterator<Item = (SymId, &str)> + '_ {
        self.consts
            .iter()
            .enumerate()
            .map(|(i, s)| (SymId(i as u32), s.as_str()))
    }

    pub(crate) fn vars_with_names(&self) -> impl Iterator<Item = (VarId, &str)> + '_ {
        self.vars
            .iter()
            .enumerate()
            .map(|(i, s)| (VarId(i as u32), s.as_str()))
    }

    pub(crate) fn preds_with_names(&self) -> impl Iterator<Item = (PredId, &str, usize)> + '_ {
        self.preds.iter().enumerate().map(|(i, s)| {
            let id = PredId(i as u32);
            (id, s.as_str(), self.arities.get(&id).copied().unwrap_or(0))
        })
    }
}

/// A term is a variable or a constant.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Term {
    Var(VarId),
    Const(SymId),
}

pub type Args = SmallVec<[SymId; 2]>;

/// `P(t1, ..., tk)` with at least one argument.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Atom {
    pub pred: PredId,
    pub terms: SmallVec<[Term; 2]>,
}

impl Atom {
    pub fn variables(&self) -> impl Iterator<Item = VarId> + '_ {
        self.terms.iter().filter_map(|t| match t {
            Term::Var(v) => Some(*v),
            Term::Const(_) => None,
        })
    }

    pub fn is_ground(&self) -> bool {
        self.terms.iter().all(|t| matches!(t, Term::Const(_)))
    }

    /// Converts a ground atom into a fact. Panics if a variable remains.
    pub fn to_fact(&self) -> Fact {
        Fact {
            pred: self.pred,
            args: self
                .terms
                .iter()
                .map(|t| match t {
                    Term::Const(c) => *c,
                    Term::Var(_) => panic!("atom is not ground"),
                })
                .collect(),
        }
    }
}

/// A variable-free atom.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Fact {
    pub pred: PredId,
    pub args: Args,
}

impl Fact {
    pub fn new(pred: PredId, args: impl IntoIterator<Item = SymId>) -> Self {
        Fact { pred, args: args.into_iter().collect() }
    }

    pub fn binary(pred: PredId, a: SymId, b: SymId) -> Self {
        Fact { pred, args: SmallVec::from_slice(&[a, b]) }
    }
}

/// `B0 ∧ ... ∧ Bn → H` with a non-empty body.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Atom>,
}

/// A finite set of safe rules plus the global predicate arity map.
#[derive(Clone, Default, Debug)]
pub struct Program {
    pub rules: Vec<Rule>,
}

/// A finite mapping of variables to constants. Kept as a flat list: rules
/// are tiny, so linear probing beats hashing here.
#[derive(Clone, Default, Debug)]
pub struct Substitution {
    bindings: SmallVec<[(VarId, SymId); 6]>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, v: VarId) -> Option<SymId> {
        self.bindings.iter().find(|(w, _)| *w == v).map(|(_, c)| *c)
    }

    /// Binds `v` to `c`. Panics in debug builds if `v` is already bound to a
    /// different constant; the mapping must stay functional.
    pub fn bind(&mut self, v: VarId, c: SymId) {
        debug_assert!(self.get(v).map_or(true, |old| old == c));
        self.bindings.push((v, c));
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    /// Drops bindings added after a `len()` checkpoint, undoing a failed
    /// match without cloning.
    pub fn truncate(&mut self, len: usize) {
        self.bindings.truncate(len);
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, SymId)> + '_ {
        self.bindings.iter().copied()
    }
}

/// Replaces each variable in `σ`'s domain; other terms are untouched.
pub fn apply_substitution(atom: &Atom, sigma: &Substitution) -> Atom {
    Atom {
        pred: atom.pred,
        terms: atom
            .terms
            .iter()
            .map(|t| match t {
                Term::Var(v) => match sigma.get(*v) {
                    Some(c) => Term::Const(c),
                    None => *t,
                },
                Term::Const(_) => *t,
            })
            .collect(),
    }
}

/// Extends `σ` minimally so that `atom σ = fact`, or fails. On failure `σ`
/// is left exactly as it was.
pub fn match_atom(atom: &Atom, fact: &Fact, sigma: &mut Substitution) -> bool {
    if atom.pred != fact.pred || atom.terms.len() != fact.args.len() {
        return false;
    }
    let mark = sigma.len();
    for (t, &c) in atom.terms.iter().zip(fact.args.iter()) {
        let ok = match t {
            Term::Const(k) => *k == c,
            Term::Var(v) => match sigma.get(*v) {
                Some(bound) => bound == c,
                None => {
                    sigma.bind(*v, c);
                    true
                }
            },
        };
        if !ok {
            sigma.truncate(mark);
            return false;
        }
    }
    true
}

/// Outcome of the safety check: every head variable must occur in the body.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Safety {
    Ok,
    Violation(VarId),
}

pub fn check_safety(rule: &Rule) -> Safety {
    for v in rule.head.variables() {
        if !rule.body.iter().any(|b| b.variables().any(|w| w == v)) {
            return Safety::Violation(v);
        }
    }
    Safety::Ok
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unsafe rule at line {line}: head variable ?{variable} does not occur in the body")]
    Unsafe { line: usize, variable: String },
    #[error("arity conflict for predicate {predicate}: declared with {expected} arguments, used with {found}")]
    ArityConflict { predicate: String, expected: usize, found: usize },
}

struct Cursor<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    line_start: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Cursor { src: src.as_bytes(), pos: 0, line: 1, line_start: 0 }
    }

    fn col(&self) -> usize {
        self.pos - self.line_start + 1
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax { line: self.line, col: self.col(), msg: msg.into() }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.line_start = self.pos;
        }
        Some(c)
    }

    /// Skips whitespace and `%` comments.
    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'%') => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8, what: &str) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == b'_' {
                self.bump();
            } else {
                break;
            }
        }
        if self.pos == start {
            return Err(self.err("expected an identifier"));
        }
        Ok(std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string())
    }

    fn quoted(&mut self) -> Result<String, ParseError> {
        // opening quote already consumed
        let start = self.pos;
        loop {
            match self.peek() {
                Some(b'\'') => {
                    let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
                    self.bump();
                    return Ok(s);
                }
                Some(b'\n') | None => return Err(self.err("unterminated quoted constant")),
                _ => {
                    self.bump();
                }
            }
        }
    }
}

fn parse_term(cur: &mut Cursor, interner: &mut Interner) -> Result<Term, ParseError> {
    cur.skip_trivia();
    match cur.peek() {
        Some(b'?') => {
            cur.bump();
            let name = cur.ident()?;
            Ok(Term::Var(interner.variable(&name)))
        }
        Some(b'\'') => {
            cur.bump();
            let name = cur.quoted()?;
            Ok(Term::Const(interner.constant(&name)))
        }
        _ => {
            let name = cur.ident()?;
            Ok(Term::Const(interner.constant(&name)))
        }
    }
}

fn parse_atom(cur: &mut Cursor, interner: &mut Interner) -> Result<Atom, ParseError> {
    cur.skip_trivia();
    let name = cur.ident()?;
    let pred = interner.predicate(&name);
    cur.skip_trivia();
    cur.expect(b'(', "'(' after predicate name")?;
    let mut terms = SmallVec::new();
    loop {
        terms.push(parse_term(cur, interner)?);
        cur.skip_trivia();
        if cur.eat(b',') {
            continue;
        }
        cur.expect(b')', "',' or ')' in argument list")?;
        break;
    }
    interner.set_arity(pred, terms.len())?;
    Ok(Atom { pred, terms })
}

/// Parses a rule set. Every rule is checked for safety and arity
/// consistency; errors carry line/column positions.
pub fn parse_program(text: &str, interner: &mut Interner) -> Result<Program, ParseError> {
    let mut cur = Cursor::new(text);
    let mut rules = Vec::new();
    loop {
        cur.skip_trivia();
        if cur.peek().is_none() {
            break;
        }
        let rule_line = cur.line;
        let head = parse_atom(&mut cur, interner)?;
        cur.skip_trivia();
        if !(cur.eat(b':') && cur.eat(b'-')) {
            return Err(cur.err("expected ':-' after rule head"));
        }
        let mut body = Vec::new();
        loop {
            body.push(parse_atom(&mut cur, interner)?);
            cur.skip_trivia();
            if cur.eat(b',') {
                continue;
            }
            cur.expect(b'.', "',' or '.' after body atom")?;
            break;
        }
        let rule = Rule { head, body };
        if let Safety::Violation(v) = check_safety(&rule) {
            return Err(ParseError::Unsafe {
                line: rule_line,
                variable: interner.var_name(v).to_string(),
            });
        }
        rules.push(rule);
    }
    Ok(Program { rules })
}

/// Parses a fact file in `P(c1,c2).` form.
pub fn parse_facts(text: &str, interner: &mut Interner) -> Result<Vec<Fact>, ParseError> {
    let mut cur = Cursor::new(text);
    let mut facts = Vec::new();
    loop {
        cur.skip_trivia();
        if cur.peek().is_none() {
            break;
        }
        let atom = parse_atom(&mut cur, interner)?;
        cur.skip_trivia();
        cur.expect(b'.', "'.' after fact")?;
        if !atom.is_ground() {
            return Err(cur.err("facts must not contain variables"));
        }
        facts.push(atom.to_fact());
    }
    Ok(facts)
}

/// Parses TSV facts: `P<TAB>c1<TAB>c2`, one per line.
pub fn parse_facts_tsv(text: &str, interner: &mut Interner) -> Result<Vec<Fact>, ParseError> {
    let mut facts = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let mut cols = line.split('\t');
        let pred_name = cols.next().unwrap();
        let args: Vec<&str> = cols.collect();
        if pred_name.is_empty() || args.is_empty() {
            return Err(ParseError::Syntax {
                line: i + 1,
                col: 1,
                msg: "expected PRED<TAB>arg1[<TAB>arg2...]".into(),
            });
        }
        let pred = interner.predicate(pred_name);
        interner.set_arity(pred, args.len())?;
        facts.push(Fact::new(pred, args.iter().map(|a| interner.constant(a))));
    }
    Ok(facts)
}

fn needs_quoting(name: &str) -> bool {
    name.is_empty() || !name.bytes().all(|c| c.is_ascii_alphanumeric() || c == b'_')
}

/// Pretty-printers pairing with the parser: `parse(print(x)) == x`.
pub struct DisplayTerm<'a>(pub &'a Term, pub &'a Interner);
pub struct DisplayAtom<'a>(pub &'a Atom, pub &'a Interner);
pub struct DisplayFact<'a>(pub &'a Fact, pub &'a Interner);
pub struct DisplayRule<'a>(pub &'a Rule, pub &'a Interner);
pub struct DisplayProgram<'a>(pub &'a Program, pub &'a Interner);

impl fmt::Display for DisplayTerm<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Term::Var(v) => write!(f, "?{}", self.1.var_name(*v)),
            Term::Const(c) => {
                let name = self.1.const_name(*c);
                if needs_quoting(name) {
                    write!(f, "'{name}'")
                } else {
                    write!(f, "{name}")
                }
            }
        }
    }
}

impl fmt::Display for DisplayAtom<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.1.pred_name(self.0.pred))?;
        for (i, t) in self.0.terms.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", DisplayTerm(t, self.1))?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for DisplayFact<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.1.pred_name(self.0.pred))?;
        for (i, c) in self.0.args.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            let name = self.1.const_name(*c);
            if needs_quoting(name) {
                write!(f, "'{name}'")?;
            } else {
                write!(f, "{name}")?;
            }
        }
        write!(f, ")")
    }
}

impl fmt::Display for DisplayRule<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} :- ", DisplayAtom(&self.0.head, self.1))?;
        for (i, b) in self.0.body.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", DisplayAtom(b, self.1))?;
        }
        write!(f, ".")
    }
}

impl fmt::Display for DisplayProgram<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.0.rules {
            writeln!(f, "{}", DisplayRule(r, self.1))?;
        }
        Ok(())
    }
}
