//! Bottom-up Datalog materialisation over pluggable storage schemes.
//!
//! Derived facts live in per-predicate storage schemes: a plain label-tagged
//! table, a compressed interval-based scheme for transitively closed
//! relations, and a virtual scheme for union predicates. The engine runs the
//! seminaive loop across all schemes and supports incremental fact addition
//! and query answering over the compressed representations.

pub mod datalog;
pub mod engine;
pub mod generate;
pub mod interval;
pub mod plain;
pub mod query;
pub mod scheme;
pub mod snapshot;
pub mod stats;
pub mod store;
pub mod tc;
pub mod union_table;

pub use datalog::{
    check_safety, parse_facts, parse_facts_tsv, parse_program, Fact, Interner, ParseError, PredId,
    Program, Rule, SymId,
};
pub use engine::{naive_materialise, EngineConfig, EngineError, Reasoner, RunReport};
pub use interval::IntervalSet;
pub use query::{evaluate, parse_query, Query, QueryError};
pub use scheme::{assign_schemes, DomainFilter, Pattern, Registry, SchemeFlags, SchemeKind};
pub use tc::TcConfig;
