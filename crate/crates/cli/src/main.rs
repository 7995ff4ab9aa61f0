//! `msdl` — materialise Datalog programs over multi-scheme storage, add
//! facts incrementally, and query the result.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use msdl_core::engine::{EngineConfig, EngineError, Reasoner};
use msdl_core::generate;
use msdl_core::scheme::{DomainFilter, SchemeFlags};
use msdl_core::tc::TcConfig;
use msdl_core::{parse_facts, parse_facts_tsv, parse_program, parse_query, snapshot, stats};

#[derive(Parser)]
#[command(name = "msdl", version, about = "Multi-scheme Datalog materialisation engine")]
struct Cli {
    /// Emit per-round trace lines on stderr.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Materialise a rule set over a fact file.
    Materialise(MaterialiseArgs),
    /// Add facts to a previously materialised state.
    Add(AddArgs),
    /// Evaluate a query over a materialised state.
    Query(QueryArgs),
    /// Generate benchmark fact files.
    Gen(GenArgs),
    /// Print statistics of a materialised state.
    Stats(StatsArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Plain tables only: the seminaive baseline.
    Standard,
    /// Plain, TC and union schemes as the program allows.
    Multischeme,
}

#[derive(Args)]
struct MaterialiseArgs {
    /// Rule file (`Head :- Body1, ..., BodyN.` one per line).
    #[arg(long)]
    rules: PathBuf,
    /// Fact file (`P(c1,c2).` lines, or TSV with a .tsv extension).
    #[arg(long)]
    facts: PathBuf,
    #[arg(long, value_enum, default_value = "multischeme")]
    mode: Mode,
    /// Keep transitive predicates in the plain table.
    #[arg(long)]
    disable_tc: bool,
    /// Keep union predicates in the plain table.
    #[arg(long)]
    disable_union: bool,
    /// Gap between post-order indexes in the TC scheme.
    #[arg(long, default_value = "16")]
    spacing: u64,
    /// Where to write the state snapshot.
    #[arg(long)]
    state_out: Option<PathBuf>,
    /// Where to write key=value statistics.
    #[arg(long)]
    stats_out: Option<PathBuf>,
    /// Also append a time/peak/static CSV row to the stats file.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct AddArgs {
    /// State snapshot produced by `materialise`.
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    facts: PathBuf,
    /// Where to write the updated state (defaults to overwriting).
    #[arg(long)]
    state_out: Option<PathBuf>,
    #[arg(long)]
    stats_out: Option<PathBuf>,
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    state: PathBuf,
    /// Query text, e.g. `R(?x,a).` or `R(?x,?y), S(?y).`
    #[arg(long)]
    q: String,
    /// Domain to evaluate over.
    #[arg(long, value_enum, default_value = "all")]
    domain: DomainArg,
    /// Print at most this many answers (0 = none, just the cardinality).
    #[arg(long, default_value = "10")]
    limit: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    I,
    Delta,
    All,
}

impl From<DomainArg> for DomainFilter {
    fn from(d: DomainArg) -> Self {
        match d {
            DomainArg::I => DomainFilter::OldI,
            DomainArg::Delta => DomainFilter::Delta,
            DomainArg::All => DomainFilter::All,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    what: GenCommand,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Chain R(a_{i+1}, a_i) for 1 <= i < n.
    Chain {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "R")]
        pred: String,
        #[arg(long, default_value = "a")]
        prefix: String,
    },
    /// Random DAG: distinct edges along a random topological order.
    Dag {
        #[arg(long)]
        nodes: u64,
        #[arg(long)]
        edges: u64,
        #[arg(long, default_value = "1")]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "R")]
        pred: String,
        #[arg(long, default_value = "n")]
        prefix: String,
    },
    /// Layered graph with back-edges (induces cycles).
    Layered {
        #[arg(long)]
        nodes: u64,
        #[arg(long, default_value = "6")]
        layers: u64,
        #[arg(long)]
        edges: u64,
        #[arg(long, default_value = "0.2")]
        back_prob: f64,
        #[arg(long, default_value = "1")]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "R")]
        pred: String,
        #[arg(long, default_value = "n")]
        prefix: String,
    },
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    csv: bool,
}

fn load_fact_file(path: &Path, interner: &mut msdl_core::Interner) -> Result<Vec<msdl_core::Fact>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read fact file {}", path.display()))?;
    let facts = if path.extension().map_or(false, |e| e == "tsv") {
        parse_facts_tsv(&text, interner)?
    } else {
        parse_facts(&text, interner)?
    };
    Ok(facts)
}

fn write_stats(reasoner: &Reasoner, path: Option<&Path>, csv: bool) -> Result<()> {
    let st = stats::collect(reasoner);
    let mut text = st.render_lines();
    if csv {
        text.push_str(&st.render_csv());
    }
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_materialise(args: MaterialiseArgs) -> Result<()> {
    let rules_text = std::fs::read_to_string(&args.rules)
        .with_context(|| format!("cannot read rule file {}", args.rules.display()))?;
    let mut interner = msdl_core::Interner::new();
    let program = parse_program(&rules_text, &mut interner)?;
    let facts = load_fact_file(&args.facts, &mut interner)?;

    let flags = match args.mode {
        Mode::Standard => SchemeFlags { enable_tc: false, enable_union: false },
        Mode::Multischeme => SchemeFlags {
            enable_tc: !args.disable_tc,
            enable_union: !args.disable_union,
        },
    };
    let config = EngineConfig {
        flags,
        tc: TcConfig { spacing: args.spacing },
        ..EngineConfig::default()
    };
    let mut reasoner = Reasoner::new(program, interner, config);
    let report = reasoner.insert(&facts)?;
    println!(
        "materialised: {} input facts, {} rounds, {:.3}s",
        facts.len(),
        report.rounds,
        report.wall.as_secs_f64()
    );
    if let Some(state) = &args.state_out {
        snapshot::save(&reasoner, state)?;
        println!("state written to {}", state.display());
    }
    write_stats(&reasoner, args.stats_out.as_deref(), args.csv)?;
    Ok(())
}

fn cmd_add(args: AddArgs) -> Result<()> {
    let mut reasoner = snapshot::load(&args.state)?;
    let facts = load_fact_file(&args.facts, &mut reasoner.interner)?;
    let report = reasoner.insert(&facts)?;
    println!(
        "added: {} input facts, {} rounds, {:.3}s",
        facts.len(),
        report.rounds,
        report.wall.as_secs_f64()
    );
    let out = args.state_out.unwrap_or(args.state);
    snapshot::save(&reasoner, &out)?;
    println!("state written to {}", out.display());
    write_stats(&reasoner, args.stats_out.as_deref(), args.csv)?;
    Ok(())
}

fn cmd_query(args: QueryArgs) -> Result<()> {
    let mut reasoner = snapshot::load(&args.state)?;
    let query = parse_query(&args.q, &mut reasoner.interner)?;
    let filter: DomainFilter = args.domain.into();
    let started = Instant::now();

    if query.projection.is_empty() {
        // fully ground: a point query
        let fact = query.atoms[0].to_fact();
        let mut holds = reasoner.contains(&fact, filter);
        for atom in &query.atoms[1..] {
            holds = holds && reasoner.contains(&atom.to_fact(), filter);
        }
        println!("{holds}");
        println!("cardinality={} time_s={:.6}", u64::from(holds), started.elapsed().as_secs_f64());
        return Ok(());
    }

    let mut printed = 0usize;
    let limit = args.limit;
    let interner = reasoner.interner.clone();
    let card = reasoner.evaluate(&query, filter, &mut |tuple| {
        if printed < limit {
            let row: Vec<String> = query
                .projection
                .iter()
                .zip(tuple.iter())
                .map(|(v, c)| format!("?{}={}", interner.var_name(*v), interner.const_name(*c)))
                .collect();
            println!("{}", row.join(" "));
            printed += 1;
        }
    });
    if printed < card as usize {
        println!("... ({} more)", card as usize - printed);
    }
    println!("cardinality={card} time_s={:.6}", started.elapsed().as_secs_f64());
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    match args.what {
        GenCommand::Chain { n, out, pred, prefix } => {
            if n < 1 {
                bail!("chain needs n >= 1");
            }
            let edges = generate::gen_chain(n);
            generate::write_fact_file(&out, &pred, &prefix, &edges)?;
            println!("wrote {} facts to {}", edges.len(), out.display());
        }
        GenCommand::Dag { nodes, edges, seed, out, pred, prefix } => {
            let list = generate::gen_dag(nodes, edges, seed)?;
            generate::write_fact_file(&out, &pred, &prefix, &list)?;
            println!("wrote {} facts to {}", list.len(), out.display());
        }
        GenCommand::Layered { nodes, layers, edges, back_prob, seed, out, pred, prefix } => {
            if !(0.0..=1.0).contains(&back_prob) {
                bail!("back-prob must be in [0, 1]");
            }
            let list = generate::gen_layered(nodes, layers, edges, back_prob, seed)?;
            generate::write_fact_file(&out, &pred, &prefix, &list)?;
            println!("wrote {} facts to {}", list.len(), out.display());
        }
    }
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let reasoner = snapshot::load(&args.state)?;
    write_stats(&reasoner, None, args.csv)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's default exit code for usage errors is 2; this tool
            // reserves 2 for internal invariant failures
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default())
        .filter_level(if cli.verbose { log::LevelFilter::Debug } else { log::LevelFilter::Warn })
        .init();

    let result = match cli.command {
        Command::Materialise(a) => cmd_materialise(a),
        Command::Add(a) => cmd_add(a),
        Command::Query(a) => cmd_query(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Stats(a) => cmd_stats(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            // internal invariant failures exit 2, user errors exit 1
            let internal = err.downcast_ref::<EngineError>().is_some();
            ExitCode::from(if internal { 2 } else { 1 })
        }
    }
}
