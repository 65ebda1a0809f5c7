//! Command-line front door for the proof engine: prove or decide sequents,
//! check and transform serialized derivations, enumerate countermodels, run
//! the muddy children scenario, and validate the lattice laws over all
//! small frames.
//!
//! Exit codes: 0 — the query was answered as expected (proved, checked,
//! all scenario expectations met); 1 — refuted or some expectation failed;
//! 2 — resource bounds exhausted without an answer; 3 — malformed input.

use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use adjmod::calculus::{check, AssumptionRule, Derivation};
use adjmod::scenarios::{
    build_assumptions, build_queries, export_assumptions, parse_assumptions, MuddyConfig, Round,
    Variant,
};
use adjmod::search::{decide, prove, SearchConfig, SearchOutcome};
use adjmod::semantics::{
    canonical_frames, complex_algebra, dlam_validate, find_countermodel_where, ModelBounds,
};
use adjmod::syntax::{parse_sequent, Agent, ItemPath, Sequent};
use adjmod::transform::eliminate_cut_traced;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

#[derive(Parser)]
#[command(
    name = "adjmod",
    version,
    about = "nested-sequent prover for adjoint positive modal logic",
    max_term_width = 100
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ProveArgs {
    /// The sequent, e.g. "p & q |- <A>(p)" — quote it
    sequent: String,
    /// Assumption file: one `assn <agent> <atom> => <atom> | ...` per line
    #[arg(long)]
    assn: Option<String>,
    /// Backtracking depth bound
    #[arg(long, default_value_t = 60)]
    max_depth: usize,
    /// Write the found derivation to this file as JSON
    #[arg(long)]
    emit: Option<String>,
    /// Output format: `text` or `json`
    #[arg(long, default_value = "text")]
    format: OutputFormat,
}

#[derive(Args)]
struct ModelArgs {
    /// The sequent — quote it
    sequent: String,
    /// Largest number of worlds to enumerate
    #[arg(long, default_value_t = 3)]
    worlds: usize,
    /// Assumption file restricting the admissible structures
    #[arg(long)]
    assn: Option<String>,
    /// Output format: `text` or `json`
    #[arg(long, default_value = "text")]
    format: OutputFormat,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a cut-free derivation
    Prove(ProveArgs),
    /// Race the prover against bounded countermodel search
    Decide(ModelArgs),
    /// Check a serialized derivation
    Check {
        /// Path to a derivation JSON file
        proof: String,
        /// Accept Cut nodes
        #[arg(long)]
        allow_cut: bool,
        /// Assumption file the derivation may cite
        #[arg(long)]
        assn: Option<String>,
    },
    /// Cut-eliminating combination of two derivations
    Elimcut {
        /// Derivation of `Γ |- m`
        first: String,
        /// Derivation of `Δ'[m] |- m'`
        second: String,
        /// Position of the cut formula in the second conclusion, as
        /// dot-separated indices (all but the last descend into annotated
        /// items), e.g. `0.1` for item 1 inside top-level item 0
        #[arg(long)]
        path: String,
        /// Assumption file both derivations may cite
        #[arg(long)]
        assn: Option<String>,
        /// Write the result to this file as JSON
        #[arg(long)]
        emit: Option<String>,
        /// Print the sequence of reduction case labels
        #[arg(long)]
        trace: bool,
    },
    /// Search for a countermodel
    Countermodel(ModelArgs),
    /// Run the muddy children scenario
    Muddy {
        /// Number of children
        #[arg(long)]
        n: usize,
        /// Number of muddy children (children 1..=k)
        #[arg(long, default_value_t = 0)]
        k: usize,
        /// Announcement stage: `before`, `father`, or the round number
        #[arg(long, default_value = "father")]
        round: String,
        /// Nobody is muddy but the father announces anyway
        #[arg(long)]
        liar: bool,
        /// Write the generated assumption set to this file
        #[arg(long)]
        emit_assn: Option<String>,
    },
    /// Validate the lattice laws over the algebras of all small frames
    Laws {
        /// Largest number of worlds
        #[arg(long, default_value_t = 3)]
        worlds: usize,
        /// Number of agents
        #[arg(long, default_value_t = 2)]
        agents: usize,
    },
}

const EXIT_REFUTED: u8 = 1;
const EXIT_BOUNDS: u8 = 2;
const EXIT_INPUT: u8 = 3;

fn fail(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(EXIT_INPUT)
}

fn load_assumptions(path: &Option<String>) -> Result<Vec<AssumptionRule>, String> {
    let Some(path) = path else {
        return Ok(Vec::new());
    };
    let text = fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    parse_assumptions(&text).map_err(|e| format!("{path}: {e}"))
}

fn read_sequent(text: &str) -> Result<Sequent, String> {
    parse_sequent(text).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Prove(args) => cmd_prove(args),
        Command::Decide(args) => cmd_decide(args),
        Command::Check { proof, allow_cut, assn } => cmd_check(&proof, allow_cut, &assn),
        Command::Elimcut { first, second, path, assn, emit, trace } => {
            cmd_elimcut(&first, &second, &path, &assn, &emit, trace)
        }
        Command::Countermodel(args) => cmd_countermodel(args),
        Command::Muddy { n, k, round, liar, emit_assn } => {
            cmd_muddy(n, k, &round, liar, &emit_assn)
        }
        Command::Laws { worlds, agents } => cmd_laws(worlds, agents),
    }
}

fn cmd_prove(args: ProveArgs) -> ExitCode {
    let sequent = match read_sequent(&args.sequent) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let assumptions = match load_assumptions(&args.assn) {
        Ok(a) => a,
        Err(e) => return fail(e),
    };
    let config = SearchConfig { max_depth: args.max_depth, assumptions, ..SearchConfig::default() };
    match prove(&sequent, &config) {
        SearchOutcome::Proved(d) => {
            if let Some(path) = &args.emit {
                if let Err(e) = fs::write(path, d.to_json()) {
                    return fail(format!("{path}: {e}"));
                }
            }
            if args.format == OutputFormat::Json {
                println!("{}", d.to_json());
            } else {
                println!("proved:");
                print!("{}", d.render_text());
            }
            ExitCode::SUCCESS
        }
        SearchOutcome::NotProvedWithinBounds(stats) => {
            if args.format == OutputFormat::Json {
                println!(
                    "{{\"outcome\": \"not_proved_within_bounds\", \"stats\": {}}}",
                    serde_json::to_string(&stats).expect("stats serialize")
                );
            } else {
                println!("not proved within bounds ({stats:?})");
            }
            ExitCode::from(EXIT_BOUNDS)
        }
        SearchOutcome::Refuted(..) => unreachable!("prove never refutes"),
    }
}

fn cmd_decide(args: ModelArgs) -> ExitCode {
    let sequent = match read_sequent(&args.sequent) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let assumptions = match load_assumptions(&args.assn) {
        Ok(a) => a,
        Err(e) => return fail(e),
    };
    if args.worlds == 0 || args.worlds > 4 {
        return fail("--worlds must be between 1 and 4");
    }
    let bounds = ModelBounds::for_sequent(&sequent, args.worlds).with_assumptions(&assumptions);
    let config = SearchConfig { assumptions, ..SearchConfig::default() };
    match decide(&sequent, &config, &bounds) {
        SearchOutcome::Proved(d) => {
            if args.format == OutputFormat::Json {
                println!("{}", d.to_json());
            } else {
                println!("proved:");
                print!("{}", d.render_text());
            }
            ExitCode::SUCCESS
        }
        SearchOutcome::Refuted(cm, _) => {
            if args.format == OutputFormat::Json {
                println!("{}", cm.to_json());
            } else {
                println!("refuted by a countermodel:");
                println!("{cm}");
            }
            ExitCode::from(EXIT_REFUTED)
        }
        SearchOutcome::NotProvedWithinBounds(stats) => {
            println!("no answer within bounds ({stats:?})");
            ExitCode::from(EXIT_BOUNDS)
        }
    }
}

fn cmd_check(proof: &str, allow_cut: bool, assn: &Option<String>) -> ExitCode {
    let text = match fs::read_to_string(proof) {
        Ok(t) => t,
        Err(e) => return fail(format!("{proof}: {e}")),
    };
    let derivation = match Derivation::from_json(&text) {
        Ok(d) => d,
        Err(e) => return fail(format!("{proof}: {e}")),
    };
    let assumptions = match load_assumptions(assn) {
        Ok(a) => a,
        Err(e) => return fail(e),
    };
    match check(&derivation, &assumptions, allow_cut) {
        Ok(()) => {
            println!("ok: derivation of `{}` checks", derivation.conclusion);
            ExitCode::SUCCESS
        }
        Err(rejection) => fail(format!("{proof}: rejected at {rejection}")),
    }
}

fn parse_item_path(text: &str) -> Result<ItemPath, String> {
    let steps: Result<Vec<usize>, _> = text.split('.').map(str::parse).collect();
    let mut steps = steps.map_err(|e| format!("bad path `{text}`: {e}"))?;
    let index = steps.pop().ok_or_else(|| format!("bad path `{text}`: empty"))?;
    Ok(ItemPath::new(steps, index))
}

fn cmd_elimcut(
    first: &str,
    second: &str,
    path: &str,
    assn: &Option<String>,
    emit: &Option<String>,
    trace: bool,
) -> ExitCode {
    let load = |p: &str| -> Result<Derivation, String> {
        let text = fs::read_to_string(p).map_err(|e| format!("{p}: {e}"))?;
        Derivation::from_json(&text).map_err(|e| format!("{p}: {e}"))
    };
    let (d1, d2) = match (load(first), load(second)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return fail(e),
    };
    let at = match parse_item_path(path) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let assumptions = match load_assumptions(assn) {
        Ok(a) => a,
        Err(e) => return fail(e),
    };
    let mut labels = Vec::new();
    match eliminate_cut_traced(&d1, &d2, &at, &assumptions, &mut labels) {
        Ok(out) => {
            if trace {
                let seq: Vec<&str> = labels.iter().map(|c| c.label()).collect();
                println!("cases: {}", seq.join(" "));
            }
            if let Some(path) = emit {
                if let Err(e) = fs::write(path, out.to_json()) {
                    return fail(format!("{path}: {e}"));
                }
            }
            println!("cut eliminated:");
            print!("{}", out.render_text());
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}

fn cmd_countermodel(args: ModelArgs) -> ExitCode {
    let sequent = match read_sequent(&args.sequent) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let assumptions = match load_assumptions(&args.assn) {
        Ok(a) => a,
        Err(e) => return fail(e),
    };
    if args.worlds == 0 || args.worlds > 4 {
        return fail("--worlds must be between 1 and 4");
    }
    let bounds = ModelBounds::for_sequent(&sequent, args.worlds).with_assumptions(&assumptions);
    match find_countermodel_where(&sequent, &bounds, &assumptions) {
        Some(cm) => {
            if args.format == OutputFormat::Json {
                println!("{}", cm.to_json());
            } else {
                println!("countermodel:");
                println!("{cm}");
            }
            ExitCode::from(EXIT_REFUTED)
        }
        None => {
            println!("no countermodel with at most {} worlds over the query's atoms", args.worlds);
            ExitCode::from(EXIT_BOUNDS)
        }
    }
}

fn parse_round(text: &str) -> Result<Round, String> {
    match text {
        "before" | "before_father" => Ok(Round::BeforeFather),
        "father" | "after_father" => Ok(Round::AfterFather),
        other => match other.parse::<usize>() {
            Ok(r) => Ok(Round::AfterRound(r)),
            Err(_) => {
                Err(format!("bad round `{other}`: use `before`, `father`, or a round number"))
            }
        },
    }
}

fn cmd_muddy(n: usize, k: usize, round: &str, liar: bool, emit_assn: &Option<String>) -> ExitCode {
    let round = match parse_round(round) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let variant = if liar { Variant::Liar } else { Variant::Honest };
    let config = match MuddyConfig::new(n, k, round, variant) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let assumptions = build_assumptions(&config);
    if let Some(path) = emit_assn {
        if let Err(e) = fs::write(path, export_assumptions(&assumptions)) {
            return fail(format!("{path}: {e}"));
        }
    }
    println!("assumptions:");
    print!("{}", export_assumptions(&assumptions));
    let search = SearchConfig::with_assumptions(assumptions);
    let mut mismatches = 0;
    for query in build_queries(&config) {
        let proved = prove(&query.sequent, &search).is_proved();
        let verdict = if proved == query.expected_provable { "ok" } else { "MISMATCH" };
        if proved != query.expected_provable {
            mismatches += 1;
        }
        println!(
            "{verdict:8} {:32} {} [{}]",
            query.label,
            query.sequent,
            if proved { "proved" } else { "not proved" }
        );
    }
    if mismatches == 0 {
        ExitCode::SUCCESS
    } else {
        eprintln!("{mismatches} expectation(s) failed");
        ExitCode::from(EXIT_REFUTED)
    }
}

fn cmd_laws(worlds: usize, agents: usize) -> ExitCode {
    if worlds == 0 || worlds > 3 {
        return fail("--worlds must be between 1 and 3");
    }
    if agents == 0 || agents > 2 {
        return fail("--agents must be 1 or 2");
    }
    let names: Vec<Agent> = ["A", "B"].iter().take(agents).map(|s| Agent::new(*s)).collect();
    let bounds = ModelBounds::new(worlds, names, vec![]);
    let mut frames = 0usize;
    let mut violations = 0usize;
    for (frame, _) in canonical_frames(&bounds) {
        frames += 1;
        let algebra = match complex_algebra(&frame) {
            Ok(a) => a,
            Err(e) => return fail(format!("frame violates its own invariants: {e}")),
        };
        for v in dlam_validate(&algebra) {
            violations += 1;
            eprintln!("frame {frames}: {v}");
        }
    }
    println!("checked the algebras of {frames} frames: {violations} violation(s)");
    if violations == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_REFUTED)
    }
}
