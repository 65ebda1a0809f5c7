//! The muddy children scenario (and its lying-father variant) as assumption
//! rules and query sequents.
//!
//! `n` children play in the mud and the children `1..=k` are muddy. For
//! every subset `β` of children, the atom `s{..}` (children listed in
//! ascending order, `s{}` for the empty set) states that exactly the
//! children in `β` are muddy. A child sees every forehead but its own, so
//! at state `β` child `i` considers possible `β` itself plus `β` with its
//! own membership flipped; these possibilities become assumption rules
//! `<i>(s_β) ⇒ s_β | s_β'`.
//!
//! Announcements shrink the disjunctions and are applied here as assumption
//! rewrites, one configuration per round: the father's announcement ("at
//! least one of you is muddy") removes the empty-set disjunct; the round-`r`
//! chorus of "I don't know" removes every disjunct naming exactly `r`
//! children. A rule whose disjuncts are all eliminated is dropped.
//!
//! In the liar variant nobody is muddy (`k = 0`) but the father announces
//! anyway, and the children update as above — after which each child
//! wrongly concludes it is the muddy one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus::AssumptionRule;
use crate::syntax::{Agent, Context, Formula, Item, Sequent};

/// Announcement stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Round {
    BeforeFather,
    AfterFather,
    /// After the `r`-th round of "I don't know" answers, `1 <= r <= k-1`.
    AfterRound(usize),
}

impl Round {
    /// Position in scenario time: before the father, after him, then one
    /// step per round of answers.
    pub fn index(&self) -> usize {
        match self {
            Round::BeforeFather => 0,
            Round::AfterFather => 1,
            Round::AfterRound(r) => 1 + r,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Honest,
    Liar,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MuddyConfig {
    pub n: usize,
    pub k: usize,
    pub round: Round,
    pub variant: Variant,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("need 1 <= k <= n <= 8 for the honest scenario, got n={n}, k={k}")]
    BadHonest { n: usize, k: usize },
    #[error("the liar variant needs k = 0 and at least one child")]
    BadLiar,
    #[error("announcement rounds run from 1 to k-1, got round {0}")]
    BadRound(usize),
}

impl MuddyConfig {
    pub fn new(n: usize, k: usize, round: Round, variant: Variant) -> Result<Self, ConfigError> {
        match variant {
            Variant::Honest => {
                if !(1..=8).contains(&n) || k < 1 || k > n {
                    return Err(ConfigError::BadHonest { n, k });
                }
                if let Round::AfterRound(r) = round {
                    if r < 1 || r + 1 > k {
                        return Err(ConfigError::BadRound(r));
                    }
                }
            }
            Variant::Liar => {
                if k != 0 || n == 0 {
                    return Err(ConfigError::BadLiar);
                }
                if let Round::AfterRound(r) = round {
                    return Err(ConfigError::BadRound(r));
                }
            }
        }
        Ok(MuddyConfig { n, k, round, variant })
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let raw: MuddyConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        MuddyConfig::new(raw.n, raw.k, raw.round, raw.variant).map_err(|e| e.to_string())
    }

    /// The real state: the set of muddy children.
    fn true_state(&self) -> Vec<usize> {
        (1..=self.k).collect()
    }
}

/// The atom naming the state where exactly the children in `set` are muddy.
pub fn state_atom(set: &[usize]) -> String {
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let inner: Vec<String> = sorted.iter().map(|c| c.to_string()).collect();
    format!("s{{{}}}", inner.join(","))
}

pub fn child_agent(i: usize) -> Agent {
    Agent::new(i.to_string())
}

/// Is the disjunct naming `set` eliminated at this round?
fn eliminated(round: &Round, set_size: usize) -> bool {
    match round {
        Round::BeforeFather => false,
        Round::AfterFather => set_size == 0,
        Round::AfterRound(r) => set_size <= *r,
    }
}

/// The states child `i` considers possible at state `set`, before any
/// announcements: the state itself, then the state with `i` flipped.
fn possibilities(i: usize, set: &[usize]) -> [Vec<usize>; 2] {
    let mut flipped = set.to_vec();
    if let Some(pos) = flipped.iter().position(|&c| c == i) {
        flipped.remove(pos);
    } else {
        flipped.push(i);
        flipped.sort_unstable();
    }
    [set.to_vec(), flipped]
}

/// The assumption rule for child `i` at state `set` under the round's
/// eliminations; `None` when every disjunct is eliminated.
fn rule_for(config: &MuddyConfig, i: usize, set: &[usize]) -> Option<AssumptionRule> {
    let disjuncts: Vec<Formula> = possibilities(i, set)
        .into_iter()
        .filter(|s| !eliminated(&config.round, s.len()))
        .map(|s| Formula::atom(state_atom(&s)))
        .collect();
    if disjuncts.is_empty() {
        return None;
    }
    let consequent = Formula::big_or(disjuncts);
    Some(
        AssumptionRule::new(child_agent(i), state_atom(set), consequent)
            .expect("disjunctions of atoms are valid consequents"),
    )
}

/// Assumption rules for the configuration: one per child for the true state
/// and for every state reachable from its consequents.
pub fn build_assumptions(config: &MuddyConfig) -> Vec<AssumptionRule> {
    let state = config.true_state();
    let mut states: Vec<Vec<usize>> = vec![state.clone()];
    for i in 1..=config.n {
        if let Some(rule) = rule_for(config, i, &state) {
            let mut atoms = Vec::new();
            rule.consequent.atoms(&mut atoms);
            for member in possibilities(i, &state) {
                if atoms.contains(&state_atom(&member)) && !states.contains(&member) {
                    states.push(member);
                }
            }
        }
    }
    let mut out = Vec::new();
    for reached in &states {
        for i in 1..=config.n {
            if let Some(rule) = rule_for(config, i, reached) {
                if !out.contains(&rule) {
                    out.push(rule);
                }
            }
        }
    }
    out
}

/// A query sequent with its expected search outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MuddyQuery {
    pub label: String,
    pub sequent: Sequent,
    pub expected_provable: bool,
}

fn single(atom: String) -> Context {
    Context::new(vec![Item::F(Formula::atom(atom))])
}

/// The scenario's query family at this configuration, expectations
/// included. Queries that the round has not yet settled are emitted as
/// negative controls.
pub fn build_queries(config: &MuddyConfig) -> Vec<MuddyQuery> {
    let mut out = Vec::new();
    let state = config.true_state();
    let s = || Formula::atom(state_atom(&state));
    match config.variant {
        Variant::Honest => {
            // the muddy children learn their state after round k-1; with a
            // single muddy child the father's announcement suffices
            let knows_at = config.k;
            let now = config.round.index();
            for i in 1..=config.k {
                let mut dropped = state.clone();
                dropped.retain(|&c| c != i);
                let hedge = Formula::or(s(), Formula::atom(state_atom(&dropped)));
                out.push(MuddyQuery {
                    label: format!("muddy-{i}-uncertain"),
                    sequent: Sequent::new(
                        single(state_atom(&state)),
                        Formula::box_(child_agent(i), hedge),
                    ),
                    expected_provable: true,
                });
                out.push(MuddyQuery {
                    label: format!("muddy-{i}-knows"),
                    sequent: Sequent::new(
                        single(state_atom(&state)),
                        Formula::box_(child_agent(i), s()),
                    ),
                    expected_provable: now >= knows_at,
                });
                for j in 1..=config.k {
                    if i == j {
                        continue;
                    }
                    let inner = Formula::box_(child_agent(j), s());
                    let both = Formula::and(
                        Formula::box_(child_agent(i), s()),
                        Formula::box_(child_agent(i), inner),
                    );
                    out.push(MuddyQuery {
                        label: format!("muddy-{i}-knows-that-{j}-knows"),
                        sequent: Sequent::new(single(state_atom(&state)), both),
                        expected_provable: now >= knows_at,
                    });
                }
            }
            for w in config.k + 1..=config.n {
                let mut added = state.clone();
                added.push(w);
                added.sort_unstable();
                let hedge = Formula::or(s(), Formula::atom(state_atom(&added)));
                out.push(MuddyQuery {
                    label: format!("clean-{w}-uncertain"),
                    sequent: Sequent::new(
                        single(state_atom(&state)),
                        Formula::box_(child_agent(w), hedge),
                    ),
                    expected_provable: true,
                });
                // a clean child never learns the exact state
                out.push(MuddyQuery {
                    label: format!("clean-{w}-never-knows"),
                    sequent: Sequent::new(
                        single(state_atom(&state)),
                        Formula::box_(child_agent(w), s()),
                    ),
                    expected_provable: false,
                });
            }
        }
        Variant::Liar => {
            let announced = config.round.index() >= 1;
            for i in 1..=config.n {
                out.push(MuddyQuery {
                    label: format!("liar-{i}-misled"),
                    sequent: Sequent::new(
                        single(state_atom(&[])),
                        Formula::box_(child_agent(i), Formula::atom(state_atom(&[i]))),
                    ),
                    expected_provable: announced,
                });
                // the child cannot see its own forehead, so the true state
                // is never information it holds, lied to or not
                out.push(MuddyQuery {
                    label: format!("liar-{i}-never-sure"),
                    sequent: Sequent::new(
                        single(state_atom(&[])),
                        Formula::box_(child_agent(i), Formula::atom(state_atom(&[]))),
                    ),
                    expected_provable: false,
                });
            }
        }
    }
    out
}

/// The assumption set in the line format used by the command-line tools:
/// one `assn <agent> <atom> => <atom> | <atom> | ...` per line.
pub fn export_assumptions(rules: &[AssumptionRule]) -> String {
    let mut out = String::new();
    for rule in rules {
        out.push_str(&rule.to_string());
        out.push('\n');
    }
    out
}

/// Parse the line format produced by [`export_assumptions`]. Blank lines
/// and `#` comments are ignored.
pub fn parse_assumptions(text: &str) -> Result<Vec<AssumptionRule>, String> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: &str| format!("line {}: {msg}", lineno + 1);
        let rest = line
            .strip_prefix("assn")
            .ok_or_else(|| err("expected a line starting with `assn`"))?
            .trim_start();
        let (head, consequent) = rest.split_once("=>").ok_or_else(|| err("missing `=>`"))?;
        let mut words = head.split_whitespace();
        let agent = words.next().ok_or_else(|| err("missing agent"))?;
        let trigger = words.next().ok_or_else(|| err("missing trigger atom"))?;
        if words.next().is_some() {
            return Err(err("too many tokens before `=>`"));
        }
        let consequent =
            crate::syntax::parse_formula(consequent.trim()).map_err(|e| err(&e.to_string()))?;
        let rule = AssumptionRule::new(Agent::new(agent), trigger, consequent)
            .map_err(|e| err(&e.to_string()))?;
        out.push(rule);
    }
    Ok(out)
}
