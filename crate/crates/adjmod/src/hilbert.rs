//! The Hilbert-style presentation on sequents `m |- m'`: axiom schemas, the
//! five rules, and a step checker.
//!
//! Axioms (one agent variable `A`, formula variables `m`, `m'`, `m''`):
//!
//! ```text
//! m |- m        bot |- m        m |- top
//! m & (m' | m'') |- (m & m') | (m & m'')
//! m |- m | m'   m' |- m | m'    m & m' |- m    m & m' |- m'
//! <A>(m | m') |- <A>(m) | <A>(m')        <A>(bot) |- bot
//! [A](m) & [A](m') |- [A](m & m')        top |- [A](top)
//! <A>([A](m)) |- m                        m |- [A](<A>(m))
//! ```
//!
//! Rules: `cut` (transitivity), `or` (case split on the left), `and`
//! (pairing on the right), `dia` and `box` (monotonicity of the two
//! modalities).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{parse_formula, Agent, Formula};

/// A schema formula over formula variables `0..3` and one agent variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pattern {
    Var(u8),
    Bot,
    Top,
    And(Box<Pattern>, Box<Pattern>),
    Or(Box<Pattern>, Box<Pattern>),
    Dia(Box<Pattern>),
    Box_(Box<Pattern>),
}

impl Pattern {
    fn and(l: Pattern, r: Pattern) -> Pattern {
        Pattern::And(Box::new(l), Box::new(r))
    }

    fn or(l: Pattern, r: Pattern) -> Pattern {
        Pattern::Or(Box::new(l), Box::new(r))
    }

    fn dia(p: Pattern) -> Pattern {
        Pattern::Dia(Box::new(p))
    }

    fn box_(p: Pattern) -> Pattern {
        Pattern::Box_(Box::new(p))
    }

    fn var_count(&self) -> u8 {
        match self {
            Pattern::Var(v) => v + 1,
            Pattern::Bot | Pattern::Top => 0,
            Pattern::And(l, r) | Pattern::Or(l, r) => l.var_count().max(r.var_count()),
            Pattern::Dia(b) | Pattern::Box_(b) => b.var_count(),
        }
    }

    fn uses_agent(&self) -> bool {
        match self {
            Pattern::Var(_) | Pattern::Bot | Pattern::Top => false,
            Pattern::And(l, r) | Pattern::Or(l, r) => l.uses_agent() || r.uses_agent(),
            Pattern::Dia(_) | Pattern::Box_(_) => true,
        }
    }

    fn instantiate(&self, vars: &[Formula], agent: &Agent) -> Formula {
        match self {
            Pattern::Var(v) => vars[*v as usize].clone(),
            Pattern::Bot => Formula::Bot,
            Pattern::Top => Formula::Top,
            Pattern::And(l, r) => {
                Formula::and(l.instantiate(vars, agent), r.instantiate(vars, agent))
            }
            Pattern::Or(l, r) => {
                Formula::or(l.instantiate(vars, agent), r.instantiate(vars, agent))
            }
            Pattern::Dia(b) => Formula::dia(agent.clone(), b.instantiate(vars, agent)),
            Pattern::Box_(b) => Formula::box_(agent.clone(), b.instantiate(vars, agent)),
        }
    }

    fn matches(&self, f: &Formula, binding: &mut Binding) -> bool {
        match (self, f) {
            (Pattern::Var(v), _) => match &binding.vars[*v as usize] {
                Some(bound) => bound == f,
                None => {
                    binding.vars[*v as usize] = Some(f.clone());
                    true
                }
            },
            (Pattern::Bot, Formula::Bot) | (Pattern::Top, Formula::Top) => true,
            (Pattern::And(pl, pr), Formula::And(fl, fr))
            | (Pattern::Or(pl, pr), Formula::Or(fl, fr)) => {
                pl.matches(fl, binding) && pr.matches(fr, binding)
            }
            (Pattern::Dia(pb), Formula::Dia(a, fb)) | (Pattern::Box_(pb), Formula::Box_(a, fb)) => {
                match &binding.agent {
                    Some(bound) if bound != a => false,
                    Some(_) => pb.matches(fb, binding),
                    None => {
                        binding.agent = Some(a.clone());
                        pb.matches(fb, binding)
                    }
                }
            }
            _ => false,
        }
    }
}

#[derive(Default)]
struct Binding {
    vars: [Option<Formula>; 3],
    agent: Option<Agent>,
}

/// One axiom schema of the system.
#[derive(Clone, Debug)]
pub struct AxiomSchema {
    pub name: &'static str,
    pub lhs: Pattern,
    pub rhs: Pattern,
}

impl AxiomSchema {
    /// Does `lhs |- rhs` instantiate this schema?
    pub fn matches(&self, lhs: &Formula, rhs: &Formula) -> bool {
        let mut binding = Binding::default();
        self.lhs.matches(lhs, &mut binding) && self.rhs.matches(rhs, &mut binding)
    }
}

/// All axiom schemas of the system.
pub fn axiom_schemas() -> Vec<AxiomSchema> {
    use Pattern as P;
    let m = || P::Var(0);
    let m1 = || P::Var(1);
    let m2 = || P::Var(2);
    vec![
        AxiomSchema { name: "identity", lhs: m(), rhs: m() },
        AxiomSchema { name: "bot-least", lhs: P::Bot, rhs: m() },
        AxiomSchema { name: "top-greatest", lhs: m(), rhs: P::Top },
        AxiomSchema {
            name: "distributivity",
            lhs: P::and(m(), P::or(m1(), m2())),
            rhs: P::or(P::and(m(), m1()), P::and(m(), m2())),
        },
        AxiomSchema { name: "or-upper-left", lhs: m(), rhs: P::or(m(), m1()) },
        AxiomSchema { name: "or-upper-right", lhs: m1(), rhs: P::or(m(), m1()) },
        AxiomSchema { name: "and-lower-left", lhs: P::and(m(), m1()), rhs: m() },
        AxiomSchema { name: "and-lower-right", lhs: P::and(m(), m1()), rhs: m1() },
        AxiomSchema {
            name: "dia-join",
            lhs: P::dia(P::or(m(), m1())),
            rhs: P::or(P::dia(m()), P::dia(m1())),
        },
        AxiomSchema { name: "dia-bot", lhs: P::dia(P::Bot), rhs: P::Bot },
        AxiomSchema {
            name: "box-meet",
            lhs: P::and(P::box_(m()), P::box_(m1())),
            rhs: P::box_(P::and(m(), m1())),
        },
        AxiomSchema { name: "box-top", lhs: P::Top, rhs: P::box_(P::Top) },
        AxiomSchema { name: "counit", lhs: P::dia(P::box_(m())), rhs: m() },
        AxiomSchema { name: "unit", lhs: m(), rhs: P::box_(P::dia(m())) },
    ]
}

/// Every schema instantiated with all combinations of the given atoms (as
/// formula variables) and agents, duplicates removed.
pub fn axiom_instances(atoms: &[String], agents: &[Agent]) -> Vec<(Formula, Formula)> {
    assert!(!atoms.is_empty() && !agents.is_empty());
    let mut out: Vec<(Formula, Formula)> = Vec::new();
    let formulas: Vec<Formula> = atoms.iter().map(Formula::atom).collect();
    for schema in axiom_schemas() {
        let vars = schema.lhs.var_count().max(schema.rhs.var_count()) as usize;
        let agent_choices: &[Agent] =
            if schema.lhs.uses_agent() || schema.rhs.uses_agent() { agents } else { &agents[..1] };
        let mut choice = vec![0usize; vars];
        loop {
            let assignment: Vec<Formula> = choice.iter().map(|&i| formulas[i].clone()).collect();
            for agent in agent_choices {
                let inst = (
                    schema.lhs.instantiate(&assignment, agent),
                    schema.rhs.instantiate(&assignment, agent),
                );
                if !out.contains(&inst) {
                    out.push(inst);
                }
            }
            let mut pos = 0;
            loop {
                if pos == vars {
                    break;
                }
                choice[pos] += 1;
                if choice[pos] < formulas.len() {
                    break;
                }
                choice[pos] = 0;
                pos += 1;
            }
            if vars == 0 || pos == vars {
                break;
            }
        }
    }
    out
}

/// Justification of one step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum HilbertJustification {
    /// An instance of the named axiom schema.
    Axiom { schema: String },
    /// From `a |- b` and `b |- c`, conclude `a |- c`.
    Cut { first: usize, second: usize },
    /// From `a |- c` and `b |- c`, conclude `a | b |- c`.
    Or { first: usize, second: usize },
    /// From `a |- b` and `a |- c`, conclude `a |- b & c`.
    And { first: usize, second: usize },
    /// From `a |- b`, conclude `<A>(a) |- <A>(b)`.
    Dia { premiss: usize },
    /// From `a |- b`, conclude `[A](a) |- [A](b)`.
    Box { premiss: usize },
}

/// One line of a Hilbert derivation: the sequent `lhs |- rhs` and how it
/// was obtained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HilbertStep {
    pub lhs: Formula,
    pub rhs: Formula,
    pub justification: HilbertJustification,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HilbertDerivation {
    pub steps: Vec<HilbertStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("step {step}: {reason}")]
pub struct HilbertRejection {
    pub step: usize,
    pub reason: String,
}

/// Validate every step's justification.
pub fn check_hilbert(derivation: &HilbertDerivation) -> Result<(), HilbertRejection> {
    let schemas = axiom_schemas();
    for (index, step) in derivation.steps.iter().enumerate() {
        let reject = |reason: String| HilbertRejection { step: index, reason };
        let earlier = |i: usize| -> Result<&HilbertStep, HilbertRejection> {
            if i >= index {
                return Err(reject(format!("premiss {i} does not precede step {index}")));
            }
            Ok(&derivation.steps[i])
        };
        match &step.justification {
            HilbertJustification::Axiom { schema } => {
                let Some(s) = schemas.iter().find(|s| s.name == schema) else {
                    return Err(reject(format!("unknown axiom schema `{schema}`")));
                };
                if !s.matches(&step.lhs, &step.rhs) {
                    return Err(reject(format!(
                        "`{} |- {}` is not an instance of `{schema}`",
                        step.lhs, step.rhs
                    )));
                }
            }
            HilbertJustification::Cut { first, second } => {
                let (a, b) = (earlier(*first)?, earlier(*second)?);
                if a.rhs != b.lhs || a.lhs != step.lhs || b.rhs != step.rhs {
                    return Err(reject("cut premisses do not compose".into()));
                }
            }
            HilbertJustification::Or { first, second } => {
                let (a, b) = (earlier(*first)?, earlier(*second)?);
                let want = Formula::or(a.lhs.clone(), b.lhs.clone());
                if a.rhs != b.rhs || step.lhs != want || step.rhs != a.rhs {
                    return Err(reject("or-rule premisses do not fit".into()));
                }
            }
            HilbertJustification::And { first, second } => {
                let (a, b) = (earlier(*first)?, earlier(*second)?);
                let want = Formula::and(a.rhs.clone(), b.rhs.clone());
                if a.lhs != b.lhs || step.lhs != a.lhs || step.rhs != want {
                    return Err(reject("and-rule premisses do not fit".into()));
                }
            }
            HilbertJustification::Dia { premiss } => {
                let p = earlier(*premiss)?;
                let ok = matches!(
                    (&step.lhs, &step.rhs),
                    (Formula::Dia(a1, b1), Formula::Dia(a2, b2))
                        if a1 == a2 && **b1 == p.lhs && **b2 == p.rhs
                );
                if !ok {
                    return Err(reject(format!(
                        "`{} |- {}` is not the dia rule applied to `{} |- {}`",
                        step.lhs, step.rhs, p.lhs, p.rhs
                    )));
                }
            }
            HilbertJustification::Box { premiss } => {
                let p = earlier(*premiss)?;
                let ok = matches!(
                    (&step.lhs, &step.rhs),
                    (Formula::Box_(a1, b1), Formula::Box_(a2, b2))
                        if a1 == a2 && **b1 == p.lhs && **b2 == p.rhs
                );
                if !ok {
                    return Err(reject(format!(
                        "`{} |- {}` is not the box rule applied to `{} |- {}`",
                        step.lhs, step.rhs, p.lhs, p.rhs
                    )));
                }
            }
        }
        let _ = reject;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct StepDto {
    sequent: String,
    #[serde(flatten)]
    justification: HilbertJustification,
}

#[derive(Debug, Error)]
pub enum HilbertCodecError {
    #[error("bad JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("step {step}: `{text}` is not of the form `m |- m'`: {message}")]
    Step { step: usize, text: String, message: String },
}

impl HilbertDerivation {
    pub fn to_json(&self) -> String {
        let steps: Vec<StepDto> = self
            .steps
            .iter()
            .map(|s| StepDto {
                sequent: format!("{} |- {}", s.lhs, s.rhs),
                justification: s.justification.clone(),
            })
            .collect();
        serde_json::to_string_pretty(&steps).expect("step DTOs serialize")
    }

    pub fn from_json(text: &str) -> Result<HilbertDerivation, HilbertCodecError> {
        let dtos: Vec<StepDto> = serde_json::from_str(text)?;
        let mut steps = Vec::with_capacity(dtos.len());
        for (i, dto) in dtos.into_iter().enumerate() {
            let err = |message: String| HilbertCodecError::Step {
                step: i,
                text: dto.sequent.clone(),
                message,
            };
            let sequent =
                crate::syntax::parse_sequent(&dto.sequent).map_err(|e| err(e.to_string()))?;
            let [crate::syntax::Item::F(lhs)] = &sequent.antecedent.items[..] else {
                return Err(err("the antecedent must be a single formula".into()));
            };
            steps.push(HilbertStep {
                lhs: lhs.clone(),
                rhs: sequent.succedent,
                justification: dto.justification,
            });
        }
        Ok(HilbertDerivation { steps })
    }
}

/// Convenience for tests and the examples: an axiom step.
pub fn axiom_step(schema: &str, lhs: &str, rhs: &str) -> HilbertStep {
    HilbertStep {
        lhs: parse_formula(lhs).expect("well-formed lhs"),
        rhs: parse_formula(rhs).expect("well-formed rhs"),
        justification: HilbertJustification::Axiom { schema: schema.into() },
    }
}
