//! Finite ordered Kripke structures: evaluation, exhaustive enumeration and
//! countermodel search.
//!
//! A frame is a set of worlds with a partial order `≤` and one accessibility
//! relation per agent satisfying (writing composition left to right)
//!
//! ```text
//! ≤ ∘ R⁻¹ ∘ ≤  ⊆  R⁻¹        and        ≥ ∘ R ∘ ≥  ⊆  R
//! ```
//!
//! Satisfaction of the modalities:
//!
//! - `w ⊨ <A>(m)`  iff some `v` with `w R_A⁻¹ v` (that is, `v R_A w`) has `v ⊨ m`;
//! - `w ⊨ [A](m)`  iff every `v` with `w R_A v` has `v ⊨ m`.
//!
//! Valuations are required to be downward closed with respect to `≤`, which
//! matches the algebra of downward-closed subsets: evaluation of any formula
//! then lands in a downset, and the Kripke and lattice oracles agree.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{Agent, Formula, Sequent};

/// Bitmask over worlds; supports up to 32 worlds.
pub type WorldSet = u32;

/// A binary relation as per-world successor masks.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Relation {
    pub rows: Vec<WorldSet>,
}

impl Relation {
    pub fn empty(n: usize) -> Self {
        Relation { rows: vec![0; n] }
    }

    pub fn identity(n: usize) -> Self {
        Relation { rows: (0..n).map(|w| 1 << w).collect() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.rows[a] & (1 << b) != 0
    }

    pub fn insert(&mut self, a: usize, b: usize) {
        self.rows[a] |= 1 << b;
    }

    pub fn transpose(&self) -> Relation {
        let n = self.rows.len();
        let mut out = Relation::empty(n);
        for a in 0..n {
            for b in 0..n {
                if self.contains(a, b) {
                    out.insert(b, a);
                }
            }
        }
        out
    }

    /// `x (self ∘ other) z` iff some `y` has `x self y` and `y other z`.
    pub fn compose(&self, other: &Relation) -> Relation {
        let n = self.rows.len();
        let mut out = Relation::empty(n);
        for x in 0..n {
            let mut row = 0;
            for y in 0..n {
                if self.contains(x, y) {
                    row |= other.rows[y];
                }
            }
            out.rows[x] = row;
        }
        out
    }

    pub fn subset(&self, other: &Relation) -> bool {
        self.rows.iter().zip(&other.rows).all(|(a, b)| a & !b == 0)
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.rows.len();
        (0..n)
            .flat_map(|a| (0..n).filter(move |&b| self.contains(a, b)).map(move |b| (a, b)))
            .collect()
    }

    /// Image of a set of worlds: `{ w | ∃v ∈ s, v self w }`.
    pub fn image(&self, s: WorldSet) -> WorldSet {
        let mut out = 0;
        for (v, row) in self.rows.iter().enumerate() {
            if s & (1 << v) != 0 {
                out |= row;
            }
        }
        out
    }

    /// `{ w | rows[w] ⊆ s }`.
    pub fn preimage_all(&self, s: WorldSet) -> WorldSet {
        let mut out = 0;
        for (w, row) in self.rows.iter().enumerate() {
            if row & !s == 0 {
                out |= 1 << w;
            }
        }
        out
    }
}

/// An ordered multi-modal frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KripkeFrame {
    pub worlds: usize,
    /// the partial order `≤`; `order.contains(a, b)` means `a ≤ b`
    pub order: Relation,
    /// accessibility per agent, in a fixed agent order
    pub rel: Vec<(Agent, Relation)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameViolation {
    #[error("order is not reflexive at world {0}")]
    NotReflexive(usize),
    #[error("order is not transitive")]
    NotTransitive,
    #[error("order is not antisymmetric between worlds {0} and {1}")]
    NotAntisymmetric(usize, usize),
    #[error("agent {0}: ≤ ∘ R⁻¹ ∘ ≤ is not contained in R⁻¹")]
    ConverseCondition(Agent),
    #[error("agent {0}: ≥ ∘ R ∘ ≥ is not contained in R")]
    DirectCondition(Agent),
    #[error("valuation of `{0}` is not downward closed")]
    NotDownclosed(String),
}

pub fn is_partial_order(order: &Relation) -> Result<(), FrameViolation> {
    let n = order.len();
    for w in 0..n {
        if !order.contains(w, w) {
            return Err(FrameViolation::NotReflexive(w));
        }
    }
    if !order.compose(order).subset(order) {
        return Err(FrameViolation::NotTransitive);
    }
    for a in 0..n {
        for b in 0..a {
            if order.contains(a, b) && order.contains(b, a) {
                return Err(FrameViolation::NotAntisymmetric(a, b));
            }
        }
    }
    Ok(())
}

impl KripkeFrame {
    /// Check the order axioms and both frame conditions.
    pub fn validate(&self) -> Result<(), FrameViolation> {
        is_partial_order(&self.order)?;
        let geq = self.order.transpose();
        for (agent, r) in &self.rel {
            let rinv = r.transpose();
            if !self.order.compose(&rinv).compose(&self.order).subset(&rinv) {
                return Err(FrameViolation::ConverseCondition(agent.clone()));
            }
            if !geq.compose(r).compose(&geq).subset(r) {
                return Err(FrameViolation::DirectCondition(agent.clone()));
            }
        }
        Ok(())
    }

    pub fn relation(&self, agent: &Agent) -> Option<&Relation> {
        self.rel.iter().find(|(a, _)| a == agent).map(|(_, r)| r)
    }

    /// Worlds below some member of `s`: the downward closure.
    pub fn down_closure(&self, s: WorldSet) -> WorldSet {
        // order.rows[a] is everything above a
        let mut out = 0;
        for a in 0..self.worlds {
            if self.order.rows[a] & s != 0 {
                out |= 1 << a;
            }
        }
        out
    }

    pub fn is_downclosed(&self, s: WorldSet) -> bool {
        self.down_closure(s) == s
    }

    /// All downward-closed subsets, ascending as bit patterns.
    pub fn downsets(&self) -> Vec<WorldSet> {
        let all: WorldSet = if self.worlds == 32 { !0 } else { (1 << self.worlds) - 1 };
        (0..=all).filter(|&s| self.is_downclosed(s)).collect()
    }
}

/// A frame plus a valuation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KripkeStructure {
    pub frame: KripkeFrame,
    /// atom -> set of worlds where it holds, in a fixed atom order
    pub valuation: Vec<(String, WorldSet)>,
}

impl KripkeStructure {
    pub fn validate(&self) -> Result<(), FrameViolation> {
        self.frame.validate()?;
        for (atom, set) in &self.valuation {
            if !self.frame.is_downclosed(*set) {
                return Err(FrameViolation::NotDownclosed(atom.clone()));
            }
        }
        Ok(())
    }

    pub fn atom_set(&self, atom: &str) -> Option<WorldSet> {
        self.valuation.iter().find(|(a, _)| a == atom).map(|(_, s)| *s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no valuation entry for atom `{0}`")]
    UnknownAtom(String),
    #[error("no accessibility relation for agent `{0}`")]
    UnknownAgent(Agent),
}

/// The set of worlds satisfying `formula`.
pub fn sat_set(structure: &KripkeStructure, formula: &Formula) -> Result<WorldSet, EvalError> {
    let all: WorldSet =
        if structure.frame.worlds == 32 { !0 } else { (1 << structure.frame.worlds) - 1 };
    match formula {
        Formula::Top => Ok(all),
        Formula::Bot => Ok(0),
        Formula::Atom(p) => structure.atom_set(p).ok_or_else(|| EvalError::UnknownAtom(p.clone())),
        Formula::And(l, r) => Ok(sat_set(structure, l)? & sat_set(structure, r)?),
        Formula::Or(l, r) => Ok(sat_set(structure, l)? | sat_set(structure, r)?),
        Formula::Dia(a, b) => {
            let r =
                structure.frame.relation(a).ok_or_else(|| EvalError::UnknownAgent(a.clone()))?;
            Ok(r.image(sat_set(structure, b)?))
        }
        Formula::Box_(a, b) => {
            let r =
                structure.frame.relation(a).ok_or_else(|| EvalError::UnknownAgent(a.clone()))?;
            Ok(r.preimage_all(sat_set(structure, b)?))
        }
    }
}

/// Does `formula` hold at `world`?
pub fn eval_kripke(
    structure: &KripkeStructure,
    world: usize,
    formula: &Formula,
) -> Result<bool, EvalError> {
    Ok(sat_set(structure, formula)? & (1 << world) != 0)
}

/// A sequent is true in a structure when every world satisfying the
/// antecedent's formula translation satisfies the succedent.
pub fn sequent_true_kripke(
    structure: &KripkeStructure,
    sequent: &Sequent,
) -> Result<bool, EvalError> {
    let ante = sat_set(structure, &sequent.antecedent.as_formula())?;
    let succ = sat_set(structure, &sequent.succedent)?;
    Ok(ante & !succ == 0)
}

/// Does the structure satisfy `<A>(p) ⇒ m''`, i.e. is every world
/// satisfying `<A>(p)` also a world of `m''`?
pub fn assumption_holds(
    structure: &KripkeStructure,
    assumption: &crate::calculus::AssumptionRule,
) -> Result<bool, EvalError> {
    let dia = sat_set(
        structure,
        &Formula::dia(assumption.agent.clone(), Formula::atom(assumption.trigger.clone())),
    )?;
    let cons = sat_set(structure, &assumption.consequent)?;
    Ok(dia & !cons == 0)
}

// ---------------------------------------------------------------------------
// enumeration
// ---------------------------------------------------------------------------

/// Enumeration limits: all world counts `1..=max_worlds` with exactly these
/// agents and atoms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelBounds {
    pub max_worlds: usize,
    pub agents: Vec<Agent>,
    pub atoms: Vec<String>,
}

impl ModelBounds {
    pub fn new(max_worlds: usize, agents: Vec<Agent>, atoms: Vec<String>) -> Self {
        assert!((1..=5).contains(&max_worlds), "world bound out of range");
        let mut agents = agents;
        agents.sort();
        agents.dedup();
        let mut atoms = atoms;
        atoms.sort();
        atoms.dedup();
        ModelBounds { max_worlds, agents, atoms }
    }

    /// Agents and atoms taken from the sequent.
    pub fn for_sequent(sequent: &Sequent, max_worlds: usize) -> Self {
        ModelBounds::new(max_worlds, sequent.agents(), sequent.atoms())
    }

    pub fn with_assumptions(mut self, assumptions: &[crate::calculus::AssumptionRule]) -> Self {
        for a in assumptions {
            self.agents.push(a.agent.clone());
            self.atoms.push(a.trigger.clone());
            a.consequent.atoms(&mut self.atoms);
        }
        self.agents.sort();
        self.agents.dedup();
        self.atoms.sort();
        self.atoms.dedup();
        self
    }
}

pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(cur.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, cur, out);
            if k.is_multiple_of(2) {
                cur.swap(i, k - 1);
            } else {
                cur.swap(0, k - 1);
            }
        }
    }
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    heap(n, &mut cur, &mut out);
    out
}

fn encode_relation(r: &Relation, perm: &[usize]) -> u64 {
    let n = r.len();
    let mut bits = 0u64;
    for a in 0..n {
        for b in 0..n {
            if r.contains(a, b) {
                bits |= 1 << (perm[a] * n + perm[b]);
            }
        }
    }
    bits
}

fn encode_frame(frame: &KripkeFrame, perm: &[usize]) -> Vec<u64> {
    let mut out = vec![encode_relation(&frame.order, perm)];
    out.extend(frame.rel.iter().map(|(_, r)| encode_relation(r, perm)));
    out
}

fn encode_valuation(valuation: &[(String, WorldSet)], perm: &[usize]) -> Vec<u64> {
    valuation
        .iter()
        .map(|(_, set)| {
            let mut bits = 0u64;
            for (w, &target) in perm.iter().enumerate() {
                if set & (1 << w) != 0 {
                    bits |= 1 << target;
                }
            }
            bits
        })
        .collect()
}

fn all_relations(n: usize) -> Vec<Relation> {
    let cells = n * n;
    (0..(1u64 << cells))
        .map(|bits| {
            let mut r = Relation::empty(n);
            for a in 0..n {
                for b in 0..n {
                    if bits & (1 << (a * n + b)) != 0 {
                        r.insert(a, b);
                    }
                }
            }
            r
        })
        .collect()
}

pub(crate) fn partial_orders(n: usize) -> Vec<Relation> {
    all_relations(n).into_iter().filter(|r| is_partial_order(r).is_ok()).collect()
}

pub(crate) fn valid_accessibility(order: &Relation) -> Vec<Relation> {
    let geq = order.transpose();
    all_relations(order.len())
        .into_iter()
        .filter(|r| geq.compose(r).compose(&geq).subset(r))
        .collect()
}

/// Iterate over the cartesian product of `k` choices from `0..len`,
/// returning `false` when exhausted.
fn advance(choice: &mut [usize], len: usize) -> bool {
    for slot in choice.iter_mut() {
        *slot += 1;
        if *slot < len {
            return true;
        }
        *slot = 0;
    }
    false
}

/// Frames with `1..=max_worlds` worlds, one representative per isomorphism
/// class (the least adjacency encoding), each paired with its automorphism
/// group.
pub fn canonical_frames(bounds: &ModelBounds) -> Vec<(KripkeFrame, Vec<Vec<usize>>)> {
    let mut out = Vec::new();
    for n in 1..=bounds.max_worlds {
        let perms = permutations(n);
        for order in partial_orders(n) {
            let access = valid_accessibility(&order);
            let k = bounds.agents.len();
            let mut choice = vec![0usize; k];
            loop {
                let frame = KripkeFrame {
                    worlds: n,
                    order: order.clone(),
                    rel: bounds
                        .agents
                        .iter()
                        .zip(&choice)
                        .map(|(a, &i)| (a.clone(), access[i].clone()))
                        .collect(),
                };
                let own = encode_frame(&frame, &perms[0]);
                debug_assert!(is_identity(&perms[0]));
                let mut minimal = true;
                let mut autos = Vec::new();
                for perm in &perms {
                    let enc = encode_frame(&frame, perm);
                    if enc < own {
                        minimal = false;
                        break;
                    }
                    if enc == own {
                        autos.push(perm.clone());
                    }
                }
                if minimal {
                    debug_assert!(frame.validate().is_ok());
                    out.push((frame, autos));
                }
                if k == 0 || !advance(&mut choice, access.len()) {
                    break;
                }
            }
        }
    }
    out
}

fn is_identity(perm: &[usize]) -> bool {
    perm.iter().enumerate().all(|(i, &p)| i == p)
}

/// All structures over one canonical frame, one representative per orbit of
/// the frame's automorphism group.
pub fn structures_of_frame(
    frame: &KripkeFrame,
    autos: &[Vec<usize>],
    atoms: &[String],
) -> Vec<KripkeStructure> {
    let downsets = frame.downsets();
    let k = atoms.len();
    let mut out = Vec::new();
    let mut choice = vec![0usize; k];
    loop {
        let valuation: Vec<(String, WorldSet)> =
            atoms.iter().zip(&choice).map(|(a, &i)| (a.clone(), downsets[i])).collect();
        let canonical = if autos.len() <= 1 {
            true
        } else {
            let own = encode_valuation(&valuation, &(0..frame.worlds).collect::<Vec<_>>());
            autos.iter().all(|perm| encode_valuation(&valuation, perm) >= own)
        };
        if canonical {
            out.push(KripkeStructure { frame: frame.clone(), valuation });
        }
        if k == 0 || !advance(&mut choice, downsets.len()) {
            break;
        }
    }
    out
}

/// Every structure within the bounds, exactly once up to world relabeling.
pub fn enumerate_structures(bounds: &ModelBounds) -> impl Iterator<Item = KripkeStructure> + '_ {
    canonical_frames(bounds)
        .into_iter()
        .flat_map(move |(frame, autos)| structures_of_frame(&frame, &autos, &bounds.atoms))
}

/// A countermodel: a structure and a world where the antecedent translation
/// holds but the succedent fails.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Countermodel {
    pub structure: KripkeStructure,
    pub witness: usize,
}

/// Search the bounded model space for a countermodel to `sequent`.
pub fn find_countermodel(sequent: &Sequent, bounds: &ModelBounds) -> Option<Countermodel> {
    find_countermodel_where(sequent, bounds, &[])
}

/// As [`find_countermodel`], restricted to structures satisfying every
/// assumption: a witness then refutes the sequent relative to the
/// assumption set.
pub fn find_countermodel_where(
    sequent: &Sequent,
    bounds: &ModelBounds,
    assumptions: &[crate::calculus::AssumptionRule],
) -> Option<Countermodel> {
    find_countermodel_where_cancellable(sequent, bounds, assumptions, None)
}

/// As [`find_countermodel_where`], aborting early (returning `None`) once
/// `cancel` is raised.
pub fn find_countermodel_where_cancellable(
    sequent: &Sequent,
    bounds: &ModelBounds,
    assumptions: &[crate::calculus::AssumptionRule],
    cancel: Option<&std::sync::atomic::AtomicBool>,
) -> Option<Countermodel> {
    let ante = sequent.antecedent.as_formula();
    for structure in enumerate_structures(bounds) {
        if let Some(flag) = cancel {
            if flag.load(std::sync::atomic::Ordering::Relaxed) {
                return None;
            }
        }
        if !assumptions.iter().all(|a| assumption_holds(&structure, a).unwrap_or(false)) {
            continue;
        }
        let (sa, ss) = match (sat_set(&structure, &ante), sat_set(&structure, &sequent.succedent)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => continue,
        };
        let diff = sa & !ss;
        if diff != 0 {
            return Some(Countermodel { structure, witness: diff.trailing_zeros() as usize });
        }
    }
    None
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CountermodelDto {
    worlds: usize,
    order: Vec<(usize, usize)>,
    relations: BTreeMap<String, Vec<(usize, usize)>>,
    valuation: BTreeMap<String, Vec<usize>>,
    witness: usize,
}

fn worlds_of(set: WorldSet, n: usize) -> Vec<usize> {
    (0..n).filter(|&w| set & (1 << w) != 0).collect()
}

impl Countermodel {
    pub fn to_json(&self) -> String {
        let f = &self.structure.frame;
        let dto = CountermodelDto {
            worlds: f.worlds,
            order: f.order.pairs(),
            relations: f.rel.iter().map(|(a, r)| (a.as_str().to_string(), r.pairs())).collect(),
            valuation: self
                .structure
                .valuation
                .iter()
                .map(|(p, s)| (p.clone(), worlds_of(*s, f.worlds)))
                .collect(),
            witness: self.witness,
        };
        serde_json::to_string_pretty(&dto).expect("countermodel DTOs serialize")
    }
}

impl fmt::Display for Countermodel {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let f = &self.structure.frame;
        writeln!(
            out,
            "worlds: {}",
            (0..f.worlds).map(|w| format!("w{w}")).collect::<Vec<_>>().join(", ")
        )?;
        let strict: Vec<String> = f
            .order
            .pairs()
            .iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| format!("w{a} <= w{b}"))
            .collect();
        writeln!(
            out,
            "order: {}",
            if strict.is_empty() { "discrete".into() } else { strict.join(", ") }
        )?;
        for (agent, r) in &f.rel {
            let pairs: Vec<String> =
                r.pairs().iter().map(|(a, b)| format!("(w{a}, w{b})")).collect();
            writeln!(
                out,
                "R_{agent}: {}",
                if pairs.is_empty() { "empty".into() } else { pairs.join(", ") }
            )?;
        }
        for (atom, set) in &self.structure.valuation {
            let ws: Vec<String> =
                worlds_of(*set, f.worlds).iter().map(|w| format!("w{w}")).collect();
            writeln!(
                out,
                "{atom}: {}",
                if ws.is_empty() { "nowhere".into() } else { ws.join(", ") }
            )?;
        }
        write!(out, "fails at: w{}", self.witness)
    }
}
