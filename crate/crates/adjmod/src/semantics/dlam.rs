//! Finite bounded distributive lattices with agent-indexed adjoint modality
//! pairs, and the algebra of downward-closed subsets of a frame.
//!
//! A candidate structure stores its carrier, order and modal maps
//! explicitly; [`FiniteDlam::validate`] checks the lattice laws,
//! monotonicity and the adjunction `dia(x) ≤ y iff x ≤ box(y)` by
//! exhaustion, computes meet/join tables, and also verifies the laws those
//! axioms entail:
//!
//! - `dia` preserves joins and the bottom, `box` preserves meets and the top;
//! - `dia(x ∧ y) ≤ dia(x) ∧ dia(y)` and `box(x) ∨ box(y) ≤ box(x ∨ y)`;
//! - `dia(box(x)) ≤ x` and `x ≤ box(dia(x))`.
//!
//! A failure among the entailed laws with the axioms intact is reported as
//! an internal inconsistency rather than an ordinary violation.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::syntax::{Agent, Context, Formula, Item, Sequent};

use super::kripke::{KripkeFrame, KripkeStructure, WorldSet};

/// A finite lattice-with-modalities candidate. Elements are `0..size`;
/// `leq[a * size + b]` holds when `a ≤ b`; `dia`/`box_` give one table per
/// agent. `labels` is display-only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteDlam {
    pub size: usize,
    pub leq: Vec<bool>,
    pub dia: Vec<(Agent, Vec<usize>)>,
    pub box_: Vec<(Agent, Vec<usize>)>,
    pub labels: Option<Vec<String>>,
}

/// A law that failed, with witness elements.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LawViolation {
    #[error("order is not reflexive at {0}")]
    NotReflexive(usize),
    #[error("order is not transitive via {0}, {1}, {2}")]
    NotTransitive(usize, usize, usize),
    #[error("order is not antisymmetric between {0} and {1}")]
    NotAntisymmetric(usize, usize),
    #[error("elements {0}, {1} have no meet")]
    NoMeet(usize, usize),
    #[error("elements {0}, {1} have no join")]
    NoJoin(usize, usize),
    #[error("no top element")]
    NoTop,
    #[error("no bottom element")]
    NoBottom,
    #[error("meet does not distribute over join at {0}, {1}, {2}")]
    NotDistributive(usize, usize, usize),
    #[error("agent {0}: dia is not monotone between {1} and {2}")]
    DiaNotMonotone(Agent, usize, usize),
    #[error("agent {0}: box is not monotone between {1} and {2}")]
    BoxNotMonotone(Agent, usize, usize),
    #[error("agent {0}: adjunction fails at ({1}, {2})")]
    AdjunctionFails(Agent, usize, usize),
    #[error("agent {0}: missing box table")]
    MissingBoxTable(Agent),
    #[error("agent {0}: modal table has wrong length")]
    BadTableLength(Agent),
    #[error("agent {0}: dia does not preserve joins at ({1}, {2}) [entailed law]")]
    DiaJoin(Agent, usize, usize),
    #[error("agent {0}: box does not preserve meets at ({1}, {2}) [entailed law]")]
    BoxMeet(Agent, usize, usize),
    #[error("agent {0}: dia(x & y) exceeds dia(x) & dia(y) at ({1}, {2}) [entailed law]")]
    DiaMeetBound(Agent, usize, usize),
    #[error("agent {0}: box(x) | box(y) exceeds box(x | y) at ({1}, {2}) [entailed law]")]
    BoxJoinBound(Agent, usize, usize),
    #[error("agent {0}: dia(bot) is not bot [entailed law]")]
    DiaBot(Agent),
    #[error("agent {0}: box(top) is not top [entailed law]")]
    BoxTop(Agent),
    #[error("agent {0}: dia(box(x)) is not below x at {1} [entailed law]")]
    Counit(Agent, usize),
    #[error("agent {0}: x is not below box(dia(x)) at {1} [entailed law]")]
    Unit(Agent, usize),
}

impl LawViolation {
    /// True for laws that follow from the axioms; their failure alongside
    /// passing axioms means the validator itself is inconsistent.
    pub fn is_entailed_law(&self) -> bool {
        matches!(
            self,
            LawViolation::DiaJoin(..)
                | LawViolation::BoxMeet(..)
                | LawViolation::DiaMeetBound(..)
                | LawViolation::BoxJoinBound(..)
                | LawViolation::DiaBot(..)
                | LawViolation::BoxTop(..)
                | LawViolation::Counit(..)
                | LawViolation::Unit(..)
        )
    }
}

/// Meet/join tables and the bounds of a validated lattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DlamOps {
    pub meet: Vec<usize>,
    pub join: Vec<usize>,
    pub top: usize,
    pub bot: usize,
}

/// A [`FiniteDlam`] that passed validation, with its operation tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidatedDlam {
    pub dlam: FiniteDlam,
    pub ops: DlamOps,
}

impl FiniteDlam {
    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.leq[a * self.size + b]
    }

    fn dia_table(&self, agent: &Agent) -> Option<&[usize]> {
        self.dia.iter().find(|(a, _)| a == agent).map(|(_, t)| t.as_slice())
    }

    fn box_table(&self, agent: &Agent) -> Option<&[usize]> {
        self.box_.iter().find(|(a, _)| a == agent).map(|(_, t)| t.as_slice())
    }

    /// All violated laws; empty means the candidate is a genuine structure.
    pub fn violations(&self) -> Vec<LawViolation> {
        let mut out = Vec::new();
        let n = self.size;

        for a in 0..n {
            if !self.leq(a, a) {
                out.push(LawViolation::NotReflexive(a));
            }
        }
        'trans: for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if self.leq(a, b) && self.leq(b, c) && !self.leq(a, c) {
                        out.push(LawViolation::NotTransitive(a, b, c));
                        break 'trans;
                    }
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                if self.leq(a, b) && self.leq(b, a) {
                    out.push(LawViolation::NotAntisymmetric(a, b));
                }
            }
        }
        if !out.is_empty() {
            return out; // bound computations need a genuine order
        }

        let ops = match self.compute_ops() {
            Ok(ops) => ops,
            Err(mut e) => {
                out.append(&mut e);
                return out;
            }
        };

        let meet = |a: usize, b: usize| ops.meet[a * n + b];
        let join = |a: usize, b: usize| ops.join[a * n + b];
        'dist: for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if meet(a, join(b, c)) != join(meet(a, b), meet(a, c)) {
                        out.push(LawViolation::NotDistributive(a, b, c));
                        break 'dist;
                    }
                }
            }
        }

        for (agent, dia) in &self.dia {
            let Some(box_) = self.box_table(agent) else {
                out.push(LawViolation::MissingBoxTable(agent.clone()));
                continue;
            };
            if dia.len() != n || box_.len() != n || dia.iter().chain(box_).any(|&x| x >= n) {
                out.push(LawViolation::BadTableLength(agent.clone()));
                continue;
            }
            let mut axioms_ok = true;
            'mono: for a in 0..n {
                for b in 0..n {
                    if self.leq(a, b) {
                        if !self.leq(dia[a], dia[b]) {
                            out.push(LawViolation::DiaNotMonotone(agent.clone(), a, b));
                            axioms_ok = false;
                            break 'mono;
                        }
                        if !self.leq(box_[a], box_[b]) {
                            out.push(LawViolation::BoxNotMonotone(agent.clone(), a, b));
                            axioms_ok = false;
                            break 'mono;
                        }
                    }
                }
            }
            #[allow(clippy::needless_range_loop)]
            'adj: for a in 0..n {
                for b in 0..n {
                    if self.leq(dia[a], b) != self.leq(a, box_[b]) {
                        out.push(LawViolation::AdjunctionFails(agent.clone(), a, b));
                        axioms_ok = false;
                        break 'adj;
                    }
                }
            }

            // laws the axioms entail, still checked exhaustively
            for a in 0..n {
                for b in 0..n {
                    if dia[join(a, b)] != join(dia[a], dia[b]) {
                        out.push(LawViolation::DiaJoin(agent.clone(), a, b));
                    }
                    if box_[meet(a, b)] != meet(box_[a], box_[b]) {
                        out.push(LawViolation::BoxMeet(agent.clone(), a, b));
                    }
                    if !self.leq(dia[meet(a, b)], meet(dia[a], dia[b])) {
                        out.push(LawViolation::DiaMeetBound(agent.clone(), a, b));
                    }
                    if !self.leq(join(box_[a], box_[b]), box_[join(a, b)]) {
                        out.push(LawViolation::BoxJoinBound(agent.clone(), a, b));
                    }
                }
            }
            if dia[ops.bot] != ops.bot {
                out.push(LawViolation::DiaBot(agent.clone()));
            }
            if box_[ops.top] != ops.top {
                out.push(LawViolation::BoxTop(agent.clone()));
            }
            for a in 0..n {
                if !self.leq(dia[box_[a]], a) {
                    out.push(LawViolation::Counit(agent.clone(), a));
                }
                if !self.leq(a, box_[dia[a]]) {
                    out.push(LawViolation::Unit(agent.clone(), a));
                }
            }

            if axioms_ok {
                debug_assert!(
                    out.iter().all(|v| !v.is_entailed_law()),
                    "axioms hold but an entailed law failed: the validator is inconsistent"
                );
            }
        }
        out
    }

    /// Greatest lower / least upper bound tables; fails when some pair has
    /// no bound or no greatest/least one.
    fn compute_ops(&self) -> Result<DlamOps, Vec<LawViolation>> {
        let n = self.size;
        let mut meet = vec![0usize; n * n];
        let mut join = vec![0usize; n * n];
        let mut out = Vec::new();
        for a in 0..n {
            for b in 0..n {
                let lower: Vec<usize> =
                    (0..n).filter(|&x| self.leq(x, a) && self.leq(x, b)).collect();
                match lower.iter().find(|&&g| lower.iter().all(|&x| self.leq(x, g))) {
                    Some(&g) => meet[a * n + b] = g,
                    None => {
                        out.push(LawViolation::NoMeet(a, b));
                        return Err(out);
                    }
                }
                let upper: Vec<usize> =
                    (0..n).filter(|&x| self.leq(a, x) && self.leq(b, x)).collect();
                match upper.iter().find(|&&l| upper.iter().all(|&x| self.leq(l, x))) {
                    Some(&l) => join[a * n + b] = l,
                    None => {
                        out.push(LawViolation::NoJoin(a, b));
                        return Err(out);
                    }
                }
            }
        }
        let Some(top) = (0..n).find(|&t| (0..n).all(|x| self.leq(x, t))) else {
            out.push(LawViolation::NoTop);
            return Err(out);
        };
        let Some(bot) = (0..n).find(|&b| (0..n).all(|x| self.leq(b, x))) else {
            out.push(LawViolation::NoBottom);
            return Err(out);
        };
        Ok(DlamOps { meet, join, top, bot })
    }

    pub fn validate(self) -> Result<ValidatedDlam, Vec<LawViolation>> {
        let violations = self.violations();
        if !violations.is_empty() {
            return Err(violations);
        }
        let ops = self.compute_ops().expect("violation-free candidates have bounds");
        Ok(ValidatedDlam { dlam: self, ops })
    }

    pub fn label(&self, x: usize) -> String {
        match &self.labels {
            Some(labels) => labels[x].clone(),
            None => x.to_string(),
        }
    }
}

/// Report form of validation: the violated laws, empty when the candidate
/// is a genuine structure.
pub fn dlam_validate(candidate: &FiniteDlam) -> Vec<LawViolation> {
    candidate.violations()
}

/// Assignment of lattice elements to atoms.
pub type Interpretation = HashMap<String, usize>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DlamEvalError {
    #[error("no interpretation for atom `{0}`")]
    UnknownAtom(String),
    #[error("no modal tables for agent `{0}`")]
    UnknownAgent(Agent),
}

impl ValidatedDlam {
    fn meet(&self, a: usize, b: usize) -> usize {
        self.ops.meet[a * self.dlam.size + b]
    }

    fn join(&self, a: usize, b: usize) -> usize {
        self.ops.join[a * self.dlam.size + b]
    }

    pub fn eval_formula(
        &self,
        interp: &Interpretation,
        formula: &Formula,
    ) -> Result<usize, DlamEvalError> {
        match formula {
            Formula::Top => Ok(self.ops.top),
            Formula::Bot => Ok(self.ops.bot),
            Formula::Atom(p) => {
                interp.get(p).copied().ok_or_else(|| DlamEvalError::UnknownAtom(p.clone()))
            }
            Formula::And(l, r) => {
                Ok(self.meet(self.eval_formula(interp, l)?, self.eval_formula(interp, r)?))
            }
            Formula::Or(l, r) => {
                Ok(self.join(self.eval_formula(interp, l)?, self.eval_formula(interp, r)?))
            }
            Formula::Dia(a, b) => {
                let t =
                    self.dlam.dia_table(a).ok_or_else(|| DlamEvalError::UnknownAgent(a.clone()))?;
                Ok(t[self.eval_formula(interp, b)?])
            }
            Formula::Box_(a, b) => {
                let t =
                    self.dlam.box_table(a).ok_or_else(|| DlamEvalError::UnknownAgent(a.clone()))?;
                Ok(t[self.eval_formula(interp, b)?])
            }
        }
    }

    /// Meaning of a context: the meet of its items, an annotated item
    /// `(Γ)^A` meaning `dia_A` of the meaning of `Γ`; the empty context
    /// means top.
    pub fn eval_context(
        &self,
        interp: &Interpretation,
        ctx: &Context,
    ) -> Result<usize, DlamEvalError> {
        let mut acc = self.ops.top;
        for item in &ctx.items {
            let v = match item {
                Item::F(f) => self.eval_formula(interp, f)?,
                Item::Ann(a, inner) => {
                    let t = self
                        .dlam
                        .dia_table(a)
                        .ok_or_else(|| DlamEvalError::UnknownAgent(a.clone()))?;
                    t[self.eval_context(interp, inner)?]
                }
            };
            acc = self.meet(acc, v);
        }
        Ok(acc)
    }
}

/// `Γ |- m` is true under an interpretation when the meaning of `Γ` is
/// below the meaning of `m`.
pub fn sequent_true_dlam(
    dlam: &ValidatedDlam,
    interp: &Interpretation,
    sequent: &Sequent,
) -> Result<bool, DlamEvalError> {
    let ante = dlam.eval_context(interp, &sequent.antecedent)?;
    let succ = dlam.eval_formula(interp, &sequent.succedent)?;
    Ok(dlam.dlam.leq(ante, succ))
}

// ---------------------------------------------------------------------------
// the algebra of downsets of a frame
// ---------------------------------------------------------------------------

/// The lattice of downward-closed subsets of a frame, ordered by inclusion,
/// with `box`/`dia` computed from the accessibility relations:
/// `box(Z) = { w | ∀v, w R v ⟹ v ∈ Z }` and
/// `dia(Z) = { w | ∃v ∈ Z, v R w }`.
pub fn complex_algebra(frame: &KripkeFrame) -> Result<FiniteDlam, super::kripke::FrameViolation> {
    frame.validate()?;
    let downsets = frame.downsets();
    let index_of = |s: WorldSet| -> usize {
        downsets.binary_search(&s).expect("modal image of a downset is a downset")
    };
    let size = downsets.len();
    let mut leq = vec![false; size * size];
    for (i, &a) in downsets.iter().enumerate() {
        for (j, &b) in downsets.iter().enumerate() {
            leq[i * size + j] = a & !b == 0;
        }
    }
    let mut dia = Vec::new();
    let mut box_ = Vec::new();
    for (agent, r) in &frame.rel {
        let dia_table: Vec<usize> = downsets.iter().map(|&z| index_of(r.image(z))).collect();
        let box_table: Vec<usize> = downsets.iter().map(|&z| index_of(r.preimage_all(z))).collect();
        dia.push((agent.clone(), dia_table));
        box_.push((agent.clone(), box_table));
    }
    let labels = downsets
        .iter()
        .map(|&s| {
            let ws: Vec<String> =
                (0..frame.worlds).filter(|&w| s & (1 << w) != 0).map(|w| format!("w{w}")).collect();
            format!("{{{}}}", ws.join(","))
        })
        .collect();
    Ok(FiniteDlam { size, leq, dia, box_, labels: Some(labels) })
}

/// The element of the complex algebra corresponding to each atom's
/// valuation set; requires the valuation to be downward closed.
pub fn valuation_interpretation(
    structure: &KripkeStructure,
    algebra: &FiniteDlam,
) -> Interpretation {
    let downsets = structure.frame.downsets();
    debug_assert_eq!(downsets.len(), algebra.size);
    structure
        .valuation
        .iter()
        .map(|(atom, set)| {
            let idx = downsets.binary_search(set).expect("valuations are downward closed");
            (atom.clone(), idx)
        })
        .collect()
}

impl fmt::Display for FiniteDlam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lattice with {} elements", self.size)?;
        if let Some(labels) = &self.labels {
            write!(f, ": {}", labels.join(", "))?;
        }
        Ok(())
    }
}
