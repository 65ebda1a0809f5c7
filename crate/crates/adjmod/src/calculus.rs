//! The tree-style sequent calculus: initial sequents, rules, a derivation
//! checker and backward rule-instance enumeration.
//!
//! Rules (read top-down; `Δ[..]` is a context with a hole, `p` an atom):
//!
//! ```text
//!  ──────────── Id      ─────────── BotL      ──────────── TopR
//!   Γ, p |- p            Δ[bot] |- m           Γ |- top
//!
//!   Δ[m1, m2] |- m                Γ |- m1    Γ |- m2
//!  ───────────────── AndL        ─────────────────── AndR
//!   Δ[m1 & m2] |- m                Γ |- m1 & m2
//!
//!   Δ[m1] |- m    Δ[m2] |- m       Γ |- mi
//!  ────────────────────────── OrL ─────────────── OrRi
//!   Δ[m1 | m2] |- m                Γ |- m1 | m2
//!
//!   Δ[(m)^A] |- m'                 Γ |- m
//!  ───────────────── DiaL        ──────────────────────── DiaR
//!   Δ[<A>(m)] |- m'                Γ', (Γ)^A |- <A>(m)
//!
//!   Δ[([A](m), Γ)^A, m] |- m'      (Γ)^A |- m
//!  ────────────────────────── BoxL ──────────── BoxR
//!   Δ[([A](m), Γ)^A] |- m'         Γ |- [A](m)
//! ```
//!
//! `BoxL` duplicates its principal item into the premiss; `DiaR` carries a
//! parameter `Γ'` (the remaining top-level items). Two further rules are
//! representable so that proof transformations can consume and produce them,
//! although backward enumeration never proposes `Cut`:
//!
//! ```text
//!   Γ |- m    Δ'[m] |- m'          Δ[(Γ, p)^A, m''] |- m
//!  ──────────────────────── Cut   ────────────────────── Assn (<A>(p) ⇒ m'')
//!   Δ'[Γ] |- m'                    Δ[(Γ, p)^A] |- m
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{
    parse_formula, parse_sequent, Agent, Context, Formula, Item, ItemPath, LevelPath, Sequent,
};

/// A scenario assumption `<A>(p) ⇒ m''` where `p` is an atom and `m''` a
/// disjunction of atoms. A derivation containing `Assn` nodes is valid only
/// relative to the assumption set it was built under; the rule instance
/// carries the full assumption content so that membership can be checked.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AssumptionRule {
    pub agent: Agent,
    pub trigger: String,
    pub consequent: Formula,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("assumption consequent must be a disjunction of atoms, got `{0}`")]
pub struct InvalidAssumption(pub String);

fn is_atom_disjunction(f: &Formula) -> bool {
    match f {
        Formula::Atom(_) => true,
        Formula::Or(l, r) => is_atom_disjunction(l) && is_atom_disjunction(r),
        _ => false,
    }
}

impl AssumptionRule {
    pub fn new(
        agent: Agent,
        trigger: impl Into<String>,
        consequent: Formula,
    ) -> Result<Self, InvalidAssumption> {
        if !is_atom_disjunction(&consequent) {
            return Err(InvalidAssumption(consequent.to_string()));
        }
        Ok(AssumptionRule { agent, trigger: trigger.into(), consequent })
    }
}

impl fmt::Display for AssumptionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            disjuncts(&self.consequent).iter().map(|d| d.to_string()).collect();
        write!(f, "assn {} {} => {}", self.agent, self.trigger, parts.join(" | "))
    }
}

fn disjuncts(f: &Formula) -> Vec<&Formula> {
    match f {
        Formula::Or(l, r) => {
            let mut out = disjuncts(l);
            out.extend(disjuncts(r));
            out
        }
        other => vec![other],
    }
}

/// A rule instance. Rules that act at depth carry the address of their
/// principal occurrence; `DiaR` carries the chosen principal item (the
/// parameter is everything else at the top level); `BoxL` additionally
/// carries the position of the principal formula inside the principal item;
/// `Cut` carries the hole position, the items standing for the first
/// premiss's antecedent, and the cut formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rule {
    Id,
    BotL,
    TopR,
    AndL { at: ItemPath },
    AndR,
    OrL { at: ItemPath },
    OrR1,
    OrR2,
    DiaL { at: ItemPath },
    DiaR { principal: usize },
    BoxL { item: ItemPath, formula: usize },
    BoxR,
    Cut { level: LevelPath, plugged: Vec<usize>, formula: Formula },
    Assn { assumption: AssumptionRule, item: ItemPath },
}

impl Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Rule::Id => "Id",
            Rule::BotL => "BotL",
            Rule::TopR => "TopR",
            Rule::AndL { .. } => "AndL",
            Rule::AndR => "AndR",
            Rule::OrL { .. } => "OrL",
            Rule::OrR1 => "OrR1",
            Rule::OrR2 => "OrR2",
            Rule::DiaL { .. } => "DiaL",
            Rule::DiaR { .. } => "DiaR",
            Rule::BoxL { .. } => "BoxL",
            Rule::BoxR => "BoxR",
            Rule::Cut { .. } => "Cut",
            Rule::Assn { .. } => "Assn",
        }
    }
}

/// A rule-labelled tree of sequents. Every constructor in this crate keeps
/// the invariant that each child's stored conclusion is structurally equal
/// to the premiss computed from the parent's conclusion and rule, so that
/// addresses can be transported between parent and child representations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    pub conclusion: Sequent,
    pub rule: Rule,
    pub premisses: Vec<Derivation>,
}

/// Why a sequent/rule pair is not a rule instance.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct SchemaViolation(pub String);

fn violation<T>(msg: impl Into<String>) -> Result<T, SchemaViolation> {
    Err(SchemaViolation(msg.into()))
}

/// The premisses a rule instance demands of a given conclusion. This is the
/// single source of truth for the rule schemas: the checker recomputes
/// premisses with it, search builds goals from it, and the proof
/// transformations construct nodes through it.
pub fn premisses_of(conclusion: &Sequent, rule: &Rule) -> Result<Vec<Sequent>, SchemaViolation> {
    let ctx = &conclusion.antecedent;
    let succ = &conclusion.succedent;
    let seq = |antecedent: Context| Sequent::new(antecedent, succ.clone());
    match rule {
        Rule::Id => {
            let Formula::Atom(p) = succ else {
                return violation(format!("Id needs an atomic succedent, got `{succ}`"));
            };
            let hit = ctx.items.iter().any(|i| matches!(i, Item::F(Formula::Atom(q)) if q == p));
            if !hit {
                return violation(format!(
                    "Id needs `{p}` at the top level of `{}`",
                    ctx.print_raw()
                ));
            }
            Ok(vec![])
        }
        Rule::BotL => {
            if !ctx.contains_bot() {
                return violation("BotL needs `bot` somewhere in the antecedent");
            }
            Ok(vec![])
        }
        Rule::TopR => {
            if *succ != Formula::Top {
                return violation(format!("TopR needs succedent `top`, got `{succ}`"));
            }
            Ok(vec![])
        }
        Rule::AndL { at } => {
            let Item::F(Formula::And(m1, m2)) = ctx.item(at)? else {
                return violation(format!("AndL at {at} needs a conjunction there"));
            };
            let (m1, m2) = (m1.as_ref().clone(), m2.as_ref().clone());
            let (ante, ()) = ctx.edit_level(&at.level, |items| {
                items.remove(at.index);
                items.push(Item::F(m1));
                items.push(Item::F(m2));
            })?;
            Ok(vec![seq(ante)])
        }
        Rule::AndR => {
            let Formula::And(m1, m2) = succ else {
                return violation(format!("AndR needs a conjunctive succedent, got `{succ}`"));
            };
            Ok(vec![
                Sequent::new(ctx.clone(), m1.as_ref().clone()),
                Sequent::new(ctx.clone(), m2.as_ref().clone()),
            ])
        }
        Rule::OrL { at } => {
            let Item::F(Formula::Or(m1, m2)) = ctx.item(at)? else {
                return violation(format!("OrL at {at} needs a disjunction there"));
            };
            let (m1, m2) = (m1.as_ref().clone(), m2.as_ref().clone());
            let mut out = Vec::with_capacity(2);
            for part in [m1, m2] {
                let (ante, ()) = ctx.edit_level(&at.level, |items| {
                    items.remove(at.index);
                    items.push(Item::F(part));
                })?;
                out.push(seq(ante));
            }
            Ok(out)
        }
        Rule::OrR1 | Rule::OrR2 => {
            let Formula::Or(m1, m2) = succ else {
                return violation(format!("OrR needs a disjunctive succedent, got `{succ}`"));
            };
            let m = if matches!(rule, Rule::OrR1) { m1 } else { m2 };
            Ok(vec![Sequent::new(ctx.clone(), m.as_ref().clone())])
        }
        Rule::DiaL { at } => {
            let Item::F(Formula::Dia(a, m)) = ctx.item(at)? else {
                return violation(format!("DiaL at {at} needs a `<A>` formula there"));
            };
            let (a, m) = (a.clone(), m.as_ref().clone());
            let (ante, ()) = ctx.edit_level(&at.level, |items| {
                items.remove(at.index);
                items.push(Item::Ann(a, Context::of_formulas([m])));
            })?;
            Ok(vec![seq(ante)])
        }
        Rule::DiaR { principal } => {
            let Formula::Dia(a, m) = succ else {
                return violation(format!("DiaR needs a `<A>` succedent, got `{succ}`"));
            };
            match ctx.items.get(*principal) {
                Some(Item::Ann(b, inner)) if b == a => {
                    Ok(vec![Sequent::new(inner.clone(), m.as_ref().clone())])
                }
                Some(other) => violation(format!(
                    "DiaR principal {principal} must be an item annotated with `{a}`, got `{other}`"
                )),
                None => violation(format!("DiaR principal {principal} out of bounds")),
            }
        }
        Rule::BoxL { item, formula } => {
            let Item::Ann(a, inner) = ctx.item(item)? else {
                return violation(format!("BoxL at {item} needs an annotated item there"));
            };
            let Some(Item::F(Formula::Box_(b, m))) = inner.items.get(*formula) else {
                return violation(format!(
                    "BoxL needs a `[_]` formula at position {formula} inside the item at {item}"
                ));
            };
            if b != a {
                return violation(format!(
                    "BoxL principal formula agent `{b}` does not match the item annotation `{a}`"
                ));
            }
            let m = m.as_ref().clone();
            // the principal item stays untouched; the boxed body lands beside it
            let (ante, ()) = ctx.edit_level(&item.level, |items| items.push(Item::F(m)))?;
            Ok(vec![seq(ante)])
        }
        Rule::BoxR => {
            let Formula::Box_(a, m) = succ else {
                return violation(format!("BoxR needs a `[A]` succedent, got `{succ}`"));
            };
            let wrapped = Context::singleton(Item::Ann(a.clone(), ctx.clone()));
            Ok(vec![Sequent::new(wrapped, m.as_ref().clone())])
        }
        Rule::Cut { level, plugged, formula } => {
            let items = ctx.level(level)?;
            let mut gamma = Vec::with_capacity(plugged.len());
            for &i in plugged {
                match items.get(i) {
                    Some(item) => gamma.push(item.clone()),
                    None => return violation(format!("Cut selects item {i} out of bounds")),
                }
            }
            let mut sorted = plugged.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != plugged.len() {
                return violation("Cut selects the same item twice");
            }
            let cut = formula.clone();
            let (rest, ()) = ctx.edit_level(level, |items| {
                for &i in sorted.iter().rev() {
                    items.remove(i);
                }
                items.push(Item::F(cut));
            })?;
            Ok(vec![Sequent::new(Context::new(gamma), formula.clone()), seq(rest)])
        }
        Rule::Assn { assumption, item } => {
            let Item::Ann(a, inner) = ctx.item(item)? else {
                return violation(format!("Assn at {item} needs an annotated item there"));
            };
            if *a != assumption.agent {
                return violation(format!(
                    "Assn item annotation `{a}` does not match assumption agent `{}`",
                    assumption.agent
                ));
            }
            let trig = &assumption.trigger;
            let hit =
                inner.items.iter().any(|i| matches!(i, Item::F(Formula::Atom(p)) if p == trig));
            if !hit {
                return violation(format!(
                    "Assn needs the trigger atom `{trig}` inside the item at {item}"
                ));
            }
            let m2 = assumption.consequent.clone();
            let (ante, ()) = ctx.edit_level(&item.level, |items| items.push(Item::F(m2)))?;
            Ok(vec![seq(ante)])
        }
    }
}

impl From<crate::syntax::PathError> for SchemaViolation {
    fn from(e: crate::syntax::PathError) -> Self {
        SchemaViolation(e.to_string())
    }
}

// ---------------------------------------------------------------------------
// construction and transport
// ---------------------------------------------------------------------------

/// Index bijection between two multiset-equal contexts, nested through
/// annotated items.
#[derive(Debug, Clone)]
pub(crate) struct CtxIso {
    /// `from` index -> `to` index at this level.
    map: Vec<usize>,
    /// inner isos for annotated items, keyed by `from` index.
    children: Vec<Option<Box<CtxIso>>>,
}

impl CtxIso {
    /// Match two multiset-equal contexts item by item. Prefers the identity
    /// mapping where it applies, so mostly-aligned representations transport
    /// cheaply. Returns `None` if the contexts are not multiset-equal.
    pub(crate) fn between(from: &Context, to: &Context) -> Option<CtxIso> {
        if from.items.len() != to.items.len() {
            return None;
        }
        let n = from.items.len();
        let mut map = vec![usize::MAX; n];
        let mut used = vec![false; n];
        let keys_from: Vec<Item> = from.items.iter().map(Item::canonical).collect();
        let keys_to: Vec<Item> = to.items.iter().map(Item::canonical).collect();
        for i in 0..n {
            if !used[i] && keys_from[i] == keys_to[i] {
                map[i] = i;
                used[i] = true;
            }
        }
        for i in 0..n {
            if map[i] != usize::MAX {
                continue;
            }
            let j = (0..n).find(|&j| !used[j] && keys_from[i] == keys_to[j])?;
            map[i] = j;
            used[j] = true;
        }
        let mut children = vec![None; n];
        for (i, child) in children.iter_mut().enumerate() {
            if let (Item::Ann(_, inner_from), Item::Ann(_, inner_to)) =
                (&from.items[i], &to.items[map[i]])
            {
                *child = Some(Box::new(CtxIso::between(inner_from, inner_to)?));
            }
        }
        Some(CtxIso { map, children })
    }

    pub(crate) fn map_level(&self, path: &[usize]) -> LevelPath {
        let mut out = Vec::with_capacity(path.len());
        let mut iso = self;
        for &step in path {
            out.push(iso.map[step]);
            iso = iso.children[step].as_deref().expect("level path descends through Ann items");
        }
        out
    }

    pub(crate) fn at_level(&self, path: &[usize]) -> &CtxIso {
        let mut iso = self;
        for &step in path {
            iso = iso.children[step].as_deref().expect("level path descends through Ann items");
        }
        iso
    }

    pub(crate) fn map_item(&self, at: &ItemPath) -> ItemPath {
        let level = self.map_level(&at.level);
        let index = self.at_level(&at.level).map[at.index];
        ItemPath { level, index }
    }

    pub(crate) fn map_index(&self, index: usize) -> usize {
        self.map[index]
    }
}

fn map_rule(rule: &Rule, iso: &CtxIso) -> Rule {
    match rule {
        Rule::Id | Rule::BotL | Rule::TopR | Rule::AndR | Rule::OrR1 | Rule::OrR2 | Rule::BoxR => {
            rule.clone()
        }
        Rule::AndL { at } => Rule::AndL { at: iso.map_item(at) },
        Rule::OrL { at } => Rule::OrL { at: iso.map_item(at) },
        Rule::DiaL { at } => Rule::DiaL { at: iso.map_item(at) },
        Rule::DiaR { principal } => Rule::DiaR { principal: iso.map[*principal] },
        Rule::BoxL { item, formula } => {
            let inner = iso.at_level(&item.level).children[item.index]
                .as_deref()
                .expect("BoxL principal is an annotated item");
            Rule::BoxL { item: iso.map_item(item), formula: inner.map[*formula] }
        }
        Rule::Cut { level, plugged, formula } => {
            let at = iso.at_level(level);
            Rule::Cut {
                level: iso.map_level(level),
                plugged: plugged.iter().map(|&i| at.map[i]).collect(),
                formula: formula.clone(),
            }
        }
        Rule::Assn { assumption, item } => {
            Rule::Assn { assumption: assumption.clone(), item: iso.map_item(item) }
        }
    }
}

impl Derivation {
    /// Build a node, validating the children against the rule schema. A
    /// child whose conclusion is multiset-equal to the computed premiss but
    /// differently represented is transported onto it.
    pub fn node(
        conclusion: Sequent,
        rule: Rule,
        children: Vec<Derivation>,
    ) -> Result<Derivation, SchemaViolation> {
        let wanted = premisses_of(&conclusion, &rule)?;
        if wanted.len() != children.len() {
            return violation(format!(
                "{} expects {} premisses, got {}",
                rule.name(),
                wanted.len(),
                children.len()
            ));
        }
        let premisses = children
            .into_iter()
            .zip(wanted)
            .map(|(child, want)| child.transport(&want))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Derivation { conclusion, rule, premisses })
    }

    pub fn leaf(conclusion: Sequent, rule: Rule) -> Result<Derivation, SchemaViolation> {
        Derivation::node(conclusion, rule, vec![])
    }

    /// Re-express this derivation so its conclusion is stored exactly as
    /// `target` (which must be multiset-equal to the current conclusion).
    pub fn transport(self, target: &Sequent) -> Result<Derivation, SchemaViolation> {
        if self.conclusion == *target {
            return Ok(self);
        }
        if self.conclusion.succedent != target.succedent {
            return violation(format!(
                "cannot transport: succedent `{}` vs `{}`",
                self.conclusion.succedent, target.succedent
            ));
        }
        let Some(iso) = CtxIso::between(&self.conclusion.antecedent, &target.antecedent) else {
            return violation(format!(
                "cannot transport: `{}` is not multiset-equal to `{}`",
                self.conclusion.antecedent.print_raw(),
                target.antecedent.print_raw()
            ));
        };
        let rule = map_rule(&self.rule, &iso);
        Derivation::node(target.clone(), rule, self.premisses)
    }

    pub fn height(&self) -> usize {
        // explicit work list: input trees can be arbitrarily tall
        let mut best = 0;
        let mut stack = vec![(self, 1usize)];
        while let Some((node, h)) = stack.pop() {
            best = best.max(h);
            stack.extend(node.premisses.iter().map(|p| (p, h + 1)));
        }
        best
    }

    /// Number of nodes.
    pub fn node_count(&self) -> usize {
        1 + self.premisses.iter().map(Derivation::node_count).sum::<usize>()
    }

    pub fn is_cut_free(&self) -> bool {
        !matches!(self.rule, Rule::Cut { .. }) && self.premisses.iter().all(Derivation::is_cut_free)
    }

    /// All distinct assumption instances cited anywhere in the tree.
    pub fn assumptions_used(&self) -> Vec<&AssumptionRule> {
        let mut out = Vec::new();
        self.collect_assumptions(&mut out);
        out
    }

    fn collect_assumptions<'a>(&'a self, out: &mut Vec<&'a AssumptionRule>) {
        if let Rule::Assn { assumption, .. } = &self.rule {
            if !out.contains(&assumption) {
                out.push(assumption);
            }
        }
        for p in &self.premisses {
            p.collect_assumptions(out);
        }
    }
}

// ---------------------------------------------------------------------------
// checking
// ---------------------------------------------------------------------------

/// A rejected derivation: `node` is the route of premiss indices from the
/// root to the offending node.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("node {node:?}: {reason}")]
pub struct Rejection {
    pub node: Vec<usize>,
    pub reason: String,
}

/// Check every node of a derivation against the rule schemas. Stored premiss
/// conclusions are compared with the schema-computed ones up to nested
/// multiset equality, so externally produced derivations may order their
/// contexts freely. `Assn` nodes must cite members of `assumptions`; `Cut`
/// nodes are rejected unless `allow_cut` is set.
pub fn check(
    derivation: &Derivation,
    assumptions: &[AssumptionRule],
    allow_cut: bool,
) -> Result<(), Rejection> {
    let mut route = Vec::new();
    check_at(derivation, assumptions, allow_cut, &mut route)
}

fn check_at(
    d: &Derivation,
    assumptions: &[AssumptionRule],
    allow_cut: bool,
    route: &mut Vec<usize>,
) -> Result<(), Rejection> {
    fn reject_at(route: &[usize], reason: String) -> Rejection {
        Rejection { node: route.to_vec(), reason }
    }
    let reject = |reason: String| reject_at(route, reason);
    match &d.rule {
        Rule::Cut { .. } if !allow_cut => {
            return Err(reject("Cut is not allowed here".into()));
        }
        Rule::Assn { assumption, .. } if !assumptions.contains(assumption) => {
            return Err(reject(format!(
                "Assn cites `{assumption}` which is not in the assumption set"
            )));
        }
        _ => {}
    }
    let wanted = premisses_of(&d.conclusion, &d.rule).map_err(|e| reject(e.to_string()))?;
    if wanted.len() != d.premisses.len() {
        return Err(reject(format!(
            "{} expects {} premisses, found {}",
            d.rule.name(),
            wanted.len(),
            d.premisses.len()
        )));
    }
    for (i, (want, got)) in wanted.iter().zip(&d.premisses).enumerate() {
        if !want.multiset_eq(&got.conclusion) {
            return Err(reject_at(
                route,
                format!(
                    "premiss {i} of {} should conclude `{want}`, found `{}`",
                    d.rule.name(),
                    got.conclusion
                ),
            ));
        }
        route.push(i);
        check_at(got, assumptions, allow_cut, route)?;
        route.pop();
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// backward enumeration
// ---------------------------------------------------------------------------

/// All multiset levels of a context, top level first.
pub fn context_levels(ctx: &Context) -> Vec<LevelPath> {
    fn walk(ctx: &Context, here: &LevelPath, out: &mut Vec<LevelPath>) {
        for (i, item) in ctx.items.iter().enumerate() {
            if let Item::Ann(_, inner) = item {
                let mut path = here.clone();
                path.push(i);
                out.push(path.clone());
                walk(inner, &path, out);
            }
        }
    }
    let mut out = vec![Vec::new()];
    walk(ctx, &Vec::new(), &mut out);
    out
}

/// Every rule instance whose conclusion is `sequent`, read bottom-up,
/// together with its premisses. Closing rules come first, then left rules at
/// every depth, then right rules. `Cut` is never proposed. `BoxL` instances
/// whose new sibling is already present at the principal item's level are
/// suppressed (they are redundant by admissibility of contraction); the
/// checker still accepts such instances when presented.
pub fn backward_instances(
    sequent: &Sequent,
    assumptions: &[AssumptionRule],
) -> Vec<(Rule, Vec<Sequent>)> {
    backward_instances_opt(sequent, assumptions, true)
}

/// As [`backward_instances`], with a switch for the `BoxL` premiss shape.
/// With `boxl_duplicate` off, the principal formula is consumed instead of
/// kept — a strictly weaker rule used to demonstrate that the duplication is
/// necessary. Instances produced in that mode are not calculus derivations.
pub fn backward_instances_opt(
    sequent: &Sequent,
    assumptions: &[AssumptionRule],
    boxl_duplicate: bool,
) -> Vec<(Rule, Vec<Sequent>)> {
    let mut out: Vec<(Rule, Vec<Sequent>)> = Vec::new();
    {
        let mut push = |rule: Rule| {
            if let Ok(premisses) = premisses_of(sequent, &rule) {
                out.push((rule, premisses));
            }
        };

        push(Rule::Id);
        push(Rule::BotL);
        push(Rule::TopR);

        let ctx = &sequent.antecedent;
        for level in context_levels(ctx) {
            let items = ctx.level(&level).expect("enumerated level is valid");
            for (index, item) in items.iter().enumerate() {
                let at = ItemPath::new(level.clone(), index);
                match item {
                    Item::F(Formula::And(..)) => push(Rule::AndL { at }),
                    Item::F(Formula::Or(..)) => push(Rule::OrL { at }),
                    Item::F(Formula::Dia(..)) => push(Rule::DiaL { at }),
                    Item::F(_) => {}
                    Item::Ann(agent, inner) => {
                        for (j, inner_item) in inner.items.iter().enumerate() {
                            if let Item::F(Formula::Box_(b, m)) = inner_item {
                                if b != agent {
                                    continue;
                                }
                                let sibling = Item::F(m.as_ref().clone());
                                if boxl_duplicate && items.contains(&sibling) {
                                    continue; // redundant: the sibling is already there
                                }
                                push(Rule::BoxL { item: at.clone(), formula: j });
                            }
                        }
                        for assumption in assumptions {
                            if assumption.agent == *agent {
                                let trig = &assumption.trigger;
                                let fires = inner
                                    .items
                                    .iter()
                                    .any(|i| matches!(i, Item::F(Formula::Atom(p)) if p == trig));
                                if fires {
                                    push(Rule::Assn {
                                        assumption: assumption.clone(),
                                        item: at.clone(),
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }

        match &sequent.succedent {
            Formula::And(..) => push(Rule::AndR),
            Formula::Or(..) => {
                push(Rule::OrR1);
                push(Rule::OrR2);
            }
            Formula::Dia(a, _) => {
                for (i, item) in ctx.items.iter().enumerate() {
                    if matches!(item, Item::Ann(b, _) if b == a) {
                        push(Rule::DiaR { principal: i });
                    }
                }
            }
            Formula::Box_(..) => push(Rule::BoxR),
            _ => {}
        }
    }

    if !boxl_duplicate {
        out = weaken_boxl_instances(out);
    }
    out
}

/// Rewrite the `BoxL` entries so the premiss drops the principal formula
/// from the principal item. Only reachable through the duplicate-disabling
/// switch.
fn weaken_boxl_instances(instances: Vec<(Rule, Vec<Sequent>)>) -> Vec<(Rule, Vec<Sequent>)> {
    instances
        .into_iter()
        .map(|(rule, premisses)| {
            if let Rule::BoxL { item, formula } = &rule {
                let mut inner_path = item.level.clone();
                inner_path.push(item.index);
                let f = *formula;
                let (ante, ()) = premisses[0]
                    .antecedent
                    .edit_level(&inner_path, |items| {
                        items.remove(f);
                    })
                    .expect("BoxL principal path is valid");
                let weak = vec![Sequent::new(ante, premisses[0].succedent.clone())];
                (rule, weak)
            } else {
                (rule, premisses)
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// the identity lemma
// ---------------------------------------------------------------------------

/// A cut-free derivation of `Γ, m |- m`, built by induction on `m`: atoms
/// close with `Id`, `<A>` unfolds through `DiaL` then `DiaR`, and `[A]`
/// through `BoxR` then `BoxL` (using the duplicated principal item).
pub fn derive_identity(context: &Context, formula: &Formula) -> Derivation {
    let mut items = context.items.clone();
    let index = items.len();
    items.push(Item::F(formula.clone()));
    derive_identity_at(Context::new(items), index, formula)
}

/// A derivation of `antecedent |- m` where `antecedent[index]` is the
/// occurrence of `m` being unfolded.
fn derive_identity_at(antecedent: Context, index: usize, m: &Formula) -> Derivation {
    let conclusion = Sequent::new(antecedent, m.clone());
    fn fail(e: SchemaViolation) -> Derivation {
        unreachable!("identity construction is schema-correct: {e}")
    }
    match m {
        Formula::Atom(_) => Derivation::leaf(conclusion, Rule::Id).unwrap_or_else(fail),
        Formula::Bot => Derivation::leaf(conclusion, Rule::BotL).unwrap_or_else(fail),
        Formula::Top => Derivation::leaf(conclusion, Rule::TopR).unwrap_or_else(fail),
        Formula::And(m1, m2) => {
            let and_l = Rule::AndL { at: ItemPath::top(index) };
            let premiss = premisses_of(&conclusion, &and_l).unwrap().pop().unwrap();
            let n = premiss.antecedent.items.len();
            let left = derive_identity_at(premiss.antecedent.clone(), n - 2, m1);
            let right = derive_identity_at(premiss.antecedent.clone(), n - 1, m2);
            let and_r =
                Derivation::node(premiss, Rule::AndR, vec![left, right]).unwrap_or_else(fail);
            Derivation::node(conclusion, and_l, vec![and_r]).unwrap_or_else(fail)
        }
        Formula::Or(m1, m2) => {
            let or_l = Rule::OrL { at: ItemPath::top(index) };
            let premisses = premisses_of(&conclusion, &or_l).unwrap();
            let branch = |premiss: &Sequent, side: Rule, part: &Formula| {
                let n = premiss.antecedent.items.len();
                let sub = derive_identity_at(premiss.antecedent.clone(), n - 1, part);
                Derivation::node(premiss.clone(), side, vec![sub]).unwrap_or_else(fail)
            };
            let d1 = branch(&premisses[0], Rule::OrR1, m1);
            let d2 = branch(&premisses[1], Rule::OrR2, m2);
            Derivation::node(conclusion, or_l, vec![d1, d2]).unwrap_or_else(fail)
        }
        Formula::Dia(_, body) => {
            let dia_l = Rule::DiaL { at: ItemPath::top(index) };
            let premiss = premisses_of(&conclusion, &dia_l).unwrap().pop().unwrap();
            let principal = premiss.antecedent.items.len() - 1;
            let inner = derive_identity_at(Context::of_formulas([body.as_ref().clone()]), 0, body);
            let dia_r = Derivation::node(premiss, Rule::DiaR { principal }, vec![inner])
                .unwrap_or_else(fail);
            Derivation::node(conclusion, dia_l, vec![dia_r]).unwrap_or_else(fail)
        }
        Formula::Box_(_, body) => {
            let premiss = premisses_of(&conclusion, &Rule::BoxR).unwrap().pop().unwrap();
            let box_l = Rule::BoxL { item: ItemPath::top(0), formula: index };
            let inner_premiss = premisses_of(&premiss, &box_l).unwrap().pop().unwrap();
            let sub = derive_identity_at(inner_premiss.antecedent.clone(), 1, body);
            let boxed = Derivation::node(premiss, box_l, vec![sub]).unwrap_or_else(fail);
            Derivation::node(conclusion, Rule::BoxR, vec![boxed]).unwrap_or_else(fail)
        }
    }
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct DerivationDto {
    rule: String,
    conclusion: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    data: Option<serde_json::Value>,
    #[serde(default)]
    premisses: Vec<DerivationDto>,
}

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("bad JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad sequent `{text}`: {error}")]
    Sequent { text: String, error: crate::syntax::SyntaxError },
    #[error("bad formula `{text}`: {error}")]
    Formula { text: String, error: crate::syntax::SyntaxError },
    #[error("rule `{rule}`: {message}")]
    Rule { rule: String, message: String },
    #[error("{0}")]
    Assumption(#[from] InvalidAssumption),
}

fn item_path_data(at: &ItemPath) -> serde_json::Value {
    serde_json::json!({ "level": at.level, "index": at.index })
}

fn rule_data(rule: &Rule) -> Option<serde_json::Value> {
    match rule {
        Rule::Id | Rule::BotL | Rule::TopR | Rule::AndR | Rule::OrR1 | Rule::OrR2 | Rule::BoxR => {
            None
        }
        Rule::AndL { at } | Rule::OrL { at } | Rule::DiaL { at } => Some(item_path_data(at)),
        Rule::DiaR { principal } => Some(serde_json::json!({ "principal": principal })),
        Rule::BoxL { item, formula } => Some(serde_json::json!({
            "level": item.level, "index": item.index, "formula": formula
        })),
        Rule::Cut { level, plugged, formula } => Some(serde_json::json!({
            "level": level, "plugged": plugged, "formula": formula.to_string()
        })),
        Rule::Assn { assumption, item } => Some(serde_json::json!({
            "level": item.level, "index": item.index,
            "agent": assumption.agent.as_str(),
            "trigger": assumption.trigger,
            "consequent": assumption.consequent.to_string(),
        })),
    }
}

fn to_dto(d: &Derivation) -> DerivationDto {
    DerivationDto {
        rule: d.rule.name().to_string(),
        conclusion: d.conclusion.print_raw(),
        data: rule_data(&d.rule),
        premisses: d.premisses.iter().map(to_dto).collect(),
    }
}

fn get_usize(v: &serde_json::Value, key: &str, rule: &str) -> Result<usize, CodecError> {
    v.get(key).and_then(|x| x.as_u64()).map(|x| x as usize).ok_or_else(|| CodecError::Rule {
        rule: rule.into(),
        message: format!("missing integer field `{key}`"),
    })
}

fn get_path(v: &serde_json::Value, key: &str, rule: &str) -> Result<Vec<usize>, CodecError> {
    let arr = v.get(key).and_then(|x| x.as_array()).ok_or_else(|| CodecError::Rule {
        rule: rule.into(),
        message: format!("missing array field `{key}`"),
    })?;
    arr.iter()
        .map(|x| {
            x.as_u64().map(|x| x as usize).ok_or_else(|| CodecError::Rule {
                rule: rule.into(),
                message: format!("non-integer entry in `{key}`"),
            })
        })
        .collect()
}

fn get_str<'v>(v: &'v serde_json::Value, key: &str, rule: &str) -> Result<&'v str, CodecError> {
    v.get(key).and_then(|x| x.as_str()).ok_or_else(|| CodecError::Rule {
        rule: rule.into(),
        message: format!("missing string field `{key}`"),
    })
}

fn from_dto(dto: &DerivationDto) -> Result<Derivation, CodecError> {
    let conclusion = parse_sequent(&dto.conclusion)
        .map_err(|error| CodecError::Sequent { text: dto.conclusion.clone(), error })?;
    let name = dto.rule.as_str();
    let need = || {
        dto.data.as_ref().ok_or_else(|| CodecError::Rule {
            rule: name.into(),
            message: "missing instance data".into(),
        })
    };
    let item_path = |v: &serde_json::Value| -> Result<ItemPath, CodecError> {
        Ok(ItemPath::new(get_path(v, "level", name)?, get_usize(v, "index", name)?))
    };
    let rule = match name {
        "Id" => Rule::Id,
        "BotL" => Rule::BotL,
        "TopR" => Rule::TopR,
        "AndR" => Rule::AndR,
        "OrR1" => Rule::OrR1,
        "OrR2" => Rule::OrR2,
        "BoxR" => Rule::BoxR,
        "AndL" => Rule::AndL { at: item_path(need()?)? },
        "OrL" => Rule::OrL { at: item_path(need()?)? },
        "DiaL" => Rule::DiaL { at: item_path(need()?)? },
        "DiaR" => Rule::DiaR { principal: get_usize(need()?, "principal", name)? },
        "BoxL" => {
            let v = need()?;
            Rule::BoxL { item: item_path(v)?, formula: get_usize(v, "formula", name)? }
        }
        "Cut" => {
            let v = need()?;
            let text = get_str(v, "formula", name)?;
            let formula = parse_formula(text)
                .map_err(|error| CodecError::Formula { text: text.into(), error })?;
            Rule::Cut {
                level: get_path(v, "level", name)?,
                plugged: get_path(v, "plugged", name)?,
                formula,
            }
        }
        "Assn" => {
            let v = need()?;
            let text = get_str(v, "consequent", name)?;
            let consequent = parse_formula(text)
                .map_err(|error| CodecError::Formula { text: text.into(), error })?;
            let assumption = AssumptionRule::new(
                Agent::new(get_str(v, "agent", name)?),
                get_str(v, "trigger", name)?,
                consequent,
            )?;
            Rule::Assn { assumption, item: item_path(v)? }
        }
        other => {
            return Err(CodecError::Rule {
                rule: other.into(),
                message: "unknown rule name".into(),
            })
        }
    };
    let premisses = dto.premisses.iter().map(from_dto).collect::<Result<Vec<_>, _>>()?;
    Ok(Derivation { conclusion, rule, premisses })
}

impl Derivation {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&to_dto(self)).expect("derivation DTOs serialize")
    }

    /// Parses a serialized derivation. The result is *not* checked; run
    /// [`check`] to validate it against an assumption set.
    pub fn from_json(text: &str) -> Result<Derivation, CodecError> {
        from_dto(&serde_json::from_str::<DerivationDto>(text)?)
    }

    /// Indented plain-text rendering, one node per line.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out, 0);
        out
    }

    fn render_into(&self, out: &mut String, depth: usize) {
        use std::fmt::Write;
        let _ = writeln!(
            out,
            "{:indent$}[{}] {}",
            "",
            self.rule.name(),
            self.conclusion,
            indent = 2 * depth
        );
        for p in &self.premisses {
            p.render_into(out, depth + 1);
        }
    }
}
