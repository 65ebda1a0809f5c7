//! Admissible structural rules as total procedures on derivations.
//!
//! Each operation consumes a checking, cut-free derivation (`Assn` nodes are
//! fine) and produces a checking, cut-free derivation of the transformed
//! conclusion:
//!
//! - [`weaken`]: add items at any level;
//! - [`invert`]: replace the conclusion of an invertible rule by its
//!   premiss(es) — `DiaL`, `BoxR`, `AndL`, `OrL` and `AndR` are invertible;
//! - [`top_weak`]: replace a `top` item by an arbitrary context;
//! - [`contract_item`] / [`contract`]: drop one of two equal items, or one
//!   of two equal sub-multisets, at the same level;
//! - [`eliminate_cut`]: combine a derivation of `Γ |- m` with one of
//!   `Δ'[m] |- m'` into a cut-free derivation of `Δ'[Γ] |- m'`;
//! - [`derive_k`]: merge `(Γ)^A, (Γ')^A` into their union item
//!   `(Γ, Γ')^A` when that union item is already present.
//!
//! Weakening and the inversions never increase derivation height.
//! Contraction and cut elimination may grow a derivation but always
//! terminate; cut elimination recurses along a strictly decreasing rank
//! (cut-formula size, then height sum), which is asserted in debug builds.

mod contract;
mod cut;

pub use contract::{contract, contract_item};
pub use cut::{derive_k, eliminate_cut, eliminate_cut_traced, CutCase};

use thiserror::Error;

use crate::calculus::{premisses_of, Derivation, Rejection, Rule, SchemaViolation};
use crate::syntax::{Context, Formula, Item, ItemPath, LevelPath, PathError, Sequent};

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("input derivation does not check: {0}")]
    InputRejected(#[from] Rejection),
    #[error("{0}")]
    Path(#[from] PathError),
    #[error("{0}")]
    Schema(#[from] SchemaViolation),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("Cut encountered in a cut-free transformation input")]
    CutInInput,
    #[error("internal address transport failed: {0}")]
    Transport(String),
    #[error("transformation recursion exceeded {MAX_TRANSFORM_DEPTH} frames")]
    DepthExceeded,
}

/// Call-stack budget across all transformation recursions; exceeding it is
/// reported as an error instead of overflowing the stack.
pub const MAX_TRANSFORM_DEPTH: usize = 1024;

thread_local! {
    static TRANSFORM_DEPTH: std::cell::Cell<usize> = const { std::cell::Cell::new(0) };
}

/// RAII frame counter for the recursive transformation procedures.
pub(crate) struct DepthGuard;

impl DepthGuard {
    pub(crate) fn enter() -> Result<DepthGuard, TransformError> {
        TRANSFORM_DEPTH.with(|d| {
            if d.get() >= MAX_TRANSFORM_DEPTH {
                Err(TransformError::DepthExceeded)
            } else {
                d.set(d.get() + 1);
                Ok(DepthGuard)
            }
        })
    }
}

impl Drop for DepthGuard {
    fn drop(&mut self) {
        TRANSFORM_DEPTH.with(|d| d.set(d.get() - 1));
    }
}

fn shape_err<T>(msg: impl Into<String>) -> Result<T, TransformError> {
    Err(TransformError::Shape(msg.into()))
}

fn transport_err<T>(msg: impl Into<String>) -> Result<T, TransformError> {
    Err(TransformError::Transport(msg.into()))
}

// ---------------------------------------------------------------------------
// address transport
// ---------------------------------------------------------------------------

/// Does `level` descend strictly inside the item at `item`?
pub(crate) fn level_within_item(level: &[usize], item: &ItemPath) -> bool {
    level.len() > item.level.len()
        && level[..item.level.len()] == item.level[..]
        && level[item.level.len()] == item.index
}

pub(crate) fn item_within_item(a: &ItemPath, b: &ItemPath) -> bool {
    level_within_item(&a.level, b)
}

/// Re-express a level path after the item at `removed` was deleted from its
/// level. `None` when the path descends through the removed item.
pub(crate) fn shift_level_after_removal(level: &[usize], removed: &ItemPath) -> Option<LevelPath> {
    if level_within_item(level, removed) {
        return None;
    }
    let mut out = level.to_vec();
    if out.len() > removed.level.len() && out[..removed.level.len()] == removed.level[..] {
        let step = &mut out[removed.level.len()];
        if *step > removed.index {
            *step -= 1;
        }
    }
    Some(out)
}

/// Re-express an item address after the item at `removed` was deleted.
/// `None` when the address is the removed item or lies inside it.
pub(crate) fn shift_item_after_removal(a: &ItemPath, removed: &ItemPath) -> Option<ItemPath> {
    if a.level == removed.level {
        if a.index == removed.index {
            return None;
        }
        let index = if a.index > removed.index { a.index - 1 } else { a.index };
        return Some(ItemPath::new(a.level.clone(), index));
    }
    let level = shift_level_after_removal(&a.level, removed)?;
    Some(ItemPath::new(level, a.index))
}

/// Transport a rule instance from a conclusion to the same conclusion after
/// the item at `removed` was deleted (appended items never shift existing
/// addresses). `None` when the instance addressed the removed item.
pub(crate) fn rule_after_removal(rule: &Rule, removed: &ItemPath) -> Option<Rule> {
    match rule {
        Rule::Id | Rule::BotL | Rule::TopR | Rule::AndR | Rule::OrR1 | Rule::OrR2 | Rule::BoxR => {
            Some(rule.clone())
        }
        Rule::AndL { at } => Some(Rule::AndL { at: shift_item_after_removal(at, removed)? }),
        Rule::OrL { at } => Some(Rule::OrL { at: shift_item_after_removal(at, removed)? }),
        Rule::DiaL { at } => Some(Rule::DiaL { at: shift_item_after_removal(at, removed)? }),
        Rule::DiaR { principal } => {
            if removed.level.is_empty() {
                match removed.index {
                    i if i == *principal => None,
                    i if i < *principal => Some(Rule::DiaR { principal: principal - 1 }),
                    _ => Some(Rule::DiaR { principal: *principal }),
                }
            } else {
                Some(Rule::DiaR { principal: *principal })
            }
        }
        Rule::BoxL { item, formula } => {
            let moved = shift_item_after_removal(item, removed)?;
            let mut inner = item.level.clone();
            inner.push(item.index);
            let formula = if removed.level == inner {
                match removed.index {
                    i if i == *formula => return None,
                    i if i < *formula => formula - 1,
                    _ => *formula,
                }
            } else {
                *formula
            };
            Some(Rule::BoxL { item: moved, formula })
        }
        Rule::Assn { assumption, item } => Some(Rule::Assn {
            assumption: assumption.clone(),
            item: shift_item_after_removal(item, removed)?,
        }),
        Rule::Cut { .. } => None,
    }
}

/// The `index`-th premiss the kernel computes for `rule` at `conclusion`.
pub(crate) fn premiss_shape(
    conclusion: &Sequent,
    rule: &Rule,
    index: usize,
) -> Result<Sequent, TransformError> {
    let mut all = premisses_of(conclusion, rule)?;
    if index >= all.len() {
        return transport_err(format!("{} has no premiss {index}", rule.name()));
    }
    Ok(all.swap_remove(index))
}

pub(crate) fn node(
    target: Sequent,
    rule: Rule,
    children: Vec<Derivation>,
) -> Result<Derivation, TransformError> {
    Derivation::node(target, rule, children).map_err(TransformError::from)
}

/// Entry validation shared by the public transforms: inputs taller than the
/// recursion budget are rejected up front, and in debug builds the input
/// must check cut-free against the assumptions it itself cites.
pub(crate) fn check_entry(d: &Derivation) -> Result<(), TransformError> {
    if d.height() > MAX_TRANSFORM_DEPTH {
        return Err(TransformError::DepthExceeded);
    }
    #[cfg(debug_assertions)]
    {
        let assumptions: Vec<_> = d.assumptions_used().into_iter().cloned().collect();
        if let Err(e) = crate::calculus::check(d, &assumptions, false) {
            panic!("transform input does not check cut-free: {e}");
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// weakening
// ---------------------------------------------------------------------------

/// From `Δ[Γ] |- m` to `Δ[Γ, extra] |- m`: insert the items of `extra` at
/// the level addressed by `at`. The output checks, stays cut-free, and is
/// no taller than the input.
pub fn weaken(d: &Derivation, at: &[usize], extra: &Context) -> Result<Derivation, TransformError> {
    check_entry(d)?;
    d.conclusion.antecedent.level(at)?;
    if extra.is_empty() {
        return Ok(d.clone());
    }
    let out = weaken_rec(d, at, extra)?;
    debug_assert!(out.height() <= d.height());
    Ok(out)
}

fn weaken_rec(d: &Derivation, at: &[usize], extra: &Context) -> Result<Derivation, TransformError> {
    let _frame = DepthGuard::enter()?;
    let ante = d.conclusion.antecedent.plug(at, extra)?;
    let target = Sequent::new(ante, d.conclusion.succedent.clone());
    match &d.rule {
        Rule::Id | Rule::BotL | Rule::TopR => node(target, d.rule.clone(), vec![]),
        Rule::AndR | Rule::OrR1 | Rule::OrR2 => {
            let children = d
                .premisses
                .iter()
                .map(|c| weaken_rec(c, at, extra))
                .collect::<Result<Vec<_>, _>>()?;
            node(target, d.rule.clone(), children)
        }
        Rule::BoxR => {
            let mut inner = vec![0];
            inner.extend_from_slice(at);
            node(target, Rule::BoxR, vec![weaken_rec(&d.premisses[0], &inner, extra)?])
        }
        Rule::DiaR { principal } => {
            if !at.is_empty() && at[0] == *principal {
                // inside the principal item: weaken the premiss, keep the parameter
                let child = weaken_rec(&d.premisses[0], &at[1..], extra)?;
                node(target, Rule::DiaR { principal: *principal }, vec![child])
            } else {
                // the parameter absorbs the new items
                node(target, Rule::DiaR { principal: *principal }, vec![d.premisses[0].clone()])
            }
        }
        Rule::AndL { at: a } | Rule::OrL { at: a } | Rule::DiaL { at: a } => {
            let Some(inner) = shift_level_after_removal(at, a) else {
                return transport_err("weakening level enters a formula item");
            };
            let children = d
                .premisses
                .iter()
                .map(|c| weaken_rec(c, &inner, extra))
                .collect::<Result<Vec<_>, _>>()?;
            node(target, d.rule.clone(), children)
        }
        Rule::BoxL { .. } | Rule::Assn { .. } => {
            // the premiss only appends, so the level address is unchanged
            let children = d
                .premisses
                .iter()
                .map(|c| weaken_rec(c, at, extra))
                .collect::<Result<Vec<_>, _>>()?;
            node(target, d.rule.clone(), children)
        }
        Rule::Cut { .. } => Err(TransformError::CutInInput),
    }
}

// ---------------------------------------------------------------------------
// inversions
// ---------------------------------------------------------------------------

/// Which conjunct [`invert`] keeps when undoing `AndR`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConjunctSide {
    Left,
    Right,
}

/// An invertible rule occurrence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Inversion {
    /// `Δ[<A>(m)] |- m'` to `Δ[(m)^A] |- m'`.
    DiaL(ItemPath),
    /// `Γ |- [A](m)` to `(Γ)^A |- m`.
    BoxR,
    /// `Δ[m1 & m2] |- m` to `Δ[m1, m2] |- m`.
    AndL(ItemPath),
    /// `Δ[m1 | m2] |- m` to the pair `Δ[m1] |- m` and `Δ[m2] |- m`.
    OrL(ItemPath),
    /// `Γ |- m1 & m2` to `Γ |- mi`.
    AndR(ConjunctSide),
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum Inverted {
    One(Derivation),
    Two(Derivation, Derivation),
}

impl Inverted {
    pub fn single(self) -> Derivation {
        match self {
            Inverted::One(d) => d,
            Inverted::Two(..) => panic!("inversion produced two derivations"),
        }
    }
}

/// Replace the conclusion of an invertible rule by its premiss shape. The
/// output(s) check, stay cut-free, and are no taller than the input.
pub fn invert(d: &Derivation, which: &Inversion) -> Result<Inverted, TransformError> {
    check_entry(d)?;
    let out = match which {
        Inversion::DiaL(at) => Inverted::One(invert_dia_l(d, at)?),
        Inversion::BoxR => Inverted::One(invert_box_r(d)?),
        Inversion::AndL(at) => Inverted::One(invert_and_l(d, at)?),
        Inversion::OrL(at) => {
            let (a, b) = invert_or_l(d, at)?;
            Inverted::Two(a, b)
        }
        Inversion::AndR(side) => Inverted::One(invert_and_r(d, *side)?),
    };
    match &out {
        Inverted::One(x) => debug_assert!(x.height() <= d.height()),
        Inverted::Two(x, y) => {
            debug_assert!(x.height() <= d.height() && y.height() <= d.height())
        }
    }
    Ok(out)
}

/// Shared commute step for the single-output left inversions: transport the
/// inverted occurrence through this node's own rule, recurse, and rebuild on
/// the target.
fn commute_unary<F>(
    d: &Derivation,
    at: &ItemPath,
    target: Sequent,
    recurse: &F,
) -> Result<Derivation, TransformError>
where
    F: Fn(&Derivation, &ItemPath) -> Result<Derivation, TransformError>,
{
    let _frame = DepthGuard::enter()?;
    match &d.rule {
        Rule::Id | Rule::BotL | Rule::TopR => node(target, d.rule.clone(), vec![]),
        Rule::AndR | Rule::OrR1 | Rule::OrR2 => {
            let children =
                d.premisses.iter().map(|c| recurse(c, at)).collect::<Result<Vec<_>, _>>()?;
            node(target, d.rule.clone(), children)
        }
        Rule::BoxR => {
            let mut level = vec![0];
            level.extend_from_slice(&at.level);
            let inner = ItemPath::new(level, at.index);
            node(target, Rule::BoxR, vec![recurse(&d.premisses[0], &inner)?])
        }
        Rule::DiaR { principal } => {
            if !at.level.is_empty() && at.level[0] == *principal {
                let inner = ItemPath::new(at.level[1..].to_vec(), at.index);
                let child = recurse(&d.premisses[0], &inner)?;
                node(target, Rule::DiaR { principal: *principal }, vec![child])
            } else {
                // parameter occurrence: reuse the premiss with a new parameter
                let principal = if at.level.is_empty() && at.index < *principal {
                    principal - 1
                } else {
                    *principal
                };
                node(target, Rule::DiaR { principal }, vec![d.premisses[0].clone()])
            }
        }
        Rule::AndL { at: a } | Rule::OrL { at: a } | Rule::DiaL { at: a } => {
            let Some(rule) = rule_after_removal(&d.rule, at) else {
                return transport_err("inverted occurrence collides with a principal");
            };
            let Some(moved) = shift_item_after_removal(at, a) else {
                return transport_err("occurrence lost across a left rule");
            };
            let children =
                d.premisses.iter().map(|c| recurse(c, &moved)).collect::<Result<Vec<_>, _>>()?;
            node(target, rule, children)
        }
        Rule::BoxL { .. } | Rule::Assn { .. } => {
            let Some(rule) = rule_after_removal(&d.rule, at) else {
                return transport_err("inverted occurrence collides with a principal");
            };
            let children =
                d.premisses.iter().map(|c| recurse(c, at)).collect::<Result<Vec<_>, _>>()?;
            node(target, rule, children)
        }
        Rule::Cut { .. } => Err(TransformError::CutInInput),
    }
}

pub fn invert_dia_l(d: &Derivation, at: &ItemPath) -> Result<Derivation, TransformError> {
    if !matches!(d.conclusion.antecedent.item(at)?, Item::F(Formula::Dia(..))) {
        return shape_err(format!("no `<A>` formula at {at}"));
    }
    let target = premiss_shape(&d.conclusion, &Rule::DiaL { at: at.clone() }, 0)?;
    if matches!(&d.rule, Rule::DiaL { at: a } if a == at) {
        return d.premisses[0].clone().transport(&target).map_err(TransformError::from);
    }
    commute_unary(d, at, target, &invert_dia_l)
}

pub fn invert_and_l(d: &Derivation, at: &ItemPath) -> Result<Derivation, TransformError> {
    if !matches!(d.conclusion.antecedent.item(at)?, Item::F(Formula::And(..))) {
        return shape_err(format!("no conjunction at {at}"));
    }
    let target = premiss_shape(&d.conclusion, &Rule::AndL { at: at.clone() }, 0)?;
    if matches!(&d.rule, Rule::AndL { at: a } if a == at) {
        return d.premisses[0].clone().transport(&target).map_err(TransformError::from);
    }
    commute_unary(d, at, target, &invert_and_l)
}

pub fn invert_or_l(
    d: &Derivation,
    at: &ItemPath,
) -> Result<(Derivation, Derivation), TransformError> {
    let _frame = DepthGuard::enter()?;
    if !matches!(d.conclusion.antecedent.item(at)?, Item::F(Formula::Or(..))) {
        return shape_err(format!("no disjunction at {at}"));
    }
    let rule = Rule::OrL { at: at.clone() };
    let t1 = premiss_shape(&d.conclusion, &rule, 0)?;
    let t2 = premiss_shape(&d.conclusion, &rule, 1)?;
    if matches!(&d.rule, Rule::OrL { at: a } if a == at) {
        let a = d.premisses[0].clone().transport(&t1)?;
        let b = d.premisses[1].clone().transport(&t2)?;
        return Ok((a, b));
    }
    match &d.rule {
        Rule::Id | Rule::BotL | Rule::TopR => {
            Ok((node(t1, d.rule.clone(), vec![])?, node(t2, d.rule.clone(), vec![])?))
        }
        Rule::AndR | Rule::OrR1 | Rule::OrR2 => {
            let mut firsts = Vec::new();
            let mut seconds = Vec::new();
            for c in &d.premisses {
                let (a, b) = invert_or_l(c, at)?;
                firsts.push(a);
                seconds.push(b);
            }
            Ok((node(t1, d.rule.clone(), firsts)?, node(t2, d.rule.clone(), seconds)?))
        }
        Rule::BoxR => {
            let mut level = vec![0];
            level.extend_from_slice(&at.level);
            let inner = ItemPath::new(level, at.index);
            let (a, b) = invert_or_l(&d.premisses[0], &inner)?;
            Ok((node(t1, Rule::BoxR, vec![a])?, node(t2, Rule::BoxR, vec![b])?))
        }
        Rule::DiaR { principal } => {
            if !at.level.is_empty() && at.level[0] == *principal {
                let inner = ItemPath::new(at.level[1..].to_vec(), at.index);
                let (a, b) = invert_or_l(&d.premisses[0], &inner)?;
                let rule = Rule::DiaR { principal: *principal };
                Ok((node(t1, rule.clone(), vec![a])?, node(t2, rule, vec![b])?))
            } else {
                let principal = if at.level.is_empty() && at.index < *principal {
                    principal - 1
                } else {
                    *principal
                };
                let rule = Rule::DiaR { principal };
                Ok((
                    node(t1, rule.clone(), vec![d.premisses[0].clone()])?,
                    node(t2, rule, vec![d.premisses[0].clone()])?,
                ))
            }
        }
        Rule::AndL { at: a } | Rule::DiaL { at: a } => {
            let Some(rule) = rule_after_removal(&d.rule, at) else {
                return transport_err("inverted occurrence collides with a principal");
            };
            let Some(moved) = shift_item_after_removal(at, a) else {
                return transport_err("occurrence lost across a left rule");
            };
            let (x, y) = invert_or_l(&d.premisses[0], &moved)?;
            Ok((node(t1, rule.clone(), vec![x])?, node(t2, rule, vec![y])?))
        }
        Rule::OrL { at: a } => {
            let Some(rule) = rule_after_removal(&d.rule, at) else {
                return transport_err("inverted occurrence collides with a principal");
            };
            let Some(moved) = shift_item_after_removal(at, a) else {
                return transport_err("occurrence lost across a left rule");
            };
            let (x1, y1) = invert_or_l(&d.premisses[0], &moved)?;
            let (x2, y2) = invert_or_l(&d.premisses[1], &moved)?;
            Ok((node(t1, rule.clone(), vec![x1, x2])?, node(t2, rule, vec![y1, y2])?))
        }
        Rule::BoxL { .. } | Rule::Assn { .. } => {
            let Some(rule) = rule_after_removal(&d.rule, at) else {
                return transport_err("inverted occurrence collides with a principal");
            };
            let (x, y) = invert_or_l(&d.premisses[0], at)?;
            Ok((node(t1, rule.clone(), vec![x])?, node(t2, rule, vec![y])?))
        }
        Rule::Cut { .. } => Err(TransformError::CutInInput),
    }
}

pub fn invert_box_r(d: &Derivation) -> Result<Derivation, TransformError> {
    let _frame = DepthGuard::enter()?;
    if !matches!(d.conclusion.succedent, Formula::Box_(..)) {
        return shape_err(format!("succedent `{}` is not boxed", d.conclusion.succedent));
    }
    let target = premiss_shape(&d.conclusion, &Rule::BoxR, 0)?;
    match &d.rule {
        Rule::BoxR => d.premisses[0].clone().transport(&target).map_err(TransformError::from),
        Rule::BotL => node(target, Rule::BotL, vec![]),
        Rule::AndL { .. }
        | Rule::OrL { .. }
        | Rule::DiaL { .. }
        | Rule::BoxL { .. }
        | Rule::Assn { .. } => {
            let rule = prefix_rule_level(&d.rule);
            let children = d.premisses.iter().map(invert_box_r).collect::<Result<Vec<_>, _>>()?;
            node(target, rule, children)
        }
        Rule::Cut { .. } => Err(TransformError::CutInInput),
        other => transport_err(format!("rule {} cannot conclude a boxed succedent", other.name())),
    }
}

/// Wrap left-rule instance data in one more level (index 0), as the whole
/// antecedent becomes the content of a single annotated item.
fn prefix_rule_level(rule: &Rule) -> Rule {
    let prefix = |at: &ItemPath| {
        let mut level = vec![0];
        level.extend_from_slice(&at.level);
        ItemPath::new(level, at.index)
    };
    match rule {
        Rule::AndL { at } => Rule::AndL { at: prefix(at) },
        Rule::OrL { at } => Rule::OrL { at: prefix(at) },
        Rule::DiaL { at } => Rule::DiaL { at: prefix(at) },
        Rule::BoxL { item, formula } => Rule::BoxL { item: prefix(item), formula: *formula },
        Rule::Assn { assumption, item } => {
            Rule::Assn { assumption: assumption.clone(), item: prefix(item) }
        }
        other => other.clone(),
    }
}

pub fn invert_and_r(d: &Derivation, side: ConjunctSide) -> Result<Derivation, TransformError> {
    let _frame = DepthGuard::enter()?;
    if !matches!(d.conclusion.succedent, Formula::And(..)) {
        return shape_err(format!("succedent `{}` is not a conjunction", d.conclusion.succedent));
    }
    let index = match side {
        ConjunctSide::Left => 0,
        ConjunctSide::Right => 1,
    };
    let target = premiss_shape(&d.conclusion, &Rule::AndR, index)?;
    match &d.rule {
        Rule::AndR => d.premisses[index].clone().transport(&target).map_err(TransformError::from),
        Rule::BotL => node(target, Rule::BotL, vec![]),
        Rule::AndL { .. }
        | Rule::OrL { .. }
        | Rule::DiaL { .. }
        | Rule::BoxL { .. }
        | Rule::Assn { .. } => {
            let children =
                d.premisses.iter().map(|c| invert_and_r(c, side)).collect::<Result<Vec<_>, _>>()?;
            node(target, d.rule.clone(), children)
        }
        Rule::Cut { .. } => Err(TransformError::CutInInput),
        other => {
            transport_err(format!("rule {} cannot conclude a conjunctive succedent", other.name()))
        }
    }
}

// ---------------------------------------------------------------------------
// top replacement
// ---------------------------------------------------------------------------

/// From `Δ[top] |- m` to `Δ[Γ] |- m`: replace the `top` item at `at` by the
/// items of `replacement` (possibly none). The output checks, stays
/// cut-free, and is no taller than the input.
pub fn top_weak(
    d: &Derivation,
    at: &ItemPath,
    replacement: &Context,
) -> Result<Derivation, TransformError> {
    check_entry(d)?;
    if !matches!(d.conclusion.antecedent.item(at)?, Item::F(Formula::Top)) {
        return shape_err(format!("item at {at} is not `top`"));
    }
    let out = top_weak_rec(d, at, replacement)?;
    debug_assert!(out.height() <= d.height());
    Ok(out)
}

fn top_weak_rec(
    d: &Derivation,
    at: &ItemPath,
    replacement: &Context,
) -> Result<Derivation, TransformError> {
    let _frame = DepthGuard::enter()?;
    let (ante, ()) = d.conclusion.antecedent.edit_level(&at.level, |items| {
        items.remove(at.index);
        items.extend(replacement.items.iter().cloned());
    })?;
    let target = Sequent::new(ante, d.conclusion.succedent.clone());
    // a `top` item is never principal, so every rule commutes
    commute_unary(d, at, target, &|c, a| top_weak_rec(c, a, replacement))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{check, derive_identity, AssumptionRule, Derivation, Rule};
    use crate::syntax::{parse_context, parse_formula, parse_sequent, Agent};

    fn seq(s: &str) -> Sequent {
        parse_sequent(s).unwrap()
    }

    fn ctx(s: &str) -> Context {
        parse_context(s).unwrap()
    }

    #[test]
    fn weaken_id_at_top() {
        let d = Derivation::leaf(seq("p |- p"), Rule::Id).unwrap();
        let w = weaken(&d, &[], &ctx("q")).unwrap();
        assert_eq!(w.conclusion, seq("p, q |- p"));
        assert_eq!(w.rule, Rule::Id);
        assert!(check(&w, &[], false).is_ok());
    }

    #[test]
    fn weaken_diar_reparameterizes() {
        // (p)^A |- <A>(p), weakened at the top: the new item joins the parameter
        let base = derive_identity(&Context::empty(), &parse_formula("<A>(p)").unwrap());
        let diar = base.premisses[0].clone();
        assert_eq!(diar.rule, Rule::DiaR { principal: 0 });
        let w = weaken(&diar, &[], &ctx("q")).unwrap();
        assert!(w.conclusion.multiset_eq(&seq("(p)^A, q |- <A>(p)")));
        assert_eq!(w.premisses[0], diar.premisses[0]);
        assert!(check(&w, &[], false).is_ok());

        // weakened inside the annotated item: the premiss is weakened instead
        let w = weaken(&diar, &[0], &ctx("q")).unwrap();
        assert!(w.conclusion.multiset_eq(&seq("(p, q)^A |- <A>(p)")));
        assert!(w.premisses[0].conclusion.multiset_eq(&seq("p, q |- p")));
        assert!(check(&w, &[], false).is_ok());
        assert!(w.height() <= diar.height());
    }

    #[test]
    fn weaken_nested_level() {
        let d = derive_identity(&ctx("(r)^B"), &parse_formula("[B](q)").unwrap());
        let w = weaken(&d, &[0], &ctx("s, t")).unwrap();
        assert!(w.conclusion.multiset_eq(&seq("(r, s, t)^B, [B](q) |- [B](q)")));
        assert!(check(&w, &[], false).is_ok());
        assert!(weaken(&d, &[7], &ctx("s")).is_err());
    }

    #[test]
    fn invert_last_rule_strips_it() {
        let d = derive_identity(&Context::empty(), &parse_formula("[A](p)").unwrap());
        let inv = invert_box_r(&d).unwrap();
        assert!(inv.conclusion.multiset_eq(&seq("([A](p))^A |- p")));
        assert!(check(&inv, &[], false).is_ok());
    }

    #[test]
    fn invert_dia_l_example() {
        // {<A>(p)} |- <A>(p)  ~>  {(p)^A} |- <A>(p)
        let d = derive_identity(&Context::empty(), &parse_formula("<A>(p)").unwrap());
        let inv = invert_dia_l(&d, &ItemPath::top(0)).unwrap();
        assert!(inv.conclusion.multiset_eq(&seq("(p)^A |- <A>(p)")));
        assert!(check(&inv, &[], false).is_ok());
        assert!(inv.height() <= d.height());
    }

    #[test]
    fn invert_and_r_projects() {
        let d = derive_identity(&Context::empty(), &parse_formula("p & q").unwrap());
        let left = invert_and_r(&d, ConjunctSide::Left).unwrap();
        assert!(left.conclusion.multiset_eq(&seq("p & q |- p")));
        assert!(check(&left, &[], false).is_ok());
        let right = invert_and_r(&d, ConjunctSide::Right).unwrap();
        assert!(right.conclusion.multiset_eq(&seq("p & q |- q")));
    }

    #[test]
    fn invert_and_l_unfolds_an_untouched_occurrence() {
        // identity proof of q & r |- q & r, inverting the antecedent occurrence
        let d = derive_identity(&ctx("s"), &parse_formula("q & r").unwrap());
        let inv = invert_and_l(&d, &ItemPath::top(1)).unwrap();
        assert!(inv.conclusion.multiset_eq(&seq("s, q, r |- q & r")));
        assert!(check(&inv, &[], false).is_ok());
    }

    #[test]
    fn invert_or_l_splits() {
        let d = derive_identity(&ctx("s"), &parse_formula("p | q").unwrap());
        let (a, b) = invert_or_l(&d, &ItemPath::top(1)).unwrap();
        assert!(a.conclusion.multiset_eq(&seq("s, p |- p | q")));
        assert!(b.conclusion.multiset_eq(&seq("s, q |- p | q")));
        assert!(check(&a, &[], false).is_ok());
        assert!(check(&b, &[], false).is_ok());
    }

    #[test]
    fn transforms_commute_past_assn() {
        let assumption =
            AssumptionRule::new(Agent::new("A"), "s", parse_formula("s | t").unwrap()).unwrap();
        let d = Derivation::node(
            seq("(s)^A, q & q |- top"),
            Rule::Assn { assumption: assumption.clone(), item: ItemPath::top(0) },
            vec![Derivation::leaf(seq("(s)^A, q & q, s | t |- top"), Rule::TopR).unwrap()],
        )
        .unwrap();
        assert!(check(&d, std::slice::from_ref(&assumption), false).is_ok());

        let w = weaken(&d, &[0], &ctx("u")).unwrap();
        assert!(w.conclusion.multiset_eq(&seq("(s, u)^A, q & q |- top")));
        assert!(check(&w, std::slice::from_ref(&assumption), false).is_ok());

        let inv = invert_and_l(&d, &ItemPath::top(1)).unwrap();
        assert!(inv.conclusion.multiset_eq(&seq("(s)^A, q, q |- top")));
        assert!(check(&inv, &[assumption], false).is_ok());
    }

    #[test]
    fn top_weak_examples() {
        let d = Derivation::leaf(seq("top |- top"), Rule::TopR).unwrap();
        let t = top_weak(&d, &ItemPath::top(0), &ctx("p")).unwrap();
        assert_eq!(t.conclusion, seq("p |- top"));
        assert_eq!(t.rule, Rule::TopR);

        // empty replacement deletes the item
        let t = top_weak(&d, &ItemPath::top(0), &Context::empty()).unwrap();
        assert_eq!(t.conclusion, seq("|- top"));

        // through a real proof
        let d = derive_identity(&ctx("top, (top)^B"), &parse_formula("<B>(q)").unwrap());
        let t = top_weak(&d, &ItemPath::top(0), &ctx("x, y")).unwrap();
        assert!(t.conclusion.multiset_eq(&seq("x, y, (top)^B, <B>(q) |- <B>(q)")));
        assert!(check(&t, &[], false).is_ok());
        // after the remove-and-append edit the annotated item sits at index 0
        let t2 = top_weak(&t, &ItemPath::new(vec![0], 0), &ctx("z")).unwrap();
        assert!(t2.conclusion.multiset_eq(&seq("x, y, (z)^B, <B>(q) |- <B>(q)")));
        assert!(check(&t2, &[], false).is_ok());

        assert!(top_weak(&d, &ItemPath::top(2), &ctx("p")).is_err());
    }
}
