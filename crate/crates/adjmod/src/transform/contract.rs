//! Contraction of equal items and equal sub-multisets.
//!
//! `contract_item` turns a derivation of `Δ[I, I] |- m` into one of
//! `Δ[I] |- m`, recursing on derivation height:
//!
//! - a rule acting away from both copies commutes past the contraction;
//! - a rule whose principal is one of the copies (a formula copy consumed
//!   by `AndL`/`OrL`/`DiaL`) is undone in the premiss by inverting the
//!   surviving copy, after which the contraction falls on strictly smaller
//!   pieces and the rule is reapplied to the survivor;
//! - `BoxL`/`Assn` never consume anything, so their premisses keep both
//!   copies and the instance is re-aimed at the survivor afterwards;
//! - a rule acting strictly inside one copy is mirrored into the other
//!   copy first (by inversion for `AndL`/`OrL`/`DiaL`, by weakening for
//!   the sibling added by `BoxL`/`Assn`), restoring equal copies in the
//!   premiss.
//!
//! The output never gets taller than the input, which is what bounds the
//! recursion.

use crate::calculus::{CtxIso, Derivation, Rule};
use crate::syntax::{Context, Item, ItemPath, LevelPath, Sequent};

use super::{
    invert_and_l, invert_dia_l, invert_or_l, item_within_item, node, rule_after_removal, shape_err,
    shift_level_after_removal, transport_err, weaken, DepthGuard, TransformError,
};

/// From `Δ[I, I] |- m` to `Δ[I] |- m`: the items at indices `i` and `j` of
/// the level at `at` must be equal as nested multisets; the copy at the
/// larger index is dropped.
pub fn contract_item(
    d: &Derivation,
    at: &[usize],
    i: usize,
    j: usize,
) -> Result<Derivation, TransformError> {
    super::check_entry(d)?;
    if i == j {
        return shape_err("contraction needs two distinct items");
    }
    let (lo, hi) = (i.min(j), i.max(j));
    let items = d.conclusion.antecedent.level(at)?;
    let (Some(a), Some(b)) = (items.get(lo), items.get(hi)) else {
        return shape_err(format!("no items {lo}, {hi} at level {at:?}"));
    };
    if a.canonical() != b.canonical() {
        return shape_err(format!("designated items `{a}` and `{b}` are not equal"));
    }
    let out = contract_rec(d, at, lo, hi)?;
    debug_assert!(out.height() <= d.height());
    Ok(out)
}

/// From `Δ[Γ, Γ] |- m` to `Δ[Γ] |- m`: `first` and `second` pick out two
/// disjoint equal sub-multisets of the level at `at`; the `second` group is
/// contracted away pair by pair.
pub fn contract(
    d: &Derivation,
    at: &[usize],
    first: &[usize],
    second: &[usize],
) -> Result<Derivation, TransformError> {
    if first.len() != second.len() {
        return shape_err("contraction groups differ in size");
    }
    if first.iter().any(|i| second.contains(i)) {
        return shape_err("contraction groups overlap");
    }
    let mut current = d.clone();
    let mut first: Vec<usize> = first.to_vec();
    let mut second: Vec<usize> = second.to_vec();
    while let Some(s) = second.pop() {
        let items = current.conclusion.antecedent.level(at)?;
        let key = items
            .get(s)
            .ok_or_else(|| TransformError::Shape(format!("index {s} out of bounds")))?
            .canonical();
        let pos = first
            .iter()
            .position(|&f| items.get(f).map(Item::canonical) == Some(key.clone()))
            .ok_or_else(|| {
                TransformError::Shape("contraction groups are not equal multisets".into())
            })?;
        let f = first.remove(pos);
        current = contract_item(&current, at, f, s)?;
        let removed = f.max(s);
        for idx in first.iter_mut().chain(second.iter_mut()) {
            if *idx > removed {
                *idx -= 1;
            }
        }
    }
    Ok(current)
}

fn contract_rec(
    d: &Derivation,
    level: &[usize],
    lo: usize,
    hi: usize,
) -> Result<Derivation, TransformError> {
    let _frame = DepthGuard::enter()?;
    debug_assert!({
        let items = d.conclusion.antecedent.level(level).unwrap();
        items[lo].canonical() == items[hi].canonical()
    });
    let removed = ItemPath::new(level.to_vec(), hi);
    let lo_addr = ItemPath::new(level.to_vec(), lo);
    let (ante, ()) = d.conclusion.antecedent.edit_level(level, |items| {
        items.remove(hi);
    })?;
    let target = Sequent::new(ante, d.conclusion.succedent.clone());

    match &d.rule {
        Rule::Id | Rule::BotL | Rule::TopR => node(target, d.rule.clone(), vec![]),
        Rule::AndR | Rule::OrR1 | Rule::OrR2 => {
            let children = d
                .premisses
                .iter()
                .map(|c| contract_rec(c, level, lo, hi))
                .collect::<Result<Vec<_>, _>>()?;
            node(target, d.rule.clone(), children)
        }
        Rule::BoxR => {
            let mut inner = vec![0];
            inner.extend_from_slice(level);
            node(target, Rule::BoxR, vec![contract_rec(&d.premisses[0], &inner, lo, hi)?])
        }
        Rule::DiaR { principal } => {
            if level.is_empty() {
                if *principal == lo || *principal == hi {
                    // the other copy carries the same content
                    node(target, Rule::DiaR { principal: lo }, vec![d.premisses[0].clone()])
                } else {
                    let principal = if *principal > hi { principal - 1 } else { *principal };
                    node(target, Rule::DiaR { principal }, vec![d.premisses[0].clone()])
                }
            } else if level[0] == *principal {
                let child = contract_rec(&d.premisses[0], &level[1..], lo, hi)?;
                node(target, Rule::DiaR { principal: *principal }, vec![child])
            } else {
                // the copies live in the parameter
                node(target, Rule::DiaR { principal: *principal }, vec![d.premisses[0].clone()])
            }
        }
        Rule::AndL { at } | Rule::OrL { at } | Rule::DiaL { at }
            if at.level == level && (at.index == lo || at.index == hi) =>
        {
            unfold_consumed_copy(d, level, lo, hi, at.index)
        }
        rule => {
            // inside-copy actions get mirrored; everything else commutes
            if let Some(principal) = principal_address(rule) {
                for copy in [lo, hi] {
                    let root = ItemPath::new(level.to_vec(), copy);
                    if item_within_item(&principal, &root) {
                        return mirror_inside_copy(d, level, lo, hi, copy);
                    }
                }
            }
            commute_disjoint(d, level, lo, hi, &removed, &lo_addr, target)
        }
    }
}

/// The principal occurrence a left rule acts on, if any.
fn principal_address(rule: &Rule) -> Option<ItemPath> {
    match rule {
        Rule::AndL { at } | Rule::OrL { at } | Rule::DiaL { at } => Some(at.clone()),
        Rule::BoxL { item, .. } | Rule::Assn { item, .. } => Some(item.clone()),
        _ => None,
    }
}

/// The rule acts on neither copy's subtree (it may still have a copy as its
/// principal item for the cumulative rules, whose premisses keep both
/// copies intact).
fn commute_disjoint(
    d: &Derivation,
    level: &[usize],
    lo: usize,
    hi: usize,
    removed: &ItemPath,
    lo_addr: &ItemPath,
    target: Sequent,
) -> Result<Derivation, TransformError> {
    let rule = match rule_after_removal(&d.rule, removed) {
        Some(rule) => rule,
        None => redirect_to_survivor(d, removed, lo_addr)?,
    };
    let children = match &d.rule {
        Rule::AndL { at } | Rule::OrL { at } | Rule::DiaL { at } => {
            // the premiss dropped the principal and appended its parts
            let Some(new_level) = shift_level_after_removal(level, at) else {
                return transport_err("copies vanish into a formula item");
            };
            let shift = |i: usize| {
                if at.level == level && at.index < i {
                    i - 1
                } else {
                    i
                }
            };
            d.premisses
                .iter()
                .map(|c| contract_rec(c, &new_level, shift(lo), shift(hi)))
                .collect::<Result<Vec<_>, _>>()?
        }
        Rule::BoxL { .. } | Rule::Assn { .. } => {
            // append-only premiss: the copies stay where they were
            d.premisses
                .iter()
                .map(|c| contract_rec(c, level, lo, hi))
                .collect::<Result<Vec<_>, _>>()?
        }
        other => return transport_err(format!("rule {} cannot commute here", other.name())),
    };
    node(target, rule, children)
}

/// The rule addressed the dropped copy itself: re-aim it at the survivor.
fn redirect_to_survivor(
    d: &Derivation,
    removed: &ItemPath,
    lo_addr: &ItemPath,
) -> Result<Rule, TransformError> {
    match &d.rule {
        Rule::BoxL { item, formula } if item == removed => {
            let Item::Ann(_, inner_gone) = d.conclusion.antecedent.item(item)? else {
                return transport_err("BoxL principal is not annotated");
            };
            let key = inner_gone.items[*formula].canonical();
            let Item::Ann(_, inner_kept) = d.conclusion.antecedent.item(lo_addr)? else {
                return transport_err("surviving copy is not annotated");
            };
            let formula =
                inner_kept.items.iter().position(|i| i.canonical() == key).ok_or_else(|| {
                    TransformError::Transport("survivor lacks the boxed formula".into())
                })?;
            Ok(Rule::BoxL { item: lo_addr.clone(), formula })
        }
        Rule::BoxL { item, formula } => {
            // the copies are formula items inside the principal: redirect the
            // formula index to the surviving equal copy
            let mut inner = item.level.clone();
            inner.push(item.index);
            if inner == removed.level && *formula == removed.index {
                Ok(Rule::BoxL { item: item.clone(), formula: lo_addr.index })
            } else {
                transport_err("BoxL instance lost in contraction")
            }
        }
        Rule::Assn { assumption, item } if item == removed => {
            Ok(Rule::Assn { assumption: assumption.clone(), item: lo_addr.clone() })
        }
        other => transport_err(format!("rule {} lost its principal in contraction", other.name())),
    }
}

/// `AndL`/`OrL`/`DiaL` consumed one copy: invert the surviving copy in the
/// premiss, contract the strictly smaller pieces, and reapply the rule to
/// the survivor in the contracted conclusion.
fn unfold_consumed_copy(
    d: &Derivation,
    level: &[usize],
    lo: usize,
    hi: usize,
    consumed: usize,
) -> Result<Derivation, TransformError> {
    let other = if consumed == lo { hi } else { lo };
    let n = d.conclusion.antecedent.level(level)?.len();
    // in the premiss the other copy sits left of the appended parts
    let other_in_premiss = if consumed < other { other - 1 } else { other };
    let other_addr = ItemPath::new(level.to_vec(), other_in_premiss);
    let (ante, ()) = d.conclusion.antecedent.edit_level(level, |items| {
        items.remove(hi);
    })?;
    let target = Sequent::new(ante, d.conclusion.succedent.clone());
    let survivor = ItemPath::new(level.to_vec(), lo);

    match &d.rule {
        Rule::AndL { .. } => {
            // premiss level: originals(n-2 after both copies), part1@n-2, part2@n-1
            let v = invert_and_l(&d.premisses[0], &other_addr)?;
            // v level: originals, part1@n-2, part2@n-1, part1'@n, part2'@n+1
            let e1 = contract_rec(&v, level, n - 2, n)?;
            let e2 = contract_rec(&e1, level, n - 1, n)?;
            node(target, Rule::AndL { at: survivor }, vec![e2])
        }
        Rule::OrL { .. } => {
            let (w1, _) = invert_or_l(&d.premisses[0], &other_addr)?;
            let e1 = contract_rec(&w1, level, n - 2, n - 1)?;
            let (_, w2) = invert_or_l(&d.premisses[1], &other_addr)?;
            let e2 = contract_rec(&w2, level, n - 2, n - 1)?;
            node(target, Rule::OrL { at: survivor }, vec![e1, e2])
        }
        Rule::DiaL { .. } => {
            let v = invert_dia_l(&d.premisses[0], &other_addr)?;
            let e = contract_rec(&v, level, n - 2, n - 1)?;
            node(target, Rule::DiaL { at: survivor }, vec![e])
        }
        other => transport_err(format!("rule {} does not consume items", other.name())),
    }
}

/// Positions inside the two copies correspond through a multiset
/// isomorphism of their inner contexts.
struct CopyMirror {
    from_root: ItemPath,
    to_root: ItemPath,
    iso: CtxIso,
}

impl CopyMirror {
    fn between(
        d: &Derivation,
        level: &[usize],
        from: usize,
        to: usize,
    ) -> Result<CopyMirror, TransformError> {
        let from_root = ItemPath::new(level.to_vec(), from);
        let to_root = ItemPath::new(level.to_vec(), to);
        let (Item::Ann(_, inner_from), Item::Ann(_, inner_to)) =
            (d.conclusion.antecedent.item(&from_root)?, d.conclusion.antecedent.item(&to_root)?)
        else {
            return transport_err("rule acts inside a formula item");
        };
        let iso = CtxIso::between(inner_from, inner_to)
            .ok_or_else(|| TransformError::Transport("copies are not multiset-equal".into()))?;
        Ok(CopyMirror { from_root, to_root, iso })
    }

    fn level(&self, l: &[usize]) -> LevelPath {
        let rel = &l[self.from_root.level.len() + 1..];
        let mut out = self.to_root.level.clone();
        out.push(self.to_root.index);
        out.extend(self.iso.map_level(rel));
        out
    }

    fn item(&self, a: &ItemPath) -> ItemPath {
        let rel_level = &a.level[self.from_root.level.len() + 1..];
        let mapped_level = self.iso.map_level(rel_level);
        let mapped_index = self.iso.at_level(rel_level).map_index(a.index);
        let mut out = self.to_root.level.clone();
        out.push(self.to_root.index);
        out.extend(mapped_level);
        ItemPath::new(out, mapped_index)
    }

    fn inner_index(&self, item_rel: &ItemPath, formula: usize) -> usize {
        let rel_level = &item_rel.level[self.from_root.level.len() + 1..];
        let mut full = rel_level.to_vec();
        full.push(item_rel.index);
        self.iso.at_level(&full).map_index(formula)
    }
}

/// The rule acts strictly inside the copy at index `acting`: mirror its
/// effect into the other copy, contract the equal results, and reapply the
/// rule inside the survivor.
fn mirror_inside_copy(
    d: &Derivation,
    level: &[usize],
    lo: usize,
    hi: usize,
    acting: usize,
) -> Result<Derivation, TransformError> {
    let other = if acting == lo { hi } else { lo };
    let mirror = CopyMirror::between(d, level, acting, other)?;
    let (ante, ()) = d.conclusion.antecedent.edit_level(level, |items| {
        items.remove(hi);
    })?;
    let target = Sequent::new(ante, d.conclusion.succedent.clone());
    // instance data aimed at the survivor (lo): positions inside `acting`
    // stay valid when acting == lo, otherwise mirror them across
    let survivor_rule = |rule: &Rule| -> Result<Rule, TransformError> {
        if acting == lo {
            return Ok(rule.clone());
        }
        Ok(match rule {
            Rule::AndL { at } => Rule::AndL { at: mirror.item(at) },
            Rule::OrL { at } => Rule::OrL { at: mirror.item(at) },
            Rule::DiaL { at } => Rule::DiaL { at: mirror.item(at) },
            Rule::BoxL { item, formula } => {
                Rule::BoxL { item: mirror.item(item), formula: mirror.inner_index(item, *formula) }
            }
            Rule::Assn { assumption, item } => {
                Rule::Assn { assumption: assumption.clone(), item: mirror.item(item) }
            }
            other => return transport_err(format!("rule {} acts on no item", other.name())),
        })
    };

    match &d.rule {
        Rule::AndL { at } => {
            let v = invert_and_l(&d.premisses[0], &mirror.item(at))?;
            let e = contract_rec(&v, level, lo, hi)?;
            node(target, survivor_rule(&d.rule)?, vec![e])
        }
        Rule::DiaL { at } => {
            let v = invert_dia_l(&d.premisses[0], &mirror.item(at))?;
            let e = contract_rec(&v, level, lo, hi)?;
            node(target, survivor_rule(&d.rule)?, vec![e])
        }
        Rule::OrL { at } => {
            let (v1, _) = invert_or_l(&d.premisses[0], &mirror.item(at))?;
            let e1 = contract_rec(&v1, level, lo, hi)?;
            let (_, v2) = invert_or_l(&d.premisses[1], &mirror.item(at))?;
            let e2 = contract_rec(&v2, level, lo, hi)?;
            node(target, survivor_rule(&d.rule)?, vec![e1, e2])
        }
        Rule::BoxL { item, formula } => {
            let Item::Ann(_, inner) = d.conclusion.antecedent.item(item)? else {
                return transport_err("BoxL principal is not annotated");
            };
            let Item::F(crate::syntax::Formula::Box_(_, body)) = &inner.items[*formula] else {
                return transport_err("BoxL principal formula is not boxed");
            };
            let extra = Context::of_formulas([body.as_ref().clone()]);
            let w = weaken(&d.premisses[0], &mirror.level(&item.level), &extra)?;
            let e = contract_rec(&w, level, lo, hi)?;
            node(target, survivor_rule(&d.rule)?, vec![e])
        }
        Rule::Assn { assumption, item } => {
            let extra = Context::of_formulas([assumption.consequent.clone()]);
            let w = weaken(&d.premisses[0], &mirror.level(&item.level), &extra)?;
            let e = contract_rec(&w, level, lo, hi)?;
            node(target, survivor_rule(&d.rule)?, vec![e])
        }
        other => transport_err(format!("rule {} cannot act inside an item", other.name())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{check, derive_identity, AssumptionRule, Rule};
    use crate::syntax::{parse_context, parse_formula, parse_sequent, Agent};

    fn seq(s: &str) -> Sequent {
        parse_sequent(s).unwrap()
    }

    #[test]
    fn contract_id_pair() {
        let d = Derivation::leaf(seq("p, p |- p"), Rule::Id).unwrap();
        let c = contract_item(&d, &[], 0, 1).unwrap();
        assert_eq!(c.conclusion, seq("p |- p"));
        assert!(check(&c, &[], false).is_ok());
    }

    #[test]
    fn rejects_unequal_items() {
        let d = Derivation::leaf(seq("p, q |- p"), Rule::Id).unwrap();
        assert!(contract_item(&d, &[], 0, 1).is_err());
        let d = Derivation::leaf(seq("p |- p"), Rule::Id).unwrap();
        assert!(contract_item(&d, &[], 0, 0).is_err());
    }

    #[test]
    fn contract_duplicate_conjunction() {
        // identity proof of Δ[p & q, p & q] via weakening an identity proof
        let base =
            derive_identity(&parse_context("p & q").unwrap(), &parse_formula("p & q").unwrap());
        assert!(base.conclusion.multiset_eq(&seq("p & q, p & q |- p & q")));
        let c = contract_item(&base, &[], 0, 1).unwrap();
        assert!(c.conclusion.multiset_eq(&seq("p & q |- p & q")));
        assert!(check(&c, &[], false).is_ok());
    }

    #[test]
    fn contract_duplicate_annotated_item() {
        // duplicate ([A](p))^A items, one of them BoxL-principal
        let d = derive_identity(
            &parse_context("([A](p))^A").unwrap(),
            &parse_formula("[A](p)").unwrap(),
        );
        // conclusion: ([A](p))^A, [A](p) |- [A](p); invert BoxR to get equal Anns
        let inv = super::super::invert_box_r(&d).unwrap();
        assert!(inv.conclusion.multiset_eq(&seq("(([A](p))^A, [A](p))^A |- p")));
        // not two equal items; build the plain duplicated case instead
        let dup = derive_identity(
            &parse_context("(q, [B](r))^B").unwrap(),
            &parse_formula("<B>(q)").unwrap(),
        );
        let w = super::super::weaken(&dup, &[], &parse_context("(q, [B](r))^B").unwrap()).unwrap();
        let at_level = w.conclusion.antecedent.items.len() - 1;
        let c = contract_item(&w, &[], 0, at_level).unwrap();
        assert!(c.conclusion.multiset_eq(&dup.conclusion));
        assert!(check(&c, &[], false).is_ok());
    }

    #[test]
    fn contract_through_boxl_principal_copy() {
        // proof with BoxL acting on one of two equal annotated items
        let goal = seq("([A](p))^A, ([A](p))^A |- p");
        let rule = Rule::BoxL { item: ItemPath::top(1), formula: 0 };
        let premiss = crate::calculus::premisses_of(&goal, &rule).unwrap()[0].clone();
        let sub = Derivation::leaf(premiss, Rule::Id).unwrap();
        let d = Derivation::node(goal, rule, vec![sub]).unwrap();
        assert!(check(&d, &[], false).is_ok());

        let c = contract_item(&d, &[], 0, 1).unwrap();
        assert!(c.conclusion.multiset_eq(&seq("([A](p))^A |- p")));
        assert!(check(&c, &[], false).is_ok());
    }

    #[test]
    fn contract_group() {
        let d = Derivation::leaf(seq("p, q, p, q |- p"), Rule::Id).unwrap();
        let c = contract(&d, &[], &[0, 1], &[2, 3]).unwrap();
        assert!(c.conclusion.multiset_eq(&seq("p, q |- p")));
        assert!(check(&c, &[], false).is_ok());

        // one annotated item
        let d = derive_identity(&parse_context("(p, q)^A").unwrap(), &parse_formula("t").unwrap());
        let w = super::super::weaken(&d, &[], &parse_context("(q, p)^A").unwrap()).unwrap();
        let c = contract(&w, &[], &[0], &[2]).unwrap();
        assert!(c.conclusion.multiset_eq(&d.conclusion));
    }

    #[test]
    fn contract_inside_assn_trigger() {
        // copies are the trigger atoms inside the assumption's item
        let assumption =
            AssumptionRule::new(Agent::new("A"), "s", parse_formula("s | t").unwrap()).unwrap();
        let d = Derivation::node(
            seq("(s, s)^A |- top"),
            Rule::Assn { assumption: assumption.clone(), item: ItemPath::top(0) },
            vec![Derivation::leaf(seq("(s, s)^A, s | t |- top"), Rule::TopR).unwrap()],
        )
        .unwrap();
        let c = contract_item(&d, &[0], 0, 1).unwrap();
        assert!(c.conclusion.multiset_eq(&seq("(s)^A |- top")));
        assert!(check(&c, &[assumption], false).is_ok());
    }
}
