//! Cut elimination and the annotation-merge rule built on top of it.
//!
//! [`eliminate_cut`] combines a derivation of `Γ |- m` with a derivation of
//! `Δ'[m] |- m'` into a cut-free derivation of `Δ'[Γ] |- m'`. The procedure
//! recurses along a strictly decreasing *rank* — the pair (size of the cut
//! formula, sum of the two derivation heights) ordered lexicographically —
//! which is asserted at every recursive call in debug builds.
//!
//! The reduction applied at each step is determined by the last rule of the
//! first premiss, and when that rule is `BoxR`, by the last rule of the
//! second premiss and the position of the cut occurrence relative to it.
//! [`eliminate_cut_traced`] records one [`CutCase`] label per reduction so
//! the sequence of steps can be audited.

use crate::calculus::{check, AssumptionRule, Derivation, Rule};
use crate::syntax::{Context, Formula, Item, ItemPath, LevelPath, Sequent};

use super::{
    contract, contract_item, invert_and_l, invert_dia_l, invert_or_l, node, rule_after_removal,
    shape_err, shift_item_after_removal, top_weak, transport_err, weaken, DepthGuard,
    TransformError,
};

/// Label of one cut reduction step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[allow(clippy::enum_variant_names)]
pub enum CutCase {
    /// first premiss `Id`
    I,
    /// first premiss `BotL`
    Ii,
    /// first premiss `TopR`
    Iii,
    /// first premiss `AndL`
    Iv,
    /// first premiss `OrL`
    V,
    /// first premiss `DiaL`
    Vi,
    /// first premiss `BoxL`
    Vii,
    /// first premiss `AndR`
    Viii,
    /// first premiss `OrR`
    Ix,
    /// first premiss `DiaR`
    X,
    /// first premiss `BoxR`, second premiss as named
    XiA,
    XiB,
    XiC,
    XiD,
    XiE,
    XiF,
    XiG,
    XiH,
    XiI,
    XiJ,
    XiK,
    XiL,
    XiM,
    XiN,
    /// first premiss `Assn`
    Xii,
}

impl CutCase {
    pub fn label(&self) -> &'static str {
        match self {
            CutCase::I => "(i)",
            CutCase::Ii => "(ii)",
            CutCase::Iii => "(iii)",
            CutCase::Iv => "(iv)",
            CutCase::V => "(v)",
            CutCase::Vi => "(vi)",
            CutCase::Vii => "(vii)",
            CutCase::Viii => "(viii)",
            CutCase::Ix => "(ix)",
            CutCase::X => "(x)",
            CutCase::XiA => "(xi)(a)",
            CutCase::XiB => "(xi)(b)",
            CutCase::XiC => "(xi)(c)",
            CutCase::XiD => "(xi)(d)",
            CutCase::XiE => "(xi)(e)",
            CutCase::XiF => "(xi)(f)",
            CutCase::XiG => "(xi)(g)",
            CutCase::XiH => "(xi)(h)",
            CutCase::XiI => "(xi)(i)",
            CutCase::XiJ => "(xi)(j)",
            CutCase::XiK => "(xi)(k)",
            CutCase::XiL => "(xi)(l)",
            CutCase::XiM => "(xi)(m)",
            CutCase::XiN => "(xi)(n)",
            CutCase::Xii => "(xii)",
        }
    }
}

/// Cut-eliminating combination: from `d1 : Γ |- m` and `d2 : Δ'[m] |- m'`,
/// where `at` addresses the occurrence of `m` in `d2`'s conclusion, build a
/// cut-free derivation of `Δ'[Γ] |- m'`. Both inputs must check cut-free
/// against `assumptions`.
pub fn eliminate_cut(
    d1: &Derivation,
    d2: &Derivation,
    at: &ItemPath,
    assumptions: &[AssumptionRule],
) -> Result<Derivation, TransformError> {
    let mut trace = Vec::new();
    eliminate_cut_traced(d1, d2, at, assumptions, &mut trace)
}

/// As [`eliminate_cut`], pushing the label of every reduction step applied
/// (in application order) onto `trace`.
pub fn eliminate_cut_traced(
    d1: &Derivation,
    d2: &Derivation,
    at: &ItemPath,
    assumptions: &[AssumptionRule],
    trace: &mut Vec<CutCase>,
) -> Result<Derivation, TransformError> {
    super::check_entry(d1)?;
    super::check_entry(d2)?;
    check(d1, assumptions, false)?;
    check(d2, assumptions, false)?;
    let cut_formula = &d1.conclusion.succedent;
    match d2.conclusion.antecedent.item(at)? {
        Item::F(f) if f == cut_formula => {}
        other => {
            return shape_err(format!(
                "item `{other}` at {at} is not the cut formula `{cut_formula}`"
            ))
        }
    }
    let out = cut_rec(d1, d2, at, trace, None)?;
    debug_assert!(out.is_cut_free());
    Ok(out)
}

type Rank = (usize, usize);

fn cut_rec(
    d1: &Derivation,
    d2: &Derivation,
    at: &ItemPath,
    trace: &mut Vec<CutCase>,
    parent: Option<Rank>,
) -> Result<Derivation, TransformError> {
    let _frame = DepthGuard::enter()?;
    let m = &d1.conclusion.succedent;
    let rank: Rank = (m.size(), d1.height() + d2.height());
    if let Some(p) = parent {
        debug_assert!(rank < p, "cut rank must descend: {rank:?} under {p:?}");
    }
    let rank = Some(rank);
    let gamma = &d1.conclusion.antecedent;

    // the conclusion: the cut occurrence replaced by Γ
    let (ante, ()) = d2.conclusion.antecedent.edit_level(&at.level, |items| {
        items.remove(at.index);
        items.extend(gamma.items.iter().cloned());
    })?;
    let target = Sequent::new(ante, d2.conclusion.succedent.clone());
    // appended Γ items start here, both in the target and in premiss edits
    let base = d2.conclusion.antecedent.level(&at.level)?.len() - 1;
    let embed_item = |a: &ItemPath| -> ItemPath {
        if a.level.is_empty() {
            ItemPath::new(at.level.clone(), base + a.index)
        } else {
            let mut level = at.level.clone();
            level.push(base + a.level[0]);
            level.extend_from_slice(&a.level[1..]);
            ItemPath::new(level, a.index)
        }
    };

    match &d1.rule {
        Rule::Id => {
            trace.push(CutCase::I);
            let idx =
                gamma.items.iter().position(|i| matches!(i, Item::F(f) if f == m)).ok_or_else(
                    || TransformError::Transport("Id lacks its principal atom".into()),
                )?;
            let mut extra = gamma.items.clone();
            extra.remove(idx);
            let w = weaken(d2, &at.level, &Context::new(extra))?;
            w.transport(&target).map_err(TransformError::from)
        }
        Rule::BotL => {
            trace.push(CutCase::Ii);
            node(target, Rule::BotL, vec![])
        }
        Rule::TopR => {
            trace.push(CutCase::Iii);
            top_weak(d2, at, gamma)?.transport(&target).map_err(TransformError::from)
        }
        Rule::AndL { at: a } => {
            trace.push(CutCase::Iv);
            let e = cut_rec(&d1.premisses[0], d2, at, trace, rank)?;
            node(target, Rule::AndL { at: embed_item(a) }, vec![e])
        }
        Rule::OrL { at: a } => {
            trace.push(CutCase::V);
            let e1 = cut_rec(&d1.premisses[0], d2, at, trace, rank)?;
            let e2 = cut_rec(&d1.premisses[1], d2, at, trace, rank)?;
            node(target, Rule::OrL { at: embed_item(a) }, vec![e1, e2])
        }
        Rule::DiaL { at: a } => {
            trace.push(CutCase::Vi);
            let e = cut_rec(&d1.premisses[0], d2, at, trace, rank)?;
            node(target, Rule::DiaL { at: embed_item(a) }, vec![e])
        }
        Rule::BoxL { item, formula } => {
            trace.push(CutCase::Vii);
            let e = cut_rec(&d1.premisses[0], d2, at, trace, rank)?;
            node(target, Rule::BoxL { item: embed_item(item), formula: *formula }, vec![e])
        }
        Rule::Assn { assumption, item } => {
            trace.push(CutCase::Xii);
            let e = cut_rec(&d1.premisses[0], d2, at, trace, rank)?;
            node(
                target,
                Rule::Assn { assumption: assumption.clone(), item: embed_item(item) },
                vec![e],
            )
        }
        Rule::AndR => {
            trace.push(CutCase::Viii);
            let v = invert_and_l(d2, at)?;
            let first = ItemPath::new(at.level.clone(), base);
            let e1 = cut_rec(&d1.premisses[0], &v, &first, trace, rank)?;
            // the second conjunct slid into the freed position
            let second = ItemPath::new(at.level.clone(), base);
            let e2 = cut_rec(&d1.premisses[1], &e1, &second, trace, rank)?;
            let k = gamma.items.len();
            let firsts: Vec<usize> = (base..base + k).collect();
            let seconds: Vec<usize> = (base + k..base + 2 * k).collect();
            let c = contract(&e2, &at.level, &firsts, &seconds)?;
            c.transport(&target).map_err(TransformError::from)
        }
        Rule::OrR1 | Rule::OrR2 => {
            trace.push(CutCase::Ix);
            let (va, vb) = invert_or_l(d2, at)?;
            let v = if matches!(d1.rule, Rule::OrR1) { va } else { vb };
            let pos = ItemPath::new(at.level.clone(), base);
            let e = cut_rec(&d1.premisses[0], &v, &pos, trace, rank)?;
            e.transport(&target).map_err(TransformError::from)
        }
        Rule::DiaR { principal } => {
            trace.push(CutCase::X);
            let v = invert_dia_l(d2, at)?;
            let mut inner = at.level.clone();
            inner.push(base);
            let g_at = ItemPath::new(inner, 0);
            let e = cut_rec(&d1.premisses[0], &v, &g_at, trace, rank)?;
            let mut parameter = gamma.items.clone();
            parameter.remove(*principal);
            let w = weaken(&e, &at.level, &Context::new(parameter))?;
            w.transport(&target).map_err(TransformError::from)
        }
        Rule::BoxR => cut_boxr(d1, d2, at, trace, rank, target, base),
        Rule::Cut { .. } => Err(TransformError::CutInInput),
    }
}

/// The first premiss ends in `BoxR`: dispatch on the last rule of the
/// second premiss and the position of the cut occurrence.
fn cut_boxr(
    d1: &Derivation,
    d2: &Derivation,
    at: &ItemPath,
    trace: &mut Vec<CutCase>,
    rank: Option<Rank>,
    target: Sequent,
    base: usize,
) -> Result<Derivation, TransformError> {
    let commute_rule = |rule: &Rule| -> Result<Rule, TransformError> {
        rule_after_removal(rule, at).ok_or_else(|| {
            TransformError::Transport("cut occurrence collides with a principal".into())
        })
    };
    match &d2.rule {
        Rule::Id => {
            trace.push(CutCase::XiA);
            node(target, Rule::Id, vec![])
        }
        Rule::BotL => {
            trace.push(CutCase::XiB);
            node(target, Rule::BotL, vec![])
        }
        Rule::TopR => {
            trace.push(CutCase::XiC);
            node(target, Rule::TopR, vec![])
        }
        Rule::AndL { at: a } => {
            trace.push(CutCase::XiD);
            let rule = commute_rule(&d2.rule)?;
            let moved = shift_item_after_removal(at, a)
                .ok_or_else(|| TransformError::Transport("occurrence lost across AndL".into()))?;
            let e = cut_rec(d1, &d2.premisses[0], &moved, trace, rank)?;
            node(target, rule, vec![e])
        }
        Rule::OrL { at: a } => {
            trace.push(CutCase::XiE);
            let rule = commute_rule(&d2.rule)?;
            let moved = shift_item_after_removal(at, a)
                .ok_or_else(|| TransformError::Transport("occurrence lost across OrL".into()))?;
            let e1 = cut_rec(d1, &d2.premisses[0], &moved, trace, rank)?;
            let e2 = cut_rec(d1, &d2.premisses[1], &moved, trace, rank)?;
            node(target, rule, vec![e1, e2])
        }
        Rule::DiaL { at: a } => {
            trace.push(CutCase::XiF);
            let rule = commute_rule(&d2.rule)?;
            let moved = shift_item_after_removal(at, a)
                .ok_or_else(|| TransformError::Transport("occurrence lost across DiaL".into()))?;
            let e = cut_rec(d1, &d2.premisses[0], &moved, trace, rank)?;
            node(target, rule, vec![e])
        }
        Rule::BoxL { item, formula } => {
            let mut inner = item.level.clone();
            inner.push(item.index);
            if inner == at.level && *formula == at.index {
                cut_boxr_principal(d1, d2, at, trace, rank, target, item)
            } else {
                trace.push(CutCase::XiG);
                let rule = commute_rule(&d2.rule)?;
                let e = cut_rec(d1, &d2.premisses[0], at, trace, rank)?;
                node(target, rule, vec![e])
            }
        }
        Rule::AndR => {
            trace.push(CutCase::XiI);
            let e1 = cut_rec(d1, &d2.premisses[0], at, trace, rank)?;
            let e2 = cut_rec(d1, &d2.premisses[1], at, trace, rank)?;
            node(target, Rule::AndR, vec![e1, e2])
        }
        Rule::OrR1 | Rule::OrR2 => {
            trace.push(CutCase::XiJ);
            let e = cut_rec(d1, &d2.premisses[0], at, trace, rank)?;
            node(target, d2.rule.clone(), vec![e])
        }
        Rule::DiaR { principal } => {
            trace.push(CutCase::XiK);
            if !at.level.is_empty() && at.level[0] == *principal {
                let inner = ItemPath::new(at.level[1..].to_vec(), at.index);
                let e = cut_rec(d1, &d2.premisses[0], &inner, trace, rank)?;
                node(target, Rule::DiaR { principal: *principal }, vec![e])
            } else {
                // parameter occurrence: no cut needed, re-parameterize
                let principal = if at.level.is_empty() && at.index < *principal {
                    principal - 1
                } else {
                    *principal
                };
                node(target, Rule::DiaR { principal }, vec![d2.premisses[0].clone()])
            }
        }
        Rule::BoxR => {
            trace.push(CutCase::XiL);
            let mut level = vec![0];
            level.extend_from_slice(&at.level);
            let inner = ItemPath::new(level, at.index);
            let e = cut_rec(d1, &d2.premisses[0], &inner, trace, rank)?;
            node(target, Rule::BoxR, vec![e])
        }
        Rule::Assn { assumption, item } => {
            let mut inner = item.level.clone();
            inner.push(item.index);
            trace.push(if inner == at.level { CutCase::XiN } else { CutCase::XiM });
            let rule = Rule::Assn {
                assumption: assumption.clone(),
                item: shift_item_after_removal(item, at).ok_or_else(|| {
                    TransformError::Transport("Assn principal collides with the cut".into())
                })?,
            };
            let e = cut_rec(d1, &d2.premisses[0], at, trace, rank)?;
            node(target, rule, vec![e])
        }
        Rule::Cut { .. } => Err(TransformError::CutInInput),
    }
    .inspect(|_out| {
        let _ = base;
    })
}

/// The boxed cut formula is the principal formula of a `BoxL` in the second
/// premiss: the one genuinely interesting reduction. Two inner cuts (one at
/// smaller height, one at smaller formula), then weakening and contraction.
fn cut_boxr_principal(
    d1: &Derivation,
    d2: &Derivation,
    at: &ItemPath,
    trace: &mut Vec<CutCase>,
    rank: Option<Rank>,
    target: Sequent,
    item: &ItemPath,
) -> Result<Derivation, TransformError> {
    trace.push(CutCase::XiH);
    let boxed_premiss = &d1.premisses[0]; // (Γ)^A |- g
    let u = &d2.premisses[0]; // Δ'[([A]g, Γ')^A, g]
    let sibling_index = d2.conclusion.antecedent.level(&item.level)?.len();

    // replace [A]g inside the principal item by Γ (same formula, lower height)
    let e1 = cut_rec(d1, u, at, trace, rank)?;
    // replace the sibling g by (Γ)^A (smaller formula)
    let g_at = ItemPath::new(item.level.clone(), sibling_index);
    let e2 = cut_rec(boxed_premiss, &e1, &g_at, trace, rank)?;

    // grow the new (Γ)^A into (Γ, Γ')^A, then contract the equal items
    let Item::Ann(_, principal_inner) = d2.conclusion.antecedent.item(item)? else {
        return transport_err("BoxL principal is not annotated");
    };
    let mut residue = principal_inner.items.clone();
    residue.remove(at.index);
    let mut inside_new = item.level.clone();
    inside_new.push(sibling_index);
    let w = weaken(&e2, &inside_new, &Context::new(residue))?;
    let c = contract_item(&w, &item.level, item.index, sibling_index)?;
    c.transport(&target).map_err(TransformError::from)
}

// ---------------------------------------------------------------------------
// the annotation-merge rule
// ---------------------------------------------------------------------------

/// From `Δ[(Γ)^A, (Γ')^A, (Γ, Γ')^A] |- m` to `Δ[(Γ, Γ')^A] |- m`, where
/// `left`, `right` and `merged` address the three items at the level `at`
/// and the merged item holds exactly the union of the other two. `Γ` and
/// `Γ'` must consist of formulas. Internally the two single annotations are
/// folded to conjunctions, cut against proofs of those conjunctions from
/// the union, and the resulting equal items contracted; the result is
/// cut-free.
pub fn derive_k(
    d: &Derivation,
    at: &[usize],
    left: usize,
    right: usize,
    merged: usize,
) -> Result<Derivation, TransformError> {
    super::check_entry(d)?;
    if left == right || left == merged || right == merged {
        return shape_err("the three designated items must be distinct");
    }
    let items = d.conclusion.antecedent.level(at)?;
    let get = |i: usize| -> Result<(&crate::syntax::Agent, &Context), TransformError> {
        match items.get(i) {
            Some(Item::Ann(a, inner)) => Ok((a, inner)),
            Some(other) => shape_err(format!("item `{other}` at index {i} is not annotated")),
            None => shape_err(format!("no item at index {i}")),
        }
    };
    let (agent_l, gamma_l) = get(left)?;
    let (agent_r, gamma_r) = get(right)?;
    let (agent_m, gamma_m) = get(merged)?;
    if agent_l != agent_r || agent_l != agent_m {
        return shape_err("the three items carry different agents");
    }
    let mut union = gamma_l.items.clone();
    union.extend(gamma_r.items.iter().cloned());
    if !Context::new(union).multiset_eq(gamma_m) {
        return shape_err("the merged item does not hold the union of the other two");
    }
    if gamma_l.items.iter().chain(&gamma_r.items).any(|i| matches!(i, Item::Ann(..))) {
        return shape_err("the folded contexts must consist of formulas");
    }
    let union_ctx = gamma_m.clone();

    // fold each single annotation to one conjunction
    let (q1, gamma_left) = fold_ann(d.clone(), at, left)?;
    let (q2, gamma_right) = fold_ann(q1, at, right)?;

    // cut the conjunctions against proofs from the union
    let mut trace = Vec::new();
    let p_right = prove_from_members(&union_ctx, &gamma_right)?;
    let mut inner_r = at.to_vec();
    inner_r.push(right);
    let e1 = cut_rec(&p_right, &q2, &ItemPath::new(inner_r, 0), &mut trace, None)?;

    let p_left = prove_from_members(&union_ctx, &gamma_left)?;
    let mut inner_l = at.to_vec();
    inner_l.push(left);
    let e2 = cut_rec(&p_left, &e1, &ItemPath::new(inner_l, 0), &mut trace, None)?;

    // three equal annotated items now; contract down to one
    let mut sorted = [left, right, merged];
    sorted.sort_unstable();
    let f1 = contract_item(&e2, at, sorted[1], sorted[2])?;
    let f2 = contract_item(&f1, at, sorted[0], sorted[1])?;

    let (ante, ()) = d.conclusion.antecedent.edit_level(at, |items| {
        let mut drop = [left, right];
        drop.sort_unstable();
        items.remove(drop[1]);
        items.remove(drop[0]);
    })?;
    let target = Sequent::new(ante, d.conclusion.succedent.clone());
    let out = f2.transport(&target)?;
    debug_assert!(out.is_cut_free());
    Ok(out)
}

/// Stack `AndL` nodes under the derivation until the annotated item at
/// `(at, index)` holds a single formula; an empty annotation is weakened to
/// `{top}` first. Returns the new derivation and the folded formula.
fn fold_ann(
    d: Derivation,
    at: &[usize],
    index: usize,
) -> Result<(Derivation, Formula), TransformError> {
    let mut current = d;
    let inner_level: LevelPath = {
        let mut l = at.to_vec();
        l.push(index);
        l
    };
    loop {
        let Item::Ann(agent, inner) =
            current.conclusion.antecedent.item(&ItemPath::new(at.to_vec(), index))?
        else {
            return shape_err("fold target is not annotated");
        };
        let agent = agent.clone();
        let formulas: Vec<Formula> = inner
            .items
            .iter()
            .map(|i| match i {
                Item::F(f) => Ok(f.clone()),
                Item::Ann(..) => shape_err("fold target contains annotated items"),
            })
            .collect::<Result<_, _>>()?;
        match formulas.len() {
            0 => {
                current = weaken(&current, &inner_level, &Context::of_formulas([Formula::Top]))?;
            }
            1 => return Ok((current, formulas[0].clone())),
            k => {
                let folded = Formula::and(formulas[k - 2].clone(), formulas[k - 1].clone());
                let mut new_inner = inner.items.clone();
                new_inner.truncate(k - 2);
                new_inner.push(Item::F(folded));
                let (ante, ()) = current.conclusion.antecedent.edit_level(at, |items| {
                    items[index] = Item::Ann(agent.clone(), Context::new(new_inner));
                })?;
                let conclusion = Sequent::new(ante, current.conclusion.succedent.clone());
                let rule = Rule::AndL { at: ItemPath::new(inner_level.clone(), k - 2) };
                current = node(conclusion, rule, vec![current])?;
            }
        }
    }
}

/// A derivation of `antecedent |- goal` where `goal` is built by `&` from
/// members of the antecedent (or is `top`).
fn prove_from_members(antecedent: &Context, goal: &Formula) -> Result<Derivation, TransformError> {
    let conclusion = Sequent::new(antecedent.clone(), goal.clone());
    if let Some(idx) = antecedent.items.iter().position(|i| matches!(i, Item::F(f) if f == goal)) {
        let mut rest = antecedent.items.clone();
        rest.remove(idx);
        let d = crate::calculus::derive_identity(&Context::new(rest), goal);
        return d.transport(&conclusion).map_err(TransformError::from);
    }
    match goal {
        Formula::Top => node(conclusion, Rule::TopR, vec![]),
        Formula::And(l, r) => {
            let dl = prove_from_members(antecedent, l)?;
            let dr = prove_from_members(antecedent, r)?;
            node(conclusion, Rule::AndR, vec![dl, dr])
        }
        other => shape_err(format!("`{other}` is not assembled from the union's members")),
    }
}
