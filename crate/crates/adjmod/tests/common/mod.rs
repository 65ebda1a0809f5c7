//! Shared test support: seeded random generators for formulas, contexts,
//! sequents and checking cut-free derivations.
//!
//! Derivations are grown forward: a seed identity derivation is wrapped in
//! randomly chosen rule applications (right rules, left-rule foldings, and
//! assumption steps), so every generated tree checks by construction and
//! exercises every rule of the calculus.

#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use adjmod::calculus::{check, derive_identity, AssumptionRule, Derivation, Rule};
use adjmod::syntax::{Agent, Context, Formula, Item, ItemPath, LevelPath, Sequent};

pub struct Gen {
    pub rng: StdRng,
    pub agents: Vec<Agent>,
    pub atoms: Vec<String>,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen {
            rng: StdRng::seed_from_u64(seed),
            agents: vec![Agent::new("A"), Agent::new("B")],
            atoms: vec!["p".into(), "q".into(), "r".into()],
        }
    }

    pub fn agent(&mut self) -> Agent {
        let i = self.rng.gen_range(0..self.agents.len());
        self.agents[i].clone()
    }

    pub fn atom(&mut self) -> String {
        let i = self.rng.gen_range(0..self.atoms.len());
        self.atoms[i].clone()
    }

    /// A formula of size at most `budget`.
    pub fn formula(&mut self, budget: usize) -> Formula {
        if budget == 0 || self.rng.gen_ratio(1, 4) {
            return match self.rng.gen_range(0..6) {
                0 => Formula::Top,
                1 => Formula::Bot,
                _ => Formula::atom(self.atom()),
            };
        }
        match self.rng.gen_range(0..4) {
            0 => {
                let left = self.formula((budget - 1) / 2);
                let right = self.formula(budget - 1 - left.size());
                Formula::and(left, right)
            }
            1 => {
                let left = self.formula((budget - 1) / 2);
                let right = self.formula(budget - 1 - left.size());
                Formula::or(left, right)
            }
            2 if budget >= 2 => Formula::dia(self.agent(), self.formula(budget - 2)),
            _ if budget >= 2 => Formula::box_(self.agent(), self.formula(budget - 2)),
            _ => Formula::atom(self.atom()),
        }
    }

    /// A context of size at most `budget` with nesting depth at most `depth`.
    pub fn context(&mut self, budget: usize, depth: usize) -> Context {
        let mut items = Vec::new();
        let mut left = budget;
        let count = self.rng.gen_range(0..=3);
        for _ in 0..count {
            if left == 0 {
                break;
            }
            let take = self.rng.gen_range(0..=left);
            if depth > 0 && take >= 1 && self.rng.gen_ratio(1, 3) {
                items.push(Item::Ann(self.agent(), self.context(take - 1, depth - 1)));
                left -= take;
            } else {
                let f = self.formula(take);
                left -= f.size().min(left);
                items.push(Item::F(f));
            }
        }
        Context::new(items)
    }

    pub fn sequent(&mut self, budget: usize) -> Sequent {
        let succ = self.formula(budget / 2);
        Sequent::new(self.context(budget / 2, 2), succ)
    }

    /// A checking cut-free derivation (with the assumptions its `Assn`
    /// nodes cite), grown from an identity seed by `steps` forward rule
    /// applications.
    pub fn derivation(&mut self, budget: usize, steps: usize) -> (Vec<AssumptionRule>, Derivation) {
        let ctx = self.context(budget / 2, 2);
        let f = self.formula(budget / 2);
        let mut d = derive_identity(&ctx, &f);
        let mut assumptions = Vec::new();
        for _ in 0..steps {
            d = self.grow(d, &mut assumptions);
        }
        debug_assert!(check(&d, &assumptions, false).is_ok());
        (assumptions, d)
    }

    /// One random forward step; returns the input unchanged when the chosen
    /// rule does not apply.
    pub fn grow(&mut self, d: Derivation, assumptions: &mut Vec<AssumptionRule>) -> Derivation {
        match self.rng.gen_range(0..8) {
            0 => self.grow_or_r(d),
            1 => self.grow_and_r(d),
            2 => self.grow_dia_r(d),
            3 => self.grow_box_r(d),
            4 => self.grow_and_l(d),
            5 => self.grow_dia_l(d),
            6 => self.grow_or_l(d),
            _ => self.grow_assn(d, assumptions),
        }
    }

    fn grow_or_r(&mut self, d: Derivation) -> Derivation {
        let other = self.formula(3);
        let (rule, succ) = if self.rng.gen() {
            (Rule::OrR1, Formula::or(d.conclusion.succedent.clone(), other))
        } else {
            (Rule::OrR2, Formula::or(other, d.conclusion.succedent.clone()))
        };
        let conclusion = Sequent::new(d.conclusion.antecedent.clone(), succ);
        Derivation::node(conclusion, rule, vec![d]).expect("OrR grows")
    }

    fn grow_and_r(&mut self, d: Derivation) -> Derivation {
        // second conjunct: top, closed by TopR over the same antecedent
        let ante = d.conclusion.antecedent.clone();
        let succ = Formula::and(d.conclusion.succedent.clone(), Formula::Top);
        let top = Derivation::leaf(Sequent::new(ante.clone(), Formula::Top), Rule::TopR)
            .expect("TopR closes");
        Derivation::node(Sequent::new(ante, succ), Rule::AndR, vec![d, top]).expect("AndR grows")
    }

    fn grow_dia_r(&mut self, d: Derivation) -> Derivation {
        self.grow_dia_r_tracked(d).0
    }

    /// Wrap the whole antecedent as the principal of a `DiaR`; returns the
    /// principal's index so callers can track addresses into the premiss.
    fn grow_dia_r_tracked(&mut self, d: Derivation) -> (Derivation, usize) {
        let agent = self.agent();
        let parameter = self.context(2, 1);
        let mut items = parameter.items.clone();
        let principal = items.len();
        items.push(Item::Ann(agent.clone(), d.conclusion.antecedent.clone()));
        let succ = Formula::dia(agent, d.conclusion.succedent.clone());
        let conclusion = Sequent::new(Context::new(items), succ);
        (
            Derivation::node(conclusion, Rule::DiaR { principal }, vec![d]).expect("DiaR grows"),
            principal,
        )
    }

    fn grow_box_r(&mut self, d: Derivation) -> Derivation {
        // applies only when the antecedent is a single annotated item
        let [Item::Ann(agent, inner)] = &d.conclusion.antecedent.items[..] else {
            return d;
        };
        let succ = Formula::box_(agent.clone(), d.conclusion.succedent.clone());
        let conclusion = Sequent::new(inner.clone(), succ);
        Derivation::node(conclusion, Rule::BoxR, vec![d]).expect("BoxR grows")
    }

    /// Pick a random level of the antecedent.
    fn pick_level(&mut self, ctx: &Context) -> LevelPath {
        let levels = adjmod::calculus::context_levels(ctx);
        let i = self.rng.gen_range(0..levels.len());
        levels[i].clone()
    }

    fn grow_and_l(&mut self, d: Derivation) -> Derivation {
        let level = self.pick_level(&d.conclusion.antecedent);
        let items = d.conclusion.antecedent.level(&level).unwrap();
        let formulas: Vec<usize> =
            (0..items.len()).filter(|&i| matches!(items[i], Item::F(_))).collect();
        if formulas.len() < 2 {
            return d;
        }
        let a = formulas[self.rng.gen_range(0..formulas.len())];
        let mut b = a;
        while b == a {
            b = formulas[self.rng.gen_range(0..formulas.len())];
        }
        let (Item::F(fa), Item::F(fb)) = (items[a].clone(), items[b].clone()) else {
            return d;
        };
        let folded = Formula::and(fa, fb);
        let (ante, at) = {
            let (ante, ()) = d
                .conclusion
                .antecedent
                .edit_level(&level, |items| {
                    let (hi, lo) = (a.max(b), a.min(b));
                    items.remove(hi);
                    items.remove(lo);
                    items.push(Item::F(folded.clone()));
                })
                .unwrap();
            let idx = ante.level(&level).unwrap().len() - 1;
            (ante, ItemPath::new(level, idx))
        };
        let conclusion = Sequent::new(ante, d.conclusion.succedent.clone());
        Derivation::node(conclusion, Rule::AndL { at }, vec![d]).expect("AndL grows")
    }

    fn grow_dia_l(&mut self, d: Derivation) -> Derivation {
        let level = self.pick_level(&d.conclusion.antecedent);
        let items = d.conclusion.antecedent.level(&level).unwrap();
        let singles: Vec<usize> = (0..items.len())
            .filter(|&i| {
                matches!(&items[i], Item::Ann(_, inner)
                if inner.items.len() == 1 && matches!(inner.items[0], Item::F(_)))
            })
            .collect();
        if singles.is_empty() {
            return d;
        }
        let i = singles[self.rng.gen_range(0..singles.len())];
        let Item::Ann(agent, inner) = items[i].clone() else {
            return d;
        };
        let Item::F(body) = inner.items[0].clone() else {
            return d;
        };
        let folded = Formula::dia(agent, body);
        let (ante, ()) = d
            .conclusion
            .antecedent
            .edit_level(&level, |items| {
                items.remove(i);
                items.push(Item::F(folded.clone()));
            })
            .unwrap();
        let idx = ante.level(&level).unwrap().len() - 1;
        let conclusion = Sequent::new(ante, d.conclusion.succedent.clone());
        Derivation::node(conclusion, Rule::DiaL { at: ItemPath::new(level, idx) }, vec![d])
            .expect("DiaL grows")
    }

    fn grow_or_l(&mut self, d: Derivation) -> Derivation {
        // fold a formula item x into x | bot (or bot | x); the other branch
        // closes by BotL
        let level = self.pick_level(&d.conclusion.antecedent);
        let items = d.conclusion.antecedent.level(&level).unwrap();
        let formulas: Vec<usize> =
            (0..items.len()).filter(|&i| matches!(items[i], Item::F(_))).collect();
        if formulas.is_empty() {
            return d;
        }
        let i = formulas[self.rng.gen_range(0..formulas.len())];
        let Item::F(x) = items[i].clone() else {
            return d;
        };
        let bot_first: bool = self.rng.gen();
        let folded = if bot_first {
            Formula::or(Formula::Bot, x.clone())
        } else {
            Formula::or(x.clone(), Formula::Bot)
        };
        let (ante, ()) = d
            .conclusion
            .antecedent
            .edit_level(&level, |items| {
                items.remove(i);
                items.push(Item::F(folded.clone()));
            })
            .unwrap();
        let idx = ante.level(&level).unwrap().len() - 1;
        let conclusion = Sequent::new(ante, d.conclusion.succedent.clone());
        let rule = Rule::OrL { at: ItemPath::new(level, idx) };
        let premisses = adjmod::calculus::premisses_of(&conclusion, &rule).unwrap();
        let bot_branch = |s: &Sequent| Derivation::leaf(s.clone(), Rule::BotL).expect("BotL");
        let children = if bot_first {
            vec![bot_branch(&premisses[0]), d]
        } else {
            vec![d, bot_branch(&premisses[1])]
        };
        Derivation::node(conclusion, rule, children).expect("OrL grows")
    }

    fn grow_assn(&mut self, d: Derivation, assumptions: &mut Vec<AssumptionRule>) -> Derivation {
        self.grow_assn_tracked(d, assumptions, None).0
    }

    /// Forward assumption step: drop a disjunction-of-atoms item that sits
    /// beside an annotated item carrying an atom. `keep` is an address that
    /// must survive; returns it re-expressed in the new conclusion.
    fn grow_assn_tracked(
        &mut self,
        d: Derivation,
        assumptions: &mut Vec<AssumptionRule>,
        keep: Option<&ItemPath>,
    ) -> (Derivation, Option<ItemPath>) {
        let levels = adjmod::calculus::context_levels(&d.conclusion.antecedent);
        for level in levels {
            let items = d.conclusion.antecedent.level(&level).unwrap().clone();
            for (i, item) in items.iter().enumerate() {
                let Item::Ann(agent, inner) = item else { continue };
                let Some(trigger) = inner.items.iter().find_map(|it| match it {
                    Item::F(Formula::Atom(p)) => Some(p.clone()),
                    _ => None,
                }) else {
                    continue;
                };
                for (j, other) in items.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let removed = ItemPath::new(level.clone(), j);
                    if let Some(keep) = keep {
                        // never consume the tracked occurrence
                        if *keep == removed {
                            continue;
                        }
                    }
                    let Item::F(consequent) = other else { continue };
                    let Ok(assumption) =
                        AssumptionRule::new(agent.clone(), trigger.clone(), consequent.clone())
                    else {
                        continue;
                    };
                    let (ante, ()) = d
                        .conclusion
                        .antecedent
                        .edit_level(&level, |items| {
                            items.remove(j);
                        })
                        .unwrap();
                    let at = ItemPath::new(level.clone(), if i > j { i - 1 } else { i });
                    let conclusion = Sequent::new(ante, d.conclusion.succedent.clone());
                    let rule = Rule::Assn { assumption: assumption.clone(), item: at };
                    if !assumptions.contains(&assumption) {
                        assumptions.push(assumption);
                    }
                    let moved = keep.map(|keep| {
                        let mut keep = keep.clone();
                        if keep.level == level && keep.index > j {
                            keep.index -= 1;
                        } else if keep.level.len() > level.len()
                            && keep.level[..level.len()] == level[..]
                            && keep.level[level.len()] > j
                        {
                            keep.level[level.len()] -= 1;
                        }
                        keep
                    });
                    return (
                        Derivation::node(conclusion, rule, vec![d]).expect("Assn grows"),
                        moved,
                    );
                }
            }
        }
        let moved = keep.cloned();
        (d, moved)
    }

    /// A derivation whose succedent is exactly `m`, grown with
    /// succedent-preserving steps only.
    pub fn derivation_with_succedent(
        &mut self,
        m: &Formula,
        steps: usize,
    ) -> (Vec<AssumptionRule>, Derivation) {
        let ctx = self.context(4, 2);
        let mut d = derive_identity(&ctx, m);
        let mut assumptions = Vec::new();
        for _ in 0..steps {
            d = match self.rng.gen_range(0..4) {
                0 => self.grow_and_l(d),
                1 => self.grow_dia_l(d),
                2 => self.grow_or_l(d),
                _ => self.grow_assn(d, &mut assumptions),
            };
        }
        (assumptions, d)
    }

    /// A derivation whose conclusion antecedent holds `m` as a formula item
    /// at a returned address; grown only with steps that leave that
    /// occurrence in place. Boxed targets sometimes get a `BoxL` applied to
    /// the tracked occurrence itself, and annotated neighbourhoods attract
    /// assumption steps, so cut tests reach the principal-`BoxL` and
    /// assumption reductions.
    pub fn derivation_with_occurrence(
        &mut self,
        m: &Formula,
        steps: usize,
    ) -> (Vec<AssumptionRule>, Derivation, ItemPath) {
        let mut holder = self.context(3, 1);
        let box_play = matches!(m, Formula::Box_(..)) && self.rng.gen_ratio(1, 2);
        let nested = box_play || self.rng.gen_ratio(1, 3);
        let mut at = if nested {
            let agent = if let (true, Formula::Box_(a, _)) = (box_play, m) {
                a.clone()
            } else {
                self.agent()
            };
            let inner_extra = self.context(2, 0);
            let mut inner_items = inner_extra.items.clone();
            let idx = inner_items.len();
            inner_items.push(Item::F(m.clone()));
            // an atom beside the target lets assumption steps fire inside
            inner_items.push(Item::F(Formula::atom(self.atom())));
            let ann = Item::Ann(agent, Context::new(inner_items));
            let pos = holder.items.len();
            holder.items.push(ann);
            ItemPath::new(vec![pos], idx)
        } else {
            let pos = holder.items.len();
            holder.items.push(Item::F(m.clone()));
            ItemPath::top(pos)
        };
        let mut sibling = None;
        if box_play {
            if let Formula::Box_(_, body) = m {
                // the boxed body beside the annotated item lets a forward
                // BoxL consume it, making the tracked occurrence principal
                sibling = Some(holder.items.len());
                holder.items.push(Item::F(body.as_ref().clone()));
            }
        }
        let goal = self.formula(3);
        let mut d = derive_identity(&holder, &goal);
        if let Some(removed) = sibling {
            let (ante, ()) = d
                .conclusion
                .antecedent
                .edit_level(&[], |items| {
                    items.remove(removed);
                })
                .unwrap();
            let conclusion = Sequent::new(ante, d.conclusion.succedent.clone());
            let rule = Rule::BoxL { item: ItemPath::top(at.level[0]), formula: at.index };
            d = Derivation::node(conclusion, rule, vec![d]).expect("BoxL grows");
        }
        let mut assumptions = Vec::new();
        for _ in 0..steps {
            match self.rng.gen_range(0..4) {
                0 => d = self.grow_or_r(d),
                1 => d = self.grow_and_r(d),
                2 => {
                    let (grown, moved) = self.grow_assn_tracked(d, &mut assumptions, Some(&at));
                    d = grown;
                    at = moved.expect("tracked occurrence survives");
                }
                _ => {
                    // the old antecedent moves inside the principal item
                    let (wrapped, principal) = self.grow_dia_r_tracked(d);
                    d = wrapped;
                    let mut level = vec![principal];
                    level.extend_from_slice(&at.level);
                    at = ItemPath::new(level, at.index);
                }
            }
        }
        debug_assert!(matches!(
            d.conclusion.antecedent.item(&at),
            Ok(Item::F(f)) if f == m
        ));
        (assumptions, d, at)
    }
}
