//! Backward proof search and the proof-or-countermodel decision driver.
//!
//! [`prove`] explores rule instances bottom-up: closing rules first, then
//! the invertible rules (`AndL`, `OrL`, `DiaL`, `AndR`, `BoxR`) applied
//! deterministically, then assumption steps (also safe to apply eagerly:
//! their premisses only add information), and finally the genuine choice
//! points — `OrR1`/`OrR2`, `DiaR` principal splits and `BoxL` — explored
//! with backtracking.
//!
//! Termination is enforced by three measures: a loop check pruning any
//! branch whose canonical sequent already occurred on the path, suppression
//! of `BoxL` steps whose new sibling is already present, and hard bounds on
//! depth and on `BoxL` uses per branch. A failed search therefore reports
//! *not proved within bounds*, never non-provability.
//!
//! [`decide`] races the prover against bounded countermodel enumeration on
//! two workers with first-success cancellation.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;

use serde::Serialize;

use crate::calculus::{backward_instances_opt, check, AssumptionRule, Derivation, Rule};
use crate::semantics::{find_countermodel_where_cancellable, Countermodel, ModelBounds};
use crate::syntax::{Formula, Item, Sequent};

/// Resource bounds and switches for one search.
#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub max_depth: usize,
    pub max_boxl_per_branch: usize,
    pub loop_check: bool,
    pub assumptions: Vec<AssumptionRule>,
    /// Debug switch: with this off, `BoxL` consumes its principal formula
    /// instead of keeping it — a strictly weaker rule. Searches in that
    /// mode never return derivations.
    pub boxl_duplicate: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_depth: 60,
            max_boxl_per_branch: 8,
            loop_check: true,
            assumptions: Vec::new(),
            boxl_duplicate: true,
        }
    }
}

impl SearchConfig {
    pub fn with_assumptions(assumptions: Vec<AssumptionRule>) -> Self {
        SearchConfig { assumptions, ..SearchConfig::default() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub nodes_expanded: usize,
    pub max_depth_reached: usize,
    pub loop_prunes: usize,
    pub boxl_sibling_suppressions: usize,
    pub boxl_cap_prunes: usize,
    pub depth_cutoffs: usize,
}

/// What a search produced.
#[derive(Clone, Debug)]
pub enum SearchOutcome {
    /// A checking cut-free derivation (relative to the assumption set).
    Proved(Derivation),
    NotProvedWithinBounds(SearchStats),
    /// Only produced by [`decide`].
    Refuted(Box<Countermodel>, SearchStats),
}

impl SearchOutcome {
    pub fn is_proved(&self) -> bool {
        matches!(self, SearchOutcome::Proved(_))
    }

    pub fn derivation(&self) -> Option<&Derivation> {
        match self {
            SearchOutcome::Proved(d) => Some(d),
            _ => None,
        }
    }
}

/// Search for a cut-free derivation of `sequent` within the configured
/// bounds. A `Proved` result checks against `config.assumptions`.
pub fn prove(sequent: &Sequent, config: &SearchConfig) -> SearchOutcome {
    prove_cancellable(sequent, config, None)
}

pub fn prove_cancellable(
    sequent: &Sequent,
    config: &SearchConfig,
    cancel: Option<&AtomicBool>,
) -> SearchOutcome {
    let mut searcher = Searcher { config, cancel, stats: SearchStats::default() };
    let mut history = Vec::new();
    match searcher.solve(sequent, &mut history, 0, 0) {
        Some(d) => {
            debug_assert!(config.boxl_duplicate, "weak-BoxL searches must not produce derivations");
            debug_assert!(check(&d, &config.assumptions, false).is_ok());
            debug_assert!(d.is_cut_free());
            SearchOutcome::Proved(d)
        }
        None => SearchOutcome::NotProvedWithinBounds(searcher.stats),
    }
}

struct Searcher<'a> {
    config: &'a SearchConfig,
    cancel: Option<&'a AtomicBool>,
    stats: SearchStats,
}

impl Searcher<'_> {
    fn cancelled(&self) -> bool {
        self.cancel.is_some_and(|c| c.load(Ordering::Relaxed))
    }

    fn solve(
        &mut self,
        goal: &Sequent,
        history: &mut Vec<Sequent>,
        depth: usize,
        boxl_used: usize,
    ) -> Option<Derivation> {
        if self.cancelled() {
            return None;
        }
        self.stats.nodes_expanded += 1;
        self.stats.max_depth_reached = self.stats.max_depth_reached.max(depth);
        if depth >= self.config.max_depth {
            self.stats.depth_cutoffs += 1;
            return None;
        }

        let instances =
            backward_instances_opt(goal, &self.config.assumptions, self.config.boxl_duplicate);

        // closing rules
        for (rule, premisses) in &instances {
            if premisses.is_empty() {
                return Derivation::node(goal.clone(), rule.clone(), vec![]).ok();
            }
        }

        let canonical = goal.canonical();
        if self.config.loop_check && history.contains(&canonical) {
            self.stats.loop_prunes += 1;
            return None;
        }
        history.push(canonical);
        let out = self.solve_open(goal, &instances, history, depth, boxl_used);
        history.pop();
        out
    }

    fn solve_open(
        &mut self,
        goal: &Sequent,
        instances: &[(Rule, Vec<Sequent>)],
        history: &mut Vec<Sequent>,
        depth: usize,
        boxl_used: usize,
    ) -> Option<Derivation> {
        // invertible rules: apply the first one, no backtracking over the choice
        let invertible = instances.iter().find(|(rule, _)| {
            matches!(
                rule,
                Rule::AndL { .. } | Rule::OrL { .. } | Rule::DiaL { .. } | Rule::AndR | Rule::BoxR
            )
        });
        if let Some((rule, premisses)) = invertible {
            return self.close_all(goal, rule, premisses, history, depth, boxl_used);
        }

        // assumption steps only add information: apply the first useful one
        let assn = instances.iter().find(|(rule, _)| {
            matches!(rule, Rule::Assn { .. }) && self.assn_is_informative(goal, rule)
        });
        if let Some((rule, premisses)) = assn {
            return self.close_all(goal, rule, premisses, history, depth, boxl_used);
        }

        // genuine choice points, tried with backtracking
        let mut boxl_seen = false;
        for phase in 0..2 {
            for (rule, premisses) in instances {
                let eligible = matches!(
                    (phase, rule),
                    (0, Rule::OrR1 | Rule::OrR2 | Rule::DiaR { .. }) | (1, Rule::BoxL { .. })
                );
                if !eligible {
                    continue;
                }
                let mut next_boxl = boxl_used;
                if matches!(rule, Rule::BoxL { .. }) {
                    boxl_seen = true;
                    if boxl_used >= self.config.max_boxl_per_branch {
                        continue;
                    }
                    next_boxl += 1;
                }
                if let Some(d) = self.close_all(goal, rule, premisses, history, depth, next_boxl) {
                    return Some(d);
                }
                if self.cancelled() {
                    return None;
                }
            }
        }
        if boxl_seen && boxl_used >= self.config.max_boxl_per_branch {
            self.stats.boxl_cap_prunes += 1;
        }
        self.count_suppressed_boxl(goal);
        None
    }

    fn close_all(
        &mut self,
        goal: &Sequent,
        rule: &Rule,
        premisses: &[Sequent],
        history: &mut Vec<Sequent>,
        depth: usize,
        boxl_used: usize,
    ) -> Option<Derivation> {
        let mut children = Vec::with_capacity(premisses.len());
        for premiss in premisses {
            children.push(self.solve(premiss, history, depth + 1, boxl_used)?);
        }
        Derivation::node(goal.clone(), rule.clone(), children).ok()
    }

    /// An assumption step is skipped when its consequent — or any of its
    /// disjuncts — is already present at the target level: the level
    /// already carries that information, and re-adding it diverges.
    fn assn_is_informative(&self, goal: &Sequent, rule: &Rule) -> bool {
        let Rule::Assn { assumption, item } = rule else {
            return false;
        };
        let Ok(level) = goal.antecedent.level(&item.level) else {
            return false;
        };
        if level.contains(&Item::F(assumption.consequent.clone())) {
            return false;
        }
        !disjuncts(&assumption.consequent)
            .iter()
            .any(|d| level.iter().any(|i| matches!(i, Item::F(f) if f == *d)))
    }

    /// Bookkeeping only: how many `BoxL` instances the enumerator dropped
    /// at this sequent because the sibling was already present.
    fn count_suppressed_boxl(&mut self, goal: &Sequent) {
        for level in crate::calculus::context_levels(&goal.antecedent) {
            let Ok(items) = goal.antecedent.level(&level) else { continue };
            for item in items {
                let Item::Ann(agent, inner) = item else { continue };
                for inner_item in &inner.items {
                    if let Item::F(Formula::Box_(b, m)) = inner_item {
                        if b == agent && items.contains(&Item::F(m.as_ref().clone())) {
                            self.stats.boxl_sibling_suppressions += 1;
                        }
                    }
                }
            }
        }
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

/// Run the prover and the bounded countermodel enumerator as two workers
/// with first-success cancellation. Exactly one definitive answer is
/// returned; producing both a proof and a countermodel for the same sequent
/// is asserted against.
pub fn decide(sequent: &Sequent, config: &SearchConfig, bounds: &ModelBounds) -> SearchOutcome {
    let cancel = AtomicBool::new(false);
    let (proof, counter, stats) = std::thread::scope(|scope| {
        let (tx_p, rx_p) = mpsc::channel();
        let (tx_c, rx_c) = mpsc::channel();
        let cancel = &cancel;
        scope.spawn(move || {
            let outcome = prove_cancellable(sequent, config, Some(cancel));
            if outcome.is_proved() {
                cancel.store(true, Ordering::Relaxed);
            }
            let _ = tx_p.send(outcome);
        });
        scope.spawn(move || {
            let cm = find_countermodel_where_cancellable(
                sequent,
                bounds,
                &config.assumptions,
                Some(cancel),
            );
            if cm.is_some() {
                cancel.store(true, Ordering::Relaxed);
            }
            let _ = tx_c.send(cm);
        });
        let outcome = rx_p.recv().expect("prover worker reports");
        let cm = rx_c.recv().expect("refuter worker reports");
        match outcome {
            SearchOutcome::Proved(d) => (Some(d), cm, SearchStats::default()),
            SearchOutcome::NotProvedWithinBounds(stats) => (None, cm, stats),
            SearchOutcome::Refuted(..) => unreachable!("prove never refutes"),
        }
    });
    match (proof, counter) {
        (Some(d), None) => SearchOutcome::Proved(d),
        (None, Some(cm)) => SearchOutcome::Refuted(Box::new(cm), stats),
        (None, None) => SearchOutcome::NotProvedWithinBounds(stats),
        (Some(d), Some(cm)) => {
            // a cancelled worker can still have finished first with a
            // genuine answer; both succeeding is a soundness failure
            panic!(
                "decide produced both a proof and a countermodel for `{}`:\n{}\n{}",
                sequent,
                d.render_text(),
                cm
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_sequent;

    fn seq(s: &str) -> Sequent {
        parse_sequent(s).unwrap()
    }

    fn proved(s: &str) -> bool {
        prove(&seq(s), &SearchConfig::default()).is_proved()
    }

    #[test]
    fn simple_proofs() {
        assert!(proved("p |- p"));
        assert!(proved("|- top"));
        assert!(proved("bot |- p"));
        assert!(proved("p & q |- q & p"));
        assert!(proved("p |- p | q"));
        assert!(proved("(p)^A |- <A>(p)"));
        assert!(proved("<A>(bot) |- bot"));
        assert!(proved("p |- [A]<A>(p)"));
        assert!(proved("<A>([A](p)) |- p"));
    }

    #[test]
    fn simple_failures() {
        assert!(!proved("p |- q"));
        assert!(!proved("[A](p) |- p"));
        assert!(!proved("p |- <A>(p)"));
        assert!(!proved("<A>(p) & <A>(q) |- <A>(p & q)"));
    }

    #[test]
    fn join_preservation_shape() {
        // the derivation unfolds the annotation and splits the disjunction
        let out = prove(&seq("<A>(p | q) |- <A>(p) | <A>(q)"), &SearchConfig::default());
        let d = out.derivation().expect("join preservation is derivable");
        assert_eq!(d.rule.name(), "DiaL");
        assert_eq!(d.premisses[0].rule.name(), "OrL");
    }

    #[test]
    fn duplication_sequent_proves_with_default_rules() {
        let s = seq("<A>([A](p | q)) |- (p & <A>([A](p | q))) | (q & <A>([A](p | q)))");
        let out = prove(&s, &SearchConfig::default());
        assert!(out.is_proved());
    }

    #[test]
    fn duplication_sequent_fails_without_duplication() {
        let s = seq("<A>([A](p | q)) |- (p & <A>([A](p | q))) | (q & <A>([A](p | q)))");
        let config =
            SearchConfig { boxl_duplicate: false, max_depth: 30, ..SearchConfig::default() };
        let out = prove(&s, &config);
        assert!(!out.is_proved());
        // and not because the bounds ran dry
        if let SearchOutcome::NotProvedWithinBounds(stats) = out {
            assert_eq!(stats.depth_cutoffs, 0, "weak-rule search exhausted depth");
        }
    }

    #[test]
    fn assumption_search() {
        let assumption = AssumptionRule::new(
            crate::syntax::Agent::new("1"),
            "s{}",
            crate::syntax::parse_formula("s{1}").unwrap(),
        )
        .unwrap();
        let config = SearchConfig::with_assumptions(vec![assumption]);
        let out = prove(&seq("s{} |- [1] s{1}"), &config);
        assert!(out.is_proved());
        let d = out.derivation().unwrap();
        assert!(check(d, &config.assumptions, false).is_ok());
        // without the assumption the sequent is hopeless
        assert!(!proved("s{} |- [1] s{1}"));
    }

    #[test]
    fn decide_examples() {
        let config = SearchConfig::default();
        // valid: the unit of the adjunction
        let s = seq("p |- [A]<A>(p)");
        let bounds = ModelBounds::for_sequent(&s, 3);
        assert!(decide(&s, &config, &bounds).is_proved());

        let s = seq("<A>(bot) |- bot");
        let bounds = ModelBounds::for_sequent(&s, 3);
        assert!(decide(&s, &config, &bounds).is_proved());

        let s = seq("<A>(p) & <A>(q) |- <A>(p & q)");
        let bounds = ModelBounds::for_sequent(&s, 3);
        match decide(&s, &config, &bounds) {
            SearchOutcome::Refuted(cm, _) => {
                cm.structure.validate().unwrap();
                assert!(cm.structure.frame.worlds <= 3);
            }
            other => panic!("expected a countermodel, got {other:?}"),
        }
    }

    #[test]
    fn stats_are_recorded() {
        let out = prove(&seq("[A](p) |- p"), &SearchConfig::default());
        match out {
            SearchOutcome::NotProvedWithinBounds(stats) => {
                assert!(stats.nodes_expanded > 0);
                let json = serde_json::to_string(&stats).unwrap();
                assert!(json.contains("nodes_expanded"));
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }
}
