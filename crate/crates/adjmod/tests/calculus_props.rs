//! Randomized properties of the rule schemas and backward enumeration.

mod common;

use adjmod::calculus::{backward_instances, check, premisses_of, Derivation, Rule};
use adjmod::syntax::{parse_formula, Agent};
use common::Gen;

#[test]
fn backward_instances_reassemble_into_checking_nodes() {
    let mut g = Gen::new(0xbac);
    let assumptions = vec![
        adjmod::calculus::AssumptionRule::new(
            Agent::new("A"),
            "p",
            parse_formula("p | q").unwrap(),
        )
        .unwrap(),
        adjmod::calculus::AssumptionRule::new(Agent::new("B"), "q", parse_formula("r").unwrap())
            .unwrap(),
    ];
    for round in 0..400 {
        let sequent = g.sequent(8);
        for (rule, premisses) in backward_instances(&sequent, &assumptions) {
            // the kernel agrees with the enumeration
            let computed = premisses_of(&sequent, &rule)
                .unwrap_or_else(|e| panic!("round {round}: {} rejected: {e}", rule.name()));
            assert_eq!(computed, premisses, "round {round}: {}", rule.name());
            assert!(!matches!(rule, Rule::Cut { .. }), "Cut must never be enumerated");

            // closing rules reassemble into full nodes accepted by check
            if premisses.is_empty() {
                let leaf = Derivation::leaf(sequent.clone(), rule).unwrap();
                check(&leaf, &assumptions, false).unwrap();
            }
        }
    }
}

#[test]
fn premiss_sizes_shrink_outside_the_cumulative_rules() {
    let mut g = Gen::new(0x512e);
    for _ in 0..400 {
        let sequent = g.sequent(8);
        for (rule, premisses) in backward_instances(&sequent, &[]) {
            for premiss in &premisses {
                match rule {
                    Rule::BoxL { .. } | Rule::Assn { .. } => {
                        assert!(premiss.size() >= sequent.size())
                    }
                    _ => assert!(
                        premiss.size() < sequent.size(),
                        "{} premiss `{premiss}` at least as big as `{sequent}`",
                        rule.name()
                    ),
                }
            }
        }
    }
}
