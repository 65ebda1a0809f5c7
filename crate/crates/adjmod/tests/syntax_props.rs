//! Randomized properties of the concrete syntax and the hole calculus.

mod common;

use adjmod::syntax::{combine, parse_context, parse_formula, parse_sequent, Context, Sequent};
use common::Gen;
use rand::Rng;

#[test]
fn print_parse_round_trip() {
    let mut g = Gen::new(0x0aa);
    for _ in 0..1000 {
        let f = g.formula(10);
        assert_eq!(parse_formula(&f.to_string()).unwrap(), f);

        let ctx = g.context(8, 3);
        // canonical printing may reorder items, so compare as multisets
        let back = parse_context(&ctx.to_string()).unwrap();
        assert!(back.multiset_eq(&ctx), "`{ctx}` reparsed as `{back}`");
        // order-preserving printing restores the exact representation
        assert_eq!(parse_context(&ctx.print_raw()).unwrap(), ctx);

        let seq = Sequent::new(ctx, f);
        assert!(parse_sequent(&seq.to_string()).unwrap().multiset_eq(&seq));
        assert_eq!(parse_sequent(&seq.print_raw()).unwrap(), seq);
    }
}

#[test]
fn canonical_is_a_multiset_normal_form() {
    let mut g = Gen::new(0xcafe);
    for _ in 0..500 {
        let ctx = g.context(8, 3);
        let mut shuffled = ctx.items.clone();
        // rotate and swap for a cheap shuffle
        if shuffled.len() > 1 {
            shuffled.rotate_left(1);
            let last = shuffled.len() - 1;
            shuffled.swap(0, last);
        }
        let reordered = Context::new(shuffled);
        assert_eq!(ctx.canonical(), reordered.canonical());
        assert!(ctx.multiset_eq(&reordered));

        // multiplicities matter
        if !ctx.items.is_empty() {
            let mut doubled = ctx.items.clone();
            doubled.push(ctx.items[0].clone());
            assert!(!ctx.multiset_eq(&Context::new(doubled)));
        }
    }
}

#[test]
fn plug_then_read_back_is_identity() {
    let mut g = Gen::new(0xb01);
    for _ in 0..500 {
        let base = g.context(6, 3);
        let levels = adjmod::calculus::context_levels(&base);
        let at = levels[g.rng.gen_range(0..levels.len())].clone();
        let filler = g.context(4, 1);
        let before = base.level(&at).unwrap().len();
        let plugged = base.plug(&at, &filler).unwrap();
        let after = plugged.level(&at).unwrap();
        assert_eq!(after.len(), before + filler.items.len());
        assert_eq!(&after[before..], &filler.items[..]);
    }
}

#[test]
fn combining_holes_composes_plugging() {
    // 1000 generated (outer, inner, filler) triples: plugging through the
    // combined hole equals plugging in two steps
    let mut g = Gen::new(0xcb1);
    for round in 0..1000 {
        let base = g.context(6, 3);
        let outer_levels = adjmod::calculus::context_levels(&base);
        let outer = outer_levels[g.rng.gen_range(0..outer_levels.len())].clone();
        let middle = g.context(5, 2);
        let inner_levels = adjmod::calculus::context_levels(&middle);
        let inner = inner_levels[g.rng.gen_range(0..inner_levels.len())].clone();
        let filler = g.context(4, 1);

        let (combined_base, combined_path) = combine(&base, &outer, &middle, &inner).unwrap();
        let via_combined = combined_base.plug(&combined_path, &filler).unwrap();
        let via_steps = base.plug(&outer, &middle.plug(&inner, &filler).unwrap()).unwrap();
        assert_eq!(via_combined, via_steps, "round {round}");
    }
}

#[test]
fn sizes_follow_the_weighting() {
    let mut g = Gen::new(0x5123);
    for _ in 0..500 {
        let f = g.formula(9);
        let printed = f.to_string();
        // the weight of a formula is operators: & | count 1, modalities 2
        let ands = printed.matches('&').count();
        let ors = printed.matches('|').count();
        let dias = printed.matches('<').count();
        let boxes = printed.matches('[').count();
        assert_eq!(f.size(), ands + ors + 2 * (dias + boxes), "{printed}");
    }
}
