//! Randomized invariants: parser round trips, measure arithmetic, ratio
//! monotonicity, product factorization, and order extensions, each checked
//! against direct enumeration where one exists.

mod common;

use common::naive_dk;
use keisler_core::dependence::dk_report;
use keisler_core::logic::{
    eval_instance, parse_formula, FiniteStructure, Formula, PartitionedFormula, PhiFormula, Term,
};
use keisler_core::measure::{convex_deviation_holds, KeislerMeasure};
use keisler_core::typespace::{CutSide, ExtensionContext, TheoryKind, TypeAtom, TypeSpace};
use keisler_core::{rat, Measure, Rat};
use num_traits::{One, Zero};
use proptest::collection::{btree_set, vec};
use proptest::prelude::*;
use std::sync::Arc;

fn term() -> impl Strategy<Value = Term> {
    prop_oneof![
        Just(Term::Var("x".to_string())),
        Just(Term::Var("y".to_string())),
    ]
}

fn leaf() -> impl Strategy<Value = Formula> {
    (term(), term(), any::<bool>()).prop_map(|(a, b, lt)| {
        if lt {
            Formula::Rel("lt".to_string(), vec![a, b])
        } else {
            Formula::Eq(a, b)
        }
    })
}

fn formula() -> impl Strategy<Value = Formula> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::implies(a, b)),
        ]
    })
}

/// A measure over generic-vertex atoms with the given adjacency patterns
/// (bits over 3 base vertices) and the given weight numerators.
fn pattern_measure(patterns: &[u8], numerators: &[u32]) -> Measure {
    let base = Arc::new(FiniteStructure::graph(3, &[]));
    let pf = parse_formula(&base.signature, "E(x, y)", &["x"], &["y"]).unwrap();
    let atoms: Vec<TypeAtom> = patterns
        .iter()
        .map(|&p| TypeAtom::RgGeneric((0..3).map(|j| p >> j & 1 == 1).collect()))
        .collect();
    let space =
        Arc::new(TypeSpace::from_atoms(base, TheoryKind::RandomGraph, pf, atoms, None).unwrap());
    let total: i64 = numerators.iter().map(|&n| n as i64).sum();
    let weights: Vec<Rat> = numerators.iter().map(|&n| rat(n as i64, total)).collect();
    KeislerMeasure::new(space, weights).unwrap()
}

/// Patterns plus numerators with at least one positive entry.
fn measure_inputs() -> impl Strategy<Value = (Vec<u8>, Vec<u32>)> {
    btree_set(0u8..8, 2..=6).prop_flat_map(|pats| {
        let pats: Vec<u8> = pats.into_iter().collect();
        let len = pats.len();
        (Just(pats), vec(0u32..=8, len..=len))
            .prop_filter("weights must carry mass", |(_, nums)| {
                nums.iter().any(|&n| n > 0)
            })
    })
}

proptest! {
    #[test]
    fn display_round_trips_through_the_parser(f in formula()) {
        let base = FiniteStructure::linear_order(3);
        let text = f.to_string();
        let parsed = parse_formula(&base.signature, &text, &["x"], &["y"])
            .unwrap_or_else(|e| panic!("display {text:?} failed to parse: {e}"));
        prop_assert_eq!(parsed.formula, f);
    }

    #[test]
    fn dual_swaps_roles_and_involutes(f in formula(), n in 2usize..=5, a in 0usize..5, b in 0usize..5) {
        prop_assume!(a < n && b < n);
        let pf = PartitionedFormula {
            formula: f,
            object_vars: vec!["x".to_string()],
            param_vars: vec!["y".to_string()],
        };
        prop_assert_eq!(&pf.dual().dual(), &pf);
        let base = FiniteStructure::linear_order(n);
        let direct = eval_instance(&base, &pf, &[a], &[b]).unwrap();
        let flipped = eval_instance(&base, &pf.dual(), &[b], &[a]).unwrap();
        prop_assert_eq!(direct, flipped);
    }

    #[test]
    fn disjoint_masses_add_and_complements_close(
        (pats, nums) in measure_inputs(),
        split in vec(0u8..=2, 6),
        col in 0usize..3,
    ) {
        let mu = pattern_measure(&pats, &nums);
        let n = mu.space().atom_count();
        let a: Vec<usize> = (0..n).filter(|&i| split[i] == 1).collect();
        let b: Vec<usize> = (0..n).filter(|&i| split[i] == 2).collect();
        let union: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
        prop_assert_eq!(
            mu.mass_of_atoms(&union),
            mu.mass_of_atoms(&a) + mu.mass_of_atoms(&b)
        );

        let params = mu.space().param_tuples()[col].clone();
        let theta = PhiFormula::instance(&mu.space().formula, &params);
        let direct: Rat = (0..n)
            .filter(|&i| mu.space().trace.get(i, col))
            .map(|i| mu.weight(i).clone())
            .sum();
        prop_assert_eq!(mu.measure_of_phi(&theta).unwrap(), direct.clone());
        prop_assert_eq!(
            mu.measure_of_phi(&theta.clone().negated()).unwrap(),
            Rat::one() - direct
        );
        let both = PhiFormula::And(vec![theta.clone(), theta.clone().negated()]);
        let either = PhiFormula::Or(vec![theta.clone(), theta.negated()]);
        prop_assert!(mu.measure_of_phi(&both).unwrap().is_zero());
        prop_assert!(mu.measure_of_phi(&either).unwrap().is_one());
    }

    #[test]
    fn column_restrictions_compose(
        n in 3usize..=5,
        keep_a in btree_set(0usize..5, 1..=5),
        keep_b in btree_set(0usize..5, 1..=5),
    ) {
        let base = Arc::new(FiniteStructure::linear_order(n));
        let pf = parse_formula(&base.signature, "x < y", &["x"], &["y"]).unwrap();
        let (space, _) = TypeSpace::realized(base, TheoryKind::Dlo, pf, None).unwrap();
        let a: Vec<usize> = keep_a.into_iter().filter(|&c| c < n).collect();
        prop_assume!(!a.is_empty());
        let b: Vec<usize> = keep_b.into_iter().filter(|&p| p < a.len()).collect();
        prop_assume!(!b.is_empty());

        let (mid, map_a) = space.restrict_to_columns(&a).unwrap();
        let (two_step, map_b) = mid.restrict_to_columns(&b).unwrap();
        let composed_cols: Vec<usize> = b.iter().map(|&p| a[p]).collect();
        let (one_step, map_direct) = space.restrict_to_columns(&composed_cols).unwrap();

        let composed: Vec<usize> = map_a.iter().map(|&m| map_b[m]).collect();
        prop_assert_eq!(composed, map_direct);
        let rows_two: Vec<String> =
            (0..two_step.atom_count()).map(|r| two_step.trace.row_string(r)).collect();
        let rows_one: Vec<String> =
            (0..one_step.atom_count()).map(|r| one_step.trace.row_string(r)).collect();
        prop_assert_eq!(rows_two, rows_one);
    }

    #[test]
    fn alternation_ratios_shrink_and_match_the_naive_scan((pats, nums) in measure_inputs()) {
        let mu = pattern_measure(&pats, &nums);
        let mut previous = Rat::one();
        for k in 1..=3usize {
            let report = dk_report(&mu, k, None, 1_000_000).unwrap();
            let (mass, count) = naive_dk(&mu.space().trace, mu.weights(), k);
            prop_assert_eq!(&report.dk_mass, &mass, "mass mismatch at k = {}", k);
            prop_assert_eq!(report.tuple_count, count, "count mismatch at k = {}", k);
            prop_assert!(
                report.ratio <= previous,
                "ratio grew from {} at k = {}",
                previous,
                k
            );
            previous = report.ratio;
        }
    }

    #[test]
    fn product_mass_of_rectangles_factorizes(
        (pats, nums) in measure_inputs(),
        picks in vec(vec(any::<bool>(), 6), 1..=3),
    ) {
        let mu = pattern_measure(&pats, &nums);
        let n = mu.space().atom_count();
        let sides: Vec<Vec<usize>> = picks
            .iter()
            .map(|side| (0..n).filter(|&i| side[i]).collect())
            .collect();
        let boxed = mu
            .product(sides.len())
            .mass_where(|t| t.iter().zip(&sides).all(|(a, s)| s.contains(a)));
        let factored: Rat = sides.iter().map(|s| mu.mass_of_atoms(s)).product();
        prop_assert_eq!(boxed, factored);
    }

    #[test]
    fn averages_never_beat_the_blend_of_their_parts(
        p in 0i64..=8,
        q in 1i64..=8,
        mu_nums in vec(0u32..=8, 4),
        nu_nums in vec(0u32..=8, 4),
        sample in vec(0usize..4, 1..=8),
    ) {
        prop_assume!(p <= q);
        prop_assume!(mu_nums.iter().any(|&x| x > 0) && nu_nums.iter().any(|&x| x > 0));
        let base = Arc::new(FiniteStructure::linear_order(4));
        let pf = parse_formula(&base.signature, "x < y", &["x"], &["y"]).unwrap();
        let (space, _) = TypeSpace::realized(base, TheoryKind::Dlo, pf, None).unwrap();
        let space = Arc::new(space);
        let to_measure = |nums: &[u32]| {
            let total: i64 = nums.iter().map(|&x| x as i64).sum();
            let weights: Vec<Rat> = nums.iter().map(|&x| rat(x as i64, total)).collect();
            KeislerMeasure::new(Arc::clone(&space), weights).unwrap()
        };
        let mu = to_measure(&mu_nums);
        let nu = to_measure(&nu_nums);
        let av = KeislerMeasure::average(Arc::clone(&space), &sample).unwrap();
        let events: Vec<PhiFormula> = space
            .param_tuples()
            .iter()
            .map(|t| PhiFormula::instance(&space.formula, t))
            .collect();
        prop_assert!(convex_deviation_holds(&rat(p, q), &mu, &nu, &av, &events).unwrap());
    }

    #[test]
    fn cut_extensions_stay_strict_linear_orders(
        n in 2usize..=5,
        cuts in vec((0usize..5, any::<bool>()), 0..=4),
    ) {
        let base = FiniteStructure::linear_order(n);
        let pf = parse_formula(&base.signature, "x < y", &["x"], &["y"]).unwrap();
        let mut ctx = ExtensionContext::new(&base, TheoryKind::Dlo).unwrap();
        for (pos, above) in cuts {
            let atom = TypeAtom::DloCut {
                position: pos % n,
                side: if above { CutSide::Above } else { CutSide::Below },
            };
            atom.realize(&mut ctx).unwrap();
        }
        let s = ctx.structure();
        let size = s.size;
        let lt = |a: usize, b: usize| eval_instance(s, &pf, &[a], &[b]).unwrap();
        for a in 0..size {
            prop_assert!(!lt(a, a), "irreflexivity failed at {}", a);
            for b in 0..size {
                if a != b {
                    prop_assert!(lt(a, b) != lt(b, a), "totality failed at {} {}", a, b);
                }
                for c in 0..size {
                    if lt(a, b) && lt(b, c) {
                        prop_assert!(lt(a, c), "transitivity failed at {} {} {}", a, b, c);
                    }
                }
            }
        }
        for a in 0..n {
            for b in a + 1..n {
                prop_assert!(lt(a, b), "base order disturbed at {} {}", a, b);
            }
        }
    }
}
