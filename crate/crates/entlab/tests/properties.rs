//! Invariants as property tests over seeded random laws.

use entlab::bsg_construct::{bsg_coupling, check_coupling_structure, conditional_iid_extend};
use entlab::covering_experiments::{graph_image, Graph, Operation, PointSet};
use entlab::distance_energy::partition_frostman;
use entlab::entropy_core::{
    check_chain_rule, check_cond_iid_identity, check_mutual_information_nonneg, entropy, entropy_of_axes,
};
use entlab::examples_gallery::{generate, ExampleSpec, Family};
use entlab::frostman_cert::{check_entropy_lower_bound, frostman_constant_1d, hierarchy_report};
use entlab::pushforward::{diagonalize, distance_law, quad_form_push, QuadForm};
use entlab::random::{random_1d, random_cascade, random_joint, rng};
use entlab::rational::int;
use entlab::Dist;
use proptest::prelude::*;

fn joint(seed: u64) -> Dist {
    let mut r = rng(seed);
    random_joint(&mut r, 3 + (seed % 3) as u32, 6)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn total_mass_is_one_after_every_operation(seed in any::<u64>()) {
        let d = joint(seed);
        prop_assert!(close(d.total_mass(), 1.0));
        prop_assert!(close(d.marginal(&[0]).unwrap().total_mass(), 1.0));
        prop_assert!(close(d.change_level(d.level() + 2).total_mass(), 1.0));
        prop_assert!(close(d.change_level(1).total_mass(), 1.0));
        prop_assert!(d.iter().all(|(c, m)| m > 0.0 && d.grid().contains(c)));
    }

    #[test]
    fn product_entropy_is_additive(a in any::<u64>(), b in any::<u64>()) {
        let (x, y) = (joint(a), joint(b));
        let (x, y) = if x.level() == y.level() { (x, y) } else {
            let l = x.level().max(y.level());
            (x.change_level(l), y.change_level(l))
        };
        prop_assert!(close(entropy(&x.product(&y)), entropy(&x) + entropy(&y)));
    }

    #[test]
    fn refinement_adds_dim_bits_per_level(seed in any::<u64>(), k in 1u32..4) {
        let d = joint(seed);
        let fine = d.change_level(d.level() + k);
        prop_assert!(close(entropy(&fine), entropy(&d) + (2 * k) as f64));
        let coarse = d.change_level(d.level() - 1);
        prop_assert!(entropy(&coarse) <= entropy(&d) + 1e-12);
    }

    #[test]
    fn information_identities_hold(seed in any::<u64>()) {
        let d = joint(seed);
        prop_assert!(check_chain_rule(&d, &[1]).unwrap().pass);
        prop_assert!(check_mutual_information_nonneg(&d, &[0], &[1]).unwrap().pass);
        prop_assert!(check_cond_iid_identity(&d).unwrap().pass);
    }

    #[test]
    fn extension_keeps_input_marginals(seed in any::<u64>()) {
        let d = joint(seed);
        let ext = conditional_iid_extend(&d, &[0], &[1], |z| z.to_vec()).unwrap();
        prop_assert_eq!(ext.marginal(&[0, 1]).unwrap().masses().len(), d.masses().len());
        for (c, m) in d.iter() {
            prop_assert!(close(ext.marginal(&[0, 1]).unwrap().mass_of(c), m));
            prop_assert!(close(ext.marginal(&[2, 1]).unwrap().mass_of(c), m));
        }
    }

    #[test]
    fn coupling_structure_holds(seed in any::<u64>()) {
        let d = joint(seed);
        for n in [d.level(), d.level() - 1] {
            let coupling = bsg_coupling(&d, n).unwrap();
            for r in check_coupling_structure(&d, &coupling, n).unwrap() {
                prop_assert!(r.pass, "{:?}", r);
            }
        }
    }

    #[test]
    fn diagonalization_is_exact_and_admissible(a1 in -6i64..=6, a2 in -6i64..=6, a3 in -6i64..=6) {
        prop_assume!(a2 * a2 - 4 * a1 * a3 != 0);
        let f = diagonalize(&int(a1), &int(a2), &int(a3)).unwrap();
        prop_assert!(f.identity_holds());
        prop_assert!(f.diag.as_ref().unwrap().is_admissible());
    }

    #[test]
    fn quad_form_push_matches_float_evaluation(seed in any::<u64>(), a1 in -3i64..=3, a2 in -3i64..=3, a3 in -3i64..=3) {
        let d = joint(seed);
        let f = QuadForm::from_ints(a1, a2, a3);
        let n = d.level();
        let law = quad_form_push(&d, &f, n).unwrap();
        prop_assert!(close(law.total_mass(), 1.0));
        // Values are exact multiples of 4^-level, so the float path is exact too.
        let scale = (n as f64).exp2();
        for (c, m) in d.iter() {
            let p = d.point_of(c);
            let cell = (f.eval_f64(p[0], p[1]) * scale).floor() as i64;
            prop_assert!(law.mass_of(&[cell]) >= m - 1e-12);
        }
    }

    #[test]
    fn distance_law_is_a_probability_on_nonnegative_cells(seed in any::<u64>()) {
        let d = joint(seed);
        for squared in [false, true] {
            let law = distance_law(&d, &d, squared, d.level()).unwrap();
            prop_assert!(close(law.total_mass(), 1.0));
            prop_assert!(law.iter().all(|(c, _)| c[0] >= 0));
        }
    }

    #[test]
    fn hierarchy_implications_hold(seed in any::<u64>(), s1 in 0.05f64..1.0, s2 in 0.05f64..1.0) {
        let d = joint(seed);
        for r in hierarchy_report(&d, s1, s2).unwrap().reports {
            prop_assert!(r.pass, "{:?}", r);
        }
    }

    #[test]
    fn entropy_lower_bound_holds_at_every_level(seed in any::<u64>(), s in 0.05f64..=1.0) {
        let mut r = rng(seed);
        let d = random_1d(&mut r, 6, 1 + (seed % 20) as usize);
        let cert = frostman_constant_1d(&d, s).unwrap();
        for n in 0..=6 {
            prop_assert!(check_entropy_lower_bound(&d, &cert, n).unwrap().pass);
        }
    }

    #[test]
    fn partition_conclusions_hold(seed in any::<u64>(), g in 0usize..3, s in 0.5f64..0.9) {
        let mut r = rng(seed);
        let mu = random_cascade(&mut r, 14, 0.3);
        let c = frostman_constant_1d(&mu, s).unwrap().constant;
        let gamma = [0.1, 0.2, 0.3][g];
        let part = partition_frostman(&mu, gamma, s, c).unwrap();
        for rep in &part.reports {
            prop_assert!(rep.pass, "{:?}", rep);
        }
        prop_assert!(close(part.masses.iter().sum::<f64>(), 1.0));
    }

    #[test]
    fn covering_counts_are_bounded_and_monotone(cells in prop::collection::btree_set(0i64..256, 1..24), keep in any::<u64>()) {
        let a = PointSet::new(8, cells);
        let full = Graph::full(a.len());
        let sub = Graph { vertices: a.len(), edges: full.edges.iter().copied().enumerate().filter(|(i, _)| (keep >> (i % 64)) & 1 == 1).map(|(_, e)| e).collect() };
        for op in [Operation::Sum, Operation::Form { form: QuadForm::from_ints(1, 0, 1) }] {
            let big = graph_image(&a, &full, &op).unwrap().covering_number(8).unwrap();
            prop_assert!(big >= 1 && big <= a.len() * a.len());
            let small = graph_image(&a, &sub, &op).unwrap().covering_number(8).unwrap();
            prop_assert!(small <= big);
        }
    }

    #[test]
    fn square_graph_agrees_with_the_subset_as_a_set(cells in prop::collection::btree_set(0i64..256, 2..20), pick in any::<u32>()) {
        let a = PointSet::new(8, cells);
        let b: Vec<usize> = (0..a.len()).filter(|i| (pick >> (i % 32)) & 1 == 1).collect();
        prop_assume!(!b.is_empty());
        let sub = PointSet::new(8, b.iter().map(|&i| a.cells[i]));
        for op in [Operation::Sum, Operation::Form { form: QuadForm::from_ints(2, -1, 3) }] {
            let via_graph = graph_image(&a, &Graph::square(a.len(), &b), &op).unwrap();
            let via_subset = graph_image(&sub, &Graph::full(sub.len()), &op).unwrap();
            prop_assert_eq!(via_graph, via_subset);
        }
    }

    #[test]
    fn generated_examples_are_valid_laws(m in 1u32..=4, l in 0u32..=4) {
        for family in [Family::Ex1, Family::Ex1Sqrt, Family::Ex1Degenerate, Family::Ex2, Family::Ex2Dependent] {
            let d = generate(&ExampleSpec::new(family, m, l)).unwrap();
            prop_assert!(close(d.total_mass(), 1.0));
            prop_assert!(d.iter().all(|(c, _)| d.grid().contains(c)));
        }
        let dep = generate(&ExampleSpec::new(Family::Ex2Dependent, m, 0)).unwrap();
        prop_assert!(dep.iter().all(|(c, _)| c[0] == c[1]));
        prop_assert!(close(entropy_of_axes(&dep, &[0]).unwrap(), m as f64));
    }
}
