//! Prior-construction checks: the distinguished-subclass membership scan
//! against its geometric characterization, certificate equivalences, class
//! soundness and exact domination.

mod common;

use common::{gaussian_rank, random_hull_member};
use num_traits::{One, Signed};
use qsna_core::geom::{affine_hull, dot, ri_conv_contains_zero};
use qsna_core::harness::{gen_instance, GeneratorConfig};
use qsna_core::market::sample;
use qsna_core::na::{global_na, local_na, single_prior_na};
use qsna_core::prior::{
    class_member, construct_p_hat, construct_p_star, dominating_member, improve_prior,
    polar_sets_equal, qbar_member, sample_class_member,
};
use qsna_core::rat::{rat, Rat};
use qsna_core::{NodeId, ProbVector, ScenarioTree};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use num_bigint::BigInt;

fn small_config() -> GeneratorConfig {
    GeneratorConfig { max_paths: Some(24), ..Default::default() }
}

/// Geometric form of subclass membership: the prior's one-step support must
/// carry the origin in its relative interior and span the same affine hull
/// as the quasi-sure support.
fn qbar_geometric(tree: &ScenarioTree, node: &NodeId, p: &ProbVector) -> bool {
    let e = tree.support_e(node, p);
    let d = tree.support_d(node);
    ri_conv_contains_zero(&e) && affine_hull(&e).same_as(&affine_hull(&d))
}

#[test]
fn qbar_scan_agrees_with_geometric_characterization() {
    let mut rng = ChaCha8Rng::seed_from_u64(2000);
    let mut members = 0;
    let mut cases = 0;
    for seed in 2000..2080u64 {
        let tree = gen_instance(&small_config().with_seed(seed)).unwrap();
        for node in tree.non_terminal_nodes() {
            let p = random_hull_member(&mut rng, tree.generators(&node));
            let scan = qbar_member(&tree, &node, &p).expect("hull member");
            let geo = qbar_geometric(&tree, &node, &p);
            assert_eq!(scan.in_qbar, geo, "seed {seed} node {:?}", node);
            cases += 1;
            if scan.in_qbar {
                members += 1;
                // membership implies single-measure soundness
                assert!(ri_conv_contains_zero(&tree.support_e(&node, &p)));
            } else {
                let h = scan.counterexample.expect("counterexample when outside");
                assert!(!h.iter().all(num_traits::Zero::is_zero));
                let d = tree.support_d(&node);
                assert!(affine_hull(&d).contains(&h), "counterexample leaves Aff(D)");
                for y in tree.support_e(&node, &p) {
                    assert!(!dot(&h, &y).is_negative(), "p charges {{h·Y < 0}}");
                }
            }
        }
    }
    assert!(members > 40, "hull-member corpus too lopsided: {members}/{cases}");
}

#[test]
fn p_hat_postconditions_on_random_na_nodes() {
    let mut checked = 0;
    for seed in 2100..2160u64 {
        let tree = gen_instance(&small_config().with_seed(seed)).unwrap();
        for node in tree.non_terminal_nodes() {
            if !local_na(&tree, &node).holds {
                assert!(construct_p_hat(&tree, &node).is_err());
                continue;
            }
            let p_hat = construct_p_hat(&tree, &node).unwrap();
            let e = tree.support_e(&node, &p_hat);
            let d = tree.support_d(&node);
            assert!(affine_hull(&e).same_as(&affine_hull(&d)));
            assert!(ri_conv_contains_zero(&e));
            checked += 1;
        }
    }
    assert!(checked > 50);
}

#[test]
fn improve_prior_never_drops_dimension() {
    let mut rng = ChaCha8Rng::seed_from_u64(2200);
    for seed in 2200..2260u64 {
        let tree = gen_instance(&small_config().with_seed(seed)).unwrap();
        for node in tree.non_terminal_nodes() {
            let p = random_hull_member(&mut rng, tree.generators(&node));
            let q = random_hull_member(&mut rng, tree.generators(&node));
            let mixed = improve_prior(&tree, &node, &p, &q);

            let rank_of = |m: &ProbVector| {
                let pts = tree.support_e(&node, m);
                let diffs: Vec<Vec<Rat>> = pts[1..]
                    .iter()
                    .map(|y| y.iter().zip(&pts[0]).map(|(a, b)| a - b).collect())
                    .collect();
                gaussian_rank(diffs)
            };
            let dim_mixed = rank_of(&mixed);
            assert!(dim_mixed >= rank_of(&p));
            assert!(dim_mixed >= rank_of(&q));

            // support of the mixture is exactly the union
            let mut expected = tree.support_e(&node, &p);
            expected.extend(tree.support_e(&node, &q));
            expected.sort();
            expected.dedup();
            assert_eq!(tree.support_e(&node, &mixed), expected);
        }
    }
}

#[test]
fn p_star_validity_is_global_na() {
    let mut holding = 0;
    for seed in 2300..2380u64 {
        let tree = gen_instance(&small_config().with_seed(seed)).unwrap();
        let cert = construct_p_star(&tree);
        let holds = global_na(&tree);
        assert_eq!(cert.valid, holds, "seed {seed}");
        if holds {
            holding += 1;
            assert!(cert.checks.iter().all(|c| c.aff_match && c.ri_zero));
        } else {
            assert!(cert.checks.iter().any(|c| !c.aff_match || !c.ri_zero));
        }
        // kernels always stay inside the hull: weights are convex
        for (node, w) in &cert.kernels.weights {
            assert_eq!(w.len(), tree.generators(node).len());
            assert!(w.iter().all(|x| !x.is_negative()));
            assert!(w.iter().sum::<Rat>().is_one());
        }
    }
    assert!(holding > 15, "corpus too lopsided: {holding}");
}

#[test]
fn class_members_are_arbitrage_free_with_equal_polar_sets() {
    let mut na_trees = 0;
    for seed in 2400..2460u64 {
        let tree = gen_instance(&small_config().with_seed(seed)).unwrap();
        let cert = construct_p_star(&tree);
        if !cert.valid {
            continue;
        }
        na_trees += 1;
        assert!(polar_sets_equal(&tree, &cert.kernels), "seed {seed}");
        for sample_seed in 0..5u64 {
            let s = sample_class_member(&tree, &cert.kernels, seed ^ (sample_seed << 32));
            assert!(single_prior_na(&tree, &s.member), "seed {seed}/{sample_seed}");
            // members really are the stated mixtures
            for (node, w) in &s.member.weights {
                let l = &s.ell[node.depth()];
                let co = Rat::one() - l;
                let expect: Vec<Rat> = cert.kernels.weights[node]
                    .iter()
                    .zip(&s.q.weights[node])
                    .map(|(a, b)| l * a + &co * b)
                    .collect();
                assert_eq!(w, &expect);
            }
        }
    }
    assert!(na_trees > 10, "corpus too lopsided: {na_trees}");
}

#[test]
fn domination_inequality_exact_on_all_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(2500);
    for seed in 2500..2540u64 {
        let tree = gen_instance(&small_config().with_seed(seed)).unwrap();
        let cert = construct_p_star(&tree);
        let floor = Rat::new(BigInt::one(), BigInt::from(2i64.pow(tree.horizon as u32)));
        for _ in 0..5 {
            let q = sample::kernel_selection(&tree, &mut rng, 8);
            let dom = dominating_member(&tree, &cert.kernels, &q);
            for path in tree.paths() {
                let lhs = tree.path_probability(&dom, &path);
                let rhs = &floor * tree.path_probability(&q, &path);
                assert!(lhs >= rhs, "seed {seed}");
            }
            // hence q-positive paths stay positive: domination of null sets
            for path in tree.paths() {
                if tree.path_probability(&q, &path).is_positive() {
                    assert!(tree.path_probability(&dom, &path).is_positive());
                }
            }
        }
    }
}

#[test]
fn class_member_weight_validation() {
    let tree = gen_instance(&small_config().with_seed(2600)).unwrap();
    let cert = construct_p_star(&tree);
    let q = qsna_core::KernelSelection::first_generator(&tree);
    let ell_ok = vec![rat(1, 2); tree.horizon];
    assert!(class_member(&tree, &cert.kernels, &ell_ok, &q).is_ok());
    let mut ell_bad = ell_ok.clone();
    ell_bad[0] = rat(0, 1);
    assert!(class_member(&tree, &cert.kernels, &ell_bad, &q).is_err());
}
