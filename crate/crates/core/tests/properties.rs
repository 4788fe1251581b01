//! Randomized property tests for the graph, CI, discovery and metric
//! layers. Each property states an invariant the library relies on and
//! checks it over seeded random instances.

use std::collections::BTreeSet;

use proptest::prelude::*;

use dsepcp::{
    aggregate, cp_discover, dsep_cp, exhaustive_sepset_search, fisher_z_tester, hit_rate, merge,
    oracle_tester, random_dag, sample_linear_sem, skeleton_scores, CausalGraph, Dag,
    DiscoveryConfig, GraphMode, SemSpec,
};

const PATH_LIMIT: usize = 200_000;

fn arb_dag() -> impl Strategy<Value = Dag> {
    (4usize..=10, 0u64..10_000, 10u8..=25)
        .prop_map(|(n, seed, tenths)| random_dag(n, f64::from(tenths) / 10.0, seed))
}

/// Sparse regime (`avg_children` ≤ 1.5): the setting in which guided
/// refinement recovers the exact skeleton.
fn arb_sparse_dag() -> impl Strategy<Value = Dag> {
    (4usize..=12, 0u64..10_000, 10u8..=15)
        .prop_map(|(n, seed, tenths)| random_dag(n, f64::from(tenths) / 10.0, seed))
}

/// Random undirected graph over a shared universe, restricted to `vars`.
fn arb_undirected(universe: usize) -> impl Strategy<Value = CausalGraph> {
    let pairs = universe * (universe - 1) / 2;
    (
        proptest::collection::vec(any::<bool>(), universe),
        proptest::collection::vec(any::<bool>(), pairs),
    )
        .prop_map(move |(keep, edge_bits)| {
            let vars: BTreeSet<usize> = (0..universe).filter(|&v| keep[v]).collect();
            let mut g = CausalGraph::new(universe, vars.clone(), GraphMode::Undirected);
            let mut k = 0;
            for i in 0..universe {
                for j in (i + 1)..universe {
                    if edge_bits[k] && vars.contains(&i) && vars.contains(&j) {
                        g.add_edge(i, j);
                    }
                    k += 1;
                }
            }
            g
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn d_separation_matches_brute_force(dag in arb_dag(), query_seed in 0u64..1000) {
        let n = dag.n();
        let x = (query_seed as usize) % n;
        let y = (query_seed as usize / n) % n;
        prop_assume!(x != y);
        let z: Vec<usize> = (0..n)
            .filter(|&v| v != x && v != y && (query_seed >> v) & 1 == 1)
            .collect();
        let fast = dag.d_separated(x, y, &z).unwrap();
        let slow = dag.d_separated_bruteforce(x, y, &z, PATH_LIMIT).unwrap();
        prop_assert_eq!(fast, slow);
    }

    #[test]
    fn d_separation_is_symmetric(dag in arb_dag(), query_seed in 0u64..1000) {
        let n = dag.n();
        let x = (query_seed as usize) % n;
        let y = (query_seed as usize / n) % n;
        prop_assume!(x != y);
        let z: Vec<usize> = (0..n)
            .filter(|&v| v != x && v != y && (query_seed >> v) & 1 == 1)
            .collect();
        prop_assert_eq!(
            dag.d_separated(x, y, &z).unwrap(),
            dag.d_separated(y, x, &z).unwrap()
        );
    }

    #[test]
    fn adjacent_pairs_are_never_separated(dag in arb_dag(), query_seed in 0u64..1000) {
        let n = dag.n();
        for (p, c) in dag.edges() {
            let z: Vec<usize> = (0..n)
                .filter(|&v| v != p && v != c && (query_seed >> v) & 1 == 1)
                .collect();
            prop_assert!(!dag.d_separated(p, c, &z).unwrap());
        }
    }

    #[test]
    fn nonadjacent_pairs_separate_on_a_parent_set(dag in arb_dag()) {
        // A DAG d-separates any nonadjacent pair by the parents of one of
        // the endpoints; this is what justifies refining with conditioning
        // sets drawn from a collider's parent set.
        for x in 0..dag.n() {
            for y in (x + 1)..dag.n() {
                if dag.adjacent(x, y) {
                    continue;
                }
                let px: Vec<usize> = dag.parents(x).to_vec();
                let py: Vec<usize> = dag.parents(y).to_vec();
                prop_assert!(
                    dag.d_separated(x, y, &px).unwrap() || dag.d_separated(x, y, &py).unwrap(),
                    "pair ({}, {}) not separated by either parent set",
                    x,
                    y
                );
            }
        }
    }

    #[test]
    fn merge_is_commutative_and_idempotent(
        g1 in arb_undirected(8),
        g2 in arb_undirected(8),
    ) {
        prop_assert_eq!(merge(&g1, &g2), merge(&g2, &g1));
        prop_assert_eq!(merge(&g1, &g1), g1.clone());
        // Merging twice with the same partner changes nothing further.
        let once = merge(&g1, &g2);
        prop_assert_eq!(merge(&once, &once), once.clone());
    }

    #[test]
    fn oracle_discovery_is_exact_and_dominates_cp(dag in arb_sparse_dag()) {
        let n = dag.n();
        let config = DiscoveryConfig {
            graph_thresh_size: DiscoveryConfig::for_universe(n).graph_thresh_size,
            k_thresh: n,
            inclusive_refine_bound: false,
        };
        let vars: Vec<usize> = (0..n).collect();

        let mut tester = oracle_tester(&dag);
        let outcome = dsep_cp(&vars, &mut tester, &config).unwrap();
        prop_assert_eq!(outcome.graph.clone(), dag.skeleton());
        let dsep_refining = tester.refining_tests();
        prop_assert!(dsep_refining <= tester.total_tests());

        // Removed edges are gone from the result and were all tested.
        for e in &outcome.refined_edges {
            prop_assert!(!outcome.graph.adjacent(e.0, e.1));
            prop_assert!(outcome.tested_edges.contains(e));
        }

        let mut cp_tester = oracle_tester(&dag);
        let cp_outcome = cp_discover(&vars, &mut cp_tester, &config).unwrap();
        prop_assert_eq!(cp_outcome.graph, dag.skeleton());
        // The guided refinement re-tests a subset of the edges the
        // exhaustive baseline re-tests.
        prop_assert!(
            outcome.tested_edges.is_subset(&cp_outcome.tested_edges),
            "dsep-cp tested {:?}, cp tested {:?}",
            outcome.tested_edges,
            cp_outcome.tested_edges
        );

        // Exhaustive search agrees with the oracle on every removed edge.
        let mut check = oracle_tester(&dag);
        for &(a, b) in &outcome.refined_edges {
            let candidates: Vec<usize> = (0..n).filter(|&v| v != a && v != b).collect();
            prop_assert!(
                exhaustive_sepset_search(&mut check, a, b, &candidates, n).unwrap().is_some()
            );
        }
    }

    #[test]
    fn quality_scores_stay_in_range(dag in arb_dag(), edge_seed in 0u64..u64::MAX) {
        let n = dag.n();
        let vars: BTreeSet<usize> = (0..n).collect();
        let mut predicted = CausalGraph::new(n, vars, GraphMode::Undirected);
        let mut bit = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                if (edge_seed >> (bit % 64)) & 1 == 1 {
                    predicted.add_edge(i, j);
                }
                bit += 1;
            }
        }
        let s = skeleton_scores(&predicted, &dag);
        for v in [s.precision, s.recall, s.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert_eq!(s.tp + s.fp, predicted.edge_count());
        prop_assert_eq!(s.tp + s.fn_, dag.edge_count());
    }

    #[test]
    fn hit_rate_stays_in_range(f in 0u64..500, t in 0u64..500) {
        let h = hit_rate(f, t);
        prop_assert!((0.0..=1.0).contains(&h));
        if f + t > 0 {
            prop_assert!((h - f as f64 / (f + t) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn aggregate_interval_is_centered_and_nonnegative(
        values in proptest::collection::vec(-100.0f64..100.0, 2..20),
    ) {
        let stat = aggregate(&values);
        let mean: f64 = values.iter().sum::<f64>() / values.len() as f64;
        prop_assert!((stat.mean - mean).abs() < 1e-9);
        prop_assert!(stat.half_width >= 0.0);
        prop_assert_eq!(stat.reps, values.len());
    }
}

proptest! {
    // Statistical tests are slower; keep the case count modest.
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fisher_z_is_symmetric_and_deterministic(seed in 0u64..1000) {
        let dag = random_dag(6, 1.5, seed);
        let spec = SemSpec::<f64>::random(dag, seed.wrapping_add(1));
        let data = sample_linear_sem(&spec, 300, seed.wrapping_add(2)).unwrap();
        let mut tester = fisher_z_tester(&data, 0.05);
        for x in 0..6 {
            for y in (x + 1)..6 {
                for z in [vec![], vec![(x + 1) % 6], vec![(x + 2) % 6, (y + 3) % 6]] {
                    let z: Vec<usize> = z.into_iter().filter(|&v| v != x && v != y).collect();
                    let a = tester.test(x, y, &z).unwrap();
                    let b = tester.test(y, x, &z).unwrap();
                    let c = tester.test(x, y, &z).unwrap();
                    prop_assert_eq!(a, b);
                    prop_assert_eq!(a, c);
                }
            }
        }
    }
}
