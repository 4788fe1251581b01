//! Acceptance gate: one test per criterion, each printing a single
//! PASS/FAIL line (visible with `cargo test -- --nocapture`).

use std::collections::BTreeSet;
use std::panic::{catch_unwind, resume_unwind, UnwindSafe};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dsepcp::{
    cp_discover, dsep_cp, fisher_z_tester, hit_rate, independence_matrix, merge, oracle_tester,
    random_dag, sample_linear_sem, skeleton_scores, Algorithm, CausalGraph, CiTester, Dag, Dataset,
    DiscoveryConfig, GraphMode, SemSpec, SepsetCache,
};

fn criterion(n: u32, desc: &str, f: impl FnOnce() + UnwindSafe) {
    match catch_unwind(f) {
        Ok(()) => println!("criterion {n}: PASS - {desc}"),
        Err(e) => {
            println!("criterion {n}: FAIL - {desc}");
            resume_unwind(e);
        }
    }
}

fn fixture(name: &str) -> Dag {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    Dag::parse_edge_list(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Variables named "1".."n" in first-appearance order map to index n-1.
fn pair(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a - 1, b - 1)
    } else {
        (b - 1, a - 1)
    }
}

#[test]
fn criterion_1_independence_matrix_reproduces_the_worked_example() {
    criterion(1, "independence matrix on the small worked example", || {
        let dag = fixture("fig1.edges");
        let vars: Vec<usize> = (0..dag.n()).collect();

        let mut tester = oracle_tester(&dag);
        let mut cache = SepsetCache::new();
        let m0 = independence_matrix(&vars, &mut tester, 0, None, &mut cache).unwrap();
        assert_eq!(m0.independent_pairs(), vec![pair(1, 3)]);

        let m1 = independence_matrix(&vars, &mut tester, 1, Some(&m0), &mut cache).unwrap();
        assert_eq!(
            m1.independent_pairs(),
            vec![pair(1, 3), pair(1, 5), pair(2, 5), pair(3, 5)]
        );

        // Building order 1 from scratch gives the same marks.
        let mut fresh = oracle_tester(&dag);
        let mut fresh_cache = SepsetCache::new();
        let direct = independence_matrix(&vars, &mut fresh, 1, None, &mut fresh_cache).unwrap();
        assert_eq!(direct.independent_pairs(), m1.independent_pairs());
    });
}

#[test]
fn criterion_2_eight_node_walkthrough_with_oracle() {
    criterion(2, "8-node oracle walkthrough: partition, refine, hit rates", || {
        let dag = fixture("fig2a.edges");
        let vars: Vec<usize> = (0..8).collect();
        let config = DiscoveryConfig {
            graph_thresh_size: 5,
            k_thresh: 3,
            inclusive_refine_bound: true,
        };

        // Partition: A = {6,7,8}, B = {3,4,5}, C = {1,2} (by name).
        let mut part_tester = oracle_tester(&dag);
        let mut cache = SepsetCache::new();
        let (part, _) =
            dsepcp::find_causal_partitions(&vars, &mut part_tester, 3, &mut cache).unwrap();
        assert_eq!(part.a, vec![5, 6, 7]);
        assert_eq!(part.b, vec![2, 3, 4]);
        assert_eq!(part.c, vec![0, 1]);
        assert!(part.efficient);

        // Full run: refinement touches exactly 5 edges and removes 2.
        let mut tester = oracle_tester(&dag);
        let outcome = dsep_cp(&vars, &mut tester, &config).unwrap();
        let expected_tested: BTreeSet<(usize, usize)> =
            [pair(1, 2), pair(2, 3), pair(4, 2), pair(6, 2), pair(7, 2)]
                .into_iter()
                .collect();
        assert_eq!(outcome.tested_edges, expected_tested);
        let removed: BTreeSet<(usize, usize)> = outcome.refined_edges.iter().copied().collect();
        let expected_removed: BTreeSet<(usize, usize)> =
            [pair(6, 2), pair(2, 3)].into_iter().collect();
        assert_eq!(removed, expected_removed);
        // Merged graph: final 11 edges plus the 2 refined false edges.
        assert_eq!(outcome.graph.edge_count() + outcome.refined_edges.len(), 13);
        let dsep_hit = hit_rate(
            outcome.refined_edges.len() as u64,
            (outcome.tested_edges.len() - outcome.refined_edges.len()) as u64,
        );
        assert!((dsep_hit - 0.4).abs() < 1e-12);
        assert_eq!(outcome.graph, dag.skeleton());

        // CP baseline re-tests all 13 merged edges for the same fix-ups.
        let mut cp_tester = oracle_tester(&dag);
        let cp = cp_discover(&vars, &mut cp_tester, &config).unwrap();
        assert_eq!(cp.tested_edges.len(), 13);
        assert_eq!(
            cp.refined_edges.iter().copied().collect::<BTreeSet<_>>(),
            expected_removed
        );
        let cp_hit = hit_rate(2, 11);
        assert!((cp_hit - 2.0 / 13.0).abs() < 1e-12);
        assert_eq!(cp.graph, dag.skeleton());
    });
}

#[test]
fn criterion_3_oracle_exactness_on_random_dags() {
    criterion(3, "oracle-mode exactness over 200 random sparse DAGs", || {
        for seed in 0..200u64 {
            let n = 8 + (seed as usize % 8); // 8..=15
            let dag = random_dag(n, 1.5, seed);
            let config = DiscoveryConfig {
                graph_thresh_size: (n / 10).max(3),
                k_thresh: n,
                inclusive_refine_bound: false,
            };
            let vars: Vec<usize> = (0..n).collect();
            let mut tester = oracle_tester(&dag);
            let outcome = dsep_cp(&vars, &mut tester, &config).unwrap();
            assert_eq!(
                outcome.graph,
                dag.skeleton(),
                "seed {seed} (n = {n}) did not recover the true skeleton"
            );
        }
    });
}

struct SimRun {
    refining: u64,
    f1: f64,
}

fn simulated_run(algo: Algorithm, dag: &Dag, data: &Dataset<f64>) -> SimRun {
    let mut tester = fisher_z_tester(data, 0.05);
    let config = DiscoveryConfig {
        graph_thresh_size: (dag.n() / 10).max(3),
        k_thresh: 3,
        inclusive_refine_bound: false,
    };
    let vars: Vec<usize> = (0..dag.n()).collect();
    let outcome = dsepcp::discover(algo, &vars, &mut tester, &config).unwrap();
    SimRun {
        refining: tester.refining_tests(),
        f1: skeleton_scores(&outcome.graph, dag).f1,
    }
}

fn oracle_refining(algo: Algorithm, dag: &Dag, config: &DiscoveryConfig) -> u64 {
    let mut tester = oracle_tester(dag);
    let vars: Vec<usize> = (0..dag.n()).collect();
    dsepcp::discover(algo, &vars, &mut tester, config).unwrap();
    tester.refining_tests()
}

/// The 20-instance simulated suite shared by criteria 4 and 5, built once
/// per test process.
fn simulated_suite() -> &'static [(Dag, SimRun, SimRun)] {
    static SUITE: std::sync::OnceLock<Vec<(Dag, SimRun, SimRun)>> = std::sync::OnceLock::new();
    SUITE.get_or_init(|| {
        (0..20u64)
            .map(|rep| {
                let dag = random_dag(50, 1.5, 1000 + rep);
                let spec = SemSpec::<f64>::random(dag.clone(), 2000 + rep);
                let data = sample_linear_sem(&spec, 500, 2000 + rep).unwrap();
                let dsep = simulated_run(Algorithm::DsepCp, &dag, &data);
                let cp = simulated_run(Algorithm::Cp, &dag, &data);
                (dag, dsep, cp)
            })
            .collect()
    })
}

#[test]
fn criterion_4_refining_ci_test_reduction() {
    criterion(4, "refining CI-test reduction vs the CP baseline", || {
        let suite = simulated_suite();
        let dsep_mean: f64 =
            suite.iter().map(|(_, d, _)| d.refining as f64).sum::<f64>() / suite.len() as f64;
        let cp_mean: f64 =
            suite.iter().map(|(_, _, c)| c.refining as f64).sum::<f64>() / suite.len() as f64;
        assert!(
            dsep_mean <= 0.5 * cp_mean,
            "mean refining tests {dsep_mean} exceed half of the baseline's {cp_mean}"
        );

        // Per-instance dominance in oracle mode on the same structures.
        for (dag, _, _) in suite {
            let config = DiscoveryConfig {
                graph_thresh_size: (dag.n() / 10).max(3),
                k_thresh: 3,
                inclusive_refine_bound: false,
            };
            let d = oracle_refining(Algorithm::DsepCp, dag, &config);
            let c = oracle_refining(Algorithm::Cp, dag, &config);
            assert!(d <= c, "oracle refining tests {d} > baseline {c}");
        }
    });
}

#[test]
fn criterion_5_quality_parity_with_the_baseline() {
    criterion(5, "F1 parity with the CP baseline on simulated data", || {
        let suite = simulated_suite();
        let dsep_f1: f64 = suite.iter().map(|(_, d, _)| d.f1).sum::<f64>() / suite.len() as f64;
        let cp_f1: f64 = suite.iter().map(|(_, _, c)| c.f1).sum::<f64>() / suite.len() as f64;
        assert!(
            (dsep_f1 - cp_f1).abs() <= 0.05,
            "mean F1 gap {dsep_f1} vs {cp_f1} exceeds 0.05"
        );
    });
}

#[test]
fn criterion_6_asia_network_quality() {
    criterion(6, "mean F1 on the 8-node lung-clinic benchmark network", || {
        let dag = fixture("asia.edges");
        for algo in [Algorithm::DsepCp, Algorithm::Cp] {
            let mut f1s = Vec::new();
            for rep in 0..20u64 {
                let spec = SemSpec::<f64>::random(dag.clone(), 100 + rep);
                let data = sample_linear_sem(&spec, 500, 100 + rep).unwrap();
                f1s.push(simulated_run_on(algo, &dag, &data));
            }
            let mean = f1s.iter().sum::<f64>() / f1s.len() as f64;
            assert!(
                (0.80..=1.0).contains(&mean),
                "{algo} mean F1 {mean} outside [0.80, 1.0]"
            );
        }
    });
}

fn simulated_run_on(algo: Algorithm, dag: &Dag, data: &Dataset<f64>) -> f64 {
    simulated_run(algo, dag, data).f1
}

#[test]
fn criterion_7_property_substitutes_for_full_scale_runs() {
    criterion(7, "calibration, merge laws, oracle equivalence, conventions", || {
        fisher_z_null_calibration();
        merge_laws_on_random_graphs();
        d_separation_matches_brute_force();
        zero_denominator_conventions();
    });
}

/// Rejection rate under the null within alpha ± 0.02 over 1000 trials.
fn fisher_z_null_calibration() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let m = 60;
    let mut rejections = 0u32;
    let trials = 1000;
    for _ in 0..trials {
        let mut values = Vec::with_capacity(2 * m);
        for _ in 0..m {
            values.push(gaussian(&mut rng));
            values.push(gaussian(&mut rng));
        }
        let data = Dataset::new(vec!["x".into(), "y".into()], values, m);
        let mut tester = fisher_z_tester(&data, 0.05);
        if !tester.test(0, 1, &[]).unwrap() {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / trials as f64;
    assert!(
        (0.03..=0.07).contains(&rate),
        "null rejection rate {rate} outside 0.05 ± 0.02"
    );
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller keeps the test free of extra distribution dependencies.
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn merge_laws_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let universe = 8;
        let g1 = random_undirected(&mut rng, universe);
        let g2 = random_undirected(&mut rng, universe);
        assert_eq!(merge(&g1, &g2), merge(&g2, &g1), "merge not commutative");
        assert_eq!(merge(&g1, &g1), g1, "merge not idempotent");
    }
}

fn random_undirected(rng: &mut ChaCha8Rng, universe: usize) -> CausalGraph {
    let vars: BTreeSet<usize> = (0..universe).filter(|_| rng.random::<f64>() < 0.7).collect();
    let mut g = CausalGraph::new(universe, vars.clone(), GraphMode::Undirected);
    let vs: Vec<usize> = vars.into_iter().collect();
    for (i, &a) in vs.iter().enumerate() {
        for &b in &vs[i + 1..] {
            if rng.random::<f64>() < 0.4 {
                g.add_edge(a, b);
            }
        }
    }
    g
}

fn d_separation_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for seed in 0..500u64 {
        let n = 4 + (seed as usize % 7); // 4..=10
        let dag = random_dag(n, 1.5, seed);
        for _ in 0..6 {
            let x = rng.random_range(0..n);
            let mut y = rng.random_range(0..n);
            while y == x {
                y = rng.random_range(0..n);
            }
            let mut z: Vec<usize> = (0..n)
                .filter(|&v| v != x && v != y && rng.random::<f64>() < 0.25)
                .collect();
            z.truncate(2);
            assert_eq!(
                dag.d_separated(x, y, &z).unwrap(),
                dag.d_separated_bruteforce(x, y, &z, 1_000_000).unwrap(),
                "seed {seed}: ({x}, {y}) given {z:?}"
            );
        }
    }
}

fn zero_denominator_conventions() {
    assert_eq!(hit_rate(0, 0), 0.0);
    let dag = random_dag(5, 1.5, 1);
    let empty = CausalGraph::new(5, (0..5).collect(), GraphMode::Undirected);
    let s = skeleton_scores(&empty, &dag);
    assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
    // A tester that answers nothing still reports zeroed counters.
    let mut tester: CiTester<_> = oracle_tester(&dag);
    assert_eq!(tester.total_tests(), 0);
    assert_eq!(tester.refining_tests(), 0);
    let _ = tester.test(0, 1, &[]);
    assert!(tester.refining_tests() <= tester.total_tests());
    let _ = tester.n_vars();
}
