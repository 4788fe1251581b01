//! Solution-quality scores, refinement-efficiency metrics and multi-run
//! aggregation.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::float::Float;
use crate::graph::{CausalGraph, Dag};

/// Skeleton comparison against the ground truth. Zero-denominator cases
/// (no predicted edges, no true edges, p + r = 0) are fixed to 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

/// Compares the predicted undirected edge set against the skeleton of the
/// true DAG. Panics if the variable universes differ.
pub fn skeleton_scores(predicted: &CausalGraph, truth: &Dag) -> QualityScores {
    assert_eq!(
        predicted.universe(),
        truth.n(),
        "prediction and truth must share a variable universe"
    );
    let pred: BTreeSet<(usize, usize)> = predicted.to_skeleton().edges().into_iter().collect();
    let true_edges: BTreeSet<(usize, usize)> = truth.skeleton().edges().into_iter().collect();
    let tp = pred.intersection(&true_edges).count();
    let fp = pred.len() - tp;
    let fn_ = true_edges.len() - tp;
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    QualityScores {
        precision,
        recall,
        f1,
        tp,
        fp,
        fn_,
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Proportion of refinement effort that paid off: F / (F + T), with F the
/// false-edge count (or CI-test count) and T the rest; 0 when both are 0.
pub fn hit_rate(false_edge_tests: u64, non_false_tests: u64) -> f64 {
    let total = false_edge_tests + non_false_tests;
    if total == 0 {
        0.0
    } else {
        false_edge_tests as f64 / total as f64
    }
}

/// Splits per-edge refining CI-test counts by outcome: tests spent on edges
/// that were removed (F) versus tests on edges that survived (T).
pub fn refine_attribution(
    per_edge_refining: &BTreeMap<(usize, usize), u64>,
    removed: &[(usize, usize)],
) -> (u64, u64) {
    let removed: BTreeSet<(usize, usize)> = removed.iter().copied().collect();
    let mut f = 0u64;
    let mut t = 0u64;
    for (edge, &count) in per_edge_refining {
        if removed.contains(edge) {
            f += count;
        } else {
            t += count;
        }
    }
    (f, t)
}

/// Mean with a 95% confidence half-width (1.96 standard errors).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateStat<F> {
    pub mean: F,
    pub half_width: F,
    pub reps: usize,
}

/// Aggregates at least two repetition values into mean ± 1.96·SEM, with the
/// SEM built on the sample (n − 1) standard deviation.
pub fn aggregate<F: Float>(values: &[F]) -> AggregateStat<F> {
    assert!(values.len() >= 2, "aggregate requires at least 2 values");
    let n = F::from_f64_lossy(values.len() as f64);
    let mean = values.iter().copied().sum::<F>() / n;
    let ss = values
        .iter()
        .map(|&v| (v - mean) * (v - mean))
        .sum::<F>();
    let sd = (ss / (n - F::one())).sqrt();
    let half_width = F::from_f64_lossy(1.96) * sd / n.sqrt();
    AggregateStat {
        mean,
        half_width,
        reps: values.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{CausalGraph, GraphMode};

    fn truth() -> Dag {
        Dag::parse_edge_list("1 2\n3 2\n3 4\n4 5\n").unwrap()
    }

    #[test]
    fn perfect_prediction_scores_one() {
        let t = truth();
        let s = skeleton_scores(&t.skeleton(), &t);
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
        assert_eq!((s.tp, s.fp, s.fn_), (4, 0, 0));
    }

    #[test]
    fn extra_and_missing_edges_move_the_scores() {
        let t = truth();
        let mut g = t.skeleton();
        g.add_edge(0, 4); // false edge
        g.remove_edge(3, 4); // missed true edge
        let s = skeleton_scores(&g, &t);
        assert_eq!((s.tp, s.fp, s.fn_), (3, 1, 1));
        assert!((s.precision - 0.75).abs() < 1e-12);
        assert!((s.recall - 0.75).abs() < 1e-12);
        assert!((s.f1 - 0.75).abs() < 1e-12);
    }

    #[test]
    fn empty_prediction_uses_the_zero_convention() {
        let t = truth();
        let g = CausalGraph::new(t.n(), (0..t.n()).collect(), GraphMode::Undirected);
        let s = skeleton_scores(&g, &t);
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn hit_rate_matches_the_worked_ratios() {
        assert!((hit_rate(2, 3) - 0.4).abs() < 1e-12);
        assert!((hit_rate(2, 11) - 2.0 / 13.0).abs() < 1e-12);
        assert_eq!(hit_rate(0, 0), 0.0);
    }

    #[test]
    fn attribution_splits_tests_by_edge_outcome() {
        let mut per_edge = BTreeMap::new();
        per_edge.insert((0, 1), 7u64);
        per_edge.insert((1, 2), 3u64);
        per_edge.insert((2, 3), 5u64);
        let (f, t) = refine_attribution(&per_edge, &[(1, 2)]);
        assert_eq!((f, t), (3, 12));
    }

    #[test]
    fn aggregate_uses_sample_standard_deviation() {
        let s = aggregate(&[1.0f64, 1.0, 1.0, 1.0]);
        assert_eq!((s.mean, s.half_width, s.reps), (1.0, 0.0, 4));
        let s = aggregate(&[0.0f64, 2.0]);
        assert!((s.mean - 1.0).abs() < 1e-12);
        assert!((s.half_width - 1.96).abs() < 1e-12);
    }

    #[test]
    #[should_panic(expected = "at least 2 values")]
    fn aggregate_rejects_single_values() {
        aggregate(&[1.0f64]);
    }
}
