//! Skeleton phase of the PC algorithm (stable variant).

use crate::ci::{CiError, CiTester, IndependenceQuery, SepsetCache};
use crate::graph::{CausalGraph, GraphMode};

/// Learns the undirected skeleton over `vars` (indices into a universe of
/// `universe` variables) with conditioning sets of size at most `max_order`.
///
/// Stable variant: at each order the adjacency structure is snapshotted, so
/// the conditioning candidates for every pair come from the same graph and
/// the result does not depend on pair iteration order. Deletions are still
/// applied eagerly to skip redundant tests for pairs already marked
/// separated at the current order.
pub fn pc_skeleton<Q: IndependenceQuery>(
    vars: &[usize],
    universe: usize,
    tester: &mut CiTester<Q>,
    max_order: usize,
) -> Result<(CausalGraph, SepsetCache), CiError> {
    let mut vars_sorted = vars.to_vec();
    vars_sorted.sort_unstable();
    let mut g = CausalGraph::complete_undirected(universe, &vars_sorted);
    let mut sepsets = SepsetCache::new();
    for order in 0..=max_order {
        // Snapshot adjacency for candidate selection at this order.
        let snapshot = g.clone();
        let mut any_candidates = false;
        for (i, &x) in vars_sorted.iter().enumerate() {
            for &y in &vars_sorted[i + 1..] {
                if !g.has_edge(x, y) {
                    continue;
                }
                let adj: Vec<usize> = snapshot
                    .neighbors(x)
                    .into_iter()
                    .filter(|&u| u != y)
                    .collect();
                if adj.len() >= order {
                    any_candidates = true;
                } else {
                    continue;
                }
                if let Some(z) = order_search(tester, x, y, &adj, order)? {
                    g.remove_edge(x, y);
                    sepsets.insert(x, y, z);
                }
            }
        }
        if !any_candidates {
            break;
        }
    }
    debug_assert_eq!(g.mode(), GraphMode::Undirected);
    Ok((g, sepsets))
}

/// Tests every conditioning set of exactly `order` variables drawn from
/// `candidates`, in lexicographic order.
fn order_search<Q: IndependenceQuery>(
    tester: &mut CiTester<Q>,
    x: usize,
    y: usize,
    candidates: &[usize],
    order: usize,
) -> Result<Option<Vec<usize>>, CiError> {
    use itertools::Itertools;
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    for z in sorted.into_iter().combinations(order) {
        if tester.test(x, y, &z)? {
            return Ok(Some(z));
        }
    }
    Ok(None)
}
