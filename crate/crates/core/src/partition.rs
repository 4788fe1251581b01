//! d-separation-preserving partitioning of a variable set.
//!
//! The independence matrix `M` records, per unordered pair, whether some
//! conditioning set of size at most `k_order` (drawn from the working
//! variable set) separates the pair. Partitioning greedily peels off the
//! variable with the most independences, growing two blocks A and B that
//! are mutually independent given the shared cut set C.

use std::collections::BTreeSet;

use crate::ci::{CiError, CiTester, IndependenceQuery, SepsetCache};

/// Symmetric boolean pair matrix over an explicit variable subset.
///
/// `vars` are global indices (sorted); the matrix itself is indexed by
/// local position.
#[derive(Debug, Clone)]
pub struct IndependenceMatrix {
    vars: Vec<usize>,
    m: Vec<bool>,
    k_order: usize,
}

impl IndependenceMatrix {
    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn k_order(&self) -> usize {
        self.k_order
    }

    fn local(&self, v: usize) -> usize {
        self.vars
            .binary_search(&v)
            .expect("variable not in matrix scope")
    }

    /// Independence flag for a global pair.
    pub fn get(&self, a: usize, b: usize) -> bool {
        let (i, j) = (self.local(a), self.local(b));
        self.m[i * self.vars.len() + j]
    }

    fn set_local(&mut self, i: usize, j: usize, v: bool) {
        let n = self.vars.len();
        self.m[i * n + j] = v;
        self.m[j * n + i] = v;
    }

    /// Number of `true` cells in the (local) column of `v`.
    pub fn column_sum(&self, v: usize) -> usize {
        let i = self.local(v);
        let n = self.vars.len();
        (0..n).filter(|&j| self.m[i * n + j]).count()
    }

    /// All independent pairs as global `(a, b)` with `a < b`.
    pub fn independent_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.vars.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.m[i * n + j] {
                    out.push((self.vars[i], self.vars[j]));
                }
            }
        }
        out
    }
}

/// Builds the independence matrix at `k_order` over `vars`.
///
/// Conditioning sets are drawn from `vars` minus the tested pair. When
/// `previous` (the matrix at `k_order - 1`) is supplied, already-independent
/// pairs carry over without testing and only sets of exactly `k_order`
/// variables are enumerated; otherwise all sizes `0..=k_order` are tried.
/// Witnessing sets are recorded in the sepset cache.
pub fn independence_matrix<Q: IndependenceQuery>(
    vars: &[usize],
    tester: &mut CiTester<Q>,
    k_order: usize,
    previous: Option<&IndependenceMatrix>,
    cache: &mut SepsetCache,
) -> Result<IndependenceMatrix, CiError> {
    let mut sorted = vars.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let mut matrix = IndependenceMatrix {
        vars: sorted.clone(),
        m: vec![false; n * n],
        k_order,
    };
    if let Some(prev) = previous {
        debug_assert_eq!(prev.vars, matrix.vars);
        debug_assert_eq!(prev.k_order + 1, k_order);
    }
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (sorted[i], sorted[j]);
            if let Some(prev) = previous {
                if prev.get(a, b) {
                    matrix.set_local(i, j, true);
                    continue;
                }
            }
            let candidates: Vec<usize> = sorted
                .iter()
                .copied()
                .filter(|&u| u != a && u != b)
                .collect();
            let found = if previous.is_some() {
                exact_order_search(tester, a, b, &candidates, k_order)?
            } else {
                crate::ci::exhaustive_sepset_search(tester, a, b, &candidates, k_order)?
            };
            if let Some(z) = found {
                matrix.set_local(i, j, true);
                cache.insert(a, b, z);
            }
        }
    }
    Ok(matrix)
}

fn exact_order_search<Q: IndependenceQuery>(
    tester: &mut CiTester<Q>,
    a: usize,
    b: usize,
    candidates: &[usize],
    order: usize,
) -> Result<Option<Vec<usize>>, CiError> {
    use itertools::Itertools;
    if candidates.len() < order {
        return Ok(None);
    }
    for z in candidates.iter().copied().combinations(order) {
        if tester.test(a, b, &z)? {
            return Ok(Some(z));
        }
    }
    Ok(None)
}

/// Outcome of the partition search.
#[derive(Debug, Clone)]
pub struct PartitionResult {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub c: Vec<usize>,
    pub k_order_used: usize,
    /// `|C| < |A| + |B|`: the cut is small enough that recursing pays off.
    pub efficient: bool,
}

impl PartitionResult {
    /// First sub-problem: A together with the cut set.
    pub fn v1(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.a.iter().chain(self.c.iter()).copied().collect();
        v.sort_unstable();
        v
    }

    /// Second sub-problem: B together with the cut set.
    pub fn v2(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.b.iter().chain(self.c.iter()).copied().collect();
        v.sort_unstable();
        v
    }
}

/// Greedy partition search with order escalation.
///
/// Starting at `k_order = 0`, variables are assigned in descending order of
/// remaining independence count (ties broken toward the lowest index):
/// a variable fully independent of the B block joins A; a variable fully
/// independent of the A block (or the first variable with any independence
/// while A is empty) joins B; everything else falls into the cut set C.
/// Each assignment consumes the variable's column of the working copy so
/// later picks reflect only unassigned structure. When the cut dominates
/// (`|C| >= |A| + |B|`) the search restarts at the next order, up to
/// `k_thresh - 1`.
pub fn find_causal_partitions<Q: IndependenceQuery>(
    vars: &[usize],
    tester: &mut CiTester<Q>,
    k_thresh: usize,
    cache: &mut SepsetCache,
) -> Result<(PartitionResult, IndependenceMatrix), CiError> {
    let mut sorted = vars.to_vec();
    sorted.sort_unstable();
    let mut k_order = 0usize;
    let mut matrix = independence_matrix(&sorted, tester, 0, None, cache)?;
    loop {
        let result = partition_once(&matrix, k_order);
        let dominated = result.c.len() >= result.a.len() + result.b.len();
        if !dominated || k_order + 1 >= k_thresh {
            let efficient = result.c.len() < result.a.len() + result.b.len();
            return Ok((
                PartitionResult {
                    efficient,
                    ..result
                },
                matrix,
            ));
        }
        k_order += 1;
        matrix = independence_matrix(&sorted, tester, k_order, Some(&matrix), cache)?;
    }
}

/// One greedy pass over a fixed matrix.
fn partition_once(matrix: &IndependenceMatrix, k_order: usize) -> PartitionResult {
    let vars = matrix.vars();
    let n = vars.len();
    // Working copy whose columns are consumed as variables are assigned.
    let mut work: Vec<bool> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| matrix.get(vars[i], vars[j]))
        .collect();
    let mut assigned = vec![false; n];
    let mut a: Vec<usize> = Vec::new();
    let mut b: Vec<usize> = Vec::new();
    let mut c: Vec<usize> = Vec::new();
    let mut a_local: BTreeSet<usize> = BTreeSet::new();
    let mut b_local: BTreeSet<usize> = BTreeSet::new();
    for _ in 0..n {
        // Priority: most remaining independences, ties toward lowest index.
        let w = (0..n)
            .filter(|&i| !assigned[i])
            .max_by_key(|&i| {
                (
                    (0..n).filter(|&j| work[i * n + j]).count(),
                    std::cmp::Reverse(i),
                )
            })
            .expect("unassigned variable exists");
        let full_colsum = matrix.column_sum(vars[w]);
        let indep_of = |block: &BTreeSet<usize>| {
            block.iter().all(|&j| matrix.get(vars[w], vars[j]))
        };
        if !b_local.is_empty() && indep_of(&b_local) {
            a.push(vars[w]);
            a_local.insert(w);
        } else if (a_local.is_empty() && full_colsum > 0)
            || (!a_local.is_empty() && indep_of(&a_local))
        {
            b.push(vars[w]);
            b_local.insert(w);
        } else {
            c.push(vars[w]);
        }
        assigned[w] = true;
        for i in 0..n {
            work[i * n + w] = false;
        }
    }
    a.sort_unstable();
    b.sort_unstable();
    c.sort_unstable();
    let efficient = c.len() < a.len() + b.len();
    PartitionResult {
        a,
        b,
        c,
        k_order_used: k_order,
        efficient,
    }
}
