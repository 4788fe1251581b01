//! Recursive skeleton discovery: partition, solve, merge, refine.
//!
//! `dsep_cp` splits the variable set with [`find_causal_partitions`],
//! recurses on the two sub-problems, AND-merges the sub-skeletons and then
//! removes the false edges introduced by cross-partition separating sets.
//! The Dsep-CP refinement targets only colliders that sit below a
//! Y-structure spanning both partitions; the CP baseline refinement
//! re-tests every merged edge.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;
use std::time::Instant;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::ci::{CiError, CiTester, IndependenceQuery, SepsetCache};
use crate::graph::{colliders_undirected_with_parents_memo, CausalGraph, GraphMode, WitnessMemo};
use crate::partition::find_causal_partitions;
use crate::pc::pc_skeleton;

/// Skeleton-discovery algorithm selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Pc,
    Cp,
    DsepCp,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Pc => "pc",
            Algorithm::Cp => "cp",
            Algorithm::DsepCp => "dsep-cp",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pc" => Ok(Algorithm::Pc),
            "cp" => Ok(Algorithm::Cp),
            "dsep-cp" => Ok(Algorithm::DsepCp),
            other => Err(format!(
                "unknown algorithm {other:?} (expected pc, cp or dsep-cp)"
            )),
        }
    }
}

/// Tuning knobs shared by the recursion and the refinement procedures.
#[derive(Debug, Clone)]
pub struct DiscoveryConfig {
    /// Sub-problems at or below this size are solved directly with PC.
    pub graph_thresh_size: usize,
    /// Cap on conditioning-set sizes (PC order, partition order escalation,
    /// refinement subset search).
    pub k_thresh: usize,
    /// Refinement searches |Z| in 1..k_thresh by default (strict bound);
    /// with this switch the upper bound becomes inclusive.
    pub inclusive_refine_bound: bool,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        DiscoveryConfig {
            graph_thresh_size: 3,
            k_thresh: 3,
            inclusive_refine_bound: false,
        }
    }
}

impl DiscoveryConfig {
    /// Default stop size for a problem of `n` variables: max(⌊n/10⌋, 3),
    /// computed once from the original problem and held fixed through the
    /// recursion.
    pub fn for_universe(n: usize) -> Self {
        DiscoveryConfig {
            graph_thresh_size: (n / 10).max(3),
            ..DiscoveryConfig::default()
        }
    }

    fn refine_max_size(&self) -> usize {
        if self.inclusive_refine_bound {
            self.k_thresh
        } else {
            self.k_thresh.saturating_sub(1)
        }
    }
}

/// Shape of the recursion tree a discovery run traversed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RecursionSummary {
    /// PC base cases (problem at or below the stop size).
    pub pc_leaves: u32,
    /// PC fallbacks after an inefficient partition.
    pub fallbacks: u32,
    /// Partition calls that led to recursion.
    pub partitions: u32,
    pub max_depth: u32,
}

/// Result of one discovery run, independent of timing and tester counters.
#[derive(Debug)]
pub struct DiscoveryOutcome {
    pub graph: CausalGraph,
    pub sepsets: SepsetCache,
    /// Edges removed by refinement, canonical (low, high) order.
    pub refined_edges: Vec<(usize, usize)>,
    /// Edges subjected to at least one refinement search.
    pub tested_edges: BTreeSet<(usize, usize)>,
    /// Wall time spent inside refinement procedures.
    pub refining_seconds: f64,
    pub summary: RecursionSummary,
}

/// One benchmark/CLI run in serializable form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub algorithm: String,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub edges: usize,
    pub total_ci_tests: u64,
    pub refining_ci_tests: u64,
    pub refined_edges: usize,
    pub total_seconds: f64,
    pub refining_seconds: f64,
}

/// Edges removed and edges examined by one refinement pass.
#[derive(Debug, Clone, Default)]
pub struct RefineOutcome {
    pub removed: Vec<(usize, usize)>,
    pub tested_edges: BTreeSet<(usize, usize)>,
}

fn canon(a: usize, b: usize) -> (usize, usize) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// AND-merge of two sub-skeletons over a shared universe.
///
/// Pairs present in both graphs keep an edge only when both agree; pairs
/// confined to a single graph keep that graph's edge; pairs split across
/// the two exclusive variable sets get no edge.
pub fn merge(g1: &CausalGraph, g2: &CausalGraph) -> CausalGraph {
    assert_eq!(g1.universe(), g2.universe(), "merge requires one universe");
    assert_eq!(g1.mode(), g2.mode(), "merge requires matching modes");
    let vars: BTreeSet<usize> = g1
        .variables()
        .iter()
        .chain(g2.variables().iter())
        .copied()
        .collect();
    let mut out = CausalGraph::new(g1.universe(), vars.clone(), g1.mode());
    for &i in &vars {
        for &j in &vars {
            if i >= j && out.mode() == GraphMode::Undirected {
                continue;
            }
            if i == j {
                continue;
            }
            let in1 = g1.contains_var(i) && g1.contains_var(j);
            let in2 = g2.contains_var(i) && g2.contains_var(j);
            let keep = match (in1, in2) {
                (true, true) => g1.has_edge(i, j) && g2.has_edge(i, j),
                (true, false) => g1.has_edge(i, j),
                (false, true) => g2.has_edge(i, j),
                (false, false) => false,
            };
            if keep {
                out.add_edge(i, j);
            }
        }
    }
    out
}

/// Whether `parents` straddles the split: at least one member exclusive to
/// each sub-problem. A collider with such a parent set sits at the apex of
/// a Y-structure whose separating sets may span both partitions.
fn spans_split(parents: &BTreeSet<usize>, g1: &CausalGraph, g2: &CausalGraph) -> bool {
    let excl1 = parents
        .iter()
        .any(|&p| g1.contains_var(p) && !g2.contains_var(p));
    let excl2 = parents
        .iter()
        .any(|&p| g2.contains_var(p) && !g1.contains_var(p));
    excl1 && excl2
}

/// Apex form of the Y-structure signature: the collider's own parent set
/// straddles the split and holds more than a single cross pair. Exactly
/// two parents, one per side, is a plain unshielded collider divided by
/// the partition — its false edges hang on its descendants and are covered
/// by the descendant clause. A third parent marks a separating set
/// fragmented across the split at the collider itself, so its own incident
/// edges may be false.
fn apex_gate(parents: &BTreeSet<usize>, g1: &CausalGraph, g2: &CausalGraph) -> bool {
    spans_split(parents, g1, g2) && parents.len() >= 3
}

/// Whether `collider` descends from a Y-structure spanning both
/// sub-problems: some other collider, known to both sub-problems, has at
/// least one parent exclusive to each side and reaches `collider` through
/// its non-parent side. Such a structure is the graphical signature of a
/// separating set split across the partition, so every edge at `collider`
/// is worth re-testing.
pub fn y_descendant_gate(
    g: &CausalGraph,
    collider: usize,
    g1: &CausalGraph,
    g2: &CausalGraph,
    collider_info: &BTreeMap<usize, BTreeSet<usize>>,
) -> bool {
    for (&w, parents) in collider_info {
        if w == collider {
            continue;
        }
        if !(g1.contains_var(w) && g2.contains_var(w)) {
            continue;
        }
        if !spans_split(parents, g1, g2) {
            continue;
        }
        if gate_descendants(g, w, parents).contains(&collider) {
            return true;
        }
    }
    false
}

/// Whether `collider` is, or is reachable from, a collider bearing the
/// Y-structure signature of a separating set split across the partition.
/// Colliders failing this check cannot touch a false edge and are skipped
/// by the refinement.
pub fn y_structure_gate(
    g: &CausalGraph,
    collider: usize,
    g1: &CausalGraph,
    g2: &CausalGraph,
    collider_info: &BTreeMap<usize, BTreeSet<usize>>,
) -> bool {
    if let Some(parents) = collider_info.get(&collider) {
        if apex_gate(parents, g1, g2) {
            return true;
        }
    }
    y_descendant_gate(g, collider, g1, g2, collider_info)
}

/// Descendant set of a collider. Directed graphs use plain reachability;
/// undirected skeletons take every neighbor outside the collider's witness
/// parents as a child and close over neighbors from there, never passing
/// back through the collider.
fn gate_descendants(g: &CausalGraph, w: usize, parents: &BTreeSet<usize>) -> BTreeSet<usize> {
    match g.mode() {
        GraphMode::Directed => g.descendants(w),
        GraphMode::Undirected => {
            let mut seen: BTreeSet<usize> = BTreeSet::new();
            let mut stack: Vec<usize> = g
                .neighbors(w)
                .into_iter()
                .filter(|u| !parents.contains(u))
                .collect();
            for &u in &stack {
                seen.insert(u);
            }
            while let Some(u) = stack.pop() {
                for v in g.neighbors(u) {
                    if v != w && seen.insert(v) {
                        stack.push(v);
                    }
                }
            }
            seen
        }
    }
}

/// Subset search over `candidates` restricted to sizes `lo..=hi`,
/// lexicographic within each size.
fn sized_search<Q: IndependenceQuery>(
    tester: &mut CiTester<Q>,
    x: usize,
    y: usize,
    candidates: &[usize],
    lo: usize,
    hi: usize,
) -> Result<Option<Vec<usize>>, CiError> {
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    for size in lo..=hi.min(sorted.len()) {
        for z in sorted.iter().copied().combinations(size) {
            if tester.test(x, y, &z)? {
                return Ok(Some(z));
            }
        }
    }
    Ok(None)
}

/// Y-structure-guided refinement of a merged graph.
///
/// Colliders known to both sub-problems and passing the Y-structure gate
/// have each incident edge re-tested against conditioning sets drawn from
/// the collider's other neighbors (parents, in the directed case). All
/// removal searches run inside the tester's refining-counter region,
/// tagged with the edge under test.
///
/// Removing a false edge can change which nodes look like colliders and
/// which witness pairs certify them, unlocking further gated removals; the
/// procedure therefore repeats the collider scan until a pass removes
/// nothing. A (collider, neighbor) search is never repeated across passes:
/// neighborhoods only shrink, so the rerun would cover a subset of the
/// conditioning sets already tried.
pub fn dsep_cp_refine<Q: IndependenceQuery>(
    g: &mut CausalGraph,
    g1: &CausalGraph,
    g2: &CausalGraph,
    tester: &mut CiTester<Q>,
    cache: &mut SepsetCache,
    config: &DiscoveryConfig,
) -> Result<RefineOutcome, CiError> {
    let mut out = RefineOutcome::default();
    let hi = config.refine_max_size();
    let mut searched: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut memo = WitnessMemo::default();
    loop {
        let collider_info: BTreeMap<usize, BTreeSet<usize>> = match g.mode() {
            GraphMode::Undirected => {
                colliders_undirected_with_parents_memo(g, tester, cache, config.k_thresh, &mut memo)?
            }
            GraphMode::Directed => g
                .colliders_directed()
                .expect("mode checked")
                .into_iter()
                .map(|v| (v, g.parents_of(v).into_iter().collect()))
                .collect(),
        };
        let mut removed_any = false;
        for (&v, parents) in &collider_info {
            if !(g1.contains_var(v) && g2.contains_var(v)) {
                continue;
            }
            if !(apex_gate(parents, g1, g2) || y_descendant_gate(g, v, g1, g2, &collider_info)) {
                continue;
            }
            let nbrs = match g.mode() {
                GraphMode::Undirected => g.neighbors(v),
                GraphMode::Directed => g.parents_of(v),
            };
            for &cur_par in &nbrs {
                if !g.adjacent(v, cur_par) || !searched.insert((v, cur_par)) {
                    continue;
                }
                let parent_set: Vec<usize> =
                    nbrs.iter().copied().filter(|&u| u != cur_par).collect();
                out.tested_edges.insert(canon(v, cur_par));
                tester.begin_refining(Some((v, cur_par)));
                let found = sized_search(tester, v, cur_par, &parent_set, 1, hi)?;
                tester.end_refining();
                if let Some(z) = found {
                    g.remove_edge(v, cur_par);
                    g.remove_edge(cur_par, v);
                    cache.insert(v, cur_par, z);
                    out.removed.push(canon(v, cur_par));
                    removed_any = true;
                }
            }
        }
        if !removed_any {
            break;
        }
    }
    Ok(out)
}

/// Exhaustive baseline refinement: every edge of the merged graph is
/// re-tested against conditioning sets from the union of its endpoints'
/// neighborhoods.
pub fn cp_refine<Q: IndependenceQuery>(
    g: &mut CausalGraph,
    tester: &mut CiTester<Q>,
    cache: &mut SepsetCache,
    config: &DiscoveryConfig,
) -> Result<RefineOutcome, CiError> {
    let mut out = RefineOutcome::default();
    let hi = config.refine_max_size();
    for (x, y) in g.edges() {
        let candidates: Vec<usize> = g
            .neighbors(x)
            .into_iter()
            .chain(g.neighbors(y))
            .filter(|&u| u != x && u != y)
            .collect::<BTreeSet<usize>>()
            .into_iter()
            .collect();
        out.tested_edges.insert(canon(x, y));
        tester.begin_refining(Some((x, y)));
        let found = sized_search(tester, x, y, &candidates, 1, hi)?;
        tester.end_refining();
        if let Some(z) = found {
            g.remove_edge(x, y);
            g.remove_edge(y, x);
            cache.insert(x, y, z);
            out.removed.push(canon(x, y));
        }
    }
    Ok(out)
}

struct Driver<'a, Q> {
    tester: &'a mut CiTester<Q>,
    config: &'a DiscoveryConfig,
    cache: SepsetCache,
    refined: Vec<(usize, usize)>,
    tested: BTreeSet<(usize, usize)>,
    refining_seconds: f64,
    summary: RecursionSummary,
    baseline: bool,
}

impl<Q: IndependenceQuery> Driver<'_, Q> {
    fn pc_leaf(&mut self, vars: &[usize]) -> Result<CausalGraph, CiError> {
        let universe = self.tester.n_vars();
        let (g, seps) = pc_skeleton(vars, universe, self.tester, self.config.k_thresh)?;
        self.cache.extend_from(&seps);
        Ok(g)
    }

    fn solve(&mut self, vars: &[usize], depth: u32) -> Result<CausalGraph, CiError> {
        self.summary.max_depth = self.summary.max_depth.max(depth);
        if vars.len() <= self.config.graph_thresh_size {
            self.summary.pc_leaves += 1;
            return self.pc_leaf(vars);
        }
        let (part, _matrix) = find_causal_partitions(
            vars,
            &mut *self.tester,
            self.config.k_thresh,
            &mut self.cache,
        )?;
        let v1 = part.v1();
        let v2 = part.v2();
        if v1.len().max(v2.len()) == vars.len() {
            self.summary.fallbacks += 1;
            return self.pc_leaf(vars);
        }
        self.summary.partitions += 1;
        let g1 = self.solve(&v1, depth + 1)?;
        let g2 = self.solve(&v2, depth + 1)?;
        let mut merged = merge(&g1, &g2);
        let start = Instant::now();
        let refine = if self.baseline {
            cp_refine(&mut merged, &mut *self.tester, &mut self.cache, self.config)?
        } else {
            dsep_cp_refine(
                &mut merged,
                &g1,
                &g2,
                &mut *self.tester,
                &mut self.cache,
                self.config,
            )?
        };
        self.refining_seconds += start.elapsed().as_secs_f64();
        self.refined.extend(refine.removed);
        self.tested.extend(refine.tested_edges);
        Ok(merged)
    }

    fn finish(self, graph: CausalGraph) -> DiscoveryOutcome {
        DiscoveryOutcome {
            graph,
            sepsets: self.cache,
            refined_edges: self.refined,
            tested_edges: self.tested,
            refining_seconds: self.refining_seconds,
            summary: self.summary,
        }
    }
}

fn run_recursive<Q: IndependenceQuery>(
    vars: &[usize],
    tester: &mut CiTester<Q>,
    config: &DiscoveryConfig,
    baseline: bool,
) -> Result<DiscoveryOutcome, CiError> {
    let mut driver = Driver {
        tester,
        config,
        cache: SepsetCache::new(),
        refined: Vec::new(),
        tested: BTreeSet::new(),
        refining_seconds: 0.0,
        summary: RecursionSummary::default(),
        baseline,
    };
    let graph = driver.solve(vars, 0)?;
    Ok(driver.finish(graph))
}

/// Full Dsep-CP run over `vars`.
pub fn dsep_cp<Q: IndependenceQuery>(
    vars: &[usize],
    tester: &mut CiTester<Q>,
    config: &DiscoveryConfig,
) -> Result<DiscoveryOutcome, CiError> {
    run_recursive(vars, tester, config, false)
}

/// CP baseline: the same recursion with the exhaustive refinement.
pub fn cp_discover<Q: IndependenceQuery>(
    vars: &[usize],
    tester: &mut CiTester<Q>,
    config: &DiscoveryConfig,
) -> Result<DiscoveryOutcome, CiError> {
    run_recursive(vars, tester, config, true)
}

/// Dispatch on the algorithm selector; `Pc` runs the flat skeleton search
/// with no partitioning or refinement.
pub fn discover<Q: IndependenceQuery>(
    algo: Algorithm,
    vars: &[usize],
    tester: &mut CiTester<Q>,
    config: &DiscoveryConfig,
) -> Result<DiscoveryOutcome, CiError> {
    match algo {
        Algorithm::Pc => {
            let universe = tester.n_vars();
            let (graph, sepsets) = pc_skeleton(vars, universe, tester, config.k_thresh)?;
            Ok(DiscoveryOutcome {
                graph,
                sepsets,
                refined_edges: Vec::new(),
                tested_edges: BTreeSet::new(),
                refining_seconds: 0.0,
                summary: RecursionSummary {
                    pc_leaves: 1,
                    ..RecursionSummary::default()
                },
            })
        }
        Algorithm::Cp => cp_discover(vars, tester, config),
        Algorithm::DsepCp => dsep_cp(vars, tester, config),
    }
}
