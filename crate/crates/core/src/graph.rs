//! Directed/undirected graph representation, exact d-separation, collider
//! and Y-structure primitives.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::ci::{exhaustive_sepset_search, CiError, CiTester, IndependenceQuery, SepsetCache};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: malformed edge line {text:?} (expected \"parent child\")")]
    MalformedLine { line: usize, text: String },
    #[error("cycle detected through edge {from} -> {to}")]
    Cycle { from: String, to: String },
    #[error("duplicate edge {from} -> {to}")]
    DuplicateEdge { from: String, to: String },
    #[error("self-loop on {0}")]
    SelfLoop(String),
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("variable index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("operation requires a {expected:?} graph")]
    WrongMode { expected: GraphMode },
    #[error("path enumeration aborted: more than {0} paths")]
    PathExplosion(usize),
    #[error("ci engine: {0}")]
    Ci(#[from] CiError),
}

/// Ground-truth directed acyclic graph over named variables.
///
/// Variable identity is index-based; names are kept only for I/O.
#[derive(Debug, Clone)]
pub struct Dag {
    names: Vec<String>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Dag {
    /// Builds a DAG from named variables and `parent -> child` index pairs.
    pub fn new(names: Vec<String>, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let n = names.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(p, c) in edges {
            if p >= n {
                return Err(GraphError::IndexOutOfRange(p));
            }
            if c >= n {
                return Err(GraphError::IndexOutOfRange(c));
            }
            if p == c {
                return Err(GraphError::SelfLoop(names[p].clone()));
            }
            if parents[c].contains(&p) {
                return Err(GraphError::DuplicateEdge {
                    from: names[p].clone(),
                    to: names[c].clone(),
                });
            }
            parents[c].push(p);
            children[p].push(c);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }
        let dag = Dag {
            names,
            parents,
            children,
            edge_count: edges.len(),
        };
        if let Some((p, c)) = dag.find_cycle_edge() {
            return Err(GraphError::Cycle {
                from: dag.names[p].clone(),
                to: dag.names[c].clone(),
            });
        }
        Ok(dag)
    }

    /// Parses the line-oriented edge-list format: one `parent child` pair per
    /// line, `#` starts a comment, variables appear in first-appearance order.
    pub fn parse_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut names: Vec<String> = Vec::new();
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut toks = line.split_whitespace();
            let (p, c) = match (toks.next(), toks.next(), toks.next()) {
                (Some(p), Some(c), None) => (p, c),
                _ => {
                    return Err(GraphError::MalformedLine {
                        line: lineno + 1,
                        text: raw.to_string(),
                    })
                }
            };
            let mut intern = |tok: &str| -> usize {
                *index.entry(tok.to_string()).or_insert_with(|| {
                    names.push(tok.to_string());
                    names.len() - 1
                })
            };
            let pi = intern(p);
            let ci = intern(c);
            edges.push((pi, ci));
        }
        Dag::new(names, &edges)
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|s| s == name)
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count);
        for (p, cs) in self.children.iter().enumerate() {
            for &c in cs {
                out.push((p, c));
            }
        }
        out
    }

    pub fn has_edge(&self, p: usize, c: usize) -> bool {
        self.children[p].binary_search(&c).is_ok()
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    fn check_var(&self, v: usize) -> Result<(), GraphError> {
        if v < self.n() {
            Ok(())
        } else {
            Err(GraphError::IndexOutOfRange(v))
        }
    }

    fn find_cycle_edge(&self) -> Option<(usize, usize)> {
        // Kahn's algorithm; any edge among the unresolved nodes witnesses a cycle.
        let n = self.n();
        let mut indeg: Vec<usize> = (0..n).map(|v| self.parents[v].len()).collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0usize;
        while let Some(v) = queue.pop_front() {
            seen += 1;
            for &c in &self.children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        if seen == n {
            return None;
        }
        for v in 0..n {
            if indeg[v] > 0 {
                for &p in &self.parents[v] {
                    if indeg[p] > 0 {
                        return Some((p, v));
                    }
                }
            }
        }
        unreachable!("unresolved node without unresolved parent");
    }

    /// A topological order; exists because construction validated acyclicity.
    pub fn topological_order(&self) -> Vec<usize> {
        let n = self.n();
        let mut indeg: Vec<usize> = (0..n).map(|v| self.parents[v].len()).collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &c in &self.children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        order
    }

    pub fn descendants(&self, v: usize) -> BTreeSet<usize> {
        reach(v, |u| self.children[u].iter().copied())
    }

    pub fn ancestors(&self, v: usize) -> BTreeSet<usize> {
        reach(v, |u| self.parents[u].iter().copied())
    }

    /// Exact d-separation decided by reachability over active paths
    /// (ball-passing traversal over (node, direction) states).
    pub fn d_separated(&self, x: usize, y: usize, z: &[usize]) -> Result<bool, GraphError> {
        self.check_var(x)?;
        self.check_var(y)?;
        for &v in z {
            self.check_var(v)?;
        }
        assert!(x != y, "d_separated requires x != y");
        assert!(
            !z.contains(&x) && !z.contains(&y),
            "conditioning set must exclude the tested pair"
        );
        let n = self.n();
        let in_z = membership(n, z);
        // Ancestors of Z (inclusive): colliders whose descendants hit Z stay open.
        let mut z_anc = vec![false; n];
        {
            let mut stack: Vec<usize> = z.to_vec();
            for &v in z {
                z_anc[v] = true;
            }
            while let Some(v) = stack.pop() {
                for &p in &self.parents[v] {
                    if !z_anc[p] {
                        z_anc[p] = true;
                        stack.push(p);
                    }
                }
            }
        }
        // State (v, dir): dir = true means the ball arrived from a child
        // ("upward"), false means it arrived from a parent ("downward").
        let mut visited = vec![[false; 2]; n];
        let mut stack: Vec<(usize, bool)> = vec![(x, true)];
        while let Some((v, up)) = stack.pop() {
            if visited[v][up as usize] {
                continue;
            }
            visited[v][up as usize] = true;
            if v == y {
                return Ok(false);
            }
            if up {
                if !in_z[v] {
                    for &p in &self.parents[v] {
                        stack.push((p, true));
                    }
                    for &c in &self.children[v] {
                        stack.push((c, false));
                    }
                }
            } else {
                if !in_z[v] {
                    for &c in &self.children[v] {
                        stack.push((c, false));
                    }
                }
                if z_anc[v] {
                    for &p in &self.parents[v] {
                        stack.push((p, true));
                    }
                }
            }
        }
        Ok(true)
    }

    /// Literal path-enumeration oracle for d-separation. Test oracle only:
    /// enumerates every undirected simple path and applies the blocking rule
    /// path by path. Aborts past `path_limit` paths.
    pub fn d_separated_bruteforce(
        &self,
        x: usize,
        y: usize,
        z: &[usize],
        path_limit: usize,
    ) -> Result<bool, GraphError> {
        self.check_var(x)?;
        self.check_var(y)?;
        let n = self.n();
        let in_z = membership(n, z);
        let mut desc_hits_z = vec![false; n];
        for v in 0..n {
            desc_hits_z[v] =
                in_z[v] || self.descendants(v).iter().any(|&d| in_z[d]);
        }
        let mut count = 0usize;
        let mut on_path = vec![false; n];
        on_path[x] = true;
        // Path entries: (node, arrived_via_incoming_edge).
        let mut path: Vec<(usize, bool)> = vec![(x, false)];
        let blocked = self.paths_blocked(
            x,
            y,
            &in_z,
            &desc_hits_z,
            &mut on_path,
            &mut path,
            &mut count,
            path_limit,
        )?;
        Ok(blocked)
    }

    #[allow(clippy::too_many_arguments)]
    fn paths_blocked(
        &self,
        v: usize,
        y: usize,
        in_z: &[bool],
        desc_hits_z: &[bool],
        on_path: &mut Vec<bool>,
        path: &mut Vec<(usize, bool)>,
        count: &mut usize,
        path_limit: usize,
    ) -> Result<bool, GraphError> {
        if v == y {
            *count += 1;
            if *count > path_limit {
                return Err(GraphError::PathExplosion(path_limit));
            }
            return Ok(!path_is_active(path, in_z, desc_hits_z));
        }
        let nexts: Vec<(usize, bool)> = self.children[v]
            .iter()
            .map(|&c| (c, true))
            .chain(self.parents[v].iter().map(|&p| (p, false)))
            .collect();
        for (next, via_in) in nexts {
            if on_path[next] {
                continue;
            }
            on_path[next] = true;
            path.push((next, via_in));
            let blocked =
                self.paths_blocked(next, y, in_z, desc_hits_z, on_path, path, count, path_limit)?;
            path.pop();
            on_path[next] = false;
            if !blocked {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Undirected skeleton over the full variable universe.
    pub fn skeleton(&self) -> CausalGraph {
        let mut g = CausalGraph::new(self.n(), (0..self.n()).collect(), GraphMode::Undirected);
        for (p, c) in self.edges() {
            g.add_edge(p, c);
        }
        g
    }

    /// Directed [`CausalGraph`] view over the full universe.
    pub fn to_causal_graph(&self) -> CausalGraph {
        let mut g = CausalGraph::new(self.n(), (0..self.n()).collect(), GraphMode::Directed);
        for (p, c) in self.edges() {
            g.add_edge(p, c);
        }
        g
    }

    /// Serializes back to the edge-list format.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (p, c) in self.edges() {
            out.push_str(&self.names[p]);
            out.push(' ');
            out.push_str(&self.names[c]);
            out.push('\n');
        }
        out
    }
}

/// Evaluates one undirected path (triple by triple) against the blocking
/// rule: a non-collider blocks iff it is in Z; a collider blocks iff neither
/// it nor any descendant is in Z.
fn path_is_active(path: &[(usize, bool)], in_z: &[bool], desc_hits_z: &[bool]) -> bool {
    for w in 1..path.len() - 1 {
        let (node, via_in) = path[w];
        let (_, next_via_in) = path[w + 1];
        // Collider pattern: edge into `node` from the left and the next edge
        // leaves `node` against its direction (next hop arrived via an edge
        // that points back at `node`'s position... i.e. next_via_in == false).
        let is_collider = via_in && !next_via_in;
        if is_collider {
            if !desc_hits_z[node] {
                return false;
            }
        } else if in_z[node] {
            return false;
        }
    }
    true
}

fn reach<I, F>(v: usize, mut next: F) -> BTreeSet<usize>
where
    I: Iterator<Item = usize>,
    F: FnMut(usize) -> I,
{
    let mut out = BTreeSet::new();
    let mut stack = vec![v];
    while let Some(u) = stack.pop() {
        for w in next(u) {
            if out.insert(w) {
                stack.push(w);
            }
        }
    }
    out.remove(&v);
    out
}

fn membership(n: usize, items: &[usize]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &v in items {
        m[v] = true;
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphMode {
    Directed,
    Undirected,
}

/// Discovered structure: a variable subset of a global universe plus an
/// adjacency matrix (`dir`). Undirected graphs keep `dir` symmetric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalGraph {
    n: usize,
    vars: BTreeSet<usize>,
    dir: Vec<bool>,
    mode: GraphMode,
}

impl CausalGraph {
    pub fn new(universe: usize, vars: BTreeSet<usize>, mode: GraphMode) -> Self {
        CausalGraph {
            n: universe,
            vars,
            dir: vec![false; universe * universe],
            mode,
        }
    }

    /// Complete undirected graph over `vars` — the PC starting point.
    pub fn complete_undirected(universe: usize, vars: &[usize]) -> Self {
        let mut g = CausalGraph::new(universe, vars.iter().copied().collect(), GraphMode::Undirected);
        for (i, &a) in vars.iter().enumerate() {
            for &b in &vars[i + 1..] {
                g.add_edge(a, b);
            }
        }
        g
    }

    pub fn universe(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> GraphMode {
        self.mode
    }

    pub fn variables(&self) -> &BTreeSet<usize> {
        &self.vars
    }

    pub fn contains_var(&self, v: usize) -> bool {
        self.vars.contains(&v)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> bool {
        self.dir[i * self.n + j]
    }

    pub fn add_edge(&mut self, i: usize, j: usize) {
        debug_assert!(i != j);
        self.dir[i * self.n + j] = true;
        if self.mode == GraphMode::Undirected {
            self.dir[j * self.n + i] = true;
        }
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) {
        self.dir[i * self.n + j] = false;
        if self.mode == GraphMode::Undirected {
            self.dir[j * self.n + i] = false;
        }
    }

    /// Directed: `i -> j` present. Undirected: edge between i and j.
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.at(i, j)
    }

    /// Edge regardless of orientation.
    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.at(i, j) || self.at(j, i)
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.vars
            .iter()
            .copied()
            .filter(|&u| u != v && self.adjacent(v, u))
            .collect()
    }

    pub fn parents_of(&self, v: usize) -> Vec<usize> {
        self.vars
            .iter()
            .copied()
            .filter(|&u| u != v && self.at(u, v))
            .collect()
    }

    pub fn children_of(&self, v: usize) -> Vec<usize> {
        self.vars
            .iter()
            .copied()
            .filter(|&u| u != v && self.at(v, u))
            .collect()
    }

    /// Canonical edge list: `(i, j)` with `i < j` when undirected.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for &i in &self.vars {
            for &j in &self.vars {
                match self.mode {
                    GraphMode::Undirected if i < j && self.at(i, j) => out.push((i, j)),
                    GraphMode::Directed if i != j && self.at(i, j) => out.push((i, j)),
                    _ => {}
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    /// Undirected view (drops orientations).
    pub fn to_skeleton(&self) -> CausalGraph {
        let mut g = CausalGraph::new(self.n, self.vars.clone(), GraphMode::Undirected);
        for &i in &self.vars {
            for &j in &self.vars {
                if i < j && self.adjacent(i, j) {
                    g.add_edge(i, j);
                }
            }
        }
        g
    }

    /// Directed reachability closure from `v` (exclusive).
    pub fn descendants(&self, v: usize) -> BTreeSet<usize> {
        reach(v, |u| self.children_of(u).into_iter())
    }

    pub fn ancestors(&self, v: usize) -> BTreeSet<usize> {
        reach(v, |u| self.parents_of(u).into_iter())
    }

    /// Collider set of a directed graph: variables with at least two
    /// incoming edges.
    pub fn colliders_directed(&self) -> Result<BTreeSet<usize>, GraphError> {
        if self.mode != GraphMode::Directed {
            return Err(GraphError::WrongMode {
                expected: GraphMode::Directed,
            });
        }
        Ok(self
            .vars
            .iter()
            .copied()
            .filter(|&v| self.parents_of(v).len() >= 2)
            .collect())
    }
}

/// Undirected collider detection with witness bookkeeping.
///
/// `v` is a collider when two of its neighbors separate given some `Z` of
/// size at most `k_thresh` that excludes `v`. A witness `Z` is looked up in
/// the sepset cache first, then by subset search over the graph's variables
/// minus the involved triple. Returns, per collider, the set of neighbors
/// that appear in some witnessed pair — the undirected stand-in for the
/// collider's parents, used by the Y-structure gate.
pub fn colliders_undirected_with_parents<Q: IndependenceQuery>(
    g: &CausalGraph,
    tester: &mut CiTester<Q>,
    cache: &mut SepsetCache,
    k_thresh: usize,
) -> Result<BTreeMap<usize, BTreeSet<usize>>, CiError> {
    colliders_undirected_with_parents_memo(g, tester, cache, k_thresh, &mut WitnessMemo::default())
}

/// Negative-result memo for the witness searches of the undirected
/// collider scan. Search outcomes depend only on the tester and the
/// variable universe — not on the graph's edges — so a memo stays valid
/// across the repeated scans of a fixed-point refinement, where it turns
/// repeat scans of surviving (collider, pair) triples into lookups.
#[derive(Debug, Default)]
pub(crate) struct WitnessMemo {
    /// Pairs with no separating set at all within the order cap.
    inseparable: BTreeSet<(usize, usize)>,
    /// (a, b, v) searches that found nothing once `v` was excluded.
    failed: BTreeSet<(usize, usize, usize)>,
}

pub(crate) fn colliders_undirected_with_parents_memo<Q: IndependenceQuery>(
    g: &CausalGraph,
    tester: &mut CiTester<Q>,
    cache: &mut SepsetCache,
    k_thresh: usize,
    memo: &mut WitnessMemo,
) -> Result<BTreeMap<usize, BTreeSet<usize>>, CiError> {
    assert_eq!(g.mode(), GraphMode::Undirected);
    let all: Vec<usize> = g.variables().iter().copied().collect();
    let mut out: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for &v in &all {
        let nbrs = g.neighbors(v);
        for (ai, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[ai + 1..] {
                // A failed search with `v` excluded can only be cheaper than
                // one over the full candidate set, so an unconstrained search
                // runs first: its failures rule the pair out for every `v`.
                let pair = (a.min(b), a.max(b));
                let witnessed = if memo.inseparable.contains(&pair)
                    || memo.failed.contains(&(pair.0, pair.1, v))
                {
                    false
                } else {
                    match cache.get(a, b) {
                        Some(z) if !z.contains(&v) => true,
                        Some(_) => search_excluding(tester, cache, memo, &all, pair, v, k_thresh)?,
                        None => {
                            let candidates: Vec<usize> =
                                all.iter().copied().filter(|&u| u != a && u != b).collect();
                            match exhaustive_sepset_search(tester, a, b, &candidates, k_thresh)? {
                                Some(z) => {
                                    let hit = !z.contains(&v);
                                    cache.insert(a, b, z);
                                    hit || search_excluding(
                                        tester, cache, memo, &all, pair, v, k_thresh,
                                    )?
                                }
                                None => {
                                    memo.inseparable.insert(pair);
                                    false
                                }
                            }
                        }
                    }
                };
                if witnessed {
                    let entry = out.entry(v).or_default();
                    entry.insert(a);
                    entry.insert(b);
                }
            }
        }
    }
    Ok(out)
}

/// Witness search for pair `(a, b)` with `v` barred from the conditioning
/// set; used when the cached separating set happens to contain `v`.
fn search_excluding<Q: IndependenceQuery>(
    tester: &mut CiTester<Q>,
    cache: &mut SepsetCache,
    memo: &mut WitnessMemo,
    all: &[usize],
    (a, b): (usize, usize),
    v: usize,
    k_thresh: usize,
) -> Result<bool, CiError> {
    let candidates: Vec<usize> = all
        .iter()
        .copied()
        .filter(|&u| u != a && u != b && u != v)
        .collect();
    match exhaustive_sepset_search(tester, a, b, &candidates, k_thresh)? {
        Some(z) => {
            cache.insert(a, b, z);
            Ok(true)
        }
        None => {
            memo.failed.insert((a, b, v));
            Ok(false)
        }
    }
}

/// Convenience form of the undirected collider scan: just the collider set.
pub fn colliders_undirected<Q: IndependenceQuery>(
    g: &CausalGraph,
    tester: &mut CiTester<Q>,
    cache: &mut SepsetCache,
    k_thresh: usize,
) -> Result<BTreeSet<usize>, CiError> {
    Ok(colliders_undirected_with_parents(g, tester, cache, k_thresh)?
        .into_keys()
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ci::oracle_tester;

    fn chain_graph() -> Dag {
        // 1 -> 2 <- 3 -> 4 -> 5
        Dag::parse_edge_list("1 2\n3 2\n3 4\n4 5\n").unwrap()
    }

    fn idx(dag: &Dag, name: &str) -> usize {
        dag.index_of(name).unwrap()
    }

    #[test]
    fn parse_interns_names_in_first_appearance_order() {
        let dag = chain_graph();
        assert_eq!(dag.names(), &["1", "2", "3", "4", "5"]);
        assert_eq!(dag.edge_count(), 4);
        assert!(dag.has_edge(idx(&dag, "3"), idx(&dag, "2")));
        assert!(!dag.has_edge(idx(&dag, "2"), idx(&dag, "3")));
    }

    #[test]
    fn parse_skips_comments_and_blank_lines() {
        let dag = Dag::parse_edge_list("# truth\n\na b\n  # more\nb c\n").unwrap();
        assert_eq!(dag.names(), &["a", "b", "c"]);
        assert_eq!(dag.edge_count(), 2);
    }

    #[test]
    fn parse_rejects_malformed_lines_with_position() {
        let err = Dag::parse_edge_list("a b\nc\n").unwrap_err();
        match err {
            GraphError::MalformedLine { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn construction_rejects_cycles_self_loops_and_duplicates() {
        assert!(matches!(
            Dag::parse_edge_list("a b\nb c\nc a\n"),
            Err(GraphError::Cycle { .. })
        ));
        assert!(matches!(
            Dag::parse_edge_list("a a\n"),
            Err(GraphError::SelfLoop(_))
        ));
        assert!(matches!(
            Dag::parse_edge_list("a b\na b\n"),
            Err(GraphError::DuplicateEdge { .. })
        ));
    }

    #[test]
    fn ancestors_and_descendants() {
        let dag = chain_graph();
        let five = idx(&dag, "5");
        let anc: Vec<usize> = dag.ancestors(five).into_iter().collect();
        assert_eq!(anc, vec![idx(&dag, "3"), idx(&dag, "4")]);
        let three = idx(&dag, "3");
        let desc: Vec<usize> = dag.descendants(three).into_iter().collect();
        assert_eq!(desc, vec![idx(&dag, "2"), idx(&dag, "4"), five]);
    }

    #[test]
    fn d_separation_blocks_chains_and_opens_colliders() {
        let dag = chain_graph();
        let (v1, v2, v3, v4, v5) = (0, 1, 2, 3, 4);
        // Collider at 2 blocks marginally, opens under conditioning.
        assert!(dag.d_separated(v1, v3, &[]).unwrap());
        assert!(!dag.d_separated(v1, v3, &[v2]).unwrap());
        // Chain 3 -> 4 -> 5 blocks on the middle node.
        assert!(!dag.d_separated(v3, v5, &[]).unwrap());
        assert!(dag.d_separated(v3, v5, &[v4]).unwrap());
        // Conditioning on a collider's descendant also opens it (extra
        // 2 -> 4 edge makes "4" a descendant of the collider).
        let with_desc = Dag::parse_edge_list("1 2\n3 2\n2 4\n3 4\n4 5\n").unwrap();
        assert!(!with_desc.d_separated(v1, v3, &[v4]).unwrap());
    }

    #[test]
    fn bruteforce_oracle_agrees_on_the_chain_graph() {
        let dag = chain_graph();
        let zs: Vec<Vec<usize>> = vec![vec![], vec![1], vec![3], vec![1, 3], vec![2, 3]];
        for x in 0..5 {
            for y in 0..5 {
                if x == y {
                    continue;
                }
                for z in &zs {
                    if z.contains(&x) || z.contains(&y) {
                        continue;
                    }
                    assert_eq!(
                        dag.d_separated(x, y, z).unwrap(),
                        dag.d_separated_bruteforce(x, y, z, 10_000).unwrap(),
                        "disagreement at ({x}, {y}) given {z:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn edge_list_round_trip() {
        let dag = chain_graph();
        let again = Dag::parse_edge_list(&dag.to_edge_list()).unwrap();
        assert_eq!(dag.names(), again.names());
        assert_eq!(dag.edges(), again.edges());
    }

    #[test]
    fn directed_colliders_require_two_parents() {
        let dag = chain_graph();
        let g = dag.to_causal_graph();
        let colliders: Vec<usize> = g.colliders_directed().unwrap().into_iter().collect();
        assert_eq!(colliders, vec![1]); // node "2"
        assert!(matches!(
            dag.skeleton().colliders_directed(),
            Err(GraphError::WrongMode { .. })
        ));
    }

    #[test]
    fn undirected_collider_scan_finds_the_v_structure() {
        let dag = chain_graph();
        let g = dag.skeleton();
        let mut tester = oracle_tester(&dag);
        let mut cache = SepsetCache::new();
        let info = colliders_undirected_with_parents(&g, &mut tester, &mut cache, 3).unwrap();
        // Node "2" is witnessed by its separable neighbor pair (1, 3).
        let parents: Vec<usize> = info[&1].iter().copied().collect();
        assert_eq!(parents, vec![0, 2]);
    }

    #[test]
    fn skeleton_drops_orientation() {
        let dag = chain_graph();
        let g = dag.skeleton();
        assert_eq!(g.mode(), GraphMode::Undirected);
        assert_eq!(g.edges(), vec![(0, 1), (1, 2), (2, 3), (3, 4)]);
        assert!(g.has_edge(1, 0) && g.has_edge(0, 1));
    }
}
