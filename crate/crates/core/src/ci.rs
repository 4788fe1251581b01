//! Conditional-independence testing behind one interface contract: the
//! exact d-separation oracle and the statistical partial-correlation
//! Fisher-z test, with monotone test counters and a sepset cache.

use std::cell::Cell;
use std::collections::BTreeMap;

use itertools::Itertools;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::float::Float;
use crate::graph::Dag;
use crate::semgen::Dataset;

#[derive(Debug, Error)]
pub enum CiError {
    #[error("variable index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("insufficient samples: m = {m} but |Z| = {z_len} requires m > |Z| + 3")]
    InsufficientSamples { m: usize, z_len: usize },
    #[error("oracle query failed: {0}")]
    Oracle(String),
}

/// Decision backend behind [`CiTester`]: answers "is x independent of y
/// given Z?" without any counting or caching concerns. Implementations must
/// be symmetric in (x, y).
pub trait IndependenceQuery {
    fn independent(&self, x: usize, y: usize, z: &[usize]) -> Result<bool, CiError>;
    fn n_vars(&self) -> usize;
}

/// Counting wrapper around a query backend. Every `test` call increments
/// `total_tests`; calls inside a refining region also increment
/// `refining_tests` and are attributed to the current edge tag.
#[derive(Debug)]
pub struct CiTester<Q> {
    query: Q,
    total_tests: u64,
    refining_tests: u64,
    refining: bool,
    current_edge: Option<(usize, usize)>,
    per_edge_refining: BTreeMap<(usize, usize), u64>,
}

impl<Q: IndependenceQuery> CiTester<Q> {
    pub fn new(query: Q) -> Self {
        CiTester {
            query,
            total_tests: 0,
            refining_tests: 0,
            refining: false,
            current_edge: None,
            per_edge_refining: BTreeMap::new(),
        }
    }

    pub fn test(&mut self, x: usize, y: usize, z: &[usize]) -> Result<bool, CiError> {
        self.total_tests += 1;
        if self.refining {
            self.refining_tests += 1;
            if let Some(edge) = self.current_edge {
                *self.per_edge_refining.entry(edge).or_insert(0) += 1;
            }
        }
        self.query.independent(x, y, z)
    }

    pub fn total_tests(&self) -> u64 {
        self.total_tests
    }

    pub fn refining_tests(&self) -> u64 {
        self.refining_tests
    }

    /// Enters the refining counting region; `edge` tags subsequent tests for
    /// hit-rate attribution.
    pub fn begin_refining(&mut self, edge: Option<(usize, usize)>) {
        self.refining = true;
        self.current_edge = edge.map(canonical);
    }

    pub fn end_refining(&mut self) {
        self.refining = false;
        self.current_edge = None;
    }

    /// Refining tests attributed per canonical edge.
    pub fn per_edge_refining(&self) -> &BTreeMap<(usize, usize), u64> {
        &self.per_edge_refining
    }

    pub fn query(&self) -> &Q {
        &self.query
    }

    pub fn n_vars(&self) -> usize {
        self.query.n_vars()
    }
}

fn canonical((a, b): (usize, usize)) -> (usize, usize) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Map from unordered variable pair to one witnessing conditioning set.
#[derive(Debug, Clone, Default)]
pub struct SepsetCache {
    map: BTreeMap<(usize, usize), Vec<usize>>,
}

impl SepsetCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, a: usize, b: usize) -> Option<&Vec<usize>> {
        self.map.get(&canonical((a, b)))
    }

    pub fn insert(&mut self, a: usize, b: usize, z: Vec<usize>) {
        self.map.insert(canonical((a, b)), z);
    }

    pub fn extend_from(&mut self, other: &SepsetCache) {
        for (&k, v) in &other.map {
            self.map.entry(k).or_insert_with(|| v.clone());
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Exact oracle backed by d-separation on the true graph.
#[derive(Debug)]
pub struct OracleQuery<'a> {
    dag: &'a Dag,
}

impl<'a> OracleQuery<'a> {
    pub fn new(dag: &'a Dag) -> Self {
        OracleQuery { dag }
    }

    pub fn dag(&self) -> &Dag {
        self.dag
    }
}

impl IndependenceQuery for OracleQuery<'_> {
    fn independent(&self, x: usize, y: usize, z: &[usize]) -> Result<bool, CiError> {
        self.dag
            .d_separated(x, y, z)
            .map_err(|e| CiError::Oracle(e.to_string()))
    }

    fn n_vars(&self) -> usize {
        self.dag.n()
    }
}

pub fn oracle_tester(dag: &Dag) -> CiTester<OracleQuery<'_>> {
    CiTester::new(OracleQuery::new(dag))
}

/// Partial-correlation Fisher-z test over a cached correlation matrix.
///
/// The correlation matrix is computed once; each query inverts the
/// submatrix over {x, y} ∪ Z. A singular submatrix is treated as dependent
/// (keeping an edge is recoverable by refinement; deleting on numerical
/// failure is not) and counted in `singular_fallbacks`.
#[derive(Debug)]
pub struct FisherZQuery<F> {
    corr: Vec<F>,
    n: usize,
    m: usize,
    threshold: F,
    singular_fallbacks: Cell<u64>,
}

impl<F: Float> FisherZQuery<F> {
    pub fn new(data: &Dataset<F>, alpha: f64) -> Self {
        let n = data.n_vars();
        let m = data.n_samples();
        let mut corr = vec![F::zero(); n * n];
        // Sample-covariance convention (divide by m - 1) inside correlations.
        let means: Vec<F> = (0..n).map(|j| data.column_mean(j)).collect();
        for a in 0..n {
            for b in a..n {
                let mut cov = F::zero();
                let mut va = F::zero();
                let mut vb = F::zero();
                for i in 0..data.n_samples() {
                    let da = data.value(i, a) - means[a];
                    let db = data.value(i, b) - means[b];
                    cov = cov + da * db;
                    va = va + da * da;
                    vb = vb + db * db;
                }
                let denom = (va * vb).sqrt();
                let r = if denom > F::zero() { cov / denom } else { F::zero() };
                corr[a * n + b] = r;
                corr[b * n + a] = r;
            }
        }
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        let threshold = F::from_f64_lossy(normal.inverse_cdf(1.0 - alpha / 2.0));
        FisherZQuery {
            corr,
            n,
            m,
            threshold,
            singular_fallbacks: Cell::new(0),
        }
    }

    pub fn singular_fallbacks(&self) -> u64 {
        self.singular_fallbacks.get()
    }

    /// Partial correlation of (x, y) given z via inversion of the
    /// correlation submatrix; `None` marks a singular submatrix.
    fn partial_correlation(&self, x: usize, y: usize, z: &[usize]) -> Option<F> {
        let idx: Vec<usize> = [x, y].iter().copied().chain(z.iter().copied()).collect();
        let k = idx.len();
        if k == 2 {
            return Some(self.corr[x * self.n + y]);
        }
        let mut a = vec![F::zero(); k * k];
        for (i, &vi) in idx.iter().enumerate() {
            for (j, &vj) in idx.iter().enumerate() {
                a[i * k + j] = self.corr[vi * self.n + vj];
            }
        }
        let inv = invert(&mut a, k)?;
        let d = inv[0] * inv[k + 1];
        if d <= F::zero() {
            return None;
        }
        Some(-inv[1] / d.sqrt())
    }
}

/// Gauss-Jordan inversion with partial pivoting; small matrices only
/// (|Z| + 2 on a side). Returns `None` when a pivot degenerates.
fn invert<F: Float>(a: &mut [F], k: usize) -> Option<Vec<F>> {
    let eps = F::from_f64_lossy(1e-12);
    let mut inv = vec![F::zero(); k * k];
    for i in 0..k {
        inv[i * k + i] = F::one();
    }
    for col in 0..k {
        let mut pivot = col;
        for row in col + 1..k {
            if a[row * k + col].abs() > a[pivot * k + col].abs() {
                pivot = row;
            }
        }
        if a[pivot * k + col].abs() < eps {
            return None;
        }
        if pivot != col {
            for j in 0..k {
                a.swap(col * k + j, pivot * k + j);
                inv.swap(col * k + j, pivot * k + j);
            }
        }
        let p = a[col * k + col];
        for j in 0..k {
            a[col * k + j] = a[col * k + j] / p;
            inv[col * k + j] = inv[col * k + j] / p;
        }
        for row in 0..k {
            if row == col {
                continue;
            }
            let f = a[row * k + col];
            if f == F::zero() {
                continue;
            }
            for j in 0..k {
                a[row * k + j] = a[row * k + j] - f * a[col * k + j];
                inv[row * k + j] = inv[row * k + j] - f * inv[col * k + j];
            }
        }
    }
    Some(inv)
}

impl<F: Float> IndependenceQuery for FisherZQuery<F> {
    fn independent(&self, x: usize, y: usize, z: &[usize]) -> Result<bool, CiError> {
        if x >= self.n || y >= self.n {
            return Err(CiError::IndexOutOfRange(x.max(y)));
        }
        if self.m <= z.len() + 3 {
            return Err(CiError::InsufficientSamples {
                m: self.m,
                z_len: z.len(),
            });
        }
        let rho = match self.partial_correlation(x, y, z) {
            Some(r) => r,
            None => {
                self.singular_fallbacks.set(self.singular_fallbacks.get() + 1);
                return Ok(false);
            }
        };
        let one = F::one();
        let cap = one - F::from_f64_lossy(1e-12);
        let rho = rho.max(-cap).min(cap);
        let half = F::from_f64_lossy(0.5);
        let dof = F::from_f64_lossy((self.m - z.len() - 3) as f64);
        let stat = dof.sqrt() * half * ((one + rho) / (one - rho)).ln();
        Ok(stat.abs() <= self.threshold)
    }

    fn n_vars(&self) -> usize {
        self.n
    }
}

pub fn fisher_z_tester<F: Float>(data: &Dataset<F>, alpha: f64) -> CiTester<FisherZQuery<F>> {
    CiTester::new(FisherZQuery::new(data, alpha))
}

/// First conditioning set `Z ⊆ candidates` with `|Z| <= max_order` that
/// renders (x, y) independent, enumerating sizes ascending and subsets in
/// lexicographic order. The deterministic order keeps CI-test counts
/// reproducible.
pub fn exhaustive_sepset_search<Q: IndependenceQuery>(
    tester: &mut CiTester<Q>,
    x: usize,
    y: usize,
    candidates: &[usize],
    max_order: usize,
) -> Result<Option<Vec<usize>>, CiError> {
    debug_assert!(!candidates.contains(&x) && !candidates.contains(&y));
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    for size in 0..=max_order.min(sorted.len()) {
        for z in sorted.iter().copied().combinations(size) {
            if tester.test(x, y, &z)? {
                return Ok(Some(z));
            }
        }
    }
    Ok(None)
}
