//! Random sparse true DAGs and linear non-Gaussian sample data.
//!
//! Sampling follows `v_i = Σ_{j∈P_i} w_ji v_j + r ε_i` over a topological
//! order, with uniform noise on [-√3, √3] (mean 0, variance 1), per-edge
//! weights drawn uniform on (0.2, 1) and normalized to sum 1 per child, and
//! every column standardized to mean 0 / variance 1 as soon as it is
//! generated so that each parent enters its children with unit variance.
//!
//! All randomness flows through seeded ChaCha8 streams (stream = node
//! index for noise, stream = n + node index for weights), so identical
//! (spec, m, seed) inputs give bit-identical datasets on every platform.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::float::Float;
use crate::graph::{Dag, GraphError};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("column {0:?} is constant; cannot standardize")]
    ConstantColumn(String),
    #[error("noise scale must be positive, got {0}")]
    NonPositiveNoise(f64),
    #[error("weights for {child:?} sum to {sum}, expected 1")]
    UnnormalizedWeights { child: String, sum: f64 },
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Linear SEM specification: the true DAG plus per-edge weights (parallel
/// to each node's parent list) and the noise scale `r`.
#[derive(Debug, Clone)]
pub struct SemSpec<F> {
    dag: Dag,
    weights: Vec<Vec<F>>,
    noise_scale: F,
}

impl<F: Float> SemSpec<F> {
    pub fn new(dag: Dag, weights: Vec<Vec<F>>, noise_scale: F) -> Result<Self, GenError> {
        if noise_scale <= F::zero() {
            return Err(GenError::NonPositiveNoise(
                noise_scale.to_f64().unwrap_or(f64::NAN),
            ));
        }
        let tol = F::from_f64_lossy(1e-9);
        for v in 0..dag.n() {
            if dag.parents(v).is_empty() {
                continue;
            }
            let sum: F = weights[v].iter().copied().sum();
            if (sum - F::one()).abs() > tol {
                return Err(GenError::UnnormalizedWeights {
                    child: dag.names()[v].clone(),
                    sum: sum.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(SemSpec {
            dag,
            weights,
            noise_scale,
        })
    }

    /// Default instantiation: weights uniform on (0.2, 1) normalized to sum
    /// 1 per child, r = 0.3.
    pub fn random(dag: Dag, seed: u64) -> Self {
        let n = dag.n();
        let mut weights = vec![Vec::new(); n];
        for v in 0..n {
            let n_par = dag.parents(v).len();
            if n_par == 0 {
                continue;
            }
            let mut rng = node_stream(seed, (n + v) as u64);
            let raw: Vec<f64> = (0..n_par).map(|_| rng.random_range(0.2..1.0)).collect();
            let sum: f64 = raw.iter().sum();
            weights[v] = raw.iter().map(|w| F::from_f64_lossy(w / sum)).collect();
        }
        SemSpec {
            dag,
            weights,
            noise_scale: F::from_f64_lossy(0.3),
        }
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn weights(&self, v: usize) -> &[F] {
        &self.weights[v]
    }

    pub fn noise_scale(&self) -> F {
        self.noise_scale
    }
}

/// m×n matrix of real-valued samples, column per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<F> {
    names: Vec<String>,
    values: Vec<F>,
    m: usize,
}

impl<F: Float> Dataset<F> {
    pub fn new(names: Vec<String>, values: Vec<F>, m: usize) -> Self {
        assert_eq!(values.len(), m * names.len());
        Dataset { names, values, m }
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn n_samples(&self) -> usize {
        self.m
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    #[inline]
    pub fn value(&self, row: usize, col: usize) -> F {
        self.values[row * self.names.len() + col]
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = F> + '_ {
        (0..self.m).map(move |i| self.value(i, col))
    }

    pub fn column_mean(&self, col: usize) -> F {
        let sum: F = self.column(col).sum();
        sum / F::from_f64_lossy(self.m as f64)
    }

    /// Population variance (divide by m) — the standardization convention.
    pub fn column_variance(&self, col: usize) -> F {
        let mean = self.column_mean(col);
        let ss: F = self.column(col).map(|v| (v - mean) * (v - mean)).sum();
        ss / F::from_f64_lossy(self.m as f64)
    }

    /// Header row of names, one sample per row, plain decimal formatting.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), GenError> {
        writeln!(w, "{}", self.names.join(","))?;
        for i in 0..self.m {
            let row: Vec<String> = (0..self.n_vars())
                .map(|j| format!("{}", self.value(i, j)))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, GenError> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| GenError::Csv("empty input".into()))??;
        let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        let n = names.len();
        let mut values = Vec::new();
        let mut m = 0usize;
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<&str> = line.split(',').collect();
            if row.len() != n {
                return Err(GenError::Csv(format!(
                    "row {}: expected {} fields, got {}",
                    lineno + 2,
                    n,
                    row.len()
                )));
            }
            for field in row {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|e| GenError::Csv(format!("row {}: {}", lineno + 2, e)))?;
                values.push(F::from_f64_lossy(v));
            }
            m += 1;
        }
        Ok(Dataset { names, values, m })
    }
}

fn node_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.into());
    rng
}

/// Random sparse DAG: nodes are generated in order and node t (t >= 2)
/// becomes a parent of each previously generated node independently with
/// probability min(1, avg_children/(t-1)), so each new node expects
/// min(avg_children, t-1) children.
pub fn random_dag(n: usize, avg_children: f64, seed: u64) -> Dag {
    assert!(n >= 1, "random_dag requires n >= 1");
    let names: Vec<String> = (1..=n).map(|i| format!("v{i}")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for t in 1..n {
        let p = (avg_children / t as f64).min(1.0);
        for prior in 0..t {
            if rng.random::<f64>() < p {
                edges.push((t, prior));
            }
        }
    }
    Dag::new(names, &edges).expect("construction is acyclic: edges point to earlier nodes")
}

/// Samples the linear SEM over a topological order, standardizing each
/// column as soon as it is generated.
pub fn sample_linear_sem<F: Float>(
    spec: &SemSpec<F>,
    m: usize,
    seed: u64,
) -> Result<Dataset<F>, GenError> {
    if m < 2 {
        return Err(GenError::TooFewSamples(m));
    }
    let dag = spec.dag();
    let n = dag.n();
    let sqrt3 = 3f64.sqrt();
    let mut columns: Vec<Vec<F>> = vec![Vec::new(); n];
    for &v in &dag.topological_order() {
        let mut rng = node_stream(seed, v as u64);
        let mut col: Vec<F> = (0..m)
            .map(|_| F::from_f64_lossy(rng.random::<f64>() * 2.0 * sqrt3 - sqrt3) * spec.noise_scale())
            .collect();
        for (k, &parent) in dag.parents(v).iter().enumerate() {
            let w = spec.weights(v)[k];
            for (i, x) in col.iter_mut().enumerate() {
                *x = *x + w * columns[parent][i];
            }
        }
        standardize_column(&mut col, &dag.names()[v])?;
        columns[v] = col;
    }
    let mut values = vec![F::zero(); m * n];
    for (j, col) in columns.iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            values[i * n + j] = x;
        }
    }
    Ok(Dataset::new(dag.names().to_vec(), values, m))
}

fn standardize_column<F: Float>(col: &mut [F], name: &str) -> Result<(), GenError> {
    let m = F::from_f64_lossy(col.len() as f64);
    let mean = col.iter().copied().sum::<F>() / m;
    let var = col.iter().map(|&v| (v - mean) * (v - mean)).sum::<F>() / m;
    if var <= F::zero() {
        return Err(GenError::ConstantColumn(name.to_string()));
    }
    let sd = var.sqrt();
    for v in col.iter_mut() {
        *v = (*v - mean) / sd;
    }
    Ok(())
}

/// Shifts every column to mean 0 and scales to (population) variance 1.
pub fn standardize<F: Float>(data: &Dataset<F>) -> Result<Dataset<F>, GenError> {
    let mut columns: Vec<Vec<F>> = (0..data.n_vars())
        .map(|j| data.column(j).collect())
        .collect();
    for (j, col) in columns.iter_mut().enumerate() {
        standardize_column(col, &data.names()[j])?;
    }
    let (m, n) = (data.n_samples(), data.n_vars());
    let mut values = vec![F::zero(); m * n];
    for (j, col) in columns.iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            values[i * n + j] = x;
        }
    }
    Ok(Dataset::new(data.names().to_vec(), values, m))
}
