//! Recursive causal skeleton discovery.
//!
//! The crate implements the Dsep-CP pipeline: d-separation-preserving
//! partitioning of the variable set, recursive PC-based solving of the
//! sub-problems, an AND-merge of the sub-graphs, and a Y-structure-guided
//! refinement that removes the false edges created when a separating set
//! spans both partitions. The exhaustive CP refinement is kept as a
//! baseline, together with an exact d-separation oracle, a Fisher-z
//! conditional-independence engine, a linear non-Gaussian data generator
//! and a benchmark harness.
//!
//! Numeric code (datasets, SEM sampling, Fisher-z, aggregation) is generic
//! over the scalar type via [`Float`]; graph and partitioning logic is
//! scalar-free. Concrete `f64` aliases live at the crate root.

pub mod bench;
pub mod ci;
pub mod discovery;
pub mod float;
pub mod graph;
pub mod metrics;
pub mod partition;
pub mod pc;
pub mod semgen;

pub use ci::{
    exhaustive_sepset_search, fisher_z_tester, oracle_tester, CiError, CiTester, FisherZQuery,
    IndependenceQuery, OracleQuery, SepsetCache,
};
pub use discovery::{
    cp_discover, cp_refine, discover, dsep_cp, dsep_cp_refine, merge, y_descendant_gate,
    y_structure_gate, Algorithm,
    DiscoveryConfig, DiscoveryOutcome, RecursionSummary, RefineOutcome, RunReport,
};
pub use float::Float;
pub use graph::{
    colliders_undirected, colliders_undirected_with_parents, CausalGraph, Dag, GraphError,
    GraphMode,
};
pub use metrics::{
    aggregate, hit_rate, refine_attribution, skeleton_scores, AggregateStat, QualityScores,
};
pub use partition::{find_causal_partitions, independence_matrix, IndependenceMatrix, PartitionResult};
pub use pc::pc_skeleton;
pub use semgen::{random_dag, sample_linear_sem, standardize, Dataset, GenError, SemSpec};

/// `f64` dataset, the default for the CLI and the benchmark harness.
pub type Dataset64 = Dataset<f64>;
/// `f32` dataset.
pub type Dataset32 = Dataset<f32>;
/// `f64` SEM specification.
pub type SemSpec64 = SemSpec<f64>;
/// `f64` Fisher-z query backend.
pub type FisherZQuery64 = FisherZQuery<f64>;
