//! Length-constrained flow algorithms: blocking flows on layered DAGs,
//! deterministic flow rounding, sparse path decomposition, lightest-path
//! blockers, and the multiplicative-weight solve loop with certified
//! flow/cut outputs.

pub mod blocker;
pub mod decompose;
pub mod layered;
pub mod rounding;
pub mod solver;
pub mod util;

pub use blocker::{
    build_expanded_dag, decongest, lightest_path_blocker, round_weights, BlockerError, BlockerFlow,
    CopyVertex, ExpandedDag, RoundedWeights,
};
pub use decompose::{sparse_decompose, DecomposeError};
pub use layered::{
    blocking_integral_flow, extract_st_subflow, is_blocking, iterated_path_count_flow, path_counts,
    sampled_integral_flow, validate_layered_dag, BlockingMode, LayeredDag, LayeredError,
    PathCounts,
};
pub use rounding::{
    eulerian_partition, flow_turn_update, round_flow, EulerianPartition, RoundingError,
};
pub use solver::{
    certify_pair, solve_multi, solve_pair, CertReport, Commodity, CommodityBatch, MwParams,
    SolveError,
};
