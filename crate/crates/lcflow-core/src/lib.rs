//! Core model for length-constrained flows: the directed graph with
//! capacities and integer lengths, exact and path-based flow values, moving
//! cuts, wide-exponent scaled arithmetic, and the length-budgeted
//! lightest-distance DP that everything else queries.

pub mod cut;
pub mod dist;
pub mod flow;
pub mod graph;
pub mod scaled;

pub use cut::MovingCut;
pub use dist::{h_length_distance, h_length_table, DistTable};
pub use flow::{
    bitwise_decompose, deficit, path_length, pow2, validate_path, ArcFlow, BitFlow, FlowError,
    IntegralFlow, PathEntry, PathFlow,
};
pub use graph::{Arc, ArcId, Digraph, GraphError, Vertex};
pub use scaled::{ScaledReal, REL_TOL};
