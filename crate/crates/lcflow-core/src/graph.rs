//! Directed multigraph with integer capacities and lengths, plus the fixed
//! source and sink sets S, T.

use std::fmt;

pub type Vertex = usize;
pub type ArcId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arc {
    pub tail: Vertex,
    pub head: Vertex,
    /// capacity U_a, nonnegative
    pub cap: u64,
    /// length l_a, at least 1
    pub len: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    VertexOutOfRange { v: Vertex, n: usize },
    ZeroLength { arc: ArcId },
    SourceSinkOverlap { v: Vertex },
    CapCountMismatch { expected: usize, got: usize },
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::VertexOutOfRange { v, n } => {
                write!(f, "vertex {v} out of range (n = {n})")
            }
            GraphError::ZeroLength { arc } => write!(f, "arc {arc} has zero length"),
            GraphError::SourceSinkOverlap { v } => {
                write!(f, "vertex {v} is in both S and T")
            }
            GraphError::CapCountMismatch { expected, got } => {
                write!(f, "expected {expected} capacities, got {got}")
            }
        }
    }
}

impl std::error::Error for GraphError {}

/// Immutable after construction. Parallel arcs are allowed and common
/// (reductions create them); arc identity is the index into `arcs`.
#[derive(Clone, Debug)]
pub struct Digraph {
    n: usize,
    arcs: Vec<Arc>,
    sources: Vec<Vertex>,
    sinks: Vec<Vertex>,
    source_mask: Vec<bool>,
    sink_mask: Vec<bool>,
    out: Vec<Vec<ArcId>>,
    inn: Vec<Vec<ArcId>>,
}

impl Digraph {
    pub fn new(
        n: usize,
        arcs: Vec<Arc>,
        sources: Vec<Vertex>,
        sinks: Vec<Vertex>,
    ) -> Result<Self, GraphError> {
        for (i, a) in arcs.iter().enumerate() {
            if a.tail >= n {
                return Err(GraphError::VertexOutOfRange { v: a.tail, n });
            }
            if a.head >= n {
                return Err(GraphError::VertexOutOfRange { v: a.head, n });
            }
            if a.len == 0 {
                return Err(GraphError::ZeroLength { arc: i });
            }
        }
        let mut sources = sources;
        let mut sinks = sinks;
        sources.sort_unstable();
        sources.dedup();
        sinks.sort_unstable();
        sinks.dedup();
        let mut source_mask = vec![false; n];
        let mut sink_mask = vec![false; n];
        for &v in &sources {
            if v >= n {
                return Err(GraphError::VertexOutOfRange { v, n });
            }
            source_mask[v] = true;
        }
        for &v in &sinks {
            if v >= n {
                return Err(GraphError::VertexOutOfRange { v, n });
            }
            if source_mask[v] {
                return Err(GraphError::SourceSinkOverlap { v });
            }
            sink_mask[v] = true;
        }
        let mut out = vec![Vec::new(); n];
        let mut inn = vec![Vec::new(); n];
        for (i, a) in arcs.iter().enumerate() {
            out[a.tail].push(i);
            inn[a.head].push(i);
        }
        Ok(Digraph {
            n,
            arcs,
            sources,
            sinks,
            source_mask,
            sink_mask,
            out,
            inn,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.arcs.len()
    }

    pub fn arc(&self, a: ArcId) -> &Arc {
        &self.arcs[a]
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn out_arcs(&self, v: Vertex) -> &[ArcId] {
        &self.out[v]
    }

    pub fn in_arcs(&self, v: Vertex) -> &[ArcId] {
        &self.inn[v]
    }

    pub fn sources(&self) -> &[Vertex] {
        &self.sources
    }

    pub fn sinks(&self) -> &[Vertex] {
        &self.sinks
    }

    pub fn is_source(&self, v: Vertex) -> bool {
        self.source_mask[v]
    }

    pub fn is_sink(&self, v: Vertex) -> bool {
        self.sink_mask[v]
    }

    /// Same graph with replaced capacities (used by residual rebuilds).
    pub fn with_caps(&self, caps: &[u64]) -> Result<Self, GraphError> {
        if caps.len() != self.arcs.len() {
            return Err(GraphError::CapCountMismatch {
                expected: self.arcs.len(),
                got: caps.len(),
            });
        }
        let mut g = self.clone();
        for (a, &c) in g.arcs.iter_mut().zip(caps) {
            a.cap = c;
        }
        Ok(g)
    }

    pub fn max_cap(&self) -> u64 {
        self.arcs.iter().map(|a| a.cap).max().unwrap_or(0)
    }

    /// Total capacity leaving S (an upper bound on any S-T flow value).
    pub fn source_out_cap(&self) -> u128 {
        self.sources
            .iter()
            .flat_map(|&s| self.out[s].iter())
            .map(|&a| self.arcs[a].cap as u128)
            .sum()
    }
}
