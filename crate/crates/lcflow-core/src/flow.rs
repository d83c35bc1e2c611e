//! Flow representations: exact per-arc flows, bit flows, and path flows
//! (a scalar eta times a sum of integral path collections).

use crate::graph::{ArcId, Digraph, Vertex};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FlowError {
    ArcCountMismatch { expected: usize, got: usize },
    NonDyadic { arc: ArcId },
    NegativeValue { arc: ArcId },
    EmptyPath,
    ZeroMultiplicity,
    Disconnected { pos: usize },
    NotSourceStart { v: Vertex },
    NotSinkEnd { v: Vertex },
    TooLong { len: u64, h: u64 },
    NotSimple { v: Vertex },
}

impl fmt::Display for FlowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowError::ArcCountMismatch { expected, got } => {
                write!(f, "expected {expected} arc values, got {got}")
            }
            FlowError::NonDyadic { arc } => {
                write!(f, "arc {arc} carries a non-dyadic value")
            }
            FlowError::NegativeValue { arc } => write!(f, "arc {arc} carries a negative value"),
            FlowError::EmptyPath => write!(f, "path with no arcs"),
            FlowError::ZeroMultiplicity => write!(f, "path with zero multiplicity"),
            FlowError::Disconnected { pos } => {
                write!(f, "path arcs disagree at position {pos}")
            }
            FlowError::NotSourceStart { v } => write!(f, "path starts at non-source {v}"),
            FlowError::NotSinkEnd { v } => write!(f, "path ends at non-sink {v}"),
            FlowError::TooLong { len, h } => write!(f, "path length {len} exceeds budget {h}"),
            FlowError::NotSimple { v } => write!(f, "path revisits vertex {v}"),
        }
    }
}

impl std::error::Error for FlowError {}

/// Exact per-arc flow values. Indexed by arc id; length must equal m.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArcFlow {
    pub f: Vec<BigRational>,
}

impl ArcFlow {
    pub fn zero(m: usize) -> Self {
        ArcFlow {
            f: vec![BigRational::zero(); m],
        }
    }

    pub fn from_integers(v: &[u64]) -> Self {
        ArcFlow {
            f: v.iter()
                .map(|&x| BigRational::from_integer(BigInt::from(x)))
                .collect(),
        }
    }

    pub fn is_integral(&self) -> bool {
        self.f.iter().all(|x| x.is_integer())
    }

    pub fn support(&self) -> Vec<ArcId> {
        self.f
            .iter()
            .enumerate()
            .filter(|(_, x)| !x.is_zero())
            .map(|(i, _)| i)
            .collect()
    }

    /// Net flow out of S.
    pub fn value(&self, g: &Digraph) -> BigRational {
        let mut v = BigRational::zero();
        for &s in g.sources() {
            for &a in g.out_arcs(s) {
                v += &self.f[a];
            }
            for &a in g.in_arcs(s) {
                v -= &self.f[a];
            }
        }
        v
    }

    pub fn add_assign(&mut self, other: &ArcFlow) {
        debug_assert_eq!(self.f.len(), other.f.len());
        for (x, y) in self.f.iter_mut().zip(&other.f) {
            *x += y;
        }
    }
}

/// Per-vertex imbalance |out - in| for vertices outside S and T, and the sum.
pub fn deficit(g: &Digraph, f: &ArcFlow) -> (Vec<BigRational>, BigRational) {
    assert_eq!(f.f.len(), g.m(), "flow/arc count mismatch");
    let mut net = vec![BigRational::zero(); g.n()];
    for (i, a) in g.arcs().iter().enumerate() {
        net[a.tail] += &f.f[i];
        net[a.head] -= &f.f[i];
    }
    let mut total = BigRational::zero();
    let mut per = vec![BigRational::zero(); g.n()];
    for v in 0..g.n() {
        if g.is_source(v) || g.is_sink(v) {
            continue;
        }
        let d = net[v].abs();
        total += &d;
        per[v] = d;
    }
    (per, total)
}

/// One bit level of a dyadic flow: every supporting arc carries exactly
/// 2^exp.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitFlow {
    pub exp: i64,
    pub support: Vec<ArcId>,
}

impl BitFlow {
    pub fn bit_value(&self) -> BigRational {
        pow2(self.exp)
    }

    pub fn to_arc_flow(&self, m: usize) -> ArcFlow {
        let mut f = ArcFlow::zero(m);
        let v = self.bit_value();
        for &a in &self.support {
            f.f[a] = v.clone();
        }
        f
    }
}

pub fn pow2(exp: i64) -> BigRational {
    if exp >= 0 {
        BigRational::from_integer(BigInt::one() << exp as u64)
    } else {
        BigRational::new(BigInt::one(), BigInt::one() << (-exp) as u64)
    }
}

/// Split a dyadic flow into bit flows, highest bit first. Levels with empty
/// support are skipped. `u_max` only anchors the nominal top bit; actual
/// exponents come from the values themselves.
pub fn bitwise_decompose(f: &ArcFlow, u_max: u64) -> Result<Vec<BitFlow>, FlowError> {
    let _ = u_max;
    let mut levels: Vec<(i64, Vec<ArcId>)> = Vec::new();
    for (i, x) in f.f.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        if x.is_negative() {
            return Err(FlowError::NegativeValue { arc: i });
        }
        let den: &BigUint = x.denom().magnitude();
        if den.count_ones() != 1 {
            return Err(FlowError::NonDyadic { arc: i });
        }
        let shift = den.trailing_zeros().unwrap_or(0) as i64;
        let num: &BigUint = x.numer().magnitude();
        for bit in 0..num.bits() {
            if num.bit(bit) {
                let exp = bit as i64 - shift;
                match levels.binary_search_by_key(&exp, |&(e, _)| e) {
                    Ok(idx) => levels[idx].1.push(i),
                    Err(idx) => levels.insert(idx, (exp, vec![i])),
                }
            }
        }
    }
    Ok(levels
        .into_iter()
        .rev()
        .map(|(exp, support)| BitFlow { exp, support })
        .collect())
}

/// One simple S-T path with an integer multiplicity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathEntry {
    pub arcs: Vec<ArcId>,
    pub mult: u64,
}

/// An integral flow stored as a path collection.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IntegralFlow {
    pub paths: Vec<PathEntry>,
}

impl IntegralFlow {
    pub fn value(&self) -> u128 {
        self.paths.iter().map(|p| p.mult as u128).sum()
    }

    pub fn arc_mult(&self, m: usize) -> Vec<u128> {
        let mut agg = vec![0u128; m];
        for p in &self.paths {
            for &a in &p.arcs {
                agg[a] += p.mult as u128;
            }
        }
        agg
    }
}

/// eta times a sum of integral path collections. The per-arc aggregate
/// multiplicity is kept in sync by the mutating methods.
#[derive(Clone, Debug)]
pub struct PathFlow {
    pub eta: BigRational,
    pub components: Vec<IntegralFlow>,
    agg: Vec<u128>,
}

impl PathFlow {
    pub fn new(eta: BigRational, m: usize) -> Self {
        PathFlow {
            eta,
            components: Vec::new(),
            agg: vec![0; m],
        }
    }

    pub fn with_components(eta: BigRational, components: Vec<IntegralFlow>, m: usize) -> Self {
        let mut pf = PathFlow::new(eta, m);
        for c in components {
            pf.push_component(c);
        }
        pf
    }

    pub fn push_component(&mut self, c: IntegralFlow) {
        for p in &c.paths {
            for &a in &p.arcs {
                self.agg[a] += p.mult as u128;
            }
        }
        self.components.push(c);
    }

    pub fn is_empty(&self) -> bool {
        self.components.iter().all(|c| c.paths.is_empty())
    }

    /// Total multiplicity through arc a (before scaling by eta).
    pub fn agg_mult(&self, a: ArcId) -> u128 {
        self.agg[a]
    }

    pub fn agg(&self) -> &[u128] {
        &self.agg
    }

    pub fn arc_value(&self, a: ArcId) -> BigRational {
        &self.eta * BigRational::from_integer(BigInt::from(self.agg[a]))
    }

    pub fn arc_flow(&self) -> ArcFlow {
        ArcFlow {
            f: self
                .agg
                .iter()
                .map(|&c| &self.eta * BigRational::from_integer(BigInt::from(c)))
                .collect(),
        }
    }

    /// eta times the total multiplicity of all stored paths.
    pub fn value(&self) -> BigRational {
        let total: u128 = self.components.iter().map(|c| c.value()).sum();
        &self.eta * BigRational::from_integer(BigInt::from(total))
    }

    /// Checks every stored path: nonempty, connected, starts in S, ends in
    /// T, simple, and total length at most h.
    pub fn validate(&self, g: &Digraph, h: u64) -> Result<(), FlowError> {
        for c in &self.components {
            for p in &c.paths {
                validate_path(g, &p.arcs, h)?;
                if p.mult == 0 {
                    return Err(FlowError::ZeroMultiplicity);
                }
            }
        }
        Ok(())
    }
}

/// Validates one arc sequence as a simple S-T path of length at most h.
pub fn validate_path(g: &Digraph, arcs: &[ArcId], h: u64) -> Result<(), FlowError> {
    if arcs.is_empty() {
        return Err(FlowError::EmptyPath);
    }
    let first = g.arc(arcs[0]).tail;
    if !g.is_source(first) {
        return Err(FlowError::NotSourceStart { v: first });
    }
    let mut len = 0u64;
    let mut seen = vec![first];
    for (i, &a) in arcs.iter().enumerate() {
        let arc = g.arc(a);
        if i > 0 && g.arc(arcs[i - 1]).head != arc.tail {
            return Err(FlowError::Disconnected { pos: i });
        }
        len += arc.len;
        if seen.contains(&arc.head) {
            return Err(FlowError::NotSimple { v: arc.head });
        }
        seen.push(arc.head);
    }
    let last = g.arc(arcs[arcs.len() - 1]).head;
    if !g.is_sink(last) {
        return Err(FlowError::NotSinkEnd { v: last });
    }
    if len > h {
        return Err(FlowError::TooLong { len, h });
    }
    Ok(())
}

/// Total length of an arc sequence.
pub fn path_length(g: &Digraph, arcs: &[ArcId]) -> u64 {
    arcs.iter().map(|&a| g.arc(a).len).sum()
}
