//! Sparse path decomposition: converts an arc flow on a layered DAG into an
//! equal path flow supported on at most m paths.

use crate::layered::LayeredDag;
use lcflow_core::{ArcFlow, ArcId, IntegralFlow, PathEntry, PathFlow, Vertex};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::VecDeque;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecomposeError {
    NonConserving { v: Vertex },
    NegativeValue { arc: ArcId },
    UnitOverflow { arc: ArcId },
}

impl fmt::Display for DecomposeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecomposeError::NonConserving { v } => {
                write!(f, "flow is not conserved at vertex {v}")
            }
            DecomposeError::NegativeValue { arc } => {
                write!(f, "arc {arc} carries a negative value")
            }
            DecomposeError::UnitOverflow { arc } => {
                write!(f, "arc {arc} scaled flow does not fit a machine word")
            }
        }
    }
}

impl std::error::Error for DecomposeError {}

/// Decomposes an S-T arc flow on a layered DAG into a path flow that agrees
/// with it exactly on every arc and is supported on at most m paths.
///
/// Packets start on the source out-arcs and are forwarded layer by layer in
/// FIFO order; at each vertex a packet fills out-arcs by ascending arc index
/// and only splits when it exhausts one, so every extra path is charged to a
/// fully decomposed arc. eta is one over the least common denominator.
pub fn sparse_decompose(d: &LayeredDag, f: &ArcFlow) -> Result<PathFlow, DecomposeError> {
    let g = d.g();
    let m = g.m();
    assert_eq!(f.f.len(), m, "flow/arc count mismatch");
    let mut denom_lcm = BigInt::one();
    for (i, x) in f.f.iter().enumerate() {
        if x.is_negative() {
            return Err(DecomposeError::NegativeValue { arc: i });
        }
        if !x.is_zero() {
            denom_lcm = denom_lcm.lcm(x.denom());
        }
    }
    let (per, total) = lcflow_core::deficit(g, f);
    if !total.is_zero() {
        let v = per.iter().position(|x| !x.is_zero()).unwrap();
        return Err(DecomposeError::NonConserving { v });
    }
    let eta = BigRational::new(BigInt::one(), denom_lcm.clone());
    let mut remaining = vec![0u64; m];
    for (i, x) in f.f.iter().enumerate() {
        let units = (x * BigRational::from_integer(denom_lcm.clone())).to_integer();
        remaining[i] = units
            .to_u64()
            .ok_or(DecomposeError::UnitOverflow { arc: i })?;
    }
    let mut queue: VecDeque<(Vec<ArcId>, u64)> = VecDeque::new();
    for &s in g.sources() {
        for &a in g.out_arcs(s) {
            if remaining[a] > 0 {
                queue.push_back((vec![a], remaining[a]));
                remaining[a] = 0;
            }
        }
    }
    let mut paths = Vec::new();
    while let Some((path, mult)) = queue.pop_front() {
        let v = g.arc(*path.last().unwrap()).head;
        if g.is_sink(v) {
            paths.push(PathEntry { arcs: path, mult });
            continue;
        }
        let mut left = mult;
        for &a in g.out_arcs(v) {
            if left == 0 {
                break;
            }
            let take = left.min(remaining[a]);
            if take == 0 {
                continue;
            }
            remaining[a] -= take;
            left -= take;
            let mut next = path.clone();
            next.push(a);
            queue.push_back((next, take));
        }
        if left > 0 {
            // conservation was checked, so out capacity cannot run dry
            return Err(DecomposeError::NonConserving { v });
        }
    }
    Ok(PathFlow::with_components(
        eta,
        vec![IntegralFlow { paths }],
        m,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layered::validate_layered_dag;
    use lcflow_core::{Arc, Digraph};

    fn arc(tail: Vertex, head: Vertex, cap: u64) -> Arc {
        Arc {
            tail,
            head,
            cap,
            len: 1,
        }
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn single_path() {
        let g = Digraph::new(3, vec![arc(0, 1, 1), arc(1, 2, 1)], vec![0], vec![2]).unwrap();
        let d = validate_layered_dag(g).unwrap();
        let pf = sparse_decompose(&d, &ArcFlow::from_integers(&[1, 1])).unwrap();
        assert_eq!(pf.components.len(), 1);
        assert_eq!(pf.components[0].paths.len(), 1);
        assert_eq!(pf.components[0].paths[0].arcs, vec![0, 1]);
        assert_eq!(pf.value(), rat(1, 1));
    }

    #[test]
    fn diamond_two_unit_paths() {
        let g = Digraph::new(
            4,
            vec![arc(0, 1, 1), arc(0, 2, 1), arc(1, 3, 1), arc(2, 3, 1)],
            vec![0],
            vec![3],
        )
        .unwrap();
        let d = validate_layered_dag(g).unwrap();
        let pf = sparse_decompose(&d, &ArcFlow::from_integers(&[1, 1, 1, 1])).unwrap();
        let paths = &pf.components[0].paths;
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[0].arcs, vec![0, 2]);
        assert_eq!(paths[1].arcs, vec![1, 3]);
        assert!(paths.iter().all(|p| p.mult == 1));
        assert_eq!(pf.value(), rat(2, 1));
    }

    #[test]
    fn split_at_middle_vertex() {
        let g = Digraph::new(
            4,
            vec![arc(0, 1, 2), arc(1, 2, 1), arc(1, 3, 1)],
            vec![0],
            vec![2, 3],
        )
        .unwrap();
        let d = validate_layered_dag(g).unwrap();
        let pf = sparse_decompose(&d, &ArcFlow::from_integers(&[2, 1, 1])).unwrap();
        let paths = &pf.components[0].paths;
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[0].arcs, vec![0, 1]);
        assert_eq!(paths[1].arcs, vec![0, 2]);
        assert!(paths.iter().all(|p| p.mult == 1));
        assert!(paths.len() <= d.g().m());
    }

    #[test]
    fn fractional_flow_exact_arc_equality() {
        // two parallel 2-arc paths at 1/2 and 1/4
        let g = Digraph::new(
            4,
            vec![arc(0, 1, 1), arc(1, 3, 1), arc(0, 2, 1), arc(2, 3, 1)],
            vec![0],
            vec![3],
        )
        .unwrap();
        let d = validate_layered_dag(g).unwrap();
        let f = ArcFlow {
            f: vec![rat(1, 2), rat(1, 2), rat(1, 4), rat(1, 4)],
        };
        let pf = sparse_decompose(&d, &f).unwrap();
        assert_eq!(pf.eta, rat(1, 4));
        assert_eq!(pf.arc_flow(), f);
        assert_eq!(pf.value(), rat(3, 4));
    }

    #[test]
    fn rejects_deficit() {
        let g = Digraph::new(
            4,
            vec![arc(0, 1, 1), arc(1, 2, 1), arc(2, 3, 1)],
            vec![0],
            vec![3],
        )
        .unwrap();
        let d = validate_layered_dag(g).unwrap();
        let f = ArcFlow {
            f: vec![rat(1, 1), rat(1, 1), rat(1, 2)],
        };
        assert!(matches!(
            sparse_decompose(&d, &f),
            Err(DecomposeError::NonConserving { v: 2 })
        ));
    }

    #[test]
    fn empty_flow() {
        let g = Digraph::new(3, vec![arc(0, 1, 1), arc(1, 2, 1)], vec![0], vec![2]).unwrap();
        let d = validate_layered_dag(g).unwrap();
        let pf = sparse_decompose(&d, &ArcFlow::zero(2)).unwrap();
        assert!(pf.is_empty());
        assert!(pf.value().is_zero());
    }
}
