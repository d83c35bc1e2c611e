//! Deterministic flow rounding: oriented Eulerian partitions of each bit
//! level, flow turning, and the bit-by-bit rounding loop.

use crate::layered::{extract_st_subflow, LayeredDag};
use crate::util::ceil_log2;
use lcflow_core::{deficit, ArcFlow, ArcId, Digraph, Vertex};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RoundingError {
    PartitionMismatch,
    BitFlowNotTwoValued { arc: ArcId },
    InfeasibleInput { arc: ArcId },
}

impl fmt::Display for RoundingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RoundingError::PartitionMismatch => {
                write!(f, "partition does not cover the bit support exactly")
            }
            RoundingError::BitFlowNotTwoValued { arc } => {
                write!(f, "arc {arc} breaks the two-valued bit flow shape")
            }
            RoundingError::InfeasibleInput { arc } => {
                write!(f, "input flow exceeds capacity on arc {arc}")
            }
        }
    }
}

impl std::error::Error for RoundingError {}

/// An oriented partition of an undirected multigraph into edge-disjoint
/// cycles and paths. Each element lists (edge id, forward) pairs in
/// traversal order, where forward means the edge was walked from its first
/// stored endpoint to its second. A path's designated source is the tail of
/// its first traversed edge.
#[derive(Clone, Debug, Default)]
pub struct EulerianPartition {
    pub cycles: Vec<Vec<(usize, bool)>>,
    pub paths: Vec<Vec<(usize, bool)>>,
}

/// Full-cover oriented Eulerian partition. Odd-degree vertices are paired
/// off per component with virtual edges, one Euler circuit is walked, and
/// removing the virtual edges splits it into paths (so the path count is
/// exactly half the odd-degree count and each vertex ends at most one path).
pub fn eulerian_partition(n: usize, edges: &[(Vertex, Vertex)]) -> EulerianPartition {
    let m = edges.len();
    // adjacency with half-edges: (edge id, forward)
    let mut adj: Vec<Vec<(usize, bool)>> = vec![Vec::new(); n];
    let mut all = edges.to_vec();
    for (i, &(u, v)) in edges.iter().enumerate() {
        adj[u].push((i, true));
        adj[v].push((i, false));
    }
    // components over vertices incident to at least one edge
    let mut comp = vec![usize::MAX; n];
    let mut ncomp = 0;
    for start in 0..n {
        if comp[start] != usize::MAX || adj[start].is_empty() {
            continue;
        }
        let mut stack = vec![start];
        comp[start] = ncomp;
        while let Some(v) = stack.pop() {
            for &(e, fwd) in &adj[v] {
                let (a, b) = all[e];
                let other = if fwd { b } else { a };
                if comp[other] == usize::MAX {
                    comp[other] = ncomp;
                    stack.push(other);
                }
            }
        }
        ncomp += 1;
    }
    // pair odd vertices within each component with virtual edges
    let mut odd_by_comp: Vec<Vec<Vertex>> = vec![Vec::new(); ncomp];
    for v in 0..n {
        if !adj[v].is_empty() && adj[v].len() % 2 == 1 {
            odd_by_comp[comp[v]].push(v);
        }
    }
    let mut virt = vec![false; m];
    for odds in &odd_by_comp {
        debug_assert!(odds.len() % 2 == 0);
        for pair in odds.chunks(2) {
            let (u, v) = (pair[0], pair[1]);
            let e = all.len();
            all.push((u, v));
            adj[u].push((e, true));
            adj[v].push((e, false));
            virt.push(true);
        }
    }
    // sort half-edges so traversal consumes ascending edge ids
    for lists in adj.iter_mut() {
        lists.sort_unstable();
    }
    let mut used = vec![false; all.len()];
    let mut next = vec![0usize; n];
    let mut out = EulerianPartition::default();
    for start in 0..n {
        if adj[start].is_empty() {
            continue;
        }
        if adj[start].iter().all(|&(e, _)| used[e]) {
            continue;
        }
        // Hierholzer circuit from `start` (all degrees even after pairing)
        let mut stack: Vec<(Vertex, Option<(usize, bool)>)> = vec![(start, None)];
        let mut circuit: Vec<(usize, bool)> = Vec::new();
        while let Some(&(v, via)) = stack.last() {
            let mut advanced = false;
            while next[v] < adj[v].len() {
                let (e, fwd) = adj[v][next[v]];
                if used[e] {
                    next[v] += 1;
                    continue;
                }
                used[e] = true;
                next[v] += 1;
                let (a, b) = all[e];
                let to = if fwd { b } else { a };
                stack.push((to, Some((e, fwd))));
                advanced = true;
                break;
            }
            if !advanced {
                stack.pop();
                if let Some(step) = via {
                    circuit.push(step);
                }
            }
        }
        circuit.reverse();
        if circuit.is_empty() {
            continue;
        }
        // split at virtual edges; an all-real circuit is one cycle
        if circuit.iter().all(|&(e, _)| !virt[e]) {
            out.cycles.push(circuit);
            continue;
        }
        // rotate so the circuit starts right after a virtual edge
        let first_virt = circuit.iter().position(|&(e, _)| virt[e]).unwrap();
        circuit.rotate_left(first_virt + 1);
        let mut cur: Vec<(usize, bool)> = Vec::new();
        for step in circuit {
            if virt[step.0] {
                debug_assert!(!cur.is_empty(), "paired odd vertices are distinct");
                out.paths.push(std::mem::take(&mut cur));
            } else {
                cur.push(step);
            }
        }
        if !cur.is_empty() {
            out.paths.push(cur);
        }
    }
    out
}

/// Endpoint vertices of an oriented element step sequence, given the edge
/// list: returns (start, end).
fn element_ends(edges: &[(Vertex, Vertex)], elem: &[(usize, bool)]) -> (Vertex, Vertex) {
    let (e0, f0) = elem[0];
    let start = if f0 { edges[e0].0 } else { edges[e0].1 };
    let (el, fl) = elem[elem.len() - 1];
    let end = if fl { edges[el].1 } else { edges[el].0 };
    (start, end)
}

/// Turns one bit level: every support arc is doubled or zeroed, per element
/// of the partition. Cycles keep the class agreeing with their traversal
/// orientation. For a path the two candidate classes are scored at its two
/// endpoints (which no other element touches): smallest deficit growth
/// first, then largest value gain, ties along the first traversed arc.
/// `ctx_net` is the in-minus-out balance of the full flow before the turn;
/// a path endpoint's balance is an odd multiple of the bit value, so the
/// winning class never grows the deficit and never shrinks
/// value-minus-deficit.
fn turn_bits(
    g: &Digraph,
    support: &[ArcId],
    c_exp: i64,
    part: &EulerianPartition,
    ctx_net: &[BigRational],
) -> Result<Vec<bool>, RoundingError> {
    // doubled[i] says support arc i keeps (doubled) flow; false means zeroed
    let m_s = support.len();
    let mut covered = vec![false; m_s];
    let mut count = 0usize;
    for elem in part.cycles.iter().chain(part.paths.iter()) {
        for &(e, _) in elem {
            if e >= m_s || covered[e] {
                return Err(RoundingError::PartitionMismatch);
            }
            covered[e] = true;
            count += 1;
        }
    }
    if count != m_s {
        return Err(RoundingError::PartitionMismatch);
    }
    let edges: Vec<(Vertex, Vertex)> = support
        .iter()
        .map(|&a| (g.arc(a).tail, g.arc(a).head))
        .collect();
    let c = lcflow_core::pow2(c_exp);
    let mut doubled = vec![false; m_s];
    // cycles: both directions preserve every net; keep the forward class
    for elem in &part.cycles {
        for &(e, fwd) in elem {
            doubled[e] = fwd;
        }
    }
    // paths: turning is a +-c circulation along the traversal, so only the
    // two endpoints change balance: the start loses c of in-minus-out, the
    // end gains c (signs flip for the opposite class)
    for elem in &part.paths {
        let (p, q) = element_ends(&edges, elem);
        let delta_fwd = [(p, -c.clone()), (q, c.clone())];
        // per-class (deficit change, value change) at the endpoints
        let score = |flip: bool| -> (BigRational, BigRational) {
            let mut ddef = BigRational::zero();
            let mut dval = BigRational::zero();
            for (v, d) in &delta_fwd {
                let d = if flip { -d.clone() } else { d.clone() };
                if g.is_source(*v) {
                    // net is in-minus-out; value moves opposite to it
                    dval -= d;
                } else if !g.is_sink(*v) {
                    ddef += (&ctx_net[*v] + &d).abs() - ctx_net[*v].abs();
                }
            }
            (ddef, dval)
        };
        let (fwd_def, fwd_val) = score(false);
        let (bwd_def, bwd_val) = score(true);
        // never let the deficit grow; among deficit-equal choices take the
        // larger value; tie-break along the first traversed arc
        let use_fwd = match fwd_def.cmp(&bwd_def).then(bwd_val.cmp(&fwd_val)) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => elem[0].1,
        };
        for &(e, fwd) in elem {
            doubled[e] = fwd == use_fwd;
        }
    }
    Ok(doubled)
}

/// In-minus-out balance per vertex for a flow.
fn net_balance(g: &Digraph, f: &ArcFlow) -> Vec<BigRational> {
    let mut net = vec![BigRational::zero(); g.n()];
    for (i, a) in g.arcs().iter().enumerate() {
        if f.f[i].is_zero() {
            continue;
        }
        net[a.head] += &f.f[i];
        net[a.tail] -= &f.f[i];
    }
    net
}

/// Doubles or zeroes every arc of a two-valued bit flow along an oriented
/// partition of its support. The output deficit never exceeds the input
/// deficit.
pub fn flow_turn_update(
    g: &Digraph,
    bit_flow: &ArcFlow,
    part: &EulerianPartition,
) -> Result<ArcFlow, RoundingError> {
    let mut support = Vec::new();
    let mut c_exp: Option<i64> = None;
    for (i, x) in bit_flow.f.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        let bits =
            crate::rounding::dyadic_exp(x).ok_or(RoundingError::BitFlowNotTwoValued { arc: i })?;
        match c_exp {
            None => c_exp = Some(bits),
            Some(e) if e == bits => {}
            _ => return Err(RoundingError::BitFlowNotTwoValued { arc: i }),
        }
        support.push(i);
    }
    let Some(c_exp) = c_exp else {
        return Ok(ArcFlow::zero(g.m()));
    };
    let ctx = net_balance(g, bit_flow);
    let doubled = turn_bits(g, &support, c_exp, part, &ctx)?;
    let two_c = lcflow_core::pow2(c_exp + 1);
    let mut out = ArcFlow::zero(g.m());
    for (i, &a) in support.iter().enumerate() {
        if doubled[i] {
            out.f[a] = two_c.clone();
        }
    }
    Ok(out)
}

/// Exponent e with x == 2^e, if x is a power of two.
pub(crate) fn dyadic_exp(x: &BigRational) -> Option<i64> {
    if x.is_zero() || x.is_negative() {
        return None;
    }
    let num = x.numer().magnitude();
    let den = x.denom().magnitude();
    if num.count_ones() != 1 || den.count_ones() != 1 {
        return None;
    }
    Some(num.trailing_zeros().unwrap() as i64 - den.trailing_zeros().unwrap() as i64)
}

/// Mirror of [`turn_bits`] on 2^k fixed-point values: the bit value is
/// `c` grid units and vertex balances are in grid units. Scaling by the
/// positive constant 2^k preserves every comparison, so the decisions
/// match the rational version exactly.
fn turn_bits_fp(
    g: &Digraph,
    support: &[ArcId],
    c: u128,
    part: &EulerianPartition,
    ctx_net: &[i128],
) -> Result<Vec<bool>, RoundingError> {
    let m_s = support.len();
    let mut covered = vec![false; m_s];
    let mut count = 0usize;
    for elem in part.cycles.iter().chain(part.paths.iter()) {
        for &(e, _) in elem {
            if e >= m_s || covered[e] {
                return Err(RoundingError::PartitionMismatch);
            }
            covered[e] = true;
            count += 1;
        }
    }
    if count != m_s {
        return Err(RoundingError::PartitionMismatch);
    }
    let edges: Vec<(Vertex, Vertex)> = support
        .iter()
        .map(|&a| (g.arc(a).tail, g.arc(a).head))
        .collect();
    let c = c as i128;
    let mut doubled = vec![false; m_s];
    for elem in &part.cycles {
        for &(e, fwd) in elem {
            doubled[e] = fwd;
        }
    }
    for elem in &part.paths {
        let (p, q) = element_ends(&edges, elem);
        let delta_fwd = [(p, -c), (q, c)];
        let score = |flip: bool| -> (i128, i128) {
            let mut ddef = 0i128;
            let mut dval = 0i128;
            for &(v, d0) in &delta_fwd {
                let d = if flip { -d0 } else { d0 };
                if g.is_source(v) {
                    dval -= d;
                } else if !g.is_sink(v) {
                    ddef += (ctx_net[v] + d).abs() - ctx_net[v].abs();
                }
            }
            (ddef, dval)
        };
        let (fwd_def, fwd_val) = score(false);
        let (bwd_def, bwd_val) = score(true);
        let use_fwd = match fwd_def.cmp(&bwd_def).then(bwd_val.cmp(&fwd_val)) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => elem[0].1,
        };
        for &(e, fwd) in elem {
            doubled[e] = fwd == use_fwd;
        }
    }
    Ok(doubled)
}

/// Fixed-point body of [`round_flow`]: values are u128 numerators over the
/// 2^-k grid. Only called when every intermediate provably fits, so the
/// integer arithmetic is exact and the result equals the rational body's.
fn round_flow_fp(d: &LayeredDag, f: &ArcFlow, k: u64) -> Result<ArcFlow, RoundingError> {
    let g = d.g();
    let scale = BigInt::one() << k;
    let mut v: Vec<u128> = f
        .f
        .iter()
        .map(|x| {
            (x * BigRational::from_integer(scale.clone()))
                .floor()
                .to_integer()
                .to_u128()
                .expect("gated by the bit bound")
        })
        .collect();
    // lowest fractional set bit across all arcs: positions below k
    let lowest_frac_bit = |v: &[u128]| -> Option<u64> {
        let mut best: Option<u64> = None;
        for &x in v {
            if x == 0 {
                continue;
            }
            let tz = x.trailing_zeros() as u64;
            if tz >= k {
                continue;
            }
            best = Some(match best {
                Some(b) => b.min(tz),
                None => tz,
            });
        }
        best
    };
    while let Some(e) = lowest_frac_bit(&v) {
        let c = 1u128 << e;
        let mut support = Vec::new();
        for (i, &x) in v.iter().enumerate() {
            if x == 0 {
                continue;
            }
            // bit e is set iff x / 2^e is odd (no lower bits exist)
            if (x >> e) & 1 == 1 {
                support.push(i);
            }
        }
        debug_assert!(!support.is_empty());
        let edges: Vec<(Vertex, Vertex)> = support
            .iter()
            .map(|&a| (g.arc(a).tail, g.arc(a).head))
            .collect();
        let part = eulerian_partition(g.n(), &edges);
        let mut ctx = vec![0i128; g.n()];
        for (i, a) in g.arcs().iter().enumerate() {
            if v[i] == 0 {
                continue;
            }
            ctx[a.head] += v[i] as i128;
            ctx[a.tail] -= v[i] as i128;
        }
        let doubled = turn_bits_fp(g, &support, c, &part, &ctx)?;
        for (i, &a) in support.iter().enumerate() {
            if doubled[i] {
                v[a] += c;
                debug_assert!(v[a] <= (g.arc(a).cap as u128) << k);
            } else {
                v[a] -= c;
            }
        }
    }
    let cur = ArcFlow {
        f: v
            .iter()
            .map(|&x| BigRational::from_integer(BigInt::from(x >> k)))
            .collect(),
    };
    let out = extract_st_subflow(d, &cur);
    debug_assert!(out.is_integral());
    debug_assert!(deficit(g, &out).1.is_zero());
    Ok(out)
}

/// Deterministic rounding to an integral S-T flow with value at least
/// (1 - eps) of the input's. Truncates to a dyadic grid, then repeatedly
/// turns the lowest surviving fractional bit along an Eulerian partition of
/// its support, and finally extracts a clean S-T subflow.
pub fn round_flow(
    d: &LayeredDag,
    f: &ArcFlow,
    eps: &BigRational,
) -> Result<ArcFlow, RoundingError> {
    let g = d.g();
    let m = g.m();
    let u_max = g.max_cap();
    for (i, a) in g.arcs().iter().enumerate() {
        if f.f[i] > BigRational::from_integer(a.cap.into()) || f.f[i].is_negative() {
            return Err(RoundingError::InfeasibleInput { arc: i });
        }
    }
    // truncation depth: fixed base plus whatever eps demands
    let mut k = ceil_log2(m as u128 * u_max.max(1) as u128) + 20;
    if eps.is_positive() {
        let inv = (eps.denom() / eps.numer()).max(BigInt::one());
        k += (inv - BigInt::one()).bits();
    }
    // fixed-point fast path: vertex balances are bounded by m * u_max grid
    // units, so bits(m) + bits(u_max) + k + 2 <= 126 keeps all i128 exact
    let head = ceil_log2(m.max(1) as u128 + 1) + ceil_log2(u_max as u128 + 1) + 2;
    if head + k <= 126 {
        return round_flow_fp(d, f, k);
    }
    let grid = lcflow_core::pow2(-(k as i64));
    let mut cur = ArcFlow {
        f: f.f.iter().map(|x| (x / &grid).floor() * &grid).collect(),
    };
    // lowest fractional set bit across all arcs, if any; values sit on the
    // 2^-k grid, so a reduced denominator 2^s with s > 0 pins the bit -s
    let lowest_frac_bit = |fl: &ArcFlow| -> Option<i64> {
        let mut best: Option<i64> = None;
        for x in &fl.f {
            if x.is_zero() {
                continue;
            }
            let den = x.denom().magnitude();
            debug_assert_eq!(den.count_ones(), 1);
            let shift = den.trailing_zeros().unwrap() as i64;
            if shift == 0 {
                continue;
            }
            let low = -shift;
            best = Some(match best {
                Some(b) => b.min(low),
                None => low,
            });
        }
        best
    };
    while let Some(e) = lowest_frac_bit(&cur) {
        let c = lcflow_core::pow2(e);
        let mut support = Vec::new();
        for (i, x) in cur.f.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            // bit e is set iff x / 2^e is odd (no lower bits exist)
            let q = (x / &c).to_integer();
            if num_integer::Integer::is_odd(&q) {
                support.push(i);
            }
        }
        debug_assert!(!support.is_empty());
        let edges: Vec<(Vertex, Vertex)> = support
            .iter()
            .map(|&a| (g.arc(a).tail, g.arc(a).head))
            .collect();
        let part = eulerian_partition(g.n(), &edges);
        let ctx = net_balance(g, &cur);
        let doubled = turn_bits(g, &support, e, &part, &ctx)?;
        for (i, &a) in support.iter().enumerate() {
            if doubled[i] {
                cur.f[a] += &c;
                debug_assert!(cur.f[a] <= BigRational::from_integer(g.arc(a).cap.into()));
            } else {
                cur.f[a] -= &c;
            }
        }
    }
    let out = extract_st_subflow(d, &cur);
    debug_assert!(out.is_integral());
    debug_assert!(deficit(g, &out).1.is_zero());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layered::validate_layered_dag;
    use lcflow_core::Arc;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn arc(tail: Vertex, head: Vertex, cap: u64) -> Arc {
        Arc {
            tail,
            head,
            cap,
            len: 1,
        }
    }

    #[test]
    fn partition_single_cycle() {
        // triangle 0-1-2
        let part = eulerian_partition(3, &[(0, 1), (1, 2), (2, 0)]);
        assert_eq!(part.cycles.len(), 1);
        assert_eq!(part.paths.len(), 0);
        assert_eq!(part.cycles[0].len(), 3);
    }

    #[test]
    fn partition_single_path() {
        let part = eulerian_partition(4, &[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(part.cycles.len(), 0);
        assert_eq!(part.paths.len(), 1);
        assert_eq!(part.paths[0].len(), 3);
    }

    #[test]
    fn partition_k4_two_paths_full_cover() {
        let edges = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let part = eulerian_partition(4, &edges);
        assert_eq!(part.paths.len(), 2);
        let mut seen = vec![false; 6];
        let mut endpoints = Vec::new();
        for elem in part.cycles.iter().chain(part.paths.iter()) {
            for &(e, _) in elem {
                assert!(!seen[e]);
                seen[e] = true;
            }
        }
        for p in &part.paths {
            let (a, b) = element_ends(&edges, p);
            endpoints.push(a);
            endpoints.push(b);
        }
        assert!(seen.iter().all(|&x| x));
        // each vertex is the endpoint of at most one path
        endpoints.sort_unstable();
        endpoints.dedup();
        assert_eq!(endpoints.len(), 4);
    }

    #[test]
    fn turn_directed_four_cycle_keeps_balance() {
        // 0->1->2->3->0 with c=1/2; S={}, T={} is not allowed, so park S,T
        // on unused vertices 4,5
        let g = Digraph::new(
            6,
            vec![
                arc(0, 1, 1),
                arc(1, 2, 1),
                arc(2, 3, 1),
                arc(3, 0, 1),
                arc(4, 5, 1),
            ],
            vec![4],
            vec![5],
        )
        .unwrap();
        let mut bit = ArcFlow::zero(5);
        for a in 0..4 {
            bit.f[a] = rat(1, 2);
        }
        let edges: Vec<(usize, usize)> = (0..4).map(|a| (g.arc(a).tail, g.arc(a).head)).collect();
        let part = eulerian_partition(6, &edges);
        let out = flow_turn_update(&g, &bit, &part).unwrap();
        // consistent directed cycle: everything doubled to 1
        for a in 0..4 {
            assert_eq!(out.f[a], rat(1, 1), "arc {a}");
        }
        let (_, d_out) = deficit(&g, &out);
        assert!(d_out.is_zero());
    }

    #[test]
    fn turn_opposing_legs_picks_one() {
        // s=0 -> a=1 -> t=2 and s -> b=3 -> t with c=1/2: undirected cycle
        let g = Digraph::new(
            4,
            vec![arc(0, 1, 1), arc(1, 2, 1), arc(0, 3, 1), arc(3, 2, 1)],
            vec![0],
            vec![2],
        )
        .unwrap();
        let mut bit = ArcFlow::zero(4);
        for a in 0..4 {
            bit.f[a] = rat(1, 2);
        }
        let edges: Vec<(usize, usize)> = (0..4).map(|a| (g.arc(a).tail, g.arc(a).head)).collect();
        let part = eulerian_partition(4, &edges);
        let out = flow_turn_update(&g, &bit, &part).unwrap();
        let legs = [(0usize, 1usize), (2usize, 3usize)];
        let mut ones = 0;
        for (x, y) in legs {
            assert_eq!(out.f[x], out.f[y]);
            if out.f[x] == rat(1, 1) {
                ones += 1;
            } else {
                assert!(out.f[x].is_zero());
            }
        }
        assert_eq!(ones, 1);
        let (_, d_out) = deficit(&g, &out);
        assert!(d_out.is_zero());
        assert_eq!(out.value(&g), rat(1, 1));
    }

    #[test]
    fn turn_empty_support() {
        let g = Digraph::new(2, vec![arc(0, 1, 1)], vec![0], vec![1]).unwrap();
        let out = flow_turn_update(&g, &ArcFlow::zero(1), &EulerianPartition::default()).unwrap();
        assert!(out.f[0].is_zero());
    }

    #[test]
    fn turn_rejects_bad_partition() {
        let g = Digraph::new(2, vec![arc(0, 1, 1)], vec![0], vec![1]).unwrap();
        let mut bit = ArcFlow::zero(1);
        bit.f[0] = rat(1, 2);
        // empty partition does not cover the support
        assert!(matches!(
            flow_turn_update(&g, &bit, &EulerianPartition::default()),
            Err(RoundingError::PartitionMismatch)
        ));
    }

    #[test]
    fn round_integral_input_unchanged_value() {
        let g = Digraph::new(3, vec![arc(0, 1, 2), arc(1, 2, 2)], vec![0], vec![2]).unwrap();
        let d = validate_layered_dag(g).unwrap();
        let f = ArcFlow::from_integers(&[2, 2]);
        let out = round_flow(&d, &f, &rat(1, 100)).unwrap();
        assert_eq!(out.value(d.g()), rat(2, 1));
    }

    #[test]
    fn round_half_flow_on_parallel_paths() {
        // two 2-arc paths at 1/2 each -> one full path
        let g = Digraph::new(
            4,
            vec![arc(0, 1, 1), arc(1, 3, 1), arc(0, 2, 1), arc(2, 3, 1)],
            vec![0],
            vec![3],
        )
        .unwrap();
        let d = validate_layered_dag(g).unwrap();
        let f = ArcFlow {
            f: vec![rat(1, 2); 4],
        };
        let out = round_flow(&d, &f, &rat(1, 2)).unwrap();
        assert!(out.is_integral());
        assert_eq!(out.value(d.g()), rat(1, 1));
        // exactly one of the two paths carries the unit
        assert_eq!(out.f[0], out.f[1]);
        assert_eq!(out.f[2], out.f[3]);
        assert_ne!(out.f[0], out.f[2]);
    }

    #[test]
    fn round_mixed_quarters() {
        // 3-layer DAG with values in {1/4, 1/2, 3/4}
        let g = Digraph::new(
            5,
            vec![
                arc(0, 1, 1),
                arc(0, 2, 1),
                arc(1, 3, 1),
                arc(2, 3, 1),
                arc(1, 4, 1),
                arc(2, 4, 1),
            ],
            vec![0],
            vec![3, 4],
        )
        .unwrap();
        let d = validate_layered_dag(g).unwrap();
        let f = ArcFlow {
            f: vec![
                rat(3, 4),
                rat(1, 2),
                rat(1, 4),
                rat(1, 4),
                rat(1, 2),
                rat(1, 4),
            ],
        };
        let val_in = f.value(d.g());
        let (_, d_in) = deficit(d.g(), &f);
        assert!(d_in.is_zero());
        let out = round_flow(&d, &f, &rat(1, 4)).unwrap();
        assert!(out.is_integral());
        let val_out = out.value(d.g());
        assert!(val_out >= (rat(3, 4)) * &val_in, "{val_out} vs {val_in}");
        for (i, a) in d.g().arcs().iter().enumerate() {
            assert!(out.f[i] <= BigRational::from_integer(a.cap.into()));
            assert!(!out.f[i].is_negative());
        }
    }

    #[test]
    fn round_rejects_infeasible() {
        let g = Digraph::new(2, vec![arc(0, 1, 1)], vec![0], vec![1]).unwrap();
        let d = validate_layered_dag(g).unwrap();
        let f = ArcFlow { f: vec![rat(3, 2)] };
        assert!(matches!(
            round_flow(&d, &f, &rat(1, 2)),
            Err(RoundingError::InfeasibleInput { arc: 0 })
        ));
    }
}
