//! Layered S-T DAGs, capacity-weighted path counts, and blocking integral
//! flows (deterministic and sampled).

use crate::util::ceil_log2;
use lcflow_core::{ArcFlow, ArcId, Digraph, Vertex};
use num_bigint::{BigInt, BigUint, RandBigInt};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use std::cmp::Ordering;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayeredError {
    Cycle,
    MissingInArcs { v: Vertex },
    SourceHasInArcs { v: Vertex },
    MissingOutArcs { v: Vertex },
    SinkHasOutArcs { v: Vertex },
    IntraLayerArc { arc: ArcId },
    IterationCap { op: &'static str },
}

impl fmt::Display for LayeredError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayeredError::Cycle => write!(f, "graph contains a cycle"),
            LayeredError::MissingInArcs { v } => {
                write!(f, "non-source vertex {v} has no in-arcs")
            }
            LayeredError::SourceHasInArcs { v } => write!(f, "source {v} has in-arcs"),
            LayeredError::MissingOutArcs { v } => {
                write!(f, "non-sink vertex {v} has no out-arcs")
            }
            LayeredError::SinkHasOutArcs { v } => write!(f, "sink {v} has out-arcs"),
            LayeredError::IntraLayerArc { arc } => {
                write!(f, "arc {arc} does not advance a layer")
            }
            LayeredError::IterationCap { op } => {
                write!(f, "{op}: safety iteration cap exceeded")
            }
        }
    }
}

impl std::error::Error for LayeredError {}

/// A digraph layered by longest path from S: layer 0 is exactly S, sinks
/// sit at the top layer, and every arc strictly increases the layer.
#[derive(Clone, Debug)]
pub struct LayeredDag {
    g: Digraph,
    layer: Vec<usize>,
    max_layer: usize,
    /// vertices sorted by (layer, id)
    order: Vec<Vertex>,
}

impl LayeredDag {
    pub fn g(&self) -> &Digraph {
        &self.g
    }

    pub fn layer(&self, v: Vertex) -> usize {
        self.layer[v]
    }

    pub fn max_layer(&self) -> usize {
        self.max_layer
    }

    pub fn order(&self) -> &[Vertex] {
        &self.order
    }

    /// Same layering, new capacities (structure is unchanged, so the
    /// layered invariants are preserved).
    pub fn with_caps(&self, caps: &[u64]) -> LayeredDag {
        LayeredDag {
            g: self.g.with_caps(caps).expect("same arc count"),
            layer: self.layer.clone(),
            max_layer: self.max_layer,
            order: self.order.clone(),
        }
    }
}

/// Checks the S-T DAG conditions and computes layers by longest path from
/// S. Sinks are lifted to the common top layer.
pub fn validate_layered_dag(g: Digraph) -> Result<LayeredDag, LayeredError> {
    let n = g.n();
    for v in 0..n {
        if g.is_source(v) {
            if !g.in_arcs(v).is_empty() {
                return Err(LayeredError::SourceHasInArcs { v });
            }
        } else if g.in_arcs(v).is_empty() {
            return Err(LayeredError::MissingInArcs { v });
        }
        if g.is_sink(v) {
            if !g.out_arcs(v).is_empty() {
                return Err(LayeredError::SinkHasOutArcs { v });
            }
        } else if g.out_arcs(v).is_empty() {
            return Err(LayeredError::MissingOutArcs { v });
        }
    }
    // Kahn toposort for cycle detection and longest-path layers
    let mut indeg: Vec<usize> = (0..n).map(|v| g.in_arcs(v).len()).collect();
    let mut queue: Vec<Vertex> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut layer = vec![0usize; n];
    let mut processed = 0;
    let mut head = 0;
    while head < queue.len() {
        let v = queue[head];
        head += 1;
        processed += 1;
        for &a in g.out_arcs(v) {
            let u = g.arc(a).head;
            if layer[v] + 1 > layer[u] {
                layer[u] = layer[v] + 1;
            }
            indeg[u] -= 1;
            if indeg[u] == 0 {
                queue.push(u);
            }
        }
    }
    if processed < n {
        return Err(LayeredError::Cycle);
    }
    let max_layer = layer.iter().copied().max().unwrap_or(0);
    for v in 0..n {
        if g.is_sink(v) {
            layer[v] = max_layer;
        }
    }
    for (i, a) in g.arcs().iter().enumerate() {
        if layer[a.tail] >= layer[a.head] {
            return Err(LayeredError::IntraLayerArc { arc: i });
        }
    }
    let mut order: Vec<Vertex> = (0..n).collect();
    order.sort_by_key(|&v| (layer[v], v));
    Ok(LayeredDag {
        g,
        layer,
        max_layer,
        order,
    })
}

/// Capacity-weighted path counts: n_plus[v] counts v->T paths weighted by
/// the product of capacities, n_minus[v] the S->v ones, and
/// n_arc[a] = n_minus[tail] * U_a * n_plus[head].
#[derive(Clone, Debug)]
pub struct PathCounts {
    pub n_plus: Vec<BigUint>,
    pub n_minus: Vec<BigUint>,
    pub n_arc: Vec<BigUint>,
}

impl PathCounts {
    /// True iff no S-T path over positive-capacity arcs remains.
    pub fn exhausted(&self, d: &LayeredDag) -> bool {
        d.g().sources().iter().all(|&s| self.n_plus[s].is_zero())
    }
}

pub fn path_counts(d: &LayeredDag) -> PathCounts {
    let g = d.g();
    let mut n_plus = vec![BigUint::zero(); g.n()];
    let mut n_minus = vec![BigUint::zero(); g.n()];
    for &v in d.order().iter().rev() {
        if g.is_sink(v) {
            n_plus[v] = BigUint::one();
            continue;
        }
        let mut acc = BigUint::zero();
        for &a in g.out_arcs(v) {
            let arc = g.arc(a);
            acc += &n_plus[arc.head] * arc.cap;
        }
        n_plus[v] = acc;
    }
    for &v in d.order() {
        if g.is_source(v) {
            n_minus[v] = BigUint::one();
            continue;
        }
        let mut acc = BigUint::zero();
        for &a in g.in_arcs(v) {
            let arc = g.arc(a);
            acc += &n_minus[arc.tail] * arc.cap;
        }
        n_minus[v] = acc;
    }
    let n_arc = g
        .arcs()
        .iter()
        .map(|a| &n_minus[a.tail] * a.cap * &n_plus[a.head])
        .collect();
    PathCounts {
        n_plus,
        n_minus,
        n_arc,
    }
}

/// Per-copy path counts over exact rational residual capacities: for each
/// positive-capacity arc, the capacity-weighted count of S-T paths through
/// it with the arc's own capacity divided out (the count per parallel unit
/// copy). Zero-capacity arcs get count 0.
fn rational_arc_counts(d: &LayeredDag, caps: &[BigRational]) -> Vec<BigRational> {
    let g = d.g();
    let mut n_plus = vec![BigRational::zero(); g.n()];
    let mut n_minus = vec![BigRational::zero(); g.n()];
    for &v in d.order().iter().rev() {
        if g.is_sink(v) {
            n_plus[v] = BigRational::one();
            continue;
        }
        let mut acc = BigRational::zero();
        for &a in g.out_arcs(v) {
            acc += &n_plus[g.arc(a).head] * &caps[a];
        }
        n_plus[v] = acc;
    }
    for &v in d.order() {
        if g.is_source(v) {
            n_minus[v] = BigRational::one();
            continue;
        }
        let mut acc = BigRational::zero();
        for &a in g.in_arcs(v) {
            acc += &n_minus[g.arc(a).tail] * &caps[a];
        }
        n_minus[v] = acc;
    }
    g.arcs()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            if caps[i].is_zero() {
                BigRational::zero()
            } else {
                &n_minus[a.tail] * &n_plus[a.head]
            }
        })
        .collect()
}

/// Reduced nonnegative fraction over u128 with overflow-checked operations.
/// Any overflow aborts the machine-word fast path and the caller redoes the
/// computation in arbitrary precision; both paths are exact, so results
/// agree bit for bit.
#[derive(Clone, Copy, Debug)]
struct Frac {
    n: u128,
    /// > 0 and coprime to n; n == 0 keeps d == 1
    d: u128,
}

impl Frac {
    const ZERO: Frac = Frac { n: 0, d: 1 };
    const ONE: Frac = Frac { n: 1, d: 1 };

    fn from_u64(x: u64) -> Frac {
        Frac {
            n: x as u128,
            d: 1,
        }
    }

    fn reduce(n: u128, d: u128) -> Frac {
        if n == 0 {
            return Frac::ZERO;
        }
        let g = num_integer::Integer::gcd(&n, &d);
        Frac { n: n / g, d: d / g }
    }

    fn is_zero(&self) -> bool {
        self.n == 0
    }

    fn add(&self, o: &Frac) -> Option<Frac> {
        let g = num_integer::Integer::gcd(&self.d, &o.d);
        let l = (self.d / g).checked_mul(o.d)?;
        let a = self.n.checked_mul(o.d / g)?;
        let b = o.n.checked_mul(self.d / g)?;
        Some(Frac::reduce(a.checked_add(b)?, l))
    }

    /// Exact difference; the caller guarantees self >= o.
    fn sub(&self, o: &Frac) -> Option<Frac> {
        let g = num_integer::Integer::gcd(&self.d, &o.d);
        let l = (self.d / g).checked_mul(o.d)?;
        let a = self.n.checked_mul(o.d / g)?;
        let b = o.n.checked_mul(self.d / g)?;
        Some(Frac::reduce(a.checked_sub(b)?, l))
    }

    fn mul(&self, o: &Frac) -> Option<Frac> {
        if self.n == 0 || o.n == 0 {
            return Some(Frac::ZERO);
        }
        let g1 = num_integer::Integer::gcd(&self.n, &o.d);
        let g2 = num_integer::Integer::gcd(&o.n, &self.d);
        Some(Frac {
            n: (self.n / g1).checked_mul(o.n / g2)?,
            d: (self.d / g2).checked_mul(o.d / g1)?,
        })
    }

    fn div(&self, o: &Frac) -> Option<Frac> {
        if o.n == 0 {
            return None;
        }
        self.mul(&Frac { n: o.d, d: o.n })
    }

    fn cmp(&self, o: &Frac) -> Option<Ordering> {
        let a = self.n.checked_mul(o.d)?;
        let b = o.n.checked_mul(self.d)?;
        Some(a.cmp(&b))
    }

    fn to_bigrational(&self) -> BigRational {
        BigRational::new(BigInt::from(self.n), BigInt::from(self.d))
    }
}

/// Machine-word mirror of [`rational_arc_counts`].
fn frac_arc_counts(d: &LayeredDag, caps: &[Frac]) -> Option<Vec<Frac>> {
    let g = d.g();
    let mut n_plus = vec![Frac::ZERO; g.n()];
    let mut n_minus = vec![Frac::ZERO; g.n()];
    for &v in d.order().iter().rev() {
        if g.is_sink(v) {
            n_plus[v] = Frac::ONE;
            continue;
        }
        let mut acc = Frac::ZERO;
        for &a in g.out_arcs(v) {
            acc = acc.add(&n_plus[g.arc(a).head].mul(&caps[a])?)?;
        }
        n_plus[v] = acc;
    }
    for &v in d.order() {
        if g.is_source(v) {
            n_minus[v] = Frac::ONE;
            continue;
        }
        let mut acc = Frac::ZERO;
        for &a in g.in_arcs(v) {
            acc = acc.add(&n_minus[g.arc(a).tail].mul(&caps[a])?)?;
        }
        n_minus[v] = acc;
    }
    let mut out = Vec::with_capacity(g.m());
    for (i, a) in g.arcs().iter().enumerate() {
        if caps[i].is_zero() {
            out.push(Frac::ZERO);
        } else {
            out.push(n_minus[a.tail].mul(&n_plus[a.head])?);
        }
    }
    Some(out)
}

/// One saturation round in machine words. Some(true) progressed,
/// Some(false) means every count is zero, None means overflow with caps and
/// total untouched.
fn fast_round(d: &LayeredDag, caps: &mut Vec<Frac>, total: &mut Vec<Frac>) -> Option<bool> {
    let n_arc = frac_arc_counts(d, caps)?;
    let mut n_max = Frac::ZERO;
    for x in &n_arc {
        if x.cmp(&n_max)? != Ordering::Less {
            n_max = *x;
        }
    }
    if n_max.is_zero() {
        return Some(false);
    }
    let mut new_caps = caps.clone();
    let mut new_total = total.clone();
    for a in 0..caps.len() {
        if n_arc[a].is_zero() {
            continue;
        }
        let f_a = caps[a].mul(&n_arc[a])?.div(&n_max)?;
        new_caps[a] = caps[a].sub(&f_a)?;
        new_total[a] = total[a].add(&f_a)?;
    }
    *caps = new_caps;
    *total = new_total;
    Some(true)
}

/// One saturation round in arbitrary precision; false when every count is
/// zero.
fn big_round(d: &LayeredDag, caps: &mut [BigRational], total: &mut ArcFlow) -> bool {
    let n_arc = rational_arc_counts(d, caps);
    let n_max = match n_arc.iter().max() {
        Some(x) if !x.is_zero() => x.clone(),
        _ => return false,
    };
    for a in 0..caps.len() {
        if n_arc[a].is_zero() {
            continue;
        }
        let f_a = &caps[a] * &n_arc[a] / &n_max;
        caps[a] -= &f_a;
        total.f[a] += f_a;
    }
    true
}

/// Sum of per-step path-count flows f_a = U_a * n~_a / max n~_a on
/// shrinking residual capacities, where n~_a is the per-copy path count of
/// a (its own capacity divided out, so the step conserves flow at every
/// internal vertex). Output is a fractional blocking S-T flow. Each step
/// fully saturates the arcs attaining max n~_a, so at most m+1 steps run.
///
/// Rounds run in u128 fractions while they fit and demote exactly to
/// arbitrary precision on the first overflow, so the result never depends
/// on where the switch happens.
pub fn iterated_path_count_flow(d: &LayeredDag) -> ArcFlow {
    let g = d.g();
    let m = g.m();
    let mut fast: Option<(Vec<Frac>, Vec<Frac>)> = Some((
        g.arcs().iter().map(|a| Frac::from_u64(a.cap)).collect(),
        vec![Frac::ZERO; m],
    ));
    let mut big: Option<(Vec<BigRational>, ArcFlow)> = None;
    for _ in 0..=m {
        use crate::blocker::prof;
        prof::ROUNDS.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        if let Some((caps, total)) = &mut fast {
            let __t = std::time::Instant::now();
            let r = fast_round(d, caps, total);
            prof::add(&prof::IT_FAST, __t);
            match r {
                Some(true) => continue,
                Some(false) => break,
                None => {
                    prof::DEMOTES.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    big = Some((
                        caps.iter().map(Frac::to_bigrational).collect(),
                        ArcFlow {
                            f: total.iter().map(Frac::to_bigrational).collect(),
                        },
                    ));
                    fast = None;
                }
            }
        }
        let (caps, total) = big.as_mut().expect("demoted state present");
        let __t = std::time::Instant::now();
        let r = big_round(d, caps, total);
        prof::add(&prof::IT_BIG, __t);
        if !r {
            break;
        }
    }
    let total = match (fast, big) {
        (Some((_, total)), _) => ArcFlow {
            f: total.iter().map(Frac::to_bigrational).collect(),
        },
        (None, Some((_, total))) => total,
        (None, None) => unreachable!("one representation always holds the state"),
    };
    debug_assert!(is_blocking(d, &total));
    debug_assert!(lcflow_core::deficit(g, &total).1.is_zero());
    total
}

/// True iff some S-T path crosses only arcs with positive capacity in
/// `caps`. Matches `!path_counts(&d.with_caps(caps)).exhausted(..)` without
/// the bignum counting.
pub fn has_st_path(d: &LayeredDag, caps: &[u64]) -> bool {
    let g = d.g();
    let mut seen = vec![false; g.n()];
    let mut stack: Vec<Vertex> = Vec::new();
    for &s in g.sources() {
        if !seen[s] {
            seen[s] = true;
            stack.push(s);
        }
    }
    while let Some(v) = stack.pop() {
        if g.is_sink(v) {
            return true;
        }
        for &a in g.out_arcs(v) {
            if caps[a] == 0 {
                continue;
            }
            let u = g.arc(a).head;
            if !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    false
}

/// Draws ball counts and walks them through the capacity-weighted DAG;
/// returns the sampled paths before any disjointness filtering.
fn sample_ball_paths(
    d: &LayeredDag,
    pc: &PathCounts,
    delta: &BigUint,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<ArcId>> {
    // memory guard, never reached on sane schedules
    const BALL_CAP: u64 = 1 << 16;
    let g = d.g();
    let denom = delta * 64u32;
    let mut paths = Vec::new();
    for &s in g.sources() {
        let count = &pc.n_plus[s];
        if count.is_zero() {
            continue;
        }
        let balls: u64 = if count.bits() < 53 {
            let n = count.to_u64().unwrap();
            let p = match denom.to_f64() {
                Some(x) if x.is_finite() => (1.0 / x).min(1.0),
                _ => 0.0,
            };
            Binomial::new(n, p).map(|b| b.sample(rng)).unwrap_or(0)
        } else {
            let lam = BigRational::new(count.clone().into(), denom.clone().into())
                .to_f64()
                .unwrap_or(0.0)
                .min(BALL_CAP as f64);
            if lam > 0.0 {
                Poisson::new(lam).map(|p| p.sample(rng) as u64).unwrap_or(0)
            } else {
                0
            }
        };
        for _ in 0..balls.min(BALL_CAP) {
            // one ball: at v pick an out-arc with probability
            // U_a * n_plus[head] / n_plus[v]
            let mut v = s;
            let mut path = Vec::new();
            while !g.is_sink(v) {
                let mut r = rng.gen_biguint_below(&pc.n_plus[v]);
                let mut chosen = None;
                for &a in g.out_arcs(v) {
                    let arc = g.arc(a);
                    let wt = &pc.n_plus[arc.head] * arc.cap;
                    if r < wt {
                        chosen = Some(a);
                        break;
                    }
                    r -= wt;
                }
                let a = chosen.expect("weights sum to n_plus[v]");
                path.push(a);
                v = g.arc(a).head;
            }
            paths.push(path);
        }
    }
    paths
}

/// One sampling round: balls drawn at rate 1/(64*delta), walked to T, and
/// only the paths that collide with no other sampled path on any arc are
/// kept. The result is an integral feasible S-T flow with values in {0,1}.
pub fn sampled_integral_flow(d: &LayeredDag, delta: &BigUint, seed: u64) -> ArcFlow {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pc = path_counts(d);
    sampled_with_rng(d, &pc, delta, &mut rng)
}

fn sampled_with_rng(
    d: &LayeredDag,
    pc: &PathCounts,
    delta: &BigUint,
    rng: &mut ChaCha8Rng,
) -> ArcFlow {
    let g = d.g();
    let paths = sample_ball_paths(d, pc, delta, rng);
    let mut usage = vec![0u32; g.m()];
    for p in &paths {
        for &a in p {
            usage[a] = usage[a].saturating_add(1);
        }
    }
    let mut f = vec![0u64; g.m()];
    for p in &paths {
        if p.iter().all(|&a| usage[a] == 1) {
            for &a in p {
                f[a] = 1;
            }
        }
    }
    ArcFlow::from_integers(&f)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockingMode {
    Deterministic,
    Randomized(u64),
}

/// Integral blocking S-T flow. Deterministic mode alternates the iterated
/// path-count flow with rounding; randomized mode runs the sampling
/// schedule with halving delta. Both terminate on the blocking test itself;
/// the iteration caps only guard against implementation bugs.
pub fn blocking_integral_flow(d: &LayeredDag, mode: BlockingMode) -> Result<ArcFlow, LayeredError> {
    let g = d.g();
    let m = g.m();
    let u_max = g.max_cap();
    let h = d.max_layer().max(1) as u64;
    let cap_iters = 64 * h * ceil_log2(m as u128 * u_max as u128 + 2);
    let mut caps: Vec<u64> = g.arcs().iter().map(|a| a.cap).collect();
    let mut total = vec![0u64; m];

    match mode {
        BlockingMode::Deterministic => {
            use crate::blocker::prof;
            let mut done = false;
            for _ in 0..cap_iters {
                let __t = std::time::Instant::now();
                let go = has_st_path(d, &caps);
                prof::add(&prof::BF_REACH, __t);
                if !go {
                    done = true;
                    break;
                }
                let __t = std::time::Instant::now();
                let dres = d.with_caps(&caps);
                prof::add(&prof::BF_CLONE, __t);
                let __t = std::time::Instant::now();
                let frac = iterated_path_count_flow(&dres);
                prof::add(&prof::BF_ITER, __t);
                let half = BigRational::new(1.into(), 2.into());
                let __t = std::time::Instant::now();
                let rounded = crate::rounding::round_flow(&dres, &frac, &half)
                    .expect("iterated flow is feasible");
                prof::add(&prof::BF_ROUND, __t);
                let mut gained = 0u64;
                for a in 0..m {
                    let x = rounded.f[a]
                        .to_integer()
                        .to_u64()
                        .expect("bounded by capacity");
                    total[a] += x;
                    caps[a] -= x;
                    gained += x;
                }
                // progress is certain: the residual optimum is >= 1, the
                // fractional value >= opt/h, and rounding keeps half of it
                debug_assert!(gained > 0);
                if gained == 0 {
                    return Err(LayeredError::IterationCap {
                        op: "blocking_integral_flow(det)",
                    });
                }
            }
            if !done && has_st_path(d, &caps) {
                return Err(LayeredError::IterationCap {
                    op: "blocking_integral_flow(det)",
                });
            }
        }
        BlockingMode::Randomized(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let reps = (4 * h * ceil_log2(g.n() as u128 + 2) * ceil_log2(u_max as u128 + 2)).max(1);
            let base = BigUint::from(g.n() as u64) * BigUint::from(u_max);
            let mut delta = if base.is_zero() {
                BigUint::one()
            } else {
                let mut x = BigUint::one();
                for _ in 0..h {
                    x *= &base;
                }
                x
            };
            let mut dres = d.with_caps(&caps);
            let mut pc = path_counts(&dres);
            let mut floor_rounds = 0u64;
            'outer: loop {
                for _ in 0..reps {
                    if pc.exhausted(&dres) {
                        break 'outer;
                    }
                    let f = sampled_with_rng(&dres, &pc, &delta, &mut rng);
                    let mut changed = false;
                    for a in 0..m {
                        let x = f.f[a].to_integer().to_u64().unwrap();
                        if x > 0 {
                            total[a] += x;
                            caps[a] -= x;
                            changed = true;
                        }
                    }
                    if changed {
                        dres = d.with_caps(&caps);
                        pc = path_counts(&dres);
                    }
                }
                if delta.is_one() {
                    floor_rounds += reps;
                    if floor_rounds > cap_iters * 64 {
                        if pc.exhausted(&dres) {
                            break;
                        }
                        return Err(LayeredError::IterationCap {
                            op: "blocking_integral_flow(rand)",
                        });
                    }
                } else {
                    delta >>= 1;
                }
            }
        }
    }
    let out = ArcFlow::from_integers(&total);
    debug_assert!(is_blocking(d, &out));
    Ok(out)
}

/// Removes deficit from an integral flow: an ascending-layer sweep trims
/// out-arc excess, a descending one trims in-arc excess. Within a vertex
/// arcs are trimmed by descending index, so later-added branches go first.
/// The value drops by at most the total deficit.
pub fn extract_st_subflow(d: &LayeredDag, f: &ArcFlow) -> ArcFlow {
    let g = d.g();
    let mut out = f.clone();
    let balance = |out: &ArcFlow, v: Vertex| -> (BigRational, BigRational) {
        let mut inn = BigRational::zero();
        for &a in g.in_arcs(v) {
            inn += &out.f[a];
        }
        let mut o = BigRational::zero();
        for &a in g.out_arcs(v) {
            o += &out.f[a];
        }
        (inn, o)
    };
    for &v in d.order() {
        if g.is_source(v) || g.is_sink(v) {
            continue;
        }
        let (inn, o) = balance(&out, v);
        if o > inn {
            let mut excess = o - inn;
            for &a in g.out_arcs(v).iter().rev() {
                if excess.is_zero() {
                    break;
                }
                let take = out.f[a].clone().min(excess.clone());
                out.f[a] -= &take;
                excess -= take;
            }
        }
    }
    for &v in d.order().iter().rev() {
        if g.is_source(v) || g.is_sink(v) {
            continue;
        }
        let (inn, o) = balance(&out, v);
        if inn > o {
            let mut excess = inn - o;
            for &a in g.in_arcs(v).iter().rev() {
                if excess.is_zero() {
                    break;
                }
                let take = out.f[a].clone().min(excess.clone());
                out.f[a] -= &take;
                excess -= take;
            }
        }
    }
    debug_assert!(lcflow_core::deficit(g, &out).1.is_zero());
    out
}

/// True iff every S-T path crosses a saturated arc: no sink is reachable
/// from S over arcs with f_a < U_a.
pub fn is_blocking(d: &LayeredDag, f: &ArcFlow) -> bool {
    let g = d.g();
    let mut seen = vec![false; g.n()];
    let mut stack: Vec<Vertex> = g.sources().to_vec();
    for &s in g.sources() {
        seen[s] = true;
    }
    while let Some(v) = stack.pop() {
        if g.is_sink(v) {
            return false;
        }
        for &a in g.out_arcs(v) {
            let arc = g.arc(a);
            let open = f.f[a] < BigRational::from_integer(arc.cap.into());
            if open && !seen[arc.head] {
                seen[arc.head] = true;
                stack.push(arc.head);
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use lcflow_core::Arc;

    fn arc(tail: Vertex, head: Vertex, cap: u64) -> Arc {
        Arc {
            tail,
            head,
            cap,
            len: 1,
        }
    }

    fn diamond() -> LayeredDag {
        // s=0 -> {1,2} -> t=3, unit caps
        let g = Digraph::new(
            4,
            vec![arc(0, 1, 1), arc(0, 2, 1), arc(1, 3, 1), arc(2, 3, 1)],
            vec![0],
            vec![3],
        )
        .unwrap();
        validate_layered_dag(g).unwrap()
    }

    #[test]
    fn diamond_has_three_layers() {
        let d = diamond();
        assert_eq!(d.max_layer(), 2);
        assert_eq!(d.layer(0), 0);
        assert_eq!(d.layer(1), 1);
        assert_eq!(d.layer(3), 2);
    }

    #[test]
    fn cycle_is_rejected() {
        let g = Digraph::new(
            4,
            vec![arc(0, 1, 1), arc(1, 2, 1), arc(2, 1, 1), arc(2, 3, 1)],
            vec![0],
            vec![3],
        )
        .unwrap();
        assert_eq!(validate_layered_dag(g).unwrap_err(), LayeredError::Cycle);
    }

    #[test]
    fn skip_arcs_are_accepted() {
        // 0 -> 1 -> 2 -> 3 plus skip 0 -> 2
        let g = Digraph::new(
            4,
            vec![arc(0, 1, 1), arc(1, 2, 1), arc(2, 3, 1), arc(0, 2, 1)],
            vec![0],
            vec![3],
        )
        .unwrap();
        let d = validate_layered_dag(g).unwrap();
        assert_eq!(d.layer(2), 2);
        assert_eq!(d.max_layer(), 3);
    }

    #[test]
    fn degree_conditions_are_checked() {
        // internal vertex 1 with no in-arcs
        let g = Digraph::new(3, vec![arc(1, 2, 1), arc(0, 2, 1)], vec![0], vec![2]).unwrap();
        assert_eq!(
            validate_layered_dag(g).unwrap_err(),
            LayeredError::MissingInArcs { v: 1 }
        );
        // sink with an out-arc
        let g = Digraph::new(
            3,
            vec![arc(0, 1, 1), arc(1, 2, 1), arc(1, 0, 1)],
            vec![0],
            vec![1],
        )
        .unwrap();
        assert!(matches!(
            validate_layered_dag(g).unwrap_err(),
            LayeredError::SinkHasOutArcs { v: 1 } | LayeredError::SourceHasInArcs { v: 0 }
        ));
    }

    #[test]
    fn counts_single_arc_cap7() {
        let g = Digraph::new(2, vec![arc(0, 1, 7)], vec![0], vec![1]).unwrap();
        let d = validate_layered_dag(g).unwrap();
        let pc = path_counts(&d);
        assert_eq!(pc.n_arc[0], BigUint::from(7u32));
        assert_eq!(pc.n_plus[0], BigUint::from(7u32));
    }

    #[test]
    fn counts_diamond_unit() {
        let d = diamond();
        let pc = path_counts(&d);
        assert_eq!(pc.n_plus[0], BigUint::from(2u32));
        for a in 0..4 {
            assert_eq!(pc.n_arc[a], BigUint::one());
        }
    }

    #[test]
    fn counts_weighted_parallel_paths() {
        // s->a cap 2, a->t cap 3; s->b cap 1, b->t cap 1
        let g = Digraph::new(
            4,
            vec![arc(0, 1, 2), arc(1, 3, 3), arc(0, 2, 1), arc(2, 3, 1)],
            vec![0],
            vec![3],
        )
        .unwrap();
        let d = validate_layered_dag(g).unwrap();
        let pc = path_counts(&d);
        assert_eq!(pc.n_plus[0], BigUint::from(7u32));
    }

    #[test]
    fn iterated_flow_single_arc() {
        let g = Digraph::new(2, vec![arc(0, 1, 1)], vec![0], vec![1]).unwrap();
        let d = validate_layered_dag(g).unwrap();
        let f = iterated_path_count_flow(&d);
        assert_eq!(f.f[0], BigRational::one());
    }

    #[test]
    fn iterated_flow_diamond() {
        let d = diamond();
        let f = iterated_path_count_flow(&d);
        for a in 0..4 {
            assert_eq!(f.f[a], BigRational::one());
        }
        assert!(is_blocking(&d, &f));
    }

    #[test]
    fn iterated_flow_blocks_uneven_caps() {
        // s->a cap 3, a->t cap 1: bottleneck 1
        let g = Digraph::new(3, vec![arc(0, 1, 3), arc(1, 2, 1)], vec![0], vec![2]).unwrap();
        let d = validate_layered_dag(g).unwrap();
        let f = iterated_path_count_flow(&d);
        assert!(is_blocking(&d, &f));
        let (_, total) = lcflow_core::deficit(d.g(), &f);
        assert!(total.is_zero());
        assert_eq!(f.f[1], BigRational::one());
    }

    #[test]
    fn sampled_flow_no_path_is_zero() {
        // zero-capacity arc: count is 0, nothing to sample
        let g = Digraph::new(2, vec![arc(0, 1, 0)], vec![0], vec![1]).unwrap();
        let d = validate_layered_dag(g).unwrap();
        let f = sampled_integral_flow(&d, &BigUint::one(), 42);
        assert!(f.f[0].is_zero());
    }

    #[test]
    fn sampled_flow_single_path_is_zero_or_one() {
        let g = Digraph::new(3, vec![arc(0, 1, 1), arc(1, 2, 1)], vec![0], vec![2]).unwrap();
        let d = validate_layered_dag(g).unwrap();
        let f = sampled_integral_flow(&d, &BigUint::one(), 42);
        assert_eq!(f.f[0], f.f[1]);
        assert!(f.f[0].is_zero() || f.f[0].is_one());
    }

    #[test]
    fn sampled_flow_is_always_feasible() {
        let d = diamond();
        for seed in 0..200 {
            let f = sampled_integral_flow(&d, &BigUint::one(), seed);
            for a in 0..4 {
                assert!(f.f[a] <= BigRational::one());
            }
            let (_, total) = lcflow_core::deficit(d.g(), &f);
            assert!(total.is_zero(), "seed {seed}");
        }
    }

    #[test]
    fn blocking_flow_single_arc() {
        let g = Digraph::new(2, vec![arc(0, 1, 1)], vec![0], vec![1]).unwrap();
        let d = validate_layered_dag(g).unwrap();
        for mode in [BlockingMode::Deterministic, BlockingMode::Randomized(7)] {
            let f = blocking_integral_flow(&d, mode).unwrap();
            assert_eq!(f.f[0], BigRational::one());
        }
    }

    #[test]
    fn blocking_flow_diamond_value_two() {
        let d = diamond();
        for mode in [BlockingMode::Deterministic, BlockingMode::Randomized(3)] {
            let f = blocking_integral_flow(&d, mode).unwrap();
            assert_eq!(f.value(d.g()), BigRational::from_integer(2.into()));
            assert!(is_blocking(&d, &f));
        }
    }

    #[test]
    fn extract_passes_clean_flow_through() {
        let d = diamond();
        let f = ArcFlow::from_integers(&[1, 1, 1, 1]);
        let out = extract_st_subflow(&d, &f);
        assert_eq!(out, f);
    }

    #[test]
    fn extract_trims_dangling_arc() {
        // s->a->t plus dangling a->b, b internal with escape arc b->t of
        // flow 0 is not allowed by layering (b would need in and out arcs),
        // so use: s=0, a=1, b=2, t=3; arcs 0->1 (f1), 1->3 (f1), 1->2 (f1), 2->3 (f0)
        let g = Digraph::new(
            4,
            vec![arc(0, 1, 2), arc(1, 3, 1), arc(1, 2, 1), arc(2, 3, 1)],
            vec![0],
            vec![3],
        )
        .unwrap();
        let d = validate_layered_dag(g).unwrap();
        let f = ArcFlow::from_integers(&[1, 1, 1, 0]);
        let out = extract_st_subflow(&d, &f);
        assert_eq!(out.f[2], BigRational::zero());
        assert_eq!(out.value(d.g()), BigRational::one());
    }

    #[test]
    fn extract_zeroes_lone_internal_arc() {
        let g = Digraph::new(
            4,
            vec![arc(0, 1, 1), arc(1, 2, 1), arc(2, 3, 1)],
            vec![0],
            vec![3],
        )
        .unwrap();
        let d = validate_layered_dag(g).unwrap();
        let f = ArcFlow::from_integers(&[0, 1, 0]);
        let out = extract_st_subflow(&d, &f);
        assert!(out.f.iter().all(|x| x.is_zero()));
    }

    #[test]
    fn blocking_test_cases() {
        let d = diamond();
        assert!(!is_blocking(&d, &ArcFlow::zero(4)));
        assert!(is_blocking(&d, &ArcFlow::from_integers(&[1, 1, 1, 1])));
        // one path saturated, the other open
        assert!(!is_blocking(&d, &ArcFlow::from_integers(&[1, 0, 1, 0])));
        // blocking at the arc level without full saturation of both paths
        assert!(is_blocking(&d, &ArcFlow::from_integers(&[1, 0, 0, 1])));
    }
}
