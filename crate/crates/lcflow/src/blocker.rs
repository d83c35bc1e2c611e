//! Length-weight expanded DAGs, flow decongestion, and h-length lightest
//! path blockers.
//!
//! Given per-arc weights w and a level lambda at most the h-length lightest
//! S-T distance, the blocker returns an integral h-length S-T flow whose
//! support paths weigh at most (1+2*eps)*lambda and that saturates an arc
//! on every S-T path of length at most h and weight at most
//! (1+eps)*lambda.

use crate::decompose::sparse_decompose;
use crate::layered::{
    blocking_integral_flow, has_st_path, validate_layered_dag, BlockingMode, LayeredDag,
    LayeredError,
};
use crate::util::ceil_log2;
use lcflow_core::{
    h_length_distance, Arc, ArcId, Digraph, IntegralFlow, MovingCut, PathEntry, PathFlow,
    ScaledReal, Vertex, REL_TOL,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlockerError {
    /// lambda lies above the current h-length lightest distance.
    LambdaAboveDistance,
    /// decongest input exceeds some capacity by more than alpha.
    NotCongested { arc: ArcId },
    /// safety iteration cap exceeded; indicates an implementation bug.
    IterationCap,
    /// bubbled up from the blocking-flow subroutine.
    Layered(LayeredError),
}

impl fmt::Display for BlockerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockerError::LambdaAboveDistance => {
                write!(f, "lambda exceeds the h-length lightest distance")
            }
            BlockerError::NotCongested { arc } => {
                write!(f, "arc {arc} is over capacity by more than alpha")
            }
            BlockerError::IterationCap => write!(f, "path blocker: iteration cap exceeded"),
            BlockerError::Layered(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for BlockerError {}

impl From<LayeredError> for BlockerError {
    fn from(e: LayeredError) -> Self {
        BlockerError::Layered(e)
    }
}

/// Arc weights rounded up to the grid of multiples of g = (eps/h)*lambda,
/// stored as integer grid indices. Indices are exact for every arc that can
/// appear in the expanded DAG; far heavier arcs saturate toward u64::MAX.
#[derive(Clone, Debug)]
pub struct RoundedWeights {
    grid: ScaledReal,
    idx: Vec<u64>,
    i_max: u64,
}

impl RoundedWeights {
    /// Grid granularity g = (eps/h)*lambda.
    pub fn grid(&self) -> ScaledReal {
        self.grid
    }

    /// Grid index of arc a, so the rounded weight is index(a) * grid().
    pub fn index(&self, a: ArcId) -> u64 {
        self.idx[a]
    }

    /// Largest weight index kept in the expanded DAG:
    /// floor((1+2*eps)*h/eps), the number of grid steps in (1+2*eps)*lambda.
    pub fn max_index(&self) -> u64 {
        self.i_max
    }

    /// Rounded weight of arc a.
    pub fn weight(&self, a: ArcId) -> ScaledReal {
        self.grid.mul_u64(self.idx[a])
    }

    /// All rounded weights as a cut (diagnostic view).
    pub fn as_cut(&self) -> MovingCut {
        MovingCut {
            w: (0..self.idx.len()).map(|a| self.weight(a)).collect(),
        }
    }
}

/// Rounds every weight up to the nearest multiple of g = (eps/h)*lambda.
/// Weights already on a multiple (within relative tolerance) stay put, so
/// w_a <= w~_a <= w_a + g.
pub fn round_weights(w: &MovingCut, eps: f64, lambda: ScaledReal, h: u64) -> RoundedWeights {
    assert!(eps > 0.0 && eps <= 1.0, "eps must be in (0, 1]");
    assert!(h >= 1, "h must be at least 1");
    assert!(
        !lambda.is_zero() && lambda.is_finite(),
        "lambda must be positive and finite"
    );
    let grid = lambda.mul(&ScaledReal::from_f64(eps / h as f64));
    let idx = w.w.iter().map(|x| grid_index(x, &grid)).collect();
    RoundedWeights {
        grid,
        idx,
        i_max: max_weight_index(eps, h),
    }
}

/// floor((1+2*eps)*h/eps), nudging near-integers up so that f64 noise in
/// eps never loses the last grid step.
fn max_weight_index(eps: f64, h: u64) -> u64 {
    let x = (1.0 + 2.0 * eps) * h as f64 / eps;
    (x * (1.0 + 1e-12) + 1e-9).floor() as u64
}

/// ceil(x/grid) where values within relative tolerance of a multiple stay
/// on it. Exponents are differenced exactly, so the ratio is accurate even
/// when both inputs sit thousands of binary orders below one.
fn grid_index(x: &ScaledReal, grid: &ScaledReal) -> u64 {
    if x.is_zero() {
        return 0;
    }
    if x.is_infinite() {
        return u64::MAX;
    }
    let de = x.exponent() - grid.exponent();
    if de >= 64 {
        return u64::MAX;
    }
    if de < -64 {
        return 1;
    }
    let lr = de as f64 + (x.significand().log2() - grid.significand().log2());
    let ratio = lr.exp2();
    ((ratio * (1.0 - REL_TOL)).ceil() as u64).max(1)
}

/// One surviving vertex copy: the original vertex, the accumulated rounded
/// weight in grid units, and the accumulated length.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CopyVertex {
    pub orig: Vertex,
    pub weight_index: u64,
    pub layer: u64,
}

/// The grid DAG over vertex copies v(x, h'): weight index x counts grid
/// steps and h' is the exact length used to reach the copy. An arc copy
/// v(x, h') -> u(x + w~_a, h' + l_a) exists iff both endpoints stay inside
/// the grid, and only copies on a source-to-sink path survive pruning.
#[derive(Clone, Debug)]
pub struct ExpandedDag {
    dag: LayeredDag,
    rounded: RoundedWeights,
    orig_arc: Vec<ArcId>,
    copies: Vec<Vec<ArcId>>,
    copy_vertex: Vec<CopyVertex>,
    state_id: HashMap<(Vertex, u64, u64), Vertex>,
    kappa: BigRational,
}

impl ExpandedDag {
    pub fn dag(&self) -> &LayeredDag {
        &self.dag
    }

    pub fn rounded(&self) -> &RoundedWeights {
        &self.rounded
    }

    /// Original arc that expanded arc a is a copy of.
    pub fn original_arc(&self, a: ArcId) -> ArcId {
        self.orig_arc[a]
    }

    /// All surviving copies of original arc a.
    pub fn arc_copies(&self, a: ArcId) -> &[ArcId] {
        &self.copies[a]
    }

    pub fn copy_vertex(&self, v: Vertex) -> CopyVertex {
        self.copy_vertex[v]
    }

    /// Copy id of (orig, weight index, layer) when it survived pruning.
    pub fn copy_id(&self, orig: Vertex, weight_index: u64, layer: u64) -> Option<Vertex> {
        self.state_id.get(&(orig, weight_index, layer)).copied()
    }

    /// Copy-capacity threshold kappa = h*(h/eps + 2h).
    pub fn kappa(&self) -> &BigRational {
        &self.kappa
    }

    /// True when pruning removed everything.
    pub fn is_empty(&self) -> bool {
        self.copy_vertex.is_empty()
    }

    /// The expanded arc ids of the copy of an original path, when the whole
    /// chain survived pruning. The copy starts at weight index 0, layer 0.
    pub fn copy_of_path(&self, g: &Digraph, arcs: &[ArcId]) -> Option<Vec<ArcId>> {
        let mut cur = (g.arc(*arcs.first()?).tail, 0u64, 0u64);
        let mut cur_id = self.copy_id(cur.0, cur.1, cur.2)?;
        let mut out = Vec::with_capacity(arcs.len());
        for &a in arcs {
            let arc = g.arc(a);
            let next = (arc.head, cur.1 + self.rounded.index(a), cur.2 + arc.len);
            let next_id = self.copy_id(next.0, next.1, next.2)?;
            let copy = self.copies[a]
                .iter()
                .copied()
                .find(|&ca| self.dag.g().arc(ca).tail == cur_id)?;
            debug_assert_eq!(self.dag.g().arc(copy).head, next_id);
            out.push(copy);
            cur = next;
            cur_id = next_id;
        }
        Some(out)
    }
}

/// Copy-capacity threshold kappa = h*(h/eps + 2h).
fn kappa_value(eps: f64, h: u64) -> BigRational {
    let e = BigRational::from_float(eps).expect("finite eps");
    let hr = BigRational::from_integer(h.into());
    &hr * (&hr / e + BigRational::from_integer(2.into()) * &hr)
}

fn tol_rat() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(1_000_000_000u64))
}

/// floor with a relative tolerance so near-integers land on the integer.
fn floor_tol(x: &BigRational) -> BigInt {
    debug_assert!(!x.is_negative());
    (x + x * tol_rat()).floor().to_integer()
}

/// Largest integer capacity still treated as low, i.e. the largest u with
/// u <= kappa * (1 + tol). Hoisted out of copy_cap so the per-arc test is a
/// machine compare.
fn unit_cap_max(kappa: &BigRational) -> u64 {
    (kappa * (BigRational::one() + tol_rat()))
        .floor()
        .to_integer()
        .to_u64()
        .unwrap_or(u64::MAX)
}

/// Copy capacity: low-capacity arcs (0 < U <= kappa) get unit copies, high
/// ones spread U over kappa copies.
fn copy_cap(u: u64, unit_max: u64, kappa: &BigRational) -> u64 {
    if u == 0 {
        return 0;
    }
    if u <= unit_max {
        1
    } else {
        let ur = BigRational::from_integer(u.into());
        floor_tol(&(ur / kappa)).to_u64().unwrap_or(u64::MAX)
    }
}

/// Builds the pruned grid DAG for g under the rounded weights. Sources are
/// the copies s(0, 0); sinks are every surviving copy of T. Arcs out of T
/// are not copied, so sink copies never continue.
pub fn build_expanded_dag(
    g: &Digraph,
    w: &MovingCut,
    h: u64,
    lambda: ScaledReal,
    eps: f64,
) -> ExpandedDag {
    let rounded = round_weights(w, eps, lambda, h);
    let kappa = kappa_value(eps, h);
    let i_max = rounded.max_index();
    let rows = h + 1;
    let per_vertex = ((i_max + 1) * rows) as usize;
    let n_states = g.n() * per_vertex;
    assert!(n_states <= 1 << 28, "expanded DAG would be too large");
    let flat = |v: Vertex, i: u64, l: u64| v * per_vertex + (i * rows + l) as usize;

    // forward sweep from the zero copies of S
    let mut fwd = vec![false; n_states];
    let mut stack: Vec<(Vertex, u64, u64)> = Vec::new();
    for &s in g.sources() {
        if !fwd[flat(s, 0, 0)] {
            fwd[flat(s, 0, 0)] = true;
            stack.push((s, 0, 0));
        }
    }
    while let Some((v, i, l)) = stack.pop() {
        if g.is_sink(v) {
            continue;
        }
        for &a in g.out_arcs(v) {
            let d = rounded.index(a);
            let arc = g.arc(a);
            if d > i_max - i || arc.len > h - l {
                continue;
            }
            let id = flat(arc.head, i + d, l + arc.len);
            if !fwd[id] {
                fwd[id] = true;
                stack.push((arc.head, i + d, l + arc.len));
            }
        }
    }

    // backward sweep from the reachable copies of T; forward reachability
    // is closed under outgoing arcs, so staying inside fwd loses nothing
    let mut bwd = vec![false; n_states];
    for &t in g.sinks() {
        for i in 0..=i_max {
            for l in 0..=h {
                let id = flat(t, i, l);
                if fwd[id] {
                    bwd[id] = true;
                    stack.push((t, i, l));
                }
            }
        }
    }
    while let Some((v, i, l)) = stack.pop() {
        for &a in g.in_arcs(v) {
            let arc = g.arc(a);
            if g.is_sink(arc.tail) {
                continue;
            }
            let d = rounded.index(a);
            if d > i || arc.len > l {
                continue;
            }
            let id = flat(arc.tail, i - d, l - arc.len);
            if fwd[id] && !bwd[id] {
                bwd[id] = true;
                stack.push((arc.tail, i - d, l - arc.len));
            }
        }
    }

    // surviving copies in (vertex, weight, layer) order; flat_id mirrors
    // state_id for sentinel-checked lookups in the arc loop below
    let mut state_id = HashMap::new();
    let mut flat_id = vec![u32::MAX; n_states];
    let mut copy_vertex = Vec::new();
    for v in 0..g.n() {
        for i in 0..=i_max {
            for l in 0..=h {
                if fwd[flat(v, i, l)] && bwd[flat(v, i, l)] {
                    state_id.insert((v, i, l), copy_vertex.len());
                    flat_id[flat(v, i, l)] = copy_vertex.len() as u32;
                    copy_vertex.push(CopyVertex {
                        orig: v,
                        weight_index: i,
                        layer: l,
                    });
                }
            }
        }
    }

    let unit_max = unit_cap_max(&kappa);
    let mut arcs = Vec::new();
    let mut orig_arc = Vec::new();
    let mut copies = vec![Vec::new(); g.m()];
    for (tail_id, cv) in copy_vertex.iter().enumerate() {
        if g.is_sink(cv.orig) {
            continue;
        }
        for &a in g.out_arcs(cv.orig) {
            let d = rounded.index(a);
            let arc = g.arc(a);
            if d > i_max - cv.weight_index || arc.len > h - cv.layer {
                continue;
            }
            let head_id = flat_id[flat(arc.head, cv.weight_index + d, cv.layer + arc.len)];
            if head_id != u32::MAX {
                copies[a].push(arcs.len());
                orig_arc.push(a);
                arcs.push(Arc {
                    tail: tail_id,
                    head: head_id as usize,
                    cap: copy_cap(arc.cap, unit_max, &kappa),
                    len: arc.len,
                });
            }
        }
    }
    for (a, c) in copies.iter().enumerate() {
        // per-arc copy count: one start layer per unit of length headroom
        // and one weight column per unit of weight headroom
        if rounded.index(a) >= 1 {
            debug_assert!(c.len() as u64 <= i_max.saturating_mul(h));
        }
    }

    let sources: Vec<Vertex> = g
        .sources()
        .iter()
        .filter_map(|&s| state_id.get(&(s, 0, 0)).copied())
        .collect();
    let sinks: Vec<Vertex> = copy_vertex
        .iter()
        .enumerate()
        .filter(|(_, cv)| g.is_sink(cv.orig))
        .map(|(i, _)| i)
        .collect();
    let xg = Digraph::new(copy_vertex.len(), arcs, sources, sinks)
        .expect("expanded graph is well formed");
    let dag = validate_layered_dag(xg).expect("expanded graph is layered by construction");
    ExpandedDag {
        dag,
        rounded,
        orig_arc,
        copies,
        copy_vertex,
        state_id,
        kappa,
    }
}

/// Thins an integral path flow down to capacity feasibility. Two support
/// paths conflict when they share an arc whose aggregate flow exceeds its
/// capacity; a greedy weighted independent set over the conflict graph
/// (value descending, insertion order on ties) keeps at least a
/// 1/(maxdeg+1) fraction of the total value, which is 1/(alpha*h+1) for
/// alpha-congested h-length input. Paths too heavy for an over-capacity
/// arc on their own are never selected, so the output is always feasible.
///
/// The selected paths come back as a single component in input order.
pub fn decongest(g: &Digraph, f: &PathFlow, alpha: u64) -> Result<PathFlow, BlockerError> {
    assert!(f.eta.is_integer(), "decongest needs an integral path flow");
    let m = g.m();
    // eta is a small integer here, so eta * mult versus a u64 bound runs in
    // machine words; the checked fallback keeps the comparison exact
    let eta_int = f.eta.to_integer();
    let eta_u = eta_int.to_u128();
    let value_gt = |mult: u128, bound: u64| -> bool {
        match eta_u.and_then(|e| e.checked_mul(mult)) {
            Some(v) => v > bound as u128,
            None => &eta_int * BigInt::from(mult) > BigInt::from(bound),
        }
    };
    let mut over = vec![false; m];
    for a in 0..m {
        let mult = f.agg_mult(a);
        if value_gt(mult, g.arc(a).cap) {
            if value_gt(mult, alpha) {
                return Err(BlockerError::NotCongested { arc: a });
            }
            over[a] = true;
        }
    }
    let entries: Vec<&PathEntry> = f.components.iter().flat_map(|c| c.paths.iter()).collect();
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&x, &y| entries[y].mult.cmp(&entries[x].mult).then(x.cmp(&y)));
    let mut used = vec![false; m];
    let mut keep = vec![false; entries.len()];
    for &i in &order {
        let e = entries[i];
        let ok = e
            .arcs
            .iter()
            .all(|&a| !over[a] || (!used[a] && !value_gt(e.mult as u128, g.arc(a).cap)));
        if !ok {
            continue;
        }
        keep[i] = true;
        for &a in &e.arcs {
            if over[a] {
                used[a] = true;
            }
        }
    }
    let kept: Vec<PathEntry> = entries
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(e, _)| (*e).clone())
        .collect();
    let out = PathFlow::with_components(f.eta.clone(), vec![IntegralFlow { paths: kept }], m);
    debug_assert!(
        (0..m).all(|a| out.arc_value(a) <= BigRational::from_integer(g.arc(a).cap.into()))
    );
    Ok(out)
}

/// Blocker output: a purely integral path flow together with the level and
/// accuracy it was built against.
#[derive(Clone, Debug)]
pub struct BlockerFlow {
    pub flow: PathFlow,
    pub lambda: ScaledReal,
    pub eps: f64,
}

pub mod prof {
    use std::sync::atomic::{AtomicU64, Ordering};
    use std::time::Instant;
    pub static PROBE: AtomicU64 = AtomicU64::new(0);
    pub static BUILD: AtomicU64 = AtomicU64::new(0);
    pub static REACH: AtomicU64 = AtomicU64::new(0);
    pub static CLONE: AtomicU64 = AtomicU64::new(0);
    pub static BLOCKFLOW: AtomicU64 = AtomicU64::new(0);
    pub static SPARSE: AtomicU64 = AtomicU64::new(0);
    pub static DECONGEST: AtomicU64 = AtomicU64::new(0);
    pub static UPDATE: AtomicU64 = AtomicU64::new(0);
    pub static BF_REACH: AtomicU64 = AtomicU64::new(0);
    pub static BF_CLONE: AtomicU64 = AtomicU64::new(0);
    pub static BF_ITER: AtomicU64 = AtomicU64::new(0);
    pub static BF_ROUND: AtomicU64 = AtomicU64::new(0);
    pub static IT_FAST: AtomicU64 = AtomicU64::new(0);
    pub static IT_BIG: AtomicU64 = AtomicU64::new(0);
    pub static ROUNDS: AtomicU64 = AtomicU64::new(0);
    pub static DEMOTES: AtomicU64 = AtomicU64::new(0);
    pub fn add(c: &AtomicU64, t: Instant) {
        c.fetch_add(t.elapsed().as_nanos() as u64, Ordering::Relaxed);
    }
    pub fn report() -> String {
        let ms = |c: &AtomicU64| c.load(Ordering::Relaxed) as f64 / 1e6;
        format!(
            "probe={:.0} build={:.0} reach={:.0} clone={:.0} blockflow={:.0} sparse={:.0} decongest={:.0} update={:.0} | bf_reach={:.0} bf_clone={:.0} bf_iter={:.0} bf_round={:.0} | it_fast={:.0} it_big={:.0} rounds={} demotes={}",
            ms(&PROBE), ms(&BUILD), ms(&REACH), ms(&CLONE), ms(&BLOCKFLOW), ms(&SPARSE),
            ms(&DECONGEST), ms(&UPDATE), ms(&BF_REACH), ms(&BF_CLONE), ms(&BF_ITER),
            ms(&BF_ROUND), ms(&IT_FAST), ms(&IT_BIG),
            ROUNDS.load(Ordering::Relaxed), DEMOTES.load(Ordering::Relaxed),
        )
    }
}

/// Safety cap on total drain iterations: 64 * h^7 / eps^2 * ceil(log2 n)^2.
fn iteration_cap(n: usize, h: u64, eps: f64) -> u128 {
    let lg = ceil_log2(n.max(2) as u128).max(1);
    (64.0 * (h as f64).powi(7) / (eps * eps) * (lg * lg) as f64).ceil() as u128
}

/// Cuts the loops out of a walk: whenever the walk returns to an earlier
/// vertex the detour in between is dropped. Weight and length only shrink.
fn splice_simple(g: &Digraph, walk: &[ArcId]) -> Vec<ArcId> {
    let mut path: Vec<ArcId> = Vec::new();
    let mut visited: Vec<Vertex> = vec![g.arc(walk[0]).tail];
    for &a in walk {
        let head = g.arc(a).head;
        if let Some(j) = visited.iter().position(|&v| v == head) {
            path.truncate(j);
            visited.truncate(j + 1);
        } else {
            path.push(a);
            visited.push(head);
        }
    }
    path
}

/// Computes an h-length lightest path blocker at level lambda. The expanded
/// DAG is drained by blocking flows, the projected paths are decongested
/// against the residual capacities, and the DAG is rebuilt on the residual
/// until no S-T path of length at most h and weight at most
/// (1+eps)*lambda avoids the saturated arcs. Every accepted path weighs at
/// most (1+2*eps)*lambda.
pub fn lightest_path_blocker(
    g: &Digraph,
    w: &MovingCut,
    h: u64,
    lambda: ScaledReal,
    eps: f64,
    mode: BlockingMode,
) -> Result<BlockerFlow, BlockerError> {
    assert!(eps > 0.0 && eps < 1.0, "eps must be in (0, 1)");
    assert!(h >= 1, "h must be at least 1");
    assert!(
        !lambda.is_zero() && lambda.is_finite(),
        "lambda must be positive and finite"
    );
    let dist = h_length_distance(g, w, h, g.sources(), g.sinks());
    if lambda.cmp_tol(&dist) == Ordering::Greater {
        return Err(BlockerError::LambdaAboveDistance);
    }
    let m = g.m();
    let threshold = lambda.mul(&ScaledReal::from_f64(1.0 + eps));
    let cap_total = iteration_cap(g.n(), h, eps);
    let mut res_caps: Vec<u64> = g.arcs().iter().map(|a| a.cap).collect();
    let mut collected: Vec<PathEntry> = Vec::new();
    let mut iters: u128 = 0;
    let mut calls: u64 = 0;
    // pruning depends on weights and lengths only, so the expanded
    // structure is shared across sweeps; each sweep refreshes just the copy
    // capacities from the residual
    let __t = std::time::Instant::now();
    let xd = build_expanded_dag(g, w, h, lambda, eps);
    let unit_max = unit_cap_max(xd.kappa());
    let xm = xd.dag().g().m();
    prof::add(&prof::BUILD, __t);
    loop {
        // saturation test over the arcs that still have residual capacity;
        // ties within tolerance count as blocked
        let __t = std::time::Instant::now();
        let mut probe = w.clone();
        for a in 0..m {
            if res_caps[a] == 0 {
                probe.w[a] = ScaledReal::infinity();
            }
        }
        let d_res = h_length_distance(g, &probe, h, g.sources(), g.sinks());
        prof::add(&prof::PROBE, __t);
        if d_res.cmp_tol(&threshold) != Ordering::Less {
            break;
        }
        let __t = std::time::Instant::now();
        let mut u_hat: Vec<u64> = vec![0; xm];
        for a in 0..m {
            if res_caps[a] == 0 {
                continue;
            }
            let cc = copy_cap(res_caps[a], unit_max, xd.kappa());
            for &ac in xd.arc_copies(a) {
                u_hat[ac] = cc;
            }
        }
        prof::add(&prof::BUILD, __t);
        loop {
            iters += 1;
            if iters > cap_total {
                return Err(BlockerError::IterationCap);
            }
            let __t = std::time::Instant::now();
            let go = has_st_path(xd.dag(), &u_hat);
            prof::add(&prof::REACH, __t);
            if !go {
                break;
            }
            let __t = std::time::Instant::now();
            let dres = xd.dag().with_caps(&u_hat);
            prof::add(&prof::CLONE, __t);
            let call_mode = match mode {
                BlockingMode::Deterministic => BlockingMode::Deterministic,
                BlockingMode::Randomized(seed) => BlockingMode::Randomized(
                    seed.wrapping_add(calls.wrapping_mul(0x9e3779b97f4a7c15)),
                ),
            };
            calls += 1;
            let __t = std::time::Instant::now();
            let f_prime = blocking_integral_flow(&dres, call_mode)?;
            prof::add(&prof::BLOCKFLOW, __t);
            let __t = std::time::Instant::now();
            let sparse = sparse_decompose(&dres, &f_prime).expect("blocking flow decomposes");
            let mut paths = Vec::new();
            for c in &sparse.components {
                for p in &c.paths {
                    let walk: Vec<ArcId> = p.arcs.iter().map(|&a| xd.original_arc(a)).collect();
                    paths.push(PathEntry {
                        arcs: splice_simple(g, &walk),
                        mult: p.mult,
                    });
                }
            }
            let f_tilde =
                PathFlow::with_components(BigRational::one(), vec![IntegralFlow { paths }], m);
            prof::add(&prof::SPARSE, __t);
            let __t = std::time::Instant::now();
            let mut alpha = 1u64;
            for a in 0..m {
                let v = f_tilde.agg_mult(a);
                if v > res_caps[a] as u128 {
                    alpha = alpha.max(v as u64);
                }
            }
            let g_cur = g.with_caps(&res_caps).expect("same arc count");
            let f_hat = decongest(&g_cur, &f_tilde, alpha)?;
            prof::add(&prof::DECONGEST, __t);
            debug_assert!(!f_hat.is_empty(), "drain must make progress");
            let __t = std::time::Instant::now();
            for c in &f_hat.components {
                for p in &c.paths {
                    for &a in &p.arcs {
                        res_caps[a] -= p.mult;
                    }
                    collected.push(p.clone());
                }
            }
            for a in 0..m {
                let fa = f_hat.agg_mult(a);
                if fa == 0 {
                    continue;
                }
                for &ac in xd.arc_copies(a) {
                    u_hat[ac] = u_hat[ac].saturating_sub(fa as u64);
                }
            }
            prof::add(&prof::UPDATE, __t);
        }
    }
    let flow = PathFlow::with_components(
        BigRational::one(),
        vec![IntegralFlow { paths: collected }],
        m,
    );
    Ok(BlockerFlow { flow, lambda, eps })
}
