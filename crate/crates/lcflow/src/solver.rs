//! Multiplicative-weight solve loop producing certified approximate
//! h-length flow / moving cut pairs, single pair or batched multi-commodity.
//!
//! Arc weights are never stored as floats that drift across updates. Each
//! arc keeps an integer counter c_a of routed units; the weight is
//! materialized on demand in closed form, w_a = (1+eps0)^(c_a/U_a) * w0,
//! so two runs with equal counters produce bit-identical weights. The
//! primal side keeps every blocker output as one integral component and
//! scales the sum by the exact rational step size eta at the end.

use crate::blocker::{lightest_path_blocker, BlockerError, BlockerFlow};
use crate::layered::BlockingMode;
use crate::util::ceil_log2;
use lcflow_core::{
    h_length_distance, Digraph, GraphError, IntegralFlow, MovingCut, PathFlow, ScaledReal, Vertex,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveError {
    /// eps must lie strictly between 0 and 1.
    EpsOutOfRange,
    /// A commodity has an empty source or sink set.
    EmptyTerminals {
        commodity: usize,
    },
    /// Two commodities share a batch but their endpoints are within 2h.
    NotSeparated {
        a: usize,
        b: usize,
    },
    Graph(GraphError),
    /// Safety cap on blocker calls exhausted; indicates a bug, not an input.
    IterationCap,
    Blocker(BlockerError),
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::EpsOutOfRange => write!(f, "eps must lie strictly between 0 and 1"),
            SolveError::EmptyTerminals { commodity } => {
                write!(f, "commodity {commodity} has empty sources or sinks")
            }
            SolveError::NotSeparated { a, b } => {
                write!(f, "commodities {a} and {b} share a batch but are within 2h")
            }
            SolveError::Graph(e) => write!(f, "{e}"),
            SolveError::IterationCap => write!(f, "blocker call budget exhausted"),
            SolveError::Blocker(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for SolveError {}

impl From<GraphError> for SolveError {
    fn from(e: GraphError) -> Self {
        SolveError::Graph(e)
    }
}

impl From<BlockerError> for SolveError {
    fn from(e: BlockerError) -> Self {
        SolveError::Blocker(e)
    }
}

/// One source/sink pair routed by the multi-commodity loop.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Commodity {
    pub sources: Vec<Vertex>,
    pub sinks: Vec<Vertex>,
}

/// Commodities grouped into batches. Within a batch all pairs must be well
/// separated (both directed length-distances between endpoint sets above
/// 2h), which keeps their h-length path systems arc-disjoint and lets the
/// loop run their blockers against one shared weight snapshot.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CommodityBatch {
    pub batches: Vec<Vec<Commodity>>,
}

impl CommodityBatch {
    pub fn single(sources: Vec<Vertex>, sinks: Vec<Vertex>) -> Self {
        CommodityBatch {
            batches: vec![vec![Commodity { sources, sinks }]],
        }
    }

    /// Greedy packing: each commodity joins the first batch where it stays
    /// well separated from every member, else opens a new batch. Vertices
    /// must be in range for g.
    pub fn partition(g: &Digraph, commodities: Vec<Commodity>, h: u64) -> Self {
        let mut batches: Vec<Vec<Commodity>> = Vec::new();
        for cm in commodities {
            match batches
                .iter_mut()
                .find(|b| b.iter().all(|o| separated(g, o, &cm, h)))
            {
                Some(b) => b.push(cm),
                None => batches.push(vec![cm]),
            }
        }
        CommodityBatch { batches }
    }
}

/// Directed length-distance from a vertex set; u64::MAX marks unreachable.
fn length_dists(g: &Digraph, from: &[Vertex]) -> Vec<u64> {
    let mut dist = vec![u64::MAX; g.n()];
    let mut heap = BinaryHeap::new();
    for &v in from {
        if dist[v] != 0 {
            dist[v] = 0;
            heap.push(Reverse((0u64, v)));
        }
    }
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &a in g.out_arcs(v) {
            let arc = g.arc(a);
            let nd = d.saturating_add(arc.len);
            if nd < dist[arc.head] {
                dist[arc.head] = nd;
                heap.push(Reverse((nd, arc.head)));
            }
        }
    }
    dist
}

fn endpoints(c: &Commodity) -> Vec<Vertex> {
    let mut e = c.sources.clone();
    e.extend_from_slice(&c.sinks);
    e
}

/// Both directed distances between the endpoint sets exceed 2h.
fn separated(g: &Digraph, a: &Commodity, b: &Commodity, h: u64) -> bool {
    let ea = endpoints(a);
    let eb = endpoints(b);
    let bound = 2 * h;
    let da = length_dists(g, &ea);
    if eb.iter().any(|&v| da[v] <= bound) {
        return false;
    }
    let db = length_dists(g, &eb);
    !ea.iter().any(|&v| db[v] <= bound)
}

/// All quantities the solve loop derives from (n, m, h, eps).
///
/// eta is the exact rational value of its f64 evaluation; since eta only
/// scales the primal sum, nothing downstream needs it to match the ideal
/// real number beyond f64 accuracy, but it must be one fixed rational so
/// flow values stay exact.
#[derive(Clone, Debug)]
pub struct MwParams {
    pub eps: f64,
    pub eps0: f64,
    /// Weight exponent: initial weight and level 0 are (1/m)^zeta.
    pub zeta: f64,
    /// Primal step size, exact value of eps0/((1+eps0)*zeta*ln m).
    pub eta: BigRational,
    /// Initial arc weight (1/m)^zeta.
    pub w0: ScaledReal,
    /// Level index at which lambda reaches 1.
    pub levels: u64,
    /// Safety cap on blocker calls within one lambda level.
    pub inner_cap: u64,
    /// Safety cap on blocker calls over the whole run.
    pub total_cap: u64,
    log_m: f64,
    log_one_eps: f64,
}

impl MwParams {
    pub fn new(n: usize, m: usize, h: u64, eps: f64) -> Result<MwParams, SolveError> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(SolveError::EpsOutOfRange);
        }
        assert!(h >= 1, "h must be positive");
        let eps0 = eps / 6.0;
        let zeta = (1.0 + 2.0 * eps0) / eps0 + 1.0;
        // m = 1 would make (1/m)^zeta = 1 and stop the loop before any
        // routing; clamping the base to 2 keeps single-arc graphs working.
        let m_eff = m.max(2) as f64;
        let eta_f = eps0 / ((1.0 + eps0) * zeta * m_eff.ln());
        let eta = BigRational::from_float(eta_f).expect("finite eta");
        let log_m = m_eff.log2();
        let log_one_eps = (1.0 + eps0).log2();
        let w0 = ScaledReal::exp2(-zeta * log_m);
        let levels = (zeta * log_m / log_one_eps).ceil() as u64 + 1;
        let lg_n = ceil_log2(n.max(2) as u128).max(1) as f64;
        let inner_cap = (64.0 * h as f64 * lg_n / (eps0 * eps0)).ceil() as u64;
        let total_cap = (64.0 * h as f64 / eps.powi(4) * lg_n * lg_n).ceil() as u64;
        Ok(MwParams {
            eps,
            eps0,
            zeta,
            eta,
            w0,
            levels,
            inner_cap,
            total_cap,
            log_m,
            log_one_eps,
        })
    }

    /// Level value lambda_j = (1+eps0)^j * (1/m)^zeta.
    pub fn lambda(&self, j: u64) -> ScaledReal {
        ScaledReal::exp2(j as f64 * self.log_one_eps - self.zeta * self.log_m)
    }

    fn threshold(&self, j: u64) -> ScaledReal {
        self.lambda(j).mul(&ScaledReal::from_f64(1.0 + self.eps0))
    }

    /// Weight of an arc with counter c and capacity u. Zero-capacity arcs
    /// cost nothing in the dual, so they carry infinite weight from the
    /// start; that keeps every distance computation consistent with the
    /// fact that no flow can use them.
    fn weight(&self, c: u128, u: u64) -> ScaledReal {
        if u == 0 {
            debug_assert_eq!(c, 0);
            return ScaledReal::infinity();
        }
        ScaledReal::exp2((c as f64 / u as f64) * self.log_one_eps - self.zeta * self.log_m)
    }

    fn cut(&self, g: &Digraph, c: &[u128]) -> MovingCut {
        MovingCut {
            w: (0..g.m())
                .map(|a| self.weight(c[a], g.arc(a).cap))
                .collect(),
        }
    }

    /// Smallest level after j whose work condition d_min < (1+eps0)*lambda
    /// holds, capped at `levels`. A float candidate gets fixed up with the
    /// same tolerant comparison the sweep uses, so the jump never lands on
    /// a level the sweep would treat as already finished.
    fn next_level(&self, j: u64, d_min: &ScaledReal) -> u64 {
        if d_min.is_infinite() {
            return self.levels;
        }
        let cand =
            ((d_min.log2_value() + self.zeta * self.log_m) / self.log_one_eps).floor() as i64 - 1;
        let mut nj = (j + 1).max(cand.max(0) as u64).min(self.levels);
        while nj > j + 1 && d_min.cmp_tol(&self.threshold(nj - 1)) == Ordering::Less {
            nj -= 1;
        }
        while nj < self.levels && d_min.cmp_tol(&self.threshold(nj)) != Ordering::Less {
            nj += 1;
        }
        nj
    }
}

/// Runs the solve loop for one source/sink pair taken from the graph's own
/// terminals. Exactly the multi-commodity loop with a single commodity.
pub fn solve_pair(g: &Digraph, h: u64, eps: f64) -> Result<(PathFlow, MovingCut), SolveError> {
    let batch = CommodityBatch::single(g.sources().to_vec(), g.sinks().to_vec());
    let (mut flows, w) = solve_multi(g, &batch, h, eps)?;
    Ok((flows.pop().expect("one commodity"), w))
}

/// Runs the batched multi-commodity solve loop. Returns one path flow per
/// commodity (flattened in batch order) plus the shared moving cut. The
/// flows jointly respect capacities; the cut separates every commodity.
pub fn solve_multi(
    g: &Digraph,
    batches: &CommodityBatch,
    h: u64,
    eps: f64,
) -> Result<(Vec<PathFlow>, MovingCut), SolveError> {
    let params = MwParams::new(g.n(), g.m(), h, eps)?;
    let m = g.m();

    let mut flat: Vec<&Commodity> = Vec::new();
    let mut batch_of: Vec<Vec<usize>> = Vec::new();
    for b in &batches.batches {
        let mut ids = Vec::new();
        for cm in b {
            if cm.sources.is_empty() || cm.sinks.is_empty() {
                return Err(SolveError::EmptyTerminals {
                    commodity: flat.len(),
                });
            }
            ids.push(flat.len());
            flat.push(cm);
        }
        batch_of.push(ids);
    }
    // terminal views share the arc set, so arc ids and caps line up
    let views: Vec<Digraph> = flat
        .iter()
        .map(|cm| {
            Digraph::new(
                g.n(),
                g.arcs().to_vec(),
                cm.sources.clone(),
                cm.sinks.clone(),
            )
        })
        .collect::<Result<_, _>>()?;
    for ids in &batch_of {
        for (x, &i) in ids.iter().enumerate() {
            for &j in &ids[x + 1..] {
                if !separated(g, flat[i], flat[j], h) {
                    return Err(SolveError::NotSeparated { a: i, b: j });
                }
            }
        }
    }

    let cap_counter: Vec<u128> = g
        .arcs()
        .iter()
        .map(|a| {
            (BigRational::from_integer(a.cap.into()) / &params.eta)
                .ceil()
                .to_integer()
                .to_u128()
                .unwrap_or(u128::MAX)
        })
        .collect();

    let mut c = vec![0u128; m];
    let mut comps: Vec<Vec<IntegralFlow>> = vec![Vec::new(); flat.len()];
    let mut k: u64 = 0;
    let mut level_calls: u64 = 0;
    let one = ScaledReal::one();
    let one_plus = ScaledReal::from_f64(1.0 + params.eps0);
    let mut j: u64 = 0;
    loop {
        let lam = params.lambda(j);
        if lam.cmp_tol(&one) != Ordering::Less {
            break;
        }
        let thr = lam.mul(&one_plus);
        let mut any = false;
        let mut d_min = ScaledReal::infinity();
        for ids in &batch_of {
            // blockers inside a batch run against one weight snapshot;
            // separation keeps their supports disjoint, so the buffered
            // counter updates commute and the joint flow stays feasible
            let w = params.cut(g, &c);
            let mut buffered: Vec<(usize, BlockerFlow)> = Vec::new();
            for &i in ids {
                let d = h_length_distance(g, &w, h, views[i].sources(), views[i].sinks());
                debug_assert!(lam.le_tol(&d), "level above h-length distance");
                if d.cmp_tol(&thr) == Ordering::Less {
                    let bf = lightest_path_blocker(
                        &views[i],
                        &w,
                        h,
                        lam,
                        params.eps0,
                        BlockingMode::Deterministic,
                    )?;
                    buffered.push((i, bf));
                } else {
                    d_min = d_min.min_exact(d);
                }
            }
            for (i, bf) in buffered {
                any = true;
                k += 1;
                level_calls += 1;
                if k > params.total_cap || level_calls > params.inner_cap {
                    return Err(SolveError::IterationCap);
                }
                debug_assert!(!bf.flow.is_empty(), "blocker made no progress");
                for (a, cnt) in c.iter_mut().enumerate() {
                    let fa = bf.flow.agg_mult(a);
                    if fa > 0 {
                        *cnt += fa;
                        debug_assert!(*cnt <= cap_counter[a], "counter exceeds U/eta");
                    }
                }
                let mut parts = bf.flow.components.into_iter();
                let component = parts.next().expect("blocker emits one component");
                debug_assert!(parts.next().is_none());
                comps[i].push(component);
            }
        }
        if !any {
            j = params.next_level(j, &d_min);
            level_calls = 0;
        }
    }

    // ceil rounding in the counter cap can overshoot U_a by less than one
    // eta step; scaling the step size by the exact overshoot ratio restores
    // per-arc feasibility without touching the integral components
    let mut r = BigRational::one();
    for (a, arc) in g.arcs().iter().enumerate() {
        if arc.cap == 0 {
            debug_assert_eq!(c[a], 0);
            continue;
        }
        let load = &params.eta * BigRational::from_integer(c[a].into())
            / BigRational::from_integer(arc.cap.into());
        if load > r {
            r = load;
        }
    }
    let eta_final = &params.eta / &r;
    let w = params.cut(g, &c);
    let flows: Vec<PathFlow> = comps
        .into_iter()
        .map(|cs| PathFlow::with_components(eta_final.clone(), cs, m))
        .collect();
    #[cfg(debug_assertions)]
    {
        let val: BigRational = flows.iter().map(|f| f.value()).sum();
        let dual = w.dual_value(g).to_bigrational();
        let pad = BigRational::new(BigInt::one(), BigInt::from(1_000_000_000u64));
        assert!(
            val <= &dual * (BigRational::one() + pad),
            "weak duality violated"
        );
    }
    Ok((flows, w))
}

/// Certification record for a flow/cut pair. `pass` requires the flow to
/// respect capacities and lengths exactly, the cut to cover every h-length
/// path up to 1e-9, and the duality gap to close up to the initialization
/// slack delta0 plus a 1e-6 relative cushion.
#[derive(Clone, Debug)]
pub struct CertReport {
    pub flow_feasible: bool,
    pub cut_feasible: bool,
    pub gap_ok: bool,
    /// Flow value, exact.
    pub primal: BigRational,
    /// Cut value sum U_a * w_a, exact value of the materialized weights.
    pub dual: BigRational,
    /// Dual mass the initialization alone can account for: m * U_max * w0.
    pub delta0: BigRational,
    /// Largest f(a)/U_a over positive-capacity arcs; documents any capacity
    /// slop in the flow as handed in (at most 1 once feasible).
    pub max_load: BigRational,
}

impl CertReport {
    pub fn pass(&self) -> bool {
        self.flow_feasible && self.cut_feasible && self.gap_ok
    }
}

/// Checks a flow/cut pair from scratch: exact capacity and length checks on
/// the flow, the h-length distance DP on the cut, and the duality gap with
/// initialization slack. Uses only (g, f, w, h, eps), never solver state,
/// so it certifies any pair however produced. Never errors; failures land
/// in the report.
pub fn certify_pair(g: &Digraph, f: &PathFlow, w: &MovingCut, h: u64, eps: f64) -> CertReport {
    assert!(eps > 0.0 && eps < 1.0, "eps must lie strictly in (0,1)");
    let params = MwParams::new(g.n(), g.m(), h, eps).expect("eps checked");
    let mut flow_feasible = f.validate(g, h).is_ok();
    let mut max_load = BigRational::zero();
    for (a, arc) in g.arcs().iter().enumerate() {
        let v = f.arc_value(a);
        if arc.cap == 0 {
            if !v.is_zero() {
                flow_feasible = false;
            }
            continue;
        }
        let load = v / BigRational::from_integer(arc.cap.into());
        if load > BigRational::one() {
            flow_feasible = false;
        }
        if load > max_load {
            max_load = load;
        }
    }
    let d = h_length_distance(g, w, h, g.sources(), g.sinks());
    let cut_feasible = d.ge_tol(&ScaledReal::one());
    let primal = f.value();
    let dual_s = w.dual_value(g);
    assert!(dual_s.is_finite(), "dual value must be finite");
    let dual = dual_s.to_bigrational();
    let delta0 = ScaledReal::from_u64(g.m() as u64)
        .mul(&ScaledReal::from_u64(g.max_cap()))
        .mul(&params.w0)
        .to_bigrational();
    let eps_r = BigRational::from_float(eps).expect("finite eps");
    let lhs = (BigRational::one() - eps_r) * (&dual - &delta0);
    let rhs = &primal + &dual * BigRational::new(BigInt::one(), BigInt::from(1_000_000u64));
    let gap_ok = lhs <= rhs;
    CertReport {
        flow_feasible,
        cut_feasible,
        gap_ok,
        primal,
        dual,
        delta0,
        max_load,
    }
}
