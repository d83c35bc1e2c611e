//! Moving cuts: nonnegative per-arc weights. A cut is feasible when every
//! S-T path of length at most h gathers total weight at least 1.

use crate::dist::h_length_distance;
use crate::graph::Digraph;
use crate::scaled::ScaledReal;
use std::cmp::Ordering;

#[derive(Clone, Debug)]
pub struct MovingCut {
    pub w: Vec<ScaledReal>,
}

impl MovingCut {
    pub fn zero(m: usize) -> Self {
        MovingCut {
            w: vec![ScaledReal::zero(); m],
        }
    }

    pub fn uniform(m: usize, w: ScaledReal) -> Self {
        MovingCut { w: vec![w; m] }
    }

    /// Capacity-weighted total: sum over arcs of U_a * w_a.
    pub fn dual_value(&self, g: &Digraph) -> ScaledReal {
        let mut total = ScaledReal::zero();
        for (i, a) in g.arcs().iter().enumerate() {
            total = total.add(&self.w[i].mul_u64(a.cap));
        }
        total
    }

    /// Feasibility up to comparison tolerance: d_w^(h)(S,T) >= 1, where ties
    /// within tolerance count as feasible.
    pub fn is_feasible(&self, g: &Digraph, h: u64) -> bool {
        let d = h_length_distance(g, self, h, g.sources(), g.sinks());
        d.cmp_tol(&ScaledReal::one()) != Ordering::Less
    }
}
