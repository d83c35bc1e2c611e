//! Length-budgeted lightest-distance DP. d_w^(h)(u,v) is the minimum total
//! weight of a path from u to v whose total length is at most h.

use crate::cut::MovingCut;
use crate::graph::{Digraph, Vertex};
use crate::scaled::ScaledReal;

/// DP table toward a fixed target set: entry (b, v) is the lightest weight
/// of a path from v into the target set with total length at most b.
pub struct DistTable {
    h: u64,
    n: usize,
    d: Vec<ScaledReal>,
}

impl DistTable {
    pub fn get(&self, b: u64, v: Vertex) -> ScaledReal {
        debug_assert!(b <= self.h && v < self.n);
        self.d[b as usize * self.n + v]
    }

    pub fn h(&self) -> u64 {
        self.h
    }
}

/// Builds the DP table toward `to`. O(m * h) time, exact min via total-order
/// comparison (no tolerance inside the recursion).
pub fn h_length_table(g: &Digraph, w: &MovingCut, h: u64, to: &[Vertex]) -> DistTable {
    let n = g.n();
    let inf = ScaledReal::infinity();
    let mut d = vec![inf; n * (h as usize + 1)];
    let mut in_to = vec![false; n];
    for &v in to {
        in_to[v] = true;
    }
    for b in 0..=h {
        let row = b as usize * n;
        for v in 0..n {
            let mut best = if in_to[v] { ScaledReal::zero() } else { inf };
            for &a in g.out_arcs(v) {
                let arc = g.arc(a);
                if arc.len > b {
                    continue;
                }
                let rest = d[(b - arc.len) as usize * n + arc.head];
                if rest.is_infinite() {
                    continue;
                }
                best = best.min_exact(w.w[a].add(&rest));
            }
            d[row + v] = best;
        }
    }
    DistTable { h, n, d }
}

/// Lightest weight of a length-at-most-h path from `from` to `to`; infinity
/// when no such path exists (including empty vertex sets).
pub fn h_length_distance(
    g: &Digraph,
    w: &MovingCut,
    h: u64,
    from: &[Vertex],
    to: &[Vertex],
) -> ScaledReal {
    let table = h_length_table(g, w, h, to);
    let mut best = ScaledReal::infinity();
    for &v in from {
        best = best.min_exact(table.get(h, v));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Arc;
    use std::cmp::Ordering;

    fn arc(tail: Vertex, head: Vertex, len: u64) -> Arc {
        Arc {
            tail,
            head,
            cap: 1,
            len,
        }
    }

    fn sr(x: f64) -> ScaledReal {
        ScaledReal::from_f64(x)
    }

    fn eq(a: ScaledReal, b: f64) -> bool {
        a.cmp_tol(&sr(b)) == Ordering::Equal
    }

    #[test]
    fn single_arc() {
        let g = Digraph::new(2, vec![arc(0, 1, 1)], vec![0], vec![1]).unwrap();
        let w = MovingCut { w: vec![sr(0.4)] };
        let d = h_length_distance(&g, &w, 1, g.sources(), g.sinks());
        assert!(eq(d, 0.4));
    }

    #[test]
    fn disconnected_is_infinite() {
        let g = Digraph::new(4, vec![arc(0, 1, 1), arc(2, 3, 1)], vec![0], vec![3]).unwrap();
        let w = MovingCut::zero(2);
        let d = h_length_distance(&g, &w, 5, g.sources(), g.sinks());
        assert!(d.is_infinite());
    }

    #[test]
    fn budget_picks_the_path() {
        // s->a (l=1, w=5), a->t (l=1, w=5), s->t (l=3, w=1)
        let g = Digraph::new(
            3,
            vec![arc(0, 1, 1), arc(1, 2, 1), arc(0, 2, 3)],
            vec![0],
            vec![2],
        )
        .unwrap();
        let w = MovingCut {
            w: vec![sr(5.0), sr(5.0), sr(1.0)],
        };
        let d2 = h_length_distance(&g, &w, 2, g.sources(), g.sinks());
        assert!(eq(d2, 10.0));
        let d3 = h_length_distance(&g, &w, 3, g.sources(), g.sinks());
        assert!(eq(d3, 1.0));
        // too small a budget: no path at all
        let d1 = h_length_distance(&g, &w, 1, g.sources(), g.sinks());
        assert!(d1.is_infinite());
    }

    #[test]
    fn zero_budget_and_overlap() {
        let g = Digraph::new(2, vec![arc(0, 1, 1)], vec![0], vec![1]).unwrap();
        let w = MovingCut::uniform(1, sr(2.0));
        // from == to: empty path, weight 0, regardless of budget
        let d = h_length_distance(&g, &w, 0, &[1], &[1]);
        assert!(d.is_zero());
        let d0 = h_length_distance(&g, &w, 0, g.sources(), g.sinks());
        assert!(d0.is_infinite());
    }

    #[test]
    fn table_rows_are_monotone() {
        let g = Digraph::new(
            4,
            vec![arc(0, 1, 1), arc(1, 3, 2), arc(0, 2, 1), arc(2, 3, 1)],
            vec![0],
            vec![3],
        )
        .unwrap();
        let w = MovingCut {
            w: vec![sr(1.0), sr(1.0), sr(4.0), sr(4.0)],
        };
        let t = h_length_table(&g, &w, 4, g.sinks());
        let mut prev = t.get(0, 0);
        for b in 1..=4 {
            let cur = t.get(b, 0);
            assert!(cur.cmp_exact(&prev) != Ordering::Greater);
            prev = cur;
        }
        // h=2: cheap 2-hop blocked by budget of arc 1? l(0)+l(1)=3 > 2, so 8
        assert!(eq(t.get(2, 0), 8.0));
        assert!(eq(t.get(3, 0), 2.0));
    }
}
