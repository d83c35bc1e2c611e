use lcflow::{certify_pair, solve_pair};
use lcflow_core::{Arc, Digraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let pick: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(usize::MAX);
    let cases = [
        (20usize, 60usize, 4u64, 0.5f64),
        (20, 60, 4, 0.3),
        (20, 60, 4, 0.1),
        (60, 300, 8, 0.5),
        (60, 300, 8, 0.3),
        (30, 120, 6, 0.1),
        (60, 300, 8, 0.1),
    ];
    for (i, &(n, m, h, eps)) in cases.iter().enumerate() {
        if pick != usize::MAX && i != pick {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let arcs: Vec<Arc> = (0..m)
            .map(|_| {
                let tail = rng.gen_range(0..n - 1);
                let mut head = rng.gen_range(1..n);
                if head == tail {
                    head = n - 1;
                }
                Arc { tail, head, cap: rng.gen_range(1..=8), len: rng.gen_range(1..=2) }
            })
            .collect();
        let g = Digraph::new(n, arcs, vec![0], vec![n - 1]).unwrap();
        let t = Instant::now();
        let (f, w) = solve_pair(&g, h, eps).unwrap();
        let solve_ms = t.elapsed().as_millis();
        let t = Instant::now();
        let rep = certify_pair(&g, &f, &w, h, eps);
        let cert_ms = t.elapsed().as_millis();
        eprintln!(
            "n={n} m={m} h={h} eps={eps}: solve {solve_ms}ms cert {cert_ms}ms k={} pass={}",
            f.components.len(),
            rep.pass(),
        );
        eprintln!("  {}", lcflow::blocker::prof::report());
    }
}
