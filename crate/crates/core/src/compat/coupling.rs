//! Couplings between two discrete marginals.

const FLOW_EPS: f64 = 1e-15;

/// Joint matrix `J[a][b]` with row sums `p` and column sums `q` that keeps as
/// much mass as possible on the diagonal and only uses pairs with `allowed(a, b)`.
/// Returns `None` when the allowed pairs cannot carry both marginals.
pub fn minimal_flux_coupling(
    p: &[f64],
    q: &[f64],
    allowed: impl Fn(usize, usize) -> bool,
) -> Option<Vec<Vec<f64>>> {
    let n = p.len();
    let m = q.len();
    let mut joint = vec![vec![0.0; m]; n];
    let mut supply = p.to_vec();
    let mut demand = q.to_vec();
    for a in 0..n.min(m) {
        if p[a] > 0.0 && q[a] > 0.0 && allowed(a, a) {
            let d = p[a].min(q[a]);
            joint[a][a] = d;
            supply[a] -= d;
            demand[a] -= d;
        }
    }
    let edges: Vec<Vec<usize>> = (0..n)
        .map(|a| {
            (0..m)
                .filter(|&b| p[a] > 0.0 && q[b] > 0.0 && allowed(a, b))
                .collect()
        })
        .collect();
    // Edmonds–Karp on source → rows → columns → sink. Row→column edges are
    // uncapped and any flow on them, the diagonal seed included, can be pushed back.
    let mut reverse = joint.clone();
    loop {
        let mut prev_col: Vec<Option<usize>> = vec![None; m];
        let mut prev_row: Vec<Option<usize>> = vec![None; n];
        let mut seen_row = vec![false; n];
        let mut queue: std::collections::VecDeque<usize> = (0..n)
            .filter(|&a| supply[a] > FLOW_EPS)
            .inspect(|&a| seen_row[a] = true)
            .collect();
        let mut end = None;
        'bfs: while let Some(a) = queue.pop_front() {
            for &b in &edges[a] {
                if prev_col[b].is_some() {
                    continue;
                }
                prev_col[b] = Some(a);
                if demand[b] > FLOW_EPS {
                    end = Some(b);
                    break 'bfs;
                }
                for a2 in 0..n {
                    if !seen_row[a2] && reverse[a2][b] > FLOW_EPS {
                        seen_row[a2] = true;
                        prev_row[a2] = Some(b);
                        queue.push_back(a2);
                    }
                }
            }
        }
        let Some(last) = end else { break };
        // walk back to find the bottleneck
        let mut bottleneck = demand[last];
        let mut b = last;
        let start_row = loop {
            let a = prev_col[b].expect("on path");
            match prev_row[a] {
                Some(b_prev) => {
                    bottleneck = bottleneck.min(reverse[a][b_prev]);
                    b = b_prev;
                }
                None => break a,
            }
        };
        bottleneck = bottleneck.min(supply[start_row]);
        let mut b = last;
        demand[last] -= bottleneck;
        loop {
            let a = prev_col[b].expect("on path");
            joint[a][b] += bottleneck;
            reverse[a][b] += bottleneck;
            match prev_row[a] {
                Some(b_prev) => {
                    joint[a][b_prev] -= bottleneck;
                    reverse[a][b_prev] -= bottleneck;
                    b = b_prev;
                }
                None => {
                    supply[a] -= bottleneck;
                    break;
                }
            }
        }
    }
    let scale = p.iter().sum::<f64>().max(1.0);
    let unmet: f64 = supply.iter().map(|s| s.max(0.0)).sum();
    if unmet > 1e-12 * scale {
        return None;
    }
    for row in &mut joint {
        for v in row.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }
    Some(joint)
}
