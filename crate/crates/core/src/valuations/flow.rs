//! Bipartite transportation value: the maximum total weight of an integral
//! flow that ships exactly `x_i` units out of every left vertex `i`, with right
//! vertex `j` absorbing at most `right_caps[j]` units.
//!
//! Two solvers: exhaustive enumeration of edge flows (small graphs) and
//! successive shortest paths on the residual network (Bellman-Ford, since
//! costs are negated weights).

/// Edge `(left, right, weight)`, 0-based endpoints.
pub type Edge = (usize, usize, f64);

/// Above this many edges [`max_weight_flow`] switches to the flow solver.
pub const EXHAUSTIVE_EDGE_LIMIT: usize = 20;

pub fn max_weight_flow(supply: &[i64], right_caps: &[i64], edges: &[Edge]) -> Option<f64> {
    if edges.len() <= EXHAUSTIVE_EDGE_LIMIT {
        exhaustive(supply, right_caps, edges)
    } else {
        successive_shortest_paths(supply, right_caps, edges)
    }
}

/// Enumerates every split of each left supply over its incident edges.
pub fn exhaustive(supply: &[i64], right_caps: &[i64], edges: &[Edge]) -> Option<f64> {
    let mut by_left: Vec<Vec<(usize, f64)>> = vec![Vec::new(); supply.len()];
    for &(i, j, w) in edges {
        by_left[i].push((j, w));
    }
    let mut residual = right_caps.to_vec();
    let mut best: Option<f64> = None;
    split_left(0, supply, &by_left, &mut residual, 0.0, &mut best);
    best
}

fn split_left(
    i: usize,
    supply: &[i64],
    by_left: &[Vec<(usize, f64)>],
    residual: &mut [i64],
    acc: f64,
    best: &mut Option<f64>,
) {
    if i == supply.len() {
        if best.is_none_or(|b| acc > b) {
            *best = Some(acc);
        }
        return;
    }
    split_edge(i, 0, supply[i], supply, by_left, residual, acc, best);
}

#[allow(clippy::too_many_arguments)]
fn split_edge(
    i: usize,
    e: usize,
    remaining: i64,
    supply: &[i64],
    by_left: &[Vec<(usize, f64)>],
    residual: &mut [i64],
    acc: f64,
    best: &mut Option<f64>,
) {
    if remaining == 0 {
        split_left(i + 1, supply, by_left, residual, acc, best);
        return;
    }
    let Some(&(j, w)) = by_left[i].get(e) else {
        return;
    };
    let most = remaining.min(residual[j]);
    for amount in 0..=most {
        residual[j] -= amount;
        split_edge(i, e + 1, remaining - amount, supply, by_left, residual, acc + w * amount as f64, best);
        residual[j] += amount;
    }
}

struct Arc {
    to: usize,
    cap: i64,
    cost: f64,
}

/// Min-cost flow of value `sum(supply)` with cost `-w`; `None` if the supply
/// cannot be routed.
pub fn successive_shortest_paths(supply: &[i64], right_caps: &[i64], edges: &[Edge]) -> Option<f64> {
    let n_left = supply.len();
    let n_right = right_caps.len();
    let source = n_left + n_right;
    let sink = source + 1;
    let n = sink + 1;
    let mut arcs: Vec<Arc> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut add = |u: usize, v: usize, cap: i64, cost: f64, arcs: &mut Vec<Arc>| {
        adj[u].push(arcs.len());
        arcs.push(Arc { to: v, cap, cost });
        adj[v].push(arcs.len());
        arcs.push(Arc { to: u, cap: 0, cost: -cost });
    };
    for (i, &s) in supply.iter().enumerate() {
        add(source, i, s, 0.0, &mut arcs);
    }
    for &(i, j, w) in edges {
        add(i, n_left + j, supply[i], -w, &mut arcs);
    }
    for (j, &c) in right_caps.iter().enumerate() {
        add(n_left + j, sink, c, 0.0, &mut arcs);
    }

    let target: i64 = supply.iter().sum();
    let mut shipped = 0i64;
    let mut cost = 0.0;
    while shipped < target {
        // Bellman-Ford over the residual graph.
        let mut dist = vec![f64::INFINITY; n];
        let mut prev_arc = vec![usize::MAX; n];
        dist[source] = 0.0;
        for _ in 0..n {
            let mut changed = false;
            for u in 0..n {
                if dist[u] == f64::INFINITY {
                    continue;
                }
                for &a in &adj[u] {
                    let arc = &arcs[a];
                    if arc.cap > 0 && dist[u] + arc.cost < dist[arc.to] - 1e-12 {
                        dist[arc.to] = dist[u] + arc.cost;
                        prev_arc[arc.to] = a;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if dist[sink] == f64::INFINITY {
            return None;
        }
        let mut push = target - shipped;
        let mut v = sink;
        while v != source {
            let a = prev_arc[v];
            push = push.min(arcs[a].cap);
            v = arcs[a ^ 1].to;
        }
        let mut v = sink;
        while v != source {
            let a = prev_arc[v];
            arcs[a].cap -= push;
            arcs[a ^ 1].cap += push;
            v = arcs[a ^ 1].to;
        }
        shipped += push;
        cost += push as f64 * dist[sink];
    }
    Some(-cost)
}
