//! Exact transportation LP by successive shortest augmenting paths.

/// Optimal plan of the transportation problem with supplies `a`, demands
/// `b` and cost matrix `cost` (`+∞` cells are forbidden).
#[derive(Debug, Clone)]
pub struct FlowPlan {
    pub value: f64,
    pub flow: Vec<Vec<f64>>,
    /// Mass that could not be routed through finite cells.
    pub unrouted: f64,
}

#[derive(Clone, Copy)]
struct Arc {
    to: usize,
    cap: f64,
    cost: f64,
}

/// Solves `min Σ c_ij f_ij` subject to row sums `a`, column sums `b`,
/// `f ≥ 0`, `f_ij = 0` where `c_ij = ∞`. `a` and `b` must have equal totals
/// (the caller checks). If some mass cannot be routed the plan reports it in
/// `unrouted` and `value` is `+∞`.
pub fn transport(a: &[f64], b: &[f64], cost: &[Vec<f64>]) -> FlowPlan {
    let n = a.len();
    let m = b.len();
    let source = n + m;
    let sink = n + m + 1;
    let nodes = n + m + 2;
    let mut arcs: Vec<Arc> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    let add = |arcs: &mut Vec<Arc>, adj: &mut Vec<Vec<usize>>, from: usize, to: usize, cap: f64, cost: f64| {
        adj[from].push(arcs.len());
        arcs.push(Arc { to, cap, cost });
        adj[to].push(arcs.len());
        arcs.push(Arc { to: from, cap: 0.0, cost: -cost });
    };
    let total: f64 = a.iter().sum();
    let eps = 1e-15 * (1.0 + total);
    for (i, &ai) in a.iter().enumerate() {
        if ai > 0.0 {
            add(&mut arcs, &mut adj, source, i, ai, 0.0);
        }
    }
    let mut cell_arc = vec![vec![usize::MAX; m]; n];
    for i in 0..n {
        if a[i] <= 0.0 {
            continue;
        }
        for j in 0..m {
            if b[j] > 0.0 && cost[i][j].is_finite() {
                cell_arc[i][j] = arcs.len();
                add(&mut arcs, &mut adj, i, n + j, f64::INFINITY, cost[i][j]);
            }
        }
    }
    for (j, &bj) in b.iter().enumerate() {
        if bj > 0.0 {
            add(&mut arcs, &mut adj, n + j, sink, bj, 0.0);
        }
    }

    let mut routed = 0.0;
    loop {
        // Bellman-Ford (queue based) on the residual graph.
        let mut dist = vec![f64::INFINITY; nodes];
        let mut prev = vec![usize::MAX; nodes];
        let mut in_queue = vec![false; nodes];
        let mut queue = std::collections::VecDeque::new();
        dist[source] = 0.0;
        queue.push_back(source);
        in_queue[source] = true;
        let mut relaxations = 0usize;
        while let Some(u) = queue.pop_front() {
            in_queue[u] = false;
            for &e in &adj[u] {
                let arc = arcs[e];
                if arc.cap > eps {
                    let nd = dist[u] + arc.cost;
                    if nd < dist[arc.to] - 1e-14 * (1.0 + nd.abs()) {
                        dist[arc.to] = nd;
                        prev[arc.to] = e;
                        if !in_queue[arc.to] {
                            queue.push_back(arc.to);
                            in_queue[arc.to] = true;
                        }
                    }
                }
            }
            relaxations += 1;
            if relaxations > nodes * arcs.len() + 16 {
                break;
            }
        }
        if !dist[sink].is_finite() {
            break;
        }
        let mut push = f64::INFINITY;
        let mut v = sink;
        while v != source {
            let e = prev[v];
            push = push.min(arcs[e].cap);
            v = arcs[e ^ 1].to;
        }
        if push <= eps {
            break;
        }
        let mut v = sink;
        while v != source {
            let e = prev[v];
            arcs[e].cap -= push;
            arcs[e ^ 1].cap += push;
            v = arcs[e ^ 1].to;
        }
        routed += push;
        if routed >= total - eps {
            break;
        }
    }

    let mut flow = vec![vec![0.0; m]; n];
    let mut value = 0.0;
    for i in 0..n {
        for j in 0..m {
            let e = cell_arc[i][j];
            if e != usize::MAX {
                let f = arcs[e ^ 1].cap;
                if f > 0.0 {
                    flow[i][j] = f;
                    value += f * cost[i][j];
                }
            }
        }
    }
    let unrouted = (total - routed).max(0.0);
    if unrouted > 1e-9 * (1.0 + total) {
        value = f64::INFINITY;
    }
    FlowPlan { value, flow, unrouted }
}
