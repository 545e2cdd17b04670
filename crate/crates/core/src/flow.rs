//! Small network-flow solvers used by the existence classification and by the
//! boundary limits of parametric families.

use std::collections::VecDeque;

/// Residual capacities at or below this are treated as saturated.
const CAP_EPS: f64 = 1e-15;

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    cap: f64,
    flow: f64,
}

/// Max-flow network with real capacities, solved by Edmonds-Karp.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    adj: Vec<Vec<usize>>,
    edges: Vec<Edge>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        Self {
            adj: vec![Vec::new(); nodes],
            edges: Vec::new(),
        }
    }

    /// Adds a directed edge and returns its id.
    pub fn add_edge(&mut self, from: usize, to: usize, cap: f64) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge { to, cap, flow: 0.0 });
        self.edges.push(Edge {
            to: from,
            cap: 0.0,
            flow: 0.0,
        });
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        id
    }

    pub fn flow(&self, edge: usize) -> f64 {
        self.edges[edge].flow
    }

    fn residual(&self, e: usize) -> f64 {
        self.edges[e].cap - self.edges[e].flow
    }

    /// Pushes the maximum flow from `s` to `t` and returns its value.
    pub fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        loop {
            let mut pred = vec![usize::MAX; self.adj.len()];
            let mut queue = VecDeque::from([s]);
            let mut seen = vec![false; self.adj.len()];
            seen[s] = true;
            while let Some(u) = queue.pop_front() {
                if u == t {
                    break;
                }
                for &e in &self.adj[u] {
                    let v = self.edges[e].to;
                    if !seen[v] && self.residual(e) > CAP_EPS {
                        seen[v] = true;
                        pred[v] = e;
                        queue.push_back(v);
                    }
                }
            }
            if !seen[t] {
                return total;
            }
            let mut bottleneck = f64::INFINITY;
            let mut v = t;
            while v != s {
                let e = pred[v];
                bottleneck = bottleneck.min(self.residual(e));
                v = self.edges[e ^ 1].to;
            }
            if !(bottleneck > 0.0) || !bottleneck.is_finite() {
                return total;
            }
            let mut v = t;
            while v != s {
                let e = pred[v];
                self.edges[e].flow += bottleneck;
                self.edges[e ^ 1].flow -= bottleneck;
                v = self.edges[e ^ 1].to;
            }
            total += bottleneck;
        }
    }

    /// Nodes reachable from `s` through edges with positive residual capacity.
    pub fn reachable_from(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &e in &self.adj[u] {
                let v = self.edges[e].to;
                if !seen[v] && self.residual(e) > CAP_EPS {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }
}

/// Solution of a balanced integer transportation problem.
#[derive(Debug, Clone)]
pub struct Transport {
    /// Shipment on each `(row, col)` arc, row-major.
    pub plan: Vec<Vec<i64>>,
    /// Dual potentials `(row, col)` with `cost[x][y] + u[x] - v[y] >= 0` on
    /// every allowed arc and equality wherever the plan ships.
    pub row_potential: Vec<i64>,
    pub col_potential: Vec<i64>,
    pub cost: i64,
}

/// Min-cost transportation by successive shortest paths.
///
/// `cost[x][y] = None` forbids the arc. Supplies and demands must balance.
/// Returns `None` when no feasible plan exists.
pub fn min_cost_transport(
    cost: &[Vec<Option<i64>>],
    supply: &[i64],
    demand: &[i64],
) -> Option<Transport> {
    let r = supply.len();
    let c = demand.len();
    debug_assert_eq!(supply.iter().sum::<i64>(), demand.iter().sum::<i64>());
    let mut plan = vec![vec![0i64; c]; r];
    let mut left = supply.to_vec();
    let mut need = demand.to_vec();
    // nodes: rows 0..r, cols r..r+c
    let n = r + c;
    loop {
        if left.iter().all(|s| *s == 0) {
            break;
        }
        // Bellman-Ford from all rows with remaining supply.
        let mut dist = vec![i64::MAX; n];
        let mut pred: Vec<Option<usize>> = vec![None; n];
        for x in 0..r {
            if left[x] > 0 {
                dist[x] = 0;
            }
        }
        for _ in 0..n {
            let mut changed = false;
            for x in 0..r {
                for y in 0..c {
                    let Some(w) = cost[x][y] else { continue };
                    if dist[x] != i64::MAX && dist[x] + w < dist[r + y] {
                        dist[r + y] = dist[x] + w;
                        pred[r + y] = Some(x);
                        changed = true;
                    }
                    if plan[x][y] > 0 && dist[r + y] != i64::MAX && dist[r + y] - w < dist[x] {
                        dist[x] = dist[r + y] - w;
                        pred[x] = Some(r + y);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let target = (0..c)
            .filter(|y| need[*y] > 0 && dist[r + y] != i64::MAX)
            .min_by_key(|y| dist[r + y])?;
        // walk back to the source row to find the bottleneck
        let mut path = Vec::new();
        let mut v = r + target;
        while let Some(u) = pred[v] {
            path.push((u, v));
            v = u;
            if v < r && left[v] > 0 && pred[v].is_none() {
                break;
            }
            if path.len() > n {
                return None;
            }
        }
        let source = v;
        let mut amount = left[source].min(need[target]);
        for &(u, v) in &path {
            if u >= r {
                // backward arc col -> row cancels shipment on (v, u - r)
                amount = amount.min(plan[v][u - r]);
            }
        }
        for &(u, v) in &path {
            if u < r {
                plan[u][v - r] += amount;
            } else {
                plan[v][u - r] -= amount;
            }
        }
        left[source] -= amount;
        need[target] -= amount;
    }
    let (row_potential, col_potential) = potentials(cost, &plan)?;
    let total = (0..r)
        .flat_map(|x| (0..c).map(move |y| (x, y)))
        .map(|(x, y)| plan[x][y] * cost[x][y].unwrap_or(0))
        .sum();
    Some(Transport {
        plan,
        row_potential,
        col_potential,
        cost: total,
    })
}

/// Shortest distances from a virtual source in the residual graph of an
/// optimal plan; these are feasible dual potentials.
fn potentials(cost: &[Vec<Option<i64>>], plan: &[Vec<i64>]) -> Option<(Vec<i64>, Vec<i64>)> {
    let r = plan.len();
    let c = plan.first().map_or(0, Vec::len);
    let mut dist = vec![0i64; r + c];
    for round in 0..=r + c {
        let mut changed = false;
        for x in 0..r {
            for y in 0..c {
                let Some(w) = cost[x][y] else { continue };
                if dist[x] + w < dist[r + y] {
                    dist[r + y] = dist[x] + w;
                    changed = true;
                }
                if plan[x][y] > 0 && dist[r + y] - w < dist[x] {
                    dist[x] = dist[r + y] - w;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
        if round == r + c {
            // negative cycle: the plan was not optimal
            return None;
        }
    }
    Some((dist[..r].to_vec(), dist[r..].to_vec()))
}
