//! Small integral max-flow with lower bounds on edges.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: i64,
    rev: usize,
}

/// Residual graph with Edmonds–Karp augmentation. Edges are scanned in
/// insertion order, so results are deterministic.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    adj: Vec<Vec<Arc>>,
}

/// Handle to an inserted edge: `(from, position in from's list)`.
pub type EdgeId = (usize, usize);

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        Self { adj: vec![Vec::new(); nodes] }
    }

    pub fn add_node(&mut self) -> usize {
        self.adj.push(Vec::new());
        self.adj.len() - 1
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: i64) -> EdgeId {
        let fwd = self.adj[from].len();
        let back = self.adj[to].len() + usize::from(from == to);
        self.adj[from].push(Arc { to, cap, rev: back });
        self.adj[to].push(Arc { to: from, cap: 0, rev: fwd });
        (from, fwd)
    }

    /// Flow currently routed through an edge added with capacity `cap`.
    pub fn flow(&self, id: EdgeId, cap: i64) -> i64 {
        cap - self.adj[id.0][id.1].cap
    }

    pub fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let mut total = 0;
        loop {
            let mut prev: Vec<Option<(usize, usize)>> = vec![None; self.adj.len()];
            let mut queue = VecDeque::from([s]);
            let mut seen = vec![false; self.adj.len()];
            seen[s] = true;
            while let Some(u) = queue.pop_front() {
                if u == t {
                    break;
                }
                for (idx, a) in self.adj[u].iter().enumerate() {
                    if a.cap > 0 && !seen[a.to] {
                        seen[a.to] = true;
                        prev[a.to] = Some((u, idx));
                        queue.push_back(a.to);
                    }
                }
            }
            if !seen[t] {
                return total;
            }
            let mut push = i64::MAX;
            let mut v = t;
            while let Some((u, idx)) = prev[v] {
                push = push.min(self.adj[u][idx].cap);
                v = u;
            }
            let mut v = t;
            while let Some((u, idx)) = prev[v] {
                self.adj[u][idx].cap -= push;
                let (to, rev) = (self.adj[u][idx].to, self.adj[u][idx].rev);
                self.adj[to][rev].cap += push;
                v = u;
            }
            total += push;
        }
    }
}

/// Edge with a lower bound `lo` and capacity `hi`.
#[derive(Debug, Clone, Copy)]
pub struct BoundedEdge {
    pub from: usize,
    pub to: usize,
    pub lo: i64,
    pub hi: i64,
}

/// Finds a feasible circulation-style flow from `s` to `t` respecting all
/// bounds, via the usual super-source reduction. Returns per-edge flows in
/// input order, or `None` if the bounds cannot be met.
pub fn feasible_flow(nodes: usize, s: usize, t: usize, edges: &[BoundedEdge]) -> Option<Vec<i64>> {
    let mut net = FlowNetwork::new(nodes);
    let mut excess = vec![0i64; nodes];
    let mut ids = Vec::with_capacity(edges.len());
    for e in edges {
        if e.lo > e.hi || e.lo < 0 {
            return None;
        }
        ids.push(net.add_edge(e.from, e.to, e.hi - e.lo));
        excess[e.to] += e.lo;
        excess[e.from] -= e.lo;
    }
    net.add_edge(t, s, i64::MAX / 4);
    let ss = net.add_node();
    let tt = net.add_node();
    let mut demand = 0;
    for (v, &x) in excess.iter().enumerate() {
        if x > 0 {
            net.add_edge(ss, v, x);
            demand += x;
        } else if x < 0 {
            net.add_edge(v, tt, -x);
        }
    }
    if net.max_flow(ss, tt) != demand {
        return None;
    }
    Some(edges.iter().zip(&ids).map(|(e, &id)| e.lo + net.flow(id, e.hi - e.lo)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_max_flow() {
        let mut net = FlowNetwork::new(4);
        net.add_edge(0, 1, 3);
        net.add_edge(0, 2, 2);
        net.add_edge(1, 2, 5);
        net.add_edge(1, 3, 2);
        net.add_edge(2, 3, 3);
        assert_eq!(net.max_flow(0, 3), 5);
    }

    #[test]
    fn lower_bounds_are_respected() {
        // s -> a -> t and s -> b -> t, with a forced to carry at least 2
        let edges = [
            BoundedEdge { from: 0, to: 1, lo: 0, hi: 5 },
            BoundedEdge { from: 0, to: 2, lo: 0, hi: 5 },
            BoundedEdge { from: 1, to: 3, lo: 2, hi: 3 },
            BoundedEdge { from: 2, to: 3, lo: 1, hi: 1 },
        ];
        let f = feasible_flow(4, 0, 3, &edges).unwrap();
        assert!(f[2] >= 2 && f[3] == 1);
        assert_eq!(f[0], f[2]);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let edges = [BoundedEdge { from: 0, to: 1, lo: 2, hi: 2 }, BoundedEdge { from: 1, to: 2, lo: 0, hi: 1 }];
        assert!(feasible_flow(3, 0, 2, &edges).is_none());
    }
}
