//! Communication graph over ground agents and UAVs, and the giant-component
//! connectivity metric.
//!
//! Ground agents talk only through UAV relays: edges are ground-air and
//! air-air pairs within the UAV communication range. An optional direct
//! ground-ground range exists for sensitivity studies.

use crate::dynamics::{AgentKind, AgentState};
use crate::error::MetricsError;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CommGraph {
    pub ground_nodes: Vec<usize>,
    pub air_nodes: Vec<usize>,
    /// Undirected edges, each listed once with the smaller id first.
    pub edges: Vec<(usize, usize)>,
}

impl CommGraph {
    pub fn build(agents: &[AgentState], comm_range: f64, ground_direct_range: Option<f64>) -> Self {
        let mut graph = CommGraph::default();
        for a in agents {
            match a.kind {
                AgentKind::Ground => graph.ground_nodes.push(a.id),
                AgentKind::Air => graph.air_nodes.push(a.id),
            }
        }
        for (i, a) in agents.iter().enumerate() {
            for b in &agents[i + 1..] {
                let range = match (a.kind, b.kind) {
                    (AgentKind::Ground, AgentKind::Ground) => match ground_direct_range {
                        Some(r) => r,
                        None => continue,
                    },
                    _ => comm_range,
                };
                if a.position.distance(b.position) <= range {
                    graph.edges.push((a.id.min(b.id), a.id.max(b.id)));
                }
            }
        }
        graph
    }

    /// Ground-node count of every connected component that holds at least
    /// one ground node, in order of first appearance in `ground_nodes`.
    pub fn ground_component_sizes(&self) -> Vec<usize> {
        let ids: Vec<usize> = self.ground_nodes.iter().chain(&self.air_nodes).copied().collect();
        let index = |id: usize| ids.iter().position(|&x| x == id);
        let mut uf = UnionFind::new(ids.len());
        for &(u, v) in &self.edges {
            if let (Some(a), Some(b)) = (index(u), index(v)) {
                uf.union(a, b);
            }
        }
        let mut roots: Vec<usize> = Vec::new();
        let mut sizes: Vec<usize> = Vec::new();
        for g in 0..self.ground_nodes.len() {
            let r = uf.find(g);
            match roots.iter().position(|&x| x == r) {
                Some(k) => sizes[k] += 1,
                None => {
                    roots.push(r);
                    sizes.push(1);
                }
            }
        }
        sizes
    }

    /// Largest number of ground nodes found in a single connected component;
    /// 0 without ground nodes.
    pub fn largest_ground_component(&self) -> usize {
        self.ground_component_sizes().into_iter().max().unwrap_or(0)
    }
}

/// Largest ground component for agents indexed `0..n` by id, avoiding the
/// id lookups of [`CommGraph`]. Agent ids must equal their slice index.
pub fn largest_ground_component_of(
    agents: &[AgentState],
    comm_range: f64,
    ground_direct_range: Option<f64>,
) -> usize {
    let mut uf = UnionFind::new(agents.len());
    let linked = |a: &AgentState, b: &AgentState, range: f64| a.position.distance(b.position) <= range;
    for (i, a) in agents.iter().enumerate() {
        debug_assert_eq!(a.id, i);
        match a.kind {
            AgentKind::Air => {
                for (j, b) in agents.iter().enumerate() {
                    let counted = j > i || b.kind == AgentKind::Ground;
                    if j != i && counted && linked(a, b, comm_range) {
                        uf.union(i, j);
                    }
                }
            }
            AgentKind::Ground => {
                if let Some(r) = ground_direct_range {
                    for (j, b) in agents.iter().enumerate().skip(i + 1) {
                        if b.kind == AgentKind::Ground && linked(a, b, r) {
                            uf.union(i, j);
                        }
                    }
                }
            }
        }
    }
    let mut counts = vec![0usize; agents.len()];
    let mut best = 0;
    for (i, a) in agents.iter().enumerate() {
        if a.kind == AgentKind::Ground {
            let r = uf.find(i);
            counts[r] += 1;
            best = best.max(counts[r]);
        }
    }
    best
}

/// Mean over timesteps of the largest ground component as a fraction of the
/// ground population.
pub fn connectivity_fraction(sizes: &[usize], n_ground: usize) -> Result<f64, MetricsError> {
    if n_ground == 0 {
        return Err(MetricsError::NoGroundAgents);
    }
    if sizes.is_empty() {
        return Err(MetricsError::EmptySeries);
    }
    let total: f64 = sizes.iter().map(|&s| s as f64 / n_ground as f64).sum();
    Ok(total / sizes.len() as f64)
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        true
    }

    pub fn component_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r]
    }
}
