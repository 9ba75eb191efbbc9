//! Generation graphs and the topologies used by the experiments.
//!
//! A generation graph records which node pairs can create Bell pairs
//! directly, together with the per-pair generation rate. Edges exist
//! exactly where the rate is positive, there are no self-loops, and the
//! structure is undirected by construction ([`PairKey`] keys).

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;

use crate::ids::{InvalidPair, NodeId, PairKey};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TopologyError {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("node {node} out of range for {node_count} nodes")]
    NodeOutOfRange { node: NodeId, node_count: usize },
    #[error("no path between {a} and {b}: nodes lie in distinct connected components")]
    Unreachable { a: NodeId, b: NodeId },
    #[error(transparent)]
    InvalidPair(#[from] InvalidPair),
}

/// Undirected graph of direct Bell-pair generation capability.
///
/// Invariants: no self-loops, and an edge is present iff its rate is
/// strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationGraph {
    node_count: usize,
    edges: BTreeMap<PairKey, f64>,
}

impl GenerationGraph {
    pub fn new(node_count: usize) -> Self {
        GenerationGraph {
            node_count,
            edges: BTreeMap::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count).map(NodeId)
    }

    fn check_node(&self, node: NodeId) -> Result<(), TopologyError> {
        if node.index() >= self.node_count {
            return Err(TopologyError::NodeOutOfRange {
                node,
                node_count: self.node_count,
            });
        }
        Ok(())
    }

    /// Inserts an undirected generation edge with a strictly positive rate.
    pub fn add_edge(&mut self, a: NodeId, b: NodeId, rate: f64) -> Result<(), TopologyError> {
        self.check_node(a)?;
        self.check_node(b)?;
        let key = PairKey::new(a, b)?;
        if !rate.is_finite() || rate <= 0.0 {
            return Err(TopologyError::InvalidTopology(format!(
                "edge {key} needs a finite positive rate, got {rate}"
            )));
        }
        if self.edges.insert(key, rate).is_some() {
            return Err(TopologyError::InvalidTopology(format!(
                "duplicate edge {key}"
            )));
        }
        Ok(())
    }

    /// Generation rate g(x,y); zero off-edge and on the diagonal.
    pub fn rate(&self, a: NodeId, b: NodeId) -> f64 {
        match PairKey::new(a, b) {
            Ok(key) => self.edges.get(&key).copied().unwrap_or(0.0),
            Err(_) => 0.0,
        }
    }

    pub fn rate_key(&self, key: PairKey) -> f64 {
        self.edges.get(&key).copied().unwrap_or(0.0)
    }

    pub fn has_edge(&self, key: PairKey) -> bool {
        self.edges.contains_key(&key)
    }

    /// Edges in canonical pair order.
    pub fn edges(&self) -> impl Iterator<Item = (PairKey, f64)> + '_ {
        self.edges.iter().map(|(&k, &r)| (k, r))
    }

    /// Adjacency lists, each sorted ascending.
    pub fn adjacency(&self) -> Vec<Vec<NodeId>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for &key in self.edges.keys() {
            adj[key.lo().index()].push(key.hi());
            adj[key.hi().index()].push(key.lo());
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }
}

/// Union-find over dense node indices.
struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    components: usize,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
            components: n,
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.components -= 1;
        true
    }
}

/// Cycle on `n >= 3` nodes, all rates 1.
pub fn build_cycle(n: usize) -> Result<GenerationGraph, TopologyError> {
    if n < 3 {
        return Err(TopologyError::InvalidTopology(format!(
            "cycle needs at least 3 nodes, got {n} (n=2 would duplicate an unordered edge)"
        )));
    }
    let mut graph = GenerationGraph::new(n);
    for i in 0..n {
        graph.add_edge(NodeId(i), NodeId((i + 1) % n), 1.0)?;
    }
    Ok(graph)
}

/// All candidate edges of the `side x side` wraparound grid, canonical order.
pub fn torus_candidate_edges(side: usize) -> Vec<PairKey> {
    let node = |row: usize, col: usize| NodeId(row * side + col);
    let mut candidates = Vec::with_capacity(2 * side * side);
    for row in 0..side {
        for col in 0..side {
            let here = node(row, col);
            let right = node(row, (col + 1) % side);
            let down = node((row + 1) % side, col);
            candidates.push(PairKey::new(here, right).expect("side >= 3 keeps neighbors distinct"));
            candidates.push(PairKey::new(here, down).expect("side >= 3 keeps neighbors distinct"));
        }
    }
    candidates.sort_unstable();
    candidates
}

/// Random connected subgraph of the wraparound grid, all rates 1.
///
/// Candidate torus edges are drawn uniformly at random without
/// replacement (a seeded shuffle) and inserted one by one; insertion
/// stops with the first edge that makes the graph connected. The second
/// return value is the insertion order, ending with that edge.
pub fn build_torus_grid_traced(
    side: usize,
    rng: &mut impl Rng,
) -> Result<(GenerationGraph, Vec<PairKey>), TopologyError> {
    if side < 3 {
        return Err(TopologyError::InvalidTopology(format!(
            "torus grid needs side >= 3, got {side} (side=2 wraps neighbors onto each other)"
        )));
    }
    let node_count = side * side;
    let mut pool = torus_candidate_edges(side);
    // Fisher-Yates, driven by the caller's seeded generator.
    for i in (1..pool.len()).rev() {
        let j = rng.gen_range(0..=i);
        pool.swap(i, j);
    }

    let mut graph = GenerationGraph::new(node_count);
    let mut uf = UnionFind::new(node_count);
    let mut order = Vec::new();
    for key in pool {
        graph.add_edge(key.lo(), key.hi(), 1.0)?;
        order.push(key);
        uf.union(key.lo().index(), key.hi().index());
        if uf.components == 1 {
            return Ok((graph, order));
        }
    }
    unreachable!("the full torus candidate set always connects the grid")
}

/// As [`build_torus_grid_traced`], discarding the insertion order.
pub fn build_torus_grid(side: usize, rng: &mut impl Rng) -> Result<GenerationGraph, TopologyError> {
    build_torus_grid_traced(side, rng).map(|(graph, _)| graph)
}

/// Hop count of the shortest path between `a` and `b`; 0 when `a == b`.
pub fn shortest_path_len(
    graph: &GenerationGraph,
    a: NodeId,
    b: NodeId,
) -> Result<usize, TopologyError> {
    graph.check_node(a)?;
    graph.check_node(b)?;
    if a == b {
        return Ok(0);
    }
    let adj = graph.adjacency();
    let mut dist = vec![usize::MAX; graph.node_count()];
    let mut queue = VecDeque::new();
    dist[a.index()] = 0;
    queue.push_back(a);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u.index()] {
            if dist[v.index()] == usize::MAX {
                dist[v.index()] = dist[u.index()] + 1;
                if v == b {
                    return Ok(dist[v.index()]);
                }
                queue.push_back(v);
            }
        }
    }
    Err(TopologyError::Unreachable { a, b })
}

/// True iff a single connected component spans all nodes.
pub fn is_connected(graph: &GenerationGraph) -> bool {
    let labels = component_labels(graph);
    labels.iter().all(|&l| l == 0)
}

/// Component label per node; labels are dense and assigned in node order.
pub fn component_labels(graph: &GenerationGraph) -> Vec<usize> {
    let adj = graph.adjacency();
    let mut labels = vec![usize::MAX; graph.node_count()];
    let mut next = 0;
    for start in 0..graph.node_count() {
        if labels[start] != usize::MAX {
            continue;
        }
        labels[start] = next;
        let mut queue = VecDeque::from([NodeId(start)]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u.index()] {
                if labels[v.index()] == usize::MAX {
                    labels[v.index()] = next;
                    queue.push_back(v);
                }
            }
        }
        next += 1;
    }
    labels
}
