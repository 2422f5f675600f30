//! Physical network model: an undirected simple graph over nodes `1..=n`,
//! file ingestion, validation and randomized node relabeling.
//!
//! Two file layouts are accepted. The edge-list layout is line based:
//!
//! ```text
//! # comment
//! n 4
//! 1 2
//! 2 3
//! ```
//!
//! and the structured layout is JSON: `{"n": 4, "edges": [[1, 2], [2, 3]]}`.
//! Both go through the same validation and produce identical [`Topology`]
//! values.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::TopologyError;

/// Node identifier, always in `1..=n`.
pub type NodeId = u32;

/// Undirected link, stored with `a <= b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    a: NodeId,
    b: NodeId,
}

impl Edge {
    pub fn new(u: NodeId, v: NodeId) -> Self {
        Edge {
            a: u.min(v),
            b: u.max(v),
        }
    }

    pub fn endpoints(&self) -> (NodeId, NodeId) {
        (self.a, self.b)
    }

    pub fn touches(&self, v: NodeId) -> bool {
        self.a == v || self.b == v
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.a, self.b)
    }
}

/// Where in an input a problem was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Line(usize),
    EdgeIndex(usize),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(l) => write!(f, "line {l}"),
            Location::EdgeIndex(i) => write!(f, "edge #{i}"),
        }
    }
}

/// A broken topology invariant. Indices refer to positions in the edge
/// list handed to [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoNodes,
    SelfLoop { index: usize, node: NodeId },
    DuplicateEdge { index: usize, first: usize, edge: Edge },
    OutOfRange { index: usize, node: NodeId, n: usize },
    Disconnected { unreachable: Vec<NodeId> },
}

impl Violation {
    fn edge_index(&self) -> Option<usize> {
        match self {
            Violation::SelfLoop { index, .. }
            | Violation::DuplicateEdge { index, .. }
            | Violation::OutOfRange { index, .. } => Some(*index),
            _ => None,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoNodes => write!(f, "topology has no nodes"),
            Violation::SelfLoop { node, .. } => write!(f, "self-loop on node {node}"),
            Violation::DuplicateEdge { edge, first, .. } => {
                write!(f, "duplicate edge {edge} (first given as edge #{first})")
            }
            Violation::OutOfRange { node, n, .. } => {
                write!(f, "node {node} out of range 1..={n}")
            }
            Violation::Disconnected { unreachable } => {
                write!(f, "graph is disconnected; unreachable from node 1: {unreachable:?}")
            }
        }
    }
}

/// Checks every [`Topology`] invariant on a raw edge list and reports all
/// violations found. An empty result means `Topology::new` will succeed.
pub fn validate(n: usize, edges: &[(NodeId, NodeId)]) -> Vec<Violation> {
    let mut out = Vec::new();
    if n == 0 {
        out.push(Violation::NoNodes);
        return out;
    }
    let mut seen: HashMap<Edge, usize> = HashMap::new();
    let mut adj = vec![Vec::new(); n + 1];
    for (index, &(u, v)) in edges.iter().enumerate() {
        let mut bad = false;
        for node in [u, v] {
            if node == 0 || node as usize > n {
                out.push(Violation::OutOfRange { index, node, n });
                bad = true;
                break;
            }
        }
        if bad {
            continue;
        }
        if u == v {
            out.push(Violation::SelfLoop { index, node: u });
            continue;
        }
        let e = Edge::new(u, v);
        if let Some(&first) = seen.get(&e) {
            out.push(Violation::DuplicateEdge {
                index,
                first,
                edge: e,
            });
            continue;
        }
        seen.insert(e, index);
        adj[u as usize].push(v);
        adj[v as usize].push(u);
    }
    let mut reached = vec![false; n + 1];
    reached[1] = true;
    let mut queue = VecDeque::from([1u32]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u as usize] {
            if !reached[v as usize] {
                reached[v as usize] = true;
                queue.push_back(v);
            }
        }
    }
    let unreachable: Vec<NodeId> = (1..=n as NodeId).filter(|&v| !reached[v as usize]).collect();
    if !unreachable.is_empty() {
        out.push(Violation::Disconnected { unreachable });
    }
    out
}

/// Validated, immutable network graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    n: usize,
    edges: Vec<Edge>,
    // index 0 unused
    adj: Vec<Vec<NodeId>>,
    edge_ids: HashMap<Edge, usize>,
}

#[derive(Serialize, Deserialize)]
struct TopologyJson {
    n: usize,
    edges: Vec<[NodeId; 2]>,
}

impl Topology {
    pub fn new(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Self, TopologyError> {
        Self::build(n, edges, Location::EdgeIndex)
    }

    fn build(
        n: usize,
        edges: &[(NodeId, NodeId)],
        locate: impl Fn(usize) -> Location,
    ) -> Result<Self, TopologyError> {
        if let Some(v) = validate(n, edges).into_iter().next() {
            return Err(TopologyError::Invalid {
                location: v.edge_index().map(&locate),
                violation: v,
            });
        }
        let mut sorted: Vec<Edge> = edges.iter().map(|&(u, v)| Edge::new(u, v)).collect();
        sorted.sort();
        let mut adj = vec![Vec::new(); n + 1];
        for e in &sorted {
            adj[e.a as usize].push(e.b);
            adj[e.b as usize].push(e.a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let edge_ids = sorted.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        Ok(Topology {
            n,
            edges: sorted,
            adj,
            edge_ids,
        })
    }

    /// Parses either the edge-list or the JSON layout.
    pub fn parse(text: &str) -> Result<Self, TopologyError> {
        if text.trim_start().starts_with('{') {
            Self::parse_json(text)
        } else {
            Self::parse_edge_list(text)
        }
    }

    pub fn parse_json(text: &str) -> Result<Self, TopologyError> {
        let raw: TopologyJson =
            serde_json::from_str(text).map_err(|e| TopologyError::Json(e.to_string()))?;
        let edges: Vec<(NodeId, NodeId)> = raw.edges.iter().map(|e| (e[0], e[1])).collect();
        Self::build(raw.n, &edges, Location::EdgeIndex)
    }

    pub fn parse_edge_list(text: &str) -> Result<Self, TopologyError> {
        let mut declared: Option<usize> = None;
        let mut edges = Vec::new();
        let mut lines = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let malformed = |message: String| TopologyError::Malformed {
                location: Location::Line(lineno),
                message,
            };
            if fields[0] == "n" {
                if declared.is_some() || !edges.is_empty() {
                    return Err(malformed("node-count header must appear once, before edges".into()));
                }
                if fields.len() != 2 {
                    return Err(malformed(format!("expected `n <count>`, got `{line}`")));
                }
                let n = fields[1]
                    .parse()
                    .map_err(|_| malformed(format!("bad node count `{}`", fields[1])))?;
                declared = Some(n);
                continue;
            }
            if fields.len() != 2 {
                return Err(malformed(format!("expected `<u> <v>`, got `{line}`")));
            }
            let parse_node = |s: &str| {
                s.parse::<NodeId>()
                    .map_err(|_| malformed(format!("bad node id `{s}`")))
            };
            edges.push((parse_node(fields[0])?, parse_node(fields[1])?));
            lines.push(lineno);
        }
        let n = declared.unwrap_or_else(|| {
            edges
                .iter()
                .map(|&(u, v)| u.max(v) as usize)
                .max()
                .unwrap_or(0)
        });
        Self::build(n, &edges, |i| Location::Line(lines[i]))
    }

    /// Loads one of the bundled reference networks by name.
    pub fn builtin(name: &str) -> Result<Self, TopologyError> {
        let text = match name.to_ascii_lowercase().as_str() {
            "nsfnet" => include_str!("../data/nsfnet.topo"),
            "arpanet" => include_str!("../data/arpanet.topo"),
            "american" => include_str!("../data/american.topo"),
            "chinese" => include_str!("../data/chinese.topo"),
            _ => return Err(TopologyError::UnknownBuiltin(name.to_string())),
        };
        Self::parse_edge_list(text)
    }

    pub const BUILTIN_NAMES: [&'static str; 4] = ["nsfnet", "arpanet", "american", "chinese"];

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        1..=self.n as NodeId
    }

    /// Neighbors of `v` in ascending order.
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adj[v as usize]
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v >= 1 && v as usize <= self.n
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.edge_ids.contains_key(&Edge::new(u, v))
    }

    /// Position of the edge in [`Topology::edges`].
    pub fn edge_id(&self, u: NodeId, v: NodeId) -> Option<usize> {
        self.edge_ids.get(&Edge::new(u, v)).copied()
    }

    /// Always empty for a constructed topology; kept for symmetry with
    /// the raw-input [`validate`].
    pub fn validate(&self) -> Vec<Violation> {
        let raw: Vec<(NodeId, NodeId)> = self.edges.iter().map(Edge::endpoints).collect();
        validate(self.n, &raw)
    }

    /// Edges whose removal disconnects the graph.
    pub fn bridges(&self) -> Vec<Edge> {
        // iterative Tarjan lowlink
        let n = self.n;
        let mut disc = vec![0usize; n + 1];
        let mut low = vec![0usize; n + 1];
        let mut timer = 1;
        let mut out = Vec::new();
        for root in 1..=n as NodeId {
            if disc[root as usize] != 0 {
                continue;
            }
            // (node, parent, next neighbor index)
            let mut stack: Vec<(NodeId, NodeId, usize)> = vec![(root, 0, 0)];
            disc[root as usize] = timer;
            low[root as usize] = timer;
            timer += 1;
            while let Some(&mut (u, parent, ref mut next)) = stack.last_mut() {
                if let Some(&v) = self.adj[u as usize].get(*next) {
                    *next += 1;
                    if v == parent {
                        continue;
                    }
                    if disc[v as usize] == 0 {
                        disc[v as usize] = timer;
                        low[v as usize] = timer;
                        timer += 1;
                        stack.push((v, u, 0));
                    } else {
                        low[u as usize] = low[u as usize].min(disc[v as usize]);
                    }
                } else {
                    stack.pop();
                    if parent != 0 {
                        low[parent as usize] = low[parent as usize].min(low[u as usize]);
                        if low[u as usize] > disc[parent as usize] {
                            out.push(Edge::new(parent, u));
                        }
                    }
                }
            }
        }
        out.sort();
        out
    }

    /// Serializes to the edge-list layout.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("n {}\n", self.n);
        for e in &self.edges {
            s.push_str(&format!("{} {}\n", e.a, e.b));
        }
        s
    }

    pub fn to_json(&self) -> String {
        let raw = TopologyJson {
            n: self.n,
            edges: self.edges.iter().map(|e| [e.a, e.b]).collect(),
        };
        serde_json::to_string(&raw).expect("topology json")
    }
}

/// Shorthand for [`Topology::parse`].
pub fn parse_topology(text: &str) -> Result<Topology, TopologyError> {
    Topology::parse(text)
}

/// A one-to-one relabeling of the nodes `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeMapping {
    perm: Vec<NodeId>,
    seed: Option<u64>,
}

impl NodeMapping {
    pub fn identity(n: usize) -> Self {
        NodeMapping {
            perm: (1..=n as NodeId).collect(),
            seed: None,
        }
    }

    /// `perm[i]` is the image of node `i + 1`.
    pub fn from_perm(perm: Vec<NodeId>) -> Result<Self, TopologyError> {
        let n = perm.len();
        let mut hit = vec![false; n + 1];
        for &p in &perm {
            if p == 0 || p as usize > n || hit[p as usize] {
                return Err(TopologyError::NotAPermutation);
            }
            hit[p as usize] = true;
        }
        Ok(NodeMapping { perm, seed: None })
    }

    /// Uniform random permutation drawn from `rng`.
    pub fn random(n: usize, rng: &mut ChaCha8Rng, seed: u64) -> Self {
        let mut perm: Vec<NodeId> = (1..=n as NodeId).collect();
        perm.shuffle(rng);
        NodeMapping {
            perm,
            seed: Some(seed),
        }
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[NodeId] {
        &self.perm
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| p as usize == i + 1)
    }

    /// Image of a single node.
    pub fn apply(&self, v: NodeId) -> Result<NodeId, TopologyError> {
        if v == 0 || v as usize > self.perm.len() {
            return Err(TopologyError::NodeOutOfRange {
                node: v,
                n: self.perm.len(),
            });
        }
        Ok(self.perm[v as usize - 1])
    }
}

/// Mapping #1 is always the identity; the remaining `count - 1` are
/// permutations drawn from a ChaCha8 stream seeded with `seed`.
pub fn generate_mappings(n: usize, count: usize, seed: u64) -> Vec<NodeMapping> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    out.push(NodeMapping::identity(n));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 1..count {
        out.push(NodeMapping::random(n, &mut rng, seed));
    }
    out
}

/// Image of a node set under a mapping.
pub fn relabel(nodes: &BTreeSet<NodeId>, m: &NodeMapping) -> Result<BTreeSet<NodeId>, TopologyError> {
    nodes.iter().map(|&v| m.apply(v)).collect()
}
