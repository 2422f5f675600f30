//! Cycle routing through a required node set.
//!
//! The heuristic works in three stages:
//!
//! 1. From every required node, a breadth-first search picks the shortest
//!    path that carries the highest fraction of required nodes.
//! 2. The best such seed path is closed into a cycle by the shortest
//!    return path that reuses none of its links.
//! 3. Required nodes still missing are spliced in one at a time. For each
//!    cycle link `(a, b)` the cheapest pair of link-disjoint detours
//!    `a -> v -> b` outside the cycle is found with a two-unit min-cost
//!    flow, and the link whose replacement yields the shortest cycle wins.
//!
//! Routes are closed trails: links are never reused, nodes may be.
//! Every tie is broken by the lexicographic order of node sequences.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::RoutingError;
use crate::quorums::QuorumSet;
use crate::topology::{relabel, Edge, NodeId, NodeMapping, Topology};

/// Nodes that must all lie on one cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunicationSet {
    members: BTreeSet<NodeId>,
}

impl CommunicationSet {
    pub fn new(g: &Topology, members: impl IntoIterator<Item = NodeId>) -> Result<Self, RoutingError> {
        let members: BTreeSet<NodeId> = members.into_iter().collect();
        if members.is_empty() {
            return Err(RoutingError::InvalidInput("empty communication set".into()));
        }
        if let Some(&v) = members.iter().find(|&&v| !g.contains(v)) {
            return Err(RoutingError::InvalidInput(format!("node {v} not in topology")));
        }
        Ok(CommunicationSet { members })
    }

    pub fn members(&self) -> &BTreeSet<NodeId> {
        &self.members
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.members.contains(&v)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Closed trail starting and ending at its hub.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CycleRoute {
    sequence: Vec<NodeId>,
}

impl CycleRoute {
    /// Validates adjacency, closure and link-distinctness. The hub is the
    /// first node of `sequence`.
    pub fn new(g: &Topology, sequence: Vec<NodeId>) -> Result<Self, RoutingError> {
        if sequence.len() < 4 {
            return Err(RoutingError::InvalidInput(format!(
                "cycle needs at least 3 links: {sequence:?}"
            )));
        }
        if sequence.first() != sequence.last() {
            return Err(RoutingError::InvalidInput(format!("walk is not closed: {sequence:?}")));
        }
        let mut used = HashSet::new();
        for w in sequence.windows(2) {
            if !g.has_edge(w[0], w[1]) {
                return Err(RoutingError::InvalidInput(format!("{}-{} is not a link", w[0], w[1])));
            }
            if !used.insert(Edge::new(w[0], w[1])) {
                return Err(RoutingError::InvalidInput(format!("link {}-{} used twice", w[0], w[1])));
            }
        }
        Ok(CycleRoute { sequence })
    }

    pub fn hub(&self) -> NodeId {
        self.sequence[0]
    }

    /// Closed node sequence, hub first and last.
    pub fn sequence(&self) -> &[NodeId] {
        &self.sequence
    }

    /// Number of links.
    pub fn len(&self) -> usize {
        self.sequence.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.sequence.windows(2).map(|w| Edge::new(w[0], w[1]))
    }

    pub fn nodes(&self) -> BTreeSet<NodeId> {
        self.sequence.iter().copied().collect()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.sequence.contains(&v)
    }

    pub fn covers(&self, c: &CommunicationSet) -> bool {
        c.members.iter().all(|&v| self.contains(v))
    }

    /// Same trail started at the first visit of `hub`.
    pub fn rotate_to(&self, hub: NodeId) -> Option<CycleRoute> {
        let pos = self.sequence.iter().position(|&v| v == hub)?;
        let body = &self.sequence[..self.sequence.len() - 1];
        let mut seq: Vec<NodeId> = body[pos..].iter().chain(&body[..pos]).copied().collect();
        seq.push(hub);
        Some(CycleRoute { sequence: seq })
    }

    /// Opposite orientation, same hub.
    pub fn reversed(&self) -> CycleRoute {
        let mut seq = self.sequence.clone();
        seq.reverse();
        CycleRoute { sequence: seq }
    }
}

impl fmt::Display for CycleRoute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.sequence.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("-"))
    }
}

/// Seed path chosen by [`ratio_bfs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedPath {
    pub nodes: Vec<NodeId>,
    pub required: usize,
}

impl SeedPath {
    pub fn hops(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn ratio(&self) -> f64 {
        self.required as f64 / self.nodes.len() as f64
    }

    /// Best ratio first, then fewer hops, then smaller sequence.
    fn rank(&self, other: &SeedPath) -> Ordering {
        let lhs = self.required * other.nodes.len();
        let rhs = other.required * self.nodes.len();
        rhs.cmp(&lhs)
            .then(self.hops().cmp(&other.hops()))
            .then_with(|| self.nodes.cmp(&other.nodes))
    }
}

/// Breadth-first search from `source` over shortest paths, returning the
/// path with the best ratio of required nodes to path nodes. For a
/// single-member set the path is just `[source]`.
pub fn ratio_bfs(g: &Topology, source: NodeId, c: &CommunicationSet) -> Option<SeedPath> {
    if !c.contains(source) {
        return None;
    }
    if c.len() == 1 {
        return Some(SeedPath {
            nodes: vec![source],
            required: 1,
        });
    }
    let best = best_shortest_paths(g, source, &HashSet::new(), |v| c.contains(v));
    c.members
        .iter()
        .filter(|&&t| t != source)
        .filter_map(|&t| best[t as usize].clone())
        .min_by(|a, b| a.rank(b))
}

/// For every node reachable from `source` without crossing `forbidden`,
/// the shortest path that visits the most `wanted` nodes, ties going to
/// the smaller node sequence. `required` counts wanted nodes on the path.
fn best_shortest_paths(
    g: &Topology,
    source: NodeId,
    forbidden: &HashSet<Edge>,
    wanted: impl Fn(NodeId) -> bool,
) -> Vec<Option<SeedPath>> {
    let n = g.n();
    let usable = |u: NodeId, v: NodeId| !forbidden.contains(&Edge::new(u, v));
    let mut dist = vec![usize::MAX; n + 1];
    let mut order = Vec::with_capacity(n);
    dist[source as usize] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for &v in g.neighbors(u) {
            if dist[v as usize] == usize::MAX && usable(u, v) {
                dist[v as usize] = dist[u as usize] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut best: Vec<Option<SeedPath>> = vec![None; n + 1];
    best[source as usize] = Some(SeedPath {
        nodes: vec![source],
        required: usize::from(wanted(source)),
    });
    for &v in &order[1..] {
        let mut pick: Option<SeedPath> = None;
        for &u in g.neighbors(v) {
            if dist[u as usize] == usize::MAX || dist[u as usize] + 1 != dist[v as usize] || !usable(u, v) {
                continue;
            }
            let prev = best[u as usize].as_ref().expect("processed in BFS order");
            let required = prev.required + usize::from(wanted(v));
            let better = match &pick {
                None => true,
                Some(p) => {
                    required > p.required
                        || (required == p.required && prev.nodes[..] < p.nodes[..p.nodes.len() - 1])
                }
            };
            if better {
                let mut nodes = prev.nodes.clone();
                nodes.push(v);
                pick = Some(SeedPath { nodes, required });
            }
        }
        best[v as usize] = pick;
    }
    best
}

/// Closes a simple path into a cycle with the shortest return path that
/// reuses none of its links. Among equally short return paths the one
/// picking up the most members of `c` not already on `path` wins, then
/// the smaller node sequence. The result's hub is `path[0]`.
pub fn close_cycle(g: &Topology, path: &[NodeId], c: &CommunicationSet) -> Result<CycleRoute, RoutingError> {
    let source = *path
        .first()
        .ok_or_else(|| RoutingError::InvalidInput("empty path".into()))?;
    let sink = *path.last().expect("non-empty");
    let wanted = |v: NodeId| c.contains(v) && !path.contains(&v);
    let no_return = RoutingError::NoReturnPath { start: source, sink };
    if path.len() == 1 {
        // shortest cycle through the source
        let mut best: Option<(usize, Vec<NodeId>)> = None;
        for &w in g.neighbors(source) {
            let skip = HashSet::from([Edge::new(source, w)]);
            if let Some(back) = best_shortest_paths(g, w, &skip, wanted)[source as usize].take() {
                let mut seq = vec![source];
                seq.extend(back.nodes);
                let better = best.as_ref().is_none_or(|(req, b)| {
                    (seq.len(), std::cmp::Reverse(back.required), &seq) < (b.len(), std::cmp::Reverse(*req), b)
                });
                if better {
                    best = Some((back.required, seq));
                }
            }
        }
        let (_, seq) = best.ok_or(no_return)?;
        return CycleRoute::new(g, seq);
    }
    let forbidden: HashSet<Edge> = path.windows(2).map(|w| Edge::new(w[0], w[1])).collect();
    let back = best_shortest_paths(g, sink, &forbidden, wanted)[source as usize]
        .take()
        .ok_or(no_return)?;
    let mut seq = path.to_vec();
    seq.extend_from_slice(&back.nodes[1..]);
    CycleRoute::new(g, seq)
}

/// Unit-capacity residual network over the topology's links, with an arc
/// from every node to an extra sink node. Arc `i` and `i ^ 1` are
/// residual twins; link `k` owns arcs `4k..4k + 4`.
struct DetourNet {
    n: usize,
    head: Vec<usize>,
    to: Vec<usize>,
    cost: Vec<i32>,
    out: Vec<Vec<usize>>,
    sink_arc: Vec<usize>,
}

impl DetourNet {
    fn new(g: &Topology) -> Self {
        let n = g.n();
        let mut net = DetourNet {
            n,
            head: Vec::new(),
            to: Vec::new(),
            cost: Vec::new(),
            out: vec![Vec::new(); n + 2],
            sink_arc: vec![usize::MAX; n + 1],
        };
        for e in g.edges() {
            let (x, y) = e.endpoints();
            net.add_arc(x as usize, y as usize, 1);
            net.add_arc(y as usize, x as usize, 1);
        }
        for v in 1..=n {
            net.sink_arc[v] = net.head.len();
            net.add_arc(v, n + 1, 0);
        }
        net
    }

    fn add_arc(&mut self, u: usize, w: usize, k: i32) {
        for (from, dest, ct) in [(u, w, k), (w, u, -k)] {
            self.out[from].push(self.head.len());
            self.head.push(from);
            self.to.push(dest);
            self.cost.push(ct);
        }
    }

    /// Blocked-link mask covering the links of the given stretches.
    fn mask<'a>(g: &Topology, stretches: impl IntoIterator<Item = &'a [NodeId]>) -> Vec<bool> {
        let mut blocked = vec![false; g.num_edges()];
        for seq in stretches {
            for w in seq.windows(2) {
                blocked[g.edge_id(w[0], w[1]).expect("cycle links exist")] = true;
            }
        }
        blocked
    }

    /// Two link-disjoint walks from `v` ending at `a` and `b` (both at
    /// `a` when `a == b`), minimizing their total length, over links not
    /// `blocked`. Returns `(walk to a, walk to b)` each starting at `v`.
    fn detours(&self, v: NodeId, a: NodeId, b: NodeId, blocked: &[bool]) -> Option<(Vec<NodeId>, Vec<NodeId>)> {
        let n = self.n;
        let sink = n + 1;
        let mut cap: Vec<i32> = (0..self.head.len())
            .map(|i| if i % 2 == 1 || i >= 4 * blocked.len() || blocked[i / 4] { 0 } else { 1 })
            .collect();
        if a == b {
            cap[self.sink_arc[a as usize]] = 2;
        } else {
            cap[self.sink_arc[a as usize]] = 1;
            cap[self.sink_arc[b as usize]] = 1;
        }
        let src = v as usize;
        let mut dist = vec![i32::MAX; n + 2];
        let mut via = vec![usize::MAX; n + 2];
        let mut queued = vec![false; n + 2];
        for _ in 0..2 {
            // queue-based Bellman-Ford over the residual graph
            dist.fill(i32::MAX);
            dist[src] = 0;
            let mut queue = VecDeque::from([src]);
            while let Some(u) = queue.pop_front() {
                queued[u] = false;
                for &i in &self.out[u] {
                    let w = self.to[i];
                    if cap[i] > 0 && dist[u] + self.cost[i] < dist[w] {
                        dist[w] = dist[u] + self.cost[i];
                        via[w] = i;
                        if !queued[w] {
                            queued[w] = true;
                            queue.push_back(w);
                        }
                    }
                }
            }
            if dist[sink] == i32::MAX {
                return None;
            }
            let mut cur = sink;
            while cur != src {
                let i = via[cur];
                cap[i] -= 1;
                cap[i ^ 1] += 1;
                cur = self.head[i];
            }
        }
        // flow on a forward arc equals the capacity its residual twin gained
        let mut flow: Vec<i32> = (0..self.head.len()).map(|i| if i % 2 == 0 { cap[i ^ 1] } else { 0 }).collect();
        let mut walks = Vec::new();
        for _ in 0..2 {
            let mut walk = vec![v];
            let mut cur = src;
            loop {
                let i = self.out[cur].iter().copied().find(|&i| flow[i] > 0)?;
                flow[i] -= 1;
                if self.to[i] == sink {
                    break;
                }
                cur = self.to[i];
                walk.push(cur as NodeId);
            }
            walks.push(walk);
        }
        let (w1, w2) = (walks.swap_remove(0), walks.swap_remove(0));
        if *w1.last()? == a {
            Some((w1, w2))
        } else {
            Some((w2, w1))
        }
    }
}

/// Splices `v` into the cycle by replacing the cycle link whose cheapest
/// link-disjoint detour through `v` gives the shortest result. When `v`
/// hangs off a single cycle node, a loop out of that node is also
/// considered.
pub fn insert_missing(g: &Topology, cycle: &CycleRoute, v: NodeId) -> Result<CycleRoute, RoutingError> {
    if cycle.contains(v) {
        return Err(RoutingError::InvalidInput(format!("node {v} already on cycle")));
    }
    let seq = splice(g, cycle.sequence(), v, 1, |_| false).ok_or(RoutingError::InsertionInfeasible { node: v })?;
    CycleRoute::new(g, seq)
}

/// Shortest sequence obtained by replacing a stretch of at most `max_span`
/// cycle links with two link-disjoint walks through `v`, or by hanging a
/// loop through `v` off a cycle node. Stretches whose interior holds a
/// `keep` node found nowhere else on the cycle are left alone.
fn splice(
    g: &Topology,
    seq: &[NodeId],
    v: NodeId,
    max_span: usize,
    keep: impl Fn(NodeId) -> bool,
) -> Option<Vec<NodeId>> {
    let last = seq.len() - 1;
    let net = DetourNet::new(g);
    let mut best: Option<Vec<NodeId>> = None;
    let mut consider = |candidate: Vec<NodeId>| {
        if best
            .as_ref()
            .is_none_or(|b| (candidate.len(), &candidate) < (b.len(), b))
        {
            best = Some(candidate);
        }
    };
    for i in 0..last {
        for j in i + 1..=(i + max_span).min(last) {
            if j - i == last {
                continue;
            }
            let outside = || seq[..=i].iter().chain(&seq[j..]);
            if seq[i + 1..j].iter().any(|&x| keep(x) && !outside().any(|&y| y == x)) {
                continue;
            }
            let blocked = DetourNet::mask(g, [&seq[..=i], &seq[j..]]);
            if let Some((to_a, to_b)) = net.detours(v, seq[i], seq[j], &blocked) {
                let mut cand: Vec<NodeId> = seq[..=i].to_vec();
                cand.extend(to_a.iter().rev().skip(1));
                cand.extend(to_b.iter().skip(1));
                cand.extend_from_slice(&seq[j + 1..]);
                consider(cand);
            }
        }
    }
    let blocked = DetourNet::mask(g, [seq]);
    let mut seen = BTreeSet::new();
    for (i, &a) in seq[..last].iter().enumerate() {
        if !seen.insert(a) {
            continue;
        }
        if let Some((w1, w2)) = net.detours(v, a, a, &blocked) {
            let mut cand: Vec<NodeId> = seq[..=i].to_vec();
            cand.extend(w1.iter().rev().skip(1));
            cand.extend(w2.iter().skip(1));
            cand.extend_from_slice(&seq[i + 1..]);
            consider(cand);
        }
    }
    best
}

/// Multi-source BFS distance from the cycle's nodes.
fn distance_from(g: &Topology, nodes: &BTreeSet<NodeId>) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.n() + 1];
    let mut queue = VecDeque::new();
    for &v in nodes {
        dist[v as usize] = 0;
        queue.push_back(v);
    }
    while let Some(u) = queue.pop_front() {
        for &w in g.neighbors(u) {
            if dist[w as usize] == usize::MAX {
                dist[w as usize] = dist[u as usize] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Inserts the missing members of `c`, nearest to the cycle first.
/// Short stretches of the cycle may be rerouted to reach a member; when
/// that fails for every missing member, any stretch may be.
fn complete(g: &Topology, c: &CommunicationSet, mut cycle: CycleRoute) -> Result<CycleRoute, RoutingError> {
    const SHORT_SPAN: usize = 2;
    loop {
        let on_cycle = cycle.nodes();
        let dist = distance_from(g, &on_cycle);
        let mut missing: Vec<NodeId> = c.members.iter().copied().filter(|v| !on_cycle.contains(v)).collect();
        if missing.is_empty() {
            return Ok(cycle);
        }
        missing.sort_by_key(|&v| (dist[v as usize], v));
        let seq = cycle.sequence();
        let next = [SHORT_SPAN, seq.len()].iter().find_map(|&span| {
            missing
                .iter()
                .find_map(|&v| splice(g, seq, v, span, |x| c.contains(x)))
        });
        match next {
            Some(seq) => cycle = CycleRoute::new(g, seq)?,
            None => return Err(RoutingError::InsertionInfeasible { node: missing[0] }),
        }
    }
}

/// Shortest cycles through pairs of members: two link-disjoint paths
/// between them with least total length.
fn pair_cycles(g: &Topology, c: &CommunicationSet) -> Vec<CycleRoute> {
    let members: Vec<NodeId> = c.members.iter().copied().collect();
    let net = DetourNet::new(g);
    let open = vec![false; g.num_edges()];
    let mut out = Vec::new();
    for (i, &u) in members.iter().enumerate() {
        for &w in &members[i + 1..] {
            if let Some((p, q)) = net.detours(u, w, w, &open) {
                let mut seq = p;
                seq.extend(q.iter().rev().skip(1));
                if let Ok(cycle) = CycleRoute::new(g, seq) {
                    out.push(cycle);
                }
            }
        }
    }
    out
}

/// Repeatedly replaces a stretch of the cycle by a strictly shorter path
/// that reuses no other cycle link, as long as every member of `c` stays
/// on the cycle. The hub stays first.
pub fn shortcut(g: &Topology, cycle: &CycleRoute, c: &CommunicationSet) -> CycleRoute {
    let mut seq = cycle.sequence().to_vec();
    'improve: loop {
        let last = seq.len() - 1;
        for span in (2..last).rev() {
            for i in 0..=last - span {
                let j = i + span;
                let kept = |v: NodeId| seq[..=i].contains(&v) || seq[j..].contains(&v);
                if seq[i + 1..j].iter().any(|&v| c.contains(v) && !kept(v)) {
                    continue;
                }
                let outside: HashSet<Edge> = seq[..=i]
                    .windows(2)
                    .chain(seq[j..].windows(2))
                    .map(|w| Edge::new(w[0], w[1]))
                    .collect();
                let Some(path) = best_shortest_paths(g, seq[i], &outside, |v| c.contains(v))[seq[j] as usize].take() else {
                    continue;
                };
                if path.hops() < span {
                    let mut next: Vec<NodeId> = seq[..i].to_vec();
                    next.extend(&path.nodes);
                    next.extend_from_slice(&seq[j + 1..]);
                    if next.len() >= 4 && CycleRoute::new(g, next.clone()).is_ok() {
                        seq = next;
                        continue 'improve;
                    }
                }
            }
        }
        break;
    }
    CycleRoute { sequence: seq }
}

/// Routes one cycle through every node of `c`. The hub of the result is
/// the smallest member of `c`; use [`CycleRoute::rotate_to`] for another.
///
/// Each member's seed path is closed into a starting cycle, as is the
/// shortest cycle through each pair of members. Every start is completed
/// and tightened with [`shortcut`]; the shortest outcome wins, earlier
/// starts on ties.
pub fn route_cycle(g: &Topology, c: &CommunicationSet) -> Result<CycleRoute, RoutingError> {
    let mut seeds: Vec<SeedPath> = c.members.iter().filter_map(|&s| ratio_bfs(g, s, c)).collect();
    seeds.sort_by(|a, b| a.rank(b));
    seeds.dedup();
    let hub = *c.members.iter().next().expect("non-empty");
    let mut starts: Vec<CycleRoute> = seeds.iter().filter_map(|s| close_cycle(g, &s.nodes, c).ok()).collect();
    starts.extend(pair_cycles(g, c));
    let mut seen = HashSet::new();
    starts.retain(|s| seen.insert(s.rotate_to(s.sequence().iter().copied().min().expect("non-empty")).expect("on cycle").sequence));
    if c.len() == 1 {
        starts.extend(close_cycle(g, &[hub], c));
    }
    let best = starts
        .into_iter()
        .filter_map(|start| complete(g, c, start).ok())
        .map(|cycle| shortcut(g, &cycle.rotate_to(hub).expect("hub is a member"), c))
        .reduce(|a, b| if b.len() < a.len() { b } else { a });
    if let Some(cycle) = best {
        return Ok(cycle);
    }
    let members: Vec<NodeId> = c.members.iter().copied().collect();
    let cut = g
        .bridges()
        .into_iter()
        .filter(|e| {
            // a bridge matters when required nodes sit on both sides
            let side = reachable_avoiding(g, e.endpoints().0, &HashSet::from([*e]));
            members.iter().any(|&m| side[m as usize]) && members.iter().any(|&m| !side[m as usize])
        })
        .collect();
    Err(RoutingError::Infeasible { members, cut })
}

fn reachable_avoiding(g: &Topology, from: NodeId, forbidden: &HashSet<Edge>) -> Vec<bool> {
    let mut seen = vec![false; g.n() + 1];
    seen[from as usize] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        for &w in g.neighbors(u) {
            if !seen[w as usize] && !forbidden.contains(&Edge::new(u, w)) {
                seen[w as usize] = true;
                queue.push_back(w);
            }
        }
    }
    seen
}

/// Routes one cycle per quorum. Quorum `S_i` is relabeled through `m`
/// and its cycle's hub is the image of node `i`.
pub fn route_all(g: &Topology, qs: &QuorumSet, m: &NodeMapping) -> Result<Vec<CycleRoute>, RoutingError> {
    if qs.n() != g.n() || m.n() != g.n() {
        return Err(RoutingError::InvalidInput(format!(
            "size mismatch: topology {} quorum set {} mapping {}",
            g.n(),
            qs.n(),
            m.n()
        )));
    }
    let mut cycles = Vec::with_capacity(qs.len());
    let mut failures = Vec::new();
    for (i, quorum) in qs.quorums().iter().enumerate() {
        let mapped = relabel(quorum, m).map_err(|e| RoutingError::InvalidInput(e.to_string()))?;
        let hub = m.apply(i as NodeId + 1).map_err(|e| RoutingError::InvalidInput(e.to_string()))?;
        let c = CommunicationSet::new(g, mapped)?;
        match route_cycle(g, &c) {
            Ok(cycle) => match cycle.rotate_to(hub) {
                Some(c) => cycles.push(c),
                None => failures.push((i + 1, RoutingError::InvalidInput(format!("hub {hub} not on cycle")))),
            },
            Err(e) => failures.push((i + 1, e)),
        }
    }
    if failures.is_empty() {
        Ok(cycles)
    } else {
        Err(RoutingError::Quorums { failures })
    }
}

#[derive(Serialize, Deserialize)]
struct CycleRecord {
    quorum: usize,
    hub: NodeId,
    sequence: Vec<NodeId>,
}

/// One line per cycle: `<quorum> <hub> <node> <node> ...`.
pub fn cycles_to_text(cycles: &[CycleRoute]) -> String {
    let mut s = String::from("# quorum hub sequence\n");
    for (i, c) in cycles.iter().enumerate() {
        let seq: Vec<String> = c.sequence().iter().map(|v| v.to_string()).collect();
        s.push_str(&format!("{} {} {}\n", i + 1, c.hub(), seq.join(" ")));
    }
    s
}

pub fn cycles_to_json(cycles: &[CycleRoute]) -> String {
    let records: Vec<CycleRecord> = cycles
        .iter()
        .enumerate()
        .map(|(i, c)| CycleRecord {
            quorum: i + 1,
            hub: c.hub(),
            sequence: c.sequence().to_vec(),
        })
        .collect();
    serde_json::to_string_pretty(&records).expect("cycle json")
}

/// Inverse of [`cycles_to_text`]; cycles are revalidated against `g`.
pub fn cycles_from_text(g: &Topology, text: &str) -> Result<Vec<CycleRoute>, RoutingError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums: Result<Vec<NodeId>, _> = line.split_whitespace().map(str::parse).collect();
        let nums = nums.map_err(|_| RoutingError::InvalidInput(format!("line {}: bad number", lineno + 1)))?;
        if nums.len() < 3 || nums[0] as usize != out.len() + 1 || nums[1] != nums[2] {
            return Err(RoutingError::InvalidInput(format!("line {}: malformed cycle record", lineno + 1)));
        }
        out.push(CycleRoute::new(g, nums[2..].to_vec())?);
    }
    Ok(out)
}
