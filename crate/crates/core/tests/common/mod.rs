//! Independent oracles shared by the integration suites. Nothing here
//! calls into the code paths it is used to check.
#![allow(dead_code)]

use std::collections::BTreeSet;

use qcycle::{NodeId, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Pair multiplicity of a cyclic base by expanding all `n` shifted
/// quorums and counting every pair directly.
pub fn min_pair_multiplicity(n: usize, base: &[NodeId]) -> usize {
    let quorums: Vec<BTreeSet<usize>> = (0..n)
        .map(|i| base.iter().map(|&s| (s as usize - 1 + i) % n + 1).collect())
        .collect();
    let mut min = usize::MAX;
    for a in 1..=n {
        for b in a + 1..=n {
            let c = quorums.iter().filter(|q| q.contains(&a) && q.contains(&b)).count();
            min = min.min(c);
        }
    }
    min
}

/// Smallest base size over all subsets of `1..=n` containing node 1 whose
/// expansion puts every pair in at least `r` quorums.
pub fn exhaustive_min_k(n: usize, r: usize) -> Option<usize> {
    let mut best: Option<usize> = None;
    for mask in 0u32..(1 << (n - 1)) {
        let mut base: Vec<NodeId> = vec![1];
        base.extend((0..n - 1).filter(|i| mask >> i & 1 == 1).map(|i| i as NodeId + 2));
        if best.is_some_and(|b| base.len() >= b) {
            continue;
        }
        if min_pair_multiplicity(n, &base) >= r {
            best = Some(base.len());
        }
    }
    best
}

/// Length of the shortest closed trail (no repeated link) through every
/// node of `c`, by iterative-deepening enumeration of trails.
pub fn min_closed_trail(g: &Topology, c: &[NodeId]) -> Option<usize> {
    let n = g.n();
    let edges = g.edges();
    let mut eid = vec![vec![usize::MAX; n + 1]; n + 1];
    for (i, e) in edges.iter().enumerate() {
        let (a, b) = e.endpoints();
        eid[a as usize][b as usize] = i;
        eid[b as usize][a as usize] = i;
    }
    // all-pairs hop distance for pruning
    let mut dist = vec![vec![usize::MAX / 4; n + 1]; n + 1];
    for v in 1..=n {
        dist[v][v] = 0;
    }
    for e in edges {
        let (a, b) = e.endpoints();
        dist[a as usize][b as usize] = 1;
        dist[b as usize][a as usize] = 1;
    }
    for k in 1..=n {
        for i in 1..=n {
            for j in 1..=n {
                if dist[i][k] + dist[k][j] < dist[i][j] {
                    dist[i][j] = dist[i][k] + dist[k][j];
                }
            }
        }
    }
    let start = *c.iter().min()?;
    let mut cbit = vec![0u32; n + 1];
    for (i, &v) in c.iter().enumerate() {
        cbit[v as usize] = 1 << i;
    }
    let full = (1u32 << c.len()) - 1;

    struct Ctx<'a> {
        g: &'a Topology,
        eid: &'a [Vec<usize>],
        dist: &'a [Vec<usize>],
        cbit: &'a [u32],
        full: u32,
        start: NodeId,
        limit: usize,
    }
    fn dfs(cx: &Ctx, cur: NodeId, used: u64, seen: u32, len: usize) -> bool {
        if cur == cx.start && len > 0 && seen == cx.full {
            return true;
        }
        let left = cx.limit - len;
        if cx.dist[cur as usize][cx.start as usize] > left {
            return false;
        }
        let missing = (cx.full & !seen).count_ones() as usize;
        if missing > left {
            return false;
        }
        if left == 0 {
            return false;
        }
        for &w in cx.g.neighbors(cur) {
            let e = cx.eid[cur as usize][w as usize];
            if used >> e & 1 == 1 {
                continue;
            }
            if dfs(cx, w, used | 1 << e, seen | cx.cbit[w as usize], len + 1) {
                return true;
            }
        }
        false
    }
    for limit in 3..=edges.len() {
        let cx = Ctx {
            g,
            eid: &eid,
            dist: &dist,
            cbit: &cbit,
            full,
            start,
            limit,
        };
        if dfs(&cx, start, 0, cbit[start as usize], 0) {
            return Some(limit);
        }
    }
    None
}

pub fn is_connected(n: usize, edges: &[(NodeId, NodeId)]) -> bool {
    let mut seen = vec![false; n + 1];
    let mut stack = vec![1usize];
    seen[1] = true;
    while let Some(u) = stack.pop() {
        for &(a, b) in edges {
            let (a, b) = (a as usize, b as usize);
            let other = if a == u { b } else if b == u { a } else { continue };
            if !seen[other] {
                seen[other] = true;
                stack.push(other);
            }
        }
    }
    seen[1..].iter().all(|&s| s)
}

/// Every labeled connected simple graph on `n` nodes.
pub fn all_connected_graphs(n: usize) -> Vec<Topology> {
    let pairs: Vec<(NodeId, NodeId)> = (1..=n as NodeId)
        .flat_map(|a| (a + 1..=n as NodeId).map(move |b| (a, b)))
        .collect();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << pairs.len()) {
        let edges: Vec<(NodeId, NodeId)> =
            (0..pairs.len()).filter(|i| mask >> i & 1 == 1).map(|i| pairs[i]).collect();
        if is_connected(n, &edges) {
            out.push(Topology::new(n, &edges).unwrap());
        }
    }
    out
}

/// Random connected graph: a random spanning tree plus extra links, each
/// remaining pair kept with probability `density`.
pub fn random_connected_graph(n: usize, density: f64, rng: &mut ChaCha8Rng) -> Topology {
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    for v in 2..=n as NodeId {
        let u = rng.random_range(1..v);
        edges.push((u, v));
    }
    for a in 1..=n as NodeId {
        for b in a + 1..=n as NodeId {
            if !edges.contains(&(a, b)) && rng.random_bool(density) {
                edges.push((a, b));
            }
        }
    }
    Topology::new(n, &edges).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// All subsets of `1..=n` with size in `1..=max`.
pub fn subsets_up_to(n: usize, max: usize) -> Vec<Vec<NodeId>> {
    (1u32..(1 << n))
        .filter(|m| m.count_ones() as usize <= max)
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).map(|i| i as NodeId + 1).collect())
        .collect()
}

/// Ordered pairs served by one trail orientation: the signal leaves the
/// hub at `seq[0]` and runs forward until the first failed link; the
/// closing hub at the end hears everything that reaches it backwards up
/// to the last failed link. With `whole_cycle`, any failure kills the
/// trail.
pub fn trail_pairs(seq: &[NodeId], failed: &[(NodeId, NodeId)], whole_cycle: bool) -> BTreeSet<(NodeId, NodeId)> {
    let is_failed = |a: NodeId, b: NodeId| failed.iter().any(|&(x, y)| (x, y) == (a, b) || (y, x) == (a, b));
    let last = seq.len() - 1;
    let mut segments: Vec<Vec<NodeId>> = Vec::new();
    let mut head = vec![seq[0]];
    let mut k = 1;
    while k <= last && !is_failed(seq[k - 1], seq[k]) {
        head.push(seq[k]);
        k += 1;
    }
    if k > last {
        segments.push(head);
    } else if !whole_cycle {
        let mut tail = vec![seq[last]];
        let mut j = last;
        while j > 0 && !is_failed(seq[j - 1], seq[j]) {
            tail.insert(0, seq[j - 1]);
            j -= 1;
        }
        segments.push(head);
        segments.push(tail);
    }
    let mut out = BTreeSet::new();
    for s in &segments {
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                if s[i] != s[j] {
                    out.insert((s[i], s[j]));
                }
            }
        }
    }
    out
}

/// Union of [`trail_pairs`] over the cycles, each also reversed when
/// `paired`.
pub fn plan_pairs(
    cycles: &[Vec<NodeId>],
    paired: bool,
    failed: &[(NodeId, NodeId)],
    whole_cycle: bool,
) -> BTreeSet<(NodeId, NodeId)> {
    let mut out = BTreeSet::new();
    for c in cycles {
        out.extend(trail_pairs(c, failed, whole_cycle));
        if paired {
            let rev: Vec<NodeId> = c.iter().rev().copied().collect();
            out.extend(trail_pairs(&rev, failed, whole_cycle));
        }
    }
    out
}

/// Checks a node sequence is a closed trail of `g` through all of `c`.
pub fn is_valid_trail(g: &Topology, seq: &[NodeId], c: &[NodeId]) -> bool {
    if seq.len() < 4 || seq.first() != seq.last() {
        return false;
    }
    let mut used = BTreeSet::new();
    for w in seq.windows(2) {
        if !g.has_edge(w[0], w[1]) || !used.insert((w[0].min(w[1]), w[0].max(w[1]))) {
            return false;
        }
    }
    c.iter().all(|v| seq.contains(v))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    fn rec(k: usize, p: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == p.len() {
            out.push(p.clone());
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            rec(k + 1, p, out);
            p.swap(k, i);
        }
    }
    rec(0, &mut p, &mut out);
    out
}

/// One representative of every isomorphism class of connected simple
/// graphs on `n` nodes (smallest edge mask under relabeling).
pub fn connected_graphs_up_to_iso(n: usize) -> Vec<Topology> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let mut index = vec![vec![0usize; n]; n];
    for (i, &(a, b)) in pairs.iter().enumerate() {
        index[a][b] = i;
        index[b][a] = i;
    }
    let perms = permutations(n);
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << pairs.len()) {
        let edges: Vec<(NodeId, NodeId)> = (0..pairs.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| (pairs[i].0 as NodeId + 1, pairs[i].1 as NodeId + 1))
            .collect();
        if !is_connected(n, &edges) {
            continue;
        }
        let canonical = perms.iter().all(|p| {
            let image: u64 = (0..pairs.len())
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| 1u64 << index[p[pairs[i].0]][p[pairs[i].1]])
                .sum();
            image >= mask
        });
        if canonical {
            out.push(Topology::new(n, &edges).unwrap());
        }
    }
    out
}
