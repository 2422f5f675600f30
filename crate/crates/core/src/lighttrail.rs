//! Light-trail deployment of routed cycles.
//!
//! A cycle is deployed as a unidirectional trail that starts at the hub,
//! runs along the cycle and terminates back at the hub. A node can reach
//! every node downstream of it on the trail, so with the trail order
//! `hub, p1, ..., pm, hub` the ordered pair `(a, b)` is served when some
//! visit of `a` precedes some visit of `b`. Paired deployment adds the
//! reversed trail, which serves every ordered pair among the cycle's
//! nodes.
//!
//! Under link faults the default truncated-trail model keeps the two
//! hub-side pieces of each trail: the head from the hub up to the first
//! failed link, and the tail from the last failed link back into the hub.
//! The whole-cycle model drops any trail that crosses a failed link.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::FaultError;
use crate::routing::CycleRoute;
use crate::topology::{Edge, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrailMode {
    Single,
    Paired,
}

impl fmt::Display for TrailMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrailMode::Single => "single",
            TrailMode::Paired => "paired",
        })
    }
}

impl FromStr for TrailMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(TrailMode::Single),
            "paired" => Ok(TrailMode::Paired),
            _ => Err(format!("unknown trail mode `{s}` (expected single or paired)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultModel {
    #[default]
    Truncated,
    WholeCycle,
}

impl fmt::Display for FaultModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FaultModel::Truncated => "truncated",
            FaultModel::WholeCycle => "whole-cycle",
        })
    }
}

impl FromStr for FaultModel {
    type Err = FaultError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "truncated" => Ok(FaultModel::Truncated),
            "whole-cycle" => Ok(FaultModel::WholeCycle),
            _ => Err(FaultError::UnknownModel(s.to_string())),
        }
    }
}

/// How served pairs are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DeliveryRules {
    pub model: FaultModel,
    /// Count upstream delivery through an O/E/O retransmission at the hub
    /// as served. Off by default: such pairs are reported as missing.
    pub hub_relay: bool,
}

impl DeliveryRules {
    pub fn with_model(model: FaultModel) -> Self {
        DeliveryRules {
            model,
            hub_relay: false,
        }
    }
}

/// Boolean matrix over ordered node pairs `(a, b)`, `a != b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServedPairs {
    n: usize,
    words: usize,
    // row a-1 holds the b's served from a
    bits: Vec<u64>,
}

impl ServedPairs {
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        ServedPairs {
            n,
            words,
            bits: vec![0; n * words],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `n (n - 1)`.
    pub fn total(&self) -> usize {
        self.n * self.n.saturating_sub(1)
    }

    fn row(&self, a: NodeId) -> &[u64] {
        let start = (a as usize - 1) * self.words;
        &self.bits[start..start + self.words]
    }

    fn row_mut(&mut self, a: NodeId) -> &mut [u64] {
        let start = (a as usize - 1) * self.words;
        &mut self.bits[start..start + self.words]
    }

    pub fn insert(&mut self, a: NodeId, b: NodeId) {
        if a != b {
            let i = b as usize - 1;
            self.row_mut(a)[i / 64] |= 1 << (i % 64);
        }
    }

    pub fn contains(&self, a: NodeId, b: NodeId) -> bool {
        let i = b as usize - 1;
        self.row(a)[i / 64] >> (i % 64) & 1 == 1
    }

    /// Adds `(a, b)` for every `b` in `targets`, except `b == a`.
    fn insert_row(&mut self, a: NodeId, targets: &[u64]) {
        let self_bit = a as usize - 1;
        let row = self.row_mut(a);
        for (w, t) in row.iter_mut().zip(targets) {
            *w |= t;
        }
        row[self_bit / 64] &= !(1 << (self_bit % 64));
    }

    pub fn union_with(&mut self, other: &ServedPairs) {
        for (w, o) in self.bits.iter_mut().zip(&other.bits) {
            *w |= o;
        }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_superset(&self, other: &ServedPairs) -> bool {
        self.bits.iter().zip(&other.bits).all(|(s, o)| o & !s == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        let n = self.n as NodeId;
        (1..=n).flat_map(move |a| (1..=n).filter(move |&b| self.contains(a, b)).map(move |b| (a, b)))
    }

    /// `n` lines of `0`/`1`, row `a` column `b`; the diagonal prints `-`.
    pub fn to_bitmap(&self) -> String {
        let mut s = String::with_capacity(self.n * (self.n + 1));
        for a in 1..=self.n as NodeId {
            for b in 1..=self.n as NodeId {
                s.push(if a == b {
                    '-'
                } else if self.contains(a, b) {
                    '1'
                } else {
                    '0'
                });
            }
            s.push('\n');
        }
        s
    }
}

/// Cycles plus how they are lit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeploymentPlan {
    n: usize,
    mode: TrailMode,
    cycles: Vec<CycleRoute>,
}

impl DeploymentPlan {
    pub fn new(n: usize, mode: TrailMode, cycles: Vec<CycleRoute>) -> Self {
        DeploymentPlan { n, mode, cycles }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> TrailMode {
        self.mode
    }

    pub fn cycles(&self) -> &[CycleRoute] {
        &self.cycles
    }

    pub fn with_mode(&self, mode: TrailMode) -> Self {
        DeploymentPlan {
            n: self.n,
            mode,
            cycles: self.cycles.clone(),
        }
    }

    /// `mode <m>` followed by one `<hub> <sequence...>` line per cycle in
    /// trail orientation.
    pub fn to_text(&self) -> String {
        let mut s = format!("n {}\nmode {}\n", self.n, self.mode);
        for c in &self.cycles {
            let seq: Vec<String> = c.sequence().iter().map(|v| v.to_string()).collect();
            s.push_str(&format!("{} {}\n", c.hub(), seq.join(" ")));
        }
        s
    }
}

/// Segments (position ranges, inclusive) of one trail orientation that
/// still operate, with whether each is the head (starts at the hub).
fn live_segments(seq: &[NodeId], failed: &HashSet<Edge>, model: FaultModel) -> Vec<(usize, usize, bool)> {
    let last = seq.len() - 1;
    let broken: Vec<usize> = (1..=last)
        .filter(|&k| failed.contains(&Edge::new(seq[k - 1], seq[k])))
        .collect();
    match (broken.first(), broken.last()) {
        (None, _) => vec![(0, last, true)],
        (Some(_), _) if model == FaultModel::WholeCycle => Vec::new(),
        (Some(&first), Some(&final_break)) => vec![(0, first - 1, true), (final_break, last, false)],
        _ => unreachable!(),
    }
}

fn serve_orientation(seq: &[NodeId], failed: &HashSet<Edge>, rules: DeliveryRules, out: &mut ServedPairs) {
    let words = out.words;
    let segments = live_segments(seq, failed, rules.model);
    let last = seq.len() - 1;
    for &(lo, hi, _) in &segments {
        let mut after = vec![0u64; words];
        for i in (lo..=hi).rev() {
            let a = seq[i];
            out.insert_row(a, &after);
            let bit = a as usize - 1;
            after[bit / 64] |= 1 << (bit % 64);
        }
    }
    if rules.hub_relay && !segments.is_empty() {
        // senders that reach the terminating hub, receivers the starting hub reaches
        let hub = seq[0];
        let intact = segments.len() == 1;
        let (head_hi, tail_lo) = if intact {
            (last, 0)
        } else {
            (segments[0].1, segments[1].0)
        };
        let mut receivers = vec![0u64; words];
        for &b in &seq[1..=head_hi.min(last)] {
            let bit = b as usize - 1;
            receivers[bit / 64] |= 1 << (bit % 64);
        }
        for &a in &seq[tail_lo..last] {
            if a != hub || tail_lo > 0 {
                out.insert_row(a, &receivers);
            }
        }
    }
}

/// Ordered pairs one cycle serves under the given failed links.
pub fn served_pairs_cycle(
    n: usize,
    cycle: &CycleRoute,
    mode: TrailMode,
    failed: &HashSet<Edge>,
    rules: DeliveryRules,
) -> ServedPairs {
    let mut out = ServedPairs::new(n);
    serve_cycle_into(cycle, mode, failed, rules, &mut out);
    out
}

fn serve_cycle_into(cycle: &CycleRoute, mode: TrailMode, failed: &HashSet<Edge>, rules: DeliveryRules, out: &mut ServedPairs) {
    serve_orientation(cycle.sequence(), failed, rules, out);
    if mode == TrailMode::Paired {
        serve_orientation(cycle.reversed().sequence(), failed, rules, out);
    }
}

/// Union of the pairs served by every cycle of the plan.
pub fn served_pairs_plan(p: &DeploymentPlan, failed: &HashSet<Edge>, rules: DeliveryRules) -> ServedPairs {
    let mut out = ServedPairs::new(p.n);
    for c in &p.cycles {
        serve_cycle_into(c, p.mode, failed, rules, &mut out);
    }
    out
}

/// Directed trail hops summed over the plan; paired cycles count twice.
pub fn links_used(p: &DeploymentPlan) -> usize {
    let per: usize = p.cycles.iter().map(CycleRoute::len).sum();
    match p.mode {
        TrailMode::Single => per,
        TrailMode::Paired => 2 * per,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MissingPairs {
    pub count: usize,
    pub total: usize,
    /// Percent of `n (n - 1)` ordered pairs.
    pub percent: f64,
}

/// Ordered pairs left unserved with no faults.
pub fn missing_pairs(p: &DeploymentPlan, rules: DeliveryRules) -> MissingPairs {
    let served = served_pairs_plan(p, &HashSet::new(), rules);
    let total = served.total();
    let count = total - served.count();
    MissingPairs {
        count,
        total,
        percent: if total == 0 { 0.0 } else { 100.0 * count as f64 / total as f64 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::Topology;

    fn square() -> (Topology, CycleRoute) {
        let t = Topology::new(4, &[(1, 2), (2, 3), (3, 4), (4, 1)]).unwrap();
        let c = CycleRoute::new(&t, vec![1, 2, 3, 4, 1]).unwrap();
        (t, c)
    }

    fn pairs(s: &ServedPairs) -> Vec<(NodeId, NodeId)> {
        s.iter().collect()
    }

    fn all_pairs_except(n: NodeId, except: &[(NodeId, NodeId)]) -> Vec<(NodeId, NodeId)> {
        (1..=n)
            .flat_map(|a| (1..=n).map(move |b| (a, b)))
            .filter(|&(a, b)| a != b && !except.contains(&(a, b)))
            .collect()
    }

    #[test]
    fn single_trail_precedence() {
        let (_, c) = square();
        let s = served_pairs_cycle(4, &c, TrailMode::Single, &HashSet::new(), DeliveryRules::default());
        assert_eq!(pairs(&s), all_pairs_except(4, &[(3, 2), (4, 2), (4, 3)]));
        assert_eq!(s.count(), 9);
    }

    #[test]
    fn paired_serves_everything() {
        let (_, c) = square();
        let s = served_pairs_cycle(4, &c, TrailMode::Paired, &HashSet::new(), DeliveryRules::default());
        assert_eq!(s.count(), 12);
    }

    #[test]
    fn paired_with_failed_link() {
        let (_, c) = square();
        let failed = HashSet::from([Edge::new(2, 3)]);
        let s = served_pairs_cycle(4, &c, TrailMode::Paired, &failed, DeliveryRules::default());
        // clockwise keeps 1>2 and 3>4>1, counter-clockwise keeps 1>4>3 and 2>1
        assert_eq!(pairs(&s), all_pairs_except(4, &[(2, 3), (3, 2), (2, 4), (4, 2)]));
        let whole = served_pairs_cycle(
            4,
            &c,
            TrailMode::Paired,
            &failed,
            DeliveryRules::with_model(FaultModel::WholeCycle),
        );
        assert_eq!(whole.count(), 0);
    }

    #[test]
    fn triangle_single_missing_pair() {
        let t = Topology::new(3, &[(1, 2), (2, 3), (1, 3)]).unwrap();
        let c = CycleRoute::new(&t, vec![1, 2, 3, 1]).unwrap();
        let plan = DeploymentPlan::new(3, TrailMode::Single, vec![c.clone()]);
        let m = missing_pairs(&plan, DeliveryRules::default());
        assert_eq!((m.count, m.total), (1, 6));
        assert!((m.percent - 16.666_666).abs() < 1e-3);
        let relayed = missing_pairs(
            &plan,
            DeliveryRules {
                model: FaultModel::Truncated,
                hub_relay: true,
            },
        );
        assert_eq!(relayed.count, 0);
        assert_eq!(links_used(&plan), 3);
        assert_eq!(links_used(&plan.with_mode(TrailMode::Paired)), 6);
    }

    #[test]
    fn plan_leaves_absent_node_unserved() {
        let t = Topology::new(4, &[(1, 2), (2, 3), (1, 3), (3, 4), (4, 1)]).unwrap();
        let c = CycleRoute::new(&t, vec![1, 2, 3, 1]).unwrap();
        let plan = DeploymentPlan::new(4, TrailMode::Paired, vec![c]);
        let s = served_pairs_plan(&plan, &HashSet::new(), DeliveryRules::default());
        assert_eq!(s.count(), 6);
        assert!((1..=3).all(|v| !s.contains(v, 4) && !s.contains(4, v)));
    }

    #[test]
    fn opposite_single_cycles_cover_ring() {
        let (_, c) = square();
        let plan = DeploymentPlan::new(4, TrailMode::Single, vec![c.clone(), c.reversed().rotate_to(4).unwrap()]);
        let s = served_pairs_plan(&plan, &HashSet::new(), DeliveryRules::default());
        assert_eq!(s.count(), 12);
    }

    #[test]
    fn triangle_paired_one_fault() {
        let t = Topology::new(3, &[(1, 2), (2, 3), (1, 3)]).unwrap();
        let c = CycleRoute::new(&t, vec![1, 2, 3, 1]).unwrap();
        let failed = HashSet::from([Edge::new(2, 3)]);
        let s = served_pairs_cycle(3, &c, TrailMode::Paired, &failed, DeliveryRules::default());
        assert_eq!(pairs(&s), vec![(1, 2), (1, 3), (2, 1), (3, 1)]);
    }

    #[test]
    fn hub_relay_bridges_segments() {
        let (_, c) = square();
        let failed = HashSet::from([Edge::new(2, 3)]);
        let rules = DeliveryRules {
            model: FaultModel::Truncated,
            hub_relay: true,
        };
        let s = served_pairs_cycle(4, &c, TrailMode::Single, &failed, rules);
        // tail 3>4>1 relays through the hub to head node 2
        assert!(s.contains(3, 2) && s.contains(4, 2));
        assert!(!s.contains(2, 3));
    }

    #[test]
    fn bitmap_shape() {
        let mut s = ServedPairs::new(3);
        s.insert(1, 2);
        s.insert(2, 2);
        assert_eq!(s.to_bitmap(), "-10\n0-0\n00-\n");
        assert_eq!(s.total(), 6);
    }

    #[test]
    fn wide_bitsets() {
        let mut s = ServedPairs::new(130);
        s.insert(1, 130);
        s.insert(130, 65);
        assert!(s.contains(1, 130) && s.contains(130, 65));
        assert_eq!(s.count(), 2);
    }
}
