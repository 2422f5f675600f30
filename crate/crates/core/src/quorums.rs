//! Cyclic quorum sets and R-redundancy.
//!
//! A cyclic quorum set on `n` nodes is generated from one base subset
//! `S1` (always containing node 1) by shifting every member by `i - 1`
//! modulo `n`. A fixed node pair at circular distance `d` then appears in
//! exactly `|{s in S1 : s + d in S1}|` quorums, so R-redundancy (every pair
//! co-occurring in at least `r` quorums) reduces to a check on the base's
//! circular difference counts. The brute-force search in
//! [`search_min_base`] relies on that reduction; [`verify_quorum_set`]
//! deliberately does not, and is used as the independent check.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::QuorumError;
use crate::topology::NodeId;

/// First quorum `S1` of a cyclic set, with the redundancy it is meant to
/// satisfy. Members are kept sorted and always include node 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuorumBase {
    n: usize,
    r: usize,
    members: Vec<NodeId>,
}

impl QuorumBase {
    pub fn new(n: usize, r: usize, members: impl IntoIterator<Item = NodeId>) -> Result<Self, QuorumError> {
        let set: BTreeSet<NodeId> = members.into_iter().collect();
        if n == 0 {
            return Err(QuorumError::InvalidBase("n must be at least 1".into()));
        }
        if r == 0 {
            return Err(QuorumError::InvalidBase("r must be at least 1".into()));
        }
        if !set.contains(&1) {
            return Err(QuorumError::InvalidBase("node 1 must be a member".into()));
        }
        if let Some(&bad) = set.iter().find(|&&v| v == 0 || v as usize > n) {
            return Err(QuorumError::InvalidBase(format!("member {bad} outside 1..={n}")));
        }
        Ok(QuorumBase {
            n,
            r,
            members: set.into_iter().collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn members(&self) -> &[NodeId] {
        &self.members
    }

    /// Quorum size.
    pub fn k_hat(&self) -> usize {
        self.members.len()
    }

    pub fn with_r(&self, r: usize) -> Result<Self, QuorumError> {
        QuorumBase::new(self.n, r, self.members.iter().copied())
    }

    pub fn to_file_string(&self) -> String {
        self.file_string(None)
    }

    fn file_string(&self, proven_minimal: Option<bool>) -> String {
        let file = BaseFile {
            n: self.n,
            r: self.r,
            k_hat: self.k_hat(),
            members: self.members.clone(),
            proven_minimal,
        };
        toml::to_string(&file).expect("base file serialization")
    }

    /// Parses the base file layout (`n`, `r`, `k_hat`, `members`).
    pub fn from_file_str(text: &str) -> Result<Self, QuorumError> {
        let file: BaseFile = toml::from_str(text).map_err(|e| QuorumError::Parse(e.to_string()))?;
        let base = QuorumBase::new(file.n, file.r, file.members.iter().copied())?;
        if base.k_hat() != file.members.len() {
            return Err(QuorumError::Parse("members contain duplicates".into()));
        }
        if base.k_hat() != file.k_hat {
            return Err(QuorumError::Parse(format!(
                "k_hat = {} but {} members given",
                file.k_hat,
                base.k_hat()
            )));
        }
        Ok(base)
    }
}

impl fmt::Display for QuorumBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} r={} k_hat={} {:?}", self.n, self.r, self.k_hat(), self.members)
    }
}

#[derive(Serialize, Deserialize)]
struct BaseFile {
    n: usize,
    r: usize,
    k_hat: usize,
    members: Vec<NodeId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    proven_minimal: Option<bool>,
}

/// All `n` quorums of a cyclic set. `quorums[i]` is `S_{i+1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuorumSet {
    n: usize,
    quorums: Vec<BTreeSet<NodeId>>,
}

impl QuorumSet {
    pub fn new(n: usize, quorums: Vec<BTreeSet<NodeId>>) -> Self {
        QuorumSet { n, quorums }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn quorums(&self) -> &[BTreeSet<NodeId>] {
        &self.quorums
    }

    pub fn len(&self) -> usize {
        self.quorums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quorums.is_empty()
    }
}

/// Smallest `K` with `n <= K(K-1) + 1`.
pub fn lower_bound_k(n: usize) -> usize {
    let mut k = 1;
    while k * (k - 1) + 1 < n {
        k += 1;
    }
    k
}

/// `(pairs inside one quorum, pairs across all n quorums)`.
pub fn pair_algebra(n: usize, k: usize) -> (usize, usize) {
    let per = k * k.saturating_sub(1) / 2;
    (per, n * per)
}

/// `ceil(sqrt(r) * k)`, computed exactly as the least `x` with `x^2 >= r k^2`.
pub fn estimate_khat(k: usize, r: usize) -> usize {
    let target = (r * k * k) as u128;
    let mut x = ((r as f64).sqrt() * k as f64).floor() as u128;
    while x * x < target {
        x += 1;
    }
    while x > 0 && (x - 1) * (x - 1) >= target {
        x -= 1;
    }
    x as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizingEstimate {
    pub k: usize,
    pub r: usize,
    pub k_hat: usize,
    pub m: usize,
}

pub fn sizing_estimate(n: usize, r: usize) -> SizingEstimate {
    let k = lower_bound_k(n);
    SizingEstimate {
        k,
        r,
        k_hat: estimate_khat(k, r),
        m: pair_algebra(n, k).1,
    }
}

fn shift(v: NodeId, d: usize, n: usize) -> NodeId {
    ((v as usize - 1 + d) % n) as NodeId + 1
}

/// Number of quorums containing a fixed pair at circular offset `d`, for
/// any `d` in `1..n` (no reduction to `d <= n/2`).
pub fn difference_count_at(base: &QuorumBase, d: usize) -> usize {
    let n = base.n;
    let mut present = vec![false; n + 1];
    for &s in &base.members {
        present[s as usize] = true;
    }
    base.members
        .iter()
        .filter(|&&s| present[shift(s, d, n) as usize])
        .count()
}

/// Difference counts for `d = 1..=n/2`.
pub fn difference_counts(base: &QuorumBase) -> BTreeMap<usize, usize> {
    (1..=base.n / 2).map(|d| (d, difference_count_at(base, d))).collect()
}

/// True iff every unordered node pair lies in at least `base.r()`
/// generated quorums.
pub fn is_r_redundant(base: &QuorumBase) -> bool {
    difference_counts(base).values().all(|&c| c >= base.r)
}

/// Expands a base into its `n` cyclic shifts. Performs no validation of
/// the quorum properties.
pub fn generate_quorums(base: &QuorumBase) -> QuorumSet {
    let n = base.n;
    let quorums = (0..n)
        .map(|i| base.members.iter().map(|&s| shift(s, i, n)).collect())
        .collect();
    QuorumSet { n, quorums }
}

/// Co-occurrence count of every unordered pair, by direct enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairCoverage {
    n: usize,
    counts: Vec<usize>,
}

impl PairCoverage {
    pub fn from_quorums(qs: &QuorumSet) -> Self {
        let n = qs.n;
        let mut counts = vec![0; n * n];
        for q in &qs.quorums {
            let members: Vec<NodeId> = q.iter().copied().filter(|&v| v >= 1 && v as usize <= n).collect();
            for (i, &a) in members.iter().enumerate() {
                for &b in &members[i + 1..] {
                    counts[(a as usize - 1) * n + (b as usize - 1)] += 1;
                }
            }
        }
        PairCoverage { n, counts }
    }

    pub fn get(&self, a: NodeId, b: NodeId) -> usize {
        let (a, b) = (a.min(b) as usize, a.max(b) as usize);
        self.counts[(a - 1) * self.n + (b - 1)]
    }

    /// All `(a, b, count)` with `a < b`.
    pub fn iter(&self) -> impl Iterator<Item = (NodeId, NodeId, usize)> + '_ {
        let n = self.n as NodeId;
        (1..=n).flat_map(move |a| (a + 1..=n).map(move |b| (a, b, self.get(a, b))))
    }

    pub fn min(&self) -> Option<usize> {
        self.iter().map(|(_, _, c)| c).min()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuorumViolation {
    Uncovered { nodes: Vec<NodeId> },
    Disjoint { first: usize, second: usize },
    UnequalSize { quorum: usize, size: usize, expected: usize },
    UnequalMembership { node: NodeId, count: usize, expected: usize },
    LowMultiplicity { a: NodeId, b: NodeId, count: usize, required: usize },
}

impl fmt::Display for QuorumViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuorumViolation::Uncovered { nodes } => write!(f, "nodes not in any quorum: {nodes:?}"),
            QuorumViolation::Disjoint { first, second } => {
                write!(f, "quorums S{first} and S{second} do not intersect")
            }
            QuorumViolation::UnequalSize { quorum, size, expected } => {
                write!(f, "quorum S{quorum} has size {size}, expected {expected}")
            }
            QuorumViolation::UnequalMembership { node, count, expected } => {
                write!(f, "node {node} is in {count} quorums, expected {expected}")
            }
            QuorumViolation::LowMultiplicity { a, b, count, required } => {
                write!(f, "pair {{{a},{b}}} co-occurs {count} times, need {required}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub n: usize,
    pub r: usize,
    pub min_pair_multiplicity: usize,
    pub violations: Vec<QuorumViolation>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks coverage, pairwise intersection, equal sizes, equal membership
/// and pair multiplicity `>= r` by enumerating the quorums directly.
pub fn verify_quorum_set(qs: &QuorumSet, r: usize) -> VerificationReport {
    let n = qs.n;
    let mut violations = Vec::new();

    let mut membership = vec![0usize; n + 1];
    for q in &qs.quorums {
        for &v in q {
            if v >= 1 && v as usize <= n {
                membership[v as usize] += 1;
            }
        }
    }
    let uncovered: Vec<NodeId> = (1..=n as NodeId).filter(|&v| membership[v as usize] == 0).collect();
    if !uncovered.is_empty() {
        violations.push(QuorumViolation::Uncovered { nodes: uncovered });
    }

    for i in 0..qs.quorums.len() {
        for j in i + 1..qs.quorums.len() {
            if qs.quorums[i].is_disjoint(&qs.quorums[j]) {
                violations.push(QuorumViolation::Disjoint {
                    first: i + 1,
                    second: j + 1,
                });
            }
        }
    }

    if let Some(first) = qs.quorums.first() {
        let expected = first.len();
        for (i, q) in qs.quorums.iter().enumerate() {
            if q.len() != expected {
                violations.push(QuorumViolation::UnequalSize {
                    quorum: i + 1,
                    size: q.len(),
                    expected,
                });
            }
        }
        for v in 1..=n as NodeId {
            if membership[v as usize] != expected {
                violations.push(QuorumViolation::UnequalMembership {
                    node: v,
                    count: membership[v as usize],
                    expected,
                });
            }
        }
    }

    let coverage = PairCoverage::from_quorums(qs);
    for (a, b, count) in coverage.iter() {
        if count < r {
            violations.push(QuorumViolation::LowMultiplicity {
                a,
                b,
                count,
                required: r,
            });
        }
    }

    VerificationReport {
        n,
        r,
        min_pair_multiplicity: coverage.min().unwrap_or(0),
        violations,
    }
}

/// Limits on the number of search-tree nodes visited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Per quorum size; when hit the search moves on to the next size and
    /// the result is no longer proven minimal.
    pub per_size: Option<u64>,
    /// Across the whole search; when hit the search fails.
    pub total: Option<u64>,
}

impl SearchBudget {
    pub fn unlimited() -> Self {
        SearchBudget {
            per_size: None,
            total: None,
        }
    }
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            per_size: Some(2_000_000),
            total: Some(200_000_000),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    pub base: QuorumBase,
    /// Every size below `base.k_hat()` was refuted exhaustively.
    pub proven_minimal: bool,
    /// Smallest size the search started from.
    pub floor: usize,
    pub nodes_explored: u64,
}

impl SearchOutcome {
    /// Base file text, recording whether minimality was proven.
    pub fn to_file_string(&self) -> String {
        self.base.file_string(Some(self.proven_minimal))
    }
}

/// Smallest `K` passing the counting bound `K(K-1) >= r(n-1)`: the
/// ordered differences of a base must cover each of the `n-1` nonzero
/// offsets at least `r` times.
pub fn search_floor(n: usize, r: usize) -> usize {
    let mut k = lower_bound_k(n).max(1);
    while k * (k - 1) < r * (n - 1) {
        k += 1;
    }
    k
}

struct Dfs {
    n: usize,
    r: usize,
    k: usize,
    members: Vec<usize>,
    // indexed by reduced distance d in 1..=n/2
    counts: Vec<usize>,
    visited: u64,
    limit: Option<u64>,
}

enum DfsResult {
    Found,
    Exhausted,
    OutOfBudget,
}

impl Dfs {
    fn reduced(&self, a: usize, b: usize) -> usize {
        let diff = a.abs_diff(b);
        diff.min(self.n - diff)
    }

    fn weight(&self, d: usize) -> usize {
        if 2 * d == self.n {
            2
        } else {
            1
        }
    }

    fn add(&mut self, x: usize) {
        for i in 0..self.members.len() {
            let d = self.reduced(self.members[i], x);
            self.counts[d] += self.weight(d);
        }
        self.members.push(x);
    }

    fn remove(&mut self) {
        let x = self.members.pop().expect("non-empty");
        for i in 0..self.members.len() {
            let d = self.reduced(self.members[i], x);
            self.counts[d] -= self.weight(d);
        }
    }

    /// Minimum number of additional member pairs needed to lift every
    /// difference count to `r`.
    fn pairs_needed(&self) -> usize {
        (1..=self.n / 2)
            .map(|d| {
                let deficit = self.r.saturating_sub(self.counts[d]);
                deficit.div_ceil(self.weight(d))
            })
            .sum()
    }

    fn run(&mut self) -> DfsResult {
        self.visited += 1;
        if let Some(limit) = self.limit {
            if self.visited > limit {
                return DfsResult::OutOfBudget;
            }
        }
        let j = self.members.len();
        let remaining = self.k - j;
        let needed = self.pairs_needed();
        if remaining == 0 {
            return if needed == 0 {
                DfsResult::Found
            } else {
                DfsResult::Exhausted
            };
        }
        if needed > remaining * j + remaining * (remaining - 1) / 2 {
            return DfsResult::Exhausted;
        }
        let last = *self.members.last().expect("base holds node 1");
        for x in last + 1..=self.n - (remaining - 1) {
            self.add(x);
            match self.run() {
                DfsResult::Exhausted => self.remove(),
                other => return other,
            }
        }
        DfsResult::Exhausted
    }
}

/// Brute-force search for the smallest R-redundant cyclic base.
///
/// Sizes are tried in ascending order from [`search_floor`]. Within one
/// size members are explored in ascending order with node 1 fixed, so the
/// first hit is the lexicographically smallest base of that size.
pub fn search_min_base(n: usize, r: usize, budget: SearchBudget) -> Result<SearchOutcome, QuorumError> {
    if n < 2 {
        return Err(QuorumError::InvalidBase("search needs n >= 2".into()));
    }
    if r == 0 {
        return Err(QuorumError::InvalidBase("r must be at least 1".into()));
    }
    // with every node present each offset occurs exactly n times
    if r > n {
        return Err(QuorumError::Infeasible { n, r });
    }
    let floor = search_floor(n, r).min(n);
    let mut proven_minimal = true;
    let mut spent = 0u64;
    for k in floor..=n {
        let limit = match (budget.per_size, budget.total) {
            (Some(p), Some(t)) => Some(p.min(t.saturating_sub(spent))),
            (p, t) => p.or(t.map(|t| t.saturating_sub(spent))),
        };
        let mut dfs = Dfs {
            n,
            r,
            k,
            members: Vec::with_capacity(k),
            counts: vec![0; n / 2 + 1],
            visited: 0,
            limit,
        };
        dfs.add(1);
        let result = dfs.run();
        spent += dfs.visited.min(limit.unwrap_or(u64::MAX));
        match result {
            DfsResult::Found => {
                let base = QuorumBase::new(n, r, dfs.members.iter().map(|&v| v as NodeId))?;
                return Ok(SearchOutcome {
                    base,
                    proven_minimal,
                    floor,
                    nodes_explored: spent,
                });
            }
            DfsResult::Exhausted => {}
            DfsResult::OutOfBudget => {
                if budget.total.is_some_and(|t| spent >= t) {
                    let proven_below = if proven_minimal { k } else { floor };
                    return Err(QuorumError::BudgetExhausted {
                        proven_below,
                        frontier: k,
                    });
                }
                proven_minimal = false;
            }
        }
    }
    Err(QuorumError::Infeasible { n, r })
}
