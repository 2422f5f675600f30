//! Exhaustive link-fault simulation.
//!
//! For each node mapping the quorum set is routed and deployed, then every
//! single-link (or link-pair) failure is applied and the fraction of the
//! `n (n - 1)` ordered pairs still served is recorded. Mappings whose
//! routing fails are excluded and counted, never dropped silently.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{FaultError, RoutingError};
use crate::lighttrail::{
    links_used, missing_pairs, served_pairs_plan, DeliveryRules, DeploymentPlan, ServedPairs, TrailMode,
};
use crate::quorums::{generate_quorums, QuorumBase, QuorumSet};
use crate::routing::{route_all, CycleRoute};
use crate::topology::{Edge, NodeMapping, Topology};

/// Set of simultaneously failed links.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaultScenario {
    failed: Vec<Edge>,
}

impl FaultScenario {
    pub fn new(mut failed: Vec<Edge>) -> Self {
        failed.sort();
        failed.dedup();
        FaultScenario { failed }
    }

    pub fn none() -> Self {
        FaultScenario { failed: Vec::new() }
    }

    pub fn failed(&self) -> &[Edge] {
        &self.failed
    }

    pub fn failed_set(&self) -> HashSet<Edge> {
        self.failed.iter().copied().collect()
    }

    pub fn is_subset_of(&self, other: &FaultScenario) -> bool {
        self.failed.iter().all(|e| other.failed.contains(e))
    }
}

impl fmt::Display for FaultScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.failed.iter().map(Edge::to_string).collect();
        f.write_str(&parts.join(";"))
    }
}

/// All `|E|` single or `C(|E|, 2)` double link failures, in edge order.
pub fn enumerate_faults(g: &Topology, order: usize) -> Result<Vec<FaultScenario>, FaultError> {
    let edges = g.edges();
    match order {
        1 => Ok(edges.iter().map(|&e| FaultScenario { failed: vec![e] }).collect()),
        2 => Ok(edges
            .iter()
            .enumerate()
            .flat_map(|(i, &a)| edges[i + 1..].iter().map(move |&b| FaultScenario { failed: vec![a, b] }))
            .collect()),
        other => Err(FaultError::UnsupportedOrder(other)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageSample {
    pub served: usize,
    pub total: usize,
    pub coverage: f64,
}

impl CoverageSample {
    fn from_served(served: &ServedPairs) -> Self {
        let total = served.total();
        let count = served.count();
        CoverageSample {
            served: count,
            total,
            coverage: if total == 0 { 1.0 } else { count as f64 / total as f64 },
        }
    }
}

pub fn coverage(p: &DeploymentPlan, s: &FaultScenario, rules: DeliveryRules) -> CoverageSample {
    CoverageSample::from_served(&served_pairs_plan(p, &s.failed_set(), rules))
}

/// Plan for one mapping: route every quorum, deploy in `mode`.
pub fn build_plan(
    g: &Topology,
    qs: &QuorumSet,
    m: &NodeMapping,
    mode: TrailMode,
) -> Result<DeploymentPlan, RoutingError> {
    let cycles = route_all(g, qs, m)?;
    Ok(DeploymentPlan::new(g.n(), mode, cycles))
}

/// Coverage of `plan` for every scenario, reusing the fault-free served
/// sets of cycles the scenario does not touch.
pub fn coverage_all(plan: &DeploymentPlan, scenarios: &[FaultScenario], rules: DeliveryRules) -> Vec<CoverageSample> {
    let n = plan.n();
    let none = HashSet::new();
    let intact: Vec<ServedPairs> = plan
        .cycles()
        .iter()
        .map(|c| single_cycle_plan(plan, c).map_or_else(|| ServedPairs::new(n), |p| served_pairs_plan(&p, &none, rules)))
        .collect();
    let cycle_edges: Vec<HashSet<Edge>> = plan.cycles().iter().map(|c| c.edges().collect()).collect();
    scenarios
        .iter()
        .map(|s| {
            let failed = s.failed_set();
            let mut served = ServedPairs::new(n);
            for (i, c) in plan.cycles().iter().enumerate() {
                if failed.iter().any(|e| cycle_edges[i].contains(e)) {
                    if let Some(p) = single_cycle_plan(plan, c) {
                        served.union_with(&served_pairs_plan(&p, &failed, rules));
                    }
                } else {
                    served.union_with(&intact[i]);
                }
            }
            CoverageSample::from_served(&served)
        })
        .collect()
}

fn single_cycle_plan(plan: &DeploymentPlan, c: &CycleRoute) -> Option<DeploymentPlan> {
    Some(DeploymentPlan::new(plan.n(), plan.mode(), vec![c.clone()]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub mode: TrailMode,
    pub order: usize,
    pub rules: DeliveryRules,
    pub keep_samples: bool,
}

/// Metrics of one successfully routed mapping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MappingMetrics {
    pub links_used: usize,
    pub missing_pairs: usize,
    pub missing_pct: f64,
    /// Mean fraction of ordered pairs served over all scenarios.
    pub mean_coverage: f64,
    pub scenarios: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MappingOutcome {
    Routed(MappingMetrics),
    Excluded(RoutingError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappingResult {
    pub index: usize,
    pub seed: Option<u64>,
    pub outcome: MappingOutcome,
    pub samples: Vec<(FaultScenario, CoverageSample)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub per_mapping: Vec<MappingResult>,
}

impl SimulationResult {
    pub fn routed(&self) -> impl Iterator<Item = &MappingMetrics> {
        self.per_mapping.iter().filter_map(|m| match &m.outcome {
            MappingOutcome::Routed(x) => Some(x),
            MappingOutcome::Excluded(_) => None,
        })
    }

    pub fn excluded(&self) -> usize {
        self.per_mapping
            .iter()
            .filter(|m| matches!(m.outcome, MappingOutcome::Excluded(_)))
            .count()
    }

    /// Per-mapping mean coverage of the routed mappings.
    pub fn mean_coverages(&self) -> Vec<f64> {
        self.routed().map(|m| m.mean_coverage).collect()
    }

    /// One CSV row per mapping; excluded mappings keep their row with
    /// empty metrics.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "mapping",
            "seed",
            "status",
            "links_used",
            "missing_pairs",
            "missing_pct",
            "mean_coverage_pct",
            "scenarios",
        ])?;
        for m in &self.per_mapping {
            let seed = m.seed.map(|s| s.to_string()).unwrap_or_default();
            match &m.outcome {
                MappingOutcome::Routed(x) => w.write_record([
                    (m.index + 1).to_string(),
                    seed,
                    "ok".into(),
                    x.links_used.to_string(),
                    x.missing_pairs.to_string(),
                    format!("{:.6}", x.missing_pct),
                    format!("{:.6}", 100.0 * x.mean_coverage),
                    x.scenarios.to_string(),
                ])?,
                MappingOutcome::Excluded(_) => w.write_record([
                    (m.index + 1).to_string(),
                    seed,
                    "excluded".into(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ])?,
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Raw samples: mapping id, failed links, served, total.
    pub fn write_samples<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["mapping", "failed_links", "served", "total"])?;
        for m in &self.per_mapping {
            for (s, c) in &m.samples {
                w.write_record([
                    (m.index + 1).to_string(),
                    s.to_string(),
                    c.served.to_string(),
                    c.total.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Routes, deploys and fault-tests the base's quorum set under each
/// mapping. Mappings are processed in parallel; output order follows the
/// input order.
pub fn simulate(
    g: &Topology,
    base: &QuorumBase,
    mappings: &[NodeMapping],
    cfg: SimulationConfig,
) -> Result<SimulationResult, FaultError> {
    let scenarios = enumerate_faults(g, cfg.order)?;
    let qs = generate_quorums(base);
    let per_mapping = mappings
        .par_iter()
        .enumerate()
        .map(|(index, m)| {
            let (outcome, samples) = match build_plan(g, &qs, m, cfg.mode) {
                Err(e) => (MappingOutcome::Excluded(e), Vec::new()),
                Ok(plan) => {
                    let covs = coverage_all(&plan, &scenarios, cfg.rules);
                    let mean = covs.iter().map(|c| c.coverage).sum::<f64>() / covs.len().max(1) as f64;
                    let missing = missing_pairs(&plan, cfg.rules);
                    let metrics = MappingMetrics {
                        links_used: links_used(&plan),
                        missing_pairs: missing.count,
                        missing_pct: missing.percent,
                        mean_coverage: mean,
                        scenarios: covs.len(),
                    };
                    let samples = if cfg.keep_samples {
                        scenarios.iter().cloned().zip(covs).collect()
                    } else {
                        Vec::new()
                    };
                    (MappingOutcome::Routed(metrics), samples)
                }
            };
            MappingResult {
                index,
                seed: m.seed(),
                outcome,
                samples,
            }
        })
        .collect();
    Ok(SimulationResult { per_mapping })
}
