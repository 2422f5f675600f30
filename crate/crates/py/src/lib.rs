//! Python module `qcycle`: topologies, quorum bases, cycle routing,
//! light-trail coverage and fault simulation.

use std::collections::{BTreeMap, HashSet};

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use qcycle::faultsim::{self, SimulationConfig};
use qcycle::lighttrail::{self, DeliveryRules, DeploymentPlan, FaultModel, TrailMode};
use qcycle::quorums::{self, SearchBudget};
use qcycle::report;
use qcycle::routing::{self, CommunicationSet, CycleRoute};
use qcycle::topology::{self, Edge, NodeId};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Undirected network with nodes `1..=n`.
#[pyclass(name = "Topology", frozen)]
struct Topology(topology::Topology);

#[pymethods]
impl Topology {
    #[new]
    fn new(n: usize, edges: Vec<(NodeId, NodeId)>) -> PyResult<Self> {
        topology::Topology::new(n, &edges).map(Topology).map_err(err)
    }

    /// Edge-list or JSON topology text.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        topology::Topology::parse(text).map(Topology).map_err(err)
    }

    /// One of `nsfnet`, `arpanet`, `american`, `chinese`.
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        topology::Topology::builtin(name).map(Topology).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.0.edges().iter().map(Edge::endpoints).collect()
    }

    fn neighbors(&self, v: NodeId) -> PyResult<Vec<NodeId>> {
        if !self.0.contains(v) {
            return Err(err(format!("node {v} out of range")));
        }
        Ok(self.0.neighbors(v).to_vec())
    }

    fn bridges(&self) -> Vec<(NodeId, NodeId)> {
        self.0.bridges().iter().map(Edge::endpoints).collect()
    }

    fn to_edge_list(&self) -> String {
        self.0.to_edge_list()
    }

    fn __len__(&self) -> usize {
        self.0.num_edges()
    }

    fn __repr__(&self) -> String {
        format!("Topology(n={}, links={})", self.0.n(), self.0.num_edges())
    }
}

/// First quorum of a cyclic quorum set.
#[pyclass(name = "QuorumBase", frozen)]
struct QuorumBase(quorums::QuorumBase);

#[pymethods]
impl QuorumBase {
    #[new]
    fn new(n: usize, r: usize, members: Vec<NodeId>) -> PyResult<Self> {
        quorums::QuorumBase::new(n, r, members).map(QuorumBase).map_err(err)
    }

    #[staticmethod]
    fn from_file_str(text: &str) -> PyResult<Self> {
        quorums::QuorumBase::from_file_str(text).map(QuorumBase).map_err(err)
    }

    fn to_file_string(&self) -> String {
        self.0.to_file_string()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn r(&self) -> usize {
        self.0.r()
    }

    #[getter]
    fn members(&self) -> Vec<NodeId> {
        self.0.members().to_vec()
    }

    #[getter]
    fn k_hat(&self) -> usize {
        self.0.k_hat()
    }

    /// Number of quorums containing each pair at circular distance `d`.
    fn difference_counts(&self) -> BTreeMap<usize, usize> {
        quorums::difference_counts(&self.0)
    }

    fn is_r_redundant(&self) -> bool {
        quorums::is_r_redundant(&self.0)
    }

    /// All `n` quorums, `S_1` first.
    fn quorums(&self) -> Vec<Vec<NodeId>> {
        quorums::generate_quorums(&self.0)
            .quorums()
            .iter()
            .map(|q| q.iter().copied().collect())
            .collect()
    }

    /// Verification by direct enumeration, as a JSON string.
    fn verify(&self, r: usize) -> String {
        let report = quorums::verify_quorum_set(&quorums::generate_quorums(&self.0), r);
        serde_json::to_string(&report).expect("report serializes")
    }

    fn __repr__(&self) -> String {
        format!("QuorumBase({})", self.0)
    }
}

/// Smallest base reaching redundancy `r`; returns `(base, proven_minimal)`.
#[pyfunction]
#[pyo3(signature = (n, r, per_size=None, total=None))]
fn search_min_base(n: usize, r: usize, per_size: Option<u64>, total: Option<u64>) -> PyResult<(QuorumBase, bool)> {
    let d = SearchBudget::default();
    let budget = SearchBudget {
        per_size: per_size.or(d.per_size),
        total: total.or(d.total),
    };
    let out = quorums::search_min_base(n, r, budget).map_err(err)?;
    Ok((QuorumBase(out.base), out.proven_minimal))
}

#[pyfunction]
fn lower_bound_k(n: usize) -> usize {
    quorums::lower_bound_k(n)
}

/// Closed trail through every member, hub first; the last node repeats
/// the hub.
#[pyfunction]
fn route_cycle(g: &Topology, members: Vec<NodeId>) -> PyResult<Vec<NodeId>> {
    let c = CommunicationSet::new(&g.0, members).map_err(err)?;
    let cycle = routing::route_cycle(&g.0, &c).map_err(err)?;
    Ok(cycle.sequence().to_vec())
}

/// One cycle per quorum under the identity mapping, or a random mapping
/// drawn from `mapping_seed`.
#[pyfunction]
#[pyo3(signature = (g, base, mapping_seed=None))]
fn route_all(g: &Topology, base: &QuorumBase, mapping_seed: Option<u64>) -> PyResult<Vec<Vec<NodeId>>> {
    let mapping = match mapping_seed {
        Some(seed) => topology::generate_mappings(g.0.n(), 2, seed).pop().expect("two mappings"),
        None => topology::NodeMapping::identity(g.0.n()),
    };
    let cycles = routing::route_all(&g.0, &quorums::generate_quorums(&base.0), &mapping).map_err(err)?;
    Ok(cycles.iter().map(|c| c.sequence().to_vec()).collect())
}

fn plan(g: &Topology, cycles: Vec<Vec<NodeId>>, mode: &str) -> PyResult<DeploymentPlan> {
    let mode: TrailMode = mode.parse().map_err(err)?;
    let cycles = cycles
        .into_iter()
        .map(|seq| CycleRoute::new(&g.0, seq))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    Ok(DeploymentPlan::new(g.0.n(), mode, cycles))
}

fn rules(fault_model: &str, hub_relay: bool) -> PyResult<DeliveryRules> {
    let model: FaultModel = fault_model.parse().map_err(err)?;
    Ok(DeliveryRules { model, hub_relay })
}

/// Ordered pairs `(a, b)` served by light-trails on `cycles` with the
/// given links failed.
#[pyfunction]
#[pyo3(signature = (g, cycles, mode="paired", failed=Vec::new(), fault_model="truncated", hub_relay=false))]
fn served_pairs(
    g: &Topology,
    cycles: Vec<Vec<NodeId>>,
    mode: &str,
    failed: Vec<(NodeId, NodeId)>,
    fault_model: &str,
    hub_relay: bool,
) -> PyResult<Vec<(NodeId, NodeId)>> {
    let p = plan(g, cycles, mode)?;
    let failed: HashSet<Edge> = failed.into_iter().map(|(a, b)| Edge::new(a, b)).collect();
    Ok(lighttrail::served_pairs_plan(&p, &failed, rules(fault_model, hub_relay)?)
        .iter()
        .collect())
}

/// Links occupied by `cycles`, doubled in paired mode.
#[pyfunction]
#[pyo3(signature = (g, cycles, mode="paired"))]
fn links_used(g: &Topology, cycles: Vec<Vec<NodeId>>, mode: &str) -> PyResult<usize> {
    Ok(lighttrail::links_used(&plan(g, cycles, mode)?))
}

/// Per-mapping results as dicts; excluded mappings carry `status = "excluded"`.
#[pyfunction]
#[pyo3(signature = (g, base, mode="paired", faults=1, mappings=100, seed=report::DEFAULT_SEED, fault_model="truncated", hub_relay=false))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    g: &Topology,
    base: &QuorumBase,
    mode: &str,
    faults: usize,
    mappings: usize,
    seed: u64,
    fault_model: &str,
    hub_relay: bool,
) -> PyResult<Vec<BTreeMap<String, f64>>> {
    let cfg = SimulationConfig {
        mode: mode.parse().map_err(err)?,
        order: faults,
        rules: rules(fault_model, hub_relay)?,
        keep_samples: false,
    };
    let maps = topology::generate_mappings(g.0.n(), mappings, seed);
    let result = py
        .detach(|| faultsim::simulate(&g.0, &base.0, &maps, cfg))
        .map_err(err)?;
    Ok(result
        .per_mapping
        .iter()
        .map(|m| {
            let mut row = BTreeMap::from([("mapping".to_string(), (m.index + 1) as f64)]);
            match &m.outcome {
                faultsim::MappingOutcome::Routed(x) => {
                    row.insert("links_used".into(), x.links_used as f64);
                    row.insert("missing_pairs".into(), x.missing_pairs as f64);
                    row.insert("mean_coverage".into(), x.mean_coverage);
                }
                faultsim::MappingOutcome::Excluded(_) => {
                    row.insert("excluded".into(), 1.0);
                }
            }
            row
        })
        .collect())
}

/// `(mean, lo, hi)` of a 95% normal-approximation interval.
#[pyfunction]
fn mean_ci(samples: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    let c = report::mean_ci(&samples).map_err(err)?;
    Ok((c.mean, c.lo, c.hi))
}

#[pymodule]
#[pyo3(name = "qcycle")]
fn qcycle_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Topology>()?;
    m.add_class::<QuorumBase>()?;
    m.add_function(wrap_pyfunction!(search_min_base, m)?)?;
    m.add_function(wrap_pyfunction!(lower_bound_k, m)?)?;
    m.add_function(wrap_pyfunction!(route_cycle, m)?)?;
    m.add_function(wrap_pyfunction!(route_all, m)?)?;
    m.add_function(wrap_pyfunction!(served_pairs, m)?)?;
    m.add_function(wrap_pyfunction!(links_used, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(mean_ci, m)?)?;
    Ok(())
}
