//! Confidence intervals, experiment orchestration and result emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, ReportError};
use crate::faultsim::{coverage_all, enumerate_faults};
use crate::lighttrail::{links_used, missing_pairs, DeliveryRules, DeploymentPlan, FaultModel, TrailMode};
use crate::quorums::{generate_quorums, search_min_base, QuorumBase, SearchBudget};
use crate::routing::{route_all, CycleRoute};
use crate::topology::{generate_mappings, Topology};

/// Normal quantile for a two-sided 95% interval.
pub const Z_95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CISummary {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub level: f64,
}

impl CISummary {
    pub fn half_width(&self) -> f64 {
        (self.hi - self.lo) / 2.0
    }
}

/// Mean with a 95% normal-approximation interval, using the sample
/// standard deviation.
pub fn mean_ci(samples: &[f64]) -> Result<CISummary, ReportError> {
    let n = samples.len();
    if n < 2 {
        return Err(ReportError::InsufficientSamples(n));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let half = Z_95 * var.sqrt() / (n as f64).sqrt();
    Ok(CISummary {
        mean,
        lo: mean - half,
        hi: mean + half,
        n,
        level: 0.95,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Links occupied by the plan, counting both directions when paired.
    Links,
    /// Ordered pairs left unserved without faults.
    MissingPairs,
    MissingPairsPct,
    /// Percentage of ordered pairs served, averaged over fault scenarios.
    CoveragePct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub r: usize,
    pub mode: TrailMode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseEntry {
    pub n: usize,
    pub r: usize,
    pub members: Vec<u32>,
}

/// Experiment description, usually read from a TOML file.
///
/// ```toml
/// networks = ["nsfnet", "topologies/ring.topo"]
/// r_values = [1, 2, 3]
/// modes = ["paired", "single"]
/// fault_orders = [1, 2]
/// mappings = 100
/// seed = 1
/// fault_model = "truncated"
/// ```
///
/// `cells = [{ r = 1, mode = "paired" }, ...]` replaces the
/// `r_values` × `modes` grid; `bases = [{ n, r, members }]` supplies
/// known bases instead of searching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub networks: Vec<String>,
    #[serde(default)]
    pub r_values: Vec<usize>,
    #[serde(default)]
    pub modes: Vec<TrailMode>,
    #[serde(default)]
    pub cells: Vec<Cell>,
    #[serde(default)]
    pub fault_orders: Vec<usize>,
    pub mappings: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub fault_model: FaultModel,
    #[serde(default)]
    pub hub_relay: bool,
    #[serde(default)]
    pub bases: Vec<BaseEntry>,
    #[serde(default)]
    pub budget_per_size: Option<u64>,
    #[serde(default)]
    pub budget_total: Option<u64>,
}

/// Mapping seed used when a spec or command line gives none.
pub const DEFAULT_SEED: u64 = 1;

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self, ReportError> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| ReportError::Spec(e.to_string()))?;
        spec.check()?;
        Ok(spec)
    }

    /// Reads a spec file; relative topology paths resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut spec = Self::from_toml_str(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        for net in &mut spec.networks {
            if Topology::builtin(net).is_err() && Path::new(net.as_str()).is_relative() {
                *net = dir.join(&*net).display().to_string();
            }
        }
        Ok(spec)
    }

    fn check(&self) -> Result<(), ReportError> {
        let fail = |m: &str| Err(ReportError::Spec(m.into()));
        if self.networks.is_empty() {
            return fail("no networks");
        }
        if self.cells.is_empty() && (self.r_values.is_empty() || self.modes.is_empty()) {
            return fail("either cells or both r_values and modes are required");
        }
        if self.mappings == 0 {
            return fail("mappings must be positive");
        }
        if let Some(o) = self.fault_orders.iter().find(|&&o| o != 1 && o != 2) {
            return Err(ReportError::Spec(format!("fault order {o} unsupported (expected 1 or 2)")));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<Cell> {
        if !self.cells.is_empty() {
            return self.cells.clone();
        }
        self.r_values
            .iter()
            .flat_map(|&r| self.modes.iter().map(move |&mode| Cell { r, mode }))
            .collect()
    }

    pub fn rules(&self) -> DeliveryRules {
        DeliveryRules {
            model: self.fault_model,
            hub_relay: self.hub_relay,
        }
    }

    fn budget(&self) -> SearchBudget {
        let d = SearchBudget::default();
        SearchBudget {
            per_size: self.budget_per_size.or(d.per_size),
            total: self.budget_total.or(d.total),
        }
    }

    fn base_for(&self, n: usize, r: usize) -> Result<QuorumBase, Error> {
        if let Some(b) = self.bases.iter().find(|b| b.n == n && b.r == r) {
            return Ok(QuorumBase::new(n, r, b.members.iter().copied())?);
        }
        Ok(search_min_base(n, r, self.budget())?.base)
    }
}

/// Topology by built-in name or file path.
pub fn resolve_topology(reference: &str) -> Result<Topology, Error> {
    if let Ok(g) = Topology::builtin(reference) {
        return Ok(g);
    }
    let path = PathBuf::from(reference);
    let text = std::fs::read_to_string(&path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(Topology::parse(&text)?)
}

/// Short display name: the built-in name or the file stem.
pub fn network_label(reference: &str) -> String {
    if Topology::builtin(reference).is_ok() {
        return reference.to_string();
    }
    Path::new(reference)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| reference.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub network: String,
    #[serde(rename = "R")]
    pub r: usize,
    pub mode: TrailMode,
    pub metric: Metric,
    /// 0 for fault-free metrics.
    pub fault_order: usize,
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub excluded_mappings: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    /// Cells that produced no rows, with the reason.
    pub errors: Vec<String>,
}

/// Per-mapping values of one cell, aggregated into rows.
fn cell_rows(
    network: &str,
    cell: Cell,
    routes: &[Option<Vec<CycleRoute>>],
    g: &Topology,
    orders: &[(usize, Vec<crate::faultsim::FaultScenario>)],
    rules: DeliveryRules,
    out: &mut ExperimentResult,
) {
    let per_mapping: Vec<Vec<f64>> = routes
        .par_iter()
        .filter_map(|r| r.as_ref())
        .map(|cycles| {
            let plan = DeploymentPlan::new(g.n(), cell.mode, cycles.clone());
            let missing = missing_pairs(&plan, rules);
            let mut v = vec![links_used(&plan) as f64, missing.count as f64, missing.percent];
            for (_, scenarios) in orders {
                let covs = coverage_all(&plan, scenarios, rules);
                v.push(100.0 * covs.iter().map(|c| c.coverage).sum::<f64>() / covs.len().max(1) as f64);
            }
            v
        })
        .collect();
    let excluded = routes.len() - per_mapping.len();
    let mut metrics = vec![(Metric::Links, 0), (Metric::MissingPairs, 0), (Metric::MissingPairsPct, 0)];
    metrics.extend(orders.iter().map(|(o, _)| (Metric::CoveragePct, *o)));
    for (k, (metric, fault_order)) in metrics.into_iter().enumerate() {
        let samples: Vec<f64> = per_mapping.iter().map(|v| v[k]).collect();
        match mean_ci(&samples) {
            Ok(ci) => out.rows.push(ResultRow {
                network: network.to_string(),
                r: cell.r,
                mode: cell.mode,
                metric,
                fault_order,
                mean: ci.mean,
                lo: ci.lo,
                hi: ci.hi,
                n: ci.n,
                excluded_mappings: excluded,
            }),
            Err(e) => out
                .errors
                .push(format!("{network} R={} {}: {e} ({excluded} mappings excluded)", cell.r, cell.mode)),
        }
    }
}

/// Runs every (network, R, mode) cell of the spec. Metrics are computed
/// per mapping, then aggregated over mappings. A network or base that
/// cannot be set up is reported in `errors` and the remaining cells still
/// run.
pub fn run_experiment(spec: &ExperimentSpec) -> ExperimentResult {
    let mut out = ExperimentResult::default();
    let rules = spec.rules();
    let grid = spec.grid();
    for reference in &spec.networks {
        let network = network_label(reference);
        let g = match resolve_topology(reference) {
            Ok(g) => g,
            Err(e) => {
                out.errors.push(format!("{network}: {e}"));
                continue;
            }
        };
        let orders: Vec<_> = spec
            .fault_orders
            .iter()
            .map(|&o| (o, enumerate_faults(&g, o).expect("orders checked")))
            .collect();
        let mappings = generate_mappings(g.n(), spec.mappings, spec.seed);
        let mut routed: BTreeMap<usize, Vec<Option<Vec<CycleRoute>>>> = BTreeMap::new();
        for cell in &grid {
            if !routed.contains_key(&cell.r) {
                let base = match spec.base_for(g.n(), cell.r) {
                    Ok(b) => b,
                    Err(e) => {
                        out.errors.push(format!("{network} R={}: {e}", cell.r));
                        continue;
                    }
                };
                let qs = generate_quorums(&base);
                let routes = mappings.par_iter().map(|m| route_all(&g, &qs, m).ok()).collect();
                routed.insert(cell.r, routes);
            }
            cell_rows(&network, *cell, &routed[&cell.r], &g, &orders, rules, &mut out);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Csv,
    Json,
    PlotData,
}

impl std::str::FromStr for Format {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(Format::Table),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "plotdata" => Ok(Format::PlotData),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

const COLUMNS: [&str; 10] = [
    "network",
    "R",
    "mode",
    "metric",
    "fault_order",
    "mean",
    "lo",
    "hi",
    "n",
    "excluded_mappings",
];

fn metric_name(m: Metric) -> &'static str {
    match m {
        Metric::Links => "links",
        Metric::MissingPairs => "missing_pairs",
        Metric::MissingPairsPct => "missing_pairs_pct",
        Metric::CoveragePct => "coverage_pct",
    }
}

pub fn emit(rows: &[ResultRow], format: Format) -> Result<String, ReportError> {
    if rows.is_empty() {
        return Err(ReportError::EmptyRows);
    }
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in rows {
                w.serialize(row)?;
            }
            let bytes = w.into_inner().map_err(|e| ReportError::Spec(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        Format::Json => Ok(serde_json::to_string_pretty(rows).expect("rows serialize") + "\n"),
        Format::Table => Ok(table(rows)),
        Format::PlotData => plot_data(rows),
    }
}

pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>, ReportError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<Result<Vec<ResultRow>, _>>()?)
}

fn table(rows: &[ResultRow]) -> String {
    let cells: Vec<[String; 10]> = rows
        .iter()
        .map(|r| {
            [
                r.network.clone(),
                r.r.to_string(),
                r.mode.to_string(),
                metric_name(r.metric).to_string(),
                r.fault_order.to_string(),
                format!("{:.4}", r.mean),
                format!("{:.4}", r.lo),
                format!("{:.4}", r.hi),
                r.n.to_string(),
                r.excluded_mappings.to_string(),
            ]
        })
        .collect();
    let mut widths = COLUMNS.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, fields: &mut dyn Iterator<Item = &str>| {
        let parts: Vec<String> = fields.zip(widths).map(|(f, w)| format!("{f:>w$}")).collect();
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };
    line(&mut out, &mut COLUMNS.iter().copied());
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    line(&mut out, &mut rule.iter().map(String::as_str));
    for row in &cells {
        line(&mut out, &mut row.iter().map(String::as_str));
    }
    out
}

/// Coverage rows as whitespace-separated blocks, one block per fault
/// order and network, x labelled `R<r>-<mode>`.
fn plot_data(rows: &[ResultRow]) -> Result<String, ReportError> {
    let mut blocks: BTreeMap<usize, Vec<(String, Vec<&ResultRow>)>> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.metric == Metric::CoveragePct) {
        let series = blocks.entry(row.fault_order).or_default();
        match series.iter_mut().find(|(net, _)| *net == row.network) {
            Some((_, points)) => points.push(row),
            None => series.push((row.network.clone(), vec![row])),
        }
    }
    if blocks.is_empty() {
        return Err(ReportError::EmptyRows);
    }
    let mut out = String::new();
    for (order, series) in blocks {
        for (network, points) in series {
            let _ = writeln!(out, "# faults={order} series={network}");
            out.push_str("x\tmean\tlo\thi\n");
            for p in points {
                let _ = writeln!(out, "R{}-{}\t{:.6}\t{:.6}\t{:.6}", p.r, p.mode, p.mean, p.lo, p.hi);
            }
            out.push_str("\n\n");
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(network: &str, r: usize, mode: TrailMode, metric: Metric, fault_order: usize, mean: f64) -> ResultRow {
        ResultRow {
            network: network.into(),
            r,
            mode,
            metric,
            fault_order,
            mean,
            lo: mean - 0.1,
            hi: mean + 0.1,
            n: 100,
            excluded_mappings: 0,
        }
    }

    #[test]
    fn ci_examples() {
        let c = mean_ci(&[5.0; 4]).unwrap();
        assert_eq!((c.mean, c.lo, c.hi), (5.0, 5.0, 5.0));
        let two: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 0.0 } else { 10.0 }).collect();
        let c = mean_ci(&two).unwrap();
        let sd = (1000.0f64 * 25.0 / 999.0).sqrt();
        assert!((c.mean - 5.0).abs() < 1e-12);
        assert!((c.half_width() - 1.96 * sd / 1000f64.sqrt()).abs() < 1e-12);
        assert!((c.half_width() - 0.31).abs() < 0.005);
        assert!(matches!(mean_ci(&[1.0]), Err(ReportError::InsufficientSamples(1))));
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            row("nsfnet", 1, TrailMode::Paired, Metric::Links, 0, 249.123456789),
            row("ring", 3, TrailMode::Single, Metric::CoveragePct, 2, 0.1 + 0.2),
        ];
        let text = emit(&rows[..1], Format::Csv).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().next().unwrap(), COLUMNS.join(","));
        let text = emit(&rows, Format::Csv).unwrap();
        assert_eq!(parse_csv(&text).unwrap(), rows);
        let json: Vec<ResultRow> = serde_json::from_str(&emit(&rows, Format::Json).unwrap()).unwrap();
        assert_eq!(json, rows);
    }

    #[test]
    fn emit_errors() {
        assert!(matches!(emit(&[], Format::Csv), Err(ReportError::EmptyRows)));
        assert!(matches!("svg".parse::<Format>(), Err(ReportError::UnknownFormat(_))));
    }

    #[test]
    fn plot_series_per_network() {
        let cells = [(1, TrailMode::Paired), (2, TrailMode::Single), (3, TrailMode::Single)];
        let mut rows = Vec::new();
        for net in ["nsfnet", "arpanet", "american", "chinese"] {
            for (r, mode) in cells {
                rows.push(row(net, r, mode, Metric::CoveragePct, 2, 98.0));
                rows.push(row(net, r, mode, Metric::Links, 0, 200.0));
            }
        }
        let text = emit(&rows, Format::PlotData).unwrap();
        assert_eq!(text.matches("# faults=2 series=").count(), 4);
        assert_eq!(text.matches("R1-paired").count(), 4);
        assert_eq!(text.matches("R3-single").count(), 4);
        let table = emit(&rows, Format::Table).unwrap();
        assert_eq!(table.lines().count(), rows.len() + 2);
    }

    #[test]
    fn spec_parsing() {
        let spec = ExperimentSpec::from_toml_str(
            "networks = [\"nsfnet\"]\nr_values = [1, 2]\nmodes = [\"paired\", \"single\"]\nfault_orders = [1]\nmappings = 3\n",
        )
        .unwrap();
        assert_eq!(spec.grid().len(), 4);
        assert_eq!(spec.seed, DEFAULT_SEED);
        assert_eq!(spec.fault_model, FaultModel::Truncated);
        let bad = ExperimentSpec::from_toml_str("networks = [\"nsfnet\"]\ncells = [{ r = 1, mode = \"paired\" }]\nfault_orders = [3]\nmappings = 3\n");
        assert!(matches!(bad, Err(ReportError::Spec(_))));
        assert!(ExperimentSpec::from_toml_str("networks = []\nmappings = 1\n").is_err());
    }

    #[test]
    fn small_experiment() {
        let spec = ExperimentSpec::from_toml_str(
            "networks = [\"nsfnet\"]\ncells = [{ r = 1, mode = \"paired\" }, { r = 1, mode = \"single\" }]\n\
             fault_orders = [1]\nmappings = 4\nbases = [{ n = 14, r = 1, members = [1, 2, 4, 8, 11] }]\n",
        )
        .unwrap();
        let res = run_experiment(&spec);
        assert!(res.errors.is_empty(), "{:?}", res.errors);
        assert_eq!(res.rows.len(), 8);
        let get = |mode, metric| {
            res.rows
                .iter()
                .find(|r| r.mode == mode && r.metric == metric)
                .unwrap()
                .mean
        };
        assert_eq!(get(TrailMode::Paired, Metric::MissingPairs), 0.0);
        assert!(get(TrailMode::Single, Metric::Links) * 2.0 == get(TrailMode::Paired, Metric::Links));
        assert!(get(TrailMode::Single, Metric::CoveragePct) <= get(TrailMode::Paired, Metric::CoveragePct));
        let again = run_experiment(&spec);
        assert_eq!(emit(&res.rows, Format::Csv).unwrap(), emit(&again.rows, Format::Csv).unwrap());
    }
}
