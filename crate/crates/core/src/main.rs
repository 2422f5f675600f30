use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qcycle::faultsim::{simulate, SimulationConfig};
use qcycle::lighttrail::{DeliveryRules, FaultModel, TrailMode};
use qcycle::quorums::{generate_quorums, search_min_base, verify_quorum_set, QuorumBase, SearchBudget};
use qcycle::report::{emit, resolve_topology, run_experiment, ExperimentSpec, Format, DEFAULT_SEED};
use qcycle::routing::{cycles_to_json, cycles_to_text, route_all};
use qcycle::topology::{generate_mappings, NodeMapping};
use qcycle::Error;

/// Cyclic quorum design and light-trail routing for optical networks.
#[derive(Parser)]
#[command(name = "qcycle", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Quorum base search and verification.
    #[command(subcommand)]
    Quorum(QuorumCommand),
    /// Route one cycle per quorum under a node mapping.
    Route(RouteArgs),
    /// Link-fault simulation over random node mappings, one CSV row per mapping.
    Simulate(SimulateArgs),
    /// Run an experiment spec and emit aggregated rows.
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum QuorumCommand {
    /// Find a smallest cyclic base with pair multiplicity at least R.
    Search {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
        /// Total search-tree nodes before giving up.
        #[arg(long)]
        budget: Option<u64>,
        /// Search-tree nodes per quorum size before moving to the next size.
        #[arg(long)]
        per_size: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a base file's quorum set by direct enumeration. Exits with 1
    /// when any property is violated.
    Verify {
        #[arg(long)]
        base_file: PathBuf,
        #[arg(long)]
        r: usize,
    },
}

#[derive(Args)]
struct RouteArgs {
    /// Built-in name (nsfnet, arpanet, american, chinese) or topology file.
    #[arg(long)]
    topology: String,
    #[arg(long)]
    base_file: PathBuf,
    /// Seed of a random mapping; the identity mapping when absent.
    #[arg(long)]
    mapping_seed: Option<u64>,
    #[arg(long, default_value = "text", value_parser = ["text", "json"])]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    topology: String,
    #[arg(long)]
    base_file: PathBuf,
    #[arg(long, default_value = "paired")]
    mode: TrailMode,
    /// Simultaneous link failures per scenario: 1 or 2.
    #[arg(long, default_value_t = 1)]
    faults: usize,
    /// Mapping #1 is the identity, the rest are random.
    #[arg(long, default_value_t = 100)]
    mappings: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "truncated")]
    fault_model: FaultModel,
    /// Let the hub relay traffic from upstream nodes to downstream ones.
    #[arg(long)]
    hub_relay: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write every (mapping, scenario) sample to this CSV file.
    #[arg(long)]
    samples: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    spec_file: PathBuf,
    #[arg(long, default_value = "table")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_output(out: Option<&Path>, text: &[u8]) -> Result<(), Error> {
    let result = match out {
        Some(path) => fs::write(path, text),
        None => io::stdout().write_all(text),
    };
    result.map_err(|source| Error::Io {
        path: out.map_or("<stdout>".into(), |p| p.display().to_string()),
        source,
    })
}

fn load_base(path: &Path) -> Result<QuorumBase, Error> {
    Ok(QuorumBase::from_file_str(&read(path)?)?)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<(), csv::Error>) -> Result<Vec<u8>, Error> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(qcycle::ReportError::from)?;
    Ok(buf)
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Quorum(QuorumCommand::Search {
            n,
            r,
            budget,
            per_size,
            out,
        }) => {
            let d = SearchBudget::default();
            let budget = SearchBudget {
                per_size: per_size.or(d.per_size),
                total: budget.or(d.total),
            };
            let outcome = search_min_base(n, r, budget)?;
            write_output(out.as_deref(), outcome.to_file_string().as_bytes())?;
        }
        Command::Quorum(QuorumCommand::Verify { base_file, r }) => {
            let base = load_base(&base_file)?;
            let report = verify_quorum_set(&generate_quorums(&base), r);
            let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
            write_output(None, text.as_bytes())?;
            if !report.passed() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Route(args) => {
            let g = resolve_topology(&args.topology)?;
            let base = load_base(&args.base_file)?;
            check_sizes(g.n(), &base)?;
            let mapping = match args.mapping_seed {
                Some(seed) => NodeMapping::random(g.n(), &mut ChaCha8Rng::seed_from_u64(seed), seed),
                None => NodeMapping::identity(g.n()),
            };
            let cycles = route_all(&g, &generate_quorums(&base), &mapping)?;
            let text = if args.format == "json" {
                cycles_to_json(&cycles) + "\n"
            } else {
                cycles_to_text(&cycles)
            };
            write_output(args.out.as_deref(), text.as_bytes())?;
        }
        Command::Simulate(args) => {
            let g = resolve_topology(&args.topology)?;
            let base = load_base(&args.base_file)?;
            check_sizes(g.n(), &base)?;
            let cfg = SimulationConfig {
                mode: args.mode,
                order: args.faults,
                rules: DeliveryRules {
                    model: args.fault_model,
                    hub_relay: args.hub_relay,
                },
                keep_samples: args.samples.is_some(),
            };
            let mappings = generate_mappings(g.n(), args.mappings, args.seed);
            let result = simulate(&g, &base, &mappings, cfg)?;
            let excluded = result.excluded();
            if excluded > 0 {
                eprintln!("{excluded} of {} mappings excluded: routing infeasible", mappings.len());
            }
            write_output(args.out.as_deref(), &csv_bytes(|b| result.write_csv(b))?)?;
            if let Some(path) = args.samples {
                write_output(Some(&path), &csv_bytes(|b| result.write_samples(b))?)?;
            }
        }
        Command::Report(args) => {
            let format: Format = args.format.parse().map_err(qcycle::ReportError::from)?;
            let spec = ExperimentSpec::load(&args.spec_file)?;
            let result = run_experiment(&spec);
            for e in &result.errors {
                eprintln!("error: {e}");
            }
            let text = emit(&result.rows, format)?;
            write_output(args.out.as_deref(), text.as_bytes())?;
            if !result.errors.is_empty() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn check_sizes(n: usize, base: &QuorumBase) -> Result<(), Error> {
    if base.n() != n {
        return Err(qcycle::QuorumError::InvalidBase(format!(
            "base is for {} nodes but the topology has {n}",
            base.n()
        ))
        .into());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
