//! `netex`: validate, solve, certify and generate network exchange instances.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use netex_core::io::{
    export_frontier, generate_instance, parse_instance_document, parse_outcome, serialize_instance, serialize_outcome,
    CertificateRecord, FamilyMix, OutcomeFile, SolverOverrides,
};
use netex_core::{brute_force_solve, certify_profile, solve, ActorId, Instance, Side, SolverConfig, SolverError};

const EXIT_UNSTABLE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NON_CONVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(name = "netex", version, about = "Bipartite network exchange games: frontiers, stable outcomes, certificates")]
struct Cli {
    /// Stability and feasibility tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for `gen`.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Side that proposes in deferred acceptance.
    #[arg(long, global = true, value_enum)]
    propose_side: Option<SideArg>,
    /// Initial concession step of the solver.
    #[arg(long, global = true)]
    step: Option<f64>,
    /// Output file (default: standard output). Written atomically.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate an instance document.
    Validate {
        /// Instance file, or `-` for standard input.
        #[arg(default_value = "-")]
        input: String,
    },
    /// Compute a certified stable outcome.
    Solve {
        #[arg(default_value = "-")]
        input: String,
    },
    /// Re-certify an outcome document; exits 1 if it is unstable.
    Check {
        /// Outcome file, or `-` for standard input.
        #[arg(default_value = "-")]
        outcome: String,
        /// Instance file the outcome must have been computed from.
        #[arg(long)]
        instance: Option<String>,
    },
    /// Sample an edge's efficient path as CSV.
    Frontier {
        #[arg(default_value = "-")]
        input: String,
        /// Edge as `BUYER:SELLER`; defaults to the first edge.
        #[arg(long)]
        edge: Option<String>,
        #[arg(long, default_value_t = 101)]
        samples: usize,
    },
    /// Generate a random instance from `--seed`.
    Gen {
        #[arg(long, default_value_t = 3)]
        buyers: usize,
        #[arg(long, default_value_t = 3)]
        sellers: usize,
        #[arg(long, default_value_t = 0.6)]
        density: f64,
        #[arg(long, value_enum, default_value_t = FamilyArg::Mixed)]
        family: FamilyArg,
    },
    /// Exhaustive grid search for stable outcomes (small instances only).
    Oracle {
        #[arg(default_value = "-")]
        input: String,
        #[arg(long, default_value_t = 0.02)]
        grid: f64,
        /// Outcomes listed in the report.
        #[arg(long, default_value_t = 10)]
        limit: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    #[value(alias = "A", alias = "a")]
    Buyer,
    #[value(alias = "B", alias = "b")]
    Seller,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Side {
        match s {
            SideArg::Buyer => Side::Buyer,
            SideArg::Seller => Side::Seller,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Mixed,
    AdditivePower,
    Ces,
    ShiftedCobbDouglas,
    Sqrt,
}

impl From<FamilyArg> for FamilyMix {
    fn from(f: FamilyArg) -> FamilyMix {
        match f {
            FamilyArg::Mixed => FamilyMix::Mixed,
            FamilyArg::AdditivePower => FamilyMix::AdditivePower,
            FamilyArg::Ces => FamilyMix::Ces,
            FamilyArg::ShiftedCobbDouglas => FamilyMix::ShiftedCobbDouglas,
            FamilyArg::Sqrt => FamilyMix::SqrtAdditive,
        }
    }
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn input_error(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        error: error.into(),
    }
}

type CmdResult = Result<u8, Failure>;

fn read_input(path: &str) -> Result<String, Failure> {
    let mut text = String::new();
    if path == "-" {
        io::stdin().read_to_string(&mut text).context("reading standard input").map_err(input_error)?;
    } else {
        text = fs::read_to_string(path).with_context(|| format!("reading {path}")).map_err(input_error)?;
    }
    Ok(text)
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    let result = match out {
        None => io::stdout().lock().write_all(text.as_bytes()).context("writing standard output"),
        Some(path) => write_atomic(path, text).with_context(|| format!("writing {}", path.display())),
    };
    result.map_err(input_error)
}

/// Writes to a temporary file in the target directory, then renames it.
fn write_atomic(path: &Path, text: &str) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)?;
    Ok(())
}

fn load_instance(path: &str) -> Result<(Instance, SolverOverrides), Failure> {
    let text = read_input(path)?;
    let doc = parse_instance_document(&text).with_context(|| format!("in {}", display_name(path))).map_err(input_error)?;
    for w in &doc.warnings {
        eprintln!("warning: {w}");
    }
    Ok((doc.instance, doc.solver))
}

fn display_name(path: &str) -> &str {
    if path == "-" {
        "<stdin>"
    } else {
        path
    }
}

fn run(cli: Cli) -> CmdResult {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Validate { input } => {
            let (instance, _) = load_instance(&input)?;
            let buyers = instance.actors().iter().filter(|a| a.side == Side::Buyer).count();
            eprintln!(
                "valid: {} actors ({} buyers, {} sellers), {} edges",
                instance.n_actors(),
                buyers,
                instance.n_actors() - buyers,
                instance.edges().len()
            );
            if out.is_some() {
                write_output(out, &serialize_instance(&instance))?;
            }
            Ok(0)
        }
        Command::Solve { input } => {
            let (instance, overrides) = load_instance(&input)?;
            let mut config = overrides.apply(SolverConfig::default());
            if let Some(side) = cli.propose_side {
                config.propose_side = side.into();
            }
            if let Some(step) = cli.step {
                config.step = step;
            }
            if let Some(tol) = cli.tol {
                config.tol = tol;
            }
            let outcome = solve(&instance, &config).map_err(|e| Failure {
                code: match e {
                    SolverError::NonConvergence { .. } => EXIT_NON_CONVERGENCE,
                    _ => EXIT_INPUT,
                },
                error: e.into(),
            })?;
            write_output(out, &serialize_outcome(&OutcomeFile::from_outcome(&instance, &outcome, &config)))?;
            Ok(0)
        }
        Command::Check { outcome, instance } => {
            let text = read_input(&outcome)?;
            let file = parse_outcome(&text).with_context(|| format!("in {}", display_name(&outcome))).map_err(input_error)?;
            let embedded = file.load_instance().map_err(input_error)?;
            if let Some(path) = instance {
                let (given, _) = load_instance(&path)?;
                if serialize_instance(&given) != serialize_instance(&embedded) {
                    return Err(input_error(anyhow!("outcome was not computed from {path}")));
                }
            }
            let profile = file.strategy_profile(&embedded).map_err(input_error)?;
            let tol = cli.tol.unwrap_or(file.certificate.tol);
            let report = certify_profile(&embedded, &profile, tol);
            let record = CertificateRecord::from_report(&embedded, &report);
            if record.verdict != file.certificate.verdict {
                eprintln!(
                    "warning: recorded verdict {:?} differs from recomputed {:?}",
                    file.certificate.verdict, record.verdict
                );
            }
            match &record.violation {
                None => eprintln!("Stable (tol {tol:e}, min slack {:e})", report.min_slack()),
                Some(v) => eprintln!("Unstable: {}", serde_json::to_string(v).expect("records serialize")),
            }
            if out.is_some() {
                let mut text = serde_json::to_string_pretty(&record).expect("records serialize");
                text.push('\n');
                write_output(out, &text)?;
            }
            Ok(if report.is_stable() { 0 } else { EXIT_UNSTABLE })
        }
        Command::Frontier { input, edge, samples } => {
            let (instance, _) = load_instance(&input)?;
            let k = match edge {
                None => 0,
                Some(label) => {
                    let (b, s) = label
                        .split_once(':')
                        .ok_or_else(|| input_error(anyhow!("edge must be BUYER:SELLER, got {label:?}")))?;
                    instance.edge_by_ids(&ActorId::new(b), &ActorId::new(s)).map_err(input_error)?
                }
            };
            let csv = export_frontier(&instance, k, samples).map_err(input_error)?;
            write_output(out, &csv)?;
            Ok(0)
        }
        Command::Gen {
            buyers,
            sellers,
            density,
            family,
        } => {
            let instance =
                generate_instance(buyers, sellers, density, family.into(), cli.seed).map_err(input_error)?;
            write_output(out, &serialize_instance(&instance))?;
            Ok(0)
        }
        Command::Oracle { input, grid, limit } => {
            let (instance, _) = load_instance(&input)?;
            let res = brute_force_solve(&instance, grid).map_err(input_error)?;
            let id = |a: usize| instance.actor(a).id.as_str().to_owned();
            let outcomes: Vec<_> = res
                .outcomes
                .iter()
                .take(limit)
                .map(|o| {
                    let matching: Vec<_> = o
                        .matched_edges()
                        .iter()
                        .map(|&k| {
                            let e = instance.edge(k);
                            [id(e.buyer), id(e.seller)]
                        })
                        .collect();
                    let payoffs: serde_json::Map<_, _> =
                        o.payoffs.iter().enumerate().map(|(a, &u)| (id(a), json!(u))).collect();
                    json!({ "matching": matching, "payoffs": payoffs })
                })
                .collect();
            let report = json!({
                "grid_step": res.grid_step,
                "tolerance": res.tolerance,
                "n_outcomes": res.outcomes.len(),
                "outcomes": outcomes,
            });
            let mut text = serde_json::to_string_pretty(&report).expect("reports serialize");
            text.push('\n');
            write_output(out, &text)?;
            Ok(if res.outcomes.is_empty() { EXIT_NON_CONVERGENCE } else { 0 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
