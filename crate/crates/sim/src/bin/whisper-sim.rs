use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use whisper_core::sim::topology::{compute_diameter, DEFAULT_HOP_THRESHOLD};
use whisper_sim::check::{run_suite, CheckOptions, Suite};
use whisper_sim::graphs::{self, BUNDLED_NAMES};
use whisper_sim::output::{summary_csv, write_outputs};
use whisper_sim::scenario::ScenarioSpec;
use whisper_sim::topology_file::{read_topology, serialize_topology};
use whisper_sim::{run_spec, SimError, DEFAULT_SEED};

#[derive(Parser)]
#[command(name = "whisper-sim", version, about = "Flooding simulator for Whisper and Glossy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write CSV and column outputs.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides the scenario's seed and WHISPER_SIM_SEED.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        floods: Option<u64>,
        #[arg(long)]
        reps: Option<u64>,
    },
    /// Evaluate acceptance criteria: timing, ratio, idle, concurrent,
    /// compliant, preamble or all.
    Check {
        suite: String,
        #[arg(long)]
        floods: Option<u64>,
        #[arg(long)]
        reps: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Topology utilities.
    Topo {
        #[command(subcommand)]
        command: TopoCommand,
    },
}

#[derive(Subcommand)]
enum TopoCommand {
    /// Node and link counts, PRR range and diameter from node 0.
    Info { file: PathBuf },
    /// Print a bundled graph in topology-file format.
    Bundled { name: String },
}

fn env_seed() -> Result<Option<u64>, SimError> {
    match std::env::var("WHISPER_SIM_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| SimError::Invalid(format!("WHISPER_SIM_SEED is not a number: `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn run(scenario: &Path, out: &Path, seed: Option<u64>, floods: Option<u64>, reps: Option<u64>) -> Result<(), SimError> {
    let text = std::fs::read_to_string(scenario)?;
    let mut spec = ScenarioSpec::parse(&text)?;
    if let Some(f) = floods {
        spec.floods = f;
    }
    if let Some(r) = reps {
        spec.reps = r;
    }
    let seed = match (seed, spec.seed) {
        (Some(s), _) | (None, Some(s)) => s,
        (None, None) => env_seed()?.unwrap_or(DEFAULT_SEED),
    };
    let record = run_spec(&spec, seed, scenario.parent())?;
    let records = [record];
    write_outputs(out, &records)?;
    print!("{}", summary_csv(&records));
    Ok(())
}

fn check(suite: &str, floods: Option<u64>, reps: Option<u64>, seed: Option<u64>) -> Result<bool, SimError> {
    let suite = Suite::parse(suite)?;
    let mut opts = CheckOptions::default();
    if let Some(f) = floods {
        opts.floods = f;
    }
    if let Some(r) = reps {
        opts.reps = r;
    }
    if let Some(s) = seed.or(env_seed()?) {
        opts.seed = s;
    }
    let results = run_suite(suite, &opts)?;
    for r in &results {
        println!("{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    Ok(failed == 0)
}

fn topo_info(file: &Path) -> Result<(), SimError> {
    let links = read_topology(file)?;
    let n = links.n_nodes();
    let prrs: Vec<f64> = links.links().map(|l| l.prr).collect();
    println!("nodes {n}");
    println!("links {}", prrs.len());
    if let (Some(lo), Some(hi)) = (
        prrs.iter().copied().reduce(f64::min),
        prrs.iter().copied().reduce(f64::max),
    ) {
        println!("prr_min {lo:.3}");
        println!("prr_max {hi:.3}");
    }
    if n > 0 {
        let d = compute_diameter(&links, 0, DEFAULT_HOP_THRESHOLD)?;
        println!("diameter_from_node0 {}", d.d_net);
        let list: Vec<String> = d.disconnected.iter().map(|n| n.to_string()).collect();
        println!(
            "disconnected {}",
            if list.is_empty() { "none".into() } else { list.join(",") }
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            scenario,
            out,
            seed,
            floods,
            reps,
        } => run(&scenario, &out, seed, floods, reps).map(|_| true),
        Command::Check {
            suite,
            floods,
            reps,
            seed,
        } => check(&suite, floods, reps, seed),
        Command::Topo {
            command: TopoCommand::Info { file },
        } => topo_info(&file).map(|_| true),
        Command::Topo {
            command: TopoCommand::Bundled { name },
        } => graphs::bundled(&name).map(|links| {
            print!("{}", serialize_topology(&links));
            true
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            if let SimError::Invalid(msg) = &e {
                if msg.starts_with("unknown bundled graph") {
                    eprintln!("bundled graphs: {}", BUNDLED_NAMES.join(", "));
                }
            }
            ExitCode::from(e.exit_code())
        }
    }
}
