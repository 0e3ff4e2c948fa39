use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use coalition_core::combination::TaskScope;
use coalition_core::harness::{
    announced_pool, brute_force_pareto, generate_random_scenario, measured_run, run_experiment, write_metrics_csv,
    ExperimentConfig, GeneratorParams, TaskCount,
};
use coalition_core::negotiation::{FailureReason, NegotiationConfig, NegotiationResult};
use coalition_core::preference::plan_agent;
use coalition_core::{AgentId, Scenario, ScenarioError};

const EXIT_INTERNAL: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_DEADLINE: u8 = 4;
const EXIT_EXHAUSTION: u8 = 5;

#[derive(Parser)]
#[command(name = "coalition", version, about = "Coalition formation by negotiation over task combinations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one negotiation and write its transcript and metrics.
    Run(RunArgs),
    /// Run an experiment sweep over agent counts.
    Sweep(SweepArgs),
    /// Print the Pareto frontier of the structure space.
    Oracle(OracleArgs),
    /// Parse and validate a scenario file.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl Switch {
    fn on(self) -> bool {
        self == Switch::On
    }
}

/// `n=4,m=6,density=0.5`
#[derive(Clone, Debug)]
struct GenSpec {
    agents: usize,
    tasks: usize,
    density: f64,
}

impl FromStr for GenSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (mut n, mut m, mut d) = (None, None, 0.3);
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| format!("expected key=value, got `{part}`"))?;
            let bad = |_| format!("bad value for {k}: `{v}`");
            match k.trim() {
                "n" => n = Some(v.trim().parse().map_err(bad)?),
                "m" => m = Some(v.trim().parse().map_err(bad)?),
                "density" | "d" => d = v.trim().parse().map_err(|_| format!("bad value for {k}: `{v}`"))?,
                other => return Err(format!("unknown generator key `{other}`")),
            }
        }
        Ok(GenSpec { agents: n.ok_or("missing n")?, tasks: m.ok_or("missing m")?, density: d })
    }
}

#[derive(Args, Clone)]
#[group(required = true, multiple = false)]
struct Source {
    /// Scenario file.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Random scenario parameters, e.g. `n=4,m=6,density=0.5`.
    #[arg(long = "gen")]
    generate: Option<GenSpec>,
}

#[derive(Args, Clone)]
struct Shared {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    deadline: u64,
    #[arg(long, value_enum, default_value = "on")]
    deps: Switch,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    shared: Shared,
    #[arg(long, value_enum, default_value = "on")]
    trust: Switch,
    #[arg(long, default_value_t = 1)]
    block_threshold: usize,
    /// Hold back conclusion while the agent still has groups of its own.
    #[arg(long)]
    stalling: bool,
    /// Agent that opens the negotiation; chosen from the seed when absent.
    #[arg(long)]
    initiator: Option<String>,
    #[arg(long)]
    out_metrics: Option<PathBuf>,
    #[arg(long)]
    out_transcript: Option<PathBuf>,
    #[arg(long)]
    dump_tree: Option<PathBuf>,
    /// Leave runtime_ms empty so that output files are reproducible.
    #[arg(long)]
    no_runtime: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 2)]
    min_agents: usize,
    #[arg(long, default_value_t = 10)]
    max_agents: usize,
    /// Fixed task count; defaults to one task per agent.
    #[arg(long)]
    tasks: Option<usize>,
    #[arg(long, default_value_t = 0.3)]
    density: f64,
    #[arg(long, default_value_t = 10)]
    repetitions: usize,
    #[command(flatten)]
    shared: Shared,
    /// Per-run metrics table.
    #[arg(long)]
    out_metrics: Option<PathBuf>,
    /// Averaged metrics per agent count.
    #[arg(long)]
    out_points: Option<PathBuf>,
    #[arg(long)]
    no_runtime: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    shared: Shared,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn internal(message: impl ToString) -> Self {
        Failure { code: EXIT_INTERNAL, message: message.to_string() }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        let code = if e.is_parse() { EXIT_PARSE } else { EXIT_VALIDATION };
        Failure { code, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Sweep(args) => sweep(args),
        Command::Oracle(args) => oracle(args),
        Command::Validate { scenario } => validate(&scenario),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read_scenario(path: &Path) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::internal(format!("{}: {e}", path.display())))?;
    let scenario = Scenario::parse(&text).map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })?;
    Ok(scenario)
}

fn load(source: &Source, seed: u64) -> Result<Scenario, Failure> {
    let scenario = match (&source.scenario, &source.generate) {
        (Some(path), _) => read_scenario(path)?,
        (None, Some(g)) => generate_random_scenario(&GeneratorParams::new(g.agents, g.tasks, g.density), seed)
            .map_err(|e| Failure { code: EXIT_VALIDATION, message: e.to_string() })?,
        (None, None) => return Err(Failure::internal("no scenario given")),
    };
    scenario.validate()?;
    Ok(scenario)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::internal(format!("{}: {e}", path.display())))
}

fn negotiation_config(shared: &Shared) -> NegotiationConfig {
    let mut cfg = NegotiationConfig { seed: shared.seed, deadline: shared.deadline, ..NegotiationConfig::default() };
    cfg.plan.generate.dependency_handling = shared.deps.on();
    cfg
}

fn run(args: RunArgs) -> Result<u8, Failure> {
    let scenario = load(&args.source, args.shared.seed)?;
    let mut cfg = negotiation_config(&args.shared);
    cfg.strategy.trust = args.trust.on();
    cfg.strategy.block_threshold = args.block_threshold;
    cfg.strategy.stalling = args.stalling;
    cfg.initiator = args.initiator.as_deref().map(AgentId::from);

    if let Some(path) = &args.dump_tree {
        let mut plan = cfg.plan.clone();
        plan.generate.scope = TaskScope::Pool(announced_pool(&scenario));
        let mut agents = scenario.agents.clone();
        agents.sort();
        let mut out = String::new();
        for a in &agents {
            let mut p = plan_agent(&scenario, a, &plan);
            out.push_str(&format!("# {a}\n"));
            out.push_str(&p.tree.dump());
        }
        write_file(path, out.as_bytes())?;
    }

    let (outcome, metrics) = measured_run(&scenario, &cfg)?;
    let transcript = outcome.transcript_text();
    match &args.out_transcript {
        Some(path) => write_file(path, transcript.as_bytes())?,
        None => print!("{transcript}"),
    }
    if let Some(path) = &args.out_metrics {
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &[metrics], !args.no_runtime).map_err(Failure::internal)?;
        write_file(path, &buf)?;
    }
    let code = match &outcome.result {
        NegotiationResult::Solution(id) => {
            println!("solution {id}");
            0
        }
        NegotiationResult::Failure(reason) => {
            println!("failure {}", outcome.result.label());
            match reason {
                FailureReason::Deadline => EXIT_DEADLINE,
                FailureReason::Exhaustion => EXIT_EXHAUSTION,
            }
        }
    };
    Ok(code)
}

fn sweep(args: SweepArgs) -> Result<u8, Failure> {
    let config = ExperimentConfig {
        min_agents: args.min_agents,
        max_agents: args.max_agents,
        tasks: args.tasks.map_or(TaskCount::PerAgent(1.0), TaskCount::Fixed),
        density: args.density,
        dependency_handling: args.shared.deps.on(),
        repetitions: args.repetitions,
        seed: args.shared.seed,
        deadline: args.shared.deadline,
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&config).map_err(|e| Failure { code: EXIT_VALIDATION, message: e.to_string() })?;
    let with_runtime = !args.no_runtime;
    match &args.out_metrics {
        Some(path) => {
            let mut buf = Vec::new();
            write_metrics_csv(&mut buf, &report.rows, with_runtime).map_err(Failure::internal)?;
            write_file(path, &buf)?;
        }
        None => report.write_points_csv(io::stdout().lock(), with_runtime).map_err(Failure::internal)?,
    }
    if let Some(path) = &args.out_points {
        let mut buf = Vec::new();
        report.write_points_csv(&mut buf, with_runtime).map_err(Failure::internal)?;
        write_file(path, &buf)?;
    }
    for (n, seed, e) in &report.errors {
        eprintln!("run n={n} seed={seed} failed to start: {e}");
    }
    Ok(0)
}

fn oracle(args: OracleArgs) -> Result<u8, Failure> {
    let scenario = load(&args.source, args.shared.seed)?;
    let cfg = negotiation_config(&args.shared);
    let frontier = brute_force_pareto(&scenario, &cfg.plan).map_err(Failure::internal)?;
    let mut out = io::stdout().lock();
    for id in frontier {
        writeln!(out, "{id}").map_err(Failure::internal)?;
    }
    Ok(0)
}

fn validate(path: &Path) -> Result<u8, Failure> {
    let scenario = read_scenario(path)?;
    scenario.validate()?;
    println!(
        "ok: {} tasks, {} agents, {} relationship edges, {} declared structures",
        scenario.tasks.len(),
        scenario.agents.len(),
        scenario.relationship_edge_count(),
        scenario.structures.len()
    );
    Ok(0)
}
