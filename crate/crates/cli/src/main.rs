use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crn_cli::commands::{self, ExperimentKind};
use crn_cli::{CliError, CliResult, Settings};

/// Simulate, fit and evaluate count data from causal regulatory networks.
///
/// Every flag overrides the config-file key of the same name, with dashes
/// in place of underscores (`--m-attach` sets `m_attach`).
#[derive(Debug, Parser)]
#[command(name = "crn", version)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// INI-style file of `key = value` settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: crn-runs/<command>-<unix time>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a graph, parameters and samples from one simulator.
    Generate(GenerateArgs),
    /// Fit per-gene negative binomial parameters to a count matrix.
    Fit(FitArgs),
    /// Score a sample matrix against a graph, a prediction or a reference.
    Metrics(MetricsArgs),
    /// Run one of the benchmark experiments.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args, Default)]
struct WeightArgs {
    /// Smallest absolute edge weight.
    #[arg(long)]
    weight_low: Option<f64>,
    /// Largest absolute edge weight.
    #[arg(long)]
    weight_high: Option<f64>,
    /// Probability that an edge weight is positive.
    #[arg(long)]
    positive_fraction: Option<f64>,
}

#[derive(Debug, Args, Default)]
struct NodeArgs {
    #[arg(long)]
    mu0: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Calibration widening `a`.
    #[arg(long)]
    adjust: Option<f64>,
}

#[derive(Debug, Args, Default)]
struct SergioArgs {
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    decay: Option<f64>,
    #[arg(long)]
    noise_q: Option<f64>,
    /// Interaction strengths drawn from `lo,hi`.
    #[arg(long)]
    k_range: Option<String>,
    /// One interaction strength for every edge.
    #[arg(long)]
    k_fixed: Option<f64>,
    /// Basal production rates drawn from `lo,hi`.
    #[arg(long)]
    basal_range: Option<String>,
    #[arg(long)]
    hill_n: Option<f64>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(flatten)]
    common: Common,
    /// er, sf or chain.
    #[arg(long)]
    graph: Option<String>,
    /// Edge-list CSV used instead of a random graph.
    #[arg(long)]
    edges: Option<PathBuf>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    m_attach: Option<usize>,
    /// Rows per regime.
    #[arg(short, long)]
    n: Option<usize>,
    /// regnet, anm or sergio.
    #[arg(long)]
    simulator: Option<String>,
    /// Per-node parameter CSV.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Parameter library CSV (default: built-in library).
    #[arg(long)]
    library: Option<PathBuf>,
    /// Intervention such as `X0=0` or `X0=0;X3=5`; repeat for more regimes.
    #[arg(long)]
    intervene: Vec<String>,
    /// Also emit an observational block when interventions are given.
    #[arg(long)]
    include_observational: bool,
    #[arg(long)]
    noise_std: Option<f64>,
    #[command(flatten)]
    weights: WeightArgs,
    #[command(flatten)]
    node: NodeArgs,
    #[command(flatten)]
    sergio: SergioArgs,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    common: Common,
    /// Count matrix CSV (sample format or plain header + rows).
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    #[command(flatten)]
    common: Common,
    /// Sample matrix CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// True graph as an edge list.
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Predicted graph as an edge list.
    #[arg(long)]
    predicted: Option<PathBuf>,
    /// Reference count matrix for per-gene W1.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Cost of a reversed edge in SHD (1 or 2).
    #[arg(long)]
    reversal_cost: Option<u32>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Parents,
    Mediators,
    Scalability,
    Varsort,
    Fidelity,
}

impl From<Kind> for ExperimentKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Parents => ExperimentKind::Parents,
            Kind::Mediators => ExperimentKind::Mediators,
            Kind::Scalability => ExperimentKind::Scalability,
            Kind::Varsort => ExperimentKind::Varsort,
            Kind::Fidelity => ExperimentKind::Fidelity,
        }
    }
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    kind: Kind,
    #[command(flatten)]
    common: Common,
    /// Comma-separated numbers of extra parents or mediators.
    #[arg(long)]
    ks: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(short, long)]
    n: Option<usize>,
    /// Comma-separated simulator names.
    #[arg(long)]
    simulators: Option<String>,
    #[arg(long)]
    sizes: Option<String>,
    #[arg(long)]
    chain_sizes: Option<String>,
    #[arg(long)]
    graph_sizes: Option<String>,
    #[arg(long)]
    edge_factor: Option<usize>,
    #[arg(long)]
    sergio_max_d: Option<usize>,
    /// Per-cell time budget; 0 disables it.
    #[arg(long)]
    timeout_secs: Option<f64>,
    #[arg(long)]
    timing_threads: Option<usize>,
    #[arg(long)]
    library: Option<PathBuf>,
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    n_reference: Option<usize>,
    #[arg(long)]
    alphas: Option<String>,
    #[arg(long)]
    effect_threshold: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    #[command(flatten)]
    weights: WeightArgs,
    #[command(flatten)]
    node: NodeArgs,
    #[command(flatten)]
    sergio: SergioArgs,
}

fn path(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.display().to_string())
}

impl Common {
    fn settings(&self) -> CliResult<Settings> {
        let mut s = match &self.config {
            Some(p) => Settings::load(p)?,
            None => Settings::default(),
        };
        s.set_if("seed", self.seed)?;
        s.set_if("out", path(&self.out))?;
        Ok(s)
    }
}

impl WeightArgs {
    fn apply(&self, s: &mut Settings) -> CliResult<()> {
        s.set_if("weight_low", self.weight_low)?;
        s.set_if("weight_high", self.weight_high)?;
        s.set_if("positive_fraction", self.positive_fraction)
    }
}

impl NodeArgs {
    fn apply(&self, s: &mut Settings) -> CliResult<()> {
        s.set_if("mu0", self.mu0)?;
        s.set_if("theta", self.theta)?;
        s.set_if("alpha", self.alpha)?;
        s.set_if("beta", self.beta)?;
        s.set_if("adjust", self.adjust)
    }
}

impl SergioArgs {
    fn apply(&self, s: &mut Settings) -> CliResult<()> {
        s.set_if("dt", self.dt)?;
        s.set_if("burn_in", self.burn_in)?;
        s.set_if("decay", self.decay)?;
        s.set_if("noise_q", self.noise_q)?;
        s.set_if("k_range", self.k_range.as_ref())?;
        s.set_if("k_fixed", self.k_fixed)?;
        s.set_if("basal_range", self.basal_range.as_ref())?;
        s.set_if("hill_n", self.hill_n)
    }
}

fn dispatch(command: Command) -> CliResult<PathBuf> {
    match command {
        Command::Generate(a) => {
            let mut s = a.common.settings()?;
            s.set_if("graph", a.graph.as_ref())?;
            s.set_if("edges", path(&a.edges))?;
            s.set_if("d", a.d)?;
            s.set_if("m", a.m)?;
            s.set_if("m_attach", a.m_attach)?;
            s.set_if("n", a.n)?;
            s.set_if("simulator", a.simulator.as_ref())?;
            s.set_if("params", path(&a.params))?;
            s.set_if("library", path(&a.library))?;
            if !a.intervene.is_empty() {
                s.set("intervene", a.intervene.join(","))?;
            }
            if a.include_observational {
                s.set("include_observational", "true")?;
            }
            s.set_if("noise_std", a.noise_std)?;
            a.weights.apply(&mut s)?;
            a.node.apply(&mut s)?;
            a.sergio.apply(&mut s)?;
            commands::generate(&s)
        }
        Command::Fit(a) => {
            let mut s = a.common.settings()?;
            s.set_if("input", path(&a.input))?;
            commands::fit(&s)
        }
        Command::Metrics(a) => {
            let mut s = a.common.settings()?;
            s.set_if("data", path(&a.data))?;
            s.set_if("edges", path(&a.edges))?;
            s.set_if("predicted", path(&a.predicted))?;
            s.set_if("reference", path(&a.reference))?;
            s.set_if("reversal_cost", a.reversal_cost)?;
            commands::metrics(&s)
        }
        Command::Experiment(a) => {
            let mut s = a.common.settings()?;
            s.set_if("ks", a.ks.as_ref())?;
            s.set_if("reps", a.reps)?;
            s.set_if("n", a.n)?;
            s.set_if("simulators", a.simulators.as_ref())?;
            s.set_if("sizes", a.sizes.as_ref())?;
            s.set_if("chain_sizes", a.chain_sizes.as_ref())?;
            s.set_if("graph_sizes", a.graph_sizes.as_ref())?;
            s.set_if("edge_factor", a.edge_factor)?;
            s.set_if("sergio_max_d", a.sergio_max_d)?;
            s.set_if("timeout_secs", a.timeout_secs)?;
            s.set_if("timing_threads", a.timing_threads)?;
            s.set_if("library", path(&a.library))?;
            s.set_if("reference", path(&a.reference))?;
            s.set_if("n_reference", a.n_reference)?;
            s.set_if("alphas", a.alphas.as_ref())?;
            s.set_if("effect_threshold", a.effect_threshold)?;
            s.set_if("d", a.d)?;
            a.weights.apply(&mut s)?;
            a.node.apply(&mut s)?;
            a.sergio.apply(&mut s)?;
            commands::experiment(a.kind.into(), &s)
        }
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("CRN_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::validation(format!("CRN_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::validation(format!("cannot configure {threads} threads: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match configure_threads().and_then(|()| dispatch(cli.command)) {
        Ok(out) => {
            println!("{}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
