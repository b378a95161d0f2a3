//! Subcommand implementations on top of [`Settings`].

use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use log::{info, warn};

use crn_core::baselines::{GaussianAnmModel, InteractionStrength, SergioConfig};
use crn_core::fit::{fit_library, load_library, save_library, ParamLibrary};
use crn_core::graph::{generate_er_dag, generate_sf_dag, make_chain, sample_edge_weights, WeightRanges};
use crn_core::io::{read_edge_list, read_params, read_samples_path, write_edge_list, write_params, write_samples_path};
use crn_core::metrics::{correlation_distribution, mean, median, structure_score, varsortability, wasserstein1, ReversalCost};
use crn_core::rng::purpose;
use crn_core::{Error, InterventionSpec, NodeParams, SampleMatrix, WeightedDag};

use crate::error::{CliError, CliResult};
use crate::experiments::{self as exp, SimModel, Simulator};
use crate::settings::Settings;
use crate::table::TidyTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Parents,
    Mediators,
    Scalability,
    Varsort,
    Fidelity,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Parents => "parents",
            ExperimentKind::Mediators => "mediators",
            ExperimentKind::Scalability => "scalability",
            ExperimentKind::Varsort => "varsort",
            ExperimentKind::Fidelity => "fidelity",
        }
    }
}

/// `--out` if given, otherwise a fresh timestamped directory under `crn-runs/`.
pub fn output_dir(settings: &Settings, label: &str) -> CliResult<PathBuf> {
    let dir = match settings.raw("out") {
        Some(p) => PathBuf::from(p),
        None => {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
            let base = PathBuf::from("crn-runs");
            let mut candidate = base.join(format!("{label}-{secs}"));
            let mut k = 1;
            while candidate.exists() {
                candidate = base.join(format!("{label}-{secs}-{k}"));
                k += 1;
            }
            candidate
        }
    };
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn open_input(path: &str) -> CliResult<File> {
    File::open(path).map_err(|e| CliError::validation(format!("cannot open `{path}`: {e}")))
}

/// Reads either the `row_id,regime,...` sample format or a plain CSV whose
/// header names the columns.
pub fn read_matrix(path: &str) -> CliResult<SampleMatrix> {
    let mut first = String::new();
    BufReader::new(open_input(path)?).read_line(&mut first)?;
    if first.trim_start().starts_with("row_id,regime") {
        return Ok(read_samples_path(Path::new(path))?);
    }
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(open_input(path)?);
    let names: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut values = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        for field in record.iter() {
            let v = field
                .parse::<f64>()
                .map_err(|_| Error::Parse {
                    line,
                    message: format!("cannot parse `{field}` as a number"),
                })?;
            values.push(v);
        }
    }
    Ok(SampleMatrix::from_values(names, values, InterventionSpec::observational())?)
}

fn sergio_config(s: &Settings) -> CliResult<SergioConfig> {
    let d = SergioConfig::default();
    let strength = match (s.get::<f64>("k_fixed")?, s.get_range("k_range")?) {
        (Some(_), Some(_)) => return Err(CliError::validation("set at most one of `k_fixed` and `k_range`")),
        (Some(k), None) => InteractionStrength::Fixed(k),
        (None, Some((lo, hi))) => InteractionStrength::Uniform(lo, hi),
        (None, None) => d.strength,
    };
    Ok(SergioConfig {
        dt: s.get_or("dt", d.dt)?,
        burn_in: s.get_or("burn_in", d.burn_in)?,
        decay: s.get_or("decay", d.decay)?,
        noise_q: s.get_or("noise_q", d.noise_q)?,
        strength,
        basal_range: s.get_range("basal_range")?.unwrap_or(d.basal_range),
        hill_n: s.get_or("hill_n", d.hill_n)?,
    })
}

fn weight_ranges(s: &Settings, default: WeightRanges) -> CliResult<WeightRanges> {
    let lo = s.get_or("weight_low", default.positive.0)?;
    let hi = s.get_or("weight_high", default.positive.1)?;
    Ok(WeightRanges {
        negative: (-hi, -lo),
        positive: (lo, hi),
        positive_fraction: s.get_or("positive_fraction", default.positive_fraction)?,
    })
}

fn library(s: &Settings) -> CliResult<ParamLibrary> {
    match s.raw("library") {
        Some(path) => {
            open_input(path)?;
            Ok(load_library(Path::new(path))?)
        }
        None => Ok(ParamLibrary::builtin()),
    }
}

fn simulators(s: &Settings, default: &[Simulator]) -> CliResult<Vec<Simulator>> {
    Ok(s.get_list("simulators")?.unwrap_or_else(|| default.to_vec()))
}

/// Applies `alpha`, `beta` and `adjust` overrides to every node.
fn override_shape(s: &Settings, params: Vec<NodeParams>) -> CliResult<Vec<NodeParams>> {
    let (alpha, beta, adjust) = (s.get::<f64>("alpha")?, s.get::<f64>("beta")?, s.get::<f64>("adjust")?);
    params
        .into_iter()
        .map(|p| {
            Ok(NodeParams::new(
                p.mu0,
                p.theta,
                alpha.unwrap_or(p.alpha),
                beta.unwrap_or(p.beta),
                adjust.unwrap_or(p.adjust),
            )?)
        })
        .collect()
}

fn build_graph(s: &Settings, seed: u64) -> CliResult<WeightedDag> {
    if let Some(path) = s.raw("edges") {
        return Ok(read_edge_list(open_input(path)?, None)?);
    }
    let d: usize = s
        .get("d")?
        .ok_or_else(|| CliError::validation("`d` is required unless `edges` is given"))?;
    let dag = match s.raw("graph").unwrap_or("er") {
        "er" => {
            let max = d * d.saturating_sub(1) / 2;
            generate_er_dag(d, s.get_or("m", (2 * d).min(max))?, seed)?
        }
        "sf" => generate_sf_dag(d, s.get_or("m_attach", 2)?, seed)?,
        "chain" => make_chain(d),
        other => return Err(CliError::validation(format!("unknown graph kind `{other}` (er, sf or chain)"))),
    };
    Ok(sample_edge_weights(dag, weight_ranges(s, WeightRanges::default())?, seed)?)
}

fn node_params(s: &Settings, wdag: &WeightedDag, seed: u64) -> CliResult<Vec<NodeParams>> {
    let names = wdag.dag().names();
    if let Some(path) = s.raw("params") {
        return Ok(read_params(open_input(path)?, names)?);
    }
    let params = match (s.get::<f64>("mu0")?, s.get::<f64>("theta")?) {
        (Some(mu0), Some(theta)) => vec![NodeParams::with_defaults(mu0, theta)?; names.len()],
        (None, None) => library(s)?.assign(names.len(), seed)?.0,
        _ => return Err(CliError::validation("`mu0` and `theta` must be given together")),
    };
    override_shape(s, params)
}

fn interventions(s: &Settings, names: &[String]) -> CliResult<Vec<InterventionSpec>> {
    let labels: Vec<String> = s.get_list("intervene")?.unwrap_or_default();
    let mut regimes = Vec::new();
    if labels.is_empty() || s.get_bool("include_observational", false)? {
        regimes.push(InterventionSpec::observational());
    }
    for label in labels {
        let spec = InterventionSpec::parse_label(&label, names)
            .map_err(|e| CliError::validation(format!("intervention `{label}`: {e}")))?;
        regimes.push(spec);
    }
    Ok(regimes)
}

/// Graph, weights, parameters and samples for one simulator.
pub fn generate(s: &Settings) -> CliResult<PathBuf> {
    let seed = s.get_or("seed", 0u64)?;
    let n: usize = s.get_or("n", 1000)?;
    if n == 0 {
        return Err(CliError::validation("`n` must be at least 1"));
    }
    let simulator: Simulator = s.get_or("simulator", Simulator::Regnet)?;
    let wdag = build_graph(s, seed)?;
    let names = wdag.dag().names().to_vec();
    let regimes = interventions(s, &names)?;
    let params = match simulator {
        Simulator::Regnet => node_params(s, &wdag, seed)?,
        _ => Vec::new(),
    };
    let model = match (simulator, s.get::<f64>("noise_std")?) {
        (Simulator::Anm, Some(sd)) => SimModel::Anm(GaussianAnmModel::new(wdag.clone(), vec![sd; names.len()])?),
        _ => SimModel::build(
            simulator,
            wdag.clone(),
            params.clone(),
            &sergio_config(s)?,
            exp::sub_seed(seed, purpose::SERGIO_PARAMS),
        )?,
    };
    let rows_seed = exp::sub_seed(seed, purpose::ROWS);
    let blocks = regimes
        .iter()
        .enumerate()
        .map(|(idx, regime)| model.sample(n, regime, exp::sub_seed(rows_seed, idx as u64)))
        .collect::<crn_core::Result<Vec<_>>>()?;
    let data = SampleMatrix::concat(blocks)?;

    let out = output_dir(s, "generate")?;
    write_edge_list(File::create(out.join("graph.csv"))?, &wdag)?;
    if simulator == Simulator::Regnet {
        write_params(File::create(out.join("params.csv"))?, &names, &params)?;
    }
    write_samples_path(&out.join("samples.csv"), &data)?;
    info!("wrote {} rows x {} columns to {}", data.n_rows(), data.n_cols(), out.display());
    Ok(out)
}

/// Fits NB parameters to every column of a count matrix (observational rows
/// only when regimes are present).
pub fn fit(s: &Settings) -> CliResult<PathBuf> {
    let input = s
        .raw("input")
        .ok_or_else(|| CliError::validation("`input` (count matrix CSV) is required"))?;
    let matrix = read_matrix(input)?;
    let obs_rows: Vec<usize> = (0..matrix.n_rows()).filter(|&r| matrix.regime(r).is_observational()).collect();
    if obs_rows.len() < 2 {
        return Err(CliError::validation("need at least two observational rows to fit"));
    }
    let columns: Vec<Vec<f64>> = (0..matrix.n_cols())
        .map(|j| obs_rows.iter().map(|&r| matrix.get(r, j)).collect())
        .collect();
    let names = matrix.names().to_vec();
    let obs = SampleMatrix::from_columns(names.clone(), &columns)?;
    let fitted = fit_library(&obs, &names)?;
    let source = Path::new(input).file_name().map_or(input.into(), |f| f.to_string_lossy().into_owned());
    let mut lib = ParamLibrary::new(format!("fit of {source}"));
    for e in fitted.library.entries() {
        lib.insert(e.gene.clone(), e.mu0, e.theta)?;
    }

    let out = output_dir(s, "fit")?;
    save_library(&lib, &out.join("library.csv"))?;
    let mut report = TidyTable::new(&["gene"]);
    for (gene, r) in &fitted.results {
        report.push(vec![gene.clone()], "mu0", r.mu0);
        report.push(vec![gene.clone()], "theta", r.theta);
        report.push(vec![gene.clone()], "neg_log_likelihood", r.neg_log_likelihood);
        report.push(vec![gene.clone()], "iterations", r.iterations as f64);
    }
    report.write_path(&out.join("fit_report.csv"))?;
    for w in &fitted.warnings {
        eprintln!("warning: excluded {w}");
    }
    Ok(out)
}

/// Flat `metric,value` summary of a sample matrix, optionally against a
/// true graph, a predicted graph and a reference matrix.
pub fn metrics(s: &Settings) -> CliResult<PathBuf> {
    let path = s
        .raw("data")
        .ok_or_else(|| CliError::validation("`data` (sample CSV) is required"))?;
    let data = read_matrix(path)?;
    let names = data.names().to_vec();
    let mut t = TidyTable::new(&[]);
    t.push(vec![], "n_rows", data.n_rows() as f64);
    t.push(vec![], "n_cols", data.n_cols() as f64);

    let truth = match s.raw("edges") {
        Some(p) => Some(read_edge_list(open_input(p)?, Some(&names))?),
        None => None,
    };
    if let Some(truth) = &truth {
        match varsortability(truth.dag(), &data) {
            Ok(v) => t.push(vec![], "varsortability", v),
            Err(Error::UndefinedMetric(msg)) => warn!("varsortability skipped: {msg}"),
            Err(e) => return Err(e.into()),
        }
    }
    if data.n_cols() >= 2 && data.n_rows() >= 2 {
        let corr = correlation_distribution(&data, truth.as_ref().map(|w| w.dag()))?;
        let all = corr.values();
        t.push(vec![], "mean_abs_correlation", mean(&all.iter().map(|r| r.abs()).collect::<Vec<_>>()));
        t.push(vec![], "constant_columns", corr.constant_columns.len() as f64);
        if truth.is_some() {
            for (label, linked) in [("mean_correlation_linked", true), ("mean_correlation_unlinked", false)] {
                let vals = corr.linked(linked);
                if !vals.is_empty() {
                    t.push(vec![], label, mean(&vals));
                }
            }
        }
    }
    if let Some(p) = s.raw("predicted") {
        let truth = truth
            .as_ref()
            .ok_or_else(|| CliError::validation("`predicted` needs the true graph in `edges`"))?;
        let predicted = read_edge_list(open_input(p)?, Some(&names))?;
        let reversal = match s.get_or("reversal_cost", 1u32)? {
            1 => ReversalCost::One,
            2 => ReversalCost::Two,
            other => return Err(CliError::validation(format!("`reversal_cost` must be 1 or 2, got {other}"))),
        };
        let m = truth.dag().edge_count().max(1);
        let score = structure_score(truth.dag(), &predicted.dag().adjacency(), m, names.len(), reversal)?;
        for (label, v) in [
            ("shd", score.shd as f64),
            ("shd_normalized", score.shd_normalized),
            ("fdr", score.fdr),
            ("for", score.for_rate),
            ("tp", score.tp as f64),
            ("fp", score.fp as f64),
            ("fn", score.fn_ as f64),
            ("tn", score.tn as f64),
        ] {
            t.push(vec![], label, v);
        }
    }
    if let Some(p) = s.raw("reference") {
        let reference = read_matrix(p)?;
        let mut distances = Vec::new();
        for (j, name) in names.iter().enumerate() {
            match reference.column_by_name(name) {
                Some(col) => {
                    let w = wasserstein1(&data.column(j), &col)?;
                    t.push(vec![], &format!("w1:{name}"), w);
                    distances.push(w);
                }
                None => warn!("column `{name}` is not in the reference"),
            }
        }
        if !distances.is_empty() {
            t.push(vec![], "median_w1", median(&distances)?);
        }
    }
    let out = output_dir(s, "metrics")?;
    t.write_path(&out.join("metrics.csv"))?;
    Ok(out)
}

fn intervention_config(s: &Settings) -> CliResult<exp::InterventionStudyConfig> {
    let d = exp::InterventionStudyConfig::default();
    let node = NodeParams::new(
        s.get_or("mu0", d.node.mu0)?,
        s.get_or("theta", d.node.theta)?,
        s.get_or("alpha", d.node.alpha)?,
        s.get_or("beta", d.node.beta)?,
        s.get_or("adjust", d.node.adjust)?,
    )?;
    Ok(exp::InterventionStudyConfig {
        ks: s.get_list("ks")?.unwrap_or(d.ks),
        reps: s.get_or("reps", d.reps)?,
        seed: s.get_or("seed", d.seed)?,
        n: s.get_or("n", d.n)?,
        simulators: simulators(s, &d.simulators)?,
        node,
        weights: weight_ranges(s, d.weights)?,
        sergio: sergio_config(s)?,
    })
}

fn run_interventions(kind: ExperimentKind, s: &Settings, out: &Path) -> CliResult<()> {
    let cfg = intervention_config(s)?;
    let records = match kind {
        ExperimentKind::Parents => exp::run_parents_study(&cfg)?,
        _ => exp::run_mediators_study(&cfg)?,
    };
    let summaries = exp::summarize_ates(&records)?;
    let trends = cfg
        .simulators
        .iter()
        .filter_map(|&sim| exp::ate_trend(&records, sim).ok().map(|t| (sim, t)))
        .collect::<Vec<_>>();
    exp::AteRecord::table(&records).write_path(&out.join(format!("{}.csv", kind.name())))?;
    exp::AteSummary::table(&summaries, &trends).write_path(&out.join(format!("{}_summary.csv", kind.name())))?;
    Ok(())
}

fn run_scalability(s: &Settings, out: &Path) -> CliResult<()> {
    let d = exp::ScalabilityConfig::default();
    let timeout = match s.get::<f64>("timeout_secs")? {
        Some(t) if t > 0.0 => Some(Duration::from_secs_f64(t)),
        Some(_) => None,
        None => d.timeout,
    };
    let cfg = exp::ScalabilityConfig {
        sizes: s.get_list("sizes")?.unwrap_or(d.sizes),
        edge_factor: s.get_or("edge_factor", d.edge_factor)?,
        n: s.get_or("n", d.n)?,
        seed: s.get_or("seed", d.seed)?,
        simulators: simulators(s, &d.simulators)?,
        sergio_max_d: s.get_or("sergio_max_d", d.sergio_max_d)?,
        timeout,
        threads: s.get_or("timing_threads", d.threads)?,
        library: library(s)?,
        sergio: sergio_config(s)?,
    };
    let records = exp::run_scalability(&cfg)?;
    let mut table = exp::TimingRecord::table(&records);
    for &sim in &cfg.simulators {
        if let Some(slope) = exp::loglog_slope(&records, sim, 100) {
            table.push(vec![sim.to_string(), "all".into(), "all".into()], "loglog_slope_seconds_vs_edges", slope);
        }
    }
    table.write_path(&out.join("scalability.csv"))?;
    Ok(())
}

fn run_varsort(s: &Settings, out: &Path) -> CliResult<()> {
    let d = exp::VarsortConfig::default();
    let cfg = exp::VarsortConfig {
        chain_sizes: s.get_list("chain_sizes")?.unwrap_or(d.chain_sizes),
        graph_sizes: s.get_list("graph_sizes")?.unwrap_or(d.graph_sizes),
        edge_factor: s.get_or("edge_factor", d.edge_factor)?,
        reps: s.get_or("reps", d.reps)?,
        n: s.get_or("n", d.n)?,
        seed: s.get_or("seed", d.seed)?,
        simulators: simulators(s, &d.simulators)?,
        library: library(s)?,
        weights: weight_ranges(s, d.weights)?,
        sergio: sergio_config(s)?,
    };
    let records = exp::run_varsortability_study(&cfg)?;
    exp::VarsortRecord::table(&records).write_path(&out.join("varsort.csv"))?;
    exp::VarsortSummary::table(&exp::summarize_varsortability(&records)?).write_path(&out.join("varsort_summary.csv"))?;
    Ok(())
}

fn run_fidelity(s: &Settings, out: &Path) -> CliResult<()> {
    let d = exp::FidelityConfig::default();
    let library = library(s)?;
    let reference = match s.raw("reference") {
        Some(p) => {
            let m = read_matrix(p)?;
            if exp::genes_present(&library, m.names()) == 0 {
                return Err(CliError::validation("no library gene appears in the reference matrix"));
            }
            Some(m)
        }
        None => None,
    };
    let cfg = exp::FidelityConfig {
        d: s.get_or("d", d.d)?,
        edge_factor: s.get_or("edge_factor", d.edge_factor)?,
        n: s.get_or("n", d.n)?,
        reps: s.get_or("reps", d.reps)?,
        seed: s.get_or("seed", d.seed)?,
        library,
        reference,
        n_reference: s.get_or("n_reference", d.n_reference)?,
        alphas: s.get_list("alphas")?.unwrap_or(d.alphas),
        effect_threshold: s.get_or("effect_threshold", d.effect_threshold)?,
        weights: weight_ranges(s, d.weights)?,
    };
    let result = exp::run_fidelity_study(&cfg)?;
    result.distance_table().write_path(&out.join("fidelity_w1.csv"))?;
    result.effect_table().write_path(&out.join("fidelity_effects.csv"))?;
    result.summary_table().write_path(&out.join("fidelity_summary.csv"))?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

pub fn experiment(kind: ExperimentKind, s: &Settings) -> CliResult<PathBuf> {
    // validate before creating the output directory
    match kind {
        ExperimentKind::Parents | ExperimentKind::Mediators => {
            intervention_config(s)?;
        }
        _ => {
            sergio_config(s)?;
        }
    }
    let out = output_dir(s, kind.name())?;
    match kind {
        ExperimentKind::Parents | ExperimentKind::Mediators => run_interventions(kind, s, &out)?,
        ExperimentKind::Scalability => run_scalability(s, &out)?,
        ExperimentKind::Varsort => run_varsort(s, &out)?,
        ExperimentKind::Fidelity => run_fidelity(s, &out)?,
    }
    Ok(out)
}
