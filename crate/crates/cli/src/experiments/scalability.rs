//! Wall-clock cost of simulating `n` rows from ER graphs of growing size.

use std::time::{Duration, Instant};

use crn_core::baselines::{GaussianAnmModel, SergioConfig, SergioModel};
use crn_core::fit::ParamLibrary;
use crn_core::graph::{generate_er_dag, sample_edge_weights, WeightRanges};
use crn_core::rng::purpose;
use crn_core::{Error, InterventionSpec, RegNetModel, Result, WeightedDag};

use super::{rep_seed, sub_seed, Simulator};
use crate::table::TidyTable;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalabilityConfig {
    pub sizes: Vec<usize>,
    /// Target edge count is `edge_factor * d`, capped by the complete DAG.
    pub edge_factor: usize,
    pub n: usize,
    pub seed: u64,
    pub simulators: Vec<Simulator>,
    /// Larger graphs are skipped for the CLE baseline.
    pub sergio_max_d: usize,
    /// Per-cell budget; only the CLE baseline can be interrupted.
    pub timeout: Option<Duration>,
    /// Worker threads used inside each timed cell.
    pub threads: usize,
    pub library: ParamLibrary,
    pub sergio: SergioConfig,
}

impl Default for ScalabilityConfig {
    fn default() -> Self {
        Self {
            sizes: vec![3, 10, 100, 1000, 10_000],
            edge_factor: 2,
            n: 1000,
            seed: 0,
            simulators: vec![Simulator::Regnet, Simulator::Anm, Simulator::Sergio],
            sergio_max_d: 100,
            timeout: Some(Duration::from_secs(3600)),
            threads: 1,
            library: ParamLibrary::builtin(),
            sergio: SergioConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellStatus {
    Completed,
    TimedOut,
    Skipped,
}

impl CellStatus {
    fn code(self) -> f64 {
        match self {
            CellStatus::Completed => 0.0,
            CellStatus::TimedOut => 1.0,
            CellStatus::Skipped => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingRecord {
    pub d: usize,
    pub m: usize,
    pub simulator: Simulator,
    /// Elapsed time; for a timed-out cell, the time until it gave up.
    pub seconds: Option<f64>,
    pub samples: usize,
    pub status: CellStatus,
}

impl TimingRecord {
    pub fn table(records: &[TimingRecord]) -> TidyTable {
        let mut t = TidyTable::new(&["simulator", "d", "m"]);
        for r in records {
            let ids = vec![r.simulator.to_string(), r.d.to_string(), r.m.to_string()];
            t.push(ids.clone(), "seconds", r.seconds.unwrap_or(f64::NAN));
            t.push(ids.clone(), "samples", r.samples as f64);
            // 0 = completed, 1 = timed out (censored), 2 = skipped
            t.push(ids, "status", r.status.code());
        }
        t
    }
}

fn shared_graph(d: usize, cfg: &ScalabilityConfig) -> Result<WeightedDag> {
    let seed = rep_seed(cfg.seed, d);
    let max_edges = d * d.saturating_sub(1) / 2;
    let m = (cfg.edge_factor * d).min(max_edges);
    let dag = generate_er_dag(d, m, seed)?;
    sample_edge_weights(dag, WeightRanges::default(), seed)
}

fn time_cell(simulator: Simulator, wdag: &WeightedDag, cfg: &ScalabilityConfig) -> Result<TimingRecord> {
    let (d, m) = (wdag.d(), wdag.dag().edge_count());
    let seed = rep_seed(cfg.seed, d);
    let record = |seconds, status| TimingRecord {
        d,
        m,
        simulator,
        seconds,
        samples: cfg.n,
        status,
    };
    if simulator == Simulator::Sergio && d > cfg.sergio_max_d {
        return Ok(record(None, CellStatus::Skipped));
    }
    let obs = InterventionSpec::observational();
    let rows_seed = sub_seed(seed, purpose::ROWS);
    let start = Instant::now();
    let completed = match simulator {
        Simulator::Regnet => {
            let (params, _) = cfg.library.assign(d, seed)?;
            RegNetModel::new(wdag.clone(), params)?.sample(cfg.n, &obs, rows_seed)?;
            true
        }
        Simulator::Anm => {
            GaussianAnmModel::unit_noise(wdag.clone()).sample(cfg.n, &obs, rows_seed)?;
            true
        }
        Simulator::Sergio => {
            let model = SergioModel::from_weighted_dag(wdag, &cfg.sergio, sub_seed(seed, purpose::SERGIO_PARAMS))?;
            let deadline = cfg.timeout.map(|t| start + t);
            model.sample_with_deadline(cfg.n, &obs, rows_seed, deadline)?.is_some()
        }
    };
    let seconds = start.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);
    let status = if completed { CellStatus::Completed } else { CellStatus::TimedOut };
    Ok(record(Some(seconds), status))
}

/// Times every (size, simulator) cell sequentially on one graph per size, so
/// cells do not compete for cores.
pub fn run_scalability(cfg: &ScalabilityConfig) -> Result<Vec<TimingRecord>> {
    if cfg.n == 0 || cfg.threads == 0 || cfg.sizes.contains(&0) {
        return Err(Error::InvalidArgument("sizes, n and threads must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))?;
    let mut out = Vec::new();
    for &d in &cfg.sizes {
        let wdag = shared_graph(d, cfg)?;
        for &sim in &cfg.simulators {
            out.push(pool.install(|| time_cell(sim, &wdag, cfg))?);
        }
    }
    Ok(out)
}

/// Least-squares slope of `ln seconds` against `ln m` over completed cells
/// of one simulator with at least `min_edges` edges.
pub fn loglog_slope(records: &[TimingRecord], simulator: Simulator, min_edges: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.simulator == simulator && r.status == CellStatus::Completed && r.m >= min_edges.max(1))
        .filter_map(|r| r.seconds.map(|s| ((r.m as f64).ln(), s.ln())))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grid_runs_and_skips() {
        let cfg = ScalabilityConfig {
            sizes: vec![3, 20],
            n: 50,
            sergio_max_d: 10,
            sergio: SergioConfig {
                burn_in: 50,
                ..SergioConfig::default()
            },
            ..ScalabilityConfig::default()
        };
        let recs = run_scalability(&cfg).unwrap();
        assert_eq!(recs.len(), 6);
        assert_eq!(recs[0].m, 3);
        assert_eq!(recs[3].m, 40);
        let sergio_big = recs.iter().find(|r| r.simulator == Simulator::Sergio && r.d == 20).unwrap();
        assert_eq!(sergio_big.status, CellStatus::Skipped);
        assert!(recs
            .iter()
            .filter(|r| r.status == CellStatus::Completed)
            .all(|r| r.seconds.unwrap() > 0.0));
    }

    #[test]
    fn expired_deadline_is_censored() {
        let cfg = ScalabilityConfig {
            sizes: vec![10],
            simulators: vec![Simulator::Sergio],
            timeout: Some(Duration::ZERO),
            ..ScalabilityConfig::default()
        };
        let recs = run_scalability(&cfg).unwrap();
        assert_eq!(recs[0].status, CellStatus::TimedOut);
    }

    #[test]
    fn slope_of_exact_power_law() {
        let rec = |m: usize, s: f64| TimingRecord {
            d: m,
            m,
            simulator: Simulator::Regnet,
            seconds: Some(s),
            samples: 1,
            status: CellStatus::Completed,
        };
        let recs = vec![rec(10, 0.1), rec(100, 1.0), rec(1000, 10.0)];
        assert!((loglog_slope(&recs, Simulator::Regnet, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!(loglog_slope(&recs, Simulator::Anm, 1).is_none());
    }
}
