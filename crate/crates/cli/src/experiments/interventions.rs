//! How the effect of `do(X0 = 0)` on `X1` changes as `X1` gains extra parents
//! or as mediators are inserted between the two.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crn_core::baselines::SergioConfig;
use crn_core::graph::{make_chain, sample_edge_weights, WeightRanges};
use crn_core::metrics::{mean, mean_ci95, spearman, RankCorrelation};
use crn_core::rng::purpose;
use crn_core::{Dag, InterventionSpec, NodeParams, Result, WeightedDag};

use super::{rep_seed, sub_seed, SimModel, Simulator};
use crate::table::TidyTable;

#[derive(Debug, Clone, PartialEq)]
pub struct InterventionStudyConfig {
    pub ks: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    /// Rows per regime.
    pub n: usize,
    pub simulators: Vec<Simulator>,
    /// Shared by every CausalRegNet node.
    pub node: NodeParams,
    pub weights: WeightRanges,
    pub sergio: SergioConfig,
}

impl Default for InterventionStudyConfig {
    fn default() -> Self {
        Self {
            ks: (0..=9).collect(),
            reps: 10,
            seed: 0,
            n: 1000,
            simulators: vec![Simulator::Regnet, Simulator::Sergio],
            node: NodeParams::new(10.0, 10.0, 2.0, 0.1, 0.0).expect("valid defaults"),
            weights: WeightRanges::activating(),
            sergio: SergioConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AteRecord {
    pub simulator: Simulator,
    pub k: usize,
    pub rep: usize,
    /// `E[X1] - E[X1 | do(X0 = 0)]`.
    pub ate: f64,
    /// Observational mean of `X1`.
    pub obs_mean: f64,
}

impl AteRecord {
    pub fn table(records: &[AteRecord]) -> TidyTable {
        let mut t = TidyTable::new(&["simulator", "k", "rep"]);
        for r in records {
            let ids = vec![r.simulator.to_string(), r.k.to_string(), r.rep.to_string()];
            t.push(ids.clone(), "ate", r.ate);
            t.push(ids.clone(), "abs_ate", r.ate.abs());
            t.push(ids, "obs_mean_x1", r.obs_mean);
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Layout {
    Parents,
    Mediators,
}

impl Layout {
    /// Node names, the weighted graph, and the index of `X1`.
    fn build(self, k: usize, weights: &[f64]) -> Result<(WeightedDag, usize)> {
        let (names, edges, target): (Vec<String>, Vec<(usize, usize)>, usize) = match self {
            Layout::Parents => {
                let mut names = vec!["X0".to_string(), "X1".to_string()];
                names.extend((1..=k).map(|i| format!("c{i}")));
                let edges = (0..=k).map(|i| (if i == 0 { 0 } else { i + 1 }, 1)).collect();
                (names, edges, 1)
            }
            Layout::Mediators => {
                let mut names = vec!["X0".to_string()];
                names.extend((1..=k).map(|i| format!("c{i}")));
                names.push("X1".to_string());
                let edges = (0..=k).map(|i| (i, i + 1)).collect();
                (names, edges, k + 1)
            }
        };
        let w: BTreeMap<(usize, usize), f64> = edges.iter().zip(weights).map(|(&e, &w)| (e, w)).collect();
        Ok((WeightedDag::new(Dag::with_names(names, edges)?, w)?, target))
    }
}

fn run(layout: Layout, cfg: &InterventionStudyConfig) -> Result<Vec<AteRecord>> {
    if cfg.n < 2 || cfg.reps == 0 || cfg.ks.is_empty() {
        return Err(crn_core::Error::InvalidArgument("need n >= 2, reps >= 1 and at least one k".into()));
    }
    cfg.node.validate()?;
    let max_k = cfg.ks.iter().copied().max().unwrap_or(0);
    let rep_weights: Vec<Vec<f64>> = (0..cfg.reps)
        .map(|rep| {
            let chain = make_chain(max_k + 2);
            let w = sample_edge_weights(chain, cfg.weights, rep_seed(cfg.seed, rep))?;
            Ok(w.weights().values().copied().collect())
        })
        .collect::<Result<_>>()?;
    let cells: Vec<(Simulator, usize, usize)> = cfg
        .simulators
        .iter()
        .flat_map(|&s| cfg.ks.iter().flat_map(move |&k| (0..cfg.reps).map(move |r| (s, k, r))))
        .collect();
    cells
        .into_par_iter()
        .map(|(simulator, k, rep)| {
            let seed = rep_seed(cfg.seed, rep);
            let (wdag, target) = layout.build(k, &rep_weights[rep])?;
            let params = vec![cfg.node; wdag.d()];
            let model = SimModel::build(simulator, wdag, params, &cfg.sergio, sub_seed(seed, purpose::SERGIO_PARAMS))?;
            let obs = model.sample(cfg.n, &InterventionSpec::observational(), sub_seed(seed, purpose::OBSERVATIONAL))?;
            let ko = model.sample(cfg.n, &InterventionSpec::single(0, 0.0), sub_seed(seed, purpose::INTERVENTIONAL))?;
            let obs_mean = obs.column_mean(target);
            Ok(AteRecord {
                simulator,
                k,
                rep,
                ate: obs_mean - ko.column_mean(target),
                obs_mean,
            })
        })
        .collect()
}

/// `X0 -> X1` plus `k` extra parents `c1..ck -> X1`.
pub fn run_parents_study(cfg: &InterventionStudyConfig) -> Result<Vec<AteRecord>> {
    run(Layout::Parents, cfg)
}

/// Chain `X0 -> c1 -> ... -> ck -> X1`.
pub fn run_mediators_study(cfg: &InterventionStudyConfig) -> Result<Vec<AteRecord>> {
    run(Layout::Mediators, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AteSummary {
    pub simulator: Simulator,
    pub k: usize,
    pub mean_abs_ate: f64,
    pub ci95_abs_ate: f64,
    pub mean_obs: f64,
}

pub fn summarize_ates(records: &[AteRecord]) -> Result<Vec<AteSummary>> {
    let mut groups: BTreeMap<(Simulator, usize), Vec<&AteRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.simulator, r.k)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((simulator, k), rs)| {
            let abs: Vec<f64> = rs.iter().map(|r| r.ate.abs()).collect();
            let ci = mean_ci95(&abs)?;
            Ok(AteSummary {
                simulator,
                k,
                mean_abs_ate: ci.mean,
                ci95_abs_ate: ci.half_width,
                mean_obs: mean(&rs.iter().map(|r| r.obs_mean).collect::<Vec<_>>()),
            })
        })
        .collect()
}

impl AteSummary {
    pub fn table(summaries: &[AteSummary], trends: &[(Simulator, RankCorrelation)]) -> TidyTable {
        let mut t = TidyTable::new(&["simulator", "k"]);
        for s in summaries {
            let ids = vec![s.simulator.to_string(), s.k.to_string()];
            t.push(ids.clone(), "mean_abs_ate", s.mean_abs_ate);
            t.push(ids.clone(), "ci95_abs_ate", s.ci95_abs_ate);
            t.push(ids, "mean_obs_x1", s.mean_obs);
        }
        for (sim, trend) in trends {
            t.push(vec![sim.to_string(), "all".into()], "spearman_rho_abs_ate", trend.rho);
            t.push(vec![sim.to_string(), "all".into()], "spearman_p_value", trend.p_value);
        }
        t
    }
}

/// Spearman correlation between `k` and `|ATE|`, pooled over repetitions.
pub fn ate_trend(records: &[AteRecord], simulator: Simulator) -> Result<RankCorrelation> {
    let (ks, ates): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter(|r| r.simulator == simulator)
        .map(|r| (r.k as f64, r.ate.abs()))
        .unzip();
    spearman(&ks, &ates)
}
