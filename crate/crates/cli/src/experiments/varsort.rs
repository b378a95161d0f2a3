//! Varsortability of data from chains and ER graphs across simulators.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;

use crn_core::baselines::SergioConfig;
use crn_core::fit::ParamLibrary;
use crn_core::graph::{generate_er_dag, make_chain, sample_edge_weights, WeightRanges};
use crn_core::metrics::{mean_ci95, varsortability};
use crn_core::rng::purpose;
use crn_core::{Error, InterventionSpec, Result};

use super::{rep_seed, sub_seed, SimModel, Simulator};
use crate::table::TidyTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Structure {
    Chain,
    Graph,
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Structure::Chain => "chain",
            Structure::Graph => "graph",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarsortConfig {
    pub chain_sizes: Vec<usize>,
    pub graph_sizes: Vec<usize>,
    /// ER graphs get `edge_factor * d` edges.
    pub edge_factor: usize,
    pub reps: usize,
    pub n: usize,
    pub seed: u64,
    pub simulators: Vec<Simulator>,
    pub library: ParamLibrary,
    pub weights: WeightRanges,
    pub sergio: SergioConfig,
}

impl Default for VarsortConfig {
    fn default() -> Self {
        Self {
            chain_sizes: vec![3, 5, 10, 15, 20, 25, 30],
            graph_sizes: vec![10, 20, 30, 40, 50],
            edge_factor: 2,
            reps: 10,
            n: 1000,
            seed: 0,
            simulators: vec![Simulator::Anm, Simulator::Regnet, Simulator::Sergio],
            library: ParamLibrary::builtin(),
            weights: WeightRanges::default(),
            sergio: SergioConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarsortRecord {
    pub structure: Structure,
    pub d: usize,
    pub simulator: Simulator,
    pub rep: usize,
    pub v: f64,
}

impl VarsortRecord {
    pub fn table(records: &[VarsortRecord]) -> TidyTable {
        let mut t = TidyTable::new(&["structure", "d", "simulator", "rep"]);
        for r in records {
            let ids = vec![r.structure.to_string(), r.d.to_string(), r.simulator.to_string(), r.rep.to_string()];
            t.push(ids, "varsortability", r.v);
        }
        t
    }
}

/// One graph and weight draw per (structure, d, rep), shared by all
/// simulators; CausalRegNet nodes get randomly chosen library genes.
pub fn run_varsortability_study(cfg: &VarsortConfig) -> Result<Vec<VarsortRecord>> {
    if cfg.reps == 0 || cfg.n < 2 {
        return Err(Error::InvalidArgument("need reps >= 1 and n >= 2".into()));
    }
    if cfg.chain_sizes.iter().chain(&cfg.graph_sizes).any(|&d| d < 2) {
        return Err(Error::InvalidArgument("varsortability needs at least two nodes".into()));
    }
    let shapes: Vec<(Structure, usize)> = cfg
        .chain_sizes
        .iter()
        .map(|&d| (Structure::Chain, d))
        .chain(cfg.graph_sizes.iter().map(|&d| (Structure::Graph, d)))
        .collect();
    let cells: Vec<(Structure, usize, Simulator, usize)> = shapes
        .iter()
        .flat_map(|&(s, d)| cfg.simulators.iter().flat_map(move |&sim| (0..cfg.reps).map(move |r| (s, d, sim, r))))
        .collect();
    cells
        .into_par_iter()
        .map(|(structure, d, simulator, rep)| {
            let tag = match structure {
                Structure::Chain => 0,
                Structure::Graph => 1,
            };
            let seed = rep_seed(sub_seed(cfg.seed, tag * 100_000 + d as u64), rep);
            let dag = match structure {
                Structure::Chain => make_chain(d),
                Structure::Graph => generate_er_dag(d, (cfg.edge_factor * d).min(d * (d - 1) / 2), seed)?,
            };
            let wdag = sample_edge_weights(dag.clone(), cfg.weights, seed)?;
            let (params, _) = cfg.library.assign(d, seed)?;
            let model = SimModel::build(simulator, wdag, params, &cfg.sergio, sub_seed(seed, purpose::SERGIO_PARAMS))?;
            let data = model.sample(cfg.n, &InterventionSpec::observational(), sub_seed(seed, purpose::ROWS))?;
            Ok(VarsortRecord {
                structure,
                d,
                simulator,
                rep,
                v: varsortability(&dag, &data)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarsortSummary {
    pub structure: Structure,
    pub d: usize,
    pub simulator: Simulator,
    pub mean: f64,
    pub ci95: f64,
    pub reps: usize,
}

pub fn summarize_varsortability(records: &[VarsortRecord]) -> Result<Vec<VarsortSummary>> {
    let mut groups: BTreeMap<(Structure, usize, Simulator), Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry((r.structure, r.d, r.simulator)).or_default().push(r.v);
    }
    groups
        .into_iter()
        .map(|((structure, d, simulator), vs)| {
            let ci = mean_ci95(&vs)?;
            Ok(VarsortSummary {
                structure,
                d,
                simulator,
                mean: ci.mean,
                ci95: ci.half_width,
                reps: vs.len(),
            })
        })
        .collect()
}

impl VarsortSummary {
    pub fn table(summaries: &[VarsortSummary]) -> TidyTable {
        let mut t = TidyTable::new(&["structure", "d", "simulator"]);
        for s in summaries {
            let ids = vec![s.structure.to_string(), s.d.to_string(), s.simulator.to_string()];
            t.push(ids.clone(), "mean_varsortability", s.mean);
            t.push(ids.clone(), "ci95", s.ci95);
            t.push(ids, "reps", s.reps as f64);
        }
        t
    }
}
