//! Agreement between simulated genes and a reference count matrix, and the
//! spread of knockout effects for different maximal effect sizes `alpha`.

use std::collections::HashSet;

use log::warn;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crn_core::fit::ParamLibrary;
use crn_core::graph::{generate_er_dag, sample_edge_weights, WeightRanges};
use crn_core::metrics::{median, wasserstein1};
use crn_core::regnet::nb_sample;
use crn_core::rng::{self, purpose};
use crn_core::{Error, InterventionSpec, NodeParams, RegNetModel, Result, SampleMatrix};

use super::{rep_seed, sub_seed};
use crate::table::TidyTable;

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityConfig {
    pub d: usize,
    pub edge_factor: usize,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub library: ParamLibrary,
    /// Columns named by library genes. When absent, a reference is drawn
    /// from the library's own NB marginals.
    pub reference: Option<SampleMatrix>,
    /// Rows of the self-drawn reference.
    pub n_reference: usize,
    pub alphas: Vec<f64>,
    /// A knockout effect counts as near zero when the relative change of
    /// the target mean is below this.
    pub effect_threshold: f64,
    pub weights: WeightRanges,
}

impl Default for FidelityConfig {
    fn default() -> Self {
        Self {
            d: 100,
            edge_factor: 2,
            n: 1000,
            reps: 20,
            seed: 0,
            library: ParamLibrary::builtin(),
            reference: None,
            n_reference: 1000,
            alphas: vec![2.0, 5.0],
            effect_threshold: 0.05,
            weights: WeightRanges::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneDistance {
    pub rep: usize,
    pub node: usize,
    pub gene: String,
    /// W1 to the node's own gene.
    pub matched: f64,
    /// W1 to the gene of a randomly relabelled node.
    pub shuffled: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectRecord {
    pub rep: usize,
    pub alpha: f64,
    pub source: usize,
    pub target: usize,
    /// `(E[target | do(source = 0)] - E[target]) / E[target]`.
    pub effect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityRunSummary {
    pub rep: usize,
    pub median_matched: f64,
    pub median_shuffled: f64,
    /// `(alpha, near-zero effects, all effects)`.
    pub near_zero: Vec<(f64, usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityResult {
    pub distances: Vec<GeneDistance>,
    pub effects: Vec<EffectRecord>,
    pub runs: Vec<FidelityRunSummary>,
    pub warnings: Vec<String>,
}

impl FidelityResult {
    pub fn distance_table(&self) -> TidyTable {
        let mut t = TidyTable::new(&["rep", "node", "gene"]);
        for g in &self.distances {
            let ids = vec![g.rep.to_string(), g.node.to_string(), g.gene.clone()];
            t.push(ids.clone(), "w1_matched", g.matched);
            t.push(ids, "w1_shuffled", g.shuffled);
        }
        t
    }

    pub fn effect_table(&self) -> TidyTable {
        let mut t = TidyTable::new(&["rep", "alpha", "source", "target"]);
        for e in &self.effects {
            let ids = vec![e.rep.to_string(), e.alpha.to_string(), e.source.to_string(), e.target.to_string()];
            t.push(ids, "relative_effect", e.effect);
        }
        t
    }

    pub fn summary_table(&self) -> TidyTable {
        let mut t = TidyTable::new(&["rep", "alpha"]);
        for r in &self.runs {
            t.push(vec![r.rep.to_string(), "-".into()], "median_w1_matched", r.median_matched);
            t.push(vec![r.rep.to_string(), "-".into()], "median_w1_shuffled", r.median_shuffled);
            for &(alpha, zeros, total) in &r.near_zero {
                t.push(vec![r.rep.to_string(), alpha.to_string()], "near_zero_effects", zeros as f64);
                t.push(vec![r.rep.to_string(), alpha.to_string()], "effects", total as f64);
            }
        }
        t
    }
}

/// Reference column per library gene index, with warnings for missing genes.
fn reference_columns(cfg: &FidelityConfig) -> (Vec<Option<Vec<f64>>>, Vec<String>) {
    let mut warnings = Vec::new();
    let cols = cfg
        .library
        .entries()
        .iter()
        .enumerate()
        .map(|(g, entry)| match &cfg.reference {
            Some(reference) => {
                let col = reference.column_by_name(&entry.gene);
                if col.is_none() {
                    warnings.push(format!("gene `{}` is not in the reference matrix", entry.gene));
                }
                col
            }
            None => {
                let mut rng = rng::stream(cfg.seed, purpose::REFERENCE, g as u64);
                Some((0..cfg.n_reference).map(|_| nb_sample(entry.mu0, entry.theta, &mut rng) as f64).collect())
            }
        })
        .collect();
    for w in &warnings {
        warn!("{w}");
    }
    (cols, warnings)
}

fn relative_change(obs: f64, int: f64) -> f64 {
    if obs > 0.0 {
        (int - obs) / obs
    } else if int == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

struct RepOutput {
    distances: Vec<GeneDistance>,
    effects: Vec<EffectRecord>,
    summary: FidelityRunSummary,
}

fn run_rep(rep: usize, cfg: &FidelityConfig, reference: &[Option<Vec<f64>>]) -> Result<RepOutput> {
    let seed = rep_seed(cfg.seed, rep);
    let d = cfg.d;
    let dag = generate_er_dag(d, (cfg.edge_factor * d).min(d * (d - 1) / 2), seed)?;
    let wdag = sample_edge_weights(dag, cfg.weights, seed)?;
    let (params, picks) = cfg.library.assign(d, seed)?;

    let model = RegNetModel::new(wdag.clone(), params.clone())?;
    let sim = model.sample(cfg.n, &InterventionSpec::observational(), sub_seed(seed, purpose::ROWS))?;
    let mut perm: Vec<usize> = (0..d).collect();
    perm.shuffle(&mut rng::stream(seed, purpose::SHUFFLE, 0));
    let mut distances = Vec::new();
    for j in 0..d {
        let (Some(own), Some(other)) = (&reference[picks[j]], &reference[picks[perm[j]]]) else {
            continue;
        };
        let col = sim.column(j);
        distances.push(GeneDistance {
            rep,
            node: j,
            gene: cfg.library.entries()[picks[j]].gene.clone(),
            matched: wasserstein1(&col, own)?,
            shuffled: wasserstein1(&col, other)?,
        });
    }
    if distances.is_empty() {
        return Err(Error::InvalidArgument("no simulated gene has a reference column".into()));
    }

    let sources: Vec<(usize, Vec<usize>)> = (0..d)
        .map(|i| {
            let desc = wdag.dag().descendants(i);
            (i, (0..d).filter(|&j| j != i && desc[j]).collect::<Vec<_>>())
        })
        .filter(|(_, targets)| !targets.is_empty())
        .collect();
    let mut effects = Vec::new();
    let mut near_zero = Vec::new();
    for &alpha in &cfg.alphas {
        let scaled: Vec<NodeParams> = params
            .iter()
            .map(|p| NodeParams::new(p.mu0, p.theta, alpha, p.beta, p.adjust))
            .collect::<Result<_>>()?;
        let model = RegNetModel::new(wdag.clone(), scaled)?;
        let obs = model.sample(cfg.n, &InterventionSpec::observational(), sub_seed(seed, purpose::OBSERVATIONAL))?;
        let obs_means: Vec<f64> = (0..d).map(|j| obs.column_mean(j)).collect();
        let before = effects.len();
        for (source, targets) in &sources {
            let int_seed = sub_seed(sub_seed(seed, purpose::INTERVENTIONAL), *source as u64);
            let ko = model.sample(cfg.n, &InterventionSpec::single(*source, 0.0), int_seed)?;
            for &target in targets {
                effects.push(EffectRecord {
                    rep,
                    alpha,
                    source: *source,
                    target,
                    effect: relative_change(obs_means[target], ko.column_mean(target)),
                });
            }
        }
        let these = &effects[before..];
        let zeros = these.iter().filter(|e| e.effect.abs() < cfg.effect_threshold).count();
        near_zero.push((alpha, zeros, these.len()));
    }

    let matched: Vec<f64> = distances.iter().map(|g| g.matched).collect();
    let shuffled: Vec<f64> = distances.iter().map(|g| g.shuffled).collect();
    let summary = FidelityRunSummary {
        rep,
        median_matched: median(&matched)?,
        median_shuffled: median(&shuffled)?,
        near_zero,
    };
    Ok(RepOutput {
        distances,
        effects,
        summary,
    })
}

pub fn run_fidelity_study(cfg: &FidelityConfig) -> Result<FidelityResult> {
    if cfg.d < 2 || cfg.n < 1 || cfg.reps == 0 || cfg.n_reference < 1 {
        return Err(Error::InvalidArgument("need d >= 2, n >= 1, reps >= 1 and n_reference >= 1".into()));
    }
    if cfg.effect_threshold < 0.0 || cfg.alphas.iter().any(|&a| a.is_nan() || a <= 1.0) {
        return Err(Error::InvalidArgument("alphas must exceed 1 and effect_threshold must be >= 0".into()));
    }
    let (reference, warnings) = reference_columns(cfg);
    let outputs: Vec<RepOutput> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| run_rep(rep, cfg, &reference))
        .collect::<Result<_>>()?;
    let mut result = FidelityResult {
        distances: Vec::new(),
        effects: Vec::new(),
        runs: Vec::new(),
        warnings,
    };
    for o in outputs {
        result.distances.extend(o.distances);
        result.effects.extend(o.effects);
        result.runs.push(o.summary);
    }
    Ok(result)
}

/// Library genes whose names appear among `names`.
pub fn genes_present(library: &ParamLibrary, names: &[String]) -> usize {
    let lookup: HashSet<&str> = names.iter().map(String::as_str).collect();
    library.entries().iter().filter(|e| lookup.contains(e.gene.as_str())).count()
}
