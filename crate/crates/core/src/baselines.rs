//! Reference simulators: linear Gaussian ANM and a chemical-Langevin (SERGIO
//! style) simulator with Hill-function regulation.

use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::data::SampleMatrix;
use crate::error::{Error, Result};
use crate::graph::{Dag, InterventionSpec, WeightedDag};
use crate::rng::{self, purpose};

/// Linear Gaussian additive-noise model `X_j = sum_i w_ij X_i + N_j`.
#[derive(Debug, Clone)]
pub struct GaussianAnmModel {
    wdag: WeightedDag,
    noise_std: Vec<f64>,
}

impl GaussianAnmModel {
    pub fn new(wdag: WeightedDag, noise_std: Vec<f64>) -> Result<Self> {
        if noise_std.len() != wdag.d() {
            return Err(Error::invalid("one noise scale per node required"));
        }
        if let Some(s) = noise_std.iter().find(|&&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::invalid(format!("noise std must be > 0, got {s}")));
        }
        Ok(Self { wdag, noise_std })
    }

    pub fn unit_noise(wdag: WeightedDag) -> Self {
        let d = wdag.d();
        Self::new(wdag, vec![1.0; d]).expect("unit noise is valid")
    }

    pub fn wdag(&self) -> &WeightedDag {
        &self.wdag
    }

    pub fn sample(&self, n: usize, intervention: &InterventionSpec, seed: u64) -> Result<SampleMatrix> {
        let d = self.wdag.d();
        intervention.validate(d)?;
        let clamps = intervention.clamp_vector(d);
        let order = self.wdag.dag().topological_order();
        let mut values = vec![0.0; n * d];
        if d > 0 {
            values.par_chunks_mut(d).enumerate().for_each(|(r, row)| {
                let mut rng = rng::stream(seed, purpose::ROWS, r as u64);
                for &j in order {
                    row[j] = match clamps[j] {
                        Some(v) => v,
                        None => {
                            let signal: f64 = self.wdag.incoming(j).iter().map(|&(i, w)| w * row[i]).sum();
                            let z: f64 = rng.sample(StandardNormal);
                            signal + self.noise_std[j] * z
                        }
                    };
                }
            });
        }
        SampleMatrix::from_values(self.wdag.dag().names().to_vec(), values, intervention.clone())
    }
}

/// One regulatory interaction `parent -> target` in the Langevin simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HillEdge {
    pub parent: usize,
    /// Maximum contribution `K`.
    pub k: f64,
    /// Half-maximal input `h`.
    pub h: f64,
    /// Hill coefficient `n`.
    pub hill_n: f64,
    pub repressor: bool,
}

impl HillEdge {
    /// Contribution to the target's production rate at parent level `x`.
    pub fn contribution(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        let (xn, hn) = if self.hill_n == 2.0 {
            (x * x, self.h * self.h)
        } else {
            (x.powf(self.hill_n), self.h.powf(self.hill_n))
        };
        let act = if xn == 0.0 { 0.0 } else { xn / (hn + xn) };
        if self.repressor {
            self.k * (1.0 - act)
        } else {
            self.k * act
        }
    }
}

/// How interaction strengths are drawn when building from a weighted DAG.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InteractionStrength {
    /// `K ~ Unif(lo, hi)`.
    Uniform(f64, f64),
    /// `K = scale * |w|`.
    FromWeights { scale: f64 },
    /// Every edge gets the same `K`.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SergioConfig {
    pub dt: f64,
    pub burn_in: usize,
    pub decay: f64,
    pub noise_q: f64,
    pub strength: InteractionStrength,
    pub basal_range: (f64, f64),
    pub hill_n: f64,
}

impl Default for SergioConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            burn_in: 5000,
            decay: 0.8,
            noise_q: 1.0,
            strength: InteractionStrength::Uniform(1.0, 5.0),
            basal_range: (5.0, 15.0),
            hill_n: 2.0,
        }
    }
}

/// Chemical-Langevin gene-expression simulator.
#[derive(Debug, Clone)]
pub struct SergioModel {
    dag: Dag,
    edges: Vec<Vec<HillEdge>>,
    /// Basal production, defined exactly for parentless nodes.
    basal: Vec<Option<f64>>,
    decay: f64,
    noise_q: f64,
    dt: f64,
    burn_in: usize,
}

impl SergioModel {
    pub fn new(
        dag: Dag,
        edges: Vec<Vec<HillEdge>>,
        basal: Vec<Option<f64>>,
        decay: f64,
        noise_q: f64,
        dt: f64,
        burn_in: usize,
    ) -> Result<Self> {
        let d = dag.d();
        if edges.len() != d || basal.len() != d {
            return Err(Error::invalid("edge and basal tables must have one entry per node"));
        }
        if !(decay > 0.0 && dt > 0.0 && noise_q >= 0.0) {
            return Err(Error::invalid("decay and dt must be > 0, noise_q >= 0"));
        }
        for j in 0..d {
            let mut parents: Vec<usize> = edges[j].iter().map(|e| e.parent).collect();
            parents.sort_unstable();
            if parents != dag.parents(j) {
                return Err(Error::invalid(format!("Hill edges of node {j} do not match its parents")));
            }
            for e in &edges[j] {
                if !(e.k > 0.0 && e.h > 0.0 && e.hill_n >= 1.0) {
                    return Err(Error::invalid(format!("invalid Hill edge {e:?}")));
                }
            }
            match (dag.parents(j).is_empty(), basal[j]) {
                (true, Some(b)) if b >= 0.0 => {}
                (false, None) => {}
                _ => {
                    return Err(Error::invalid(format!(
                        "node {j}: basal production must be set exactly for parentless nodes"
                    )))
                }
            }
        }
        Ok(Self {
            dag,
            edges,
            basal,
            decay,
            noise_q,
            dt,
            burn_in,
        })
    }

    /// Builds a model on the same structure as `wdag`: weight sign picks
    /// activator (+) or repressor (-); half-maximal constants sit at each
    /// parent's noise-free steady state.
    pub fn from_weighted_dag(wdag: &WeightedDag, config: &SergioConfig, seed: u64) -> Result<Self> {
        let dag = wdag.dag().clone();
        let d = dag.d();
        let (blo, bhi) = config.basal_range;
        if !(0.0 <= blo && blo <= bhi) {
            return Err(Error::invalid("basal range must satisfy 0 <= lo <= hi"));
        }
        let mut rng = rng::stream(seed, purpose::SERGIO_PARAMS, 0);
        let mut basal = vec![None; d];
        let mut strengths: Vec<Vec<(usize, f64, bool)>> = vec![Vec::new(); d];
        for &j in dag.topological_order() {
            if dag.parents(j).is_empty() {
                basal[j] = Some(if blo == bhi { blo } else { rng.random_range(blo..bhi) });
            }
            for &(i, w) in wdag.incoming(j) {
                let k = match config.strength {
                    InteractionStrength::Uniform(lo, hi) if lo < hi => rng.random_range(lo..hi),
                    InteractionStrength::Uniform(lo, _) => lo,
                    InteractionStrength::FromWeights { scale } => scale * w.abs(),
                    InteractionStrength::Fixed(k) => k,
                };
                strengths[j].push((i, k, w < 0.0));
            }
        }
        // Every Hill term evaluated at x = h gives K/2, so the steady state
        // is known before h is chosen.
        let mut steady = vec![0.0; d];
        for &j in dag.topological_order() {
            let production = basal[j].unwrap_or(0.0) + strengths[j].iter().map(|&(_, k, _)| k / 2.0).sum::<f64>();
            steady[j] = production / config.decay;
        }
        let edges = strengths
            .into_iter()
            .map(|list| {
                list.into_iter()
                    .map(|(parent, k, repressor)| HillEdge {
                        parent,
                        k,
                        h: steady[parent].max(1e-9),
                        hill_n: config.hill_n,
                        repressor,
                    })
                    .collect()
            })
            .collect();
        Self::new(dag, edges, basal, config.decay, config.noise_q, config.dt, config.burn_in)
    }

    pub fn d(&self) -> usize {
        self.dag.d()
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn edges(&self, node: usize) -> &[HillEdge] {
        &self.edges[node]
    }

    pub fn basal(&self, node: usize) -> Option<f64> {
        self.basal[node]
    }

    pub fn with_noise(mut self, noise_q: f64) -> Self {
        self.noise_q = noise_q;
        self
    }

    pub fn with_integration(mut self, dt: f64, burn_in: usize) -> Self {
        self.dt = dt;
        self.burn_in = burn_in;
        self
    }

    /// Production rate `P_i = sum_j p_ij + b_i`.
    pub fn production_rate(&self, node: usize, x: &[f64]) -> f64 {
        self.basal[node].unwrap_or(0.0)
            + self.edges[node]
                .iter()
                .map(|e| e.contribution(x[e.parent]))
                .sum::<f64>()
    }

    /// Noise-free fixed point `x_i = P_i / lambda`, solved in topological
    /// order with clamped nodes held at their values.
    pub fn fixed_point(&self, intervention: &InterventionSpec) -> Result<Vec<f64>> {
        intervention.validate(self.d())?;
        let clamps = intervention.clamp_vector(self.d());
        let mut x = vec![0.0; self.d()];
        for &j in self.dag.topological_order() {
            x[j] = match clamps[j] {
                Some(v) => v,
                None => self.production_rate(j, &x) / self.decay,
            };
        }
        Ok(x)
    }

    /// One Euler–Maruyama update of every unclamped node, floored at zero.
    pub fn step<R: Rng + ?Sized>(&self, x: &[f64], clamps: &[Option<f64>], rng: &mut R) -> Vec<f64> {
        let mut next = vec![0.0; x.len()];
        self.step_into(x, clamps, &mut next, rng);
        next
    }

    fn step_into<R: Rng + ?Sized>(&self, x: &[f64], clamps: &[Option<f64>], next: &mut [f64], rng: &mut R) {
        let sqrt_dt = self.dt.sqrt();
        for j in 0..x.len() {
            if let Some(v) = clamps[j] {
                next[j] = v;
                continue;
            }
            let production = self.production_rate(j, x);
            let degradation = self.decay * x[j];
            let mut value = x[j] + (production - degradation) * self.dt;
            if self.noise_q > 0.0 {
                let dw_a: f64 = rng.sample::<f64, _>(StandardNormal) * sqrt_dt;
                let dw_b: f64 = rng.sample::<f64, _>(StandardNormal) * sqrt_dt;
                value += self.noise_q * (production.sqrt() * dw_a + degradation.max(0.0).sqrt() * dw_b);
            }
            next[j] = value.max(0.0);
        }
    }

    /// Integrates `steps` updates from `x0`; clamps are applied to `x0` too.
    pub fn trajectory<R: Rng + ?Sized>(
        &self,
        x0: &[f64],
        steps: usize,
        intervention: &InterventionSpec,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        intervention.validate(self.d())?;
        if x0.len() != self.d() {
            return Err(Error::invalid("initial state has wrong dimension"));
        }
        let clamps = intervention.clamp_vector(self.d());
        let mut x: Vec<f64> = x0
            .iter()
            .zip(&clamps)
            .map(|(&v, c)| c.unwrap_or(v.max(0.0)))
            .collect();
        let mut next = vec![0.0; x.len()];
        for _ in 0..steps {
            self.step_into(&x, &clamps, &mut next, rng);
            std::mem::swap(&mut x, &mut next);
        }
        Ok(x)
    }

    /// Simulates `n` independent cells, each started at the (clamped)
    /// noise-free fixed point and run for `burn_in` steps.
    pub fn sample(&self, n: usize, intervention: &InterventionSpec, seed: u64) -> Result<SampleMatrix> {
        Ok(self
            .sample_with_deadline(n, intervention, seed, None)?
            .expect("no deadline was set"))
    }

    /// Like [`SergioModel::sample`] but gives up (returning `None`) once the
    /// deadline has passed. Checked between cells.
    pub fn sample_with_deadline(
        &self,
        n: usize,
        intervention: &InterventionSpec,
        seed: u64,
        deadline: Option<Instant>,
    ) -> Result<Option<SampleMatrix>> {
        let d = self.d();
        let start = self.fixed_point(intervention)?;
        let clamps = intervention.clamp_vector(d);
        let mut values = vec![0.0; n * d];
        let expired = std::sync::atomic::AtomicBool::new(false);
        if d > 0 {
            values.par_chunks_mut(d).enumerate().for_each(|(c, row)| {
                if deadline.is_some_and(|t| Instant::now() > t) {
                    expired.store(true, std::sync::atomic::Ordering::Relaxed);
                    return;
                }
                let mut rng = rng::stream(seed, purpose::CELLS, c as u64);
                let mut x = start.clone();
                let mut next = vec![0.0; d];
                for _ in 0..self.burn_in {
                    self.step_into(&x, &clamps, &mut next, &mut rng);
                    std::mem::swap(&mut x, &mut next);
                }
                row.copy_from_slice(&x);
            });
        }
        if expired.into_inner() {
            return Ok(None);
        }
        SampleMatrix::from_values(self.dag.names().to_vec(), values, intervention.clone()).map(Some)
    }
}
