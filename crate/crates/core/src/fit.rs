//! Maximum-likelihood negative-binomial fits and parameter libraries.
//!
//! The likelihood uses the mean / inverse-dispersion form
//!
//! ```text
//! p(x) = Γ(x+θ) / (Γ(x+1) Γ(θ)) · (θ/(θ+μ))^θ · (μ/(μ+θ))^x
//! ```
//!
//! and is optimised over `(log μ, log θ)` with a small projected L-BFGS,
//! `log θ` boxed to `[ln 1e-3, ln 1e4]`.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use log::warn;
use rand::Rng;
use rayon::prelude::*;
use statrs::function::gamma::{digamma, ln_gamma};

use crate::data::SampleMatrix;
use crate::error::{Error, Result};
use crate::regnet::NodeParams;
use crate::rng::{self, purpose};

pub const THETA_MIN: f64 = 1e-3;
pub const THETA_MAX: f64 = 1e4;
const MU_MIN: f64 = 1e-10;
const MU_MAX: f64 = 1e10;

/// Below this count the Γ and ψ differences are summed term by term, which
/// avoids cancellation when θ is huge.
const SERIES_CUTOFF: u64 = 64;

/// `ln Γ(x+θ) - ln Γ(θ)`.
fn ln_rising(theta: f64, x: u64) -> f64 {
    if x <= SERIES_CUTOFF {
        (0..x).map(|k| (theta + k as f64).ln()).sum()
    } else {
        ln_gamma(x as f64 + theta) - ln_gamma(theta)
    }
}

/// `ψ(x+θ) - ψ(θ)`.
fn digamma_rising(theta: f64, x: u64) -> f64 {
    if x <= SERIES_CUTOFF {
        (0..x).map(|k| 1.0 / (theta + k as f64)).sum()
    } else {
        digamma(x as f64 + theta) - digamma(theta)
    }
}

fn check_params(mu: f64, theta: f64) -> Result<()> {
    if mu > 0.0 && mu.is_finite() && theta > 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("NB parameters must be positive, got mu={mu}, theta={theta}")))
    }
}

fn ln_pmf_unchecked(x: u64, mu: f64, theta: f64) -> f64 {
    let xf = x as f64;
    let count_term = if x == 0 { 0.0 } else { xf * (mu / (mu + theta)).ln() };
    ln_rising(theta, x) - ln_gamma(xf + 1.0) - theta * (mu / theta).ln_1p() + count_term
}

/// Log-probability of count `x` under NB(mean `mu`, inverse dispersion `theta`).
pub fn nb_log_pmf(x: u64, mu: f64, theta: f64) -> Result<f64> {
    check_params(mu, theta)?;
    Ok(ln_pmf_unchecked(x, mu, theta))
}

/// Log-pmf and its gradient with respect to `(ln mu, ln theta)`.
pub fn nb_log_pmf_grad(x: u64, mu: f64, theta: f64) -> Result<(f64, [f64; 2])> {
    check_params(mu, theta)?;
    let xf = x as f64;
    let d_log_mu = theta * (xf - mu) / (mu + theta);
    let d_theta = digamma_rising(theta, x) - (mu / theta).ln_1p() + (mu - xf) / (mu + theta);
    Ok((ln_pmf_unchecked(x, mu, theta), [d_log_mu, theta * d_theta]))
}

/// Counts grouped by value, for cheap repeated likelihood evaluation.
#[derive(Debug, Clone)]
struct CountHistogram {
    bins: Vec<(u64, f64)>,
    total: f64,
}

impl CountHistogram {
    fn new(counts: &[u64]) -> Self {
        let mut map: BTreeMap<u64, f64> = BTreeMap::new();
        for &c in counts {
            *map.entry(c).or_insert(0.0) += 1.0;
        }
        Self {
            bins: map.into_iter().collect(),
            total: counts.len() as f64,
        }
    }

    /// Mean negative log-likelihood and its gradient in `(ln mu, ln theta)`.
    fn objective(&self, z: [f64; 2]) -> (f64, [f64; 2]) {
        let (mu, theta) = (z[0].exp(), z[1].exp());
        let mut value = 0.0;
        let mut grad = [0.0; 2];
        for &(x, weight) in &self.bins {
            let (lp, g) = nb_log_pmf_grad(x, mu, theta).expect("parameters are positive");
            value -= weight * lp;
            grad[0] -= weight * g[0];
            grad[1] -= weight * g[1];
        }
        let scale = 1.0 / self.total;
        (value * scale, [grad[0] * scale, grad[1] * scale])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub mu0: f64,
    pub theta: f64,
    /// Total negative log-likelihood at the optimum.
    pub neg_log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Sample mean and the moment estimate of θ, clipped to the θ box.
pub fn method_of_moments(counts: &[u64]) -> (f64, f64) {
    let n = counts.len() as f64;
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / n;
    let var = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let theta = if var > mean {
        (mean * mean / (var - mean)).clamp(THETA_MIN, THETA_MAX)
    } else {
        THETA_MAX
    };
    (mean, theta)
}

fn to_counts(values: &[f64]) -> Result<Vec<u64>> {
    values
        .iter()
        .map(|&v| {
            if v >= 0.0 && v.fract() == 0.0 && v < u64::MAX as f64 {
                Ok(v as u64)
            } else {
                Err(Error::invalid(format!("counts must be non-negative integers, got {v}")))
            }
        })
        .collect()
}

/// Fits `(mu0, theta)` to one count vector by maximum likelihood.
pub fn fit_node(values: &[f64]) -> Result<FitResult> {
    if values.len() < 2 {
        return Err(Error::invalid("fitting needs at least two observations"));
    }
    let counts = to_counts(values)?;
    if counts.iter().all(|&c| c == 0) {
        return Err(Error::DegenerateFit("all counts are zero; mu0 = 0 is not representable".into()));
    }
    let (mean, theta0) = method_of_moments(&counts);
    let hist = CountHistogram::new(&counts);
    let lower = [MU_MIN.ln(), THETA_MIN.ln()];
    let upper = [MU_MAX.ln(), THETA_MAX.ln()];
    let start = [mean.ln(), theta0.ln()];
    let outcome = minimize_box(|z| hist.objective(z), start, lower, upper, &LbfgsOptions::default());
    Ok(FitResult {
        mu0: outcome.z[0].exp(),
        theta: outcome.z[1].exp(),
        neg_log_likelihood: outcome.value * hist.total,
        converged: outcome.converged,
        iterations: outcome.iterations,
    })
}

/// Total negative log-likelihood of `values` at `(mu, theta)`.
pub fn neg_log_likelihood(values: &[f64], mu: f64, theta: f64) -> Result<f64> {
    check_params(mu, theta)?;
    let counts = to_counts(values)?;
    let hist = CountHistogram::new(&counts);
    let (value, _) = hist.objective([mu.ln(), theta.ln()]);
    Ok(value * hist.total)
}

#[derive(Debug, Clone, Copy)]
struct LbfgsOptions {
    memory: usize,
    max_iter: usize,
    gtol: f64,
    ftol: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 6,
            max_iter: 500,
            gtol: 1e-9,
            ftol: 1e-15,
        }
    }
}

struct Outcome {
    z: [f64; 2],
    value: f64,
    converged: bool,
    iterations: usize,
}

fn dot(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn project(z: [f64; 2], lower: [f64; 2], upper: [f64; 2]) -> [f64; 2] {
    [z[0].clamp(lower[0], upper[0]), z[1].clamp(lower[1], upper[1])]
}

/// Gradient with components zeroed where a bound blocks descent.
fn projected_gradient(z: &[f64; 2], g: &[f64; 2], lower: [f64; 2], upper: [f64; 2]) -> [f64; 2] {
    let mut pg = *g;
    for k in 0..2 {
        if (z[k] <= lower[k] && g[k] > 0.0) || (z[k] >= upper[k] && g[k] < 0.0) {
            pg[k] = 0.0;
        }
    }
    pg
}

/// Projected L-BFGS with Armijo backtracking on the projection arc.
fn minimize_box<F>(mut f: F, start: [f64; 2], lower: [f64; 2], upper: [f64; 2], opts: &LbfgsOptions) -> Outcome
where
    F: FnMut([f64; 2]) -> (f64, [f64; 2]),
{
    let mut z = project(start, lower, upper);
    let (mut value, mut grad) = f(z);
    let mut history: Vec<([f64; 2], [f64; 2])> = Vec::new();
    for iter in 0..opts.max_iter {
        let pg = projected_gradient(&z, &grad, lower, upper);
        if pg[0].abs().max(pg[1].abs()) < opts.gtol {
            return Outcome { z, value, converged: true, iterations: iter };
        }
        // two-loop recursion on the free coordinates
        let mut q = pg;
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y) in history.iter().rev() {
            let rho = 1.0 / dot(y, s);
            let a = rho * dot(s, &q);
            q = [q[0] - a * y[0], q[1] - a * y[1]];
            alphas.push((a, rho));
        }
        if let Some((s, y)) = history.last() {
            let scale = dot(s, y) / dot(y, y);
            q = [q[0] * scale, q[1] * scale];
        }
        for ((s, y), (a, rho)) in history.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            q = [q[0] + s[0] * (a - b), q[1] + s[1] * (a - b)];
        }
        let mut direction = [-q[0], -q[1]];
        for k in 0..2 {
            if pg[k] == 0.0 {
                direction[k] = 0.0;
            }
        }
        if dot(&direction, &grad) >= 0.0 {
            direction = [-pg[0], -pg[1]];
            history.clear();
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = project([z[0] + step * direction[0], z[1] + step * direction[1]], lower, upper);
            let (tv, tg) = f(trial);
            let decrease = dot(&grad, &[trial[0] - z[0], trial[1] - z[1]]);
            if tv.is_finite() && tv <= value + 1e-4 * decrease {
                accepted = Some((trial, tv, tg));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, tv, tg)) = accepted else {
            // no further decrease representable: stationary to working precision
            let pg_norm = pg[0].abs().max(pg[1].abs());
            return Outcome { z, value, converged: pg_norm < 1e-6, iterations: iter };
        };
        let s = [trial[0] - z[0], trial[1] - z[1]];
        let y = [tg[0] - grad[0], tg[1] - grad[1]];
        let improvement = value - tv;
        z = trial;
        value = tv;
        grad = tg;
        if dot(&s, &y) > 1e-16 {
            history.push((s, y));
            if history.len() > opts.memory {
                history.remove(0);
            }
        }
        if improvement <= opts.ftol * value.abs().max(1.0) && s[0].abs().max(s[1].abs()) < 1e-10 {
            return Outcome { z, value, converged: true, iterations: iter + 1 };
        }
    }
    Outcome { z, value, converged: false, iterations: opts.max_iter }
}

/// One fitted gene.
#[derive(Debug, Clone, PartialEq)]
pub struct LibraryEntry {
    pub gene: String,
    pub mu0: f64,
    pub theta: f64,
}

/// Named `(mu0, theta)` pairs, in insertion order, with a free-text source tag.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamLibrary {
    entries: Vec<LibraryEntry>,
    provenance: String,
}

impl ParamLibrary {
    pub fn new(provenance: impl Into<String>) -> Self {
        Self {
            entries: Vec::new(),
            provenance: provenance.into(),
        }
    }

    pub fn insert(&mut self, gene: impl Into<String>, mu0: f64, theta: f64) -> Result<()> {
        let gene = gene.into();
        check_params(mu0, theta)?;
        if gene.trim().is_empty() {
            return Err(Error::invalid("gene name must be non-empty"));
        }
        if self.get(&gene).is_some() {
            return Err(Error::invalid(format!("duplicate gene `{gene}`")));
        }
        self.entries.push(LibraryEntry { gene, mu0, theta });
        Ok(())
    }

    pub fn get(&self, gene: &str) -> Option<&LibraryEntry> {
        self.entries.iter().find(|e| e.gene == gene)
    }

    pub fn entries(&self) -> &[LibraryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Node parameters for entry `index`, with default `alpha`, `beta`, `adjust`.
    pub fn node_params(&self, index: usize) -> NodeParams {
        let e = &self.entries[index];
        NodeParams::with_defaults(e.mu0, e.theta).expect("library entries are validated on insert")
    }

    /// Draws one library gene per node: without replacement when the library
    /// is large enough, with replacement otherwise. Returns the node
    /// parameters and the chosen gene indices.
    pub fn assign(&self, d: usize, seed: u64) -> Result<(Vec<NodeParams>, Vec<usize>)> {
        if self.is_empty() {
            return Err(Error::invalid("cannot assign genes from an empty library"));
        }
        let mut rng = rng::stream(seed, purpose::PARAMS, 0);
        let picks: Vec<usize> = if d <= self.len() {
            rand::seq::index::sample(&mut rng, self.len(), d).into_vec()
        } else {
            (0..d).map(|_| rng.random_range(0..self.len())).collect()
        };
        Ok((picks.iter().map(|&g| self.node_params(g)).collect(), picks))
    }

    /// Deterministic synthetic library standing in for genes fitted to a
    /// perturbation screen: `ln mu0 ~ U(ln 0.1, ln 20)` and
    /// `ln theta ~ U(ln 0.5, ln 20)`, genes named `G001`, `G002`, ...
    pub fn synthetic(size: usize, seed: u64) -> Self {
        let mut rng = rng::stream(seed, purpose::LIBRARY, 0);
        let mut lib = Self::new(format!("synthetic(size={size}, seed={seed})"));
        let (mu_lo, mu_hi) = (0.1f64.ln(), 20f64.ln());
        let (th_lo, th_hi) = (0.5f64.ln(), 20f64.ln());
        for i in 0..size {
            let mu0 = rng.random_range(mu_lo..mu_hi).exp();
            let theta = rng.random_range(th_lo..th_hi).exp();
            lib.insert(format!("G{:03}", i + 1), mu0, theta)
                .expect("synthetic entries are valid");
        }
        lib
    }

    /// The built-in 100-gene library used whenever no library file is given.
    pub fn builtin() -> Self {
        Self::synthetic(100, 2024)
    }
}

/// Outcome of fitting every column of a matrix.
#[derive(Debug, Clone)]
pub struct LibraryFit {
    pub library: ParamLibrary,
    pub results: Vec<(String, FitResult)>,
    /// One message per excluded column.
    pub warnings: Vec<String>,
}

/// Fits each column independently; columns that error or fail to converge
/// are excluded with a warning. Fails only if no column survives.
pub fn fit_library(matrix: &SampleMatrix, names: &[String]) -> Result<LibraryFit> {
    if names.len() != matrix.n_cols() {
        return Err(Error::invalid(format!(
            "{} names for {} columns",
            names.len(),
            matrix.n_cols()
        )));
    }
    let unique: HashSet<&String> = names.iter().collect();
    if unique.len() != names.len() {
        return Err(Error::invalid("gene names must be unique"));
    }
    let fits: Vec<Result<FitResult>> = (0..matrix.n_cols())
        .into_par_iter()
        .map(|j| fit_node(&matrix.column(j)))
        .collect();
    let mut library = ParamLibrary::new("fit");
    let mut results = Vec::new();
    let mut warnings = Vec::new();
    for (name, fit) in names.iter().zip(fits) {
        match fit {
            Ok(r) if r.converged => {
                library.insert(name.clone(), r.mu0, r.theta)?;
                results.push((name.clone(), r));
            }
            Ok(r) => warnings.push(format!("{name}: did not converge after {} iterations", r.iterations)),
            Err(e) => warnings.push(format!("{name}: {e}")),
        }
    }
    for w in &warnings {
        warn!("excluded column {w}");
    }
    if library.is_empty() {
        return Err(Error::DegenerateFit(format!("no column could be fitted: {}", warnings.join("; "))));
    }
    Ok(LibraryFit {
        library,
        results,
        warnings,
    })
}

/// Writes `gene,mu0,theta`; a non-empty provenance goes in a leading
/// `# source:` comment.
pub fn write_library<W: Write>(mut out: W, lib: &ParamLibrary) -> Result<()> {
    if !lib.provenance.is_empty() {
        writeln!(out, "# source: {}", lib.provenance.replace('\n', " "))?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["gene", "mu0", "theta"])?;
    for e in &lib.entries {
        w.write_record([e.gene.as_str(), &e.mu0.to_string(), &e.theta.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_library<R: Read>(mut input: R) -> Result<ParamLibrary> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let provenance = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix("# source:"))
        .map(|s| s.trim().to_string())
        .unwrap_or_default();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::parse(1, format!("missing column `{name}`")))
    };
    let (gi, mi, ti) = (col("gene")?, col("mu0")?, col("theta")?);
    let mut lib = ParamLibrary::new(provenance);
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize, what: &str| -> Result<f64> {
            let raw = record.get(i).unwrap_or("");
            raw.parse::<f64>()
                .map_err(|_| Error::parse(line, format!("{what}: cannot parse `{raw}`")))
        };
        let (mu0, theta) = (field(mi, "mu0")?, field(ti, "theta")?);
        lib.insert(record.get(gi).unwrap_or(""), mu0, theta)
            .map_err(|e| Error::parse(line, e.to_string()))?;
    }
    Ok(lib)
}

pub fn save_library(lib: &ParamLibrary, path: &Path) -> Result<()> {
    write_library(File::create(path)?, lib)
}

pub fn load_library(path: &Path) -> Result<ParamLibrary> {
    read_library(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regnet::nb_sample;

    fn draws(mu: f64, theta: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng::stream(seed, 99, 0);
        (0..n).map(|_| nb_sample(mu, theta, &mut rng) as f64).collect()
    }

    #[test]
    fn pmf_at_zero() {
        assert!((nb_log_pmf(0, 1.0, 1.0).unwrap() - 0.5f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn pmf_rejects_bad_params() {
        assert!(nb_log_pmf(1, 0.0, 1.0).is_err());
        assert!(nb_log_pmf(1, 1.0, -2.0).is_err());
    }

    #[test]
    fn pmf_poisson_limit() {
        let mut tv = 0.0;
        let mut ln_fact = 0.0;
        for x in 0..=50u64 {
            if x > 0 {
                ln_fact += (x as f64).ln();
            }
            let poisson = (x as f64 * 3f64.ln() - 3.0 - ln_fact).exp();
            tv += (nb_log_pmf(x, 3.0, 1e8).unwrap().exp() - poisson).abs();
        }
        assert!(tv / 2.0 < 1e-6, "{tv}");
    }

    #[test]
    fn pmf_normalizes() {
        for &(mu, theta) in &[(0.25f64, 3.38f64), (5.0, 0.5), (40.0, 2.0), (1000.0, 50.0)] {
            let sd = (mu * (1.0 + mu / theta)).sqrt();
            let x_max = (mu + 50.0 * sd).ceil() as u64;
            let total: f64 = (0..=x_max).map(|x| nb_log_pmf(x, mu, theta).unwrap().exp()).sum();
            assert!((1.0 - 1e-8..=1.0 + 1e-8).contains(&total), "mu {mu} theta {theta}: {total}");
        }
        assert!(nb_log_pmf(1_000_000, 1e6, 10.0).unwrap().is_finite());
    }

    #[test]
    fn series_and_gamma_paths_agree() {
        for &theta in &[0.01, 0.7, 3.0, 250.0] {
            let x = SERIES_CUTOFF;
            let series = ln_rising(theta, x);
            let gamma = ln_gamma(x as f64 + theta) - ln_gamma(theta);
            assert!((series - gamma).abs() < 1e-9 * gamma.abs().max(1.0));
            let series = digamma_rising(theta, x);
            let gamma = digamma(x as f64 + theta) - digamma(theta);
            assert!((series - gamma).abs() < 1e-9 * gamma.abs().max(1.0));
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = rng::stream(5, 0, 0);
        for _ in 0..20 {
            let x = rng.random_range(0..200u64);
            let lmu: f64 = rng.random_range(-2.0..5.0);
            let lth: f64 = rng.random_range(-2.0..6.0);
            let (_, g) = nb_log_pmf_grad(x, lmu.exp(), lth.exp()).unwrap();
            let f = |a: f64, b: f64| nb_log_pmf(x, a.exp(), b.exp()).unwrap();
            let h = 1e-3;
            // five-point stencil
            let fd = |df: &dyn Fn(f64) -> f64| {
                (-df(2.0 * h) + 8.0 * df(h) - 8.0 * df(-h) + df(-2.0 * h)) / (12.0 * h)
            };
            let fd_mu = fd(&|e| f(lmu + e, lth));
            let fd_th = fd(&|e| f(lmu, lth + e));
            for (num, ana) in [(fd_mu, g[0]), (fd_th, g[1])] {
                let rel = (num - ana).abs() / ana.abs().max(1e-300);
                assert!(rel < 1e-6, "x={x} lmu={lmu} lth={lth}: {num} vs {ana}");
            }
        }
    }

    #[test]
    fn recovers_moderate_parameters() {
        let fit = fit_node(&draws(20.0, 5.0, 10_000, 1)).unwrap();
        assert!(fit.converged);
        assert!((fit.mu0 / 20.0 - 1.0).abs() < 0.02, "{fit:?}");
        assert!((fit.theta / 5.0 - 1.0).abs() < 0.10, "{fit:?}");
    }

    #[test]
    fn recovers_low_mean_gene() {
        let fit = fit_node(&draws(0.25, 3.38, 100_000, 2)).unwrap();
        assert!(fit.converged);
        assert!((0.2375..=0.2625).contains(&fit.mu0), "{fit:?}");
        assert!((fit.theta / 3.38 - 1.0).abs() < 0.25, "{fit:?}");
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(fit_node(&[0.0; 10]), Err(Error::DegenerateFit(_))));
        assert!(matches!(fit_node(&[1.0, 2.5]), Err(Error::InvalidArgument(_))));
        assert!(matches!(fit_node(&[3.0]), Err(Error::InvalidArgument(_))));
        assert!(matches!(fit_node(&[-1.0, 2.0]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn underdispersed_data_hits_theta_cap() {
        let data: Vec<f64> = (0..1000).map(|i| (i % 3 + 4) as f64).collect();
        let fit = fit_node(&data).unwrap();
        assert!(fit.converged);
        assert!((fit.theta - THETA_MAX).abs() < 1e-6 * THETA_MAX);
        let mean = data.iter().sum::<f64>() / data.len() as f64;
        assert!((fit.mu0 - mean).abs() < 1e-6, "{fit:?}");
    }

    #[test]
    fn fit_never_worse_than_moments() {
        for (k, &(mu, theta)) in [(0.5, 0.3), (3.0, 1.0), (50.0, 20.0), (8.0, 1e3)].iter().enumerate() {
            let data = draws(mu, theta, 3000, 10 + k as u64);
            let counts = to_counts(&data).unwrap();
            let (m0, t0) = method_of_moments(&counts);
            let fit = fit_node(&data).unwrap();
            assert!(fit.neg_log_likelihood <= neg_log_likelihood(&data, m0, t0).unwrap() + 1e-9);
        }
    }

    #[test]
    fn mean_error_shrinks_with_n() {
        let sizes = [100usize, 1000, 10_000, 100_000];
        let errors: Vec<f64> = sizes
            .iter()
            .map(|&n| {
                (0..50)
                    .map(|s| (fit_node(&draws(4.0, 2.0, n, 1000 + s)).unwrap().mu0 - 4.0).abs())
                    .sum::<f64>()
                    / 50.0
            })
            .collect();
        assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    }

    #[test]
    fn library_fit_and_exclusion() {
        let cols = vec![draws(2.0, 1.0, 2000, 1), draws(10.0, 4.0, 2000, 2), draws(0.5, 2.0, 2000, 3)];
        let names: Vec<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
        let m = SampleMatrix::from_columns(names.clone(), &cols).unwrap();
        let fit = fit_library(&m, &names).unwrap();
        assert_eq!(fit.library.len(), 3);
        assert!(fit.warnings.is_empty());

        let cols = vec![draws(2.0, 1.0, 500, 1), vec![0.0; 500]];
        let m = SampleMatrix::from_columns(names[..2].to_vec(), &cols).unwrap();
        let fit = fit_library(&m, &names[..2]).unwrap();
        assert_eq!(fit.library.len(), 1);
        assert_eq!(fit.warnings.len(), 1);

        let m = SampleMatrix::from_columns(vec!["Z".into()], &[vec![0.0; 20]]).unwrap();
        assert!(fit_library(&m, &["Z".to_string()]).is_err());
    }

    #[test]
    fn library_csv_round_trip() {
        let mut lib = ParamLibrary::new("");
        let mut buf = Vec::new();
        write_library(&mut buf, &lib).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "gene,mu0,theta\n");
        assert!(read_library(buf.as_slice()).unwrap().is_empty());

        lib.insert("GENE1", 0.25, 3.38).unwrap();
        let synthetic = ParamLibrary::synthetic(20, 1);
        for e in synthetic.entries() {
            lib.insert(e.gene.clone(), e.mu0, e.theta).unwrap();
        }
        let mut buf = Vec::new();
        write_library(&mut buf, &lib).unwrap();
        let back = read_library(buf.as_slice()).unwrap();
        assert_eq!(back.len(), lib.len());
        for (a, b) in back.entries().iter().zip(lib.entries()) {
            assert_eq!(a.gene, b.gene);
            assert!((a.mu0 - b.mu0).abs() <= 1e-12 * b.mu0);
            assert!((a.theta - b.theta).abs() <= 1e-12 * b.theta);
        }
        assert_eq!(back.get("GENE1").unwrap().mu0, 0.25);
    }

    #[test]
    fn library_rejects_bad_rows() {
        let text = "gene,mu0,theta\nA,1,2\nB,0.5,-1\n";
        match read_library(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(read_library("gene,mu0\nA,1\n".as_bytes()), Err(Error::Parse { .. })));
        assert!(read_library("gene,mu0,theta\nA,1,2\nA,1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn builtin_library_is_stable() {
        let a = ParamLibrary::builtin();
        assert_eq!(a, ParamLibrary::builtin());
        assert_eq!(a.len(), 100);
        assert_eq!(a.node_params(0).alpha, 2.0);
    }

    #[test]
    fn assignment_is_distinct_when_possible() {
        let lib = ParamLibrary::synthetic(10, 3);
        let (params, picks) = lib.assign(10, 8).unwrap();
        let mut sorted = picks.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());
        assert_eq!(params[0].mu0, lib.entries()[picks[0]].mu0);
        let (params, _) = lib.assign(25, 8).unwrap();
        assert_eq!(params.len(), 25);
        assert_eq!(lib.assign(4, 1).unwrap(), lib.assign(4, 1).unwrap());
        assert!(ParamLibrary::new("").assign(1, 0).is_err());
    }
}
