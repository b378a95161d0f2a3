//! Evaluation metrics: varsortability, Wasserstein-1, structure scores,
//! correlation distributions and small summary statistics.

use std::cmp::Ordering;

use log::warn;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::data::SampleMatrix;
use crate::error::{Error, Result};
use crate::graph::{reachability_by_length, BoolMatrix, Dag};

/// 1 if `a < b`, ½ if equal, 0 otherwise.
pub fn increasing(a: f64, b: f64) -> f64 {
    match a.partial_cmp(&b) {
        Some(Ordering::Less) => 1.0,
        Some(Ordering::Equal) => 0.5,
        _ => 0.0,
    }
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Fraction of directed paths, counted once per path length, along which the
/// marginal variance increases.
pub fn varsortability(dag: &Dag, data: &SampleMatrix) -> Result<f64> {
    if data.n_cols() != dag.d() {
        return Err(Error::invalid(format!(
            "graph has {} nodes but data has {} columns",
            dag.d(),
            data.n_cols()
        )));
    }
    if data.n_rows() < 2 {
        return Err(Error::invalid("varsortability needs at least two rows"));
    }
    if dag.edge_count() == 0 {
        return Err(Error::UndefinedMetric("varsortability of an edgeless graph".into()));
    }
    let vars: Vec<f64> = (0..dag.d()).map(|j| sample_variance(&data.column(j))).collect();
    let (mut hits, mut total) = (0.0, 0usize);
    for reach in reachability_by_length(dag) {
        for (i, j) in reach.pairs() {
            hits += increasing(vars[i], vars[j]);
            total += 1;
        }
    }
    Ok(hits / total as f64)
}

/// Exact Wasserstein-1 distance between two empirical distributions.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("wasserstein1 needs non-empty samples"));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::invalid("wasserstein1 needs finite samples"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    // integrate |F_a - F_b| over the merged support
    let (mut i, mut j) = (0usize, 0usize);
    let mut x_prev = a[0].min(b[0]);
    let mut total = 0.0;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&p), Some(&q)) => p.min(q),
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            (None, None) => unreachable!(),
        };
        total += (i as f64 / na - j as f64 / nb).abs() * (x - x_prev);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        x_prev = x;
    }
    Ok(total)
}

/// Confusion counts over ordered off-diagonal pairs plus SHD-derived scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureScore {
    pub shd: usize,
    pub shd_normalized: f64,
    pub fdr: f64,
    pub for_rate: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

/// Cost charged for a predicted edge whose reverse is in the true graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReversalCost {
    #[default]
    One,
    Two,
}

/// Scores a predicted adjacency against the true graph; `m` and `d` set the
/// normalisation `SHD / (m * d)`.
pub fn structure_score(
    truth: &Dag,
    predicted: &BoolMatrix,
    m: usize,
    d: usize,
    reversal: ReversalCost,
) -> Result<StructureScore> {
    if predicted.d() != truth.d() || d != truth.d() {
        return Err(Error::invalid(format!(
            "dimension mismatch: true graph {}, predicted {}, d {}",
            truth.d(),
            predicted.d(),
            d
        )));
    }
    if m == 0 {
        return Err(Error::invalid("normalising edge count m must be positive"));
    }
    let t = truth.adjacency();
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for i in 0..d {
        for j in (0..d).filter(|&j| j != i) {
            match (t.get(i, j), predicted.get(i, j)) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
    }
    let mut shd = 0;
    for i in 0..d {
        for j in i + 1..d {
            let true_pair = (t.get(i, j), t.get(j, i));
            let pred_pair = (predicted.get(i, j), predicted.get(j, i));
            if true_pair == pred_pair {
                continue;
            }
            let reversed = true_pair == (pred_pair.1, pred_pair.0) && true_pair.0 != true_pair.1;
            shd += match (reversed, reversal) {
                (true, ReversalCost::Two) => 2,
                _ => 1,
            };
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    Ok(StructureScore {
        shd,
        shd_normalized: shd as f64 / (m * d) as f64,
        fdr: ratio(fp, fp + tp),
        for_rate: ratio(fn_, fn_ + tn),
        tp,
        fp,
        fn_,
        tn,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCorrelation {
    pub i: usize,
    pub j: usize,
    pub r: f64,
    /// Whether `i -> j` or `j -> i` is an edge; `None` without a graph.
    pub linked: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationDistribution {
    pub pairs: Vec<PairCorrelation>,
    /// Zero-variance columns; their correlations are reported as 0.
    pub constant_columns: Vec<usize>,
}

impl CorrelationDistribution {
    pub fn values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.r).collect()
    }

    pub fn linked(&self, linked: bool) -> Vec<f64> {
        self.pairs
            .iter()
            .filter(|p| p.linked == Some(linked))
            .map(|p| p.r)
            .collect()
    }
}

/// Pearson correlations of all column pairs `i < j`.
pub fn correlation_distribution(data: &SampleMatrix, dag: Option<&Dag>) -> Result<CorrelationDistribution> {
    let (n, d) = (data.n_rows(), data.n_cols());
    if n < 2 || d < 2 {
        return Err(Error::invalid("correlations need at least two rows and two columns"));
    }
    if let Some(g) = dag {
        if g.d() != d {
            return Err(Error::invalid("graph and data dimensions differ"));
        }
    }
    let centered: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let col = data.column(j);
            let m = mean(&col);
            col.into_iter().map(|x| x - m).collect()
        })
        .collect();
    let norms: Vec<f64> = centered.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let constant_columns: Vec<usize> = (0..d).filter(|&j| norms[j] == 0.0).collect();
    if !constant_columns.is_empty() {
        warn!("{} constant column(s); their correlations are set to 0", constant_columns.len());
    }
    let mut pairs = Vec::with_capacity(d * (d - 1) / 2);
    for i in 0..d {
        for j in i + 1..d {
            let r = if norms[i] == 0.0 || norms[j] == 0.0 {
                0.0
            } else {
                let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
                (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0)
            };
            let linked = dag.map(|g| g.has_edge(i, j) || g.has_edge(j, i));
            pairs.push(PairCorrelation { i, j, r, linked });
        }
    }
    Ok(CorrelationDistribution {
        pairs,
        constant_columns,
    })
}

/// Mid-ranks (1-based), ties sharing their average rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            out[k] = rank;
        }
        start = end;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankCorrelation {
    pub rho: f64,
    /// Two-sided p-value from the t approximation with `n - 2` degrees of freedom.
    pub p_value: f64,
}

/// Spearman rank correlation with a two-sided significance test.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<RankCorrelation> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::invalid("spearman needs two equal-length samples of size >= 3"));
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, my) = (mean(&rx), mean(&ry));
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedMetric("spearman correlation of a constant sample".into()));
    }
    let rho = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = (x.len() - 2) as f64;
    let p_value = if rho.abs() == 1.0 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df is positive");
        2.0 * dist.cdf(-t.abs())
    };
    Ok(RankCorrelation { rho, p_value })
}

/// Mean with a 95% t-interval half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanCi {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
}

pub fn mean_ci95(xs: &[f64]) -> Result<MeanCi> {
    if xs.is_empty() {
        return Err(Error::invalid("mean of an empty sample"));
    }
    let m = mean(xs);
    let half_width = if xs.len() < 2 {
        f64::NAN
    } else {
        let df = (xs.len() - 1) as f64;
        let q = StudentsT::new(0.0, 1.0, df).expect("df is positive").inverse_cdf(0.975);
        q * (sample_variance(xs) / xs.len() as f64).sqrt()
    };
    Ok(MeanCi {
        mean: m,
        half_width,
        n: xs.len(),
    })
}

pub fn median(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::invalid("median of an empty sample"));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}
