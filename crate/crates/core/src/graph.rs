//! Weighted DAGs, random graph generators, and path reachability.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::cmp::Reverse;
use std::fmt;

use rand::seq::{index, IndexedRandom, SliceRandom};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, purpose};

/// A directed acyclic graph over nodes `0..d`.
///
/// Construction validates the edge set, so every `Dag` value is acyclic,
/// has no self-loops or duplicate edges, and only references valid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Dag {
    names: Vec<String>,
    edges: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    order: Vec<usize>,
}

fn default_names(d: usize) -> Vec<String> {
    (0..d).map(|i| format!("X{i}")).collect()
}

impl Dag {
    pub fn new(d: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        Self::with_names(default_names(d), edges)
    }

    pub fn with_names(names: Vec<String>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let d = names.len();
        let unique: BTreeSet<&str> = names.iter().map(String::as_str).collect();
        if unique.len() != d {
            return Err(Error::invalid("node names must be unique"));
        }
        let mut seen = BTreeSet::new();
        for &(i, j) in &edges {
            if i >= d || j >= d {
                return Err(Error::invalid(format!(
                    "edge {i} -> {j} references a node outside 0..{d}"
                )));
            }
            if i == j {
                return Err(Error::invalid(format!("self-loop on node {i}")));
            }
            if !seen.insert((i, j)) {
                return Err(Error::invalid(format!("duplicate edge {i} -> {j}")));
            }
        }
        let order = topological_order(d, &edges)?;
        let mut parents = vec![Vec::new(); d];
        let mut children = vec![Vec::new(); d];
        for &(i, j) in &edges {
            parents[j].push(i);
            children[i].push(j);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }
        Ok(Self {
            names,
            edges,
            parents,
            children,
            order,
        })
    }

    pub fn d(&self) -> usize {
        self.names.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, node: usize) -> &str {
        &self.names[node]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn parents(&self, node: usize) -> &[usize] {
        &self.parents[node]
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.children
            .get(from)
            .is_some_and(|c| c.binary_search(&to).is_ok())
    }

    /// Topological order with ascending-index tie-break (cached at construction).
    pub fn topological_order(&self) -> &[usize] {
        &self.order
    }

    pub fn adjacency(&self) -> BoolMatrix {
        let mut m = BoolMatrix::new(self.d());
        for &(i, j) in &self.edges {
            m.set(i, j, true);
        }
        m
    }

    /// `result[j]` is true iff `j` is reachable from `node` by a non-empty path.
    pub fn descendants(&self, node: usize) -> Vec<bool> {
        let mut seen = vec![false; self.d()];
        let mut stack: Vec<usize> = self.children[node].clone();
        while let Some(v) = stack.pop() {
            if !seen[v] {
                seen[v] = true;
                stack.extend_from_slice(&self.children[v]);
            }
        }
        seen
    }

    /// Returns the same graph with nodes relabelled: node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.d() {
            return Err(Error::invalid("permutation length differs from node count"));
        }
        let mut names = vec![String::new(); self.d()];
        for (i, &p) in perm.iter().enumerate() {
            names[p] = self.names[i].clone();
        }
        let edges = self.edges.iter().map(|&(i, j)| (perm[i], perm[j])).collect();
        Self::with_names(names, edges)
    }
}

/// Kahn's algorithm with a min-index frontier.
///
/// On failure, the error names one edge lying on a cycle.
pub fn topological_order(d: usize, edges: &[(usize, usize)]) -> Result<Vec<usize>> {
    let mut indegree = vec![0usize; d];
    let mut children = vec![Vec::new(); d];
    for &(i, j) in edges {
        if i >= d || j >= d {
            return Err(Error::invalid(format!(
                "edge {i} -> {j} references a node outside 0..{d}"
            )));
        }
        indegree[j] += 1;
        children[i].push(j);
    }
    let mut frontier: BinaryHeap<Reverse<usize>> = (0..d)
        .filter(|&v| indegree[v] == 0)
        .map(Reverse)
        .collect();
    let mut order = Vec::with_capacity(d);
    while let Some(Reverse(v)) = frontier.pop() {
        order.push(v);
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                frontier.push(Reverse(c));
            }
        }
    }
    if order.len() == d {
        return Ok(order);
    }
    let (from, to) = find_back_edge(d, &children, &indegree);
    Err(Error::CyclicGraph { from, to })
}

/// Iterative DFS over the nodes Kahn could not place; returns a back edge.
fn find_back_edge(d: usize, children: &[Vec<usize>], residual: &[usize]) -> (usize, usize) {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let mut mark = vec![Mark::White; d];
    for start in (0..d).filter(|&v| residual[v] > 0) {
        if mark[start] != Mark::White {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        mark[start] = Mark::Grey;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if let Some(&c) = children[v].get(*next) {
                *next += 1;
                match mark[c] {
                    Mark::Grey => return (v, c),
                    Mark::White => {
                        mark[c] = Mark::Grey;
                        stack.push((c, 0));
                    }
                    Mark::Black => {}
                }
            } else {
                mark[v] = Mark::Black;
                stack.pop();
            }
        }
    }
    unreachable!("Kahn left residual nodes but no cycle was found")
}

/// Erdős–Rényi DAG with exactly `m` edges.
///
/// Unordered pairs are sampled uniformly without replacement and oriented
/// along a uniformly random node permutation.
pub fn generate_er_dag(d: usize, m: usize, seed: u64) -> Result<Dag> {
    if d == 0 {
        return Err(Error::invalid("d must be at least 1"));
    }
    let max_edges = d * (d - 1) / 2;
    if m > max_edges {
        return Err(Error::invalid(format!(
            "m = {m} exceeds the {max_edges} possible edges on {d} nodes"
        )));
    }
    let mut rng = rng::stream(seed, purpose::GRAPH, 0);
    let mut perm: Vec<usize> = (0..d).collect();
    perm.shuffle(&mut rng);
    let mut edges: Vec<(usize, usize)> = index::sample(&mut rng, max_edges, m)
        .into_iter()
        .map(|k| {
            let (a, b) = unrank_pair(k, d);
            (perm[a], perm[b])
        })
        .collect();
    edges.sort_unstable();
    Dag::new(d, edges)
}

/// Maps `k` in `0..d(d-1)/2` to the k-th pair `(a, b)` with `a < b` in
/// row-major order.
fn unrank_pair(mut k: usize, d: usize) -> (usize, usize) {
    let mut a = 0;
    loop {
        let row = d - 1 - a;
        if k < row {
            return (a, a + 1 + k);
        }
        k -= row;
        a += 1;
    }
}

/// Preferential-attachment (scale-free) DAG.
///
/// Starts from the single edge `0 -> 1`; every later node `t` links to
/// `min(m_attach, t)` distinct existing nodes drawn with probability
/// proportional to their current total degree. Edges point from the older
/// node to the newer one, so the result has `1 + sum_{t=2}^{d-1} min(m_attach, t)` edges.
///
/// Requires `d >= 2` and `1 <= m_attach <= max(1, d - 2)`.
pub fn generate_sf_dag(d: usize, m_attach: usize, seed: u64) -> Result<Dag> {
    if d < 2 {
        return Err(Error::invalid("scale-free generator needs d >= 2"));
    }
    let upper = (d - 2).max(1);
    if m_attach == 0 || m_attach > upper {
        return Err(Error::invalid(format!(
            "m_attach = {m_attach} outside 1..={upper} for d = {d}"
        )));
    }
    let mut rng = rng::stream(seed, purpose::GRAPH, 1);
    let mut degree = vec![0usize; d];
    let mut edges = vec![(0, 1)];
    degree[0] = 1;
    degree[1] = 1;
    for t in 2..d {
        let existing: Vec<usize> = (0..t).collect();
        let k = m_attach.min(t);
        let targets: Vec<usize> = existing
            .choose_multiple_weighted(&mut rng, k, |&v| degree[v] as f64)
            .map_err(|e| Error::invalid(format!("preferential attachment failed: {e}")))?
            .copied()
            .collect();
        for v in targets {
            edges.push((v, t));
            degree[v] += 1;
            degree[t] += 1;
        }
    }
    edges.sort_unstable();
    Dag::new(d, edges)
}

/// The chain `0 -> 1 -> ... -> d-1`.
pub fn make_chain(d: usize) -> Dag {
    let edges = (1..d).map(|i| (i - 1, i)).collect();
    Dag::new(d, edges).expect("a chain is always a valid DAG")
}

/// Two sign-separated intervals for edge weights and the probability of
/// drawing from the positive one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightRanges {
    pub negative: (f64, f64),
    pub positive: (f64, f64),
    pub positive_fraction: f64,
}

impl Default for WeightRanges {
    fn default() -> Self {
        Self {
            negative: (-2.0, -0.5),
            positive: (0.5, 2.0),
            positive_fraction: 0.5,
        }
    }
}

impl WeightRanges {
    /// Default magnitudes, activating edges only.
    pub fn activating() -> Self {
        Self {
            positive_fraction: 1.0,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let (nl, nh) = self.negative;
        let (pl, ph) = self.positive;
        let ok = nl.is_finite() && ph.is_finite() && nl < nh && nh < 0.0 && 0.0 < pl && pl < ph;
        if !(0.0..=1.0).contains(&self.positive_fraction) {
            return Err(Error::invalid(format!(
                "positive_fraction must lie in [0, 1], got {}",
                self.positive_fraction
            )));
        }
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "weight ranges must be ordered and exclude zero, got ({nl}, {nh}) u ({pl}, {ph})"
            )))
        }
    }
}

/// A DAG plus one real weight per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDag {
    dag: Dag,
    weights: BTreeMap<(usize, usize), f64>,
    /// `(parent, weight)` per node, parents ascending.
    incoming: Vec<Vec<(usize, f64)>>,
}

impl WeightedDag {
    pub fn new(dag: Dag, weights: BTreeMap<(usize, usize), f64>) -> Result<Self> {
        if weights.len() != dag.edge_count() {
            return Err(Error::invalid(format!(
                "{} weights supplied for {} edges",
                weights.len(),
                dag.edge_count()
            )));
        }
        for (&(i, j), w) in &weights {
            if !dag.has_edge(i, j) {
                return Err(Error::invalid(format!("weight for non-edge {i} -> {j}")));
            }
            if !w.is_finite() {
                return Err(Error::invalid(format!("non-finite weight on {i} -> {j}")));
            }
        }
        let mut incoming = vec![Vec::new(); dag.d()];
        for (&(i, j), &w) in &weights {
            incoming[j].push((i, w));
        }
        Ok(Self {
            dag,
            weights,
            incoming,
        })
    }

    /// Every edge gets the same weight.
    pub fn uniform(dag: Dag, weight: f64) -> Result<Self> {
        let weights = dag.edges().iter().map(|&e| (e, weight)).collect();
        Self::new(dag, weights)
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn d(&self) -> usize {
        self.dag.d()
    }

    pub fn weight(&self, from: usize, to: usize) -> Option<f64> {
        self.weights.get(&(from, to)).copied()
    }

    pub fn weights(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.weights
    }

    pub fn incoming(&self, node: usize) -> &[(usize, f64)] {
        &self.incoming[node]
    }

    /// Sum of incoming edge weights.
    pub fn weight_sum(&self, node: usize) -> f64 {
        self.incoming[node].iter().map(|&(_, w)| w).sum()
    }
}

/// Draws each edge weight from the positive interval with probability
/// `positive_fraction` (otherwise the negative one), then uniformly within it.
pub fn sample_edge_weights(dag: Dag, ranges: WeightRanges, seed: u64) -> Result<WeightedDag> {
    ranges.validate()?;
    let mut rng = rng::stream(seed, purpose::WEIGHTS, 0);
    let weights = dag
        .edges()
        .iter()
        .map(|&e| {
            let (lo, hi) = if rng.random_bool(ranges.positive_fraction) {
                ranges.positive
            } else {
                ranges.negative
            };
            (e, rng.random_range(lo..hi))
        })
        .collect();
    WeightedDag::new(dag, weights)
}

/// Dense square boolean matrix.
#[derive(Clone, PartialEq, Eq)]
pub struct BoolMatrix {
    d: usize,
    cells: Vec<bool>,
}

impl BoolMatrix {
    pub fn new(d: usize) -> Self {
        Self {
            d,
            cells: vec![false; d * d],
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.d + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.cells[i * self.d + j] = v;
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|&c| c)
    }

    /// Set cells as `(row, col)` pairs in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .map(move |(k, _)| (k / self.d, k % self.d))
    }

    /// Boolean product `self * rhs`.
    pub fn bool_mul(&self, rhs: &BoolMatrix) -> BoolMatrix {
        assert_eq!(self.d, rhs.d, "dimension mismatch");
        let d = self.d;
        let mut out = BoolMatrix::new(d);
        for i in 0..d {
            for k in 0..d {
                if !self.get(i, k) {
                    continue;
                }
                let src = &rhs.cells[k * d..(k + 1) * d];
                let dst = &mut out.cells[i * d..(i + 1) * d];
                for (o, &s) in dst.iter_mut().zip(src) {
                    *o |= s;
                }
            }
        }
        out
    }
}

impl fmt::Debug for BoolMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.pairs()).finish()
    }
}

/// `R^k` for `k = 1..d-1`: `R^k[i][j]` is set iff a directed path of exactly
/// `k` edges leads from `i` to `j`. Trailing powers are empty matrices once
/// the longest path is exhausted.
pub fn reachability_by_length(dag: &Dag) -> Vec<BoolMatrix> {
    let d = dag.d();
    if d < 2 {
        return Vec::new();
    }
    let adjacency = dag.adjacency();
    let mut powers = Vec::with_capacity(d - 1);
    powers.push(adjacency.clone());
    for _ in 2..d {
        let last = powers.last().expect("non-empty");
        let next = if last.is_empty() {
            BoolMatrix::new(d)
        } else {
            last.bool_mul(&adjacency)
        };
        powers.push(next);
    }
    powers
}

/// A hard intervention: each target node is clamped to its value.
/// The empty intervention is the observational regime.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InterventionSpec {
    targets: BTreeMap<usize, f64>,
}

impl InterventionSpec {
    pub fn observational() -> Self {
        Self::default()
    }

    pub fn single(node: usize, value: f64) -> Self {
        Self {
            targets: BTreeMap::from([(node, value)]),
        }
    }

    pub fn new(targets: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (node, value) in targets {
            if map.insert(node, value).is_some() {
                return Err(Error::invalid(format!("node {node} targeted twice")));
            }
        }
        Ok(Self { targets: map })
    }

    pub fn is_observational(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn targets(&self) -> &BTreeMap<usize, f64> {
        &self.targets
    }

    pub fn clamp_of(&self, node: usize) -> Option<f64> {
        self.targets.get(&node).copied()
    }

    /// Checks targets against a graph of `d` nodes. Clamps must be finite and
    /// non-negative.
    pub fn validate(&self, d: usize) -> Result<()> {
        for (&node, &value) in &self.targets {
            if node >= d {
                return Err(Error::invalid(format!(
                    "intervention target {node} outside 0..{d}"
                )));
            }
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::invalid(format!(
                    "clamp value {value} on node {node} must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }

    /// Dense clamp lookup for sampling loops.
    pub fn clamp_vector(&self, d: usize) -> Vec<Option<f64>> {
        let mut v = vec![None; d];
        for (&node, &value) in &self.targets {
            v[node] = Some(value);
        }
        v
    }

    /// `obs` or `do:<name>=<value>[;...]`.
    pub fn label(&self, names: &[String]) -> String {
        if self.targets.is_empty() {
            return "obs".to_string();
        }
        let parts: Vec<String> = self
            .targets
            .iter()
            .map(|(&node, value)| format!("{}={}", names[node], value))
            .collect();
        format!("do:{}", parts.join(";"))
    }

    /// Inverse of [`InterventionSpec::label`]; also accepts the bare
    /// `<name>=<value>[;...]` form used on the command line.
    pub fn parse_label(label: &str, names: &[String]) -> Result<Self> {
        let label = label.trim();
        if label == "obs" || label.is_empty() {
            return Ok(Self::default());
        }
        let body = label.strip_prefix("do:").unwrap_or(label);
        let mut pairs = Vec::new();
        for part in body.split(';').filter(|p| !p.trim().is_empty()) {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("malformed intervention term `{part}`")))?;
            let name = name.trim();
            let node = names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::invalid(format!("unknown intervention target `{name}`")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad clamp value in `{part}`")))?;
            pairs.push((node, value));
        }
        let spec = Self::new(pairs)?;
        spec.validate(names.len())?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent cycle check: recursive DFS looking for a grey successor.
    fn has_cycle(d: usize, edges: &[(usize, usize)]) -> bool {
        fn visit(v: usize, adj: &[Vec<usize>], state: &mut [u8]) -> bool {
            state[v] = 1;
            for &c in &adj[v] {
                if state[c] == 1 || (state[c] == 0 && visit(c, adj, state)) {
                    return true;
                }
            }
            state[v] = 2;
            false
        }
        let mut adj = vec![Vec::new(); d];
        for &(i, j) in edges {
            adj[i].push(j);
        }
        let mut state = vec![0u8; d];
        (0..d).any(|v| state[v] == 0 && visit(v, &adj, &mut state))
    }

    /// Brute-force: does a walk of exactly `k` edges lead from `i` to `j`?
    fn walk_exists(dag: &Dag, i: usize, j: usize, k: usize) -> bool {
        if k == 0 {
            return i == j;
        }
        dag.children(i).iter().any(|&c| walk_exists(dag, c, j, k - 1))
    }

    #[test]
    fn er_single_node() {
        let g = generate_er_dag(1, 0, 99).unwrap();
        assert_eq!(g.d(), 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn er_edge_count_and_acyclic() {
        let g = generate_er_dag(10, 20, 7).unwrap();
        assert_eq!(g.d(), 10);
        assert_eq!(g.edge_count(), 20);
        assert!(!has_cycle(10, g.edges()));
    }

    #[test]
    fn er_saturated_is_complete_order() {
        let g = generate_er_dag(4, 6, 3).unwrap();
        assert_eq!(g.edge_count(), 6);
        let order = g.topological_order();
        for a in 0..4 {
            for b in a + 1..4 {
                assert!(g.has_edge(order[a], order[b]));
            }
        }
    }

    #[test]
    fn er_rejects_too_many_edges() {
        assert!(matches!(generate_er_dag(4, 7, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn er_pair_frequencies_are_uniform() {
        let (d, m, seeds) = (5, 4, 1000);
        let mut counts = BTreeMap::new();
        for seed in 0..seeds {
            for &(i, j) in generate_er_dag(d, m, seed).unwrap().edges() {
                *counts.entry((i.min(j), i.max(j))).or_insert(0usize) += 1;
            }
        }
        let expected = m as f64 / (d * (d - 1) / 2) as f64;
        assert_eq!(counts.len(), 10);
        for (pair, c) in counts {
            let freq = c as f64 / seeds as f64;
            assert!((freq - expected).abs() < 0.05, "{pair:?}: {freq}");
        }
    }

    #[test]
    fn er_is_seed_deterministic() {
        assert_eq!(generate_er_dag(20, 40, 5).unwrap(), generate_er_dag(20, 40, 5).unwrap());
        assert_ne!(generate_er_dag(20, 40, 5).unwrap(), generate_er_dag(20, 40, 6).unwrap());
    }

    #[test]
    fn sf_minimal_graph() {
        let g = generate_sf_dag(2, 1, 123).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
    }

    #[test]
    fn sf_edge_count_matches_attachment_rule() {
        let g = generate_sf_dag(50, 2, 1).unwrap();
        let expected = 1 + (2..50).map(|t: usize| t.min(2)).sum::<usize>();
        assert_eq!(expected, 97);
        assert_eq!(g.edge_count(), 97);
        assert!(!has_cycle(50, g.edges()));
        assert!(g.edges().iter().all(|&(i, j)| i < j));
        let max_degree = (0..50)
            .map(|v| g.parents(v).len() + g.children(v).len())
            .max()
            .unwrap();
        assert!(max_degree > 8, "hub degree {max_degree}");
    }

    #[test]
    fn sf_boundary_violation() {
        assert!(matches!(generate_sf_dag(10, 9, 5), Err(Error::InvalidArgument(_))));
        assert!(matches!(generate_sf_dag(10, 0, 5), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn chain_shapes() {
        assert_eq!(make_chain(1).edge_count(), 0);
        assert_eq!(make_chain(3).edges(), &[(0, 1), (1, 2)]);
        let c = make_chain(30);
        assert_eq!(c.edge_count(), 29);
        assert_eq!(c.topological_order(), (0..30).collect::<Vec<_>>().as_slice());
    }

    #[test]
    fn weights_respect_ranges() {
        let w = sample_edge_weights(make_chain(3), WeightRanges::default(), 11).unwrap();
        assert_eq!(w.weights().len(), 2);
        for &v in w.weights().values() {
            assert!((0.5..=2.0).contains(&v.abs()));
        }
        let empty = sample_edge_weights(make_chain(1), WeightRanges::default(), 11).unwrap();
        assert!(empty.weights().is_empty());
    }

    #[test]
    fn weight_sign_balance() {
        let d = 200;
        let g = generate_er_dag(d, 10_000, 4).unwrap();
        let w = sample_edge_weights(g, WeightRanges::default(), 4).unwrap();
        let positive = w.weights().values().filter(|&&v| v > 0.0).count();
        let frac = positive as f64 / 10_000.0;
        assert!((frac - 0.5).abs() < 0.02, "{frac}");
    }

    #[test]
    fn weight_range_containing_zero_is_rejected() {
        let bad = WeightRanges {
            negative: (-1.0, 0.5),
            positive: (0.5, 2.0),
            positive_fraction: 0.5,
        };
        assert!(matches!(
            sample_edge_weights(make_chain(3), bad, 0),
            Err(Error::InvalidArgument(_))
        ));
        let all_positive = sample_edge_weights(make_chain(200), WeightRanges::activating(), 1).unwrap();
        assert!(all_positive.weights().values().all(|&w| (0.5..2.0).contains(&w)));
    }

    #[test]
    fn topological_order_cases() {
        let chain = make_chain(4);
        assert_eq!(chain.topological_order(), &[0, 1, 2, 3]);
        assert_eq!(topological_order(3, &[(2, 0), (2, 1)]).unwrap(), vec![2, 0, 1]);
        match Dag::new(2, vec![(0, 1), (1, 0)]) {
            Err(Error::CyclicGraph { from, to }) => {
                assert!((from, to) == (0, 1) || (from, to) == (1, 0));
            }
            other => panic!("expected cycle error, got {other:?}"),
        }
    }

    #[test]
    fn cycle_error_names_an_edge_on_the_cycle() {
        let edges = [(0, 1), (1, 2), (2, 3), (3, 1), (0, 4)];
        match topological_order(5, &edges) {
            Err(Error::CyclicGraph { from, to }) => {
                assert!([(1, 2), (2, 3), (3, 1)].contains(&(from, to)));
            }
            other => panic!("expected cycle error, got {other:?}"),
        }
    }

    #[test]
    fn dag_rejects_self_loops_and_duplicates() {
        assert!(Dag::new(2, vec![(0, 0)]).is_err());
        assert!(Dag::new(2, vec![(0, 1), (0, 1)]).is_err());
        assert!(Dag::new(2, vec![(0, 2)]).is_err());
    }

    #[test]
    fn reachability_chain_and_empty() {
        let r = reachability_by_length(&make_chain(3));
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].pairs().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
        assert_eq!(r[1].pairs().collect::<Vec<_>>(), vec![(0, 2)]);
        let empty = Dag::new(4, vec![]).unwrap();
        assert!(reachability_by_length(&empty).iter().all(BoolMatrix::is_empty));
    }

    #[test]
    fn reachability_diamond_collapses_multiplicity() {
        let g = Dag::new(4, vec![(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        let r = reachability_by_length(&g);
        assert_eq!(r[1].pairs().collect::<Vec<_>>(), vec![(0, 3)]);
        assert_eq!(r[1].count(), 1);
        assert!(r[2].is_empty());
    }

    #[test]
    fn reachability_matches_brute_force() {
        for d in 1..=6 {
            let max = d * (d - 1) / 2;
            for m in 0..=max {
                let g = generate_er_dag(d, m, (d * 100 + m) as u64).unwrap();
                let r = reachability_by_length(&g);
                for (k, rk) in r.iter().enumerate() {
                    for i in 0..d {
                        for j in 0..d {
                            assert_eq!(rk.get(i, j), walk_exists(&g, i, j, k + 1));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn intervention_labels_round_trip() {
        let names: Vec<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
        let spec = InterventionSpec::new([(0, 0.0), (2, 1.5)]).unwrap();
        let label = spec.label(&names);
        assert_eq!(label, "do:A=0;C=1.5");
        assert_eq!(InterventionSpec::parse_label(&label, &names).unwrap(), spec);
        assert_eq!(InterventionSpec::parse_label("B=3", &names).unwrap(), InterventionSpec::single(1, 3.0));
        assert!(InterventionSpec::parse_label("obs", &names).unwrap().is_observational());
        assert!(InterventionSpec::parse_label("do:Z=1", &names).is_err());
        assert!(InterventionSpec::parse_label("do:A=-1", &names).is_err());
    }

    #[test]
    fn descendants_of_chain_prefix() {
        let g = make_chain(4);
        assert_eq!(g.descendants(1), vec![false, false, true, true]);
    }
}
