//! Finite `d`-regular multigraphs in half-edge form, the pairing model,
//! perfect-matching counts, short-cycle statistics and the
//! eigenvector-quantization experiment.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::local_stats::{ball_distribution, BallDistribution};

/// Default number of pairing attempts when sampling simple graphs.
pub const DEFAULT_RETRY_BUDGET: usize = 10_000;

/// A `d`-regular multigraph: `n * d` half-edge slots (slot `i` belongs to
/// vertex `i / d`) joined by a fixed-point-free involution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegularGraph {
    n: usize,
    d: usize,
    pairing: Vec<u32>,
    simple: bool,
}

impl RegularGraph {
    /// Builds a graph from its pairing, validating the involution.
    pub fn from_pairing(n: usize, d: usize, pairing: Vec<u32>) -> Result<Self> {
        if pairing.len() != n * d {
            return Err(Error::InvalidGraph(format!("pairing has {} slots, expected {}", pairing.len(), n * d)));
        }
        for (i, &j) in pairing.iter().enumerate() {
            let j = j as usize;
            if j >= pairing.len() || j == i || pairing[j] as usize != i {
                return Err(Error::InvalidGraph(format!("slot {i} is not properly paired")));
            }
        }
        let mut g = Self { n, d, pairing, simple: false };
        g.simple = g.compute_simple();
        Ok(g)
    }

    /// Builds a graph from an edge list; loops `(v, v)` and repeated edges
    /// are allowed. Every vertex must end up with the same degree.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut deg = vec![0usize; n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!("edge ({u},{v}) out of range")));
            }
            deg[u] += 1;
            deg[v] += 1;
        }
        let d = deg.first().copied().unwrap_or(0);
        if n == 0 || deg.iter().any(|&x| x != d) {
            return Err(Error::InvalidGraph("graph is not regular".into()));
        }
        let mut next = vec![0usize; n];
        let mut pairing = vec![0u32; n * d];
        for &(u, v) in edges {
            let su = u * d + next[u];
            next[u] += 1;
            let sv = v * d + next[v];
            next[v] += 1;
            pairing[su] = sv as u32;
            pairing[sv] = su as u32;
        }
        Self::from_pairing(n, d, pairing)
    }

    fn compute_simple(&self) -> bool {
        (0..self.n).all(|v| {
            let mut nb: Vec<usize> = self.neighbors(v).collect();
            nb.sort_unstable();
            nb.iter().all(|&w| w != v) && nb.windows(2).all(|w| w[0] != w[1])
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_simple(&self) -> bool {
        self.simple
    }

    pub fn pairing(&self) -> &[u32] {
        &self.pairing
    }

    /// Neighbors of `v`, one entry per half-edge; a loop lists `v` twice.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        (v * self.d..(v + 1) * self.d).map(move |s| self.pairing[s] as usize / self.d)
    }

    /// Number of half-edges at `s` leading to `t` (a loop counts twice).
    pub fn multiplicity(&self, s: usize, t: usize) -> usize {
        self.neighbors(s).filter(|&w| w == t).count()
    }

    /// Edges as `(u, v)` with `u <= v`, one entry per edge, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = (0..self.pairing.len())
            .filter(|&i| i < self.pairing[i] as usize)
            .map(|i| {
                let a = i / self.d;
                let b = self.pairing[i] as usize / self.d;
                (a.min(b), a.max(b))
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for w in self.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.n
    }

    /// Replaces edges `{a, b}` and `{c, e}` (given by half-edge slots
    /// `s1`, `s2`) with `{a, c}` and `{b, e}`.
    pub fn swap_edges(&self, s1: usize, s2: usize) -> Result<Self> {
        let len = self.pairing.len();
        if s1 >= len || s2 >= len {
            return Err(Error::InvalidParameter("slot out of range".into()));
        }
        let p1 = self.pairing[s1] as usize;
        let p2 = self.pairing[s2] as usize;
        if s1 == s2 || p1 == s2 {
            return Err(Error::InvalidParameter("swap needs two distinct edges".into()));
        }
        let mut pairing = self.pairing.clone();
        pairing[s1] = s2 as u32;
        pairing[s2] = s1 as u32;
        pairing[p1] = p2 as u32;
        pairing[p2] = p1 as u32;
        Self::from_pairing(self.n, self.d, pairing)
    }

    /// Text format: `n d` header, then one `u v` line per edge.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.d);
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let parse_pair = |line: usize, l: &str| -> Result<(usize, usize)> {
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(Error::Parse { line, msg: "expected two integers".into() });
            }
            let a = toks[0].parse().map_err(|_| Error::Parse { line, msg: format!("bad integer {:?}", toks[0]) })?;
            let b = toks[1].parse().map_err(|_| Error::Parse { line, msg: format!("bad integer {:?}", toks[1]) })?;
            Ok((a, b))
        };
        let (line, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "missing header".into() })?;
        let (n, d) = parse_pair(line, header)?;
        let edges = lines.map(|(i, l)| parse_pair(i, l)).collect::<Result<Vec<_>>>()?;
        if edges.len() * 2 != n * d {
            return Err(Error::InvalidGraph(format!("{} edges do not fit n={n}, d={d}", edges.len())));
        }
        let g = Self::from_edges(n, &edges)?;
        if g.d != d {
            return Err(Error::InvalidGraph(format!("header degree {d} but edges give {}", g.d)));
        }
        Ok(g)
    }
}

/// Complete graph `K_n`.
pub fn complete_graph(n: usize) -> Result<RegularGraph> {
    let edges: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    RegularGraph::from_edges(n, &edges)
}

/// Complete bipartite graph `K_{m,m}`; vertices `0..m` form one side.
pub fn complete_bipartite(m: usize) -> Result<RegularGraph> {
    let edges: Vec<(usize, usize)> = (0..m).flat_map(|u| (m..2 * m).map(move |v| (u, v))).collect();
    RegularGraph::from_edges(2 * m, &edges)
}

pub fn cycle_graph(n: usize) -> Result<RegularGraph> {
    let edges: Vec<(usize, usize)> = (0..n).map(|u| (u, (u + 1) % n)).collect();
    RegularGraph::from_edges(n, &edges)
}

/// Uniform random `d`-regular multigraph from the pairing model; with
/// `simple`, pairings are redrawn until loop- and multi-edge-free, which
/// is uniform over simple graphs.
pub fn sample_regular_graph<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    simple: bool,
    retry_budget: usize,
    rng: &mut R,
) -> Result<RegularGraph> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidParameter("need n >= 1 and d >= 1".into()));
    }
    if (n * d) % 2 == 1 {
        return Err(Error::InvalidParameter(format!("n*d = {} is odd", n * d)));
    }
    let mut slots: Vec<u32> = (0..(n * d) as u32).collect();
    let attempts = if simple { retry_budget.max(1) } else { 1 };
    for _ in 0..attempts {
        slots.shuffle(rng);
        let mut pairing = vec![0u32; n * d];
        for pair in slots.chunks_exact(2) {
            pairing[pair[0] as usize] = pair[1];
            pairing[pair[1] as usize] = pair[0];
        }
        let g = RegularGraph::from_pairing(n, d, pairing)?;
        if !simple || g.is_simple() {
            return Ok(g);
        }
    }
    Err(Error::Budget(format!("no simple graph in {retry_budget} pairing attempts")))
}

/// Number of perfect matchings on `m` points: `(m-1)!!`, zero for odd `m`.
pub fn pm_count(m: usize) -> BigUint {
    if m % 2 == 1 {
        return BigUint::zero();
    }
    (1..m).step_by(2).fold(BigUint::one(), |acc, x| acc * BigUint::from(x))
}

/// Calls `f` on every perfect matching of `0..m`, as a partner array.
pub fn for_each_perfect_matching(m: usize, mut f: impl FnMut(&[usize])) {
    fn rec(partner: &mut [usize], f: &mut dyn FnMut(&[usize])) {
        let Some(first) = partner.iter().position(|&p| p == usize::MAX) else {
            f(partner);
            return;
        };
        for j in first + 1..partner.len() {
            if partner[j] == usize::MAX {
                partner[first] = j;
                partner[j] = first;
                rec(partner, f);
                partner[first] = usize::MAX;
                partner[j] = usize::MAX;
            }
        }
    }
    if m % 2 == 1 {
        return;
    }
    let mut partner = vec![usize::MAX; m];
    rec(&mut partner, &mut f);
}

/// Exact law of ordered color pairs, stored as a `k x k` matrix.
pub type PairLaw = Vec<Vec<Ratio<u64>>>;

/// Directed-edge color law of a matching: each edge contributes both
/// orientations with weight `1 / n` (so `1/2` of its edge mass each).
pub fn matching_pair_law(colors: &[usize], k: usize, partner: &[usize]) -> PairLaw {
    let n = colors.len() as u64;
    let mut law = vec![vec![Ratio::zero(); k]; k];
    for (x, &y) in partner.iter().enumerate() {
        law[colors[x]][colors[y]] += Ratio::new(1, n);
    }
    law
}

fn check_pair_law(nu: &PairLaw, k: usize) -> Result<()> {
    if nu.len() != k || nu.iter().any(|r| r.len() != k) {
        return Err(Error::InvalidDistribution("pair law must be k x k".into()));
    }
    for a in 0..k {
        for b in 0..k {
            if nu[a][b] != nu[b][a] {
                return Err(Error::InvalidDistribution(format!("pair law not symmetric at ({a},{b})")));
            }
        }
    }
    let total: Ratio<u64> = nu.iter().flatten().copied().sum();
    if total != Ratio::one() {
        return Err(Error::InvalidDistribution("pair law does not sum to 1".into()));
    }
    Ok(())
}

/// Largest point count for exhaustive matching enumeration.
pub const MAX_MATCHING_POINTS: usize = 12;

/// Number of perfect matchings of the colored points whose directed-edge
/// color law equals `nu` exactly, by exhaustive enumeration.
pub fn matching_color_count(colors: &[usize], nu: &PairLaw) -> Result<BigUint> {
    let n = colors.len();
    if n > MAX_MATCHING_POINTS {
        return Err(Error::Budget(format!("{n} points exceed the enumeration limit {MAX_MATCHING_POINTS}")));
    }
    let k = nu.len();
    if colors.iter().any(|&c| c >= k) {
        return Err(Error::InvalidParameter("color out of range of the pair law".into()));
    }
    check_pair_law(nu, k)?;
    let mut count = 0u64;
    for_each_perfect_matching(n, |partner| {
        if matching_pair_law(colors, k, partner) == *nu {
            count += 1;
        }
    });
    Ok(BigUint::from(count))
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, x| acc * BigUint::from(x))
}

/// Number of colorings of `n` points with exactly `counts[c]` points of
/// color `c`: the multinomial coefficient.
pub fn coloring_count(counts: &[usize]) -> BigUint {
    let n: usize = counts.iter().sum();
    counts.iter().fold(factorial(n), |acc, &c| acc / factorial(c))
}

/// Number of colorings of the endpoints of a fixed perfect matching on
/// `n` points whose directed-edge law is `nu`.
///
/// Each edge is either monochromatic `{a, a}` or bichromatic `{a, b}`
/// (two orientations); the count is a multinomial over edge classes
/// times `2^{#bichromatic edges}`.
pub fn edge_coloring_count(nu: &PairLaw, n: usize) -> Result<BigUint> {
    let k = nu.len();
    check_pair_law(nu, k)?;
    if n % 2 == 1 {
        return Ok(BigUint::zero());
    }
    let mut classes = Vec::new();
    let mut bichromatic = 0usize;
    for a in 0..k {
        for b in a..k {
            // directed count N(a,b) = nu(a,b) * n
            let directed = nu[a][b] * Ratio::from_integer(n as u64);
            if !directed.is_integer() {
                return Ok(BigUint::zero());
            }
            let directed = directed.to_integer() as usize;
            let edges = if a == b {
                if directed % 2 == 1 {
                    return Ok(BigUint::zero());
                }
                directed / 2
            } else {
                bichromatic += directed;
                directed
            };
            classes.push(edges);
        }
    }
    Ok(coloring_count(&classes) << bichromatic)
}

/// Color counts of a coloring.
pub fn color_counts(colors: &[usize], k: usize) -> Vec<usize> {
    let mut c = vec![0; k];
    colors.iter().for_each(|&x| c[x] += 1);
    c
}

/// Fraction of vertices lying on a cycle of length at most `max_len`.
pub fn girth_profile(graph: &RegularGraph, max_len: usize) -> f64 {
    let on_cycle = (0..graph.n())
        .filter(|&v| shortest_cycle_through(graph, v, max_len).is_some())
        .count();
    on_cycle as f64 / graph.n() as f64
}

/// Length of the shortest cycle through `v` if it is at most `max_len`.
///
/// Breadth-first search from `v` tagging every vertex with the half-edge
/// of `v` it descends from; an edge joining two different tags closes a
/// cycle through `v`.
pub fn shortest_cycle_through(graph: &RegularGraph, v: usize, max_len: usize) -> Option<usize> {
    const ROOT: usize = usize::MAX;
    let d = graph.d();
    let mut dist: BTreeMap<usize, (usize, usize)> = BTreeMap::new(); // vertex -> (dist, branch)
    dist.insert(v, (0, ROOT));
    let mut best = usize::MAX;
    let mut queue = VecDeque::new();
    // parent slot used to reach each vertex, so the tree edge is not reused
    let mut via: BTreeMap<usize, usize> = BTreeMap::new();
    for s in v * d..(v + 1) * d {
        let ps = graph.pairing()[s] as usize;
        let w = ps / d;
        if w == v {
            best = best.min(1);
            continue;
        }
        match dist.get(&w) {
            Some(&(_, b)) if b != s => best = best.min(2),
            Some(_) => {}
            None => {
                dist.insert(w, (1, s));
                via.insert(w, ps);
                queue.push_back(w);
            }
        }
    }
    while let Some(x) = queue.pop_front() {
        let (dx, bx) = dist[&x];
        // anything found from here on has length at least 2 * dx
        if 2 * dx > max_len || 2 * dx >= best {
            break;
        }
        for s in x * d..(x + 1) * d {
            if via.get(&x) == Some(&s) {
                continue;
            }
            let ps = graph.pairing()[s] as usize;
            let y = ps / d;
            if y == x {
                continue; // a loop at x is a cycle, but not through v
            }
            match dist.get(&y) {
                Some(&(dy, by)) => {
                    if by != bx {
                        best = best.min(dx + dy + 1);
                    }
                }
                None => {
                    if dx < max_len {
                        dist.insert(y, (dx + 1, bx));
                        via.insert(y, ps);
                        queue.push_back(y);
                    }
                }
            }
        }
    }
    (best <= max_len).then_some(best)
}

/// Adjacency eigenvalues in descending order.
pub fn adjacency_spectrum(graph: &RegularGraph) -> Vec<f64> {
    let eig = SymmetricEigen::new(adjacency_matrix(graph));
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    vals
}

fn adjacency_matrix(graph: &RegularGraph) -> DMatrix<f64> {
    let n = graph.n();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for v in 0..n {
        for w in graph.neighbors(v) {
            a[(v, w)] += 1.0;
        }
    }
    a
}

/// Quantization applied to the eigenvector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Levels {
    Exact,
    Quantized(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenReport {
    pub n: usize,
    pub d: usize,
    pub which: usize,
    pub eigenvalue: f64,
    pub levels: Levels,
    /// Distinct values of the quantized vector.
    pub centers: Vec<f64>,
    /// Index into `centers` per vertex (empty when not quantized).
    pub coloring: Vec<usize>,
    pub tolerance: f64,
    /// Fraction of vertices violating `lambda f(v) = sum_{w~v} f(w)`.
    pub error_ratio: f64,
}

/// Number of k-means restarts used by `eigen_experiment`.
pub const KMEANS_RESTARTS: usize = 50;

/// Computes the `which`-th largest adjacency eigenpair, optionally
/// quantizes the eigenvector to `levels` values by one-dimensional
/// k-means, and measures how often the eigenvector equation fails.
pub fn eigen_experiment<R: Rng + ?Sized>(
    graph: &RegularGraph,
    which: usize,
    levels: Levels,
    tolerance: f64,
    rng: &mut R,
) -> Result<EigenReport> {
    let n = graph.n();
    if !graph.is_simple() || !graph.is_connected() {
        return Err(Error::InvalidGraph("eigen experiment needs a simple connected graph".into()));
    }
    if which >= n {
        return Err(Error::InvalidParameter(format!("eigen index {which} out of range")));
    }
    if let Levels::Quantized(0) = levels {
        return Err(Error::InvalidParameter("need at least one level".into()));
    }
    let eig = SymmetricEigen::try_new(adjacency_matrix(graph), f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap_or(std::cmp::Ordering::Equal));
    let col = order[which];
    let lambda = eig.eigenvalues[col];
    let f: Vec<f64> = eig.eigenvectors.column(col).iter().copied().collect();
    let (values, centers, coloring) = match levels {
        Levels::Exact => (f.clone(), Vec::new(), Vec::new()),
        Levels::Quantized(m) => {
            let (centers, assign) = kmeans_1d(&f, m, KMEANS_RESTARTS, rng);
            let values = assign.iter().map(|&c| centers[c]).collect();
            (values, centers, assign)
        }
    };
    let bad = (0..n)
        .filter(|&v| {
            let s: f64 = graph.neighbors(v).map(|w| values[w]).sum();
            (lambda * values[v] - s).abs() > tolerance
        })
        .count();
    Ok(EigenReport {
        n,
        d: graph.d(),
        which,
        eigenvalue: lambda,
        levels,
        centers,
        coloring,
        tolerance,
        error_ratio: bad as f64 / n as f64,
    })
}

/// One-dimensional k-means (Lloyd iterations from k-means++ seeds), best
/// of `restarts` by within-cluster sum of squares. Centers are returned
/// sorted.
pub fn kmeans_1d<R: Rng + ?Sized>(xs: &[f64], m: usize, restarts: usize, rng: &mut R) -> (Vec<f64>, Vec<usize>) {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..restarts.max(1) {
        let mut centers = Vec::with_capacity(m);
        centers.push(xs[rng.gen_range(0..xs.len())]);
        while centers.len() < m {
            let d2: Vec<f64> = xs
                .iter()
                .map(|x| centers.iter().map(|c| (x - c).powi(2)).fold(f64::INFINITY, f64::min))
                .collect();
            let total: f64 = d2.iter().sum();
            if total == 0.0 {
                centers.push(xs[rng.gen_range(0..xs.len())]);
                continue;
            }
            let mut u = rng.gen::<f64>() * total;
            let pick = d2.iter().position(|&w| {
                u -= w;
                u < 0.0
            });
            centers.push(xs[pick.unwrap_or(xs.len() - 1)]);
        }
        for _ in 0..200 {
            let assign = assign_nearest(xs, &centers);
            let mut sums = vec![0.0; m];
            let mut counts = vec![0usize; m];
            for (x, &a) in xs.iter().zip(&assign) {
                sums[a] += x;
                counts[a] += 1;
            }
            let next: Vec<f64> = (0..m)
                .map(|c| if counts[c] > 0 { sums[c] / counts[c] as f64 } else { centers[c] })
                .collect();
            if next == centers {
                break;
            }
            centers = next;
        }
        let assign = assign_nearest(xs, &centers);
        let sse: f64 = xs.iter().zip(&assign).map(|(x, &a)| (x - centers[a]).powi(2)).sum();
        if best.as_ref().map_or(true, |(b, _)| sse < *b) {
            best = Some((sse, centers));
        }
    }
    let mut centers = best.expect("at least one restart").1;
    centers.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let assign = assign_nearest(xs, &centers);
    (centers, assign)
}

fn assign_nearest(xs: &[f64], centers: &[f64]) -> Vec<usize> {
    xs.iter()
        .map(|x| {
            (0..centers.len())
                .min_by(|&a, &b| {
                    (x - centers[a]).abs().partial_cmp(&(x - centers[b]).abs()).unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(0)
        })
        .collect()
}

/// Distribution of colored radius-`r` balls over all root choices.
pub fn bs_ball_sample(graph: &RegularGraph, coloring: &[usize], r: usize) -> Result<BallDistribution> {
    ball_distribution(graph, coloring, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replica_rng;

    #[test]
    fn pm_counts() {
        assert_eq!(pm_count(2), BigUint::from(1u32));
        assert_eq!(pm_count(4), BigUint::from(3u32));
        assert_eq!(pm_count(10), BigUint::from(945u32));
        assert_eq!(pm_count(5), BigUint::zero());
        let mut n = 0;
        for_each_perfect_matching(8, |_| n += 1);
        assert_eq!(BigUint::from(n as u32), pm_count(8));
    }

    #[test]
    fn two_color_matching_example() {
        // colors a a b b, only bichromatic edges: {0,2}{1,3} and {0,3}{1,2}
        let half = Ratio::new(1, 2);
        let nu = vec![vec![Ratio::zero(), half], vec![half, Ratio::zero()]];
        assert_eq!(matching_color_count(&[0, 0, 1, 1], &nu).unwrap(), BigUint::from(2u32));
        let mono = vec![vec![Ratio::one()]];
        assert_eq!(matching_color_count(&[0; 6], &mono).unwrap(), pm_count(6));
    }

    #[test]
    fn asymmetric_pair_law_rejected() {
        let nu = vec![vec![Ratio::zero(), Ratio::one()], vec![Ratio::zero(), Ratio::zero()]];
        assert!(matching_color_count(&[0, 1], &nu).is_err());
        assert!(matching_color_count(&[0; 14], &vec![vec![Ratio::one()]]).is_err());
    }

    #[test]
    fn k4_is_the_only_simple_cubic_graph_on_four_vertices() {
        let mut rng = replica_rng(11, 0);
        for _ in 0..20 {
            let g = sample_regular_graph(4, 3, true, DEFAULT_RETRY_BUDGET, &mut rng).unwrap();
            assert_eq!(g.edges(), complete_graph(4).unwrap().edges());
        }
    }

    #[test]
    fn two_vertex_cubic_multigraphs() {
        let mut rng = replica_rng(2, 0);
        let mut triple = 0;
        for _ in 0..200 {
            let g = sample_regular_graph(2, 3, false, 1, &mut rng).unwrap();
            assert!(!g.is_simple());
            if g.multiplicity(0, 1) == 3 {
                triple += 1;
            }
        }
        // 6 of the 15 pairings give the triple edge
        assert!(triple > 40 && triple < 120, "{triple}");
        assert!(sample_regular_graph(2, 3, true, 50, &mut rng).is_err());
    }

    #[test]
    fn odd_half_edge_count_rejected() {
        let mut rng = replica_rng(1, 0);
        assert!(matches!(sample_regular_graph(5, 3, false, 1, &mut rng), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn text_round_trip_with_loops() {
        let g = RegularGraph::from_edges(2, &[(0, 0), (0, 1), (1, 1)]).unwrap();
        assert_eq!(g.d(), 3);
        assert_eq!(g.multiplicity(0, 0), 2);
        let back = RegularGraph::parse(&g.to_text()).unwrap();
        assert_eq!(back.edges(), g.edges());
        assert!(RegularGraph::parse("3 2\n0 1\n").is_err());
        assert!(RegularGraph::parse("2 1\n0 x\n").is_err());
    }

    #[test]
    fn cycles_in_small_graphs() {
        let k4 = complete_graph(4).unwrap();
        assert_eq!(girth_profile(&k4, 3), 1.0);
        assert_eq!(girth_profile(&k4, 2), 0.0);
        let c6 = cycle_graph(6).unwrap();
        assert_eq!(girth_profile(&c6, 5), 0.0);
        assert_eq!(girth_profile(&c6, 6), 1.0);
        let k33 = complete_bipartite(3).unwrap();
        assert_eq!(shortest_cycle_through(&k33, 0, 10), Some(4));
        let multi = RegularGraph::from_edges(2, &[(0, 1), (0, 1), (0, 1)]).unwrap();
        assert_eq!(shortest_cycle_through(&multi, 0, 2), Some(2));
        let looped = RegularGraph::from_edges(2, &[(0, 0), (0, 1), (1, 1)]).unwrap();
        assert_eq!(shortest_cycle_through(&looped, 0, 1), Some(1));
    }

    #[test]
    fn perron_vector_is_constant() {
        let mut rng = replica_rng(4, 0);
        let g = complete_bipartite(3).unwrap();
        let r = eigen_experiment(&g, 0, Levels::Quantized(1), 1e-8, &mut rng).unwrap();
        assert!((r.eigenvalue - 3.0).abs() < 1e-10);
        assert_eq!(r.error_ratio, 0.0);
        let r = eigen_experiment(&g, 2, Levels::Exact, 1e-8, &mut rng).unwrap();
        assert_eq!(r.error_ratio, 0.0);
    }

    #[test]
    fn kmeans_separates_clusters() {
        let mut rng = replica_rng(8, 0);
        let xs = [0.0, 0.1, 0.05, 5.0, 5.1, 10.0];
        let (c, a) = kmeans_1d(&xs, 3, 10, &mut rng);
        assert_eq!(a, vec![0, 0, 0, 1, 1, 2]);
        assert!((c[0] - 0.05).abs() < 1e-12);
    }

    #[test]
    fn swap_preserves_regularity() {
        let g = complete_bipartite(3).unwrap();
        let h = g.swap_edges(0, 4).unwrap();
        assert_eq!(h.n(), 6);
        assert!((0..6).all(|v| h.neighbors(v).count() == 3));
        assert_ne!(g.edges(), h.edges());
    }
}
