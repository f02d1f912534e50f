//! Colored neighborhood statistics: canonical rooted colored balls, their
//! empirical distributions, and the distances built on them.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::RegularGraph;
use crate::rng::{replica_rng, sub_seed};

/// Largest non-tree ball handled by the backtracking canonicalizer.
pub const MAX_BALL_VERTICES: usize = 200;
/// Largest tree ball handled by the rooted-tree encoder.
pub const MAX_TREE_BALL_VERTICES: usize = 1_000_000;
const MAX_SEARCH_LEAVES: usize = 500_000;

/// A rooted, vertex-colored multigraph. `adj[u]` lists `(w, m)`: `m`
/// half-edges from `u` to `w`, so loops are stored with even `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedColoredGraph {
    pub root: usize,
    pub colors: Vec<u32>,
    pub adj: Vec<Vec<(usize, u32)>>,
}

impl RootedColoredGraph {
    /// From an undirected edge list; a loop `(v, v)` adds two half-edges at `v`.
    pub fn from_edges(root: usize, colors: Vec<u32>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = colors.len();
        if root >= n {
            return Err(Error::InvalidGraph("root out of range".into()));
        }
        let mut mult: Vec<BTreeMap<usize, u32>> = vec![BTreeMap::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!("edge ({u},{v}) out of range")));
            }
            *mult[u].entry(v).or_default() += 1;
            *mult[v].entry(u).or_default() += 1;
        }
        let adj = mult.into_iter().map(|m| m.into_iter().collect()).collect();
        Ok(Self { root, colors, adj })
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    fn is_tree(&self) -> bool {
        let mut half_edges = 0u64;
        for (u, nb) in self.adj.iter().enumerate() {
            for &(w, m) in nb {
                if w == u || m > 1 {
                    return false;
                }
                half_edges += m as u64;
            }
        }
        half_edges == 2 * (self.len() as u64 - 1) && self.connected()
    }

    fn connected(&self) -> bool {
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([self.root]);
        seen[self.root] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &(w, _) in &self.adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.len()
    }
}

/// Canonical byte code of a rooted colored graph; equal codes exactly
/// when the graphs are isomorphic by a root- and color-preserving map.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalBall(pub Vec<u8>);

impl Serialize for CanonicalBall {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.hex())
    }
}

impl CanonicalBall {
    pub fn hex(&self) -> String {
        self.0.iter().fold(String::with_capacity(2 * self.0.len()), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

pub fn canonical_ball(ball: &RootedColoredGraph) -> Result<CanonicalBall> {
    if ball.is_empty() {
        return Err(Error::InvalidGraph("empty ball".into()));
    }
    if ball.is_tree() {
        if ball.len() > MAX_TREE_BALL_VERTICES {
            return Err(Error::Budget(format!("tree ball with {} vertices", ball.len())));
        }
        let mut code = vec![b'T'];
        encode_tree(ball, ball.root, usize::MAX, &mut code);
        return Ok(CanonicalBall(code));
    }
    if ball.len() > MAX_BALL_VERTICES {
        return Err(Error::Budget(format!("ball with {} vertices exceeds {MAX_BALL_VERTICES}", ball.len())));
    }
    let init: Vec<(u8, u32)> = (0..ball.len()).map(|v| (u8::from(v != ball.root), ball.colors[v])).collect();
    let mut cells = rank(&init);
    refine(&ball.adj, &mut cells);
    let mut search = Search { ball, best: None, leaves: 0 };
    search.run(cells)?;
    let mut code = vec![b'G'];
    code.extend(search.best.expect("search visits at least one leaf"));
    Ok(CanonicalBall(code))
}

fn encode_tree(ball: &RootedColoredGraph, v: usize, parent: usize, out: &mut Vec<u8>) {
    out.push(b'(');
    out.extend_from_slice(&ball.colors[v].to_le_bytes());
    let mut kids: Vec<Vec<u8>> = ball.adj[v]
        .iter()
        .filter(|&&(w, _)| w != parent)
        .map(|&(w, _)| {
            let mut c = Vec::new();
            encode_tree(ball, w, v, &mut c);
            c
        })
        .collect();
    kids.sort_unstable();
    kids.iter().for_each(|c| out.extend_from_slice(c));
    out.push(b')');
}

fn rank<K: Ord + Clone>(keys: &[K]) -> Vec<u32> {
    let sorted: Vec<K> = keys.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    keys.iter().map(|k| sorted.binary_search(k).expect("key present") as u32).collect()
}

fn cell_count(cells: &[u32]) -> usize {
    cells.iter().copied().max().map_or(0, |m| m as usize + 1)
}

/// Iterated color refinement: split cells by the multiset of neighbor
/// cells until stable. Cell ids stay ordered by the previous ids.
fn refine(adj: &[Vec<(usize, u32)>], cells: &mut Vec<u32>) {
    loop {
        let before = cell_count(cells);
        let sigs: Vec<(u32, Vec<(u32, u32)>)> = adj
            .iter()
            .enumerate()
            .map(|(u, nb)| {
                let mut s: Vec<(u32, u32)> = nb.iter().map(|&(w, m)| (cells[w], m)).collect();
                s.sort_unstable();
                (cells[u], s)
            })
            .collect();
        *cells = rank(&sigs);
        if cell_count(cells) == before {
            return;
        }
    }
}

struct Search<'a> {
    ball: &'a RootedColoredGraph,
    best: Option<Vec<u8>>,
    leaves: usize,
}

impl Search<'_> {
    fn run(&mut self, cells: Vec<u32>) -> Result<()> {
        let n = cells.len();
        if cell_count(&cells) == n {
            self.leaves += 1;
            if self.leaves > MAX_SEARCH_LEAVES {
                return Err(Error::Budget("canonical search exceeded its leaf budget".into()));
            }
            let code = self.leaf_code(&cells);
            if self.best.as_ref().map_or(true, |b| code < *b) {
                self.best = Some(code);
            }
            return Ok(());
        }
        let mut sizes = vec![0usize; cell_count(&cells)];
        cells.iter().for_each(|&c| sizes[c as usize] += 1);
        let target = sizes.iter().position(|&s| s > 1).expect("non-discrete partition") as u32;
        for u in (0..n).filter(|&u| cells[u] == target) {
            let keys: Vec<(u32, u8)> = (0..n).map(|w| (cells[w], u8::from(w != u))).collect();
            let mut next = rank(&keys);
            refine(&self.ball.adj, &mut next);
            self.run(next)?;
        }
        Ok(())
    }

    fn leaf_code(&self, cells: &[u32]) -> Vec<u8> {
        let n = cells.len();
        let mut order = vec![0usize; n];
        for (v, &c) in cells.iter().enumerate() {
            order[c as usize] = v;
        }
        let mut code = Vec::with_capacity(4 + 4 * n + n * n);
        code.extend_from_slice(&(n as u32).to_le_bytes());
        for &v in &order {
            code.extend_from_slice(&self.ball.colors[v].to_le_bytes());
        }
        for i in 0..n {
            let mut row = vec![0u32; n];
            for &(w, m) in &self.ball.adj[order[i]] {
                row[cells[w] as usize] = m;
            }
            for m in &row[i..] {
                code.extend_from_slice(&(*m as u16).to_le_bytes());
            }
        }
        code
    }
}

/// The radius-`r` ball around `root`: all vertices within distance `r`
/// and every edge among them, with multiplicities.
pub fn extract_ball(graph: &RegularGraph, coloring: &[usize], root: usize, r: usize) -> RootedColoredGraph {
    let mut local: BTreeMap<usize, usize> = BTreeMap::new();
    let mut order = vec![root];
    local.insert(root, 0);
    let mut frontier = vec![root];
    for _ in 0..r {
        let mut next = Vec::new();
        for &u in &frontier {
            for w in graph.neighbors(u) {
                if !local.contains_key(&w) {
                    local.insert(w, order.len());
                    order.push(w);
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    let adj = order
        .iter()
        .map(|&u| {
            let mut m: BTreeMap<usize, u32> = BTreeMap::new();
            for w in graph.neighbors(u) {
                if let Some(&lw) = local.get(&w) {
                    *m.entry(lw).or_default() += 1;
                }
            }
            m.into_iter().collect()
        })
        .collect();
    RootedColoredGraph { root: 0, colors: order.iter().map(|&u| coloring[u] as u32).collect(), adj }
}

/// Probability distribution over canonical balls.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BallDistribution {
    pub probs: BTreeMap<CanonicalBall, f64>,
}

impl BallDistribution {
    pub fn from_counts(counts: BTreeMap<CanonicalBall, usize>) -> Self {
        let total: usize = counts.values().sum();
        let probs = counts.into_iter().map(|(k, c)| (k, c as f64 / total as f64)).collect();
        Self { probs }
    }

    pub fn get(&self, code: &CanonicalBall) -> f64 {
        self.probs.get(code).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }

    /// `code-hex,probability` lines sorted by code.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("code,probability\n");
        for (k, p) in &self.probs {
            let _ = writeln!(out, "{},{p:.17}", k.hex());
        }
        out
    }

    fn key(&self) -> Vec<(CanonicalBall, u64)> {
        self.probs.iter().map(|(k, p)| (k.clone(), p.to_bits())).collect()
    }
}

/// Exact distribution of the colored radius-`r` ball around a uniform root.
pub fn ball_distribution(graph: &RegularGraph, coloring: &[usize], r: usize) -> Result<BallDistribution> {
    if coloring.len() != graph.n() {
        return Err(Error::InvalidParameter(format!(
            "coloring has {} entries for {} vertices",
            coloring.len(),
            graph.n()
        )));
    }
    let codes = (0..graph.n())
        .into_par_iter()
        .map(|v| canonical_ball(&extract_ball(graph, coloring, v, r)))
        .collect::<Result<Vec<_>>>()?;
    let mut counts = BTreeMap::new();
    for c in codes {
        *counts.entry(c).or_insert(0usize) += 1;
    }
    Ok(BallDistribution::from_counts(counts))
}

/// Total variation distance: half the L1 distance over the union support.
pub fn tv_distance(a: &BallDistribution, b: &BallDistribution) -> f64 {
    let mut sum = 0.0;
    for (k, p) in &a.probs {
        sum += (p - b.get(k)).abs();
    }
    for (k, q) in &b.probs {
        if !a.probs.contains_key(k) {
            sum += q;
        }
    }
    0.5 * sum
}

/// Hausdorff distance between finite sets of distributions under total
/// variation. An empty set is at distance 1 (the diameter) from a
/// nonempty one.
pub fn hausdorff_distance(a: &[BallDistribution], b: &[BallDistribution]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return 1.0,
        _ => {}
    }
    let directed = |x: &[BallDistribution], y: &[BallDistribution]| {
        x.par_iter()
            .map(|p| y.iter().map(|q| tv_distance(p, q)).fold(f64::INFINITY, f64::min))
            .reduce(|| 0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DcnMode {
    /// Every coloring enumerated for every term.
    Exact,
    /// Some term used a shared random sample of colorings; those terms are
    /// lower bounds on the true Hausdorff distance.
    Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DcnOptions {
    pub r_max: usize,
    pub k_max: usize,
    /// Enumerate all colorings when `k^n` is at most this.
    pub coloring_budget: u64,
    /// Colorings drawn per color count in estimate mode.
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DcnTerm {
    pub k: usize,
    pub r: usize,
    pub hausdorff: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DcnReport {
    pub value: f64,
    pub mode: DcnMode,
    /// Bound on the omitted tail of the double series.
    pub tail_bound: f64,
    pub terms: Vec<DcnTerm>,
}

/// Truncated colored neighborhood distance
/// `sum_{k<=k_max} sum_{r<=r_max} 2^{-k-r} d_H(Q_{r,G,k}, Q_{r,G',k})`.
pub fn dcn_estimate(g1: &RegularGraph, g2: &RegularGraph, opts: &DcnOptions) -> Result<DcnReport> {
    if opts.r_max == 0 || opts.k_max == 0 {
        return Err(Error::InvalidParameter("need r_max >= 1 and k_max >= 1".into()));
    }
    let mut terms = Vec::new();
    let mut all_exact = true;
    for k in 1..=opts.k_max {
        let exact = [g1.n(), g2.n()].iter().all(|&n| {
            (k as f64).powi(n as i32) <= opts.coloring_budget as f64
        });
        all_exact &= exact;
        let colorings = |n: usize, stream: u64| -> Vec<Vec<usize>> {
            if exact {
                all_colorings(n, k)
            } else {
                let mut rng = replica_rng(sub_seed(opts.seed, k as u64), stream);
                (0..opts.samples).map(|_| (0..n).map(|_| rng.gen_range(0..k)).collect()).collect()
            }
        };
        // equal vertex counts share the very same sample
        let c1 = colorings(g1.n(), 0);
        let c2 = if g2.n() == g1.n() { c1.clone() } else { colorings(g2.n(), 1) };
        for r in 1..=opts.r_max {
            let q1 = statistic_set(g1, &c1, r)?;
            let q2 = statistic_set(g2, &c2, r)?;
            terms.push(DcnTerm { k, r, hausdorff: hausdorff_distance(&q1, &q2), exact });
        }
    }
    let value = terms.iter().map(|t| t.hausdorff * 0.5f64.powi((t.k + t.r) as i32)).sum();
    Ok(DcnReport {
        value,
        mode: if all_exact { DcnMode::Exact } else { DcnMode::Estimate },
        tail_bound: 0.5f64.powi(opts.r_max as i32) + 0.5f64.powi(opts.k_max as i32),
        terms,
    })
}

/// Every map `0..n -> 0..k`, in lexicographic order.
pub fn all_colorings(n: usize, k: usize) -> Vec<Vec<usize>> {
    let total = k.checked_pow(n as u32).expect("coloring count overflows");
    (0..total)
        .map(|mut idx| {
            (0..n)
                .map(|_| {
                    let c = idx % k;
                    idx /= k;
                    c
                })
                .collect()
        })
        .collect()
}

/// The set `{mu_{r,G,f}}` over the given colorings, deduplicated.
fn statistic_set(graph: &RegularGraph, colorings: &[Vec<usize>], r: usize) -> Result<Vec<BallDistribution>> {
    let dists = colorings
        .par_iter()
        .map(|f| ball_distribution(graph, f, r))
        .collect::<Result<Vec<_>>>()?;
    let mut seen = BTreeSet::new();
    Ok(dists.into_iter().filter(|d| seen.insert(d.key())).collect())
}

/// Bound on the total variation between ball statistics of two graphs
/// on `n` vertices differing in `changed_edges` edges.
pub fn edge_change_tv_bound(d: usize, r: usize, n: usize, changed_edges: usize) -> f64 {
    changed_edges as f64 * 2.0 * ((d + 1) as f64).powi(r as i32) / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{complete_bipartite, complete_graph, cycle_graph};

    fn star(colors: Vec<u32>, root: usize, edges: &[(usize, usize)]) -> CanonicalBall {
        canonical_ball(&RootedColoredGraph::from_edges(root, colors, edges).unwrap()).unwrap()
    }

    #[test]
    fn star_orderings_agree() {
        let a = star(vec![0, 1, 2, 2], 0, &[(0, 1), (0, 2), (0, 3)]);
        let b = star(vec![2, 2, 1, 0], 3, &[(3, 0), (3, 2), (3, 1)]);
        assert_eq!(a, b);
        let c = star(vec![0, 2, 1, 2], 0, &[(0, 1), (0, 2), (0, 3)]);
        assert_eq!(a, c);
        let d = star(vec![0, 1, 1, 2], 0, &[(0, 1), (0, 2), (0, 3)]);
        assert_ne!(a, d);
    }

    #[test]
    fn path_root_matters() {
        let end = star(vec![0; 3], 0, &[(0, 1), (1, 2)]);
        let mid = star(vec![0; 3], 1, &[(0, 1), (1, 2)]);
        assert_ne!(end, mid);
    }

    #[test]
    fn cyclic_balls_canonicalize() {
        // a 4-cycle with a chord, relabeled
        let e1 = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)];
        let perm = [2, 0, 3, 1];
        let e2: Vec<(usize, usize)> = e1.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
        let colors1 = vec![0, 1, 0, 1];
        let mut colors2 = vec![0; 4];
        for v in 0..4 {
            colors2[perm[v]] = colors1[v];
        }
        assert_eq!(star(colors1.clone(), 0, &e1), star(colors2, perm[0], &e2));
        // root on a chord endpoint vs not
        assert_ne!(star(colors1.clone(), 0, &e1), star(colors1, 1, &e1));
        // loop vs double edge are different
        assert_ne!(star(vec![0, 0], 0, &[(0, 0), (0, 1)]), star(vec![0, 0], 0, &[(0, 1), (0, 1)]));
    }

    #[test]
    fn symmetric_ball_search_is_exact() {
        let g = complete_bipartite(3).unwrap();
        let a = extract_ball(&g, &[0, 0, 0, 1, 1, 1], 0, 2);
        let b = extract_ball(&g, &[0, 0, 0, 1, 1, 1], 1, 2);
        assert_eq!(canonical_ball(&a).unwrap(), canonical_ball(&b).unwrap());
    }

    #[test]
    fn radius_zero_is_color_law() {
        let g = cycle_graph(5).unwrap();
        let dist = ball_distribution(&g, &[0, 1, 1, 0, 1], 0).unwrap();
        let probs: Vec<f64> = dist.probs.values().copied().collect();
        assert_eq!(probs, vec![0.4, 0.6]);
    }

    #[test]
    fn large_girth_monochromatic_is_point_mass() {
        let g = cycle_graph(9).unwrap();
        let dist = ball_distribution(&g, &[0; 9], 3).unwrap();
        assert_eq!(dist.len(), 1);
    }

    #[test]
    fn tv_hand_example() {
        let x = CanonicalBall(vec![1]);
        let y = CanonicalBall(vec![2]);
        let a = BallDistribution { probs: [(x.clone(), 0.6), (y.clone(), 0.4)].into() };
        let b = BallDistribution { probs: [(x, 0.4), (y, 0.6)].into() };
        assert!((tv_distance(&a, &b) - 0.2).abs() < 1e-15);
        assert!((hausdorff_distance(&[a.clone()], &[b.clone()]) - 0.2).abs() < 1e-15);
        assert_eq!(hausdorff_distance(&[a.clone(), b.clone()], &[b, a]), 0.0);
    }

    #[test]
    fn dcn_of_isomorphic_graphs_is_zero() {
        let g = complete_graph(4).unwrap();
        let h = RegularGraph::from_edges(4, &[(3, 2), (3, 1), (3, 0), (2, 1), (2, 0), (1, 0)]).unwrap();
        let opts = DcnOptions { r_max: 2, k_max: 2, coloring_budget: 1 << 12, samples: 0, seed: 0 };
        let rep = dcn_estimate(&g, &h, &opts).unwrap();
        assert_eq!(rep.mode, DcnMode::Exact);
        assert_eq!(rep.value, 0.0);
        assert_eq!(rep.tail_bound, 0.5);
    }

    #[test]
    fn csv_is_sorted_hex() {
        let g = cycle_graph(4).unwrap();
        let csv = ball_distribution(&g, &[0, 1, 0, 1], 1).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "code,probability");
        assert_eq!(lines.len(), 3);
        assert!(lines[1] < lines[2]);
    }
}
