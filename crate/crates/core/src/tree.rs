//! Finite truncated `d`-regular trees, configurations on them, and
//! branching Markov chains.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::dist::{self, CumulativeTable};
use crate::error::{Error, Result};
use crate::kernel::TransitionKernel;
use crate::rng::replica_rng;
use crate::scalar::Scalar;
use crate::stats::Estimate;

/// Default cap on the number of tree vertices.
pub const MAX_TREE_VERTICES: usize = 20_000_000;

/// Largest joint table `exact_bmc_marginals` will allocate.
pub const MAX_MARGINAL_TABLE: usize = 10_000_000;

/// Ball of radius `depth` around the root of the `d`-regular tree.
///
/// Vertices are numbered breadth first; the root is 0 and the children of
/// every vertex are contiguous.
#[derive(Debug, Clone)]
pub struct TruncatedTree {
    d: usize,
    depth: usize,
    parent: Vec<u32>,
    level: Vec<u16>,
    first_child: Vec<u32>,
    child_count: Vec<u32>,
    level_start: Vec<usize>,
    // closed radius-2 balls (excluding the center), CSR layout
    ball_offsets: Vec<u32>,
    ball: Vec<u32>,
}

// the whole structure is determined by `d` and `depth`
impl PartialEq for TruncatedTree {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.depth == other.depth
    }
}

const NO_PARENT: u32 = u32::MAX;

/// `1 + d ((d-1)^R - 1) / (d-2)` computed level by level.
pub fn tree_vertex_count(d: usize, depth: usize) -> Option<usize> {
    let mut total: usize = 1;
    let mut level: usize = 1;
    for r in 0..depth {
        level = level.checked_mul(if r == 0 { d } else { d - 1 })?;
        total = total.checked_add(level)?;
    }
    Some(total)
}

impl TruncatedTree {
    pub fn build(d: usize, depth: usize) -> Result<Self> {
        Self::build_with_budget(d, depth, MAX_TREE_VERTICES)
    }

    pub fn build_with_budget(d: usize, depth: usize, budget: usize) -> Result<Self> {
        if d < 3 {
            return Err(Error::InvalidParameter(format!("tree degree {d} must be >= 3")));
        }
        if depth < 1 {
            return Err(Error::InvalidParameter("tree depth must be >= 1".into()));
        }
        let n = tree_vertex_count(d, depth)
            .filter(|&n| n <= budget && n < u32::MAX as usize)
            .ok_or_else(|| {
                Error::Budget(format!("tree with d={d}, depth={depth} exceeds {budget} vertices"))
            })?;
        let mut parent = Vec::with_capacity(n);
        let mut level = Vec::with_capacity(n);
        let mut first_child = vec![0u32; n];
        let mut child_count = vec![0u32; n];
        let mut level_start = vec![0usize];
        parent.push(NO_PARENT);
        level.push(0u16);
        let mut lo = 0usize;
        for r in 0..depth {
            let hi = parent.len();
            level_start.push(hi);
            for v in lo..hi {
                let c = if r == 0 { d } else { d - 1 };
                first_child[v] = parent.len() as u32;
                child_count[v] = c as u32;
                for _ in 0..c {
                    parent.push(v as u32);
                    level.push((r + 1) as u16);
                }
            }
            lo = hi;
        }
        level_start.push(parent.len());
        debug_assert_eq!(parent.len(), n);
        let mut tree = Self {
            d,
            depth,
            parent,
            level,
            first_child,
            child_count,
            level_start,
            ball_offsets: Vec::new(),
            ball: Vec::new(),
        };
        tree.build_balls();
        Ok(tree)
    }

    fn build_balls(&mut self) {
        let n = self.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut ball = Vec::with_capacity(n * (self.d * self.d));
        offsets.push(0u32);
        let mut scratch = Vec::new();
        for v in 0..n {
            scratch.clear();
            for u in self.neighbors(v) {
                scratch.push(u as u32);
                for w in self.neighbors(u) {
                    if w != v {
                        scratch.push(w as u32);
                    }
                }
            }
            ball.extend_from_slice(&scratch);
            offsets.push(ball.len() as u32);
        }
        self.ball_offsets = offsets;
        self.ball = ball;
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        let p = self.parent[v];
        (p != NO_PARENT).then_some(p as usize)
    }

    pub fn level(&self, v: usize) -> usize {
        self.level[v] as usize
    }

    pub fn children(&self, v: usize) -> std::ops::Range<usize> {
        let a = self.first_child[v] as usize;
        a..a + self.child_count[v] as usize
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.parent(v).into_iter().chain(self.children(v))
    }

    pub fn degree(&self, v: usize) -> usize {
        self.child_count[v] as usize + usize::from(v != 0)
    }

    /// True when all `d` neighbors of `v` lie in the truncated tree.
    pub fn is_full(&self, v: usize) -> bool {
        self.level(v) < self.depth
    }

    /// Vertices of depth exactly `r`.
    pub fn level_range(&self, r: usize) -> std::ops::Range<usize> {
        self.level_start[r]..self.level_start[r + 1]
    }

    /// Vertices of depth at most `r`, a prefix in breadth-first order.
    pub fn window(&self, r: usize) -> std::ops::Range<usize> {
        0..self.level_start[r.min(self.depth) + 1]
    }

    /// The radius-2 ball around `v`, without `v` itself.
    pub fn ball2(&self, v: usize) -> &[u32] {
        &self.ball[self.ball_offsets[v] as usize..self.ball_offsets[v + 1] as usize]
    }

    /// Leftmost descendant of the root at depth `r`.
    pub fn leftmost_at(&self, r: usize) -> usize {
        self.level_start[r.min(self.depth)]
    }

    /// Graph distance between two vertices.
    pub fn distance(&self, mut a: usize, mut b: usize) -> usize {
        let mut dist = 0;
        while self.level(a) > self.level(b) {
            a = self.parent[a] as usize;
            dist += 1;
        }
        while self.level(b) > self.level(a) {
            b = self.parent[b] as usize;
            dist += 1;
        }
        while a != b {
            a = self.parent[a] as usize;
            b = self.parent[b] as usize;
            dist += 2;
        }
        dist
    }
}

/// A state per tree vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    tree: Arc<TruncatedTree>,
    states: Vec<usize>,
}

impl Configuration {
    pub fn new(tree: Arc<TruncatedTree>, states: Vec<usize>) -> Result<Self> {
        if states.len() != tree.len() {
            return Err(Error::InvalidParameter(format!(
                "configuration has {} states for {} vertices",
                states.len(),
                tree.len()
            )));
        }
        Ok(Self { tree, states })
    }

    pub fn constant(tree: Arc<TruncatedTree>, state: usize) -> Self {
        let states = vec![state; tree.len()];
        Self { tree, states }
    }

    pub fn tree(&self) -> &Arc<TruncatedTree> {
        &self.tree
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn states_mut(&mut self) -> &mut [usize] {
        &mut self.states
    }

    pub fn get(&self, v: usize) -> usize {
        self.states[v]
    }

    /// Dump format: one `depth index state` line per vertex.
    pub fn dump(&self) -> String {
        let mut out = String::with_capacity(self.states.len() * 8);
        for (v, s) in self.states.iter().enumerate() {
            out.push_str(&format!("{} {} {}\n", self.tree.level(v), v, s));
        }
        out
    }

    /// Number of disagreeing vertices within depth `window`.
    pub fn disagreements(&self, other: &Configuration, window: usize) -> usize {
        self.tree
            .window(window)
            .filter(|&v| self.states[v] != other.states[v])
            .count()
    }
}

/// A real label per tree vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    tree: Arc<TruncatedTree>,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(tree: Arc<TruncatedTree>, values: Vec<f64>) -> Result<Self> {
        if values.len() != tree.len() {
            return Err(Error::InvalidParameter("label field length mismatch".into()));
        }
        Ok(Self { tree, values })
    }

    pub fn tree(&self) -> &Arc<TruncatedTree> {
        &self.tree
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Precomputed inverse-CDF tables for a kernel.
#[derive(Debug, Clone)]
pub struct KernelSampler {
    root: CumulativeTable,
    rows: Vec<CumulativeTable>,
}

impl KernelSampler {
    pub fn new<T: Scalar>(kernel: &TransitionKernel<T>) -> Self {
        Self {
            root: CumulativeTable::new(kernel.pi()),
            rows: (0..kernel.state_count())
                .map(|s| CumulativeTable::new(kernel.row(s)))
                .collect(),
        }
    }

    pub fn stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.root.sample(rng)
    }

    pub fn step<R: Rng + ?Sized>(&self, from: usize, rng: &mut R) -> usize {
        self.rows[from].sample(rng)
    }

    /// Fills `states` with a branching Markov chain sample in place.
    pub fn fill<R: Rng + ?Sized>(&self, tree: &TruncatedTree, states: &mut [usize], rng: &mut R) {
        states[0] = self.stationary(rng);
        for v in 1..tree.len() {
            let p = tree.parent[v] as usize;
            states[v] = self.step(states[p], rng);
        }
    }
}

/// Branching Markov chain: root drawn from the stationary law, then each
/// child drawn from its parent's row, conditionally independently.
pub fn sample_bmc<T: Scalar, R: Rng + ?Sized>(
    kernel: &TransitionKernel<T>,
    tree: &Arc<TruncatedTree>,
    rng: &mut R,
) -> Configuration {
    let sampler = KernelSampler::new(kernel);
    let mut states = vec![0; tree.len()];
    sampler.fill(tree, &mut states, rng);
    Configuration { tree: Arc::clone(tree), states }
}

/// I.i.d. states from `dist` at every vertex.
pub fn sample_iid<T: Scalar, R: Rng + ?Sized>(
    law: &[T],
    tree: &Arc<TruncatedTree>,
    rng: &mut R,
) -> Result<Configuration> {
    dist::validate(law, T::lit(1e-9))?;
    let table = CumulativeTable::new(law);
    let states = (0..tree.len()).map(|_| table.sample(rng)).collect();
    Ok(Configuration { tree: Arc::clone(tree), states })
}

/// I.i.d. uniform labels in `[0, 1)`.
pub fn sample_uniform_labels<R: Rng + ?Sized>(tree: &Arc<TruncatedTree>, rng: &mut R) -> RealField {
    let values = (0..tree.len()).map(|_| rng.gen::<f64>()).collect();
    RealField { tree: Arc::clone(tree), values }
}

/// Finite vertex patterns whose joint law is computed exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Pattern {
    Vertex,
    Edge,
    /// Center followed by `d` leaves.
    Star(usize),
}

impl Pattern {
    pub fn arity(&self) -> usize {
        match self {
            Pattern::Vertex => 1,
            Pattern::Edge => 2,
            Pattern::Star(d) => d + 1,
        }
    }
}

/// Joint law over ordered state tuples, indexed in base `k` with the
/// first coordinate most significant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointLaw<T: Scalar> {
    pub k: usize,
    pub arity: usize,
    pub probs: Vec<T>,
}

impl<T: Scalar> JointLaw<T> {
    pub fn index(&self, tuple: &[usize]) -> usize {
        tuple.iter().fold(0, |acc, &s| acc * self.k + s)
    }

    pub fn get(&self, tuple: &[usize]) -> T {
        self.probs[self.index(tuple)]
    }

    pub fn tuple(&self, mut index: usize) -> Vec<usize> {
        let mut t = vec![0; self.arity];
        for slot in t.iter_mut().rev() {
            *slot = index % self.k;
            index /= self.k;
        }
        t
    }

    /// Marginal law of coordinate `i`.
    pub fn marginal(&self, i: usize) -> Vec<T> {
        let mut m = vec![T::zero(); self.k];
        for (idx, &p) in self.probs.iter().enumerate() {
            let s = self.tuple(idx)[i];
            m[s] = m[s] + p;
        }
        m
    }

    /// Law of the tuple with coordinate `i` removed.
    pub fn drop_coordinate(&self, i: usize) -> JointLaw<T> {
        let arity = self.arity - 1;
        let mut out = JointLaw { k: self.k, arity, probs: vec![T::zero(); self.k.pow(arity as u32)] };
        for (idx, &p) in self.probs.iter().enumerate() {
            let mut t = self.tuple(idx);
            t.remove(i);
            let j = out.index(&t);
            out.probs[j] = out.probs[j] + p;
        }
        out
    }
}

/// Exact joint law of the branching Markov chain on a vertex, an edge, or
/// a star (center first).
pub fn exact_bmc_marginals<T: Scalar>(kernel: &TransitionKernel<T>, pattern: Pattern) -> Result<JointLaw<T>> {
    let k = kernel.state_count();
    let arity = pattern.arity();
    let size = (k as u128).checked_pow(arity as u32).unwrap_or(u128::MAX);
    if size > MAX_MARGINAL_TABLE as u128 {
        return Err(Error::Budget(format!("joint table of {size} entries is too large")));
    }
    let mut law = JointLaw { k, arity, probs: vec![T::zero(); size as usize] };
    for idx in 0..law.probs.len() {
        let t = law.tuple(idx);
        let center = t[0];
        law.probs[idx] = t[1..]
            .iter()
            .fold(kernel.pi()[center], |acc, &leaf| acc * kernel.q(center, leaf));
    }
    Ok(law)
}

fn check_encoding<T: Scalar>(kernel: &TransitionKernel<T>, encoding: &[f64]) -> Result<()> {
    if encoding.len() != kernel.state_count() {
        return Err(Error::InvalidParameter("encoding length differs from state count".into()));
    }
    let pi: Vec<f64> = kernel.pi().iter().map(|p| p.as_f64()).collect();
    let mean: f64 = pi.iter().zip(encoding).map(|(p, f)| p * f).sum();
    let var: f64 = pi.iter().zip(encoding).map(|(p, f)| p * (f - mean).powi(2)).sum();
    if var <= 1e-300 {
        return Err(Error::Degenerate("encoding has zero variance under pi".into()));
    }
    Ok(())
}

/// Exact correlation of `f(root)` and `f(w)` for `w` at distance `k`,
/// by applying the kernel `k` times to the encoding.
pub fn exact_correlation<T: Scalar>(kernel: &TransitionKernel<T>, encoding: &[f64], distance: usize) -> Result<T> {
    check_encoding(kernel, encoding)?;
    let n = kernel.state_count();
    let f: Vec<T> = encoding.iter().map(|&x| T::lit(x)).collect();
    let pi = kernel.pi();
    let mean: T = pi.iter().zip(&f).map(|(&p, &x)| p * x).sum();
    let centered: Vec<T> = f.iter().map(|&x| x - mean).collect();
    let var: T = pi.iter().zip(&centered).map(|(&p, &x)| p * x * x).sum();
    let mut g = centered.clone();
    for _ in 0..distance {
        g = (0..n)
            .map(|s| kernel.row(s).iter().zip(&g).map(|(&q, &x)| q * x).sum())
            .collect();
    }
    let cov: T = (0..n).map(|s| pi[s] * centered[s] * g[s]).sum();
    Ok(cov / var)
}

/// Monte Carlo Pearson correlation of the encoded states at distance
/// `distance`, with a delta-method standard error.
///
/// The pair is (root, leftmost descendant at depth `distance`); only the
/// path between them is sampled, since its law is the marginal of the
/// full branching chain.
pub fn estimate_correlation<T: Scalar>(
    kernel: &TransitionKernel<T>,
    distance: usize,
    encoding: &[f64],
    replicas: usize,
    seed: u64,
) -> Result<Estimate> {
    check_encoding(kernel, encoding)?;
    if replicas < 1000 {
        return Err(Error::InvalidParameter("correlation estimate needs >= 1000 replicas".into()));
    }
    if distance == 0 {
        return Ok(Estimate { mean: 1.0, stderr: 0.0 });
    }
    let sampler = KernelSampler::new(kernel);
    let pairs: Vec<(f64, f64)> = (0..replicas)
        .map(|r| {
            let mut rng = replica_rng(seed, r as u64);
            let root = sampler.stationary(&mut rng);
            let mut s = root;
            for _ in 0..distance {
                s = sampler.step(s, &mut rng);
            }
            (encoding[root], encoding[s])
        })
        .collect();
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sx = (pairs.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>() / n).sqrt();
    let sy = (pairs.iter().map(|p| (p.1 - my).powi(2)).sum::<f64>() / n).sqrt();
    if sx == 0.0 || sy == 0.0 {
        return Err(Error::Degenerate("sampled encodings have zero variance".into()));
    }
    let zs: Vec<(f64, f64)> = pairs.iter().map(|p| ((p.0 - mx) / sx, (p.1 - my) / sy)).collect();
    let r = zs.iter().map(|z| z.0 * z.1).sum::<f64>() / n;
    let influence: Vec<f64> = zs
        .iter()
        .map(|z| z.0 * z.1 - 0.5 * r * (z.0 * z.0 + z.1 * z.1))
        .collect();
    let se = Estimate::from_samples(&influence).stderr;
    Ok(Estimate { mean: r, stderr: se })
}

/// Correlation bound for factor of i.i.d. processes at distance `k` on
/// the `d`-regular tree: `(k + 1 - 2k/d) (d-1)^{-k/2}`.
pub fn cordec_bound(k: usize, d: usize) -> f64 {
    let kf = k as f64;
    let df = d as f64;
    (kf + 1.0 - 2.0 * kf / df) * (df - 1.0).powf(-kf / 2.0)
}

/// Outcome of comparing exact branching-chain correlations to the bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CordecVerdict {
    /// Smallest distance where `|corr| > bound`.
    Violates { witness: usize, correlation: f64, bound: f64 },
    Consistent { k_max: usize },
}

pub fn classify_cordec<T: Scalar>(
    kernel: &TransitionKernel<T>,
    d: usize,
    encoding: &[f64],
    k_max: usize,
) -> Result<CordecVerdict> {
    if d < 3 {
        return Err(Error::InvalidParameter("degree must be >= 3".into()));
    }
    check_encoding(kernel, encoding)?;
    let n = kernel.state_count();
    let f: Vec<f64> = encoding.to_vec();
    let pi: Vec<f64> = kernel.pi().iter().map(|p| p.as_f64()).collect();
    let mean: f64 = pi.iter().zip(&f).map(|(p, x)| p * x).sum();
    let centered: Vec<f64> = f.iter().map(|x| x - mean).collect();
    let var: f64 = pi.iter().zip(&centered).map(|(p, x)| p * x * x).sum();
    let mut g = centered.clone();
    for k in 1..=k_max {
        g = (0..n)
            .map(|s| kernel.row(s).iter().zip(&g).map(|(q, x)| q.as_f64() * x).sum())
            .collect();
        let corr = (0..n).map(|s| pi[s] * centered[s] * g[s]).sum::<f64>() / var;
        let bound = cordec_bound(k, d);
        if corr.abs() > bound {
            return Ok(CordecVerdict::Violates { witness: k, correlation: corr, bound });
        }
    }
    Ok(CordecVerdict::Consistent { k_max })
}
