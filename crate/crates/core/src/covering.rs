//! Covering matrices, covering error ratios, the density lower bounds
//! `delta(M, eps)` and the threshold `eps0` they induce.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use num_rational::Ratio;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::RegularGraph;
use crate::tree::JointLaw;
use crate::Scalar;

/// Node budget of the exhaustive covering search.
pub const EXACT_SEARCH_BUDGET: u64 = 100_000_000;

/// Square nonnegative integer matrix with rows summing to `d` and a
/// strongly connected support digraph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoveringMatrix {
    s_count: usize,
    d: usize,
    entries: Vec<Vec<usize>>,
}

impl CoveringMatrix {
    pub fn new(entries: Vec<Vec<usize>>) -> Result<Self> {
        let s_count = entries.len();
        if s_count == 0 || entries.iter().any(|r| r.len() != s_count) {
            return Err(Error::InvalidMatrix("matrix must be square and nonempty".into()));
        }
        let d: usize = entries[0].iter().sum();
        if let Some(s) = entries.iter().position(|r| r.iter().sum::<usize>() != d) {
            return Err(Error::InvalidMatrix(format!("row {s} does not sum to {d}")));
        }
        let m = Self { s_count, d, entries };
        if !m.strongly_connected() {
            return Err(Error::InvalidMatrix("support digraph is not strongly connected".into()));
        }
        Ok(m)
    }

    /// States: 0 in the dominating set, 1 outside it.
    pub fn dominating(d: usize) -> Self {
        Self::new(vec![vec![0, d], vec![1, d - 1]]).expect("valid for d >= 1")
    }

    /// Proper two-coloring.
    pub fn bipartite(d: usize) -> Self {
        Self::new(vec![vec![0, d], vec![d, 0]]).expect("valid for d >= 1")
    }

    pub fn s_count(&self) -> usize {
        self.s_count
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn get(&self, s: usize, t: usize) -> usize {
        self.entries[s][t]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.entries
    }

    fn reach(&self, from: usize, transpose: bool) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.s_count];
        dist[from] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(s) = queue.pop_front() {
            for t in 0..self.s_count {
                let edge = if transpose { self.entries[t][s] } else { self.entries[s][t] };
                if edge > 0 && dist[t].is_none() {
                    dist[t] = Some(dist[s].unwrap_or(0) + 1);
                    queue.push_back(t);
                }
            }
        }
        dist
    }

    fn strongly_connected(&self) -> bool {
        self.reach(0, false).iter().all(Option::is_some) && self.reach(0, true).iter().all(Option::is_some)
    }

    /// Largest directed distance in the support digraph.
    pub fn diameter(&self) -> usize {
        (0..self.s_count)
            .flat_map(|s| self.reach(s, false))
            .map(|x| x.expect("strongly connected"))
            .max()
            .unwrap_or(0)
    }

    /// Text format: `s_count d`, then the rows.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.s_count, self.d);
        for row in &self.entries {
            let cells: Vec<String> = row.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|_| Error::Parse { line: i + 1, msg: format!("bad entry {t:?}") }))
                .collect::<Result<Vec<_>>>()?;
            rows.push((i + 1, row));
        }
        let Some((line, header)) = rows.first().cloned() else {
            return Err(Error::Parse { line: 1, msg: "missing header".into() });
        };
        if header.len() != 2 {
            return Err(Error::Parse { line, msg: "header must be `s_count d`".into() });
        }
        let (s_count, d) = (header[0], header[1]);
        let body: Vec<Vec<usize>> = rows[1..].iter().map(|(_, r)| r.clone()).collect();
        if body.len() != s_count {
            return Err(Error::InvalidMatrix(format!("expected {s_count} rows, found {}", body.len())));
        }
        let m = Self::new(body)?;
        if m.d != d {
            return Err(Error::InvalidMatrix(format!("header degree {d} but rows sum to {}", m.d)));
        }
        Ok(m)
    }
}

/// Whether `coloring` is a covering at `v`: for every state `q`, the
/// number of neighbors of `v` colored `q`, counted with multiplicity,
/// equals `M(coloring[v], q)`.
pub fn is_covering_at(graph: &RegularGraph, coloring: &[usize], v: usize, m: &CoveringMatrix) -> bool {
    let mut counts = vec![0usize; m.s_count()];
    for w in graph.neighbors(v) {
        counts[coloring[w]] += 1;
    }
    counts.iter().zip(m.rows()[coloring[v]].iter()).all(|(a, b)| a == b)
}

fn check_inputs(graph: &RegularGraph, m: &CoveringMatrix) -> Result<()> {
    if graph.d() != m.d() {
        return Err(Error::InvalidParameter(format!("graph degree {} but matrix degree {}", graph.d(), m.d())));
    }
    Ok(())
}

fn check_coloring(graph: &RegularGraph, coloring: &[usize], m: &CoveringMatrix) -> Result<()> {
    check_inputs(graph, m)?;
    if coloring.len() != graph.n() || coloring.iter().any(|&c| c >= m.s_count()) {
        return Err(Error::InvalidParameter("coloring does not match graph and matrix".into()));
    }
    Ok(())
}

fn error_count(graph: &RegularGraph, coloring: &[usize], m: &CoveringMatrix) -> usize {
    (0..graph.n()).filter(|&v| !is_covering_at(graph, coloring, v, m)).count()
}

/// Fraction of vertices where `coloring` fails to be a covering.
pub fn error_ratio(graph: &RegularGraph, coloring: &[usize], m: &CoveringMatrix) -> Result<Ratio<usize>> {
    check_coloring(graph, coloring, m)?;
    Ok(Ratio::new(error_count(graph, coloring, m), graph.n()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringSolution {
    pub ratio: Ratio<usize>,
    pub witness: Vec<usize>,
}

/// Exact covering error ratio by branch and bound: vertices are colored in
/// breadth-first order and a branch is cut once the vertices whose closed
/// neighborhoods are fully colored already hold as many errors as the
/// best complete coloring.
pub fn min_error_exact(graph: &RegularGraph, m: &CoveringMatrix) -> Result<CoveringSolution> {
    check_inputs(graph, m)?;
    if m.d() < 3 {
        return Err(Error::InvalidParameter(format!("degree {} < 3", m.d())));
    }
    let n = graph.n();
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for w in graph.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    let mut pos = vec![0; n];
    order.iter().enumerate().for_each(|(i, &v)| pos[v] = i);
    // vertices whose closed neighborhood is complete once position i is colored
    let mut settled: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in 0..n {
        let last = graph.neighbors(v).map(|w| pos[w]).chain([pos[v]]).max().unwrap_or(0);
        settled[last].push(v);
    }
    let first = order[0];
    let k = m.s_count();
    let results = (0..k)
        .into_par_iter()
        .map(|c0| {
            let mut coloring = vec![usize::MAX; n];
            coloring[first] = c0;
            let mut s = Branch {
                graph,
                m,
                order: &order,
                settled: &settled,
                coloring,
                best: n + 1,
                witness: Vec::new(),
                nodes: 0,
            };
            let errs = s.settle(0);
            s.descend(1, errs)?;
            Ok((s.best, s.witness))
        })
        .collect::<Result<Vec<_>>>()?;
    let (best, witness) = results
        .into_iter()
        .min_by_key(|(b, _)| *b)
        .expect("at least one state");
    Ok(CoveringSolution { ratio: Ratio::new(best, n), witness })
}

struct Branch<'a> {
    graph: &'a RegularGraph,
    m: &'a CoveringMatrix,
    order: &'a [usize],
    settled: &'a [Vec<usize>],
    coloring: Vec<usize>,
    best: usize,
    witness: Vec<usize>,
    nodes: u64,
}

impl Branch<'_> {
    fn settle(&self, i: usize) -> usize {
        self.settled[i]
            .iter()
            .filter(|&&v| !is_covering_at(self.graph, &self.coloring, v, self.m))
            .count()
    }

    fn descend(&mut self, i: usize, errs: usize) -> Result<()> {
        if errs >= self.best {
            return Ok(());
        }
        if i == self.order.len() {
            self.best = errs;
            self.witness = self.coloring.clone();
            return Ok(());
        }
        let v = self.order[i];
        for c in 0..self.m.s_count() {
            self.nodes += 1;
            if self.nodes > EXACT_SEARCH_BUDGET / self.m.s_count() as u64 {
                return Err(Error::Budget(format!("exact covering search exceeded {EXACT_SEARCH_BUDGET} nodes")));
            }
            self.coloring[v] = c;
            let e = errs + self.settle(i);
            self.descend(i + 1, e)?;
            if self.best == 0 {
                break;
            }
        }
        self.coloring[v] = usize::MAX;
        Ok(())
    }
}

/// Steepest-descent single-vertex recoloring from random starts; the
/// result bounds the covering error ratio from above.
pub fn min_error_local_search<R: Rng + ?Sized>(
    graph: &RegularGraph,
    m: &CoveringMatrix,
    restarts: usize,
    rng: &mut R,
) -> Result<CoveringSolution> {
    check_inputs(graph, m)?;
    let n = graph.n();
    let k = m.s_count();
    let mut best: Option<(usize, Vec<usize>)> = None;
    for _ in 0..restarts.max(1) {
        let mut coloring: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let mut errs = error_count(graph, &coloring, m);
        loop {
            let mut step: Option<(usize, usize, usize)> = None; // (new errs, v, c)
            for v in 0..n {
                let old = coloring[v];
                let local_before = local_errors(graph, &coloring, v, m);
                for c in (0..k).filter(|&c| c != old) {
                    coloring[v] = c;
                    let e = errs - local_before + local_errors(graph, &coloring, v, m);
                    if e < step.map_or(errs, |s| s.0) {
                        step = Some((e, v, c));
                    }
                }
                coloring[v] = old;
            }
            match step {
                Some((e, v, c)) => {
                    coloring[v] = c;
                    errs = e;
                }
                None => break,
            }
        }
        if best.as_ref().is_none_or(|(b, _)| errs < *b) {
            best = Some((errs, coloring));
        }
    }
    let (errs, witness) = best.expect("at least one restart");
    Ok(CoveringSolution { ratio: Ratio::new(errs, n), witness })
}

/// Errors among `v` and its distinct neighbors.
fn local_errors(graph: &RegularGraph, coloring: &[usize], v: usize, m: &CoveringMatrix) -> usize {
    let mut around: Vec<usize> = graph.neighbors(v).chain([v]).collect();
    around.sort_unstable();
    around.dedup();
    around.into_iter().filter(|&w| !is_covering_at(graph, coloring, w, m)).count()
}

/// Lower bound on the smallest state density of an invariant process
/// that is a covering at the root with probability `1 - eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum DeltaFunction {
    /// `(1 - eps) / (d + 1)` for the dominating matrix.
    Dominating { d: usize },
    /// `1/2 - eps` for the bipartite matrix.
    Bipartite { d: usize },
    /// `1 / (s d^K) - eps * sum_{i=1..K} d^{-i}`, `K` the support diameter.
    Generic { s_count: usize, d: usize, diameter: usize },
}

impl DeltaFunction {
    /// Specialized bound when `m` is (a relabeling of) a registered
    /// matrix, otherwise the generic one.
    pub fn for_matrix(m: &CoveringMatrix) -> Self {
        let d = m.d();
        let swapped = |x: &CoveringMatrix| {
            vec![vec![x.get(1, 1), x.get(1, 0)], vec![x.get(0, 1), x.get(0, 0)]]
        };
        if m.s_count() == 2 {
            let dom = CoveringMatrix::dominating(d);
            if *m.rows() == *dom.rows() || *m.rows() == swapped(&dom) {
                return Self::Dominating { d };
            }
            if *m.rows() == *CoveringMatrix::bipartite(d).rows() {
                return Self::Bipartite { d };
            }
        }
        Self::Generic { s_count: m.s_count(), d, diameter: m.diameter() }
    }

    pub fn d(&self) -> usize {
        match *self {
            Self::Dominating { d } | Self::Bipartite { d } | Self::Generic { d, .. } => d,
        }
    }

    pub fn s_count(&self) -> usize {
        match *self {
            Self::Dominating { .. } | Self::Bipartite { .. } => 2,
            Self::Generic { s_count, .. } => s_count,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Dominating { .. } => "dominating",
            Self::Bipartite { .. } => "bipartite",
            Self::Generic { .. } => "generic",
        }
    }

    /// The bound itself, possibly nonpositive for large `eps`.
    pub fn eval<T: Scalar>(&self, eps: T) -> T {
        match *self {
            Self::Dominating { d } => (T::one() - eps) / T::from_usize_lossy(d + 1),
            Self::Bipartite { .. } => T::lit(0.5) - eps,
            Self::Generic { s_count, d, diameter } => {
                let dd = T::from_usize_lossy(d);
                let geometric: T = (1..=diameter).map(|i| dd.powi(-(i as i32))).sum();
                T::one() / (T::from_usize_lossy(s_count) * dd.powi(diameter as i32)) - eps * geometric
            }
        }
    }
}

/// `delta(M, eps)`; an error when the bound is not positive.
pub fn delta_lower_bound(m: &CoveringMatrix, eps: f64) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be >= 0")));
    }
    let v = DeltaFunction::for_matrix(m).eval(eps);
    if v <= 0.0 {
        return Err(Error::Degenerate(format!("delta bound {v} is not positive at eps = {eps}")));
    }
    Ok(v)
}

/// `g(eps) = (delta(eps)^d - eps)/2 - sqrt(eps ln|S| (d-1)/(d-2))`, with a
/// nonpositive `delta` clamped to zero.
pub fn threshold_gap<T: Scalar>(delta: &DeltaFunction, eps: T) -> T {
    let d = delta.d();
    let dv = delta.eval(eps).max(T::zero());
    let ln_s = T::from_usize_lossy(delta.s_count()).ln();
    let ratio = T::from_usize_lossy(d - 1) / T::from_usize_lossy(d - 2);
    T::lit(0.5) * (dv.powi(d as i32) - eps) - (eps * ln_s * ratio).sqrt()
}

pub const SCAN_POINTS: usize = 64;
pub const SCAN_LOW: f64 = 1e-16;
pub const SCAN_HIGH: f64 = 0.5;
pub const BISECTION_TOLERANCE: f64 = 1e-6;
pub const CERTIFICATE_OFFSET: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub delta_function: DeltaFunction,
    pub d: usize,
    pub s_count: usize,
    pub epsilon0: f64,
    /// `(eps, g(eps))` on the logarithmic grid.
    pub scan: Vec<(f64, f64)>,
    pub tolerance: f64,
    /// `g` at `eps0 (1 - 1e-5)` and `eps0 (1 + 1e-5)`.
    pub g_below: f64,
    pub g_above: f64,
}

impl ThresholdReport {
    pub fn certificate_holds(&self) -> bool {
        self.g_below > 0.0 && self.g_above <= 0.0
    }
}

/// First crossing of `g` to nonpositive values: a logarithmic scan of
/// `[1e-16, 1/2]` followed by bisection on the bracketing interval.
/// When `g` is already nonpositive at 1e-16 the grid is extended downward.
pub fn epsilon0(delta: DeltaFunction) -> Result<ThresholdReport> {
    let d = delta.d();
    if d < 3 {
        return Err(Error::InvalidParameter(format!("degree {d} < 3")));
    }
    if delta.s_count() < 2 {
        return Err(Error::InvalidParameter("need at least two states".into()));
    }
    let g = |e: f64| threshold_gap(&delta, e);
    let ratio = (SCAN_HIGH / SCAN_LOW).ln() / (SCAN_POINTS - 1) as f64;
    let scan: Vec<(f64, f64)> = (0..SCAN_POINTS)
        .map(|i| {
            let e = if i == SCAN_POINTS - 1 { SCAN_HIGH } else { SCAN_LOW * (ratio * i as f64).exp() };
            (e, g(e))
        })
        .collect();
    let idx = scan
        .iter()
        .position(|&(_, v)| v <= 0.0)
        .ok_or_else(|| Error::NoCrossing(format!("g stays positive on [{SCAN_LOW}, {SCAN_HIGH}]")))?;
    let (mut lo, mut hi) = if idx > 0 {
        (scan[idx - 1].0, scan[idx].0)
    } else {
        extend_below(&g, SCAN_LOW, ratio.exp())?
    };
    while hi - lo > BISECTION_TOLERANCE * lo {
        let mid = (lo * hi).sqrt();
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdReport {
        delta_function: delta,
        d,
        s_count: delta.s_count(),
        epsilon0: hi,
        scan,
        tolerance: BISECTION_TOLERANCE,
        g_below: g(hi * (1.0 - CERTIFICATE_OFFSET)),
        g_above: g(hi * (1.0 + CERTIFICATE_OFFSET)),
    })
}

/// Continues the grid below `SCAN_LOW` with the same spacing until `g`
/// turns positive (large `d` pushes the crossing under 1e-16).
fn extend_below(g: &impl Fn(f64) -> f64, start: f64, step: f64) -> Result<(f64, f64)> {
    let mut hi = start;
    while hi > SCAN_FLOOR {
        let lo = hi / step;
        if g(lo) > 0.0 {
            return Ok((lo, hi));
        }
        hi = lo;
    }
    Err(Error::NoCrossing(format!("g is already nonpositive at {SCAN_FLOOR:e}")))
}

/// Smallest `eps` the downward extension of the grid will try.
pub const SCAN_FLOOR: f64 = 1e-280;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominatingRow {
    pub d: usize,
    pub epsilon0: f64,
    /// Lower bound `1/(d+1) + eps0` on the dominating ratio.
    pub ratio_bound: f64,
}

pub fn dominating_table(d_from: usize, d_to: usize) -> Result<Vec<DominatingRow>> {
    (d_from..=d_to)
        .map(|d| {
            let rep = epsilon0(DeltaFunction::Dominating { d })?;
            Ok(DominatingRow { d, epsilon0: rep.epsilon0, ratio_bound: 1.0 / (d + 1) as f64 + rep.epsilon0 })
        })
        .collect()
}

pub fn dominating_table_csv(rows: &[DominatingRow]) -> String {
    let mut out = String::from("d,epsilon0,ratio_bound\n");
    for r in rows {
        let _ = writeln!(out, "{},{:.6e},{:.10}", r.d, r.epsilon0, r.ratio_bound);
    }
    out
}

pub fn dominating_table_text(rows: &[DominatingRow]) -> String {
    let mut out = format!("{:>3}  {:>12}  {:>12}\n", "d", "eps0", "bound");
    for r in rows {
        let _ = writeln!(out, "{:>3}  {:>12.3e}  {:>12.7}", r.d, r.epsilon0, r.ratio_bound);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndependenceBound {
    pub d: usize,
    pub epsilon0: f64,
    /// Upper bound `1/2 - eps0` on the independence ratio.
    pub ratio_bound: f64,
}

pub fn independence_threshold(d: usize) -> Result<IndependenceBound> {
    let rep = epsilon0(DeltaFunction::Bipartite { d })?;
    Ok(IndependenceBound { d, epsilon0: rep.epsilon0, ratio_bound: 0.5 - rep.epsilon0 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Rigidity {
    /// The first leaf is a function of the other coordinates and the rest
    /// is not i.i.d.: the process cannot be typical.
    RigidNotTypical { tv_from_product: f64 },
    Inconclusive { reason: String },
}

/// Level below which the remaining law counts as a product.
pub const PRODUCT_TV_TOLERANCE: f64 = 1e-9;

/// Rigidity test on a star law: coordinate 0 is the center, 1..=d the
/// leaves, and leaf 1 is the one that must be determined by the rest.
pub fn rigidity_check<T: Scalar>(star: &JointLaw<T>) -> Result<Rigidity> {
    if star.arity < 3 {
        return Err(Error::InvalidParameter("star law needs a center and at least two leaves".into()));
    }
    let mut determined: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for (idx, p) in star.probs.iter().enumerate() {
        if *p <= T::zero() {
            continue;
        }
        let mut t = star.tuple(idx);
        let w1 = t.remove(1);
        if let Some(&prev) = determined.get(&t) {
            if prev != w1 {
                return Ok(Rigidity::Inconclusive {
                    reason: format!("leaf 1 takes both {prev} and {w1} given the rest {t:?}"),
                });
            }
        } else {
            determined.insert(t, w1);
        }
    }
    let rest = star.drop_coordinate(1);
    let marginals: Vec<Vec<f64>> =
        (0..rest.arity).map(|i| rest.marginal(i).iter().map(|p| p.as_f64()).collect()).collect();
    let tv_product: f64 = 0.5
        * rest
            .probs
            .iter()
            .enumerate()
            .map(|(idx, p)| {
                let prod: f64 = rest.tuple(idx).iter().zip(&marginals).map(|(&s, m)| m[s]).product();
                (p.as_f64() - prod).abs()
            })
            .sum::<f64>();
    let identical = marginals.windows(2).all(|w| crate::dist::tv(&w[0], &w[1]) <= PRODUCT_TV_TOLERANCE);
    if tv_product > PRODUCT_TV_TOLERANCE || !identical {
        Ok(Rigidity::RigidNotTypical { tv_from_product: tv_product })
    } else {
        Ok(Rigidity::Inconclusive { reason: "remaining coordinates are i.i.d.".into() })
    }
}
