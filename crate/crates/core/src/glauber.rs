//! Factor-of-i.i.d. Glauber dynamics on the truncated tree.
//!
//! One sweep draws fresh i.i.d. uniform labels, wakes every vertex whose
//! label beats all others in its radius-2 ball, and resamples each woken
//! vertex from its heat-bath conditional law given its neighbors. Woken
//! vertices are pairwise at distance at least 3, so the updates are
//! independent and may be applied in place.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{self, CumulativeTable};
use crate::error::{Error, Result};
use crate::kernel::{dobrushin_coefficient, TransitionKernel};
use crate::rng::{replica_rng, StreamRng};
use crate::scalar::Scalar;
use crate::stats::{linear_fit, Estimate};
use crate::tree::{
    exact_bmc_marginals, sample_uniform_labels, Configuration, KernelSampler, Pattern, RealField,
    TruncatedTree,
};

/// Heat-bath law of a vertex given its neighbors' states:
/// `P(s | omega) ∝ pi[s] prod_u q[s][omega_u]`.
pub fn conditional_dist<T: Scalar>(kernel: &TransitionKernel<T>, neighbors: &[usize]) -> Result<Vec<T>> {
    let k = kernel.state_count();
    if let Some(&s) = neighbors.iter().find(|&&s| s >= k) {
        return Err(Error::InvalidParameter(format!("neighbor state {s} out of range")));
    }
    let weights: Vec<T> = (0..k)
        .map(|s| {
            neighbors
                .iter()
                .fold(kernel.pi()[s], |acc, &u| acc * kernel.q(s, u))
        })
        .collect();
    let z: T = weights.iter().copied().sum();
    if !(z > T::zero()) {
        return Err(Error::ZeroNormalizer(format!("neighbors {neighbors:?}")));
    }
    Ok(weights.into_iter().map(|w| w / z).collect())
}

/// Vertices woken in one sweep.
#[derive(Debug, Clone)]
pub struct WakingSet {
    tree: Arc<TruncatedTree>,
    members: Vec<bool>,
}

impl WakingSet {
    pub fn tree(&self) -> &Arc<TruncatedTree> {
        &self.tree
    }

    pub fn contains(&self, v: usize) -> bool {
        self.members[v]
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().enumerate().filter(|(_, &m)| m).map(|(v, _)| v)
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Fraction of woken vertices among those of depth at most `window`.
    pub fn density(&self, window: usize) -> f64 {
        let range = self.tree.window(window);
        let n = range.len();
        range.filter(|&v| self.members[v]).count() as f64 / n as f64
    }
}

#[inline]
fn beats(labels: &[f64], v: usize, u: usize) -> bool {
    // ties broken by vertex index
    labels[v] > labels[u] || (labels[v] == labels[u] && v > u)
}

fn wake_into(tree: &TruncatedTree, labels: &[f64], members: &mut Vec<bool>) {
    members.clear();
    members.extend((0..tree.len()).map(|v| {
        tree.is_full(v) && tree.ball2(v).iter().all(|&u| beats(labels, v, u as usize))
    }));
}

/// A vertex wakes iff it has all `d` neighbors and its label strictly
/// exceeds every other label within distance 2.
pub fn waking_set(labels: &RealField) -> WakingSet {
    let tree = Arc::clone(labels.tree());
    let mut members = Vec::new();
    wake_into(&tree, labels.values(), &mut members);
    WakingSet { tree, members }
}

/// Draws `(X, Y)` with `X ~ p`, `Y ~ q` and `P(X != Y) = tv(p, q)`.
pub fn maximal_coupling<T: Scalar, R: Rng + ?Sized>(p: &[T], q: &[T], rng: &mut R) -> Result<(usize, usize)> {
    if p.len() != q.len() {
        return Err(Error::InvalidParameter("coupled laws have different supports".into()));
    }
    let tol = T::lit(1e-9);
    dist::validate(p, tol)?;
    dist::validate(q, tol)?;
    let p: Vec<f64> = p.iter().map(|x| x.as_f64()).collect();
    let q: Vec<f64> = q.iter().map(|x| x.as_f64()).collect();
    Ok(couple_f64(&p, &q, rng))
}

fn couple_f64<R: Rng + ?Sized>(p: &[f64], q: &[f64], rng: &mut R) -> (usize, usize) {
    let common: Vec<f64> = p.iter().zip(q).map(|(a, b)| a.min(*b)).collect();
    let overlap: f64 = common.iter().sum();
    if rng.gen::<f64>() < overlap {
        let x = CumulativeTable::new(&common).pick(rng.gen::<f64>() * overlap);
        return (x, x);
    }
    // residuals have disjoint supports, so the draws always differ
    let rp: Vec<f64> = p.iter().zip(&common).map(|(a, c)| (a - c).max(0.0)).collect();
    let rq: Vec<f64> = q.iter().zip(&common).map(|(b, c)| (b - c).max(0.0)).collect();
    let x = CumulativeTable::new(&rp).pick(rng.gen::<f64>() * rp.iter().sum::<f64>());
    let y = CumulativeTable::new(&rq).pick(rng.gen::<f64>() * rq.iter().sum::<f64>());
    (x, y)
}

/// Largest `k^d * k` for which all conditional laws are tabulated.
const TABLE_BUDGET: usize = 1 << 22;

/// Heat-bath machinery for one kernel on one tree.
///
/// Conditional laws are tabulated by ordered neighbor tuple when the
/// table fits; otherwise they are computed on demand.
pub struct GlauberEngine<T: Scalar> {
    kernel: TransitionKernel<T>,
    tree: Arc<TruncatedTree>,
    tables: Option<Vec<Option<(Vec<f64>, CumulativeTable)>>>,
}

impl<T: Scalar> GlauberEngine<T> {
    pub fn new(kernel: &TransitionKernel<T>, tree: &Arc<TruncatedTree>) -> Self {
        let k = kernel.state_count();
        let d = tree.d();
        let size = k.checked_pow(d as u32).filter(|s| s.saturating_mul(k) <= TABLE_BUDGET);
        let tables = size.map(|size| {
            let mut omega = vec![0usize; d];
            (0..size)
                .map(|mut idx| {
                    for slot in omega.iter_mut().rev() {
                        *slot = idx % k;
                        idx /= k;
                    }
                    conditional_dist(kernel, &omega).ok().map(|law| {
                        let p: Vec<f64> = law.iter().map(|x| x.as_f64()).collect();
                        let c = CumulativeTable::new(&p);
                        (p, c)
                    })
                })
                .collect()
        });
        Self { kernel: kernel.clone(), tree: Arc::clone(tree), tables }
    }

    pub fn tree(&self) -> &Arc<TruncatedTree> {
        &self.tree
    }

    fn neighbor_index(&self, states: &[usize], v: usize) -> usize {
        let k = self.kernel.state_count();
        self.tree.neighbors(v).fold(0, |acc, u| acc * k + states[u])
    }

    fn law(&self, states: &[usize], v: usize) -> Vec<f64> {
        let omega: Vec<usize> = self.tree.neighbors(v).map(|u| states[u]).collect();
        match conditional_dist(&self.kernel, &omega) {
            Ok(law) => law.iter().map(|x| x.as_f64()).collect(),
            // impossible neighborhoods keep the current state
            Err(_) => {
                let mut p = vec![0.0; self.kernel.state_count()];
                p[states[v]] = 1.0;
                p
            }
        }
    }

    fn resample<R: Rng + ?Sized>(&self, states: &[usize], v: usize, rng: &mut R) -> usize {
        match &self.tables {
            Some(t) => match &t[self.neighbor_index(states, v)] {
                Some((_, c)) => c.sample(rng),
                None => states[v],
            },
            None => CumulativeTable::new(&self.law(states, v)).sample(rng),
        }
    }

    fn couple<R: Rng + ?Sized>(&self, a: &[usize], b: &[usize], v: usize, rng: &mut R) -> (usize, usize) {
        match &self.tables {
            Some(t) => {
                let ia = self.neighbor_index(a, v);
                let ib = self.neighbor_index(b, v);
                match (&t[ia], &t[ib]) {
                    (Some((_, c)), _) if ia == ib => {
                        let x = c.sample(rng);
                        (x, x)
                    }
                    (Some((pa, _)), Some((pb, _))) => couple_f64(pa, pb, rng),
                    (la, lb) => {
                        let x = la.as_ref().map_or(a[v], |(_, c)| c.sample(rng));
                        let y = lb.as_ref().map_or(b[v], |(_, c)| c.sample(rng));
                        (x, y)
                    }
                }
            }
            None => couple_f64(&self.law(a, v), &self.law(b, v), rng),
        }
    }

    /// One Glauber sweep in place; returns the number of woken vertices.
    pub fn sweep_in_place<R: Rng + ?Sized>(&self, states: &mut [usize], scratch: &mut Scratch, rng: &mut R) -> usize {
        scratch.draw(&self.tree, rng);
        let mut woken = 0;
        for v in 0..self.tree.len() {
            if scratch.members[v] {
                states[v] = self.resample(states, v, rng);
                woken += 1;
            }
        }
        woken
    }

    /// One coupled sweep in place: shared labels, shared waking set,
    /// maximal coupling at every woken vertex.
    pub fn coupled_sweep_in_place<R: Rng + ?Sized>(
        &self,
        a: &mut [usize],
        b: &mut [usize],
        scratch: &mut Scratch,
        rng: &mut R,
    ) {
        scratch.draw(&self.tree, rng);
        for v in 0..self.tree.len() {
            if scratch.members[v] {
                let (x, y) = self.couple(a, b, v, rng);
                a[v] = x;
                b[v] = y;
            }
        }
    }
}

/// Reusable per-replica buffers.
#[derive(Debug, Default)]
pub struct Scratch {
    labels: Vec<f64>,
    members: Vec<bool>,
}

impl Scratch {
    fn draw<R: Rng + ?Sized>(&mut self, tree: &TruncatedTree, rng: &mut R) {
        self.labels.clear();
        self.labels.extend((0..tree.len()).map(|_| rng.gen::<f64>()));
        wake_into(tree, &self.labels, &mut self.members);
    }
}

/// One Glauber sweep applied to a copy of `config`.
pub fn glauber_sweep<T: Scalar, R: Rng + ?Sized>(
    config: &Configuration,
    kernel: &TransitionKernel<T>,
    rng: &mut R,
) -> Configuration {
    let engine = GlauberEngine::new(kernel, config.tree());
    let mut out = config.clone();
    let mut scratch = Scratch::default();
    engine.sweep_in_place(out.states_mut(), &mut scratch, rng);
    out
}

/// Two configurations on the same tree, evolved under shared randomness.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPair {
    pub first: Configuration,
    pub second: Configuration,
    /// Number of coupled sweeps applied so far.
    pub sweeps: usize,
}

impl CoupledPair {
    pub fn new(first: Configuration, second: Configuration) -> Result<Self> {
        if !Arc::ptr_eq(first.tree(), second.tree()) && first.tree().len() != second.tree().len() {
            return Err(Error::InvalidParameter("coupled configurations live on different trees".into()));
        }
        Ok(Self { first, second, sweeps: 0 })
    }

    /// Fraction of disagreeing vertices within depth `window`.
    pub fn distance(&self, window: usize) -> f64 {
        let n = self.first.tree().window(window).len();
        self.first.disagreements(&self.second, window) as f64 / n as f64
    }
}

pub fn coupled_sweep<T: Scalar, R: Rng + ?Sized>(
    pair: &CoupledPair,
    kernel: &TransitionKernel<T>,
    rng: &mut R,
) -> CoupledPair {
    let engine = GlauberEngine::new(kernel, pair.first.tree());
    let mut out = pair.clone();
    let mut scratch = Scratch::default();
    let CoupledPair { first, second, .. } = &mut out;
    engine.coupled_sweep_in_place(first.states_mut(), second.states_mut(), &mut scratch, rng);
    out.sweeps += 1;
    out
}

/// Probability that a deep-interior vertex wakes: `1 / (d^2 + 1)`.
pub fn wake_probability(d: usize) -> f64 {
    1.0 / ((d * d + 1) as f64)
}

/// Shared settings for the replicated dynamics experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunSpec {
    pub d: usize,
    pub depth: usize,
    pub sweeps: usize,
    pub replicas: usize,
    pub seed: u64,
    /// Interior window depth; `None` means `3 * depth / 8`, which keeps the
    /// window well away from the leaves (they are never resampled).
    pub window: Option<usize>,
}

impl RunSpec {
    pub fn window_depth(&self) -> usize {
        self.window.unwrap_or(3 * self.depth / 8).min(self.depth)
    }

    fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::InvalidParameter("replicas must be positive".into()));
        }
        Ok(())
    }
}

/// One row of a decay curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub sweep: usize,
    pub mean_distance: f64,
    pub stderr: f64,
}

/// Exponential fit `distance ~ C rate^sweep` with a 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub points_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub spec: RunSpec,
    pub window_depth: usize,
    pub dobrushin: f64,
    pub wake_probability: f64,
    /// `1 - p (1 - d D)`; meaningful as a contraction bound only when `d D < 1`.
    pub predicted_rate: f64,
    pub curve: Vec<CurvePoint>,
    pub fit: Option<RateFit>,
}

/// Renders `sweep,mean_distance,stderr` CSV.
pub fn curve_csv(curve: &[CurvePoint]) -> String {
    let mut out = String::from("sweep,mean_distance,stderr\n");
    for p in curve {
        out.push_str(&format!("{},{},{}\n", p.sweep, p.mean_distance, p.stderr));
    }
    out
}

fn summarize(per_replica: &[Vec<f64>]) -> Vec<CurvePoint> {
    let len = per_replica.first().map_or(0, Vec::len);
    (0..len)
        .map(|s| {
            let xs: Vec<f64> = per_replica.iter().map(|c| c[s]).collect();
            let e = Estimate::from_samples(&xs);
            CurvePoint { sweep: s, mean_distance: e.mean, stderr: e.stderr }
        })
        .collect()
}

/// Log-linear least squares over points whose mean exceeds ten standard
/// errors.
pub fn fit_rate(curve: &[CurvePoint]) -> Option<RateFit> {
    let pts: Vec<(f64, f64)> = curve
        .iter()
        .filter(|p| p.mean_distance > 0.0 && p.mean_distance > 10.0 * p.stderr)
        .map(|p| (p.sweep as f64, p.mean_distance.ln()))
        .collect();
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (_, slope, se) = linear_fit(&xs, &ys)?;
    let se = if se.is_finite() { se } else { 0.0 };
    Some(RateFit {
        rate: slope.exp(),
        ci_low: (slope - 1.96 * se).exp(),
        ci_high: (slope + 1.96 * se).exp(),
        points_used: pts.len(),
    })
}

fn run_coupled<T: Scalar>(
    kernel: &TransitionKernel<T>,
    spec: &RunSpec,
    iid_start: bool,
) -> Result<(Vec<Vec<f64>>, Configuration)> {
    spec.validate()?;
    let tree = Arc::new(TruncatedTree::build(spec.d, spec.depth)?);
    let engine = GlauberEngine::new(kernel, &tree);
    let sampler = KernelSampler::new(kernel);
    let k = kernel.state_count();
    let window = spec.window_depth();
    let wn = tree.window(window).len() as f64;
    let runs: Vec<(Vec<f64>, Option<Vec<usize>>)> = (0..spec.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng: StreamRng = replica_rng(spec.seed, r as u64);
            let mut a = vec![0usize; tree.len()];
            let mut b = vec![0usize; tree.len()];
            if iid_start {
                a.iter_mut().for_each(|s| *s = rng.gen_range(0..k));
            } else {
                sampler.fill(&tree, &mut a, &mut rng);
            }
            sampler.fill(&tree, &mut b, &mut rng);
            let dist = |a: &[usize], b: &[usize]| {
                tree.window(window).filter(|&v| a[v] != b[v]).count() as f64 / wn
            };
            let mut curve = Vec::with_capacity(spec.sweeps + 1);
            curve.push(dist(&a, &b));
            let mut scratch = Scratch::default();
            for _ in 0..spec.sweeps {
                engine.coupled_sweep_in_place(&mut a, &mut b, &mut scratch, &mut rng);
                curve.push(dist(&a, &b));
            }
            (curve, (r == 0).then_some(a))
        })
        .collect();
    let mut sample = None;
    let curves = runs
        .into_iter()
        .map(|(c, s)| {
            if s.is_some() {
                sample = s;
            }
            c
        })
        .collect();
    let sample = Configuration::new(tree, sample.expect("replica 0 present"))?;
    Ok((curves, sample))
}

/// Runs coupled dynamics from two independent branching chain samples and
/// reports the interior disagreement curve with a fitted decay rate.
pub fn estimate_hamming_decay<T: Scalar>(kernel: &TransitionKernel<T>, spec: RunSpec) -> Result<DecayReport> {
    let dobrushin = dobrushin_coefficient(kernel, spec.d)?.as_f64();
    let (curves, _) = run_coupled(kernel, &spec, false)?;
    let curve = summarize(&curves);
    if curve[0].mean_distance == 0.0 {
        return Err(Error::Degenerate("coupled copies start at distance zero".into()));
    }
    let p = wake_probability(spec.d);
    Ok(DecayReport {
        spec,
        window_depth: spec.window_depth(),
        dobrushin,
        wake_probability: p,
        predicted_rate: 1.0 - p * (1.0 - spec.d as f64 * dobrushin),
        fit: fit_rate(&curve),
        curve,
    })
}

/// Comparison of one pattern's empirical law against the exact law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternCheck {
    pub pattern: Pattern,
    pub tv: f64,
    /// `0.5 * sum of per-cell standard errors`.
    pub noise_floor: f64,
    /// Largest `|empirical - exact| / stderr` over cells with positive stderr.
    pub max_abs_z: f64,
    /// Cells whose deviation exceeds three standard errors.
    pub cells_beyond_3_sigma: usize,
    pub cells: usize,
}

impl PatternCheck {
    pub fn cells_within_3_sigma(&self) -> bool {
        self.cells_beyond_3_sigma == 0
    }

    pub fn tv_below_floor(&self) -> bool {
        self.tv < 3.0 * self.noise_floor
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointReport {
    pub spec: RunSpec,
    pub window_depth: usize,
    pub checks: Vec<PatternCheck>,
}

fn pattern_tuples(tree: &TruncatedTree, pattern: Pattern, window: usize) -> Vec<Vec<usize>> {
    match pattern {
        Pattern::Vertex => tree.window(window).map(|v| vec![v]).collect(),
        Pattern::Edge => tree
            .window(window)
            .skip(1)
            .map(|v| vec![tree.parent(v).expect("non-root"), v])
            .collect(),
        Pattern::Star(_) => tree
            .window(window)
            .filter(|&v| tree.is_full(v))
            .map(|v| std::iter::once(v).chain(tree.neighbors(v)).collect())
            .collect(),
    }
}

/// Samples the branching chain, applies `sweeps` Glauber sweeps and
/// compares interior vertex, edge and star frequencies against the exact
/// laws. Standard errors come from the spread across replicas.
pub fn fixed_point_test<T: Scalar>(kernel: &TransitionKernel<T>, spec: RunSpec) -> Result<FixedPointReport> {
    spec.validate()?;
    let tree = Arc::new(TruncatedTree::build(spec.d, spec.depth)?);
    let engine = GlauberEngine::new(kernel, &tree);
    let sampler = KernelSampler::new(kernel);
    let window = spec.window_depth();
    let mut patterns = vec![Pattern::Vertex, Pattern::Edge];
    let star = Pattern::Star(spec.d);
    if exact_bmc_marginals(kernel, star).is_ok() {
        patterns.push(star);
    }
    let exact: Vec<Vec<f64>> = patterns
        .iter()
        .map(|&p| Ok(exact_bmc_marginals(kernel, p)?.probs.iter().map(|x| x.as_f64()).collect()))
        .collect::<Result<_>>()?;
    let tuples: Vec<Vec<Vec<usize>>> = patterns.iter().map(|&p| pattern_tuples(&tree, p, window)).collect();
    let k = kernel.state_count();
    let freqs: Vec<Vec<Vec<f64>>> = (0..spec.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(spec.seed, r as u64);
            let mut states = vec![0usize; tree.len()];
            sampler.fill(&tree, &mut states, &mut rng);
            let mut scratch = Scratch::default();
            for _ in 0..spec.sweeps {
                engine.sweep_in_place(&mut states, &mut scratch, &mut rng);
            }
            exact
                .iter()
                .zip(&tuples)
                .map(|(law, ts)| {
                    let mut f = vec![0.0; law.len()];
                    let w = 1.0 / ts.len() as f64;
                    for t in ts {
                        let idx = t.iter().fold(0, |acc, &v| acc * k + states[v]);
                        f[idx] += w;
                    }
                    f
                })
                .collect()
        })
        .collect();
    let checks = patterns
        .iter()
        .enumerate()
        .map(|(pi, &pattern)| {
            let cells = exact[pi].len();
            let mut tv = 0.0;
            let mut floor = 0.0;
            let mut max_z: f64 = 0.0;
            let mut beyond = 0;
            for c in 0..cells {
                let xs: Vec<f64> = freqs.iter().map(|f| f[pi][c]).collect();
                let e = Estimate::from_samples(&xs);
                let dev = (e.mean - exact[pi][c]).abs();
                tv += 0.5 * dev;
                floor += 0.5 * e.stderr;
                if e.stderr > 0.0 {
                    max_z = max_z.max(dev / e.stderr);
                    if dev > 3.0 * e.stderr {
                        beyond += 1;
                    }
                } else if dev > 1e-12 {
                    max_z = f64::INFINITY;
                    beyond += 1;
                }
            }
            PatternCheck { pattern, tv, noise_floor: floor, max_abs_z: max_z, cells_beyond_3_sigma: beyond, cells }
        })
        .collect();
    Ok(FixedPointReport { spec, window_depth: window, checks })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergeReport {
    pub spec: RunSpec,
    pub window_depth: usize,
    pub dobrushin: f64,
    /// `1 - sum_s pi[s] / k`: disagreement of the independent start.
    pub predicted_initial: f64,
    pub curve: Vec<CurvePoint>,
    pub fit: Option<RateFit>,
    #[serde(skip)]
    pub sample: Option<Configuration>,
}

/// Runs the dynamics from an i.i.d. uniform start, coupled to a copy that
/// starts from an exact branching chain sample. The interior disagreement
/// fraction upper-bounds the coupling Hamming distance between the
/// i.i.d.-started process after `n` sweeps and the branching chain.
pub fn converge_from_iid<T: Scalar>(kernel: &TransitionKernel<T>, spec: RunSpec) -> Result<ConvergeReport> {
    let dobrushin = dobrushin_coefficient(kernel, spec.d)?.as_f64();
    let (curves, sample) = run_coupled(kernel, &spec, true)?;
    let curve = summarize(&curves);
    let k = kernel.state_count() as f64;
    let predicted_initial = 1.0 - kernel.pi().iter().map(|p| p.as_f64() / k).sum::<f64>();
    Ok(ConvergeReport {
        spec,
        window_depth: spec.window_depth(),
        dobrushin,
        predicted_initial,
        fit: fit_rate(&curve),
        curve,
        sample: Some(sample),
    })
}

/// Convenience: labels and waking set for one draw.
pub fn draw_waking_set<R: Rng + ?Sized>(tree: &Arc<TruncatedTree>, rng: &mut R) -> (RealField, WakingSet) {
    let labels = sample_uniform_labels(tree, rng);
    let set = waking_set(&labels);
    (labels, set)
}
