//! Finite reversible Markov kernels: construction, validation, the
//! Dobrushin coefficient of the heat-bath update and the spectral radius.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::dist;
use crate::error::{Error, Result};
use crate::glauber::conditional_dist;
use crate::graph::RegularGraph;
use crate::linalg::symmetric_eigenvalues;
use crate::scalar::Scalar;

/// Largest number of conditional distributions `dobrushin_coefficient`
/// will evaluate after symmetry reduction.
pub const DOBRUSHIN_BUDGET: u128 = 100_000_000;

/// A reversible transition matrix on `{0..k-1}` with its stationary law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionKernel<T: Scalar> {
    k: usize,
    /// Row-major `k x k`.
    q: Vec<T>,
    pi: Vec<T>,
}

impl<T: Scalar> TransitionKernel<T> {
    /// Builds a kernel from explicit rows and stationary law, validating
    /// stochasticity, positivity of `pi` and detailed balance.
    pub fn new(rows: Vec<Vec<T>>, pi: Vec<T>) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::InvalidKernel("empty state space".into()));
        }
        if let Some(r) = rows.iter().position(|r| r.len() != k) {
            return Err(Error::InvalidKernel(format!("row {r} has wrong length")));
        }
        if pi.len() != k {
            return Err(Error::InvalidKernel("pi length differs from state count".into()));
        }
        let kernel = Self {
            k,
            q: rows.into_iter().flatten().collect(),
            pi,
        };
        kernel.validate()?;
        Ok(kernel)
    }

    /// Builds a kernel from its rows alone; the stationary law is recovered
    /// from detailed balance along a spanning tree of the support graph.
    ///
    /// Fails if the support graph is disconnected (stationary law not
    /// unique) or if the matrix is not reversible.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::InvalidKernel("empty state space".into()));
        }
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidKernel("matrix is not square".into()));
        }
        // unnormalized weights by breadth-first propagation of pi_t = pi_s q_st / q_ts
        let mut w: Vec<Option<T>> = vec![None; k];
        w[0] = Some(T::one());
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(s) = queue.pop_front() {
            let ws = w[s].expect("visited");
            for t in 0..k {
                if w[t].is_some() || rows[s][t] <= T::zero() {
                    continue;
                }
                if rows[t][s] <= T::zero() {
                    return Err(Error::InvalidKernel(format!(
                        "q[{s}][{t}] > 0 but q[{t}][{s}] = 0: not reversible"
                    )));
                }
                w[t] = Some(ws * rows[s][t] / rows[t][s]);
                queue.push_back(t);
            }
        }
        if w.iter().any(Option::is_none) {
            return Err(Error::InvalidKernel(
                "support graph is disconnected: stationary law not unique".into(),
            ));
        }
        let total: T = w.iter().map(|x| x.expect("all visited")).sum();
        let pi = w.into_iter().map(|x| x.expect("all visited") / total).collect();
        Self::new(rows, pi)
    }

    fn validate(&self) -> Result<()> {
        let tol = T::validation_tol();
        let k = self.k;
        for s in 0..k {
            let row = self.row(s);
            if row.iter().any(|x| !x.is_finite() || *x < T::zero() || *x > T::one()) {
                return Err(Error::InvalidKernel(format!("row {s} has entries outside [0,1]")));
            }
            let total: T = row.iter().copied().sum();
            if (total - T::one()).abs() > tol {
                return Err(Error::InvalidKernel(format!("row {s} sums to {total}")));
            }
        }
        if self.pi.iter().any(|p| !(*p > T::zero())) {
            return Err(Error::InvalidKernel("pi must be strictly positive".into()));
        }
        let total: T = self.pi.iter().copied().sum();
        if (total - T::one()).abs() > tol {
            return Err(Error::InvalidKernel(format!("pi sums to {total}")));
        }
        for s in 0..k {
            for t in (s + 1)..k {
                let lhs = self.pi[s] * self.q(s, t);
                let rhs = self.pi[t] * self.q(t, s);
                if (lhs - rhs).abs() > tol {
                    return Err(Error::InvalidKernel(format!(
                        "detailed balance fails for ({s},{t}): {lhs} vs {rhs}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn state_count(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn q(&self, s: usize, t: usize) -> T {
        self.q[s * self.k + t]
    }

    #[inline]
    pub fn row(&self, s: usize) -> &[T] {
        &self.q[s * self.k..(s + 1) * self.k]
    }

    pub fn pi(&self) -> &[T] {
        &self.pi
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        (0..self.k).map(|s| self.row(s).to_vec()).collect()
    }

    /// Kernel with states renamed by `perm` (old state `s` becomes `perm[s]`).
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let k = self.k;
        let mut seen = vec![false; k];
        if perm.len() != k || perm.iter().any(|&p| p >= k || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidParameter("relabeling is not a permutation".into()));
        }
        let mut rows = vec![vec![T::zero(); k]; k];
        let mut pi = vec![T::zero(); k];
        for s in 0..k {
            pi[perm[s]] = self.pi[s];
            for t in 0..k {
                rows[perm[s]][perm[t]] = self.q(s, t);
            }
        }
        Self::new(rows, pi)
    }

    /// Renders the plain-text matrix format: one row per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in 0..self.k {
            let line: Vec<String> = self.row(s).iter().map(|x| format!("{x}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }
}

impl<T: Scalar + FromStr> TransitionKernel<T> {
    /// Parses the plain-text matrix format. Blank lines and `#` comments
    /// are skipped; the stationary law is inferred.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<T>().map_err(|_| Error::Parse {
                        line: i + 1,
                        msg: format!("not a number: {tok:?}"),
                    })
                })
                .collect::<Result<Vec<T>>>()?;
            rows.push(row);
        }
        Self::from_rows(rows)
    }
}

/// Two-state Ising kernel: keep the current state with probability
/// `(1 + theta) / 2`.
pub fn make_ising<T: Scalar>(theta: T) -> Result<TransitionKernel<T>> {
    if !(theta.abs() < T::one()) {
        return Err(Error::InvalidParameter(format!("ising theta {theta} must lie in (-1, 1)")));
    }
    let half = T::lit(0.5);
    let keep = (T::one() + theta) * half;
    let flip = (T::one() - theta) * half;
    TransitionKernel::new(vec![vec![keep, flip], vec![flip, keep]], vec![half, half])
}

/// `k`-state Potts kernel: stay with probability `p`, otherwise jump to a
/// uniformly chosen other state.
pub fn make_potts<T: Scalar>(k: usize, p: T) -> Result<TransitionKernel<T>> {
    if k < 2 {
        return Err(Error::InvalidParameter("potts needs k >= 2".into()));
    }
    if !(p >= T::zero() && p <= T::one()) {
        return Err(Error::InvalidParameter(format!("potts p {p} must lie in [0, 1]")));
    }
    let off = (T::one() - p) / T::from_usize_lossy(k - 1);
    let rows = (0..k)
        .map(|s| (0..k).map(|t| if s == t { p } else { off }).collect())
        .collect();
    TransitionKernel::new(rows, vec![T::one() / T::from_usize_lossy(k); k])
}

/// Rank-one kernel whose every row is uniform.
pub fn make_uniform<T: Scalar>(k: usize) -> Result<TransitionKernel<T>> {
    if k == 0 {
        return Err(Error::InvalidParameter("uniform kernel needs k >= 1".into()));
    }
    let u = T::one() / T::from_usize_lossy(k);
    TransitionKernel::new(vec![vec![u; k]; k], vec![u; k])
}

/// Deterministic kernel `s -> perm[s]` with uniform stationary law.
/// Reversibility requires `perm` to be an involution.
pub fn make_permutation<T: Scalar>(perm: &[usize]) -> Result<TransitionKernel<T>> {
    let k = perm.len();
    if k == 0 || perm.iter().any(|&p| p >= k) {
        return Err(Error::InvalidParameter("not a permutation".into()));
    }
    let rows = (0..k)
        .map(|s| (0..k).map(|t| if perm[s] == t { T::one() } else { T::zero() }).collect())
        .collect();
    TransitionKernel::new(rows, vec![T::one() / T::from_usize_lossy(k); k])
}

/// Simple random walk on a connected regular graph; loops and multi-edges
/// contribute their multiplicity.
pub fn make_walk_kernel<T: Scalar>(graph: &RegularGraph) -> Result<TransitionKernel<T>> {
    if !graph.is_connected() {
        return Err(Error::InvalidGraph(
            "walk kernel needs a connected graph (unique stationary law)".into(),
        ));
    }
    let n = graph.n();
    let deg = T::from_usize_lossy(graph.d());
    let rows = (0..n)
        .map(|s| {
            (0..n)
                .map(|t| T::from_usize_lossy(graph.multiplicity(s, t)) / deg)
                .collect()
        })
        .collect();
    TransitionKernel::new(rows, vec![T::one() / T::from_usize_lossy(n); n])
}

/// Multiset of `d` neighbor states, stored sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NeighborConfig {
    states: Vec<usize>,
}

impl NeighborConfig {
    pub fn new(mut states: Vec<usize>) -> Self {
        states.sort_unstable();
        Self { states }
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Calls `f` on every multiset of size `len` over `{0..k-1}`, given as a
/// nondecreasing slice.
pub fn for_each_multiset(k: usize, len: usize, mut f: impl FnMut(&[usize])) {
    let mut cur = vec![0usize; len];
    if len == 0 {
        f(&cur);
        return;
    }
    if k == 0 {
        return;
    }
    loop {
        f(&cur);
        // advance to the next nondecreasing sequence
        let Some(i) = (0..len).rev().find(|&i| cur[i] + 1 < k) else {
            return;
        };
        let v = cur[i] + 1;
        cur[i..].iter_mut().for_each(|c| *c = v);
    }
}

pub(crate) fn binomial(n: u128, r: u128) -> u128 {
    let r = r.min(n.saturating_sub(r));
    (0..r).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Dobrushin coefficient of the heat-bath update at a vertex of degree `d`:
/// the largest total variation between the conditional laws given two
/// neighbor configurations that differ in exactly one coordinate.
///
/// Neighbor configurations are exchangeable, so only multisets of the
/// `d - 1` shared states are enumerated, paired with every ordered pair of
/// differing states. Configurations of zero probability under the chain
/// have no conditional law and are skipped.
pub fn dobrushin_coefficient<T: Scalar>(kernel: &TransitionKernel<T>, d: usize) -> Result<T> {
    if d < 1 {
        return Err(Error::InvalidParameter("degree must be positive".into()));
    }
    let k = kernel.state_count();
    let cost = binomial((k + d - 2) as u128, (d - 1) as u128).saturating_mul(k as u128);
    if cost > DOBRUSHIN_BUDGET {
        return Err(Error::Budget(format!(
            "dobrushin enumeration needs {cost} conditional laws (budget {DOBRUSHIN_BUDGET})"
        )));
    }
    let mut best = T::zero();
    let mut omega = vec![0usize; d];
    for_each_multiset(k, d - 1, |shared| {
        omega[..d - 1].copy_from_slice(shared);
        let laws: Vec<Option<Vec<T>>> = (0..k)
            .map(|a| {
                omega[d - 1] = a;
                conditional_dist(kernel, &omega).ok()
            })
            .collect();
        for a in 0..k {
            let Some(pa) = &laws[a] else { continue };
            for pb in laws[a + 1..].iter().flatten() {
                best = best.max(dist::tv(pa, pb));
            }
        }
    });
    Ok(best)
}

/// Largest modulus among the non-Perron eigenvalues, computed on the
/// symmetrization `D^{1/2} Q D^{-1/2}`.
pub fn spectral_radius<T: Scalar>(kernel: &TransitionKernel<T>) -> T {
    let k = kernel.state_count();
    if k == 1 {
        return T::zero();
    }
    let sq: Vec<T> = kernel.pi().iter().map(|p| p.sqrt()).collect();
    let mut sym = vec![T::zero(); k * k];
    for s in 0..k {
        for t in 0..k {
            sym[s * k + t] = sq[s] * kernel.q(s, t) / sq[t];
        }
    }
    // exact symmetry removes rounding asymmetry before the Jacobi sweep
    for s in 0..k {
        for t in (s + 1)..k {
            let m = (sym[s * k + t] + sym[t * k + s]) * T::lit(0.5);
            sym[s * k + t] = m;
            sym[t * k + s] = m;
        }
    }
    let eig = symmetric_eigenvalues(&sym, k);
    // the Perron eigenvalue 1 is the largest; drop one copy of it
    let perron = eig
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (*a.1 - T::one())
                .abs()
                .partial_cmp(&(*b.1 - T::one()).abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .map(|(i, _)| i)
        .unwrap_or(0);
    let rho = eig
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != perron)
        .map(|(_, e)| e.abs())
        .fold(T::zero(), T::max);
    rho.min(T::one())
}
