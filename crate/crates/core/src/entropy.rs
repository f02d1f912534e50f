//! Configuration entropies and the entropy inequalities that every
//! typical process on the `d`-regular tree satisfies. All entropies are
//! in nats.

use serde::Serialize;

use crate::dist;
use crate::error::{Error, Result};
use crate::kernel::TransitionKernel;
use crate::scalar::{xlnx, Scalar};
use crate::tree::JointLaw;

/// Absolute tolerance applied to inequality slacks.
pub const VERDICT_TOL: f64 = 1e-12;

/// Shannon entropy `-sum p ln p` with `0 ln 0 = 0`.
pub fn shannon<T: Scalar>(p: &[T]) -> Result<T> {
    dist::validate(p, T::lit(1e-9))?;
    Ok(-p.iter().map(|&x| xlnx(x)).sum::<T>())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Passes,
    Fails,
}

/// Inequality outcome with its signed slack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Check {
    pub verdict: Verdict,
    pub slack: f64,
}

impl Check {
    fn from_slack(slack: f64) -> Self {
        let verdict = if slack >= -VERDICT_TOL { Verdict::Passes } else { Verdict::Fails };
        Self { verdict, slack }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReport {
    pub d: usize,
    pub h_vertex: f64,
    pub h_edge: f64,
    pub h_star: f64,
    /// `(d/2) h_edge - (d-1) h_vertex`
    pub slack_edge_vertex: f64,
    /// `h_star - (d/2) h_edge`
    pub slack_star_edge: f64,
    pub edge_vertex: Check,
    pub star_edge: Check,
}

impl EntropyReport {
    pub fn from_entropies(d: usize, h_vertex: f64, h_edge: f64, h_star: f64) -> Self {
        let half_d = d as f64 / 2.0;
        let slack_edge_vertex = half_d * h_edge - (d as f64 - 1.0) * h_vertex;
        let slack_star_edge = h_star - half_d * h_edge;
        Self {
            d,
            h_vertex,
            h_edge,
            h_star,
            slack_edge_vertex,
            slack_star_edge,
            edge_vertex: Check::from_slack(slack_edge_vertex),
            star_edge: Check::from_slack(slack_star_edge),
        }
    }
}

/// Vertex, edge and star entropies of the branching Markov chain in closed
/// form: the edge adds the mean row entropy once, the star `d` times.
pub fn bmc_entropy_report<T: Scalar>(kernel: &TransitionKernel<T>, d: usize) -> Result<EntropyReport> {
    if d < 3 {
        return Err(Error::InvalidParameter("degree must be >= 3".into()));
    }
    let h_vertex = shannon(kernel.pi())?.as_f64();
    let mut h_cond = 0.0;
    for s in 0..kernel.state_count() {
        h_cond += kernel.pi()[s].as_f64() * shannon(kernel.row(s))?.as_f64();
    }
    Ok(EntropyReport::from_entropies(
        d,
        h_vertex,
        h_vertex + h_cond,
        h_vertex + d as f64 * h_cond,
    ))
}

/// `(d/2) h_edge >= (d-1) h_vertex`; failure certifies the process is not
/// typical, hence not a factor of i.i.d.
pub fn check_edge_vertex(report: &EntropyReport, d: usize) -> Check {
    Check::from_slack(d as f64 / 2.0 * report.h_edge - (d as f64 - 1.0) * report.h_vertex)
}

/// `h_star >= (d/2) h_edge`.
pub fn check_star_edge(report: &EntropyReport, d: usize) -> Check {
    Check::from_slack(report.h_star - d as f64 / 2.0 * report.h_edge)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub k: usize,
    pub q_deg: usize,
    pub d: usize,
    /// `q_deg^{d/(d-2)}`; the walk chain is excluded when `k` exceeds it.
    pub threshold: f64,
    pub nontypical: bool,
    /// `(d/2)(ln k + ln q_deg)`
    pub lhs: f64,
    /// `(d-1) ln k`
    pub rhs: f64,
    /// Spectral radius target `2 sqrt(q_deg - 1) / q_deg` of a Ramanujan graph.
    pub ramanujan_radius: f64,
}

/// Arithmetic certificate for the random walk on a `q_deg`-regular graph
/// on `k` vertices: its branching chain has `h_vertex = ln k`,
/// `h_edge = ln k + ln q_deg`, so the edge/vertex inequality fails
/// exactly when `k > q_deg^{d/(d-2)}`.
pub fn expander_counterexample(k: usize, q_deg: usize, d: usize) -> Result<CounterexampleReport> {
    if k < 2 || q_deg < 3 || d < 3 {
        return Err(Error::InvalidParameter("need k > 1, q_deg >= 3, d >= 3".into()));
    }
    let (kf, qf, df) = (k as f64, q_deg as f64, d as f64);
    let lhs = df / 2.0 * (kf.ln() + qf.ln());
    let rhs = (df - 1.0) * kf.ln();
    // integer comparison k^(d-2) > q_deg^d avoids rounding at equality
    let nontypical = match (
        (k as u128).checked_pow(d as u32 - 2),
        (q_deg as u128).checked_pow(d as u32),
    ) {
        (Some(a), Some(b)) => a > b,
        _ => lhs < rhs,
    };
    Ok(CounterexampleReport {
        k,
        q_deg,
        d,
        threshold: qf.powf(df / (df - 2.0)),
        nontypical,
        lhs,
        rhs,
        ramanujan_radius: 2.0 * (qf - 1.0).sqrt() / qf,
    })
}

/// Sum of the coordinate marginal entropies minus the joint entropy.
pub fn total_correlation<T: Scalar>(joint: &JointLaw<T>) -> Result<T> {
    let h_joint = shannon(&joint.probs)?;
    let mut h_marg = T::zero();
    for i in 0..joint.arity {
        h_marg = h_marg + shannon(&joint.marginal(i))?;
    }
    Ok(h_marg - h_joint)
}

/// Total variation bound `sqrt(t / 2)` from Pinsker's inequality.
pub fn pinsker_tv_bound<T: Scalar>(t: T) -> T {
    (t.max(T::zero()) / T::lit(2.0)).sqrt()
}

/// Bound on the distance of the star-minus-leaf law from the product of
/// its marginals, for an entropy gap `b`: `sqrt(b (d-1)/(d-2))`.
pub fn star_gap_tv_bound<T: Scalar>(b: T, d: usize) -> T {
    let t = b * T::lit(2.0 * (d as f64 - 1.0) / (d as f64 - 2.0));
    pinsker_tv_bound(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{make_ising, make_permutation, make_uniform};
    use crate::tree::{exact_bmc_marginals, Pattern};
    use approx::assert_relative_eq;

    #[test]
    fn shannon_examples() {
        assert_eq!(shannon(&[0.0, 1.0, 0.0f64]).unwrap(), 0.0);
        assert_relative_eq!(shannon(&[0.25f64; 4]).unwrap(), 4f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(shannon(&[0.3, 0.7f64]).unwrap(), 0.6108643020548935, epsilon = 1e-15);
        assert!(shannon(&[0.3, 0.3f64]).is_err());
    }

    #[test]
    fn uniform_kernel_passes_with_slack_ln_k() {
        for d in 3..=10 {
            let r = bmc_entropy_report(&make_uniform::<f64>(3).unwrap(), d).unwrap();
            assert_eq!(check_edge_vertex(&r, d).verdict, Verdict::Passes);
            assert_relative_eq!(r.slack_edge_vertex, 3f64.ln(), epsilon = 1e-12);
            assert_eq!(check_star_edge(&r, d).verdict, Verdict::Passes);
        }
    }

    #[test]
    fn permutation_chain_fails_star_edge() {
        let k = make_permutation::<f64>(&[1, 0, 3, 2]).unwrap();
        let r = bmc_entropy_report(&k, 3).unwrap();
        assert_relative_eq!(r.h_edge, 4f64.ln(), epsilon = 1e-14);
        assert_relative_eq!(r.h_star, 4f64.ln(), epsilon = 1e-14);
        assert_eq!(check_star_edge(&r, 3).verdict, Verdict::Fails);
    }

    #[test]
    fn ising_passes_edge_vertex() {
        let r = bmc_entropy_report(&make_ising(0.2f64).unwrap(), 3).unwrap();
        assert_eq!(r.edge_vertex.verdict, Verdict::Passes);
    }

    #[test]
    fn counterexample_thresholds() {
        assert!(expander_counterexample(70, 4, 3).unwrap().nontypical);
        assert!(!expander_counterexample(100, 6, 3).unwrap().nontypical);
        assert!(expander_counterexample(37, 6, 4).unwrap().nontypical);
        // boundary: k = q^{d/(d-2)} exactly is not excluded
        assert!(!expander_counterexample(64, 4, 3).unwrap().nontypical);
        assert!(expander_counterexample(1, 4, 3).is_err());
    }

    #[test]
    fn total_correlation_examples() {
        let product = exact_bmc_marginals(&make_uniform::<f64>(2).unwrap(), Pattern::Edge).unwrap();
        assert!(total_correlation(&product).unwrap().abs() < 1e-15);
        let copy = JointLaw { k: 2, arity: 2, probs: vec![0.5, 0.0, 0.0, 0.5f64] };
        assert_relative_eq!(total_correlation(&copy).unwrap(), 2f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(pinsker_tv_bound(0.08f64), 0.2, epsilon = 1e-15);
        let b = 0.01 * 2f64.ln();
        assert_relative_eq!(star_gap_tv_bound(b, 3), (b * 2.0).sqrt(), epsilon = 1e-15);
    }
}
