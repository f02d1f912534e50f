//! Finite probability vectors: validation, total variation, sampling.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Checks that `p` is a probability vector: finite, nonnegative entries
/// summing to one within `tol`.
pub fn validate<T: Scalar>(p: &[T], tol: T) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidDistribution("empty distribution".into()));
    }
    if let Some(x) = p.iter().find(|x| !x.is_finite() || **x < T::zero()) {
        return Err(Error::InvalidDistribution(format!("entry {x} out of range")));
    }
    let total: T = p.iter().copied().sum();
    if (total - T::one()).abs() > tol {
        return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
    }
    Ok(())
}

/// Total variation distance: half the L1 distance.
pub fn tv<T: Scalar>(p: &[T], q: &[T]) -> T {
    assert_eq!(p.len(), q.len(), "distributions over different supports");
    p.iter()
        .zip(q)
        .map(|(&a, &b)| (a - b).abs())
        .sum::<T>()
        / T::lit(2.0)
}

/// Inverse-CDF sampler over a fixed probability vector, in `f64`.
#[derive(Debug, Clone)]
pub struct CumulativeTable {
    cdf: Vec<f64>,
}

impl CumulativeTable {
    pub fn new<T: Scalar>(p: &[T]) -> Self {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = p
            .iter()
            .map(|x| {
                acc += x.as_f64();
                acc
            })
            .collect();
        // rounding must not leave mass for the trailing zero-probability buckets
        if let Some(last) = p.iter().rposition(|x| *x > T::zero()) {
            cdf[last..].iter_mut().for_each(|c| *c = f64::INFINITY);
        }
        Self { cdf }
    }

    pub fn len(&self) -> usize {
        self.cdf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cdf.is_empty()
    }

    /// Index drawn for a uniform `u` in `[0, 1)`.
    #[inline]
    pub fn pick(&self, u: f64) -> usize {
        // tables are tiny; a linear scan beats binary search here
        self.cdf.iter().position(|&c| u < c).unwrap_or(self.cdf.len() - 1)
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.pick(rng.gen::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tv_by_hand() {
        assert!((tv(&[0.6, 0.4], &[0.4, 0.6]) - 0.2f64).abs() < 1e-15);
        assert_eq!(tv(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
    }

    #[test]
    fn validate_rejects_bad_vectors() {
        assert!(validate(&[0.5, 0.6], 1e-9).is_err());
        assert!(validate(&[-0.1, 1.1], 1e-9).is_err());
        assert!(validate::<f64>(&[], 1e-9).is_err());
        assert!(validate(&[0.25, 0.75], 1e-9).is_ok());
    }

    #[test]
    fn table_never_picks_zero_mass() {
        let t = CumulativeTable::new(&[0.0, 1.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            assert_eq!(t.sample(&mut rng), 1);
        }
        assert_eq!(t.pick(0.0), 1);
    }
}
