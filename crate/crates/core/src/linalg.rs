//! Small dense symmetric eigenvalue solver (cyclic Jacobi).

use crate::scalar::Scalar;

/// Eigenvalues of a symmetric `n x n` matrix stored row-major, sorted
/// in descending order.
///
/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops
/// below `tol` times the matrix norm, or `max_sweeps` is reached.
pub fn symmetric_eigenvalues<T: Scalar>(a: &[T], n: usize) -> Vec<T> {
    assert_eq!(a.len(), n * n, "matrix must be n x n");
    let mut m = a.to_vec();
    let norm: T = m.iter().map(|&x| x * x).sum::<T>().sqrt();
    let tol = T::epsilon() * T::lit(4.0) * norm.max(T::one());
    let max_sweeps = 100;
    for _ in 0..max_sweeps {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum::<T>()
            .sqrt();
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= T::min_positive_value() {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<T> = (0..n).map(|i| m[i * n + i]).collect();
    eig.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    eig
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn diagonal_matrix() {
        let e = symmetric_eigenvalues(&[3.0, 0.0, 0.0, -1.0], 2);
        assert_eq!(e, vec![3.0, -1.0]);
    }

    #[test]
    fn two_by_two() {
        // [[2,1],[1,2]] has eigenvalues 3 and 1
        let e = symmetric_eigenvalues(&[2.0, 1.0, 1.0, 2.0], 2);
        assert_relative_eq!(e[0], 3.0, epsilon = 1e-12);
        assert_relative_eq!(e[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn complete_graph_adjacency() {
        // K_5: eigenvalues 4 and -1 (x4)
        let n = 5;
        let a: Vec<f64> = (0..n * n)
            .map(|i| if i / n == i % n { 0.0 } else { 1.0 })
            .collect();
        let e = symmetric_eigenvalues(&a, n);
        assert_relative_eq!(e[0], 4.0, epsilon = 1e-10);
        for x in &e[1..] {
            assert_relative_eq!(*x, -1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn works_in_f32() {
        let e = symmetric_eigenvalues(&[2.0f32, 1.0, 1.0, 2.0], 2);
        assert!((e[0] - 3.0).abs() < 1e-5);
    }
}
