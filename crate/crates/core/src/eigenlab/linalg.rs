use crate::scalar::Real;

pub const POWER_TOLERANCE: f64 = 1e-8;
pub const POWER_MAX_ITERATIONS: usize = 10_000;
/// Eigenvalues below this fraction of the largest one count as zero.
pub const RANK_CUTOFF: f64 = 1e-10;

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub(crate) fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Removes the components of `v` along each (unit) vector of `basis`, twice.
pub(crate) fn orthogonalize<T: Real>(v: &mut [T], basis: &[Vec<T>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(v, b);
            for (x, &y) in v.iter_mut().zip(b) {
                *x = *x - c * y;
            }
        }
    }
}

fn mat_vec<T: Real>(m: &[Vec<T>], v: &[T]) -> Vec<T> {
    m.iter().map(|row| dot(row, v)).collect()
}

fn start_vector<T: Real>(n: usize, which: usize) -> Vec<T> {
    // Fixed, non-symmetric starting direction so results do not depend on a
    // random stream.
    (0..n)
        .map(|j| T::lit(1.0 + ((j * 7 + which * 13) % 17) as f64 / 17.0))
        .collect()
}

/// Leading eigenpairs of a symmetric positive semi-definite matrix by power
/// iteration with deflation. Stops early once the next eigenvalue falls below
/// the rank cutoff. Values come out non-increasing and vectors orthonormal.
pub fn power_eigen<T: Real>(matrix: &[Vec<T>], max_pairs: usize) -> (Vec<T>, Vec<Vec<T>>) {
    let n = matrix.len();
    let tol = T::lit(POWER_TOLERANCE).max(T::epsilon() * T::lit(16.0));
    let cutoff = T::lit(RANK_CUTOFF).max(T::epsilon() * T::lit(64.0));
    let mut work: Vec<Vec<T>> = matrix.to_vec();
    let mut values: Vec<T> = Vec::new();
    let mut vectors: Vec<Vec<T>> = Vec::new();
    let mut largest = T::zero();
    for which in 0..max_pairs.min(n) {
        let mut v = start_vector::<T>(n, which);
        orthogonalize(&mut v, &vectors);
        let len = norm(&v);
        if len <= T::epsilon() {
            break;
        }
        v.iter_mut().for_each(|x| *x = *x / len);
        for _ in 0..POWER_MAX_ITERATIONS {
            let mut w = mat_vec(&work, &v);
            orthogonalize(&mut w, &vectors);
            let len = norm(&w);
            if len <= T::min_positive_value() {
                break;
            }
            w.iter_mut().for_each(|x| *x = *x / len);
            let diff: T = v.iter().zip(&w).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt();
            v = w;
            if diff < tol {
                break;
            }
        }
        let lambda = dot(&v, &mat_vec(matrix, &v));
        if which == 0 {
            largest = lambda;
        }
        if lambda <= T::zero() || lambda <= largest * cutoff {
            break;
        }
        for (i, row) in work.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = *x - lambda * v[i] * v[j];
            }
        }
        values.push(lambda);
        vectors.push(v);
    }
    (values, vectors)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Dense cyclic Jacobi eigen-solver, used only as an oracle.
    pub(crate) fn jacobi(mut a: Vec<Vec<f64>>) -> Vec<f64> {
        let n = a.len();
        for _ in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum();
            if off < 1e-24 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut d: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        d.sort_by(|x, y| y.total_cmp(x));
        d
    }

    fn random_psd(n: usize, rank: usize, seed: u64) -> Vec<Vec<f64>> {
        use rand::Rng;
        let mut rng = crate::seed::rng_from_seed(seed);
        let b: Vec<Vec<f64>> = (0..n).map(|_| (0..rank).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        (0..n).map(|i| (0..n).map(|j| dot(&b[i], &b[j])).collect()).collect()
    }

    #[test]
    fn matches_dense_oracle() {
        for (seed, n, rank) in [(1, 8, 8), (2, 12, 5), (3, 16, 15), (4, 6, 1)] {
            let m = random_psd(n, rank, seed);
            let (vals, vecs) = power_eigen(&m, n);
            let want = jacobi(m.clone());
            assert_eq!(vals.len(), rank, "seed {seed}");
            for (got, exp) in vals.iter().zip(&want) {
                assert!((got - exp).abs() <= 1e-6 * want[0], "{got} vs {exp}");
            }
            for i in 0..vecs.len() {
                for j in 0..vecs.len() {
                    let d = dot(&vecs[i], &vecs[j]);
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((d - e).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn zero_matrix_has_no_pairs() {
        let (vals, _) = power_eigen(&vec![vec![0.0f64; 4]; 4], 4);
        assert!(vals.is_empty());
    }
}
