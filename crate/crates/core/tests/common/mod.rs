#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tracenorm::Matrix;

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues (descending) and eigenvectors as columns.
pub fn jacobi_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.rows();
    let mut a = a.clone();
    let mut v = Matrix::identity(n);
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a.get(i, j).powi(2)).sum();
        if off < 1e-30 * (1.0 + a.frobenius_norm().powi(2)) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(j, j).total_cmp(&a.get(i, i)));
    let vals = order.iter().map(|&i| a.get(i, i)).collect();
    let vecs = Matrix::from_fn(n, n, |r, c| v.get(r, order[c]));
    (vals, vecs)
}

/// Singular values from the eigenvalues of the smaller Gram matrix.
pub fn singular_values_oracle(m: &Matrix) -> Vec<f64> {
    let g = if m.rows() <= m.cols() { m.matmul(&m.transpose()).unwrap() } else { m.t_matmul(m).unwrap() };
    jacobi_eigen(&g).0.into_iter().map(|l| l.max(0.0).sqrt()).collect()
}

/// Applies `f` to the singular values of `m` through `M V diag(f(s)/s) V^T`,
/// with `V` the eigenvectors of `M^T M`.
pub fn spectral_map_oracle(m: &Matrix, f: impl Fn(f64) -> f64) -> Matrix {
    let mt = m.rows() < m.cols();
    let a = if mt { m.transpose() } else { m.clone() };
    let (vals, v) = jacobi_eigen(&a.t_matmul(&a).unwrap());
    let n = v.rows();
    let top = vals.first().copied().unwrap_or(0.0).max(0.0).sqrt();
    let scale: Vec<f64> = vals
        .iter()
        .map(|&l| {
            let s = l.max(0.0).sqrt();
            if s > 1e-13 * top.max(1e-300) { f(s) / s } else { 0.0 }
        })
        .collect();
    let w = Matrix::from_fn(n, n, |i, j| (0..n).map(|c| v.get(i, c) * scale[c] * v.get(j, c)).sum());
    let out = a.matmul(&w).unwrap();
    if mt { out.transpose() } else { out }
}

pub fn prox_oracle(m: &Matrix, t: f64) -> Matrix {
    spectral_map_oracle(m, |s| (s - t).max(0.0))
}

pub fn projection_oracle(m: &Matrix, t: f64) -> Matrix {
    spectral_map_oracle(m, |s| s.min(t))
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm().max(1e-300)
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
