mod common;

use common::*;
use proptest::prelude::*;
use tracenorm::spectral::{project_spectral_ball, prox_trace, singular_values, spectral_norm, svd_thin, trace_norm};
use tracenorm::Matrix;

fn matrix_strategy() -> impl Strategy<Value = Matrix> {
    (1usize..7, 1usize..7).prop_flat_map(|(r, c)| {
        prop::collection::vec(-5.0f64..5.0, r * c).prop_map(move |v| Matrix::from_col_major(r, c, v).unwrap())
    })
}

#[test]
fn singular_values_match_gram_eigenvalues() {
    let mut g = rng(1);
    for (r, c) in [(5, 3), (3, 5), (6, 6), (1, 4), (7, 2)] {
        let m = random_matrix(&mut g, r, c);
        let s = singular_values(&m).unwrap();
        let o = singular_values_oracle(&m);
        assert_eq!(s.len(), r.min(c));
        for (a, b) in s.iter().zip(&o) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }
}

#[test]
fn svd_recomposes_input() {
    let mut g = rng(2);
    let m = random_matrix(&mut g, 8, 5);
    let f = svd_thin(&m).unwrap();
    assert!(rel_diff(&f.recompose(), &m) < 1e-13);
    let utu = f.u.t_matmul(&f.u).unwrap();
    assert!(max_abs_diff(&utu, &Matrix::identity(5)) < 1e-12);
}

#[test]
fn prox_matches_oracle_and_examples() {
    let mut g = rng(3);
    for t in [0.0, 0.1, 0.5, 2.0, 100.0] {
        let m = random_matrix(&mut g, 6, 4);
        assert!(max_abs_diff(&prox_trace(&m, t).unwrap(), &prox_oracle(&m, t)) < 1e-10);
    }
    let p = prox_trace(&Matrix::diag(&[3.0, 1.0, 0.5]), 1.0).unwrap();
    assert_eq!(singular_values(&p).unwrap().iter().filter(|&&s| s > 1e-14).count(), 1);
    assert!((p.get(0, 0) - 2.0).abs() < 1e-14);
}

#[test]
fn projection_examples() {
    let p = project_spectral_ball(&Matrix::diag(&[3.0, 1.0, 0.5]), 1.0).unwrap();
    let s = singular_values(&p).unwrap();
    assert!(s.iter().zip([1.0, 1.0, 0.5]).all(|(a, b)| (a - b).abs() < 1e-14));
    assert!(project_spectral_ball(&Matrix::diag(&[1.0]), -1.0).is_err());
}

/// The prox output minimizes `t||X||_* + ||X - M||^2/2`: random nearby
/// points never do better.
#[test]
fn prox_is_optimal_against_perturbations() {
    let mut g = rng(4);
    let obj = |x: &Matrix, m: &Matrix, t: f64| t * trace_norm(x).unwrap() + 0.5 * x.sub(m).unwrap().frobenius_norm().powi(2);
    for _ in 0..20 {
        let m = random_matrix(&mut g, 5, 4);
        let t = 0.3;
        let p = prox_trace(&m, t).unwrap();
        let best = obj(&p, &m, t);
        for _ in 0..20 {
            let d = random_matrix(&mut g, 5, 4).scale(1e-3);
            assert!(obj(&p.add(&d).unwrap(), &m, t) >= best - 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn moreau_decomposition(m in matrix_strategy(), t in 0.0f64..4.0) {
        let sum = prox_trace(&m, t).unwrap().add(&project_spectral_ball(&m, t).unwrap()).unwrap();
        prop_assert!(max_abs_diff(&sum, &m) <= 1e-10 * (1.0 + m.frobenius_norm()));
    }

    #[test]
    fn prox_is_nonexpansive(a in matrix_strategy(), seed in any::<u64>(), t in 0.0f64..3.0) {
        let mut g = rng(seed);
        let b = random_matrix(&mut g, a.rows(), a.cols()).scale(3.0);
        let d_out = prox_trace(&a, t).unwrap().sub(&prox_trace(&b, t).unwrap()).unwrap().frobenius_norm();
        let d_in = a.sub(&b).unwrap().frobenius_norm();
        prop_assert!(d_out <= d_in * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn projection_lands_in_ball(m in matrix_strategy(), t in 0.01f64..4.0) {
        let p = project_spectral_ball(&m, t).unwrap();
        prop_assert!(spectral_norm(&p).unwrap() <= t * (1.0 + 1e-12));
        if spectral_norm(&m).unwrap() <= t {
            prop_assert_eq!(&p, &m);
        }
    }

    #[test]
    fn prox_shrinks_singular_values(m in matrix_strategy(), t in 0.0f64..4.0) {
        let s = singular_values(&m).unwrap();
        let sp = singular_values(&prox_trace(&m, t).unwrap()).unwrap();
        for (a, b) in s.iter().zip(&sp) {
            prop_assert!((b - (a - t).max(0.0)).abs() <= 1e-10 * (1.0 + a));
        }
        let nz = s.iter().filter(|&&x| x > t * (1.0 + 1e-9) + 1e-9).count();
        let nzp = sp.iter().filter(|&&x| x > 1e-9 * (1.0 + s[0])).count();
        prop_assert_eq!(nz, nzp);
    }

    #[test]
    fn norms_are_consistent(m in matrix_strategy()) {
        let s = singular_values(&m).unwrap();
        let tn = trace_norm(&m).unwrap();
        let sn = spectral_norm(&m).unwrap();
        prop_assert!((tn - s.iter().sum::<f64>()).abs() <= 1e-12 * (1.0 + tn));
        prop_assert!(sn <= tn * (1.0 + 1e-12) + 1e-12);
        prop_assert!(m.frobenius_norm() <= tn * (1.0 + 1e-12) + 1e-12);
        prop_assert!(tn <= (s.len() as f64).sqrt() * m.frobenius_norm() * (1.0 + 1e-12) + 1e-12);
    }
}
