//! Interpretable structure from a completed tensor: numerical-rank detection,
//! Tucker extraction from the solver's auxiliary matrices, CP (PARAFAC) by
//! alternating least squares on the small core, and recombination of the two
//! into full-size CP factors.

use faer::Side;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::solvers::Solution;
use crate::spectral::{numerical_rank, singular_values, svd_thin};
use crate::tensor::{mode_product, DenseTensor};

/// Default relative threshold for counting singular values.
pub const DEFAULT_RANK_TOL: f64 = 0.01;

const ORTHONORMAL_TOL: f64 = 1e-8;
const UNIT_NORM_TOL: f64 = 1e-8;

/// Core tensor with one orthonormal factor per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerModel {
    core: DenseTensor,
    factors: Vec<Matrix>,
}

impl TuckerModel {
    /// `factors[k]` must be `n_k x r_k` with orthonormal columns, where
    /// `r_k` is the mode-k extent of `core`.
    pub fn new(core: DenseTensor, factors: Vec<Matrix>) -> Result<Self> {
        if factors.len() != core.order() {
            return Err(Error::DimensionMismatch(format!(
                "{} factors for a {}-way core",
                factors.len(),
                core.order()
            )));
        }
        for (k, u) in factors.iter().enumerate() {
            if u.cols() != core.shape()[k] {
                return Err(Error::DimensionMismatch(format!(
                    "factor {k} has {} columns, core extent is {}",
                    u.cols(),
                    core.shape()[k]
                )));
            }
            let gram = u.t_matmul(u)?;
            let dev = gram.sub(&Matrix::identity(u.cols()))?.frobenius_norm();
            if dev > ORTHONORMAL_TOL * (u.cols() as f64).sqrt().max(1.0) {
                return Err(Error::InvalidArgument(format!(
                    "factor {k} is not orthonormal (deviation {dev:.3e})"
                )));
            }
        }
        Ok(Self { core, factors })
    }

    pub fn core(&self) -> &DenseTensor {
        &self.core
    }

    pub fn factors(&self) -> &[Matrix] {
        &self.factors
    }

    pub fn ranks(&self) -> &[usize] {
        self.core.shape()
    }

    /// `G x_1 U_1 ... x_K U_K`.
    pub fn reconstruct(&self) -> Result<DenseTensor> {
        let mut x = self.core.clone();
        for (k, u) in self.factors.iter().enumerate() {
            x = mode_product(&x, u, k)?;
        }
        Ok(x)
    }
}

/// Weighted sum of rank-one terms with unit-norm factor columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CpModel {
    weights: Vec<f64>,
    factors: Vec<Matrix>,
}

impl CpModel {
    /// Checks unit-norm columns and nonincreasing nonnegative weights.
    pub fn new(weights: Vec<f64>, factors: Vec<Matrix>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidArgument("a CP model needs at least one factor".into()));
        }
        let r = weights.len();
        for (k, a) in factors.iter().enumerate() {
            if a.cols() != r {
                return Err(Error::DimensionMismatch(format!(
                    "factor {k} has {} columns for {r} weights",
                    a.cols()
                )));
            }
            for j in 0..r {
                let nrm = norm(a.column(j));
                if (nrm - 1.0).abs() > UNIT_NORM_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "column {j} of factor {k} has norm {nrm}"
                    )));
                }
            }
        }
        if weights.iter().any(|&w| !(w >= 0.0)) || weights.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument("weights must be nonnegative and nonincreasing".into()));
        }
        Ok(Self { weights, factors })
    }

    /// Absorbs column norms of arbitrary factors into the weights, then sorts
    /// components by weight. Columns with zero norm are replaced by the first
    /// basis vector and get weight zero.
    pub fn from_weighted(weights: Vec<f64>, mut factors: Vec<Matrix>) -> Result<Self> {
        let r = weights.len();
        let mut w = weights;
        for a in factors.iter_mut() {
            if a.cols() != r {
                return Err(Error::DimensionMismatch("factor width differs from weight count".into()));
            }
            for (j, wj) in w.iter_mut().enumerate() {
                let nrm = norm(a.column(j));
                let col = a.column_mut(j);
                if nrm > 0.0 {
                    col.iter_mut().for_each(|v| *v /= nrm);
                    *wj *= nrm;
                } else {
                    col.iter_mut().enumerate().for_each(|(i, v)| *v = if i == 0 { 1.0 } else { 0.0 });
                    *wj = 0.0;
                }
            }
        }
        // fold signs of negative weights into the first factor
        for (j, wj) in w.iter_mut().enumerate() {
            if *wj < 0.0 {
                *wj = -*wj;
                factors[0].column_mut(j).iter_mut().for_each(|v| *v = -*v);
            }
        }
        let mut order: Vec<usize> = (0..r).collect();
        order.sort_by(|&a, &b| w[b].total_cmp(&w[a]));
        let weights = order.iter().map(|&j| w[j]).collect();
        let factors = factors
            .iter()
            .map(|a| Matrix::from_fn(a.rows(), r, |i, c| a.get(i, order[c])))
            .collect();
        Ok(Self { weights, factors })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn factors(&self) -> &[Matrix] {
        &self.factors
    }

    /// Number of components R.
    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(Matrix::rows).collect()
    }

    /// `sum_j w_j a_j^(1) o ... o a_j^(K)`.
    pub fn reconstruct(&self) -> Result<DenseTensor> {
        let shape = self.shape();
        let factors = &self.factors;
        let weights = &self.weights;
        DenseTensor::from_fn(shape, |idx| {
            weights
                .iter()
                .enumerate()
                .map(|(j, w)| w * idx.iter().enumerate().map(|(k, &i)| factors[k].get(i, j)).product::<f64>())
                .sum()
        })
    }

    /// Equivalent Tucker model obtained by orthonormalizing every factor with
    /// a thin QR decomposition; the core is `Lambda x_1 R_1 ... x_K R_K`.
    pub fn to_tucker(&self) -> Result<TuckerModel> {
        let r = self.components();
        let order = self.factors.len();
        let mut core = DenseTensor::from_fn(vec![r; order], |idx| {
            if idx.iter().all(|&i| i == idx[0]) {
                self.weights[idx[0]]
            } else {
                0.0
            }
        })?;
        let mut qs = Vec::with_capacity(order);
        for (k, a) in self.factors.iter().enumerate() {
            let qr = a.as_faer().qr();
            let q = Matrix::from_faer(qr.compute_thin_Q().as_ref());
            let rr = Matrix::from_faer(qr.thin_R());
            core = mode_product(&core, &rr, k)?;
            qs.push(q);
        }
        TuckerModel::new(core, qs)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Either kind of model, for code that handles both.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Tucker(TuckerModel),
    Cp(CpModel),
}

pub fn reconstruct(model: &Model) -> Result<DenseTensor> {
    match model {
        Model::Tucker(t) => t.reconstruct(),
        Model::Cp(c) => c.reconstruct(),
    }
}

/// Per-matrix count of singular values above `rel_tol` times the largest.
pub fn detect_ranks(components: &[Matrix], rel_tol: f64) -> Result<Vec<usize>> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::InvalidArgument(format!("rel_tol {rel_tol} outside (0, 1)")));
    }
    components
        .iter()
        .map(|z| Ok(numerical_rank(&singular_values(z)?, rel_tol)))
        .collect()
}

/// Tucker model from a solver run: `U_k` are the leading left singular
/// vectors of the auxiliary matrix `Z_k` (ranks by [`detect_ranks`]) and the
/// core is `X_hat x_1 U_1^T ... x_K U_K^T`. Modes without an auxiliary matrix
/// (the as-a-matrix method) get identity factors.
pub fn extract_tucker(solution: &Solution, rel_tol: f64) -> Result<TuckerModel> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::InvalidArgument(format!("rel_tol {rel_tol} outside (0, 1)")));
    }
    let x = &solution.x_hat;
    let mut factors: Vec<Matrix> = x.shape().iter().map(|&n| Matrix::identity(n)).collect();
    for (z, &k) in solution.components.iter().zip(&solution.modes) {
        let f = svd_thin(z)?;
        let r = numerical_rank(&f.s, rel_tol);
        if r == 0 {
            return Err(Error::EmptyModel(k));
        }
        factors[k] = f.u.leading_columns(r);
    }
    let mut core = x.clone();
    for (k, u) in factors.iter().enumerate() {
        core = mode_product(&core, &u.transpose(), k)?;
    }
    TuckerModel::new(core, factors)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpAlsOptions {
    pub max_sweeps: usize,
    /// Stop when the fit improves by less than this between sweeps.
    pub tol: f64,
    pub seed: u64,
    /// Independent random starts; the best fit is kept.
    pub restarts: usize,
}

impl Default for CpAlsOptions {
    fn default() -> Self {
        Self { max_sweeps: 500, tol: 1e-8, seed: 0, restarts: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct CpFit {
    pub model: CpModel,
    /// `1 - ||G - G_hat|| / ||G||`.
    pub fit: f64,
    /// Fit after each sweep of the kept run.
    pub history: Vec<f64>,
    pub sweeps: usize,
}

/// CP decomposition of a fully known tensor by alternating least squares.
pub fn cp_als(g: &DenseTensor, components: usize, opts: &CpAlsOptions) -> Result<CpFit> {
    if components == 0 {
        return Err(Error::InvalidArgument("at least one CP component is required".into()));
    }
    if opts.max_sweeps == 0 || opts.restarts == 0 {
        return Err(Error::InvalidArgument("max_sweeps and restarts must be positive".into()));
    }
    let gnorm = g.frobenius_norm();
    if gnorm == 0.0 {
        return Err(Error::InvalidArgument("cannot fit CP to a zero tensor".into()));
    }
    for (k, &n) in g.shape().iter().enumerate() {
        if components > n {
            log::warn!("{components} CP components exceed extent {n} of mode {k}");
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<CpFit> = None;
    for _ in 0..opts.restarts {
        let run = cp_als_once(g, gnorm, components, opts, &mut rng)?;
        if best.as_ref().is_none_or(|b| run.fit > b.fit) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn cp_als_once(
    g: &DenseTensor,
    gnorm: f64,
    r: usize,
    opts: &CpAlsOptions,
    rng: &mut ChaCha8Rng,
) -> Result<CpFit> {
    let shape = g.shape().to_vec();
    let order = shape.len();
    let mut factors: Vec<Matrix> = shape
        .iter()
        .map(|&n| Matrix::from_fn(n, r, |_, _| StandardNormal.sample(rng)))
        .collect();
    let mut weights = vec![1.0; r];
    let mut history = Vec::new();
    let mut prev = f64::NEG_INFINITY;

    for _ in 0..opts.max_sweeps {
        for k in 0..order {
            let m = mttkrp(g, &factors, k);
            let mut v = Matrix::from_fn(r, r, |_, _| 1.0);
            for (j, a) in factors.iter().enumerate() {
                if j != k {
                    let gram = a.t_matmul(a)?;
                    for c in 0..r {
                        for rr in 0..r {
                            v.set(rr, c, v.get(rr, c) * gram.get(rr, c));
                        }
                    }
                }
            }
            let mut a = m.matmul(&pinv_symmetric(&v)?)?;
            for j in 0..r {
                let nrm = norm(a.column(j));
                weights[j] = nrm;
                if nrm > 0.0 {
                    a.column_mut(j).iter_mut().for_each(|x| *x /= nrm);
                }
            }
            if a.values().iter().any(|x| !x.is_finite()) {
                return Err(Error::NumericalFailure("CP-ALS factor update".into()));
            }
            factors[k] = a;
        }
        let approx = CpModel { weights: weights.clone(), factors: factors.clone() }.reconstruct()?;
        let fit = 1.0 - approx.sub(g)?.frobenius_norm() / gnorm;
        if !fit.is_finite() {
            return Err(Error::NumericalFailure("CP-ALS fit".into()));
        }
        history.push(fit);
        if (fit - prev).abs() < opts.tol {
            break;
        }
        prev = fit;
    }
    let sweeps = history.len();
    let fit = *history.last().expect("at least one sweep");
    Ok(CpFit { model: CpModel::from_weighted(weights, factors)?, fit, history, sweeps })
}

/// Matricized tensor times Khatri-Rao product of all factors but `mode`,
/// accumulated entry by entry.
fn mttkrp(g: &DenseTensor, factors: &[Matrix], mode: usize) -> Matrix {
    let shape = g.shape();
    let r = factors[0].cols();
    let mut out = Matrix::zeros(shape[mode], r);
    let mut idx = vec![0usize; shape.len()];
    let mut prod = vec![0.0; r];
    for &val in g.values() {
        if val != 0.0 {
            prod.iter_mut().for_each(|p| *p = val);
            for (k, a) in factors.iter().enumerate() {
                if k != mode {
                    for (j, p) in prod.iter_mut().enumerate() {
                        *p *= a.get(idx[k], j);
                    }
                }
            }
            for (j, p) in prod.iter().enumerate() {
                out.set(idx[mode], j, out.get(idx[mode], j) + p);
            }
        }
        for (d, &ext) in shape.iter().enumerate() {
            idx[d] += 1;
            if idx[d] < ext {
                break;
            }
            idx[d] = 0;
        }
    }
    out
}

/// Moore-Penrose inverse of a symmetric positive semidefinite matrix.
fn pinv_symmetric(v: &Matrix) -> Result<Matrix> {
    let n = v.rows();
    let evd = v
        .as_faer()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::NumericalFailure("eigendecomposition".into()))?;
    let s: Vec<f64> = evd.S().column_vector().iter().copied().collect();
    let q = evd.U();
    let top = s.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let cutoff = top * n as f64 * f64::EPSILON;
    Ok(Matrix::from_fn(n, n, |i, j| {
        s.iter()
            .enumerate()
            .filter(|(_, &l)| l.abs() > cutoff)
            .map(|(c, &l)| q[(i, c)] * q[(j, c)] / l)
            .sum()
    }))
}

/// Full-size CP factors `U_k A^(k)` from a CP model fitted on a Tucker core.
pub fn combine_factors(tucker: &TuckerModel, cp: &CpModel) -> Result<CpModel> {
    if cp.factors.len() != tucker.factors.len() {
        return Err(Error::DimensionMismatch(format!(
            "{}-way CP model for a {}-way Tucker model",
            cp.factors.len(),
            tucker.factors.len()
        )));
    }
    let factors = tucker
        .factors
        .iter()
        .zip(&cp.factors)
        .map(|(u, a)| u.matmul(a))
        .collect::<Result<Vec<_>>>()?;
    CpModel::from_weighted(cp.weights.clone(), factors)
}

/// Greedy one-to-one matching of the columns of `truth` to those of
/// `estimate` by absolute cosine similarity. Returns, for each column of
/// `truth`, the matched column of `estimate` and the similarity, or `None`
/// when `estimate` has run out of columns.
pub fn match_columns(truth: &Matrix, estimate: &Matrix) -> Result<Vec<Option<(usize, f64)>>> {
    if truth.rows() != estimate.rows() {
        return Err(Error::DimensionMismatch(format!(
            "factors have {} and {} rows",
            truth.rows(),
            estimate.rows()
        )));
    }
    let mut pairs = Vec::new();
    for i in 0..truth.cols() {
        for j in 0..estimate.cols() {
            let (a, b) = (truth.column(i), estimate.column(j));
            let d = norm(a) * norm(b);
            let c = if d > 0.0 { a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>().abs() / d } else { 0.0 };
            pairs.push((c, i, j));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut out = vec![None; truth.cols()];
    let mut used = vec![false; estimate.cols()];
    for (c, i, j) in pairs {
        if out[i].is_none() && !used[j] {
            out[i] = Some((j, c));
            used[j] = true;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detect_ranks_threshold() {
        let z = Matrix::diag(&[10.0, 5.0, 0.05]);
        assert_eq!(detect_ranks(&[z.clone()], 0.01).unwrap(), vec![2]);
        assert_eq!(detect_ranks(&[z.clone()], 0.001).unwrap(), vec![3]);
        assert_eq!(detect_ranks(&[Matrix::zeros(3, 2)], 0.01).unwrap(), vec![0]);
        assert!(detect_ranks(&[z], 1.0).is_err());
    }

    #[test]
    fn detect_ranks_scale_invariant() {
        let z = Matrix::from_fn(6, 5, |i, j| ((i * 3 + j * 5) % 7) as f64 - 3.0);
        let base = detect_ranks(&[z.clone()], 0.01).unwrap();
        for c in [1e-6, 0.3, 17.0, 1e8] {
            assert_eq!(detect_ranks(&[z.scale(c)], 0.01).unwrap(), base);
        }
    }

    #[test]
    fn cp_model_validation() {
        let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(CpModel::new(vec![2.0, 1.0], vec![a.clone(), a.clone()]).is_ok());
        assert!(CpModel::new(vec![1.0, 2.0], vec![a.clone(), a.clone()]).is_err());
        assert!(CpModel::new(vec![2.0, 1.0], vec![a.scale(2.0), a.clone()]).is_err());
        assert!(CpModel::new(vec![2.0], vec![a]).is_err());
    }

    #[test]
    fn zero_weight_cp_reconstructs_zero() {
        let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let m = CpModel::new(vec![0.0, 0.0], vec![a.clone(), a.clone(), a]).unwrap();
        assert!(m.reconstruct().unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tucker_with_identity_factors_is_core() {
        let core = DenseTensor::from_fn(vec![2, 3, 2], |i| (i[0] + 2 * i[1] + 5 * i[2]) as f64).unwrap();
        let t = TuckerModel::new(core.clone(), vec![Matrix::identity(2), Matrix::identity(3), Matrix::identity(2)])
            .unwrap();
        assert_eq!(t.reconstruct().unwrap(), core);
        let bad = TuckerModel::new(core, vec![Matrix::identity(2), Matrix::identity(3).scale(2.0), Matrix::identity(2)]);
        assert!(bad.is_err());
    }

    #[test]
    fn from_weighted_sorts_and_absorbs_signs() {
        let a = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, -3.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let m = CpModel::from_weighted(vec![1.0, 1.0], vec![a, b]).unwrap();
        assert_eq!(m.weights(), &[3.0, 2.0]);
        assert_eq!(m.factors()[0].column(0), &[0.0, -1.0]);
    }

    #[test]
    fn match_columns_greedy() {
        let t = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let e = Matrix::from_rows(&[vec![0.0, -1.0, 0.0], vec![0.9, 0.0, 0.0], vec![0.1, 0.0, 1.0]]).unwrap();
        let m = match_columns(&t, &e).unwrap();
        assert_eq!(m[0].unwrap().0, 1);
        assert!((m[0].unwrap().1 - 1.0).abs() < 1e-15);
        assert_eq!(m[1].unwrap().0, 0);
    }

    #[test]
    fn pinv_of_singular_gram() {
        let v = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let p = pinv_symmetric(&v).unwrap();
        // pinv of [[1,1],[1,1]] is [[1/4,1/4],[1/4,1/4]]
        for &x in p.values() {
            assert!((x - 0.25).abs() < 1e-12);
        }
    }
}
