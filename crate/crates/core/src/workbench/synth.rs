//! Synthetic low-rank tensors, random observation masks and the
//! generalization-error metric.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorize::TuckerModel;
use crate::matrix::Matrix;
use crate::tensor::{DenseTensor, ObservationSet};

/// Shape, multilinear ranks and seed of a synthetic tensor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub shape: Vec<usize>,
    pub ranks: Vec<usize>,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(shape: Vec<usize>, ranks: Vec<usize>, seed: u64) -> Result<Self> {
        let s = Self { shape, ranks, seed };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.shape.is_empty() || self.shape.len() != self.ranks.len() {
            return Err(Error::InvalidArgument(format!(
                "shape {:?} and ranks {:?} must be nonempty and of equal length",
                self.shape, self.ranks
            )));
        }
        for (k, (&n, &r)) in self.shape.iter().zip(&self.ranks).enumerate() {
            if n == 0 || r == 0 {
                return Err(Error::InvalidArgument(format!("mode {k}: extents and ranks must be positive")));
            }
            if r > n {
                return Err(Error::InvalidArgument(format!("mode {k}: rank {r} exceeds extent {n}")));
            }
            let others: usize = self
                .ranks
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, &r)| r)
                .product();
            if self.ranks.len() > 1 && r > others {
                return Err(Error::InvalidArgument(format!(
                    "mode {k}: rank {r} is not attainable with the other ranks (product {others})"
                )));
            }
        }
        Ok(())
    }
}

/// `sum_k min(r_k, prod_{k' != k} r_k')`, the attainable sum of mode ranks.
pub fn sum_of_ranks(ranks: &[usize]) -> usize {
    (0..ranks.len())
        .map(|k| {
            let others: usize =
                ranks.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &r)| r).product();
            ranks[k].min(others)
        })
        .sum()
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Orthonormal `n x r` matrix distributed according to the Haar measure: the
/// Q factor of a Gaussian matrix with column signs fixed by `diag(R) > 0`.
pub fn haar_orthonormal(rng: &mut ChaCha8Rng, n: usize, r: usize) -> Matrix {
    let g = gaussian_matrix(rng, n, r);
    let qr = g.as_faer().qr();
    let q = qr.compute_thin_Q();
    let rr = qr.thin_R();
    Matrix::from_fn(n, r, |i, j| {
        let s = if rr[(j, j)] < 0.0 { -1.0 } else { 1.0 };
        q[(i, j)] * s
    })
}

/// Random Tucker model: standard normal core, Haar-distributed orthonormal factors.
pub fn gen_lowrank_model(spec: &SynthSpec) -> Result<TuckerModel> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let core_len: usize = spec.ranks.iter().product();
    let core_vals: Vec<f64> = (0..core_len).map(|_| StandardNormal.sample(&mut rng)).collect();
    let core = DenseTensor::new(spec.ranks.clone(), core_vals)?;
    let factors = spec
        .shape
        .iter()
        .zip(&spec.ranks)
        .map(|(&n, &r)| haar_orthonormal(&mut rng, n, r))
        .collect();
    TuckerModel::new(core, factors)
}

/// Rank-`(r_1..r_K)` tensor drawn as in [`gen_lowrank_model`]; deterministic in the seed.
pub fn gen_lowrank(spec: &SynthSpec) -> Result<DenseTensor> {
    gen_lowrank_model(spec)?.reconstruct()
}

/// Number of samples for a fraction of `n` entries: `ceil(fraction * n)`,
/// guarded against representation error in `fraction`.
pub fn sample_count(n: usize, fraction: f64) -> usize {
    let exact = fraction * n as f64;
    let m = (exact - 1e-9 * exact.max(1.0)).ceil() as usize;
    m.clamp(1, n)
}

/// Uniformly samples `ceil(fraction * N)` distinct linear indices, sorted.
pub fn sample_mask(shape: &[usize], fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("fraction {fraction} outside (0, 1]")));
    }
    let n: usize = shape.iter().product();
    if shape.is_empty() || n == 0 {
        return Err(Error::InvalidShape(format!("{shape:?}")));
    }
    let m = sample_count(n, fraction);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, n, m).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// Observes a random `fraction` of the entries of `x`.
pub fn observe_fraction(x: &DenseTensor, fraction: f64, seed: u64) -> Result<ObservationSet> {
    ObservationSet::sample(x, sample_mask(x.shape(), fraction, seed)?)
}

/// `||y_pred - y_test|| / ||y_test||` over the entries not in `obs`.
pub fn generalization_error(
    x_hat: &DenseTensor,
    x_true: &DenseTensor,
    obs: &ObservationSet,
) -> Result<f64> {
    if x_hat.shape() != x_true.shape() || x_true.shape() != obs.shape() {
        return Err(Error::DimensionMismatch(format!(
            "prediction {:?}, truth {:?}, observations {:?}",
            x_hat.shape(),
            x_true.shape(),
            obs.shape()
        )));
    }
    if obs.len() == x_true.len() {
        return Err(Error::InvalidArgument("every entry is observed; no test entries".into()));
    }
    let mask = obs.mask();
    let (mut num, mut den) = (0.0, 0.0);
    for ((&p, &t), &m) in x_hat.values().iter().zip(x_true.values()).zip(&mask) {
        if !m {
            num += (p - t) * (p - t);
            den += t * t;
        }
    }
    if den == 0.0 {
        return Err(Error::InvalidArgument("test entries are all zero".into()));
    }
    Ok((num / den).sqrt())
}
