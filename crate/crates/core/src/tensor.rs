//! Dense K-way tensors, observation sets and the unfold/fold algebra.
//!
//! Values are linearized with the first mode varying fastest. The mode-k
//! unfolding is the `n_k x N/n_k` matrix whose columns enumerate the other
//! indices in the cyclic order `(i_{k+1}, ..., i_K, i_1, ..., i_{k-1})`, first
//! listed fastest. That is `permute(X, [k:K, 1:k-1])` followed by a
//! column-major reshape. Modes are 0-based throughout the library.

use std::collections::HashSet;

use faer::{Accum, Mat, Par};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

fn validate_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() {
        return Err(Error::InvalidShape("a tensor needs at least one mode".into()));
    }
    if let Some(k) = shape.iter().position(|&n| n == 0) {
        return Err(Error::InvalidShape(format!("extent of mode {k} is zero")));
    }
    shape
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| Error::InvalidShape("element count overflows".into()))
}

fn check_mode(mode: usize, order: usize) -> Result<()> {
    if mode >= order {
        Err(Error::ModeOutOfRange { mode, order })
    } else {
        Ok(())
    }
}

/// Strides of the mode-1-fastest linearization.
pub fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = Vec::with_capacity(shape.len());
    let mut acc = 1;
    for &n in shape {
        s.push(acc);
        acc *= n;
    }
    s
}

/// For each position of the mode-`mode` unfolding (column-major), the linear
/// index of the tensor entry stored there.
pub fn unfold_permutation(shape: &[usize], mode: usize) -> Vec<usize> {
    let order = shape.len();
    let n: usize = shape.iter().product();
    let st = strides(shape);
    let cyc: Vec<usize> = (mode..order).chain(0..mode).collect();
    let mut counters = vec![0usize; order];
    let mut map = Vec::with_capacity(n);
    let mut lin = 0usize;
    for _ in 0..n {
        map.push(lin);
        for (d, &m) in cyc.iter().enumerate() {
            counters[d] += 1;
            lin += st[m];
            if counters[d] < shape[m] {
                break;
            }
            lin -= st[m] * shape[m];
            counters[d] = 0;
        }
    }
    map
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let n = validate_shape(&shape)?;
        if values.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "shape {shape:?} needs {n} values, got {}",
                values.len()
            )));
        }
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(p));
        }
        Ok(Self { shape, data: values })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let n = validate_shape(&shape)?;
        Ok(Self { shape, data: vec![0.0; n] })
    }

    /// Fills a tensor from a function of the (0-based) multi-index.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let n = validate_shape(&shape)?;
        let mut idx = vec![0usize; shape.len()];
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(f(&idx));
            for (d, &ext) in shape.iter().enumerate() {
                idx[d] += 1;
                if idx[d] < ext {
                    break;
                }
                idx[d] = 0;
            }
        }
        Self::new(shape, data)
    }

    pub(crate) fn from_raw(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Number of modes K.
    pub fn order(&self) -> usize {
        self.shape.len()
    }

    /// Total number of entries N.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn into_values(self) -> Vec<f64> {
        self.data
    }

    pub fn linear_index(&self, index: &[usize]) -> Result<usize> {
        linear_index(&self.shape, index)
    }

    pub fn get(&self, index: &[usize]) -> Result<f64> {
        Ok(self.data[self.linear_index(index)?])
    }

    pub fn inner(&self, other: &DenseTensor) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch(format!(
                "inner product of {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&self, c: f64) -> DenseTensor {
        Self::from_raw(self.shape.clone(), self.data.iter().map(|v| v * c).collect())
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch("tensor difference".into()));
        }
        Ok(Self::from_raw(
            self.shape.clone(),
            self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        ))
    }
}

pub fn linear_index(shape: &[usize], index: &[usize]) -> Result<usize> {
    if index.len() != shape.len() {
        return Err(Error::DimensionMismatch(format!(
            "index of length {} for a {}-way tensor",
            index.len(),
            shape.len()
        )));
    }
    let mut lin = 0;
    let mut stride = 1;
    for (k, (&i, &n)) in index.iter().zip(shape).enumerate() {
        if i >= n {
            return Err(Error::InvalidObservations(format!(
                "index {i} out of bounds for mode {k} with extent {n}"
            )));
        }
        lin += i * stride;
        stride *= n;
    }
    Ok(lin)
}

pub fn multi_index(shape: &[usize], mut lin: usize) -> Vec<usize> {
    shape
        .iter()
        .map(|&n| {
            let i = lin % n;
            lin /= n;
            i
        })
        .collect()
}

/// Mode-`mode` unfolding of `x`.
pub fn unfold(x: &DenseTensor, mode: usize) -> Result<Matrix> {
    check_mode(mode, x.order())?;
    let map = unfold_permutation(&x.shape, mode);
    let rows = x.shape[mode];
    let data = map.iter().map(|&i| x.data[i]).collect();
    Ok(Matrix::from_raw(rows, x.len() / rows, data))
}

/// Inverse of [`unfold`].
pub fn fold(m: &Matrix, mode: usize, shape: &[usize]) -> Result<DenseTensor> {
    let n = validate_shape(shape)?;
    check_mode(mode, shape.len())?;
    if m.rows() != shape[mode] || m.rows() * m.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix cannot fold into mode {mode} of {shape:?}",
            m.rows(),
            m.cols()
        )));
    }
    let map = unfold_permutation(shape, mode);
    let mut data = vec![0.0; n];
    for (p, &i) in map.iter().enumerate() {
        data[i] = m.values()[p];
    }
    Ok(DenseTensor::from_raw(shape.to_vec(), data))
}

/// Mode-k product `X x_k U`: the mode-k extent becomes `U.rows()`.
pub fn mode_product(x: &DenseTensor, u: &Matrix, mode: usize) -> Result<DenseTensor> {
    check_mode(mode, x.order())?;
    if u.cols() != x.shape[mode] {
        return Err(Error::DimensionMismatch(format!(
            "factor has {} columns but mode {mode} has extent {}",
            u.cols(),
            x.shape[mode]
        )));
    }
    let xk = unfold(x, mode)?;
    let mut out = Mat::<f64>::zeros(u.rows(), xk.cols());
    faer::linalg::matmul::matmul(
        out.as_mut(),
        Accum::Replace,
        u.as_faer(),
        xk.as_faer(),
        1.0,
        Par::Seq,
    );
    let mut shape = x.shape.clone();
    shape[mode] = u.rows();
    fold(&Matrix::from_faer(out.as_ref()), mode, &shape)
}

/// Observed coordinates and values: the sampling operator together with `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    shape: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl ObservationSet {
    /// Builds an observation set from 0-based multi-indices.
    pub fn new(shape: Vec<usize>, indices: &[Vec<usize>], values: Vec<f64>) -> Result<Self> {
        validate_shape(&shape)?;
        let linear = indices
            .iter()
            .map(|idx| linear_index(&shape, idx))
            .collect::<Result<Vec<_>>>()?;
        Self::from_linear(shape, linear, values)
    }

    /// Builds an observation set from linear indices.
    pub fn from_linear(shape: Vec<usize>, indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let n = validate_shape(&shape)?;
        if indices.is_empty() {
            return Err(Error::InvalidObservations("no observed entries".into()));
        }
        if indices.len() != values.len() {
            return Err(Error::InvalidObservations(format!(
                "{} indices but {} values",
                indices.len(),
                values.len()
            )));
        }
        if let Some(&i) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidObservations(format!(
                "linear index {i} out of bounds for {n} entries"
            )));
        }
        let mut seen = HashSet::with_capacity(indices.len());
        if let Some(&dup) = indices.iter().find(|&&i| !seen.insert(i)) {
            return Err(Error::InvalidObservations(format!(
                "duplicate index {:?}",
                multi_index(&shape, dup)
            )));
        }
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(p));
        }
        Ok(Self { shape, indices, values })
    }

    /// Observes every entry of `x` listed in `indices`.
    pub fn sample(x: &DenseTensor, indices: Vec<usize>) -> Result<Self> {
        let values = indices
            .iter()
            .map(|&i| {
                x.data.get(i).copied().ok_or_else(|| {
                    Error::InvalidObservations(format!("linear index {i} out of bounds"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_linear(x.shape.clone(), indices, values)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Number of observations M.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn multi_index(&self, i: usize) -> Vec<usize> {
        multi_index(&self.shape, self.indices[i])
    }

    /// Indicator over all N entries.
    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.shape.iter().product()];
        for &i in &self.indices {
            m[i] = true;
        }
        m
    }

    /// Same coordinates with different values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::from_linear(self.shape.clone(), self.indices.clone(), values)
    }
}

/// The observed values of `x`, in observation order.
pub fn observe(x: &DenseTensor, obs: &ObservationSet) -> Result<Vec<f64>> {
    if x.shape != obs.shape {
        return Err(Error::DimensionMismatch(format!(
            "tensor shape {:?} vs observation shape {:?}",
            x.shape, obs.shape
        )));
    }
    Ok(obs.indices.iter().map(|&i| x.data[i]).collect())
}

/// Adjoint of [`observe`]: `y` at the observed coordinates, zero elsewhere.
pub fn scatter(y: &[f64], obs: &ObservationSet) -> Result<DenseTensor> {
    if y.len() != obs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} values for {} observations",
            y.len(),
            obs.len()
        )));
    }
    let mut t = DenseTensor::zeros(obs.shape.clone())?;
    for (&i, &v) in obs.indices.iter().zip(y) {
        t.data[i] = v;
    }
    Ok(t)
}

/// Cached unfolding permutations for every mode of one shape. Solvers work on
/// flat value buffers and go through this to reach matrix form.
#[derive(Debug, Clone)]
pub struct Unfolder {
    shape: Vec<usize>,
    maps: Vec<Vec<usize>>,
}

impl Unfolder {
    pub fn new(shape: &[usize]) -> Result<Self> {
        validate_shape(shape)?;
        let maps = (0..shape.len()).map(|k| unfold_permutation(shape, k)).collect();
        Ok(Self { shape: shape.to_vec(), maps })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn unfold(&self, values: &[f64], mode: usize) -> Matrix {
        let rows = self.shape[mode];
        let data = self.maps[mode].iter().map(|&i| values[i]).collect();
        Matrix::from_raw(rows, values.len() / rows, data)
    }

    pub fn fold_into(&self, m: &Matrix, mode: usize, out: &mut [f64]) {
        for (p, &i) in self.maps[mode].iter().enumerate() {
            out[i] = m.values()[p];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube() -> DenseTensor {
        DenseTensor::new(vec![2, 2, 2], (1..=8).map(f64::from).collect()).unwrap()
    }

    #[test]
    fn unfold_mode1_and_mode2_match_convention() {
        let x = cube();
        let m1 = unfold(&x, 0).unwrap();
        assert_eq!(
            m1,
            Matrix::from_rows(&[vec![1., 3., 5., 7.], vec![2., 4., 6., 8.]]).unwrap()
        );
        let m2 = unfold(&x, 1).unwrap();
        assert_eq!(
            m2,
            Matrix::from_rows(&[vec![1., 5., 2., 6.], vec![3., 7., 4., 8.]]).unwrap()
        );
    }

    #[test]
    fn fold_inverts_unfold_on_cube() {
        let x = cube();
        let back = fold(&unfold(&x, 1).unwrap(), 1, &[2, 2, 2]).unwrap();
        assert_eq!(back.values(), &[1., 2., 3., 4., 5., 6., 7., 8.]);
        let z = fold(&Matrix::zeros(2, 4), 2, &[2, 2, 2]).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mode_errors() {
        let x = cube();
        assert!(matches!(unfold(&x, 3), Err(Error::ModeOutOfRange { .. })));
        assert!(fold(&Matrix::zeros(3, 4), 0, &[2, 2, 2]).is_err());
        assert!(mode_product(&x, &Matrix::zeros(2, 3), 0).is_err());
    }

    #[test]
    fn construction_invariants() {
        assert!(DenseTensor::new(vec![2, 0], vec![]).is_err());
        assert!(DenseTensor::new(vec![], vec![]).is_err());
        assert!(DenseTensor::new(vec![2], vec![1.0, f64::INFINITY]).is_err());
        assert!(DenseTensor::new(vec![2, 2], vec![1.0; 3]).is_err());
    }

    #[test]
    fn observation_set_rejects_duplicates_and_out_of_bounds() {
        let shape = vec![2, 3];
        let dup = ObservationSet::new(shape.clone(), &[vec![0, 1], vec![0, 1]], vec![1.0, 2.0]);
        assert!(matches!(dup, Err(Error::InvalidObservations(_))));
        let oob = ObservationSet::new(shape.clone(), &[vec![2, 0]], vec![1.0]);
        assert!(oob.is_err());
        let empty = ObservationSet::new(shape.clone(), &[], vec![]);
        assert!(empty.is_err());
        let ragged = ObservationSet::new(shape, &[vec![0, 0]], vec![1.0, 2.0]);
        assert!(ragged.is_err());
    }

    #[test]
    fn observe_first_entry_and_full_observation() {
        let x = cube();
        let one = ObservationSet::new(vec![2, 2, 2], &[vec![0, 0, 0]], vec![0.0]).unwrap();
        assert_eq!(observe(&x, &one).unwrap(), vec![1.0]);
        let all = ObservationSet::sample(&x, (0..8).collect()).unwrap();
        assert_eq!(observe(&x, &all).unwrap(), x.values());
        let back = scatter(all.values(), &all).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn scatter_zero_and_length_mismatch() {
        let obs = ObservationSet::from_linear(vec![3, 2], vec![1, 4], vec![1.0, 2.0]).unwrap();
        let z = scatter(&[0.0, 0.0], &obs).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
        assert!(scatter(&[1.0], &obs).is_err());
        let wrong = DenseTensor::zeros(vec![2, 3]).unwrap();
        assert!(observe(&wrong, &obs).is_err());
    }

    #[test]
    fn identity_mode_product_is_noop() {
        let x = cube();
        for k in 0..3 {
            assert_eq!(mode_product(&x, &Matrix::identity(2), k).unwrap(), x);
        }
    }

    #[test]
    fn multi_index_roundtrip() {
        let shape = [3, 4, 2];
        for lin in 0..24 {
            assert_eq!(linear_index(&shape, &multi_index(&shape, lin)).unwrap(), lin);
        }
    }
}
