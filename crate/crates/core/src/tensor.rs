//! Dense N-way tensors stored row-major, with the entrywise algebra used by
//! the multiplicative updates.

use ndarray::Array2;

use crate::error::{shape_err, Error, Result};

/// Default lower bound applied to parameters and inside negative powers.
pub const DEFAULT_EPS: f64 = 1e-12;

/// A dense row-major tensor of `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

/// A zero-based coordinate into a [`DenseTensor`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<usize>);

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        validate_shape(&shape)?;
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(shape_err!(
                "data length {} does not match shape {:?} ({} entries)",
                data.len(),
                shape,
                expected
            ));
        }
        Ok(Self { shape, data })
    }

    pub fn filled(shape: Vec<usize>, value: f64) -> Result<Self> {
        validate_shape(&shape)?;
        let n = shape.iter().product();
        Ok(Self {
            shape,
            data: vec![value; n],
        })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        Self::filled(shape, 0.0)
    }

    /// Builds a tensor by evaluating `f` at every multi-index in row-major order.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        validate_shape(&shape)?;
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..n {
            data.push(f(&idx));
            increment(&mut idx, &shape);
        }
        Ok(Self { shape, data })
    }

    /// Views a matrix as an order-2 tensor.
    pub fn from_matrix(m: &Array2<f64>) -> Self {
        let (r, c) = m.dim();
        Self {
            shape: vec![r, c],
            data: m.iter().copied().collect(),
        }
    }

    /// Converts an order-2 tensor into a matrix.
    pub fn to_matrix(&self) -> Result<Array2<f64>> {
        if self.order() != 2 {
            return Err(shape_err!("expected an order-2 tensor, got shape {:?}", self.shape));
        }
        Ok(Array2::from_shape_vec((self.shape[0], self.shape[1]), self.data.clone()).expect("shape checked"))
    }

    pub(crate) fn from_parts_unchecked(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Row-major strides.
    pub fn strides(&self) -> Vec<usize> {
        strides_of(&self.shape)
    }

    /// Flat offset of a multi-index, checked against the shape.
    pub fn offset(&self, index: &MultiIndex) -> Result<usize> {
        if index.0.len() != self.order() {
            return Err(shape_err!(
                "index of length {} for tensor of order {}",
                index.0.len(),
                self.order()
            ));
        }
        let mut off = 0;
        for (k, (&i, &d)) in index.0.iter().zip(&self.shape).enumerate() {
            if i >= d {
                return Err(shape_err!("coordinate {i} out of range for mode {k} of size {d}"));
            }
            off = off * d + i;
        }
        Ok(off)
    }

    pub fn get(&self, index: &MultiIndex) -> Result<f64> {
        Ok(self.data[self.offset(index)?])
    }

    /// Unchecked row-major access; panics on out-of-range coordinates.
    pub fn at(&self, index: &[usize]) -> f64 {
        let mut off = 0;
        for (&i, &d) in index.iter().zip(&self.shape) {
            assert!(i < d);
            off = off * d + i;
        }
        self.data[off]
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a * b)
    }

    /// Entrywise division; every divisor entry must be strictly positive.
    pub fn div(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        if let Some(d) = other.data.iter().find(|&&d| !(d > 0.0)) {
            return Err(Error::Domain(format!("nonpositive divisor {d}")));
        }
        self.zip_map(other, |a, b| a / b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn max_scalar(&self, floor: f64) -> Self {
        self.map(|v| v.max(floor))
    }

    /// Entrywise power. With `safeguard = Some(eps)` every base is replaced by
    /// `max(base, eps)` first; without it, a negative exponent on a
    /// nonpositive base is a domain error.
    pub fn pow(&self, exponent: f64, safeguard: Option<f64>) -> Result<Self> {
        match safeguard {
            Some(eps) => Ok(self.map(|v| powf(v.max(eps), exponent))),
            None => {
                if exponent < 0.0 {
                    if let Some(v) = self.data.iter().find(|&&v| !(v > 0.0)) {
                        return Err(Error::Domain(format!(
                            "base {v} raised to negative exponent {exponent}"
                        )));
                    }
                }
                Ok(self.map(|v| powf(v, exponent)))
            }
        }
    }

    pub fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(shape_err!("shape mismatch: {:?} vs {:?}", self.shape, other.shape));
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `x^e` with exact shortcuts for the exponents the β-divergence updates hit
/// most often.
#[inline]
pub fn powf(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if e == 1.0 {
        x
    } else if e == -1.0 {
        1.0 / x
    } else if e == 2.0 {
        x * x
    } else if e == -2.0 {
        1.0 / (x * x)
    } else if e == 0.5 {
        x.sqrt()
    } else if e == -0.5 {
        1.0 / x.sqrt()
    } else if e == 1.5 {
        x * x.sqrt()
    } else if e == -1.5 {
        1.0 / (x * x.sqrt())
    } else {
        x.powf(e)
    }
}

pub(crate) fn validate_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() {
        return Err(shape_err!("tensor order must be at least 1"));
    }
    if let Some(k) = shape.iter().position(|&d| d == 0) {
        return Err(shape_err!("dimension {k} of shape {shape:?} is zero"));
    }
    Ok(())
}

pub(crate) fn strides_of(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * shape[k + 1];
    }
    strides
}

/// Advances a row-major multi-index in place (wraps to zero after the last).
pub(crate) fn increment(idx: &mut [usize], shape: &[usize]) {
    for k in (0..shape.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return;
        }
        idx[k] = 0;
    }
}

/// A parameter block whose entries can be accessed as one flat slice.
pub trait Block: Clone {
    fn values(&self) -> &[f64];
    fn values_mut(&mut self) -> &mut [f64];
}

impl Block for DenseTensor {
    fn values(&self) -> &[f64] {
        &self.data
    }
    fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

impl Block for Array2<f64> {
    fn values(&self) -> &[f64] {
        self.as_slice().expect("parameter matrices are kept in standard layout")
    }
    fn values_mut(&mut self) -> &mut [f64] {
        self.as_slice_mut()
            .expect("parameter matrices are kept in standard layout")
    }
}

/// Returns a copy of `m` in standard (row-major, contiguous) layout.
pub(crate) fn standard(m: &Array2<f64>) -> Array2<f64> {
    if m.is_standard_layout() {
        m.clone()
    } else {
        m.as_standard_layout().into_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_matches_definition() {
        let a = DenseTensor::new(vec![2], vec![1.0, 2.0]).unwrap();
        let b = DenseTensor::new(vec![2], vec![3.0, 4.0]).unwrap();
        assert_eq!(a.mul(&b).unwrap().data(), &[3.0, 8.0]);
    }

    #[test]
    fn safeguarded_pow_clips_zero() {
        let a = DenseTensor::new(vec![2], vec![0.0, 4.0]).unwrap();
        let out = a.pow(-0.5, Some(1e-12)).unwrap();
        assert!((out.data()[0] - 1e6).abs() <= 1e-6 * 1e6);
        assert_eq!(out.data()[1], 0.5);
    }

    #[test]
    fn unsafeguarded_negative_pow_of_zero_is_domain_error() {
        let a = DenseTensor::new(vec![2], vec![0.0, 4.0]).unwrap();
        assert!(matches!(a.pow(-1.0, None), Err(Error::Domain(_))));
        assert!(a.pow(2.0, None).is_ok());
    }

    #[test]
    fn div_by_self_is_ones() {
        let a = DenseTensor::from_fn(vec![3, 2], |i| 1.0 + (i[0] * 2 + i[1]) as f64).unwrap();
        let q = a.div(&a).unwrap();
        assert!(q.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn shape_mismatch_is_structural() {
        let a = DenseTensor::zeros(vec![2, 2]).unwrap();
        let b = DenseTensor::zeros(vec![4]).unwrap();
        assert!(matches!(a.mul(&b), Err(Error::Shape(_))));
    }

    #[test]
    fn invalid_shapes_rejected() {
        assert!(DenseTensor::zeros(vec![]).is_err());
        assert!(DenseTensor::zeros(vec![2, 0]).is_err());
        assert!(DenseTensor::new(vec![2, 2], vec![0.0; 3]).is_err());
        assert!(DenseTensor::zeros(vec![1]).is_ok());
    }

    #[test]
    fn offsets_are_row_major() {
        let t = DenseTensor::from_fn(vec![2, 3, 4], |i| (i[0] * 100 + i[1] * 10 + i[2]) as f64).unwrap();
        assert_eq!(t.get(&MultiIndex(vec![1, 2, 3])).unwrap(), 123.0);
        assert_eq!(t.strides(), vec![12, 4, 1]);
        assert!(t.get(&MultiIndex(vec![2, 0, 0])).is_err());
    }

    #[test]
    fn fast_powers_agree_with_powf() {
        for &e in &[0.0, 1.0, -1.0, 2.0, -2.0, 0.5, -0.5, 1.5, -1.5] {
            for &x in &[1e-12, 0.3, 1.0, 7.5, 1e6] {
                let fast = powf(x, e);
                let slow = f64::powf(x, e);
                assert!((fast - slow).abs() <= 4.0 * f64::EPSILON * slow.abs());
            }
        }
    }
}
