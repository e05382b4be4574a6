use crate::error::{Error, Result};
use crate::tensor::scalar::Scalar;

/// Dense row-major array of shape `(batch, time, channels)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: [usize; 3],
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: [usize; 3], data: Vec<T>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::contract(format!(
                "shape {shape:?} needs {n} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: [usize; 3]) -> Self {
        Tensor { shape, data: vec![T::zero(); shape.iter().product()] }
    }

    pub fn full(shape: [usize; 3], value: T) -> Self {
        Tensor { shape, data: vec![value; shape.iter().product()] }
    }

    pub fn from_fn(shape: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(shape.iter().product());
        for b in 0..shape[0] {
            for t in 0..shape[1] {
                for c in 0..shape[2] {
                    data.push(f(b, t, c));
                }
            }
        }
        Tensor { shape, data }
    }

    pub fn from_f64(shape: [usize; 3], values: &[f64]) -> Result<Self> {
        Self::new(shape, values.iter().map(|&x| T::lit(x)).collect())
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn batch(&self) -> usize {
        self.shape[0]
    }

    pub fn time(&self) -> usize {
        self.shape[1]
    }

    pub fn width(&self) -> usize {
        self.shape[2]
    }

    /// Number of `(batch, time)` rows.
    pub fn rows(&self) -> usize {
        self.shape[0] * self.shape[1]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, b: usize, t: usize, c: usize) -> T {
        self.data[(b * self.shape[1] + t) * self.shape[2] + c]
    }

    pub fn row(&self, r: usize) -> &[T] {
        let w = self.shape[2];
        &self.data[r * w..(r + 1) * w]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|x| x.as_f64()).collect()
    }
}
