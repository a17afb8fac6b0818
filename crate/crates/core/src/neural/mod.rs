//! A minimal dense-tensor, reverse-mode differentiation core.
//!
//! Everything is double precision and single-threaded per model: at
//! desk scale the value of an airtight gradient-check contract beats
//! speed. Graphs are rebuilt per example on a [`tape::Tape`]; trainable
//! state lives in a [`ParameterStore`] keyed by parameter path.

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod layers;
pub mod tape;

pub use adam::{AdamConfig, AdamState, adam_step};
pub use gradcheck::{GradCheckReport, grad_check};
pub use tape::{GradMap, NodeRef, Tape};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::rng::{ChaCha8Rng, SeedableRng, fnv1a64, uniform_in};

/// A dense row-major array with an optional gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
    grad: Option<Vec<f64>>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data, grad: None })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Tensor { shape, data: vec![0.0; len], grad: None }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Tensor { shape: vec![data.len()], data, grad: None }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Tensor::new(vec![rows, cols], data)
    }

    /// Matrix or kernel filled uniformly from
    /// +-sqrt(6 / (fan_in + fan_out)).
    pub fn xavier(shape: Vec<usize>, rng: &mut ChaCha8Rng) -> Self {
        let (fan_in, fan_out) = match shape.as_slice() {
            [rows, cols] => (*cols, *rows),
            // 1-D convolution kernels (out, in, width).
            [out, inp, width] => (inp * width, out * width),
            other => {
                let n: usize = other.iter().product();
                (n, n)
            }
        };
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let len = shape.iter().product();
        let data = (0..len).map(|_| uniform_in(rng, -bound, bound)).collect();
        Tensor { shape, data, grad: None }
    }

    pub fn uniform(shape: Vec<usize>, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Self {
        let len = shape.iter().product();
        let data = (0..len).map(|_| uniform_in(rng, lo, hi)).collect();
        Tensor { shape, data, grad: None }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn grad(&self) -> Option<&[f64]> {
        self.grad.as_deref()
    }

    pub fn set_grad(&mut self, grad: Vec<f64>) -> Result<()> {
        if grad.len() != self.data.len() {
            return Err(Error::Shape(format!(
                "gradient length {} does not match tensor length {}",
                grad.len(),
                self.data.len()
            )));
        }
        self.grad = Some(grad);
        Ok(())
    }

    pub fn clear_grad(&mut self) {
        self.grad = None;
    }
}

/// Named, ordered storage for every trainable tensor of one model.
///
/// Each parameter is initialized from its own ChaCha8 stream seeded by
/// `store_seed ^ fnv1a64(path)`, so initialization is independent of
/// registration order and bit-identical across runs.
#[derive(Debug, Clone)]
pub struct ParameterStore {
    params: BTreeMap<String, Tensor>,
    rng_seed: u64,
}

impl ParameterStore {
    pub fn new(rng_seed: u64) -> Self {
        ParameterStore { params: BTreeMap::new(), rng_seed }
    }

    pub fn seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn insert(&mut self, path: impl Into<String>, tensor: Tensor) -> Result<()> {
        let path = path.into();
        if self.params.contains_key(&path) {
            return Err(Error::Config(format!("duplicate parameter path '{path}'")));
        }
        self.params.insert(path, tensor);
        Ok(())
    }

    /// Stream for initializing the parameter at `path`.
    pub fn init_rng(&self, path: &str) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.rng_seed ^ fnv1a64(path.as_bytes()))
    }

    pub fn register_xavier(&mut self, path: &str, shape: Vec<usize>) -> Result<()> {
        let mut rng = self.init_rng(path);
        self.insert(path, Tensor::xavier(shape, &mut rng))
    }

    pub fn register_zeros(&mut self, path: &str, shape: Vec<usize>) -> Result<()> {
        self.insert(path, Tensor::zeros(shape))
    }

    pub fn register_uniform(
        &mut self,
        path: &str,
        shape: Vec<usize>,
        lo: f64,
        hi: f64,
    ) -> Result<()> {
        let mut rng = self.init_rng(path);
        self.insert(path, Tensor::uniform(shape, lo, hi, &mut rng))
    }

    pub fn get(&self, path: &str) -> Result<&Tensor> {
        self.params
            .get(path)
            .ok_or_else(|| Error::Config(format!("no parameter at path '{path}'")))
    }

    pub fn get_mut(&mut self, path: &str) -> Result<&mut Tensor> {
        self.params
            .get_mut(path)
            .ok_or_else(|| Error::Config(format!("no parameter at path '{path}'")))
    }

    pub fn contains(&self, path: &str) -> bool {
        self.params.contains_key(path)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.params.iter().map(|(p, t)| (p.as_str(), t))
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn n_values(&self) -> usize {
        self.params.values().map(Tensor::len).sum()
    }

    /// Store the entries of `grads` on the matching tensors.
    pub fn apply_grads(&mut self, grads: &GradMap) -> Result<()> {
        for (path, g) in grads {
            self.get_mut(path)?.set_grad(g.clone())?;
        }
        Ok(())
    }

    pub fn clear_grads(&mut self) {
        for tensor in self.params.values_mut() {
            tensor.clear_grad();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_shape_checks() {
        assert!(Tensor::new(vec![2, 3], vec![0.0; 6]).is_ok());
        assert!(matches!(
            Tensor::new(vec![2, 3], vec![0.0; 5]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn xavier_respects_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = Tensor::xavier(vec![8, 4], &mut rng);
        let bound = (6.0 / 12.0_f64).sqrt();
        assert!(t.data().iter().all(|v| v.abs() < bound));
    }

    #[test]
    fn init_is_order_independent() {
        let mut a = ParameterStore::new(11);
        a.register_xavier("p.first", vec![3, 3]).unwrap();
        a.register_xavier("p.second", vec![3, 3]).unwrap();
        let mut b = ParameterStore::new(11);
        b.register_xavier("p.second", vec![3, 3]).unwrap();
        b.register_xavier("p.first", vec![3, 3]).unwrap();
        assert_eq!(a.get("p.first").unwrap(), b.get("p.first").unwrap());
        assert_eq!(a.get("p.second").unwrap(), b.get("p.second").unwrap());
    }

    #[test]
    fn duplicate_path_rejected() {
        let mut s = ParameterStore::new(0);
        s.register_zeros("x", vec![2]).unwrap();
        assert!(s.register_zeros("x", vec![2]).is_err());
    }
}
