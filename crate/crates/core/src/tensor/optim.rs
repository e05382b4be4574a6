use crate::tensor::params::ParameterStore;
use crate::tensor::scalar::Scalar;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.997;
pub const ADAM_EPS: f64 = 1e-9;

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    steps: u64,
}

impl<T: Scalar> Adam<T> {
    pub fn new(store: &ParameterStore<T>) -> Self {
        let zeros = |id: usize| vec![T::zero(); store.value(id).len()];
        Adam {
            m: (0..store.len()).map(zeros).collect(),
            v: (0..store.len()).map(zeros).collect(),
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Applies one update from the gradients currently held by `store`.
    pub fn step(&mut self, store: &mut ParameterStore<T>, lr: f64) {
        self.steps += 1;
        let (b1, b2) = (T::lit(ADAM_BETA1), T::lit(ADAM_BETA2));
        let c1 = 1.0 - ADAM_BETA1.powi(self.steps as i32);
        let c2 = 1.0 - ADAM_BETA2.powi(self.steps as i32);
        let step = T::lit(lr * c2.sqrt() / c1);
        let eps = T::lit(ADAM_EPS * c2.sqrt());
        for id in 0..store.len() {
            let (value, grad) = store.value_and_grad(id);
            let (m, v) = (&mut self.m[id], &mut self.v[id]);
            for (((p, &g), mi), vi) in value.data_mut().iter_mut().zip(grad).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mi = b1 * *mi + (T::one() - b1) * g;
                *vi = b2 * *vi + (T::one() - b2) * g * g;
                *p = *p - step * *mi / (vi.sqrt() + eps);
            }
        }
    }
}
