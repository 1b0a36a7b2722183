use crate::tensor::Tensor;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Handle to a parameter slot inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub(crate) usize);

/// A named trainable tensor with its gradient and Adam moment buffers.
#[derive(Debug, Clone)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
    moment1: Tensor,
    moment2: Tensor,
    step: u64,
}

impl Parameter {
    fn new(name: String, value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape());
        let moment1 = grad.clone();
        let moment2 = grad.clone();
        Self {
            name,
            value,
            grad,
            moment1,
            moment2,
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// Owns all trainable parameters of a model plus the RNG used to
/// initialize them, so construction order and seed fully determine weights.
#[derive(Clone)]
pub struct ParamStore {
    params: Vec<Parameter>,
    rng: ChaCha8Rng,
    seed: u64,
}

impl ParamStore {
    pub fn new(seed: u64) -> Self {
        Self {
            params: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Register a parameter with explicit initial values.
    pub fn register(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        self.params.push(Parameter::new(name.into(), value));
        ParamId(self.params.len() - 1)
    }

    /// Register a `[rows, cols]` matrix initialized uniformly on
    /// `[-sqrt(6 / (rows + cols)), +sqrt(6 / (rows + cols))]` (Glorot).
    pub fn register_glorot(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
    ) -> ParamId {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        let data: Vec<f64> = (0..rows * cols)
            .map(|_| self.rng.gen_range(-bound..=bound))
            .collect();
        self.register(name, Tensor::new(vec![rows, cols], data).unwrap())
    }

    /// Register a vector of zeros (the usual bias initialization).
    pub fn register_zeros(&mut self, name: impl Into<String>, len: usize) -> ParamId {
        self.register(name, Tensor::zeros(&[len]))
    }

    /// Register a constant-filled vector (for example LSTM forget-gate biases).
    pub fn register_full(&mut self, name: impl Into<String>, len: usize, fill: f64) -> ParamId {
        self.register(name, Tensor::full(&[len], fill))
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].grad
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Parameter)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    /// Overwrite a parameter's value, keeping optimizer state intact.
    pub fn set_value(&mut self, id: ParamId, value: Tensor) {
        self.params[id.0].value = value;
    }

    pub(crate) fn add_gradient(&mut self, id: ParamId, g: &Tensor) {
        let acc = &mut self.params[id.0].grad;
        for (a, b) in acc.data_mut().iter_mut().zip(g.data()) {
            *a += *b;
        }
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            for v in p.grad.data_mut() {
                *v = 0.0;
            }
        }
    }

    /// Snapshot all parameter values (used to restore the best epoch).
    pub fn snapshot(&self) -> Vec<Tensor> {
        self.params.iter().map(|p| p.value.clone()).collect()
    }

    pub fn restore(&mut self, snapshot: &[Tensor]) {
        for (p, v) in self.params.iter_mut().zip(snapshot) {
            p.value = v.clone();
        }
    }
}

/// Adam hyperparameters; defaults follow the common
/// `beta1 = 0.9`, `beta2 = 0.999`, `eps = 1e-8` setting.
#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update over every parameter, consuming the
/// accumulated gradients and then clearing them.
pub fn adam_step(store: &mut ParamStore, config: &AdamConfig) {
    for p in &mut store.params {
        p.step += 1;
        let t = p.step as i32;
        let bc1 = 1.0 - config.beta1.powi(t);
        let bc2 = 1.0 - config.beta2.powi(t);
        for i in 0..p.value.len() {
            let g = p.grad.data()[i];
            let m = &mut p.moment1.data_mut()[i];
            *m = config.beta1 * *m + (1.0 - config.beta1) * g;
            let m = *m;
            let v = &mut p.moment2.data_mut()[i];
            *v = config.beta2 * *v + (1.0 - config.beta2) * g * g;
            let v = *v;
            let update = (m / bc1) / ((v / bc2).sqrt() + config.eps);
            p.value.data_mut()[i] -= config.learning_rate * update;
        }
    }
    store.zero_grads();
}
