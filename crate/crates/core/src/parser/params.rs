use ndarray::Array2;
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

/// Gradient of every parameter touched by a backward pass.
pub type Gradients = Vec<(ParamId, Array2<f64>)>;

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Array2<f64>,
    /// Frozen parameters (pretrained embeddings) are never updated.
    pub trainable: bool,
}

/// Named parameter matrices in creation order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<Param>,
}

impl ParamStore {
    pub fn add(&mut self, name: impl Into<String>, value: Array2<f64>, trainable: bool) -> ParamId {
        self.params.push(Param {
            name: name.into(),
            value,
            trainable,
        });
        ParamId(self.params.len() - 1)
    }

    /// Glorot-uniform initialized matrix.
    pub fn add_glorot<R: Rng>(
        &mut self,
        rng: &mut R,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
    ) -> ParamId {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        let value = Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(-bound..bound));
        self.add(name, value, true)
    }

    pub fn add_zeros(&mut self, name: impl Into<String>, rows: usize, cols: usize) -> ParamId {
        self.add(name, Array2::zeros((rows, cols)), true)
    }

    pub fn value(&self, id: ParamId) -> &Array2<f64> {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Array2<f64> {
        &mut self.params[id.0].value
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param] {
        &mut self.params
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn get(&self, id: ParamId) -> &Param {
        &self.params[id.0]
    }

    /// Number of trainable scalars.
    pub fn trainable_size(&self) -> usize {
        self.params
            .iter()
            .filter(|p| p.trainable)
            .map(|p| p.value.len())
            .sum()
    }

    /// Zero-initialized gradient buffers, one per parameter.
    pub fn zero_grads(&self) -> Vec<Array2<f64>> {
        self.params
            .iter()
            .map(|p| Array2::zeros(p.value.raw_dim()))
            .collect()
    }

    pub fn accumulate(&self, buffers: &mut [Array2<f64>], grads: Vec<(ParamId, Array2<f64>)>) {
        for (id, grad) in grads {
            buffers[id.0] += &grad;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// The learning rate is multiplied by `decay^(step / decay_steps)`.
    pub decay: f64,
    pub decay_steps: f64,
    /// Gradients are rescaled to at most this global norm.
    pub clip: f64,
}

/// Adam with exponential learning-rate decay and norm clipping.
#[derive(Clone, Debug)]
pub struct Adam {
    config: AdamConfig,
    step: u64,
    first: Vec<Array2<f64>>,
    second: Vec<Array2<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig, store: &ParamStore) -> Self {
        Adam {
            config,
            step: 0,
            first: store.zero_grads(),
            second: store.zero_grads(),
        }
    }

    pub fn step(&mut self, store: &mut ParamStore, grads: &mut [Array2<f64>]) {
        let c = &self.config;
        self.step += 1;

        let norm: f64 = store
            .params
            .iter()
            .zip(grads.iter())
            .filter(|(p, _)| p.trainable)
            .map(|(_, g)| g.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt();
        let scale = if norm > c.clip { c.clip / norm } else { 1.0 };

        let t = self.step as f64;
        let lr = c.learning_rate * c.decay.powf(t / c.decay_steps);
        let correction1 = 1.0 - c.beta1.powf(t);
        let correction2 = 1.0 - c.beta2.powf(t);

        for (k, param) in store.params.iter_mut().enumerate() {
            if !param.trainable {
                continue;
            }
            let grad = &mut grads[k];
            grad.mapv_inplace(|g| g * scale);

            let m = &mut self.first[k];
            let v = &mut self.second[k];
            ndarray::Zip::from(&mut param.value)
                .and(m)
                .and(v)
                .and(&*grad)
                .for_each(|w, m, v, &g| {
                    *m = c.beta1 * *m + (1.0 - c.beta1) * g;
                    *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
                    let m_hat = *m / correction1;
                    let v_hat = *v / correction2;
                    *w -= lr * m_hat / (v_hat.sqrt() + c.epsilon);
                });
        }
    }
}
