use rand::{Rng, RngCore};

use crate::error::{Error, Result};

/// Fully connected network with tanh hidden layers and a linear output layer.
///
/// Parameters live in one flat vector. For each layer, in order, the
/// `fan_out x fan_in` weight matrix is stored row-major (one row per output
/// unit), followed by the `fan_out` biases. The vector length is therefore
/// `sum (fan_in + 1) * fan_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    sizes: Vec<usize>,
    params: Vec<f64>,
    generation: u64,
}

/// Activations recorded by [`DenseNet::forward`], consumed by [`DenseNet::backward`].
#[derive(Debug, Clone)]
pub struct ActivationCache {
    generation: u64,
    /// `layers[0]` is the input; `layers[l]` the output of layer `l`.
    layers: Vec<Vec<f64>>,
}

impl ActivationCache {
    pub fn output(&self) -> &[f64] {
        self.layers.last().map_or(&[], Vec::as_slice)
    }
}

pub fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
}

impl DenseNet {
    /// All-zero parameters.
    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "a network needs input and output sizes");
        Self { sizes: sizes.to_vec(), params: vec![0.0; param_count(sizes)], generation: 0 }
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Result<Self> {
        let expected = param_count(sizes);
        if sizes.len() < 2 || params.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: params.len() });
        }
        Ok(Self { sizes: sizes.to_vec(), params, generation: 0 })
    }

    /// Scaled-uniform initialization: weights of layer `l` are drawn from
    /// `U(-b, b)` with `b = gain * sqrt(3 / fan_in)` (variance `gain^2 / fan_in`),
    /// biases start at zero. Hidden layers use gain 1, the output layer
    /// `output_gain` (small for policy heads so the initial policy is near uniform).
    pub fn init(sizes: &[usize], output_gain: f64, rng: &mut dyn RngCore) -> Self {
        let mut net = Self::zeros(sizes);
        let n_layers = sizes.len() - 1;
        let mut offset = 0;
        for (l, w) in sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let gain = if l + 1 == n_layers { output_gain } else { 1.0 };
            let bound = gain * (3.0 / fan_in.max(1) as f64).sqrt();
            for p in &mut net.params[offset..offset + fan_in * fan_out] {
                *p = rng.random_range(-bound..=bound);
            }
            offset += (fan_in + 1) * fan_out;
        }
        net
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        self.sizes[self.sizes.len() - 1]
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Mutable access to the parameters; invalidates outstanding caches.
    pub fn params_mut(&mut self) -> &mut [f64] {
        self.generation += 1;
        &mut self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::DimensionMismatch { expected: self.params.len(), got: params.len() });
        }
        self.params_mut().copy_from_slice(params);
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ActivationCache)> {
        if input.len() != self.sizes[0] {
            return Err(Error::DimensionMismatch { expected: self.sizes[0], got: input.len() });
        }
        let n_layers = self.sizes.len() - 1;
        let mut layers = Vec::with_capacity(n_layers + 1);
        layers.push(input.to_vec());
        let mut offset = 0;
        for (l, w) in self.sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let weights = &self.params[offset..offset + fan_in * fan_out];
            let biases = &self.params[offset + fan_in * fan_out..offset + (fan_in + 1) * fan_out];
            let prev = &layers[l];
            let mut next: Vec<f64> = weights
                .chunks_exact(fan_in)
                .zip(biases)
                .map(|(row, b)| b + row.iter().zip(prev).map(|(w, x)| w * x).sum::<f64>())
                .collect();
            if l + 1 < n_layers {
                next.iter_mut().for_each(|z| *z = z.tanh());
            }
            layers.push(next);
            offset += (fan_in + 1) * fan_out;
        }
        let out = layers[n_layers].clone();
        Ok((out, ActivationCache { generation: self.generation, layers }))
    }

    /// Forward pass over several inputs.
    pub fn forward_batch(&self, inputs: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
        inputs.iter().map(|x| self.forward(x).map(|(y, _)| y)).collect()
    }

    /// Gradient of a scalar loss with respect to the parameters, given the
    /// loss gradient with respect to the network output.
    pub fn backward(&self, cache: &ActivationCache, output_grad: &[f64]) -> Result<Vec<f64>> {
        let mut grad = vec![0.0; self.params.len()];
        self.backward_into(cache, output_grad, &mut grad)?;
        Ok(grad)
    }

    /// Like [`DenseNet::backward`] but adds into `grad`.
    pub fn backward_into(&self, cache: &ActivationCache, output_grad: &[f64], grad: &mut [f64]) -> Result<()> {
        if cache.generation != self.generation || cache.layers.len() != self.sizes.len() {
            return Err(Error::StaleCache);
        }
        if output_grad.len() != self.output_dim() {
            return Err(Error::DimensionMismatch { expected: self.output_dim(), got: output_grad.len() });
        }
        if grad.len() != self.params.len() {
            return Err(Error::DimensionMismatch { expected: self.params.len(), got: grad.len() });
        }
        let mut offsets = Vec::with_capacity(self.sizes.len() - 1);
        let mut offset = 0;
        for w in self.sizes.windows(2) {
            offsets.push(offset);
            offset += (w[0] + 1) * w[1];
        }
        let mut delta = output_grad.to_vec();
        for l in (0..self.sizes.len() - 1).rev() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let base = offsets[l];
            let input = &cache.layers[l];
            for (o, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                let row = &mut grad[base + o * fan_in..base + (o + 1) * fan_in];
                row.iter_mut().zip(input).for_each(|(g, x)| *g += d * x);
                grad[base + fan_in * fan_out + o] += d;
            }
            if l > 0 {
                let weights = &self.params[base..base + fan_in * fan_out];
                let mut prev = vec![0.0; fan_in];
                for (row, d) in weights.chunks_exact(fan_in).zip(&delta) {
                    prev.iter_mut().zip(row).for_each(|(p, w)| *p += w * d);
                }
                // tanh'(z) = 1 - tanh(z)^2
                prev.iter_mut().zip(input).for_each(|(p, a)| *p *= 1.0 - a * a);
                delta = prev;
            }
        }
        Ok(())
    }
}
