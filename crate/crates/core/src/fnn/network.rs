use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::{Activation, LossKind, NetworkConfig};
use super::loss::{loss, loss_grad};
use super::FnnError;
use crate::belief::Belief;
use crate::linalg::{gemm, MatRef};
use crate::scalar::Scalar;

/// Fully connected layer. `w` is `n_in x n_out`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<S> {
    pub n_in: usize,
    pub n_out: usize,
    pub w: Vec<S>,
    pub b: Vec<S>,
    pub activation: Activation,
    pub dropout: Option<f64>,
}

/// Gradients (or any per-parameter quantity) shaped like the layers.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<S> {
    pub w: Vec<S>,
    pub b: Vec<S>,
}

pub type Gradients<S> = Vec<LayerParams<S>>;

/// Adam first and second moments plus the step count.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<S> {
    pub t: u64,
    pub m: Vec<LayerParams<S>>,
    pub v: Vec<LayerParams<S>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network<S> {
    pub config: NetworkConfig,
    pub layers: Vec<Dense<S>>,
    pub adam: AdamState<S>,
}

/// Activations of one batch, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<S> {
    pub batch: usize,
    /// `acts[0]` is the input; `acts[l + 1]` is layer `l`'s output after dropout.
    pub acts: Vec<Vec<S>>,
    /// Pre-activations per layer.
    pub pre: Vec<Vec<S>>,
    /// Dropout multipliers (0 or `1 / (1 - rate)`) per layer, if applied.
    pub masks: Vec<Option<Vec<S>>>,
}

impl<S> ForwardCache<S> {
    /// Output probabilities, `batch x n_out` row-major.
    pub fn output(&self) -> &[S] {
        self.acts.last().expect("cache has an input")
    }
}

fn zeros_like<S: Scalar>(layers: &[Dense<S>]) -> Vec<LayerParams<S>> {
    layers
        .iter()
        .map(|l| LayerParams {
            w: vec![S::zero(); l.w.len()],
            b: vec![S::zero(); l.b.len()],
        })
        .collect()
}

impl<S: Scalar> Network<S> {
    /// He-normal weights (std `sqrt(2 / fan_in)`), zero biases, zero moments.
    pub fn new(config: &NetworkConfig) -> Result<Self, FnnError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let sizes = config.sizes();
        let layers: Vec<Dense<S>> = config
            .layers
            .iter()
            .enumerate()
            .map(|(i, lc)| {
                let (n_in, n_out) = (sizes[i], sizes[i + 1]);
                let normal = Normal::new(0.0, (2.0 / n_in as f64).sqrt()).expect("finite std");
                Dense {
                    n_in,
                    n_out,
                    w: (0..n_in * n_out)
                        .map(|_| S::of(normal.sample(&mut rng)))
                        .collect(),
                    b: vec![S::zero(); n_out],
                    activation: lc.activation,
                    dropout: lc.dropout,
                }
            })
            .collect();
        let adam = AdamState {
            t: 0,
            m: zeros_like(&layers),
            v: zeros_like(&layers),
        };
        Ok(Network {
            config: config.clone(),
            layers,
            adam,
        })
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn output_len(&self) -> usize {
        self.layers.last().expect("at least one layer").n_out
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn zero_gradients(&self) -> Gradients<S> {
        zeros_like(&self.layers)
    }

    /// Forward pass over `batch` rows of `x`. Dropout is applied iff `rng`
    /// is given.
    pub fn forward_batch(
        &self,
        x: &[S],
        batch: usize,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<ForwardCache<S>, FnnError> {
        if x.len() != batch * self.input_len() {
            return Err(FnnError::DimensionMismatch {
                expected: batch * self.input_len(),
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(FnnError::NonFiniteInput);
        }
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut masks = Vec::with_capacity(self.layers.len());
        acts.push(x.to_vec());
        for layer in &self.layers {
            let input = acts.last().expect("input pushed");
            let mut z = Vec::with_capacity(batch * layer.n_out);
            for _ in 0..batch {
                z.extend_from_slice(&layer.b);
            }
            gemm(
                S::one(),
                MatRef::row_major(input, batch, layer.n_in),
                MatRef::row_major(&layer.w, layer.n_in, layer.n_out),
                S::one(),
                &mut z,
            );
            let mut a = z.clone();
            match layer.activation {
                Activation::Relu => a.iter_mut().for_each(|v| *v = v.max(S::zero())),
                Activation::Identity => {}
                Activation::Softmax => a.chunks_mut(layer.n_out).for_each(softmax_in_place),
            }
            let mask = match (layer.dropout, rng.as_deref_mut()) {
                (Some(rate), Some(rng)) => {
                    let keep = 1.0 - rate;
                    let scale = S::of(1.0 / keep);
                    let m: Vec<S> = (0..a.len())
                        .map(|_| {
                            if rng.random::<f64>() < keep {
                                scale
                            } else {
                                S::zero()
                            }
                        })
                        .collect();
                    a.iter_mut().zip(&m).for_each(|(v, &k)| *v *= k);
                    Some(m)
                }
                _ => None,
            };
            pre.push(z);
            acts.push(a);
            masks.push(mask);
        }
        if let Some(l) = acts
            .iter()
            .skip(1)
            .position(|a| a.iter().any(|v| !v.is_finite()))
        {
            return Err(FnnError::NonFiniteActivation { layer: l });
        }
        Ok(ForwardCache {
            batch,
            acts,
            pre,
            masks,
        })
    }

    /// Backward pass from `d loss / d output` (`batch x n_out`).
    pub fn backward(&self, cache: &ForwardCache<S>, d_out: &[S]) -> Gradients<S> {
        let batch = cache.batch;
        let mut grads = self.zero_gradients();
        let mut da = d_out.to_vec();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            if let Some(mask) = &cache.masks[l] {
                da.iter_mut().zip(mask).for_each(|(d, &k)| *d *= k);
            }
            let dz: Vec<S> = match layer.activation {
                Activation::Relu => da
                    .iter()
                    .zip(&cache.pre[l])
                    .map(|(&d, &z)| if z > S::zero() { d } else { S::zero() })
                    .collect(),
                Activation::Identity => da,
                Activation::Softmax => {
                    let p = &cache.acts[l + 1];
                    let mut dz = vec![S::zero(); da.len()];
                    for ((dz, g), p) in dz
                        .chunks_mut(layer.n_out)
                        .zip(da.chunks(layer.n_out))
                        .zip(p.chunks(layer.n_out))
                    {
                        let dot: S = g.iter().zip(p).map(|(&g, &p)| g * p).sum();
                        for i in 0..layer.n_out {
                            dz[i] = p[i] * (g[i] - dot);
                        }
                    }
                    dz
                }
            };
            let input = &cache.acts[l];
            gemm(
                S::one(),
                MatRef::transposed(input, batch, layer.n_in),
                MatRef::row_major(&dz, batch, layer.n_out),
                S::zero(),
                &mut grads[l].w,
            );
            for row in dz.chunks(layer.n_out) {
                grads[l].b.iter_mut().zip(row).for_each(|(g, &d)| *g += d);
            }
            if l > 0 {
                let mut prev = vec![S::zero(); batch * layer.n_in];
                gemm(
                    S::one(),
                    MatRef::row_major(&dz, batch, layer.n_out),
                    MatRef::transposed(&layer.w, layer.n_in, layer.n_out),
                    S::zero(),
                    &mut prev,
                );
                da = prev;
            } else {
                da = Vec::new();
            }
        }
        grads
    }

    /// Mean loss over a batch and its gradient, without dropout unless `rng`
    /// is given.
    pub fn loss_and_gradients(
        &self,
        x: &[S],
        targets: &[S],
        batch: usize,
        kind: LossKind,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(S, Gradients<S>, ForwardCache<S>), FnnError> {
        let cache = self.forward_batch(x, batch, rng)?;
        let n = self.output_len();
        if targets.len() != batch * n {
            return Err(FnnError::DimensionMismatch {
                expected: batch * n,
                found: targets.len(),
            });
        }
        let scale = S::one() / S::of(batch as f64);
        let mut d_out = vec![S::zero(); batch * n];
        let mut total = S::zero();
        for ((p, t), d) in cache
            .output()
            .chunks(n)
            .zip(targets.chunks(n))
            .zip(d_out.chunks_mut(n))
        {
            total += loss(p, t, kind);
            loss_grad(p, t, kind, scale, d);
        }
        let grads = self.backward(&cache, &d_out);
        Ok((total * scale, grads, cache))
    }

    /// Mean loss over a batch in inference mode.
    pub fn batch_loss(
        &self,
        x: &[S],
        targets: &[S],
        batch: usize,
        kind: LossKind,
    ) -> Result<S, FnnError> {
        let cache = self.forward_batch(x, batch, None)?;
        let n = self.output_len();
        let total: S = cache
            .output()
            .chunks(n)
            .zip(targets.chunks(n))
            .map(|(p, t)| loss(p, t, kind))
            .sum();
        Ok(total / S::of(batch as f64))
    }

    /// Inference-mode class probabilities for one input.
    pub fn predict(&self, input: &[S]) -> Result<Belief<S>, FnnError> {
        let out = self.predict_batch(input, 1)?;
        Ok(Belief::new(out).expect("softmax output is a probability vector"))
    }

    /// Inference-mode outputs for `batch` inputs, `batch x n_out` row-major.
    pub fn predict_batch(&self, x: &[S], batch: usize) -> Result<Vec<S>, FnnError> {
        let mut cache = self.forward_batch(x, batch, None)?;
        Ok(cache.acts.pop().expect("output present"))
    }

    /// Parameters as a flat list of mutable references, layer by layer, `w`
    /// then `b`.
    pub fn param_mut(&mut self, index: usize) -> &mut S {
        let mut i = index;
        for l in &mut self.layers {
            if i < l.w.len() {
                return &mut l.w[i];
            }
            i -= l.w.len();
            if i < l.b.len() {
                return &mut l.b[i];
            }
            i -= l.b.len();
        }
        panic!("parameter index {index} out of range")
    }
}

/// Gradient entry at a flat parameter index (same order as [`Network::param_mut`]).
pub fn grad_at<S: Copy>(grads: &[LayerParams<S>], index: usize) -> S {
    let mut i = index;
    for g in grads {
        if i < g.w.len() {
            return g.w[i];
        }
        i -= g.w.len();
        if i < g.b.len() {
            return g.b[i];
        }
        i -= g.b.len();
    }
    panic!("parameter index {index} out of range")
}

fn softmax_in_place<S: Scalar>(v: &mut [S]) {
    let max = v.iter().copied().fold(S::neg_infinity(), S::max);
    let mut sum = S::zero();
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}
