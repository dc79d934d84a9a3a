use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{Gradients, Network};
use super::FnnError;
use crate::belief::argmax;
use crate::preprocess::SampleSet;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub train_accuracy: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub val_accuracy: Vec<f64>,
}

/// Inputs and targets of a sample set as flat row-major matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Batchable<S> {
    pub inputs: Vec<S>,
    pub targets: Vec<S>,
    pub input_len: usize,
    pub output_len: usize,
}

impl<S: Scalar> Batchable<S> {
    pub fn from_set(set: &SampleSet) -> Self {
        Batchable {
            inputs: set
                .samples
                .iter()
                .flat_map(|s| s.input.iter().map(|&x| S::of(x)))
                .collect(),
            targets: set
                .samples
                .iter()
                .flat_map(|s| s.target.iter().map(|&x| S::of(x)))
                .collect(),
            input_len: set.input_len(),
            output_len: set.num_states,
        }
    }

    pub fn len(&self) -> usize {
        self.targets.len().checked_div(self.output_len).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn gather(&self, rows: &[usize]) -> (Vec<S>, Vec<S>) {
        let mut x = Vec::with_capacity(rows.len() * self.input_len);
        let mut t = Vec::with_capacity(rows.len() * self.output_len);
        for &r in rows {
            x.extend_from_slice(&self.inputs[r * self.input_len..(r + 1) * self.input_len]);
            t.extend_from_slice(&self.targets[r * self.output_len..(r + 1) * self.output_len]);
        }
        (x, t)
    }
}

fn correct<S: Scalar>(pred: &[S], targets: &[S], n: usize) -> usize {
    pred.chunks(n)
        .zip(targets.chunks(n))
        .filter(|(p, t)| argmax(p) == argmax(t))
        .count()
}

/// Stream seeds for epoch shuffling and dropout masks.
fn epoch_rng(seed: u64, epoch: usize, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((epoch as u64) << 1) | stream);
    rng
}

impl<S: Scalar> Network<S> {
    /// One bias-corrected Adam update.
    pub fn adam_step(&mut self, grads: &Gradients<S>) {
        let o = self.config.optimizer;
        self.adam.t += 1;
        let t = self.adam.t as i32;
        let (b1, b2) = (S::of(o.beta1), S::of(o.beta2));
        let c1 = S::one() - S::of(o.beta1.powi(t));
        let c2 = S::one() - S::of(o.beta2.powi(t));
        let (lr, eps) = (S::of(o.learning_rate), S::of(o.epsilon));
        let one = S::one();
        for (l, layer) in self.layers.iter_mut().enumerate() {
            let g = &grads[l];
            let (m, v) = (&mut self.adam.m[l], &mut self.adam.v[l]);
            let update = |p: &mut [S], g: &[S], m: &mut [S], v: &mut [S]| {
                for i in 0..p.len() {
                    m[i] = b1 * m[i] + (one - b1) * g[i];
                    v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
                    let mh = m[i] / c1;
                    let vh = v[i] / c2;
                    p[i] -= lr * mh / (vh.sqrt() + eps);
                }
            };
            update(&mut layer.w, &g.w, &mut m.w, &mut v.w);
            update(&mut layer.b, &g.b, &mut m.b, &mut v.b);
        }
    }

    /// Mini-batch Adam for the configured number of epochs. Training metrics
    /// are accumulated over the epoch's batches (dropout active); validation
    /// metrics use inference mode.
    pub fn train(
        &mut self,
        train: &Batchable<S>,
        val: Option<&Batchable<S>>,
    ) -> Result<TrainHistory, FnnError> {
        if train.is_empty() {
            return Err(FnnError::EmptyDataset);
        }
        for set in std::iter::once(train).chain(val) {
            if set.input_len != self.input_len() || set.output_len != self.output_len() {
                return Err(FnnError::DimensionMismatch {
                    expected: self.input_len(),
                    found: set.input_len,
                });
            }
        }
        let cfg = self.config.clone();
        let n = self.output_len();
        let mut history = TrainHistory::default();
        let mut order: Vec<usize> = (0..train.len()).collect();
        for epoch in 0..cfg.epochs {
            order.sort_unstable();
            order.shuffle(&mut epoch_rng(cfg.seed, epoch, 0));
            let mut drop_rng = epoch_rng(cfg.seed, epoch, 1);
            let (mut loss_sum, mut hits) = (0.0, 0usize);
            for rows in order.chunks(cfg.batch_size) {
                let (x, t) = train.gather(rows);
                let (loss, grads, cache) =
                    self.loss_and_gradients(&x, &t, rows.len(), cfg.loss, Some(&mut drop_rng))?;
                let loss = loss.to_f64_lossy();
                if !loss.is_finite() {
                    return Err(FnnError::DivergedLoss { epoch, loss });
                }
                loss_sum += loss * rows.len() as f64;
                hits += correct(cache.output(), &t, n);
                self.adam_step(&grads);
            }
            history.train_loss.push(loss_sum / train.len() as f64);
            history
                .train_accuracy
                .push(hits as f64 / train.len() as f64);
            if let Some(val) = val.filter(|v| !v.is_empty()) {
                let (loss, acc) = self.evaluate(val)?;
                if !loss.is_finite() {
                    return Err(FnnError::DivergedLoss { epoch, loss });
                }
                history.val_loss.push(loss);
                history.val_accuracy.push(acc);
            }
        }
        Ok(history)
    }

    /// Inference-mode mean loss and argmax accuracy.
    pub fn evaluate(&self, set: &Batchable<S>) -> Result<(f64, f64), FnnError> {
        if set.is_empty() {
            return Err(FnnError::EmptyDataset);
        }
        let n = self.output_len();
        let (mut loss_sum, mut hits) = (0.0, 0usize);
        let rows: Vec<usize> = (0..set.len()).collect();
        for chunk in rows.chunks(4096) {
            let (x, t) = set.gather(chunk);
            loss_sum += self
                .batch_loss(&x, &t, chunk.len(), self.config.loss)?
                .to_f64_lossy()
                * chunk.len() as f64;
            hits += correct(&self.predict_batch(&x, chunk.len())?, &t, n);
        }
        Ok((loss_sum / set.len() as f64, hits as f64 / set.len() as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fnn::config::{Activation, LayerConfig, LossKind, NetworkConfig};

    fn toy(n: usize, seed: u64) -> Batchable<f64> {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        for _ in 0..n {
            let (x, y): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            inputs.extend([x, y]);
            targets.extend(if x + 0.5 * y > 0.0 {
                [1.0, 0.0]
            } else {
                [0.0, 1.0]
            });
        }
        Batchable {
            inputs,
            targets,
            input_len: 2,
            output_len: 2,
        }
    }

    fn toy_config(seed: u64) -> NetworkConfig {
        NetworkConfig {
            input: 2,
            layers: vec![
                LayerConfig::new(16, Activation::Relu),
                LayerConfig::new(2, Activation::Softmax),
            ],
            loss: LossKind::Categorical,
            optimizer: crate::fnn::AdamConfig {
                learning_rate: 0.05,
                ..Default::default()
            },
            batch_size: 16,
            epochs: 50,
            seed,
        }
    }

    #[test]
    fn separable_toy_reaches_full_accuracy() {
        let data = toy(200, 1);
        let mut net = Network::<f64>::new(&toy_config(3)).unwrap();
        let h = net.train(&data, Some(&data)).unwrap();
        assert_eq!(h.train_loss.len(), 50);
        assert_eq!(h.val_accuracy.len(), 50);
        assert!(h.val_accuracy.contains(&1.0), "{:?}", h.val_accuracy);
    }

    #[test]
    fn training_is_deterministic() {
        let data = toy(100, 2);
        let mut cfg = toy_config(4);
        cfg.epochs = 5;
        cfg.layers[0].dropout = Some(0.3);
        let mut a = Network::<f64>::new(&cfg).unwrap();
        let mut b = Network::<f64>::new(&cfg).unwrap();
        assert_eq!(
            a.train(&data, Some(&data)).unwrap(),
            b.train(&data, Some(&data)).unwrap()
        );
        assert_eq!(a, b);
    }

    #[test]
    fn zero_gradient_step_is_a_no_op() {
        let mut net = Network::<f64>::new(&toy_config(5)).unwrap();
        let before = net.layers.clone();
        let zero = net.zero_gradients();
        net.adam_step(&zero);
        assert_eq!(net.layers, before);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let mut data = toy(10, 3);
        data.inputs[0] = f64::NAN;
        let mut net = Network::<f64>::new(&toy_config(5)).unwrap();
        assert!(matches!(
            net.train(&data, None),
            Err(FnnError::NonFiniteInput)
        ));
    }

    #[test]
    fn empty_training_set_is_rejected() {
        let mut net = Network::<f64>::new(&toy_config(5)).unwrap();
        let empty = Batchable {
            inputs: vec![],
            targets: vec![],
            input_len: 2,
            output_len: 2,
        };
        assert!(matches!(
            net.train(&empty, None),
            Err(FnnError::EmptyDataset)
        ));
    }

    #[test]
    fn divergence_is_reported() {
        let data = toy(10, 3);
        let mut cfg = toy_config(5);
        cfg.optimizer.learning_rate = 1e300;
        let mut net = Network::<f64>::new(&cfg).unwrap();
        assert!(matches!(
            net.train(&data, None),
            Err(FnnError::NonFiniteActivation { .. } | FnnError::DivergedLoss { .. })
        ));
    }
}
