use serde::{Deserialize, Serialize};

use super::FnnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    /// Plain linear layer.
    Identity,
    /// Only valid on the output layer.
    Softmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Categorical,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerConfig {
    pub units: usize,
    pub activation: Activation,
    /// Inverted dropout applied to this layer's output during training.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dropout: Option<f64>,
}

impl LayerConfig {
    pub fn new(units: usize, activation: Activation) -> Self {
        LayerConfig {
            units,
            activation,
            dropout: None,
        }
    }

    pub fn with_dropout(mut self, rate: f64) -> Self {
        self.dropout = Some(rate);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub input: usize,
    pub layers: Vec<LayerConfig>,
    pub loss: LossKind,
    #[serde(default)]
    pub optimizer: AdamConfig,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl NetworkConfig {
    /// 64 ReLU with dropout 0.4, 32 ReLU, softmax; categorical cross-entropy,
    /// batch 500, 250 epochs.
    pub fn compact(input: usize, outputs: usize, seed: u64) -> Self {
        NetworkConfig {
            input,
            layers: vec![
                LayerConfig::new(64, Activation::Relu).with_dropout(0.4),
                LayerConfig::new(32, Activation::Relu),
                LayerConfig::new(outputs, Activation::Softmax),
            ],
            loss: LossKind::Categorical,
            optimizer: AdamConfig::default(),
            batch_size: 500,
            epochs: 250,
            seed,
        }
    }

    /// 256/128/128 ReLU each with dropout 0.6, a linear 64, 64 ReLU, softmax;
    /// binary cross-entropy, batch 100, 50 epochs.
    pub fn deep(input: usize, outputs: usize, seed: u64) -> Self {
        NetworkConfig {
            input,
            layers: vec![
                LayerConfig::new(256, Activation::Relu).with_dropout(0.6),
                LayerConfig::new(128, Activation::Relu).with_dropout(0.6),
                LayerConfig::new(128, Activation::Relu).with_dropout(0.6),
                LayerConfig::new(64, Activation::Identity),
                LayerConfig::new(64, Activation::Relu),
                LayerConfig::new(outputs, Activation::Softmax),
            ],
            loss: LossKind::Binary,
            optimizer: AdamConfig::default(),
            batch_size: 100,
            epochs: 50,
            seed,
        }
    }

    pub fn output(&self) -> usize {
        self.layers.last().map_or(0, |l| l.units)
    }

    /// Layer widths including the input, e.g. `[6, 64, 32, 4]`.
    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.input)
            .chain(self.layers.iter().map(|l| l.units))
            .collect()
    }

    pub fn validate(&self) -> Result<(), FnnError> {
        let bad = |m: String| Err(FnnError::BadDimensions(m));
        if self.input == 0 {
            return bad("input width must be positive".into());
        }
        let Some(last) = self.layers.last() else {
            return bad("network needs at least one layer".into());
        };
        for (i, l) in self.layers.iter().enumerate() {
            if l.units == 0 {
                return bad(format!("layer {i} has no units"));
            }
            if l.activation == Activation::Softmax && i + 1 != self.layers.len() {
                return bad(format!(
                    "layer {i}: softmax is only allowed on the output layer"
                ));
            }
            if let Some(r) = l.dropout {
                if !(r > 0.0 && r < 1.0) {
                    return Err(FnnError::BadConfig(format!(
                        "layer {i}: dropout rate {r} outside (0, 1)"
                    )));
                }
                if i + 1 == self.layers.len() {
                    return Err(FnnError::BadConfig("dropout on the output layer".into()));
                }
            }
        }
        if last.activation != Activation::Softmax {
            return bad("output layer must be softmax".into());
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(FnnError::BadConfig(
                "epochs and batch size must be at least 1".into(),
            ));
        }
        let o = self.optimizer;
        if !(o.learning_rate > 0.0
            && (0.0..1.0).contains(&o.beta1)
            && (0.0..1.0).contains(&o.beta2)
            && o.epsilon > 0.0)
        {
            return Err(FnnError::BadConfig(format!(
                "invalid optimizer settings {o:?}"
            )));
        }
        Ok(())
    }
}
