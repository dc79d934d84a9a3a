use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::NetworkConfig;
use super::network::{AdamState, Dense, LayerParams, Network};
use super::train::TrainHistory;
use super::FnnError;
use crate::preprocess::{CaseSpec, MinMaxScaler};
use crate::provenance::fingerprint_bytes;
use crate::scalar::Scalar;

const FORMAT_TAG: &str = "tpdes-weights/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredLayer {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

/// What the network was trained on, for provenance and deployment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightsMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<CaseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaler: Option<MinMaxScaler>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history: Option<TrainHistory>,
}

/// JSON weights file: configuration, parameters, optimizer state and metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsFile {
    pub format: String,
    pub config: NetworkConfig,
    pub layers: Vec<StoredLayer>,
    pub adam_t: u64,
    pub adam_m: Vec<StoredLayer>,
    pub adam_v: Vec<StoredLayer>,
    #[serde(default)]
    pub meta: WeightsMeta,
}

fn store<S: Scalar>(p: &LayerParams<S>) -> StoredLayer {
    StoredLayer {
        w: p.w.iter().map(|x| x.to_f64_lossy()).collect(),
        b: p.b.iter().map(|x| x.to_f64_lossy()).collect(),
    }
}

fn restore<S: Scalar>(p: &StoredLayer) -> LayerParams<S> {
    LayerParams {
        w: p.w.iter().map(|&x| S::of(x)).collect(),
        b: p.b.iter().map(|&x| S::of(x)).collect(),
    }
}

impl WeightsFile {
    pub fn from_network<S: Scalar>(net: &Network<S>, meta: WeightsMeta) -> Self {
        WeightsFile {
            format: FORMAT_TAG.into(),
            config: net.config.clone(),
            layers: net
                .layers
                .iter()
                .map(|l| {
                    store(&LayerParams {
                        w: l.w.clone(),
                        b: l.b.clone(),
                    })
                })
                .collect(),
            adam_t: net.adam.t,
            adam_m: net.adam.m.iter().map(store).collect(),
            adam_v: net.adam.v.iter().map(store).collect(),
            meta,
        }
    }

    pub fn to_network<S: Scalar>(&self) -> Result<Network<S>, FnnError> {
        if self.format != FORMAT_TAG {
            return Err(FnnError::Format(format!(
                "unknown weights format `{}`",
                self.format
            )));
        }
        let mut net = Network::<S>::new(&self.config)?;
        let shape_ok = |v: &[StoredLayer], layers: &[Dense<S>]| {
            v.len() == layers.len()
                && v.iter()
                    .zip(layers)
                    .all(|(s, l)| s.w.len() == l.w.len() && s.b.len() == l.b.len())
        };
        if !shape_ok(&self.layers, &net.layers)
            || !shape_ok(&self.adam_m, &net.layers)
            || !shape_ok(&self.adam_v, &net.layers)
        {
            return Err(FnnError::BadDimensions(
                "stored parameters do not match the configuration".into(),
            ));
        }
        for (l, s) in net.layers.iter_mut().zip(&self.layers) {
            let p = restore::<S>(s);
            l.w = p.w;
            l.b = p.b;
        }
        if self
            .layers
            .iter()
            .any(|l| l.w.iter().chain(&l.b).any(|x| !x.is_finite()))
        {
            return Err(FnnError::Format("non-finite parameter".into()));
        }
        net.adam = AdamState {
            t: self.adam_t,
            m: self.adam_m.iter().map(restore).collect(),
            v: self.adam_v.iter().map(restore).collect(),
        };
        Ok(net)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("weights serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, FnnError> {
        serde_json::from_str(text).map_err(|e| FnnError::Format(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FnnError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| FnnError::Format(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Hash of the parameters and configuration only.
    pub fn fingerprint(&self) -> String {
        let core = (&self.config, &self.layers);
        fingerprint_bytes(&serde_json::to_vec(&core).expect("weights serialize"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let net = Network::<f64>::new(&NetworkConfig::compact(6, 4, 9)).unwrap();
        let f = WeightsFile::from_network(&net, WeightsMeta::default());
        let back = WeightsFile::from_json(&f.to_json()).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.to_network::<f64>().unwrap(), net);
        let single = Network::<f32>::new(&NetworkConfig::compact(6, 4, 9)).unwrap();
        let f32_back = WeightsFile::from_json(
            &WeightsFile::from_network(&single, WeightsMeta::default()).to_json(),
        )
        .unwrap()
        .to_network::<f32>()
        .unwrap();
        assert_eq!(f32_back, single);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let net = Network::<f64>::new(&NetworkConfig::compact(6, 4, 9)).unwrap();
        let mut f = WeightsFile::from_network(&net, WeightsMeta::default());
        f.layers[1].b.pop();
        assert!(matches!(
            f.to_network::<f64>(),
            Err(FnnError::BadDimensions(_))
        ));
    }
}
