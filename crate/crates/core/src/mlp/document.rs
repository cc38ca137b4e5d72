use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Network, TrainingMeta};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u64 = 1;

/// On-disk form of a [`Network`]. Weights are stored per layer as flat
/// row-major `(outputs, inputs)` arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkDocument {
    pub format_version: u64,
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub seed: u64,
    pub trained_epochs: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl From<&Network> for NetworkDocument {
    fn from(net: &Network) -> Self {
        let meta = net.meta();
        Self {
            format_version: FORMAT_VERSION,
            layer_sizes: net.layer_sizes().to_vec(),
            weights: net.layers().iter().map(|l| l.weights().to_vec()).collect(),
            biases: net.layers().iter().map(|l| l.biases().to_vec()).collect(),
            seed: net.seed(),
            trained_epochs: meta.epochs,
            alpha: meta.alpha,
            beta: meta.beta,
        }
    }
}

impl TryFrom<NetworkDocument> for Network {
    type Error = Error;

    fn try_from(doc: NetworkDocument) -> Result<Self> {
        if doc.format_version != FORMAT_VERSION {
            return Err(Error::parse(
                "format_version",
                format!("unsupported version {}", doc.format_version),
            ));
        }
        let n = doc.layer_sizes.len().saturating_sub(1);
        if doc.layer_sizes.len() < 3 || doc.layer_sizes.contains(&0) {
            return Err(Error::parse(
                "layer_sizes",
                format!("invalid topology {:?}", doc.layer_sizes),
            ));
        }
        if doc.weights.len() != n {
            return Err(Error::parse(
                "weights",
                format!("expected {n} layers, got {}", doc.weights.len()),
            ));
        }
        if doc.biases.len() != n {
            return Err(Error::parse(
                "biases",
                format!("expected {n} layers, got {}", doc.biases.len()),
            ));
        }
        for i in 0..n {
            let (inputs, outputs) = (doc.layer_sizes[i], doc.layer_sizes[i + 1]);
            if doc.weights[i].len() != inputs * outputs {
                return Err(Error::parse(
                    format!("weights[{i}]"),
                    format!(
                        "expected {} entries, got {}",
                        inputs * outputs,
                        doc.weights[i].len()
                    ),
                ));
            }
            if doc.biases[i].len() != outputs {
                return Err(Error::parse(
                    format!("biases[{i}]"),
                    format!("expected {outputs} entries, got {}", doc.biases[i].len()),
                ));
            }
        }
        let mut net = Network::from_parts(&doc.layer_sizes, doc.weights, doc.biases, doc.seed)?;
        net.set_meta(TrainingMeta {
            epochs: doc.trained_epochs,
            alpha: doc.alpha,
            beta: doc.beta,
        });
        Ok(net)
    }
}

impl NetworkDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("network document is always serialisable")
    }

    /// Parses a document, naming the offending field on failure.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| Error::parse("document", e.to_string()))?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let Value::Object(map) = value else {
            return Err(Error::parse("document", "expected a JSON object"));
        };
        let field = |name: &str| {
            map.get(name)
                .cloned()
                .ok_or_else(|| Error::parse(name, "missing"))
        };
        fn typed<T: serde::de::DeserializeOwned>(name: &str, v: Value) -> Result<T> {
            serde_json::from_value(v).map_err(|e| Error::parse(name, e.to_string()))
        }
        let format_version: u64 = typed("format_version", field("format_version")?)?;
        if format_version != FORMAT_VERSION {
            return Err(Error::parse(
                "format_version",
                format!("unsupported version {format_version}"),
            ));
        }
        Ok(Self {
            format_version,
            layer_sizes: typed("layer_sizes", field("layer_sizes")?)?,
            weights: typed("weights", field("weights")?)?,
            biases: typed("biases", field("biases")?)?,
            seed: typed("seed", field("seed")?)?,
            trained_epochs: typed("trained_epochs", field("trained_epochs")?)?,
            alpha: typed("alpha", field("alpha")?)?,
            beta: typed("beta", field("beta")?)?,
        })
    }
}

impl Network {
    pub fn to_json(&self) -> String {
        NetworkDocument::from(self).to_json()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        NetworkDocument::from_json(text)?.try_into()
    }
}
