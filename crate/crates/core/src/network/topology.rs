//! Declarative network descriptions.
//!
//! The full-size wear classifier is described only by counts:
//! 7 convolutional layers with 32, 64, 64, 128, 256, 256, 256 filters,
//! 6 pooling layers, 3 fully connected layers of 512 units with batch
//! normalization after each, a 16-way softmax output, 31 layers and
//! 2,273,680 trainable parameters. Kernel size, padding and the pooling
//! placement are not given. With 3×3 "same" convolutions the convolutional
//! stack has 1,605,504 parameters, and the remaining 668,176 are matched
//! exactly only when the flattened feature vector is 256 wide:
//!
//! ```text
//!   dense 256→512      131,584
//!   dense 512→512  2 × 262,656
//!   dense 512→16         8,208
//!   batch norm γ,β 3 ×   1,024
//! ```
//!
//! A 256-wide flatten of a 256-channel map needs a 1×1 spatial extent, which
//! a 2×2 max pool after each of convolutions 1–5 followed by a global max
//! pool after convolution 7 provides (6 pooling layers, 128 → 4 → 1).
//! Counting every convolution, ReLU, pooling, flatten, dense and batch-norm
//! layer as one layer, with the softmax fused into the output dense layer,
//! gives 31.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::ops::{conv_output_extent, Padding};

pub const PAPER_INPUT: [usize; 3] = [128, 128, 3];
pub const PAPER_FILTERS: [usize; 7] = [32, 64, 64, 128, 256, 256, 256];
pub const DESK_INPUT: [usize; 3] = [64, 64, 3];
pub const DESK_FILTERS: [usize; 7] = [8, 16, 16, 32, 64, 64, 64];
pub const CLASSES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv {
        filters: usize,
        kernel: usize,
        stride: usize,
        padding: Padding,
    },
    Relu,
    MaxPool {
        window: usize,
        stride: usize,
    },
    GlobalMaxPool,
    Flatten,
    Dense {
        units: usize,
    },
    BatchNorm,
    Dropout {
        rate: f64,
    },
    /// Dense layer with softmax activation producing class probabilities.
    SoftmaxOutput {
        classes: usize,
    },
}

impl LayerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Conv { .. } => "conv",
            LayerSpec::Relu => "relu",
            LayerSpec::MaxPool { .. } => "maxpool",
            LayerSpec::GlobalMaxPool => "global_maxpool",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::BatchNorm => "batchnorm",
            LayerSpec::Dropout { .. } => "dropout",
            LayerSpec::SoftmaxOutput { .. } => "output",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    /// `(height, width, channels)` of one input image.
    pub input_shape: [usize; 3],
    pub layers: Vec<LayerSpec>,
    pub l2_lambda: f64,
}

/// Shape grammar shared by the full-size network, the desk profile and
/// hyperparameter-search candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnBlueprint {
    pub input_shape: [usize; 3],
    pub filters: Vec<usize>,
    pub kernel: usize,
    pub dense_units: Vec<usize>,
    pub batchnorm: bool,
    pub dropout: f64,
    pub classes: usize,
    pub l2_lambda: f64,
}

impl CnnBlueprint {
    pub fn paper() -> Self {
        CnnBlueprint {
            input_shape: PAPER_INPUT,
            filters: PAPER_FILTERS.to_vec(),
            kernel: 3,
            dense_units: vec![512; 3],
            batchnorm: true,
            dropout: 0.0,
            classes: CLASSES,
            l2_lambda: 0.01,
        }
    }

    pub fn desk() -> Self {
        CnnBlueprint {
            input_shape: DESK_INPUT,
            filters: DESK_FILTERS.to_vec(),
            dense_units: vec![128; 3],
            l2_lambda: 1e-4,
            ..Self::paper()
        }
    }

    /// Convolution `i` (0-based) of `n` is followed by a 2×2 max pool when
    /// `i < n − 2` and the map is still at least 2×2; the last convolution is
    /// followed by a global max pool.
    pub fn build(&self) -> Result<Topology> {
        if self.filters.is_empty() {
            return Err(Error::Config("a CNN needs at least one convolution".into()));
        }
        let n = self.filters.len();
        let mut layers = Vec::new();
        let (mut h, mut w) = (self.input_shape[0], self.input_shape[1]);
        for (i, &filters) in self.filters.iter().enumerate() {
            layers.push(LayerSpec::Conv {
                filters,
                kernel: self.kernel,
                stride: 1,
                padding: Padding::Same,
            });
            layers.push(LayerSpec::Relu);
            if i + 1 == n {
                layers.push(LayerSpec::GlobalMaxPool);
            } else if i + 2 < n && h >= 2 && w >= 2 {
                layers.push(LayerSpec::MaxPool { window: 2, stride: 2 });
                h /= 2;
                w /= 2;
            }
        }
        layers.push(LayerSpec::Flatten);
        for &units in &self.dense_units {
            layers.push(LayerSpec::Dense { units });
            if self.batchnorm {
                layers.push(LayerSpec::BatchNorm);
            }
            layers.push(LayerSpec::Relu);
            if self.dropout > 0.0 {
                layers.push(LayerSpec::Dropout { rate: self.dropout });
            }
        }
        layers.push(LayerSpec::SoftmaxOutput { classes: self.classes });
        let topo = Topology {
            input_shape: self.input_shape,
            layers,
            l2_lambda: self.l2_lambda,
        };
        topo.validate()?;
        Ok(topo)
    }
}

/// The full-size classifier (see module docs).
pub fn build_paper_cnn() -> Topology {
    CnnBlueprint::paper().build().expect("paper blueprint is valid")
}

pub fn build_desk_cnn() -> Topology {
    CnnBlueprint::desk().build().expect("desk blueprint is valid")
}

impl Topology {
    /// Per-sample activation shape after every layer, checking the chain.
    pub fn validate(&self) -> Result<Vec<Vec<usize>>> {
        if self.input_shape.contains(&0) {
            return Err(Error::Config(format!("input shape {:?} has a zero extent", self.input_shape)));
        }
        let outputs = self.layers.iter().filter(|l| matches!(l, LayerSpec::SoftmaxOutput { .. })).count();
        if outputs != 1 || !matches!(self.layers.last(), Some(LayerSpec::SoftmaxOutput { .. })) {
            return Err(Error::Config("topology needs exactly one SoftmaxOutput, last in the chain".into()));
        }
        if self.l2_lambda.is_nan() || self.l2_lambda < 0.0 {
            return Err(Error::Config("l2 lambda must be >= 0".into()));
        }
        let mut shape = self.input_shape.to_vec();
        let mut shapes = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let bad = |why: &str| Error::Config(format!("layer {i} ({}): {why}, input {shape:?}", layer.kind()));
            shape = match *layer {
                LayerSpec::Conv { filters, kernel, stride, padding } => {
                    if shape.len() != 3 || filters == 0 {
                        return Err(bad("needs an (h, w, c) input and >= 1 filter"));
                    }
                    let (oh, _) = conv_output_extent(shape[0], kernel, stride, padding).ok_or_else(|| bad("kernel does not fit"))?;
                    let (ow, _) = conv_output_extent(shape[1], kernel, stride, padding).ok_or_else(|| bad("kernel does not fit"))?;
                    vec![oh, ow, filters]
                }
                LayerSpec::MaxPool { window, stride } => {
                    if shape.len() != 3 || window == 0 || stride == 0 || window > shape[0] || window > shape[1] {
                        return Err(bad("pool window does not fit"));
                    }
                    vec![(shape[0] - window) / stride + 1, (shape[1] - window) / stride + 1, shape[2]]
                }
                LayerSpec::GlobalMaxPool => {
                    if shape.len() != 3 {
                        return Err(bad("needs an (h, w, c) input"));
                    }
                    vec![1, 1, shape[2]]
                }
                LayerSpec::Flatten => vec![shape.iter().product()],
                LayerSpec::Dense { units } | LayerSpec::SoftmaxOutput { classes: units } => {
                    if shape.len() != 1 || units == 0 {
                        return Err(bad("needs a flat input and >= 1 unit"));
                    }
                    vec![units]
                }
                LayerSpec::BatchNorm => {
                    if shape.len() != 1 {
                        return Err(bad("batch norm follows a dense layer"));
                    }
                    shape
                }
                LayerSpec::Dropout { rate } => {
                    if !(0.0..1.0).contains(&rate) {
                        return Err(bad("dropout rate outside [0, 1)"));
                    }
                    shape
                }
                LayerSpec::Relu => shape,
            };
            shapes.push(shape.clone());
        }
        Ok(shapes)
    }

    /// Every entry of the layer list counts once; the softmax activation is
    /// part of the output layer.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parses and validates a topology written by [`Topology::to_toml`].
    pub fn from_toml(text: &str) -> Result<Self> {
        let topology: Topology = toml::from_str(text).map_err(|e| Error::Config(format!("topology: {e}")))?;
        topology.validate()?;
        Ok(topology)
    }

    pub fn count_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn count_kind(&self, kind: &str) -> usize {
        self.layers.iter().filter(|l| l.kind() == kind).count()
    }

    pub fn classes(&self) -> usize {
        match self.layers.last() {
            Some(LayerSpec::SoftmaxOutput { classes }) => *classes,
            _ => 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_cnn_has_31_layers() {
        let t = build_paper_cnn();
        assert_eq!(t.count_layers(), 31);
        assert_eq!(t.count_kind("conv"), 7);
        assert_eq!(t.count_kind("maxpool") + t.count_kind("global_maxpool"), 6);
        assert_eq!(t.count_kind("dense"), 3);
        assert_eq!(t.input_shape, [128, 128, 3]);
        assert_eq!(t.classes(), 16);
        assert_eq!(t.l2_lambda, 0.01);
    }

    #[test]
    fn paper_cnn_flattens_to_256() {
        let t = build_paper_cnn();
        let shapes = t.validate().unwrap();
        let flat = t.layers.iter().position(|l| *l == LayerSpec::Flatten).unwrap();
        assert_eq!(shapes[flat], vec![256]);
    }

    #[test]
    fn output_must_be_last_and_unique() {
        let mut t = build_desk_cnn();
        t.layers.push(LayerSpec::Relu);
        assert!(t.validate().is_err());
        let mut t = build_desk_cnn();
        t.layers.insert(0, LayerSpec::SoftmaxOutput { classes: 2 });
        assert!(t.validate().is_err());
    }

    #[test]
    fn small_input_skips_pools_that_do_not_fit() {
        let bp = CnnBlueprint {
            input_shape: [16, 16, 3],
            filters: vec![4; 7],
            ..CnnBlueprint::desk()
        };
        let t = bp.build().unwrap();
        assert_eq!(t.count_kind("maxpool"), 4);
    }

    #[test]
    fn topology_serializes_as_toml() {
        let t = build_desk_cnn();
        let s = toml::to_string(&t).unwrap();
        let back: Topology = toml::from_str(&s).unwrap();
        assert_eq!(back, t);
    }
}
