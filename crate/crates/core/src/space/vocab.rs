//! Search-field vocabularies.
//!
//! Every gene field stores an index into one of the lists held by
//! [`Vocabulary`]. The layer list is fixed; the relative output dimension
//! list is configurable.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Identifier written into serialized genomes so a reader can tell which
/// vocabulary the indices refer to.
pub const VOCAB_VERSION: &str = "mufasa-vocab-1";

/// Neural network layer choices for one branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Layer {
    /// Standard `kernel x 1` convolution.
    Conv { kernel: usize },
    /// Depthwise `kernel x 1` convolution followed by a pointwise projection.
    SepConv { kernel: usize },
    /// Depthwise convolution with softmax-normalized kernels, one kernel
    /// shared by every `reduction` consecutive channels.
    LightConv { kernel: usize, reduction: usize },
    Attention { heads: usize },
    Glu,
    MaxPool { kernel: usize },
    AvgPool { kernel: usize },
    Identity,
    Dead,
}

impl Layer {
    /// Whether the layer's output width follows the branch's relative
    /// output dimension. The others preserve their input width.
    pub fn resizes(self) -> bool {
        matches!(
            self,
            Layer::Conv { .. } | Layer::SepConv { .. } | Layer::Attention { .. } | Layer::Glu
        )
    }

    /// Whether the layer owns trainable weights.
    pub fn has_weights(self) -> bool {
        matches!(
            self,
            Layer::Conv { .. }
                | Layer::SepConv { .. }
                | Layer::LightConv { .. }
                | Layer::Attention { .. }
                | Layer::Glu
        )
    }

    pub fn short_name(self) -> String {
        match self {
            Layer::Conv { kernel } => format!("conv{kernel}x1"),
            Layer::SepConv { kernel } => format!("sep_conv{kernel}x1"),
            Layer::LightConv { kernel, reduction } => format!("light_conv{kernel}x1_r{reduction}"),
            Layer::Attention { heads } => format!("attention{heads}h"),
            Layer::Glu => "glu".to_string(),
            Layer::MaxPool { kernel } => format!("max_pool{kernel}x1"),
            Layer::AvgPool { kernel } => format!("avg_pool{kernel}x1"),
            Layer::Identity => "identity".to_string(),
            Layer::Dead => "dead".to_string(),
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.short_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    LeakyRelu,
    Swish,
    None,
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::LeakyRelu => "leaky_relu",
            Activation::Swish => "swish",
            Activation::None => "none",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Norm {
    Layer,
    Batch,
    None,
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::Layer => "layer_norm",
            Norm::Batch => "batch_norm",
            Norm::None => "none",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Combiner {
    Add,
    Concat,
    Mul,
}

impl fmt::Display for Combiner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Combiner::Add => "add",
            Combiner::Concat => "concat",
            Combiner::Mul => "mul",
        })
    }
}

/// The value lists every gene index points into.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub layers: Vec<Layer>,
    pub activations: Vec<Activation>,
    pub norms: Vec<Norm>,
    pub combiners: Vec<Combiner>,
    pub relative_dims: Vec<f64>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::with_relative_dims(vec![0.5, 1.0, 2.0, 4.0])
    }
}

impl Vocabulary {
    /// Standard lists with a custom relative output dimension list.
    pub fn with_relative_dims(relative_dims: Vec<f64>) -> Self {
        let mut layers = Vec::with_capacity(29);
        for kernel in [1, 3] {
            layers.push(Layer::Conv { kernel });
        }
        for kernel in [3, 5, 7, 9, 11] {
            layers.push(Layer::SepConv { kernel });
        }
        for kernel in [3, 5, 7, 15] {
            for reduction in [1, 4, 16] {
                layers.push(Layer::LightConv { kernel, reduction });
            }
        }
        for heads in [4, 8, 16] {
            layers.push(Layer::Attention { heads });
        }
        layers.push(Layer::Glu);
        for kernel in [3, 5] {
            layers.push(Layer::MaxPool { kernel });
        }
        for kernel in [3, 5] {
            layers.push(Layer::AvgPool { kernel });
        }
        layers.push(Layer::Identity);
        layers.push(Layer::Dead);

        Vocabulary {
            layers,
            activations: vec![
                Activation::Relu,
                Activation::LeakyRelu,
                Activation::Swish,
                Activation::None,
            ],
            norms: vec![Norm::Layer, Norm::Batch, Norm::None],
            combiners: vec![Combiner::Add, Combiner::Concat, Combiner::Mul],
            relative_dims,
        }
    }

    pub fn layer_index(&self, layer: Layer) -> Option<usize> {
        self.layers.iter().position(|&l| l == layer)
    }

    pub fn activation_index(&self, a: Activation) -> Option<usize> {
        self.activations.iter().position(|&x| x == a)
    }

    pub fn norm_index(&self, n: Norm) -> Option<usize> {
        self.norms.iter().position(|&x| x == n)
    }

    pub fn combiner_index(&self, c: Combiner) -> Option<usize> {
        self.combiners.iter().position(|&x| x == c)
    }

    pub fn dim_index(&self, multiplier: f64) -> Option<usize> {
        self.relative_dims.iter().position(|&x| x == multiplier)
    }

    /// Checks the structural invariants of the lists.
    pub fn check(&self) -> Result<(), String> {
        fn distinct<T: PartialEq>(name: &str, items: &[T]) -> Result<(), String> {
            if items.is_empty() {
                return Err(format!("{name} list is empty"));
            }
            for (i, a) in items.iter().enumerate() {
                if items[i + 1..].contains(a) {
                    return Err(format!("{name} list has a duplicate entry"));
                }
            }
            Ok(())
        }
        distinct("layer", &self.layers)?;
        distinct("activation", &self.activations)?;
        distinct("normalization", &self.norms)?;
        distinct("combiner", &self.combiners)?;
        distinct("relative dimension", &self.relative_dims)?;
        if self.relative_dims.iter().any(|&d| !(d.is_finite() && d > 0.0)) {
            return Err("relative dimensions must be positive and finite".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_table_has_29_entries() {
        let v = Vocabulary::default();
        assert_eq!(v.layers.len(), 29);
        assert_eq!(v.layers[0], Layer::Conv { kernel: 1 });
        assert_eq!(v.layers[28], Layer::Dead);
        let light = v.layers.iter().filter(|l| matches!(l, Layer::LightConv { .. })).count();
        assert_eq!(light, 12);
        v.check().unwrap();
    }

    #[test]
    fn duplicate_dims_rejected() {
        let v = Vocabulary::with_relative_dims(vec![1.0, 1.0]);
        assert!(v.check().is_err());
        let v = Vocabulary::with_relative_dims(vec![]);
        assert!(v.check().is_err());
    }
}
