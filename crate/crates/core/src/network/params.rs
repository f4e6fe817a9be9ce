use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::topology::{LayerSpec, Topology};
use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub name: String,
    pub tensor: Tensor<T>,
    pub trainable: bool,
    /// Included in the L2 penalty (conv kernels and dense weights only).
    pub decay: bool,
}

/// Named parameter tensors in layer order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore<T> {
    params: Vec<Param<T>>,
    index: HashMap<String, usize>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        ParamStore {
            params: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor<T>, trainable: bool, decay: bool) -> Result<()> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(Error::InvalidArgument(format!("duplicate parameter name `{name}`")));
        }
        self.index.insert(name.clone(), self.params.len());
        self.params.push(Param {
            name,
            tensor,
            trainable,
            decay,
        });
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.index.get(name).map(|&i| &self.params[i].tensor)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<T>> {
        self.index.get(name).map(|&i| &mut self.params[i].tensor)
    }

    pub(crate) fn require(&self, name: &str) -> Result<&Tensor<T>> {
        self.get(name)
            .ok_or_else(|| Error::InvalidArgument(format!("missing parameter `{name}`")))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param<T>> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param<T>> {
        self.params.iter_mut()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total size of trainable tensors; batch-norm running statistics are
    /// not trainable and do not count.
    pub fn count_trainable_params(&self) -> usize {
        self.params.iter().filter(|p| p.trainable).map(|p| p.tensor.len()).sum()
    }

    pub fn cast<U: Scalar>(&self) -> ParamStore<U> {
        ParamStore {
            params: self
                .params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    tensor: p.tensor.cast(),
                    trainable: p.trainable,
                    decay: p.decay,
                })
                .collect(),
            index: self.index.clone(),
        }
    }

    /// Zero-filled copy holding only trainable entries, used to collect gradients.
    pub fn zeros_like_trainable(&self) -> ParamStore<T> {
        let mut out = ParamStore::new();
        for p in self.params.iter().filter(|p| p.trainable) {
            out.insert(p.name.clone(), Tensor::zeros(p.tensor.shape().to_vec()), true, p.decay)
                .expect("names are unique");
        }
        out
    }
}

pub(crate) fn param_name(layer: usize, field: &str) -> String {
    format!("layer{layer:02}.{field}")
}

/// Allocates the parameters of `topology`: He-uniform weights, zero biases,
/// `gamma = 1`, `beta = 0`, running mean 0 and running variance 1.
pub fn init_params<T: Scalar>(topology: &Topology, seed: u64) -> Result<ParamStore<T>> {
    let shapes = topology.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    let mut he_uniform = |shape: Vec<usize>, fan_in: usize| {
        let limit = (6.0 / fan_in as f64).sqrt();
        Tensor::from_fn(shape, |_| T::of(rng.gen_range(-limit..limit)))
    };
    let mut prev: Vec<usize> = topology.input_shape.to_vec();
    for (i, (layer, out)) in topology.layers.iter().zip(&shapes).enumerate() {
        match *layer {
            LayerSpec::Conv { filters, kernel, .. } => {
                let cin = prev[2];
                let k = he_uniform(vec![kernel, kernel, cin, filters], kernel * kernel * cin);
                store.insert(param_name(i, "kernel"), k, true, true)?;
                store.insert(param_name(i, "bias"), Tensor::zeros(vec![filters]), true, false)?;
            }
            LayerSpec::Dense { units } | LayerSpec::SoftmaxOutput { classes: units } => {
                let fan_in = prev[0];
                store.insert(param_name(i, "weights"), he_uniform(vec![fan_in, units], fan_in), true, true)?;
                store.insert(param_name(i, "bias"), Tensor::zeros(vec![units]), true, false)?;
            }
            LayerSpec::BatchNorm => {
                let f = prev[0];
                store.insert(param_name(i, "gamma"), Tensor::full(vec![f], T::one()), true, false)?;
                store.insert(param_name(i, "beta"), Tensor::zeros(vec![f]), true, false)?;
                store.insert(param_name(i, "running_mean"), Tensor::zeros(vec![f]), false, false)?;
                store.insert(param_name(i, "running_var"), Tensor::full(vec![f], T::one()), false, false)?;
            }
            _ => {}
        }
        prev = out.clone();
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::topology::{build_paper_cnn, CnnBlueprint};

    #[test]
    fn empty_store_counts_zero() {
        assert_eq!(ParamStore::<f32>::new().count_trainable_params(), 0);
    }

    #[test]
    fn single_dense_counts_weights_and_bias() {
        let mut s = ParamStore::<f64>::new();
        s.insert("w", Tensor::zeros(vec![2, 3]), true, true).unwrap();
        s.insert("b", Tensor::zeros(vec![3]), true, false).unwrap();
        assert_eq!(s.count_trainable_params(), 9);
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut s = ParamStore::<f64>::new();
        s.insert("w", Tensor::zeros(vec![1]), true, true).unwrap();
        assert!(s.insert("w", Tensor::zeros(vec![1]), true, true).is_err());
    }

    #[test]
    fn paper_cnn_parameter_count() {
        let store: ParamStore<f32> = init_params(&build_paper_cnn(), 0).unwrap();
        assert_eq!(store.count_trainable_params(), 2_273_680);
        // running statistics of the three batch-norm layers are excluded
        let all: usize = store.iter().map(|p| p.tensor.len()).sum();
        assert_eq!(all - 2_273_680, 3 * 2 * 512);
    }

    #[test]
    fn he_uniform_respects_limit_and_seed() {
        let topo = CnnBlueprint::desk().build().unwrap();
        let a: ParamStore<f64> = init_params(&topo, 3).unwrap();
        let b: ParamStore<f64> = init_params(&topo, 3).unwrap();
        assert_eq!(a, b);
        let k = a.get("layer00.kernel").unwrap();
        let limit = (6.0f64 / 27.0).sqrt();
        assert!(k.data().iter().all(|v| v.abs() <= limit));
    }
}
