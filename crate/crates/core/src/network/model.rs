use super::params::{init_params, param_name, ParamStore};
use super::topology::{LayerSpec, Topology};
use crate::error::{Error, Result};
use crate::tensor::ops::{self, BatchNormCache, BatchNormParams, ConvParams, DenseParams, Mode};
use crate::tensor::{Scalar, Tensor};

/// A topology together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    pub topology: Topology,
    pub params: ParamStore<T>,
}

enum Cache<T> {
    Conv { input: Tensor<T> },
    Relu { input: Tensor<T> },
    Pool { input_shape: Vec<usize>, argmax: Vec<usize> },
    Flatten { input_shape: Vec<usize> },
    Dense { input: Tensor<T> },
    BatchNorm { cache: BatchNormCache<T> },
    Dropout { mask: Vec<T> },
    Identity,
}

/// Running-statistics update produced by one train-mode batch-norm pass.
#[derive(Debug, Clone)]
pub struct RunningUpdate<T> {
    pub layer: usize,
    pub mean: Tensor<T>,
    pub var: Tensor<T>,
}

/// Result of one forward/backward pass.
#[derive(Debug, Clone)]
pub struct StepOutput<T> {
    /// Cross-entropy plus L2 penalty.
    pub loss: T,
    pub data_loss: T,
    pub logits: Tensor<T>,
    /// Gradient for every trainable parameter, keyed like the store.
    pub grads: ParamStore<T>,
    pub running: Vec<RunningUpdate<T>>,
}

struct ForwardPass<T> {
    logits: Tensor<T>,
    caches: Vec<Cache<T>>,
    running: Vec<RunningUpdate<T>>,
}

impl<T: Scalar> Network<T> {
    pub fn new(topology: Topology, seed: u64) -> Result<Self> {
        let params = init_params(&topology, seed)?;
        Ok(Network { topology, params })
    }

    pub fn from_parts(topology: Topology, params: ParamStore<T>) -> Result<Self> {
        let reference: ParamStore<T> = init_params(&topology, 0)?;
        for p in reference.iter() {
            let got = params.get(&p.name).ok_or_else(|| {
                Error::InvalidArgument(format!("parameter store lacks `{}`", p.name))
            })?;
            if got.shape() != p.tensor.shape() {
                return Err(Error::shape("Network::from_parts", format!("parameter `{}`", p.name), got.shape(), p.tensor.shape()));
            }
        }
        if params.len() != reference.len() {
            return Err(Error::InvalidArgument(format!(
                "parameter store has {} tensors, topology needs {}",
                params.len(),
                reference.len()
            )));
        }
        // Re-insert in topology order so trainable/decay flags are authoritative.
        let mut ordered = ParamStore::new();
        for p in reference.iter() {
            ordered.insert(p.name.clone(), params.require(&p.name)?.clone(), p.trainable, p.decay)?;
        }
        Ok(Network {
            topology,
            params: ordered,
        })
    }

    pub fn count_trainable_params(&self) -> usize {
        self.params.count_trainable_params()
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        let want = self.topology.input_shape;
        match *x.shape() {
            [_, h, w, c] if [h, w, c] == want => Ok(()),
            _ => Err(Error::shape("forward", "input must be (batch, h, w, c) matching the topology", x.shape(), &want)),
        }
    }

    fn conv_params(&self, layer: usize, spec: &LayerSpec) -> Result<ConvParams<T>> {
        let LayerSpec::Conv { stride, padding, .. } = *spec else { unreachable!() };
        Ok(ConvParams {
            kernels: self.params.require(&param_name(layer, "kernel"))?.clone(),
            bias: self.params.require(&param_name(layer, "bias"))?.clone(),
            stride,
            padding,
        })
    }

    fn dense_params(&self, layer: usize) -> Result<DenseParams<T>> {
        Ok(DenseParams {
            weights: self.params.require(&param_name(layer, "weights"))?.clone(),
            bias: self.params.require(&param_name(layer, "bias"))?.clone(),
        })
    }

    fn bn_params(&self, layer: usize) -> Result<BatchNormParams<T>> {
        let f = self.params.require(&param_name(layer, "gamma"))?.len();
        Ok(BatchNormParams {
            gamma: self.params.require(&param_name(layer, "gamma"))?.clone(),
            beta: self.params.require(&param_name(layer, "beta"))?.clone(),
            running_mean: self.params.require(&param_name(layer, "running_mean"))?.clone(),
            running_var: self.params.require(&param_name(layer, "running_var"))?.clone(),
            ..BatchNormParams::new(f)
        })
    }

    fn run(&self, x: &Tensor<T>, mode: Mode, dropout_seed: u64, record: bool) -> Result<ForwardPass<T>> {
        self.check_input(x)?;
        let mut caches = Vec::with_capacity(if record { self.topology.layers.len() } else { 0 });
        let mut running = Vec::new();
        let mut act = x.clone();
        for (i, spec) in self.topology.layers.iter().enumerate() {
            let (next, cache) = match *spec {
                LayerSpec::Conv { .. } => {
                    let y = ops::conv2d_forward(&act, &self.conv_params(i, spec)?)?;
                    (y, Cache::Conv { input: act })
                }
                LayerSpec::Relu => (ops::relu(&act), Cache::Relu { input: act }),
                LayerSpec::MaxPool { window, stride } => {
                    let p = ops::maxpool2d(&act, window, stride)?;
                    (p.output, Cache::Pool { input_shape: act.shape().to_vec(), argmax: p.argmax })
                }
                LayerSpec::GlobalMaxPool => {
                    let p = ops::global_maxpool(&act)?;
                    (p.output, Cache::Pool { input_shape: act.shape().to_vec(), argmax: p.argmax })
                }
                LayerSpec::Flatten => {
                    let input_shape = act.shape().to_vec();
                    let n = input_shape[0];
                    let flat = act.len() / n.max(1);
                    (act.reshape(vec![n, flat])?, Cache::Flatten { input_shape })
                }
                LayerSpec::Dense { .. } | LayerSpec::SoftmaxOutput { .. } => {
                    let y = ops::dense(&act, &self.dense_params(i)?)?;
                    (y, Cache::Dense { input: act })
                }
                LayerSpec::BatchNorm => {
                    let out = ops::batchnorm(&act, &self.bn_params(i)?, mode)?;
                    if let Some((mean, var)) = out.running {
                        running.push(RunningUpdate { layer: i, mean, var });
                    }
                    (out.y, Cache::BatchNorm { cache: out.cache })
                }
                LayerSpec::Dropout { rate } => {
                    if mode == Mode::Train && rate > 0.0 {
                        let seed = dropout_seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                        let (y, mask) = ops::dropout(&act, rate, seed)?;
                        (y, Cache::Dropout { mask })
                    } else {
                        (act, Cache::Identity)
                    }
                }
            };
            if record {
                caches.push(cache);
            }
            act = next;
        }
        Ok(ForwardPass {
            logits: act,
            caches,
            running,
        })
    }

    /// Output logits (pre-softmax) of the last layer.
    pub fn logits(&self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        Ok(self.run(x, mode, 0, false)?.logits)
    }

    /// Class probabilities `(batch, classes)`.
    pub fn forward(&self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        Ok(ops::softmax(&self.logits(x, mode)?))
    }

    /// Inference-mode argmax over the class probabilities; ties go to the
    /// lowest class index.
    pub fn predict_class(&self, x: &Tensor<T>) -> Result<Vec<usize>> {
        Ok(argmax_rows(&self.forward(x, Mode::Infer)?))
    }

    /// Train-mode loss (SCCE + L2) and gradients for every trainable tensor.
    pub fn loss_and_grads(&self, x: &Tensor<T>, labels: &[usize], dropout_seed: u64) -> Result<StepOutput<T>> {
        let pass = self.run(x, Mode::Train, dropout_seed, true)?;
        let data_loss = ops::scce_loss(&pass.logits, labels)?;
        let decayed = self.params.iter().filter(|p| p.decay).map(|p| &p.tensor);
        let lambda = self.topology.l2_lambda;
        let loss = data_loss + ops::l2_penalty(decayed, lambda);

        let mut grads = self.params.zeros_like_trainable();
        let mut g = ops::scce_vjp(&pass.logits, labels)?;
        for (i, (spec, cache)) in self.topology.layers.iter().zip(pass.caches).enumerate().rev() {
            g = match cache {
                Cache::Conv { input } => {
                    let r = ops::conv2d_vjp(&input, &self.conv_params(i, spec)?, &g)?;
                    set(&mut grads, i, "kernel", r.kernels);
                    set(&mut grads, i, "bias", r.bias);
                    r.x
                }
                Cache::Relu { input } => ops::relu_vjp(&input, &g)?,
                Cache::Pool { input_shape, argmax } => ops::maxpool_vjp(&input_shape, &argmax, &g)?,
                Cache::Flatten { input_shape } => g.reshape(input_shape)?,
                Cache::Dense { input } => {
                    let r = ops::dense_vjp(&input, &self.dense_params(i)?, &g)?;
                    set(&mut grads, i, "weights", r.weights);
                    set(&mut grads, i, "bias", r.bias);
                    r.x
                }
                Cache::BatchNorm { cache } => {
                    let r = ops::batchnorm_vjp(&cache, &self.bn_params(i)?, &g)?;
                    set(&mut grads, i, "gamma", r.gamma);
                    set(&mut grads, i, "beta", r.beta);
                    r.x
                }
                Cache::Dropout { mask } => ops::dropout_vjp(&mask, &g)?,
                Cache::Identity => g,
            };
        }
        if lambda > 0.0 {
            for p in self.params.iter().filter(|p| p.decay && p.trainable) {
                let reg = ops::l2_grad(&p.tensor, lambda);
                let dst = grads.get_mut(&p.name).expect("trainable grads exist");
                for (d, r) in dst.data_mut().iter_mut().zip(reg.data()) {
                    *d += *r;
                }
            }
        }
        Ok(StepOutput {
            loss,
            data_loss,
            logits: pass.logits,
            grads,
            running: pass.running,
        })
    }

    /// Writes batch-norm running statistics produced by a train-mode pass.
    pub fn commit_running(&mut self, updates: &[RunningUpdate<T>]) -> Result<()> {
        for u in updates {
            *self
                .params
                .get_mut(&param_name(u.layer, "running_mean"))
                .ok_or_else(|| Error::InvalidArgument(format!("layer {} has no running mean", u.layer)))? = u.mean.clone();
            *self
                .params
                .get_mut(&param_name(u.layer, "running_var"))
                .ok_or_else(|| Error::InvalidArgument(format!("layer {} has no running var", u.layer)))? = u.var.clone();
        }
        Ok(())
    }
}

fn set<T: Scalar>(grads: &mut ParamStore<T>, layer: usize, field: &str, value: Tensor<T>) {
    *grads.get_mut(&param_name(layer, field)).expect("gradient slot exists") = value;
}

/// Row-wise argmax; the first maximal column wins.
pub fn argmax_rows<T: Scalar>(probs: &Tensor<T>) -> Vec<usize> {
    let (_, cols) = probs.rows_cols();
    probs
        .data()
        .chunks(cols.max(1))
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}
