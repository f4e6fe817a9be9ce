//! Differentiable primitives. Activations are separate ops, never fused
//! into convolution or dense layers.

mod activation;
mod batchnorm;
mod conv;
mod dense;
mod dropout;
mod loss;
mod pool;

pub use activation::{relu, relu_vjp, softmax, softmax_vjp};
pub use batchnorm::{
    batchnorm, batchnorm_vjp, BatchNormCache, BatchNormGrads, BatchNormOutput, BatchNormParams, Mode,
};
pub use conv::{conv2d_forward, conv2d_vjp, conv_output_extent, ConvGeometry, ConvGrads, ConvParams, Padding};
pub use dense::{dense, dense_vjp, DenseGrads, DenseParams};
pub use dropout::{dropout, dropout_vjp};
pub use loss::{l2_grad, l2_penalty, scce_loss, scce_vjp};
pub use pool::{global_maxpool, maxpool2d, maxpool_vjp, Pooled};
