//! Topology construction, parameter accounting and execution over the layer chain.

pub mod checkpoint;
mod model;
mod params;
mod topology;

pub use model::{argmax_rows, Network, RunningUpdate, StepOutput};
pub use params::{init_params, Param, ParamStore};
pub use topology::{
    build_desk_cnn, build_paper_cnn, CnnBlueprint, LayerSpec, Topology, CLASSES, DESK_FILTERS, DESK_INPUT,
    PAPER_FILTERS, PAPER_INPUT,
};
