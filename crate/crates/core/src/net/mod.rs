//! The network: tensor kernels, reverse-mode tape, model layout and
//! checkpoint container.

mod checkpoint;
mod model;
pub mod ops;
mod param;
mod real;
mod tape;
mod tensor;

pub use checkpoint::{Checkpoint, CheckpointHeader, LossSpace, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use model::{
    Dune, ForwardOutput, ModelConfig, NodeGraph, NodeInfo, BLOCKS_PER_NODE, DESK_WIDTHS, FILTER_SIZE,
    FULL_SCALE_WIDTHS, HEAD_COUNT,
};
pub use param::{ParamSet, ParamSpec};
pub use real::Real;
pub use tape::{Tape, Var};
pub use tensor::Tensor;
