//! Differentiable kernel and the LSPI layers.

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod layers;
pub mod model;
pub mod tape;

pub use adam::{AdamConfig, AdamState};
pub use layers::{
    cross_entropy, graph_conv, project_features, subgraph_attention, sym_normalize,
    AttentionVars, NormalizedAdjacency,
};
pub use model::{dropout_mask, forward, Dropout, Forward, Model, ModelConfig};
pub use tape::{Activation, Gradients, SparseOperator, Tape, Var};
