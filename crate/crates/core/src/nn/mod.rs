//! Forward-pass runtime for the in-loop filter and NN-intra networks.

pub mod cnnlf;
pub mod intra;
pub mod layers;
pub mod tensor;

pub use cnnlf::{cnnlf_forward, cnnlf_forward_f32, CnnlfInput, CnnlfModel, CnnlfPair, PlaneKind};
pub use intra::{
    assemble_intra_context, nnintra_predict, select_model_for_qp, IntraContext, IntraGeometry, IntraPrediction, NnIntraModel,
    NnIntraSet, INTRA_QPS, INTRA_SIZES,
};
pub use layers::conv2d;
pub use tensor::{load_weights, save_weights, Tensor, TensorMap};
