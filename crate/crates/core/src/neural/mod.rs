//! Neural equalizers: the non-turbo multi-label and joint-label networks
//! and the turbo equalizer with a-priori inputs and EXT/APP heads.

mod adam;
mod checkpoint;
mod features;
mod gradcheck;
mod loss;
mod model;
mod train;
mod turbo;

pub use crate::exit::{synthesize_apr, AprSynthSpec};
pub use adam::{Adam, AdamConfig};
pub use checkpoint::{blob_path, load_checkpoint, save_checkpoint, CheckpointManifest, CHECKPOINT_VERSION};
pub use features::{WindowFeature, WindowSet};
pub use gradcheck::{gradient_check, GradCheckReport, TensorCheck};
pub use loss::{
    bce_with_grad, class_of, loss_bce_multilabel, loss_nb_softmax, loss_teq_minmax, marginal_llrs,
    minmax_with_grad, nb_with_grad, MinMaxBranch,
};
pub use model::{Cache, ForwardOutput, HeadKind, Layout, Mode, NeuralModel, TensorSlot, Topology};
pub use train::{loss_and_grad, random_apr_block, train, EpochRecord, LossMode, TrainHistory, TrainSpec};
pub use turbo::{
    decode_stream, turbo_decode, Interleaver, NetworkDetector, PassStats, StreamDecode, TurboResult,
    TurboSchedule,
};
