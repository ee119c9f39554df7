//! Hybrid classifier training: readout, loss, gradients, optimizer and metrics.

mod fit;
mod metrics;
mod model;
mod optim;

pub use fit::{
    batch_gradient, evaluate, predict, trace_csv, train, train_from, Checkpoint, EpochRecord,
    TrainConfig, TrainOutcome, CHECKPOINT_VERSION,
};
pub use metrics::{auc, classification_report, MetricsReport};
pub use model::{
    cross_entropy, forward, grad_adjoint, grad_parameter_shift, loss, softmax, ModelGrads,
    ModelParams,
};
pub use optim::{cosine_lr, AdamW};
