//! Q-learning over object-slot features with a hand-differentiated MLP,
//! prioritized replay and optional demonstration preloading.

mod bench;
mod checkpoint;
mod encode;
mod net;
mod report;
mod train;

pub use bench::{run_benchmark, MiniBenchmark, SeedComparison};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC};
pub use encode::{encode_object_state, EncoderConfig, EncoderMode, FROG_FIELDS, SLOT_FIELDS};
pub use net::{grad_check, greedy, huber, loss, loss_and_grad, Adam, Layer, LossBatch, QNet, N_ACTIONS};
pub use report::{
    batch_demo_share, episodes_to_threshold, final_window_mean, relative_difference, RunSummary,
};
pub use train::{
    encode_episode, evaluate, metrics_csv, parse_metrics_csv, td_targets, train, EpisodeMetrics,
    EvalResult, Observer, TrainConfig, TrainOutcome, Trainer, METRICS_HEADER,
};

#[derive(Debug, thiserror::Error)]
pub enum DqnError {
    #[error("feature length {got} does not match network input {want}")]
    Length { got: usize, want: usize },
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("metrics: {0}")]
    Metrics(String),
    #[error(transparent)]
    Replay(#[from] crate::replay::ReplayError),
    #[error(transparent)]
    Env(#[from] crate::env::EnvError),
    #[error(transparent)]
    Search(#[from] crate::search::SearchError),
    #[error(transparent)]
    Obs(#[from] crate::obs::ObsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
