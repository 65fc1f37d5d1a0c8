//! Reward-proportional scenario generator: a causal attention model over
//! scenario tokens, its training loop, a learned reward proxy and sampling.

pub mod adam;
pub mod checkpoint;
pub mod model;
pub mod proxy;
pub mod sample;
pub mod synthetic;
pub mod tensor;
pub mod train;

pub use checkpoint::{Checkpoint, CheckpointError, CHECKPOINT_SCHEMA_VERSION};
pub use model::{Model, ModelConfig, ModelError, Params};
pub use proxy::{mean_relative_error, train_proxy, ProxyConfig, ProxyError, ProxyModel, ProxyReport};
pub use sample::{rerank, sample_batch, sample_greedy, sample_one, Sample};
pub use synthetic::{oracle_dataset, oracle_reward};
pub use train::{batch_loss, target_log_reward, train_generator, TrainConfig, TrainError, TrainReport};
