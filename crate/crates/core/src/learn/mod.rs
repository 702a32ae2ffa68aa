//! Differentially private pairwise ranking: simulated data, privatization,
//! scoring models, training and evaluation.

pub mod data;
pub mod ingest;
pub mod model;
pub mod train;

pub use data::{
    generate_dataset, generate_users, privatize_dataset, privatize_rankings, LinearGenerator, RankingTask,
    UserItemData,
};
pub use ingest::{ingest_order_file, read_order_file, OrderFileFormat, RankingDataset};
pub use model::{ModelKind, ModelSpec, ScoringModel};
pub use train::{
    ordered_pairs, pairwise_accuracy, pairwise_loss_and_gradient, train, train_with_validation, PairExample,
    PairwiseAccuracy, TrainConfig, TrainOutcome,
};
