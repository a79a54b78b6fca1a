//! Knowledge graph embedding engine built around a linear-regression view
//! of relations: each relation maps head coordinates to tail coordinates
//! through two weight vectors and a bias, scored by L1 residual.
//!
//! The crate covers the full pipeline: dataset ingestion and statistics
//! ([`kgdata`]), scoring and gradients ([`model`]), self-adversarial
//! mini-batch training with sparse Adam ([`trainer`]), filtered ranking
//! metrics and the Countries AUC-PR protocol ([`evaluator`]), embedding
//! geometry diagnostics ([`analysis`]), and synthetic benchmark
//! generators ([`synth`]).

pub mod analysis;
pub mod error;
pub mod evaluator;
pub mod kgdata;
pub mod model;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};
pub use evaluator::{evaluate, evaluate_ranks, rank_one, Direction, MetricsReport, RankRecord};
pub use kgdata::{
    load_dataset, EntityId, FilterIndex, KnowledgeGraph, RelationCategory, RelationId,
    RelationStats, Split, Triple, Vocab,
};
pub use model::{init_embeddings, EmbeddingStore, GradientSlice, ModelConfig, ModelMode, ParamKind};
pub use trainer::{train, AdamState, CorruptSide, TrainConfig, TrainOutcome};
