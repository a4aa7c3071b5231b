//! Trainable subgraph retrieval for question answering over knowledge bases.
//!
//! The pipeline: load a [`KnowledgeBase`], expand relation paths from each
//! topic entity with [`retrieve`], turn them into trees and merge them with
//! [`subgraph_from_paths`], then score answers with a [`ReasonerParams`]
//! model. [`training`] holds pre-training and end-to-end fine-tuning.

pub mod checkpoint;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod gradcheck;
pub mod kb;
pub mod optim;
pub mod reasoner;
pub mod retriever;
pub mod subgraph;
pub mod supervision;
pub mod training;

pub use checkpoint::Checkpoint;
pub use encoder::{Choice, QuestionState, RelationScorer, ScorerConfig, ScorerParams, Vocab};
pub use error::{Error, Result};
pub use eval::synthetic::{generate_synthetic, SynthConfig, SyntheticData};
pub use eval::{answer_coverage, qa_metrics, search_threshold, CoverageMode, CoverageReport, QaReport};
pub use kb::{EntityId, EntitySet, KnowledgeBase, RelationId, Triple};
pub use optim::{Parameters, Sgd};
pub use reasoner::{answer_distribution, tree_likelihood, AnswerDistribution, ReasonerConfig, ReasonerParams};
pub use retriever::{expand_beam, path_probability, retrieve, retrieve_all, RetrievalConfig, ScoredPath};
pub use subgraph::{
    induce_tree, merge_subgraphs, ppr_subgraph, subgraph_from_paths, union_trees, PprConfig, Subgraph, Tree,
};
pub use supervision::{
    build_pseudo_labels, build_weak_labels, decompose_path, DistantTuple, PathInstance, Query, Question, RawQuestion,
    StepInstance,
};
pub use training::{
    finetune_e2e, finetune_e2e_with, pretrain_retriever, pretrain_retriever_with, retriever_e2e_loss, train_reasoner,
    train_reasoner_with, EpochReport, TrainConfig,
};
