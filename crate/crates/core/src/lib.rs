//! Compression-length toolkit: adaptive Markov coding, competitive
//! clustering, boundary segmentation, redundancy diagnostics, and
//! finite-field recovery experiments, all driven by one bit-exact
//! code-length surrogate.

pub mod alphabet;
pub mod bitstream;
pub mod cluster;
pub mod coder;
pub mod corpus;
pub mod error;
pub mod model;
pub mod sources;

pub use alphabet::{join, Alphabet, SymbolSequence};
pub use bitstream::Bitstream;
pub use cluster::{
    agreement_direct, agreement_permuted, assign_item, em_cluster, grounded_cluster,
    logprob_cluster, merge_winner, seed_transmission_experiment, ClusterState, ContextBuilder,
    SeedSet,
};
pub use coder::{code_len, cond_code_len, decode, encode, ncd, CodeLenBits};
pub use corpus::{Corpus, CorpusItem};
pub use error::{Error, Result};
pub use model::AdaptiveModel;
pub use sources::{generate_corpus, two_source_corpus, SourceKind, SourceSpec};
