//! Vector quantization with codebooks discovered by structural entropy
//! minimization.
//!
//! Feature vectors become vertices of a cosine-similarity graph. Greedily
//! merging vertex clusters to lower the graph's two-level structural entropy
//! finds a partition whose size is the codebook size, and cluster means are the
//! codewords. New vectors are quantized by attaching them to a graph of stored
//! anchors and joining the cluster that lowers the entropy most. Stages are
//! stacked as a residual quantizer.
//!
//! ```
//! use sevq_core::{synth, train_codec, TrainConfig};
//!
//! let (x, _) = synth::gaussian_mixture(&synth::MixtureSpec::default(), 0).unwrap();
//! let cfg = TrainConfig { stages: 2, ..TrainConfig::default() };
//! let model = train_codec(&x, &cfg).unwrap();
//! assert_eq!(model.codebook_sizes()[0], 5);
//!
//! let tokens = model.encode(&x).unwrap();
//! let x_hat = model.decode(&tokens).unwrap();
//! assert_eq!(x_hat.rows(), x.rows());
//! ```

pub mod baselines;
pub mod codebook;
pub mod entropy;
pub mod error;
pub mod features;
pub mod graph;
pub mod io;
pub mod quantizer;
pub mod rng;
pub mod synth;

pub use baselines::{brute_force_min_se, euclidean_rvq, kmeans, ExactResult};
pub use codebook::{extract_centroids, hierarchical_minimize, vanilla_greedy, Codebook};
pub use entropy::{
    assign_delta, encoding_tree_se, merge_delta, partition_se, EncodingTree, Partition, SEDelta,
};
pub use error::{Error, Result};
pub use features::FeatureMatrix;
pub use graph::{attach_query, build_graph, FeatureGraph, QueryAttachment};
pub use quantizer::{
    assign, decode, distortion_report, encode, train_codec, Assignment, CodecModel,
    DistortionReport, StageModel, TokenSequence, TrainConfig,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/structural-entropy.md")]
    mod structural_entropy {}
    #[doc = include_str!("../../../book/src/codebooks.md")]
    mod codebooks {}
    #[doc = include_str!("../../../book/src/quantization.md")]
    mod quantization {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
