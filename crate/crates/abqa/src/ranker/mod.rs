//! Learning-to-rank over question-assertion feature vectors: gradient-
//! boosted regression trees with λ-gradients from NDCG swap deltas, the
//! feature registry, and ranking metrics.

mod features;
mod lambdamart;
mod metrics;
mod tree;

pub use features::{
    rank_assertions, FeatureContext, FeatureSubset, FeatureVector, FEATURE_NAMES,
};
pub use lambdamart::{fit_lambdamart, mean_ndcg, ndcg, Group, LambdaMartConfig};
pub use metrics::{eval_rank, RankMetrics};
pub use tree::{
    forest_from_str, forest_to_string, load_forest, save_forest, Forest, RegressionTree, TreeNode,
};
