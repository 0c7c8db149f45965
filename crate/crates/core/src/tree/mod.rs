//! Edge-factored dependency model over spanning arborescences, trained with
//! ML or RAML under the unlabeled attachment reward.
//!
//! The attachment reward counts correct heads, so the payoff distribution
//! is itself edge-factored with log-potential `1[head = gold]/tau`; both the
//! model and the payoff expectations reduce to edge marginals, which the
//! matrix-tree theorem gives exactly for non-projective trees.

mod decode;
mod matrix_tree;
mod model;
mod treebank;

pub use decode::{decode_tree, max_arborescence};
pub use matrix_tree::{
    enumerate_trees, is_valid_tree, tree_partition_marginals, uas_payoff_edge_marginals, EdgePotentials, RootMode,
    TreeMarginals,
};
pub use model::{edge_feature_names, DepSentence, TreeMetrics, TreeModel};
pub use treebank::{synthetic_treebank, TreebankConfig};
