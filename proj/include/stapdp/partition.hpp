#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace stapdp {

struct PosteriorDraws;

// Labels per subject. Any integer values; only the induced equivalence
// relation matters to the scoring functions below.
using Partition = std::vector<int>;

/// Pairwise disagreement count over i < i': pairs together in one partition
/// and apart in the other. Computed from the contingency table.
long long binder_loss(const Partition& truth, const Partition& estimate);

/// Relabels to 1..K in order of first appearance.
Partition canonical_labels(const Partition& labels);

/// Integer co-clustering counts: C(i, i') = #draws with i and i' together.
Eigen::MatrixXi cocluster_counts(const std::vector<Partition>& draws);
Eigen::MatrixXd coclustering(const std::vector<Partition>& draws);
Eigen::MatrixXd coclustering(const PosteriorDraws& draws);

/// Sum over i < i' of |I(same in partition) - P(i, i')|.
double expected_binder(const Partition& partition, const Eigen::MatrixXd& P);

/// Index of the sampled partition with the smallest expected Binder loss
/// against the empirical co-clustering matrix; the earliest draw wins ties.
/// Losses are compared as exact integers (scaled by the number of draws).
std::size_t assign_mode_index(const std::vector<Partition>& draws);
Partition assign_mode(const std::vector<Partition>& draws);
Partition assign_mode(const PosteriorDraws& draws);

/// Subject permutation for heatmaps. Mode clusters form contiguous blocks in
/// order of first appearance; inside a block, subjects follow the leaf order
/// of average-linkage agglomerative clustering on 1 - P. Equal distances
/// merge the pair with the smallest indices first, so a flat block keeps its
/// input order.
std::vector<int> sort_for_heatmap(const Eigen::MatrixXd& P, const Partition& mode);

/// Leaf order of average-linkage clustering of the given subjects.
std::vector<int> average_linkage_order(const Eigen::MatrixXd& dissimilarity, const std::vector<int>& members);

/// Classifies each subject to the reference group whose other members it
/// co-clusters with most often on average (ties to the smallest group
/// label). Returns the fraction of subjects whose class equals their
/// reference label.
double coclustering_agreement(const Eigen::MatrixXd& P, const Partition& reference);

}  // namespace stapdp
