#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace stapdp {

struct PosteriorDraws;
class StapBasis;

// One scalar functional: chains x iterations.
using ChainMatrix = Eigen::MatrixXd;

enum class RhatFlag { none, constant, identical_chains };

struct RhatResult {
  double value = 1.0;
  RhatFlag flag = RhatFlag::none;
};

const char* to_string(RhatFlag flag);

/// Rank-normalized split R-hat (bulk). Pooled draws are replaced by normal
/// scores of their average ranks, each chain is cut in two halves (the
/// middle draw is dropped when M is odd), and the usual between/within
/// variance ratio is formed. Constant input returns 1 with flag `constant`.
RhatResult split_rhat(const ChainMatrix& draws);

/// Normal scores Phi^{-1}((r - 3/8) / (S + 1/4)) of average ranks.
Eigen::VectorXd rank_normalize(const Eigen::VectorXd& values);

/// Traces of a named functional. Names: sigma2, alpha, n_occupied,
/// gamma[j] (1-based), f[i](d) for subject i's (1-based, dataset order)
/// current cluster curve at distance d. Curve functionals need the basis.
ChainMatrix functional_traces(const PosteriorDraws& draws, const std::string& functional,
                              const StapBasis* basis = nullptr);

/// Default diagnostic set: sigma2, alpha, n_occupied, and f[i](d) for four
/// anchor subjects spread through the dataset at distance `anchor_distance`.
std::vector<std::string> default_functionals(const PosteriorDraws& draws, double anchor_distance);

}  // namespace stapdp
