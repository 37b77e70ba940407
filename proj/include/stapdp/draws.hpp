#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stapdp/sampler.hpp"

namespace stapdp {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixXi = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct DrawLayout {
  Eigen::Index subjects = 0;
  Eigen::Index clusters = 0;
  Eigen::Index basis = 0;
  Eigen::Index range_dim = 0;
  Eigen::Index p = 0;
  Eigen::Index q = 0;
};

/// Retained states of one chain, one row per draw. Beta is stored cluster
/// major (column k * L + l) in transformed coordinates.
struct ChainDraws {
  int chain = 0;
  RowMatrixXi labels;          // M x N, 0-based
  RowMatrixXd beta;            // M x K*L
  RowMatrixXd tau;             // M x 2K
  RowMatrixXd weights;         // M x K
  Eigen::VectorXd sigma2;      // M
  Eigen::VectorXd alpha;       // M
  Eigen::VectorXi occupied;    // M
  RowMatrixXd gamma;           // M x p
  RowMatrixXd random_effects;  // M x N*q
  RowMatrixXd re_covariance;   // M x q*q

  Eigen::Index size() const { return sigma2.size(); }
  void resize(Eigen::Index draws, const DrawLayout& layout);
  void record(Eigen::Index row, const ModelState& state);
  Eigen::VectorXd cluster_beta(Eigen::Index row, Eigen::Index cluster) const;
};

struct PosteriorDraws {
  DrawLayout layout;
  std::uint64_t seed = 0;
  ChainSettings settings;
  std::vector<ChainDraws> chains;

  Eigen::Index draws_per_chain() const { return chains.empty() ? 0 : chains.front().size(); }
  Eigen::Index total_draws() const;
  // Every retained label vector, chain by chain.
  std::vector<std::vector<int>> partitions() const;
};

DrawLayout layout_of(const ModelData& data, const PriorConfig& prior);

/// Runs one chain: burn_in + retained * thin sweeps, keeping every thin-th
/// state after burn-in. The chain's generator is derived from
/// (settings.seed, chain_index), so results are reproducible per chain.
ChainDraws run_chain(const ModelData& data, const PriorConfig& prior, const ChainSettings& settings, int chain_index);

/// Runs settings.chains chains concurrently and collects them in chain order.
PosteriorDraws run_chains(const ModelData& data, const PriorConfig& prior, const ChainSettings& settings);

/// Columnar per-chain files (chain_<c>_<block>.csv) plus layout.json.
void write_draws(const std::filesystem::path& dir, const PosteriorDraws& draws, const std::string& provenance);
PosteriorDraws read_draws(const std::filesystem::path& dir);

}  // namespace stapdp
