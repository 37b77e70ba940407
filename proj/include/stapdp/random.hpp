#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

#include <Eigen/Dense>

namespace stapdp {

/// Seeded random source. Streams derived from (seed, keys...) are
/// independent and reproducible, which is how chains and simulation
/// replicates get their own generators.
class Random {
 public:
  explicit Random(std::uint64_t seed);
  Random(std::uint64_t seed, std::initializer_list<std::uint64_t> stream_keys);

  double uniform();  // open interval (0, 1)
  double normal();
  double gamma(double shape, double rate);
  double beta(double a, double b);
  bool bernoulli(double p);
  int uniform_int(int lo, int hi);  // inclusive
  Eigen::VectorXd normal_vector(Eigen::Index n);

  // Draws an index with probability proportional to exp(log_weights[k]).
  // Entries equal to -inf have zero mass. Returns -1 if every entry is -inf.
  int categorical_log(std::span<const double> log_weights);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

/// Sigma ~ Inverse-Wishart(df, scale), density proportional to
/// |Sigma|^{-(df + q + 1)/2} exp(-tr(scale Sigma^{-1}) / 2). Requires df > q - 1
/// and scale symmetric positive definite.
Eigen::MatrixXd draw_inverse_wishart(Random& rng, double df, const Eigen::MatrixXd& scale);

}  // namespace stapdp
