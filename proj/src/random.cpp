#include "stapdp/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "stapdp/errors.hpp"

namespace stapdp {

namespace {

std::mt19937_64 seeded_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * keys.size());
  auto push = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  for (std::uint64_t k : keys) push(k);
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace

Random::Random(std::uint64_t seed) : engine_(seeded_engine(seed, {})) {}

Random::Random(std::uint64_t seed, std::initializer_list<std::uint64_t> stream_keys)
    : engine_(seeded_engine(seed, stream_keys)) {}

double Random::uniform() {
  // 53 random bits, shifted off zero.
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double Random::normal() { return normal_(engine_); }

double Random::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    fail(ErrorKind::numerical, "invalid gamma parameters shape=" + std::to_string(shape) + " rate=" + std::to_string(rate));
  }
  std::gamma_distribution<double> dist(shape, 1.0 / rate);
  return dist(engine_);
}

double Random::beta(double a, double b) {
  const double x = gamma(a, 1.0);
  const double y = gamma(b, 1.0);
  if (x + y == 0.0) return a >= b ? 1.0 : 0.0;
  return x / (x + y);
}

bool Random::bernoulli(double p) { return uniform() < p; }

int Random::uniform_int(int lo, int hi) {
  std::uniform_int_distribution<int> dist(lo, hi);
  return dist(engine_);
}

Eigen::VectorXd Random::normal_vector(Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal_(engine_);
  return v;
}

int Random::categorical_log(std::span<const double> log_weights) {
  double top = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) top = std::max(top, lw);
  if (!std::isfinite(top)) return -1;
  double total = 0.0;
  for (double lw : log_weights) total += std::exp(lw - top);
  double u = uniform() * total;
  int last_positive = -1;
  for (std::size_t k = 0; k < log_weights.size(); ++k) {
    const double mass = std::exp(log_weights[k] - top);
    if (mass <= 0.0) continue;
    last_positive = static_cast<int>(k);
    if (u < mass) return last_positive;
    u -= mass;
  }
  return last_positive;
}

Eigen::MatrixXd draw_inverse_wishart(Random& rng, double df, const Eigen::MatrixXd& scale) {
  const Eigen::Index q = scale.rows();
  if (!(df > static_cast<double>(q) - 1.0)) fail(ErrorKind::numerical, "inverse-Wishart degrees of freedom too small");
  // Sigma^{-1} ~ Wishart(df, scale^{-1}); Bartlett factor of scale^{-1} = C C^T.
  Eigen::LLT<Eigen::MatrixXd> scale_chol(scale);
  if (scale_chol.info() != Eigen::Success) fail(ErrorKind::numerical, "inverse-Wishart scale is not positive definite");
  const Eigen::MatrixXd scale_inv = scale_chol.solve(Eigen::MatrixXd::Identity(q, q));
  Eigen::LLT<Eigen::MatrixXd> inv_chol(scale_inv);
  if (inv_chol.info() != Eigen::Success) fail(ErrorKind::numerical, "inverse-Wishart scale inverse is not positive definite");
  const Eigen::MatrixXd c = inv_chol.matrixL();

  Eigen::MatrixXd bartlett = Eigen::MatrixXd::Zero(q, q);
  for (Eigen::Index i = 0; i < q; ++i) {
    bartlett(i, i) = std::sqrt(2.0 * rng.gamma((df - static_cast<double>(i)) / 2.0, 1.0));
    for (Eigen::Index j = 0; j < i; ++j) bartlett(i, j) = rng.normal();
  }
  const Eigen::MatrixXd factor = c * bartlett;
  const Eigen::MatrixXd precision = factor * factor.transpose();
  Eigen::MatrixXd sigma = precision.llt().solve(Eigen::MatrixXd::Identity(q, q));
  return 0.5 * (sigma + sigma.transpose());
}

}  // namespace stapdp
