#include "stapdp/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <regex>

#include <boost/math/distributions/normal.hpp>

#include "stapdp/basis.hpp"
#include "stapdp/draws.hpp"
#include "stapdp/errors.hpp"
#include "stapdp/table.hpp"

namespace stapdp {

const char* to_string(RhatFlag flag) {
  switch (flag) {
    case RhatFlag::none: return "none";
    case RhatFlag::constant: return "constant";
    case RhatFlag::identical_chains: return "identical_chains";
  }
  return "none";
}

Eigen::VectorXd rank_normalize(const Eigen::VectorXd& values) {
  const Eigen::Index s = values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(s));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return values(a) < values(b); });
  Eigen::VectorXd out(s);
  const boost::math::normal_distribution<double> standard;
  for (Eigen::Index a = 0; a < s;) {
    Eigen::Index b = a;
    while (b + 1 < s && values(order[static_cast<std::size_t>(b + 1)]) == values(order[static_cast<std::size_t>(a)])) ++b;
    const double rank = 0.5 * static_cast<double>(a + b) + 1.0;
    const double z = boost::math::quantile(standard, (rank - 0.375) / (static_cast<double>(s) + 0.25));
    for (Eigen::Index t = a; t <= b; ++t) out(order[static_cast<std::size_t>(t)]) = z;
    a = b + 1;
  }
  return out;
}

RhatResult split_rhat(const ChainMatrix& draws) {
  const Eigen::Index chains = draws.rows();
  const Eigen::Index m = draws.cols();
  if (chains < 1 || m < 4) fail(ErrorKind::input, "split_rhat needs at least one chain of at least 4 draws");
  if (!draws.allFinite()) fail(ErrorKind::numerical, "split_rhat: non-finite draws");
  RhatResult result;
  if (draws.maxCoeff() == draws.minCoeff()) {
    result.flag = RhatFlag::constant;
    return result;
  }
  if (chains > 1) {
    bool identical = true;
    for (Eigen::Index c = 1; c < chains && identical; ++c) identical = draws.row(c) == draws.row(0);
    if (identical) result.flag = RhatFlag::identical_chains;
  }
  const Eigen::Index half = m / 2;
  const Eigen::Index parts = 2 * chains;
  // Split halves: first [0, half), second [m - half, m).
  Eigen::VectorXd pooled(parts * half);
  for (Eigen::Index c = 0; c < chains; ++c) {
    pooled.segment(2 * c * half, half) = draws.row(c).head(half).transpose();
    pooled.segment((2 * c + 1) * half, half) = draws.row(c).tail(half).transpose();
  }
  const Eigen::VectorXd z = rank_normalize(pooled);
  Eigen::VectorXd means(parts), vars(parts);
  for (Eigen::Index j = 0; j < parts; ++j) {
    const auto seg = z.segment(j * half, half);
    means(j) = seg.mean();
    vars(j) = (seg.array() - means(j)).square().sum() / static_cast<double>(half - 1);
  }
  const double n = static_cast<double>(half);
  const double within = vars.mean();
  const double between = n * (means.array() - means.mean()).square().sum() / static_cast<double>(parts - 1);
  if (within <= 0.0) {
    result.flag = RhatFlag::constant;
    return result;
  }
  const double var_plus = (n - 1.0) / n * within + between / n;
  result.value = std::sqrt(var_plus / within);
  return result;
}

ChainMatrix functional_traces(const PosteriorDraws& draws, const std::string& functional, const StapBasis* basis) {
  const Eigen::Index chains = static_cast<Eigen::Index>(draws.chains.size());
  const Eigen::Index m = draws.draws_per_chain();
  ChainMatrix out(chains, m);
  static const std::regex gamma_re(R"(gamma\[(\d+)\])");
  static const std::regex curve_re(R"(f\[(\d+)\]\(([^)]+)\))");
  std::smatch match;
  if (functional == "sigma2") {
    for (Eigen::Index c = 0; c < chains; ++c) out.row(c) = draws.chains[static_cast<std::size_t>(c)].sigma2.transpose();
  } else if (functional == "alpha") {
    for (Eigen::Index c = 0; c < chains; ++c) out.row(c) = draws.chains[static_cast<std::size_t>(c)].alpha.transpose();
  } else if (functional == "n_occupied") {
    for (Eigen::Index c = 0; c < chains; ++c) {
      out.row(c) = draws.chains[static_cast<std::size_t>(c)].occupied.cast<double>().transpose();
    }
  } else if (std::regex_match(functional, match, gamma_re)) {
    const long long j = parse_integer(match[1].str(), functional);
    if (j < 1 || j > draws.layout.p) fail(ErrorKind::input, "functional " + functional + ": no such coefficient");
    for (Eigen::Index c = 0; c < chains; ++c) {
      out.row(c) = draws.chains[static_cast<std::size_t>(c)].gamma.col(static_cast<Eigen::Index>(j - 1)).transpose();
    }
  } else if (std::regex_match(functional, match, curve_re)) {
    if (basis == nullptr) fail(ErrorKind::input, "functional " + functional + " needs the spline basis");
    const long long i = parse_integer(match[1].str(), functional);
    const double d = parse_number(match[2].str(), functional);
    if (i < 1 || i > draws.layout.subjects) fail(ErrorKind::input, "functional " + functional + ": no such subject");
    const Eigen::VectorXd row = basis->grid_design(std::span<const double>(&d, 1)).row(0).transpose();
    const Eigen::Index L = draws.layout.basis;
    for (Eigen::Index c = 0; c < chains; ++c) {
      const auto& ch = draws.chains[static_cast<std::size_t>(c)];
      for (Eigen::Index t = 0; t < m; ++t) {
        const int k = ch.labels(t, static_cast<Eigen::Index>(i - 1));
        out(c, t) = ch.beta.row(t).segment(k * L, L).dot(row.transpose());
      }
    }
  } else {
    fail(ErrorKind::input, "unknown functional '" + functional + "'");
  }
  return out;
}

std::vector<std::string> default_functionals(const PosteriorDraws& draws, double anchor_distance) {
  std::vector<std::string> names = {"sigma2", "alpha", "n_occupied"};
  const Eigen::Index n = draws.layout.subjects;
  if (n > 0) {
    std::vector<Eigen::Index> anchors;
    for (int a = 0; a < 4; ++a) {
      const Eigen::Index i = std::min<Eigen::Index>(n - 1, (2 * a + 1) * n / 8);
      if (std::find(anchors.begin(), anchors.end(), i) == anchors.end()) anchors.push_back(i);
    }
    for (Eigen::Index i : anchors) names.push_back("f[" + std::to_string(i + 1) + "](" + format_number(anchor_distance) + ")");
  }
  return names;
}

}  // namespace stapdp
