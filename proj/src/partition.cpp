#include "stapdp/partition.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <unordered_map>

#include "stapdp/draws.hpp"
#include "stapdp/errors.hpp"

namespace stapdp {

namespace {

long long pairs(long long n) { return n * (n - 1) / 2; }

// Members of each cluster, clusters in order of first appearance.
std::vector<std::vector<int>> groups_of(const Partition& labels) {
  std::unordered_map<int, std::size_t> index;
  std::vector<std::vector<int>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, fresh] = index.emplace(labels[i], groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(static_cast<int>(i));
  }
  return groups;
}

void check_draws(const std::vector<Partition>& draws) {
  if (draws.empty()) fail(ErrorKind::input, "no retained draws");
  for (const auto& d : draws) {
    if (d.size() != draws.front().size()) fail(ErrorKind::dimension, "draws disagree on the number of subjects");
  }
}

}  // namespace

long long binder_loss(const Partition& truth, const Partition& estimate) {
  if (truth.size() != estimate.size()) {
    fail(ErrorKind::dimension, "binder_loss: partitions have " + std::to_string(truth.size()) + " and " +
                                   std::to_string(estimate.size()) + " subjects");
  }
  std::unordered_map<int, long long> a, b;
  std::map<std::pair<int, int>, long long> joint;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++a[truth[i]];
    ++b[estimate[i]];
    ++joint[{truth[i], estimate[i]}];
  }
  long long loss = 0;
  for (const auto& [k, n] : a) loss += pairs(n);
  for (const auto& [k, n] : b) loss += pairs(n);
  for (const auto& [k, n] : joint) loss -= 2 * pairs(n);
  return loss;
}

Partition canonical_labels(const Partition& labels) {
  std::unordered_map<int, int> map;
  Partition out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, fresh] = map.emplace(labels[i], static_cast<int>(map.size()) + 1);
    out[i] = it->second;
  }
  return out;
}

Eigen::MatrixXi cocluster_counts(const std::vector<Partition>& draws) {
  check_draws(draws);
  const Eigen::Index n = static_cast<Eigen::Index>(draws.front().size());
  Eigen::MatrixXi C = Eigen::MatrixXi::Zero(n, n);
  for (const auto& d : draws) {
    for (const auto& g : groups_of(d)) {
      for (std::size_t a = 0; a < g.size(); ++a) {
        for (std::size_t b = a + 1; b < g.size(); ++b) ++C(g[a], g[b]);
      }
    }
  }
  const int m = static_cast<int>(draws.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    C(i, i) = m;
    for (Eigen::Index j = i + 1; j < n; ++j) C(j, i) = C(i, j);
  }
  return C;
}

Eigen::MatrixXd coclustering(const std::vector<Partition>& draws) {
  const Eigen::MatrixXi C = cocluster_counts(draws);
  // Division of identical integers gives identical doubles, so symmetry and
  // the unit diagonal are exact.
  return C.cast<double>() / static_cast<double>(draws.size());
}

Eigen::MatrixXd coclustering(const PosteriorDraws& draws) { return coclustering(draws.partitions()); }

double expected_binder(const Partition& partition, const Eigen::MatrixXd& P) {
  const Eigen::Index n = static_cast<Eigen::Index>(partition.size());
  if (P.rows() != n || P.cols() != n) fail(ErrorKind::dimension, "co-clustering matrix does not match the partition");
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double same = partition[static_cast<std::size_t>(i)] == partition[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
      loss += std::abs(same - P(i, j));
    }
  }
  return loss;
}

std::size_t assign_mode_index(const std::vector<Partition>& draws) {
  const Eigen::MatrixXi C = cocluster_counts(draws);
  const long long m = static_cast<long long>(draws.size());
  const Eigen::Index n = C.rows();
  // M * loss = sum_{i<i'} C + sum_{together} (M - 2C).
  long long base = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) base += C(i, j);
  }
  std::size_t best = 0;
  long long best_loss = std::numeric_limits<long long>::max();
  for (std::size_t t = 0; t < draws.size(); ++t) {
    long long loss = base;
    for (const auto& g : groups_of(draws[t])) {
      for (std::size_t a = 0; a < g.size(); ++a) {
        for (std::size_t b = a + 1; b < g.size(); ++b) loss += m - 2 * C(g[a], g[b]);
      }
    }
    if (loss < best_loss) {
      best_loss = loss;
      best = t;
    }
  }
  return best;
}

Partition assign_mode(const std::vector<Partition>& draws) { return draws[assign_mode_index(draws)]; }

Partition assign_mode(const PosteriorDraws& draws) { return assign_mode(draws.partitions()); }

std::vector<int> average_linkage_order(const Eigen::MatrixXd& dissimilarity, const std::vector<int>& members) {
  const std::size_t n = members.size();
  if (n <= 2) return members;
  // Active clusters hold their leaf order; D holds average distances
  // between active clusters, updated by Lance-Williams.
  std::vector<std::vector<int>> leaves(n);
  std::vector<int> size(n, 1);
  std::vector<bool> alive(n, true);
  Eigen::MatrixXd D(n, n);
  for (std::size_t a = 0; a < n; ++a) {
    leaves[a] = {members[a]};
    for (std::size_t b = 0; b < n; ++b) D(a, b) = dissimilarity(members[a], members[b]);
  }
  for (std::size_t step = 0; step + 1 < n; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t ba = 0, bb = 0;
    for (std::size_t a = 0; a < n; ++a) {
      if (!alive[a]) continue;
      for (std::size_t b = a + 1; b < n; ++b) {
        if (alive[b] && D(a, b) < best) {
          best = D(a, b);
          ba = a;
          bb = b;
        }
      }
    }
    // Slot a keeps the merged cluster; its leaves come first because a's
    // smallest position precedes b's.
    leaves[ba].insert(leaves[ba].end(), leaves[bb].begin(), leaves[bb].end());
    leaves[bb].clear();
    alive[bb] = false;
    const double wa = size[ba], wb = size[bb];
    for (std::size_t c = 0; c < n; ++c) {
      if (!alive[c] || c == ba) continue;
      const double d = (wa * D(ba, c) + wb * D(bb, c)) / (wa + wb);
      D(ba, c) = d;
      D(c, ba) = d;
    }
    size[ba] += size[bb];
  }
  for (std::size_t a = 0; a < n; ++a) {
    if (alive[a]) return leaves[a];
  }
  return members;
}

std::vector<int> sort_for_heatmap(const Eigen::MatrixXd& P, const Partition& mode) {
  const Eigen::Index n = static_cast<Eigen::Index>(mode.size());
  if (P.rows() != n || P.cols() != n) fail(ErrorKind::dimension, "co-clustering matrix does not match the mode partition");
  const Eigen::MatrixXd dissimilarity = (1.0 - P.array()).matrix();
  std::vector<int> order;
  order.reserve(mode.size());
  for (const auto& g : groups_of(mode)) {
    const auto block = average_linkage_order(dissimilarity, g);
    order.insert(order.end(), block.begin(), block.end());
  }
  return order;
}

double coclustering_agreement(const Eigen::MatrixXd& P, const Partition& reference) {
  const Eigen::Index n = static_cast<Eigen::Index>(reference.size());
  if (P.rows() != n || P.cols() != n) fail(ErrorKind::dimension, "co-clustering matrix does not match the reference");
  if (n == 0) return 1.0;
  std::map<int, std::vector<int>> groups;
  for (Eigen::Index i = 0; i < n; ++i) groups[reference[static_cast<std::size_t>(i)]].push_back(static_cast<int>(i));
  Eigen::Index agree = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    int best_label = 0;
    double best = -1.0;
    for (const auto& [label, members] : groups) {
      double sum = 0.0;
      int count = 0;
      for (int j : members) {
        if (j == i) continue;
        sum += P(i, j);
        ++count;
      }
      if (count == 0) continue;
      const double mean = sum / count;
      if (mean > best) {
        best = mean;
        best_label = label;
      }
    }
    if (best_label == reference[static_cast<std::size_t>(i)]) ++agree;
  }
  return static_cast<double>(agree) / static_cast<double>(n);
}

}  // namespace stapdp
