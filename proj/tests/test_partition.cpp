#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "partition_oracle.hpp"
#include "stapdp/errors.hpp"
#include "stapdp/partition.hpp"

using namespace stapdp;

TEST_SUITE("partition") {

TEST_CASE("binder loss on enumerated fixtures") {
  CHECK(binder_loss({1, 1, 2}, {1, 1, 2}) == 0);
  CHECK(binder_loss({1, 1, 2}, {1, 2, 2}) == 2);
  CHECK(binder_loss({1, 1, 1, 1}, {1, 2, 3, 4}) == 6);
  CHECK_THROWS_AS(binder_loss({1, 2}, {1, 2, 3}), Error);
}

TEST_CASE("binder loss matches the pairwise count, is symmetric and label-free") {
  std::mt19937_64 gen(1);
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + static_cast<int>(gen() % 30);
    std::uniform_int_distribution<int> lab(0, static_cast<int>(gen() % 6));
    Partition a(static_cast<std::size_t>(n));
    Partition b(static_cast<std::size_t>(n));
    for (auto& x : a) x = lab(gen);
    for (auto& x : b) x = lab(gen) * 7 - 3;
    CHECK(binder_loss(a, b) == oracle::binder(a, b));
    CHECK(binder_loss(a, b) == binder_loss(b, a));
    Partition c = a;
    for (auto& x : c) x = 100 - 2 * x;
    CHECK(binder_loss(c, b) == binder_loss(a, b));
    CHECK(binder_loss(a, canonical_labels(a)) == 0);
    CHECK((binder_loss(a, b) == 0) == (canonical_labels(a) == canonical_labels(b)));
  }
}

TEST_CASE("canonical labels follow first appearance") {
  CHECK(canonical_labels({7, 7, 3, 9, 3}) == Partition{1, 1, 2, 3, 2});
}

TEST_CASE("co-clustering frequencies") {
  const std::vector<Partition> one{{1, 1, 2}};
  const Eigen::MatrixXd P1 = coclustering(one);
  Eigen::MatrixXd expected(3, 3);
  expected << 1, 1, 0, 1, 1, 0, 0, 0, 1;
  CHECK(P1 == expected);
  const std::vector<Partition> two{{1, 1, 2}, {1, 2, 2}};
  const Eigen::MatrixXd P2 = coclustering(two);
  CHECK(P2(0, 1) == 0.5);
  CHECK(P2(1, 2) == 0.5);
  CHECK(P2(0, 2) == 0.0);
  const std::vector<Partition> flat{{3, 3, 3}, {1, 1, 1}};
  CHECK(coclustering(flat) == Eigen::MatrixXd::Ones(3, 3));
  CHECK_THROWS_AS(coclustering(std::vector<Partition>{}), Error);
}

TEST_CASE("co-clustering is exactly symmetric with a unit diagonal") {
  std::mt19937_64 gen(2);
  std::vector<Partition> draws(37, Partition(25));
  for (auto& d : draws) {
    for (auto& x : d) x = static_cast<int>(gen() % 4);
  }
  const Eigen::MatrixXd P = coclustering(draws);
  CHECK(P == P.transpose());
  CHECK(P.diagonal() == Eigen::VectorXd::Ones(25));
  CHECK(P.minCoeff() >= 0.0);
  CHECK(P.maxCoeff() <= 1.0);
}

TEST_CASE("mode of nine AAB and one ABB") {
  std::vector<Partition> draws(9, Partition{1, 1, 2});
  draws.push_back({1, 2, 2});
  CHECK(canonical_labels(assign_mode(draws)) == Partition{1, 1, 2});
  const std::vector<Partition> single{{4, 2, 4}};
  CHECK(assign_mode(single) == single.front());
  const std::vector<Partition> same(5, Partition{2, 1, 1, 2});
  CHECK(assign_mode(same) == same.front());
}

TEST_CASE("mode minimizes expected loss among draws, earliest on ties") {
  std::mt19937_64 gen(3);
  for (int t = 0; t < 50; ++t) {
    std::vector<Partition> draws(10, Partition(8));
    for (auto& d : draws) {
      for (auto& x : d) x = static_cast<int>(gen() % 3);
    }
    if (t % 5 == 0) draws[7] = draws[2];
    std::vector<long long> loss;
    for (const auto& d : draws) loss.push_back(oracle::scaled_expected_loss(d, draws));
    const auto best = std::min_element(loss.begin(), loss.end()) - loss.begin();
    CHECK(assign_mode_index(draws) == static_cast<std::size_t>(best));
    const double e = expected_binder(draws[static_cast<std::size_t>(best)], coclustering(draws));
    CHECK(e * 10.0 == doctest::Approx(static_cast<double>(loss[static_cast<std::size_t>(best)])));
  }
}

TEST_CASE("heatmap order on exact blocks") {
  const Partition mode{1, 2, 1, 2, 1, 2};
  const std::vector<Partition> draws{mode};
  const Eigen::MatrixXd P = coclustering(draws);
  const auto order = sort_for_heatmap(P, mode);
  CHECK(order == std::vector<int>{0, 2, 4, 1, 3, 5});
  Eigen::MatrixXd sorted(6, 6);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) sorted(i, j) = P(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  CHECK(sorted.topRightCorner(3, 3).isZero());
  CHECK(sorted.topLeftCorner(3, 3) == Eigen::MatrixXd::Ones(3, 3));

  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(5, 5);
  CHECK(sort_for_heatmap(ones, Partition(5, 1)) == std::vector<int>{0, 1, 2, 3, 4});
}

TEST_CASE("heatmap order keeps noisy blocks contiguous") {
  std::mt19937_64 gen(4);
  const int n = 40;
  Partition truth(n);
  for (int i = 0; i < n; ++i) truth[static_cast<std::size_t>(i)] = (i * 7) % 3;
  std::vector<Partition> draws;
  for (int m = 0; m < 200; ++m) {
    Partition d = truth;
    for (auto& x : d) {
      if (gen() % 20 == 0) x = static_cast<int>(gen() % 3);
    }
    draws.push_back(d);
  }
  const Eigen::MatrixXd P = coclustering(draws);
  const Partition mode = assign_mode(draws);
  const auto order = sort_for_heatmap(P, mode);
  std::vector<int> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> iota(n);
  std::iota(iota.begin(), iota.end(), 0);
  CHECK(sorted == iota);
  // Purity: adjacent subjects in the order share the true block except at the
  // block boundaries.
  int changes = 0;
  for (std::size_t i = 1; i < order.size(); ++i) {
    changes += truth[static_cast<std::size_t>(order[i])] != truth[static_cast<std::size_t>(order[i - 1])];
  }
  CHECK(changes <= 2 + binder_loss(truth, mode));
}

TEST_CASE("co-clustering agreement") {
  const Partition ref{1, 1, 1, 2, 2, 2};
  const std::vector<Partition> exact{ref};
  CHECK(coclustering_agreement(coclustering(exact), ref) == 1.0);
  // Subject 2 always sits with group 2.
  const std::vector<Partition> moved{{1, 1, 2, 2, 2, 2}};
  CHECK(coclustering_agreement(coclustering(moved), ref) == doctest::Approx(5.0 / 6.0));
}

}
