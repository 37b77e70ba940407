#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "stapdp/basis.hpp"
#include "stapdp/errors.hpp"

using namespace stapdp;

TEST_SUITE("basis") {

TEST_CASE("cubic basis is a partition of unity on [0, R]") {
  const SplineBasis b = build_basis(3, 7, 5.0);
  CHECK(b.size() == 7);
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) worst = std::max(worst, std::abs(b.evaluate(u(gen)).sum() - 1.0));
  CHECK(worst < 1e-10);
  for (double d : {0.0, 5.0}) {
    const Eigen::VectorXd row = b.evaluate(d);
    CHECK(row.allFinite());
    CHECK(std::abs(row.sum() - 1.0) < 1e-12);
    CHECK((row.array() >= 0.0).all());
  }
}

TEST_CASE("degree zero gives bin indicators") {
  const SplineBasis b = build_basis(0, 4, 1.0);
  const double probes[] = {0.1, 0.3, 0.6, 0.9};
  for (int bin = 0; bin < 4; ++bin) {
    const Eigen::VectorXd row = b.evaluate(probes[bin]);
    for (int l = 0; l < 4; ++l) CHECK(row(l) == (l == bin ? 1.0 : 0.0));
  }
  CHECK(b.evaluate(1.0)(3) == 1.0);
}

TEST_CASE("too few functions for the degree is a dimension error") {
  try {
    build_basis(3, 3, 1.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::dimension);
  }
}

TEST_CASE("distances beyond the radius are rejected") {
  const SplineBasis b = build_basis(3, 7, 1.0);
  CHECK_THROWS_AS(b.evaluate(1.0 + 1e-9), Error);
  CHECK_THROWS_AS(b.evaluate(-1e-12), Error);
}

TEST_CASE("second differences on four coefficients") {
  const PenaltyDecomposition pd = difference_penalty(4, 2);
  Eigen::MatrixXd expected(2, 4);
  expected << 1, -2, 1, 0, 0, 1, -2, 1;
  CHECK((pd.difference - expected).norm() == 0.0);
  CHECK(pd.rank == 2);
}

TEST_CASE("null space of the difference penalty") {
  const PenaltyDecomposition second = difference_penalty(7, 2);
  CHECK(second.rank == 5);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(7);
  const Eigen::VectorXd ramp = Eigen::VectorXd::LinSpaced(7, 0.0, 6.0);
  CHECK((second.penalty * ones).norm() < 1e-12);
  CHECK((second.penalty * ramp).norm() < 1e-12);
  const Eigen::MatrixXd null = second.eigenvectors.rightCols(2);
  // Both sequences lie in the span of the last two eigenvectors.
  CHECK((ones - null * (null.transpose() * ones)).norm() < 1e-10);
  CHECK((ramp - null * (null.transpose() * ramp)).norm() < 1e-10);

  const PenaltyDecomposition first = difference_penalty(7, 1);
  CHECK(first.rank == 6);
  const Eigen::VectorXd v = first.eigenvectors.col(6);
  CHECK(std::abs(std::abs(v.sum()) - std::sqrt(7.0)) < 1e-10);
}

TEST_CASE("penalty rank is L - order") {
  for (int L = 2; L <= 20; ++L) {
    for (int order = 1; order <= 3 && order < L; ++order) {
      CHECK(difference_penalty(L, order).rank == L - order);
    }
  }
  CHECK_THROWS_AS(difference_penalty(4, 4), Error);
  CHECK_THROWS_AS(difference_penalty(4, 0), Error);
}

TEST_CASE("transform round trip and penalty identity") {
  const PenaltyDecomposition pd = difference_penalty(7, 2);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(7, 7);
  CHECK((pd.to_original * pd.to_transformed - I).norm() < 1e-10);
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n;
  Eigen::VectorXd theta(7);
  for (int l = 0; l < 7; ++l) theta(l) = n(gen);
  const Eigen::VectorXd beta = pd.to_transformed * theta;
  CHECK((pd.to_original * beta - theta).norm() / theta.norm() < 1e-10);
  const double pen = theta.dot(pd.penalty * theta);
  CHECK(std::abs(pen - beta.head(pd.rank).squaredNorm()) < 1e-10 * std::max(1.0, pen));
}

TEST_CASE("exposure rows") {
  const StapBasis b(3, 7, 1.0, 2);
  const std::vector<double> none;
  CHECK(exposure_row(b.spline(), none).norm() == 0.0);
  const std::vector<double> one{0.3};
  const std::vector<double> twice{0.3, 0.3};
  const Eigen::VectorXd r1 = exposure_row(b.spline(), one);
  CHECK(std::abs(r1.sum() - 1.0) < 1e-12);
  CHECK((exposure_row(b.spline(), twice) - 2.0 * r1).norm() == 0.0);
  const std::vector<double> left{0.1, 0.7};
  const std::vector<double> right{0.2, 0.95, 1.0};
  std::vector<double> both = left;
  both.insert(both.end(), right.begin(), right.end());
  CHECK((b.exposure_row(both) - b.exposure_row(left) - b.exposure_row(right)).norm() < 1e-14);
}

TEST_CASE("curves on a grid") {
  const StapBasis b(3, 7, 1.0, 2);
  const std::vector<double> grid = uniform_grid(1.0, 100);
  CHECK(grid.front() == 0.0);
  CHECK(grid.back() == 1.0);
  for (const auto& pt : curve_on_grid(b, Eigen::VectorXd::Zero(7), grid)) CHECK(pt.value == 0.0);
  const Eigen::VectorXd flat = b.to_transformed(Eigen::VectorXd::Constant(7, 2.5));
  for (const auto& pt : curve_on_grid(b, flat, grid)) CHECK(pt.value == doctest::Approx(2.5).epsilon(1e-10));
  const Eigen::MatrixXd design = b.grid_design(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(design.row(static_cast<Eigen::Index>(i)).dot(flat) == doctest::Approx(2.5).epsilon(1e-10));
  }
}

TEST_CASE("least squares recovers the steep decay curve") {
  const StapBasis b(3, 7, 1.0, 2);
  const int n = 400;
  Eigen::MatrixXd A(n, 7);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    const double d = static_cast<double>(i) / (n - 1);
    A.row(i) = b.spline().evaluate(d).transpose();
    y(i) = std::exp(-std::pow(d / 0.5, 5.0));
  }
  const Eigen::VectorXd theta = A.colPivHouseholderQr().solve(y);
  double worst = 0.0;
  for (double d : uniform_grid(1.0, 100)) worst = std::max(worst, std::abs(b.spline().curve(theta, d) - std::exp(-std::pow(d / 0.5, 5.0))));
  CHECK(worst < 0.05);
}

}
