#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/distributions/gamma.hpp>

#include "doctest.h"
#include "stapdp/random.hpp"
#include "stats_oracle.hpp"

using namespace stapdp;

TEST_SUITE("random") {

TEST_CASE("streams are reproducible and distinct") {
  Random a(7, {1, 2});
  Random b(7, {1, 2});
  Random c(7, {1, 3});
  Random d(8, {1, 2});
  int same_c = 0;
  int same_d = 0;
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    CHECK(x == b.uniform());
    same_c += x == c.uniform();
    same_d += x == d.uniform();
  }
  CHECK(same_c == 0);
  CHECK(same_d == 0);
}

TEST_CASE("uniform stays inside the open interval") {
  Random r(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("gamma draws follow the gamma law") {
  Random r(3);
  for (double shape : {0.3, 1.0, 4.5}) {
    std::vector<double> xs(5000);
    for (auto& x : xs) x = r.gamma(shape, 2.0);
    const boost::math::gamma_distribution<double> law(shape, 0.5);
    const auto ks = oracle::ks_test(xs, [&](double x) { return boost::math::cdf(law, x); });
    CHECK(ks.p_value > 0.001);
  }
}

TEST_CASE("categorical draws respect -inf entries and proportions") {
  Random r(5);
  const double ninf = -std::numeric_limits<double>::infinity();
  std::vector<double> lw{ninf, std::log(0.2), ninf, std::log(0.8)};
  std::vector<int> counts(4, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) counts[static_cast<std::size_t>(r.categorical_log(lw))]++;
  CHECK(counts[0] == 0);
  CHECK(counts[2] == 0);
  CHECK(std::abs(counts[1] / double(n) - 0.2) < 0.006);
  std::vector<double> dead{ninf, ninf};
  CHECK(r.categorical_log(dead) == -1);
  // Huge offsets cancel in log space.
  std::vector<double> shifted{1e6, 1e6 + std::log(3.0)};
  int second = 0;
  for (int i = 0; i < 40000; ++i) second += r.categorical_log(shifted) == 1;
  CHECK(std::abs(second / 40000.0 - 0.75) < 0.01);
}

TEST_CASE("inverse Wishart mean") {
  Random r(9);
  Eigen::Matrix2d scale;
  scale << 2.0, 0.5, 0.5, 1.0;
  const double df = 10.0;
  Eigen::Matrix2d mean = Eigen::Matrix2d::Zero();
  const int n = 40000;
  for (int i = 0; i < n; ++i) mean += draw_inverse_wishart(r, df, scale);
  mean /= n;
  const Eigen::Matrix2d expected = scale / (df - 2 - 1);
  CHECK((mean - expected).norm() / expected.norm() < 0.03);
}

}
