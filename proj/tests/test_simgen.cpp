#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "stapdp/errors.hpp"
#include "stapdp/simgen.hpp"

using namespace stapdp;

namespace {

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

}  // namespace

TEST_SUITE("simgen") {

TEST_CASE("distance laws") {
  CHECK(gen_distances(DistanceLaw::Uniform(), 0, 1.0, 1).empty());
  const auto u = gen_distances(DistanceLaw::Uniform(), 1000000, 2.0, 2);
  CHECK(std::abs(mean_of(u) / 1.0 - 1.0) < 0.003);
  CHECK(*std::max_element(u.begin(), u.end()) <= 2.0);
  const auto s = gen_distances(DistanceLaw::Skew(), 1000000, 1.0, 3);
  CHECK(std::abs(mean_of(s) - 5.0 / 7.0) < 0.002);
  const auto c = gen_distances(DistanceLaw::CA(), 200000, 1.0, 4);
  CHECK(std::abs(mean_of(c) - 2.5 / 4.5) < 0.003);
  CHECK(parse_law("Beta(3,4)").a == 3.0);
  CHECK(parse_law("Skew").b == 2.0);
  CHECK_THROWS_AS(parse_law("Gaussian"), Error);
}

TEST_CASE("true curves") {
  const TrueCurves f{0.25, 1.0};
  CHECK(f.high(0.0) == 1.0);
  for (double d : {0.0, 0.1, 0.4, 0.5, 0.9}) CHECK(f.low(d) == 0.25 * f.high(d));
  CHECK(f(1, 0.3) == f.high(0.3));
  CHECK(f(2, 0.3) == f.low(0.3));
  CHECK(std::abs(f.high(0.5) - std::exp(-1.0)) < 1e-15);
}

TEST_CASE("outcome model plug-ins") {
  ScenarioConfig sc;
  sc.sigma = 1e-300;  // effectively noise-free
  Random rng(1);
  // Z is a coin flip, so read it back from the covariates.
  const std::vector<std::vector<double>> d{{}, {0.0}, {0.1, 0.3}};
  const Dataset ds = gen_outcomes(sc, d, {1, 1, 2}, rng);
  for (const auto& row : ds.rows()) {
    const double z = row.x[1];
    if (row.subject_id == "1") CHECK(row.y == doctest::Approx(26.0 + 0.5 * z));
    if (row.subject_id == "2") CHECK(row.y == doctest::Approx(26.0 + 0.5 * z + 1.0));
    if (row.subject_id == "3") CHECK(row.y == doctest::Approx(26.0 + 0.5 * z));
  }
}

TEST_CASE("feature counts average the requested mean") {
  Random rng(5);
  double total = 0.0;
  int lo = 1000;
  int hi = 0;
  for (int i = 0; i < 100000; ++i) {
    const int c = draw_feature_count(15.0, rng);
    total += c;
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  CHECK(lo == 5);
  CHECK(hi == 25);
  CHECK(std::abs(total / 100000.0 - 15.0) < 0.05);
}

TEST_CASE("generator determinism and proportions") {
  ScenarioConfig sc;
  sc.subjects = 10000;
  sc.mean_features = 3;
  const auto a = simulate(sc, 9);
  const auto b = simulate(sc, 9);
  CHECK(a.truth == b.truth);
  REQUIRE(a.dataset.num_rows() == b.dataset.num_rows());
  for (std::size_t r = 0; r < a.dataset.num_rows(); ++r) CHECK(a.dataset.rows()[r].y == b.dataset.rows()[r].y);
  const double ones = static_cast<double>(std::count(a.truth.begin(), a.truth.end(), 1)) / sc.subjects;
  // 99.9% binomial interval half-width at p = 0.5, n = 1e4.
  CHECK(std::abs(ones - 0.5) < 3.29 * 0.005);
}

TEST_CASE("longitudinal generator") {
  LongitudinalConfig lc;
  lc.base.subjects = 50;
  Random rng(2);
  const auto sim = simulate_longitudinal(lc, rng);
  CHECK(sim.dataset.num_subjects() == 50);
  CHECK(sim.dataset.num_rows() == 200);
  CHECK(sim.dataset.q() == 2);
  for (const auto& row : sim.dataset.rows()) CHECK((row.weight >= 10 && row.weight <= 40));
}

TEST_CASE("scenario validation") {
  ScenarioConfig sc;
  sc.probabilities = {0.7, 0.7};
  CHECK_THROWS_AS(sc.validate(), Error);
  sc.probabilities = {0.5, 0.5};
  sc.nu = 1.5;
  CHECK_THROWS_AS(sc.validate(), Error);
}

TEST_CASE("type 7 quantiles") {
  CHECK(quantile({1, 2, 3, 4}, 0.5) == 2.5);
  CHECK(quantile({1, 2, 3, 4}, 0.25) == 1.75);
  CHECK(quantile({5}, 0.975) == 5.0);
}

TEST_CASE("study bookkeeping") {
  StudyConfig cfg;
  cfg.scenario.subjects = 30;
  cfg.fit.burn_in = 10;
  cfg.fit.retained = 10;
  cfg.fit.prior.clusters = 5;
  cfg.nus = {0.0, 0.5};
  cfg.replicates = 2;
  cfg.threads = 2;
  const StudyResult r = run_effect_size_study(cfg);
  CHECK(r.runs.size() == 4);
  long long top = 0;
  for (const auto& run : r.runs) {
    CHECK(run.losses.size() == 10);
    top = std::max(top, *std::max_element(run.losses.begin(), run.losses.end()));
  }
  CHECK(r.normalizer == top);
  const Table reps = r.replicate_table();
  CHECK(reps.header == std::vector<std::string>{"nu", "replicate", "median_loss", "q025", "q975"});
  CHECK(reps.rows.size() == 4);
  CHECK(r.summary_table().rows.size() == 2);
  // Same config, different thread count: same numbers.
  cfg.threads = 1;
  const StudyResult again = run_effect_size_study(cfg);
  for (std::size_t i = 0; i < r.runs.size(); ++i) CHECK(again.runs[i].losses == r.runs[i].losses);

  StudyConfig dist = cfg;
  dist.laws = {"Uniform", "Skew"};
  dist.feature_ladder = {5, 10};
  dist.replicates = 1;
  const StudyResult d = run_distance_study(dist);
  CHECK(d.cells.size() == 8);
  CHECK(d.summary_table().header.front() == "low_law");
}

}
