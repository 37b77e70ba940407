#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "stapdp/data.hpp"
#include "stapdp/draws.hpp"
#include "stapdp/partition.hpp"
#include "stapdp/simgen.hpp"
#include "stapdp/table.hpp"
#include "test_paths.hpp"

using namespace stapdp;

TEST_SUITE("properties") {

TEST_CASE("shuffled input files give identical draws") {
  LongitudinalConfig lc;
  lc.base.subjects = 25;
  lc.occasions = 2;
  Random rng(12);
  const auto sim = simulate_longitudinal(lc, rng);
  std::stringstream s;
  std::stringstream d;
  const Schema schema = write_dataset(sim.dataset, s, d);

  // Shuffle data lines of both files, keeping headers first.
  auto shuffled = [](const std::string& text, std::uint64_t seed) {
    std::istringstream in(text);
    std::string header;
    std::getline(in, header);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    std::mt19937_64 gen(seed);
    std::shuffle(lines.begin(), lines.end(), gen);
    std::string out = header + "\n";
    for (const auto& l : lines) out += l + "\n";
    return out;
  };
  std::istringstream s1(s.str()), d1(d.str());
  std::istringstream s2(shuffled(s.str(), 1)), d2(shuffled(d.str(), 2));
  const Dataset a = load_dataset(s1, d1, schema).dataset;
  const Dataset b = load_dataset(s2, d2, schema).dataset;
  const StapBasis basis(3, 7, 1.0, 2);
  const ModelData da(a, basis);
  const ModelData db(b, basis);
  PriorConfig prior;
  prior.clusters = 6;
  ChainSettings cs;
  cs.burn_in = 10;
  cs.retained = 10;
  cs.marginal_labels = true;
  cs.split_merge = 2;
  const ChainDraws x = run_chain(da, prior, cs, 0);
  const ChainDraws y = run_chain(db, prior, cs, 0);
  CHECK(x.labels == y.labels);
  CHECK(x.beta == y.beta);
  CHECK(x.random_effects == y.random_effects);
  CHECK(x.sigma2 == y.sigma2);
}

TEST_CASE("draw files round trip exactly") {
  ScenarioConfig sc;
  sc.subjects = 15;
  const auto sim = simulate(sc, 4);
  const StapBasis basis(3, 7, 1.0, 2);
  const ModelData data(sim.dataset, basis);
  PriorConfig prior;
  prior.clusters = 4;
  ChainSettings cs;
  cs.burn_in = 5;
  cs.retained = 6;
  cs.chains = 2;
  cs.thin = 2;
  const PosteriorDraws d = run_chains(data, prior, cs);
  const ScratchDir tmp("draws");
  write_draws(tmp.path() / "draws", d, "test");
  const PosteriorDraws back = read_draws(tmp.path() / "draws");
  REQUIRE(back.chains.size() == 2);
  for (int c = 0; c < 2; ++c) {
    CHECK(back.chains[c].labels == d.chains[c].labels);
    CHECK(back.chains[c].beta == d.chains[c].beta);
    CHECK(back.chains[c].tau == d.chains[c].tau);
    CHECK(back.chains[c].weights == d.chains[c].weights);
    CHECK(back.chains[c].sigma2 == d.chains[c].sigma2);
    CHECK(back.chains[c].gamma == d.chains[c].gamma);
  }
  CHECK(back.layout.basis == 7);
}

TEST_CASE("relabelling draws changes neither co-clustering nor the mode") {
  std::mt19937_64 gen(8);
  for (int t = 0; t < 20; ++t) {
    std::vector<Partition> draws(12, Partition(9));
    for (auto& d : draws) {
      for (auto& x : d) x = static_cast<int>(gen() % 4);
    }
    std::vector<Partition> relabelled = draws;
    for (auto& d : relabelled) {
      const int shift = static_cast<int>(gen() % 5);
      for (auto& x : d) x = (x + shift) % 4 + 10;
    }
    CHECK(coclustering(draws) == coclustering(relabelled));
    CHECK(assign_mode_index(draws) == assign_mode_index(relabelled));
  }
}

TEST_CASE("number formatting round trips random doubles") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 10000; ++i) {
    const double v = u(gen) * std::pow(10.0, static_cast<int>(gen() % 40) - 20);
    REQUIRE(parse_number(format_number(v), "t") == v);
  }
}

}
