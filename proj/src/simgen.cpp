#include "stapdp/simgen.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "stapdp/basis.hpp"
#include "stapdp/draws.hpp"
#include "stapdp/errors.hpp"

namespace stapdp {

DistanceLaw DistanceLaw::Uniform() { return {"Uniform", true, 1.0, 1.0}; }
DistanceLaw DistanceLaw::CA() { return {"CA", false, 2.5, 2.0}; }
DistanceLaw DistanceLaw::Skew() { return {"Skew", false, 5.0, 2.0}; }

DistanceLaw parse_law(const std::string& name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "uniform") return DistanceLaw::Uniform();
  if (lower == "ca") return DistanceLaw::CA();
  if (lower == "skew") return DistanceLaw::Skew();
  // beta(a,b)
  double a = 0.0, b = 0.0;
  if (std::sscanf(lower.c_str(), "beta(%lf,%lf)", &a, &b) == 2 && a > 0.0 && b > 0.0) {
    return {name, false, a, b};
  }
  fail(ErrorKind::input, "unknown distance law '" + name + "' (Uniform, CA, Skew or Beta(a,b))");
}

std::vector<double> gen_distances(const DistanceLaw& law, int count, double radius, Random& rng) {
  if (count < 0) fail(ErrorKind::input, "negative feature count");
  std::vector<double> out(static_cast<std::size_t>(count));
  for (double& d : out) d = radius * (law.uniform ? rng.uniform() : rng.beta(law.a, law.b));
  return out;
}

std::vector<double> gen_distances(const DistanceLaw& law, int count, double radius, std::uint64_t seed) {
  Random rng(seed);
  return gen_distances(law, count, radius, rng);
}

double TrueCurves::high(double d) const { return std::exp(-std::pow(d / (0.5 * radius), 5.0)); }

int draw_feature_count(double mean_features, Random& rng) {
  const int lo = static_cast<int>(std::lround(mean_features / 3.0));
  const int hi = static_cast<int>(std::lround(5.0 * mean_features / 3.0));
  return rng.uniform_int(lo, hi);
}

void ScenarioConfig::validate() const {
  if (subjects < 1) fail(ErrorKind::input, "scenario needs at least one subject");
  if (!(mean_features >= 0.0)) fail(ErrorKind::input, "mean feature count must be nonnegative");
  if (!(nu >= 0.0 && nu <= 1.0)) fail(ErrorKind::input, "nu must lie in [0, 1]");
  if (probabilities.size() != 2) fail(ErrorKind::input, "scenario has two clusters");
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0)) fail(ErrorKind::input, "cluster probabilities must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) fail(ErrorKind::input, "cluster probabilities must sum to 1");
  if (!(sigma > 0.0) || !(radius > 0.0)) fail(ErrorKind::input, "sigma and radius must be positive");
  if (replicates < 1) fail(ErrorKind::input, "replicates must be positive");
}

namespace {

Partition draw_labels(const ScenarioConfig& s, Random& rng) {
  Partition labels(static_cast<std::size_t>(s.subjects));
  for (int& l : labels) l = rng.uniform() < s.probabilities[0] ? 1 : 2;
  return labels;
}

const DistanceLaw& law_of(const ScenarioConfig& s, int cluster) { return cluster == 1 ? s.high_law : s.low_law; }

Partition truth_in_dataset_order(const Dataset& data, const Partition& labels) {
  Partition truth(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) truth[data.subject_position(std::to_string(i + 1))] = labels[i];
  return truth;
}

}  // namespace

Dataset gen_outcomes(const ScenarioConfig& scenario, const std::vector<std::vector<double>>& distances,
                     const Partition& labels, Random& rng) {
  if (distances.size() != labels.size()) fail(ErrorKind::dimension, "gen_outcomes: labels and distances differ in length");
  const TrueCurves f{scenario.nu, scenario.radius};
  std::vector<ObservationRow> rows;
  rows.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double z = rng.bernoulli(0.5) ? 1.0 : 0.0;
    double exposure = 0.0;
    for (double d : distances[i]) exposure += f(labels[i], d);
    ObservationRow row;
    row.subject_id = std::to_string(i + 1);
    row.occasion_id = "1";
    row.y = scenario.intercept + scenario.z_effect * z + exposure + scenario.sigma * rng.normal();
    row.x = {1.0, z};
    row.distances = DistanceSet(distances[i], scenario.radius);
    rows.push_back(std::move(row));
  }
  return Dataset(std::move(rows), scenario.radius, {"intercept", "z"}, {});
}

SimulatedData simulate(const ScenarioConfig& scenario, Random& rng) {
  scenario.validate();
  const Partition labels = draw_labels(scenario, rng);
  std::vector<std::vector<double>> distances(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    distances[i] = gen_distances(law_of(scenario, labels[i]), draw_feature_count(scenario.mean_features, rng),
                                 scenario.radius, rng);
  }
  SimulatedData out;
  out.dataset = gen_outcomes(scenario, distances, labels, rng);
  out.truth = truth_in_dataset_order(out.dataset, labels);
  return out;
}

SimulatedData simulate(const ScenarioConfig& scenario, std::uint64_t seed) {
  Random rng(seed);
  return simulate(scenario, rng);
}

SimulatedData simulate_longitudinal(const LongitudinalConfig& config, Random& rng) {
  const ScenarioConfig& s = config.base;
  s.validate();
  if (config.occasions < 2) fail(ErrorKind::input, "longitudinal scenario needs at least two occasions");
  if (config.min_weight < 1 || config.max_weight < config.min_weight) fail(ErrorKind::input, "bad weight range");
  const Eigen::LLT<Eigen::Matrix2d> chol(config.re_covariance);
  if (chol.info() != Eigen::Success) fail(ErrorKind::input, "random-effect covariance is not positive definite");
  const TrueCurves f{s.nu, s.radius};
  const Partition labels = draw_labels(s, rng);
  std::vector<ObservationRow> rows;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double z = rng.bernoulli(0.5) ? 1.0 : 0.0;
    const Eigen::Vector2d b = chol.matrixL() * Eigen::Vector2d(rng.normal(), rng.normal());
    for (int t = 0; t < config.occasions; ++t) {
      const double time = static_cast<double>(t) / (config.occasions - 1);
      std::vector<double> d = gen_distances(law_of(s, labels[i]), draw_feature_count(s.mean_features, rng), s.radius, rng);
      double exposure = 0.0;
      for (double v : d) exposure += f(labels[i], v);
      const int w = rng.uniform_int(config.min_weight, config.max_weight);
      ObservationRow row;
      row.subject_id = std::to_string(i + 1);
      row.occasion_id = std::to_string(t + 1);
      row.weight = w;
      row.y = s.intercept + s.z_effect * z + config.time_effect * time + exposure + b(0) + b(1) * time +
              s.sigma / std::sqrt(static_cast<double>(w)) * rng.normal();
      row.x = {1.0, z, time};
      row.z = {1.0, time};
      row.distances = DistanceSet(std::move(d), s.radius);
      rows.push_back(std::move(row));
    }
  }
  SimulatedData out;
  out.dataset = Dataset(std::move(rows), s.radius, {"intercept", "z", "time"}, {"re_intercept", "re_time"});
  out.truth = truth_in_dataset_order(out.dataset, labels);
  return out;
}

std::vector<long long> fit_losses(const SimulatedData& sim, const FitSpec& fit, std::uint64_t seed) {
  const StapBasis basis(fit.degree, fit.num_basis, sim.dataset.radius(), fit.penalty_order);
  const ModelData data(sim.dataset, basis);
  ChainSettings settings;
  settings.burn_in = fit.burn_in;
  settings.retained = fit.retained;
  settings.seed = seed;
  settings.min_cluster_size = fit.min_cluster_size;
  const ChainDraws draws = run_chain(data, fit.prior, settings, 0);
  std::vector<long long> losses(static_cast<std::size_t>(draws.size()));
  Partition labels(sim.truth.size());
  for (Eigen::Index m = 0; m < draws.size(); ++m) {
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = draws.labels(m, static_cast<Eigen::Index>(i));
    losses[static_cast<std::size_t>(m)] = binder_loss(sim.truth, labels);
  }
  return losses;
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) fail(ErrorKind::input, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<double> StudyResult::relative(const StudyRun& run) const {
  std::vector<double> out(run.losses.size());
  const double scale = normalizer > 0 ? static_cast<double>(normalizer) : 1.0;
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = static_cast<double>(run.losses[t]) / scale;
  return out;
}

std::vector<double> StudyResult::pooled(std::size_t cell) const {
  std::vector<double> out;
  for (const auto& run : runs) {
    if (run.cell != cell) continue;
    const auto r = relative(run);
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

namespace {

std::vector<std::string> cell_keys(const std::string& kind, const StudyCell& c) {
  if (kind == "effect_size") return {format_number(c.nu)};
  return {c.low_law, c.high_law, format_number(c.mean_features)};
}

std::vector<std::string> key_header(const std::string& kind) {
  if (kind == "effect_size") return {"nu"};
  return {"low_law", "high_law", "mean_features"};
}

}  // namespace

Table StudyResult::replicate_table() const {
  Table t;
  t.header = key_header(kind);
  for (const char* h : {"replicate", "median_loss", "q025", "q975"}) t.header.push_back(h);
  for (const auto& run : runs) {
    const auto r = relative(run);
    auto row = cell_keys(kind, cells[run.cell]);
    row.push_back(std::to_string(run.replicate + 1));
    row.push_back(format_number(quantile(r, 0.5)));
    row.push_back(format_number(quantile(r, 0.025)));
    row.push_back(format_number(quantile(r, 0.975)));
    t.rows.push_back(std::move(row));
  }
  t.comments.push_back("normalizer: " + std::to_string(normalizer));
  return t;
}

Table StudyResult::summary_table() const {
  Table t;
  t.header = key_header(kind);
  for (const char* h : {"replicates", "median_loss", "q025", "q975"}) t.header.push_back(h);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto r = pooled(c);
    if (r.empty()) continue;
    int reps = 0;
    for (const auto& run : runs) reps += run.cell == c ? 1 : 0;
    auto row = cell_keys(kind, cells[c]);
    row.push_back(std::to_string(reps));
    row.push_back(format_number(quantile(r, 0.5)));
    row.push_back(format_number(quantile(r, 0.025)));
    row.push_back(format_number(quantile(r, 0.975)));
    t.rows.push_back(std::move(row));
  }
  t.comments.push_back("normalizer: " + std::to_string(normalizer));
  return t;
}

namespace {

// Runs every (cell, replicate) job; job streams come from (seed, study tag,
// cell, replicate), so results do not depend on scheduling.
StudyResult run_study(const std::string& kind, std::uint64_t tag, const std::vector<StudyCell>& cells,
                      const std::vector<ScenarioConfig>& scenarios, const StudyConfig& config) {
  if (config.replicates < 1) fail(ErrorKind::input, "replicates must be positive");
  config.fit.prior.validate();
  for (const auto& s : scenarios) s.validate();
  StudyResult result;
  result.kind = kind;
  result.cells = cells;
  const std::size_t reps = static_cast<std::size_t>(config.replicates);
  result.runs.resize(cells.size() * reps);
  std::vector<std::exception_ptr> errors(result.runs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job = next++; job < result.runs.size(); job = next++) {
      const std::size_t cell = job / reps;
      const int rep = static_cast<int>(job % reps);
      try {
        Random data_rng(config.seed, {tag, cell, static_cast<std::uint64_t>(rep), 0});
        const SimulatedData sim = simulate(scenarios[cell], data_rng);
        const std::uint64_t fit_seed = Random(config.seed, {tag, cell, static_cast<std::uint64_t>(rep), 1}).engine()();
        result.runs[job] = {cell, rep, fit_losses(sim, config.fit, fit_seed)};
      } catch (const Error& e) {
        std::string label = kind + " cell " + std::to_string(cell + 1) + " (" ;
        const auto keys = cell_keys(kind, cells[cell]);
        for (std::size_t k = 0; k < keys.size(); ++k) label += (k ? ", " : "") + keys[k];
        label += "), replicate " + std::to_string(rep + 1) + ": ";
        errors[job] = std::make_exception_ptr(Error(e.kind(), label + e.what()));
      } catch (...) {
        errors[job] = std::current_exception();
      }
    }
  };
  unsigned threads = config.threads > 0 ? static_cast<unsigned>(config.threads) : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(result.runs.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (const auto& run : result.runs) {
    for (long long l : run.losses) result.normalizer = std::max(result.normalizer, l);
  }
  return result;
}

}  // namespace

StudyResult run_effect_size_study(const StudyConfig& config) {
  std::vector<StudyCell> cells;
  std::vector<ScenarioConfig> scenarios;
  for (double nu : config.nus) {
    ScenarioConfig s = config.scenario;
    s.nu = nu;
    s.high_law = DistanceLaw::Skew();
    s.low_law = DistanceLaw::Skew();
    cells.push_back({nu, "Skew", "Skew", s.mean_features});
    scenarios.push_back(s);
  }
  return run_study("effect_size", 1, cells, scenarios, config);
}

StudyResult run_distance_study(const StudyConfig& config) {
  std::vector<StudyCell> cells;
  std::vector<ScenarioConfig> scenarios;
  for (const auto& low : config.laws) {
    for (const auto& high : config.laws) {
      for (double m : config.feature_ladder) {
        ScenarioConfig s = config.scenario;
        s.nu = config.distance_nu;
        s.low_law = parse_law(low);
        s.high_law = parse_law(high);
        s.mean_features = m;
        cells.push_back({s.nu, s.low_law.name, s.high_law.name, m});
        scenarios.push_back(s);
      }
    }
  }
  return run_study("distance", 2, cells, scenarios, config);
}

}  // namespace stapdp
