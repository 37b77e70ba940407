#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stapdp/data.hpp"
#include "stapdp/partition.hpp"
#include "stapdp/random.hpp"
#include "stapdp/sampler.hpp"
#include "stapdp/table.hpp"

namespace stapdp {

/// Generative law of feature distances, as a fraction of the radius:
/// Uniform(0, 1) or Beta(a, b), then scaled to [0, R].
struct DistanceLaw {
  std::string name = "Uniform";
  bool uniform = true;
  double a = 1.0;
  double b = 1.0;

  static DistanceLaw Uniform();
  static DistanceLaw CA();    // Beta(2.5, 2): mildly far-skewed
  static DistanceLaw Skew();  // Beta(5, 2): strongly far-skewed
  double mean() const { return uniform ? 0.5 : a / (a + b); }
};

DistanceLaw parse_law(const std::string& name);

std::vector<double> gen_distances(const DistanceLaw& law, int count, double radius, Random& rng);
std::vector<double> gen_distances(const DistanceLaw& law, int count, double radius, std::uint64_t seed);

/// f1(d) = exp(-(d / (R/2))^5) and f2 = nu * f1.
struct TrueCurves {
  double nu = 0.0;
  double radius = 1.0;
  double high(double d) const;
  double low(double d) const { return nu * high(d); }
  // cluster is 1 (high) or 2 (low)
  double operator()(int cluster, double d) const { return cluster == 1 ? high(d) : low(d); }
};

/// Discrete Uniform{round(m/3), ..., round(5m/3)}: mean m.
int draw_feature_count(double mean_features, Random& rng);

struct ScenarioConfig {
  int subjects = 200;
  double mean_features = 15.0;
  double nu = 0.0;
  DistanceLaw high_law = DistanceLaw::Skew();  // cluster 1
  DistanceLaw low_law = DistanceLaw::Skew();   // cluster 2
  std::vector<double> probabilities = {0.5, 0.5};
  double sigma = 1.0;
  double radius = 1.0;
  double intercept = 26.0;
  double z_effect = 0.5;
  int replicates = 25;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SimulatedData {
  Dataset dataset;
  Partition truth;  // 1-based cluster per subject, in dataset order
};

/// Outcome model: y = intercept + z_effect * Z + sum_d f_cluster(d) + sigma * eps
/// with Z a fair coin per subject. Covariates are (intercept, Z).
Dataset gen_outcomes(const ScenarioConfig& scenario, const std::vector<std::vector<double>>& distances,
                     const Partition& labels, Random& rng);

/// Labels, distances (law by cluster) and outcomes for one replicate.
SimulatedData simulate(const ScenarioConfig& scenario, Random& rng);
SimulatedData simulate(const ScenarioConfig& scenario, std::uint64_t seed);

/// Repeated measures with grouped outcomes: each subject-occasion row is the
/// mean of `weight` individual outcomes, so its residual variance is
/// sigma^2 / weight. Random intercept and slope on time = occasion / (T - 1).
struct LongitudinalConfig {
  ScenarioConfig base;
  int occasions = 4;
  Eigen::Matrix2d re_covariance = (Eigen::Matrix2d() << 1.0, 0.2, 0.2, 0.5).finished();
  double time_effect = 0.3;
  int min_weight = 10;
  int max_weight = 40;
};

SimulatedData simulate_longitudinal(const LongitudinalConfig& config, Random& rng);

/// Settings of the model fitted inside a simulation study.
struct FitSpec {
  PriorConfig prior;
  int burn_in = 2000;
  int retained = 2000;
  int degree = 3;
  int num_basis = 7;
  int penalty_order = 2;
  int min_cluster_size = 0;
};

/// Per-iteration Binder loss against the truth for one fitted replicate.
std::vector<long long> fit_losses(const SimulatedData& sim, const FitSpec& fit, std::uint64_t seed);

struct StudyCell {
  double nu = 0.0;
  std::string low_law;
  std::string high_law;
  double mean_features = 15.0;
};

struct StudyRun {
  std::size_t cell = 0;
  int replicate = 0;
  std::vector<long long> losses;
};

struct StudyResult {
  std::string kind;  // "effect_size" or "distance"
  std::vector<StudyCell> cells;
  std::vector<StudyRun> runs;
  long long normalizer = 0;  // maximum raw loss over the whole batch

  std::vector<double> relative(const StudyRun& run) const;
  // Relative losses of every iteration of every replicate of a cell.
  std::vector<double> pooled(std::size_t cell) const;
  // One row per replicate: cell keys, replicate, median_loss, q025, q975.
  Table replicate_table() const;
  // One row per cell with replicate-pooled median and 95% band.
  Table summary_table() const;
};

struct StudyConfig {
  ScenarioConfig scenario;
  FitSpec fit;
  std::vector<double> nus = {0.0, 0.25, 0.5, 0.75};
  std::vector<std::string> laws = {"Uniform", "CA", "Skew"};
  std::vector<double> feature_ladder = {5, 10, 15, 20, 25};
  double distance_nu = 0.25;
  int replicates = 10;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: hardware concurrency
};

/// Skew distances in both clusters, every nu in the grid.
StudyResult run_effect_size_study(const StudyConfig& config);

/// nu fixed; every (low law, high law) pair crossed with the feature ladder.
StudyResult run_distance_study(const StudyConfig& config);

/// Type 7 sample quantile.
double quantile(std::vector<double> values, double prob);

}  // namespace stapdp
