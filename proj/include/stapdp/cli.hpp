#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stapdp/basis.hpp"
#include "stapdp/draws.hpp"
#include "stapdp/partition.hpp"

namespace stapdp {

enum ExitCode : int {
  exit_ok = 0,
  exit_input = 2,
  exit_numerical = 3,
  exit_convergence = 4,
};

/// Everything a command needs. Precedence: these defaults, then the JSON
/// config file, then command-line flags.
struct RunConfig {
  std::string command;
  std::string config_file;

  // inputs and outputs
  std::string subjects;
  std::string distances;
  std::string schema;
  std::string output;
  std::string run;          // fit output directory read by summarize / diagnose
  std::string covariates;   // optional table for the cluster cross-tab
  std::string covariate;    // its column
  bool force = false;       // replace an existing output directory

  // sampler
  int clusters = 50;
  int chains = 2;
  int burn_in = 2000;
  int retained = 2000;
  int thin = 1;
  std::uint64_t seed = 1;
  int min_cluster_size = 0;
  int label_swaps = -1;
  bool marginal_labels = false;  // collapsed label step; recommended with random effects
  int split_merge = 0;
  bool prior_only = false;

  // basis; nonpositive values defer to the schema
  int degree = 0;
  int num_basis = 0;
  int penalty_order = 0;
  double radius = 0.0;

  // priors
  double a_tau = 1.0, b_tau = 1.0;
  double a_sigma = 1.0, b_sigma = 1.0;
  double a_alpha = 1.0, b_alpha = 1.0;
  double gamma_variance = 1e6;
  std::string re_prior = "jeffreys";
  double re_prior_df = 0.0;

  // reporting
  int grid_points = 100;
  bool strict_rhat = false;
  double rhat_threshold = 1.05;
  std::vector<std::string> functionals;  // empty: default set
  double anchor_distance = 0.0;

  // simulate
  std::string study = "generate";  // generate, effect_size, distance
  int n_subjects = 200;
  int occasions = 1;               // > 1: repeated measures with random intercept and slope
  double mean_features = 15.0;
  double nu = 0.0;
  std::string high_law = "Skew";
  std::string low_law = "Skew";
  int replicates = 1;
  std::vector<std::string> laws = {"Uniform", "CA", "Skew"};
  std::vector<double> feature_ladder = {5, 10, 15, 20, 25};
  double distance_nu = 0.25;
  int threads = 0;
};

/// Applies keys of a JSON object (flag names with underscores) on top of
/// the config. Unknown keys are input errors.
void apply_config_json(RunConfig& config, const std::string& json_text);
std::string config_to_json(const RunConfig& config);

/// FNV-1a of the canonical JSON of everything except paths to outputs, so
/// identical runs into different directories share a hash.
std::string config_hash(const RunConfig& config);

/// Parses argv (argv[0] is the program). Throws Error(input) on bad usage.
/// Sets `exit_early` for --help and similar, with the text in `message`.
struct ParsedArgs {
  RunConfig config;
  bool exit_early = false;
  int exit_code = 0;
  std::string message;
};
ParsedArgs parse_args(int argc, const char* const* argv);

int cmd_fit(const RunConfig& config);
int cmd_simulate(const RunConfig& config);
int cmd_summarize(const RunConfig& config);
int cmd_diagnose(const RunConfig& config);

/// Runs the configured command; errors become an exit code and a JSON
/// record on stderr.
int run_command(const RunConfig& config);
int cli_main(int argc, const char* const* argv);

/// Per-cluster summaries over the draws, one entry per mode cluster in the
/// order of canonical mode labels (largest first). In every draw a mode
/// cluster is represented by the sampled cluster holding the plurality of
/// its members (ties to the smaller index).
struct ClusterSummary {
  int label = 0;                 // 1-based mode cluster
  std::vector<int> members;      // subject positions
  double share = 0.0;            // members / N
  std::vector<double> proportion;  // per draw: fraction of N in the matched cluster
  Eigen::MatrixXd curves;        // draws x grid
};

/// Relabels a partition 1..K by decreasing cluster size (ties to first
/// appearance).
Partition relabel_by_size(const Partition& labels);

std::vector<ClusterSummary> summarize_clusters(const PosteriorDraws& draws, const Partition& mode,
                                               const StapBasis& basis, const std::vector<double>& grid);

}  // namespace stapdp
