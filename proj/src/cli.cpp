#include "stapdp/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <type_traits>

#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "stapdp/data.hpp"
#include "stapdp/diagnostics.hpp"
#include "stapdp/errors.hpp"
#include "stapdp/kernels.hpp"
#include "stapdp/simgen.hpp"
#include "stapdp/table.hpp"

namespace stapdp {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Every configurable field under its config key; flags use the same name
// with dashes.
template <typename Config, typename F>
void visit_fields(Config& c, F&& f) {
  f("subjects", c.subjects);
  f("distances", c.distances);
  f("schema", c.schema);
  f("output", c.output);
  f("run", c.run);
  f("covariates", c.covariates);
  f("covariate", c.covariate);
  f("force", c.force);
  f("clusters", c.clusters);
  f("chains", c.chains);
  f("burn_in", c.burn_in);
  f("retained", c.retained);
  f("thin", c.thin);
  f("seed", c.seed);
  f("min_cluster_size", c.min_cluster_size);
  f("label_swaps", c.label_swaps);
  f("marginal_labels", c.marginal_labels);
  f("split_merge", c.split_merge);
  f("prior_only", c.prior_only);
  f("degree", c.degree);
  f("num_basis", c.num_basis);
  f("penalty_order", c.penalty_order);
  f("radius", c.radius);
  f("a_tau", c.a_tau);
  f("b_tau", c.b_tau);
  f("a_sigma", c.a_sigma);
  f("b_sigma", c.b_sigma);
  f("a_alpha", c.a_alpha);
  f("b_alpha", c.b_alpha);
  f("gamma_variance", c.gamma_variance);
  f("re_prior", c.re_prior);
  f("re_prior_df", c.re_prior_df);
  f("grid_points", c.grid_points);
  f("strict_rhat", c.strict_rhat);
  f("rhat_threshold", c.rhat_threshold);
  f("functionals", c.functionals);
  f("anchor_distance", c.anchor_distance);
  f("study", c.study);
  f("n_subjects", c.n_subjects);
  f("occasions", c.occasions);
  f("mean_features", c.mean_features);
  f("nu", c.nu);
  f("high_law", c.high_law);
  f("low_law", c.low_law);
  f("replicates", c.replicates);
  f("laws", c.laws);
  f("feature_ladder", c.feature_ladder);
  f("distance_nu", c.distance_nu);
  f("threads", c.threads);
}

// Keys that name where results go or how fast they are produced, not what
// they contain.
bool hashed(const std::string& key) {
  return key != "output" && key != "force" && key != "threads" && key != "strict_rhat" && key != "rhat_threshold";
}

std::string dashed(std::string name) {
  std::replace(name.begin(), name.end(), '_', '-');
  return name;
}

json config_object(const RunConfig& config, bool hash_only) {
  json j = json::object();
  j["command"] = config.command;
  visit_fields(config, [&](const char* key, const auto& value) {
    if (!hash_only || hashed(key)) j[key] = value;
  });
  return j;
}

std::string fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::input, "cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void require(bool ok, const std::string& message) {
  if (!ok) fail(ErrorKind::input, message);
}

void check_positive_settings(const RunConfig& c) {
  require(c.clusters >= 1, "clusters must be at least 1");
  require(c.chains >= 1, "chains must be at least 1");
  require(c.burn_in >= 0 && c.retained >= 0, "burn-in and retained must be nonnegative");
  require(c.thin >= 1, "thin must be at least 1");
  require(c.min_cluster_size >= 0, "min-cluster-size must be nonnegative");
  require(c.grid_points >= 2, "grid-points must be at least 2");
  require(c.re_prior == "jeffreys" || c.re_prior == "inverse_wishart",
          "re-prior must be jeffreys or inverse_wishart");
}

PriorConfig prior_of(const RunConfig& c) {
  PriorConfig p;
  p.a_tau = c.a_tau;
  p.b_tau = c.b_tau;
  p.a_sigma = c.a_sigma;
  p.b_sigma = c.b_sigma;
  p.a_alpha = c.a_alpha;
  p.b_alpha = c.b_alpha;
  p.clusters = c.clusters;
  p.gamma_variance = c.gamma_variance;
  p.re_prior = c.re_prior == "inverse_wishart" ? RandomEffectPrior::inverse_wishart : RandomEffectPrior::jeffreys;
  p.re_prior_df = c.re_prior_df;
  p.validate();
  return p;
}

ChainSettings settings_of(const RunConfig& c) {
  ChainSettings s;
  s.burn_in = c.burn_in;
  s.retained = c.retained;
  s.thin = c.thin;
  s.chains = c.chains;
  s.seed = c.seed;
  s.min_cluster_size = c.min_cluster_size;
  s.label_swaps = c.label_swaps;
  s.marginal_labels = c.marginal_labels;
  s.split_merge = c.split_merge;
  s.prior_only = c.prior_only;
  return s;
}

Schema schema_of(const RunConfig& c) {
  Schema s = c.schema.empty() ? Schema{} : load_schema(c.schema);
  if (c.degree > 0) s.degree = c.degree;
  if (c.num_basis > 0) s.num_basis = c.num_basis;
  if (c.penalty_order > 0) s.penalty_order = c.penalty_order;
  if (c.radius > 0.0) s.radius = c.radius;
  return s;
}

// Output directory written under a temporary name and renamed into place
// only when every file is complete.
class StagedOutput {
 public:
  StagedOutput(const std::string& target, bool force) : target_(target), force_(force) {
    require(!target.empty(), "no output directory given (--output)");
    if (fs::exists(target_) && !force_) {
      fail(ErrorKind::input, "output directory " + target_.string() + " already exists (use --force to replace it)");
    }
    const fs::path parent = target_.has_parent_path() ? target_.parent_path() : fs::path(".");
    fs::create_directories(parent);
    staging_ = parent / ("." + target_.filename().string() + ".tmp-" + std::to_string(::getpid()));
    fs::remove_all(staging_);
    fs::create_directories(staging_);
  }
  StagedOutput(const StagedOutput&) = delete;
  StagedOutput& operator=(const StagedOutput&) = delete;
  ~StagedOutput() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(staging_, ec);
    }
  }
  const fs::path& dir() const { return staging_; }
  void commit() {
    if (fs::exists(target_)) fs::remove_all(target_);
    fs::rename(staging_, target_);
    committed_ = true;
  }

 private:
  fs::path target_;
  bool force_;
  fs::path staging_;
  bool committed_ = false;
};

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const fs::path& dir, const RunConfig& config, json extra) {
  json m = {{"command", config.command},
            {"config", config_object(config, false)},
            {"config_hash", config_hash(config)},
            {"created", timestamp()},
            {"kernels", kernels::active().name}};
  for (auto& [k, v] : extra.items()) m[k] = v;
  std::ofstream out(dir / "manifest.json");
  if (!out) fail(ErrorKind::input, "cannot write manifest");
  out << m.dump(2) << '\n';
}

Table with_hash(Table t, const RunConfig& config) {
  t.comments.insert(t.comments.begin(), "config_hash: " + config_hash(config));
  return t;
}

Table matrix_table(const Eigen::MatrixXd& P, const std::vector<std::string>& ids) {
  Table t;
  t.header.push_back("id");
  t.header.insert(t.header.end(), ids.begin(), ids.end());
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    std::vector<std::string> row{ids[static_cast<std::size_t>(i)]};
    for (Eigen::Index j = 0; j < P.cols(); ++j) row.push_back(format_number(P(i, j)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<double> column_values(const Eigen::MatrixXd& m, Eigen::Index col) {
  return std::vector<double>(m.col(col).data(), m.col(col).data() + m.rows());
}

struct RhatRow {
  std::string functional;
  RhatResult result;
};

std::vector<RhatRow> rhat_rows(const PosteriorDraws& draws, const StapBasis& basis, const RunConfig& config) {
  std::vector<RhatRow> rows;
  if (draws.draws_per_chain() < 4) return rows;
  auto names = config.functionals.empty() ? default_functionals(draws, config.anchor_distance) : config.functionals;
  for (const auto& name : names) rows.push_back({name, split_rhat(functional_traces(draws, name, &basis))});
  return rows;
}

Table rhat_table(const std::vector<RhatRow>& rows) {
  Table t;
  t.header = {"functional", "rhat", "flag"};
  for (const auto& r : rows) t.rows.push_back({r.functional, format_number(r.result.value), to_string(r.result.flag)});
  return t;
}

bool rhat_exceeded(const std::vector<RhatRow>& rows, double threshold) {
  return std::any_of(rows.begin(), rows.end(), [&](const RhatRow& r) { return !(r.result.value < threshold); });
}

// Mode partition, heatmap order and cluster curves for a set of draws.
struct PartitionReport {
  Partition mode;  // relabelled by size
  Eigen::MatrixXd P;
  std::vector<int> order;
  std::vector<ClusterSummary> clusters;
};

PartitionReport partition_report(const PosteriorDraws& draws, const StapBasis& basis, const std::vector<double>& grid) {
  PartitionReport r;
  const auto parts = draws.partitions();
  r.P = coclustering(parts);
  r.mode = relabel_by_size(assign_mode(parts));
  r.order = sort_for_heatmap(r.P, r.mode);
  r.clusters = summarize_clusters(draws, r.mode, basis, grid);
  return r;
}

Table mode_table(const Partition& mode, const std::vector<std::string>& ids) {
  Table t;
  t.header = {"id", "cluster"};
  for (std::size_t i = 0; i < mode.size(); ++i) t.rows.push_back({ids[i], std::to_string(mode[i])});
  return t;
}

Table heatmap_table(const std::vector<int>& order, const Partition& mode, const std::vector<std::string>& ids) {
  Table t;
  t.header = {"id", "cluster"};
  for (int i : order) t.rows.push_back({ids[static_cast<std::size_t>(i)], std::to_string(mode[static_cast<std::size_t>(i)])});
  return t;
}

Table curves_table(const std::vector<ClusterSummary>& clusters, const std::vector<double>& grid) {
  Table t;
  t.header = {"cluster", "share", "distance", "q025", "q50", "q975"};
  for (const auto& c : clusters) {
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto v = column_values(c.curves, static_cast<Eigen::Index>(g));
      t.rows.push_back({std::to_string(c.label), format_number(c.share), format_number(grid[g]),
                        format_number(quantile(v, 0.025)), format_number(quantile(v, 0.5)),
                        format_number(quantile(v, 0.975))});
    }
  }
  return t;
}

// Basis and subject ids of a finished fit, recovered from its manifest and
// mode partition file.
struct RunInputs {
  RunConfig config;
  StapBasis basis;
  std::vector<std::string> ids;
};

RunInputs load_run(const std::string& run_dir) {
  require(!run_dir.empty(), "no fit output directory given (--run)");
  const fs::path dir(run_dir);
  json manifest;
  try {
    manifest = json::parse(read_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    fail(ErrorKind::input, "corrupt manifest in " + run_dir + ": " + e.what());
  }
  if (!manifest.contains("basis")) fail(ErrorKind::input, run_dir + " is not a fit output directory");
  RunConfig fit;
  int degree = 0, num_basis = 0, order = 0;
  double radius = 0.0;
  try {
    apply_config_json(fit, manifest.at("config").dump());
    const auto& b = manifest.at("basis");
    degree = b.at("degree").get<int>();
    num_basis = b.at("num_basis").get<int>();
    order = b.at("penalty_order").get<int>();
    radius = b.at("radius").get<double>();
  } catch (const json::exception& e) {
    fail(ErrorKind::input, "corrupt manifest in " + run_dir + ": " + e.what());
  }
  const Table mode = read_table(dir / "mode_partition.csv", ',');
  const int id_col = mode.require_column("id", "mode_partition.csv");
  std::vector<std::string> ids;
  for (const auto& row : mode.rows) ids.push_back(row[static_cast<std::size_t>(id_col)]);
  return {fit, StapBasis(degree, num_basis, radius, order), ids};
}

}  // namespace

void apply_config_json(RunConfig& config, const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorKind::input, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::input, "config must be a JSON object");
  std::map<std::string, bool> known{{"command", true}};
  visit_fields(config, [&](const char* key, auto& value) {
    known[key] = true;
    if (!j.contains(key)) return;
    try {
      value = j.at(key).get<std::decay_t<decltype(value)>>();
    } catch (const json::exception& e) {
      fail(ErrorKind::input, std::string("config key '") + key + "': " + e.what());
    }
  });
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) fail(ErrorKind::input, "unknown config key '" + key + "'");
  }
}

std::string config_to_json(const RunConfig& config) { return config_object(config, false).dump(2); }

std::string config_hash(const RunConfig& config) { return fnv1a(config_object(config, true).dump()); }

ParsedArgs parse_args(int argc, const char* const* argv) {
  ParsedArgs parsed;
  RunConfig& config = parsed.config;
  // The config file sits below flags, so it is read before flags bind.
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) config.config_file = argv[i + 1];
    else if (a.rfind("--config=", 0) == 0) config.config_file = a.substr(9);
  }
  if (!config.config_file.empty()) apply_config_json(config, read_file(config.config_file));

  CLI::App app{"STAP-DP: clustered distance-decay exposure effects"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", config.config_file, "JSON config file (flags override it)");
  visit_fields(config, [&](const char* key, auto& value) {
    using T = std::decay_t<decltype(value)>;
    const std::string flag = "--" + dashed(key);
    if constexpr (std::is_same_v<T, bool>) {
      app.add_flag(flag, value);
    } else {
      app.add_option(flag, value)->capture_default_str();
    }
  });
  for (const char* cmd : {"fit", "simulate", "summarize", "diagnose"}) app.add_subcommand(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    parsed.exit_early = true;
    parsed.message = app.help();
    return parsed;
  } catch (const CLI::ParseError& e) {
    fail(ErrorKind::input, e.what());
  }
  for (const auto* sub : app.get_subcommands()) config.command = sub->get_name();
  return parsed;
}

Partition relabel_by_size(const Partition& labels) {
  const Partition canon = canonical_labels(labels);
  const int k = canon.empty() ? 0 : *std::max_element(canon.begin(), canon.end());
  std::vector<int> size(static_cast<std::size_t>(k) + 1, 0);
  for (int l : canon) ++size[static_cast<std::size_t>(l)];
  std::vector<int> by_size(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) by_size[static_cast<std::size_t>(i)] = i + 1;
  std::stable_sort(by_size.begin(), by_size.end(), [&](int a, int b) { return size[static_cast<std::size_t>(a)] > size[static_cast<std::size_t>(b)]; });
  std::vector<int> rank(static_cast<std::size_t>(k) + 1);
  for (int i = 0; i < k; ++i) rank[static_cast<std::size_t>(by_size[static_cast<std::size_t>(i)])] = i + 1;
  Partition out(canon.size());
  for (std::size_t i = 0; i < canon.size(); ++i) out[i] = rank[static_cast<std::size_t>(canon[i])];
  return out;
}

std::vector<ClusterSummary> summarize_clusters(const PosteriorDraws& draws, const Partition& mode,
                                               const StapBasis& basis, const std::vector<double>& grid) {
  const Eigen::Index n = draws.layout.subjects;
  if (static_cast<Eigen::Index>(mode.size()) != n) fail(ErrorKind::dimension, "mode partition does not match the draws");
  const Eigen::MatrixXd design = basis.grid_design(grid);
  const Eigen::Index L = draws.layout.basis;
  const Eigen::Index K = draws.layout.clusters;
  std::map<int, std::vector<int>> groups;
  for (Eigen::Index i = 0; i < n; ++i) groups[mode[static_cast<std::size_t>(i)]].push_back(static_cast<int>(i));
  std::vector<ClusterSummary> out;
  const Eigen::Index total = draws.total_draws();
  for (const auto& [label, members] : groups) {
    ClusterSummary c;
    c.label = label;
    c.members = members;
    c.share = static_cast<double>(members.size()) / static_cast<double>(n);
    c.curves.resize(total, static_cast<Eigen::Index>(grid.size()));
    c.proportion.reserve(static_cast<std::size_t>(total));
    Eigen::Index row = 0;
    std::vector<int> votes(static_cast<std::size_t>(K));
    std::vector<int> sizes(static_cast<std::size_t>(K));
    for (const auto& ch : draws.chains) {
      for (Eigen::Index m = 0; m < ch.size(); ++m, ++row) {
        std::fill(votes.begin(), votes.end(), 0);
        std::fill(sizes.begin(), sizes.end(), 0);
        for (int i : members) ++votes[static_cast<std::size_t>(ch.labels(m, i))];
        for (Eigen::Index i = 0; i < n; ++i) ++sizes[static_cast<std::size_t>(ch.labels(m, i))];
        const auto k = static_cast<Eigen::Index>(std::max_element(votes.begin(), votes.end()) - votes.begin());
        c.proportion.push_back(static_cast<double>(sizes[static_cast<std::size_t>(k)]) / static_cast<double>(n));
        c.curves.row(row) = (design * ch.beta.row(m).segment(k * L, L).transpose()).transpose();
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

int cmd_fit(const RunConfig& config) {
  check_positive_settings(config);
  require(!config.subjects.empty(), "fit needs --subjects");
  require(!config.distances.empty(), "fit needs --distances");
  const Schema schema = schema_of(config);
  const PriorConfig prior = prior_of(config);
  const ChainSettings settings = settings_of(config);
  const LoadResult loaded = load_dataset(config.subjects, config.distances, schema);
  const Dataset& dataset = loaded.dataset;
  require(dataset.num_subjects() > 0, "the subjects file has no rows");
  StagedOutput out(config.output, config.force);

  const StapBasis basis(schema.degree, schema.num_basis, schema.radius, schema.penalty_order);
  const ModelData data(dataset, basis, config.prior_only);
  const PosteriorDraws draws = run_chains(data, prior, settings);
  const std::string provenance = "config_hash: " + config_hash(config);
  write_draws(out.dir() / "draws", draws, provenance);

  const auto& ids = dataset.subject_ids();
  const auto grid = uniform_grid(basis.radius(), config.grid_points);
  std::vector<RhatRow> rhat;
  json extra = {{"basis",
                 {{"degree", schema.degree}, {"num_basis", schema.num_basis}, {"penalty_order", schema.penalty_order},
                  {"radius", schema.radius}}},
                {"subjects", dataset.num_subjects()},
                {"rows", dataset.num_rows()},
                {"dropped_distances", loaded.dropped_distances},
                {"draws_per_chain", settings.retained}};
  {
    std::ofstream v(out.dir() / "validation.txt");
    print_report(v, validate(dataset, basis.radius() / 2.0));
  }
  if (draws.total_draws() > 0) {
    const PartitionReport report = partition_report(draws, basis, grid);
    write_table(out.dir() / "coclustering.csv", with_hash(matrix_table(report.P, ids), config), ',');
    write_table(out.dir() / "mode_partition.csv", with_hash(mode_table(report.mode, ids), config), ',');
    write_table(out.dir() / "heatmap_order.csv", with_hash(heatmap_table(report.order, report.mode, ids), config), ',');
    write_table(out.dir() / "curves.csv", with_hash(curves_table(report.clusters, grid), config), ',');
    rhat = rhat_rows(draws, basis, config);
    write_table(out.dir() / "rhat.csv", with_hash(rhat_table(rhat), config), ',');
  }
  const bool exceeded = config.strict_rhat && rhat_exceeded(rhat, config.rhat_threshold);
  extra["status"] = exceeded ? "rhat_exceeded" : "ok";
  write_manifest(out.dir(), config, extra);
  out.commit();
  if (exceeded) {
    std::cerr << json({{"error", {{"kind", "convergence"}, {"message", "R-hat at or above " + format_number(config.rhat_threshold)}}}}).dump() << '\n';
    return exit_convergence;
  }
  return exit_ok;
}

int cmd_simulate(const RunConfig& config) {
  ScenarioConfig scenario;
  scenario.subjects = config.n_subjects;
  scenario.mean_features = config.mean_features;
  scenario.nu = config.nu;
  scenario.high_law = parse_law(config.high_law);
  scenario.low_law = parse_law(config.low_law);
  scenario.radius = config.radius > 0.0 ? config.radius : 1.0;
  scenario.replicates = config.replicates;
  scenario.seed = config.seed;
  scenario.validate();
  StagedOutput out(config.output, config.force);
  json extra = {{"study", config.study}};
  if (config.study == "generate") {
    for (int r = 0; r < config.replicates; ++r) {
      Random rng(config.seed, {0, static_cast<std::uint64_t>(r)});
      SimulatedData sim;
      if (config.occasions > 1) {
        LongitudinalConfig lc;
        lc.base = scenario;
        lc.occasions = config.occasions;
        sim = simulate_longitudinal(lc, rng);
      } else {
        sim = simulate(scenario, rng);
      }
      const fs::path dir = out.dir() / ("replicate_" + std::to_string(r + 1));
      fs::create_directories(dir);
      Schema schema = write_dataset(sim.dataset, dir / "subjects.csv", dir / "distances.csv");
      if (config.degree > 0) schema.degree = config.degree;
      if (config.num_basis > 0) schema.num_basis = config.num_basis;
      if (config.penalty_order > 0) schema.penalty_order = config.penalty_order;
      std::ofstream(dir / "schema.json") << schema_to_json(schema) << '\n';
      Table truth;
      truth.header = {"id", "cluster"};
      for (std::size_t i = 0; i < sim.truth.size(); ++i) truth.rows.push_back({sim.dataset.subject_ids()[i], std::to_string(sim.truth[i])});
      write_table(dir / "truth.csv", with_hash(truth, config), ',');
    }
  } else if (config.study == "effect_size" || config.study == "distance") {
    check_positive_settings(config);
    StudyConfig study;
    study.scenario = scenario;
    study.fit.prior = prior_of(config);
    study.fit.burn_in = config.burn_in;
    study.fit.retained = config.retained;
    study.fit.min_cluster_size = config.min_cluster_size;
    if (config.degree > 0) study.fit.degree = config.degree;
    if (config.num_basis > 0) study.fit.num_basis = config.num_basis;
    if (config.penalty_order > 0) study.fit.penalty_order = config.penalty_order;
    study.laws = config.laws;
    study.feature_ladder = config.feature_ladder;
    study.distance_nu = config.distance_nu;
    study.replicates = config.replicates;
    study.seed = config.seed;
    study.threads = config.threads;
    const StudyResult result = config.study == "effect_size" ? run_effect_size_study(study) : run_distance_study(study);
    write_table(out.dir() / "replicates.csv", with_hash(result.replicate_table(), config), ',');
    write_table(out.dir() / "summary.csv", with_hash(result.summary_table(), config), ',');
    extra["normalizer"] = result.normalizer;
  } else {
    fail(ErrorKind::input, "unknown study '" + config.study + "' (generate, effect_size, distance)");
  }
  write_manifest(out.dir(), config, extra);
  out.commit();
  return exit_ok;
}

int cmd_summarize(const RunConfig& config) {
  require(config.grid_points >= 2, "grid-points must be at least 2");
  const RunInputs run = load_run(config.run);
  const PosteriorDraws draws = read_draws(fs::path(config.run) / "draws");
  require(draws.total_draws() > 0, "the run has no retained draws");
  if (static_cast<std::size_t>(draws.layout.subjects) != run.ids.size()) {
    fail(ErrorKind::input, "draws and mode partition disagree on the number of subjects");
  }
  // Covariates are checked before any output is staged.
  Table covariates;
  int cov_id = -1, cov_col = -1;
  if (!config.covariates.empty()) {
    require(!config.covariate.empty(), "--covariates needs --covariate to name the column");
    covariates = read_table(config.covariates, ',');
    cov_id = covariates.require_column("id", "covariates file");
    cov_col = covariates.require_column(config.covariate, "covariates file");
  }
  StagedOutput out(config.output, config.force);
  const auto grid = uniform_grid(run.basis.radius(), config.grid_points);
  const PartitionReport report = partition_report(draws, run.basis, grid);

  Table summary;
  summary.header = {"cluster", "size", "share", "median_proportion", "f0_median", "f0_q025", "f0_q975"};
  for (const auto& c : report.clusters) {
    // f(0) is the first grid point.
    const auto f0 = column_values(c.curves, 0);
    summary.rows.push_back({std::to_string(c.label), std::to_string(c.members.size()), format_number(c.share),
                            format_number(quantile(c.proportion, 0.5)), format_number(quantile(f0, 0.5)),
                            format_number(quantile(f0, 0.025)), format_number(quantile(f0, 0.975))});
  }
  write_table(out.dir() / "cluster_summary.csv", with_hash(summary, config), ',');
  write_table(out.dir() / "heatmap_order.csv", with_hash(heatmap_table(report.order, report.mode, run.ids), config), ',');
  write_table(out.dir() / "curves.csv", with_hash(curves_table(report.clusters, grid), config), ',');

  if (cov_col >= 0) {
    std::map<std::string, std::string> level_of;
    for (const auto& row : covariates.rows) level_of[row[static_cast<std::size_t>(cov_id)]] = row[static_cast<std::size_t>(cov_col)];
    std::map<std::string, std::map<int, int>> counts;
    std::vector<std::string> missing;
    for (std::size_t i = 0; i < run.ids.size(); ++i) {
      auto it = level_of.find(run.ids[i]);
      if (it == level_of.end()) {
        missing.push_back(run.ids[i]);
        continue;
      }
      ++counts[it->second][report.mode[i]];
    }
    if (!missing.empty()) fail(ErrorKind::input, std::to_string(missing.size()) + " subjects have no covariate value (first: " + missing.front() + ")");
    Table cross;
    cross.header = {config.covariate, "cluster", "count", "proportion"};
    for (const auto& [level, by_cluster] : counts) {
      int total = 0;
      for (const auto& [k, n] : by_cluster) total += n;
      for (const auto& c : report.clusters) {
        const auto it = by_cluster.find(c.label);
        const int n = it == by_cluster.end() ? 0 : it->second;
        cross.rows.push_back({level, std::to_string(c.label), std::to_string(n), format_number(static_cast<double>(n) / total)});
      }
    }
    write_table(out.dir() / "crosstab.csv", with_hash(cross, config), ',');
  }
  write_manifest(out.dir(), config, {{"run", config.run}});
  out.commit();
  return exit_ok;
}

int cmd_diagnose(const RunConfig& config) {
  const RunInputs run = load_run(config.run);
  const PosteriorDraws draws = read_draws(fs::path(config.run) / "draws");
  require(draws.draws_per_chain() >= 4, "R-hat needs at least 4 retained draws per chain");
  StagedOutput out(config.output, config.force);
  const auto names = config.functionals.empty() ? default_functionals(draws, config.anchor_distance) : config.functionals;
  std::vector<RhatRow> rows;
  Table traces;
  traces.header = {"chain", "draw"};
  std::vector<ChainMatrix> values;
  for (const auto& name : names) {
    values.push_back(functional_traces(draws, name, &run.basis));
    rows.push_back({name, split_rhat(values.back())});
    traces.header.push_back(name);
  }
  for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(draws.chains.size()); ++c) {
    for (Eigen::Index m = 0; m < draws.draws_per_chain(); ++m) {
      std::vector<std::string> row{std::to_string(c + 1), std::to_string(m + 1)};
      for (const auto& v : values) row.push_back(format_number(v(c, m)));
      traces.rows.push_back(std::move(row));
    }
  }
  write_table(out.dir() / "rhat.csv", with_hash(rhat_table(rows), config), ',');
  write_table(out.dir() / "traces.csv", with_hash(traces, config), ',');
  const bool exceeded = config.strict_rhat && rhat_exceeded(rows, config.rhat_threshold);
  write_manifest(out.dir(), config, {{"run", config.run}, {"status", exceeded ? "rhat_exceeded" : "ok"}});
  out.commit();
  for (const auto& r : rows) std::cout << r.functional << '\t' << format_number(r.result.value) << '\t' << to_string(r.result.flag) << '\n';
  if (exceeded) {
    std::cerr << json({{"error", {{"kind", "convergence"}, {"message", "R-hat at or above " + format_number(config.rhat_threshold)}}}}).dump() << '\n';
    return exit_convergence;
  }
  return exit_ok;
}

int run_command(const RunConfig& config) {
  try {
    if (config.command == "fit") return cmd_fit(config);
    if (config.command == "simulate") return cmd_simulate(config);
    if (config.command == "summarize") return cmd_summarize(config);
    if (config.command == "diagnose") return cmd_diagnose(config);
    fail(ErrorKind::input, "unknown command '" + config.command + "'");
  } catch (const Error& e) {
    std::cerr << json({{"error", {{"kind", to_string(e.kind())}, {"message", e.what()}}}}).dump() << '\n';
    switch (e.kind()) {
      case ErrorKind::numerical: return exit_numerical;
      case ErrorKind::convergence: return exit_convergence;
      default: return exit_input;
    }
  } catch (const fs::filesystem_error& e) {
    std::cerr << json({{"error", {{"kind", "input"}, {"message", e.what()}}}}).dump() << '\n';
    return exit_input;
  }
}

int cli_main(int argc, const char* const* argv) {
  ParsedArgs parsed;
  try {
    parsed = parse_args(argc, argv);
  } catch (const Error& e) {
    std::cerr << json({{"error", {{"kind", to_string(e.kind())}, {"message", e.what()}}}}).dump() << '\n';
    return exit_input;
  }
  if (parsed.exit_early) {
    std::cout << parsed.message;
    return parsed.exit_code;
  }
  return run_command(parsed.config);
}

}  // namespace stapdp
