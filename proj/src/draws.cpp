#include "stapdp/draws.hpp"

#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "stapdp/errors.hpp"
#include "stapdp/table.hpp"

namespace stapdp {

namespace {

using json = nlohmann::json;

template <typename Row>
void write_row(std::ostream& out, const Row& values) {
  for (Eigen::Index j = 0; j < values.size(); ++j) {
    if (j > 0) out << ',';
    out << format_number(values(j));
  }
}

void open_out(std::ofstream& out, const std::filesystem::path& path, const std::string& provenance) {
  out.open(path);
  if (!out) fail(ErrorKind::input, "cannot write " + path.string());
  if (!provenance.empty()) out << "# " << provenance << '\n';
}

std::string chain_file(int chain, const char* block) {
  return "chain_" + std::to_string(chain + 1) + "_" + block + ".csv";
}

RowMatrixXd read_matrix(const std::filesystem::path& path, Eigen::Index cols, int skip_cols = 0) {
  const Table t = read_table(path, ',');
  if (static_cast<Eigen::Index>(t.header.size()) != cols + skip_cols) {
    fail(ErrorKind::input, path.string() + ": expected " + std::to_string(cols + skip_cols) + " columns");
  }
  RowMatrixXd m(static_cast<Eigen::Index>(t.rows.size()), cols);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), j) = parse_number(t.rows[i][static_cast<std::size_t>(j + skip_cols)], path.string());
    }
  }
  return m;
}

}  // namespace

Eigen::Index PosteriorDraws::total_draws() const {
  Eigen::Index total = 0;
  for (const auto& c : chains) total += c.size();
  return total;
}

std::vector<std::vector<int>> PosteriorDraws::partitions() const {
  std::vector<std::vector<int>> out;
  out.reserve(static_cast<std::size_t>(total_draws()));
  for (const auto& c : chains) {
    for (Eigen::Index m = 0; m < c.size(); ++m) {
      out.emplace_back(c.labels.row(m).data(), c.labels.row(m).data() + c.labels.cols());
    }
  }
  return out;
}

void ChainDraws::resize(Eigen::Index draws, const DrawLayout& layout) {
  labels.resize(draws, layout.subjects);
  beta.resize(draws, layout.clusters * layout.basis);
  tau.resize(draws, 2 * layout.clusters);
  weights.resize(draws, layout.clusters);
  sigma2.resize(draws);
  alpha.resize(draws);
  occupied.resize(draws);
  gamma.resize(draws, layout.p);
  random_effects.resize(draws, layout.subjects * layout.q);
  re_covariance.resize(draws, layout.q * layout.q);
}

void ChainDraws::record(Eigen::Index row, const ModelState& state) {
  for (std::size_t i = 0; i < state.labels.size(); ++i) labels(row, static_cast<Eigen::Index>(i)) = state.labels[i];
  const Eigen::Index K = state.beta.rows();
  const Eigen::Index L = state.beta.cols();
  for (Eigen::Index k = 0; k < K; ++k) {
    for (Eigen::Index l = 0; l < L; ++l) beta(row, k * L + l) = state.beta(k, l);
    tau(row, 2 * k) = state.tau(k, 0);
    tau(row, 2 * k + 1) = state.tau(k, 1);
    weights(row, k) = state.weights(k);
  }
  sigma2(row) = state.sigma2;
  alpha(row) = state.alpha;
  occupied(row) = state.occupied();
  gamma.row(row) = state.gamma.transpose();
  const Eigen::Index q = state.random_effects.cols();
  for (Eigen::Index s = 0; s < state.random_effects.rows(); ++s) {
    for (Eigen::Index j = 0; j < q; ++j) random_effects(row, s * q + j) = state.random_effects(s, j);
  }
  for (Eigen::Index a = 0; a < q; ++a) {
    for (Eigen::Index b = 0; b < q; ++b) re_covariance(row, a * q + b) = state.re_covariance(a, b);
  }
}

Eigen::VectorXd ChainDraws::cluster_beta(Eigen::Index row, Eigen::Index cluster) const {
  const Eigen::Index L = beta.cols() / weights.cols();
  return beta.row(row).segment(cluster * L, L).transpose();
}

DrawLayout layout_of(const ModelData& data, const PriorConfig& prior) {
  return {data.subjects(), prior.clusters, data.dim(), data.range_dim, data.p(), data.q()};
}

ChainDraws run_chain(const ModelData& data, const PriorConfig& prior, const ChainSettings& settings, int chain_index) {
  if (settings.burn_in < 0 || settings.retained < 0 || settings.thin < 1) {
    fail(ErrorKind::input, "burn-in and retained draws must be nonnegative and thinning at least 1");
  }
  BlockedGibbs sampler(data, prior, settings, Random(settings.seed, {static_cast<std::uint64_t>(chain_index)}));
  ChainDraws draws;
  draws.chain = chain_index;
  draws.resize(settings.retained, layout_of(data, prior));
  sampler.initialize();
  const long long total = settings.burn_in + static_cast<long long>(settings.retained) * settings.thin;
  for (long long it = 1; it <= total; ++it) {
    try {
      sampler.sweep();
    } catch (const Error& e) {
      throw Error(e.kind(), "chain " + std::to_string(chain_index + 1) + ", iteration " + std::to_string(it) + ": " + e.what());
    }
    const long long past = it - settings.burn_in;
    if (past > 0 && past % settings.thin == 0) draws.record(static_cast<Eigen::Index>(past / settings.thin - 1), sampler.state());
  }
  return draws;
}

PosteriorDraws run_chains(const ModelData& data, const PriorConfig& prior, const ChainSettings& settings) {
  if (settings.chains < 1) fail(ErrorKind::input, "need at least one chain");
  PosteriorDraws out;
  out.layout = layout_of(data, prior);
  out.seed = settings.seed;
  out.settings = settings;
  out.chains.resize(static_cast<std::size_t>(settings.chains));
  std::vector<std::exception_ptr> errors(out.chains.size());
  std::vector<std::thread> workers;
  for (int c = 0; c < settings.chains; ++c) {
    workers.emplace_back([&, c] {
      try {
        out.chains[static_cast<std::size_t>(c)] = run_chain(data, prior, settings, c);
      } catch (...) {
        errors[static_cast<std::size_t>(c)] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

void write_draws(const std::filesystem::path& dir, const PosteriorDraws& draws, const std::string& provenance) {
  std::filesystem::create_directories(dir);
  const DrawLayout& lay = draws.layout;
  json layout = {{"subjects", lay.subjects}, {"clusters", lay.clusters}, {"basis", lay.basis},
                 {"range_dim", lay.range_dim}, {"p", lay.p}, {"q", lay.q},
                 {"chains", draws.chains.size()}, {"draws_per_chain", draws.draws_per_chain()},
                 {"seed", draws.seed}, {"burn_in", draws.settings.burn_in}, {"thin", draws.settings.thin},
                 {"min_cluster_size", draws.settings.min_cluster_size}, {"prior_only", draws.settings.prior_only}};
  {
    std::ofstream out(dir / "layout.json");
    if (!out) fail(ErrorKind::input, "cannot write " + (dir / "layout.json").string());
    out << layout.dump(2) << '\n';
  }
  const int burn_in = draws.settings.burn_in;
  const int thin = draws.settings.thin;
  for (const auto& c : draws.chains) {
    std::ofstream out;
    open_out(out, dir / chain_file(c.chain, "scalars"), provenance);
    out << "iteration,sigma2,alpha,n_occupied";
    for (Eigen::Index j = 0; j < lay.p; ++j) out << ",gamma_" << j + 1;
    for (Eigen::Index a = 0; a < lay.q; ++a) {
      for (Eigen::Index b = 0; b < lay.q; ++b) out << ",re_cov_" << a + 1 << '_' << b + 1;
    }
    out << '\n';
    for (Eigen::Index m = 0; m < c.size(); ++m) {
      out << burn_in + (m + 1) * thin << ',' << format_number(c.sigma2(m)) << ',' << format_number(c.alpha(m)) << ','
          << c.occupied(m);
      if (lay.p > 0) {
        out << ',';
        write_row(out, c.gamma.row(m));
      }
      if (lay.q > 0) {
        out << ',';
        write_row(out, c.re_covariance.row(m));
      }
      out << '\n';
    }
    out.close();

    open_out(out, dir / chain_file(c.chain, "labels"), provenance);
    for (Eigen::Index s = 0; s < lay.subjects; ++s) out << (s > 0 ? "," : "") << "subject_" << s + 1;
    out << '\n';
    for (Eigen::Index m = 0; m < c.size(); ++m) {
      for (Eigen::Index s = 0; s < lay.subjects; ++s) out << (s > 0 ? "," : "") << c.labels(m, s) + 1;
      out << '\n';
    }
    out.close();

    open_out(out, dir / chain_file(c.chain, "beta"), provenance);
    for (Eigen::Index k = 0; k < lay.clusters; ++k) {
      for (Eigen::Index l = 0; l < lay.basis; ++l) out << (k + l > 0 ? "," : "") << "beta_" << k + 1 << '_' << l + 1;
    }
    out << '\n';
    for (Eigen::Index m = 0; m < c.size(); ++m) {
      write_row(out, c.beta.row(m));
      out << '\n';
    }
    out.close();

    open_out(out, dir / chain_file(c.chain, "tau"), provenance);
    for (Eigen::Index k = 0; k < lay.clusters; ++k) out << (k > 0 ? "," : "") << "tau_" << k + 1 << "_1,tau_" << k + 1 << "_2";
    out << '\n';
    for (Eigen::Index m = 0; m < c.size(); ++m) {
      write_row(out, c.tau.row(m));
      out << '\n';
    }
    out.close();

    open_out(out, dir / chain_file(c.chain, "pi"), provenance);
    for (Eigen::Index k = 0; k < lay.clusters; ++k) out << (k > 0 ? "," : "") << "pi_" << k + 1;
    out << '\n';
    for (Eigen::Index m = 0; m < c.size(); ++m) {
      write_row(out, c.weights.row(m));
      out << '\n';
    }
    out.close();

    if (lay.q > 0) {
      open_out(out, dir / chain_file(c.chain, "random_effects"), provenance);
      for (Eigen::Index s = 0; s < lay.subjects; ++s) {
        for (Eigen::Index j = 0; j < lay.q; ++j) out << (s + j > 0 ? "," : "") << "b_" << s + 1 << '_' << j + 1;
      }
      out << '\n';
      for (Eigen::Index m = 0; m < c.size(); ++m) {
        write_row(out, c.random_effects.row(m));
        out << '\n';
      }
    }
  }
}

PosteriorDraws read_draws(const std::filesystem::path& dir) {
  std::ifstream in(dir / "layout.json");
  if (!in) fail(ErrorKind::input, "draws directory " + dir.string() + " has no layout.json");
  json layout;
  try {
    in >> layout;
  } catch (const json::exception& e) {
    fail(ErrorKind::input, std::string("corrupt layout.json: ") + e.what());
  }
  PosteriorDraws draws;
  DrawLayout& lay = draws.layout;
  int chains = 0;
  Eigen::Index per_chain = 0;
  try {
    lay.subjects = layout.at("subjects").get<Eigen::Index>();
    lay.clusters = layout.at("clusters").get<Eigen::Index>();
    lay.basis = layout.at("basis").get<Eigen::Index>();
    lay.range_dim = layout.at("range_dim").get<Eigen::Index>();
    lay.p = layout.at("p").get<Eigen::Index>();
    lay.q = layout.at("q").get<Eigen::Index>();
    chains = layout.at("chains").get<int>();
    per_chain = layout.at("draws_per_chain").get<Eigen::Index>();
    draws.seed = layout.at("seed").get<std::uint64_t>();
    draws.settings.seed = draws.seed;
    draws.settings.chains = chains;
    draws.settings.retained = static_cast<int>(per_chain);
    draws.settings.burn_in = layout.at("burn_in").get<int>();
    draws.settings.thin = layout.at("thin").get<int>();
    draws.settings.min_cluster_size = layout.value("min_cluster_size", 0);
    draws.settings.prior_only = layout.value("prior_only", false);
  } catch (const json::exception& e) {
    fail(ErrorKind::input, std::string("corrupt layout.json: ") + e.what());
  }
  for (int c = 0; c < chains; ++c) {
    ChainDraws cd;
    cd.chain = c;
    cd.resize(per_chain, lay);
    const RowMatrixXd scalars = read_matrix(dir / chain_file(c, "scalars"), 3 + lay.p + lay.q * lay.q, 1);
    const RowMatrixXd labels = read_matrix(dir / chain_file(c, "labels"), lay.subjects);
    const RowMatrixXd beta = read_matrix(dir / chain_file(c, "beta"), lay.clusters * lay.basis);
    const RowMatrixXd tau = read_matrix(dir / chain_file(c, "tau"), 2 * lay.clusters);
    const RowMatrixXd pi = read_matrix(dir / chain_file(c, "pi"), lay.clusters);
    for (const auto* m : {&scalars, &labels, &beta, &tau, &pi}) {
      if (m->rows() != per_chain) fail(ErrorKind::input, "chain " + std::to_string(c + 1) + " has a truncated draw file");
    }
    cd.sigma2 = scalars.col(0);
    cd.alpha = scalars.col(1);
    cd.occupied = scalars.col(2).cast<int>();
    cd.gamma = scalars.middleCols(3, lay.p);
    cd.re_covariance = scalars.middleCols(3 + lay.p, lay.q * lay.q);
    cd.labels = (labels.array() - 1.0).cast<int>().matrix();
    if (cd.labels.size() > 0 && (cd.labels.minCoeff() < 0 || cd.labels.maxCoeff() >= lay.clusters)) {
      fail(ErrorKind::input, "chain " + std::to_string(c + 1) + " has labels outside 1..K");
    }
    cd.beta = beta;
    cd.tau = tau;
    cd.weights = pi;
    if (lay.q > 0) {
      cd.random_effects = read_matrix(dir / chain_file(c, "random_effects"), lay.subjects * lay.q);
      if (cd.random_effects.rows() != per_chain) fail(ErrorKind::input, "truncated random-effect draws");
    }
    draws.chains.push_back(std::move(cd));
  }
  return draws;
}

}  // namespace stapdp
